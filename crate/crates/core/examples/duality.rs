//! Checks dMod_p(c)^{1/p} · dMod_q(c′)^{1/q} = 1 on the unit square relative to its sides.

use modwedge::dmod::{verify_duality, DmodOptions};
use modwedge::homology::{relative_homology, Ring};
use modwedge::scenes::lohvansuu_cube;

fn main() -> modwedge::Result<()> {
    let scene = lohvansuu_cube(2, 1, 24)?;
    let x = &scene.complex;
    let fc = scene.class("c")?;
    let h = relative_homology(x, fc.degree, fc.rel, Ring::Integers)?;
    let dual_h = relative_homology(x, x.dimension() - fc.degree, fc.rel.complement(), Ring::Integers)?;
    let c = h.class_of(&fc.representative)?;
    for p in [1.5, 2.0, 3.0] {
        let r = verify_duality(x, &h, &dual_h, &c, p, &DmodOptions::default())?;
        println!(
            "p={p} q={:.4}: dMod_p(c)={:.10} dMod_q(c')={:.10} product={:.12} c'={:?}",
            r.q, r.dmod_p_c, r.dmod_q_cprime, r.product, r.cprime_coordinates
        );
    }
    Ok(())
}
