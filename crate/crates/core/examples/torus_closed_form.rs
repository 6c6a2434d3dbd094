//! dMod of the horizontal loop on a flat torus against `b · a^{1−p}`.

use modwedge::dmod::{minimize_dmod, DmodOptions};
use modwedge::homology::{relative_homology, Ring};
use modwedge::scenes::flat_torus;

fn main() -> modwedge::Result<()> {
    let (a, b) = (2.0, 1.0);
    let scene = flat_torus(&[a, b], &[32, 32])?;
    let fc = scene.class("axis0")?;
    let h = relative_homology(&scene.complex, 1, fc.rel, Ring::Integers)?;
    let c = h.class_of(&fc.representative)?;
    for p in [1.5, 2.0, 3.0] {
        let r = minimize_dmod(&scene.complex, &h, &c, p, &DmodOptions::default())?;
        let expect = b * a.powf(1.0 - p);
        println!(
            "p={p}: dMod={:.12} expected={expect:.12} iterations={} converged={}",
            r.value, r.iterations, r.converged
        );
    }
    Ok(())
}
