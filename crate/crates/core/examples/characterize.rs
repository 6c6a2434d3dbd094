//! Classifies a cochain as closed, exact or neither, recovering a primitive when exact.

use modwedge::dec::{characterize, coboundary};
use modwedge::homology::{relative_homology, Ring};
use modwedge::scenes::flat_torus;
use modwedge::Cochain;

fn main() -> modwedge::Result<()> {
    let s = flat_torus(&[1.0, 1.0], &[8, 8])?;
    let x = &s.complex;
    let h = relative_homology(x, 1, modwedge::Rel::D, Ring::Integers)?;

    let tau = Cochain::new(0, (0..x.num_cells(0)).map(|i| (i as f64 * 0.37).sin()).collect());
    let exact = coboundary(x, &tau)?;
    let mut closed = exact.clone();
    for (v, &g) in closed.values.iter_mut().zip(&h.cocycles[0].values) {
        *v += g as f64;
    }
    let mut generic = closed.clone();
    generic.values[0] += 0.5;

    for (label, w) in [("exact", &exact), ("closed", &closed), ("generic", &generic)] {
        let r = characterize(x, w, &h, 1e-9)?;
        println!(
            "{label}: closed={} exact={} primitive residual={:?}",
            r.closed, r.exact, r.primitive_residual
        );
    }
    Ok(())
}
