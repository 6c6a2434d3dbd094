//! Relative homology of a few scenes: Betti numbers, torsion and the pairing matrix.

use modwedge::homology::{relative_homology, Ring};
use modwedge::scenes::{cylinder, flat_torus, klein_bottle};

fn main() -> modwedge::Result<()> {
    let scenes = [flat_torus(&[1.0, 1.0, 1.0], &[4, 4, 4])?, klein_bottle(6)?, cylinder(&[1.0], 2.0, 6, 2)?];
    for s in &scenes {
        for fc in &s.featured {
            let h = relative_homology(&s.complex, fc.degree, fc.rel, Ring::Integers)?;
            println!(
                "{} {} (k={}, rel={:?}): betti={} torsion={:?}",
                s.name, fc.name, fc.degree, fc.rel, h.betti, h.torsion_invariants
            );
            if h.betti > 0 {
                println!("  pairing {:?}", h.pairing_matrix());
            }
        }
    }
    Ok(())
}
