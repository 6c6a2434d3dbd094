//! Classical modulus bracket for both classes of the unit square, and their product.

use modwedge::cmod::{check_corollary_seeded, CmodOptions, Family};
use modwedge::scenes::lohvansuu_cube;

fn main() -> modwedge::Result<()> {
    let s = lohvansuu_cube(2, 1, 16)?;
    let opts = CmodOptions::default();
    let c = Family::from_scene(&s, "c", &opts)?;
    let cp = Family::from_scene(&s, "cprime", &opts)?;
    for p in [1.5, 2.0, 3.0] {
        let r = check_corollary_seeded(&s.complex, &c, &cp, p, &opts, &[], &[])?;
        println!(
            "p={p}: Mod_p(c) in [{:.8}, {:.8}], Mod_q(c') in [{:.8}, {:.8}], product in [{:.8}, {:.8}]",
            r.mod_p.value_lower, r.mod_p.value_upper, r.mod_q.value_lower, r.mod_q.value_upper,
            r.product_lower, r.product_upper
        );
    }
    Ok(())
}
