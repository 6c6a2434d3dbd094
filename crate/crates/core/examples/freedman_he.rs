//! The twisted handle scene: dMod duality holds while the classical product drops below 1.
//! Pass an epsilon as the first argument (default 0.1).

use modwedge::cmod::{check_corollary_seeded, CmodOptions, Family};
use modwedge::dmod::{verify_duality, DmodOptions};
use modwedge::homology::{relative_homology, Ring};
use modwedge::scenes::freedman_he;

fn main() -> modwedge::Result<()> {
    let eps: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let s = freedman_he(eps, 10, 4, true)?;
    let x = &s.complex;
    let fc = s.class("c")?;
    let h = relative_homology(x, fc.degree, fc.rel, Ring::Integers)?;
    let dual_h = relative_homology(x, x.dimension() - fc.degree, fc.rel.complement(), Ring::Integers)?;
    let c = h.class_of(&fc.representative)?;
    let d = verify_duality(x, &h, &dual_h, &c, 2.0, &DmodOptions::default())?;
    println!("eps={eps}: dMod product {:.9}", d.product);

    let opts = CmodOptions { time_limit: Some(60.0), ..CmodOptions::default() };
    let fam = Family::from_scene(&s, "c", &opts)?;
    let famp = Family::from_scene(&s, "cprime", &opts)?;
    let r = check_corollary_seeded(x, &fam, &famp, 2.0, &opts, &[&s.seeds["c"]], &[&s.seeds["cprime"]])?;
    println!("classical product in [{:.4}, {:.4}]", r.product_lower, r.product_upper);
    Ok(())
}
