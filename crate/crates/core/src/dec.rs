//! Discrete exterior calculus on cubical cochains.
//!
//! Cochain entries are integrals over cells, so the pointwise norm of a
//! k-cochain on a cell is `|ω(f)| / vol_k(f)` and the `L^p` norm weighs it by
//! the cell's n-volume share.

use crate::chain::{Chain, Coeff, Cochain};
use crate::error::{Error, Result};
use crate::homology::HomologySummary;
use crate::linalg::{self, SolveInfo};
use crate::mesh::{Identification, MetricComplex, Rel};
use serde::{Deserialize, Serialize};

/// Per-cell samples of the pointwise norm `|ω|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseField {
    pub degree: usize,
    pub values: Vec<f64>,
}

pub fn pointwise(x: &MetricComplex, omega: &Cochain<f64>) -> PointwiseField {
    let vol = x.volume(omega.degree);
    PointwiseField {
        degree: omega.degree,
        values: omega.values.iter().zip(vol).map(|(w, v)| w.abs() / v).collect(),
    }
}

/// `‖ω‖_p^p = Σ_f mass_f (|ω_f| / vol_f)^p`.
pub fn lp_norm_pow(x: &MetricComplex, omega: &Cochain<f64>, p: f64) -> f64 {
    let k = omega.degree;
    omega
        .values
        .iter()
        .zip(x.volume(k))
        .zip(x.mass_weights(k))
        .map(|((w, v), m)| m * (w.abs() / v).powf(p))
        .sum()
}

pub fn lp_norm(x: &MetricComplex, omega: &Cochain<f64>, p: f64) -> f64 {
    lp_norm_pow(x, omega, p).powf(1.0 / p)
}

/// `δω = ∂_{k+1}ᵀ ω`.
pub fn coboundary<T: Coeff>(x: &MetricComplex, omega: &Cochain<T>) -> Result<Cochain<T>> {
    let k = omega.degree;
    if k >= x.dimension() {
        return Err(Error::TopDegree);
    }
    let values = (0..x.num_cells(k + 1))
        .map(|mu| {
            let mut acc = T::zero();
            for &(f, s) in x.faces(k + 1, mu) {
                acc += T::from_i64(s as i64) * omega.values[f].clone();
            }
            acc
        })
        .collect();
    Ok(Cochain::new(k + 1, values))
}

/// Sign of the shuffle placing the axes `j` (increasing) before the rest.
pub fn shuffle_sign(j: &[usize]) -> i32 {
    let mut inversions = 0;
    for &a in j {
        inversions += (0..a).filter(|b| !j.contains(b)).count();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A cochain on the staggered dual grid. Entry `g` lives on the dual cell
/// whose center coincides with primal cell `g` shifted back by half a spacing
/// along every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCochain(pub Cochain<f64>);

/// `(⋆ω)(f★) = sign(J, Jᶜ) · ω(f) · vol(f★) / vol(f)` on a fully periodic grid.
pub fn hodge_star(x: &MetricComplex, omega: &Cochain<f64>) -> Result<DualCochain> {
    if !x.is_fully_periodic() {
        return Err(Error::UnsupportedBoundary);
    }
    let n = x.dimension();
    let k = omega.degree;
    let mut out = vec![0.0; x.num_cells(n - k)];
    for f in 0..x.num_cells(k) {
        let g = x.half_shift(k, f, true);
        let sign = shuffle_sign(&x.cell_axes(k, f)) as f64;
        out[g] = sign * omega.values[f] * x.volume(n - k)[g] / x.volume(k)[f];
    }
    Ok(DualCochain(Cochain::new(n - k, out)))
}

/// Star of a dual cochain, landing back on primal cells.
pub fn hodge_star_dual(x: &MetricComplex, eta: &DualCochain) -> Result<Cochain<f64>> {
    if !x.is_fully_periodic() {
        return Err(Error::UnsupportedBoundary);
    }
    let n = x.dimension();
    let j = eta.0.degree;
    let mut out = vec![0.0; x.num_cells(n - j)];
    for g in 0..x.num_cells(j) {
        let f = x.half_shift(j, g, false);
        let sign = shuffle_sign(&x.cell_axes(j, g)) as f64;
        out[f] = sign * eta.0.values[g] * x.volume(n - j)[f] / x.volume(j)[g];
    }
    Ok(Cochain::new(n - j, out))
}

/// Cubical cup product of a k- and an (n−k)-cochain evaluated on the
/// fundamental chain `Σ C` over top cells.
///
/// The front/back split of a cube depends on a choice of corner. A twisted
/// gluing flips that choice across the seam and breaks the Leibniz rule, so
/// there the product is averaged over all 2ⁿ corners (the average is invariant
/// under reflections and hence cohomological). Integer cochains are divided
/// exactly only when the average is integral, which holds for cocycles.
pub fn cup_pair<T: Coeff>(x: &MetricComplex, alpha: &Cochain<T>, omega: &Cochain<T>) -> Result<T> {
    let n = x.dimension();
    let k = alpha.degree;
    if omega.degree + k != n {
        return Err(Error::DegreeMismatch { expected: n - k.min(n), found: omega.degree });
    }
    let subsets: Vec<Vec<usize>> = (0..1usize << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|a| m >> a & 1 == 1).collect())
        .collect();
    let twisted = x.spec().identification.iter().any(|i| matches!(i, Identification::Twisted { .. }));
    let corners: Vec<usize> = if twisted { (0..1usize << n).collect() } else { vec![0] };
    let mut acc = T::zero();
    for c in 0..x.num_cells(n) {
        let corner = x.top_cell_corner(c);
        for &b in &corners {
            for j in &subsets {
                let mut front = corner.clone();
                let mut back = corner.clone();
                for a in 0..n {
                    let flip = (b >> a & 1) as u32;
                    if j.contains(&a) {
                        front[a] += 1;
                        back[a] += 2 * (1 - flip);
                    } else {
                        front[a] += 2 * flip;
                        back[a] += 1;
                    }
                }
                let (fi, fs) = x.locate(&front).expect("front face exists");
                let (bi, bs) = x.locate(&back).expect("back face exists");
                let a = &alpha.values[fi];
                let w = &omega.values[bi];
                if a.is_zero() || w.is_zero() {
                    continue;
                }
                // Reversing axes changes the face and cube orientations by the same sign.
                let sign = shuffle_sign(j) * fs * bs;
                acc += T::from_i64(sign as i64) * a.clone() * w.clone();
            }
        }
    }
    Ok(acc.div_count(corners.len() as i64))
}

/// Gradient of `Φ(τ) = Σ_f mass_f |(ω + δτ)_f / vol_f|^p` at `τ = 0`,
/// as a full (k−1)-cochain (entries on `rel` cells are zeroed).
pub fn objective_gradient(x: &MetricComplex, omega: &Cochain<f64>, p: f64, rel: Rel) -> Vec<f64> {
    let k = omega.degree;
    if k == 0 {
        return Vec::new();
    }
    let g = flux(x, omega, p);
    let marks = x.marking(k - 1);
    let mut out = vec![0.0; x.num_cells(k - 1)];
    for f in 0..x.num_cells(k) {
        if g[f] == 0.0 {
            continue;
        }
        for &(e, s) in x.faces(k, f) {
            out[e] += s as f64 * g[f];
        }
    }
    for (e, v) in out.iter_mut().enumerate() {
        if rel.contains(marks[e]) {
            *v = 0.0;
        }
    }
    out
}

/// `g_f = mass_f · p |s_f|^{p−1} sign(s_f) / vol_f` with `s_f = ω_f / vol_f`.
pub fn flux(x: &MetricComplex, omega: &Cochain<f64>, p: f64) -> Vec<f64> {
    let k = omega.degree;
    omega
        .values
        .iter()
        .zip(x.volume(k))
        .zip(x.mass_weights(k))
        .map(|((w, v), m)| {
            let s = w / v;
            m * p * s.abs().powf(p - 1.0) * s.signum() / v
        })
        .collect()
}

/// Euclidean norm of [`objective_gradient`]: the discrete p-harmonicity defect.
pub fn p_harmonic_residual(x: &MetricComplex, omega: &Cochain<f64>, p: f64, rel: Rel) -> f64 {
    linalg::norm(&objective_gradient(x, omega, p, rel))
}

/// Outcome of [`characterize`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Characterization {
    /// Closedness from pairing with `∂C_{k+1} + C_k(D)`.
    pub closed_by_pairing: bool,
    /// Closedness from `δω = 0` and `ω|_D = 0`.
    pub closed_by_coboundary: bool,
    pub closed: bool,
    pub exact: bool,
    /// A chain in `∂C_{k+1} + C_k(D)` on which ω does not vanish.
    pub violated: Option<Chain>,
    /// `τ` with `δτ = ω`, vanishing on `D`, when exact.
    pub primitive: Option<Cochain<f64>>,
    pub primitive_residual: Option<f64>,
}

/// Decides whether ω is closed and exact relative to `rel`.
/// `tol` is an absolute tolerance on pairings.
pub fn characterize(
    x: &MetricComplex,
    omega: &Cochain<f64>,
    homology: &HomologySummary,
    tol: f64,
) -> Result<Characterization> {
    let k = omega.degree;
    let rel = homology.rel;
    if homology.degree != k {
        return Err(Error::DegreeMismatch { expected: homology.degree, found: k });
    }
    let n = x.dimension();
    let marks = x.marking(k);

    let mut violated = None;
    // Pairing test over the spanning set.
    if k < n {
        for mu in 0..x.num_cells(k + 1) {
            let sigma = Chain::from_pairs(k, x.faces(k + 1, mu).iter().map(|&(f, s)| (f, s as i64)));
            if omega.evaluate(&sigma)?.abs() > tol {
                violated = Some(sigma);
                break;
            }
        }
    }
    if violated.is_none() {
        if let Some(f) = (0..x.num_cells(k)).find(|&f| rel.contains(marks[f]) && omega.values[f].abs() > tol) {
            violated = Some(Chain::from_pairs(k, [(f, 1)]));
        }
    }
    let closed_by_pairing = violated.is_none();

    let delta_ok = if k < n {
        coboundary(x, omega)?.values.iter().all(|v| v.abs() <= tol)
    } else {
        true
    };
    let trace_ok = (0..x.num_cells(k)).all(|f| !rel.contains(marks[f]) || omega.values[f].abs() <= tol);
    let closed_by_coboundary = delta_ok && trace_ok;
    let closed = closed_by_pairing && closed_by_coboundary;

    let mut exact = false;
    let mut primitive = None;
    let mut primitive_residual = None;
    if closed {
        let pairs_zero = homology
            .generators
            .iter()
            .map(|g| omega.evaluate(g))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(|v| v.abs() <= tol);
        if pairs_zero {
            exact = true;
            if k > 0 {
                let (tau, _) = solve_primitive(x, omega, rel)?;
                let d = coboundary(x, &tau)?;
                let res = d.values.iter().zip(&omega.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                primitive = Some(tau);
                primitive_residual = Some(res);
            } else {
                primitive_residual = Some(omega.max_abs());
            }
        }
    }
    Ok(Characterization {
        closed_by_pairing,
        closed_by_coboundary,
        closed,
        exact,
        violated,
        primitive,
        primitive_residual,
    })
}

/// Least-squares `τ` (vanishing on `rel`) minimizing `‖δτ − ω‖₂`.
pub fn solve_primitive(x: &MetricComplex, omega: &Cochain<f64>, rel: Rel) -> Result<(Cochain<f64>, SolveInfo)> {
    let k = omega.degree;
    if k == 0 {
        return Err(Error::DegreeOutOfRange { degree: 0, dimension: x.dimension() });
    }
    let free = x.free_cells(k - 1, rel);
    let mut index = vec![usize::MAX; x.num_cells(k - 1)];
    for (i, &e) in free.iter().enumerate() {
        index[e] = i;
    }
    let m = free.len();
    let apply_b = |t: &[f64]| -> Vec<f64> {
        (0..x.num_cells(k))
            .map(|f| {
                x.faces(k, f)
                    .iter()
                    .filter(|(e, _)| index[*e] != usize::MAX)
                    .map(|&(e, s)| s as f64 * t[index[e]])
                    .sum()
            })
            .collect()
    };
    let apply_bt = |y: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; m];
        for f in 0..x.num_cells(k) {
            for &(e, s) in x.faces(k, f) {
                if index[e] != usize::MAX {
                    out[index[e]] += s as f64 * y[f];
                }
            }
        }
        out
    };
    let mut diag = vec![0.0; m];
    for f in 0..x.num_cells(k) {
        for &(e, s) in x.faces(k, f) {
            if index[e] != usize::MAX {
                diag[index[e]] += (s * s) as f64;
            }
        }
    }
    let rhs = apply_bt(&omega.values);
    let scale = linalg::norm(&rhs).max(1e-300);
    let mut t = vec![0.0; m];
    let info = linalg::pcg(
        |v, out| out.copy_from_slice(&apply_bt(&apply_b(v))),
        &diag,
        &rhs,
        &mut t,
        1e-14 * scale,
        20 * m + 100,
    );
    let mut tau = vec![0.0; x.num_cells(k - 1)];
    for (i, &e) in free.iter().enumerate() {
        tau[e] = t[i];
    }
    Ok((Cochain::new(k - 1, tau), info))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{relative_homology, Ring};
    use crate::mesh::{build_complex, GridSpec};
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn torus(a: f64, b: f64, r: usize) -> MetricComplex {
        build_complex(&GridSpec::new(&[a, b], &[r, r]).all_periodic()).unwrap()
    }

    /// Constant form `c dx_axis`: the integral over each axis-parallel edge is c·h.
    fn constant_one_form(x: &MetricComplex, axis: usize, c: f64) -> Cochain<f64> {
        let values = (0..x.num_cells(1))
            .map(|f| if x.cell_axes(1, f) == [axis] { c * x.volume(1)[f] } else { 0.0 })
            .collect();
        Cochain::new(1, values)
    }

    #[test]
    fn constant_form_norm_matches_closed_form() {
        for &(a, b) in &[(1.0, 1.0), (2.0, 1.0), (3.0, 2.0)] {
            let x = torus(a, b, 6);
            let w = constant_one_form(&x, 0, 1.0 / a);
            for p in [1.0, 1.5, 2.0, 3.0] {
                let expect = b * a.powf(1.0 - p);
                assert!((lp_norm_pow(&x, &w, p) - expect).abs() < 1e-12 * expect);
            }
        }
        let x = torus(1.0, 1.0, 3);
        assert_eq!(lp_norm(&x, &Cochain::zeros(1, x.num_cells(1)), 2.0), 0.0);
    }

    #[test]
    fn coboundary_squares_to_zero() {
        let x = build_complex(&GridSpec::new(&[1.0, 1.0, 1.0], &[3, 2, 3]).periodic(0).twisted(2, &[0, 1])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..=1 {
            for _ in 0..20 {
                let w = Cochain::new(k, (0..x.num_cells(k)).map(|_| rng.gen_range(-5i64..6)).collect());
                let dd = coboundary(&x, &coboundary(&x, &w).unwrap()).unwrap();
                assert!(dd.values.iter().all(|&v| v == 0));
            }
        }
        assert!(matches!(coboundary(&x, &Cochain::<f64>::zeros(3, x.num_cells(3))), Err(Error::TopDegree)));
    }

    #[test]
    fn star_of_dx_is_dy() {
        let x = torus(1.0, 1.0, 4);
        let w = constant_one_form(&x, 0, 1.0);
        let s = hodge_star(&x, &w).unwrap().0;
        let expect = constant_one_form(&x, 1, 1.0);
        for (a, b) in s.values.iter().zip(&expect.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn star_star_sign_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let lens: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * i as f64).collect();
            let res: Vec<usize> = (0..n).map(|i| 2 + i % 2).collect();
            let x = build_complex(&GridSpec::new(&lens, &res).all_periodic()).unwrap();
            for k in 0..=n {
                let w = Cochain::new(k, (0..x.num_cells(k)).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let ss = hodge_star_dual(&x, &hodge_star(&x, &w).unwrap()).unwrap();
                let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
                for (a, b) in ss.values.iter().zip(&w.values) {
                    assert!((a - sign * b).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn star_of_volume_is_one() {
        let x = torus(2.0, 1.0, 4);
        let vol = Cochain::new(2, x.volume(2).to_vec());
        let s = hodge_star(&x, &vol).unwrap().0;
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn star_rejects_boundary() {
        let x = build_complex(&GridSpec::new(&[1.0, 1.0], &[2, 2])).unwrap();
        assert!(matches!(hodge_star(&x, &Cochain::zeros(1, x.num_cells(1))), Err(Error::UnsupportedBoundary)));
    }

    #[test]
    fn cup_of_cuts_is_plus_one() {
        let x = torus(1.0, 1.0, 4);
        let h = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        // x-cut: x-edges of one column; y-cut: y-edges of one row.
        let xcut = Cochain::new(1, (0..x.num_cells(1)).map(|f| (x.cell_key(1, f)[0] == 1) as i64).collect());
        let ycut = Cochain::new(1, (0..x.num_cells(1)).map(|f| (x.cell_key(1, f)[1] == 1) as i64).collect());
        assert_eq!(cup_pair(&x, &xcut, &ycut).unwrap(), 1);
        assert_eq!(cup_pair(&x, &ycut, &xcut).unwrap(), -1);
        for phi in &h.cocycles {
            assert!(coboundary(&x, phi).unwrap().values.iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn cup_class_invariance_exact() {
        let x = torus(1.0, 1.0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xcut: Cochain<BigRational> =
            Cochain::new(1, (0..x.num_cells(1)).map(|f| BigRational::from_integer(((x.cell_key(1, f)[0] == 1) as i64).into())).collect());
        let ycut: Cochain<BigRational> =
            Cochain::new(1, (0..x.num_cells(1)).map(|f| BigRational::from_integer(((x.cell_key(1, f)[1] == 1) as i64).into())).collect());
        let base = cup_pair(&x, &xcut, &ycut).unwrap();
        for _ in 0..10 {
            let t1 = Cochain::new(0, (0..x.num_cells(0)).map(|_| BigRational::new(rng.gen_range(-9i64..10).into(), 7.into())).collect());
            let t2 = Cochain::new(0, (0..x.num_cells(0)).map(|_| BigRational::new(rng.gen_range(-9i64..10).into(), 3.into())).collect());
            let mut a = xcut.clone();
            for (v, d) in a.values.iter_mut().zip(coboundary(&x, &t1).unwrap().values) {
                *v += d;
            }
            let mut b = ycut.clone();
            for (v, d) in b.values.iter_mut().zip(coboundary(&x, &t2).unwrap().values) {
                *v += d;
            }
            assert_eq!(cup_pair(&x, &a, &b).unwrap(), base);
        }
    }

    #[test]
    fn cup_class_invariance_across_twist() {
        // Solid torus whose t-gluing rotates the square cross-section by 180°.
        let x = build_complex(&GridSpec::new(&[1.0, 1.0, 1.0], &[3, 3, 3]).twisted(2, &[0, 1])).unwrap();
        let h1 = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        let h2 = relative_homology(&x, 2, Rel::E, Ring::Integers).unwrap();
        assert_eq!((h1.betti, h2.betti), (1, 1));
        let q = |c: &Cochain<i64>| c.map(|&v| BigRational::from_integer(v.into()));
        let base = cup_pair(&x, &q(&h1.cocycles[0]), &q(&h2.cocycles[0])).unwrap();
        assert_eq!(base.abs_value(), BigRational::from_integer(1.into()));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let marks0 = x.marking(0);
        for _ in 0..5 {
            // Perturb the first cocycle by δ of a 0-cochain vanishing on D.
            let t = Cochain::new(
                0,
                (0..x.num_cells(0))
                    .map(|v| if Rel::D.contains(marks0[v]) { 0 } else { rng.gen_range(-3i64..4) })
                    .collect(),
            );
            let mut a = q(&h1.cocycles[0]);
            for (v, d) in a.values.iter_mut().zip(coboundary(&x, &q(&t)).unwrap().values) {
                *v += d;
            }
            assert_eq!(cup_pair(&x, &a, &q(&h2.cocycles[0])).unwrap(), base);
        }
    }

    #[test]
    fn residual_vanishes_on_constant_form() {
        let x = torus(2.0, 1.0, 5);
        let w = constant_one_form(&x, 0, 0.5);
        for p in [1.5, 2.0, 3.0] {
            assert!(p_harmonic_residual(&x, &w, p, Rel::D) < 1e-14);
        }
        // A raw cut cocycle is not harmonic.
        let cut = Cochain::new(1, (0..x.num_cells(1)).map(|f| (x.cell_key(1, f)[0] == 1) as i64 as f64).collect());
        assert!(p_harmonic_residual(&x, &cut, 2.0, Rel::D) > 0.1);
    }

    #[test]
    fn characterize_exact_and_generator_duals() {
        let x = torus(1.0, 1.0, 4);
        let h = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = Cochain::new(0, (0..x.num_cells(0)).map(|_| rng.gen_range(-3i64..4) as f64).collect());
        let w = coboundary(&x, &t).unwrap();
        let c = characterize(&x, &w, &h, 1e-12).unwrap();
        assert!(c.closed && c.exact);
        assert!(c.primitive_residual.unwrap() < 1e-10);
        for phi in &h.cocycles {
            let c = characterize(&x, &phi.map(|&v| v as f64), &h, 1e-12).unwrap();
            assert!(c.closed && !c.exact);
        }
        let mut bad = w.clone();
        bad.values[0] += 1.0;
        let c = characterize(&x, &bad, &h, 1e-12).unwrap();
        assert!(!c.closed && !c.closed_by_coboundary && !c.closed_by_pairing);
        assert!(bad.evaluate(c.violated.as_ref().unwrap()).unwrap().abs() > 0.5);
    }
}
