//! Relative integer homology `H_k(M, D)` of a marked complex.
//!
//! Relative chains are realized by deleting the cells of the closed
//! subcomplex. Unit pivots are cancelled sparsely first ([`reduce`]); the
//! small remainder goes through an exact Smith normal form ([`snf`]).

pub mod reduce;
pub mod snf;

use crate::chain::{Chain, Cochain};
use crate::error::{Error, Result};
use crate::mesh::{MetricComplex, Rel};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use reduce::Elim;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ring {
    Integers,
    Reals,
}

/// Betti number, torsion, generators and dual cocycles of one relative group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomologySummary {
    pub degree: usize,
    pub rel: Rel,
    pub ring: Ring,
    pub betti: usize,
    pub torsion_invariants: Vec<i64>,
    /// Free generators: integer relative cycles.
    pub generators: Vec<Chain>,
    /// Generators of the torsion summands, in the order of `torsion_invariants`.
    pub torsion_generators: Vec<Chain>,
    /// `cocycles[j]` vanishes on relative boundaries and on the subcomplex and
    /// evaluates to `δ_ij` on `generators[i]`.
    pub cocycles: Vec<Cochain<i64>>,
    /// Functionals reading torsion coordinates modulo the invariant.
    pub torsion_functionals: Vec<Cochain<i64>>,
    pub num_cells: usize,
    pub rank_boundary: usize,
    pub rank_next_boundary: usize,
}

/// A relative homology class in generator coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyClass {
    pub degree: usize,
    pub rel: Rel,
    /// Coordinates on the free generators.
    pub coords: Vec<i64>,
    /// Coordinates on the torsion generators, reduced modulo their invariants.
    pub torsion_coords: Vec<i64>,
    pub representative: Chain,
}

impl HomologyClass {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0) && self.torsion_coords.iter().all(|&c| c == 0)
    }
}

fn to_i64(x: &BigInt) -> Result<i64> {
    x.to_i64().ok_or(Error::OverflowDetected)
}

fn restricted_triplets(x: &MetricComplex, k: usize, rel: Rel) -> Vec<(usize, usize, i64)> {
    let mut out = Vec::new();
    if k == 0 || k > x.dimension() {
        return out;
    }
    let rows = x.marking(k - 1);
    let cols = x.marking(k);
    for c in 0..x.num_cells(k) {
        if rel.contains(cols[c]) {
            continue;
        }
        for &(r, s) in x.faces(k, c) {
            if !rel.contains(rows[r]) {
                out.push((r, c, s as i64));
            }
        }
    }
    out
}

/// Computes `H_k(X, rel)` with generators and a dual cocycle basis.
pub fn relative_homology(x: &MetricComplex, k: usize, rel: Rel, ring: Ring) -> Result<HomologySummary> {
    let n = x.dimension();
    if k > n {
        return Err(Error::DegreeOutOfRange { degree: k, dimension: n });
    }
    let free = |d: usize| -> BTreeSet<usize> { x.free_cells(d, rel).into_iter().collect() };
    let mut rem_k = free(k);
    let num_cells = rem_k.len();
    let mut rem_below = if k > 0 { free(k - 1) } else { BTreeSet::new() };
    let mut rem_above = if k < n { free(k + 1) } else { BTreeSet::new() };

    // Phase 1: cancel unit pairs of ∂_k.
    let mut bk = Elim::from_triplets(restricted_triplets(x, k, rel));
    let lower_pivots = bk.reduce()?;
    for p in &lower_pivots {
        rem_below.remove(&p.row);
        rem_k.remove(&p.col);
    }
    // Phase 2: cancel unit pairs of ∂_{k+1}, after dropping rows paired in phase 1.
    let mut bk1 = Elim::from_triplets(
        restricted_triplets(x, k + 1, rel)
            .into_iter()
            .filter(|t| rem_k.contains(&t.0)),
    );
    let upper_pivots = bk1.reduce()?;
    for p in &upper_pivots {
        rem_k.remove(&p.row);
        rem_above.remove(&p.col);
        bk.remove_col(p.row);
    }

    // Zero rows of ∂_k and zero columns of ∂_{k+1} do not affect the quotient.
    let below: Vec<usize> = rem_below.iter().copied().filter(|r| bk.rows.contains_key(r)).collect();
    let kcells: Vec<usize> = rem_k.iter().copied().collect();
    let above: Vec<usize> = rem_above.iter().copied().filter(|c| bk1.cols.contains_key(c)).collect();
    let m = kcells.len();
    let dense = |e: &Elim, rows: &[usize], cols: &[usize]| -> snf::Matrix {
        rows.iter()
            .map(|&r| cols.iter().map(|&c| BigInt::from(e.get(r, c))).collect())
            .collect()
    };

    // Kernel of the reduced ∂_k and coordinates on it.
    let a1 = dense(&bk, &below, &kcells);
    let s1 = snf::smith_normal_form(&a1, below.len(), m);
    let r1 = s1.rank();
    let z: Vec<Vec<BigInt>> = (0..m).map(|i| s1.v[i][r1..].to_vec()).collect(); // m × (m - r1)
    let rmat: snf::Matrix = s1.v_inv[r1..].to_vec(); // (m - r1) × m
    let dim_z = m - r1;

    // Boundaries in kernel coordinates.
    let a2 = dense(&bk1, &kcells, &above);
    let mmat = snf::mat_mul(&rmat, &a2, m);
    let s2 = snf::smith_normal_form(&mmat, dim_z, above.len());
    let inv2 = s2.invariants();
    let r2 = inv2.len();

    let gens = snf::mat_mul(&z, &s2.u_inv, dim_z); // m × dim_z, columns are generators
    let duals = snf::mat_mul(&s2.u, &rmat, dim_z); // dim_z × m, rows are functionals

    let column = |j: usize| -> Result<BTreeMap<usize, i64>> {
        let mut out = BTreeMap::new();
        for (i, &cell) in kcells.iter().enumerate() {
            let v = to_i64(&gens[i][j])?;
            if v != 0 {
                out.insert(cell, v);
            }
        }
        Ok(out)
    };
    let row = |j: usize| -> Result<BTreeMap<usize, i64>> {
        let mut out = BTreeMap::new();
        for (i, &cell) in kcells.iter().enumerate() {
            let v = to_i64(&duals[j][i])?;
            if v != 0 {
                out.insert(cell, v);
            }
        }
        Ok(out)
    };

    let lift_chain = |y: BTreeMap<usize, i64>| -> Result<Chain> {
        let mut y = y;
        for p in lower_pivots.iter().rev() {
            let mut acc: i64 = 0;
            for &(rho, a) in &p.row_entries {
                if let Some(&v) = y.get(&rho) {
                    acc = acc.checked_add(v.checked_mul(a).ok_or(Error::OverflowDetected)?).ok_or(Error::OverflowDetected)?;
                }
            }
            let s = -p.unit * acc;
            if s != 0 {
                y.insert(p.col, s);
            }
        }
        Ok(Chain { degree: k, cells: y })
    };
    let lift_cochain = |psi: BTreeMap<usize, i64>| -> Result<Cochain<i64>> {
        let mut values = vec![0i64; x.num_cells(k)];
        for (&c, &v) in &psi {
            values[c] = v;
        }
        for p in upper_pivots.iter().rev() {
            let mut acc: i64 = 0;
            for &(xc, cx) in &p.col_entries {
                acc = acc
                    .checked_add(cx.checked_mul(values[xc]).ok_or(Error::OverflowDetected)?)
                    .ok_or(Error::OverflowDetected)?;
            }
            values[p.row] = -p.unit * acc;
        }
        Ok(Cochain::new(k, values))
    };

    let mut torsion_invariants = Vec::new();
    let mut torsion_generators = Vec::new();
    let mut torsion_functionals = Vec::new();
    if ring == Ring::Integers {
        for (j, d) in inv2.iter().enumerate() {
            if !d.is_one() {
                torsion_invariants.push(to_i64(d)?);
                torsion_generators.push(lift_chain(column(j)?)?);
                torsion_functionals.push(lift_cochain(row(j)?)?);
            }
        }
    }
    let mut generators = Vec::new();
    let mut cocycles = Vec::new();
    for j in r2..dim_z {
        generators.push(lift_chain(column(j)?)?);
        cocycles.push(lift_cochain(row(j)?)?);
    }

    Ok(HomologySummary {
        degree: k,
        rel,
        ring,
        betti: dim_z - r2,
        torsion_invariants,
        generators,
        torsion_generators,
        cocycles,
        torsion_functionals,
        num_cells,
        rank_boundary: lower_pivots.len() + r1,
        rank_next_boundary: upper_pivots.len() + r2,
    })
}

impl HomologySummary {
    /// The class of a relative cycle, read off by the dual functionals.
    pub fn class_of(&self, sigma: &Chain) -> Result<HomologyClass> {
        if sigma.degree != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: sigma.degree });
        }
        let coords = self.cocycles.iter().map(|c| c.evaluate(sigma)).collect::<Result<Vec<_>>>()?;
        let torsion_coords = self
            .torsion_functionals
            .iter()
            .zip(&self.torsion_invariants)
            .map(|(f, &d)| f.evaluate(sigma).map(|v| v.rem_euclid(d)))
            .collect::<Result<Vec<_>>>()?;
        Ok(HomologyClass { degree: self.degree, rel: self.rel, coords, torsion_coords, representative: sigma.clone() })
    }

    /// The class `Σ coords_j g_j` of free generators.
    pub fn class_from_coords(&self, coords: &[i64]) -> Result<HomologyClass> {
        if coords.len() != self.betti {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.betti,
                coords.len()
            )));
        }
        let mut rep = Chain::zero(self.degree);
        for (g, &c) in self.generators.iter().zip(coords) {
            rep.add_chain(g, c);
        }
        self.class_of(&rep)
    }

    pub fn generator_class(&self, j: usize) -> Result<HomologyClass> {
        let mut coords = vec![0; self.betti];
        *coords
            .get_mut(j)
            .ok_or_else(|| Error::InvalidParameter(format!("no free generator {j}")))? = 1;
        self.class_from_coords(&coords)
    }

    /// True iff the class vanishes with real coefficients.
    pub fn is_torsion(&self, c: &HomologyClass) -> Result<bool> {
        if c.degree != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: c.degree });
        }
        Ok(c.coords.iter().all(|&v| v == 0))
    }

    /// Rational matrix `P_ij = φ_i(g_j)`; the identity by construction.
    pub fn pairing_matrix(&self) -> Vec<Vec<i64>> {
        self.cocycles
            .iter()
            .map(|c| self.generators.iter().map(|g| c.evaluate(g).expect("same degree")).collect())
            .collect()
    }

    /// `ω₀ = Σ b_j φ_j` with `b = coords/|coords|²`, so that `ω₀(σ) = 1` for every `σ ∈ c`.
    pub fn dual_basis_cocycle_exact(&self, c: &HomologyClass) -> Result<Cochain<BigRational>> {
        if self.is_torsion(c)? {
            return Err(Error::TorsionClass);
        }
        let norm2: i64 = c.coords.iter().map(|v| v * v).sum();
        let len = self.cocycles.first().map_or(0, |f| f.len());
        let mut values = vec![BigRational::zero(); len];
        for (phi, &cj) in self.cocycles.iter().zip(&c.coords) {
            if cj == 0 {
                continue;
            }
            let b = BigRational::new(cj.into(), norm2.into());
            for (v, &p) in values.iter_mut().zip(&phi.values) {
                if p != 0 {
                    *v += &b * BigRational::from_integer(p.into());
                }
            }
        }
        Ok(Cochain::new(self.degree, values))
    }

    pub fn dual_basis_cocycle(&self, c: &HomologyClass) -> Result<Cochain<f64>> {
        let exact = self.dual_basis_cocycle_exact(c)?;
        Ok(exact.map(|v| v.to_f64().unwrap_or(f64::NAN)))
    }

    /// Free-generator cocycles orthogonal to `c` in coordinate space, spanning
    /// the directions along which the admissible set of `c` extends.
    pub fn orthogonal_cocycles(&self, c: &HomologyClass) -> Vec<Cochain<f64>> {
        let b = self.betti;
        let norm2: f64 = c.coords.iter().map(|&v| (v * v) as f64).sum();
        let mut out = Vec::new();
        // Gram–Schmidt on e_j − (c_j/|c|²) c in coefficient space.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for j in 0..b {
            let mut v: Vec<f64> = (0..b).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            for i in 0..b {
                v[i] -= c.coords[j] as f64 * c.coords[i] as f64 / norm2;
            }
            for q in &basis {
                let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for i in 0..b {
                    v[i] -= d * q[i];
                }
            }
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv > 1e-9 {
                basis.push(v.iter().map(|a| a / nv).collect());
            }
        }
        for coeffs in basis {
            let len = self.cocycles[0].len();
            let mut values = vec![0.0; len];
            for (phi, &t) in self.cocycles.iter().zip(&coeffs) {
                for (v, &p) in values.iter_mut().zip(&phi.values) {
                    *v += t * p as f64;
                }
            }
            out.push(Cochain::new(self.degree, values));
        }
        out
    }
}

/// Free function form of [`HomologySummary::is_torsion`].
pub fn is_torsion(summary: &HomologySummary, c: &HomologyClass) -> Result<bool> {
    summary.is_torsion(c)
}

/// Boundary of a chain, as a chain one degree lower.
pub fn boundary(x: &MetricComplex, sigma: &Chain) -> Chain {
    let mut out = Chain::zero(sigma.degree.saturating_sub(1));
    if sigma.degree == 0 {
        return out;
    }
    for (id, c) in sigma.iter() {
        for &(f, s) in x.faces(sigma.degree, id) {
            out.add(f, c * s as i64);
        }
    }
    out
}

/// True iff `∂σ` is supported in the subcomplex `rel`.
pub fn is_relative_cycle(x: &MetricComplex, sigma: &Chain, rel: Rel) -> bool {
    if sigma.degree == 0 {
        return true;
    }
    boundary(x, sigma).iter().all(|(f, _)| rel.contains(x.marking(sigma.degree - 1)[f]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_complex, BoundaryRule, GridSpec, Side};

    fn audit(x: &MetricComplex, h: &HomologySummary) {
        assert_eq!(h.num_cells, h.rank_boundary + h.rank_next_boundary + h.betti);
        for g in h.generators.iter().chain(&h.torsion_generators) {
            assert!(is_relative_cycle(x, g, h.rel));
            assert!(g.iter().all(|(f, _)| !h.rel.contains(x.marking(h.degree)[f])));
        }
        for (i, phi) in h.cocycles.iter().enumerate() {
            for (j, g) in h.generators.iter().enumerate() {
                assert_eq!(phi.evaluate(g).unwrap(), (i == j) as i64);
            }
            for f in 0..x.num_cells(h.degree) {
                if h.rel.contains(x.marking(h.degree)[f]) {
                    assert_eq!(phi.values[f], 0);
                }
            }
            if h.degree < x.dimension() {
                for mu in x.free_cells(h.degree + 1, h.rel) {
                    let s: i64 = x.faces(h.degree + 1, mu).iter().map(|&(f, e)| e as i64 * phi.values[f]).sum();
                    assert_eq!(s, 0);
                }
            }
        }
    }

    #[test]
    fn torus_first_homology() {
        let x = build_complex(&GridSpec::new(&[1.0, 1.0], &[4, 4]).all_periodic()).unwrap();
        for k in 0..=2 {
            let h = relative_homology(&x, k, Rel::D, Ring::Integers).unwrap();
            assert_eq!(h.betti, [1, 2, 1][k]);
            assert!(h.torsion_invariants.is_empty());
            audit(&x, &h);
        }
    }

    #[test]
    fn klein_bottle_has_two_torsion() {
        let spec = GridSpec::new(&[1.0, 1.0], &[4, 4]).periodic(0).twisted(1, &[0]);
        let x = build_complex(&spec).unwrap();
        assert!(!x.is_orientable());
        let h = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        assert_eq!(h.betti, 1);
        assert_eq!(h.torsion_invariants, vec![2]);
        audit(&x, &h);
        let t = h.class_of(&h.torsion_generators[0]).unwrap();
        assert!(h.is_torsion(&t).unwrap());
        assert!(!t.is_zero());
        let doubled = h.class_of(&h.torsion_generators[0].scaled(2)).unwrap();
        assert!(doubled.is_zero());
        let h2 = relative_homology(&x, 2, Rel::D, Ring::Integers).unwrap();
        assert_eq!(h2.betti, 0);
        let real = relative_homology(&x, 1, Rel::D, Ring::Reals).unwrap();
        assert!(real.torsion_invariants.is_empty());
    }

    #[test]
    fn square_relative_to_two_sides() {
        let spec = GridSpec::new(&[1.0, 1.0], &[5, 5])
            .d_rule(BoundaryRule::Faces(vec![(0, Side::Lower), (0, Side::Upper)]));
        let x = build_complex(&spec).unwrap();
        let h = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        assert_eq!(h.betti, 1);
        audit(&x, &h);
        let he = relative_homology(&x, 1, Rel::E, Ring::Integers).unwrap();
        assert_eq!(he.betti, 1);
        audit(&x, &he);
        for k in [0, 2] {
            assert_eq!(relative_homology(&x, k, Rel::D, Ring::Integers).unwrap().betti, 0);
        }
    }

    #[test]
    fn cube_relative_groups() {
        let spec = GridSpec::new(&[1.0, 1.0, 1.0], &[3, 3, 3])
            .d_rule(BoundaryRule::Faces(vec![(0, Side::Lower), (0, Side::Upper)]));
        let x = build_complex(&spec).unwrap();
        let h1 = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        let h2 = relative_homology(&x, 2, Rel::E, Ring::Integers).unwrap();
        assert_eq!((h1.betti, h2.betti), (1, 1));
        audit(&x, &h1);
        audit(&x, &h2);
    }

    #[test]
    fn zero_class_is_torsion_and_rejected() {
        let x = build_complex(&GridSpec::new(&[1.0, 1.0], &[3, 3]).all_periodic()).unwrap();
        let h = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        let z = h.class_from_coords(&[0, 0]).unwrap();
        assert!(h.is_torsion(&z).unwrap());
        assert!(matches!(h.dual_basis_cocycle(&z), Err(Error::TorsionClass)));
        let g = h.generator_class(0).unwrap();
        assert!(!h.is_torsion(&g).unwrap());
        let wrong = HomologyClass { degree: 2, ..g };
        assert!(matches!(h.is_torsion(&wrong), Err(Error::DegreeMismatch { .. })));
    }
}
