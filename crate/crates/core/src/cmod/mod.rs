//! Classical p-modulus of curve and codimension-one surface families, bracketed
//! by constraint generation: a restricted dual gives lower bounds, and any
//! density rescaled by its oracle length gives an upper bound.

pub mod oracle;

use crate::chain::{Chain, Cochain};
use crate::error::{Error, Result};
use crate::linalg::{pcg, solve_dense};
use crate::mesh::{MetricComplex, Rel};
use crate::scenes::Scene;
pub use oracle::{chain_length, CurveFamily, OracleResult, SurfaceFamily};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::time::Instant;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct CmodOptions {
    /// Relative gap between the bounds at which to stop.
    pub tolerance: f64,
    pub max_rounds: usize,
    /// Members shorter than `1 − feasibility` are added as constraints.
    pub feasibility: f64,
    pub members_per_round: usize,
    pub surfaces_per_round: usize,
    /// Labels of the surface search lie in `[−label_window, label_window]`.
    pub label_window: i64,
    /// Extra sheets of the curve search on each side of the target winding.
    pub winding_slack: i64,
    pub dual_iterations: usize,
    /// Slack members are pruned above this many.
    pub max_members: usize,
    /// Wall-clock budget in seconds for the bracketing loop.
    pub time_limit: Option<f64>,
}

impl Default for CmodOptions {
    fn default() -> Self {
        CmodOptions {
            tolerance: 1e-8,
            max_rounds: 400,
            feasibility: 1e-10,
            members_per_round: 64,
            surfaces_per_round: 4,
            label_window: 1,
            winding_slack: 0,
            dual_iterations: 200,
            max_members: 4000,
            time_limit: None,
        }
    }
}

/// The family a class determines: curves for degree 1, surfaces for codimension 1.
#[derive(Clone, Debug)]
pub enum Family {
    Curves(CurveFamily),
    Surfaces(SurfaceFamily),
}

impl Family {
    /// Uses `cuts` (a degree-1 cocycle basis) for curve classes.
    pub fn new(
        x: &MetricComplex,
        degree: usize,
        rel: Rel,
        representative: &Chain,
        cuts: Option<&[Cochain<i64>]>,
        opts: &CmodOptions,
    ) -> Result<Family> {
        let n = x.dimension();
        if degree == 1 {
            let cuts = cuts.ok_or_else(|| Error::UnsupportedClass("curve families need cut cocycles".into()))?;
            Ok(Family::Curves(CurveFamily::new(x, rel, cuts, representative, opts.winding_slack)?))
        } else if degree + 1 == n {
            Ok(Family::Surfaces(SurfaceFamily::new(x, rel, representative, opts.label_window)?))
        } else {
            Err(Error::UnsupportedClass(format!(
                "classical modulus supports degree 1 or {} in dimension {n}, got {degree}",
                n - 1
            )))
        }
    }

    pub fn from_scene(scene: &Scene, class: &str, opts: &CmodOptions) -> Result<Family> {
        let fc = scene.class(class)?;
        if fc.torsion {
            return Err(Error::TorsionClass);
        }
        Family::new(
            &scene.complex,
            fc.degree,
            fc.rel,
            &fc.representative,
            scene.cuts.get(&fc.rel).map(|v| v.as_slice()),
            opts,
        )
    }

    pub fn degree(&self, x: &MetricComplex) -> usize {
        match self {
            Family::Curves(_) => 1,
            Family::Surfaces(_) => x.dimension() - 1,
        }
    }

    pub fn rel(&self) -> Rel {
        match self {
            Family::Curves(c) => c.rel,
            Family::Surfaces(s) => s.rel,
        }
    }

    pub fn shortest(&self, x: &MetricComplex, rho: &[f64], threshold: f64, opts: &CmodOptions) -> Result<OracleResult> {
        match self {
            Family::Curves(c) => c.shortest(x, rho, threshold, opts.members_per_round),
            Family::Surfaces(s) => s.shortest(x, rho, threshold, opts.surfaces_per_round),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CmodResult {
    pub p: f64,
    pub degree: usize,
    pub value_lower: f64,
    pub value_upper: f64,
    /// Admissible density achieving `value_upper`.
    pub density: Cochain<f64>,
    /// Oracle minimum length of `density` (at least 1 up to rounding).
    pub certified_length: f64,
    pub constraints: usize,
    pub rounds: usize,
    pub converged: bool,
    pub history: Vec<(f64, f64)>,
}

impl CmodResult {
    pub fn gap(&self) -> f64 {
        (self.value_upper - self.value_lower) / self.value_upper.abs().max(f64::MIN_POSITIVE)
    }
}

/// Restricted problem min Σ m ρ^p subject to Aρ ≥ 1 over the active members, solved in the dual.
struct Restricted {
    p: f64,
    mass: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

impl Restricted {
    fn new(p: f64, mass: Vec<f64>) -> Self {
        let cols = vec![Vec::new(); mass.len()];
        Restricted { p, mass, rows: Vec::new(), cols }
    }

    fn push(&mut self, row: Vec<(usize, f64)>) {
        let i = self.rows.len();
        for &(f, a) in &row {
            self.cols[f].push((i, a));
        }
        self.rows.push(row);
    }

    fn retain(&mut self, keep: &[bool]) {
        let rows = std::mem::take(&mut self.rows);
        self.cols.iter_mut().for_each(|c| c.clear());
        for (row, &k) in rows.into_iter().zip(keep) {
            if k {
                self.push(row);
            }
        }
    }

    fn load(&self, lambda: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|col| col.iter().map(|&(i, a)| lambda[i] * a).sum()).collect()
    }

    // Pointwise minimizer of m ρ^p − s ρ.
    fn density(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(&self.mass)
            .map(|(&sf, &m)| if sf > 0.0 { (sf / (self.p * m)).powf(1.0 / (self.p - 1.0)) } else { 0.0 })
            .collect()
    }

    fn value(&self, lambda: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let s = self.load(lambda);
        let rho = self.density(&s);
        let mut g: f64 = lambda.iter().sum();
        for f in 0..s.len() {
            if s[f] > 0.0 {
                g += self.mass[f] * rho[f].powf(self.p) - s[f] * rho[f];
            }
        }
        (g, rho, s)
    }

    fn lengths(&self, rho: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(f, a)| a * rho[f]).sum::<f64>()).collect()
    }

    /// Projected Newton ascent on λ ≥ 0; Newton-CG once the free set is large.
    fn solve(&self, lambda: &mut Vec<f64>, iterations: usize) -> (f64, Vec<f64>) {
        let m = self.rows.len();
        lambda.resize(m, 0.0);
        if lambda.iter().all(|&l| l == 0.0) {
            // Best multiple of the all-ones vector.
            let s = self.load(&vec![1.0; m]);
            let q = self.p / (self.p - 1.0);
            let cq: f64 = s
                .iter()
                .zip(&self.mass)
                .filter(|(sf, _)| **sf > 0.0)
                .map(|(&sf, &mf)| (self.p - 1.0) * mf * (self.p * mf).powf(-q) * sf.powf(q))
                .sum();
            let alpha = (m as f64 / (q * cq)).powf(1.0 / (q - 1.0));
            lambda.iter_mut().for_each(|l| *l = alpha);
        }
        let (mut g, mut rho, mut s) = self.value(lambda);
        for _ in 0..iterations {
            let grad: Vec<f64> = self.lengths(&rho).iter().map(|l| 1.0 - l).collect();
            let lmax = lambda.iter().cloned().fold(0.0, f64::max);
            let free: Vec<usize> = (0..m).filter(|&i| lambda[i] > 1e-14 * lmax || grad[i] > 0.0).collect();
            let pg = free.iter().map(|&i| grad[i].abs()).fold(0.0, f64::max);
            if pg < 1e-13 || free.is_empty() {
                break;
            }
            let nf = free.len();
            let mut pos = vec![usize::MAX; m];
            for (a, &i) in free.iter().enumerate() {
                pos[i] = a;
            }
            // Curvature of the dual along each cell's load.
            let d: Vec<f64> = (0..s.len())
                .map(|f| if s[f] > 0.0 { rho[f] / ((self.p - 1.0) * s[f]) } else { 0.0 })
                .collect();
            let rhs: Vec<f64> = free.iter().map(|&i| grad[i]).collect();
            let mut diag = vec![0.0; nf];
            for (f, col) in self.cols.iter().enumerate() {
                for &(i, a) in col {
                    if pos[i] != usize::MAX {
                        diag[pos[i]] += d[f] * a * a;
                    }
                }
            }
            let ridge = 1e-12 * diag.iter().sum::<f64>() / nf as f64 + f64::MIN_POSITIVE;
            let dir = if nf <= 400 {
                let mut h = vec![vec![0.0; nf]; nf];
                for (f, col) in self.cols.iter().enumerate() {
                    if d[f] == 0.0 {
                        continue;
                    }
                    let entries: Vec<(usize, f64)> =
                        col.iter().filter(|&&(i, _)| pos[i] != usize::MAX).map(|&(i, a)| (pos[i], a)).collect();
                    for &(ai, a) in &entries {
                        for &(bi, b) in &entries {
                            h[ai][bi] += d[f] * a * b;
                        }
                    }
                }
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] += ridge;
                }
                solve_dense(&h, &rhs).unwrap_or_else(|| rhs.clone())
            } else {
                let apply = |v: &[f64], out: &mut [f64]| {
                    let mut load = vec![0.0; self.cols.len()];
                    for (a, &i) in free.iter().enumerate() {
                        for &(f, c) in &self.rows[i] {
                            load[f] += c * v[a];
                        }
                    }
                    for (a, &i) in free.iter().enumerate() {
                        out[a] = ridge * v[a] + self.rows[i].iter().map(|&(f, c)| c * d[f] * load[f]).sum::<f64>();
                    }
                };
                let diag_r: Vec<f64> = diag.iter().map(|v| v + ridge).collect();
                let mut x = vec![0.0; nf];
                let bn = crate::linalg::norm(&rhs);
                pcg(apply, &diag_r, &rhs, &mut x, 1e-10 * bn, 500);
                x
            };
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial = lambda.clone();
                for (a, &i) in free.iter().enumerate() {
                    trial[i] = (lambda[i] + step * dir[a]).max(0.0);
                }
                let moved: f64 = (0..m).map(|i| grad[i] * (trial[i] - lambda[i])).sum();
                let (gt, rt, st) = self.value(&trial);
                // Near the optimum G is flat to roundoff; judge by the projected gradient then.
                let flat = gt >= g - 1e-14 * g.abs().max(1.0) && {
                    let tl = self.lengths(&rt);
                    let tmax = trial.iter().cloned().fold(0.0, f64::max);
                    let tpg = (0..m)
                        .filter(|&i| trial[i] > 1e-14 * tmax || tl[i] < 1.0)
                        .map(|i| (1.0 - tl[i]).abs())
                        .fold(0.0, f64::max);
                    tpg < 0.5 * pg
                };
                if (gt > g && gt >= g + 1e-4 * moved) || flat {
                    accepted = true;
                    *lambda = trial;
                    g = gt;
                    rho = rt;
                    s = st;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (g, rho)
    }
}

fn energy(mass: &[f64], rho: &[f64], p: f64) -> f64 {
    rho.iter().zip(mass).map(|(r, m)| m * r.powf(p)).sum()
}

/// Brackets the classical p-modulus of a family.
pub fn minimize_cmod(x: &MetricComplex, family: &Family, p: f64, opts: &CmodOptions) -> Result<CmodResult> {
    minimize_cmod_seeded(x, family, p, opts, &[])
}

/// As [`minimize_cmod`], with extra densities whose rescalings seed the upper bound.
pub fn minimize_cmod_seeded(
    x: &MetricComplex,
    family: &Family,
    p: f64,
    opts: &CmodOptions,
    seeds: &[&Cochain<f64>],
) -> Result<CmodResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    let started = Instant::now();
    let k = family.degree(x);
    let rel = family.rel();
    let len = x.num_cells(k);
    let marks = x.marking(k);
    let mass = x.mass_weights(k).to_vec();
    let vol = x.volume(k);
    let free_cell: Vec<bool> = marks.iter().map(|&m| !rel.contains(m)).collect();

    let ones: Vec<f64> = free_cell.iter().map(|&b| b as i32 as f64).collect();
    let first = family.shortest(x, &ones, f64::INFINITY, opts)?;
    if first.min_length <= 0.0 {
        return Err(Error::UnsupportedClass("the family contains a member of zero length".into()));
    }
    let mut best: Vec<f64> = ones.iter().map(|r| r / first.min_length).collect();
    let mut upper = energy(&mass, &best, p);
    for seed in seeds {
        if seed.degree != k || seed.len() != len {
            return Err(Error::DegreeMismatch { expected: k, found: seed.degree });
        }
        let rho: Vec<f64> = seed.values.iter().zip(&free_cell).map(|(v, &b)| if b { v.max(0.0) } else { 0.0 }).collect();
        let l = family.shortest(x, &rho, 0.0, opts)?.min_length;
        if l > 0.0 {
            let cand = energy(&mass, &rho, p) / l.powf(p);
            if cand < upper {
                upper = cand;
                best = rho.iter().map(|v| v / l).collect();
            }
        }
    }
    let mut lower = 0.0f64;

    let mut restricted = Restricted::new(p, mass.clone());
    let mut seen: BTreeSet<Vec<(usize, i64)>> = BTreeSet::new();
    let mut add = |restricted: &mut Restricted, chain: &Chain| -> bool {
        let key: Vec<(usize, i64)> = chain.iter().collect();
        if !seen.insert(key) {
            return false;
        }
        restricted.push(chain.iter().map(|(f, c)| (f, c.unsigned_abs() as f64 * vol[f])).collect());
        true
    };
    let cutoff = first.min_length * 1.5;
    for (l, c) in first.members.iter().take(opts.members_per_round) {
        if *l <= cutoff {
            add(&mut restricted, c);
        }
    }
    if let Some(c) = &first.minimizer {
        add(&mut restricted, c);
    }

    let mut lambda = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    let mut budget = opts.dual_iterations;
    let mut polish = 0;
    let out_of_time = |started: &Instant| opts.time_limit.is_some_and(|t| started.elapsed().as_secs_f64() > t);
    while rounds < opts.max_rounds && !out_of_time(&started) {
        rounds += 1;
        let (g, rho) = restricted.solve(&mut lambda, budget);
        lower = lower.max(g);
        let r = family.shortest(x, &rho, 1.0 - opts.feasibility, opts)?;
        // Upper bounds from the restricted density and its mixtures with the incumbent.
        for (i, theta) in [0.0, 0.3, 0.7].into_iter().enumerate() {
            let mix: Vec<f64> = rho.iter().zip(&best).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
            let l = if i == 0 { r.min_length } else { family.shortest(x, &mix, 0.0, opts)?.min_length };
            if l > 0.0 {
                let cand = energy(&mass, &mix, p) / l.powf(p);
                if cand < upper {
                    upper = cand;
                    best = mix.iter().map(|v| v / l).collect();
                }
            }
            if upper - lower <= opts.tolerance * upper {
                break;
            }
        }
        history.push((lower, upper));
        log::debug!("cmod round {rounds}: [{lower:.12e}, {upper:.12e}] with {} members", restricted.rows.len());
        if upper - lower <= opts.tolerance * upper {
            converged = true;
            break;
        }
        // Drop slack members that carry no weight once the set grows large.
        if restricted.rows.len() > opts.max_members {
            let lengths = restricted.lengths(&rho);
            let keep: Vec<bool> = lambda.iter().zip(&lengths).map(|(&l, &len)| l > 0.0 || len < 1.0 + 1e-3).collect();
            restricted.retain(&keep);
            lambda = lambda.iter().zip(&keep).filter(|(_, &k)| k).map(|(&l, _)| l).collect();
        }
        let mut added = 0;
        for (_, c) in &r.members {
            if add(&mut restricted, c) {
                added += 1;
            }
        }
        if added == 0 {
            // Nothing new to add: the gap is the restricted solve's. Spend more on it.
            polish += 1;
            if polish > 3 {
                break;
            }
            budget *= 4;
        }
    }
    let certified_length = family.shortest(x, &best, 0.0, opts)?.min_length;
    Ok(CmodResult {
        p,
        degree: k,
        value_lower: lower.min(upper),
        value_upper: upper,
        density: Cochain::new(k, best),
        certified_length,
        constraints: restricted.rows.len(),
        rounds,
        converged,
        history,
    })
}

/// Classical counterpart of the duality product.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub p: f64,
    pub q: f64,
    pub mod_p: CmodResult,
    pub mod_q: CmodResult,
    /// Mod_p(c)^{1/p} · Mod_q(c′)^{1/q} from the upper bounds.
    pub product_upper: f64,
    pub product_lower: f64,
}

impl CorollaryReport {
    /// Whether the product is at most one, to the given tolerance.
    pub fn holds(&self, tol: f64) -> bool {
        self.product_upper <= 1.0 + tol
    }
}

pub fn check_corollary(x: &MetricComplex, c: &Family, cprime: &Family, p: f64, opts: &CmodOptions) -> Result<CorollaryReport> {
    check_corollary_seeded(x, c, cprime, p, opts, &[], &[])
}

pub fn check_corollary_seeded(
    x: &MetricComplex,
    c: &Family,
    cprime: &Family,
    p: f64,
    opts: &CmodOptions,
    seeds: &[&Cochain<f64>],
    seeds_prime: &[&Cochain<f64>],
) -> Result<CorollaryReport> {
    if cprime.rel() != c.rel().complement() || c.degree(x) + cprime.degree(x) != x.dimension() {
        return Err(Error::InvalidParameter("the second family must have complementary degree and boundary".into()));
    }
    let q = p / (p - 1.0);
    let mod_p = minimize_cmod_seeded(x, c, p, opts, seeds)?;
    let mod_q = minimize_cmod_seeded(x, cprime, q, opts, seeds_prime)?;
    let product_upper = mod_p.value_upper.powf(1.0 / p) * mod_q.value_upper.powf(1.0 / q);
    let product_lower = mod_p.value_lower.powf(1.0 / p) * mod_q.value_lower.powf(1.0 / q);
    Ok(CorollaryReport { p, q, mod_p, mod_q, product_upper, product_lower })
}
