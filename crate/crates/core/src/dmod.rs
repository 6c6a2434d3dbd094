//! Differential-form modulus: `dMod_p(c) = min ‖ω‖_p^p` over closed forms
//! vanishing on `D` whose integral over every cycle of `c` is 1.
//!
//! The admissible set is `ω₀ + span(z_i) + δ(C^{k−1} rel D)`, where the `z_i`
//! are cohomology directions that pair to zero with `c`. For `p = 2` the
//! problem is a weighted least-squares solve; otherwise a smoothed Newton–CG
//! with continuation in the smoothing width.

use crate::chain::{Chain, Cochain};
use crate::dec::{self, DualCochain};
use crate::error::{Error, Result};
use crate::homology::{boundary, HomologyClass, HomologySummary};
use crate::linalg::{self, SolveInfo};
use crate::mesh::{MetricComplex, Rel};
use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DmodOptions {
    /// Stop when the true gradient norm is below this fraction of its value at the start.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smoothing schedule, relative to the typical pointwise norm.
    pub delta_start: f64,
    pub delta_end: f64,
    /// Relative tolerance of the `p = 2` linear solve.
    pub linear_tolerance: f64,
    pub seed: u64,
    /// Start from a random `τ` instead of zero.
    pub random_start: bool,
}

impl Default for DmodOptions {
    fn default() -> Self {
        DmodOptions {
            tolerance: 1e-8,
            max_iterations: 400,
            delta_start: 1e-2,
            delta_end: 1e-8,
            linear_tolerance: 1e-12,
            seed: 0,
            random_start: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusResult {
    pub p: f64,
    pub degree: usize,
    pub rel: Rel,
    pub class_coords: Vec<f64>,
    pub value: f64,
    pub minimizer: Cochain<f64>,
    /// Norm of the gradient with respect to `τ` at the minimizer.
    pub residual: f64,
    /// Norm of the same gradient at the starting form.
    pub initial_gradient: f64,
    /// Gradient along the free cohomology directions at the minimizer.
    pub class_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Integrals of the minimizer over randomized cycles of the class.
    pub certificate_evaluations: Vec<f64>,
}

/// Linear parametrization `ω = ω₀ + Z t + B τ` of the admissible set.
struct Affine<'a> {
    x: &'a MetricComplex,
    k: usize,
    omega0: Vec<f64>,
    dirs: Vec<Vec<f64>>,
    free: Vec<usize>,
    index: Vec<usize>,
}

impl<'a> Affine<'a> {
    fn new(x: &'a MetricComplex, rel: Rel, omega0: Vec<f64>, dirs: Vec<Vec<f64>>, k: usize) -> Self {
        let free = if k > 0 { x.free_cells(k - 1, rel) } else { Vec::new() };
        let mut index = vec![usize::MAX; if k > 0 { x.num_cells(k - 1) } else { 0 }];
        for (i, &e) in free.iter().enumerate() {
            index[e] = i;
        }
        Affine { x, k, omega0, dirs, free, index }
    }

    fn dim(&self) -> usize {
        self.free.len() + self.dirs.len()
    }

    fn cells(&self) -> usize {
        self.omega0.len()
    }

    /// `A y` with `y = (τ, t)`.
    fn apply(&self, y: &[f64], out: &mut [f64]) {
        let m = self.free.len();
        for (f, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            if self.k > 0 {
                for &(e, s) in self.x.faces(self.k, f) {
                    let i = self.index[e];
                    if i != usize::MAX {
                        acc += s as f64 * y[i];
                    }
                }
            }
            *o = acc;
        }
        for (j, z) in self.dirs.iter().enumerate() {
            let t = y[m + j];
            if t != 0.0 {
                for (o, v) in out.iter_mut().zip(z) {
                    *o += t * v;
                }
            }
        }
    }

    /// `Aᵀ w`.
    fn apply_t(&self, w: &[f64], out: &mut [f64]) {
        let m = self.free.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        if self.k > 0 {
            for (f, &wf) in w.iter().enumerate() {
                if wf == 0.0 {
                    continue;
                }
                for &(e, s) in self.x.faces(self.k, f) {
                    let i = self.index[e];
                    if i != usize::MAX {
                        out[i] += s as f64 * wf;
                    }
                }
            }
        }
        for (j, z) in self.dirs.iter().enumerate() {
            out[m + j] = linalg::dot(z, w);
        }
    }

    /// `diag(Aᵀ H A)`.
    fn normal_diag(&self, h: &[f64]) -> Vec<f64> {
        let m = self.free.len();
        let mut d = vec![0.0; self.dim()];
        if self.k > 0 {
            for (f, &hf) in h.iter().enumerate() {
                for &(e, s) in self.x.faces(self.k, f) {
                    let i = self.index[e];
                    if i != usize::MAX {
                        d[i] += (s * s) as f64 * hf;
                    }
                }
            }
        }
        for (j, z) in self.dirs.iter().enumerate() {
            d[m + j] = z.iter().zip(h).map(|(v, hf)| v * v * hf).sum();
        }
        d
    }

    /// `ω₀ + A y`, summed with compensation so that cells cancelling to zero
    /// come out far below ulp(y).
    fn form(&self, y: &Coords) -> Vec<f64> {
        let m = self.free.len();
        let mut sum = self.omega0.clone();
        let mut comp = vec![0.0; self.cells()];
        if self.k > 0 {
            for f in 0..self.cells() {
                for &(e, s) in self.x.faces(self.k, f) {
                    let i = self.index[e];
                    if i != usize::MAX {
                        neumaier(&mut sum[f], &mut comp[f], s as f64 * y.hi[i]);
                        comp[f] += s as f64 * y.lo[i];
                    }
                }
            }
        }
        for (j, z) in self.dirs.iter().enumerate() {
            let (th, tl) = (y.hi[m + j], y.lo[m + j]);
            if th == 0.0 && tl == 0.0 {
                continue;
            }
            for (f, &zf) in z.iter().enumerate() {
                let prod = th * zf;
                neumaier(&mut sum[f], &mut comp[f], prod);
                comp[f] += th.mul_add(zf, -prod) + tl * zf;
            }
        }
        sum.iter().zip(&comp).map(|(a, b)| a + b).collect()
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

/// Affine coordinates as an unevaluated sum `hi + lo`.
#[derive(Clone)]
struct Coords {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl Coords {
    fn zeros(n: usize) -> Self {
        Coords { hi: vec![0.0; n], lo: vec![0.0; n] }
    }

    fn add_scaled(&mut self, a: f64, v: &[f64]) {
        for ((h, l), &vi) in self.hi.iter_mut().zip(self.lo.iter_mut()).zip(v) {
            let b = a * vi;
            let s = *h + b;
            let bb = s - *h;
            *l += (*h - (s - bb)) + (b - bb);
            *h = s;
        }
    }
}

/// Per-cell pieces of the (optionally smoothed) objective.
struct Energy<'a> {
    mass: &'a [f64],
    vol: &'a [f64],
    p: f64,
}

impl Energy<'_> {
    fn value(&self, w: &[f64], delta: f64) -> f64 {
        w.iter()
            .zip(self.vol)
            .zip(self.mass)
            .map(|((wf, v), m)| {
                let s = wf / v;
                if delta == 0.0 {
                    m * s.abs().powf(self.p)
                } else {
                    m * (s * s + delta * delta).powf(self.p / 2.0)
                }
            })
            .sum()
    }

    /// Derivative with respect to the cochain entries.
    fn gradient(&self, w: &[f64], delta: f64) -> Vec<f64> {
        let p = self.p;
        w.iter()
            .zip(self.vol)
            .zip(self.mass)
            .map(|((wf, v), m)| {
                let s = wf / v;
                let d = if delta == 0.0 {
                    p * s.abs().powf(p - 1.0) * s.signum()
                } else {
                    p * s * (s * s + delta * delta).powf(p / 2.0 - 1.0)
                };
                m * d / v
            })
            .collect()
    }

    fn hessian(&self, w: &[f64], delta: f64) -> Vec<f64> {
        let p = self.p;
        w.iter()
            .zip(self.vol)
            .zip(self.mass)
            .map(|((wf, v), m)| {
                let s = wf / v;
                let r = s * s + delta * delta;
                m * p * r.powf(p / 2.0 - 2.0) * ((p - 1.0) * s * s + delta * delta) / (v * v)
            })
            .collect()
    }
}

/// Minimizes `‖ω‖_p^p` over forms admissible for the class `c`.
pub fn minimize_dmod(
    x: &MetricComplex,
    h: &HomologySummary,
    c: &HomologyClass,
    p: f64,
    opts: &DmodOptions,
) -> Result<ModulusResult> {
    if c.degree != h.degree {
        return Err(Error::DegreeMismatch { expected: h.degree, found: c.degree });
    }
    if h.is_torsion(c)? {
        return Err(Error::TorsionClass);
    }
    let coords: Vec<f64> = c.coords.iter().map(|&v| v as f64).collect();
    let mut result = minimize_with_coords(x, h, &coords, p, opts)?;
    result.certificate_evaluations = certificates(x, h.rel, &result.minimizer, &c.representative, opts.seed)?;
    Ok(result)
}

/// As [`minimize_dmod`] for a class given by real generator coordinates.
pub fn minimize_with_coords(
    x: &MetricComplex,
    h: &HomologySummary,
    coords: &[f64],
    p: f64,
    opts: &DmodOptions,
) -> Result<ModulusResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must lie in (1, ∞)")));
    }
    if coords.len() != h.betti {
        return Err(Error::DegreeMismatch { expected: h.betti, found: coords.len() });
    }
    let norm2: f64 = coords.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(Error::TorsionClass);
    }
    let k = h.degree;
    let len = x.num_cells(k);
    let mut omega0 = vec![0.0; len];
    for (phi, &cj) in h.cocycles.iter().zip(coords) {
        let b = cj / norm2;
        for (o, &v) in omega0.iter_mut().zip(&phi.values) {
            *o += b * v as f64;
        }
    }
    let dirs = orthogonal_directions(h, coords);
    let affine = Affine::new(x, h.rel, omega0, dirs, k);
    let energy = Energy { mass: x.mass_weights(k), vol: x.volume(k), p };

    let mut y = Coords::zeros(affine.dim());
    if opts.random_start {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let scale = typical_scale(&affine, &energy);
        let hmin = x.spacing().iter().fold(f64::INFINITY, |a, &b| a.min(b));
        for v in y.hi.iter_mut() {
            *v = rng.gen_range(-1.0..1.0) * scale * hmin;
        }
    }

    let true_grad = |y: &Coords| -> Vec<f64> {
        let w = affine.form(y);
        let g = energy.gradient(&w, 0.0);
        let mut out = vec![0.0; affine.dim()];
        affine.apply_t(&g, &mut out);
        out
    };
    let g_start = true_grad(&Coords::zeros(affine.dim()));
    let m = affine.free.len();
    let initial_gradient = linalg::norm(&g_start[..m]);
    let g0 = if initial_gradient > 0.0 { initial_gradient } else { linalg::norm(&g_start) };
    let g0 = g0.max(linalg::norm(&true_grad(&y)[..m]));
    let target = opts.tolerance * g0;
    // The gradient of |s|^p is only (p−1)-Hölder near s = 0, so for p < 2 roundoff
    // on cells that vanish at the optimum leaves a floor of about eps^(p−1). Aim
    // for `target`; accept the relaxed level when the iteration stagnates above it.
    let accept = opts.tolerance.powf((p - 1.0).min(1.0)) * g0;

    let (iterations, converged) = if g0 == 0.0 {
        (0, true)
    } else if p == 2.0 {
        solve_quadratic(&affine, &energy, &mut y, opts, target)
    } else {
        // Warm start from the p = 2 minimizer: one linear solve, often already close.
        let quad = Energy { mass: energy.mass, vol: energy.vol, p: 2.0 };
        let mut y2 = y.clone();
        let (it2, _) = solve_quadratic(&affine, &quad, &mut y2, opts, 0.0);
        if energy.value(&affine.form(&y2), 0.0) < energy.value(&affine.form(&y), 0.0) {
            y = y2;
        }
        let (it, ok) = solve_newton(&affine, &energy, &mut y, opts, target, accept);
        (it + it2, ok)
    };

    let omega = Cochain::new(k, affine.form(&y));
    let g = true_grad(&y);
    let residual = linalg::norm(&g[..m]);
    let class_residual = linalg::norm(&g[m..]);
    let converged = converged || linalg::norm(&g) <= accept;
    let value = dec::lp_norm_pow(x, &omega, p);
    info!(
        "dmod p={p} k={k} value={value:.12e} residual={residual:.3e} target={target:.3e} iterations={iterations}"
    );
    Ok(ModulusResult {
        p,
        degree: k,
        rel: h.rel,
        class_coords: coords.to_vec(),
        value,
        minimizer: omega,
        residual,
        initial_gradient,
        class_residual,
        iterations,
        converged,
        certificate_evaluations: Vec::new(),
    })
}

fn orthogonal_directions(h: &HomologySummary, coords: &[f64]) -> Vec<Vec<f64>> {
    let b = coords.len();
    let norm2: f64 = coords.iter().map(|v| v * v).sum();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..b {
        let mut v: Vec<f64> = (0..b).map(|i| (i == j) as i32 as f64 - coords[j] * coords[i] / norm2).collect();
        for q in &basis {
            let d = linalg::dot(&v, q);
            for i in 0..b {
                v[i] -= d * q[i];
            }
        }
        let nv = linalg::norm(&v);
        if nv > 1e-9 {
            basis.push(v.iter().map(|a| a / nv).collect());
        }
    }
    basis
        .into_iter()
        .map(|t| {
            let mut z = vec![0.0; h.cocycles[0].len()];
            for (phi, &tj) in h.cocycles.iter().zip(&t) {
                for (o, &v) in z.iter_mut().zip(&phi.values) {
                    *o += tj * v as f64;
                }
            }
            z
        })
        .collect()
}

fn typical_scale(affine: &Affine, energy: &Energy) -> f64 {
    let total: f64 = energy.mass.iter().sum::<f64>().max(1e-300);
    let base = energy.value(&affine.omega0, 0.0) / total;
    let s = base.powf(1.0 / energy.p);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn solve_quadratic(affine: &Affine, energy: &Energy, y: &mut Coords, opts: &DmodOptions, target: f64) -> (usize, bool) {
    // Φ = Σ w_f ω_f² with w_f = mass_f / vol_f²; normal equations Aᵀ W A y = −Aᵀ W (ω₀ + A y₀).
    let weights: Vec<f64> = energy.mass.iter().zip(energy.vol).map(|(m, v)| m / (v * v)).collect();
    let diag = affine.normal_diag(&weights);
    let n = affine.cells();
    let rhs_at = |y: &Coords| {
        let mut rhs = vec![0.0; affine.dim()];
        let w0: Vec<f64> = affine.form(y).iter().zip(&weights).map(|(a, w)| -a * w).collect();
        affine.apply_t(&w0, &mut rhs);
        rhs
    };
    let mut rhs = rhs_at(y);
    // rhs is half the gradient of Φ.
    let tol = (opts.linear_tolerance * linalg::norm(&rhs)).max(0.25 * target);
    let mut iterations = 0;
    // The normal matrix is singular for k ≥ 2 (closed τ); restarting from the true
    // residual undoes the drift the CG recurrence picks up along its kernel.
    for _ in 0..6 {
        if linalg::norm(&rhs) <= tol {
            return (iterations, true);
        }
        let mut dy = vec![0.0; affine.dim()];
        let info = linalg::pcg(
            |v, out| {
                let mut t = vec![0.0; n];
                affine.apply(v, &mut t);
                for (a, w) in t.iter_mut().zip(&weights) {
                    *a *= w;
                }
                affine.apply_t(&t, out);
            },
            &diag,
            &rhs,
            &mut dy,
            tol,
            50 * affine.dim() + 1000,
        );
        iterations += info.iterations;
        debug!("quadratic solve: {} iterations, residual {:.3e}", info.iterations, info.residual);
        y.add_scaled(1.0, &dy);
        rhs = rhs_at(y);
    }
    (iterations, linalg::norm(&rhs) <= tol)
}

fn solve_newton(
    affine: &Affine,
    energy: &Energy,
    y: &mut Coords,
    opts: &DmodOptions,
    target: f64,
    accept: f64,
) -> (usize, bool) {
    let scale = typical_scale(affine, energy);
    let mut delta = opts.delta_start * scale;
    let floor = opts.delta_end * scale;
    let n = affine.cells();
    let dim = affine.dim();
    let mut iterations = 0;
    let mut grad = vec![0.0; dim];
    let true_norm = |y: &Coords| -> f64 {
        let g = energy.gradient(&affine.form(y), 0.0);
        let mut out = vec![0.0; dim];
        affine.apply_t(&g, &mut out);
        linalg::norm(&out)
    };
    let mut stage_start = f64::INFINITY;
    let mut floor_history = Vec::new();
    while iterations < opts.max_iterations {
        let w = affine.form(y);
        let g = energy.gradient(&w, delta);
        affine.apply_t(&g, &mut grad);
        let gnorm = linalg::norm(&grad);
        let tnorm = if delta <= floor { true_norm(y) } else { f64::INFINITY };
        if tnorm <= target {
            return (iterations, true);
        }
        if delta <= floor {
            // Stagnation below the smoothing floor: stop once ten iterations
            // fail to halve the true gradient.
            floor_history.push(tnorm);
            let n_hist = floor_history.len();
            if n_hist > 10 && tnorm > 0.5 * floor_history[n_hist - 11] && tnorm <= accept {
                break;
            }
        }
        if stage_start.is_infinite() {
            stage_start = gnorm.max(1e-300);
        }
        // Leave a smoothing stage once its own gradient is small enough.
        let stage_tol = if delta <= floor { 0.1 * target } else { (1e-6 * stage_start).max(0.1 * target) };
        if gnorm <= stage_tol {
            if delta > floor {
                delta = (delta * 0.1).max(floor);
            } else {
                delta *= 0.1;
            }
            stage_start = f64::INFINITY;
            continue;
        }
        let hdiag = energy.hessian(&w, delta);
        let diag = affine.normal_diag(&hdiag);
        let rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
        let forcing = (gnorm / stage_start).sqrt().min(1e-2);
        let mut step = vec![0.0; dim];
        let info: SolveInfo = linalg::pcg(
            |v, out| {
                let mut tt = vec![0.0; n];
                affine.apply(v, &mut tt);
                for (a, hh) in tt.iter_mut().zip(&hdiag) {
                    *a *= hh;
                }
                affine.apply_t(&tt, out);
            },
            &diag,
            &rhs,
            &mut step,
            (forcing * gnorm).max(1e-3 * target),
            20 * dim + 500,
        );
        let slope = linalg::dot(&grad, &step);
        if !(slope < 0.0) {
            // Fall back to the preconditioned gradient.
            for i in 0..dim {
                step[i] = rhs[i] / diag[i].max(1e-300);
            }
        }
        let slope = linalg::dot(&grad, &step);
        let f0 = energy.value(&w, delta);
        let mut alpha = 1.0;
        let mut dw = vec![0.0; n];
        affine.apply(&step, &mut dw);
        // Backtrack until Armijo holds, then keep halving while the energy still
        // drops: for p < 2 the full Newton step tends to overshoot to the mirror point.
        let trial_value = |alpha: f64| {
            let trial: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + alpha * b).collect();
            energy.value(&trial, delta)
        };
        let mut accepted = false;
        // Close to the optimum the decrease is below the roundoff of Φ itself;
        // the full step is then judged by the gradient it leaves behind.
        if (trial_value(1.0) - f0).abs() <= 1e-12 * f0.abs() {
            let trial: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + b).collect();
            let mut gt = vec![0.0; dim];
            affine.apply_t(&energy.gradient(&trial, delta), &mut gt);
            accepted = linalg::norm(&gt) < gnorm;
        }
        if !accepted {
            let mut best = f64::INFINITY;
            for _ in 0..60 {
                let v = trial_value(alpha);
                if accepted {
                    if v < best {
                        best = v;
                        alpha *= 0.5;
                        continue;
                    }
                    alpha *= 2.0;
                    break;
                }
                if v <= f0 + 1e-4 * alpha * slope {
                    accepted = true;
                    best = v;
                }
                alpha *= 0.5;
            }
        }
        iterations += 1;
        debug!(
            "newton it={iterations} delta={delta:.2e} grad={gnorm:.3e} cg={} alpha={alpha:.3e}",
            info.iterations
        );
        if !accepted {
            // No descent at this smoothing level: move to the next one.
            if delta > floor {
                delta = (delta * 0.1).max(floor);
                stage_start = f64::INFINITY;
                continue;
            }
            break;
        }
        y.add_scaled(alpha, &step);
    }
    let ok = true_norm(y) <= accept;
    (iterations, ok)
}

/// Integrals of ω over `σ + ∂(random chain) + (random chain in D)`, three draws.
pub fn certificates(x: &MetricComplex, rel: Rel, omega: &Cochain<f64>, sigma: &Chain, seed: u64) -> Result<Vec<f64>> {
    let k = omega.degree;
    let n = x.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let rel_cells: Vec<usize> = (0..x.num_cells(k)).filter(|&f| rel.contains(x.marking(k)[f])).collect();
    let mut out = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut s = sigma.clone();
        if k < n {
            let mut filler = Chain::zero(k + 1);
            for _ in 0..8 {
                filler.add(rng.gen_range(0..x.num_cells(k + 1)), rng.gen_range(-3..=3));
            }
            s.add_chain(&boundary(x, &filler), 1);
        }
        for _ in 0..rel_cells.len().min(8) {
            s.add(rel_cells[rng.gen_range(0..rel_cells.len())], rng.gen_range(-3..=3));
        }
        out.push(omega.evaluate(&s)?);
    }
    Ok(out)
}

/// `ζ = (−1)^{k(n−k)} |ω|^{p−2} ⋆ω / ‖ω‖_p^p` on a fully periodic complex.
pub fn dual_form(x: &MetricComplex, omega: &Cochain<f64>, p: f64) -> Result<DualCochain> {
    let n = x.dimension();
    let k = omega.degree;
    let star = dec::hodge_star(x, omega)?;
    let norm_p = dec::lp_norm_pow(x, omega, p);
    let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
    let pw = dec::pointwise(x, omega);
    let mut values = star.0.values.clone();
    for f in 0..x.num_cells(k) {
        let g = x.half_shift(k, f, true);
        values[g] *= sign * pw.values[f].powf(p - 2.0) / norm_p;
        if pw.values[f] == 0.0 {
            values[g] = 0.0;
        }
    }
    Ok(DualCochain(Cochain::new(n - k, values)))
}

/// Inverse of [`dual_form`]: `ω = |ζ|^{q−2} ⋆ζ / ‖ζ‖_q^q`.
pub fn dual_form_inverse(x: &MetricComplex, zeta: &DualCochain, q: f64) -> Result<Cochain<f64>> {
    let j = zeta.0.degree;
    let star = dec::hodge_star_dual(x, zeta)?;
    let norm_q = dec::lp_norm_pow(x, &zeta.0, q);
    let pw = dec::pointwise(x, &zeta.0);
    let mut values = star.values.clone();
    for g in 0..x.num_cells(j) {
        let f = x.half_shift(j, g, false);
        values[f] *= pw.values[g].powf(q - 2.0) / norm_q;
        if pw.values[g] == 0.0 {
            values[f] = 0.0;
        }
    }
    Ok(Cochain::new(x.dimension() - j, values))
}

/// Report of [`verify_duality`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualityReport {
    pub p: f64,
    pub q: f64,
    pub dmod_p_c: f64,
    pub dmod_q_cprime: f64,
    pub product: f64,
    pub cprime_coordinates: Vec<f64>,
    pub pairing_check: f64,
    pub integerness_gap: f64,
    /// Present when both groups have rank one.
    pub integer_generator_case: bool,
    pub primal: ModulusResult,
    pub dual: ModulusResult,
}

/// Coordinates of the dual class: `a_j = (−1)^{k(n−k)} ∫ ω ∧ φ′_j`.
pub fn identify_dual_class(x: &MetricComplex, omega: &Cochain<f64>, dual_h: &HomologySummary) -> Result<Vec<f64>> {
    let n = x.dimension();
    let k = omega.degree;
    if dual_h.degree + k != n {
        return Err(Error::DegreeMismatch { expected: n - k, found: dual_h.degree });
    }
    let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
    dual_h
        .cocycles
        .iter()
        .map(|phi| dec::cup_pair(x, omega, &phi.map(|&v| v as f64)).map(|v| sign * v))
        .collect()
}

/// Intersection matrix `G_ij = ∫ φ_i ∧ φ′_j` between the two cocycle bases.
pub fn intersection_matrix(x: &MetricComplex, h: &HomologySummary, dual_h: &HomologySummary) -> Result<Vec<Vec<i64>>> {
    h.cocycles
        .iter()
        .map(|a| dual_h.cocycles.iter().map(|b| dec::cup_pair(x, a, b)).collect())
        .collect()
}

/// Minimizes for `c`, identifies `c′`, minimizes for `c′` with the conjugate exponent.
pub fn verify_duality(
    x: &MetricComplex,
    h: &HomologySummary,
    dual_h: &HomologySummary,
    c: &HomologyClass,
    p: f64,
    opts: &DmodOptions,
) -> Result<DualityReport> {
    let q = p / (p - 1.0);
    if dual_h.rel != h.rel.complement() || dual_h.degree + h.degree != x.dimension() {
        return Err(Error::InvalidParameter("dual homology must be H_{n−k}(M, E)".into()));
    }
    let g = intersection_matrix(x, h, dual_h)?;
    let b = h.betti;
    if dual_h.betti != b {
        return Err(Error::SingularPairing);
    }
    let gf: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    // PD(c) = Σ b_j φ′_j with ∫ φ′_j ∧ φ_i = c_i, i.e. (−1)^{k(n−k)} Σ_j G_ij b_j = c_i.
    let k = h.degree;
    let n = x.dimension();
    let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
    let ci: Vec<f64> = c.coords.iter().map(|&v| sign * v as f64).collect();
    let pd = linalg::solve_dense(&gf, &ci).ok_or(Error::SingularPairing)?;

    let primal = minimize_dmod(x, h, c, p, opts)?;
    let a = identify_dual_class(x, &primal.minimizer, dual_h)?;
    let pairing_check = linalg::dot(&pd, &a);
    let integerness_gap = a.iter().fold(0.0f64, |m, v| m.max((v - v.round()).abs()));

    let mut dual = if integerness_gap < 1e-6 {
        let coords: Vec<i64> = a.iter().map(|v| v.round() as i64).collect();
        let cprime = dual_h.class_from_coords(&coords)?;
        minimize_dmod(x, dual_h, &cprime, q, opts)?
    } else {
        minimize_with_coords(x, dual_h, &a, q, opts)?
    };
    dual.class_coords = a.clone();
    let product = primal.value.powf(1.0 / p) * dual.value.powf(1.0 / q);
    Ok(DualityReport {
        p,
        q,
        dmod_p_c: primal.value,
        dmod_q_cprime: dual.value,
        product,
        cprime_coordinates: a,
        pairing_check,
        integerness_gap,
        integer_generator_case: b == 1,
        primal,
        dual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{relative_homology, Ring};
    use crate::mesh::{build_complex, BoundaryRule, GridSpec, Side};

    fn torus(a: f64, b: f64, r: usize) -> (MetricComplex, HomologySummary) {
        let x = build_complex(&GridSpec::new(&[a, b], &[r, r]).all_periodic()).unwrap();
        let h = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        (x, h)
    }

    /// The class winding once along `axis`, read off from a straight loop.
    fn winding_class(x: &MetricComplex, h: &HomologySummary, axis: usize) -> HomologyClass {
        let loop_cells = (0..x.num_cells(1)).filter(|&f| {
            let key = x.cell_key(1, f);
            x.cell_axes(1, f) == [axis] && key.iter().enumerate().all(|(a, &c)| a == axis || c == 0)
        });
        h.class_of(&Chain::from_pairs(1, loop_cells.map(|f| (f, 1)))).unwrap()
    }

    #[test]
    fn torus_closed_form() {
        for &(a, b) in &[(1.0, 1.0), (2.0, 1.0), (3.0, 2.0)] {
            let (x, h) = torus(a, b, 8);
            let c = winding_class(&x, &h, 0);
            for p in [1.5, 2.0, 3.0] {
                let r = minimize_dmod(&x, &h, &c, p, &DmodOptions::default()).unwrap();
                let expect = b * a.powf(1.0 - p);
                assert!(r.converged, "{a} {b} {p}: {:?}", (r.residual, r.initial_gradient));
                assert!((r.value - expect).abs() < 1e-9 * expect, "{a} {b} {p}: {} vs {expect}", r.value);
                for e in &r.certificate_evaluations {
                    assert!((e - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn torus_duality_product() {
        let (x, h) = torus(2.0, 1.0, 8);
        let he = relative_homology(&x, 1, Rel::E, Ring::Integers).unwrap();
        let c = winding_class(&x, &h, 0);
        for p in [1.5, 2.0, 3.0] {
            let r = verify_duality(&x, &h, &he, &c, p, &DmodOptions::default()).unwrap();
            assert!((r.product - 1.0).abs() < 1e-9, "p={p}: {}", r.product);
            assert!((r.pairing_check - 1.0).abs() < 1e-9);
            assert!(r.integerness_gap < 1e-9);
            assert_eq!(r.cprime_coordinates.iter().filter(|v| v.abs() > 0.5).count(), 1);
        }
    }

    #[test]
    fn square_relative_modulus() {
        let spec = GridSpec::new(&[1.0, 1.0], &[6, 6])
            .d_rule(BoundaryRule::Faces(vec![(0, Side::Lower), (0, Side::Upper)]));
        let x = build_complex(&spec).unwrap();
        let h = relative_homology(&x, 1, Rel::D, Ring::Integers).unwrap();
        let he = relative_homology(&x, 1, Rel::E, Ring::Integers).unwrap();
        let c = h.generator_class(0).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let r = verify_duality(&x, &h, &he, &c, p, &DmodOptions::default()).unwrap();
            assert!((r.dmod_p_c - 1.0).abs() < 1e-9);
            assert!((r.product - 1.0).abs() < 1e-9);
            assert!(r.integerness_gap < 1e-9);
        }
    }

    #[test]
    fn dual_form_reciprocity() {
        let (x, h) = torus(2.0, 1.0, 6);
        let c = winding_class(&x, &h, 0);
        for p in [1.5, 2.0, 3.0] {
            let q = p / (p - 1.0);
            let r = minimize_dmod(&x, &h, &c, p, &DmodOptions::default()).unwrap();
            let zeta = dual_form(&x, &r.minimizer, p).unwrap();
            let prod = dec::lp_norm(&x, &r.minimizer, p) * dec::lp_norm(&x, &zeta.0, q);
            assert!((prod - 1.0).abs() < 1e-12);
            let back = dual_form_inverse(&x, &zeta, q).unwrap();
            for (a, b) in back.values.iter().zip(&r.minimizer.values) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_zero_class() {
        let (x, h) = torus(1.0, 1.0, 3);
        let z = h.class_from_coords(&[0, 0]).unwrap();
        assert!(matches!(minimize_dmod(&x, &h, &z, 2.0, &DmodOptions::default()), Err(Error::TorsionClass)));
    }
}
