//! Shortest members of a curve or surface family under a density.

use crate::chain::{Chain, Cochain};
use crate::error::{Error, Result};
use crate::mesh::{MetricComplex, Rel};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    // Reversed for a min-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Measure of a chain under a density: Σ |coef| ρ vol.
pub fn chain_length(x: &MetricComplex, rho: &[f64], sigma: &Chain) -> f64 {
    let vol = x.volume(sigma.degree);
    sigma.iter().map(|(f, c)| c.unsigned_abs() as f64 * rho[f] * vol[f]).sum()
}

/// Relative 1-cycles in a fixed class, searched on the covering graph
/// whose sheets are indexed by the pairings with integer cut cocycles.
#[derive(Clone, Debug)]
pub struct CurveFamily {
    pub rel: Rel,
    cuts: Vec<Vec<i64>>,
    pub target: Vec<i64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    // (tail, head) of each edge
    ends: Vec<(usize, usize)>,
    in_rel_edge: Vec<bool>,
    rel_vertices: Vec<usize>,
    adjacency: Vec<Vec<(usize, i8)>>,
    pub closed_loops: bool,
    loop_sources: Vec<(usize, i8)>,
    representative: Chain,
}

impl CurveFamily {
    /// `slack` widens the winding window beyond the box spanned by 0 and the target.
    pub fn new(x: &MetricComplex, rel: Rel, cuts: &[Cochain<i64>], representative: &Chain, slack: i64) -> Result<Self> {
        if representative.degree != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: representative.degree });
        }
        let ne = x.num_cells(1);
        let mut ends = Vec::with_capacity(ne);
        for f in 0..ne {
            let faces = x.faces(1, f);
            let tail = faces.iter().find(|p| p.1 < 0).map(|p| p.0);
            let head = faces.iter().find(|p| p.1 > 0).map(|p| p.0);
            match (tail, head) {
                (Some(t), Some(h)) => ends.push((t, h)),
                _ => return Err(Error::ResolutionTooCoarse("an edge closes on itself; refine the grid".into())),
            }
        }
        let marks = x.marking(1);
        let in_rel_edge: Vec<bool> = marks.iter().map(|&m| rel.contains(m)).collect();
        let rel_vertices: Vec<usize> = (0..x.num_cells(0)).filter(|&v| rel.contains(x.marking(0)[v])).collect();
        let cut_values: Vec<Vec<i64>> = cuts.iter().map(|c| c.values.clone()).collect();
        for c in &cut_values {
            if c.len() != ne {
                return Err(Error::DegreeMismatch { expected: 1, found: 0 });
            }
        }
        let target: Vec<i64> = cuts.iter().map(|c| c.evaluate(representative)).collect::<Result<_>>()?;
        if target.iter().all(|&t| t == 0) {
            return Err(Error::TorsionClass);
        }
        let lo: Vec<i64> = target.iter().map(|&t| t.min(0) - slack).collect();
        let hi: Vec<i64> = target.iter().map(|&t| t.max(0) + slack).collect();
        let mut adjacency = vec![Vec::new(); x.num_cells(0)];
        for (f, &(t, h)) in ends.iter().enumerate() {
            adjacency[t].push((f, 1));
            adjacency[h].push((f, -1));
        }

        // Closed loops can only lie in the class if no cut with nonzero target is exact.
        let exact = |c: &[i64]| -> bool {
            let mut pot: Vec<Option<i64>> = vec![None; x.num_cells(0)];
            for s in 0..x.num_cells(0) {
                if pot[s].is_some() {
                    continue;
                }
                pot[s] = Some(0);
                let mut queue = VecDeque::from([s]);
                while let Some(v) = queue.pop_front() {
                    let pv = pot[v].unwrap();
                    for &(f, dir) in &adjacency[v] {
                        let (t, h) = ends[f];
                        let (w, pw) = if dir > 0 { (h, pv + c[f]) } else { (t, pv - c[f]) };
                        match pot[w] {
                            None => {
                                pot[w] = Some(pw);
                                queue.push_back(w);
                            }
                            Some(q) if q != pw => return false,
                            _ => {}
                        }
                    }
                }
            }
            true
        };
        let closed_loops = rel_vertices.is_empty()
            || !cut_values.iter().zip(&target).any(|(c, &t)| t != 0 && exact(c));
        // Every loop in the class crosses the smallest relevant cut in the target's direction.
        let mut loop_sources = Vec::new();
        if closed_loops {
            let j = (0..cuts.len())
                .filter(|&j| target[j] != 0)
                .min_by_key(|&j| cut_values[j].iter().filter(|&&v| v != 0).count())
                .unwrap();
            for (f, &v) in cut_values[j].iter().enumerate() {
                if v != 0 && !in_rel_edge[f] {
                    let dir = if (v > 0) == (target[j] > 0) { 1 } else { -1 };
                    loop_sources.push((f, dir));
                }
            }
        }
        Ok(CurveFamily {
            rel,
            cuts: cut_values,
            target,
            lo,
            hi,
            ends,
            in_rel_edge,
            rel_vertices,
            adjacency,
            closed_loops,
            loop_sources,
            representative: representative.clone(),
        })
    }

    fn sheets(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l + 1) as usize).product()
    }

    fn encode(&self, w: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for j in 0..w.len() {
            if w[j] < self.lo[j] || w[j] > self.hi[j] {
                return None;
            }
            idx = idx * (self.hi[j] - self.lo[j] + 1) as usize + (w[j] - self.lo[j]) as usize;
        }
        Some(idx)
    }

    fn decode(&self, mut idx: usize) -> Vec<i64> {
        let mut w = vec![0; self.lo.len()];
        for j in (0..w.len()).rev() {
            let span = (self.hi[j] - self.lo[j] + 1) as usize;
            w[j] = self.lo[j] + (idx % span) as i64;
            idx /= span;
        }
        w
    }

    /// Dijkstra on the cover; returns walks (as chains) reaching target states below `bound`.
    fn search(
        &self,
        weights: &[f64],
        starts: &[(usize, usize, f64, Option<(usize, i8)>)],
        is_target: &dyn Fn(usize) -> bool,
        bound: f64,
        first_only: bool,
    ) -> Vec<(f64, Chain)> {
        let sheets = self.sheets();
        let nstates = self.adjacency.len() * sheets;
        let mut dist = vec![f64::INFINITY; nstates];
        let mut pred: Vec<Option<(usize, usize, i8)>> = vec![None; nstates];
        let mut heap = BinaryHeap::new();
        let mut first_edge = vec![None; nstates];
        for &(v, sheet, d, edge) in starts {
            let s = v * sheets + sheet;
            if d < dist[s] {
                dist[s] = d;
                first_edge[s] = edge;
                heap.push(Dist(d, s));
            }
        }
        let mut found = Vec::new();
        while let Some(Dist(d, s)) = heap.pop() {
            if d > dist[s] {
                continue;
            }
            if d > bound {
                break;
            }
            let v = s / sheets;
            let w = self.decode(s % sheets);
            if is_target(s) {
                let mut chain = Chain::zero(1);
                let mut cur = s;
                loop {
                    if let Some((prev, f, dir)) = pred[cur] {
                        if !self.in_rel_edge[f] {
                            chain.add(f, dir as i64);
                        }
                        cur = prev;
                    } else {
                        if let Some((f, dir)) = first_edge[cur] {
                            chain.add(f, dir as i64);
                        }
                        break;
                    }
                }
                found.push((d, chain));
                if first_only {
                    break;
                }
                continue;
            }
            for &(f, dir) in &self.adjacency[v] {
                let (t, h) = self.ends[f];
                let u = if dir > 0 { h } else { t };
                let mut wn = w.clone();
                for (j, c) in self.cuts.iter().enumerate() {
                    wn[j] += dir as i64 * c[f];
                }
                let Some(sheet) = self.encode(&wn) else { continue };
                let ns = u * sheets + sheet;
                let nd = d + weights[f];
                if nd < dist[ns] {
                    dist[ns] = nd;
                    pred[ns] = Some((s, f, dir));
                    heap.push(Dist(nd, ns));
                }
            }
        }
        found
    }

    fn weights(&self, x: &MetricComplex, rho: &[f64]) -> Vec<f64> {
        let vol = x.volume(1);
        (0..rho.len()).map(|f| if self.in_rel_edge[f] { 0.0 } else { rho[f].max(0.0) * vol[f] }).collect()
    }

    /// Minimum length over the family, with members shorter than `threshold`.
    pub fn shortest(&self, x: &MetricComplex, rho: &[f64], threshold: f64, max_members: usize) -> Result<OracleResult> {
        let weights = self.weights(x, rho);
        let zero = self.encode(&vec![0; self.lo.len()]).unwrap();
        let tsheet = self.encode(&self.target).unwrap();
        let sheets = self.sheets();
        let mut members: Vec<(f64, Chain)> = Vec::new();
        let mut best = f64::INFINITY;
        // Representative length bounds the search from above.
        let hint = chain_length(x, rho, &self.representative);

        if !self.rel_vertices.is_empty() {
            let starts: Vec<_> = self.rel_vertices.iter().map(|&v| (v, zero, 0.0, None)).collect();
            let targets: std::collections::HashSet<usize> =
                self.rel_vertices.iter().map(|&v| v * sheets + tsheet).collect();
            let found = self.search(&weights, &starts, &|s| targets.contains(&s), threshold.max(hint) * (1.0 + 1e-12), false);
            for (d, c) in found {
                best = best.min(d);
                members.push((d, c));
            }
            if members.is_empty() {
                // Nothing under the bound: rerun for the true minimum.
                let found = self.search(&weights, &starts, &|s| targets.contains(&s), f64::INFINITY, true);
                for (d, c) in found {
                    best = best.min(d);
                    members.push((d, c));
                }
            }
        }
        if self.closed_loops {
            let run = |&(f, dir): &(usize, i8), bound: f64| -> Option<(f64, Chain)> {
                let (t, h) = self.ends[f];
                let (from, to) = if dir > 0 { (t, h) } else { (h, t) };
                let w0: Vec<i64> = self.cuts.iter().map(|c| dir as i64 * c[f]).collect();
                let sheet = self.encode(&w0)?;
                let target = from * sheets + tsheet;
                self.search(&weights, &[(to, sheet, weights[f], Some((f, dir)))], &|s| s == target, bound, true)
                    .into_iter()
                    .next()
            };
            let first = self.loop_sources.first().and_then(|s| run(s, f64::INFINITY));
            if let Some((d, c)) = first {
                best = best.min(d);
                members.push((d, c));
            }
            let bound = if best.is_finite() { best.max(threshold) } else { f64::INFINITY };
            let rest: Vec<(f64, Chain)> = self.loop_sources[1.min(self.loop_sources.len())..]
                .par_iter()
                .filter_map(|s| run(s, bound * (1.0 + 1e-12)))
                .collect();
            for (d, c) in rest {
                best = best.min(d);
                members.push((d, c));
            }
        }
        if !best.is_finite() {
            return Err(Error::Disconnected);
        }
        finish(x, rho, members, best, threshold, max_members)
    }
}

fn finish(
    x: &MetricComplex,
    rho: &[f64],
    members: Vec<(f64, Chain)>,
    walk_min: f64,
    threshold: f64,
    max_members: usize,
) -> Result<OracleResult> {
    let mut scored: Vec<(f64, Chain)> = members
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(_, c)| (chain_length(x, rho, &c), c))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.dedup_by(|a, b| a.1 == b.1);
    let min_length = scored.first().map_or(walk_min, |m| m.0.min(walk_min));
    let minimizer = scored.first().map(|m| m.1.clone());
    let mut members: Vec<(f64, Chain)> = scored.into_iter().filter(|m| m.0 < threshold).collect();
    members.truncate(max_members);
    Ok(OracleResult { min_length, minimizer, members })
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Lower bound on the length of every member (exact under the search window).
    pub min_length: f64,
    pub minimizer: Option<Chain>,
    /// Members shorter than the requested threshold, shortest first.
    pub members: Vec<(f64, Chain)>,
}

/// Relative codimension-one cycles homologous to a fixed representative,
/// `a + ∂u` with integer labels `u` on top cells in `[−window, window]`.
#[derive(Clone, Debug)]
pub struct SurfaceFamily {
    pub rel: Rel,
    pub window: i64,
    degree: usize,
    // per free face: (face, cell, other cell or None for the fixed outside, sign, b)
    terms: Vec<(usize, usize, Option<usize>, i64, i64)>,
    ntop: usize,
}

impl SurfaceFamily {
    pub fn new(x: &MetricComplex, rel: Rel, representative: &Chain, window: i64) -> Result<Self> {
        let n = x.dimension();
        if representative.degree + 1 != n {
            return Err(Error::UnsupportedClass(format!(
                "surface search needs degree {}, got {}",
                n - 1,
                representative.degree
            )));
        }
        if window < 1 {
            return Err(Error::InvalidParameter("label window must be at least 1".into()));
        }
        let k = n - 1;
        let mut a = vec![0i64; x.num_cells(k)];
        for (f, c) in representative.iter() {
            a[f] = c;
        }
        let marks = x.marking(k);
        let mut terms = Vec::new();
        for f in 0..x.num_cells(k) {
            if rel.contains(marks[f]) {
                continue;
            }
            let cof = x.cofaces(k, f);
            match cof {
                [(i, si)] => terms.push((f, *i, None, *si as i64, *si as i64 * a[f])),
                [(i, si), (j, sj)] if si + sj == 0 => terms.push((f, *i, Some(*j), *si as i64, *si as i64 * a[f])),
                _ => {
                    return Err(Error::UnsupportedClass(
                        "surface search needs a coherently oriented complex".into(),
                    ))
                }
            }
        }
        Ok(SurfaceFamily { rel, window, degree: k, terms, ntop: x.num_cells(n) })
    }

    fn min_cut(&self, weights: &[f64]) -> (f64, Vec<i64>) {
        let w = self.window;
        let levels = (2 * w) as usize;
        let src = self.ntop * levels;
        let snk = src + 1;
        let mut g = Dinic::new(snk + 1);
        // Indicator [u_i ≥ l] as a node or a constant.
        enum Ind {
            Node(usize),
            One,
            Zero,
        }
        let ind = |cell: Option<usize>, l: i64| -> Ind {
            let lo = if cell.is_some() { -w } else { 0 };
            let hi = if cell.is_some() { w } else { 0 };
            if l <= lo {
                Ind::One
            } else if l > hi {
                Ind::Zero
            } else {
                Ind::Node(cell.unwrap() * levels + (l + w - 1) as usize)
            }
        };
        for i in 0..self.ntop {
            for l in 1..levels {
                g.add_edge(i * levels + l, i * levels + l - 1, f64::INFINITY, 0.0);
            }
        }
        let mut offset = 0.0;
        for &(f, i, j, _, b) in &self.terms {
            let wt = weights[f];
            if wt <= 0.0 {
                continue;
            }
            // |b + u_i − u_j| = Σ_l |[u_i ≥ l − b] − [u_j ≥ l]|
            for l in (-w - b.abs() - 1)..=(w + b.abs() + 1) {
                match (ind(Some(i), l - b), ind(j, l)) {
                    (Ind::Node(p), Ind::Node(q)) => g.add_edge(p, q, wt, wt),
                    (Ind::Node(p), Ind::One) | (Ind::One, Ind::Node(p)) => g.add_edge(src, p, wt, 0.0),
                    (Ind::Node(p), Ind::Zero) | (Ind::Zero, Ind::Node(p)) => g.add_edge(p, snk, wt, 0.0),
                    (Ind::One, Ind::Zero) | (Ind::Zero, Ind::One) => offset += wt,
                    _ => {}
                }
            }
        }
        let flow = g.max_flow(src, snk);
        let side = g.source_side(src);
        let labels = (0..self.ntop)
            .map(|i| -w + (0..levels).filter(|&l| side[i * levels + l]).count() as i64)
            .collect();
        (flow + offset, labels)
    }

    // Chain value on a face: a + s_i (u_i − u_j) = s_i (b + u_i − u_j).
    fn surface(&self, labels: &[i64]) -> Chain {
        let mut c = Chain::zero(self.degree);
        for &(f, i, j, si, b) in &self.terms {
            let v = b + labels[i] - j.map_or(0, |j| labels[j]);
            if v != 0 {
                c.add(f, si * v);
            }
        }
        c
    }

    /// Minimum length over the family; extra members come from reweighting found ones.
    pub fn shortest(&self, x: &MetricComplex, rho: &[f64], threshold: f64, max_members: usize) -> Result<OracleResult> {
        let vol = x.volume(self.degree);
        let mut weights: Vec<f64> = (0..rho.len()).map(|f| rho[f].max(0.0) * vol[f]).collect();
        let mut members = Vec::new();
        let mut best = f64::INFINITY;
        for round in 0..max_members.max(1) {
            let (value, labels) = self.min_cut(&weights);
            let chain = self.surface(&labels);
            if round == 0 {
                best = value;
            }
            let len = chain_length(x, rho, &chain);
            if round > 0 && len >= threshold {
                break;
            }
            let big = weights.iter().cloned().fold(0.0, f64::max) * 1e3 + 1.0;
            for (f, _) in chain.iter() {
                weights[f] += big;
            }
            members.push((len, chain));
        }
        finish(x, rho, members, best, threshold, max_members)
    }
}

/// Dinic max flow on f64 capacities.
struct Dinic {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    next: Vec<usize>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic { head: vec![NIL; n], to: Vec::new(), cap: Vec::new(), next: Vec::new(), level: vec![0; n], iter: vec![0; n] }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: f64, rc: f64) {
        for (a, b, cc) in [(u, v, c), (v, u, rc)] {
            self.to.push(b);
            self.cap.push(cc);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > 1e-15 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
                e = self.next[e];
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, s: usize, t: usize, limit: f64) -> f64 {
        // Iterative augmenting search along the level graph.
        let mut stack: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let mut f = limit;
                for &e in &stack {
                    f = f.min(self.cap[e]);
                }
                for &e in &stack {
                    self.cap[e] -= f;
                    self.cap[e ^ 1] += f;
                }
                return f;
            }
            let mut advanced = false;
            while self.iter[u] != NIL {
                let e = self.iter[u];
                let v = self.to[e];
                if self.cap[e] > 1e-15 && self.level[v] == self.level[u] + 1 {
                    stack.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                self.iter[u] = self.next[e];
            }
            if !advanced {
                if u == s {
                    return 0.0;
                }
                self.level[u] = -1;
                let e = stack.pop().unwrap();
                u = self.to[e ^ 1];
                self.iter[u] = self.next[self.iter[u]];
            }
        }
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.iter.clone_from(&self.head);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > 1e-15 && !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
                e = self.next[e];
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::is_relative_cycle;
    use crate::scenes;

    #[test]
    fn torus_shortest_loop_is_straight() {
        let s = scenes::flat_torus(&[2.0, 1.0], &[8, 4]).unwrap();
        let x = &s.complex;
        let fc = s.class("axis0").unwrap();
        let fam = CurveFamily::new(x, Rel::D, &s.cuts[&Rel::D], &fc.representative, 0).unwrap();
        let rho = vec![1.0; x.num_cells(1)];
        let r = fam.shortest(x, &rho, 1e9, 100).unwrap();
        assert!((r.min_length - 2.0).abs() < 1e-12);
        let m = r.minimizer.unwrap();
        assert!(is_relative_cycle(x, &m, Rel::D));
        // Every straight x-loop is found (one per row).
        let straight = r.members.iter().filter(|(l, _)| (*l - 2.0).abs() < 1e-12).count();
        assert!(straight >= 4);
    }

    #[test]
    fn square_paths_cross_between_sides() {
        let s = scenes::lohvansuu_cube(2, 1, 6).unwrap();
        let x = &s.complex;
        let fam = CurveFamily::new(x, Rel::D, &s.cuts[&Rel::D], &s.class("c").unwrap().representative, 0).unwrap();
        assert!(!fam.closed_loops);
        let r = fam.shortest(x, &vec![1.0; x.num_cells(1)], 1.5, 100).unwrap();
        assert!((r.min_length - 1.0).abs() < 1e-12);
        assert_eq!(r.members.len(), 7);
    }

    #[test]
    fn cube_min_cut_surface() {
        let s = scenes::lohvansuu_cube(3, 1, 4).unwrap();
        let x = &s.complex;
        let fc = s.class("cprime").unwrap();
        let fam = SurfaceFamily::new(x, Rel::E, &fc.representative, 1).unwrap();
        let mut rho = vec![1.0; x.num_cells(2)];
        // Make one slice cheap; the cut must move onto it.
        let cheap = scenes::axis_chain(x, &[1, 2], &[(0, 2)]);
        for (f, _) in cheap.iter() {
            rho[f] = 0.25;
        }
        let r = fam.shortest(x, &rho, 0.9, 3).unwrap();
        assert!((r.min_length - 0.25).abs() < 1e-12, "{}", r.min_length);
        let m = r.minimizer.unwrap();
        assert!(is_relative_cycle(x, &m, Rel::E));
        assert_eq!(m.len(), cheap.len());
    }

    #[test]
    fn handle_density_is_admissible() {
        let s = scenes::freedman_he(0.25, 8, 4, true).unwrap();
        let x = &s.complex;
        let fam = CurveFamily::new(x, Rel::D, &s.cuts[&Rel::D], &s.class("c").unwrap().representative, 0).unwrap();
        let rho = &s.seeds["c"].values;
        let r = fam.shortest(x, rho, 0.0, 1).unwrap();
        assert!(r.min_length >= 1.0 - 1e-12, "{}", r.min_length);
    }
}
