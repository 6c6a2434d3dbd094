//! Metric cubical complexes built from structured grids.
//!
//! Cells are addressed by *doubled coordinates*: along each axis an even
//! value `2v` is the grid point `v` and an odd value `2i + 1` is the interval
//! `[i, i + 1]`. A k-cell has exactly k odd coordinates. Periodic and twisted
//! identifications are resolved by canonicalizing the upper end of an axis
//! onto the lower end, which may flip the orientation of the cell.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

/// How the two ends of one grid axis are glued.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identification {
    None,
    Periodic,
    /// Periodic gluing composed with a reflection of the listed axes.
    /// Reflecting two axes is a 180° rotation of the cross-section.
    Twisted { reflect: Vec<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

/// Which boundary faces form `D`; the remaining boundary faces form `E`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    Empty,
    All,
    /// Grid-boundary faces normal to `axis` on the given side.
    Faces(Vec<(usize, Side)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marking {
    Interior,
    BoundaryD,
    BoundaryE,
    /// Lies in the closure of both `D` and `E`.
    BoundaryCorner,
}

impl Marking {
    /// Membership in the closed subcomplex `D` (corners included).
    pub fn in_d(self) -> bool {
        matches!(self, Marking::BoundaryD | Marking::BoundaryCorner)
    }

    /// Membership in the closed subcomplex `E` (corners included).
    pub fn in_e(self) -> bool {
        matches!(self, Marking::BoundaryE | Marking::BoundaryCorner)
    }
}

/// Selects one of the two boundary subcomplexes a relative group is taken against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rel {
    D,
    E,
}

impl Rel {
    pub fn complement(self) -> Rel {
        match self {
            Rel::D => Rel::E,
            Rel::E => Rel::D,
        }
    }

    pub fn contains(self, m: Marking) -> bool {
        match self {
            Rel::D => m.in_d(),
            Rel::E => m.in_e(),
        }
    }
}

/// Input to [`build_complex`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lengths: Vec<f64>,
    pub resolution: Vec<usize>,
    pub origin: Vec<f64>,
    pub identification: Vec<Identification>,
    /// Row-major mask over top cells (last axis fastest); `None` keeps all.
    pub active: Option<Vec<bool>>,
    pub d_rule: BoundaryRule,
}

impl GridSpec {
    pub fn new(lengths: &[f64], resolution: &[usize]) -> Self {
        let n = lengths.len();
        GridSpec {
            lengths: lengths.to_vec(),
            resolution: resolution.to_vec(),
            origin: vec![0.0; n],
            identification: vec![Identification::None; n],
            active: None,
            d_rule: BoundaryRule::Empty,
        }
    }

    pub fn periodic(mut self, axis: usize) -> Self {
        self.identification[axis] = Identification::Periodic;
        self
    }

    pub fn all_periodic(mut self) -> Self {
        for id in &mut self.identification {
            *id = Identification::Periodic;
        }
        self
    }

    pub fn twisted(mut self, axis: usize, reflect: &[usize]) -> Self {
        self.identification[axis] = Identification::Twisted { reflect: reflect.to_vec() };
        self
    }

    pub fn origin(mut self, origin: &[f64]) -> Self {
        self.origin = origin.to_vec();
        self
    }

    pub fn d_rule(mut self, rule: BoundaryRule) -> Self {
        self.d_rule = rule;
        self
    }

    /// Keeps the top cell with grid index `idx` iff `keep(idx)`.
    pub fn with_active<F: Fn(&[usize]) -> bool>(mut self, keep: F) -> Self {
        let total: usize = self.resolution.iter().product();
        let mut mask = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.resolution.len()];
        for _ in 0..total {
            mask.push(keep(&idx));
            increment(&mut idx, &self.resolution);
        }
        self.active = Some(mask);
        self
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.lengths
            .iter()
            .zip(&self.resolution)
            .map(|(l, &r)| l / r as f64)
            .collect()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.resolution).fold(0, |acc, (&i, &r)| acc * r + i)
    }

    fn is_active(&self, idx: &[usize]) -> bool {
        match &self.active {
            None => true,
            Some(mask) => mask[self.flat_index(idx)],
        }
    }

    fn is_fully_periodic(&self) -> bool {
        self.identification.iter().all(|i| *i == Identification::Periodic)
            && self.active.as_ref().map_or(true, |m| m.iter().all(|&b| b))
    }
}

fn increment(idx: &mut [usize], bounds: &[usize]) {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < bounds[a] {
            return;
        }
        idx[a] = 0;
    }
}

pub type CellKey = Vec<u32>;

/// Signed incidence: `(cell id, coefficient)`.
pub type Incidence = Vec<(usize, i32)>;

/// An immutable metric cubical complex with its `D`/`E` boundary marking.
#[derive(Clone, Debug)]
pub struct MetricComplex {
    spec: GridSpec,
    spacing: Vec<f64>,
    cells: Vec<Vec<CellKey>>,
    lookup: Vec<HashMap<CellKey, usize>>,
    /// `faces[k][f]` is the boundary of k-cell `f`; empty for k = 0.
    faces: Vec<Vec<Incidence>>,
    /// `cofaces[k][f]` lists the (k+1)-cells having `f` in their boundary.
    cofaces: Vec<Vec<Incidence>>,
    volume: Vec<Vec<f64>>,
    mass: Vec<Vec<f64>>,
    marking: Vec<Vec<Marking>>,
}

/// Builds a complex from a grid description.
pub fn build_complex(spec: &GridSpec) -> Result<MetricComplex> {
    let n = spec.dimension();
    if n == 0 || spec.resolution.len() != n || spec.identification.len() != n || spec.origin.len() != n {
        return Err(Error::InvalidParameter("grid spec arrays must share one positive length".into()));
    }
    if spec.resolution.iter().any(|&r| r == 0) {
        return Err(Error::InvalidParameter("resolutions must be at least 1".into()));
    }
    if spec.lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("axis lengths must be positive and finite".into()));
    }
    if let Some(mask) = &spec.active {
        if mask.len() != spec.resolution.iter().product::<usize>() {
            return Err(Error::InvalidParameter("active mask has the wrong length".into()));
        }
    }
    validate_identifications(spec)?;

    let spacing = spec.spacing();
    let canon = Canonicalizer::new(spec);

    // Enumerate every face of every active top cell.
    let mut keys: Vec<BTreeSet<CellKey>> = vec![BTreeSet::new(); n + 1];
    let mut top_cells = Vec::new();
    let total: usize = spec.resolution.iter().product();
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        if spec.is_active(&idx) {
            let key: CellKey = idx.iter().map(|&i| 2 * i as u32 + 1).collect();
            top_cells.push(key);
        }
        increment(&mut idx, &spec.resolution);
    }
    if top_cells.is_empty() {
        return Err(Error::EmptyComplex);
    }
    for top in &top_cells {
        for_each_subface(top, |face| {
            let (key, _) = canon.canonical(face);
            let k = key.iter().filter(|&&c| c % 2 == 1).count();
            keys[k].insert(key);
        });
    }

    let cells: Vec<Vec<CellKey>> = keys.into_iter().map(|s| s.into_iter().collect()).collect();
    let lookup: Vec<HashMap<CellKey, usize>> = cells
        .iter()
        .map(|list| list.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect())
        .collect();

    let mut faces: Vec<Vec<Incidence>> = vec![Vec::new(); n + 1];
    faces[0] = vec![Vec::new(); cells[0].len()];
    for k in 1..=n {
        faces[k] = cells[k]
            .iter()
            .map(|key| {
                let mut inc: Vec<(usize, i32)> = Vec::new();
                for (face, sign) in raw_boundary(key) {
                    let (fk, s) = canon.canonical(&face);
                    let id = *lookup[k - 1]
                        .get(&fk)
                        .expect("face of an enumerated cell must be enumerated");
                    inc.push((id, sign * s));
                }
                merge_incidence(inc)
            })
            .collect();
    }
    let cofaces = transpose_incidence(&faces, &cells);

    let complex_unmarked = |cofaces: &Vec<Vec<Incidence>>| -> Result<()> {
        for k in 2..=n {
            for (cell, inc) in faces[k].iter().enumerate() {
                let mut acc: HashMap<usize, i64> = HashMap::new();
                for &(f, s) in inc {
                    for &(g, t) in &faces[k - 1][f] {
                        *acc.entry(g).or_insert(0) += (s * t) as i64;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return Err(Error::InvalidGluing(format!(
                        "boundary of boundary is nonzero on {k}-cell {cell}"
                    )));
                }
            }
        }
        let _ = cofaces;
        Ok(())
    };
    complex_unmarked(&cofaces)?;

    let volume: Vec<Vec<f64>> = cells
        .iter()
        .map(|list| list.iter().map(|key| cell_volume(key, &spacing)).collect())
        .collect();

    // Mass: each top cell spreads its volume evenly over its 2^{n-k} k-faces of
    // every axis pattern.
    let mut mass: Vec<Vec<f64>> = cells.iter().map(|l| vec![0.0; l.len()]).collect();
    let mut face_count = vec![0usize; cells[n - 1].len()];
    for top in &top_cells {
        let vol = cell_volume(top, &spacing);
        for_each_subface(top, |face| {
            let (key, _) = canon.canonical(face);
            let k = key.iter().filter(|&&c| c % 2 == 1).count();
            let id = lookup[k][&key];
            mass[k][id] += vol / (1u64 << (n - k)) as f64;
        });
        for (face, _) in raw_boundary(top) {
            let (key, _) = canon.canonical(&face);
            face_count[lookup[n - 1][&key]] += 1;
        }
    }

    let marking = compute_marking(spec, &cells, &faces, &face_count);

    Ok(MetricComplex { spec: spec.clone(), spacing, cells, lookup, faces, cofaces, volume, mass, marking })
}

fn validate_identifications(spec: &GridSpec) -> Result<()> {
    let n = spec.dimension();
    let twisted: Vec<usize> = (0..n)
        .filter(|&a| matches!(spec.identification[a], Identification::Twisted { .. }))
        .collect();
    if twisted.len() > 1 {
        return Err(Error::InvalidGluing("at most one twisted axis is supported".into()));
    }
    for &t in &twisted {
        let Identification::Twisted { reflect } = &spec.identification[t] else { unreachable!() };
        if reflect.iter().any(|&r| r >= n || r == t) {
            return Err(Error::InvalidGluing("twist reflects an invalid axis".into()));
        }
        // The last slice must glue onto the reflected first slice cell-for-cell.
        let nt = spec.resolution[t];
        let total: usize = spec.resolution.iter().product();
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            if idx[t] == nt - 1 {
                let mut image = idx.clone();
                image[t] = 0;
                for &r in reflect {
                    image[r] = spec.resolution[r] - 1 - idx[r];
                }
                if spec.is_active(&idx) != spec.is_active(&image) {
                    return Err(Error::InvalidGluing(
                        "cross-section is not symmetric under the twist map".into(),
                    ));
                }
            }
            increment(&mut idx, &spec.resolution);
        }
    }
    Ok(())
}

/// Resolves identifications, mapping any doubled coordinate vector to its
/// canonical representative and the induced orientation sign.
#[derive(Clone, Debug)]
struct Canonicalizer {
    twice: Vec<u32>,
    identification: Vec<Identification>,
}

impl Canonicalizer {
    fn new(spec: &GridSpec) -> Self {
        Canonicalizer {
            twice: spec.resolution.iter().map(|&r| 2 * r as u32).collect(),
            identification: spec.identification.clone(),
        }
    }

    fn canonical(&self, key: &[u32]) -> (CellKey, i32) {
        let mut c = key.to_vec();
        let mut sign = 1;
        for (a, id) in self.identification.iter().enumerate() {
            if let Identification::Twisted { reflect } = id {
                if c[a] == self.twice[a] {
                    c[a] = 0;
                    for &r in reflect {
                        c[r] = self.twice[r] - c[r];
                        if c[r] % 2 == 1 {
                            sign = -sign;
                        }
                    }
                }
            }
        }
        for (a, id) in self.identification.iter().enumerate() {
            if *id != Identification::None && c[a] == self.twice[a] {
                c[a] = 0;
            }
        }
        (c, sign)
    }
}

/// Signed faces of a cell before identification:
/// `∂ = Σ_m (-1)^m (upper_m − lower_m)` over its interval axes in increasing order.
fn raw_boundary(key: &[u32]) -> Vec<(CellKey, i32)> {
    let mut out = Vec::new();
    let mut m = 0;
    for a in 0..key.len() {
        if key[a] % 2 == 1 {
            let sign = if m % 2 == 0 { 1 } else { -1 };
            let mut lower = key.to_vec();
            lower[a] -= 1;
            let mut upper = key.to_vec();
            upper[a] += 1;
            out.push((upper, sign));
            out.push((lower, -sign));
            m += 1;
        }
    }
    out
}

/// Visits all 3^k faces (including the cell itself) of a cell, unreduced.
fn for_each_subface<F: FnMut(&[u32])>(key: &[u32], mut visit: F) {
    let odd: Vec<usize> = (0..key.len()).filter(|&a| key[a] % 2 == 1).collect();
    let count = 3usize.pow(odd.len() as u32);
    let mut face = key.to_vec();
    for code in 0..count {
        let mut rest = code;
        for &a in &odd {
            face[a] = match rest % 3 {
                0 => key[a],
                1 => key[a] - 1,
                _ => key[a] + 1,
            };
            rest /= 3;
        }
        visit(&face);
    }
}

fn merge_incidence(mut inc: Vec<(usize, i32)>) -> Incidence {
    inc.sort_by_key(|e| e.0);
    let mut out: Incidence = Vec::with_capacity(inc.len());
    for (id, s) in inc {
        match out.last_mut() {
            Some(last) if last.0 == id => last.1 += s,
            _ => out.push((id, s)),
        }
    }
    out.retain(|e| e.1 != 0);
    out
}

fn transpose_incidence(faces: &[Vec<Incidence>], cells: &[Vec<CellKey>]) -> Vec<Vec<Incidence>> {
    let n = cells.len() - 1;
    let mut cofaces: Vec<Vec<Incidence>> = cells.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    for k in 1..=n {
        for (cell, inc) in faces[k].iter().enumerate() {
            for &(f, s) in inc {
                cofaces[k - 1][f].push((cell, s));
            }
        }
    }
    cofaces
}

fn cell_volume(key: &[u32], spacing: &[f64]) -> f64 {
    key.iter()
        .zip(spacing)
        .filter(|(c, _)| *c % 2 == 1)
        .map(|(_, h)| h)
        .product()
}

fn compute_marking(
    spec: &GridSpec,
    cells: &[Vec<CellKey>],
    faces: &[Vec<Incidence>],
    face_count: &[usize],
) -> Vec<Vec<Marking>> {
    let n = spec.dimension();
    let mut in_d: Vec<Vec<bool>> = cells.iter().map(|l| vec![false; l.len()]).collect();
    let mut in_e = in_d.clone();
    for (f, key) in cells[n - 1].iter().enumerate() {
        if face_count[f] != 1 {
            continue;
        }
        let normal = (0..n).find(|&a| key[a] % 2 == 0).expect("codimension-one face has a normal axis");
        let is_d = match &spec.d_rule {
            BoundaryRule::Empty => false,
            BoundaryRule::All => true,
            BoundaryRule::Faces(list) => list.iter().any(|&(axis, side)| {
                axis == normal
                    && match side {
                        Side::Lower => key[axis] == 0,
                        Side::Upper => key[axis] == 2 * spec.resolution[axis] as u32,
                    }
            }),
        };
        if is_d {
            in_d[n - 1][f] = true;
        } else {
            in_e[n - 1][f] = true;
        }
    }
    for flags in [&mut in_d, &mut in_e] {
        for k in (1..n).rev() {
            for f in 0..cells[k].len() {
                if flags[k][f] {
                    for &(g, _) in &faces[k][f] {
                        flags[k - 1][g] = true;
                    }
                }
            }
        }
    }
    (0..=n)
        .map(|k| {
            (0..cells[k].len())
                .map(|f| match (in_d[k][f], in_e[k][f]) {
                    (false, false) => Marking::Interior,
                    (true, false) => Marking::BoundaryD,
                    (false, true) => Marking::BoundaryE,
                    (true, true) => Marking::BoundaryCorner,
                })
                .collect()
        })
        .collect()
}

impl MetricComplex {
    pub fn dimension(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn num_cells(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, |c| c.len())
    }

    pub fn cell_key(&self, k: usize, id: usize) -> &[u32] {
        &self.cells[k][id]
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dimension())
            .map(|k| if k % 2 == 0 { self.num_cells(k) as i64 } else { -(self.num_cells(k) as i64) })
            .sum()
    }

    /// Boundary of a single k-cell as signed (k−1)-cell incidences.
    pub fn faces(&self, k: usize, id: usize) -> &[(usize, i32)] {
        &self.faces[k][id]
    }

    pub fn cofaces(&self, k: usize, id: usize) -> &[(usize, i32)] {
        &self.cofaces[k][id]
    }

    pub fn volume(&self, k: usize) -> &[f64] {
        &self.volume[k]
    }

    pub fn marking(&self, k: usize) -> &[Marking] {
        &self.marking[k]
    }

    pub fn total_volume(&self) -> f64 {
        self.volume[self.dimension()].iter().sum()
    }

    /// Axes along which a cell extends, in increasing order.
    pub fn cell_axes(&self, k: usize, id: usize) -> Vec<usize> {
        let key = &self.cells[k][id];
        (0..key.len()).filter(|&a| key[a] % 2 == 1).collect()
    }

    /// Canonical id and orientation sign of the cell with the given doubled
    /// coordinates, if it belongs to the complex.
    pub fn locate(&self, key: &[u32]) -> Option<(usize, i32)> {
        if key.len() != self.dimension() {
            return None;
        }
        let twice: Vec<u32> = self.spec.resolution.iter().map(|&r| 2 * r as u32).collect();
        if key.iter().zip(&twice).any(|(c, t)| c > t) {
            return None;
        }
        let (c, s) = Canonicalizer::new(&self.spec).canonical(key);
        let k = c.iter().filter(|&&v| v % 2 == 1).count();
        self.lookup[k].get(&c).map(|&id| (id, s))
    }

    /// Physical coordinates of a vertex (for reporting).
    pub fn vertex_position(&self, id: usize) -> Vec<f64> {
        self.cells[0][id]
            .iter()
            .zip(&self.spacing)
            .zip(&self.spec.origin)
            .map(|((&c, h), o)| o + c as f64 * 0.5 * h)
            .collect()
    }

    /// Corner vertices of a cell.
    pub fn cell_vertices(&self, k: usize, id: usize) -> Vec<usize> {
        let key = &self.cells[k][id];
        let odd: Vec<usize> = (0..key.len()).filter(|&a| key[a] % 2 == 1).collect();
        let mut out = Vec::with_capacity(1 << odd.len());
        for code in 0..(1usize << odd.len()) {
            let mut v = key.clone();
            for (bit, &a) in odd.iter().enumerate() {
                v[a] = if code >> bit & 1 == 1 { key[a] + 1 } else { key[a] - 1 };
            }
            let (vid, _) = self.locate(&v).expect("corner vertex exists");
            out.push(vid);
        }
        out
    }

    /// Cell center in physical coordinates.
    pub fn cell_center(&self, k: usize, id: usize) -> Vec<f64> {
        self.cells[k][id]
            .iter()
            .zip(&self.spacing)
            .zip(&self.spec.origin)
            .map(|((&c, h), o)| o + c as f64 * 0.5 * h)
            .collect()
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.spec.is_fully_periodic()
    }

    /// True when the sum of all top cells is a relative cycle mod the boundary.
    pub fn is_orientable(&self) -> bool {
        let n = self.dimension();
        let mut acc = vec![0i64; self.num_cells(n - 1)];
        for inc in &self.faces[n] {
            for &(f, s) in inc {
                acc[f] += s as i64;
            }
        }
        acc.iter().enumerate().all(|(f, &v)| {
            v == 0 || (self.marking[n - 1][f] != Marking::Interior && v.abs() == 1)
        })
    }

    /// Sparse ∂_k with rows indexed by (k−1)-cells and columns by k-cells.
    pub fn boundary_matrix(&self, k: usize) -> Result<SparseMatrix<i32>> {
        let n = self.dimension();
        if k == 0 || k > n {
            return Err(Error::DegreeOutOfRange { degree: k, dimension: n });
        }
        let mut trip = Vec::new();
        for (cell, inc) in self.faces[k].iter().enumerate() {
            for &(f, s) in inc {
                trip.push((f, cell, s));
            }
        }
        Ok(SparseMatrix::from_triplets(self.num_cells(k - 1), self.num_cells(k), &trip))
    }

    /// Per-cell share of n-volume used to discretize L^p norms.
    pub fn mass_weights(&self, k: usize) -> &[f64] {
        &self.mass[k]
    }

    /// Ids of k-cells that are not in the closed subcomplex `rel`.
    pub fn free_cells(&self, k: usize, rel: Rel) -> Vec<usize> {
        (0..self.num_cells(k)).filter(|&f| !rel.contains(self.marking[k][f])).collect()
    }

    /// Doubled coordinates of the lower corner of a top cell.
    pub(crate) fn top_cell_corner(&self, id: usize) -> Vec<u32> {
        self.cells[self.dimension()][id].iter().map(|&c| c - 1).collect()
    }

    /// The staggered dual cell (half-shift along every axis) of a cell on a
    /// fully periodic grid, as a primal cell of complementary degree.
    pub(crate) fn half_shift(&self, k: usize, id: usize, forward: bool) -> usize {
        let key: Vec<u32> = self.cells[k][id]
            .iter()
            .zip(&self.spec.resolution)
            .map(|(&c, &r)| {
                let m = 2 * r as u32;
                if forward {
                    (c + 1) % m
                } else {
                    (c + m - 1) % m
                }
            })
            .collect();
        let n = self.dimension();
        self.lookup[n - k][&key]
    }
}

/// Serialized form of a complex.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexDocument {
    pub dimension: usize,
    pub grid: GridSpec,
    pub cells: Vec<Vec<CellRecord>>,
    pub incidence: Vec<IncidenceRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CellRecord {
    pub id: usize,
    pub coords: Vec<u32>,
    pub vertices: Vec<usize>,
    pub volume: f64,
    pub mass: f64,
    pub marking: Marking,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IncidenceRecord {
    pub degree: usize,
    pub triplets: Vec<(usize, usize, i32)>,
}

impl MetricComplex {
    pub fn to_document(&self) -> ComplexDocument {
        let n = self.dimension();
        let cells = (0..=n)
            .map(|k| {
                (0..self.num_cells(k))
                    .map(|id| CellRecord {
                        id,
                        coords: self.cells[k][id].clone(),
                        vertices: self.cell_vertices(k, id),
                        volume: self.volume[k][id],
                        mass: self.mass[k][id],
                        marking: self.marking[k][id],
                    })
                    .collect()
            })
            .collect();
        let incidence = (1..=n)
            .map(|k| IncidenceRecord {
                degree: k,
                triplets: self.boundary_matrix(k).expect("degree in range").triplets(),
            })
            .collect();
        ComplexDocument { dimension: n, grid: self.spec.clone(), cells, incidence }
    }

    /// Rebuilds a complex from its document, trusting the stored matrices.
    pub fn from_document(doc: &ComplexDocument) -> Result<MetricComplex> {
        let n = doc.dimension;
        if doc.cells.len() != n + 1 || doc.incidence.len() != n {
            return Err(Error::InvalidParameter("document degree count mismatch".into()));
        }
        let cells: Vec<Vec<CellKey>> = doc
            .cells
            .iter()
            .map(|list| list.iter().map(|c| c.coords.clone()).collect())
            .collect();
        let lookup = cells
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect())
            .collect();
        let mut faces: Vec<Vec<Incidence>> = cells.iter().map(|l| vec![Vec::new(); l.len()]).collect();
        for rec in &doc.incidence {
            let k = rec.degree;
            if k == 0 || k > n {
                return Err(Error::DegreeOutOfRange { degree: k, dimension: n });
            }
            for &(r, c, v) in &rec.triplets {
                if c >= cells[k].len() || r >= cells[k - 1].len() {
                    return Err(Error::InvalidParameter("incidence index out of range".into()));
                }
                faces[k][c].push((r, v));
            }
        }
        for list in faces.iter_mut() {
            for inc in list.iter_mut() {
                *inc = merge_incidence(std::mem::take(inc));
            }
        }
        let cofaces = transpose_incidence(&faces, &cells);
        let volume = doc.cells.iter().map(|l| l.iter().map(|c| c.volume).collect()).collect();
        let mass = doc.cells.iter().map(|l| l.iter().map(|c| c.mass).collect()).collect();
        let marking = doc.cells.iter().map(|l| l.iter().map(|c| c.marking).collect()).collect();
        let spacing = doc.grid.spacing();
        Ok(MetricComplex { spec: doc.grid.clone(), spacing, cells, lookup, faces, cofaces, volume, mass, marking })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<MetricComplex> {
        let doc: ComplexDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }
}
