//! Built-in geometries with their featured homology classes.

use crate::chain::{Chain, Cochain};
use crate::error::{Error, Result};
use crate::mesh::{build_complex, BoundaryRule, GridSpec, MetricComplex, Rel, Side};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

pub type SceneParams = BTreeMap<String, Value>;

/// A named class given by a representative relative cycle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeaturedClass {
    pub name: String,
    pub degree: usize,
    pub rel: Rel,
    pub representative: Chain,
    /// Expected to be a torsion (or zero) class.
    pub torsion: bool,
    /// Featured class of complementary degree and boundary paired with this one.
    pub dual: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Differential-form modulus.
    Dmod,
    /// Classical modulus.
    Mod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Equal,
    AtMost,
}

/// `coefficient · base^{1−p}` for exponent `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub base: f64,
}

impl PowerLaw {
    pub fn at(&self, p: f64) -> f64 {
        self.coefficient * self.base.powf(1.0 - p)
    }
}

/// An analytic or mesh-evaluated reference value with where it comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Expected {
    pub quantity: Quantity,
    pub class: String,
    pub comparison: Comparison,
    pub law: PowerLaw,
    pub source: String,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub name: String,
    pub params: SceneParams,
    pub complex: MetricComplex,
    pub featured: Vec<FeaturedClass>,
    /// Integer degree-1 cocycle bases made of axis cuts, used by the curve oracle.
    pub cuts: BTreeMap<Rel, Vec<Cochain<i64>>>,
    pub expected: Vec<Expected>,
    /// Densities known to give good admissible upper bounds, per class.
    pub seeds: BTreeMap<String, Cochain<f64>>,
}

impl Scene {
    pub fn class(&self, name: &str) -> Result<&FeaturedClass> {
        self.featured
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("scene {} has no class `{name}`", self.name)))
    }

    pub fn expected_for(&self, quantity: Quantity, class: &str) -> Option<&Expected> {
        self.expected.iter().find(|e| e.quantity == quantity && e.class == class)
    }
}

/// Registry entry for `list-scenes` / `describe`.
#[derive(Clone, Debug, Serialize)]
pub struct SceneInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [(&'static str, &'static str, &'static str)],
    pub featured: &'static str,
}

pub const REGISTRY: &[SceneInfo] = &[
    SceneInfo {
        name: "flat_torus",
        summary: "Flat torus of dimension 2 or 3, fully periodic.",
        params: &[
            ("lengths", "list of positive reals", "[1, 1]"),
            ("resolution", "cells per axis (integer or list)", "16"),
        ],
        featured: "axis0, axis1[, axis2]: winding 1-classes; slice0..: codimension-one slices (n = 3)",
    },
    SceneInfo {
        name: "lohvansuu_cube",
        summary: "Unit cube with D = faces normal to the first k axes, E = the rest.",
        params: &[
            ("n", "dimension, 2 or 3", "2"),
            ("k", "degree, 1 ≤ k ≤ n − 1", "1"),
            ("resolution", "cells per axis", "16"),
        ],
        featured: "c: H_k(Q, D) generator; cprime: H_(n−k)(Q, E) generator",
    },
    SceneInfo {
        name: "cylinder",
        summary: "Box with D = both end faces of the last axis (or one end).",
        params: &[
            ("base", "list of base side lengths", "[1]"),
            ("height", "length of the last axis", "1"),
            ("resolution", "cells per axis", "16"),
            ("ends", "1 or 2 end faces in D", "2"),
        ],
        featured: "c: vertical path class; cprime: cross-section class",
    },
    SceneInfo {
        name: "freedman_he",
        summary: "Dumbbell cross-section times [0, 1] glued with a half turn.",
        params: &[
            ("eps", "handle half-width ε ≤ 1/4", "0.05"),
            ("cells_per_unit", "even number of cells per unit length in the cross-section", "20"),
            ("slices", "cells along the twisted axis", "4"),
            ("twisted", "glue with the half turn (false: straight product)", "true"),
        ],
        featured: "c: longitudinal H_1 generator; cprime: cross-section H_2(M, ∂M) generator",
    },
    SceneInfo {
        name: "klein_bottle",
        summary: "Flat Klein bottle; H_1 = Z ⊕ Z/2.",
        params: &[("resolution", "cells per axis", "4")],
        featured: "b: free loop along the twisted axis; a: torsion loop",
    },
];

pub fn list_scenes() -> &'static [SceneInfo] {
    REGISTRY
}

pub fn describe(name: &str) -> Result<String> {
    let info = REGISTRY.iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScene(name.to_string()))?;
    let mut out = format!("{}\n  {}\n  parameters:\n", info.name, info.summary);
    for (p, kind, default) in info.params {
        out.push_str(&format!("    {p}: {kind} (default {default})\n"));
    }
    out.push_str(&format!("  featured classes: {}\n", info.featured));
    Ok(out)
}

/// Parses `key=value,key=value`; values are JSON (bare words become strings).
pub fn parse_params(text: &str) -> Result<SceneParams> {
    let mut out = SceneParams::new();
    let text = text.trim();
    if text.is_empty() {
        return Ok(out);
    }
    // Split on commas that are not inside brackets.
    let mut depth = 0;
    let mut start = 0;
    let mut parts = Vec::new();
    for (i, ch) in text.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("parameter `{part}` is not key=value")))?;
        let v = v.trim();
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

fn get_f64(p: &SceneParams, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| Error::Config(format!("`{key}` must be a number"))),
    }
}

fn get_usize(p: &SceneParams, key: &str, default: usize) -> Result<usize> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|u| u as usize)
            .ok_or_else(|| Error::Config(format!("`{key}` must be a non-negative integer"))),
    }
}

fn get_bool(p: &SceneParams, key: &str, default: bool) -> Result<bool> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v.as_bool().ok_or_else(|| Error::Config(format!("`{key}` must be a boolean"))),
    }
}

fn get_list(p: &SceneParams, key: &str, default: &[f64]) -> Result<Vec<f64>> {
    match p.get(key) {
        None => Ok(default.to_vec()),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| Error::Config(format!("`{key}` must be a list of numbers"))))
            .collect(),
        Some(v) => v
            .as_f64()
            .map(|x| vec![x])
            .ok_or_else(|| Error::Config(format!("`{key}` must be a list of numbers"))),
    }
}

fn get_resolution(p: &SceneParams, n: usize, default: usize) -> Result<Vec<usize>> {
    match p.get("resolution") {
        None => Ok(vec![default; n]),
        Some(Value::Array(a)) => {
            let r: Vec<usize> = a
                .iter()
                .map(|v| v.as_u64().map(|u| u as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Config("`resolution` must hold integers".into()))?;
            if r.len() != n {
                return Err(Error::Config(format!("`resolution` needs {n} entries")));
            }
            Ok(r)
        }
        Some(_) => Ok(vec![get_usize(p, "resolution", default)?; n]),
    }
}

/// Builds a registered scene.
pub fn build_scene(name: &str, params: &SceneParams) -> Result<Scene> {
    let known: &[&str] = REGISTRY
        .iter()
        .find(|s| s.name == name)
        .map(|s| s.params.iter().map(|p| p.0).collect::<Vec<_>>())
        .ok_or_else(|| Error::UnknownScene(name.to_string()))?
        .leak();
    if let Some(bad) = params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Config(format!("scene {name} has no parameter `{bad}`")));
    }
    let mut scene = match name {
        "flat_torus" => {
            let lengths = get_list(params, "lengths", &[1.0, 1.0])?;
            let res = get_resolution(params, lengths.len(), 16)?;
            flat_torus(&lengths, &res)?
        }
        "lohvansuu_cube" => lohvansuu_cube(
            get_usize(params, "n", 2)?,
            get_usize(params, "k", 1)?,
            get_usize(params, "resolution", 16)?,
        )?,
        "cylinder" => cylinder(
            &get_list(params, "base", &[1.0])?,
            get_f64(params, "height", 1.0)?,
            get_usize(params, "resolution", 16)?,
            get_usize(params, "ends", 2)?,
        )?,
        "freedman_he" => freedman_he(
            get_f64(params, "eps", 0.05)?,
            get_usize(params, "cells_per_unit", 20)?,
            get_usize(params, "slices", 4)?,
            get_bool(params, "twisted", true)?,
        )?,
        "klein_bottle" => klein_bottle(get_usize(params, "resolution", 4)?)?,
        _ => unreachable!(),
    };
    scene.params = params.clone();
    Ok(scene)
}

/// Sum of the k-cells extending along exactly `axes`, with every other
/// coordinate fixed to the given doubled value.
pub fn axis_chain(x: &MetricComplex, axes: &[usize], fixed: &[(usize, u32)]) -> Chain {
    let k = axes.len();
    let cells = (0..x.num_cells(k)).filter(|&f| {
        let key = x.cell_key(k, f);
        x.cell_axes(k, f) == axes && fixed.iter().all(|&(a, v)| key[a] == v)
    });
    Chain::from_pairs(k, cells.map(|f| (f, 1)))
}

/// Indicator of the edges along `axis` at doubled position `pos`.
pub fn axis_cut(x: &MetricComplex, axis: usize, pos: u32) -> Cochain<i64> {
    let values = (0..x.num_cells(1))
        .map(|f| (x.cell_axes(1, f) == [axis] && x.cell_key(1, f)[axis] == pos) as i64)
        .collect();
    Cochain::new(1, values)
}

pub fn flat_torus(lengths: &[f64], resolution: &[usize]) -> Result<Scene> {
    let n = lengths.len();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter("flat_torus needs 2 or 3 axes".into()));
    }
    let x = build_complex(&GridSpec::new(lengths, resolution).all_periodic())?;
    let mut featured = Vec::new();
    let mut expected = Vec::new();
    for i in 0..n {
        let fixed: Vec<(usize, u32)> = (0..n).filter(|&a| a != i).map(|a| (a, 0)).collect();
        let name = format!("axis{i}");
        featured.push(FeaturedClass {
            name: name.clone(),
            degree: 1,
            rel: Rel::D,
            representative: axis_chain(&x, &[i], &fixed),
            torsion: false,
            dual: Some(if n == 2 { format!("axis{}", 1 - i) } else { format!("slice{i}") }),
        });
        let others: f64 = (0..n).filter(|&a| a != i).map(|a| lengths[a]).product();
        let law = PowerLaw { coefficient: others, base: lengths[i] };
        expected.push(Expected {
            quantity: Quantity::Dmod,
            class: name.clone(),
            comparison: Comparison::Equal,
            law,
            source: "constant-form minimizer".into(),
        });
        if n == 2 {
            expected.push(Expected {
                quantity: Quantity::Mod,
                class: name,
                comparison: Comparison::Equal,
                law,
                source: "straight loops with constant density".into(),
            });
        }
    }
    if n == 3 {
        for i in 0..n {
            let axes: Vec<usize> = (0..n).filter(|&a| a != i).collect();
            let name = format!("slice{i}");
            featured.push(FeaturedClass {
                name: name.clone(),
                degree: 2,
                rel: Rel::D,
                representative: axis_chain(&x, &axes, &[(i, 0)]),
                torsion: false,
                dual: Some(format!("axis{i}")),
            });
            // Constant 1-form dual to the slice normal to axis i: value L_i · A_i^{1−p}.
            let area: f64 = axes.iter().map(|&a| lengths[a]).product();
            expected.push(Expected {
                quantity: Quantity::Dmod,
                class: name,
                comparison: Comparison::Equal,
                law: PowerLaw { coefficient: lengths[i], base: area },
                source: "constant-form minimizer".into(),
            });
        }
    }
    let cuts: Vec<Cochain<i64>> = (0..n).map(|i| axis_cut(&x, i, 1)).collect();
    let mut cut_map = BTreeMap::new();
    cut_map.insert(Rel::D, cuts.clone());
    cut_map.insert(Rel::E, cuts);
    Ok(Scene {
        name: "flat_torus".into(),
        params: SceneParams::new(),
        complex: x,
        featured,
        cuts: cut_map,
        expected,
        seeds: BTreeMap::new(),
    })
}

fn box_scene(
    name: &str,
    lengths: &[f64],
    resolution: usize,
    d_faces: Vec<(usize, Side)>,
    c_axes: &[usize],
    cprime_axes: &[usize],
) -> Result<(MetricComplex, FeaturedClass, FeaturedClass)> {
    let n = lengths.len();
    let spec = GridSpec::new(lengths, &vec![resolution; n]).d_rule(BoundaryRule::Faces(d_faces));
    let x = build_complex(&spec)?;
    let mid = 2 * (resolution / 2) as u32;
    let fix = |axes: &[usize]| -> Vec<(usize, u32)> { (0..n).filter(|a| !axes.contains(a)).map(|a| (a, mid)).collect() };
    let c = FeaturedClass {
        name: "c".into(),
        degree: c_axes.len(),
        rel: Rel::D,
        representative: axis_chain(&x, c_axes, &fix(c_axes)),
        torsion: false,
        dual: Some("cprime".into()),
    };
    let cp = FeaturedClass {
        name: "cprime".into(),
        degree: cprime_axes.len(),
        rel: Rel::E,
        representative: axis_chain(&x, cprime_axes, &fix(cprime_axes)),
        torsion: false,
        dual: Some("c".into()),
    };
    let _ = name;
    Ok((x, c, cp))
}

pub fn lohvansuu_cube(n: usize, k: usize, resolution: usize) -> Result<Scene> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter("lohvansuu_cube supports n = 2 or 3".into()));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("degree k = {k} must satisfy 0 < k < n = {n}")));
    }
    if resolution < 2 {
        return Err(Error::ResolutionTooCoarse("need at least 2 cells per axis".into()));
    }
    let d_faces: Vec<(usize, Side)> = (0..k).flat_map(|a| [(a, Side::Lower), (a, Side::Upper)]).collect();
    let c_axes: Vec<usize> = (0..k).collect();
    let cp_axes: Vec<usize> = (k..n).collect();
    let (x, c, cp) = box_scene("lohvansuu_cube", &vec![1.0; n], resolution, d_faces, &c_axes, &cp_axes)?;
    let mut cuts = BTreeMap::new();
    if k == 1 {
        cuts.insert(Rel::D, vec![axis_cut(&x, 0, 1)]);
    }
    if n - k == 1 {
        cuts.insert(Rel::E, vec![axis_cut(&x, n - 1, 1)]);
    }
    let unit = PowerLaw { coefficient: 1.0, base: 1.0 };
    let mut expected = Vec::new();
    for class in ["c", "cprime"] {
        for quantity in [Quantity::Dmod, Quantity::Mod] {
            expected.push(Expected {
                quantity,
                class: class.into(),
                comparison: Comparison::Equal,
                law: unit,
                source: "unit cube, constant minimizer".into(),
            });
        }
    }
    Ok(Scene {
        name: "lohvansuu_cube".into(),
        params: SceneParams::new(),
        complex: x,
        featured: vec![c, cp],
        cuts,
        expected,
        seeds: BTreeMap::new(),
    })
}

pub fn cylinder(base: &[f64], height: f64, resolution: usize, ends: usize) -> Result<Scene> {
    let n = base.len() + 1;
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter("cylinder base must have 1 or 2 lengths".into()));
    }
    if !(1..=2).contains(&ends) {
        return Err(Error::InvalidParameter("ends must be 1 or 2".into()));
    }
    let mut lengths = base.to_vec();
    lengths.push(height);
    let mut d_faces = vec![(n - 1, Side::Lower)];
    if ends == 2 {
        d_faces.push((n - 1, Side::Upper));
    }
    let cp_axes: Vec<usize> = (0..n - 1).collect();
    let (x, c, mut cp) = box_scene("cylinder", &lengths, resolution, d_faces, &[n - 1], &cp_axes)?;
    // With one end the cross-section slides off the free end: the zero class.
    let featured = if ends == 2 {
        vec![c, cp]
    } else {
        cp.torsion = true;
        cp.dual = None;
        vec![cp]
    };
    let area: f64 = base.iter().product();
    let mut cuts = BTreeMap::new();
    if ends == 2 {
        cuts.insert(Rel::D, vec![axis_cut(&x, n - 1, 1)]);
    }
    if n == 2 && ends == 2 {
        cuts.insert(Rel::E, vec![axis_cut(&x, 0, 1)]);
    }
    let mut expected = vec![
        Expected {
            quantity: Quantity::Dmod,
            class: "c".into(),
            comparison: Comparison::Equal,
            law: PowerLaw { coefficient: area, base: height },
            source: "constant-form minimizer".into(),
        },
        Expected {
            quantity: Quantity::Dmod,
            class: "cprime".into(),
            comparison: Comparison::Equal,
            law: PowerLaw { coefficient: height, base: area },
            source: "constant-form minimizer".into(),
        },
    ];
    if ends == 1 {
        expected.clear();
    }
    Ok(Scene {
        name: "cylinder".into(),
        params: SceneParams::new(),
        complex: x,
        featured,
        cuts,
        expected,
        seeds: BTreeMap::new(),
    })
}

fn in_dumbbell(x: f64, y: f64, eps: f64) -> bool {
    let disk = |cx: f64| (x - cx).powi(2) + y * y <= 0.25;
    disk(1.0) || disk(-1.0) || (x.abs() <= 1.0 && y.abs() <= eps)
}

pub fn freedman_he(eps: f64, cells_per_unit: usize, slices: usize, twisted: bool) -> Result<Scene> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1/4]")));
    }
    if cells_per_unit % 2 != 0 || cells_per_unit == 0 {
        return Err(Error::InvalidParameter("cells_per_unit must be a positive even number".into()));
    }
    let h = 1.0 / cells_per_unit as f64;
    let across = (2.0 * eps / h + 1e-9).floor() as usize;
    if across < 2 {
        return Err(Error::ResolutionTooCoarse(format!(
            "handle of width {} spans {across} cells; at least 2 are needed",
            2.0 * eps
        )));
    }
    if slices < 2 {
        return Err(Error::ResolutionTooCoarse("need at least 2 slices".into()));
    }
    let nx = 3 * cells_per_unit;
    let ny = cells_per_unit;
    let (ox, oy) = (-1.5, -0.5);
    let center = |i: usize, j: usize| (ox + (i as f64 + 0.5) * h, oy + (j as f64 + 0.5) * h);
    // Mirror the mask so the half turn maps cells onto cells.
    let keep = |i: usize, j: usize| {
        let (cx, cy) = center(i, j);
        in_dumbbell(cx, cy, eps) || in_dumbbell(-cx, -cy, eps)
    };
    let mut spec = GridSpec::new(&[3.0, 1.0, 1.0], &[nx, ny, slices])
        .origin(&[ox, oy, 0.0])
        .with_active(|idx| keep(idx[0], idx[1]));
    spec = if twisted { spec.twisted(2, &[0, 1]) } else { spec.periodic(2) };
    let x = build_complex(&spec)?;

    let cross_cells = (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).filter(|&(i, j)| keep(i, j)).count();
    let area = cross_cells as f64 * h * h;
    let c = FeaturedClass {
        name: "c".into(),
        degree: 1,
        rel: Rel::D,
        representative: axis_chain(&x, &[2], &[(0, nx as u32), (1, ny as u32)]),
        torsion: false,
        dual: Some("cprime".into()),
    };
    let cp = FeaturedClass {
        name: "cprime".into(),
        degree: 2,
        rel: Rel::E,
        representative: axis_chain(&x, &[0, 1], &[(2, 0)]),
        torsion: false,
        dual: Some("c".into()),
    };
    // Density 1 on the handle [−1/2, 1/2] × [−ε, ε] × [0, 1]. A loop in the class
    // either runs the length of the handle or crosses it, so y-edges can stay at 0.
    let handle: Vec<f64> = (0..x.num_cells(1))
        .map(|f| {
            let p = x.cell_center(1, f);
            let inside = p[0].abs() <= 0.5 + 1e-12 && p[1].abs() <= eps + 1e-12;
            (inside && x.cell_axes(1, f) != [1]) as i32 as f64
        })
        .collect();
    let handle_mass: f64 = handle.iter().zip(x.mass_weights(1)).map(|(r, m)| r * m).sum();
    // Constant density on the two bells for the cross-section family.
    let bells: Vec<f64> = (0..x.num_cells(2))
        .map(|f| (x.cell_center(2, f)[0].abs() > 0.5 && !x.marking(2)[f].in_e()) as i32 as f64)
        .collect();
    let mut seeds = BTreeMap::new();
    seeds.insert("c".to_string(), Cochain::new(1, handle));
    seeds.insert("cprime".to_string(), Cochain::new(2, bells));
    let mut cuts = BTreeMap::new();
    cuts.insert(Rel::D, vec![axis_cut(&x, 2, 1)]);
    let expected = vec![
        Expected {
            quantity: Quantity::Dmod,
            class: "c".into(),
            comparison: Comparison::Equal,
            law: PowerLaw { coefficient: area, base: 1.0 },
            source: "constant form dt on the rasterized body".into(),
        },
        Expected {
            quantity: Quantity::Dmod,
            class: "cprime".into(),
            comparison: Comparison::Equal,
            law: PowerLaw { coefficient: 1.0, base: area },
            source: "constant area form on the rasterized body".into(),
        },
        Expected {
            quantity: Quantity::Mod,
            class: "c".into(),
            comparison: Comparison::AtMost,
            law: PowerLaw { coefficient: handle_mass, base: 1.0 },
            source: "unit density on the handle, evaluated on the mesh".into(),
        },
    ];
    Ok(Scene {
        name: "freedman_he".into(),
        params: SceneParams::new(),
        complex: x,
        featured: vec![c, cp],
        cuts,
        expected,
        seeds,
    })
}

pub fn klein_bottle(resolution: usize) -> Result<Scene> {
    let spec = GridSpec::new(&[1.0, 1.0], &[resolution, resolution]).periodic(0).twisted(1, &[0]);
    let x = build_complex(&spec)?;
    let b = FeaturedClass {
        name: "b".into(),
        degree: 1,
        rel: Rel::D,
        representative: axis_chain(&x, &[1], &[(0, 0)]),
        torsion: false,
        dual: None,
    };
    let a = FeaturedClass {
        name: "a".into(),
        degree: 1,
        rel: Rel::D,
        representative: axis_chain(&x, &[0], &[(1, 0)]),
        torsion: true,
        dual: None,
    };
    Ok(Scene {
        name: "klein_bottle".into(),
        params: SceneParams::new(),
        complex: x,
        featured: vec![b, a],
        cuts: BTreeMap::new(),
        expected: Vec::new(),
        seeds: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec::coboundary;
    use crate::homology::{is_relative_cycle, relative_homology, Ring};

    fn check_featured(s: &Scene) {
        for fc in &s.featured {
            assert!(is_relative_cycle(&s.complex, &fc.representative, fc.rel), "{} {}", s.name, fc.name);
            let h = relative_homology(&s.complex, fc.degree, fc.rel, Ring::Integers).unwrap();
            let c = h.class_of(&fc.representative).unwrap();
            assert_eq!(h.is_torsion(&c).unwrap(), fc.torsion, "{} {}", s.name, fc.name);
        }
        for (rel, cuts) in &s.cuts {
            let h = relative_homology(&s.complex, 1, *rel, Ring::Integers).unwrap();
            assert_eq!(cuts.len(), h.betti);
            for cut in cuts {
                assert!(coboundary(&s.complex, cut).unwrap().values.iter().all(|&v| v == 0));
                for f in 0..s.complex.num_cells(1) {
                    if rel.contains(s.complex.marking(1)[f]) {
                        assert_eq!(cut.values[f], 0);
                    }
                }
            }
            // The cuts pair unimodularly with the generators.
            let m: Vec<Vec<i64>> = cuts.iter().map(|c| h.generators.iter().map(|g| c.evaluate(g).unwrap()).collect()).collect();
            let det = match m.len() {
                1 => m[0][0],
                2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
                3 => {
                    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
                }
                _ => 1,
            };
            assert_eq!(det.abs(), 1, "{}", s.name);
        }
    }

    #[test]
    fn torus_scenes() {
        check_featured(&flat_torus(&[2.0, 1.0], &[4, 4]).unwrap());
        check_featured(&flat_torus(&[1.0, 1.0, 1.0], &[3, 3, 3]).unwrap());
        let s = flat_torus(&[2.0, 1.0], &[4, 4]).unwrap();
        assert!((s.expected_for(Quantity::Dmod, "axis0").unwrap().law.at(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lohvansuu_scenes() {
        for (n, k) in [(2, 1), (3, 1), (3, 2)] {
            let s = lohvansuu_cube(n, k, 4).unwrap();
            check_featured(&s);
            for fc in &s.featured {
                let h = relative_homology(&s.complex, fc.degree, fc.rel, Ring::Integers).unwrap();
                assert_eq!(h.betti, 1);
            }
        }
        assert!(lohvansuu_cube(2, 0, 4).is_err());
    }

    #[test]
    fn cylinder_scenes() {
        check_featured(&cylinder(&[1.0], 2.0, 4, 2).unwrap());
        check_featured(&cylinder(&[1.0, 1.0], 1.0, 4, 2).unwrap());
        check_featured(&cylinder(&[1.0], 1.0, 4, 1).unwrap());
    }

    #[test]
    fn freedman_he_homology() {
        let s = freedman_he(0.25, 8, 4, true).unwrap();
        assert_eq!(s.complex.euler_characteristic(), 0);
        assert!(s.complex.is_orientable());
        check_featured(&s);
        let h1 = relative_homology(&s.complex, 1, Rel::D, Ring::Integers).unwrap();
        let h2 = relative_homology(&s.complex, 2, Rel::E, Ring::Integers).unwrap();
        assert_eq!((h1.betti, h2.betti), (1, 1));
        assert!(h1.torsion_invariants.is_empty());
        let straight = freedman_he(0.25, 8, 4, false).unwrap();
        check_featured(&straight);
        assert!(matches!(freedman_he(0.05, 10, 4, true), Err(Error::ResolutionTooCoarse(_))));
    }

    #[test]
    fn twist_is_the_half_turn() {
        // The vertex (x, y, 1) is the vertex (−x, −y, 0).
        let s = freedman_he(0.25, 8, 4, true).unwrap();
        let x = &s.complex;
        let (nx, ny) = (24u32, 8u32);
        for v in 0..x.num_cells(0) {
            let key = x.cell_key(0, v).to_vec();
            if key[2] != 0 {
                continue;
            }
            let top = vec![2 * nx - key[0], 2 * ny - key[1], 8];
            assert_eq!(x.locate(&top).map(|(id, _)| id), Some(v));
        }
    }

    #[test]
    fn klein_scene() {
        check_featured(&klein_bottle(4).unwrap());
    }

    #[test]
    fn registry_and_params() {
        assert!(list_scenes().iter().any(|s| s.name == "flat_torus"));
        assert!(describe("freedman_he").unwrap().contains("eps"));
        assert!(matches!(describe("nope"), Err(Error::UnknownScene(_))));
        let p = parse_params("lengths=[2,1],resolution=8").unwrap();
        let s = build_scene("flat_torus", &p).unwrap();
        assert_eq!(s.complex.num_cells(2), 64);
        assert!(build_scene("flat_torus", &parse_params("bogus=1").unwrap()).is_err());
    }
}
