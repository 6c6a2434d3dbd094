//! Batch experiments: a JSON config in, a JSON report, CSV summary and log out.

use crate::chain::Cochain;
use crate::cmod::{check_corollary_seeded, minimize_cmod_seeded, CmodOptions, Family};
use crate::dec::pointwise;
use crate::dmod::{minimize_dmod, verify_duality, DmodOptions};
use crate::error::{Error, Result};
use crate::homology::{relative_homology, HomologySummary, Ring};
use crate::mesh::{MetricComplex, Rel};
use crate::scenes::{build_scene, Comparison, Quantity, Scene, SceneParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CSV_VERSION: u32 = 1;
pub const CSV_COLUMNS: &str =
    "job,variant,scene,params,class,task,p,value,value_lower,product,residual,iterations,converged,expected,source,passed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Differential-form modulus of the class.
    Dmod,
    /// dMod of the class and of its identified dual class.
    Duality,
    /// Classical modulus bracket.
    Cmod,
    /// Classical product with the scene's dual class.
    Corollary,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Dmod => "dmod",
            Task::Duality => "duality",
            Task::Cmod => "cmod",
            Task::Corollary => "corollary",
        }
    }
}

/// Checks run on the results; a field left out is not checked.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Assertions {
    /// Relative tolerance against expected dMod values for p ≠ 2.
    pub expected_tolerance: Option<f64>,
    /// Same, for p = 2.
    pub expected_tolerance_p2: Option<f64>,
    pub duality_tolerance: Option<f64>,
    pub duality_tolerance_p2: Option<f64>,
    /// Distance of identified dual coordinates from integers (rank-1 cases).
    pub integer_tolerance: Option<f64>,
    /// Relative tolerance against expected classical values.
    pub classical_tolerance: Option<f64>,
    /// Classical product must not exceed 1 + this.
    pub corollary_tolerance: Option<f64>,
    /// Classical product must lie strictly below this.
    pub classical_product_below: Option<f64>,
    /// Variational residual at most this times the initial gradient.
    pub residual_ratio: Option<f64>,
    /// Classical product strictly decreasing along the sweep.
    pub decreasing_classical_product: bool,
    /// Do not count open classical brackets as non-convergence.
    pub allow_open_brackets: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: Option<String>,
    /// Write per-job minimizer and density CSV files.
    pub dump_minimizers: bool,
}

fn default_tasks() -> Vec<Task> {
    vec![Task::Duality]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub scene: String,
    #[serde(default)]
    pub params: SceneParams,
    /// Parameter overrides, one scene variant each; empty means one variant.
    #[serde(default)]
    pub sweep: Vec<SceneParams>,
    /// Featured class names; empty selects every non-torsion class.
    #[serde(default)]
    pub classes: Vec<String>,
    pub exponents: Vec<f64>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub dmod: DmodOptions,
    #[serde(default)]
    pub cmod: CmodOptions,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        if self.exponents.is_empty() {
            return Err(Error::Config("`exponents` is empty".into()));
        }
        for &p in &self.exponents {
            if !(p > 1.0 && p.is_finite()) {
                return Err(Error::Config(format!("exponent {p} must lie in (1, ∞)")));
            }
        }
        if self.tasks.is_empty() {
            return Err(Error::Config("`tasks` is empty".into()));
        }
        let a = &self.assertions;
        let tols = [
            a.expected_tolerance,
            a.expected_tolerance_p2,
            a.duality_tolerance,
            a.duality_tolerance_p2,
            a.integer_tolerance,
            a.classical_tolerance,
            a.corollary_tolerance,
            a.classical_product_below,
            a.residual_ratio,
            Some(self.dmod.tolerance),
            Some(self.cmod.tolerance),
        ];
        if tols.iter().flatten().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    fn variants(&self) -> Vec<SceneParams> {
        if self.sweep.is_empty() {
            return vec![self.params.clone()];
        }
        self.sweep
            .iter()
            .map(|over| {
                let mut p = self.params.clone();
                p.extend(over.clone());
                p
            })
            .collect()
    }
}

/// Everything a job needs from one scene variant.
struct Prepared {
    scene: Scene,
    classes: Vec<String>,
    homology: BTreeMap<(usize, Rel), HomologySummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectedValue {
    pub value: f64,
    pub comparison: Comparison,
    pub source: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct JobRecord {
    pub job: String,
    pub variant: usize,
    pub params: SceneParams,
    pub scene: String,
    pub class: String,
    pub task: Task,
    pub p: f64,
    pub value: f64,
    pub value_lower: Option<f64>,
    pub product: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub expected: Option<ExpectedValue>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub result: Value,
    #[serde(skip)]
    log: Vec<String>,
    #[serde(skip)]
    dumps: Vec<(String, Vec<(usize, f64)>)>,
}

impl JobRecord {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub records: Vec<JobRecord>,
    pub sweep_checks: Vec<Check>,
}

/// Picks the output directory: flag, then `MODWEDGE_OUT`, then the config, then a default.
pub fn resolve_out_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var("MODWEDGE_OUT") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    config.outputs.dir.as_ref().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("modwedge-out"))
}

fn prepare(config: &ExperimentConfig, params: &SceneParams) -> Result<Prepared> {
    let scene = build_scene(&config.scene, params)?;
    let classes: Vec<String> = if config.classes.is_empty() {
        scene.featured.iter().filter(|c| !c.torsion).map(|c| c.name.clone()).collect()
    } else {
        config.classes.clone()
    };
    let x = &scene.complex;
    let n = x.dimension();
    let mut needed = Vec::new();
    for name in &classes {
        let fc = scene.class(name).map_err(|e| Error::Config(e.to_string()))?;
        if fc.torsion {
            return Err(Error::Config(format!("class `{name}` is torsion; the moduli are undefined")));
        }
        let wants_dual = config.tasks.iter().any(|t| matches!(t, Task::Duality | Task::Corollary));
        if config.tasks.contains(&Task::Corollary) && fc.dual.is_none() {
            return Err(Error::Config(format!("class `{name}` has no dual class for the corollary check")));
        }
        if config.tasks.iter().any(|t| matches!(t, Task::Cmod | Task::Corollary)) {
            let ok = |d: usize| d == 1 || d + 1 == n;
            if !ok(fc.degree) || (config.tasks.contains(&Task::Corollary) && !ok(n - fc.degree)) {
                return Err(Error::Config(format!("classical modulus is not available for `{name}`")));
            }
        }
        if config.tasks.iter().any(|t| matches!(t, Task::Dmod | Task::Duality)) {
            needed.push((fc.degree, fc.rel));
        }
        if wants_dual && config.tasks.contains(&Task::Duality) {
            needed.push((n - fc.degree, fc.rel.complement()));
        }
    }
    needed.sort();
    needed.dedup();
    let mut homology = BTreeMap::new();
    for (k, rel) in needed {
        homology.insert((k, rel), relative_homology(x, k, rel, Ring::Integers)?);
    }
    Ok(Prepared { scene, classes, homology })
}

fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

fn expected_for(scene: &Scene, q: Quantity, class: &str, p: f64) -> Option<ExpectedValue> {
    scene.expected_for(q, class).map(|e| ExpectedValue {
        value: e.law.at(p),
        comparison: e.comparison,
        source: e.source.clone(),
    })
}

fn compare(name: &str, value: f64, exp: &ExpectedValue, tol: f64) -> Check {
    let passed = match exp.comparison {
        Comparison::Equal => (value - exp.value).abs() <= tol * exp.value.abs(),
        Comparison::AtMost => value <= exp.value * (1.0 + tol),
    };
    Check {
        name: name.into(),
        passed,
        detail: format!("{} vs {} ({:?}, tol {tol:e})", f17(value), f17(exp.value), exp.comparison),
    }
}

fn cochain_dump(x: &MetricComplex, omega: &Cochain<f64>) -> Vec<(usize, f64)> {
    pointwise(x, omega).values.into_iter().enumerate().collect()
}

struct JobSpec {
    variant: usize,
    class: String,
    task: Task,
    p: f64,
}

fn run_job(config: &ExperimentConfig, prep: &Prepared, params: &SceneParams, spec: &JobSpec) -> JobRecord {
    let scene = &prep.scene;
    let x = &scene.complex;
    let a = &config.assertions;
    let p = spec.p;
    let mut rec = JobRecord {
        job: format!("v{:02}/{}/{}/p={}", spec.variant, spec.class, spec.task.name(), p),
        variant: spec.variant,
        params: params.clone(),
        scene: scene.name.clone(),
        class: spec.class.clone(),
        task: spec.task,
        p,
        value: f64::NAN,
        value_lower: None,
        product: None,
        residual: None,
        iterations: 0,
        converged: false,
        expected: None,
        checks: Vec::new(),
        error: None,
        result: Value::Null,
        log: Vec::new(),
        dumps: Vec::new(),
    };
    let started = Instant::now();
    let mut dmod_opts = config.dmod.clone();
    dmod_opts.seed = config.seed;
    let fc = scene.class(&spec.class).expect("validated");
    let outcome: Result<()> = (|| {
        match spec.task {
            Task::Dmod | Task::Duality => {
                let h = &prep.homology[&(fc.degree, fc.rel)];
                let c = h.class_of(&fc.representative)?;
                let primal = if spec.task == Task::Dmod {
                    let r = minimize_dmod(x, h, &c, p, &dmod_opts)?;
                    rec.result = serde_json::to_value(&r)?;
                    r
                } else {
                    let dual_h = &prep.homology[&(x.dimension() - fc.degree, fc.rel.complement())];
                    let r = verify_duality(x, h, dual_h, &c, p, &dmod_opts)?;
                    rec.product = Some(r.product);
                    let tol = if p == 2.0 { a.duality_tolerance_p2 } else { a.duality_tolerance };
                    if let Some(tol) = tol {
                        rec.checks.push(Check {
                            name: "duality_product".into(),
                            passed: (r.product - 1.0).abs() <= tol,
                            detail: format!("{} (tol {tol:e})", f17(r.product)),
                        });
                    }
                    if let (Some(tol), true) = (a.integer_tolerance, r.integer_generator_case) {
                        rec.checks.push(Check {
                            name: "integer_dual_class".into(),
                            passed: r.integerness_gap <= tol,
                            detail: format!("gap {}", f17(r.integerness_gap)),
                        });
                    }
                    if let Some(ratio) = a.residual_ratio {
                        let d = &r.dual;
                        rec.checks.push(Check {
                            name: "dual_residual".into(),
                            passed: d.residual <= ratio * d.initial_gradient.max(f64::MIN_POSITIVE),
                            detail: format!("{} vs {}", f17(d.residual), f17(d.initial_gradient)),
                        });
                    }
                    if config.outputs.dump_minimizers {
                        rec.dumps.push(("dual".into(), cochain_dump(x, &r.dual.minimizer)));
                    }
                    rec.converged = r.dual.converged;
                    rec.iterations += r.dual.iterations;
                    rec.log.push(format!(
                        "dual class {:?}, dMod_q = {}, residual {}",
                        r.cprime_coordinates,
                        f17(r.dmod_q_cprime),
                        f17(r.dual.residual)
                    ));
                    let primal = r.primal.clone();
                    rec.result = serde_json::to_value(&r)?;
                    primal
                };
                rec.value = primal.value;
                rec.residual = Some(primal.residual);
                rec.iterations += primal.iterations;
                rec.converged = primal.converged && (spec.task == Task::Dmod || rec.converged);
                rec.log.push(format!(
                    "dMod_p = {}, residual {} (initial gradient {}), {} iterations",
                    f17(primal.value),
                    f17(primal.residual),
                    f17(primal.initial_gradient),
                    primal.iterations
                ));
                rec.expected = expected_for(scene, Quantity::Dmod, &spec.class, p);
                let tol = if p == 2.0 { a.expected_tolerance_p2 } else { a.expected_tolerance };
                if let (Some(exp), Some(tol)) = (&rec.expected, tol) {
                    rec.checks.push(compare("expected_dmod", primal.value, exp, tol));
                }
                if let Some(ratio) = a.residual_ratio {
                    rec.checks.push(Check {
                        name: "residual".into(),
                        passed: primal.residual <= ratio * primal.initial_gradient.max(f64::MIN_POSITIVE),
                        detail: format!("{} vs {}", f17(primal.residual), f17(primal.initial_gradient)),
                    });
                }
                if config.outputs.dump_minimizers {
                    rec.dumps.push(("minimizer".into(), cochain_dump(x, &primal.minimizer)));
                }
            }
            Task::Cmod => {
                let fam = Family::from_scene(scene, &spec.class, &config.cmod)?;
                let seeds: Vec<&Cochain<f64>> = scene.seeds.get(&spec.class).into_iter().collect();
                let r = minimize_cmod_seeded(x, &fam, p, &config.cmod, &seeds)?;
                rec.value = r.value_upper;
                rec.value_lower = Some(r.value_lower);
                rec.iterations = r.rounds;
                rec.converged = r.converged || a.allow_open_brackets;
                for (i, (lo, up)) in r.history.iter().enumerate() {
                    rec.log.push(format!("round {}: [{}, {}]", i + 1, f17(*lo), f17(*up)));
                }
                rec.expected = expected_for(scene, Quantity::Mod, &spec.class, p);
                if let (Some(exp), Some(tol)) = (&rec.expected, a.classical_tolerance) {
                    rec.checks.push(compare("expected_mod", r.value_upper, exp, tol));
                }
                rec.checks.push(Check {
                    name: "certified_admissible".into(),
                    passed: r.certified_length >= 1.0 - 1e-9,
                    detail: format!("oracle minimum {}", f17(r.certified_length)),
                });
                if config.outputs.dump_minimizers {
                    rec.dumps.push(("density".into(), r.density.values.iter().cloned().enumerate().collect()));
                }
                rec.result = serde_json::to_value(&r)?;
            }
            Task::Corollary => {
                let dual_name = fc.dual.clone().expect("validated");
                let dfc = scene.class(&dual_name)?;
                let c = Family::from_scene(scene, &spec.class, &config.cmod)?;
                // The dual family lives relative to the complementary boundary part.
                let cuts = scene.cuts.get(&fc.rel.complement()).map(|v| v.as_slice());
                let cp = Family::new(x, dfc.degree, fc.rel.complement(), &dfc.representative, cuts, &config.cmod)?;
                let seeds: Vec<&Cochain<f64>> = scene.seeds.get(&spec.class).into_iter().collect();
                let seeds_prime: Vec<&Cochain<f64>> = scene.seeds.get(&dual_name).into_iter().collect();
                let r = check_corollary_seeded(x, &c, &cp, p, &config.cmod, &seeds, &seeds_prime)?;
                rec.value = r.mod_p.value_upper;
                rec.value_lower = Some(r.mod_p.value_lower);
                rec.product = Some(r.product_upper);
                rec.iterations = r.mod_p.rounds + r.mod_q.rounds;
                rec.converged = (r.mod_p.converged && r.mod_q.converged) || a.allow_open_brackets;
                rec.log.push(format!(
                    "Mod_p in [{}, {}], Mod_q in [{}, {}], product in [{}, {}]",
                    f17(r.mod_p.value_lower),
                    f17(r.mod_p.value_upper),
                    f17(r.mod_q.value_lower),
                    f17(r.mod_q.value_upper),
                    f17(r.product_lower),
                    f17(r.product_upper)
                ));
                if let Some(tol) = a.corollary_tolerance {
                    rec.checks.push(Check {
                        name: "corollary".into(),
                        passed: r.holds(tol),
                        detail: format!("product {} (tol {tol:e})", f17(r.product_upper)),
                    });
                }
                if let Some(bound) = a.classical_product_below {
                    rec.checks.push(Check {
                        name: "classical_product_below".into(),
                        passed: r.product_upper < bound,
                        detail: format!("{} < {}", f17(r.product_upper), f17(bound)),
                    });
                }
                rec.checks.push(Check {
                    name: "certified_admissible".into(),
                    passed: r.mod_p.certified_length >= 1.0 - 1e-9 && r.mod_q.certified_length >= 1.0 - 1e-9,
                    detail: format!(
                        "oracle minima {} and {}",
                        f17(r.mod_p.certified_length),
                        f17(r.mod_q.certified_length)
                    ),
                });
                rec.result = serde_json::to_value(&r)?;
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        rec.converged = false;
        rec.error = Some(e.to_string());
        rec.log.push(format!("error: {e}"));
    }
    rec.log.push(format!("elapsed {:.3} s", started.elapsed().as_secs_f64()));
    rec
}

/// Runs a parsed config. Config-level problems return `Err` before anything is written.
pub fn run_config(config: &ExperimentConfig, jobs: Option<usize>, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let variants = config.variants();
    let prepared: Vec<Prepared> = variants
        .iter()
        .map(|v| {
            prepare(config, v).map_err(|e| match e {
                Error::Config(_) | Error::UnknownScene(_) => e,
                other => Error::Config(other.to_string()),
            })
        })
        .collect::<Result<_>>()?;

    let mut specs = Vec::new();
    for (variant, prep) in prepared.iter().enumerate() {
        for class in &prep.classes {
            for &task in &config.tasks {
                for &p in &config.exponents {
                    specs.push(JobSpec { variant, class: class.clone(), task, p });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let records: Vec<JobRecord> = pool.install(|| {
        specs.par_iter().map(|s| run_job(config, &prepared[s.variant], &variants[s.variant], s)).collect()
    });

    // Checks across the sweep.
    let mut sweep_checks = Vec::new();
    if config.assertions.decreasing_classical_product && variants.len() > 1 {
        let mut series: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.task == Task::Corollary) {
            series.entry((r.class.clone(), format!("{}", r.p))).or_default().push(r.product.unwrap_or(f64::NAN));
        }
        for ((class, p), vals) in series {
            let passed = vals.windows(2).all(|w| w[1] < w[0]);
            sweep_checks.push(Check {
                name: format!("decreasing_classical_product/{class}/p={p}"),
                passed,
                detail: vals.iter().map(|v| f17(*v)).collect::<Vec<_>>().join(" > "),
            });
        }
    }

    let failed = records.iter().any(|r| !r.passed()) || sweep_checks.iter().any(|c| !c.passed);
    let unconverged = records.iter().any(|r| !r.converged);
    let exit_code = if failed {
        3
    } else if unconverged {
        4
    } else {
        0
    };
    write_outputs(config, out_dir, &records, &sweep_checks, exit_code)?;
    Ok(RunOutcome { exit_code, out_dir: out_dir.to_path_buf(), records, sweep_checks })
}

/// Reads, validates and runs a config file; returns the process exit code.
pub fn run_config_file(path: &Path, jobs: Option<usize>, out: Option<&Path>) -> (i32, Option<RunOutcome>, String) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return (2, None, format!("cannot read {}: {e}", path.display())),
    };
    let config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => return (2, None, e.to_string()),
    };
    let out_dir = resolve_out_dir(out, &config);
    match run_config(&config, jobs, &out_dir) {
        Ok(o) => {
            let msg = summary_table(&o.records);
            (o.exit_code, Some(o), msg)
        }
        Err(e @ (Error::Config(_) | Error::UnknownScene(_))) => (2, None, e.to_string()),
        Err(e) => (4, None, e.to_string()),
    }
}

/// Human-readable table of the records.
pub fn summary_table(records: &[JobRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<40} {:>22} {:>22} {:>5} {:>6}", "job", "value", "product", "conv", "checks");
    for r in records {
        let product = r.product.map(|v| format!("{v:.12}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<40} {:>22.12} {:>22} {:>5} {:>6}",
            r.job,
            r.value,
            product,
            if r.converged { "yes" } else { "no" },
            if r.passed() { "pass" } else { "FAIL" }
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV summary; byte-identical for identical inputs.
pub fn summary_csv(records: &[JobRecord]) -> String {
    let opt = |v: Option<f64>| v.map(f17).unwrap_or_default();
    let mut out = format!("# modwedge summary v{CSV_VERSION}\n{CSV_COLUMNS}\n");
    for r in records {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let fields = [
            r.job.clone(),
            r.variant.to_string(),
            r.scene.clone(),
            params.join(";"),
            r.class.clone(),
            r.task.name().to_string(),
            f17(r.p),
            f17(r.value),
            opt(r.value_lower),
            opt(r.product),
            opt(r.residual),
            r.iterations.to_string(),
            r.converged.to_string(),
            opt(r.expected.as_ref().map(|e| e.value)),
            r.expected.as_ref().map(|e| e.source.clone()).unwrap_or_default(),
            r.passed().to_string(),
        ];
        let line: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Writes floats with 17 significant digits.
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

pub fn to_json_17(value: &impl Serialize) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("utf-8 JSON"))
}

fn sanitize(job: &str) -> String {
    job.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '=' { c } else { '_' }).collect()
}

fn write_outputs(
    config: &ExperimentConfig,
    dir: &Path,
    records: &[JobRecord],
    sweep_checks: &[Check],
    exit_code: i32,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let report = json!({
        "format": "modwedge-report",
        "version": CSV_VERSION,
        "config": config,
        "exit_code": exit_code,
        "records": records,
        "sweep_checks": sweep_checks,
    });
    std::fs::write(dir.join("report.json"), to_json_17(&report)?)?;
    std::fs::write(dir.join("summary.csv"), summary_csv(records))?;
    let mut log = std::fs::File::create(dir.join("run.log"))?;
    for r in records {
        for line in &r.log {
            writeln!(log, "[{}] {line}", r.job)?;
        }
        if let Some(e) = &r.error {
            writeln!(log, "[{}] failed: {e}", r.job)?;
        }
        for c in &r.checks {
            writeln!(log, "[{}] check {}: {} ({})", r.job, c.name, if c.passed { "pass" } else { "FAIL" }, c.detail)?;
        }
    }
    for c in sweep_checks {
        writeln!(log, "[sweep] check {}: {} ({})", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail)?;
    }
    if config.outputs.dump_minimizers {
        let mdir = dir.join("minimizers");
        std::fs::create_dir_all(&mdir)?;
        for r in records {
            for (label, values) in &r.dumps {
                let mut text = String::from("cell,value\n");
                for (id, v) in values {
                    let _ = writeln!(text, "{id},{}", f17(*v));
                }
                std::fs::write(mdir.join(format!("{}_{label}.csv", sanitize(&r.job))), text)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"name": "t", "scene": "flat_torus", "params": {"lengths": [2, 1], "resolution": 6},
                "classes": ["axis0"], "exponents": [2, 3], "tasks": ["dmod", "duality"],
                "assertions": {"expected_tolerance": 1e-6, "expected_tolerance_p2": 1e-9, "duality_tolerance": 1e-3, "duality_tolerance_p2": 1e-6}}"#,
        )
        .unwrap()
    }

    #[test]
    fn runs_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = torus_config();
        let a = run_config(&cfg, Some(2), &dir.path().join("a")).unwrap();
        let b = run_config(&cfg, Some(1), &dir.path().join("b")).unwrap();
        assert_eq!(a.exit_code, 0, "{}", summary_table(&a.records));
        assert_eq!(a.records.len(), 4);
        assert_eq!(b.exit_code, 0);
        let ca = std::fs::read(dir.path().join("a/summary.csv")).unwrap();
        let cb = std::fs::read(dir.path().join("b/summary.csv")).unwrap();
        assert_eq!(ca, cb);
        let text = String::from_utf8(ca).unwrap();
        assert!(text.starts_with("# modwedge summary v1\njob,"));
        let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/report.json")).unwrap()).unwrap();
        assert_eq!(report["records"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn malformed_config_is_rejected() {
        assert!(ExperimentConfig::from_json("{").is_err());
        assert!(ExperimentConfig::from_json(r#"{"name":"x","scene":"flat_torus","exponents":[2],"bogus":1}"#).is_err());
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = torus_config();
        cfg.exponents = vec![1.0];
        assert!(matches!(run_config(&cfg, None, dir.path()), Err(Error::Config(_))));
        let mut cfg = torus_config();
        cfg.scene = "nowhere".into();
        let out = dir.path().join("nothing");
        assert!(run_config(&cfg, None, &out).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn failing_assertion_gives_exit_3() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = torus_config();
        cfg.exponents = vec![2.0];
        cfg.tasks = vec![Task::Corollary];
        // The torus product is 1, so a bound of 1/2 must fail.
        cfg.assertions.classical_product_below = Some(0.5);
        let o = run_config(&cfg, None, dir.path()).unwrap();
        assert_eq!(o.exit_code, 3);
        assert!(dir.path().join("report.json").exists());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(to_json_17(&json!({"a": 0.5})).unwrap(), "{\"a\":5.0000000000000000e-1}");
    }
}
