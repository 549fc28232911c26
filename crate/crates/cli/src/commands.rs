use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use fibermap_core::audit::{self, AuditOptions, Surface};
use fibermap_core::render::{render_chart, render_figure, RenderError};
use fibermap_core::sphere_lab::suites::{run_suite, Suite, SUITE_SCHEMA};
use fibermap_core::sphere_map::{
    fiber_total_volume, sphere_to_cube, BoundaryPoint, MapBundle, SmallFiberMap, SphereMapError,
};
use fibermap_core::tree_map::{fiber_volume, TreeMapSpec};

pub const TREE_MAP_SCHEMA: &str = "fibermap.treemap/1";
pub const EVAL_SCHEMA: &str = "fibermap.eval/1";
pub const FIBER_SCHEMA: &str = "fibermap.fiber/1";
pub const APPENDIX_SET_SCHEMA: &str = "fibermap.appendix-set/1";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Degenerate(String),
    Verdict(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Degenerate(_) => 2,
            CliError::Verdict(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Degenerate(m) | CliError::Verdict(m) => f.write_str(m),
        }
    }
}

fn usage<E: fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| usage(format!("bad number '{t}': {e}"))))
        .collect()
}

/// Write to `out` through a sibling temporary file, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(format!(".tmp{}", std::process::id()));
            let tmp = PathBuf::from(tmp);
            std::fs::write(&tmp, format!("{text}\n")).map_err(|e| usage(format!("cannot write {}: {e}", tmp.display())))?;
            std::fs::rename(&tmp, path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
                // a closed reader (`| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(usage(format!("cannot write stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

/// Attach the argument echo. The output path is left out so that a file's
/// bytes depend only on what was computed.
fn emit_json<A: Serialize>(out: Option<&Path>, mut doc: Value, args: &A) -> Result<(), CliError> {
    let mut echo = serde_json::to_value(args).map_err(usage)?;
    if let Some(obj) = echo.as_object_mut() {
        obj.remove("out");
    }
    doc["args"] = echo;
    emit(out, &serde_json::to_string_pretty(&doc).map_err(usage)?)
}

fn load_bundle(path: &Path) -> Result<SmallFiberMap, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let bundle: MapBundle = serde_json::from_str(&text).map_err(|e| usage(format!("bad bundle: {e}")))?;
    SmallFiberMap::from_bundle(&bundle).map_err(usage)
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct BuildArgs {
    /// Sphere dimension; the map is defined on `∂I^{n+1}`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Target dimension. Without it only the tree map `t_{n,r,delta}` is built.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Recursion depth; overrides the depth chosen from epsilon.
    #[arg(long)]
    pub r: Option<u32>,
    /// Tree-map-only builds: the exceptional volume budget.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn build(mut a: BuildArgs) -> Result<(), CliError> {
    let n = required(a.n, "n")?;
    if a.q.is_some() {
        a.seed.get_or_insert(0);
    }
    let doc = match a.q {
        Some(q) => {
            if !(n > q && q > 1) {
                return Err(usage(SphereMapError::BadRange { n, q }));
            }
            let epsilon = required(a.epsilon, "epsilon")?;
            let map = SmallFiberMap::build(n, q, epsilon, a.seed.unwrap_or(0), a.r).map_err(usage)?;
            serde_json::to_value(map.to_bundle()).map_err(usage)?
        }
        None => {
            let r = required(a.r, "r")?;
            let delta = required(a.delta, "delta")?;
            let spec = TreeMapSpec::new(n as u32, r, delta).map_err(usage)?;
            let mut v = spec.schedule_json();
            v["schema"] = json!(TREE_MAP_SCHEMA);
            v["lemma_bound"] = json!(spec.lemma_bound());
            v
        }
    };
    emit_json(a.out.as_deref(), doc, &a)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceArg {
    Cube,
    Sphere,
}

impl From<SurfaceArg> for Surface {
    fn from(s: SurfaceArg) -> Self {
        match s {
            SurfaceArg::Cube => Surface::Cube,
            SurfaceArg::Sphere => Surface::Sphere,
        }
    }
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct AuditArgs {
    /// Bundle written by `build`.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed of the surface sample (independent of the map's seed).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub surface: Option<SurfaceArg>,
    /// Also audit preimage counts of the thickening at this many points.
    #[arg(long)]
    pub multiplicity: Option<usize>,
    /// Record the wall-clock runtime (makes the report non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Keep the per-sample records in the report.
    #[arg(long)]
    pub records: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn audit(mut a: AuditArgs) -> Result<(), CliError> {
    let map = load_bundle(&required(a.bundle.clone(), "bundle")?)?;
    let opts = AuditOptions {
        samples: *a.samples.get_or_insert(10_000),
        seed: *a.seed.get_or_insert(0),
        surface: (*a.surface.get_or_insert(SurfaceArg::Cube)).into(),
        timing: a.timing,
    };
    if opts.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let mut report = audit::audit(&map, &opts);
    if !a.records {
        report.records.clear();
    }
    let mut doc = serde_json::to_value(&report).map_err(usage)?;
    let mut multiplicity_ok = true;
    if let Some(k) = a.multiplicity {
        let m = audit::multiplicity_audit(&map, k, opts.seed);
        multiplicity_ok = m.violations == 0;
        doc["multiplicity"] = serde_json::to_value(&m).map_err(usage)?;
    }
    emit_json(a.out.as_deref(), doc, &a)?;
    if report.degeneracy_flag {
        return Err(CliError::Degenerate(format!(
            "slicer degeneracy on {:.2}% of samples",
            100.0 * report.degenerate_fraction
        )));
    }
    if !report.pass || !multiplicity_ok {
        return Err(CliError::Verdict(format!(
            "audit failed: exceed fraction {:.4} (+- {:.4}), max volume {:.4} vs bound {:.4}, {} misses",
            report.exceed_fraction,
            report.exceed_stderr,
            report.max_volume,
            report.certified_bound,
            report.inversion_misses
        )));
    }
    Ok(())
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct RenderArgs {
    /// Must be 2.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Concentric square fibers drawn per collar.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn render_svg(a: RenderArgs) -> Result<(), CliError> {
    // SVG output carries no echo; the title records the parameters
    let svg = render_figure(
        a.n.unwrap_or(2),
        a.r.unwrap_or(2),
        a.delta.unwrap_or(0.05),
        a.resolution.unwrap_or(6),
    )
    .map_err(|e| match e {
        RenderError::NotPlanar(_) | RenderError::BadResolution | RenderError::TreeMap(_) => usage(e),
    })?;
    emit(a.out.as_deref(), &svg)
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// isoperimetric, decomposition, codim1 or tubes; every suite when absent.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the SVG charts of each suite.
    #[arg(long)]
    pub charts: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn verify_appendix(mut a: VerifyArgs) -> Result<(), CliError> {
    let suites = match &a.suite {
        Some(s) => vec![s.parse::<Suite>().map_err(usage)?],
        None => Suite::ALL.to_vec(),
    };
    let samples = *a.samples.get_or_insert(1_000_000);
    let seed = *a.seed.get_or_insert(0);
    let start = Instant::now();
    let mut reports = Vec::new();
    for s in suites {
        reports.push(run_suite(s, samples, seed).map_err(usage)?);
    }
    if let Some(dir) = &a.charts {
        std::fs::create_dir_all(dir).map_err(usage)?;
        for r in &reports {
            for (i, c) in r.charts.iter().enumerate() {
                emit(Some(&dir.join(format!("{}-{i}.svg", r.suite.name()))), &render_chart(c))?;
            }
        }
    }
    let failing: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failing.iter().map(move |f| format!("{}/{f}", r.suite.name())))
        .collect();
    let mut doc = if reports.len() == 1 {
        serde_json::to_value(&reports[0]).map_err(usage)?
    } else {
        json!({
            "schema": APPENDIX_SET_SCHEMA,
            "suite_schema": SUITE_SCHEMA,
            "reports": reports,
            "failing": failing,
            "consistent": failing.is_empty(),
        })
    };
    if a.timing {
        doc["runtime_seconds"] = json!(start.elapsed().as_secs_f64());
    }
    emit_json(a.out.as_deref(), doc, &a)?;
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verdict(format!("inconsistent: {}", failing.join(", "))))
    }
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Comma-separated point of `∂I^{n+1}`, or of `S^n` with `--surface sphere`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    #[arg(long, value_enum)]
    pub surface: Option<SurfaceArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn eval(mut a: EvalArgs) -> Result<(), CliError> {
    let map = load_bundle(&required(a.bundle.clone(), "bundle")?)?;
    let x = parse_list(&required(a.point.clone(), "point")?)?;
    if x.len() != map.n() + 1 {
        return Err(usage(format!("point needs {} coordinates", map.n() + 1)));
    }
    let p = match *a.surface.get_or_insert(SurfaceArg::Cube) {
        SurfaceArg::Cube => BoundaryPoint::from_ambient(&x).map_err(usage)?,
        SurfaceArg::Sphere => sphere_to_cube(&x).map_err(usage)?,
    };
    let image = map.eval(&p).map_err(usage)?;
    let doc = json!({
        "schema": EVAL_SCHEMA,
        "cube_point": p.ambient(),
        "face": p.face,
        "tree_point": map.tree_point(&p).map_err(usage)?,
        "offset": map.projection().apply(&p.ambient()),
        "image": image,
    });
    emit_json(a.out.as_deref(), doc, &a)
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct FiberArgs {
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Comma-separated point of `R^q`.
    #[arg(long, allow_hyphen_values = true)]
    pub value: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fiber(a: FiberArgs) -> Result<(), CliError> {
    let map = load_bundle(&required(a.bundle.clone(), "bundle")?)?;
    let y = parse_list(&required(a.value.clone(), "value")?)?;
    if y.len() != map.q() {
        return Err(usage(format!("value needs {} coordinates", map.q())));
    }
    let comps = map.fiber(&y);
    let total = fiber_total_volume(&map, &comps);
    let components: Vec<Value> = comps
        .iter()
        .map(|c| {
            let v = fiber_total_volume(&map, std::slice::from_ref(c));
            json!({
                "tree_point": c.point,
                "offset": c.offset,
                "face": c.face,
                "descriptor": c.descriptor,
                "tree_fiber_volume": fiber_volume(&c.descriptor),
                "volume": v.volume,
                "degenerate_boxes": v.degenerate_boxes,
            })
        })
        .collect();
    let doc = json!({
        "schema": FIBER_SCHEMA,
        "value": y,
        "components": components,
        "volume": total.volume,
        "degenerate_boxes": total.degenerate_boxes,
    });
    emit_json(a.out.as_deref(), doc, &a)?;
    if total.degenerate_boxes > 0 {
        return Err(CliError::Degenerate(format!(
            "{} boxes sliced degenerately",
            total.degenerate_boxes
        )));
    }
    Ok(())
}
