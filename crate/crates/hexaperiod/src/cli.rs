//! The `hexaperiod` command line.
//!
//! Exit codes: 0 success, 1 I/O or numerical failure, 2 usage error,
//! 3 domain error, 4 resource guard.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hexaperiod_core::asymptotics::{self as asy, AlphaConstants, BoundaryKind};
use hexaperiod_core::enumerate::{marginals, partition_polynomial};
use hexaperiod_core::kernel::{refined_density, Kernel, KernelConfig};
use hexaperiod_core::model::{lozenge_counts, t_max, tiling_weight_exponent};
use hexaperiod_core::sample::{ScanOrder, SamplerConfig, RNG_NAME};
use hexaperiod_core::{Alpha, Error, ModelParams};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::io::{density_json, envelope, tiling_from_json, tiling_to_json, IoError, RngInfo, RunMetadata};
use crate::render::{arctic_csv, arctic_overlay_svg, heatmap_csv, heatmap_ppm, tiling_to_svg, Field, RenderStyle};
use crate::{checks, par};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

const MAX_SAMPLE_N: usize = 1000;
const MAX_GRID: usize = 4096;
const MAX_ARCTIC_SAMPLES: usize = 1_000_000;
const MAX_NODES: usize = 1 << 16;
const MAX_PRECISION: usize = 8192;
const MAX_KERNEL_N: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "hexaperiod", version, about = "2x2-periodic weighted lozenge tilings of the hexagon")]
pub struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: HEXAPERIOD_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Leave timing out of the metadata, for byte-identical output.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact partition function and densities by transfer matrices.
    Enumerate(EnumerateArgs),
    /// Heat-bath Glauber dynamics.
    Sample(SampleArgs),
    /// Limiting density matrices at a macroscopic point.
    Density(DensityArgs),
    /// Trace the arctic curve.
    Arctic(ArcticArgs),
    /// Grid of one limiting density entry.
    Heatmap(HeatmapArgs),
    /// One 2x2 diagonal block of the finite-N correlation kernel.
    Kernel(KernelArgs),
    /// Finite-N density matrices from the kernel.
    KernelDensity(KernelDensityArgs),
    /// Draw a tiling as SVG.
    Render(RenderArgs),
    /// Run the quick invariant suites.
    Selftest,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Weight parameter: decimal, `p/q` or scientific notation.
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Alpha,
    /// Also dump every coefficient of Z.
    #[arg(long)]
    pub poly: bool,
    /// Restrict the density output to one block.
    #[arg(long, requires = "y")]
    pub x: Option<usize>,
    #[arg(long, requires = "x")]
    pub y: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scan {
    Raster,
    Random,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Alpha,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Sweeps discarded first (default max(100, 2 n^2)).
    #[arg(long)]
    pub burnin: Option<u64>,
    #[arg(long, value_enum, default_value_t = Scan::Raster)]
    pub scan: Scan,
    /// SVG of the final state of chain 0.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Tiling JSON of the final state of chain 0.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
}

#[derive(Debug, Args)]
pub struct ArcticArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Number of regular points, split evenly over the twelve arcs.
    #[arg(long, default_value_t = 600)]
    pub samples: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Overlay drawing of the curve over the hexagon.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Lozenge type 1, 2 or 3.
    #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=3))]
    pub kind: u8,
    /// Matrix entry: 00, 01, 10 or 11.
    #[arg(long, value_parser = ["00", "01", "10", "11"])]
    pub entry: String,
    #[arg(long)]
    pub ppm: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// SVG with the arctic curve drawn over the heatmap.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long = "N")]
    pub n_half: usize,
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Alpha,
    #[arg(long)]
    pub x: usize,
    #[arg(long)]
    pub y: i64,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub epsx: u8,
    #[arg(long, default_value_t = 1024)]
    pub nodes: usize,
    /// Working precision in bits.
    #[arg(long, default_value_t = 256)]
    pub prec: usize,
}

#[derive(Debug, Args)]
pub struct KernelDensityArgs {
    #[arg(long = "N")]
    pub n_half: usize,
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Alpha,
    #[arg(long)]
    pub x: usize,
    #[arg(long)]
    pub y: usize,
    #[arg(long, default_value_t = 1024)]
    pub nodes: usize,
    #[arg(long, default_value_t = 256)]
    pub prec: usize,
    /// Double nodes and precision until successive results agree to this.
    #[arg(long)]
    pub refine: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub max_doublings: u32,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Tiling JSON to draw.
    #[arg(long, conflicts_with = "t_max", required_unless_present = "t_max")]
    pub input: Option<PathBuf>,
    /// Draw the minimal-weight tiling of this size instead.
    #[arg(long)]
    pub t_max: Option<usize>,
    /// SVG destination (default: stdout).
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Pixels per lattice unit.
    #[arg(long, default_value_t = 20.0)]
    pub scale: f64,
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    Alpha::parse(s).map_err(|e| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::InvalidTiling(_) | Error::OutsideLiquid => EXIT_DOMAIN,
            Error::ResourceGuard { .. } => EXIT_RESOURCE,
            Error::Numerical(_) => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Model(m) => m.into(),
            IoError::Json(j) => Failure { code: EXIT_DOMAIN, message: format!("malformed tiling JSON: {j}") },
        }
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_FAILURE, message: format!("{}: {e}", path.display()) }
}

fn guard(what: &'static str, limit: usize, got: usize) -> Result<(), Failure> {
    if got > limit {
        return Err(Error::ResourceGuard { what, limit, got }.into());
    }
    Ok(())
}

fn domain(msg: String) -> Failure {
    Failure { code: EXIT_DOMAIN, message: format!("domain error: {msg}") }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| io_fail(path, e))
}

/// Parses and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let text = out.map(|v| serde_json::to_string_pretty(&v).expect("json value") + "\n");
            match (text, &cli.out) {
                (Some(t), Some(p)) => match write_file(p, t.as_bytes()) {
                    Ok(()) => EXIT_OK,
                    Err(f) => report(f),
                },
                (Some(t), None) => {
                    print!("{t}");
                    EXIT_OK
                }
                (None, _) => EXIT_OK,
            }
        }
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> i32 {
    eprintln!("hexaperiod: {}", f.message);
    f.code
}

/// Runs the command; `Ok(None)` means the command wrote its own output.
pub fn execute(cli: &Cli) -> Result<Option<Value>, Failure> {
    let t0 = Instant::now();
    let threads = par::resolve_threads(cli.threads);
    let (mut meta, body) = match &cli.cmd {
        Command::Enumerate(a) => enumerate(a)?,
        Command::Sample(a) => sample(a, threads)?,
        Command::Density(a) => density(a)?,
        Command::Arctic(a) => arctic(a)?,
        Command::Heatmap(a) => heatmap(a, threads)?,
        Command::Kernel(a) => kernel(a)?,
        Command::KernelDensity(a) => kernel_density(a)?,
        Command::Render(a) => return render(a, cli.out.as_deref()).map(|_| None),
        Command::Selftest => selftest(cli.no_timing)?,
    };
    if !cli.no_timing {
        meta.elapsed_seconds = Some(t0.elapsed().as_secs_f64());
    }
    Ok(Some(envelope(&meta, body)))
}

type Output = (RunMetadata, Value);

fn alpha_json(a: Alpha) -> Value {
    match a {
        Alpha::Rational { num, den } => json!({ "value": a.value(), "exact": format!("{num}/{den}") }),
        Alpha::Float(f) => json!({ "value": f }),
    }
}

fn big_json(b: &BigUint) -> Value {
    b.to_u64().map_or_else(|| json!(b.to_string()), |v| json!(v))
}

fn enumerate(a: &EnumerateArgs) -> Result<Output, Failure> {
    let params = ModelParams::new(a.n, a.alpha)?;
    let z = partition_polynomial(a.n)?;
    let m = marginals(&params)?;
    let (e0, c0) = z.min_term().ok_or_else(|| domain("empty partition polynomial".into()))?;
    let mut body = json!({
        "n": a.n,
        "alpha": alpha_json(a.alpha),
        "Z_at_alpha": z.eval(a.alpha),
        "min_exponent": e0,
        "min_coefficient": big_json(c0),
        "num_tilings_at_alpha1": big_json(&z.total()),
    });
    if let Alpha::Rational { num, den } = a.alpha {
        body["Z_at_alpha_exact"] = json!(z.eval_rational(num, den).to_string());
    }
    let blocks: Vec<(usize, usize)> = match (a.x, a.y) {
        (Some(x), Some(y)) => vec![(x, y)],
        _ => (0..a.n).flat_map(|x| (0..a.n).map(move |y| (x, y))).collect(),
    };
    let mut dens = Vec::new();
    for (x, y) in blocks {
        let d = m.density(x, y)?;
        let mut entry = json!({ "x": x, "y": y });
        entry.as_object_mut().unwrap().extend(density_json(&d).as_object().unwrap().clone());
        if let Some(ex) = m.density_exact(x, y)? {
            let s: Vec<Vec<Vec<String>>> = ex.iter().map(|mat| mat.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect()).collect();
            entry["exact"] = json!({ "P1": s[0], "P2": s[1], "P3": s[2] });
        }
        dens.push(entry);
    }
    body["density"] = json!(dens);
    if a.poly {
        let map: serde_json::Map<String, Value> = z.to_string_map().into_iter().map(|(k, v)| (k, json!(v))).collect();
        body["poly"] = Value::Object(map);
    }
    let meta = RunMetadata::new("enumerate", json!({ "n": a.n, "alpha": a.alpha.to_string(), "poly": a.poly, "x": a.x, "y": a.y }));
    Ok((meta, body))
}

fn sample(a: &SampleArgs, threads: usize) -> Result<Output, Failure> {
    guard("sample n", MAX_SAMPLE_N, a.n)?;
    let params = ModelParams::new(a.n, a.alpha)?;
    let mut cfg = SamplerConfig::new(params, a.sweeps, a.seed, a.chains);
    if let Some(b) = a.burnin {
        cfg.burnin = b;
    }
    cfg.scan = match a.scan {
        Scan::Raster => ScanOrder::Raster,
        Scan::Random => ScanOrder::RandomSite,
    };
    let (state, stats) = par::run_chains(&cfg, threads)?;
    if let Some(p) = &a.svg {
        write_file(p, tiling_to_svg(&state, &RenderStyle::default())?.as_bytes())?;
    }
    if let Some(p) = &a.json {
        write_file(p, tiling_to_json(&state).as_bytes())?;
    }
    let mut meta = RunMetadata::new(
        "sample",
        json!({
            "n": a.n, "alpha": a.alpha.to_string(), "sweeps": a.sweeps, "seed": a.seed,
            "chains": a.chains, "burnin": cfg.burnin, "scan": format!("{:?}", a.scan).to_lowercase(),
        }),
    );
    meta.rng = Some(RngInfo { algorithm: RNG_NAME, seed: a.seed });
    let body = json!({
        "samples": stats.samples,
        "updates": stats.updates,
        "flips": stats.flips,
        "flip_rate": stats.flips as f64 / stats.updates.max(1) as f64,
        "parity_density": density_json(&stats.parity_density()),
        "final_state": {
            "weight_exponent": tiling_weight_exponent(&state)?,
            "lozenge_counts": lozenge_counts(&state)?,
        },
    });
    Ok((meta, body))
}

fn density(a: &DensityArgs) -> Result<Output, Failure> {
    let k = AlphaConstants::new(a.alpha)?;
    let meta = RunMetadata::new("density", json!({ "alpha": a.alpha, "xi": a.xi, "eta": a.eta }));
    let body = match asy::find_saddle(&k, a.xi, a.eta)? {
        Some(sd) => {
            let d = asy::density_from_saddle(&k, sd.s);
            json!({
                "xi": a.xi, "eta": a.eta, "liquid": true,
                "s": { "re": sd.s.re, "im": sd.s.im },
                "w": { "re": sd.w.re, "im": sd.w.im },
                "circle_class": sd.circle_class,
                "density": density_json(&d),
                "sum_rule_residual": d.sum_rule_residual(),
            })
        }
        None => {
            let b = asy::arctic_boundary(&k, 1200)?;
            let f = asy::frozen_family_near(&b, a.xi, a.eta).ok_or_else(|| domain("empty boundary trace".into()))?;
            json!({
                "xi": a.xi, "eta": a.eta, "liquid": false, "s": null, "frozen_family": f,
                "density": density_json(&asy::frozen_limit(f)),
            })
        }
    };
    Ok((meta, body))
}

fn arctic(a: &ArcticArgs) -> Result<Output, Failure> {
    guard("arctic samples", MAX_ARCTIC_SAMPLES, a.samples)?;
    let k = AlphaConstants::new(a.alpha)?;
    let pts = asy::arctic_boundary(&k, a.samples)?;
    if let Some(p) = &a.csv {
        write_file(p, arctic_csv(&pts).as_bytes())?;
    }
    if let Some(p) = &a.svg {
        write_file(p, arctic_overlay_svg(a.alpha, &pts, 800.0, None).as_bytes())?;
    }
    let pick = |kind: BoundaryKind| -> Vec<Value> {
        pts.iter()
            .filter(|p| p.kind == kind)
            .map(|p| json!({ "s": if p.s.is_finite() { json!(p.s) } else { json!("-inf") }, "branch": p.branch, "xi": p.xi, "eta": p.eta }))
            .collect()
    };
    let meta = RunMetadata::new("arctic", json!({ "alpha": a.alpha, "samples": a.samples }));
    let body = json!({
        "points": pts.len(),
        "tangency_points": pick(BoundaryKind::Tangency),
        "cusps": pick(BoundaryKind::Cusp),
    });
    Ok((meta, body))
}

/// Field of one density entry on a `g x g` grid; `NaN` outside the open
/// hexagon.
pub fn density_field(alpha: f64, g: usize, kind: u8, row: usize, col: usize, threads: usize) -> Result<Field, Error> {
    let k = AlphaConstants::new(alpha)?;
    let b = asy::arctic_boundary(&k, 2400)?;
    let rows = par::map_indexed(g, threads, |r| -> Result<Vec<f64>, Error> {
        (0..g)
            .map(|c| {
                let (xi, eta) = Field::point(g, r, c);
                if xi.abs() >= 1.0 || eta.abs() >= 1.0 || (xi - eta).abs() >= 1.0 {
                    return Ok(f64::NAN);
                }
                Ok(asy::limit_density(&k, &b, xi, eta)?.p[kind as usize - 1][row][col])
            })
            .collect()
    });
    let mut values = Vec::with_capacity(g * g);
    for r in rows {
        values.extend(r?);
    }
    Ok(Field { g, values })
}

fn heatmap(a: &HeatmapArgs, threads: usize) -> Result<Output, Failure> {
    guard("heatmap grid", MAX_GRID, a.grid)?;
    if a.grid == 0 {
        return Err(domain("grid must be at least 1".into()));
    }
    let e = a.entry.as_bytes();
    let (row, col) = ((e[0] - b'0') as usize, (e[1] - b'0') as usize);
    let field = density_field(a.alpha, a.grid, a.kind, row, col, threads)?;
    let (ppm, clamped) = heatmap_ppm(&field);
    if clamped > 0 {
        eprintln!("hexaperiod: warning: {clamped} heatmap values outside [0, 1] were clamped");
    }
    if let Some(p) = &a.ppm {
        write_file(p, &ppm)?;
    }
    if let Some(p) = &a.csv {
        write_file(p, heatmap_csv(&field).as_bytes())?;
    }
    if let Some(p) = &a.overlay {
        let k = AlphaConstants::new(a.alpha)?;
        let b = asy::arctic_boundary(&k, 600)?;
        write_file(p, arctic_overlay_svg(a.alpha, &b, 800.0, Some(&field)).as_bytes())?;
    }
    let inside: Vec<f64> = field.values.iter().copied().filter(|v| !v.is_nan()).collect();
    let meta = RunMetadata::new(
        "heatmap",
        json!({ "alpha": a.alpha, "grid": a.grid, "type": a.kind, "entry": a.entry }),
    );
    let body = json!({
        "grid": a.grid,
        "pixels_in_hexagon": inside.len(),
        "min": inside.iter().copied().fold(f64::INFINITY, f64::min),
        "max": inside.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "clamped": clamped,
    });
    Ok((meta, body))
}

fn kernel_config(n_half: usize, alpha: Alpha, nodes: usize, prec: usize) -> Result<KernelConfig, Failure> {
    guard("kernel N", MAX_KERNEL_N, n_half)?;
    guard("quadrature nodes", MAX_NODES, nodes)?;
    guard("precision bits", MAX_PRECISION, prec)?;
    let mut cfg = KernelConfig::new(n_half, alpha);
    cfg.nodes = nodes;
    cfg.precision_bits = prec;
    cfg.validate()?;
    Ok(cfg)
}

fn kernel_meta(cmd: &str, cfg: &KernelConfig, k: &Kernel, extra: Value) -> RunMetadata {
    let mut config = json!({
        "N": cfg.n_half, "alpha": cfg.alpha.to_string(), "nodes": cfg.nodes, "precision_bits": cfg.precision_bits,
    });
    config.as_object_mut().unwrap().extend(extra.as_object().cloned().unwrap_or_default());
    let mut meta = RunMetadata::new(cmd, config);
    meta.residuals.insert("p_orthogonality".into(), k.ops().p_residual);
    meta.residuals.insert("q_orthogonality".into(), k.ops().q_residual);
    meta
}

fn kernel(a: &KernelArgs) -> Result<Output, Failure> {
    let cfg = kernel_config(a.n_half, a.alpha, a.nodes, a.prec)?;
    let k = Kernel::new(cfg.clone())?;
    let b = k.kernel_block(a.x, a.y, a.epsx)?;
    let mut meta = kernel_meta("kernel", &cfg, &k, json!({ "x": a.x, "y": a.y, "epsx": a.epsx }));
    meta.residuals.insert("max_imag".into(), b.max_imag());
    let re: Vec<Vec<f64>> = b.m.iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
    let im: Vec<Vec<f64>> = b.m.iter().map(|r| r.iter().map(|z| z.im).collect()).collect();
    Ok((meta, json!({ "matrix": re, "matrix_imag": im })))
}

fn kernel_density(a: &KernelDensityArgs) -> Result<Output, Failure> {
    let cfg = kernel_config(a.n_half, a.alpha, a.nodes, a.prec)?;
    let (d, used) = match a.refine {
        Some(tol) => {
            let top = a.nodes << a.max_doublings.min(16);
            guard("quadrature nodes", MAX_NODES, top)?;
            refined_density(&cfg, a.x, a.y, tol, a.max_doublings)?
        }
        None => (Kernel::new(cfg.clone())?.finite_density_matrices(a.x, a.y)?, cfg.clone()),
    };
    let k = Kernel::new(used.clone())?;
    let mut meta = kernel_meta("kernel-density", &cfg, &k, json!({ "x": a.x, "y": a.y, "refine": a.refine }));
    meta.residuals.insert("max_imag".into(), d.max_imag);
    meta.residuals.insert("sum_rule".into(), d.triple.sum_rule_residual());
    let body = json!({
        "density": density_json(&d.triple),
        "nodes": used.nodes,
        "precision_bits": used.precision_bits,
    });
    Ok((meta, body))
}

fn render(a: &RenderArgs, out: Option<&Path>) -> Result<(), Failure> {
    let t = match (&a.input, a.t_max) {
        (Some(p), _) => tiling_from_json(&std::fs::read_to_string(p).map_err(|e| io_fail(p, e))?)?,
        (None, Some(n)) => t_max(n)?,
        (None, None) => return Err(Failure { code: EXIT_USAGE, message: "need --input or --t-max".into() }),
    };
    let style = RenderStyle { scale: a.scale, ..RenderStyle::default() };
    style.validate().map_err(domain)?;
    let svg = tiling_to_svg(&t, &style)?;
    match a.svg.as_deref().or(out) {
        Some(p) => write_file(p, svg.as_bytes()),
        None => {
            print!("{svg}");
            Ok(())
        }
    }
}

fn selftest(no_timing: bool) -> Result<Output, Failure> {
    let mut results = Vec::new();
    let mut all = true;
    for c in checks::selftest() {
        let o = c.run();
        eprintln!("{}", o.line());
        all &= o.passed;
        let mut r = json!({ "id": o.id, "name": o.name, "passed": o.passed, "detail": o.detail });
        if !no_timing {
            r["seconds"] = json!(o.seconds);
        }
        results.push(r);
    }
    if !all {
        return Err(Failure { code: EXIT_FAILURE, message: "selftest failed".into() });
    }
    Ok((RunMetadata::new("selftest", json!({})), json!({ "passed": all, "checks": results })))
}
