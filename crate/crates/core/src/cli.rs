//! Command-line front end. `run` parses arguments, dispatches and maps
//! errors to exit codes: 0 success, 2 usage or configuration error, 1 any
//! other failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::bounds::{
    attach_bounds, certify_external, check_suitable, closed_form_delta, compute_delta, external_additive_term,
    external_bound, general_bound_sampled, refined_bound_term,
};
use crate::config::{Parameters, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    default_h_list, ensemble_h_list, randomized_ensemble, sweep_displacement, sweep_h, write_records_csv,
    write_records_gnuplot, FieldSource, RunRecord,
};
use crate::grid::Grid;
use crate::hausdorff::{dh_approx, dh_approx_shapes, dh_oracle, BoundKind, Bound, HausdorffReport};
use crate::point::{to_vec, Point};
use crate::redistance::{fast_march, positive_part, sample_exact_sd, sample_levelset, ScalarField};
use crate::shapes::{RingParams, Shape};
use crate::stochastic::{
    analyze_iterates, expected_min_distance, middle_segment, probe_segment, simulate_min_distance,
    uniformity_histogram,
};

#[derive(Debug, Parser)]
#[command(
    name = "hausdorff-grid",
    version,
    about = "Hausdorff distances of sets sampled on uniform grids, with error bounds and convergence experiments"
)]
pub struct Cli {
    /// JSON run configuration (scene, grid, parameters, seed, output)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed for randomized operations
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Worker threads (results do not depend on it)
    #[arg(long, global = true, value_name = "K", env = "HAUSDORFF_GRID_THREADS")]
    pub threads: Option<usize>,

    /// Output file (standard output when omitted)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Whitespace-separated columns with a `#` header
    Gnuplot,
    /// Raw little-endian field values (redistance only)
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    ExactSd,
    Fmm,
}

impl From<Source> for FieldSource {
    fn from(s: Source) -> FieldSource {
        match s {
            Source::ExactSd => FieldSource::ExactSd,
            Source::Fmm => FieldSource::Fmm,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid approximation of d_H for the configured scene
    Compute(SceneArgs),
    /// Grid approximation plus the applicable upper bounds
    Bounds(BoundsArgs),
    /// Check an external Hausdorff distance witness and bound the error
    Certify(CertifyArgs),
    /// Redistance a level set of the scene's first set with Fast Marching
    Redistance(RedistanceArgs),
    /// Dimensional constants of the suitable-grid bound
    Constants(ConstantsArgs),
    /// Circle-in-ring refinement sweep with an order fit
    SweepH(SweepHArgs),
    /// Circle-in-ring sweep over inner circle displacements
    SweepDisplacement(SweepDisplacementArgs),
    /// Circle-in-ring runs with random grid offsets and directions
    Randomized(RandomizedArgs),
    /// Closest pair and return time of the sequence frac(x0 + i k)
    SequenceAnalysis(SequenceArgs),
    /// Monte Carlo check of the minimum-distance order-statistics model
    McMindist(McArgs),
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Grid spacing when the config has no grid
    #[arg(long)]
    pub h: Option<f64>,
    /// Where node distances come from
    #[arg(long, value_enum)]
    pub source: Option<Source>,
    /// Also run the brute-force oracle with this sample gap
    #[arg(long, value_name = "GAP")]
    pub oracle_gap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Lattice pitch for the suitable-grid check
    #[arg(long, value_name = "GAP")]
    pub suitable_gap: Option<f64>,
    /// Also report the sampled (uncertified) cell bound with M samples per axis
    #[arg(long, value_name = "M")]
    pub sampled_m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Grid spacing when the config has no grid
    #[arg(long)]
    pub h: Option<f64>,
    /// External ball radius r
    #[arg(long)]
    pub radius: Option<f64>,
    /// Point-cloud gap for the admissibility check
    #[arg(long, value_name = "GAP")]
    pub gap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RedistanceArgs {
    /// Grid spacing when the config has no grid
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// Optimizer start points per dimension
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepHArgs {
    /// Space dimension (2 or 3)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Inner circle displacement, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub displacement: Option<Vec<f64>>,
    /// Decreasing grid spacings, comma separated
    #[arg(long, value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    /// Where node distances come from
    #[arg(long, value_enum)]
    pub source: Option<Source>,
}

#[derive(Debug, Args)]
pub struct SweepDisplacementArgs {
    /// Space dimension (2 or 3)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Grid spacing
    #[arg(long)]
    pub h: Option<f64>,
    /// Largest displacement along the first axis
    #[arg(long)]
    pub max: Option<f64>,
    /// Number of displacements from 0 to max
    #[arg(long)]
    pub steps: Option<usize>,
    /// Where node distances come from
    #[arg(long, value_enum)]
    pub source: Option<Source>,
}

#[derive(Debug, Args)]
pub struct RandomizedArgs {
    /// Space dimension (2 or 3)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of runs
    #[arg(long)]
    pub runs: Option<usize>,
    /// Decreasing grid spacings, comma separated
    #[arg(long, value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    /// Distance of the inner circle from the centre
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// 1000 runs instead of the default 200
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    /// Start value (drawn from the seed when omitted)
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Step (drawn from the seed when omitted)
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Number of steps N for the closest-pair search
    #[arg(long)]
    pub n: Option<usize>,
    /// Longest forward scan for the return index m
    #[arg(long)]
    pub scan_limit: Option<u64>,
    /// Also write a CSV histogram of the iterates here
    #[arg(long, value_name = "PATH")]
    pub histogram: Option<PathBuf>,
    /// Iterates in the histogram
    #[arg(long)]
    pub count: Option<usize>,
    /// Histogram bins
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Space dimension (2 or 3)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sample counts N, comma separated
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// Trials per sample count
    #[arg(long)]
    pub trials: Option<usize>,
}

/// Resolved global context for one invocation.
struct Ctx {
    config: RunConfig,
    seed: u64,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Ctx {
    fn params(&self) -> &Parameters {
        &self.config.parameters
    }

    fn format_or(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Error::Config(format!("format {f:?} is not available for this subcommand")))
        }
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, bytes).map_err(Error::from),
            None => {
                let mut s = std::io::stdout().lock();
                s.write_all(bytes)?;
                s.flush().map_err(Error::from)
            }
        }
    }

    fn emit_json(&self, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.emit(s.as_bytes())
    }

    fn scene(&self) -> Result<(Shape, Shape)> {
        self.config
            .scene
            .as_ref()
            .ok_or_else(|| Error::Config("this subcommand needs a scene in --config".into()))?
            .build()
    }

    /// The configured grid, or one with spacing `h` covering both shapes.
    fn grid(&self, h: Option<f64>, a: &Shape, b: &Shape) -> Result<Grid> {
        if let Some(spec) = &self.config.grid {
            let g = Grid::from_spec(spec)?;
            if g.dim() != a.dim() {
                return Err(Error::DimensionMismatch { expected: g.dim(), found: a.dim() });
            }
            return Ok(g);
        }
        let h = h
            .or(self.params().h)
            .ok_or_else(|| Error::Config("give a grid in the config or a spacing with --h".into()))?;
        let dim = a.dim();
        let mut lo = Point::ORIGIN;
        let mut hi = Point::ORIGIN;
        for (i, s) in [a, b].iter().enumerate() {
            let (slo, shi) = match s.bounding_box() {
                Some(Some(bb)) => bb,
                _ => return Err(Error::Config("unbounded or empty shapes need an explicit grid".into())),
            };
            for k in 0..dim {
                lo[k] = if i == 0 { slo[k] } else { lo[k].min(slo[k]) };
                hi[k] = if i == 0 { shi[k] } else { hi[k].max(shi[k]) };
            }
        }
        for k in 0..dim {
            lo[k] -= 2.0 * h;
            hi[k] += 2.0 * h;
        }
        Grid::covering(dim, lo, hi, h, Point::ORIGIN)
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = subcommand_name(&cli.command);
    config.check_operation(name)?;
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let ctx = Ctx {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        out: cli.out.clone().or_else(|| config.output.clone()),
        format: cli.format,
        config,
    };
    match &cli.command {
        Command::Compute(a) => compute(&ctx, a),
        Command::Bounds(a) => bounds(&ctx, a),
        Command::Certify(a) => certify(&ctx, a),
        Command::Redistance(a) => redistance(&ctx, a),
        Command::Constants(a) => constants(&ctx, a),
        Command::SweepH(a) => cmd_sweep_h(&ctx, a),
        Command::SweepDisplacement(a) => cmd_sweep_displacement(&ctx, a),
        Command::Randomized(a) => randomized(&ctx, a),
        Command::SequenceAnalysis(a) => sequence(&ctx, a),
        Command::McMindist(a) => mc(&ctx, a),
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Compute(_) => "compute",
        Command::Bounds(_) => "bounds",
        Command::Certify(_) => "certify",
        Command::Redistance(_) => "redistance",
        Command::Constants(_) => "constants",
        Command::SweepH(_) => "sweep-h",
        Command::SweepDisplacement(_) => "sweep-displacement",
        Command::Randomized(_) => "randomized",
        Command::SequenceAnalysis(_) => "sequence-analysis",
        Command::McMindist(_) => "mc-mindist",
    }
}

fn fmm_distance(g: &Grid, s: &Shape) -> Result<ScalarField> {
    Ok(positive_part(&fast_march(&sample_levelset(g, s)?)?))
}

/// Report for the scene plus, when fields were built, the two distance fields.
fn scene_report(ctx: &Ctx, args: &SceneArgs) -> Result<(Grid, Shape, Shape, HausdorffReport)> {
    let (a, b) = ctx.scene()?;
    let g = ctx.grid(args.h, &a, &b)?;
    let source = args.source.map(FieldSource::from).or(ctx.params().source).unwrap_or(FieldSource::ExactSd);
    let mut report = match source {
        FieldSource::ExactSd => dh_approx_shapes(&g, &a, &b)?,
        FieldSource::Fmm => dh_approx(&fmm_distance(&g, &a)?, &fmm_distance(&g, &b)?)?,
    };
    if let Some(gap) = args.oracle_gap.or(ctx.params().oracle_gap) {
        report.oracle = Some(dh_oracle(&a, &b, gap)?);
    }
    Ok((g, a, b, report))
}

fn report_json(g: &Grid, report: &HausdorffReport) -> Value {
    let mut v = report.to_json();
    v["grid"] = serde_json::to_value(g.to_spec()).expect("grid spec serializes");
    v
}

fn compute(ctx: &Ctx, args: &SceneArgs) -> Result<()> {
    ctx.format_or(Format::Json, &[Format::Json])?;
    let (g, _, _, report) = scene_report(ctx, args)?;
    eprintln!("d_tilde = {} ({} tied nodes)", report.d_tilde, report.ties);
    ctx.emit_json(&report_json(&g, &report))
}

fn bounds(ctx: &Ctx, args: &BoundsArgs) -> Result<()> {
    ctx.format_or(Format::Json, &[Format::Json])?;
    let (g, a, b, mut report) = scene_report(ctx, &args.scene)?;
    let gap = args.suitable_gap.or(ctx.params().suitable_gap).unwrap_or(g.spacing() / 8.0);
    let suitable = check_suitable(&g, &a, gap) && check_suitable(&g, &b, gap);
    attach_bounds(&mut report, &g, suitable);
    if let Some(m) = args.sampled_m.or(ctx.params().sampled_m) {
        let da = positive_part(&sample_exact_sd(&g, &a)?);
        let db = positive_part(&sample_exact_sd(&g, &b)?);
        report.bounds.push(Bound { kind: BoundKind::SampledGeneral, value: general_bound_sampled(&da, &db, m)? });
    }
    let mut v = report_json(&g, &report);
    v["suitable"] = json!(suitable);
    v["suitable_gap"] = json!(gap);
    v["upper_bound"] = json!(report.upper_bound());
    ctx.emit_json(&v)
}

fn certify(ctx: &Ctx, args: &CertifyArgs) -> Result<()> {
    ctx.format_or(Format::Json, &[Format::Json])?;
    let (a, b) = ctx.scene()?;
    let dim = a.dim();
    let gap = args.gap.or(ctx.params().certify_gap).unwrap_or(0.02);
    let r = args
        .radius
        .or(ctx.params().radius)
        .ok_or_else(|| Error::Config("certify needs --radius".into()))?;
    let witness = match &ctx.params().witness {
        Some([x, y]) => {
            if x.len() != dim || y.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.len().max(y.len()) });
            }
            (Point::from_slice(x)?, Point::from_slice(y)?)
        }
        None => dh_oracle(&a, &b, gap)?.witness,
    };
    let cert = certify_external(&a, &b, witness, r, gap)?;
    let mut v = json!({
        "x": to_vec(&cert.x, dim),
        "y": to_vec(&cert.y, dim),
        "d": to_vec(&cert.d, dim),
        "r": cert.r,
        "c": to_vec(&cert.c, dim),
        "R": cert.big_r,
        "admissible": cert.admissible,
        "slack": cert.slack,
        "tol": cert.tol,
    });
    let h = args.h.or(ctx.params().h);
    if ctx.config.grid.is_some() || h.is_some() {
        let g = ctx.grid(h, &a, &b)?;
        let report = dh_approx_shapes(&g, &a, &b)?;
        v["d_tilde"] = json!(report.d_tilde);
        v["additive_term"] = json!(external_additive_term(dim, g.spacing(), r).ok());
        v["external_bound"] = json!(external_bound(&cert, &report, &g).ok());
        let (p0, p1) = middle_segment(&cert.x, &cert.d, r);
        if let Ok(probe) = probe_segment(&g, &p0, &p1) {
            let beta = probe.beta;
            v["beta"] = json!(beta);
            v["refined_term"] = json!(refined_bound_term(beta, r));
        }
    }
    eprintln!("admissible = {} (slack {:.3e})", cert.admissible, cert.slack);
    ctx.emit_json(&v)
}

fn redistance(ctx: &Ctx, args: &RedistanceArgs) -> Result<()> {
    let format = ctx.format_or(Format::Csv, &[Format::Csv, Format::Binary])?;
    let (a, b) = ctx.scene()?;
    let g = ctx.grid(args.h, &a, &b)?;
    let field = fast_march(&sample_levelset(&g, &a)?)?;
    if a.is_exact() {
        let exact = sample_exact_sd(&g, &a)?;
        let err = field.values().iter().zip(exact.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        eprintln!("max node error against the exact signed distance: {err:.3e} (h = {})", g.spacing());
    }
    let mut buf = Vec::new();
    match format {
        Format::Binary => field.write_binary(&mut buf)?,
        _ => field.write_csv(&mut buf)?,
    }
    ctx.emit(&buf)
}

fn constants(ctx: &Ctx, args: &ConstantsArgs) -> Result<()> {
    let format = ctx.format_or(Format::Csv, &[Format::Csv, Format::Json])?;
    let starts = args.starts.or(ctx.params().starts).unwrap_or(64);
    let rows = (1..=3)
        .map(|dim| {
            let c = compute_delta(dim, starts)?;
            let closed = closed_form_delta(dim)?;
            Ok((dim, c, closed))
        })
        .collect::<Result<Vec<_>>>()?;
    if format == Format::Json {
        let v: Vec<Value> = rows
            .iter()
            .map(|(dim, c, closed)| {
                json!({
                    "dim": dim,
                    "value": c.value,
                    "closed_form": closed,
                    "abs_diff": (c.value - closed).abs(),
                    "maximizer": to_vec(&c.maximizer, *dim),
                })
            })
            .collect();
        return ctx.emit_json(&json!(v));
    }
    let mut s = String::from("dim,value,closed_form,abs_diff\n");
    for (dim, c, closed) in &rows {
        s.push_str(&format!("{dim},{},{closed},{}\n", c.value, (c.value - closed).abs()));
    }
    ctx.emit(s.as_bytes())
}

fn ring_params(ctx: &Ctx) -> RingParams {
    ctx.params().ring.unwrap_or_default()
}

fn point_arg(v: &[f64], dim: usize) -> Result<Point> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
    }
    Point::from_slice(v)
}

fn check_dim(dim: usize) -> Result<usize> {
    if (2..=3).contains(&dim) {
        Ok(dim)
    } else {
        Err(Error::Config(format!("experiments run in 2 or 3 dimensions, got {dim}")))
    }
}

fn emit_records(ctx: &Ctx, records: &[RunRecord], extra: Value) -> Result<()> {
    let mut buf = Vec::new();
    match ctx.format_or(Format::Csv, &[Format::Csv, Format::Gnuplot, Format::Json])? {
        Format::Gnuplot => write_records_gnuplot(records, &mut buf)?,
        Format::Json => {
            let mut v = extra;
            v["records"] = serde_json::to_value(records)?;
            return ctx.emit_json(&v);
        }
        _ => write_records_csv(records, &mut buf)?,
    }
    ctx.emit(&buf)
}

fn cmd_sweep_h(ctx: &Ctx, args: &SweepHArgs) -> Result<()> {
    let p = ctx.params();
    let dim = check_dim(args.dim.or(p.dim).unwrap_or(2))?;
    let disp = match args.displacement.as_ref().or(p.displacement.as_ref()) {
        Some(v) => point_arg(v, dim)?,
        None => Point::ORIGIN,
    };
    let h_list = args.h_list.clone().or_else(|| p.h_list.clone()).unwrap_or_else(|| default_h_list(dim));
    let source = args.source.map(FieldSource::from).or(p.source).unwrap_or(FieldSource::ExactSd);
    let (records, fit) = sweep_h(dim, disp, &h_list, source, &ring_params(ctx))?;
    eprintln!("fitted order {:.3} ({} points dropped)", fit.slope, fit.dropped);
    emit_records(ctx, &records, json!({ "fit": fit }))
}

fn cmd_sweep_displacement(ctx: &Ctx, args: &SweepDisplacementArgs) -> Result<()> {
    let p = ctx.params();
    let dim = check_dim(args.dim.or(p.dim).unwrap_or(2))?;
    let h = args.h.or(p.h).unwrap_or(0.1);
    let disps: Vec<Point> = match (&p.displacements, args.max, args.steps) {
        (Some(list), None, None) => list.iter().map(|v| point_arg(v, dim)).collect::<Result<_>>()?,
        _ => {
            let max = args.max.unwrap_or(6.5);
            let steps = args.steps.unwrap_or(66).max(2);
            (0..steps).map(|i| Point::new(max * i as f64 / (steps - 1) as f64, 0.0, 0.0)).collect()
        }
    };
    let source = args.source.map(FieldSource::from).or(p.source).unwrap_or(FieldSource::ExactSd);
    let records = sweep_displacement(dim, h, &disps, source, &ring_params(ctx))?;
    emit_records(ctx, &records, json!({}))
}

fn randomized(ctx: &Ctx, args: &RandomizedArgs) -> Result<()> {
    let p = ctx.params();
    let dim = check_dim(args.dim.or(p.dim).unwrap_or(2))?;
    let runs = args.runs.or(p.runs).unwrap_or(if args.full { 1000 } else { 200 });
    let h_list = args.h_list.clone().or_else(|| p.h_list.clone()).unwrap_or_else(|| ensemble_h_list(dim));
    let magnitude = args.magnitude.or(p.magnitude).unwrap_or(3.0);
    let e = randomized_ensemble(dim, runs, &h_list, ctx.seed, magnitude, &ring_params(ctx))?;
    let median = e.median_slope();
    let above = e.fraction_above(2.0);
    eprintln!(
        "seed {}: {} runs, median order {}, {:.1}% of runs above order 2",
        ctx.seed,
        runs,
        median.map_or("n/a".into(), |m| format!("{m:.3}")),
        100.0 * above
    );
    emit_records(
        ctx,
        &e.records,
        json!({
            "seed": ctx.seed,
            "runs": runs,
            "h_list": h_list,
            "median_order": median,
            "fraction_above_2": above,
            "histogram": e.histogram,
            "fits": e.fits,
            "geometric_means": e.geometric_means(&h_list),
        }),
    )
}

fn sequence(ctx: &Ctx, args: &SequenceArgs) -> Result<()> {
    ctx.format_or(Format::Json, &[Format::Json])?;
    let p = ctx.params();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let x0 = args.x0.or(p.x0).unwrap_or_else(|| rng.random::<f64>());
    let k = args.k.or(p.k).unwrap_or_else(|| rng.random::<f64>());
    let n = args.n.or(p.n).unwrap_or(100);
    let limit = args.scan_limit.or(p.scan_limit).unwrap_or(100_000_000);
    let a = analyze_iterates(x0, k, n, limit)?;
    if let Some(path) = &args.histogram {
        let count = args.count.or(p.count).unwrap_or(10_000);
        let bins = args.bins.or(p.bins).unwrap_or(20);
        let hist = uniformity_histogram(x0, k, count, bins)?;
        eprintln!("chi-square against uniform: {:.3} ({bins} bins, descriptive only)", hist.chi_square);
        write_file(path, hist.to_csv().as_bytes())?;
    }
    let mut v = serde_json::to_value(&a)?;
    v["seed"] = json!(ctx.seed);
    ctx.emit_json(&v)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(Error::from)
}

fn mc(ctx: &Ctx, args: &McArgs) -> Result<()> {
    let format = ctx.format_or(Format::Json, &[Format::Json, Format::Csv])?;
    let p = ctx.params();
    let dim = check_dim(args.dim.or(p.dim).unwrap_or(2))?;
    let ns = args.n.clone().or_else(|| p.n_list.clone()).unwrap_or_else(|| vec![10, 100, 1000]);
    let trials = args.trials.or(p.trials).unwrap_or(10_000);
    let rows = ns
        .iter()
        .map(|&n| {
            let est = simulate_min_distance(dim, n, trials, ctx.seed)?;
            Ok((n, expected_min_distance(dim, n)?, est))
        })
        .collect::<Result<Vec<_>>>()?;
    if format == Format::Csv {
        let mut s = String::from("dim,N,trials,seed,expected,mean,stderr\n");
        for (n, e, est) in &rows {
            s.push_str(&format!("{dim},{n},{trials},{},{e},{},{}\n", ctx.seed, est.mean, est.stderr));
        }
        return ctx.emit(s.as_bytes());
    }
    let v: Vec<Value> = rows
        .iter()
        .map(|(n, e, est)| {
            json!({
                "dim": dim,
                "N": n,
                "trials": trials,
                "seed": ctx.seed,
                "expected": e,
                "mean": est.mean,
                "stderr": est.stderr,
            })
        })
        .collect();
    ctx.emit_json(&json!({ "model": "heuristic order-statistics model, not a certified bound", "rows": v }))
}
