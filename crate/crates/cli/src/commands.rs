use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{Context as _, Result};
use serde_json::{json, Value};

use mfdim::experiments::{
    self, block_oscillating, named_cloud, named_cloud_schedule, two_regime, KernelLemmaOptions,
    Verdict, NAMED_CLOUDS,
};
use mfdim::exponents::DEFAULT_PERCENTILES;
use mfdim::measure::io::{read_cloud, read_tree, write_cloud, write_tree, TREE_FORMAT_HEADER};
use mfdim::projection::{
    project, projection_dimension_report, ProjectionOptions, ProjectionReport,
};
use mfdim::{
    derive_seed, dimension_estimates, sample_from_measure, BallMassOracle, BernoulliSpec,
    CylinderMeasure, DimensionReport, EstimateOptions, MetricMode, Percentiles, PointCloudMeasure,
    PointwiseRule, RadiusSchedule, Subspace,
};

use crate::config::{
    CommonArgs, EstimateArgs, Experiment, Format, GenerateArgs, ProjectArgs, ReportArgs, Rule,
    ScheduleArgs, VerifyArgs,
};
use crate::output::{self, write_header, write_json_doc};
use crate::UsageError;

pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_SAMPLES: usize = 2000;
const DEFAULT_CLOUD_SIZE: usize = 100_000;
/// Symbolic names accepted wherever a measure is expected.
const NAMED_TREES: &[&str] = &["block-oscillating", "two-regime"];

/// Resolved common options.
pub struct Context {
    pub seed: u64,
    pub format: Option<Format>,
    pub common: CommonArgs,
}

impl Context {
    fn open(&self) -> Result<Box<dyn Write>> {
        output::open(self.common.out.as_deref(), self.common.append)
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Turns validation errors from the core crate into usage errors.
fn checked<T>(r: mfdim::Result<T>) -> Result<T> {
    r.map_err(|e| usage(e.to_string()))
}

pub enum Loaded {
    Tree(CylinderMeasure),
    Cloud(PointCloudMeasure),
}

fn load_measure(spec: &str, depth: Option<usize>) -> Result<Loaded> {
    if NAMED_CLOUDS.contains(&spec) {
        return Ok(Loaded::Cloud(named_cloud(spec)?));
    }
    if NAMED_TREES.contains(&spec) {
        let depth = depth.ok_or_else(|| usage(format!("--depth is required for {spec}")))?;
        let m = if spec == "two-regime" {
            two_regime(depth)
        } else {
            block_oscillating(depth)
        };
        return Ok(Loaded::Tree(checked(m)?));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(usage(format!(
            "no measure file '{spec}' (built-in names: {}, {})",
            NAMED_CLOUDS.join(", "),
            NAMED_TREES.join(", ")
        )));
    }
    let mut reader =
        BufReader::new(File::open(path).with_context(|| format!("cannot open {spec}"))?);
    let is_tree = reader
        .fill_buf()?
        .starts_with(TREE_FORMAT_HEADER.as_bytes());
    let loaded = if is_tree {
        Loaded::Tree(read_tree(reader).with_context(|| format!("reading {spec}"))?)
    } else {
        Loaded::Cloud(read_cloud(reader).with_context(|| format!("reading {spec}"))?)
    };
    Ok(loaded)
}

/// Default ladder for a cloud: base 2 down to its resolution radius.
fn cloud_schedule(cloud: &PointCloudMeasure) -> Result<RadiusSchedule> {
    let res = cloud.resolution_radius().unwrap_or(f64::INFINITY);
    let k_max = (1.0 / res).log2().floor() as i32;
    if !(k_max >= 2) {
        return Err(usage(
            "cloud too coarse for a default radius schedule; set --k-min/--k-max",
        ));
    }
    let k_min = (k_max - 6).max(1);
    let window = ((k_max - k_min + 1) as usize / 2).clamp(2, 5);
    checked(RadiusSchedule::new(2.0, k_min, k_max, window))
}

fn default_schedule(spec: Option<&str>, measure: &Loaded) -> Result<RadiusSchedule> {
    if let Some(name) = spec.filter(|s| NAMED_CLOUDS.contains(s)) {
        return Ok(named_cloud_schedule(name)?);
    }
    match measure {
        Loaded::Tree(t) => checked(RadiusSchedule::for_tree(t.arity(), t.depth())),
        Loaded::Cloud(c) => cloud_schedule(c),
    }
}

fn override_schedule(mut s: RadiusSchedule, args: &ScheduleArgs) -> Result<RadiusSchedule> {
    s.base = args.base.unwrap_or(s.base);
    s.k_min = args.k_min.unwrap_or(s.k_min);
    s.k_max = args.k_max.unwrap_or(s.k_max);
    s.tail_window = args.window.unwrap_or(s.tail_window);
    if args.k_min.is_some() || args.k_max.is_some() {
        s.tail_window = s.tail_window.min(s.len()).max(2);
    }
    checked(s.validate())?;
    Ok(s)
}

fn check_resolution(schedule: &RadiusSchedule, m: &Loaded) -> Result<()> {
    let res = match m {
        Loaded::Tree(t) => t.resolution_radius(),
        Loaded::Cloud(c) => c.resolution_radius(),
    };
    checked(schedule.check_resolution(res))
}

fn percentiles(args: Option<&Vec<f64>>) -> Result<Percentiles> {
    match args.map(|v| v.as_slice()) {
        None => Ok(DEFAULT_PERCENTILES),
        Some([lo, hi]) => checked(Percentiles::new(*lo, *hi)),
        Some(_) => Err(usage("--percentiles takes two values, low,high")),
    }
}

fn bernoulli(p: &[f64], depth: Option<usize>) -> Result<(BernoulliSpec, CylinderMeasure)> {
    let depth = depth.ok_or_else(|| usage("--depth is required"))?;
    let spec = checked(BernoulliSpec::new(p.to_vec(), depth))?;
    let m = checked(CylinderMeasure::bernoulli(&spec))?;
    Ok((spec, m))
}

fn print_summary(ctx: &Context, lines: &[String]) {
    // keep stdout clean when the measure itself goes there
    if ctx.common.out.is_some() {
        lines.iter().for_each(|l| println!("{l}"));
    } else {
        lines.iter().for_each(|l| eprintln!("{l}"));
    }
}

pub fn generate(ctx: &Context, a: &GenerateArgs) -> Result<bool> {
    if let Some(name) = &a.cloud {
        let cloud = named_cloud(name).map_err(|e| usage(e.to_string()))?;
        let mut out = ctx.open()?;
        write_cloud(&cloud, &mut out)?;
        out.flush()?;
        print_summary(
            ctx,
            &[format!(
                "cloud {name}: {} points in R^{}, total mass {}",
                cloud.len(),
                cloud.dim(),
                cloud.weights().iter().sum::<f64>()
            )],
        );
        return Ok(true);
    }
    let tree = if let Some(p) = &a.bernoulli {
        bernoulli(p, a.depth)?.1
    } else if a.cantor {
        let depth = a.depth.ok_or_else(|| usage("--depth is required"))?;
        let ratios = match (&a.ratios, a.ratio) {
            (Some(r), _) if r.len() == 2 => [r[0], r[1]],
            (Some(_), _) => return Err(usage("--ratios takes two values")),
            (None, Some(r)) => [r, r],
            (None, None) => return Err(usage("--cantor needs --ratio or --ratios")),
        };
        let masses = match &a.masses {
            Some(m) if m.len() == 2 => [m[0], m[1]],
            Some(_) => return Err(usage("--masses takes two values")),
            None => [0.5, 0.5],
        };
        checked(CylinderMeasure::deranged_cantor(&ratios, &masses, depth))?
    } else if a.oscillating {
        let depth = a.depth.ok_or_else(|| usage("--depth is required"))?;
        checked(block_oscillating(depth))?
    } else {
        return Err(usage(
            "choose one of --bernoulli, --cantor, --oscillating or --cloud",
        ));
    };
    let mut out = ctx.open()?;
    write_tree(&tree, &mut out)?;
    out.flush()?;
    let total: f64 = tree.level_cylinders(tree.depth()).map(|(m, _)| m).sum();
    let mut lines = vec![format!(
        "{} tree: arity {}, depth {}, {} nodes, total mass {total:.12}",
        tree.mode().as_str(),
        tree.arity(),
        tree.depth(),
        tree.node_count()
    )];
    if tree.mode() == MetricMode::Embedded && tree.uniform_diameters(tree.depth()) {
        lines.push(format!("leaf length {:e}", tree.diameter(tree.depth(), 0)));
    }
    print_summary(ctx, &lines);
    Ok(true)
}

fn write_estimates(ctx: &Context, config: &Value, reports: &[DimensionReport]) -> Result<()> {
    let mut out = ctx.open()?;
    match ctx.format.unwrap_or(Format::Csv) {
        Format::Json => write_json_doc(&mut out, "estimate", config, &reports)?,
        Format::Csv | Format::Table => {
            write_header(&mut out, "estimate", config)?;
            writeln!(out, "{}", DimensionReport::CSV_HEADER)?;
            for r in reports {
                writeln!(out, "{}", r.csv_row())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn plot_data<N, M>(
    path: &Path,
    config: &Value,
    nu: &N,
    mu: &M,
    options: &EstimateOptions,
) -> Result<()>
where
    N: BallMassOracle,
    M: BallMassOracle<Point = N::Point>,
{
    let points = sample_from_measure(nu, options.sample_count, options.seed)?;
    let radii = options.schedule.radii();
    let mut out = output::open(Some(path), false)?;
    write_header(&mut out, "plot-data", config)?;
    writeln!(out, "point,k,log_r,log_nu,log_mu")?;
    for (i, x) in points.iter().enumerate() {
        for (k, r) in options.schedule.ks().zip(&radii) {
            let (n, m) = (nu.ball_mass(x, *r)?, mu.ball_mass(x, *r)?);
            writeln!(out, "{i},{k},{},{},{}", r.ln(), n.ln(), m.ln())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn estimate_all<N, M>(
    nu: &N,
    mu: &M,
    q_grid: &[f64],
    options: &EstimateOptions,
    plot: Option<(&Path, &Value)>,
) -> Result<Vec<DimensionReport>>
where
    N: BallMassOracle,
    M: BallMassOracle<Point = N::Point>,
{
    let reports = q_grid
        .iter()
        .map(|&q| dimension_estimates(nu, mu, q, options))
        .collect::<mfdim::Result<Vec<_>>>()?;
    if let Some((path, config)) = plot {
        plot_data(path, config, nu, mu, options)?;
    }
    Ok(reports)
}

pub fn estimate(ctx: &Context, a: &EstimateArgs) -> Result<bool> {
    let (nu, label) = match (&a.bernoulli, &a.measure) {
        (Some(p), None) => (
            Loaded::Tree(bernoulli(p, a.depth)?.1),
            format!("bernoulli{p:?}"),
        ),
        (None, Some(spec)) => (load_measure(spec, a.depth)?, spec.clone()),
        (Some(_), Some(_)) => return Err(usage("give either --bernoulli or --measure, not both")),
        (None, None) => return Err(usage("--measure or --bernoulli is required")),
    };
    let mu = match &a.reference {
        Some(spec) => Some(load_measure(spec, a.depth)?),
        None => None,
    };
    let q_grid = a.q.clone().unwrap_or_else(|| vec![0.0, 1.0, 2.0]);
    let samples = a.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples < mfdim::exponents::MIN_SAMPLE_COUNT {
        return Err(usage(format!(
            "--samples must be at least {}",
            mfdim::exponents::MIN_SAMPLE_COUNT
        )));
    }
    let schedule = override_schedule(default_schedule(a.measure.as_deref(), &nu)?, &a.schedule)?;
    check_resolution(&schedule, &nu)?;
    if let Some(m) = &mu {
        check_resolution(&schedule, m)?;
    }
    let mut options = EstimateOptions::new(samples, schedule, ctx.seed);
    options.percentiles = percentiles(a.percentiles.as_ref())?;
    options.rule = match a.rule {
        Some(Rule::Ratio) => PointwiseRule::Ratio,
        _ => PointwiseRule::AnchoredChord,
    };
    let config = json!({
        "command": "estimate",
        "measure": label,
        "reference": a.reference.clone().unwrap_or_else(|| "same".into()),
        "depth": a.depth,
        "q": q_grid,
        "samples": samples,
        "schedule": schedule,
        "percentiles": options.percentiles,
        "rule": options.rule,
        "seed": ctx.seed,
        "plot_data": a.plot_data,
    });
    let plot = a.plot_data.as_deref().map(|p| (p, &config));
    let reports = match (&nu, mu.as_ref().unwrap_or(&nu)) {
        (Loaded::Tree(n), Loaded::Tree(m)) => estimate_all(n, m, &q_grid, &options, plot)?,
        (Loaded::Cloud(n), Loaded::Cloud(m)) => {
            if n.dim() != m.dim() {
                return Err(usage("measure and reference live in different dimensions"));
            }
            estimate_all(n, m, &q_grid, &options, plot)?
        }
        _ => {
            return Err(usage(
                "measure and reference must both be trees or both be clouds",
            ))
        }
    };
    write_estimates(ctx, &config, &reports)?;
    Ok(true)
}

pub fn project_cmd(ctx: &Context, a: &ProjectArgs) -> Result<bool> {
    let spec = a
        .measure
        .as_deref()
        .ok_or_else(|| usage("--measure is required"))?;
    ahlfors_caveat(spec);
    let cloud_size = a.cloud_size.unwrap_or(DEFAULT_CLOUD_SIZE);
    let cloud = match load_measure(spec, None)? {
        Loaded::Cloud(c) => c,
        Loaded::Tree(t) if t.mode() == MetricMode::Embedded => {
            if cloud_size < 2 {
                return Err(usage("--cloud-size must be at least 2"));
            }
            PointCloudMeasure::from_tree_samples(&t, cloud_size, derive_seed(ctx.seed, u64::MAX))?
        }
        Loaded::Tree(_) => {
            return Err(usage(
                "symbolic trees have no Euclidean embedding to project",
            ))
        }
    };
    let n = cloud.dim();
    let m = a.m.unwrap_or(1);
    if !(m >= 1 && m < n) {
        return Err(usage(format!(
            "need 1 <= m < n, got m = {m} for a cloud in R^{n}"
        )));
    }
    let subspaces = a.subspaces.unwrap_or(50);
    if subspaces == 0 {
        return Err(usage("--subspaces must be positive"));
    }
    let samples = a.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples < mfdim::exponents::MIN_SAMPLE_COUNT {
        return Err(usage(format!(
            "--samples must be at least {}",
            mfdim::exponents::MIN_SAMPLE_COUNT
        )));
    }
    let tolerance = a
        .tolerance
        .unwrap_or(mfdim::projection::DEFAULT_PROJECTION_TOLERANCE);
    let q_grid = a.q.clone().unwrap_or_else(|| vec![0.0]);
    let loaded = Loaded::Cloud(cloud);
    let schedule = override_schedule(default_schedule(Some(spec), &loaded)?, &a.schedule)?;
    check_resolution(&schedule, &loaded)?;
    let Loaded::Cloud(cloud) = loaded else {
        unreachable!()
    };
    let options = ProjectionOptions {
        subspace_dim: m,
        num_subspaces: subspaces,
        tolerance,
        estimate: EstimateOptions::new(samples, schedule, ctx.seed),
    };
    let config = json!({
        "command": "project",
        "measure": spec,
        "points": cloud.len(),
        "ambient": n,
        "m": m,
        "subspaces": subspaces,
        "q": q_grid,
        "samples": samples,
        "tolerance": tolerance,
        "schedule": schedule,
        "seed": ctx.seed,
        "projected_out": a.projected_out,
    });
    let reports = q_grid
        .iter()
        .map(|&q| projection_dimension_report(&cloud, &cloud, q, &options))
        .collect::<mfdim::Result<Vec<ProjectionReport>>>()?;
    if let Some(path) = &a.projected_out {
        let v = Subspace::sample(n, m, derive_seed(ctx.seed, 0))?;
        let mut out = output::open(Some(path), false)?;
        write_cloud(&project(&cloud, &v)?, &mut out)?;
        out.flush()?;
    }
    let mut out = ctx.open()?;
    match ctx.format.unwrap_or(Format::Csv) {
        Format::Json => write_json_doc(&mut out, "project", &config, &reports)?,
        Format::Csv | Format::Table => {
            write_header(&mut out, "project", &config)?;
            writeln!(out, "{}", ProjectionReport::CSV_HEADER)?;
            for r in &reports {
                for row in r.csv_rows() {
                    writeln!(out, "{row}")?;
                }
            }
            for r in &reports {
                let u = &r.unprojected;
                let s = &r.summary;
                writeln!(
                    out,
                    "# summary: q={} unprojected={},{},{},{} evaluated={} degenerate={} passed={} pass_fraction={} hypothesis_holds={}",
                    s.q, u.lower_hausdorff, u.upper_hausdorff, u.lower_packing, u.upper_packing,
                    s.evaluated, s.degenerate, s.passed, s.pass_fraction, s.hypothesis_holds
                )?;
            }
        }
    }
    out.flush()?;
    Ok(true)
}

fn ahlfors_caveat(spec: &str) {
    if !NAMED_CLOUDS.contains(&spec) {
        eprintln!("note: {}", mfdim::projection::AHLFORS_CAVEAT);
    }
}

fn tree_measure(
    a: &VerifyArgs,
    default_p: &[f64],
    default_depth: usize,
) -> Result<(Loaded, String)> {
    match &a.measure {
        Some(spec) => Ok((
            load_measure(spec, Some(a.depth.unwrap_or(default_depth)))?,
            spec.clone(),
        )),
        None => {
            let p = a.p.clone().unwrap_or_else(|| default_p.to_vec());
            let label = format!("bernoulli{p:?}");
            Ok((
                Loaded::Tree(bernoulli(&p, Some(a.depth.unwrap_or(default_depth)))?.1),
                label,
            ))
        }
    }
}

pub fn verify(ctx: &Context, a: &VerifyArgs) -> Result<bool> {
    let experiment = a.experiment.ok_or_else(|| {
        usage("an experiment is required: quasi-bernoulli, unidimensionality, ergodic, projection, kernel-lemmas")
    })?;
    let samples = a.samples;
    let (config, verdict) = match experiment {
        Experiment::QuasiBernoulli => {
            let p = a.p.clone().unwrap_or_else(|| vec![0.5, 0.5]);
            let depth = a.depth.unwrap_or(16);
            let q = a.q.clone().unwrap_or_else(|| vec![-1.0, 0.0, 0.5, 2.0]);
            let n = samples.unwrap_or(DEFAULT_SAMPLES);
            let tol = a.tolerance.unwrap_or(experiments::ORACLE_TOLERANCE);
            let spec = checked(BernoulliSpec::new(p.clone(), depth))?;
            checked(RadiusSchedule::for_tree(spec.arity(), depth))?;
            let config = json!({"experiment": "quasi-bernoulli", "p": p, "depth": depth, "q": q,
                "samples": n, "tolerance": tol, "seed": ctx.seed});
            (
                config,
                experiments::verify_quasi_bernoulli(&spec, &q, n, ctx.seed, tol)?,
            )
        }
        Experiment::Unidimensionality => {
            let (measure, label) = tree_measure(a, &[0.5, 0.5], 16)?;
            let q_grid = a.q.clone().unwrap_or_else(|| vec![0.0, 2.0]);
            let n = samples.unwrap_or(DEFAULT_SAMPLES);
            let tol = a.tolerance.unwrap_or(experiments::UNIDIMENSIONAL_THRESHOLD);
            let schedule = override_schedule(
                default_schedule(a.measure.as_deref(), &measure)?,
                &a.schedule,
            )?;
            check_resolution(&schedule, &measure)?;
            let options = EstimateOptions::new(n, schedule, ctx.seed);
            let config = json!({"experiment": "unidimensionality", "measure": label, "depth": a.depth,
                "q": q_grid, "samples": n, "schedule": schedule, "tolerance": tol, "seed": ctx.seed});
            let mut verdict = None::<Verdict>;
            for &q in &q_grid {
                let v = match &measure {
                    Loaded::Tree(t) => experiments::verify_unidimensionality(t, q, &options, tol)?,
                    Loaded::Cloud(c) => experiments::verify_unidimensionality(c, q, &options, tol)?,
                };
                match &mut verdict {
                    None => verdict = Some(v),
                    Some(all) => v.checks.into_iter().for_each(|c| all.push(c)),
                }
            }
            (
                config,
                verdict.ok_or_else(|| usage("--q must not be empty"))?,
            )
        }
        Experiment::Ergodic => {
            let p = a.p.clone().unwrap_or_else(|| vec![0.3, 0.7]);
            let depths = a.depths.clone().unwrap_or_else(|| vec![8, 24]);
            let n = samples.unwrap_or(DEFAULT_SAMPLES);
            if n < 2 {
                return Err(usage("--samples must be at least 2 to estimate a spread"));
            }
            let config = json!({"experiment": "ergodic", "p": p, "depths": depths, "samples": n, "seed": ctx.seed});
            (
                config,
                checked(experiments::verify_ergodic_constancy(
                    &p, &depths, n, ctx.seed,
                ))?,
            )
        }
        Experiment::Projection => {
            let spec = a.measure.clone().unwrap_or_else(|| "cantor5sq".into());
            ahlfors_caveat(&spec);
            let Loaded::Cloud(cloud) = load_measure(&spec, a.depth)? else {
                return Err(usage("projection needs a point cloud"));
            };
            let m = a.m.unwrap_or(1) as usize;
            if !(m >= 1 && m < cloud.dim()) {
                return Err(usage(format!(
                    "need 1 <= m < n, got m = {m} for a cloud in R^{}",
                    cloud.dim()
                )));
            }
            let q = a.q.clone().unwrap_or_else(|| vec![0.0]);
            let loaded = Loaded::Cloud(cloud);
            let schedule = override_schedule(default_schedule(Some(&spec), &loaded)?, &a.schedule)?;
            check_resolution(&schedule, &loaded)?;
            let Loaded::Cloud(cloud) = loaded else {
                unreachable!()
            };
            let options = ProjectionOptions {
                subspace_dim: m,
                num_subspaces: a.subspaces.unwrap_or(50),
                tolerance: a
                    .tolerance
                    .unwrap_or(mfdim::projection::DEFAULT_PROJECTION_TOLERANCE),
                estimate: EstimateOptions::new(
                    samples.unwrap_or(DEFAULT_SAMPLES),
                    schedule,
                    ctx.seed,
                ),
            };
            let fraction = a
                .pass_fraction
                .unwrap_or(experiments::PROJECTION_PASS_FRACTION);
            let config = json!({"experiment": "projection", "measure": spec, "m": m, "q": q,
                "subspaces": options.num_subspaces, "tolerance": options.tolerance, "pass_fraction": fraction,
                "samples": options.estimate.sample_count, "schedule": schedule, "seed": ctx.seed});
            (
                config,
                experiments::verify_projection_preservation(&cloud, &q, &options, fraction)?,
            )
        }
        Experiment::KernelLemmas => {
            let spec = a.measure.clone().unwrap_or_else(|| "segment".into());
            let Loaded::Cloud(cloud) = load_measure(&spec, a.depth)? else {
                return Err(usage("kernel lemmas need a point cloud"));
            };
            let loaded = Loaded::Cloud(cloud);
            let schedule = override_schedule(default_schedule(Some(&spec), &loaded)?, &a.schedule)?;
            let Loaded::Cloud(cloud) = loaded else {
                unreachable!()
            };
            let options = KernelLemmaOptions {
                m: a.m.unwrap_or(1),
                samples: samples.unwrap_or(10_000),
                r_min: schedule.radius(schedule.k_max),
                r_max: 0.5,
                schedule,
                slope_points: 200,
                ahlfors_regular: a.ahlfors,
                seed: ctx.seed,
            };
            let config =
                json!({"experiment": "kernel-lemmas", "measure": spec, "options": options});
            (
                config,
                checked(experiments::verify_kernel_lemmas(&cloud, &options))?,
            )
        }
    };
    let mut out = ctx.open()?;
    match ctx.format.unwrap_or(Format::Table) {
        Format::Json => write_json_doc(&mut out, "verify", &config, &verdict)?,
        Format::Table => {
            write_header(&mut out, "verify", &config)?;
            write!(out, "{}", verdict.to_table())?;
        }
        Format::Csv => {
            write_header(&mut out, "verify", &config)?;
            writeln!(
                out,
                "experiment,check,relation,expected,observed,tolerance,pass,note"
            )?;
            for c in &verdict.checks {
                let relation = serde_json::to_value(c.relation)?;
                writeln!(
                    out,
                    "{},\"{}\",{},{},{},{},{},\"{}\"",
                    verdict.experiment,
                    c.name,
                    relation.as_str().unwrap_or_default(),
                    c.expected,
                    c.observed,
                    c.tolerance,
                    c.pass,
                    c.note.as_deref().unwrap_or("").replace('"', "'")
                )?;
            }
        }
    }
    out.flush()?;
    Ok(verdict.pass)
}

/// Renders CSV blocks as aligned columns and verdict documents as tables.
pub fn report(ctx: &Context, a: &ReportArgs) -> Result<bool> {
    if a.files.is_empty() {
        return Err(usage("report needs at least one file"));
    }
    let mut out = ctx.open()?;
    for path in &a.files {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        writeln!(out, "== {}", path.display())?;
        if text.trim_start().starts_with('{') {
            for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
                let doc: Value = serde_json::from_str(line).with_context(|| {
                    format!("{}: line {} is not a JSON document", path.display(), i + 1)
                })?;
                render_doc(&mut out, &doc)
                    .with_context(|| format!("{}: document {}", path.display(), i + 1))?;
            }
        } else if text.starts_with("# mfdim-") {
            render_csv(&mut out, &text)?;
        } else {
            anyhow::bail!(
                "{} was not written by mfdim (no schema header)",
                path.display()
            );
        }
    }
    out.flush()?;
    Ok(true)
}

fn render_doc(out: &mut dyn Write, doc: &Value) -> Result<()> {
    let schema = doc["schema"].as_str().unwrap_or_default();
    writeln!(out, "schema: {schema}")?;
    match schema.split('/').next() {
        Some("mfdim-verify") => {
            let verdict: Verdict = serde_json::from_value(doc["result"].clone())?;
            write!(out, "{}", verdict.to_table())?;
        }
        Some("mfdim-estimate") => {
            let reports: Vec<DimensionReport> = serde_json::from_value(doc["result"].clone())?;
            let mut text = format!("# mfdim-estimate\n{}\n", DimensionReport::CSV_HEADER);
            reports
                .iter()
                .for_each(|r| text.push_str(&format!("{}\n", r.csv_row())));
            render_csv(out, &text)?;
        }
        Some("mfdim-project") => {
            let reports: Vec<ProjectionReport> = serde_json::from_value(doc["result"].clone())?;
            for r in reports {
                let s = &r.summary;
                writeln!(
                    out,
                    "q={} pass fraction {:.3} ({} of {} subspaces, {} degenerate)",
                    s.q, s.pass_fraction, s.passed, s.evaluated, s.degenerate
                )?;
            }
        }
        _ => anyhow::bail!("unknown schema '{schema}'"),
    }
    Ok(())
}

fn render_csv(out: &mut dyn Write, text: &str) -> Result<()> {
    let mut rows: Vec<Vec<&str>> = Vec::new();
    let flush = |out: &mut dyn Write, rows: &mut Vec<Vec<&str>>| -> Result<()> {
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|c| {
                rows.iter()
                    .filter_map(|r| r.get(c))
                    .map(|s| s.len())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        for r in rows.iter() {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, s)| format!("{s:>w$}", w = widths[c]))
                .collect();
            writeln!(out, "{}", cells.join("  "))?;
        }
        rows.clear();
        Ok(())
    };
    for line in text.lines() {
        if let Some(comment) = line.strip_prefix('#') {
            if !comment.trim_start().starts_with("config:") {
                flush(out, &mut rows)?;
                writeln!(out, "{}", comment.trim())?;
            }
        } else if !line.trim().is_empty() {
            rows.push(line.split(',').collect());
        }
    }
    flush(out, &mut rows)
}
