use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::json;

use sketchlab::bounds::{target_dimension, BoundModel, BoundParams, BoundResult};
use sketchlab::complexity::{dudley_integral, empirical_profile, gaussian_width_mc, ComplexityEstimate, CoveringProfile};
use sketchlab::distortion::{long_chord_property, short_chord_property, DistortionReport, Mode, PropertyReport};
use sketchlab::experiment::{calibrate_benchmark, parse_grid, phase_sweep, Benchmark, DistortionExperiment};
use sketchlab::io::{csv_writer, fmt_f64, read_points, read_vector, write_vector};
use sketchlab::points::Euclidean;
use sketchlab::recovery::{landweber_recover, relative_error, RecoveryModel, RecoveryOptions, StepRule};
use sketchlab::sets::{enumerate_supports, ManifoldSpec, SetConfig, StructuredSet};
use sketchlab::{rng, Error, Family, Sketch, SketchSpec, Subspace};

use crate::args::{
    BoundArgs, CalibrateArgs, Cli, Command, DistortArgs, Global, PhaseArgs, PropsArgs, RecoverArgs, SetArgs, WidthArgs,
};

/// Why a command failed, with its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or parameters (exit 2).
    Config(String),
    /// A guard tripped or the experiment cannot be set up (exit 3).
    Infeasible(String),
    /// Anything else (exit 1).
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Internal(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Infeasible(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Blowup { .. } | Error::Infeasible(_) => Failure::Infeasible(msg),
            Error::Io(_) | Error::Csv(_) => Failure::Internal(msg),
            _ => Failure::Config(msg),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn open(path: &Path) -> Res<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| config(format!("cannot open {}: {e}", path.display())))
}

fn sink(global: &Global) -> Res<Box<dyn Write>> {
    Ok(match &global.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn seed(global: &Global) -> Res<u64> {
    global.seed.ok_or_else(|| config("a seed is required: pass --seed or set SKETCHLAB_SEED"))
}

fn need<T: Copy>(v: Option<T>, name: &str) -> Res<T> {
    v.ok_or_else(|| config(format!("missing parameter `--{name}`")))
}

fn positive_count(v: usize, name: &str) -> Res<usize> {
    if v == 0 {
        return Err(config(format!("`--{name}` must be at least 1")));
    }
    Ok(v)
}

fn list(text: &Option<String>, name: &str) -> Res<Vec<usize>> {
    let text = text.as_ref().ok_or_else(|| config(format!("missing parameter `--{name}`")))?;
    text.split(|c: char| c == ';' || c == 'x' || c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| config(format!("`--{name}`: bad integer `{t}`"))))
        .collect()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Trailing columns carried by every CSV row.
const ECHO: [&str; 3] = ["seed", "C", "alpha"];

fn echo(seed: Option<u64>, c_const: f64, alpha: Option<f64>) -> [String; 3] {
    [seed.map(|s| s.to_string()).unwrap_or_default(), fmt_f64(c_const), opt_f64(alpha)]
}

pub fn run(cli: &Cli) -> Res<String> {
    let g = &cli.global;
    if !(g.c_const > 0.0 && g.c_const.is_finite()) {
        return Err(config(format!("--C must be positive, got {}", g.c_const)));
    }
    match &cli.command {
        Command::Bound(a) => bound(g, a),
        Command::Distort(a) => distort(g, a),
        Command::Phase(a) => phase(g, a),
        Command::Width(a) => width(g, a),
        Command::Recover(a) => recover(g, a),
        Command::Calibrate(a) => calibrate(g, a),
        Command::Props(a) => props(g, a),
    }
}

const BOUND_HEADER: [&str; 9] =
    ["model", "m", "raw", "dominated", "complexity", "tail", "prefactor", "gamma2", "gamma2_source"];

fn bound_record(r: &BoundResult, seed: Option<u64>) -> Vec<String> {
    let mut row = vec![
        r.model.to_string(),
        r.m.to_string(),
        fmt_f64(r.raw),
        r.dominated.to_string(),
        fmt_f64(r.complexity),
        fmt_f64(r.tail),
        fmt_f64(r.prefactor),
        opt_f64(r.gamma2.map(|(g, _)| g)),
        r.gamma2.map(|(_, s)| s.to_string()).unwrap_or_default(),
    ];
    row.extend(echo(seed, r.c_const, Some(r.alpha)));
    row
}

fn parse_profile(text: &str) -> Res<CoveringProfile> {
    serde_json::from_str(text).map_err(|e| config(format!("bad covering profile: {e}")))
}

fn bound(g: &Global, a: &BoundArgs) -> Res<String> {
    if let Some(path) = &a.batch {
        return bound_batch(g, a, path);
    }
    let model: BoundModel = a.model.as_deref().unwrap_or_default().parse()?;
    let mut params = BoundParams::default();
    for (k, v) in a.params.pairs() {
        params.set(k, v)?;
    }
    if let Some(p) = &a.profile {
        params.profile = Some(parse_profile(p)?);
    }
    let alpha = g.alpha.or(a.family.map(|f| f.alpha())).unwrap_or(1.0);
    let r = target_dimension(model, &params, g.c_const, alpha)?;
    println!("m={} dominated={} C={} alpha={}", r.m, r.dominated, r.c_const, r.alpha);
    if g.out.is_some() {
        let mut w = csv_writer(sink(g)?);
        w.write_record(BOUND_HEADER.iter().chain(ECHO.iter()))?;
        w.write_record(bound_record(&r, g.seed))?;
        w.flush()?;
    }
    Ok(format!("bound {model}: m={} ({} term dominates)", r.m, r.dominated))
}

fn bound_batch(g: &Global, a: &BoundArgs, path: &Path) -> Res<String> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let headers = reader.headers()?.clone();
    let mut w = csv_writer(sink(g)?);
    w.write_record(BOUND_HEADER.iter().chain(ECHO.iter()))?;
    let mut rows = 0;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let at = |e: Error| config(format!("{} row {}: {e}", path.display(), line + 1));
        let mut params = BoundParams::default();
        let mut model = a.model.clone();
        let mut c_const = g.c_const;
        let mut alpha = g.alpha.or(a.family.map(|f| f.alpha()));
        for (key, value) in headers.iter().zip(rec.iter()) {
            let value = value.trim();
            if value.is_empty() {
                continue;
            }
            let parse = |v: &str| v.parse::<f64>().map_err(|_| at(Error::Parse(format!("`{key}`: bad number `{v}`"))));
            match key.trim() {
                "model" => model = Some(value.to_string()),
                "C" => c_const = parse(value)?,
                "alpha" => alpha = Some(parse(value)?),
                "family" => alpha = Some(value.parse::<Family>().map_err(at)?.alpha()),
                "profile" => params.profile = Some(parse_profile(value)?),
                k => params.set(k, value).map_err(at)?,
            }
        }
        let model: BoundModel = model.ok_or_else(|| config(format!("row {}: no model", line + 1)))?.parse().map_err(at)?;
        let r = target_dimension(model, &params, c_const, alpha.unwrap_or(1.0)).map_err(at)?;
        w.write_record(bound_record(&r, g.seed))?;
        rows += 1;
    }
    w.flush()?;
    Ok(format!("bound: {rows} rows evaluated"))
}

fn build_set(a: &SetArgs, seed: u64) -> Res<(StructuredSet, String)> {
    let kind = a.kind.trim().to_ascii_lowercase();
    let (config, id) = match kind.as_str() {
        "gaussian_cloud" | "cloud" => {
            let (n, points) = (need(a.n, "n")?, need(a.points, "points")?);
            let set_seed = a.set_seed.unwrap_or(seed);
            (SetConfig::GaussianCloud { n, points, seed: set_seed }, format!("gaussian_cloud(n={n},points={points},seed={set_seed})"))
        }
        "points_file" => {
            let path = a.points_file.as_ref().ok_or_else(|| config("missing parameter `--points-file`"))?;
            let p = read_points(open(path)?)?;
            return Ok((StructuredSet::Finite(p), format!("points_file({})", path.display())));
        }
        "sparse" => {
            let (n, s) = (need(a.n, "n")?, need(a.s, "s")?);
            (SetConfig::Sparse { n, s }, format!("sparse(n={n},s={s})"))
        }
        "cosparse" => {
            let (n, l) = (need(a.n, "n")?, need(a.l, "l")?);
            (SetConfig::Cosparse { n, l }, format!("cosparse(n={n},l={l})"))
        }
        "low_rank" => {
            let (n1, n2, r) = (need(a.n1, "n1")?, need(a.n2, "n2")?, need(a.r, "r")?);
            (SetConfig::LowRank { n1, n2, r }, format!("low_rank(n1={n1},n2={n2},r={r})"))
        }
        "tucker" => {
            let (dims, ranks) = (list(&a.dims, "dims")?, list(&a.ranks, "ranks")?);
            let id = format!("tucker(dims={dims:?},ranks={ranks:?})").replace(", ", ";");
            (SetConfig::Tucker { dims, ranks }, id)
        }
        "rotating_plane" => {
            let n = need(a.n, "n")?;
            (SetConfig::RotatingPlane { n }, format!("rotating_plane(n={n})"))
        }
        "coordinate_uos" => {
            let (n, s) = (need(a.n, "n")?, need(a.s, "s")?);
            (SetConfig::CoordinateUos { n, s }, format!("coordinate_uos(n={n},s={s})"))
        }
        "circle" | "sphere" | "helix" => {
            let spec = match kind.as_str() {
                "circle" => ManifoldSpec::Circle { radius: a.radius.unwrap_or(1.0), ambient: a.ambient.or(a.n).unwrap_or(2) },
                "sphere" => ManifoldSpec::Sphere2 { radius: a.radius.unwrap_or(1.0), ambient: a.ambient.or(a.n).unwrap_or(3) },
                _ => ManifoldSpec::Helix { a: a.a.unwrap_or(1.0), b: a.b.unwrap_or(1.0), ambient: a.ambient.or(a.n).unwrap_or(3) },
            };
            let id = match spec {
                ManifoldSpec::Circle { radius, ambient } => format!("circle(radius={radius},ambient={ambient})"),
                ManifoldSpec::Sphere2 { radius, ambient } => format!("sphere(radius={radius},ambient={ambient})"),
                ManifoldSpec::Helix { a, b, ambient } => format!("helix(a={a},b={b},ambient={ambient})"),
            };
            (SetConfig::Manifold(spec), id)
        }
        other => return Err(config(format!("unknown set `{other}`"))),
    };
    Ok((config.build()?, id))
}

fn distort(g: &Global, a: &DistortArgs) -> Res<String> {
    let seed = seed(g)?;
    positive_count(a.trials, "trials")?;
    positive_count(a.m, "m")?;
    let (set, id) = build_set(&a.set, seed)?;
    let exp = DistortionExperiment::new(set, a.family, positive_count(a.samples, "samples")?)?;
    let n = exp.set.ambient_dim();
    let reports = (0..a.trials as u64)
        .into_par_iter()
        .map(|t| -> sketchlab::Result<DistortionReport> {
            let trial_seed = seed.wrapping_add(t);
            let sk = Sketch::build(SketchSpec::new(a.family, a.m, n, trial_seed))?;
            match &exp.set {
                StructuredSet::Finite(p) => DistortionReport::finite(&id, &sk, p, trial_seed),
                StructuredSet::Manifold(_) => {
                    let p = exp.set.sample(a.samples.max(2), rng::derive_seed(trial_seed, 1), false)?;
                    let mut r = DistortionReport::finite(&id, &sk, &p, trial_seed)?;
                    r.mode = Mode::MonteCarlo;
                    Ok(r)
                }
                _ => {
                    let v = exp.measure_with(&sk, trial_seed)?;
                    let mode = exp.mode();
                    Ok(DistortionReport {
                        set_id: id.clone(),
                        family: a.family.to_string(),
                        m: a.m,
                        n,
                        mode,
                        samples: if mode == Mode::Exact { 0 } else { a.samples },
                        kappa: Some(v),
                        delta: Some(v),
                        epsilon: None,
                        zeta: None,
                        seed: trial_seed,
                    })
                }
            }
        })
        .collect::<sketchlab::Result<Vec<_>>>()?;
    let alpha = g.alpha.unwrap_or(a.family.alpha());
    let mut w = csv_writer(sink(g)?);
    w.write_record(DistortionReport::HEADER.iter().chain(&ECHO[1..]))?;
    for r in &reports {
        let mut row = r.record();
        row.extend(echo(None, g.c_const, Some(alpha)).into_iter().skip(1));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(format!("distort: {} trial(s) on {id} at m={}", a.trials, a.m))
}

fn phase(g: &Global, a: &PhaseArgs) -> Res<String> {
    let seed = seed(g)?;
    positive_count(a.trials, "trials")?;
    let grid = parse_grid(&a.m_grid)?;
    let (set, id) = build_set(&a.set, seed)?;
    let exp = DistortionExperiment::new(set, a.family, positive_count(a.samples, "samples")?)?;
    let rows = phase_sweep(&exp, &grid, a.trials, seed, a.target)?;
    let alpha = g.alpha.unwrap_or(a.family.alpha());
    let mut w = csv_writer(sink(g)?);
    let header =
        ["set_id", "family", "m", "mode", "trials", "median", "failure_rate", "wilson_lo", "wilson_hi", "target"];
    w.write_record(header.iter().chain(ECHO.iter()))?;
    for r in &rows {
        let mut row = vec![
            id.clone(),
            a.family.to_string(),
            r.m.to_string(),
            exp.mode().to_string(),
            r.outcome.trials.to_string(),
            fmt_f64(r.median),
            fmt_f64(r.outcome.rate),
            fmt_f64(r.outcome.lo),
            fmt_f64(r.outcome.hi),
            fmt_f64(a.target),
        ];
        row.extend(echo(Some(seed), g.c_const, Some(alpha)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(format!("phase: {} grid point(s) x {} trials on {id}", grid.len(), a.trials))
}

fn width(g: &Global, a: &WidthArgs) -> Res<String> {
    let seed = seed(g)?;
    positive_count(a.levels, "levels")?;
    let (set, id) = build_set(&a.set, seed)?;
    let p = match &set {
        StructuredSet::Finite(p) => p.clone(),
        StructuredSet::Manifold(_) => set.sample(positive_count(a.samples, "samples")?, seed, false)?,
        _ => set.sample(positive_count(a.samples, "samples")?, seed, true)?,
    };
    let diameter = p.diameter();
    let radii: Vec<f64> = (1..=a.levels).map(|k| diameter * 0.5f64.powi(k as i32)).collect();
    let dudley = if diameter > 0.0 {
        dudley_integral(&empirical_profile(&p, &Euclidean, &radii)?, diameter)?
    } else {
        0.0
    };
    let w_est = gaussian_width_mc(&p, a.g_trials, rng::derive_seed(seed, 1))?;
    let est = ComplexityEstimate { set_id: id.clone(), dudley, width: w_est.estimate, stderr: w_est.stderr, diameter };
    let mut w = csv_writer(sink(g)?);
    w.write_record(ComplexityEstimate::HEADER.iter().chain(["points", "g_trials"].iter()).chain(ECHO.iter()))?;
    let mut row = est.record();
    row.push(p.len().to_string());
    row.push(a.g_trials.to_string());
    row.extend(echo(Some(seed), g.c_const, g.alpha));
    w.write_record(row)?;
    w.flush()?;
    Ok(format!("width: {id}: dudley {dudley:.4}, width {:.4} +- {:.4}", w_est.estimate, w_est.stderr))
}

fn read_subspaces(path: &Path) -> Res<Vec<Subspace>> {
    let lists: Vec<Vec<Vec<f64>>> =
        serde_json::from_reader(open(path)?).map_err(|e| config(format!("bad subspace list {}: {e}", path.display())))?;
    lists
        .iter()
        .map(|vectors| {
            let n = vectors.first().map(|v| v.len()).ok_or_else(|| config("a subspace needs a spanning vector"))?;
            if vectors.iter().any(|v| v.len() != n) {
                return Err(config("spanning vectors of a subspace must have equal length"));
            }
            let cols = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
            Ok(Subspace::span(&cols)?)
        })
        .collect()
}

fn recover(g: &Global, a: &RecoverArgs) -> Res<String> {
    let sk = match &a.sketch {
        Some(path) => Sketch::read_csv(open(path)?)?,
        None => {
            let (m, n) = (need(a.m, "m")?, need(a.n, "n")?);
            Sketch::build(SketchSpec::new(a.family, m, n, seed(g)?))?
        }
    };
    let signal = match &a.signal {
        Some(p) => Some(read_vector(open(p)?)?),
        None => None,
    };
    let y = match (&a.y, &signal) {
        (Some(p), _) => read_vector(open(p)?)?,
        (None, Some(x)) => sk.apply(x)?,
        (None, None) => return Err(config("pass measurements with --y or a signal with --signal")),
    };
    let model = match a.model.as_str() {
        "sparse" => RecoveryModel::Sparse { s: need(a.s, "s")? },
        "uos" => match (&a.subspaces, a.s) {
            (Some(path), _) => RecoveryModel::Union(read_subspaces(path)?),
            (None, Some(s)) => RecoveryModel::Union(
                enumerate_supports(sk.n(), s)?
                    .iter()
                    .map(|sup| Subspace::coordinate(sk.n(), sup))
                    .collect::<sketchlab::Result<Vec<_>>>()?,
            ),
            (None, None) => return Err(config("the uos model needs --subspaces or --s")),
        },
        other => return Err(config(format!("unknown recovery model `{other}`"))),
    };
    let rule = match a.rule.as_str() {
        "fixed" => StepRule::Fixed,
        "normalized" => StepRule::Normalized,
        other => return Err(config(format!("unknown step rule `{other}`"))),
    };
    let opts = RecoveryOptions {
        step: a.step,
        rule,
        max_iters: a.max_iters,
        tol: a.tol,
        bilipschitz_eps: a.bilipschitz_eps,
        ..Default::default()
    };
    let res = landweber_recover(&sk, &y, &model, &opts)?;
    let rel = signal.as_ref().map(|x| relative_error(&res.estimate, x));

    let mut out = sink(g)?;
    write_vector(&res.estimate, &mut out)?;
    out.flush()?;
    drop(out);

    let s = res.summary();
    let doc = json!({
        "status": s.status,
        "iterations": s.iterations,
        "final_residual": s.final_residual,
        "residuals": s.residuals,
        "warnings": s.warnings,
        "relative_error": rel,
        "step": a.step,
        "rule": rule,
        "seed": sk.spec().seed,
        "family": sk.spec().family.to_string(),
        "C": g.c_const,
        "alpha": g.alpha.unwrap_or(sk.alpha()),
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
    match (&a.summary, &g.out) {
        (Some(path), _) => std::fs::write(path, text).map_err(|e| config(format!("cannot write {}: {e}", path.display())))?,
        (None, Some(_)) => print!("{text}"),
        (None, None) => {}
    }
    let mut line = format!("recover: {} after {} iteration(s), residual {:.3e}", res.status, res.iterations, s.final_residual);
    if let Some(r) = rel {
        line += &format!(", relative error {r:.3e}");
    }
    for warning in &res.warnings {
        line += &format!("; warning: {warning}");
    }
    Ok(line)
}

fn calibrate(g: &Global, a: &CalibrateArgs) -> Res<String> {
    let seed = seed(g)?;
    let bench = match a.benchmark.as_str() {
        "jl" | "jl_finite" => Benchmark::Jl {
            n: need(a.n, "n")?,
            points: need(a.points, "points")?,
            cloud_seed: a.cloud_seed.unwrap_or(seed),
        },
        "sparse" => Benchmark::Sparse { n: need(a.n, "n")?, s: need(a.s, "s")? },
        "curve" | "circle" => Benchmark::Curve {
            spec: ManifoldSpec::Circle { radius: a.radius.unwrap_or(1.0), ambient: a.ambient.or(a.n).unwrap_or(2) },
        },
        other => return Err(config(format!("unknown benchmark `{other}`"))),
    };
    let params = BoundParams { eps: a.eps, delta: a.delta, eta: Some(a.eta), gamma2: a.gamma2, ..Default::default() };
    let max_m = a.max_m.unwrap_or(4 * bench.ambient() as u64);
    let cal = calibrate_benchmark(&bench, a.family, &params, positive_count(a.trials, "trials")?, seed, max_m, a.samples)?;
    let model = bench.model();
    let alpha = a.family.alpha();
    let mut w = csv_writer(sink(g)?);
    let header = [
        "benchmark", "model", "family", "m", "trials", "failures", "failure_rate", "wilson_lo", "wilson_hi", "median",
        "eta", "max_m", "selected",
    ];
    w.write_record(header.iter().chain(ECHO.iter()))?;
    for p in &cal.points {
        let mut row = vec![
            a.benchmark.clone(),
            model.to_string(),
            a.family.to_string(),
            p.m.to_string(),
            p.outcome.trials.to_string(),
            p.outcome.failures.to_string(),
            fmt_f64(p.outcome.rate),
            fmt_f64(p.outcome.lo),
            fmt_f64(p.outcome.hi),
            fmt_f64(p.outcome.median()),
            fmt_f64(cal.eta),
            cal.max_m.to_string(),
            (Some(p.c_const) == cal.c_const).to_string(),
        ];
        row.extend(echo(Some(seed), p.c_const, Some(alpha)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(match cal.c_const {
        Some(c) => format!("calibrate {model}: C={c} (grid 2^k/4, {} point(s) run)", cal.points.len()),
        None => format!("calibrate {model}: no grid value of C met eta={} with m <= {max_m}", cal.eta),
    })
}

fn props(g: &Global, a: &PropsArgs) -> Res<String> {
    let seed = seed(g)?;
    let samples = positive_count(a.samples, "samples")?;
    let mut rows: Vec<(&str, &str, PropertyReport)> = Vec::new();
    let long = matches!(a.suite.as_str(), "chords" | "long");
    let short = matches!(a.suite.as_str(), "chords" | "short");
    if !long && !short {
        return Err(config(format!("unknown suite `{}`; expected chords, long or short", a.suite)));
    }
    if long {
        rows.push(("long", "chord_lipschitz", long_chord_property(samples, a.dim, a.t, seed)?));
    }
    if short {
        let circle = ManifoldSpec::Circle { radius: a.radius, ambient: 2 };
        let (dev, fin) = short_chord_property(&circle, samples, rng::derive_seed(seed, 1))?;
        rows.push(("short", "tangent_deviation", dev));
        rows.push(("short", "tangent_finsler", fin));
    }
    let mut w = csv_writer(sink(g)?);
    w.write_record(["suite", "property", "checked", "violations", "max_ratio"].iter().chain(ECHO.iter()))?;
    for (suite, property, r) in &rows {
        let mut row = vec![suite.to_string(), property.to_string(), r.checked.to_string(), r.violations.to_string(), fmt_f64(r.max_ratio)];
        row.extend(echo(Some(seed), g.c_const, g.alpha));
        w.write_record(row)?;
    }
    w.flush()?;
    let violations: usize = rows.iter().map(|(_, _, r)| r.violations).sum();
    let checked: usize = rows.iter().map(|(_, _, r)| r.checked).sum();
    Ok(format!("props {}: {violations} violation(s) over {checked} checks", a.suite))
}
