//! Seeded desk-scale experiments: distortion sweeps over `m`, minimal
//! target dimensions, recovery success rates and calibration of `C`.
//!
//! Trial `t` of an experiment with seed `s` draws its sketch from seed
//! `s + t`. Monte Carlo samples of the set are drawn from a seed derived from
//! the trial seed alone, so every `m` of a sweep sees the same samples.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{calibrate_c, calibration_grid, target_dimension, BoundModel, BoundParams, Calibration, CALIBRATION_STEPS};
use crate::complexity::CoveringProfile;
use crate::distortion::{
    curve_length_distortion, epsilon, epsilon_gram, exact_sparse_rip, exact_subspace_rip, failure_rate, kappa_mc,
    wilson_interval, FailureRate, Mode, PairDistances, MAX_RIP_SUPPORTS, Z95,
};
use crate::error::{invalid, Error, Result};
use crate::recovery::{landweber_recover, relative_error, RecoveryModel, RecoveryOptions, StepRule};
use crate::rng;
use crate::sets::{binomial, ManifoldSpec, StructuredSet};
use crate::sketch::{Family, Sketch, SketchSpec};
use crate::subspaces::ParameterDomain;

/// Relative error below which a recovery counts as exact.
pub const EXACT_RECOVERY: f64 = 1e-6;

/// Initial segment count for curve-length measurements.
pub const CURVE_SEGMENTS: usize = 64;

const SAMPLE_STREAM: u64 = 0x5A3;

/// Parse `start:stop:step`; `stop` is included when it lies on the grid.
/// A single integer is a one-point grid.
pub fn parse_grid(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad grid value `{s}` in `{text}`")));
    let (start, stop, step) = match parts.as_slice() {
        [one] => {
            let v = num(one)?;
            (v, v, 1)
        }
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(Error::Parse(format!("grid must be start:stop:step, got `{text}`"))),
    };
    if step == 0 || start == 0 || stop < start {
        return Err(invalid(format!("grid needs 1 <= start <= stop and step >= 1, got `{text}`")));
    }
    Ok((start..=stop).step_by(step).collect())
}

/// Distortion of random sketches on a fixed structured set.
#[derive(Debug, Clone)]
pub struct DistortionExperiment {
    pub set: StructuredSet,
    pub family: Family,
    /// Sample count for Monte Carlo measurements.
    pub samples: usize,
    pairs: Option<PairDistances>,
}

impl DistortionExperiment {
    pub fn new(set: StructuredSet, family: Family, samples: usize) -> Result<Self> {
        set.validate()?;
        family.validate()?;
        if samples == 0 {
            return Err(invalid("sample count must be at least one"));
        }
        let pairs = match &set {
            StructuredSet::Finite(p) => Some(PairDistances::new(p)?),
            _ => None,
        };
        Ok(Self { set, family, samples, pairs })
    }

    /// How [`measure`](Self::measure) evaluates the set.
    pub fn mode(&self) -> Mode {
        match &self.set {
            StructuredSet::Finite(_) => Mode::Exact,
            StructuredSet::Sparse { n, s } if binomial(*n, *s) <= MAX_RIP_SUPPORTS => Mode::Exact,
            StructuredSet::Uos(f) => match f.domain() {
                ParameterDomain::Indices { count } if count as u128 <= MAX_RIP_SUPPORTS => Mode::Exact,
                _ => Mode::MonteCarlo,
            },
            StructuredSet::Manifold(spec) if spec.is_curve() => Mode::Exact,
            _ => Mode::MonteCarlo,
        }
    }

    /// Distortion of the sketch drawn from `trial_seed` with `m` rows:
    /// `ε` over the points of a finite set (via [`epsilon_gram`]), exact `δ` over enumerable cones,
    /// length distortion for curves, Monte Carlo `κ` of the normalized set
    /// otherwise.
    pub fn measure(&self, m: usize, trial_seed: u64) -> Result<f64> {
        let sk = Sketch::build(SketchSpec::new(self.family, m, self.set.ambient_dim(), trial_seed))?;
        self.measure_with(&sk, trial_seed)
    }

    pub fn measure_with(&self, sk: &Sketch, trial_seed: u64) -> Result<f64> {
        let sample_seed = rng::derive_seed(trial_seed, SAMPLE_STREAM);
        match (&self.set, self.mode()) {
            (StructuredSet::Finite(p), _) => match &self.pairs {
                Some(pairs) => epsilon_gram(sk, p, pairs),
                None => epsilon(sk, p),
            },
            (StructuredSet::Sparse { s, .. }, Mode::Exact) => exact_sparse_rip(sk, *s),
            (StructuredSet::Uos(f), Mode::Exact) => {
                let ParameterDomain::Indices { count } = f.domain() else { unreachable!() };
                exact_subspace_rip(sk, &f.discretize(count)?)
            }
            (StructuredSet::Manifold(spec), Mode::Exact) => curve_length_distortion(sk, spec, CURVE_SEGMENTS),
            (StructuredSet::Manifold(_), _) => {
                let p = self.set.sample(self.samples.max(2), sample_seed, false)?;
                epsilon(sk, &p)
            }
            (set, _) => kappa_mc(sk, set, self.samples, sample_seed),
        }
    }

    /// Measured distortion over `trials` sketches and the failure rate
    /// against `target`.
    pub fn run(&self, m: usize, trials: usize, seed: u64, target: f64) -> Result<FailureRate> {
        failure_rate(trials, seed, target, |t| self.measure(m, t))
    }
}

/// One `m` of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub m: usize,
    pub median: f64,
    pub outcome: FailureRate,
}

pub fn phase_sweep(exp: &DistortionExperiment, grid: &[usize], trials: usize, seed: u64, target: f64) -> Result<Vec<PhaseRow>> {
    grid.iter()
        .map(|&m| {
            let outcome = exp.run(m, trials, seed, target)?;
            Ok(PhaseRow { m, median: outcome.median(), outcome })
        })
        .collect()
}

/// Smallest `m` in `[lo, hi]` whose median distortion over `trials` is at
/// most `target`, found by bisection (the median is treated as
/// non-increasing in `m`). `None` if even `hi` misses the target.
pub fn minimal_m(exp: &DistortionExperiment, target: f64, trials: usize, seed: u64, lo: usize, hi: usize) -> Result<Option<usize>> {
    if lo == 0 || hi < lo {
        return Err(invalid(format!("search range needs 1 <= lo <= hi, got [{lo}, {hi}]")));
    }
    let ok = |m: usize| -> Result<bool> { Ok(exp.run(m, trials, seed, target)?.median() <= target) };
    if !ok(hi)? {
        return Ok(None);
    }
    let (mut bad, mut good) = (lo - 1, hi);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Some(good))
}

/// Least-squares line `y ≈ slope·x + intercept` with Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(invalid("a fit needs at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("a fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let correlation = if syy == 0.0 { 1.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(LinearFit { slope, intercept: my - slope * mx, correlation })
}

/// Gaussian cloud of `points` points in `R^n` as a finite set.
pub fn gaussian_cloud_set(n: usize, points: usize, seed: u64) -> StructuredSet {
    StructuredSet::Finite(crate::sets::gaussian_cloud(n, points, &mut rng::stream(seed)))
}

/// Success count of a recovery experiment with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessRate {
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl SuccessRate {
    fn new(successes: usize, trials: usize) -> Self {
        let (lo, hi) = wilson_interval(successes, trials, Z95);
        Self { successes, trials, rate: successes as f64 / trials as f64, lo, hi }
    }
}

/// Noiseless recovery of random unit-norm `s`-sparse signals in `R^n`.
#[derive(Debug, Clone)]
pub struct RecoveryExperiment {
    pub n: usize,
    pub s: usize,
    pub family: Family,
    pub options: RecoveryOptions,
}

impl RecoveryExperiment {
    /// Relative error of trial `trial_seed` at `m` rows.
    pub fn trial(&self, m: usize, trial_seed: u64) -> Result<f64> {
        let sk = Sketch::build(SketchSpec::new(self.family, m, self.n, trial_seed))?;
        let sparse = StructuredSet::Sparse { n: self.n, s: self.s };
        let x = sparse.sample(1, rng::derive_seed(trial_seed, SAMPLE_STREAM), true)?.point(0).into_owned();
        let y = sk.apply(&x)?;
        let res = landweber_recover(&sk, &y, &RecoveryModel::Sparse { s: self.s }, &self.options)?;
        Ok(relative_error(&res.estimate, &x))
    }

    pub fn success_rate(&self, m: usize, trials: usize, seed: u64) -> Result<SuccessRate> {
        if trials == 0 {
            return Err(invalid("success rate needs at least one trial"));
        }
        let errors = (0..trials as u64)
            .into_par_iter()
            .map(|t| self.trial(m, seed.wrapping_add(t)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(SuccessRate::new(errors.iter().filter(|e| **e <= EXACT_RECOVERY).count(), trials))
    }
}

/// Step configurations tried by [`calibrate_step`]: fixed steps
/// `0.1, 0.2, …, 1.0` and the normalized rule capped at 1.
pub fn step_candidates() -> Vec<(StepRule, f64)> {
    let mut c: Vec<(StepRule, f64)> = (1..=10).map(|k| (StepRule::Fixed, k as f64 / 10.0)).collect();
    c.push((StepRule::Normalized, 1.0));
    c
}

/// Outcome of a step calibration: every candidate with its success rate and
/// the index of the best one (first on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct StepCalibration {
    pub candidates: Vec<((StepRule, f64), SuccessRate)>,
    pub best: usize,
}

impl StepCalibration {
    pub fn rule(&self) -> (StepRule, f64) {
        self.candidates[self.best].0
    }
}

/// Pick the step configuration with the highest success rate at `m`.
pub fn calibrate_step(exp: &RecoveryExperiment, candidates: &[(StepRule, f64)], m: usize, trials: usize, seed: u64) -> Result<StepCalibration> {
    if candidates.is_empty() {
        return Err(invalid("no step candidates"));
    }
    let mut results = Vec::with_capacity(candidates.len());
    let mut best = 0;
    for (i, &(rule, step)) in candidates.iter().enumerate() {
        let trial = RecoveryExperiment { options: RecoveryOptions { rule, step, ..exp.options.clone() }, ..exp.clone() };
        let rate = trial.success_rate(m, trials, seed)?;
        if rate.successes > results.get(best).map(|(_, r): &(_, SuccessRate)| r.successes).unwrap_or(0) {
            best = i;
        }
        results.push(((rule, step), rate));
    }
    Ok(StepCalibration { candidates: results, best })
}

/// Covering profile of the tangent lines of a planar circle under the
/// Finsler distance: `N(u) ≤ (1 + π/2)/u` at diameter 1.
pub fn circle_tangent_profile() -> CoveringProfile {
    CoveringProfile::Power { dim: 1.0, c: 1.0 + FRAC_PI_2, base: 1.0 }
}

/// Benchmarks with an executable experiment for calibrating `C`.
#[derive(Debug, Clone, PartialEq)]
pub enum Benchmark {
    /// Finite gaussian cloud; distortion `ε` over its points.
    Jl { n: usize, points: usize, cloud_seed: u64 },
    /// `s`-sparse vectors; distortion `δ_s`.
    Sparse { n: usize, s: usize },
    /// Closed curve; distortion of its length.
    Curve { spec: ManifoldSpec },
}

impl Benchmark {
    pub fn model(&self) -> BoundModel {
        match self {
            Benchmark::Jl { .. } => BoundModel::JlFinite,
            Benchmark::Sparse { .. } => BoundModel::Sparse,
            Benchmark::Curve { .. } => BoundModel::ManifoldCurves,
        }
    }

    pub fn ambient(&self) -> usize {
        match self {
            Benchmark::Jl { n, .. } | Benchmark::Sparse { n, .. } => *n,
            Benchmark::Curve { spec } => spec.ambient(),
        }
    }

    /// Bound parameters implied by the benchmark, merged over `params`
    /// (which carries the error level and `η`).
    pub fn bound_params(&self, params: &BoundParams) -> Result<BoundParams> {
        let mut p = params.clone();
        match self {
            Benchmark::Jl { points, .. } => p.points = Some(*points as f64),
            Benchmark::Sparse { n, s } => {
                p.n = Some(*n as f64);
                p.s = Some(*s as f64);
            }
            Benchmark::Curve { spec } => {
                if !spec.is_curve() {
                    return Err(invalid("curve benchmark needs a curve"));
                }
                p.dim = Some(1.0);
                if p.gamma2.is_none() && p.profile.is_none() {
                    if !matches!(spec, ManifoldSpec::Circle { .. }) {
                        return Err(Error::MissingParameter("gamma2".into()));
                    }
                    p.profile = Some(circle_tangent_profile());
                    p.diameter = Some(1.0);
                }
            }
        }
        Ok(p)
    }

    /// Target level of the measured distortion. Curve lengths are compared
    /// with `ε` itself; the other benchmarks with the model's error level.
    pub fn target(&self, params: &BoundParams) -> Result<f64> {
        let kind = self.model().error_kind();
        params.error_level(kind).ok_or_else(|| Error::MissingParameter(kind.name().into()))
    }

    pub fn experiment(&self, family: Family, samples: usize) -> Result<DistortionExperiment> {
        let set = match self {
            Benchmark::Jl { n, points, cloud_seed } => gaussian_cloud_set(*n, *points, *cloud_seed),
            Benchmark::Sparse { n, s } => StructuredSet::Sparse { n: *n, s: *s },
            Benchmark::Curve { spec } => StructuredSet::Manifold(*spec),
        };
        DistortionExperiment::new(set, family, samples)
    }
}

/// Calibrate `C` on a benchmark: the smallest grid value `2^k/4` whose
/// bound `m(C)` fails at most an `η` fraction of `trials`. Grid points with
/// `m(C) > max_m` are not run.
pub fn calibrate_benchmark(
    bench: &Benchmark,
    family: Family,
    params: &BoundParams,
    trials: usize,
    seed: u64,
    max_m: u64,
    samples: usize,
) -> Result<Calibration> {
    let p = bench.bound_params(params)?;
    let eta = p.eta.ok_or_else(|| Error::MissingParameter("eta".into()))?;
    let target = bench.target(&p)?;
    let exp = bench.experiment(family, samples)?;
    let model = bench.model();
    let alpha = family.alpha();
    calibrate_c(
        &calibration_grid(CALIBRATION_STEPS),
        eta,
        max_m,
        |c| Ok(target_dimension(model, &p, c, alpha)?.m),
        |m| exp.run(m as usize, trials, seed, target),
    )
}
