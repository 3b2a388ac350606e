//! Model-based recovery: projected Landweber iterations
//! `x ← Project(x + μ·Φᵀ(y − Φx))` over a union of subspaces, with iterative
//! hard thresholding as the sparse case.

use std::fmt;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::sketch::Sketch;
use crate::subspaces::Subspace;

/// Keep the `s` largest-magnitude entries, ties broken toward lower index.
pub fn hard_threshold(x: &DVector<f64>, s: usize) -> Result<DVector<f64>> {
    let n = x.len();
    if s == 0 || s > n {
        return Err(invalid(format!("support size must satisfy 1 <= s <= n, got s={s}, n={n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut out = DVector::zeros(n);
    for &i in &idx[..s] {
        out[i] = x[i];
    }
    Ok(out)
}

/// Index of the member of `family` closest to `x`, i.e. with the largest
/// projected norm; the first such index on ties.
pub fn nearest_subspace(x: &DVector<f64>, family: &[Subspace]) -> Result<usize> {
    let first = family.first().ok_or(Error::EmptySet("subspace family is empty"))?;
    if first.ambient() != x.len() {
        return Err(Error::DimensionMismatch { expected: first.ambient(), got: x.len() });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in family.iter().enumerate() {
        if s.ambient() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: s.ambient() });
        }
        let v = s.projected_norm(x);
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}

/// Projection onto the nearest member of a finite union of subspaces.
pub fn project_uos(x: &DVector<f64>, family: &[Subspace]) -> Result<DVector<f64>> {
    let i = nearest_subspace(x, family)?;
    Ok(family[i].project(x))
}

/// Signal model used for the projection step.
#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryModel {
    Sparse { s: usize },
    /// A finite union; infinite families must be discretized first.
    Union(Vec<Subspace>),
}

impl RecoveryModel {
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            RecoveryModel::Sparse { s } => hard_threshold(x, *s),
            RecoveryModel::Union(family) => project_uos(x, family),
        }
    }

    /// Restriction of `g` to the model piece holding `x`; when `x = 0`,
    /// the piece is the one nearest to `g`.
    pub fn restrict(&self, g: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        let anchor = if x.iter().all(|v| *v == 0.0) { g } else { x };
        match self {
            RecoveryModel::Sparse { s } => {
                let keep = hard_threshold(anchor, *s)?;
                Ok(DVector::from_fn(g.len(), |i, _| if keep[i] != 0.0 { g[i] } else { 0.0 }))
            }
            RecoveryModel::Union(family) => Ok(family[nearest_subspace(anchor, family)?].project(g)),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self {
            RecoveryModel::Sparse { s } => x.iter().filter(|v| **v != 0.0).count() <= *s,
            RecoveryModel::Union(family) => family.iter().any(|f| f.contains(x, tol)),
        }
    }
}

/// How the step size is chosen at each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Constant `μ`.
    #[default]
    Fixed,
    /// `μ_k = ‖g_S‖² / ‖Φ g_S‖²` with `g_S` the gradient restricted to the
    /// current model piece, capped at `μ`.
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOptions {
    /// Step size `μ`, or its cap under [`StepRule::Normalized`].
    pub step: f64,
    pub rule: StepRule,
    pub max_iters: usize,
    /// Stop once `‖y − Φx‖ ≤ tol`.
    pub tol: f64,
    /// Declare divergence when the residual exceeds this multiple of its
    /// running minimum.
    pub divergence_factor: f64,
    /// Measured distortion `ε` on `U − U`, if known; used only for the
    /// bilipschitz check.
    pub bilipschitz_eps: Option<f64>,
    /// Keep every iterate in the result.
    pub trace: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { step: 1.0, rule: StepRule::Fixed, max_iters: 100, tol: 1e-10, divergence_factor: 10.0, bilipschitz_eps: None, trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    Diverged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub estimate: DVector<f64>,
    pub iterations: usize,
    /// `‖y − Φx_k‖` for `k = 0, 1, …`, starting from `x₀ = 0`.
    pub residuals: Vec<f64>,
    pub status: Status,
    pub warnings: Vec<String>,
    /// Iterates `x₁, x₂, …` when tracing was requested.
    pub iterates: Vec<DVector<f64>>,
}

/// Run summary in a serializable form.
#[derive(Debug, Clone, Serialize)]
pub struct RecoverySummary<'a> {
    pub status: Status,
    pub iterations: usize,
    pub final_residual: f64,
    pub residuals: &'a [f64],
    pub warnings: &'a [String],
}

impl RecoveryResult {
    pub fn summary(&self) -> RecoverySummary<'_> {
        RecoverySummary {
            status: self.status,
            iterations: self.iterations,
            final_residual: self.residuals.last().copied().unwrap_or(f64::NAN),
            residuals: &self.residuals,
            warnings: &self.warnings,
        }
    }

    /// Running minimum of the residual history.
    pub fn running_min(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.residuals.iter().map(|r| {
            best = best.min(*r);
            best
        }).collect()
    }
}

/// Bilipschitz ratio `(1 + ε)/(1 − ε)` must stay below `3/2`.
pub fn bilipschitz_ok(eps: f64) -> bool {
    eps < 1.0 && (1.0 + eps) / (1.0 - eps) < 1.5
}

/// Projected Landweber iteration from `x₀ = 0`.
pub fn landweber_recover(sk: &Sketch, y: &DVector<f64>, model: &RecoveryModel, opts: &RecoveryOptions) -> Result<RecoveryResult> {
    if y.len() != sk.m() {
        return Err(Error::DimensionMismatch { expected: sk.m(), got: y.len() });
    }
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {}", opts.step)));
    }
    if !(opts.tol >= 0.0) || !(opts.divergence_factor > 1.0) {
        return Err(invalid("tolerance must be nonnegative and the divergence factor above 1"));
    }
    let mut warnings = Vec::new();
    if let Some(eps) = opts.bilipschitz_eps {
        if !bilipschitz_ok(eps) {
            warnings.push(format!("bilipschitz ratio (1+eps)/(1-eps) >= 3/2 for eps = {eps}"));
        }
    }

    let mut x = DVector::zeros(sk.n());
    let mut residual = y.clone();
    let mut residuals = vec![residual.norm()];
    let mut best = residuals[0];
    let mut iterates = Vec::new();
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    if residuals[0] <= opts.tol {
        status = Status::Converged;
    }
    while status == Status::MaxIterations && iterations < opts.max_iters {
        let grad = sk.adjoint(&residual)?;
        let step = match opts.rule {
            StepRule::Fixed => opts.step,
            StepRule::Normalized => {
                let gs = model.restrict(&grad, &x)?;
                let denom = sk.apply(&gs)?.norm_squared();
                if denom > 0.0 { (gs.norm_squared() / denom).min(opts.step) } else { opts.step }
            }
        };
        x = model.project(&(&x + grad * step))?;
        iterations += 1;
        residual = y - sk.apply(&x)?;
        let r = residual.norm();
        residuals.push(r);
        if opts.trace {
            iterates.push(x.clone());
        }
        if !r.is_finite() || r > opts.divergence_factor * best {
            status = Status::Diverged;
        } else if r <= opts.tol {
            status = Status::Converged;
        }
        best = best.min(r);
    }
    Ok(RecoveryResult { estimate: x, iterations, residuals, status, warnings, iterates })
}

/// Relative reconstruction error `‖x̂ − x‖ / ‖x‖`.
pub fn relative_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    let norm = truth.norm();
    if norm == 0.0 {
        estimate.norm()
    } else {
        (estimate - truth).norm() / norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sets::{enumerate_supports, StructuredSet};
    use crate::sketch::{Family, SketchSpec};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn coordinate_family(n: usize, s: usize) -> Vec<Subspace> {
        enumerate_supports(n, s).unwrap().iter().map(|sup| Subspace::coordinate(n, sup).unwrap()).collect()
    }

    #[test]
    fn hard_threshold_examples() {
        let x = DVector::from_vec(vec![3.0, -5.0, 1.0]);
        assert_eq!(hard_threshold(&x, 1).unwrap().as_slice(), &[0.0, -5.0, 0.0]);
        assert_eq!(hard_threshold(&x, 3).unwrap(), x);
        let tie = DVector::from_vec(vec![1.0, -1.0, 1.0]);
        assert_eq!(hard_threshold(&tie, 2).unwrap().as_slice(), &[1.0, -1.0, 0.0]);
        assert!(hard_threshold(&x, 0).is_err());
    }

    #[test]
    fn hard_threshold_is_best_approximation() {
        let mut r = rng::stream(1);
        let n = 12;
        let s = 3;
        for _ in 0..20 {
            let x = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
            let best = (&x - hard_threshold(&x, s).unwrap()).norm();
            let candidates = StructuredSet::Sparse { n, s }.sample(1000, r.random(), false).unwrap();
            for z in candidates.iter() {
                assert!(best <= (&x - z).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn project_uos_examples() {
        let fam = coordinate_family(5, 2);
        let x = DVector::from_vec(vec![0.0, 2.0, 0.0, -1.0, 0.0]);
        assert_eq!(project_uos(&x, &fam).unwrap(), x);
        let mut r = rng::stream(2);
        for _ in 0..200 {
            let x = DVector::from_fn(5, |_, _| r.sample::<f64, _>(StandardNormal));
            assert_eq!(project_uos(&x, &fam).unwrap(), hard_threshold(&x, 2).unwrap());
        }
        let lines = vec![Subspace::coordinate(3, &[0]).unwrap(), Subspace::coordinate(3, &[1]).unwrap()];
        let orth = DVector::from_vec(vec![0.0, 0.0, 4.0]);
        assert_eq!(project_uos(&orth, &lines).unwrap(), DVector::zeros(3));
        assert!(project_uos(&orth, &[]).is_err());
    }

    #[test]
    fn orthogonal_sketch_recovers_in_one_step() {
        let q = DMatrix::from_fn(8, 8, |i, j| if (i + 3) % 8 == j { 1.0 } else { 0.0 });
        let sk = Sketch::from_matrix(q).unwrap();
        let x = DVector::from_vec(vec![0.0, 1.5, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0]);
        let y = sk.apply(&x).unwrap();
        let res = landweber_recover(&sk, &y, &RecoveryModel::Sparse { s: 2 }, &RecoveryOptions::default()).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.estimate, x);
    }

    #[test]
    fn gaussian_phase_point_and_invariants() {
        let (n, s, m) = (64, 3, 32);
        let mut ok = 0;
        for trial in 0..40u64 {
            let sk = Sketch::build(SketchSpec::new(Family::Gaussian, m, n, 1000 + trial)).unwrap();
            let x = StructuredSet::Sparse { n, s }.sample(1, trial, true).unwrap().point(0).into_owned();
            let y = sk.apply(&x).unwrap();
            let model = RecoveryModel::Sparse { s };
            let opts = RecoveryOptions { tol: 1e-12, rule: StepRule::Normalized, ..Default::default() };
            let res = landweber_recover(&sk, &y, &model, &opts).unwrap();
            assert!(model.contains(&res.estimate, 1e-10));
            let mins = res.running_min();
            assert!(mins.windows(2).all(|w| w[1] <= w[0]));
            if res.status == Status::Converged {
                assert!(res.residuals.last().unwrap() <= &opts.tol);
            }
            if relative_error(&res.estimate, &x) <= 1e-6 {
                ok += 1;
            }
        }
        assert!(ok >= 36, "{ok}/40");
    }

    #[test]
    fn landweber_on_coordinates_equals_iht() {
        let (n, s, m) = (16, 2, 10);
        for seed in 0..10u64 {
            let sk = Sketch::build(SketchSpec::new(Family::Gaussian, m, n, seed)).unwrap();
            let x = StructuredSet::Sparse { n, s }.sample(1, seed + 50, false).unwrap().point(0).into_owned();
            let y = sk.apply(&x).unwrap();
            for rule in [StepRule::Fixed, StepRule::Normalized] {
                let opts = RecoveryOptions { trace: true, max_iters: 30, tol: 0.0, rule, ..Default::default() };
                let a = landweber_recover(&sk, &y, &RecoveryModel::Sparse { s }, &opts).unwrap();
                let b = landweber_recover(&sk, &y, &RecoveryModel::Union(coordinate_family(n, s)), &opts).unwrap();
                assert_eq!(a.iterates.len(), b.iterates.len());
                for (u, v) in a.iterates.iter().zip(&b.iterates) {
                    assert!(u.iter().zip(v.iter()).all(|(p, q)| p.to_bits() == q.to_bits() || (*p == 0.0 && *q == 0.0)));
                }
            }
        }
    }

    #[test]
    fn large_step_diverges() {
        let sk = Sketch::build(SketchSpec::new(Family::Gaussian, 20, 40, 3)).unwrap();
        let x = StructuredSet::Sparse { n: 40, s: 4 }.sample(1, 4, true).unwrap().point(0).into_owned();
        let y = sk.apply(&x).unwrap();
        let opts = RecoveryOptions { step: 50.0, ..Default::default() };
        let res = landweber_recover(&sk, &y, &RecoveryModel::Sparse { s: 4 }, &opts).unwrap();
        assert_eq!(res.status, Status::Diverged);
    }

    #[test]
    fn bilipschitz_warning() {
        assert!(bilipschitz_ok(0.1));
        assert!(bilipschitz_ok(0.19));
        assert!(!bilipschitz_ok(0.21));
        let sk = Sketch::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let y = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let opts = RecoveryOptions { bilipschitz_eps: Some(0.5), ..Default::default() };
        let res = landweber_recover(&sk, &y, &RecoveryModel::Sparse { s: 1 }, &opts).unwrap();
        assert_eq!(res.warnings.len(), 1);
        assert_eq!(res.status, Status::Converged);
    }

    #[test]
    fn grossly_undersampled_fails() {
        let (n, s) = (64, 3);
        let mut ok = 0;
        for trial in 0..50u64 {
            let sk = Sketch::build(SketchSpec::new(Family::Gaussian, s, n, trial)).unwrap();
            let x = StructuredSet::Sparse { n, s }.sample(1, 500 + trial, true).unwrap().point(0).into_owned();
            let y = sk.apply(&x).unwrap();
            let res = landweber_recover(&sk, &y, &RecoveryModel::Sparse { s }, &RecoveryOptions::default()).unwrap();
            if relative_error(&res.estimate, &x) <= 1e-6 {
                ok += 1;
            }
        }
        assert!(ok <= 5, "{ok}/50");
    }
}
