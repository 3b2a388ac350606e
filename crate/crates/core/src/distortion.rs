//! Distortion of a sketch on a set: κ, and the restricted isometry constant
//! δ, multiplicative precision ε and additive precision ζ derived from it.
//!
//! Everything computed over a finite sample is a lower bound for the
//! supremum over the underlying continuous set.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::io::fmt_f64;
use crate::points::{chord_direction, PointSet, DEGENERATE_CHORD};
use crate::rng;
use crate::sets::{binomial, Combinations, ManifoldSpec, StructuredSet};
use crate::sketch::Sketch;
use crate::subspaces::{finsler_distance, Subspace};

/// Largest number of supports [`exact_sparse_rip`] will visit.
pub const MAX_RIP_SUPPORTS: u128 = 100_000;

/// `sup_{x∈P} |‖Φx‖² − ‖x‖²|` over a finite set.
pub fn kappa(sk: &Sketch, p: &PointSet) -> Result<f64> {
    let y = sk.apply_set(p)?;
    Ok(y.column_iter()
        .zip(p.iter())
        .map(|(yx, x)| (yx.norm_squared() - x.norm_squared()).abs())
        .fold(0.0, f64::max))
}

/// Monte Carlo κ over a structured set. Cone-shaped sets (sparse, cosparse,
/// low rank, Tucker, unions of subspaces) are sampled on the unit sphere, so
/// the result estimates the restricted isometry constant; finite sets and
/// manifolds are sampled as they are.
pub fn kappa_mc(sk: &Sketch, set: &StructuredSet, samples: usize, seed: u64) -> Result<f64> {
    let normalize = !matches!(set, StructuredSet::Finite(_) | StructuredSet::Manifold(_));
    let p = set.sample(samples, seed, normalize)?;
    kappa(sk, &p)
}

/// `δ = κ` on the normalized vectors of `P`.
pub fn delta(sk: &Sketch, p: &PointSet) -> Result<f64> {
    let y = sk.apply_set(p)?;
    let mut worst = 0.0f64;
    let mut any = false;
    for (yx, x) in y.column_iter().zip(p.iter()) {
        let nx = x.norm_squared();
        if nx.sqrt() > DEGENERATE_CHORD {
            any = true;
            worst = worst.max((yx.norm_squared() / nx - 1.0).abs());
        }
    }
    if !any {
        return Err(Error::EmptySet("no nonzero vectors"));
    }
    Ok(worst)
}

/// Worst relative and absolute deviation of squared pairwise distances.
fn pair_distortions(sk: &Sketch, p: &PointSet) -> Result<(f64, f64)> {
    if p.len() < 2 {
        return Err(Error::EmptySet("pairwise distortion needs at least two points"));
    }
    let y = sk.apply_set(p)?;
    let (mut eps, mut zeta) = (0.0f64, 0.0f64);
    let mut any = false;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let d2 = (p.point(i) - p.point(j)).norm_squared();
            if d2.sqrt() <= DEGENERATE_CHORD {
                continue;
            }
            any = true;
            let e2 = (y.column(i) - y.column(j)).norm_squared();
            eps = eps.max((e2 / d2 - 1.0).abs());
            zeta = zeta.max((e2 - d2).abs());
        }
    }
    if !any {
        return Err(Error::EmptySet("all points coincide"));
    }
    Ok((eps, zeta))
}

/// Multiplicative precision `ε = max |‖Φ(x−y)‖²/‖x−y‖² − 1|`, exact over `P`.
pub fn epsilon(sk: &Sketch, p: &PointSet) -> Result<f64> {
    Ok(pair_distortions(sk, p)?.0)
}

/// Squared pairwise distances of a finite set, for repeated distortion
/// measurements of the same set. Degenerate pairs are stored as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistances {
    len: usize,
    d2: Vec<f64>,
}

impl PairDistances {
    pub fn new(p: &PointSet) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::EmptySet("pairwise distortion needs at least two points"));
        }
        let mut d2 = Vec::with_capacity(p.len() * (p.len() - 1) / 2);
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let v = (p.point(i) - p.point(j)).norm_squared();
                d2.push(if v.sqrt() <= DEGENERATE_CHORD { f64::NAN } else { v });
            }
        }
        if d2.iter().all(|v| v.is_nan()) {
            return Err(Error::EmptySet("all points coincide"));
        }
        Ok(Self { len: p.len(), d2 })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// `ε` of a finite set through the Gram matrix of `ΦP`. Much faster than
/// [`epsilon`] on large sets; the two differ by rounding of relative size
/// about `1e-16·(‖Φx‖² + ‖Φy‖²)/‖Φ(x−y)‖²`.
pub fn epsilon_gram(sk: &Sketch, p: &PointSet, pairs: &PairDistances) -> Result<f64> {
    if pairs.len != p.len() {
        return Err(Error::DimensionMismatch { expected: pairs.len, got: p.len() });
    }
    let y = sk.apply_set(p)?;
    let g = y.tr_mul(&y);
    let mut worst = 0.0f64;
    let mut k = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let d2 = pairs.d2[k];
            k += 1;
            if d2.is_nan() {
                continue;
            }
            let e2 = g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)];
            worst = worst.max((e2 / d2 - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Additive precision `ζ = max |‖Φ(x−y)‖² − ‖x−y‖²|`, exact over `P`.
pub fn zeta(sk: &Sketch, p: &PointSet) -> Result<f64> {
    Ok(pair_distortions(sk, p)?.1)
}

/// Distortion of unsquared distances, `max |‖Φ(x−y)‖/‖x−y‖ − 1|`.
pub fn epsilon_unsquared(sk: &Sketch, p: &PointSet) -> Result<f64> {
    if p.len() < 2 {
        return Err(Error::EmptySet("pairwise distortion needs at least two points"));
    }
    let y = sk.apply_set(p)?;
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let d = (p.point(i) - p.point(j)).norm();
            if d > DEGENERATE_CHORD {
                worst = worst.max(((y.column(i) - y.column(j)).norm() / d - 1.0).abs());
            }
        }
    }
    Ok(worst)
}

/// Squared-distance budget `2ε̂ − ε̂²` that guarantees unsquared distortion
/// at most `ε̂`.
pub fn eps_no_squares(eps_hat: f64) -> Result<f64> {
    if !(eps_hat > 0.0 && eps_hat <= 1.0) {
        return Err(invalid(format!("unsquared distortion must lie in (0, 1), got {eps_hat}")));
    }
    Ok(2.0 * eps_hat - eps_hat * eps_hat)
}

/// Largest `|λ|` of a symmetric matrix.
fn spectral_radius(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.amax()
}

/// Exact restricted isometry constant `δ_s`: the largest spectral norm of
/// `Φ_Sᵀ Φ_S − I` over all supports of size `s`.
pub fn exact_sparse_rip(sk: &Sketch, s: usize) -> Result<f64> {
    let n = sk.n();
    if s == 0 || s > n {
        return Err(invalid(format!("support size must satisfy 1 <= s <= n, got s={s}, n={n}")));
    }
    let count = binomial(n, s);
    if count > MAX_RIP_SUPPORTS {
        return Err(Error::Blowup { count, limit: MAX_RIP_SUPPORTS });
    }
    let gram = sk.matrix().tr_mul(sk.matrix());
    let mut worst = 0.0f64;
    if s == 1 {
        for i in 0..n {
            worst = worst.max((gram[(i, i)] - 1.0).abs());
        }
        return Ok(worst);
    }
    let mut sub = DMatrix::zeros(s, s);
    for support in Combinations::new(n, s) {
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                sub[(a, b)] = gram[(i, j)];
            }
            sub[(a, a)] -= 1.0;
        }
        worst = worst.max(spectral_radius(sub.clone()));
    }
    Ok(worst)
}

/// Exact restricted isometry constant on a finite union of subspaces:
/// `max_i ‖B_iᵀ Φᵀ Φ B_i − I‖`.
pub fn exact_subspace_rip(sk: &Sketch, subspaces: &[Subspace]) -> Result<f64> {
    if subspaces.is_empty() {
        return Err(Error::EmptySet("subspace list is empty"));
    }
    let mut worst = 0.0f64;
    for s in subspaces {
        if s.ambient() != sk.n() {
            return Err(Error::DimensionMismatch { expected: sk.n(), got: s.ambient() });
        }
        if s.dim() == 0 {
            continue;
        }
        let image = sk.matrix() * s.basis();
        let mut g = image.tr_mul(&image);
        for i in 0..g.nrows() {
            g[(i, i)] -= 1.0;
        }
        worst = worst.max(spectral_radius(g));
    }
    Ok(worst)
}

/// `|L(Φγ)/L(γ) − 1|` for polyline approximations of a curve, refined by
/// doubling the grid until the ratio changes by less than `1e-6`.
pub fn curve_length_distortion(sk: &Sketch, spec: &ManifoldSpec, segments: usize) -> Result<f64> {
    const MAX_SEGMENTS: usize = 1 << 20;
    spec.validate()?;
    let (lo, hi) = spec.curve_domain().ok_or_else(|| invalid("length distortion needs a curve"))?;
    if segments < 2 {
        return Err(invalid("curve grid needs at least two segments"));
    }
    if spec.ambient() != sk.n() {
        return Err(Error::DimensionMismatch { expected: sk.n(), got: spec.ambient() });
    }
    let ratio_at = |segs: usize| -> Result<f64> {
        let grid = crate::sets::uniform_grid(lo, hi, segs);
        let curve = crate::sets::manifold_curve(spec, &grid)?;
        let image = sk.apply_set(&curve)?;
        let base = crate::sets::polyline_length(curve.as_matrix());
        if base <= DEGENERATE_CHORD {
            return Err(invalid("degenerate curve"));
        }
        Ok(crate::sets::polyline_length(&image) / base)
    };
    let mut segs = segments;
    let mut ratio = ratio_at(segs)?;
    while segs < MAX_SEGMENTS {
        segs *= 2;
        let next = ratio_at(segs)?;
        let change = (next - ratio).abs() / ratio.abs().max(f64::MIN_POSITIVE);
        ratio = next;
        if change < 1e-6 {
            break;
        }
    }
    Ok((ratio - 1.0).abs())
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// z-score of a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Fraction of trials whose measured distortion exceeded the target.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRate {
    pub failures: usize,
    pub trials: usize,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
    /// Measured distortion of each trial, in trial order.
    pub values: Vec<f64>,
}

impl FailureRate {
    pub fn from_values(values: Vec<f64>, target: f64) -> Self {
        let failures = values.iter().filter(|v| **v > target).count();
        let trials = values.len();
        let (lo, hi) = wilson_interval(failures, trials, Z95);
        let rate = if trials == 0 { 0.0 } else { failures as f64 / trials as f64 };
        Self { failures, trials, rate, lo, hi, values }
    }

    /// Whether the two Wilson intervals intersect.
    pub fn overlaps(&self, other: &FailureRate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn median(&self) -> f64 {
        median(&self.values)
    }
}

/// Run `measure` on trial seeds `seed, seed + 1, …` in parallel and count how
/// often the distortion exceeds `target`. Results are collected in trial
/// order, so the outcome does not depend on the thread count.
pub fn failure_rate<F>(trials: usize, seed: u64, target: f64, measure: F) -> Result<FailureRate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if trials == 0 {
        return Err(invalid("failure rate needs at least one trial"));
    }
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| measure(seed.wrapping_add(t)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(FailureRate::from_values(values, target))
}

/// Median; the mean of the middle pair for even counts. NaN for no values.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::MonteCarlo => "monte_carlo",
        })
    }
}

/// κ, δ, ε, ζ of one sketch on one set.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub set_id: String,
    pub family: String,
    pub m: usize,
    pub n: usize,
    pub mode: Mode,
    pub samples: usize,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub zeta: Option<f64>,
    pub seed: u64,
}

impl DistortionReport {
    pub const HEADER: [&'static str; 11] =
        ["set_id", "family", "m", "n", "mode", "samples", "kappa", "delta", "epsilon", "zeta", "seed"];

    /// All four quantities on a finite set, exact over its points.
    pub fn finite(set_id: &str, sk: &Sketch, p: &PointSet, seed: u64) -> Result<Self> {
        let (eps, z) = if p.len() >= 2 { pair_distortions(sk, p).map(|(e, z)| (Some(e), Some(z)))? } else { (None, None) };
        Ok(Self {
            set_id: set_id.to_string(),
            family: sk.spec().family.to_string(),
            m: sk.m(),
            n: sk.n(),
            mode: Mode::Exact,
            samples: p.len(),
            kappa: Some(kappa(sk, p)?),
            delta: delta(sk, p).ok(),
            epsilon: eps,
            zeta: z,
            seed,
        })
    }

    pub fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        vec![
            self.set_id.clone(),
            self.family.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.mode.to_string(),
            self.samples.to_string(),
            opt(self.kappa),
            opt(self.delta),
            opt(self.epsilon),
            opt(self.zeta),
            self.seed.to_string(),
        ]
    }
}

/// Outcome of a property check: how many cases were tested, how many broke
/// the inequality, and the largest observed `lhs / rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyReport {
    pub checked: usize,
    pub violations: usize,
    pub max_ratio: f64,
}

impl PropertyReport {
    fn new() -> Self {
        Self { checked: 0, violations: 0, max_ratio: 0.0 }
    }

    fn check(&mut self, lhs: f64, rhs: f64) {
        self.checked += 1;
        // relative slack for rounding in the two sides
        if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
            self.violations += 1;
        }
        if rhs > 0.0 {
            self.max_ratio = self.max_ratio.max(lhs / rhs);
        }
    }
}

/// Log-uniform value in `[lo, hi]`.
fn log_uniform<R: Rng + ?Sized>(r: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * r.random::<f64>()).exp()
}

/// Long-chord inequality: for `‖x₁ − x₂‖ ≥ t`,
/// `‖Ch(x₁,x₂) − Ch(y₁,y₂)‖ ≤ 2t⁻¹(‖x₁−y₁‖ + ‖x₂−y₂‖)`.
///
/// Quadruples are drawn in `R^dim` with `x₁, x₂` at least `t` apart and
/// `y_i` perturbations of `x_i` at log-uniform scales from `1e-4·t` to `10·t`.
pub fn long_chord_property(quadruples: usize, dim: usize, t: f64, seed: u64) -> Result<PropertyReport> {
    if dim == 0 || !(t > 0.0) {
        return Err(invalid("long-chord property needs dim >= 1 and t > 0"));
    }
    let mut r = rng::stream(seed);
    let gauss = |r: &mut rand_chacha::ChaCha8Rng, scale: f64| DVector::<f64>::from_fn(dim, |_, _| scale * r.sample::<f64, _>(StandardNormal));
    let mut report = PropertyReport::new();
    while report.checked < quadruples {
        let x1 = gauss(&mut r, 2.0 * t);
        let x2 = gauss(&mut r, 2.0 * t);
        if (&x1 - &x2).norm() < t {
            continue;
        }
        let s1 = log_uniform(&mut r, 1e-4 * t, 10.0 * t) / (dim as f64).sqrt();
        let s2 = log_uniform(&mut r, 1e-4 * t, 10.0 * t) / (dim as f64).sqrt();
        let y1 = &x1 + gauss(&mut r, s1);
        let y2 = &x2 + gauss(&mut r, s2);
        let (Some(cx), Some(cy)) = (chord_direction(x1.as_view(), x2.as_view()), chord_direction(y1.as_view(), y2.as_view())) else {
            continue;
        };
        let lhs = (cx - cy).norm();
        let rhs = 2.0 / t * ((&x1 - &y1).norm() + (&x2 - &y2).norm());
        report.check(lhs, rhs);
    }
    Ok(report)
}

// Shortest parameter step for sampled close pairs. The ratio in the ι estimate
// loses digits to cancellation on very short chords, so it stops earlier.
const SHORT_CHORD_MIN: f64 = 1e-6;
const IOTA_CHORD_MIN: f64 = 1e-3;

/// Short-chord inequalities on a manifold of known reach `τ`, over random
/// pairs (half of them close, at log-uniform separations):
/// chord-to-tangent deviation `‖Ch − P_{x₁}Ch‖ ≤ 2τ⁻¹‖x₁ − x₂‖`, and
/// `d_Fin(T_{x₁}, T_{x₂}) ≤ 2√2·τ^{-1/2}‖x₁ − x₂‖^{1/2}`.
pub fn short_chord_property(spec: &ManifoldSpec, pairs: usize, seed: u64) -> Result<(PropertyReport, PropertyReport)> {
    spec.validate()?;
    let tau = spec.known_reach().ok_or_else(|| invalid("short-chord property needs a manifold of known reach"))?;
    let mut r = rng::stream(seed);
    let (mut deviation, mut finsler) = (PropertyReport::new(), PropertyReport::new());
    while deviation.checked < pairs {
        let (x1, x2) = manifold_pair(spec, SHORT_CHORD_MIN, &mut r)?;
        let Some(ch) = chord_direction(x1.as_view(), x2.as_view()) else {
            continue;
        };
        let dist = (&x1 - &x2).norm();
        let t1 = spec.tangent_space(&x1)?;
        let t2 = spec.tangent_space(&x2)?;
        deviation.check((&ch - t1.project(&ch)).norm(), 2.0 / tau * dist);
        finsler.check(finsler_distance(&t1, &t2)?, 2.0 * 2f64.sqrt() * (dist / tau).sqrt());
    }
    Ok((deviation, finsler))
}

/// Empirical lower bound for `ι(M)`: the largest observed
/// `‖Ch(x₁,x₂) − P_{x₁}Ch(x₁,x₂)‖ / ‖x₁ − x₂‖` over random pairs.
pub fn iota_estimate(spec: &ManifoldSpec, pairs: usize, seed: u64) -> Result<f64> {
    spec.validate()?;
    let mut r = rng::stream(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (x1, x2) = manifold_pair(spec, IOTA_CHORD_MIN, &mut r)?;
        if let Some(ch) = chord_direction(x1.as_view(), x2.as_view()) {
            let t1 = spec.tangent_space(&x1)?;
            worst = worst.max((&ch - t1.project(&ch)).norm() / (&x1 - &x2).norm());
        }
    }
    Ok(worst)
}

fn manifold_pair<R: Rng + ?Sized>(spec: &ManifoldSpec, min_step: f64, r: &mut R) -> Result<(DVector<f64>, DVector<f64>)> {
    let close = r.random::<bool>();
    if let Some((lo, hi)) = spec.curve_domain() {
        let t1 = lo + (hi - lo) * r.random::<f64>();
        let t2 = if close {
            let step = log_uniform(r, min_step, 1.0) * if r.random::<bool>() { 1.0 } else { -1.0 };
            (t1 + step).clamp(lo, hi)
        } else {
            lo + (hi - lo) * r.random::<f64>()
        };
        return Ok((spec.curve_point(t1), spec.curve_point(t2)));
    }
    let x1 = spec.sample(1, r)?.point(0).into_owned();
    let x2 = if close {
        let radius = x1.norm();
        let mut y = x1.clone();
        let scale = log_uniform(r, min_step, 1.0) * radius;
        for i in 0..3 {
            y[i] += scale * r.sample::<f64, _>(StandardNormal);
        }
        let norm = y.rows(0, 3).norm();
        y.rows_mut(0, 3).scale_mut(radius / norm);
        y
    } else {
        spec.sample(1, r)?.point(0).into_owned()
    };
    Ok((x1, x2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::points::{chords, normalized_chords, normalized_vectors};
    use crate::sets;
    use crate::sketch::{Family, SketchSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn gaussian(m: usize, n: usize, seed: u64) -> Sketch {
        Sketch::build(SketchSpec::new(Family::Gaussian, m, n, seed)).unwrap()
    }

    fn cloud(n: usize, count: usize, seed: u64) -> PointSet {
        sets::gaussian_cloud(n, count, &mut rng::stream(seed))
    }

    /// Oracle: enumerate supports recursively and take eigenvalue extremes
    /// of each Gram block, independently of the library's iterator and Gram.
    fn brute_force_rip(phi: &DMatrix<f64>, s: usize) -> f64 {
        fn rec(phi: &DMatrix<f64>, s: usize, start: usize, chosen: &mut Vec<usize>, worst: &mut f64) {
            if chosen.len() == s {
                let cols = phi.select_columns(chosen.iter());
                let g = cols.transpose() * &cols;
                let eig = SymmetricEigen::new(g).eigenvalues;
                let (lo, hi) = (eig.min(), eig.max());
                *worst = worst.max((hi - 1.0).abs()).max((1.0 - lo).abs());
                return;
            }
            for j in start..phi.ncols() {
                chosen.push(j);
                rec(phi, s, j + 1, chosen, worst);
                chosen.pop();
            }
        }
        let mut worst = 0.0;
        rec(phi, s, 0, &mut Vec::new(), &mut worst);
        worst
    }

    #[test]
    fn kappa_fixtures() {
        let p = sets::uniform_sphere(5, 50, &mut rng::stream(1));
        let id = Sketch::from_matrix(DMatrix::identity(5, 5)).unwrap();
        assert_eq!(kappa(&id, &p).unwrap(), 0.0);
        let twice = Sketch::from_matrix(DMatrix::identity(5, 5) * 2.0).unwrap();
        assert!((kappa(&twice, &p).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_mc_on_sphere_decreases_in_m() {
        // s = n: the whole unit sphere
        let sphere = StructuredSet::Sparse { n: 50, s: 50 };
        let mut prev = f64::INFINITY;
        for m in [200, 800, 3200] {
            let v = kappa_mc(&gaussian(m, 50, 3), &sphere, 10_000, 4).unwrap();
            assert!(v > 0.0 && v < 1.0, "m={m}: {v}");
            assert!(v < prev, "m={m}: {v} !< {prev}");
            prev = v;
        }
    }

    #[test]
    fn sparse_rip_matches_brute_force() {
        let sk = gaussian(4, 6, 17);
        let fast = exact_sparse_rip(&sk, 2).unwrap();
        assert!((fast - brute_force_rip(sk.matrix(), 2)).abs() < 1e-10);
        for seed in 0..5 {
            let sk = gaussian(8, 12, seed);
            for s in 1..=3 {
                let fast = exact_sparse_rip(&sk, s).unwrap();
                assert!((fast - brute_force_rip(sk.matrix(), s)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sparse_rip_orthonormal_columns_and_nesting() {
        let q = Sketch::from_matrix(DMatrix::identity(6, 6)).unwrap();
        assert!(exact_sparse_rip(&q, 1).unwrap() < 1e-15);
        assert!(exact_sparse_rip(&q, 3).unwrap() < 1e-12);
        for seed in 0..10 {
            let sk = gaussian(5, 9, seed);
            let d: Vec<f64> = (1..=3).map(|s| exact_sparse_rip(&sk, s).unwrap()).collect();
            assert!(d[0] <= d[1] + 1e-12 && d[1] <= d[2] + 1e-12, "{d:?}");
        }
        assert!(matches!(exact_sparse_rip(&gaussian(4, 64, 1), 5), Err(Error::Blowup { .. })));
    }

    #[test]
    fn subspace_rip_two_paths() {
        let sk = gaussian(7, 10, 5);
        let coords: Vec<Subspace> =
            sets::enumerate_supports(10, 2).unwrap().iter().map(|s| Subspace::coordinate(10, s).unwrap()).collect();
        let a = exact_subspace_rip(&sk, &coords).unwrap();
        let b = exact_sparse_rip(&sk, 2).unwrap();
        assert!((a - b).abs() < 1e-12);
        let q = Sketch::from_matrix(DMatrix::identity(4, 4)).unwrap();
        assert!(exact_subspace_rip(&q, &[Subspace::full(4)]).unwrap() < 1e-14);
        assert!(exact_subspace_rip(&q, &[]).is_err());
    }

    #[test]
    fn subspace_rip_dominates_mc() {
        let mut r = rng::stream(8);
        let planes: Vec<Subspace> = (0..2)
            .map(|_| Subspace::span(&DMatrix::from_fn(20, 2, |_, _| r.sample(StandardNormal))).unwrap())
            .collect();
        let sk = gaussian(16, 20, 9);
        let exact = exact_subspace_rip(&sk, &planes).unwrap();
        let family = crate::subspaces::UosFamily::listed(planes).unwrap();
        let mc = kappa_mc(&sk, &StructuredSet::Uos(family), 5000, 10).unwrap();
        assert!(mc <= exact + 1e-12, "{mc} > {exact}");
        assert!(mc >= 0.5 * exact);
    }

    #[test]
    fn identities_across_code_paths() {
        for seed in 0..20 {
            let p = cloud(12, 9, seed);
            let sk = gaussian(6, 12, seed + 100);
            let eps = epsilon(&sk, &p).unwrap();
            let z = zeta(&sk, &p).unwrap();
            assert!((eps - kappa(&sk, &normalized_chords(&p).unwrap()).unwrap()).abs() < 1e-12);
            assert!((z - kappa(&sk, &chords(&p).unwrap()).unwrap()).abs() < 1e-12 * z.max(1.0));
            assert!((delta(&sk, &p).unwrap() - kappa(&sk, &normalized_vectors(&p).unwrap()).unwrap()).abs() < 1e-12);
            let diam = p.diameter();
            assert!(z <= eps * diam * diam * (1.0 + 1e-12));
        }
    }

    #[test]
    fn identity_sketch_has_no_distortion() {
        let p = cloud(4, 6, 2);
        let id = Sketch::from_matrix(DMatrix::identity(4, 4)).unwrap();
        assert_eq!(epsilon(&id, &p).unwrap(), 0.0);
        assert_eq!(zeta(&id, &p).unwrap(), 0.0);
        let single = cloud(4, 1, 2);
        assert!(epsilon(&id, &single).is_err());
    }

    #[test]
    fn eps_no_squares_values() {
        assert_eq!(eps_no_squares(0.5).unwrap(), 0.75);
        assert!((eps_no_squares(1.0 - 1e-12).unwrap() - 1.0).abs() < 1e-12);
        assert!(eps_no_squares(0.0).is_err());
        assert!(eps_no_squares(1.5).is_err());
    }

    #[test]
    fn squared_budget_implies_unsquared_bound() {
        let mut checked = 0;
        for seed in 0..1000u64 {
            let p = cloud(8, 5, seed);
            let sk = gaussian(6 + (seed % 30) as usize, 8, seed ^ 0xABCD);
            let eps = epsilon(&sk, &p).unwrap();
            let eps_hat = 0.05 + 0.9 * (seed as f64 / 1000.0);
            if eps <= eps_no_squares(eps_hat).unwrap() {
                checked += 1;
                assert!(epsilon_unsquared(&sk, &p).unwrap() <= eps_hat + 1e-12);
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn mc_dominance_in_samples() {
        let sk = gaussian(10, 30, 1);
        let set = StructuredSet::Sparse { n: 30, s: 4 };
        let small = set.sample(100, 2, true).unwrap();
        let big = set.sample(1000, 2, true).unwrap();
        // the first 100 draws of the larger sample are the smaller sample
        assert_eq!(small.as_matrix(), &big.as_matrix().columns(0, 100).into_owned());
        assert!(kappa(&sk, &small).unwrap() <= kappa(&sk, &big).unwrap());
        assert!(kappa(&sk, &big).unwrap() <= exact_sparse_rip(&sk, 4).unwrap() + 1e-12);
    }

    #[test]
    fn curve_length_fixtures() {
        let spec = ManifoldSpec::Circle { radius: 1.0, ambient: 3 };
        let id = Sketch::from_matrix(DMatrix::identity(3, 3)).unwrap();
        assert!(curve_length_distortion(&id, &spec, 64).unwrap() < 1e-12);
        let scaled = Sketch::from_matrix(DMatrix::identity(3, 3) * 1.7).unwrap();
        assert!((curve_length_distortion(&scaled, &spec, 64).unwrap() - 0.7).abs() < 1e-12);
        let sphere = ManifoldSpec::Sphere2 { radius: 1.0, ambient: 3 };
        assert!(curve_length_distortion(&id, &sphere, 64).is_err());
        assert!(curve_length_distortion(&id, &spec, 1).is_err());
    }

    #[test]
    fn gram_path_matches_direct_epsilon() {
        let mut r = rng::stream(8);
        for seed in 0..5 {
            let p = sets::gaussian_cloud(40, 25, &mut r);
            let sk = gaussian(12, 40, seed);
            let pairs = PairDistances::new(&p).unwrap();
            let direct = epsilon(&sk, &p).unwrap();
            assert!((epsilon_gram(&sk, &p, &pairs).unwrap() - direct).abs() < 1e-12);
        }
        let one = PointSet::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(PairDistances::new(&one).is_err());
    }

    #[test]
    fn wilson_interval_values() {
        // oracle: closed form evaluated by hand for 5/20
        let (lo, hi) = wilson_interval(5, 20, Z95);
        assert!((lo - 0.1119).abs() < 1e-3 && (hi - 0.4687).abs() < 1e-3, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 10, Z95).0, 0.0);
        assert_eq!(wilson_interval(10, 10, Z95).1, 1.0);
    }

    #[test]
    fn failure_rate_extremes() {
        let p = cloud(20, 10, 3);
        let measure = |seed: u64| epsilon(&gaussian(10, 20, seed), &p);
        let never = failure_rate(20, 1, f64::INFINITY, measure).unwrap();
        assert_eq!(never.rate, 0.0);
        let always = failure_rate(20, 1, 0.0, measure).unwrap();
        assert_eq!(always.rate, 1.0);
        assert_eq!(never.values, always.values);
    }

    #[test]
    fn doubling_m_does_not_raise_failure_rate() {
        let trials = 100;
        let rate = |m: usize| {
            failure_rate(trials, 5, 0.5, |seed| exact_sparse_rip(&gaussian(m, 32, seed), 2)).unwrap()
        };
        let (a, b) = (rate(16), rate(32));
        assert!(b.rate <= a.rate || b.overlaps(&a), "{} -> {}", a.rate, b.rate);
    }

    #[test]
    fn long_chords_hold() {
        let rep = long_chord_property(20_000, 6, 0.5, 1).unwrap();
        assert_eq!(rep.checked, 20_000);
        assert_eq!(rep.violations, 0);
        assert!(rep.max_ratio <= 1.0 && rep.max_ratio > 0.1);
    }

    #[test]
    fn short_chords_hold_on_circle_and_sphere() {
        for spec in [ManifoldSpec::Circle { radius: 1.0, ambient: 2 }, ManifoldSpec::Sphere2 { radius: 2.0, ambient: 4 }] {
            let (dev, fin) = short_chord_property(&spec, 5000, 2).unwrap();
            assert_eq!((dev.violations, fin.violations), (0, 0), "{spec:?}");
        }
        let helix = ManifoldSpec::Helix { a: 1.0, b: 1.0, ambient: 3 };
        assert!(short_chord_property(&helix, 10, 1).is_err());
    }

    #[test]
    fn circle_iota_matches_half_curvature() {
        // ‖Ch − PCh‖ = sin(Δφ/2), ‖x₁ − x₂‖ = 2R sin(Δφ/2)
        let spec = ManifoldSpec::Circle { radius: 2.0, ambient: 3 };
        let iota = iota_estimate(&spec, 2000, 3).unwrap();
        assert!((iota - 0.25).abs() < 1e-6, "{iota}");
        let helix = ManifoldSpec::Helix { a: 1.0, b: 1.0, ambient: 3 };
        assert!(iota_estimate(&helix, 2000, 3).unwrap() > 0.0);
    }

    #[test]
    fn circle_finsler_is_sine_of_angle() {
        let spec = ManifoldSpec::Circle { radius: 1.0, ambient: 2 };
        let a = spec.tangent_space(&spec.curve_point(0.2)).unwrap();
        let b = spec.tangent_space(&spec.curve_point(0.2 + PI / 6.0)).unwrap();
        assert!((finsler_distance(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn report_row_shape() {
        let p = cloud(5, 4, 1);
        let sk = gaussian(3, 5, 2);
        let rep = DistortionReport::finite("cloud", &sk, &p, 2).unwrap();
        let row = rep.record();
        assert_eq!(row.len(), DistortionReport::HEADER.len());
        assert_eq!(row[1], "gaussian");
        assert_eq!(row[4], "exact");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn epsilon_is_kappa_on_normalized_chords(seed in any::<u64>(), n in 2usize..20, count in 2usize..12, m in 1usize..20) {
            let p = cloud(n, count, seed);
            let sk = gaussian(m, n, seed.wrapping_add(1));
            let eps = epsilon(&sk, &p).unwrap();
            prop_assert!((eps - kappa(&sk, &normalized_chords(&p).unwrap()).unwrap()).abs() <= 1e-12 * eps.max(1.0));
        }
    }
}
