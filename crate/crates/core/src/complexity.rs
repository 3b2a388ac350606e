//! Computable surrogates for the γ2 functional: covering profiles and
//! Dudley's entropy integral, greedy nets, and Monte Carlo Gaussian width.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::points::{PointSet, SemiMetric};
use crate::rng;

/// Number of trapezoid nodes for analytic profiles.
pub const DUDLEY_NODES: usize = 2048;
/// Lower integration limit, relative to the integration scale.
pub const DUDLEY_CUTOFF: f64 = 1e-6;

/// Upper bounds on covering numbers `N(r)` as a function of the radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "profile")]
pub enum CoveringProfile {
    /// Covering dimension `dim` with parameter `c` and base covering `base`:
    /// `N(u·Δ) ≤ base·(c/u)^dim` for `0 < u ≤ 1`.
    Power { dim: f64, c: f64, base: f64 },
    /// Ball of the given radius in a `dim`-dimensional normed space:
    /// `N(r) ≤ (1 + 2·radius/r)^dim`, and one ball once `r ≥ radius`.
    Volumetric { dim: f64, radius: f64 },
    /// Net sizes measured at increasing radii. Below the smallest radius the
    /// set's cardinality is used.
    Empirical { radii: Vec<f64>, counts: Vec<usize>, cardinality: usize },
}

impl CoveringProfile {
    /// Unit ball of `R^K`.
    pub fn unit_ball(dim: usize) -> Self {
        CoveringProfile::Volumetric { dim: dim as f64, radius: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::DivergentProfile(what.to_string()));
        match self {
            CoveringProfile::Power { dim, c, base } => {
                if !(dim.is_finite() && *dim >= 0.0) {
                    return bad("covering dimension must be finite and nonnegative");
                }
                if !(c.is_finite() && *c > 0.0 && base.is_finite() && *base > 0.0) {
                    return bad("parameter and base covering must be finite and positive");
                }
            }
            CoveringProfile::Volumetric { dim, radius } => {
                if !(dim.is_finite() && *dim >= 0.0 && radius.is_finite() && *radius >= 0.0) {
                    return bad("volumetric profile needs finite dimension and radius");
                }
            }
            CoveringProfile::Empirical { radii, counts, cardinality } => {
                if radii.len() != counts.len() {
                    return Err(invalid("empirical profile radii and counts differ in length"));
                }
                if *cardinality == 0 || counts.iter().any(|&c| c == 0) {
                    return bad("covering numbers must be at least one");
                }
                if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("empirical radii must be positive and strictly increasing"));
                }
            }
        }
        Ok(())
    }
}

/// Dudley's entropy integral `∫₀^Δ √(log N(u)) du`.
///
/// Analytic profiles are integrated by a composite trapezoid rule on a
/// log-spaced grid of [`DUDLEY_NODES`] points after rescaling to the unit
/// interval; the piece below [`DUDLEY_CUTOFF`] is replaced by the closed
/// bound `a·√(K log(e·c/a))`. Empirical profiles are step functions and are
/// integrated exactly.
pub fn dudley_integral(profile: &CoveringProfile, diameter: f64) -> Result<f64> {
    profile.validate()?;
    if !(diameter.is_finite() && diameter >= 0.0) {
        return Err(invalid(format!("diameter must be finite and nonnegative, got {diameter}")));
    }
    if diameter == 0.0 {
        return Ok(0.0);
    }
    match profile {
        CoveringProfile::Power { dim, c, base } => {
            // ln N(vΔ) = ln base + dim·ln(c/v) = dim·ln(c_eff/v)
            if *dim == 0.0 {
                return Ok(diameter * base.ln().max(0.0).sqrt());
            }
            let c_eff = c * base.powf(1.0 / dim);
            let upper = c_eff.min(1.0);
            Ok(diameter * scaled_integral(*dim, c_eff, upper, |v| (dim * (c_eff / v).ln()).max(0.0)))
        }
        CoveringProfile::Volumetric { dim, radius } => {
            if *radius == 0.0 || *dim == 0.0 {
                return Ok(0.0);
            }
            let upper = (diameter / radius).min(1.0);
            // 1 + 2/v ≤ 3/v on (0, 1]
            Ok(radius * scaled_integral(*dim, 3.0, upper, |v| dim * (1.0 + 2.0 / v).ln()))
        }
        CoveringProfile::Empirical { radii, counts, cardinality } => {
            let mut total = 0.0;
            let mut current = *cardinality;
            let mut left = 0.0;
            for (r, &count) in radii.iter().zip(counts) {
                let right = r.min(diameter);
                if right > left {
                    total += (right - left) * (current as f64).ln().sqrt();
                    left = right;
                }
                current = current.min(count);
            }
            if diameter > left {
                total += (diameter - left) * (current as f64).ln().sqrt();
            }
            Ok(total)
        }
    }
}

/// `∫₀^upper √(log_n(v)) dv` with `log_n(v) ≤ dim·ln(c/v)` used for the tail.
fn scaled_integral(dim: f64, c: f64, upper: f64, log_n: impl Fn(f64) -> f64) -> f64 {
    if upper <= DUDLEY_CUTOFF {
        return tail_bound(dim, c, upper);
    }
    let lo = DUDLEY_CUTOFF;
    let ratio = (upper / lo).ln();
    let node = |k: usize| lo * (ratio * k as f64 / (DUDLEY_NODES - 1) as f64).exp();
    let mut sum = 0.0;
    let mut prev_v = lo;
    let mut prev_f = log_n(lo).max(0.0).sqrt();
    for k in 1..DUDLEY_NODES {
        let v = if k == DUDLEY_NODES - 1 { upper } else { node(k) };
        let f = log_n(v).max(0.0).sqrt();
        sum += 0.5 * (f + prev_f) * (v - prev_v);
        prev_v = v;
        prev_f = f;
    }
    sum + tail_bound(dim, c, lo)
}

/// `∫₀^a √(dim·ln(c/v)) dv ≤ a·√(dim·ln(e·c/a))`, valid for `c ≥ a`.
fn tail_bound(dim: f64, c: f64, a: f64) -> f64 {
    a * (dim * (std::f64::consts::E * c / a).ln().max(0.0)).sqrt()
}

/// Closed-form upper bound on the Dudley integral for analytic profiles,
/// from `∫₀^{u*} √log(c/u) du ≤ u*·√log(e·c/u*)`.
pub fn dudley_closed_form(profile: &CoveringProfile, diameter: f64) -> Option<f64> {
    match *profile {
        CoveringProfile::Power { dim, c, base } if c >= 1.0 && base >= 1.0 => {
            Some(diameter * (base.ln().sqrt() + (dim * (std::f64::consts::E * c).ln()).sqrt()))
        }
        CoveringProfile::Volumetric { dim, radius } if radius > 0.0 => {
            let a = (diameter / radius).min(1.0);
            Some(radius * tail_bound(dim, 3.0, a))
        }
        _ => None,
    }
}

/// Upper bound on γ2: the Dudley integral, or `Δ·√log|T|` when that is
/// smaller and the cardinality is known.
pub fn gamma2_upper(profile: &CoveringProfile, diameter: f64, cardinality: Option<usize>) -> Result<f64> {
    let dudley = dudley_integral(profile, diameter)?;
    Ok(match cardinality {
        Some(0) => return Err(Error::EmptySet("cardinality zero")),
        Some(card) => dudley.min(diameter * (card as f64).ln().sqrt()),
        None => dudley,
    })
}

/// Farthest-point traversal: the order in which points are added and the
/// covering radius just before each addition (`∞` for the first).
pub fn farthest_point_order<M: SemiMetric + ?Sized>(p: &PointSet, metric: &M, stop_at: f64) -> Vec<(usize, f64)> {
    let mut order = vec![(0usize, f64::INFINITY)];
    let mut dist: Vec<f64> = p.iter().map(|x| metric.distance(p.point(0), x)).collect();
    loop {
        let (far, &radius) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty point set");
        if radius <= stop_at {
            break;
        }
        order.push((far, radius));
        for (i, x) in p.iter().enumerate() {
            let d = metric.distance(p.point(far), x);
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    order
}

/// Greedy farthest-point `u`-net: every point of `P` lies within `u` of it.
pub fn greedy_net<M: SemiMetric + ?Sized>(p: &PointSet, metric: &M, u: f64) -> Result<PointSet> {
    if !(u > 0.0) {
        return Err(invalid(format!("net radius must be positive, got {u}")));
    }
    let order = farthest_point_order(p, metric, u);
    let cols: Vec<_> = order.iter().map(|&(i, _)| p.point(i).into_owned()).collect();
    PointSet::from_points(&cols)
}

/// Greedy net sizes at the given radii, as an empirical profile.
pub fn empirical_profile<M: SemiMetric + ?Sized>(p: &PointSet, metric: &M, radii: &[f64]) -> Result<CoveringProfile> {
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if radii.first().is_some_and(|r| !(*r > 0.0)) {
        return Err(invalid("profile radii must be positive"));
    }
    let finest = radii.first().copied().unwrap_or(f64::INFINITY);
    let order = farthest_point_order(p, metric, finest);
    let counts = radii.iter().map(|&r| order.iter().filter(|(_, ins)| *ins > r).count()).collect();
    Ok(CoveringProfile::Empirical { radii, counts, cardinality: p.len() })
}

/// Mean of `sup_x |⟨g, x⟩|` over fresh standard normal `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte Carlo Gaussian width of a finite sample. The same sample is used
/// for every draw, so the result estimates the exact width of the sampled
/// polytope, a lower bound for the width of the underlying set.
pub fn gaussian_width_mc(p: &PointSet, g_trials: usize, seed: u64) -> Result<WidthEstimate> {
    if g_trials < 2 {
        return Err(invalid("gaussian width needs at least two draws"));
    }
    const BATCH: usize = 64;
    let mut r = rng::stream(seed);
    let mut sups = Vec::with_capacity(g_trials);
    let mut done = 0;
    while done < g_trials {
        let rows = BATCH.min(g_trials - done);
        let g = DMatrix::from_fn(rows, p.dim(), |_, _| r.sample::<f64, _>(StandardNormal));
        let proj = g * p.as_matrix();
        sups.extend(proj.row_iter().map(|row| row.amax()));
        done += rows;
    }
    let n = sups.len() as f64;
    let mean = sups.iter().sum::<f64>() / n;
    let var = sups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(WidthEstimate { estimate: mean, stderr: (var / n).sqrt(), trials: g_trials })
}

/// One row of a complexity report.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityEstimate {
    pub set_id: String,
    pub dudley: f64,
    pub width: f64,
    pub stderr: f64,
    pub diameter: f64,
}

impl ComplexityEstimate {
    pub const HEADER: [&'static str; 5] = ["set_id", "dudley", "width", "stderr", "diameter"];

    pub fn record(&self) -> Vec<String> {
        use crate::io::fmt_f64;
        vec![self.set_id.clone(), fmt_f64(self.dudley), fmt_f64(self.width), fmt_f64(self.stderr), fmt_f64(self.diameter)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::Euclidean;
    use crate::sets;
    use nalgebra::DVector;
    use std::f64::consts::{E, PI};

    #[test]
    fn net_examples() {
        let p = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(greedy_net(&p, &Euclidean, 0.5).unwrap().len(), 2);
        assert_eq!(greedy_net(&p, &Euclidean, 1.0).unwrap().len(), 1);
        assert!(greedy_net(&p, &Euclidean, 0.0).is_err());
    }

    #[test]
    fn circle_net_size_fenced_by_packing() {
        let mut r = rng::stream(10);
        let circle = sets::uniform_circle(2, 1.0, 1000, &mut r);
        let net = greedy_net(&circle, &Euclidean, 0.1).unwrap();
        // cover ≥ 2π/(4·arcsin 0.05); separated points ≤ 2π/(2·arcsin 0.05)
        assert!((32..=70).contains(&net.len()), "{}", net.len());
        for x in circle.iter() {
            let d = net.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 0.1);
        }
    }

    #[test]
    fn dudley_ball_k4_between_fences() {
        let v = dudley_integral(&CoveringProfile::unit_ball(4), 2.0).unwrap();
        let closed = 2.0 * (3.0 * E).ln().sqrt();
        assert!(v <= closed, "{v} > {closed}");
        assert!(v >= 2.0, "{v}");
        assert_eq!(dudley_closed_form(&CoveringProfile::unit_ball(4), 2.0).unwrap(), closed);
    }

    #[test]
    fn dudley_numeric_matches_quadrature_oracle() {
        // Oracle: midpoint rule on a uniform grid of 2e6 cells over (0, 1].
        let k = 3.0;
        let cells = 2_000_000;
        let h = 1.0 / cells as f64;
        let oracle: f64 = (0..cells).map(|i| (k * (1.0 + 2.0 / ((i as f64 + 0.5) * h)).ln()).sqrt() * h).sum();
        let v = dudley_integral(&CoveringProfile::unit_ball(3), 2.0).unwrap();
        assert!((v - oracle).abs() < 1e-4 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn dudley_singleton_is_zero() {
        let p = CoveringProfile::Empirical { radii: vec![], counts: vec![], cardinality: 1 };
        assert_eq!(dudley_integral(&p, 1.0).unwrap(), 0.0);
        assert_eq!(dudley_integral(&CoveringProfile::unit_ball(3), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn dudley_rejects_divergent_profile() {
        let p = CoveringProfile::Power { dim: f64::INFINITY, c: 2.0, base: 1.0 };
        assert!(matches!(dudley_integral(&p, 1.0), Err(Error::DivergentProfile(_))));
        let p = CoveringProfile::Power { dim: 1.0, c: 2.0, base: f64::INFINITY };
        assert!(dudley_integral(&p, 1.0).is_err());
    }

    #[test]
    fn dudley_monotone_in_dim_and_diameter() {
        let mut prev = 0.0;
        for k in 1..=16 {
            let v = dudley_integral(&CoveringProfile::Power { dim: k as f64, c: 3.0, base: 1.0 }, 1.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = 0.0;
        for d in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let v = dudley_integral(&CoveringProfile::Power { dim: 2.0, c: 3.0, base: 2.0 }, d).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn power_profile_below_closed_form() {
        for (dim, c, base) in [(1.0, 1.5, 1.0), (4.0, 3.0, 2.0), (10.0, 9.0, 5.0)] {
            let p = CoveringProfile::Power { dim, c, base };
            let v = dudley_integral(&p, 1.5).unwrap();
            assert!(v <= dudley_closed_form(&p, 1.5).unwrap());
        }
    }

    #[test]
    fn empirical_circle_profile_close_to_analytic() {
        let mut r = rng::stream(12);
        let circle = sets::uniform_circle(2, 1.0, 2000, &mut r);
        let radii: Vec<f64> = (0..40).map(|i| 0.005 * 1.15f64.powi(i)).filter(|&u| u < 2.0).collect();
        let emp = empirical_profile(&circle, &Euclidean, &radii).unwrap();
        let emp_val = dudley_integral(&emp, 2.0).unwrap();
        // a ball of radius r covers an arc of angle 4·arcsin(r/2) ≥ 2r: N(2u) ≤ π/(2u)
        let analytic = CoveringProfile::Power { dim: 1.0, c: PI / 2.0, base: 1.0 };
        let an_val = dudley_integral(&analytic, 2.0).unwrap();
        assert!(emp_val <= 2.0 * an_val && an_val <= 2.0 * emp_val, "{emp_val} vs {an_val}");
    }

    #[test]
    fn gamma2_upper_examples() {
        let single = CoveringProfile::Power { dim: 1.0, c: 10.0, base: 1.0 };
        let v = gamma2_upper(&single, 1.0, Some(3)).unwrap();
        assert!(v <= (3.0f64).ln().sqrt() + 1e-15);
        // |T| = e, Δ = 1 gives at most 1; use a non-integer-free check through the formula
        assert!(1.0 * E.ln().sqrt() <= 1.0);
        let ball = CoveringProfile::unit_ball(5);
        assert_eq!(gamma2_upper(&ball, 2.0, None).unwrap(), dudley_integral(&ball, 2.0).unwrap());
        let v = gamma2_upper(&CoveringProfile::unit_ball(50), 2.0, Some(100)).unwrap();
        assert!(v <= 2.0 * 100f64.ln().sqrt() + 1e-12);
        assert!((2.0 * 100f64.ln().sqrt() - 4.29).abs() < 0.01);
    }

    #[test]
    fn width_of_signed_coordinate() {
        let p = PointSet::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let w = gaussian_width_mc(&p, 20_000, 3).unwrap();
        let target = (2.0 / PI).sqrt();
        assert!((w.estimate - target).abs() < 0.02, "{w:?}");
        assert!((w.estimate - target).abs() < 3.0 * w.stderr);
    }

    #[test]
    fn width_of_sphere_and_origin() {
        let mut r = rng::stream(4);
        let sphere = sets::uniform_sphere(4, 20_000, &mut r);
        let w = gaussian_width_mc(&sphere, 2000, 5).unwrap();
        // E‖g‖ for g ∈ R^4 is √2·Γ(5/2)/Γ(2)
        let chi_mean = 2f64.sqrt() * 0.75 * PI.sqrt();
        assert!((chi_mean - 1.8799).abs() < 1e-4);
        assert!((w.estimate - chi_mean).abs() < 0.03, "{w:?}");
        let origin = PointSet::from_points(&[DVector::zeros(3)]).unwrap();
        assert_eq!(gaussian_width_mc(&origin, 100, 1).unwrap().estimate, 0.0);
    }

    #[test]
    fn width_below_three_dudley_on_catalogue() {
        let mut r = rng::stream(21);
        for k in [1usize, 2, 4, 8, 16] {
            let ball = sets::uniform_ball(k, 4000, &mut r);
            let w = gaussian_width_mc(&ball, 300, k as u64).unwrap();
            let d = dudley_integral(&CoveringProfile::unit_ball(k), 2.0).unwrap();
            assert!(w.estimate - 3.0 * w.stderr <= 3.0 * d, "K={k}: {w:?} vs {d}");
        }
        let circle = sets::uniform_circle(2, 1.0, 2000, &mut r);
        let w = gaussian_width_mc(&circle, 300, 9).unwrap();
        let d = dudley_integral(&CoveringProfile::Power { dim: 1.0, c: PI / 2.0, base: 1.0 }, 2.0).unwrap();
        assert!(w.estimate - 3.0 * w.stderr <= 3.0 * d);
        let cloud = sets::gaussian_cloud(10, 50, &mut r);
        let w = gaussian_width_mc(&cloud, 300, 2).unwrap();
        let prof = empirical_profile(&cloud, &Euclidean, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        let d = gamma2_upper(&prof, cloud.diameter(), Some(cloud.len())).unwrap();
        assert!(w.estimate - 3.0 * w.stderr <= 3.0 * d);
    }
}
