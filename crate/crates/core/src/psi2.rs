//! Empirical subgaussian (ψ2) norm.

use crate::error::{Error, Result};

/// Smallest `C` with `mean(exp(x²/C²)) ≤ 2` over the samples.
///
/// Samples are rescaled by their largest magnitude before bisecting on the
/// bracket `[1e-12, 10]`, which makes the estimate exactly scale-equivariant
/// up to rounding. Bisection runs until the bracket stops shrinking, well
/// below a relative width of `1e-6`.
pub fn psi2_norm_estimate(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySet("psi2 estimate needs samples"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let squares: Vec<f64> = samples.iter().map(|v| (v / scale).powi(2)).collect();
    let inv = 1.0 / squares.len() as f64;
    let moment = |c: f64| {
        let c2 = c * c;
        squares.iter().map(|s| (s / c2).exp()).sum::<f64>() * inv
    };

    let (mut lo, mut hi) = (1e-12f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if moment(mid) <= 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    Ok(hi * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_samples() {
        assert_eq!(psi2_norm_estimate(&[0.0; 10]).unwrap(), 0.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(psi2_norm_estimate(&[]).is_err());
    }

    #[test]
    fn rademacher_matches_closed_form() {
        // exp(1/C²) = 2
        let samples: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let expected = 1.0 / std::f64::consts::LN_2.sqrt();
        let got = psi2_norm_estimate(&samples).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!((got - 1.2011).abs() < 1e-4);
    }

    #[test]
    fn gaussian_near_mgf_oracle() {
        // E exp(g²/C²) = (1 − 2/C²)^{-1/2} = 2  ⇒  C = √(8/3)
        let mut rng = crate::rng::stream(5);
        let samples: Vec<f64> = (0..400_000).map(|_| rng.sample(StandardNormal)).collect();
        let got = psi2_norm_estimate(&samples).unwrap();
        assert!((got - (8.0f64 / 3.0).sqrt()).abs() < 0.05, "{got}");
    }

    #[test]
    fn scale_equivariant() {
        let mut rng = crate::rng::stream(9);
        let samples: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let base = psi2_norm_estimate(&samples).unwrap();
        for c in [-3.5, 0.01, 7.0, 1e5] {
            let scaled: Vec<f64> = samples.iter().map(|v| c * v).collect();
            let got = psi2_norm_estimate(&scaled).unwrap();
            assert!((got - c.abs() * base).abs() <= 1e-9 * c.abs() * base, "c={c}");
        }
    }
}
