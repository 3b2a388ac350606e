//! Subgaussian maps `Φ = Φ̃/√m` with i.i.d. unit-variance entries.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::points::{PointSet, Tensor};
use crate::psi2::psi2_norm_estimate;
use crate::rng;

/// Entry distribution of `Φ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    Gaussian,
    Rademacher,
    /// `P(±√q) = 1/(2q)`, `P(0) = 1 − 1/q`.
    Achlioptas { q: f64 },
    /// A matrix supplied directly (fixtures, imports without a known law).
    Explicit,
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Achlioptas { q } if !(q >= 1.0 && q.is_finite()) => {
                Err(invalid(format!("achlioptas q must be >= 1, got {q}")))
            }
            _ => Ok(()),
        }
    }

    /// Subgaussian parameter α attached to the family.
    pub fn alpha(&self) -> f64 {
        match *self {
            // ψ2² of a standard normal: (1 − 2/C²)^{-1/2} = 2.
            Family::Gaussian => 8.0 / 3.0,
            // ψ2² of a ±1 variable: exp(1/C²) = 2.
            Family::Rademacher => (1.0 / std::f64::consts::LN_2).max(1.0),
            Family::Achlioptas { q } => q.max(1.0),
            Family::Explicit => 1.0,
        }
    }

    /// Unscaled entry `Φ̃_ij` for a counter key.
    #[inline]
    fn entry(&self, key: u64) -> f64 {
        match *self {
            Family::Gaussian => rng::gaussian_from_key(key),
            Family::Rademacher => {
                if rng::splitmix64(key) >> 63 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::Achlioptas { q } => {
                let u = rng::unit_closed_open(rng::splitmix64(key));
                let p = 1.0 / (2.0 * q);
                if u < p {
                    -q.sqrt()
                } else if u < 2.0 * p {
                    q.sqrt()
                } else {
                    0.0
                }
            }
            Family::Explicit => 0.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian => write!(f, "gaussian"),
            Family::Rademacher => write!(f, "rademacher"),
            Family::Achlioptas { q } => write!(f, "achlioptas:{q}"),
            Family::Explicit => write!(f, "explicit"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let family = match s.as_str() {
            "gaussian" | "normal" => Family::Gaussian,
            "rademacher" | "sign" => Family::Rademacher,
            "explicit" => Family::Explicit,
            "achlioptas" => Family::Achlioptas { q: 3.0 },
            other => {
                let q = other
                    .strip_prefix("achlioptas:")
                    .or_else(|| other.strip_prefix("achlioptas="))
                    .ok_or_else(|| Error::Parse(format!("unknown sketch family `{s}`")))?;
                let q: f64 = q.parse().map_err(|_| Error::Parse(format!("bad achlioptas q `{q}`")))?;
                Family::Achlioptas { q }
            }
        };
        family.validate()?;
        Ok(family)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub fn new(family: Family, m: usize, n: usize, seed: u64) -> Self {
        Self { family, m, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(invalid(format!("sketch dimensions must be positive, got {}x{}", self.m, self.n)));
        }
        self.family.validate()
    }

    /// Unscaled entry `(i, j)`; a pure function of `(seed, i, j)`.
    #[inline]
    pub fn raw_entry(&self, i: usize, j: usize) -> f64 {
        self.family.entry(rng::entry_key(self.seed, i as u64, j as u64))
    }
}

/// A realized `m × n` map, already scaled by `1/√m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch {
    matrix: DMatrix<f64>,
    spec: SketchSpec,
    alpha: f64,
}

impl Sketch {
    pub fn build(spec: SketchSpec) -> Result<Self> {
        spec.validate()?;
        if spec.family == Family::Explicit {
            return Err(invalid("explicit sketches are built with Sketch::from_matrix"));
        }
        let scale = 1.0 / (spec.m as f64).sqrt();
        let matrix = DMatrix::from_fn(spec.m, spec.n, |i, j| spec.raw_entry(i, j) * scale);
        Ok(Self { matrix, alpha: spec.family.alpha(), spec })
    }

    /// Wraps a given matrix as-is (no rescaling). α defaults to 1.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(invalid("empty sketch matrix"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let spec = SketchSpec::new(Family::Explicit, matrix.nrows(), matrix.ncols(), 0);
        Ok(Self { matrix, spec, alpha: 1.0 })
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got });
        }
        Ok(())
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x.len())?;
        Ok(&self.matrix * x)
    }

    pub fn apply_view(&self, x: DVectorView<'_, f64>) -> Result<DVector<f64>> {
        self.check_dim(x.len())?;
        Ok(&self.matrix * x)
    }

    /// `Φ` applied to every point; columns of the result are the images.
    pub fn apply_set(&self, p: &PointSet) -> Result<DMatrix<f64>> {
        self.check_dim(p.dim())?;
        Ok(&self.matrix * p.as_matrix())
    }

    /// `Φ` applied to the row-major flattening of a matrix or tensor.
    pub fn apply_flat(&self, x: &Tensor) -> Result<DVector<f64>> {
        self.check_dim(x.data().len())?;
        Ok(&self.matrix * x.flatten())
    }

    /// Adjoint `Φᵀ y`.
    pub fn adjoint(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: y.len() });
        }
        Ok(self.matrix.tr_mul(y))
    }

    /// CSV export: a `m,n,family,seed` header, its values, then `m` rows of
    /// `n` entries with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["m", "n", "family", "seed"])?;
        w.write_record([
            self.m().to_string(),
            self.n().to_string(),
            self.spec.family.to_string(),
            self.spec.seed.to_string(),
        ])?;
        for row in self.matrix.row_iter() {
            w.write_record(row.iter().map(|v| crate::io::fmt_f64(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
        let mut records = r.records();
        let head = records.next().ok_or_else(|| Error::Parse("missing sketch header values".into()))??;
        if head.len() != 4 {
            return Err(Error::Parse("sketch header must have 4 fields".into()));
        }
        let parse_usize = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad integer `{s}`")));
        let m = parse_usize(&head[0])?;
        let n = parse_usize(&head[1])?;
        let family: Family = head[2].parse()?;
        let seed: u64 = head[3].trim().parse().map_err(|_| Error::Parse(format!("bad seed `{}`", &head[3])))?;
        let mut data = Vec::with_capacity(m * n);
        let mut rows = 0;
        for rec in records {
            let rec = rec?;
            if rec.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: rec.len() });
            }
            for field in rec.iter() {
                data.push(field.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad float `{field}`")))?);
            }
            rows += 1;
        }
        if rows != m {
            return Err(Error::DimensionMismatch { expected: m, got: rows });
        }
        let matrix = DMatrix::from_row_slice(m, n, &data);
        let mut sk = Sketch::from_matrix(matrix)?;
        sk.spec = SketchSpec::new(family, m, n, seed);
        sk.alpha = family.alpha();
        Ok(sk)
    }
}

/// Empirical ψ2 norm of `√m·[Φx]_1` against the family's `√α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi2Check {
    pub estimate: f64,
    pub sqrt_alpha: f64,
    pub samples: usize,
}

impl Psi2Check {
    /// Whether the estimate stays within `slack` (relative) of `√α`.
    pub fn holds(&self, slack: f64) -> bool {
        self.estimate <= self.sqrt_alpha * (1.0 + slack)
    }
}

/// Draws `samples` fresh first rows of `Φ̃` and estimates the ψ2 norm of
/// `⟨Φ̃_1, x⟩` for a unit `x`.
pub fn psi2_check(family: Family, x: &DVector<f64>, samples: usize, seed: u64) -> Result<Psi2Check> {
    family.validate()?;
    let nrm = x.norm();
    if nrm == 0.0 {
        return Err(invalid("psi2 check needs a nonzero direction"));
    }
    let values: Vec<f64> = (0..samples)
        .map(|t| {
            let spec = SketchSpec::new(family, 1, x.len(), rng::derive_seed(seed, t as u64));
            x.iter().enumerate().map(|(j, xj)| spec.raw_entry(0, j) * xj / nrm).sum()
        })
        .collect();
    Ok(Psi2Check { estimate: psi2_norm_estimate(&values)?, sqrt_alpha: family.alpha().sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn deterministic_for_seed() {
        for family in [Family::Gaussian, Family::Rademacher, Family::Achlioptas { q: 3.0 }] {
            let a = Sketch::build(SketchSpec::new(family, 7, 9, 42)).unwrap();
            let b = Sketch::build(SketchSpec::new(family, 7, 9, 42)).unwrap();
            assert!(a.matrix().iter().zip(b.matrix().iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
            let c = Sketch::build(SketchSpec::new(family, 7, 9, 43)).unwrap();
            assert_ne!(a.matrix(), c.matrix());
        }
    }

    #[test]
    fn rows_do_not_depend_on_m() {
        let small = Sketch::build(SketchSpec::new(Family::Gaussian, 3, 5, 1)).unwrap();
        let big = Sketch::build(SketchSpec::new(Family::Gaussian, 10, 5, 1)).unwrap();
        let rescale = (10.0f64 / 3.0).sqrt();
        for i in 0..3 {
            for j in 0..5 {
                assert!((small.matrix()[(i, j)] - big.matrix()[(i, j)] * rescale).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn achlioptas_entry_law() {
        let spec = SketchSpec::new(Family::Achlioptas { q: 3.0 }, 300, 300, 8);
        let (mut neg, mut pos, mut zero) = (0usize, 0usize, 0usize);
        for i in 0..300 {
            for j in 0..300 {
                let v = spec.raw_entry(i, j);
                if v == 0.0 {
                    zero += 1;
                } else if (v + 3f64.sqrt()).abs() < 1e-15 {
                    neg += 1;
                } else if (v - 3f64.sqrt()).abs() < 1e-15 {
                    pos += 1;
                } else {
                    panic!("unexpected entry {v}");
                }
            }
        }
        let total = 90_000.0;
        assert!((neg as f64 / total - 1.0 / 6.0).abs() < 0.006);
        assert!((pos as f64 / total - 1.0 / 6.0).abs() < 0.006);
        assert!((zero as f64 / total - 2.0 / 3.0).abs() < 0.008);
    }

    #[test]
    fn achlioptas_q1_is_rademacher_law() {
        let spec = SketchSpec::new(Family::Achlioptas { q: 1.0 }, 50, 50, 2);
        let mut pos = 0;
        for i in 0..50 {
            for j in 0..50 {
                let v = spec.raw_entry(i, j);
                assert!(v == 1.0 || v == -1.0);
                pos += (v > 0.0) as usize;
            }
        }
        assert!((pos as f64 / 2500.0 - 0.5).abs() < 0.04);
    }

    #[test]
    fn gaussian_entry_moments() {
        let sk = Sketch::build(SketchSpec::new(Family::Gaussian, 100, 100, 17)).unwrap();
        let scaled: Vec<f64> = sk.matrix().iter().map(|v| v * 10.0).collect();
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        let var = scaled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (scaled.len() - 1) as f64;
        assert!(mean.abs() < 0.04, "{mean}");
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn rejects_bad_q() {
        assert!(Sketch::build(SketchSpec::new(Family::Achlioptas { q: 0.5 }, 2, 2, 0)).is_err());
        assert!("achlioptas:0.2".parse::<Family>().is_err());
    }

    #[test]
    fn alpha_values() {
        assert!((Family::Gaussian.alpha() - 8.0 / 3.0).abs() < 1e-15);
        assert!((Family::Rademacher.alpha() - 1.0 / 2f64.ln()).abs() < 1e-15);
        assert_eq!(Family::Achlioptas { q: 3.0 }.alpha(), 3.0);
        for f in [Family::Gaussian, Family::Rademacher, Family::Achlioptas { q: 1.0 }] {
            assert!(f.alpha() >= 1.0);
        }
    }

    #[test]
    fn apply_zero_and_identity() {
        let sk = Sketch::build(SketchSpec::new(Family::Gaussian, 4, 6, 3)).unwrap();
        assert_eq!(sk.apply(&DVector::zeros(6)).unwrap(), DVector::zeros(4));
        let id = Sketch::from_matrix(DMatrix::identity(5, 5)).unwrap();
        let x = DVector::from_fn(5, |i, _| i as f64 - 2.0);
        assert_eq!(id.apply(&x).unwrap(), x);
        assert!(matches!(sk.apply(&DVector::zeros(5)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn apply_is_linear() {
        let sk = Sketch::build(SketchSpec::new(Family::Achlioptas { q: 3.0 }, 8, 12, 4)).unwrap();
        let mut r = rng::stream(1);
        use rand::Rng;
        let x = DVector::from_fn(12, |_, _| r.random_range(-1.0..1.0));
        let y = DVector::from_fn(12, |_, _| r.random_range(-1.0..1.0));
        let (a, b) = (2.5, -0.75);
        let lhs = sk.apply(&(a * &x + b * &y)).unwrap();
        let rhs = a * sk.apply(&x).unwrap() + b * sk.apply(&y).unwrap();
        assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn flat_application() {
        let id = Sketch::from_matrix(DMatrix::identity(4, 4)).unwrap();
        let eye = Tensor::from_matrix(&DMatrix::identity(2, 2));
        assert_eq!(id.apply_flat(&eye).unwrap(), DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]));

        let u = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let rank_one = Tensor::from_matrix(&(&u * v.transpose()));
        assert!((rank_one.flatten().norm() - u.norm() * v.norm()).abs() < 1e-12);

        let ones = Tensor::new(vec![2, 2, 2], vec![1.0; 8]).unwrap();
        assert_eq!(ones.flatten(), DVector::from_element(8, 1.0));
        let sk = Sketch::build(SketchSpec::new(Family::Gaussian, 3, 8, 0)).unwrap();
        assert_eq!(sk.apply_flat(&ones).unwrap(), sk.apply(&DVector::from_element(8, 1.0)).unwrap());
        assert!(sk.apply_flat(&eye).is_err());
    }

    #[test]
    fn isotropy_over_fresh_sketches() {
        // E‖Φx‖² = ‖x‖²
        let n = 16;
        let x = DVector::from_fn(n, |i, _| ((i as f64) * 0.7).sin());
        let x = &x / x.norm();
        for family in [Family::Gaussian, Family::Rademacher, Family::Achlioptas { q: 3.0 }] {
            let trials = 10_000;
            let vals: Vec<f64> = (0..trials)
                .map(|t| {
                    let sk = Sketch::build(SketchSpec::new(family, 4, n, 1000 + t)).unwrap();
                    sk.apply(&x).unwrap().norm_squared()
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / trials as f64;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
            let se = sd / (trials as f64).sqrt();
            assert!((mean - 1.0).abs() <= 3.0 * se, "{family}: {mean} ± {se}");
            assert!((mean - 1.0).abs() <= 4.0 / (trials as f64).sqrt());
        }
    }

    #[test]
    fn psi2_within_alpha_along_coordinate() {
        let x = unit(32, 0);
        for family in [Family::Gaussian, Family::Rademacher, Family::Achlioptas { q: 3.0 }] {
            let check = psi2_check(family, &x, 200_000, 77).unwrap();
            assert!(check.holds(0.1), "{family}: {check:?}");
        }
    }

    #[test]
    fn rademacher_psi2_exceeds_alpha_on_spread_direction() {
        // Sums of many signs approach a Gaussian, whose ψ2 norm is √(8/3) > √(1/ln 2).
        let x = DVector::from_element(256, 1.0);
        let check = psi2_check(Family::Rademacher, &x, 200_000, 5).unwrap();
        assert!(!check.holds(0.1), "{check:?}");
        assert!(check.estimate <= (8.0f64 / 3.0).sqrt() * 1.1);
    }

    #[test]
    fn csv_round_trip() {
        let sk = Sketch::build(SketchSpec::new(Family::Achlioptas { q: 3.0 }, 3, 4, 99)).unwrap();
        let mut buf = Vec::new();
        sk.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("m,n,family,seed\n3,4,achlioptas:3,99\n"));
        let back = Sketch::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.matrix(), sk.matrix());
        assert_eq!(back.spec(), sk.spec());
        assert_eq!(back.alpha(), 3.0);
    }
}
