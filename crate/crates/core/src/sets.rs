//! Structured data sets: samplers, membership tests and support enumeration.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::points::{PointSet, Tensor};
use crate::rng;
use crate::subspaces::{ParameterDomain, Subspace, UosFamily};

/// Membership tolerance used by samplers and tests.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-10;
/// Largest ambient dimension accepted by [`enumerate_supports`].
pub const MAX_ENUMERATION_N: usize = 25;
/// Largest number of supports [`enumerate_supports`] will materialize.
pub const MAX_ENUMERATED_SUPPORTS: u128 = 1_000_000;

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `k`-element subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// All `s`-element supports of `0..n`, lexicographic.
pub fn enumerate_supports(n: usize, s: usize) -> Result<Vec<Vec<usize>>> {
    if s == 0 || s > n {
        return Err(invalid(format!("support size must satisfy 1 <= s <= n, got s={s}, n={n}")));
    }
    let count = binomial(n, s);
    if n > MAX_ENUMERATION_N || count > MAX_ENUMERATED_SUPPORTS {
        return Err(Error::Blowup { count, limit: MAX_ENUMERATED_SUPPORTS });
    }
    Ok(Combinations::new(n, s).collect())
}

/// `(n−1)×n` forward-difference operator, rows `e_{i+1} − e_i`.
pub fn finite_difference_operator(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(invalid(format!("finite differences need n >= 2, got {n}")));
    }
    let mut d = DMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        d[(i, i)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    Ok(d)
}

fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `count` i.i.d. standard normal points in `R^dim`.
pub fn gaussian_cloud<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> PointSet {
    PointSet::from_columns(gaussian_matrix(dim, count, rng)).expect("nonempty cloud")
}

/// Uniform points on the unit sphere of `R^dim`.
pub fn uniform_sphere<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> PointSet {
    let mut m = gaussian_matrix(dim, count, rng);
    for mut c in m.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    PointSet::from_columns(m).expect("nonempty sample")
}

/// Uniform points in the unit ball of `R^dim`.
pub fn uniform_ball<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> PointSet {
    let mut m = uniform_sphere(dim, count, rng).into_matrix();
    for mut c in m.column_iter_mut() {
        let r: f64 = rng.random::<f64>().powf(1.0 / dim as f64);
        c *= r;
    }
    PointSet::from_columns(m).expect("nonempty sample")
}

/// Uniform random points on the circle of radius `radius` in the first two
/// coordinates of `R^ambient`.
pub fn uniform_circle<R: Rng + ?Sized>(ambient: usize, radius: f64, count: usize, rng: &mut R) -> PointSet {
    let spec = ManifoldSpec::Circle { radius, ambient };
    let cols: Vec<_> = (0..count).map(|_| spec.curve_point(TAU * rng.random::<f64>())).collect();
    PointSet::from_points(&cols).expect("nonempty sample")
}

fn random_orthonormal<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    gaussian_matrix(n, k, rng).qr().q()
}

/// Numerical rank: singular values above `tol·max(1, σ_max)`.
pub fn matrix_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.singular_values();
    let cutoff = tol * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Multilinear (Tucker) rank: ranks of the mode unfoldings.
pub fn multilinear_rank(t: &Tensor, tol: f64) -> Vec<usize> {
    (0..t.order()).map(|mode| matrix_rank(&t.unfold(mode), tol)).collect()
}

/// Smooth manifolds with analytically known geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape")]
pub enum ManifoldSpec {
    /// Circle of the given radius in the span of `e1, e2`.
    Circle { radius: f64, ambient: usize },
    /// Two-sphere of the given radius in the span of `e1, e2, e3`.
    Sphere2 { radius: f64, ambient: usize },
    /// One turn `t ↦ (a cos t, a sin t, b t)`, `t ∈ [0, 2π]`.
    Helix { a: f64, b: f64, ambient: usize },
}

impl ManifoldSpec {
    pub fn validate(&self) -> Result<()> {
        let (scale_ok, ambient, needed) = match *self {
            ManifoldSpec::Circle { radius, ambient } => (radius > 0.0 && radius.is_finite(), ambient, 2),
            ManifoldSpec::Sphere2 { radius, ambient } => (radius > 0.0 && radius.is_finite(), ambient, 3),
            ManifoldSpec::Helix { a, b, ambient } => (a > 0.0 && b.is_finite() && a.is_finite(), ambient, 3),
        };
        if !scale_ok {
            return Err(invalid(format!("bad manifold parameters: {self:?}")));
        }
        if ambient < needed {
            return Err(invalid(format!("manifold needs ambient dimension >= {needed}, got {ambient}")));
        }
        Ok(())
    }

    pub fn ambient(&self) -> usize {
        match *self {
            ManifoldSpec::Circle { ambient, .. } | ManifoldSpec::Sphere2 { ambient, .. } | ManifoldSpec::Helix { ambient, .. } => ambient,
        }
    }

    /// Intrinsic dimension `K`.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::Sphere2 { .. } => 2,
            _ => 1,
        }
    }

    /// Reach, where known in closed form.
    pub fn known_reach(&self) -> Option<f64> {
        match *self {
            ManifoldSpec::Circle { radius, .. } | ManifoldSpec::Sphere2 { radius, .. } => Some(radius),
            ManifoldSpec::Helix { .. } => None,
        }
    }

    pub fn is_curve(&self) -> bool {
        self.dim() == 1
    }

    /// Parameter interval of a curve.
    pub fn curve_domain(&self) -> Option<(f64, f64)> {
        self.is_curve().then_some((0.0, TAU))
    }

    /// Point of a curve at parameter `t`. Panics for surfaces.
    pub fn curve_point(&self, t: f64) -> DVector<f64> {
        let mut x = DVector::zeros(self.ambient());
        match *self {
            ManifoldSpec::Circle { radius, .. } => {
                x[0] = radius * t.cos();
                x[1] = radius * t.sin();
            }
            ManifoldSpec::Helix { a, b, .. } => {
                x[0] = a * t.cos();
                x[1] = a * t.sin();
                x[2] = b * t;
            }
            ManifoldSpec::Sphere2 { .. } => panic!("sphere is not a curve"),
        }
        x
    }

    /// Unit tangent of a curve at parameter `t`.
    pub fn curve_tangent(&self, t: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.ambient());
        match *self {
            ManifoldSpec::Circle { .. } => {
                v[0] = -t.sin();
                v[1] = t.cos();
            }
            ManifoldSpec::Helix { a, b, .. } => {
                let speed = (a * a + b * b).sqrt();
                v[0] = -a * t.sin() / speed;
                v[1] = a * t.cos() / speed;
                v[2] = b / speed;
            }
            ManifoldSpec::Sphere2 { .. } => panic!("sphere is not a curve"),
        }
        v
    }

    /// Point of the sphere at polar angle `theta`, azimuth `phi`.
    fn sphere_point(radius: f64, ambient: usize, theta: f64, phi: f64) -> DVector<f64> {
        let mut x = DVector::zeros(ambient);
        x[0] = radius * theta.sin() * phi.cos();
        x[1] = radius * theta.sin() * phi.sin();
        x[2] = radius * theta.cos();
        x
    }

    /// Tangent space at a point of the manifold, computed from the
    /// parametrization. For curves `x` is located by its parameter.
    pub fn tangent_space(&self, x: &DVector<f64>) -> Result<Subspace> {
        if x.len() != self.ambient() {
            return Err(Error::DimensionMismatch { expected: self.ambient(), got: x.len() });
        }
        match *self {
            ManifoldSpec::Circle { .. } => {
                let t = x[1].atan2(x[0]);
                Subspace::from_orthonormal(DMatrix::from_column_slice(self.ambient(), 1, self.curve_tangent(t).as_slice()))
            }
            ManifoldSpec::Helix { b, .. } => {
                let t = if b != 0.0 { x[2] / b } else { x[1].atan2(x[0]) };
                Subspace::from_orthonormal(DMatrix::from_column_slice(self.ambient(), 1, self.curve_tangent(t).as_slice()))
            }
            ManifoldSpec::Sphere2 { .. } => {
                // orthogonal complement of the radial direction inside span{e1, e2, e3}
                let mut b = DMatrix::zeros(self.ambient(), 3);
                for i in 0..3 {
                    b[(i, i)] = 1.0;
                }
                let r = x.rows(0, 3).normalize();
                for j in 0..3 {
                    for i in 0..3 {
                        b[(i, j)] -= r[i] * r[j];
                    }
                }
                Subspace::span(&b)
            }
        }
    }

    /// Uniform (by parameter for curves, by area for the sphere) samples.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<PointSet> {
        self.validate()?;
        let cols: Vec<_> = (0..count)
            .map(|_| match *self {
                ManifoldSpec::Sphere2 { radius, ambient } => {
                    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
                    Self::sphere_point(radius, ambient, z.acos(), TAU * rng.random::<f64>())
                }
                _ => self.curve_point(TAU * rng.random::<f64>()),
            })
            .collect();
        PointSet::from_points(&cols)
    }

    /// Whether `x` lies on the manifold.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.ambient() {
            return false;
        }
        let scale = x.norm().max(1.0);
        match *self {
            ManifoldSpec::Circle { radius, .. } => {
                x.iter().skip(2).all(|v| v.abs() <= tol * scale) && (x.rows(0, 2).norm() - radius).abs() <= tol * scale
            }
            ManifoldSpec::Sphere2 { radius, .. } => {
                x.iter().skip(3).all(|v| v.abs() <= tol * scale) && (x.rows(0, 3).norm() - radius).abs() <= tol * scale
            }
            ManifoldSpec::Helix { b, .. } => {
                if x.iter().skip(3).any(|v| v.abs() > tol * scale) {
                    return false;
                }
                let t = if b != 0.0 { x[2] / b } else { x[1].atan2(x[0]).rem_euclid(TAU) };
                (-tol..=TAU + tol).contains(&t) && (self.curve_point(t) - x).norm() <= tol * scale
            }
        }
    }
}

/// Evaluate a curve on a strictly increasing parameter grid.
pub fn manifold_curve(spec: &ManifoldSpec, grid: &[f64]) -> Result<PointSet> {
    spec.validate()?;
    if !spec.is_curve() {
        return Err(invalid("only curves can be evaluated on a parameter grid"));
    }
    if grid.is_empty() {
        return Err(Error::EmptySet("parameter grid"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("parameter grid must be strictly increasing"));
    }
    PointSet::from_points(&grid.iter().map(|&t| spec.curve_point(t)).collect::<Vec<_>>())
}

/// `count + 1` equally spaced parameters spanning `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect()
}

/// Length of the polygonal path through the columns in order.
pub fn polyline_length(points: &DMatrix<f64>) -> f64 {
    (1..points.ncols()).map(|i| (points.column(i) - points.column(i - 1)).norm()).sum()
}

/// A structured signal set.
#[derive(Debug, Clone, PartialEq)]
pub enum StructuredSet {
    Finite(PointSet),
    /// Vectors of `R^n` with at most `s` nonzero entries.
    Sparse { n: usize, s: usize },
    /// Vectors annihilated by at least `l` rows of the analysis operator.
    Cosparse { analysis: DMatrix<f64>, l: usize },
    /// `n1×n2` matrices of rank at most `r`, flattened row-major.
    LowRank { n1: usize, n2: usize, r: usize },
    /// Tensors with multilinear rank at most `ranks`, flattened row-major.
    Tucker { dims: Vec<usize>, ranks: Vec<usize> },
    Uos(UosFamily),
    Manifold(ManifoldSpec),
}

const MAX_COSPARSE_ATTEMPTS: usize = 1000;

impl StructuredSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            StructuredSet::Finite(_) | StructuredSet::Uos(_) => Ok(()),
            StructuredSet::Sparse { n, s } => {
                if *s == 0 || s > n {
                    return Err(invalid(format!("sparse set needs 1 <= s <= n, got s={s}, n={n}")));
                }
                Ok(())
            }
            StructuredSet::Cosparse { analysis, l } => {
                if *l > analysis.nrows() {
                    return Err(invalid(format!("cosparsity {l} exceeds {} analysis rows", analysis.nrows())));
                }
                if analysis.ncols() == 0 {
                    return Err(invalid("analysis operator has no columns"));
                }
                Ok(())
            }
            StructuredSet::LowRank { n1, n2, r } => {
                if *r == 0 || r > n1.min(n2) {
                    return Err(invalid(format!("low-rank set needs 1 <= r <= min(n1, n2), got r={r}")));
                }
                Ok(())
            }
            StructuredSet::Tucker { dims, ranks } => {
                if dims.is_empty() || dims.len() != ranks.len() {
                    return Err(invalid("tucker set needs one rank per mode"));
                }
                if dims.iter().zip(ranks).any(|(n, r)| *r == 0 || r > n) {
                    return Err(invalid(format!("tucker ranks {ranks:?} must satisfy 1 <= r_i <= n_i for {dims:?}")));
                }
                Ok(())
            }
            StructuredSet::Manifold(spec) => spec.validate(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            StructuredSet::Finite(p) => p.dim(),
            StructuredSet::Sparse { n, .. } => *n,
            StructuredSet::Cosparse { analysis, .. } => analysis.ncols(),
            StructuredSet::LowRank { n1, n2, .. } => n1 * n2,
            StructuredSet::Tucker { dims, .. } => dims.iter().product(),
            StructuredSet::Uos(f) => f.ambient(),
            StructuredSet::Manifold(spec) => spec.ambient(),
        }
    }

    /// Draw `count` members. With `normalize`, each draw is scaled to unit
    /// norm; for manifolds this leaves the manifold unless it lies on the
    /// unit sphere already.
    pub fn sample(&self, count: usize, seed: u64, normalize: bool) -> Result<PointSet> {
        self.validate()?;
        if count == 0 {
            return Err(invalid("sample count must be at least one"));
        }
        let mut r = rng::stream(seed);
        let mut cols = match self {
            StructuredSet::Manifold(spec) => spec.sample(count, &mut r)?.into_matrix(),
            _ => {
                let mut m = DMatrix::zeros(self.ambient_dim(), count);
                for j in 0..count {
                    m.set_column(j, &self.draw(&mut r)?);
                }
                m
            }
        };
        if normalize {
            for mut c in cols.column_iter_mut() {
                let norm = c.norm();
                if norm > 0.0 {
                    c /= norm;
                }
            }
        }
        PointSet::from_columns(cols)
    }

    fn draw<R: Rng + ?Sized>(&self, r: &mut R) -> Result<DVector<f64>> {
        Ok(match self {
            StructuredSet::Finite(p) => p.point(r.random_range(0..p.len())).into_owned(),
            StructuredSet::Sparse { n, s } => {
                let mut x = DVector::zeros(*n);
                for i in rand::seq::index::sample(r, *n, *s) {
                    x[i] = r.sample(StandardNormal);
                }
                x
            }
            StructuredSet::Cosparse { analysis, l } => {
                let (p, n) = analysis.shape();
                for _ in 0..MAX_COSPARSE_ATTEMPTS {
                    let rows: Vec<usize> = rand::seq::index::sample(r, p, *l).into_vec();
                    let g = gaussian_vector(n, r);
                    if rows.is_empty() {
                        return Ok(g);
                    }
                    let sub = analysis.select_rows(rows.iter());
                    let row_space = Subspace::span(&sub.transpose())?;
                    let x = &g - row_space.project(&g);
                    if x.norm() > 1e-6 * g.norm() {
                        return Ok(x);
                    }
                }
                return Err(Error::Infeasible(format!("no {l}-subset of the analysis rows has a nontrivial null space")));
            }
            StructuredSet::LowRank { n1, n2, r: rank } => {
                let u = gaussian_matrix(*n1, *rank, r);
                let v = gaussian_matrix(*n2, *rank, r);
                Tensor::from_matrix(&(u * v.transpose())).flatten()
            }
            StructuredSet::Tucker { dims, ranks } => {
                let core_len = ranks.iter().product();
                let core: Vec<f64> = (0..core_len).map(|_| r.sample(StandardNormal)).collect();
                let mut t = Tensor::new(ranks.clone(), core)?;
                for (mode, (&n, &k)) in dims.iter().zip(ranks).enumerate() {
                    t = t.mode_product(mode, &random_orthonormal(n, k, r))?;
                }
                t.flatten()
            }
            StructuredSet::Uos(family) => {
                let sub = match family.domain() {
                    ParameterDomain::Interval { lo, hi } => family.subspace(lo + (hi - lo) * r.random::<f64>())?,
                    ParameterDomain::Indices { count } => family.subspace(r.random_range(0..count) as f64)?,
                };
                sub.basis() * gaussian_vector(sub.dim(), r)
            }
            StructuredSet::Manifold(spec) => spec.sample(1, r)?.point(0).into_owned(),
        })
    }

    /// Exact membership test at the given tolerance (relative to `max(1, ‖x‖)`).
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.ambient_dim() {
            return false;
        }
        let scale = x.norm().max(1.0);
        match self {
            StructuredSet::Finite(p) => p.iter().any(|y| (y - x).norm() <= tol * scale),
            StructuredSet::Sparse { s, .. } => x.iter().filter(|v| v.abs() > tol * scale).count() <= *s,
            StructuredSet::Cosparse { analysis, l } => {
                let mut residuals: Vec<f64> = (analysis * x).iter().map(|v| v * v).collect();
                residuals.sort_by(f64::total_cmp);
                residuals.iter().take(*l).sum::<f64>().sqrt() <= tol * scale
            }
            StructuredSet::LowRank { n1, n2, r } => {
                let m = DMatrix::from_row_slice(*n1, *n2, x.as_slice());
                matrix_rank(&m, tol) <= *r
            }
            StructuredSet::Tucker { dims, ranks } => match Tensor::new(dims.clone(), x.as_slice().to_vec()) {
                Ok(t) => multilinear_rank(&t, tol).iter().zip(ranks).all(|(got, max)| got <= max),
                Err(_) => false,
            },
            StructuredSet::Uos(family) => family.contains(x, tol),
            StructuredSet::Manifold(spec) => spec.contains(x, tol),
        }
    }
}

/// Serializable description of a structured set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SetConfig {
    GaussianCloud { n: usize, points: usize, seed: u64 },
    Sparse { n: usize, s: usize },
    /// Cosparse with respect to the finite-difference operator.
    Cosparse { n: usize, l: usize },
    LowRank { n1: usize, n2: usize, r: usize },
    Tucker { dims: Vec<usize>, ranks: Vec<usize> },
    RotatingPlane { n: usize },
    CoordinateUos { n: usize, s: usize },
    Manifold(ManifoldSpec),
}

impl SetConfig {
    pub fn build(&self) -> Result<StructuredSet> {
        let set = match self {
            SetConfig::GaussianCloud { n, points, seed } => {
                if *n == 0 || *points == 0 {
                    return Err(invalid("gaussian cloud needs positive dimension and size"));
                }
                StructuredSet::Finite(gaussian_cloud(*n, *points, &mut rng::stream(*seed)))
            }
            SetConfig::Sparse { n, s } => StructuredSet::Sparse { n: *n, s: *s },
            SetConfig::Cosparse { n, l } => StructuredSet::Cosparse { analysis: finite_difference_operator(*n)?, l: *l },
            SetConfig::LowRank { n1, n2, r } => StructuredSet::LowRank { n1: *n1, n2: *n2, r: *r },
            SetConfig::Tucker { dims, ranks } => StructuredSet::Tucker { dims: dims.clone(), ranks: ranks.clone() },
            SetConfig::RotatingPlane { n } => StructuredSet::Uos(UosFamily::rotating_plane(*n)?),
            SetConfig::CoordinateUos { n, s } => StructuredSet::Uos(UosFamily::coordinate(*n, *s)?),
            SetConfig::Manifold(spec) => StructuredSet::Manifold(*spec),
        };
        set.validate()?;
        Ok(set)
    }
}
