//! Point sets in `R^n` and the chord transformations used to express
//! restricted isometry, multiplicative and additive precision as one
//! supremum.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};

/// Pairs closer than this are treated as the same point.
pub const DEGENERATE_CHORD: f64 = 1e-12;

/// A nonempty finite set of points of equal dimension, stored as the columns
/// of an `n × |P|` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: DMatrix<f64>,
}

impl PointSet {
    /// Wraps a column matrix. Rejects empty sets and non-finite entries.
    pub fn from_columns(data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::EmptySet("point set needs at least one point"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data })
    }

    pub fn from_points(points: &[DVector<f64>]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySet("point set needs at least one point"))?;
        let n = first.len();
        for p in points {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
        }
        Self::from_columns(DMatrix::from_columns(points))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let points: Vec<DVector<f64>> = rows.iter().map(|r| DVector::from_column_slice(r)).collect();
        Self::from_points(&points)
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn point(&self, i: usize) -> DVectorView<'_, f64> {
        self.data.column(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = DVectorView<'_, f64>> + '_ {
        self.data.column_iter()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Euclidean diameter, by enumerating pairs.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                best = best.max((self.point(i) - self.point(j)).norm());
            }
        }
        best
    }

    /// Largest Euclidean norm.
    pub fn radius(&self) -> f64 {
        self.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

/// The set `{x − y : x, y ∈ P, x ≠ y}` over ordered pairs.
pub fn chords(p: &PointSet) -> Result<PointSet> {
    if p.len() < 2 {
        return Err(Error::EmptySet("chords need at least two points"));
    }
    let mut out = Vec::with_capacity(p.len() * (p.len() - 1));
    for i in 0..p.len() {
        for j in 0..p.len() {
            if i == j {
                continue;
            }
            let c = p.point(i) - p.point(j);
            if c.norm() > DEGENERATE_CHORD {
                out.push(c);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySet("all points coincide"));
    }
    PointSet::from_points(&out)
}

/// Normalized chords `(x − y)/‖x − y‖`; coincident pairs are skipped.
pub fn normalized_chords(p: &PointSet) -> Result<PointSet> {
    let c = chords(p)?;
    normalized_vectors(&c)
}

/// Normalized vectors `x/‖x‖`; zero vectors are skipped.
pub fn normalized_vectors(p: &PointSet) -> Result<PointSet> {
    let out: Vec<DVector<f64>> = p
        .iter()
        .filter_map(|x| {
            let nrm = x.norm();
            (nrm > DEGENERATE_CHORD).then(|| x / nrm)
        })
        .collect();
    if out.is_empty() {
        return Err(Error::EmptySet("no nonzero vectors"));
    }
    PointSet::from_points(&out)
}

/// Normalized chord map `Ch(x, y) = (y − x)/‖y − x‖`. `None` for coincident points.
pub fn chord_direction(x: DVectorView<'_, f64>, y: DVectorView<'_, f64>) -> Option<DVector<f64>> {
    let d = y - x;
    let nrm = d.norm();
    (nrm >= DEGENERATE_CHORD).then(|| d / nrm)
}

/// A symmetric distance obeying the triangle inequality.
pub trait SemiMetric {
    fn distance(&self, a: DVectorView<'_, f64>, b: DVectorView<'_, f64>) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl SemiMetric for Euclidean {
    fn distance(&self, a: DVectorView<'_, f64>, b: DVectorView<'_, f64>) -> f64 {
        (a - b).norm()
    }
}

impl<F> SemiMetric for F
where
    F: Fn(DVectorView<'_, f64>, DVectorView<'_, f64>) -> f64,
{
    fn distance(&self, a: DVectorView<'_, f64>, b: DVectorView<'_, f64>) -> f64 {
        self(a, b)
    }
}

/// Dense row-major tensor; matrices are the order-2 case.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let size: usize = shape.iter().product();
        if shape.is_empty() || size == 0 {
            return Err(Error::EmptySet("tensor with no entries"));
        }
        if size != data.len() {
            return Err(Error::DimensionMismatch { expected: size, got: data.len() });
        }
        Ok(Self { shape, data })
    }

    /// Row-major flattening of a matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        Self { shape: vec![m.nrows(), m.ncols()], data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn flatten(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Mode-`k` unfolding: an `n_k × (∏_{i≠k} n_i)` matrix.
    pub fn unfold(&self, mode: usize) -> DMatrix<f64> {
        let nk = self.shape[mode];
        let inner: usize = self.shape[mode + 1..].iter().product();
        let outer: usize = self.shape[..mode].iter().product();
        let mut out = DMatrix::zeros(nk, outer * inner);
        for o in 0..outer {
            for k in 0..nk {
                for i in 0..inner {
                    out[(k, o * inner + i)] = self.data[(o * nk + k) * inner + i];
                }
            }
        }
        out
    }

    /// Mode-`k` product with `mat` of shape `new × n_k`.
    pub fn mode_product(&self, mode: usize, mat: &DMatrix<f64>) -> Result<Tensor> {
        let nk = self.shape[mode];
        if mat.ncols() != nk {
            return Err(Error::DimensionMismatch { expected: nk, got: mat.ncols() });
        }
        let new = mat.nrows();
        let inner: usize = self.shape[mode + 1..].iter().product();
        let outer: usize = self.shape[..mode].iter().product();
        let mut data = vec![0.0; outer * new * inner];
        for o in 0..outer {
            for a in 0..new {
                for k in 0..nk {
                    let w = mat[(a, k)];
                    if w == 0.0 {
                        continue;
                    }
                    let src = (o * nk + k) * inner;
                    let dst = (o * new + a) * inner;
                    for i in 0..inner {
                        data[dst + i] += w * self.data[src + i];
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[mode] = new;
        Tensor::new(shape, data)
    }
}
