//! Subspaces, projectors, principal angles and the Finsler distance
//! `‖P_U − P_V‖` between subspaces.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::complexity::CoveringProfile;
use crate::error::{invalid, Error, Result};

/// Relative singular-value cutoff used when orthonormalizing spanning sets.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A subspace of `R^n` held by an orthonormal basis (`n × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Accepts a basis whose columns are already orthonormal (to `1e-10`).
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() == 0 {
            return Err(invalid("subspace needs a positive ambient dimension"));
        }
        let k = basis.ncols();
        let gram = basis.tr_mul(&basis);
        let err = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if err > 1e-10 {
            return Err(invalid(format!("basis is not orthonormal (max Gram deviation {err:.3e})")));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis for the column span of `vectors`. Directions with
    /// singular value at most `1e-10·σ_max` are dropped.
    pub fn span(vectors: &DMatrix<f64>) -> Result<Self> {
        let n = vectors.nrows();
        if n == 0 {
            return Err(invalid("subspace needs a positive ambient dimension"));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if vectors.ncols() == 0 {
            return Ok(Self { basis: DMatrix::zeros(n, 0) });
        }
        let svd = SVD::new(vectors.clone(), true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
        if smax == 0.0 {
            return Ok(Self { basis: DMatrix::zeros(n, 0) });
        }
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_TOLERANCE * smax)
            .collect();
        let cols: Vec<DVector<f64>> = keep.iter().map(|&i| u.column(i).into_owned()).collect();
        let basis = if cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&cols) };
        Ok(Self { basis })
    }

    /// Coordinate subspace spanned by `e_i, i ∈ support`.
    pub fn coordinate(n: usize, support: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(n, support.len());
        for (c, &i) in support.iter().enumerate() {
            if i >= n {
                return Err(invalid(format!("coordinate {i} out of range for n = {n}")));
            }
            basis[(i, c)] = 1.0;
        }
        Self::from_orthonormal(basis)
    }

    pub fn full(n: usize) -> Self {
        Self { basis: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `P = BBᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `P x` computed as `B(Bᵀx)`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * self.basis.tr_mul(x)
    }

    /// `‖Bᵀx‖ = ‖Px‖`.
    pub fn projected_norm(&self, x: &DVector<f64>) -> f64 {
        self.basis.tr_mul(x).norm()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.ambient() && (x - self.project(x)).norm() <= tol * x.norm().max(1.0)
    }
}

fn same_ambient(u: &Subspace, v: &Subspace) -> Result<()> {
    if u.ambient() != v.ambient() {
        return Err(Error::DimensionMismatch { expected: u.ambient(), got: v.ambient() });
    }
    Ok(())
}

fn sorted_singular_values(m: DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(m, false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Principal angles, largest first; `min(dim U, dim V)` of them.
///
/// Cosines come from the singular values of `B_Uᵀ B_V` (clipped to
/// `[0, 1]`) and sines from those of `(I − P_V) B_U`; each angle is
/// `atan2(sin, cos)` so small angles are not lost to `arccos` rounding.
pub fn principal_angles(u: &Subspace, v: &Subspace) -> Result<Vec<f64>> {
    same_ambient(u, v)?;
    if u.dim() == 0 || v.dim() == 0 {
        return Err(invalid("principal angles need subspaces of dimension >= 1"));
    }
    let (small, large) = if u.dim() <= v.dim() { (u, v) } else { (v, u) };
    let k = small.dim();
    let cross = small.basis.tr_mul(&large.basis);
    let cosines: Vec<f64> = sorted_singular_values(cross.clone())
        .into_iter()
        .take(k)
        .map(|c| c.clamp(0.0, 1.0))
        .collect();
    let residual = &small.basis - &large.basis * cross.transpose();
    let mut sines: Vec<f64> = sorted_singular_values(residual).into_iter().take(k).map(|s| s.clamp(0.0, 1.0)).collect();
    sines.reverse();
    // cosines descend and sines ascend: both index the angles smallest first.
    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(sines.iter())
        .map(|(c, s)| s.atan2(*c).clamp(0.0, FRAC_PI_2))
        .collect();
    angles.reverse();
    Ok(angles)
}

/// Operator norm of `P_U − P_V`; in `[0, 1]`.
pub fn finsler_distance(u: &Subspace, v: &Subspace) -> Result<f64> {
    same_ambient(u, v)?;
    let diff = u.projector() - v.projector();
    let eig = SymmetricEigen::new(diff);
    Ok(eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs())).min(1.0))
}

/// Orthonormal basis of `span(U ∪ V)`.
pub fn joint_subspace(u: &Subspace, v: &Subspace) -> Result<Subspace> {
    same_ambient(u, v)?;
    let mut stacked = DMatrix::zeros(u.ambient(), u.dim() + v.dim());
    stacked.columns_mut(0, u.dim()).copy_from(&u.basis);
    stacked.columns_mut(u.dim(), v.dim()).copy_from(&v.basis);
    Subspace::span(&stacked)
}

/// Index set of a union-of-subspaces family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParameterDomain {
    Interval { lo: f64, hi: f64 },
    /// Parameters `0, 1, …, count − 1`.
    Indices { count: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum FamilyKind {
    /// `θ ↦ span{cos θ·e1 + sin θ·e2, e3}`, `θ ∈ [0, π/2]`.
    RotatingPlane { n: usize },
    Listed(Vec<Subspace>),
}

/// A parametrized family `θ ↦ S_θ` whose union is the signal model.
#[derive(Debug, Clone, PartialEq)]
pub struct UosFamily {
    kind: FamilyKind,
    max_dim: usize,
    covering: Option<CoveringProfile>,
}

impl UosFamily {
    pub fn rotating_plane(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid(format!("rotating plane family needs n >= 3, got {n}")));
        }
        // d_Fin(θ, θ') = sin|θ − θ'|; a Finsler ball of radius u covers an
        // angular window of width 2·arcsin(u) ≥ 2u, so N(u) ≤ π/(4u) + 1.
        let covering = CoveringProfile::Power { dim: 1.0, c: 1.0 + std::f64::consts::FRAC_PI_4, base: 1.0 };
        Ok(Self { kind: FamilyKind::RotatingPlane { n }, max_dim: 2, covering: Some(covering) })
    }

    pub fn listed(subspaces: Vec<Subspace>) -> Result<Self> {
        let first = subspaces.first().ok_or(Error::EmptySet("family needs at least one subspace"))?;
        let n = first.ambient();
        if let Some(bad) = subspaces.iter().find(|s| s.ambient() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.ambient() });
        }
        let max_dim = subspaces.iter().map(Subspace::dim).max().unwrap_or(0);
        Ok(Self { kind: FamilyKind::Listed(subspaces), max_dim, covering: None })
    }

    /// Every coordinate subspace with support size `s`.
    pub fn coordinate(n: usize, s: usize) -> Result<Self> {
        let supports = crate::sets::enumerate_supports(n, s)?;
        Self::listed(supports.iter().map(|sup| Subspace::coordinate(n, sup)).collect::<Result<_>>()?)
    }

    pub fn with_covering(mut self, profile: CoveringProfile) -> Self {
        self.covering = Some(profile);
        self
    }

    pub fn ambient(&self) -> usize {
        match &self.kind {
            FamilyKind::RotatingPlane { n } => *n,
            FamilyKind::Listed(list) => list[0].ambient(),
        }
    }

    /// `K = sup_θ dim S_θ`.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn covering_profile(&self) -> Option<&CoveringProfile> {
        self.covering.as_ref()
    }

    pub fn domain(&self) -> ParameterDomain {
        match &self.kind {
            FamilyKind::RotatingPlane { .. } => ParameterDomain::Interval { lo: 0.0, hi: FRAC_PI_2 },
            FamilyKind::Listed(list) => ParameterDomain::Indices { count: list.len() },
        }
    }

    /// `S_θ`. For listed families `θ` is rounded to an index.
    pub fn subspace(&self, theta: f64) -> Result<Subspace> {
        match &self.kind {
            FamilyKind::RotatingPlane { n } => {
                if !(0.0..=FRAC_PI_2).contains(&theta) {
                    return Err(invalid(format!("θ = {theta} outside [0, π/2]")));
                }
                let mut b = DMatrix::zeros(*n, 2);
                b[(0, 0)] = theta.cos();
                b[(1, 0)] = theta.sin();
                b[(2, 1)] = 1.0;
                Subspace::from_orthonormal(b)
            }
            FamilyKind::Listed(list) => {
                let idx = theta.round();
                if idx < 0.0 || idx as usize >= list.len() {
                    return Err(invalid(format!("index {theta} outside family of size {}", list.len())));
                }
                Ok(list[idx as usize].clone())
            }
        }
    }

    /// A finite sub-family: the listed members, or `count` evenly spaced
    /// parameters of an interval family.
    pub fn discretize(&self, count: usize) -> Result<Vec<Subspace>> {
        match (&self.kind, self.domain()) {
            (FamilyKind::Listed(list), _) => Ok(list.clone()),
            (_, ParameterDomain::Interval { lo, hi }) => {
                if count == 0 {
                    return Err(invalid("discretization needs at least one parameter"));
                }
                let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
                (0..count).map(|i| self.subspace((lo + step * i as f64).min(hi))).collect()
            }
            _ => unreachable!("listed families always have index domains"),
        }
    }

    /// Whether `x` lies in some member of the family.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match &self.kind {
            FamilyKind::RotatingPlane { n } => {
                if x.len() != *n {
                    return false;
                }
                let scale = x.norm().max(1.0);
                x.iter().skip(3).all(|v| v.abs() <= tol * scale) && x[0] * x[1] >= -tol * scale * scale
            }
            FamilyKind::Listed(list) => list.iter().any(|s| s.contains(x, tol)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn line(n: usize, v: &[f64]) -> Subspace {
        let mut x = DVector::zeros(n);
        for (i, a) in v.iter().enumerate() {
            x[i] = *a;
        }
        Subspace::span(&DMatrix::from_columns(&[x])).unwrap()
    }

    fn random_subspace(n: usize, k: usize, r: &mut impl Rng) -> Subspace {
        let g = DMatrix::from_fn(n, k, |_, _| r.sample::<f64, _>(StandardNormal));
        Subspace::span(&g).unwrap()
    }

    #[test]
    fn projector_examples() {
        let p = line(2, &[1.0, 0.0]).projector();
        assert!((p - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).amax() < 1e-15);
        assert!((Subspace::full(4).projector() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
        let mut r = rng::stream(2);
        let p = random_subspace(8, 3, &mut r).projector();
        assert!((&p * &p - &p).norm() <= 1e-10);
        assert!((&p - p.transpose()).norm() <= 1e-10);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(Subspace::from_orthonormal(b).is_err());
    }

    #[test]
    fn principal_angle_examples() {
        let mut r = rng::stream(4);
        let u = random_subspace(6, 3, &mut r);
        assert!(principal_angles(&u, &u).unwrap().iter().all(|a| a.abs() < 1e-12));
        let a = principal_angles(&line(2, &[1.0, 0.0]), &line(2, &[0.0, 1.0])).unwrap();
        assert!((a[0] - FRAC_PI_2).abs() < 1e-15);
        let a = principal_angles(&line(2, &[1.0, 0.0]), &line(2, &[1.0, 1.0])).unwrap();
        assert!((a[0] - FRAC_PI_4).abs() < 1e-12);
        assert!(principal_angles(&u, &Subspace::span(&DMatrix::zeros(6, 1)).unwrap()).is_err());
    }

    #[test]
    fn principal_angles_are_nonincreasing() {
        let mut r = rng::stream(5);
        let a = principal_angles(&random_subspace(9, 4, &mut r), &random_subspace(9, 3, &mut r)).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn finsler_examples() {
        let e1 = line(2, &[1.0, 0.0]);
        assert_eq!(finsler_distance(&e1, &e1).unwrap(), 0.0);
        assert!((finsler_distance(&e1, &line(2, &[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        let d = finsler_distance(&e1, &line(2, &[1.0, 1.0])).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(finsler_distance(&e1, &line(3, &[1.0])).is_err());
    }

    #[test]
    fn finsler_matches_sine_of_largest_angle() {
        let mut r = rng::stream(6);
        for _ in 0..300 {
            let n = r.random_range(1..=20);
            let k = r.random_range(1..=n.min(6));
            let u = random_subspace(n, k, &mut r);
            let v = random_subspace(n, k, &mut r);
            let d = finsler_distance(&u, &v).unwrap();
            let theta = principal_angles(&u, &v).unwrap()[0];
            assert!((d - theta.sin()).abs() <= 1e-10, "n={n} k={k}: {d} vs {}", theta.sin());
        }
    }

    #[test]
    fn finsler_is_a_metric_on_samples() {
        let mut r = rng::stream(7);
        let fam: Vec<Subspace> = (0..30)
            .map(|_| {
                let k = r.random_range(1..=3);
                random_subspace(6, k, &mut r)
            })
            .collect();
        for _ in 0..2000 {
            let (a, b, c) = (&fam[r.random_range(0..30)], &fam[r.random_range(0..30)], &fam[r.random_range(0..30)]);
            let ab = finsler_distance(a, b).unwrap();
            assert_eq!(ab, finsler_distance(a, b).unwrap());
            assert!((ab - finsler_distance(b, a).unwrap()).abs() < 1e-14);
            assert!((0.0..=1.0).contains(&ab));
            assert!(ab <= finsler_distance(a, c).unwrap() + finsler_distance(c, b).unwrap() + 1e-12);
        }
    }

    #[test]
    fn joint_subspace_examples() {
        let e1 = line(3, &[1.0, 0.0, 0.0]);
        assert_eq!(joint_subspace(&e1, &e1).unwrap().dim(), 1);
        assert_eq!(joint_subspace(&e1, &line(3, &[0.0, 1.0, 0.0])).unwrap().dim(), 2);
        let mut r = rng::stream(8);
        let u = random_subspace(10, 3, &mut r);
        let v = random_subspace(10, 3, &mut r);
        let j = joint_subspace(&u, &v).unwrap();
        assert_eq!(j.dim(), 6);
        let comp = DMatrix::<f64>::identity(10, 10) - j.projector();
        assert!((&comp * u.basis()).norm() <= 1e-10);
        assert!((&comp * v.basis()).norm() <= 1e-10);
    }

    #[test]
    fn rotating_plane_distances() {
        let fam = UosFamily::rotating_plane(5).unwrap();
        assert_eq!(fam.max_dim(), 2);
        let s0 = fam.subspace(0.0).unwrap();
        let d = finsler_distance(&s0, &fam.subspace(FRAC_PI_2).unwrap()).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(finsler_distance(&s0, &s0).unwrap() < 1e-15);
        let d = finsler_distance(&s0, &fam.subspace(FRAC_PI_6).unwrap()).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        for (a, b) in [(0.1, 0.9), (0.3, 1.5), (1.2, 0.2)] {
            let d = finsler_distance(&fam.subspace(a).unwrap(), &fam.subspace(b).unwrap()).unwrap();
            assert!((d - f64::sin((a - b).abs())).abs() < 1e-12);
        }
        assert!(UosFamily::rotating_plane(2).is_err());
        assert!(fam.subspace(2.0).is_err());
    }

    #[test]
    fn family_membership() {
        let fam = UosFamily::rotating_plane(4).unwrap();
        let s = fam.subspace(0.4).unwrap();
        let x = s.project(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        assert!(fam.contains(&x, 1e-10));
        assert!(!fam.contains(&DVector::from_vec(vec![1.0, -1.0, 0.0, 0.0]), 1e-10));
        let coords = UosFamily::coordinate(4, 2).unwrap();
        assert_eq!(coords.discretize(0).unwrap().len(), 6);
        assert!(coords.contains(&DVector::from_vec(vec![0.0, 1.0, 0.0, 2.0]), 1e-12));
        assert!(!coords.contains(&DVector::from_vec(vec![1.0, 1.0, 0.0, 2.0]), 1e-12));
    }
}
