//! Orthonormal subspaces of coordinate space, real or complex, with all rank
//! decisions routed through one singular-value rule.

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::C64;

/// Scalar fields a [`Subspace`] can live over.
pub trait Field: ComplexField<RealField = f64> + Copy {}
impl Field for f64 {}
impl Field for C64 {}

/// Singular values count toward rank iff `σ > eps · scale`, where the scale is
/// the largest singular value of the operator being tested.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankRule {
    pub eps: f64,
}

impl Default for RankRule {
    fn default() -> Self {
        Self { eps: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Some singular value sits within a factor 10 of the threshold.
    pub ambiguous: bool,
}

impl RankRule {
    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 && eps < 1.0 {
            Ok(Self { eps })
        } else {
            Err(Error::InvalidArgument(format!("rank tolerance {eps} must lie in (0, 1)")))
        }
    }

    pub fn classify(&self, singular: &[f64], scale: f64) -> RankInfo {
        let threshold = self.eps * scale;
        let rank = singular.iter().filter(|&&s| s > threshold).count();
        let ambiguous = threshold > 0.0
            && singular
                .iter()
                .any(|&s| s > threshold / 10.0 && s < threshold * 10.0);
        RankInfo { rank, ambiguous }
    }
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(0.0, f64::max)
}

/// Numerical rank of a matrix relative to its own largest singular value.
pub fn rank<T: Field>(a: &DMatrix<T>, rule: RankRule) -> RankInfo {
    if a.is_empty() {
        return RankInfo { rank: 0, ambiguous: false };
    }
    let singular: Vec<f64> = a.clone().singular_values().iter().cloned().collect();
    rule.classify(&singular, max_of(&singular))
}

/// Largest singular value.
pub fn spectral_norm<T: Field>(a: &DMatrix<T>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    max_of(a.clone().singular_values().as_slice())
}

/// Orthonormal kernel basis of `a` (columns), thresholded against `scale`
/// (defaults to the largest singular value of `a`).
pub fn kernel_basis<T: Field>(
    a: &DMatrix<T>,
    rule: RankRule,
    scale: Option<f64>,
) -> (DMatrix<T>, RankInfo) {
    let cols = a.ncols();
    if cols == 0 {
        return (DMatrix::zeros(0, 0), RankInfo { rank: 0, ambiguous: false });
    }
    // a thin SVD of a wide matrix would drop kernel directions, so pad rows
    let padded = if a.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.rows_mut(0, a.nrows()).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let singular: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let info = rule.classify(&singular, scale.unwrap_or_else(|| max_of(&singular)));
    let threshold = rule.eps * scale.unwrap_or_else(|| max_of(&singular));
    let v_t = svd.v_t.expect("right singular vectors requested");
    let null: Vec<DVector<T>> = singular
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= threshold)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect();
    let basis = if null.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&null)
    };
    (basis, info)
}

/// Orthonormal basis of the column space of `a`.
fn image_basis<T: Field>(a: &DMatrix<T>, rule: RankRule, scale: Option<f64>) -> (DMatrix<T>, RankInfo) {
    if a.ncols() == 0 || a.nrows() == 0 {
        return (DMatrix::zeros(a.nrows(), 0), RankInfo { rank: 0, ambiguous: false });
    }
    let svd = a.clone().svd(true, false);
    let singular: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let scale = scale.unwrap_or_else(|| max_of(&singular));
    let info = rule.classify(&singular, scale);
    let u = svd.u.expect("left singular vectors requested");
    let cols: Vec<DVector<T>> = singular
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rule.eps * scale)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    let basis = if cols.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    (basis, info)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T: Field> {
    basis: DMatrix<T>,
    degraded: bool,
}

pub type RealSubspace = Subspace<f64>;
pub type ComplexSubspace = Subspace<C64>;

impl<T: Field> Subspace<T> {
    /// Trusts that the columns are orthonormal.
    pub fn from_orthonormal(basis: DMatrix<T>) -> Self {
        Self { basis, degraded: false }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self::from_orthonormal(DMatrix::zeros(ambient_dim, 0))
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self::from_orthonormal(DMatrix::identity(ambient_dim, ambient_dim))
    }

    /// Span of selected coordinate axes.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Self {
        let mut basis = DMatrix::zeros(ambient_dim, axes.len());
        for (col, &axis) in axes.iter().enumerate() {
            basis[(axis, col)] = T::one();
        }
        Self::from_orthonormal(basis)
    }

    /// Span of the columns of `vectors`.
    pub fn span(vectors: &DMatrix<T>, rule: RankRule) -> Self {
        let (basis, info) = image_basis(vectors, rule, None);
        Self { basis, degraded: info.ambiguous }
    }

    /// Kernel of a linear map on the ambient coordinate space.
    pub fn kernel(map: &DMatrix<T>, rule: RankRule) -> Self {
        let (basis, info) = kernel_basis(map, rule, None);
        Self { basis, degraded: info.ambiguous }
    }

    /// `{v ∈ self : map v = 0}`, thresholded against the norm of the whole
    /// map so that a map vanishing on `self` is recognised as such.
    pub fn kernel_within(&self, map: &DMatrix<T>, rule: RankRule) -> Self {
        self.kernel_within_scaled(map, rule, spectral_norm(map))
    }

    pub fn kernel_within_scaled(&self, map: &DMatrix<T>, rule: RankRule, scale: f64) -> Self {
        if self.dim() == 0 {
            return self.clone();
        }
        let restricted = map * &self.basis;
        let (coeffs, info) = kernel_basis(&restricted, rule, Some(scale));
        Self {
            basis: &self.basis * coeffs,
            degraded: self.degraded || info.ambiguous,
        }
    }

    /// Image of `self` under a linear map.
    pub fn image_under(&self, map: &DMatrix<T>, rule: RankRule) -> Self {
        let (basis, info) = image_basis(&(map * &self.basis), rule, Some(spectral_norm(map)));
        Self {
            basis,
            degraded: self.degraded || info.ambiguous,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    pub fn vector(&self, i: usize) -> DVector<T> {
        self.basis.column(i).into_owned()
    }

    /// Orthogonal projection of a coordinate vector.
    pub fn project(&self, v: &DVector<T>) -> DVector<T> {
        &self.basis * (self.basis.adjoint() * v)
    }

    /// Coordinates of `v` relative to this basis (after projecting).
    pub fn coefficients(&self, v: &DVector<T>) -> DVector<T> {
        self.basis.adjoint() * v
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &DVector<T>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.adjoint()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.basis.adjoint() * &self.basis;
        (gram - DMatrix::<T>::identity(self.dim(), self.dim())).map(|z| z.modulus()).max()
    }

    pub fn intersection(&self, other: &Self, rule: RankRule) -> Self {
        if self.dim() == 0 || other.dim() == 0 {
            return Self::zero(self.ambient_dim());
        }
        let outside = &self.basis - other.projector() * &self.basis;
        let (coeffs, info) = kernel_basis(&outside, rule, Some(1.0));
        Self {
            basis: &self.basis * coeffs,
            degraded: self.degraded || other.degraded || info.ambiguous,
        }
    }

    /// Orthogonal complement of `self` inside `parent`.
    pub fn complement_within(&self, parent: &Self, rule: RankRule) -> Self {
        if self.dim() == 0 {
            return parent.clone();
        }
        let overlap = self.basis.adjoint() * &parent.basis;
        let (coeffs, info) = kernel_basis(&overlap, rule, Some(1.0));
        Self {
            basis: &parent.basis * coeffs,
            degraded: self.degraded || parent.degraded || info.ambiguous,
        }
    }

    pub fn complement(&self, rule: RankRule) -> Self {
        self.complement_within(&Self::full(self.ambient_dim()), rule)
    }

    pub fn sum(&self, other: &Self, rule: RankRule) -> Self {
        let mut joined = DMatrix::zeros(self.ambient_dim(), self.dim() + other.dim());
        joined.columns_mut(0, self.dim()).copy_from(&self.basis);
        joined.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        let mut out = Self::span(&joined, rule);
        out.degraded |= self.degraded || other.degraded;
        out
    }

    /// Largest distance from a unit vector of `other` to `self`.
    pub fn containment_residual(&self, other: &Self) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        let outside = &other.basis - self.projector() * &other.basis;
        spectral_norm(&outside)
    }

    pub fn contains(&self, other: &Self, tol: f64) -> bool {
        self.containment_residual(other) < tol
    }

    /// Same subspace up to `tol`.
    pub fn same_as(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && self.contains(other, tol)
    }
}

impl RealSubspace {
    pub fn complexify(&self) -> ComplexSubspace {
        Subspace {
            basis: self.basis.map(|v| C64::new(v, 0.0)),
            degraded: self.degraded,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, rows * cols)
            .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
    }

    #[test]
    fn rank_rule_flags_near_threshold() {
        let rule = RankRule::default();
        let info = rule.classify(&[1.0, 2e-9, 1e-16], 1.0);
        assert_eq!(info.rank, 2);
        assert!(info.ambiguous);
        let clean = rule.classify(&[1.0, 0.5, 1e-16], 1.0);
        assert_eq!(clean, RankInfo { rank: 2, ambiguous: false });
        assert!(RankRule::new(0.0).is_err());
    }

    #[test]
    fn kernel_of_wide_matrix_is_complete() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = Subspace::kernel(&a, RankRule::default());
        assert_eq!(k.dim(), 2);
        assert!((&a * k.basis()).amax() < 1e-14);
    }

    #[test]
    fn zero_map_has_full_kernel() {
        let k = Subspace::<f64>::kernel(&DMatrix::zeros(4, 4), RankRule::default());
        assert_eq!(k.dim(), 4);
    }

    #[test]
    fn kernel_within_uses_whole_map_scale() {
        // map vanishes on the first axis up to rounding noise
        let mut map = DMatrix::<f64>::zeros(2, 2);
        map[(0, 0)] = 1e-17;
        map[(1, 1)] = 1.0;
        let axis = Subspace::coordinate(2, &[0]);
        assert_eq!(axis.kernel_within(&map, RankRule::default()).dim(), 1);
    }

    #[test]
    fn complex_kernel() {
        let i = C64::i();
        let one = C64::new(1.0, 0.0);
        let a = DMatrix::from_row_slice(2, 2, &[one, i, i, -one]);
        let k = Subspace::kernel(&a, RankRule::default());
        assert_eq!(k.dim(), 1);
        assert!(crate::lie::max_abs(&(&a * k.basis())) < 1e-14);
    }

    proptest! {
        #[test]
        fn span_operations(a in matrix(6, 3), b in matrix(6, 2)) {
            let rule = RankRule::default();
            let s = Subspace::span(&a, rule);
            let t = Subspace::span(&b, rule);
            prop_assert!(s.orthonormality_error() < 1e-10);

            let same = s.intersection(&s, rule);
            prop_assert_eq!(same.dim(), s.dim());

            let comp = s.complement(rule);
            prop_assert_eq!(comp.dim() + s.dim(), 6);
            prop_assert!(comp.orthonormality_error() < 1e-10);
            prop_assert!((s.basis().transpose() * comp.basis()).amax() < 1e-10);

            let both = s.sum(&t, rule);
            let meet = s.intersection(&t, rule);
            prop_assert_eq!(both.dim() + meet.dim(), s.dim() + t.dim());
            prop_assert!(both.contains(&s, 1e-10));
        }

        #[test]
        fn projection_is_idempotent_and_orthogonal(a in matrix(5, 2), v in matrix(5, 1)) {
            let s = Subspace::span(&a, RankRule::default());
            let v = v.column(0).into_owned();
            let p = s.project(&v);
            prop_assert!((s.project(&p) - &p).amax() < 1e-12);
            prop_assert!((s.basis().transpose() * (&v - &p)).amax() < 1e-12);
        }

        #[test]
        fn kernel_annihilates(a in matrix(3, 5)) {
            let k = Subspace::kernel(&a, RankRule::default());
            prop_assert_eq!(k.dim() + rank(&a, RankRule::default()).rank, 5);
            prop_assert!((&a * k.basis()).amax() < 1e-10);
            prop_assert!(k.orthonormality_error() < 1e-10);
        }
    }
}
