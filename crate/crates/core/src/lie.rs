//! Matrix model of u(n): skew-Hermitian matrices, the negative trace form,
//! complex conjugation, and the coordinate system everything else uses.
//!
//! Coordinates are taken in the orthonormal real basis
//! `(E_jk - E_kj)/√2`, `i(E_jk + E_kj)/√2` for j < k and `i E_jj`, so the
//! pairing becomes the Euclidean dot product of coordinate vectors.  The same
//! basis, read over ℂ, is a basis of gl(n, ℂ).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::subspace::{ComplexSubspace, RankRule, RealSubspace};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

const SKEW_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// (E_jk − E_kj)/√2, fixed by complex conjugation.
    Real(usize, usize),
    /// i(E_jk + E_kj)/√2, negated by complex conjugation.
    Imag(usize, usize),
    /// i E_jj.
    Diag(usize),
}

impl Slot {
    pub fn is_real(self) -> bool {
        matches!(self, Slot::Real(..))
    }

    pub fn indices(self) -> (usize, usize) {
        match self {
            Slot::Real(j, k) | Slot::Imag(j, k) => (j, k),
            Slot::Diag(j) => (j, j),
        }
    }
}

/// Basis layout for u(n), in coordinate order.
pub fn slots(n: usize) -> Vec<Slot> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        out.push(Slot::Diag(j));
        for k in j + 1..n {
            out.push(Slot::Real(j, k));
            out.push(Slot::Imag(j, k));
        }
    }
    out
}

/// Coordinate position of a slot; inverse of [`slots`].
pub fn slot_index(n: usize, slot: Slot) -> usize {
    // row j starts after rows 0..j, row r occupying 1 + 2(n-1-r) entries
    let row_start = |j: usize| j * (2 * n - j);
    match slot {
        Slot::Diag(j) => row_start(j),
        Slot::Real(j, k) => row_start(j) + 1 + 2 * (k - j - 1),
        Slot::Imag(j, k) => row_start(j) + 2 + 2 * (k - j - 1),
    }
}

pub fn basis_matrix(n: usize, slot: Slot) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match slot {
        Slot::Real(j, k) => {
            m[(j, k)] = C64::new(h, 0.0);
            m[(k, j)] = C64::new(-h, 0.0);
        }
        Slot::Imag(j, k) => {
            m[(j, k)] = C64::new(0.0, h);
            m[(k, j)] = C64::new(0.0, h);
        }
        Slot::Diag(j) => m[(j, j)] = C64::new(0.0, 1.0),
    }
    m
}

/// Complex coordinates `z_i = −Tr(B_i M)` of an arbitrary complex matrix.
/// Real whenever `m` is skew-Hermitian.
pub fn complex_coords(m: &CMatrix) -> DVector<C64> {
    let n = m.nrows();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::i();
    DVector::from_iterator(
        n * n,
        slots(n).into_iter().map(|slot| match slot {
            Slot::Real(j, k) => (m[(j, k)] - m[(k, j)]) * h,
            Slot::Imag(j, k) => -i * (m[(j, k)] + m[(k, j)]) * h,
            Slot::Diag(j) => -i * m[(j, j)],
        }),
    )
}

/// Real coordinates of the skew-Hermitian part of `m`.
pub fn real_coords(m: &CMatrix) -> DVector<f64> {
    complex_coords(m).map(|z| z.re)
}

pub fn matrix_from_complex(n: usize, coords: &DVector<C64>) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::i();
    let mut m = CMatrix::zeros(n, n);
    for (slot, &z) in slots(n).into_iter().zip(coords.iter()) {
        match slot {
            Slot::Real(j, k) => {
                m[(j, k)] += z * h;
                m[(k, j)] -= z * h;
            }
            Slot::Imag(j, k) => {
                m[(j, k)] += i * z * h;
                m[(k, j)] += i * z * h;
            }
            Slot::Diag(j) => m[(j, j)] += i * z,
        }
    }
    m
}

pub fn matrix_from_real(n: usize, coords: &DVector<f64>) -> CMatrix {
    matrix_from_complex(n, &coords.map(|c| C64::new(c, 0.0)))
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

/// Matrix of `ad x` on real coordinates (n² × n²).
pub fn ad_real(x: &LieElement) -> DMatrix<f64> {
    let n = x.n();
    let mut out = DMatrix::zeros(n * n, n * n);
    for (col, slot) in slots(n).into_iter().enumerate() {
        let image = real_coords(&commutator(&x.matrix, &basis_matrix(n, slot)));
        out.set_column(col, &image);
    }
    out
}

/// Matrix of `ad x` on gl(n, ℂ) in complex coordinates.
pub fn ad_complex(x: &CMatrix) -> DMatrix<C64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n * n, n * n);
    for (col, slot) in slots(n).into_iter().enumerate() {
        let image = complex_coords(&commutator(x, &basis_matrix(n, slot)));
        out.set_column(col, &image);
    }
    out
}

/// An element of u(n), stored both as a matrix and as real coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LieElement {
    matrix: CMatrix,
    coords: DVector<f64>,
}

impl LieElement {
    /// Accepts a matrix that is skew-Hermitian to within 1e-12.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let residual = max_abs(&(&matrix + matrix.adjoint()));
        if residual > SKEW_TOL {
            return Err(Error::NotSkewHermitian { residual });
        }
        Ok(Self::from_skew_part(&matrix))
    }

    /// Skew-Hermitian part of an arbitrary square matrix.
    pub fn from_skew_part(matrix: &CMatrix) -> Self {
        Self::from_coords_unchecked(matrix.nrows(), real_coords(matrix))
    }

    pub fn from_coords(n: usize, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: coords.len(),
            });
        }
        Ok(Self::from_coords_unchecked(n, coords))
    }

    pub(crate) fn from_coords_unchecked(n: usize, coords: DVector<f64>) -> Self {
        let matrix = matrix_from_real(n, &coords);
        Self { matrix, coords }
    }

    /// Real matrix, read as an element of so(n) ⊂ u(n).
    pub fn from_real_skew(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(m.map(|v| C64::new(v, 0.0)))
    }

    pub fn zero(n: usize) -> Self {
        Self::from_coords_unchecked(n, DVector::zeros(n * n))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_coords_unchecked(self.n(), &self.coords * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_coords_unchecked(self.n(), &self.coords + &other.coords)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_coords_unchecked(self.n(), &self.coords - &other.coords)
    }

    /// Conjugation by a unitary matrix.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::from_skew_part(&(u * &self.matrix * u.adjoint()))
    }
}

fn same_size(x: &LieElement, y: &LieElement) -> Result<()> {
    if x.n() == y.n() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: x.n(),
            found: y.n(),
        })
    }
}

pub fn bracket(x: &LieElement, y: &LieElement) -> Result<LieElement> {
    same_size(x, y)?;
    Ok(LieElement::from_skew_part(&commutator(&x.matrix, &y.matrix)))
}

/// `⟨X, Y⟩ = −Re Tr(XY)`.
pub fn pairing(x: &LieElement, y: &LieElement) -> Result<f64> {
    same_size(x, y)?;
    Ok(x.coords.dot(&y.coords))
}

/// Entrywise complex conjugation.
pub fn sigma(x: &LieElement) -> LieElement {
    let n = x.n();
    let coords = DVector::from_iterator(
        n * n,
        slots(n)
            .into_iter()
            .zip(x.coords.iter())
            .map(|(slot, &c)| if slot.is_real() { c } else { -c }),
    );
    LieElement::from_coords_unchecked(n, coords)
}

/// `{y ∈ within : [x, y] = 0}`.
pub fn centralizer(x: &LieElement, within: &RealSubspace, rule: RankRule) -> RealSubspace {
    within.kernel_within(&ad_real(x), rule)
}

/// Centralizer of a complex matrix inside a complexified subspace of gl(n, ℂ).
pub fn centralizer_complex(x: &CMatrix, within: &ComplexSubspace, rule: RankRule) -> ComplexSubspace {
    within.kernel_within(&ad_complex(x), rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn e(n: usize, j: usize, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        m[(j, k)] = C64::new(1.0, 0.0);
        m
    }

    fn rotation_12() -> LieElement {
        LieElement::from_matrix(e(2, 0, 1) - e(2, 1, 0)).unwrap()
    }

    fn symmetric_12() -> LieElement {
        LieElement::from_matrix((e(2, 0, 1) + e(2, 1, 0)) * C64::i()).unwrap()
    }

    fn element(n: usize) -> impl Strategy<Value = LieElement> {
        prop::collection::vec(-2.0f64..2.0, n * n)
            .prop_map(move |v| LieElement::from_coords(n, DVector::from_vec(v)).unwrap())
    }

    #[test]
    fn slot_index_inverts_layout() {
        for n in 1..6 {
            for (i, slot) in slots(n).into_iter().enumerate() {
                assert_eq!(slot_index(n, slot), i);
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_under_pairing() {
        let n = 3;
        let elems: Vec<_> = slots(n)
            .into_iter()
            .map(|s| LieElement::from_matrix(basis_matrix(n, s)).unwrap())
            .collect();
        for (i, x) in elems.iter().enumerate() {
            for (j, y) in elems.iter().enumerate() {
                let trace = -(x.matrix() * y.matrix()).trace().re;
                assert_abs_diff_eq!(trace, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn bracket_of_rotation_and_symmetric() {
        let b = bracket(&rotation_12(), &symmetric_12()).unwrap();
        let expected = (e(2, 0, 0) - e(2, 1, 1)) * C64::new(0.0, 2.0);
        assert!(max_abs(&(b.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn pairing_examples() {
        let d = LieElement::from_matrix(CMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::i(),
            -C64::i(),
        ])))
        .unwrap();
        assert_abs_diff_eq!(pairing(&d, &d).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pairing(&rotation_12(), &symmetric_12()).unwrap(), 0.0);
    }

    #[test]
    fn sigma_examples() {
        let i_id = LieElement::from_matrix(CMatrix::identity(3, 3) * C64::i()).unwrap();
        assert_eq!(sigma(&i_id).matrix(), &(CMatrix::identity(3, 3) * -C64::i()));
        assert_eq!(sigma(&rotation_12()), rotation_12());
    }

    #[test]
    fn rejects_mismatch_and_non_skew() {
        assert!(bracket(&rotation_12(), &LieElement::zero(3)).is_err());
        assert!(pairing(&rotation_12(), &LieElement::zero(3)).is_err());
        assert!(LieElement::from_matrix(e(2, 0, 1)).is_err());
    }

    proptest! {
        #[test]
        fn coords_round_trip(x in element(4)) {
            let back = LieElement::from_matrix(x.matrix().clone()).unwrap();
            prop_assert!((back.coords() - x.coords()).amax() < 1e-12);
            prop_assert!(max_abs(&(x.matrix() + x.matrix().adjoint())) < 1e-12);
        }

        #[test]
        fn pairing_is_negative_trace(x in element(3), y in element(3)) {
            let trace = -(x.matrix() * y.matrix()).trace().re;
            prop_assert!((pairing(&x, &y).unwrap() - trace).abs() < 1e-10);
        }

        #[test]
        fn algebra_identities(x in element(3), y in element(3), z in element(3)) {
            let xy = bracket(&x, &y).unwrap();
            let yx = bracket(&y, &x).unwrap();
            prop_assert!(xy.add(&yx).norm() < 1e-10);
            prop_assert!(bracket(&x, &x).unwrap().norm() < 1e-12);

            let jacobi = bracket(&xy, &z).unwrap()
                .add(&bracket(&bracket(&y, &z).unwrap(), &x).unwrap())
                .add(&bracket(&bracket(&z, &x).unwrap(), &y).unwrap());
            prop_assert!(jacobi.norm() < 1e-10);

            let invariance = pairing(&bracket(&z, &x).unwrap(), &y).unwrap()
                + pairing(&x, &bracket(&z, &y).unwrap()).unwrap();
            prop_assert!(invariance.abs() < 1e-10);
        }

        #[test]
        fn sigma_is_involutive_isometric_automorphism(x in element(3), y in element(3)) {
            prop_assert_eq!(sigma(&sigma(&x)), x.clone());
            let lhs = pairing(&sigma(&x), &sigma(&y)).unwrap();
            prop_assert!((lhs - pairing(&x, &y).unwrap()).abs() < 1e-12);
            let conj = bracket(&sigma(&x), &sigma(&y)).unwrap();
            prop_assert!(conj.sub(&sigma(&bracket(&x, &y).unwrap())).norm() < 1e-10);
            let expected = x.matrix().map(|c| c.conj());
            prop_assert!(max_abs(&(sigma(&x).matrix() - expected)) < 1e-14);
        }

        #[test]
        fn ad_matrix_matches_bracket(x in element(3), y in element(3)) {
            let via_matrix = ad_real(&x) * y.coords();
            prop_assert!((via_matrix - bracket(&x, &y).unwrap().coords()).amax() < 1e-12);
        }
    }
}
