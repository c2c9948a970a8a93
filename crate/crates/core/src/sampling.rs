//! Seeded random sources.  Every sample derives its own generator from
//! `(seed, purpose, index)`, so results do not depend on evaluation order.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lie::{LieElement, C64};
use crate::subspace::RealSubspace;

/// Independent random streams, one per use site.
#[derive(Clone, Copy, Debug)]
pub enum Purpose {
    GenericDims = 1,
    Lambdas,
    Points,
    Witness,
    Perturbation,
    Pruning,
    Moment,
    Regularity,
    Pencil,
    Reduction,
    Flow,
    Conjugation,
}

pub fn rng_for(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mixed = seed ^ (purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(index);
    rng
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Standard Gaussian element of a subspace of u(n).
pub fn random_in<R: Rng>(space: &RealSubspace, n: usize, rng: &mut R) -> LieElement {
    let weights = gaussian_vector(rng, space.dim());
    LieElement::from_coords_unchecked(n, space.basis() * weights)
}

/// Uniform (by area) point of the annulus 0.5 ≤ |λ| ≤ 2.
pub fn annulus_point<R: Rng>(rng: &mut R) -> C64 {
    let radius = rng.gen_range(0.25f64..4.0).sqrt();
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    C64::from_polar(radius, angle)
}

/// 0, ±1, ±i, then `extra` annulus samples.
pub fn lambda_schedule(extra: usize, seed: u64) -> Vec<C64> {
    let mut out = vec![
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, -1.0),
    ];
    let mut rng = rng_for(seed, Purpose::Lambdas, 0);
    out.extend((0..extra).map(|_| annulus_point(&mut rng)));
    out
}

/// Haar-ish random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(size: usize, rng: &mut R) -> nalgebra::DMatrix<C64> {
    let g = nalgebra::DMatrix::from_fn(size, size, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng_for(7, Purpose::Points, 3).sample(StandardNormal);
        let b: f64 = rng_for(7, Purpose::Points, 3).sample(StandardNormal);
        let c: f64 = rng_for(7, Purpose::Points, 4).sample(StandardNormal);
        let d: f64 = rng_for(7, Purpose::Witness, 3).sample(StandardNormal);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn annulus_bounds() {
        let mut rng = rng_for(1, Purpose::Lambdas, 0);
        for _ in 0..200 {
            let z = annulus_point(&mut rng);
            assert!((0.5..=2.0).contains(&z.norm()));
        }
        assert_eq!(lambda_schedule(20, 3).len(), 25);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = rng_for(2, Purpose::Conjugation, 0);
        let u = random_unitary(4, &mut rng);
        let err = crate::lie::max_abs(&(&u * u.adjoint() - nalgebra::DMatrix::<C64>::identity(4, 4)));
        assert!(err < 1e-12);
    }
}
