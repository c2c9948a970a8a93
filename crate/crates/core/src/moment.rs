//! The form `β(y₁, y₂) = ⟨y₁, ad_a⁻¹ y₂⟩` on m, its moment map
//! `μ(x) = ½ [ad_a⁻¹ x, x]_k`, the invariant `m_a(V)`, and the test for
//! regular elements of k inside `k′ = (1 − σ)k`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{algebra_rank, is_in_r, m_of_x, GenericDims};
use crate::lie::{ad_real, bracket, centralizer, slots, LieElement};
use crate::sampling::{random_in, rng_for, Purpose};
use crate::setup::AlgebraPair;
use crate::subspace::RealSubspace;

#[derive(Clone, Debug)]
pub struct MomentData {
    pub n: usize,
    pub a: LieElement,
    /// `ad_a⁻¹` on the complement, extended by zero (n² × n²).
    pub ad_a_inv: DMatrix<f64>,
    /// β on an orthonormal basis of the complement.
    pub beta: DMatrix<f64>,
    pair: AlgebraPair,
}

impl MomentData {
    pub fn new(pair: &AlgebraPair, a: &LieElement) -> Result<Self> {
        let q = pair.complement.basis();
        let restricted = q.transpose() * ad_real(a) * q;
        let inverse = restricted
            .clone()
            .try_inverse()
            .filter(|inv| (&restricted * inv - DMatrix::identity(q.ncols(), q.ncols())).amax() < 1e-10)
            .ok_or_else(|| Error::Precondition("ad a is not invertible on the complement".into()))?;
        let ad_a_inv = q * &inverse * q.transpose();
        let beta = inverse;
        Ok(Self { n: pair.n, a: a.clone(), ad_a_inv, beta, pair: pair.clone() })
    }

    pub fn pair(&self) -> &AlgebraPair {
        &self.pair
    }

    pub fn ad_a_inv(&self, x: &LieElement) -> LieElement {
        LieElement::from_coords(self.n, &self.ad_a_inv * x.coords()).expect("stays in u(n)")
    }

    pub fn moment(&self, x: &LieElement) -> LieElement {
        let raw = bracket(&self.ad_a_inv(x), x).expect("same size").scale(0.5);
        LieElement::from_coords(self.n, self.pair.isotropy.project(raw.coords())).expect("stays in u(n)")
    }

    /// `D_x(y) = ½ ([ad_a⁻¹ y, x] + [ad_a⁻¹ x, y])_k`, exact since μ is quadratic;
    /// columns are images of the complement basis.
    pub fn differential(&self, x: &LieElement) -> DMatrix<f64> {
        let q = self.pair.complement.basis();
        let ad_x = ad_real(x);
        let ad_inv_x = ad_real(&self.ad_a_inv(x));
        let k = self.pair.isotropy.projector();
        (k * (ad_inv_x - ad_x * &self.ad_a_inv) * q) * 0.5
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MaEstimate {
    pub value: usize,
    pub accepted: usize,
    pub samples: usize,
    /// (moment route, direct intersection) at the first accepted points.
    pub cross_checks: Vec<(usize, usize)>,
    pub routes_agree: bool,
}

const CROSS_CHECKS: usize = 3;

/// `dim (m(x) ∩ ad_a⁻¹ ad x(k))`.
pub fn direct_intersection_dim(data: &MomentData, x: &LieElement) -> usize {
    let pair = data.pair();
    let image = pair.isotropy.image_under(&(&data.ad_a_inv * ad_real(x)), pair.rule);
    m_of_x(pair, x).intersection(&image, pair.rule).dim()
}

pub fn moment_route_dim(data: &MomentData, x: &LieElement) -> usize {
    let pair = data.pair();
    centralizer(&data.moment(x), &pair.isotropy, pair.rule).dim() - pair.center.dim()
}

pub fn m_a_estimate(
    data: &MomentData,
    subspace: &RealSubspace,
    dims: &GenericDims,
    samples: usize,
    seed: u64,
) -> Result<MaEstimate> {
    let pair = data.pair();
    let per_sample: Vec<Option<usize>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = random_in(subspace, data.n, &mut rng_for(seed, Purpose::Moment, i as u64));
            match is_in_r(pair, &x, dims) {
                Ok(true) => Some(moment_route_dim(data, &x)),
                _ => None,
            }
        })
        .collect();
    if !dims.stabilized {
        return Err(Error::Precondition("generic dimensions did not stabilize".into()));
    }
    let accepted: Vec<(usize, usize)> = per_sample
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|d| (i, d)))
        .collect();
    let value = accepted
        .iter()
        .map(|&(_, d)| d)
        .min()
        .ok_or(Error::NoRegularSamples)?;
    let cross_checks: Vec<(usize, usize)> = accepted
        .iter()
        .take(CROSS_CHECKS)
        .map(|&(i, d)| {
            let x = random_in(subspace, data.n, &mut rng_for(seed, Purpose::Moment, i as u64));
            (d, direct_intersection_dim(data, &x))
        })
        .collect();
    Ok(MaEstimate {
        value,
        accepted: accepted.len(),
        samples,
        routes_agree: cross_checks.iter().all(|(a, b)| a == b),
        cross_checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub min_centralizer_dim: usize,
    pub rank_isotropy: usize,
    pub dim_kprime: usize,
    pub regular: bool,
}

/// The σ-odd part of u(n): imaginary symmetric matrices.
pub fn sigma_odd(n: usize) -> RealSubspace {
    let axes: Vec<usize> = slots(n)
        .into_iter()
        .enumerate()
        .filter(|(_, s)| !s.is_real())
        .map(|(i, _)| i)
        .collect();
    RealSubspace::coordinate(n * n, &axes)
}

/// Does `k′ = k ∩ g′` contain an element whose centralizer in k has the
/// dimension of a Cartan subalgebra of k?
pub fn regular_in_kprime(pair: &AlgebraPair, samples: usize, seed: u64) -> RegularityReport {
    let kprime = pair.isotropy.intersection(&sigma_odd(pair.n), pair.rule);
    let rank_isotropy = algebra_rank(pair.n, &pair.isotropy, samples, seed);
    let min_dim = (0..samples.max(1))
        .map(|i| {
            let xi = random_in(&kprime, pair.n, &mut rng_for(seed, Purpose::Regularity, (samples + i) as u64));
            centralizer(&xi, &pair.isotropy, pair.rule).dim()
        })
        .min()
        .unwrap_or(pair.isotropy.dim());
    RegularityReport {
        min_centralizer_dim: min_dim,
        rank_isotropy,
        dim_kprime: kprime.dim(),
        regular: min_dim == rank_isotropy,
    }
}

/// Rank of a linear map restricted to the columns of `basis`.
pub fn restricted_rank(map: &DMatrix<f64>, basis: &DMatrix<f64>, rule: crate::subspace::RankRule) -> usize {
    let image = map * basis;
    if image.ncols() == 0 || image.amax() == 0.0 {
        return 0;
    }
    crate::subspace::rank(&image, rule).rank
}
