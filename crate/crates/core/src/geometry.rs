//! Generic centralizer dimensions, the regular sets, the subspaces m(x), and
//! the reduction to the centralizer of a generic isotropy algebra.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{ad_real, bracket, sigma, slot_index, LieElement, Slot};
use crate::sampling::{random_in, rng_for, Purpose};
use crate::setup::{center_of, AlgebraPair, OrbitSetup, Space};
use crate::subspace::{rank, spectral_norm, RealSubspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenericDims {
    /// Minimal centralizer dimension in the ambient algebra.
    pub q: usize,
    /// Minimal centralizer dimension in the isotropy algebra.
    pub p: usize,
    pub r: usize,
    pub sample_count: usize,
    pub stabilized: bool,
}

/// Fraction of samples that must attain both minima.
const STABLE_FRACTION: f64 = 0.8;

/// `(dim G^x, dim K^x)` for the pair's algebra and isotropy algebra.
pub fn centralizer_dims(pair: &AlgebraPair, x: &LieElement) -> (usize, usize) {
    let ad = ad_real(x);
    let scale = spectral_norm(&ad);
    (
        pair.algebra.kernel_within_scaled(&ad, pair.rule, scale).dim(),
        pair.isotropy.kernel_within_scaled(&ad, pair.rule, scale).dim(),
    )
}

pub fn estimate_generic_dims(pair: &AlgebraPair, samples: usize, seed: u64) -> Result<GenericDims> {
    if samples < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 samples, got {samples}")));
    }
    let observed: Vec<(usize, usize)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, Purpose::GenericDims, i as u64);
            centralizer_dims(pair, &random_in(&pair.complement, pair.n, &mut rng))
        })
        .collect();
    let q = observed.iter().map(|d| d.0).min().unwrap_or(0);
    let p = observed.iter().map(|d| d.1).min().unwrap_or(0);
    let hits = observed.iter().filter(|&&d| d == (q, p)).count();
    Ok(GenericDims {
        q,
        p,
        r: q - p,
        sample_count: samples,
        stabilized: hits as f64 >= STABLE_FRACTION * samples as f64,
    })
}

pub fn is_in_r(pair: &AlgebraPair, x: &LieElement, dims: &GenericDims) -> Result<bool> {
    if !dims.stabilized {
        return Err(Error::Precondition("generic dimensions did not stabilize".into()));
    }
    Ok(centralizer_dims(pair, x) == (dims.q, dims.p))
}

/// `{y ∈ M : [x, y] ∈ M}`.
pub fn m_of_x(pair: &AlgebraPair, x: &LieElement) -> RealSubspace {
    let ad = ad_real(x);
    let scale = spectral_norm(&ad);
    let to_isotropy = pair.isotropy.basis().transpose() * &ad;
    pair.complement.kernel_within_scaled(&to_isotropy, pair.rule, scale)
}

/// `[x, K]`, as a subspace of M.
pub fn isotropy_orbit_tangent(pair: &AlgebraPair, x: &LieElement) -> RealSubspace {
    pair.isotropy.image_under(&ad_real(x), pair.rule)
}

/// Rank of a Lie subalgebra: minimal centralizer dimension of its elements.
pub fn algebra_rank(n: usize, algebra: &RealSubspace, samples: usize, seed: u64) -> usize {
    let rule = crate::subspace::RankRule::default();
    (0..samples.max(1))
        .map(|i| {
            let mut rng = rng_for(seed, Purpose::Regularity, i as u64);
            let y = random_in(algebra, n, &mut rng);
            algebra.kernel_within(&ad_real(&y), rule).dim()
        })
        .min()
        .unwrap_or(0)
}

/// Dimension of the span of all brackets of basis pairs.
pub fn derived_dim(n: usize, algebra: &RealSubspace) -> usize {
    let d = algebra.dim();
    if d < 2 {
        return 0;
    }
    let elems: Vec<LieElement> = (0..d)
        .map(|i| LieElement::from_coords_unchecked(n, algebra.vector(i)))
        .collect();
    let mut cols = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            cols.push(bracket(&elems[i], &elems[j]).expect("same size").coords().clone());
        }
    }
    let m = DMatrix::from_columns(&cols);
    if m.amax() < 1e-12 {
        return 0;
    }
    rank(&m, crate::subspace::RankRule::default()).rank
}

/// Centralizer in `within` of every element of `algebra`.
pub fn centralizer_of_subalgebra(n: usize, algebra: &RealSubspace, within: &RealSubspace) -> RealSubspace {
    let rule = crate::subspace::RankRule::default();
    if algebra.dim() == 0 {
        return within.clone();
    }
    let d = n * n;
    let mut stacked = DMatrix::zeros(d * algebra.dim(), d);
    for i in 0..algebra.dim() {
        let z = LieElement::from_coords_unchecked(n, algebra.vector(i));
        stacked.rows_mut(i * d, d).copy_from(&ad_real(&z));
    }
    // unit basis vectors: a genuinely non-central algebra has ad norm of order one,
    // and a central one must not be judged against rounding noise
    within.kernel_within_scaled(&stacked, rule, spectral_norm(&stacked).max(1.0))
}

/// A witness moved, if needed, into both regular sets without changing its
/// isotropy algebra.
#[derive(Clone, Debug, Serialize)]
pub struct Anchor {
    #[serde(skip)]
    pub x0: LieElement,
    pub radius: f64,
    pub attempts: usize,
}

const RADII: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
const TRIES_PER_RADIUS: usize = 4;

/// Resample near `x0` inside `m̃ ∩ g₀` (which keeps `k^{x₀}` in the isotropy)
/// with shrinking radii until the point lies in `R(m) ∩ R(m̃)`.
pub fn perturb_into_regular(
    setup: &OrbitSetup,
    x0: &LieElement,
    dims_m: &GenericDims,
    dims_mt: &GenericDims,
    seed: u64,
) -> Result<Anchor> {
    let pair_m = setup.pair(Space::M);
    let pair_mt = setup.pair(Space::MTilde);
    let isotropy = crate::lie::centralizer(x0, &setup.k, setup.rule);
    let g0 = centralizer_of_subalgebra(setup.n, &isotropy, &setup.g);
    let directions = g0.intersection(&setup.m_tilde, setup.rule);
    let accept = |x: &LieElement| -> Result<bool> {
        Ok(is_in_r(pair_m, x, dims_m)?
            && is_in_r(pair_mt, x, dims_mt)?
            && crate::lie::centralizer(x, &setup.k, setup.rule).dim() == isotropy.dim())
    };
    let mut attempts = 1;
    if accept(x0)? {
        return Ok(Anchor { x0: x0.clone(), radius: 0.0, attempts });
    }
    let scale = x0.norm().max(1.0);
    for (ri, &radius) in RADII.iter().enumerate() {
        for t in 0..TRIES_PER_RADIUS {
            attempts += 1;
            let mut rng = rng_for(seed, Purpose::Perturbation, (ri * TRIES_PER_RADIUS + t) as u64);
            let xi = random_in(&directions, setup.n, &mut rng);
            if xi.norm() == 0.0 {
                continue;
            }
            let x = x0.add(&xi.scale(radius * scale / xi.norm()));
            if accept(&x)? {
                return Ok(Anchor { x0: x, radius: radius * scale, attempts });
            }
        }
    }
    Err(Error::Precondition(format!(
        "no point within radius {:.1e} of the witness reached both regular sets",
        RADII[0] * scale
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub dim_g0: usize,
    pub dim_k0: usize,
    pub dim_m0: usize,
    pub dim_m0_tilde: usize,
    pub rank_g0: usize,
    pub center_dim: usize,
    pub anchor_isotropy_dim: usize,
    pub components: Vec<Vec<usize>>,
    pub closure_residual: f64,
    pub sigma_residual: f64,
    pub contains_a: bool,
    /// `k^x = k^{x₀}` at every sampled `x ∈ m₀ ∩ R(m)`.
    pub isotropy_constant: bool,
    /// `m₀(x) = m(x)` at the same samples.
    pub restricted_m_of_x_agrees: bool,
    pub samples_checked: usize,
    /// `dim g^{x₀} = dim g₀^{x₀} + dim [k^{x₀}, k^{x₀}]`.
    pub g_x0_dim: usize,
    pub g0_x0_dim: usize,
    pub isotropy_derived_dim: usize,
    pub centralizer_split_holds: bool,
    /// `r(m)` against `rank g₀ − dim z(g₀)`.
    pub r_full: usize,
    pub r_reduced: usize,
}

#[derive(Clone, Debug)]
pub struct ReducedSetup {
    pub g0: RealSubspace,
    pub k0: RealSubspace,
    pub m0: RealSubspace,
    pub g0_tilde: RealSubspace,
    pub k0_tilde: RealSubspace,
    pub m0_tilde: RealSubspace,
    pub z_g0: RealSubspace,
    pub anchor_x0: LieElement,
    pub anchor_isotropy: RealSubspace,
    pub report: ReductionReport,
    pair_m0: AlgebraPair,
    pair_m0_tilde: AlgebraPair,
}

impl ReducedSetup {
    pub fn pair(&self, space: Space) -> &AlgebraPair {
        match space {
            Space::M => &self.pair_m0,
            Space::MTilde => &self.pair_m0_tilde,
        }
    }

    pub fn rank(&self) -> usize {
        self.report.rank_g0
    }
}

/// Index sets on which the reduced algebra contains all matrix units.
fn unit_components(n: usize, g0: &RealSubspace) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut unit = nalgebra::DVector::zeros(n * n);
            unit[slot_index(n, Slot::Real(j, k))] = 1.0;
            if g0.residual(&unit) < 1e-8 {
                let (rj, rk) = (find(&mut parent, j), find(&mut parent, k));
                parent[rj.max(rk)] = rj.min(rk);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|g| g[0] == root) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups.retain(|g| g.len() > 1);
    groups
}

fn max_outside(space: &RealSubspace, vectors: impl Iterator<Item = nalgebra::DVector<f64>>) -> f64 {
    vectors.map(|v| space.residual(&v)).fold(0.0, f64::max)
}

pub fn reduction_data(
    setup: &OrbitSetup,
    x0: &LieElement,
    dims_m: &GenericDims,
    dims_mt: &GenericDims,
    samples: usize,
    seed: u64,
) -> Result<ReducedSetup> {
    let pair_m = setup.pair(Space::M);
    let pair_mt = setup.pair(Space::MTilde);
    let (gx, kx) = centralizer_dims(pair_m, x0);
    if (gx, kx) != (dims_m.q, dims_m.p) || !dims_m.stabilized {
        return Err(Error::Precondition(format!(
            "anchor not in R(m): centralizer dims ({gx}, {kx}) vs generic ({}, {})",
            dims_m.q, dims_m.p
        )));
    }
    let (gx, kx) = centralizer_dims(pair_mt, x0);
    if (gx, kx) != (dims_mt.q, dims_mt.p) || !dims_mt.stabilized {
        return Err(Error::Precondition(format!(
            "anchor not in R(m̃): centralizer dims ({gx}, {kx}) vs generic ({}, {})",
            dims_mt.q, dims_mt.p
        )));
    }

    let n = setup.n;
    let rule = setup.rule;
    let anchor_isotropy = crate::lie::centralizer(x0, &setup.k, rule);
    let g0 = centralizer_of_subalgebra(n, &anchor_isotropy, &setup.g);
    let k0 = g0.intersection(&setup.k, rule);
    let m0 = g0.intersection(&setup.m, rule);
    let g0_tilde = g0.intersection(&setup.g_tilde, rule);
    let k0_tilde = g0.intersection(&setup.k_tilde, rule);
    let m0_tilde = m0.intersection(&setup.m_tilde, rule);
    let z_g0 = center_of(n, &g0, rule);

    let basis: Vec<LieElement> = (0..g0.dim())
        .map(|i| LieElement::from_coords_unchecked(n, g0.vector(i)))
        .collect();
    let mut closure_residual: f64 = 0.0;
    for (i, u) in basis.iter().enumerate() {
        for v in &basis[i + 1..] {
            closure_residual = closure_residual.max(g0.residual(bracket(u, v)?.coords()));
        }
    }
    let sigma_residual = [&g0, &k0, &m0]
        .iter()
        .map(|space| {
            max_outside(
                space,
                (0..space.dim()).map(|i| sigma(&LieElement::from_coords_unchecked(n, space.vector(i))).coords().clone()),
            )
        })
        .fold(0.0, f64::max);
    let contains_a = g0.residual(setup.a.coords()) < 1e-10;

    let rank_g0 = algebra_rank(n, &g0, 3, seed);
    let pair_m0 = AlgebraPair::new(n, g0.clone(), k0.clone(), rule);
    let pair_m0_tilde = AlgebraPair::new(n, g0_tilde.clone(), k0_tilde.clone(), rule);

    let mut isotropy_constant = true;
    let mut restricted_agrees = true;
    let mut checked = 0;
    for i in 0..samples {
        let mut rng = rng_for(seed, Purpose::Reduction, i as u64);
        let x = random_in(&m0, n, &mut rng);
        if !is_in_r(pair_m, &x, dims_m)? {
            continue;
        }
        checked += 1;
        let kx = crate::lie::centralizer(&x, &setup.k, rule);
        isotropy_constant &= kx.same_as(&anchor_isotropy, 1e-8);
        restricted_agrees &= m_of_x(&pair_m0, &x).same_as(&m_of_x(pair_m, &x), 1e-8);
    }

    let g_x0_dim = crate::lie::centralizer(x0, &setup.g, rule).dim();
    let g0_x0_dim = crate::lie::centralizer(x0, &g0, rule).dim();
    let isotropy_derived_dim = derived_dim(n, &anchor_isotropy);
    let report = ReductionReport {
        dim_g0: g0.dim(),
        dim_k0: k0.dim(),
        dim_m0: m0.dim(),
        dim_m0_tilde: m0_tilde.dim(),
        rank_g0,
        center_dim: z_g0.dim(),
        anchor_isotropy_dim: anchor_isotropy.dim(),
        components: unit_components(n, &g0),
        closure_residual,
        sigma_residual,
        contains_a,
        isotropy_constant,
        restricted_m_of_x_agrees: restricted_agrees,
        samples_checked: checked,
        g_x0_dim,
        g0_x0_dim,
        isotropy_derived_dim,
        centralizer_split_holds: g_x0_dim == g0_x0_dim + isotropy_derived_dim,
        r_full: dims_m.r,
        r_reduced: rank_g0 - z_g0.dim(),
    };
    Ok(ReducedSetup {
        g0,
        k0,
        m0,
        g0_tilde,
        k0_tilde,
        m0_tilde,
        z_g0,
        anchor_x0: x0.clone(),
        anchor_isotropy,
        report,
        pair_m0,
        pair_m0_tilde,
    })
}
