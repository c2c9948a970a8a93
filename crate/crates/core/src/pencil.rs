//! The pencil of skew forms `B^λ(y₁, y₂) = −⟨x + λa, [y₁, y₂]⟩` on `m(x)`,
//! its Kronecker verdict, and a standalone analyzer for pairs of skew forms.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{is_in_r, m_of_x, GenericDims};
use crate::lie::{ad_real, LieElement, C64};
use crate::sampling::{lambda_schedule, rng_for, Purpose};
use crate::setup::AlgebraPair;
use crate::subspace::{kernel_basis, rank, spectral_norm, RankRule, RealSubspace};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Parameter {
    Lambda(C64),
    /// `B^si = −⟨a, [·,·]⟩`.
    Singular,
}

#[derive(Clone, Debug)]
pub struct PencilForm {
    pub x: LieElement,
    pub domain: RealSubspace,
    base: DMatrix<f64>,
    singular: DMatrix<f64>,
    /// `‖ad x‖` and `‖ad a‖`: bounds for the forms on unit vectors, used as
    /// rank scales since the forms themselves may vanish on the domain.
    base_scale: f64,
    singular_scale: f64,
}

/// `F_ij = −⟨z, [b_i, b_j]⟩ = −⟨[z, b_i], b_j⟩` on the columns of `basis`.
fn bracket_form(z: &LieElement, basis: &DMatrix<f64>) -> DMatrix<f64> {
    let f = -(ad_real(z) * basis).transpose() * basis;
    (&f - f.transpose()) * 0.5
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KernelDim {
    pub dim: usize,
    pub ambiguous: bool,
}

/// Kernel dimension against a fixed scale, for pencil members that may
/// vanish entirely.
fn kernel_dim_scaled<T: crate::subspace::Field>(m: &DMatrix<T>, rule: RankRule, scale: f64) -> KernelDim {
    if m.is_empty() {
        return KernelDim { dim: m.ncols(), ambiguous: false };
    }
    let singular: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    let info = rule.classify(&singular, scale);
    KernelDim { dim: m.ncols() - info.rank, ambiguous: info.ambiguous }
}

impl PencilForm {
    /// Forms on `m(x)` for the pair's complement.
    pub fn new(pair: &AlgebraPair, a: &LieElement, x: &LieElement) -> Self {
        Self::on(m_of_x(pair, x), a, x)
    }

    pub fn on(domain: RealSubspace, a: &LieElement, x: &LieElement) -> Self {
        Self {
            x: x.clone(),
            base: bracket_form(x, domain.basis()),
            singular: bracket_form(a, domain.basis()),
            base_scale: spectral_norm(&ad_real(x)),
            singular_scale: spectral_norm(&ad_real(a)),
            domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn singular(&self) -> &DMatrix<f64> {
        &self.singular
    }

    /// `B^{(1,0)}` and `B^{(0,1)}` in the chart `t₁ = 1 − λ, t₂ = λ`.
    pub fn generators(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.base.clone(), &self.base + &self.singular)
    }

    pub fn at(&self, parameter: Parameter) -> DMatrix<C64> {
        match parameter {
            Parameter::Lambda(lambda) => complexify(&self.base) + complexify(&self.singular) * lambda,
            Parameter::Singular => complexify(&self.singular),
        }
    }

    /// Thresholded against `‖ad x‖ + |λ|·‖ad a‖`.
    pub fn kernel_dim(&self, parameter: Parameter, rule: RankRule) -> KernelDim {
        let scale = match parameter {
            Parameter::Lambda(lambda) => self.base_scale + lambda.norm() * self.singular_scale,
            Parameter::Singular => self.singular_scale,
        };
        kernel_dim_scaled(&self.at(parameter), rule, scale)
    }

    /// Kernel dimension of the real form `B^0`.
    pub fn real_kernel_dim(&self, rule: RankRule) -> KernelDim {
        kernel_dim_scaled(&self.base, rule, self.base_scale)
    }
}

pub fn form_matrix(pair: &AlgebraPair, a: &LieElement, x: &LieElement, parameter: Parameter) -> DMatrix<C64> {
    PencilForm::new(pair, a, x).at(parameter)
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaSample {
    pub re: f64,
    pub im: f64,
    pub kernel_dim: usize,
    pub centralizer_dim: usize,
    pub ambiguous: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KroneckerVerdict {
    pub in_r: bool,
    pub in_qa: bool,
    pub in_ma: bool,
    pub in_okr: bool,
    pub real_kernel_dim: usize,
    pub si_kernel_dim: usize,
    pub samples: Vec<LambdaSample>,
    pub ambiguous: bool,
}

impl KroneckerVerdict {
    fn outside_regular_set() -> Self {
        Self {
            in_r: false,
            in_qa: false,
            in_ma: false,
            in_okr: false,
            real_kernel_dim: 0,
            si_kernel_dim: 0,
            samples: Vec::new(),
            ambiguous: false,
        }
    }
}

pub fn kronecker_test(
    pair: &AlgebraPair,
    a: &LieElement,
    x: &LieElement,
    dims: &GenericDims,
    n_lambda: usize,
    seed: u64,
) -> Result<KroneckerVerdict> {
    if !is_in_r(pair, x, dims)? {
        return Ok(KroneckerVerdict::outside_regular_set());
    }
    let rule = pair.rule;
    let form = PencilForm::new(pair, a, x);
    let real_kernel = form.real_kernel_dim(rule);
    let si = form.kernel_dim(Parameter::Singular, rule);
    let (ad_x, ad_a) = restricted_ad(&pair.algebra, x, a);
    let (norm_x, norm_a) = (spectral_norm(&ad_x), spectral_norm(&ad_a));
    let samples: Vec<LambdaSample> = lambda_schedule(n_lambda, seed)
        .into_par_iter()
        .map(|lambda| {
            let kernel = form.kernel_dim(Parameter::Lambda(lambda), rule);
            let centralizer = kernel_dim_scaled(&(&ad_x + &ad_a * lambda), rule, norm_x + lambda.norm() * norm_a);
            LambdaSample {
                re: lambda.re,
                im: lambda.im,
                kernel_dim: kernel.dim,
                centralizer_dim: centralizer.dim,
                ambiguous: kernel.ambiguous || centralizer.ambiguous,
            }
        })
        .collect();
    let in_qa = si.dim == dims.r;
    let in_ma = samples.iter().all(|s| s.centralizer_dim == dims.q);
    Ok(KroneckerVerdict {
        in_r: true,
        in_qa,
        in_ma,
        in_okr: in_qa && in_ma,
        real_kernel_dim: real_kernel.dim,
        si_kernel_dim: si.dim,
        ambiguous: real_kernel.ambiguous || si.ambiguous || samples.iter().any(|s| s.ambiguous),
        samples,
    })
}

/// Points of the projective line where the kernel of `t₁·first + t₂·second`
/// is larger than at a generic point.
#[derive(Clone, Debug)]
pub struct JumpSearch {
    pub generic_kernel: usize,
    pub jumps: Vec<[C64; 2]>,
}

fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn random_direction<R: Rng>(rng: &mut R) -> [C64; 2] {
    let v = complex_gaussian(rng, 2, 1);
    let norm = v.norm();
    [v[0] / norm, v[1] / norm]
}

const NEWTON_STEPS: usize = 40;

/// Candidates are the roots of `det Uᴴ(A_a + s A_b)W` for random `N × ρ`
/// compressions (every jump point is among them); each is refined by Newton
/// on the `ρ`-th singular value and kept only if the kernel really grows.
pub fn kernel_jumps(first: &DMatrix<C64>, second: &DMatrix<C64>, rule: RankRule, seed: u64) -> JumpSearch {
    let size = first.nrows();
    let mut rng = rng_for(seed, Purpose::Pencil, u64::MAX);
    let combine = |t: &[C64; 2]| first * t[0] + second * t[1];
    // t is a unit vector, so this bounds every member's norm
    let scale = spectral_norm(first) + spectral_norm(second);
    let generic_kernel = (0..6)
        .map(|_| kernel_dim_scaled(&combine(&random_direction(&mut rng)), rule, scale).dim)
        .min()
        .unwrap_or(0);
    let reduced = size - generic_kernel;
    if reduced == 0 {
        return JumpSearch { generic_kernel, jumps: Vec::new() };
    }
    let ta = random_direction(&mut rng);
    let tb = random_direction(&mut rng);
    let (pa, pb) = (combine(&ta), combine(&tb));
    let mut candidates = Vec::new();
    for _ in 0..3 {
        let u = complex_gaussian(&mut rng, size, reduced);
        let w = complex_gaussian(&mut rng, size, reduced);
        let ca = u.adjoint() * &pa * &w;
        let cb = u.adjoint() * &pb * &w;
        let Some(cb_inv) = cb.try_inverse() else { continue };
        let companion = -(cb_inv * ca);
        if let Some(eigs) = nalgebra::Schur::try_new(companion, 1e-14, 10_000).and_then(|s| s.eigenvalues()) {
            candidates = eigs.iter().copied().collect();
            break;
        }
    }

    let mut jumps: Vec<[C64; 2]> = Vec::new();
    for mut s in candidates {
        for _ in 0..NEWTON_STEPS {
            let svd = (&pa + &pb * s).svd(true, true);
            let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
            let sigma = svd.singular_values[reduced - 1];
            let slope = (u.column(reduced - 1).adjoint() * &pb * v_t.row(reduced - 1).adjoint())[(0, 0)];
            if slope.norm() < 1e-300 {
                break;
            }
            let step = C64::new(sigma, 0.0) / slope;
            s -= step;
            if step.norm() < 1e-15 * (1.0 + s.norm()) {
                break;
            }
        }
        let m = &pa + &pb * s;
        if !s.is_finite() {
            continue;
        }
        let t = [ta[0] + tb[0] * s, ta[1] + tb[1] * s];
        let norm = (t[0].norm_sqr() + t[1].norm_sqr()).sqrt();
        if kernel_dim_scaled(&m, rule, scale * norm).dim <= generic_kernel {
            continue;
        }
        let t = [t[0] / norm, t[1] / norm];
        // projective distance to already-found points
        let seen = jumps.iter().any(|p| (p[0] * t[1] - p[1] * t[0]).norm() < 1e-6);
        if !seen {
            jumps.push(t);
        }
    }
    JumpSearch { generic_kernel, jumps }
}

/// `ad x` and `ad a` on an orthonormal basis of `algebra` (which both
/// preserve), complexified.
pub fn restricted_ad(algebra: &RealSubspace, x: &LieElement, a: &LieElement) -> (DMatrix<C64>, DMatrix<C64>) {
    let q = algebra.basis();
    let restrict = |z: &LieElement| complexify(&(q.transpose() * ad_real(z) * q));
    (restrict(x), restrict(a))
}

/// Finite `λ` at which the centralizer of `x + λa` in `algebra ⊗ ℂ`
/// exceeds its generic dimension.
pub fn centralizer_jumps(algebra: &RealSubspace, a: &LieElement, x: &LieElement, rule: RankRule, seed: u64) -> Vec<C64> {
    let (ad_x, ad_a) = restricted_ad(algebra, x, a);
    // The point at infinity is refined only to ~1e-7, so anything far beyond
    // the natural scale of λ is that point, not a finite jump.
    let horizon = 1e5 * spectral_norm(&ad_x) / spectral_norm(&ad_a).max(f64::MIN_POSITIVE);
    kernel_jumps(&ad_x, &ad_a, rule, seed)
        .jumps
        .into_iter()
        .filter(|t| t[0].norm() > 0.0)
        .map(|t| t[1] / t[0])
        .filter(|l| l.norm() < horizon)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PencilReport {
    pub r_min: usize,
    pub l_dim: usize,
    pub isotropy_residual: f64,
    pub isotropic: bool,
    pub maximal: bool,
    pub complex_constant_rank: bool,
    pub jump_count: usize,
}

const REAL_SAMPLES: usize = 50;

fn check_skew(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!("form is {}×{}, not square", m.nrows(), m.ncols())));
    }
    let asym = (m + m.transpose()).amax();
    if asym > 1e-12 * m.amax().max(1.0) {
        return Err(Error::InvalidArgument(format!("form is not skew (asymmetry {asym:.1e})")));
    }
    Ok(())
}

/// Sum `L` of the kernels of generic real forms, whether it is isotropic and
/// maximal isotropic, and whether the complex kernel dimension is constant.
pub fn pencil_isotropy_check(first: &DMatrix<f64>, second: &DMatrix<f64>, rule: RankRule, seed: u64) -> Result<PencilReport> {
    check_skew(first)?;
    check_skew(second)?;
    if first.shape() != second.shape() {
        return Err(Error::DimensionMismatch { expected: first.nrows(), found: second.nrows() });
    }
    let size = first.nrows();
    let pair = DMatrix::from_columns(&[
        DVector::from_column_slice(first.as_slice()),
        DVector::from_column_slice(second.as_slice()),
    ]);
    if pair.amax() == 0.0 || rank(&pair, rule).rank < 2 {
        return Err(Error::DependentPencil);
    }

    let mut rng = rng_for(seed, Purpose::Pencil, 0);
    let forms: Vec<DMatrix<f64>> = (0..REAL_SAMPLES)
        .map(|_| {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            first * theta.cos() + second * theta.sin()
        })
        .collect();
    let kernels: Vec<DMatrix<f64>> = forms.iter().map(|b| kernel_basis(b, rule, None).0).collect();
    let r_min = kernels.iter().map(|k| k.ncols()).min().unwrap_or(0);
    let generic: Vec<usize> = (0..REAL_SAMPLES).filter(|&i| kernels[i].ncols() == r_min).collect();

    let l = if r_min == 0 {
        RealSubspace::zero(size)
    } else {
        let cols: Vec<DVector<f64>> = generic
            .iter()
            .flat_map(|&i| kernels[i].column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
            .collect();
        RealSubspace::span(&DMatrix::from_columns(&cols), rule)
    };
    let l_basis = l.basis();

    let mut isotropy_residual: f64 = 0.0;
    let mut maximal = true;
    for &i in &generic {
        let b = &forms[i];
        let norm = spectral_norm(b);
        if l.dim() > 0 {
            let restricted = l_basis.transpose() * b * l_basis;
            isotropy_residual = isotropy_residual.max(restricted.amax() / norm);
        }
        let orthogonal = if l.dim() == 0 {
            size
        } else {
            kernel_basis(&(l_basis.transpose() * b), rule, Some(norm)).0.ncols()
        };
        maximal &= orthogonal == l.dim();
    }

    let search = kernel_jumps(&complexify(first), &complexify(second), rule, seed);
    Ok(PencilReport {
        r_min,
        l_dim: l.dim(),
        isotropy_residual,
        isotropic: isotropy_residual < 1e-9,
        maximal,
        complex_constant_rank: search.jumps.is_empty() && search.generic_kernel == r_min,
        jump_count: search.jumps.len(),
    })
}

/// Random pairs of skew forms built from Kronecker and Jordan blocks.
pub mod samples {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    pub enum Block {
        /// Dimension `2k + 1`, no eigenvalues.
        Kronecker(usize),
        /// Real eigenvalue with a Jordan block of the given size (dimension `2·size`).
        Jordan { eigenvalue: f64, size: usize },
        /// Complex pair `α ± iβ` (dimension 4).
        ComplexJordan { re: f64, im: f64 },
    }

    impl Block {
        pub fn dim(&self) -> usize {
            match self {
                Block::Kronecker(k) => 2 * k + 1,
                Block::Jordan { size, .. } => 2 * size,
                Block::ComplexJordan { .. } => 4,
            }
        }

        pub fn has_eigenvalues(&self) -> bool {
            !matches!(self, Block::Kronecker(_))
        }
    }

    fn put(m: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
        m[(i, j)] = v;
        m[(j, i)] = -v;
    }

    /// Block-diagonal pair in normal form.
    pub fn normal_form(blocks: &[Block]) -> (DMatrix<f64>, DMatrix<f64>) {
        let size: usize = blocks.iter().map(Block::dim).sum();
        let mut b1 = DMatrix::zeros(size, size);
        let mut b2 = DMatrix::zeros(size, size);
        let mut at = 0;
        for block in blocks {
            match *block {
                Block::Kronecker(k) => {
                    // e_0..e_k then f_0..f_{k-1}
                    for i in 0..k {
                        put(&mut b1, at + i, at + k + 1 + i, 1.0);
                        put(&mut b2, at + i + 1, at + k + 1 + i, 1.0);
                    }
                }
                Block::Jordan { eigenvalue, size: m } => {
                    for i in 0..m {
                        put(&mut b1, at + i, at + m + i, 1.0);
                        put(&mut b2, at + i, at + m + i, eigenvalue);
                        if i + 1 < m {
                            put(&mut b2, at + i, at + m + i + 1, 1.0);
                        }
                    }
                }
                Block::ComplexJordan { re, im } => {
                    let j = [[re, im], [-im, re]];
                    for (r, row) in j.iter().enumerate() {
                        put(&mut b1, at + r, at + 2 + r, 1.0);
                        for (c, &v) in row.iter().enumerate() {
                            put(&mut b2, at + r, at + 2 + c, v);
                        }
                    }
                }
            }
            at += block.dim();
        }
        (b1, b2)
    }

    /// Blocks filling exactly `size` dimensions.
    pub fn random_blocks<R: Rng>(size: usize, rng: &mut R) -> Vec<Block> {
        let mut blocks = Vec::new();
        let mut left = size;
        while left > 0 {
            let choice = rng.gen_range(0..3);
            let block = match choice {
                0 => Block::Kronecker(rng.gen_range(0..=(left - 1) / 2)),
                1 if left >= 2 => Block::Jordan {
                    eigenvalue: rng.sample::<f64, _>(StandardNormal),
                    size: rng.gen_range(1..=left / 2),
                },
                2 if left >= 4 => Block::ComplexJordan {
                    re: rng.sample(StandardNormal),
                    im: rng.gen_range(0.3..2.0),
                },
                _ => Block::Kronecker((left - 1) / 2),
            };
            left -= block.dim();
            blocks.push(block);
        }
        blocks
    }

    /// A random block pair in normal form, conjugated `Pᵀ B P` by a random
    /// change of basis.  Dependent pairs are redrawn.
    pub fn random_pair<R: Rng>(size: usize, rng: &mut R) -> (Vec<Block>, DMatrix<f64>, DMatrix<f64>) {
        loop {
            let blocks = random_blocks(size, rng);
            let (b1, b2) = normal_form(&blocks);
            let p = DMatrix::from_fn(size, size, |i, j| {
                let g: f64 = rng.sample(StandardNormal);
                if i == j { 2.0 + 0.5 * g } else { 0.5 * g }
            });
            let c1 = p.transpose() * b1 * &p;
            let c2 = p.transpose() * b2 * &p;
            let c1 = (&c1 - c1.transpose()) * 0.5;
            let c2 = (&c2 - c2.transpose()) * 0.5;
            let stacked = DMatrix::from_columns(&[
                DVector::from_column_slice(c1.as_slice()),
                DVector::from_column_slice(c2.as_slice()),
            ]);
            if rank(&stacked, RankRule::default()).rank == 2 {
                return (blocks, c1, c2);
            }
        }
    }
}
