//! The shifted trace invariants `h_{k,s}`: the λ^s coefficient of
//! `tr((x + λa)^k)`, their gradients, the canonical bracket, and the
//! involutivity and completeness checks.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{is_in_r, m_of_x, GenericDims};
use crate::lie::{bracket, pairing, CMatrix, LieElement, C64};
use crate::pencil::PencilForm;
use crate::sampling::{random_in, rng_for, Purpose};
use crate::setup::AlgebraPair;
use crate::subspace::RealSubspace;

/// A smooth function on u(n) with its u(n)-gradient.
pub trait Observable: Sync {
    fn value(&self, x: &LieElement) -> f64;
    fn gradient(&self, x: &LieElement) -> LieElement;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Member {
    pub power: usize,
    pub shift: usize,
}

/// `h_{k,s}`.  For skew-Hermitian arguments and real λ the trace of the
/// k-th power is real for even k and imaginary for odd k, so odd powers use
/// the imaginary part.
#[derive(Clone, Debug)]
pub struct ShiftedInvariant {
    pub member: Member,
    a: CMatrix,
    /// `true` marks a factor of `a`.
    words: Vec<Vec<bool>>,
}

fn words_with(k: usize, s: usize) -> Vec<Vec<bool>> {
    (0u32..1 << k)
        .filter(|mask| mask.count_ones() as usize == s)
        .map(|mask| (0..k).map(|i| mask >> i & 1 == 1).collect())
        .collect()
}

impl ShiftedInvariant {
    pub fn new(member: Member, a: &LieElement) -> Self {
        Self {
            member,
            a: a.matrix().clone(),
            words: words_with(member.power, member.shift),
        }
    }

    fn raw_trace(&self, x: &CMatrix) -> C64 {
        let n = x.nrows();
        self.words
            .iter()
            .map(|w| {
                w.iter()
                    .fold(CMatrix::identity(n, n), |acc, &is_a| acc * if is_a { &self.a } else { x })
                    .trace()
            })
            .sum()
    }

    fn take_part(&self, z: C64) -> f64 {
        if self.member.power.is_multiple_of(2) {
            z.re
        } else {
            z.im
        }
    }
}

impl Observable for ShiftedInvariant {
    fn value(&self, x: &LieElement) -> f64 {
        self.take_part(self.raw_trace(x.matrix()))
    }

    fn gradient(&self, x: &LieElement) -> LieElement {
        let n = x.n();
        let xm = x.matrix();
        let letter = |is_a: bool| if is_a { &self.a } else { xm };
        // d tr(w)(y) = Σ over x-positions p of tr(y · w_{p+1} ⋯ w_k w_1 ⋯ w_{p−1})
        let mut g = CMatrix::zeros(n, n);
        for w in &self.words {
            let k = w.len();
            for p in (0..k).filter(|&p| !w[p]) {
                g += (1..k).fold(CMatrix::identity(n, n), |acc, j| acc * letter(w[(p + j) % k]));
            }
        }
        if self.member.power % 2 == 1 {
            g *= C64::new(0.0, -1.0);
        }
        // ⟨Γ, y⟩ = Re tr(G y) for all y ∈ u(n): Γ is the skew-Hermitian part of −G
        LieElement::from_skew_part(&(-g))
    }
}

/// Members that are not constant on `space`, ordered by (power, shift).
#[derive(Clone, Debug)]
pub struct IntegralFamily {
    pub space: RealSubspace,
    pub members: Vec<ShiftedInvariant>,
    pub pruned: Vec<Member>,
}

const PRUNE_POINTS: usize = 3;

impl IntegralFamily {
    /// All `h_{k,s}` with `1 ≤ k ≤ n`, `0 ≤ s < k`, minus those whose
    /// gradient has no component along `space` at random unit points.
    pub fn new(space: &RealSubspace, a: &LieElement, seed: u64) -> Self {
        let n = a.n();
        let points: Vec<LieElement> = (0..PRUNE_POINTS)
            .map(|i| {
                let x = random_in(space, n, &mut rng_for(seed, Purpose::Pruning, i as u64));
                let norm = x.norm();
                if norm > 0.0 { x.scale(1.0 / norm) } else { x }
            })
            .collect();
        let mut members = Vec::new();
        let mut pruned = Vec::new();
        for power in 1..=n {
            for shift in 0..power {
                let f = ShiftedInvariant::new(Member { power, shift }, a);
                let alive = points.iter().any(|x| {
                    let full = f.gradient(x);
                    full.norm() > 0.0 && space.project(full.coords()).norm() > 1e-10 * full.norm()
                });
                if alive {
                    members.push(f);
                } else {
                    pruned.push(f.member);
                }
            }
        }
        Self { space: space.clone(), members, pruned }
    }

    pub fn for_pair(pair: &AlgebraPair, a: &LieElement, seed: u64) -> Self {
        Self::new(&pair.complement, a, seed)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn labels(&self) -> Vec<Member> {
        self.members.iter().map(|f| f.member).collect()
    }

    pub fn values(&self, x: &LieElement) -> Vec<f64> {
        self.members.iter().map(|f| f.value(x)).collect()
    }

    /// Gradient of member `i` along the family's space.
    pub fn gradient(&self, i: usize, x: &LieElement) -> LieElement {
        project_gradient(&self.space, &self.members[i], x)
    }

    /// Projected gradients as columns.
    pub fn gradient_matrix(&self, x: &LieElement) -> DMatrix<f64> {
        let cols: Vec<_> = (0..self.len()).map(|i| self.gradient(i, x).coords().clone()).collect();
        if cols.is_empty() {
            DMatrix::zeros(x.n() * x.n(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }
}

pub fn project_gradient(space: &RealSubspace, f: &dyn Observable, x: &LieElement) -> LieElement {
    LieElement::from_coords(x.n(), space.project(f.gradient(x).coords())).expect("projection stays in u(n)")
}

/// `{f, g}(x) = −⟨x, [grad f, grad g]⟩` with gradients taken along `space`.
pub fn poisson_bracket_can(space: &RealSubspace, f: &dyn Observable, g: &dyn Observable, x: &LieElement) -> f64 {
    let gf = project_gradient(space, f, x);
    let gg = project_gradient(space, g, x);
    -pairing(x, &bracket(&gf, &gg).expect("same size")).expect("same size")
}

#[derive(Clone, Debug, Serialize)]
pub struct InvolutivityReport {
    pub points: usize,
    pub pairs: usize,
    pub max_abs: f64,
    /// `|{f, g}(x)| / (‖x‖ ‖grad f‖ ‖grad g‖)`.
    pub max_scaled: f64,
}

pub fn involutivity_suite(
    family: &IntegralFamily,
    extra: Option<&dyn Observable>,
    n_points: usize,
    seed: u64,
) -> Result<InvolutivityReport> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    let n = family.space.ambient_dim().isqrt();
    let mut functions: Vec<&dyn Observable> = family.members.iter().map(|f| f as &dyn Observable).collect();
    if let Some(h) = extra {
        functions.push(h);
    }
    let count = functions.len();
    let per_point: Vec<(f64, f64)> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let x = random_in(&family.space, n, &mut rng_for(seed, Purpose::Points, i as u64));
            let grads: Vec<LieElement> = functions.iter().map(|f| project_gradient(&family.space, *f, &x)).collect();
            let mut worst = (0.0f64, 0.0f64);
            for p in 0..count {
                for q in p + 1..count {
                    let value = -pairing(&x, &bracket(&grads[p], &grads[q]).unwrap()).unwrap();
                    let scale = x.norm() * grads[p].norm() * grads[q].norm();
                    worst.0 = worst.0.max(value.abs());
                    if scale > 0.0 {
                        worst.1 = worst.1.max(value.abs() / scale);
                    }
                }
            }
            worst
        })
        .collect();
    Ok(InvolutivityReport {
        points: n_points,
        pairs: count * count.saturating_sub(1) / 2,
        max_abs: per_point.iter().map(|w| w.0).fold(0.0, f64::max),
        max_scaled: per_point.iter().map(|w| w.1).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessReport {
    pub span_dim: usize,
    pub target_dim: usize,
    pub m_of_x_dim: usize,
    pub complete: bool,
    /// Largest `|B⁰(u, v)| / ‖x‖` over an orthonormal basis of the span.
    pub isotropy_residual: f64,
    /// How far `ker B⁰` sticks out of the span.
    pub kernel_residual: f64,
    pub ambiguous: bool,
}

pub fn completeness_check(
    pair: &AlgebraPair,
    family: &IntegralFamily,
    a: &LieElement,
    x: &LieElement,
    dims: &GenericDims,
) -> Result<CompletenessReport> {
    if !is_in_r(pair, x, dims)? {
        return Err(Error::Precondition("completeness needs a point of the regular set".into()));
    }
    let rule = pair.rule;
    let mx = m_of_x(pair, x);
    let grads = family.gradient_matrix(x);
    let cols: Vec<_> = grads
        .column_iter()
        .filter(|c| c.norm() > 0.0)
        .map(|c| c.normalize())
        .collect();
    let span = if cols.is_empty() {
        RealSubspace::zero(x.n() * x.n())
    } else {
        RealSubspace::span(&DMatrix::from_columns(&cols), rule)
    };
    let target = (dims.r + mx.dim()) / 2;
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let isotropy_residual = if span.dim() == 0 {
        0.0
    } else {
        PencilForm::on(span.clone(), a, x).base().amax() / scale
    };
    let form = PencilForm::on(mx.clone(), a, x);
    let (kernel, _) = crate::subspace::kernel_basis(form.base(), rule, None);
    let kernel_residual = (0..kernel.ncols())
        .map(|i| span.residual(&(mx.basis() * kernel.column(i))))
        .fold(0.0, f64::max);
    Ok(CompletenessReport {
        span_dim: span.dim(),
        target_dim: target,
        m_of_x_dim: mx.dim(),
        complete: span.dim() == target && (dims.r + mx.dim()).is_multiple_of(2),
        isotropy_residual,
        kernel_residual,
        ambiguous: span.is_degraded() || mx.is_degraded(),
    })
}
