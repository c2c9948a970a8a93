//! Roots `ε_j − ε_k` of u(n) relative to the diagonal torus, split by
//! whether they vanish on a, and the element `x_π` built from a simple
//! system that avoids the isotropy roots.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{ad_complex, CMatrix, LieElement, C64};
use crate::sampling::lambda_schedule;
use crate::setup::OrbitSetup;
use crate::subspace::{spectral_norm, RealSubspace};

pub type Root = (usize, usize);

#[derive(Clone, Debug, Serialize)]
pub struct RootDatum {
    pub n: usize,
    /// Index sets of the type-A factors (one set `0..n` for u(n) itself).
    pub components: Vec<Vec<usize>>,
    pub roots: Vec<Root>,
    pub delta_k: Vec<Root>,
    pub delta_m: Vec<Root>,
    /// Anchored ordering of each component, when one exists.
    pub chains: Option<Vec<Vec<usize>>>,
    pub simple: Vec<Root>,
}

pub fn root_split(setup: &OrbitSetup) -> RootDatum {
    root_split_on(setup, &[(0..setup.n).collect()])
}

/// Roots of the factors `u(component)` only.
pub fn root_split_on(setup: &OrbitSetup, components: &[Vec<usize>]) -> RootDatum {
    let values = setup.a_values();
    let mut roots = Vec::new();
    for comp in components {
        for &j in comp {
            for &k in comp {
                if j != k {
                    roots.push((j, k));
                }
            }
        }
    }
    let (delta_k, delta_m): (Vec<Root>, Vec<Root>) = roots.iter().partition(|&&(j, k)| values[j] == values[k]);
    let chains: Option<Vec<Vec<usize>>> = components
        .iter()
        .map(|comp| anchored_order(comp, &setup.block_of).ok())
        .collect();
    let simple = chains
        .iter()
        .flatten()
        .flat_map(|chain| chain.windows(2).map(|w| (w[0], w[1])))
        .collect();
    RootDatum {
        n: setup.n,
        components: components.to_vec(),
        roots,
        delta_k,
        delta_m,
        chains,
        simple,
    }
}

/// Order `indices` so that consecutive entries lie in different blocks.
/// Greedy: take the block with most indices left (lowest label on ties),
/// never the block just used; indices within a block in ascending order.
pub fn anchored_order(indices: &[usize], block_of: &[usize]) -> Result<Vec<usize>> {
    let mut by_block: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &i in indices {
        by_block.entry(block_of[i]).or_default().push(i);
    }
    let largest = by_block.values().map(Vec::len).max().unwrap_or(0);
    let rest = indices.len() - largest;
    if largest > rest {
        return Err(Error::DominanceViolated { largest, rest });
    }
    let mut queues: Vec<(usize, std::collections::VecDeque<usize>)> =
        by_block.into_iter().map(|(b, v)| (b, v.into())).collect();
    let mut order = Vec::with_capacity(indices.len());
    let mut previous = None;
    while order.len() < indices.len() {
        let pick = queues
            .iter()
            .enumerate()
            .filter(|(_, (b, q))| !q.is_empty() && Some(*b) != previous)
            .max_by(|(_, (b1, q1)), (_, (b2, q2))| q1.len().cmp(&q2.len()).then(b2.cmp(b1)))
            .map(|(i, _)| i)
            .expect("dominance leaves a different block available");
        let (block, queue) = &mut queues[pick];
        order.push(queue.pop_front().expect("nonempty"));
        previous = Some(*block);
    }
    Ok(order)
}

/// Permutation of `0..n` with adjacent entries of a distinct.
pub fn anchored_permutation(setup: &OrbitSetup) -> Result<Vec<usize>> {
    anchored_order(&(0..setup.n).collect::<Vec<_>>(), &setup.block_of)
}

fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    e[(i, j)] = C64::new(1.0, 0.0);
    e
}

/// `Σ_{α∈π} c_α E_{−α} + Σ_β d_β E_β` with β ranging over the given roots,
/// which must be positive for the chain order and lie in `Δ_m`.
pub fn build_x_pi(datum: &RootDatum, simple_coeffs: &[C64], positive: &[(Root, C64)]) -> Result<CMatrix> {
    let chains = datum
        .chains
        .as_ref()
        .ok_or_else(|| Error::Precondition("no anchored simple system: reduce first".into()))?;
    if simple_coeffs.len() != datum.simple.len() {
        return Err(Error::DimensionMismatch { expected: datum.simple.len(), found: simple_coeffs.len() });
    }
    let position: std::collections::HashMap<usize, (usize, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(c, chain)| chain.iter().enumerate().map(move |(p, &i)| (i, (c, p))))
        .collect();
    let n = datum.n;
    let mut x = CMatrix::zeros(n, n);
    for (&(j, k), &c) in datum.simple.iter().zip(simple_coeffs) {
        if c == C64::new(0.0, 0.0) {
            return Err(Error::ZeroCoefficient(j, k));
        }
        x += unit(n, k, j) * c;
    }
    for &((j, k), d) in positive {
        let positive_root = matches!((position.get(&j), position.get(&k)), (Some(a), Some(b)) if a.0 == b.0 && a.1 < b.1);
        if !positive_root || !datum.delta_m.contains(&(j, k)) {
            return Err(Error::InvalidArgument(format!("({j}, {k}) is not a positive root outside the isotropy")));
        }
        x += unit(n, j, k) * d;
    }
    Ok(x)
}

/// `c_α = −1`, `d_β = 1` on simple roots: the real skew matrix `Σ (E_α − E_{−α})`.
pub fn default_x_pi(datum: &RootDatum) -> Result<LieElement> {
    let minus_one = vec![C64::new(-1.0, 0.0); datum.simple.len()];
    let positive: Vec<(Root, C64)> = datum.simple.iter().map(|&r| (r, C64::new(1.0, 0.0))).collect();
    LieElement::from_matrix(build_x_pi(datum, &minus_one, &positive)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct PencilRegularity {
    pub expected: usize,
    pub dims: Vec<usize>,
    pub regular: bool,
}

/// Complex centralizer of `x + λa` in `algebra ⊗ ℂ` has dimension `rank` at
/// λ = 0, ±1, ±i and `n_lambda` annulus samples.
pub fn verify_regular_pencil(
    algebra: &RealSubspace,
    rank: usize,
    a: &LieElement,
    x: &CMatrix,
    n_lambda: usize,
    seed: u64,
) -> PencilRegularity {
    let rule = crate::subspace::RankRule::default();
    let complex = algebra.complexify();
    let ad_x = ad_complex(x);
    let ad_a = ad_complex(a.matrix());
    let (norm_x, norm_a) = (spectral_norm(&ad_x), spectral_norm(&ad_a));
    let dims: Vec<usize> = lambda_schedule(n_lambda, seed)
        .into_par_iter()
        .map(|lambda| {
            let map: DMatrix<C64> = &ad_x + &ad_a * lambda;
            complex.kernel_within_scaled(&map, rule, norm_x + lambda.norm() * norm_a).dim()
        })
        .collect();
    PencilRegularity { expected: rank, regular: dims.iter().all(|&d| d == rank), dims }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::{partitions, standard_setup, Space};

    #[test]
    fn split_sizes() {
        let d = root_split(&standard_setup(&[1, 1, 1]).unwrap());
        assert_eq!((d.roots.len(), d.delta_k.len(), d.delta_m.len()), (6, 0, 6));
        let d = root_split(&standard_setup(&[1, 1, 2]).unwrap());
        assert_eq!(d.delta_k, vec![(2, 3), (3, 2)]);
        assert_eq!(d.delta_m.len(), 10);
        let d = root_split(&standard_setup(&[2, 2]).unwrap());
        assert_eq!((d.delta_k.len(), d.delta_m.len()), (4, 8));
    }

    #[test]
    fn permutations() {
        assert_eq!(anchored_permutation(&standard_setup(&[1, 1, 1]).unwrap()).unwrap(), vec![0, 1, 2]);
        let s = standard_setup(&[1, 1, 2]).unwrap();
        let perm = anchored_permutation(&s).unwrap();
        let values = s.a_values();
        assert!(perm.windows(2).all(|w| values[w[0]] != values[w[1]]));
        assert!(matches!(
            anchored_permutation(&standard_setup(&[1, 3]).unwrap()),
            Err(Error::DominanceViolated { largest: 3, rest: 1 })
        ));
    }

    #[test]
    fn default_x_pi_examples() {
        let s = standard_setup(&[1, 1]).unwrap();
        let x = default_x_pi(&root_split(&s)).unwrap();
        assert!(x.sub(&s.unit(crate::lie::Slot::Real(0, 1)).scale(2f64.sqrt())).norm() < 1e-14);

        let s = standard_setup(&[1, 1, 1]).unwrap();
        let x = default_x_pi(&root_split(&s)).unwrap();
        let mut expect = DMatrix::<f64>::zeros(3, 3);
        expect[(0, 1)] = 1.0;
        expect[(1, 0)] = -1.0;
        expect[(1, 2)] = 1.0;
        expect[(2, 1)] = -1.0;
        assert_eq!(x, LieElement::from_real_skew(&expect).unwrap());
        assert!(s.m_tilde.residual(x.coords()) < 1e-12);
    }

    #[test]
    fn zero_coefficient_rejected() {
        let d = root_split(&standard_setup(&[1, 1, 1]).unwrap());
        let coeffs = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!(matches!(build_x_pi(&d, &coeffs, &[]), Err(Error::ZeroCoefficient(1, 2))));
        assert!(build_x_pi(&d, &coeffs[..1], &[]).is_err());
        let ok = [C64::new(2.0, 1.0), C64::new(-0.5, 0.0)];
        assert!(build_x_pi(&d, &ok, &[((0, 2), C64::new(0.0, 3.0))]).is_ok());
        assert!(build_x_pi(&d, &ok, &[((2, 0), C64::new(1.0, 0.0))]).is_err());
    }

    #[test]
    fn x_pi_is_a_real_point_of_m() {
        for n in 2..=6 {
            for mults in partitions(n) {
                let s = standard_setup(&mults).unwrap();
                if !s.is_dominated() {
                    continue;
                }
                let x = default_x_pi(&root_split(&s)).unwrap();
                assert_eq!(crate::lie::sigma(&x), x);
                assert!(s.m_tilde.residual(x.coords()) < 1e-12, "{mults:?}");
            }
        }
    }

    #[test]
    fn regular_pencils() {
        for mults in [&[1, 1, 2][..], &[1, 1, 1][..]] {
            let s = standard_setup(mults).unwrap();
            let x = default_x_pi(&root_split(&s)).unwrap();
            assert!(verify_regular_pencil(&s.g, s.n, &s.a, x.matrix(), 20, 1).regular);
        }
        let s = standard_setup(&[1, 1, 2]).unwrap();
        let zero = CMatrix::zeros(4, 4);
        let report = verify_regular_pencil(&s.g, 4, &s.a, &zero, 20, 1);
        assert!(!report.regular);
        assert_eq!(report.dims[1], 6);
    }

    #[test]
    fn agrees_with_kronecker_membership() {
        let s = standard_setup(&[1, 1, 1]).unwrap();
        let pair = s.pair(Space::M);
        let dims = crate::geometry::estimate_generic_dims(pair, 25, 2).unwrap();
        let x = default_x_pi(&root_split(&s)).unwrap();
        let verdict = crate::pencil::kronecker_test(pair, &s.a, &x, &dims, 20, 2).unwrap();
        let regular = verify_regular_pencil(&s.g, s.n, &s.a, x.matrix(), 20, 2);
        assert!(verdict.in_okr);
        assert_eq!(verdict.in_ma, regular.regular);
    }

    #[test]
    fn nonreal_coefficients_also_regular() {
        let s = standard_setup(&[1, 2, 2]).unwrap();
        let d = root_split(&s);
        let c: Vec<C64> = (0..d.simple.len()).map(|i| C64::new(1.0 + i as f64, 0.5)).collect();
        let x = build_x_pi(&d, &c, &[]).unwrap();
        assert!(verify_regular_pencil(&s.g, s.n, &s.a, &x, 20, 3).regular);
    }
}
