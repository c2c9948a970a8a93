//! Explicit real point `x₀ ∈ m̃` whose isotropy in k is as small as the block
//! sizes allow.  Blocks are processed in ascending size; the chain of
//! "diagonal" elements in consecutive block modules cuts the isotropy down to
//! a torus times `u(n_p − n_{p−1})`, a Gaussian block kills the torus, and an
//! identity-pattern block shrinks the unitary factor.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{centralizer, LieElement};
use crate::sampling::{rng_for, Purpose};
use crate::setup::OrbitSetup;

#[derive(Clone, Debug, Serialize)]
pub struct WitnessTrace {
    /// Original block label at each position of the ascending order.
    pub block_order: Vec<usize>,
    pub sorted_multiplicities: Vec<usize>,
    /// Sizes of all blocks but the last, and all but the last two.
    pub leading_total: usize,
    pub lower_total: usize,
    /// Torus left by the diagonal chain, and the free unitary factor.
    pub torus_dim: usize,
    pub free_block: usize,
    /// Gaussian block (rows × cols) and identity-pattern block.
    pub generic_shape: (usize, usize),
    pub pattern_shape: (usize, usize),
    pub chain_entries: Vec<f64>,
    pub expected_isotropy_dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    #[serde(skip)]
    pub x0: LieElement,
    pub isotropy_dim: usize,
    pub trace: WitnessTrace,
}

/// Predicted `dim k^{x₀}` for ascending multiplicities.
pub fn expected_isotropy_dim(sorted: &[usize]) -> usize {
    let p = sorted.len();
    if p == 2 {
        let (n1, n2) = (sorted[0], sorted[1]);
        return n1 + (n2 - n1).pow(2);
    }
    let lower: usize = sorted[..p - 2].iter().sum();
    let free = sorted[p - 1] - sorted[p - 2];
    if lower >= free {
        1
    } else {
        1 + (free - lower).pow(2)
    }
}

pub fn build_witness_x0(setup: &OrbitSetup, seed: u64) -> Result<Witness> {
    let p = setup.p();
    if p < 2 {
        return Err(Error::Precondition("witness needs at least two blocks".into()));
    }
    let n = setup.n;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by_key(|&b| setup.multiplicities[b]);
    let sizes: Vec<usize> = order.iter().map(|&b| setup.multiplicities[b]).collect();
    let offsets: Vec<usize> = setup
        .multiplicities
        .iter()
        .scan(0, |acc, &m| {
            let start = *acc;
            *acc += m;
            Some(start)
        })
        .collect();
    // row index of local entry `i` in the `t`-th smallest block
    let index = |t: usize, i: usize| offsets[order[t]] + i;

    let mut x = DMatrix::<f64>::zeros(n, n);
    let mut put = |r: usize, c: usize, v: f64| {
        x[(r, c)] = v;
        x[(c, r)] = -v;
    };

    // distinct entries keep the chain's isotropy a torus when blocks have size > 1
    let chain_entries: Vec<f64> = (1..=sizes[p - 2]).map(|i| i as f64).collect();
    for (t, &size) in sizes.iter().enumerate().take(p - 1) {
        for (i, &d) in chain_entries.iter().enumerate().take(size) {
            put(index(t, i), index(t + 1, i), d);
        }
    }

    let lower: usize = sizes[..p - 2].iter().sum();
    let torus = sizes[p - 2];
    let free = sizes[p - 1] - sizes[p - 2];
    let mut generic_shape = (0, 0);
    let mut pattern_shape = (0, 0);
    if p >= 3 {
        let mut rng = rng_for(seed, Purpose::Witness, 0);
        let rows: Vec<usize> = (0..p - 2).flat_map(|t| (0..sizes[t]).map(move |i| (t, i))).map(|(t, i)| index(t, i)).collect();
        for &r in &rows {
            for c in 0..torus {
                put(r, index(p - 1, c), StandardNormal.sample(&mut rng));
            }
        }
        for (row, &r) in rows.iter().enumerate().take(free) {
            put(r, index(p - 1, torus + row), 1.0);
        }
        generic_shape = (rows.len(), torus);
        pattern_shape = (rows.len(), free);
    }

    let x0 = LieElement::from_real_skew(&x)?;
    let isotropy_dim = centralizer(&x0, &setup.k, setup.rule).dim();
    Ok(Witness {
        x0,
        isotropy_dim,
        trace: WitnessTrace {
            block_order: order,
            sorted_multiplicities: sizes.clone(),
            leading_total: sizes[..p - 1].iter().sum(),
            lower_total: lower,
            torus_dim: torus,
            free_block: free,
            generic_shape,
            pattern_shape,
            chain_entries,
            expected_isotropy_dim: expected_isotropy_dim(&sizes),
        },
    })
}
