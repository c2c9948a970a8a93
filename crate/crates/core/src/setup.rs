//! The orbit of a block-scalar diagonal element `a ∈ u(n)`: its isotropy
//! algebra, the conjugation splittings, and the block modules.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::{ad_real, basis_matrix, slot_index, slots, LieElement, Slot, C64};
use crate::subspace::{RankRule, RealSubspace};

/// Which complement a computation runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Complement of the isotropy algebra in u(n).
    M,
    /// Its real part, inside so(n).
    MTilde,
}

/// An ambient algebra, a subalgebra, and the orthogonal complement
/// `complement = isotropy^⊥ ∩ algebra`.  Both the orbit of `a` and the
/// reductions built from it are handled through this one shape.
#[derive(Clone, Debug)]
pub struct AlgebraPair {
    pub n: usize,
    pub algebra: RealSubspace,
    pub isotropy: RealSubspace,
    pub complement: RealSubspace,
    pub center: RealSubspace,
    pub rule: RankRule,
}

impl AlgebraPair {
    pub fn new(n: usize, algebra: RealSubspace, isotropy: RealSubspace, rule: RankRule) -> Self {
        let complement = isotropy.complement_within(&algebra, rule);
        let center = center_of(n, &algebra, rule);
        Self {
            n,
            algebra,
            isotropy,
            complement,
            center,
            rule,
        }
    }
}

/// `{y ∈ algebra : [y, algebra] = 0}`.
pub fn center_of(n: usize, algebra: &RealSubspace, rule: RankRule) -> RealSubspace {
    if algebra.dim() == 0 {
        return algebra.clone();
    }
    let d = n * n;
    let mut stacked = DMatrix::zeros(d * algebra.dim(), d);
    for i in 0..algebra.dim() {
        let g = LieElement::from_coords_unchecked(n, algebra.vector(i));
        stacked.rows_mut(i * d, d).copy_from(&ad_real(&g));
    }
    // unit basis vectors, so an abelian algebra is not judged against rounding noise
    algebra.kernel_within_scaled(&stacked, rule, crate::subspace::spectral_norm(&stacked).max(1.0))
}

#[derive(Clone, Debug)]
pub struct OrbitSetup {
    pub n: usize,
    pub multiplicities: Vec<usize>,
    pub spectrum: Vec<f64>,
    pub a: LieElement,
    /// Block label of each row index.
    pub block_of: Vec<usize>,
    pub g: RealSubspace,
    pub g_tilde: RealSubspace,
    pub g_prime: RealSubspace,
    pub k: RealSubspace,
    pub m: RealSubspace,
    pub k_tilde: RealSubspace,
    pub k_prime: RealSubspace,
    pub m_tilde: RealSubspace,
    pub m_prime: RealSubspace,
    pub z_of_k: RealSubspace,
    /// `V^{k,l}` for block labels k ≤ l.
    pub blocks: BTreeMap<(usize, usize), RealSubspace>,
    pub rule: RankRule,
    pair_m: AlgebraPair,
    pair_m_tilde: AlgebraPair,
}

pub fn validate_partition(multiplicities: &[usize], spectrum: &[f64]) -> Result<()> {
    if multiplicities.is_empty() {
        return Err(Error::InvalidPartition("no blocks given".into()));
    }
    if multiplicities.contains(&0) {
        return Err(Error::InvalidPartition("multiplicities must be positive".into()));
    }
    if multiplicities.iter().sum::<usize>() < 2 {
        return Err(Error::InvalidPartition("total size must be at least 2".into()));
    }
    if spectrum.len() != multiplicities.len() {
        return Err(Error::InvalidPartition(format!(
            "{} spectrum values for {} blocks",
            spectrum.len(),
            multiplicities.len()
        )));
    }
    if let Some(bad) = spectrum.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidPartition(format!("non-finite spectrum value {bad}")));
    }
    for (i, &u) in spectrum.iter().enumerate() {
        if spectrum[..i].contains(&u) {
            return Err(Error::DuplicateSpectrum(u));
        }
    }
    Ok(())
}

/// Integer partitions of `n` into at least two parts, parts ascending.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(left: usize, min_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            if prefix.len() >= 2 {
                out.push(prefix.clone());
            }
            return;
        }
        for part in min_part..=left {
            prefix.push(part);
            extend(left - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(n, 1, &mut Vec::new(), &mut out);
    out
}

/// Setup with spectrum `1, 2, …, p`.
pub fn standard_setup(multiplicities: &[usize]) -> Result<OrbitSetup> {
    let spectrum: Vec<f64> = (1..=multiplicities.len()).map(|v| v as f64).collect();
    build_setup(multiplicities, &spectrum)
}

pub fn build_setup(multiplicities: &[usize], spectrum: &[f64]) -> Result<OrbitSetup> {
    build_setup_with(multiplicities, spectrum, RankRule::default())
}

pub fn build_setup_with(multiplicities: &[usize], spectrum: &[f64], rule: RankRule) -> Result<OrbitSetup> {
    validate_partition(multiplicities, spectrum)?;
    let n: usize = multiplicities.iter().sum();
    let block_of: Vec<usize> = multiplicities
        .iter()
        .enumerate()
        .flat_map(|(b, &m)| std::iter::repeat_n(b, m))
        .collect();

    let diag = DVector::from_iterator(n, block_of.iter().map(|&b| C64::new(0.0, spectrum[b])));
    let a = LieElement::from_matrix(DMatrix::from_diagonal(&diag))?;

    let all = slots(n);
    let select = |keep: &dyn Fn(Slot, bool) -> bool| {
        let axes: Vec<usize> = all
            .iter()
            .enumerate()
            .filter(|(_, &s)| {
                let (j, k) = s.indices();
                keep(s, block_of[j] == block_of[k])
            })
            .map(|(i, _)| i)
            .collect();
        RealSubspace::coordinate(n * n, &axes)
    };

    let g = RealSubspace::full(n * n);
    let g_tilde = select(&|s, _| s.is_real());
    let g_prime = select(&|s, _| !s.is_real());
    let k = select(&|_, same| same);
    let m = select(&|_, same| !same);
    let k_tilde = select(&|s, same| same && s.is_real());
    let k_prime = select(&|s, same| same && !s.is_real());
    let m_tilde = select(&|s, same| !same && s.is_real());
    let m_prime = select(&|s, same| !same && !s.is_real());

    let p = multiplicities.len();
    let mut z_basis = DMatrix::zeros(n * n, p);
    for (j, &b) in block_of.iter().enumerate() {
        z_basis[(slot_index(n, Slot::Diag(j)), b)] = 1.0 / (multiplicities[b] as f64).sqrt();
    }
    let z_of_k = RealSubspace::from_orthonormal(z_basis);

    let mut blocks = BTreeMap::new();
    for lo in 0..p {
        for hi in lo..p {
            let axes: Vec<usize> = all
                .iter()
                .enumerate()
                .filter(|(_, &s)| {
                    let (j, k) = s.indices();
                    let (bj, bk) = (block_of[j], block_of[k]);
                    (bj.min(bk), bj.max(bk)) == (lo, hi)
                })
                .map(|(i, _)| i)
                .collect();
            blocks.insert((lo, hi), RealSubspace::coordinate(n * n, &axes));
        }
    }

    let pair_m = AlgebraPair::new(n, g.clone(), k.clone(), rule);
    let pair_m_tilde = AlgebraPair::new(n, g_tilde.clone(), k_tilde.clone(), rule);

    Ok(OrbitSetup {
        n,
        multiplicities: multiplicities.to_vec(),
        spectrum: spectrum.to_vec(),
        a,
        block_of,
        g,
        g_tilde,
        g_prime,
        k,
        m,
        k_tilde,
        k_prime,
        m_tilde,
        m_prime,
        z_of_k,
        blocks,
        rule,
        pair_m,
        pair_m_tilde,
    })
}

impl OrbitSetup {
    pub fn p(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn pair(&self, space: Space) -> &AlgebraPair {
        match space {
            Space::M => &self.pair_m,
            Space::MTilde => &self.pair_m_tilde,
        }
    }

    pub fn space(&self, space: Space) -> &RealSubspace {
        match space {
            Space::M => &self.m,
            Space::MTilde => &self.m_tilde,
        }
    }

    /// Eigenvalue λ of `a = diag(iλ, …)` at each row index.
    pub fn a_values(&self) -> Vec<f64> {
        self.block_of.iter().map(|&b| self.spectrum[b]).collect()
    }

    /// The largest block is at most the sum of the others.
    pub fn is_dominated(&self) -> bool {
        let largest = *self.multiplicities.iter().max().unwrap_or(&0);
        largest <= self.n - largest
    }

    /// Block-scalar diagonal `diag(iμ_b)` with the block structure of `a`.
    pub fn block_scalar(&self, values: &[f64]) -> Result<LieElement> {
        if values.len() != self.p() {
            return Err(Error::InvalidArgument(format!(
                "expected {} block values, got {}",
                self.p(),
                values.len()
            )));
        }
        let diag = DVector::from_iterator(self.n, self.block_of.iter().map(|&b| C64::new(0.0, values[b])));
        LieElement::from_matrix(DMatrix::from_diagonal(&diag))
    }

    /// Real coordinates of a matrix unit combination, for building test data.
    pub fn unit(&self, slot: Slot) -> LieElement {
        LieElement::from_skew_part(&basis_matrix(self.n, slot))
    }
}
