//! End-to-end verification of one partition: the Kronecker verdict at a
//! sampled real point, completeness of the real family there, and the two
//! independent routes (moment-map criterion, `x_π`) that must agree with it.
//! Partitions where the isotropy of a generic point is bigger than the
//! centre go through one reduction step first.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::{conservation_report, integrate_flow, ConservationReport, FlowSpec};
use crate::geometry::{
    estimate_generic_dims, is_in_r, perturb_into_regular, reduction_data, Anchor, GenericDims, ReductionReport,
};
use crate::invariants::{completeness_check, CompletenessReport, IntegralFamily};
use crate::lie::LieElement;
use crate::moment::{m_a_estimate, regular_in_kprime, MaEstimate, MomentData, RegularityReport};
use crate::pencil::{centralizer_jumps, kronecker_test, KroneckerVerdict};
use crate::roots::{default_x_pi, root_split_on, verify_regular_pencil, PencilRegularity};
use crate::sampling::{random_in, rng_for, Purpose};
use crate::setup::{build_setup_with, AlgebraPair, OrbitSetup, Space};
use crate::subspace::RankRule;
use crate::witness::{build_witness_x0, Witness};

#[derive(Clone, Debug, Serialize)]
pub struct Budgets {
    pub dim_samples: usize,
    /// Real points tried before giving up on a Kronecker witness.
    pub points: usize,
    pub lambda_samples: usize,
    pub moment_samples: usize,
    pub flow_steps: usize,
    pub flow_dt: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { dim_samples: 25, points: 10, lambda_samples: 20, moment_samples: 12, flow_steps: 1000, flow_dt: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseConfig {
    pub multiplicities: Vec<usize>,
    pub spectrum: Vec<f64>,
    pub b_spectrum: Option<Vec<f64>>,
    pub seed: u64,
    pub budgets: Budgets,
    pub rank_tolerance: f64,
}

impl CaseConfig {
    pub fn new(multiplicities: &[usize], spectrum: &[f64], seed: u64) -> Self {
        Self {
            multiplicities: multiplicities.to_vec(),
            spectrum: spectrum.to_vec(),
            b_spectrum: None,
            seed,
            budgets: Budgets::default(),
            rank_tolerance: RankRule::default().eps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Conclusion {
    /// A real Kronecker point with a complete real family was found, and
    /// both cross-checks agree.
    Confirmed,
    /// Same, established on the reduced algebra and on the full one.
    ReducedPathUsed,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CasePath {
    Direct,
    Reduced,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentSummary {
    pub m_a: MaEstimate,
    pub r: usize,
    pub criterion_holds: bool,
    pub regularity: RegularityReport,
    /// `m_a(m̃) = r(m)` exactly when k′ has regular elements.
    pub biconditional: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct XPiSummary {
    pub chains: Vec<Vec<usize>>,
    pub coords: Vec<f64>,
    pub pencil: PencilRegularity,
}

/// Evidence gathered on one pair (the full one, or the reduced one).
#[derive(Clone, Debug, Serialize)]
pub struct Evidence {
    pub dims_m: GenericDims,
    pub dims_m_tilde: GenericDims,
    pub points_sampled: usize,
    pub okr_hits: usize,
    pub complete_hits: usize,
    /// Coordinates of the first point that is Kronecker with a complete real family.
    pub witness_point: Option<Vec<f64>>,
    pub kronecker: Option<KroneckerVerdict>,
    pub completeness: Option<CompletenessReport>,
    /// Finite λ where the centralizer of `x + λa` jumps, at the witness point.
    pub locus_jumps: Vec<[f64; 2]>,
    pub moment: Option<MomentSummary>,
    pub x_pi: Option<XPiSummary>,
    pub witnessed: bool,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionSummary {
    pub anchor: Anchor,
    pub anchor_coords: Vec<f64>,
    pub report: ReductionReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowSummary {
    pub b_spectrum: Vec<f64>,
    pub phi_spectrum: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
    pub conservation: Option<ConservationReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationCase {
    pub multiplicities: Vec<usize>,
    pub spectrum: Vec<f64>,
    pub seed: u64,
    pub path: CasePath,
    pub witness: Option<Witness>,
    pub witness_coords: Option<Vec<f64>>,
    pub reduction: Option<ReductionSummary>,
    /// Evidence on the full pair (always gathered).
    pub full: Evidence,
    /// Evidence on the reduced pair, when the reduced path was taken.
    pub reduced: Option<Evidence>,
    pub flow: Option<FlowSummary>,
    pub notes: Vec<String>,
    pub conclusion: Conclusion,
}

/// Pairs and ambient data that the evidence routine needs.
struct Stage<'a> {
    pair_m: &'a AlgebraPair,
    pair_m_tilde: &'a AlgebraPair,
    components: Vec<Vec<usize>>,
    rank: usize,
}

fn gather_evidence(
    setup: &OrbitSetup,
    stage: &Stage,
    budgets: &Budgets,
    seed: u64,
    cross_checks: bool,
) -> Result<Evidence> {
    let a = &setup.a;
    let dims_m = estimate_generic_dims(stage.pair_m, budgets.dim_samples, seed)?;
    let dims_mt = estimate_generic_dims(stage.pair_m_tilde, budgets.dim_samples, seed)?;
    let mut evidence = Evidence {
        dims_m,
        dims_m_tilde: dims_mt,
        points_sampled: 0,
        okr_hits: 0,
        complete_hits: 0,
        witness_point: None,
        kronecker: None,
        completeness: None,
        locus_jumps: Vec::new(),
        moment: None,
        x_pi: None,
        witnessed: false,
        consistent: false,
    };
    if !dims_m.stabilized || !dims_mt.stabilized {
        return Ok(evidence);
    }

    let real_space = &stage.pair_m_tilde.complement;
    let family = IntegralFamily::for_pair(stage.pair_m_tilde, a, seed);
    let verdicts: Vec<(LieElement, KroneckerVerdict, Option<CompletenessReport>)> = (0..budgets.points)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let x = random_in(real_space, setup.n, &mut rng_for(seed, Purpose::Points, i as u64));
            let verdict = kronecker_test(stage.pair_m, a, &x, &dims_m, budgets.lambda_samples, seed ^ i as u64)?;
            let complete = if is_in_r(stage.pair_m_tilde, &x, &dims_mt)? {
                Some(completeness_check(stage.pair_m_tilde, &family, a, &x, &dims_mt)?)
            } else {
                None
            };
            Ok((x, verdict, complete))
        })
        .collect::<Result<_>>()?;
    evidence.points_sampled = verdicts.len();
    evidence.okr_hits = verdicts.iter().filter(|v| v.1.in_okr).count();
    evidence.complete_hits = verdicts.iter().filter(|v| v.2.as_ref().is_some_and(|c| c.complete)).count();
    if let Some((x, verdict, complete)) = verdicts
        .into_iter()
        .find(|(_, v, c)| v.in_okr && c.as_ref().is_some_and(|c| c.complete))
    {
        evidence.locus_jumps = centralizer_jumps(&stage.pair_m.algebra, a, &x, setup.rule, seed)
            .iter()
            .map(|z| [z.re, z.im])
            .collect();
        evidence.witness_point = Some(x.coords().iter().copied().collect());
        evidence.kronecker = Some(verdict);
        evidence.completeness = complete;
        evidence.witnessed = true;
    }
    if !cross_checks {
        evidence.consistent = evidence.witnessed;
        return Ok(evidence);
    }

    let moment = MomentData::new(stage.pair_m, a)?;
    let m_a = m_a_estimate(&moment, real_space, &dims_m, budgets.moment_samples, seed)?;
    let regularity = regular_in_kprime(stage.pair_m, 5, seed);
    let criterion_holds = m_a.value == dims_m.r;
    evidence.moment = Some(MomentSummary {
        biconditional: criterion_holds == regularity.regular,
        criterion_holds,
        r: dims_m.r,
        m_a,
        regularity,
    });

    let datum = root_split_on(setup, &stage.components);
    if datum.chains.is_some() {
        let x_pi = default_x_pi(&datum)?;
        let pencil = verify_regular_pencil(&stage.pair_m.algebra, stage.rank, a, x_pi.matrix(), budgets.lambda_samples, seed);
        evidence.x_pi = Some(XPiSummary {
            chains: datum.chains.clone().unwrap_or_default(),
            coords: x_pi.coords().iter().copied().collect(),
            pencil,
        });
    }
    let moment_ok = evidence.moment.as_ref().is_some_and(|m| m.criterion_holds && m.regularity.regular && m.m_a.routes_agree);
    let x_pi_ok = evidence.x_pi.as_ref().is_some_and(|x| x.pencil.regular);
    evidence.consistent = evidence.witnessed && moment_ok && x_pi_ok;
    Ok(evidence)
}

fn coords(x: &LieElement) -> Vec<f64> {
    x.coords().iter().copied().collect()
}

fn run_flow(setup: &OrbitSetup, b: &[f64], start: &[f64], budgets: &Budgets) -> Result<FlowSummary> {
    let spec = FlowSpec::new(setup, Space::MTilde, b)?;
    let x = LieElement::from_coords(setup.n, nalgebra::DVector::from_column_slice(start))?;
    let x = if x.norm() > 0.0 { x.scale(1.0 / x.norm()) } else { x };
    let family = IntegralFamily::for_pair(setup.pair(Space::MTilde), &setup.a, 0);
    let stride = (budgets.flow_steps / 100).max(1);
    let (conservation, error) = match integrate_flow(&spec, &x, budgets.flow_dt, budgets.flow_steps, stride) {
        Ok(traj) => (Some(conservation_report(&spec, &traj, &family)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(FlowSummary {
        b_spectrum: b.to_vec(),
        phi_spectrum: spec.phi_spectrum(),
        steps: budgets.flow_steps,
        dt: budgets.flow_dt,
        conservation,
        error,
    })
}

pub fn run_case(config: &CaseConfig) -> Result<VerificationCase> {
    let rule = RankRule::new(config.rank_tolerance)?;
    let setup = build_setup_with(&config.multiplicities, &config.spectrum, rule)?;
    if let Some(b) = &config.b_spectrum {
        if b.len() != setup.p() {
            return Err(Error::InvalidArgument(format!("b spectrum needs {} values, got {}", setup.p(), b.len())));
        }
    }
    let seed = config.seed;
    let budgets = &config.budgets;
    let mut notes = Vec::new();
    if setup.p() == 2 {
        notes.push("two blocks: the real suborbit is a symmetric space".to_string());
    }

    let full_stage = Stage {
        pair_m: setup.pair(Space::M),
        pair_m_tilde: setup.pair(Space::MTilde),
        components: vec![(0..setup.n).collect()],
        rank: setup.n,
    };
    let dims_m = estimate_generic_dims(full_stage.pair_m, budgets.dim_samples, seed)?;
    let direct = setup.is_dominated() && dims_m.stabilized && dims_m.p == full_stage.pair_m.center.dim();

    let mut case = VerificationCase {
        multiplicities: config.multiplicities.clone(),
        spectrum: config.spectrum.clone(),
        seed,
        path: if direct { CasePath::Direct } else { CasePath::Reduced },
        witness: None,
        witness_coords: None,
        reduction: None,
        full: gather_evidence(&setup, &full_stage, budgets, seed, direct)?,
        reduced: None,
        flow: None,
        notes,
        conclusion: Conclusion::Inconclusive,
    };

    if direct {
        if case.full.consistent {
            case.conclusion = Conclusion::Confirmed;
        }
    } else {
        if !setup.is_dominated() {
            case.notes.push("largest block exceeds the others combined".to_string());
        } else {
            case.notes.push(format!(
                "generic isotropy has dimension {} > centre dimension {}",
                dims_m.p,
                full_stage.pair_m.center.dim()
            ));
        }
        reduce_and_verify(&setup, config, &mut case)?;
    }

    if let (Some(b), Some(start)) = (&config.b_spectrum, case.full.witness_point.clone()) {
        case.flow = Some(run_flow(&setup, b, &start, budgets)?);
    }
    Ok(case)
}

fn reduce_and_verify(setup: &OrbitSetup, config: &CaseConfig, case: &mut VerificationCase) -> Result<()> {
    let seed = config.seed;
    let budgets = &config.budgets;
    let witness = build_witness_x0(setup, seed)?;
    case.witness_coords = Some(coords(&witness.x0));
    let dims_m = case.full.dims_m;
    let dims_mt = case.full.dims_m_tilde;
    if !dims_m.stabilized || !dims_mt.stabilized {
        case.notes.push("generic dimensions did not stabilize".to_string());
        case.witness = Some(witness);
        return Ok(());
    }
    let anchor = match perturb_into_regular(setup, &witness.x0, &dims_m, &dims_mt, seed) {
        Ok(anchor) => anchor,
        Err(Error::Precondition(msg)) => {
            case.notes.push(msg);
            case.witness = Some(witness);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let reduced = reduction_data(setup, &anchor.x0, &dims_m, &dims_mt, 5, seed)?;
    case.reduction = Some(ReductionSummary {
        anchor_coords: coords(&anchor.x0),
        anchor,
        report: reduced.report.clone(),
    });
    case.witness = Some(witness);

    let pair_m0 = reduced.pair(Space::M);
    let stage = Stage {
        pair_m: pair_m0,
        pair_m_tilde: reduced.pair(Space::MTilde),
        components: reduced.report.components.clone(),
        rank: reduced.rank(),
    };
    let dims_m0 = estimate_generic_dims(pair_m0, budgets.dim_samples, seed)?;
    if dims_m0.p != pair_m0.center.dim() {
        case.notes.push(format!(
            "reduced isotropy still exceeds the centre ({} > {}); one reduction step is the limit",
            dims_m0.p,
            pair_m0.center.dim()
        ));
        return Ok(());
    }
    let evidence = gather_evidence(setup, &stage, budgets, seed, true)?;
    let structure_ok = reduced.report.closure_residual < 1e-10
        && reduced.report.sigma_residual < 1e-10
        && reduced.report.contains_a
        && reduced.report.r_reduced == reduced.report.r_full;
    if !structure_ok {
        case.notes.push("reduction structure checks failed".to_string());
    }
    if evidence.consistent && structure_ok && case.full.witnessed {
        case.conclusion = Conclusion::ReducedPathUsed;
    }
    case.reduced = Some(evidence);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(mults: &[usize]) -> VerificationCase {
        let spectrum: Vec<f64> = (1..=mults.len()).map(|v| v as f64).collect();
        run_case(&CaseConfig::new(mults, &spectrum, 42)).unwrap()
    }

    #[test]
    fn dominated_case_confirmed() {
        let case = run(&[1, 1, 2]);
        assert_eq!(case.path, CasePath::Direct);
        assert_eq!(case.conclusion, Conclusion::Confirmed);
        let moment = case.full.moment.as_ref().unwrap();
        assert_eq!(moment.m_a.value, 3);
        assert!(moment.biconditional);
        assert!(case.full.locus_jumps.is_empty());
    }

    #[test]
    fn dominant_block_reduces() {
        let case = run(&[1, 1, 4]);
        assert_eq!(case.path, CasePath::Reduced);
        assert_eq!(case.conclusion, Conclusion::ReducedPathUsed, "{:?}", case.notes);
        let rep = &case.reduction.as_ref().unwrap().report;
        assert_eq!((rep.dim_g0, rep.r_reduced), (17, 3));
    }

    #[test]
    fn two_blocks_carry_the_symmetric_note() {
        let case = run(&[1, 1]);
        assert_eq!(case.conclusion, Conclusion::Confirmed);
        assert!(case.notes.iter().any(|n| n.contains("symmetric")));
        let case = run(&[1, 3]);
        assert_eq!(case.conclusion, Conclusion::ReducedPathUsed, "{:?}", case.notes);
    }

    #[test]
    fn equal_blocks_reduce_despite_dominance() {
        let case = run(&[2, 2]);
        assert_eq!(case.path, CasePath::Reduced);
        assert_eq!(case.conclusion, Conclusion::ReducedPathUsed, "{:?}", case.notes);
    }

    #[test]
    fn flow_summary_attached() {
        let mut config = CaseConfig::new(&[1, 1, 2], &[1.0, 2.0, 3.0], 1);
        config.b_spectrum = Some(vec![1.0, 3.0, 7.0]);
        config.budgets.flow_steps = 200;
        let case = run_case(&config).unwrap();
        let flow = case.flow.unwrap();
        assert!(flow.conservation.unwrap().max_drift < 1e-8);
        config.b_spectrum = Some(vec![1.0]);
        assert!(run_case(&config).is_err());
    }
}
