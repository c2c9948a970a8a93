//! The operator `φ(x) = ad_a⁻¹[b, x]`, its quadratic Hamiltonian, and the
//! flow `ẋ = [x, φ(x)]` on m or m̃, integrated with classical RK4.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{IntegralFamily, Member, Observable};
use crate::lie::{ad_real, bracket, commutator, max_abs, pairing, LieElement, C64};
use crate::moment::MomentData;
use crate::setup::{OrbitSetup, Space};
use crate::subspace::RealSubspace;

#[derive(Clone, Debug)]
pub struct FlowSpec {
    pub space: Space,
    pub a: LieElement,
    pub b: LieElement,
    flow_space: RealSubspace,
    /// `ad_a⁻¹ ∘ ad_b`, zero off m (n² × n²).
    phi: DMatrix<f64>,
    n: usize,
}

impl FlowSpec {
    /// `b = diag(iβ_block)` with one value per block of a.
    pub fn new(setup: &OrbitSetup, space: Space, b_values: &[f64]) -> Result<Self> {
        if b_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("b values must be finite".into()));
        }
        let b = setup.block_scalar(b_values)?;
        let moment = MomentData::new(setup.pair(Space::M), &setup.a)?;
        Ok(Self {
            space,
            a: setup.a.clone(),
            phi: &moment.ad_a_inv * ad_real(&b),
            b,
            flow_space: setup.space(space).clone(),
            n: setup.n,
        })
    }

    pub fn flow_space(&self) -> &RealSubspace {
        &self.flow_space
    }

    pub fn phi(&self, x: &LieElement) -> LieElement {
        LieElement::from_coords(self.n, &self.phi * x.coords()).expect("stays in u(n)")
    }

    pub fn hamiltonian(&self, x: &LieElement) -> f64 {
        0.5 * pairing(x, &self.phi(x)).expect("same size")
    }

    pub fn vector_field(&self, x: &LieElement) -> LieElement {
        bracket(x, &self.phi(x)).expect("same size")
    }

    /// `‖[x, φ(x)] − [x + λa, φ(x) + λb]‖`.
    pub fn lax_residual(&self, x: &LieElement, lambda: C64) -> f64 {
        let phi = self.phi(x);
        let left = commutator(x.matrix(), phi.matrix());
        let shifted_x = x.matrix() + self.a.matrix() * lambda;
        let shifted_phi = phi.matrix() + self.b.matrix() * lambda;
        max_abs(&(left - commutator(&shifted_x, &shifted_phi)))
    }

    /// Eigenvalues of φ restricted to the flow space, ascending.
    pub fn phi_spectrum(&self) -> Vec<f64> {
        let q = self.flow_space.basis();
        let restricted = q.transpose() * &self.phi * q;
        let symmetric = (&restricted + restricted.transpose()) * 0.5;
        let mut values: Vec<f64> = SymmetricEigen::new(symmetric).eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Largest `|⟨φ(x), y⟩ − ⟨x, φ(y)⟩|` over basis pairs of the flow space.
    pub fn symmetry_residual(&self) -> f64 {
        let q = self.flow_space.basis();
        let restricted = q.transpose() * &self.phi * q;
        (&restricted - restricted.transpose()).amax()
    }
}

impl Observable for FlowSpec {
    fn value(&self, x: &LieElement) -> f64 {
        self.hamiltonian(x)
    }

    fn gradient(&self, x: &LieElement) -> LieElement {
        self.phi(x)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<LieElement>,
    pub step: f64,
    pub integrator: &'static str,
    pub max_residual: f64,
}

const RESIDUAL_LIMIT: f64 = 1e-6;

/// Fixed-step RK4, projecting back onto the flow space after every step.
/// States are recorded every `stride` steps and at the end.
pub fn integrate_flow(spec: &FlowSpec, x0: &LieElement, dt: f64, steps: usize, stride: usize) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("recording stride must be positive".into()));
    }
    let space = spec.flow_space();
    if space.residual(x0.coords()) > 1e-10 * x0.norm().max(1.0) {
        return Err(Error::Precondition("initial state is not in the flow space".into()));
    }
    let n = spec.n;
    let field = |c: &DVector<f64>| -> DVector<f64> {
        spec.vector_field(&LieElement::from_coords(n, c.clone()).expect("sized")).coords().clone()
    };
    let mut c = space.project(x0.coords());
    let mut times = vec![0.0];
    let mut states = vec![LieElement::from_coords(n, c.clone())?];
    let mut max_residual: f64 = 0.0;
    for step in 1..=steps {
        let k1 = field(&c);
        let k2 = field(&(&c + &k1 * (dt / 2.0)));
        let k3 = field(&(&c + &k2 * (dt / 2.0)));
        let k4 = field(&(&c + &k3 * dt));
        let next = &c + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t = step as f64 * dt;
        let residual = space.residual(&next) / next.norm().max(1.0);
        if !next.iter().all(|v| v.is_finite()) || residual > RESIDUAL_LIMIT {
            return Err(Error::ResidualBlowup { time: t, residual });
        }
        max_residual = max_residual.max(residual);
        c = space.project(&next);
        if step % stride == 0 || step == steps {
            times.push(t);
            states.push(LieElement::from_coords(n, c.clone())?);
        }
    }
    Ok(Trajectory { times, states, step: dt, integrator: "rk4", max_residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub members: Vec<Member>,
    /// `max_t |f(x(t)) − f(x(0))| / (1 + |f(x(0))|)` per member.
    pub drifts: Vec<f64>,
    pub max_drift: f64,
    pub energy_drift: f64,
    pub max_lax_residual: f64,
}

fn drift(values: impl Iterator<Item = f64>) -> f64 {
    let mut values = values;
    let Some(first) = values.next() else { return 0.0 };
    values.map(|v| (v - first).abs() / (1.0 + first.abs())).fold(0.0, f64::max)
}

pub fn conservation_report(spec: &FlowSpec, traj: &Trajectory, family: &IntegralFamily) -> ConservationReport {
    let drifts: Vec<f64> = family
        .members
        .iter()
        .map(|f| drift(traj.states.iter().map(|x| f.value(x))))
        .collect();
    let lambdas = [C64::new(0.7, 0.0), C64::new(-0.3, 1.1)];
    let max_lax_residual = traj
        .states
        .iter()
        .flat_map(|x| lambdas.iter().map(move |&l| spec.lax_residual(x, l)))
        .fold(0.0, f64::max);
    ConservationReport {
        members: family.labels(),
        max_drift: drifts.iter().copied().fold(0.0, f64::max),
        drifts,
        energy_drift: drift(traj.states.iter().map(|x| spec.hamiltonian(x))),
        max_lax_residual,
    }
}

/// One row per recorded state: time, coordinates on the flow-space basis,
/// then the family's values.
pub fn write_csv<W: Write>(out: &mut W, spec: &FlowSpec, traj: &Trajectory, family: &IntegralFamily) -> std::io::Result<()> {
    let dim = spec.flow_space().dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("c_{i}")));
    header.extend((1..=family.len()).map(|i| format!("f_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![format!("{t:.6}")];
        row.extend(spec.flow_space().coefficients(x.coords()).iter().map(|v| format!("{v:.15e}")));
        row.extend(family.values(x).iter().map(|v| format!("{v:.15e}")));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
