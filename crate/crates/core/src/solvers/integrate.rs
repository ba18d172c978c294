use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::fem::assembly::SemiDiscreteSystem;
use crate::model::Voltage;
use crate::solvers::factor::FactorizedOperator;
use crate::sparse::CsrMatrix;

/// Dof values and velocities at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub t: f64,
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl StepState {
    pub fn zeros(n: usize) -> Self {
        Self {
            t: 0.0,
            x: DVector::zeros(n),
            v: DVector::zeros(n),
        }
    }
}

/// Implicit midpoint rule for `M ẍ + K x = B V(t)` with the voltage taken at
/// `t + dt/2`. The step matrix `M + (dt²/4) K` is factored once.
#[derive(Debug, Clone)]
pub struct MidpointStepper {
    dt: f64,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    input: DMatrix<f64>,
    factor: FactorizedOperator,
}

impl MidpointStepper {
    pub fn new(system: &SemiDiscreteSystem, dt: f64) -> Result<Self> {
        Self::from_matrices(&system.mass, &system.stiffness, &system.input, dt)
    }

    pub fn from_matrices(
        mass: &CsrMatrix,
        stiffness: &CsrMatrix,
        input: &DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::SingularStepMatrix(format!("time step {dt}")));
        }
        let a = mass.combine(1.0, stiffness, 0.25 * dt * dt);
        let factor = FactorizedOperator::new(&a).map_err(|e| Error::SingularStepMatrix(e.to_string()))?;
        Ok(Self {
            dt,
            mass: mass.clone(),
            stiffness: stiffness.clone(),
            input: input.clone(),
            factor,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances one step with channel voltages `v_mid` at the midpoint.
    /// Returns the new state and the work done by the voltage.
    pub fn step(&self, s: &StepState, v_mid: &[f64]) -> (StepState, f64) {
        let dt = self.dt;
        let f = &self.input * DVector::from_column_slice(v_mid);
        let kx = self.stiffness.mul_vec(&s.x);
        let kv = self.stiffness.mul_vec(&s.v);
        let mv = self.mass.mul_vec(&s.v);
        let rhs = mv - kv * (0.25 * dt * dt) - kx * dt + &f * dt;
        let v1 = self.factor.solve(&rhs);
        let vbar = (&s.v + &v1) * 0.5;
        let x1 = &s.x + &vbar * dt;
        let work = dt * f.dot(&vbar);
        (
            StepState {
                t: s.t + dt,
                x: x1,
                v: v1,
            },
            work,
        )
    }
}

/// One implicit-midpoint step of `system` from `state`, driven by the spec's
/// voltage.
pub fn step_midpoint(system: &SemiDiscreteSystem, state: &StepState, dt: f64) -> Result<StepState> {
    let stepper = MidpointStepper::new(system, dt)?;
    let v = system.spec.voltage().eval(state.t + 0.5 * dt);
    Ok(stepper.step(state, &v).0)
}

/// Newmark `(β, γ)` with the load evaluated at the step ends.
#[derive(Debug, Clone)]
pub struct NewmarkStepper {
    dt: f64,
    beta: f64,
    gamma: f64,
    stiffness: CsrMatrix,
    input: DMatrix<f64>,
    factor: FactorizedOperator,
    mass_factor: FactorizedOperator,
}

/// Newmark state carries the acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct NewmarkState {
    pub state: StepState,
    pub a: DVector<f64>,
}

impl NewmarkStepper {
    pub fn new(system: &SemiDiscreteSystem, dt: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::from_matrices(&system.mass, &system.stiffness, &system.input, dt, beta, gamma)
    }

    pub fn from_matrices(
        mass: &CsrMatrix,
        stiffness: &CsrMatrix,
        input: &DMatrix<f64>,
        dt: f64,
        beta: f64,
        gamma: f64,
    ) -> Result<Self> {
        let a = mass.combine(1.0, stiffness, beta * dt * dt);
        let factor = FactorizedOperator::new(&a).map_err(|e| Error::SingularStepMatrix(e.to_string()))?;
        let mass_factor = FactorizedOperator::new(mass)?;
        Ok(Self {
            dt,
            beta,
            gamma,
            stiffness: stiffness.clone(),
            input: input.clone(),
            factor,
            mass_factor,
        })
    }

    /// Completes `state` with the acceleration balancing voltages `v`.
    pub fn start(&self, state: StepState, v: &[f64]) -> NewmarkState {
        let f = &self.input * DVector::from_column_slice(v);
        let a = self.mass_factor.solve(&(f - self.stiffness.mul_vec(&state.x)));
        NewmarkState { state, a }
    }

    pub fn step(&self, s: &NewmarkState, v_end: &[f64]) -> NewmarkState {
        let (dt, b, g) = (self.dt, self.beta, self.gamma);
        let st = &s.state;
        let pred = &st.x + &st.v * dt + &s.a * (dt * dt * (0.5 - b));
        let f = &self.input * DVector::from_column_slice(v_end);
        let a1 = self.factor.solve(&(f - self.stiffness.mul_vec(&pred)));
        let x1 = pred + &a1 * (b * dt * dt);
        let v1 = &st.v + (&s.a * (1.0 - g) + &a1 * g) * dt;
        NewmarkState {
            state: StepState {
                t: st.t + dt,
                x: x1,
                v: v1,
            },
            a: a1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    #[serde(skip)]
    pub x: DVector<f64>,
    #[serde(skip)]
    pub v: DVector<f64>,
    pub energy: EnergyBreakdown,
    /// Cumulative voltage work since the start.
    pub work: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    /// Largest `|E(t) − E(0) − W(t)|`.
    pub fn power_balance_error(&self) -> f64 {
        let Some(first) = self.points.first() else {
            return 0.0;
        };
        self.points
            .iter()
            .map(|p| (p.energy.total - first.energy.total - p.work).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_energy(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.energy.total.abs())
            .fold(0.0, f64::max)
    }
}

/// Number of steps of size `dt` that fit in `t_end`, tolerating round-off in
/// the ratio.
pub fn step_count(dt: f64, t_end: f64) -> usize {
    let r = t_end / dt;
    (r + 1e-9 * r.max(1.0)).floor().max(0.0) as usize
}

/// Integrates from `initial` to `t_end` with the implicit midpoint rule,
/// recording every `stride`-th step (and the initial state).
pub fn simulate(
    system: &SemiDiscreteSystem,
    initial: &StepState,
    dt: f64,
    t_end: f64,
    voltage: &Voltage,
    stride: usize,
) -> Result<Trajectory> {
    if initial.x.len() != system.n() || initial.v.len() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.n(),
            got: initial.x.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::SingularStepMatrix(format!("time step {dt}")));
    }
    let stride = stride.max(1);
    let stepper = MidpointStepper::new(system, dt)?;
    let point = |s: &StepState, work: f64| TrajectoryPoint {
        t: s.t,
        energy: system.energies(&s.x, &s.v),
        x: s.x.clone(),
        v: s.v.clone(),
        work,
    };
    let steps = step_count(dt, t_end - initial.t);
    let mut points = Vec::with_capacity(steps / stride + 1);
    let mut s = initial.clone();
    let mut work = 0.0;
    points.push(point(&s, work));
    for n in 1..=steps {
        let t_mid = initial.t + (n as f64 - 0.5) * dt;
        let (next, dw) = stepper.step(&s, &voltage.eval(t_mid));
        s = next;
        // Timestamps from the step index avoid drift in repeated additions.
        s.t = initial.t + n as f64 * dt;
        work += dw;
        if n % stride == 0 {
            points.push(point(&s, work));
        }
    }
    Ok(Trajectory { points })
}
