//! Strang splitting of `∂_t u = ε²Δu + (1 - |u|²)u`: half a heat step, the
//! exact reaction flow, half a heat step. Both sub-flows are exact, so the only
//! error is the splitting commutator.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, EnergyReport};
use crate::torus::{self, GridSpec, Transformer, VectorField};
use crate::{Error, Result};

/// `T_ε = ln(1/ε) - ½ ln ln(1/ε) - C₀`.
pub fn critical_time(eps: f64, c0: f64) -> f64 {
    let l = (1.0 / eps).ln();
    l - 0.5 * l.ln() - c0
}

/// Largest admissible step for `eps` on an `n`-point grid.
pub fn dt_cap(eps: f64, n: usize) -> f64 {
    0.05_f64.min(eps / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    eps: f64,
    n: usize,
    dt: f64,
    c0: f64,
    t_end: f64,
}

impl FlowParams {
    pub fn new(eps: f64, n: usize, dt: f64, c0: f64, t_end: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Params(format!("eps = {eps} outside (0, 1)")));
        }
        GridSpec::new(n).map_err(|e| Error::Params(e.to_string()))?;
        let need = GridSpec::min_points_for(eps);
        if n < need {
            return Err(Error::Params(format!(
                "n = {n} under-resolves eps = {eps} (need n >= {need})"
            )));
        }
        let cap = dt_cap(eps, n);
        if !(dt > 0.0 && dt <= cap * (1.0 + 1e-12)) {
            return Err(Error::Params(format!("dt = {dt} outside (0, {cap}]")));
        }
        if !c0.is_finite() {
            return Err(Error::Params("c0 must be finite".into()));
        }
        let t_crit = critical_time(eps, c0);
        if !(t_crit > 0.0) {
            return Err(Error::Params(format!(
                "T_eps = {t_crit:.4} <= 0 for eps = {eps}, c0 = {c0}"
            )));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::Params(format!("t_end = {t_end} must be finite and >= 0")));
        }
        Ok(Self {
            eps,
            n,
            dt,
            c0,
            t_end,
        })
    }

    /// Finest admissible grid, `t_end = T_ε`, and the largest step under the cap
    /// that lands exactly on `T_ε`.
    pub fn standard(eps: f64, c0: f64) -> Result<Self> {
        let n = GridSpec::resolving(eps)
            .map_err(|e| Error::Params(e.to_string()))?
            .n();
        let t_crit = critical_time(eps, c0);
        if !(t_crit > 0.0) {
            return Err(Error::Params(format!(
                "T_eps = {t_crit:.4} <= 0 for eps = {eps}, c0 = {c0}"
            )));
        }
        let steps = (t_crit / dt_cap(eps, n)).ceil();
        Self::new(eps, n, t_crit / steps, c0, t_crit)
    }

    pub fn with_t_end(self, t_end: f64) -> Result<Self> {
        Self::new(self.eps, self.n, self.dt, self.c0, t_end)
    }

    pub fn with_dt(self, dt: f64) -> Result<Self> {
        Self::new(self.eps, self.n, dt, self.c0, self.t_end)
    }

    pub fn with_grid(self, n: usize) -> Result<Self> {
        Self::new(self.eps, n, self.dt.min(dt_cap(self.eps, n)), self.c0, self.t_end)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.n).expect("validated in constructor")
    }

    pub fn critical_time(&self) -> f64 {
        critical_time(self.eps, self.c0)
    }

    /// Number of whole steps that fit in `[0, t]`.
    pub fn whole_steps(&self, t: f64) -> u64 {
        (t / self.dt + 1e-9).floor() as u64
    }

    fn on_grid(&self, t: f64) -> bool {
        let k = (t / self.dt).round();
        (k * self.dt - t).abs() <= 1e-9 * self.dt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub u: VectorField,
    pub step_count: u64,
}

impl FlowState {
    pub fn initial(u0: VectorField) -> Result<Self> {
        u0.check_finite("initial datum")?;
        Ok(Self {
            t: 0.0,
            u: u0,
            step_count: 0,
        })
    }
}

/// Reusable Strang stepper for one grid, `ε` and `dt`.
pub struct Stepper {
    grid: GridSpec,
    eps: f64,
    dt: f64,
    half_heat: Vec<f64>,
    growth: f64,
    stretch: f64,
    tr: Transformer,
    buf: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: GridSpec, eps: f64, dt: f64) -> Result<Self> {
        if !(eps > 0.0 && dt > 0.0 && dt.is_finite()) {
            return Err(Error::Params(format!("bad stepper eps = {eps}, dt = {dt}")));
        }
        Ok(Self {
            grid,
            eps,
            dt,
            half_heat: torus::heat_table(grid, 0.5 * dt, eps),
            growth: dt.exp(),
            stretch: (2.0 * dt).exp_m1(),
            tr: Transformer::new(grid),
            buf: Vec::with_capacity(grid.node_count()),
        })
    }

    pub fn for_params(params: &FlowParams) -> Result<Self> {
        Self::new(params.grid(), params.eps, params.dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn load(&mut self, u: &VectorField) {
        let nn = self.grid.node_count();
        let (a, b) = u.values().split_at(nn);
        self.buf.clear();
        self.buf
            .extend(a.iter().zip(b).map(|(x, y)| Complex64::new(*x, *y)));
    }

    fn energy_of_loaded_spectrum(&self, u: &VectorField) -> EnergyReport {
        EnergyReport::new(
            0.0,
            torus::dirichlet_from_raw(&self.buf, self.grid),
            diagnostics::potential_energy(u, self.eps),
        )
    }

    /// Energy by Parseval; one forward transform.
    pub fn energy(&mut self, u: &VectorField) -> EnergyReport {
        self.load(u);
        let mut buf = std::mem::take(&mut self.buf);
        self.tr.forward(&mut buf);
        self.buf = buf;
        self.energy_of_loaded_spectrum(u)
    }

    /// One Strang step of `u` in place. Returns the energy of `u` before the step,
    /// which falls out of the first forward transform.
    pub fn advance(&mut self, u: &mut VectorField) -> Result<EnergyReport> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.n(),
                found: u.grid().n(),
            });
        }
        let n = self.grid.n();
        self.load(u);
        let mut buf = std::mem::take(&mut self.buf);
        self.tr.forward(&mut buf);
        self.buf = buf;
        let before = self.energy_of_loaded_spectrum(u);
        let mut buf = std::mem::take(&mut self.buf);

        torus::apply_separable(&mut buf, n, &self.half_heat);
        self.tr.inverse(&mut buf);
        for z in buf.iter_mut() {
            let s = 1.0 + z.norm_sqr() * self.stretch;
            *z *= self.growth / s.sqrt();
        }
        self.tr.forward(&mut buf);
        torus::apply_separable(&mut buf, n, &self.half_heat);
        self.tr.inverse(&mut buf);

        *u = VectorField::from_packed(self.grid, &buf);
        self.buf = buf;
        Ok(before)
    }

    /// Advances a [`FlowState`] by one step, keeping `t = step_count·dt`.
    pub fn step(&mut self, state: &mut FlowState) -> Result<EnergyReport> {
        let before = self.advance(&mut state.u)?.at(state.t);
        state.step_count += 1;
        state.t = state.step_count as f64 * self.dt;
        if state.u.check_finite("step").is_err() {
            return Err(Error::StepDiverged {
                step: state.step_count,
                t: state.t,
            });
        }
        Ok(before)
    }
}

/// One Strang step on a copy of `state`.
pub fn step_strang(state: &FlowState, params: &FlowParams) -> Result<FlowState> {
    state.u.check_finite("state")?;
    let mut stepper = Stepper::for_params(params)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// What an observer sees. `critical` marks the observation at `T_ε`.
pub struct Observation<'a> {
    pub t: f64,
    pub step: u64,
    pub u: &'a VectorField,
    pub energy: EnergyReport,
    pub critical: bool,
    pub last: bool,
    /// Largest `E(u_{k+1}) - E(u_k)` over the steps taken so far in this call.
    pub max_energy_increase: f64,
}

/// Output of [`run`]: energy after every step plus the final state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: FlowParams,
    /// `E(u_k)` for every whole step `k` covered by this call, starting at the
    /// initial state.
    pub step_energies: Vec<f64>,
    pub observation_times: Vec<f64>,
    pub final_state: FlowState,
}

impl Trajectory {
    /// Largest `E(u_{k+1}) - E(u_k)` over the run (negative when strictly decreasing).
    pub fn max_energy_increase(&self) -> f64 {
        self.step_energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Integrates from `u0` to `t_end`, calling `observer` every `cadence` steps,
/// at `T_ε` and at `t_end`. Off-grid `T_ε` or `t_end` is reached by a shorter
/// final step on a copy, so the stored trajectory stays uniform.
pub fn run(
    u0: VectorField,
    params: &FlowParams,
    cadence: u64,
    observer: &mut dyn FnMut(&Observation) -> Result<()>,
) -> Result<Trajectory> {
    run_from(FlowState::initial(u0)?, params, cadence, true, observer)
}

/// Like [`run`], starting from an arbitrary on-grid state (for resuming).
pub fn run_from(
    mut state: FlowState,
    params: &FlowParams,
    cadence: u64,
    observe_start: bool,
    observer: &mut dyn FnMut(&Observation) -> Result<()>,
) -> Result<Trajectory> {
    if cadence == 0 {
        return Err(Error::Params("observer cadence must be >= 1".into()));
    }
    if state.u.grid() != params.grid() {
        return Err(Error::GridMismatch {
            expected: params.n,
            found: state.u.grid().n(),
        });
    }
    state.u.check_finite("initial state")?;
    let fail = |t: f64, e: Error| Error::RunFailed {
        t,
        source: Box::new(e),
    };

    let t_crit = params.critical_time();
    let total = params.whole_steps(params.t_end);
    let crit_on_grid = params.on_grid(t_crit) && t_crit <= params.t_end * (1.0 + 1e-12);
    let crit_step = if crit_on_grid {
        Some((t_crit / params.dt).round() as u64)
    } else {
        None
    };
    let crit_off_grid = !crit_on_grid && t_crit < params.t_end;
    let end_off_grid = !params.on_grid(params.t_end);

    let mut stepper = Stepper::for_params(params)?;
    let mut energies = Vec::with_capacity((total.saturating_sub(state.step_count) + 1) as usize);
    let mut times = Vec::new();
    let mut max_inc = f64::NEG_INFINITY;

    // `prev` is E(u_{k-1}) so the increase into the observed state is included
    let mut observe = |stepper: &mut Stepper,
                       times: &mut Vec<f64>,
                       (max_inc, prev): (f64, Option<f64>),
                       t: f64,
                       step: u64,
                       u: &VectorField,
                       critical: bool,
                       last: bool|
     -> Result<()> {
        let energy = stepper.energy(u).at(t);
        let max_inc = prev.map_or(max_inc, |p| max_inc.max(energy.total - p));
        times.push(t);
        observer(&Observation {
            t,
            step,
            u,
            energy,
            critical,
            last,
            max_energy_increase: max_inc,
        })
        .map_err(|e| fail(t, e))
    };

    let wants = |k: u64| k % cadence == 0 || Some(k) == crit_step || (k == total && !end_off_grid);
    if observe_start && wants(state.step_count) {
        let k = state.step_count;
        observe(
            &mut stepper,
            &mut times,
            (max_inc, None),
            state.t,
            k,
            &state.u,
            Some(k) == crit_step,
            k == total && !end_off_grid,
        )?;
    }

    while state.step_count < total {
        // off-grid T_eps sits inside the next step
        if crit_off_grid && (state.step_count + 1) as f64 * params.dt > t_crit && state.t < t_crit {
            let u = partial_step(params, &state.u, t_crit - state.t).map_err(|e| fail(t_crit, e))?;
            observe(&mut stepper, &mut times, (max_inc, None), t_crit, state.step_count, &u, true, false)?;
        }
        let e = stepper.step(&mut state).map_err(|e| fail(state.t, e))?;
        if let Some(prev) = energies.last() {
            max_inc = max_inc.max(e.total - prev);
        }
        energies.push(e.total);
        let k = state.step_count;
        if wants(k) {
            observe(
                &mut stepper,
                &mut times,
                (max_inc, energies.last().copied()),
                state.t,
                k,
                &state.u,
                Some(k) == crit_step,
                k == total && !end_off_grid,
            )?;
        }
    }
    let e_end = stepper.energy(&state.u).total;
    energies.push(e_end);

    if end_off_grid && params.t_end > state.t {
        let tail = params.t_end - state.t;
        if crit_off_grid && t_crit > state.t {
            let u = partial_step(params, &state.u, t_crit - state.t).map_err(|e| fail(t_crit, e))?;
            observe(&mut stepper, &mut times, (max_inc, None), t_crit, state.step_count, &u, true, false)?;
        }
        let u = partial_step(params, &state.u, tail).map_err(|e| fail(params.t_end, e))?;
        let is_crit = (params.t_end - t_crit).abs() <= 1e-12 * t_crit.max(1.0);
        observe(&mut stepper, &mut times, (max_inc, None), params.t_end, state.step_count, &u, is_crit, true)?;
    }

    Ok(Trajectory {
        params: *params,
        step_energies: energies,
        observation_times: times,
        final_state: state,
    })
}

fn partial_step(params: &FlowParams, u: &VectorField, tau: f64) -> Result<VectorField> {
    let mut s = Stepper::new(params.grid(), params.eps, tau)?;
    let mut out = u.clone();
    s.advance(&mut out)?;
    out.check_finite("partial step")?;
    Ok(out)
}

/// Integrates `u0` to `t_end` with exactly `steps` uniform steps and no observers.
pub fn integrate(u0: &VectorField, eps: f64, t_end: f64, steps: u64) -> Result<VectorField> {
    if steps == 0 {
        return Ok(u0.clone());
    }
    let mut s = Stepper::new(u0.grid(), eps, t_end / steps as f64)?;
    let mut u = u0.clone();
    for k in 0..steps {
        s.advance(&mut u)?;
        if u.check_finite("step").is_err() {
            return Err(Error::StepDiverged {
                step: k + 1,
                t: (k + 1) as f64 * s.dt(),
            });
        }
    }
    Ok(u)
}

/// Outcome of a self-convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConvergenceOrder {
    Order {
        order: f64,
        differences: Vec<f64>,
        orders: Vec<f64>,
    },
    Inconclusive {
        reason: String,
        differences: Vec<f64>,
    },
}

impl ConvergenceOrder {
    pub fn order(&self) -> Option<f64> {
        match self {
            Self::Order { order, .. } => Some(*order),
            Self::Inconclusive { .. } => None,
        }
    }
}

/// Observed order from `solve(dt0 / 2^j)`, `j = 0..=refinements`, using sup-norm
/// differences of successive solutions. `solve` is any scheme; the Strang run is
/// one instance (see [`convergence_order`]).
pub fn convergence_order_of(
    mut solve: impl FnMut(f64) -> Result<VectorField>,
    dt0: f64,
    refinements: usize,
) -> Result<ConvergenceOrder> {
    if refinements < 3 {
        return Err(Error::Invalid(format!("refinements = {refinements} must be >= 3")));
    }
    let sols = (0..=refinements)
        .map(|j| solve(dt0 / f64::powi(2.0, j as i32)))
        .collect::<Result<Vec<_>>>()?;
    let scale = sols
        .last()
        .map(torus::sup_norm)
        .unwrap_or(0.0)
        .max(1.0);
    let mut diffs = Vec::with_capacity(refinements);
    for w in sols.windows(2) {
        diffs.push(w[0].sup_distance(&w[1])?);
    }
    if diffs.iter().any(|d| *d <= 1e-12 * scale) {
        return Ok(ConvergenceOrder::Inconclusive {
            reason: "differences at round-off level".into(),
            differences: diffs,
        });
    }
    if diffs.windows(2).any(|w| !(w[1] < w[0])) {
        return Ok(ConvergenceOrder::Inconclusive {
            reason: "differences not monotonically decreasing".into(),
            differences: diffs,
        });
    }
    let orders: Vec<f64> = diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order = *orders.last().expect("refinements >= 3");
    Ok(ConvergenceOrder::Order {
        order,
        differences: diffs,
        orders,
    })
}

/// Strang self-convergence at `params.t_end`, starting from `params.dt`.
pub fn convergence_order(
    u0: &VectorField,
    params: &FlowParams,
    refinements: usize,
) -> Result<ConvergenceOrder> {
    let t_end = params.t_end;
    let eps = params.eps;
    let base = (t_end / params.dt).round().max(1.0) as u64;
    let mut j = 0;
    convergence_order_of(
        |_dt| {
            let steps = base << j;
            j += 1;
            integrate(u0, eps, t_end, steps)
        },
        params.dt,
        refinements,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_flow;
    use crate::torus::TWO_PI;

    fn smooth(g: GridSpec) -> VectorField {
        VectorField::from_fn(g, |x, y| {
            [
                0.6 * (TWO_PI * x).sin() + 0.2 * (TWO_PI * y).cos(),
                0.5 * (TWO_PI * y).sin() - 0.1 * (TWO_PI * (x + y)).cos(),
            ]
        })
    }

    #[test]
    fn critical_times() {
        assert!((critical_time(0.05, 2.0) - 0.4472).abs() < 1e-3);
        assert!((critical_time(0.025, 2.0) - 1.0359).abs() < 1e-3);
        assert!(critical_time(0.05, 3.0) < 0.0);
    }

    #[test]
    fn params_validation() {
        let p = FlowParams::standard(0.05, 2.0).unwrap();
        assert_eq!(p.n(), 160);
        assert!(p.dt() <= dt_cap(0.05, 160));
        assert!(p.on_grid(p.critical_time()));
        assert!(FlowParams::new(0.05, 158, 1e-4, 2.0, 0.1).is_err());
        assert!(FlowParams::new(0.05, 160, 1e-3, 2.0, 0.1).is_err());
        assert!(FlowParams::new(0.05, 160, 1e-4, 3.0, 0.1).is_err());
        assert!(FlowParams::new(0.05, 160, 1e-4, 2.0, -1.0).is_err());
    }

    #[test]
    fn equilibria_are_fixed() {
        let g = GridSpec::new(32).unwrap();
        let mut s = Stepper::new(g, 0.1, 0.01).unwrap();
        for value in [[1.0, 0.0], [0.6, -0.8], [0.0, 0.0]] {
            let mut u = VectorField::constant(g, value);
            for _ in 0..20 {
                s.advance(&mut u).unwrap();
            }
            assert!(u.sup_distance(&VectorField::constant(g, value)).unwrap() < 1e-14);
        }
    }

    #[test]
    fn constant_field_follows_the_ode() {
        let g = GridSpec::new(32).unwrap();
        let u = integrate(&VectorField::constant(g, [0.5, 0.0]), 0.1, 0.7, 70).unwrap();
        let want = ode_flow::phi(0.7, [0.5, 0.0]).unwrap();
        assert!(u.sup_distance(&VectorField::constant(g, want)).unwrap() < 1e-13);
    }

    #[test]
    fn step_energy_matches_diagnostics() {
        let g = GridSpec::new(32).unwrap();
        let u = smooth(g);
        let mut s = Stepper::new(g, 0.1, 0.001).unwrap();
        let e = s.energy(&u);
        let want = diagnostics::energy(&u, 0.1).unwrap();
        assert!((e.total - want.total).abs() < 1e-10 * want.total);
    }

    #[test]
    fn zero_horizon_observes_once() {
        let g = GridSpec::new(160).unwrap();
        let p = FlowParams::new(0.05, 160, 1e-4, 2.0, 0.0).unwrap();
        let mut seen = 0;
        let tr = run(smooth(g), &p, 10, &mut |o| {
            assert_eq!(o.t, 0.0);
            assert!(o.last);
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, 1);
        assert_eq!(tr.final_state.step_count, 0);
    }

    #[test]
    fn off_grid_end_is_observed() {
        let g = GridSpec::new(160).unwrap();
        let p = FlowParams::new(0.05, 160, 3e-4, 2.0, 0.00205).unwrap();
        let mut ts = Vec::new();
        let tr = run(smooth(g), &p, 3, &mut |o| {
            ts.push((o.t, o.last));
            Ok(())
        })
        .unwrap();
        assert_eq!(tr.final_state.step_count, 6);
        assert_eq!(ts.last().unwrap(), &(0.00205, true));
        assert_eq!(ts.len(), 4);
    }

    #[test]
    fn linear_scheme_calibrates_to_first_order() {
        // explicit Euler on the reaction ODE with constant data
        let g = GridSpec::new(16).unwrap();
        let res = convergence_order_of(
            |dt| {
                let steps = (0.5 / dt).round() as usize;
                let mut x = [0.4, 0.1];
                for _ in 0..steps {
                    let r = 1.0 - x[0] * x[0] - x[1] * x[1];
                    x = [x[0] + dt * r * x[0], x[1] + dt * r * x[1]];
                }
                Ok(VectorField::constant(g, x))
            },
            0.05,
            4,
        )
        .unwrap();
        let q = res.order().unwrap();
        assert!((q - 1.0).abs() < 0.1, "order {q}");
    }

    #[test]
    fn constant_data_is_inconclusive() {
        let p = FlowParams::new(0.3, 32, 0.005, 0.0, 0.2).unwrap();
        let u0 = VectorField::constant(p.grid(), [0.3, 0.2]);
        let res = convergence_order(&u0, &p, 3).unwrap();
        assert!(matches!(res, ConvergenceOrder::Inconclusive { .. }));
    }

    #[test]
    fn strang_is_second_order() {
        let p = FlowParams::new(0.1, 80, 0.00125, 0.0, 0.2).unwrap();
        let res = convergence_order(&smooth(p.grid()), &p, 3).unwrap();
        let q = res.order().unwrap();
        assert!((1.8..=2.2).contains(&q), "{res:?}");
    }
}
