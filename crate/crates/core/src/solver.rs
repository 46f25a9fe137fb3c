//! Time stepping for `du/dt = A u + g_F F(t) - u^p u_x (+ f)` with
//! `F = alpha u_xx(t, 0) + beta int lambda(s) u_xx(t - s, 0) ds`.
//!
//! Crank-Nicolson on the linear part, with the `alpha` feedback folded into the
//! implicit matrix as a rank-one term. The memory term is explicit: it only
//! reads traces at lags `>= tau1 >= dt`, so its value at the new time level is
//! already known and the trapezoid average is used. The nonlinearity is
//! extrapolated with AB2 (explicit Euler on the first step).
//!
//! The first `rannacher_steps` steps are each split into two backward-Euler
//! half steps. Crank-Nicolson does not damp the stiffest fifth-order modes, so
//! without this any roughness in the data is carried along indefinitely.

use serde::{Deserialize, Serialize};

use crate::banded::RankOneSolver;
use crate::discretization::{Grid, SpatialOperator};
use crate::error::{Error, Result};
use crate::memory::{memory_integral_shifted, z_energy, HistoryBuffer, ZWeight};
use crate::model::{FeedbackGains, MemoryKernel, PhysicalParams};

pub const DEFAULT_RANNACHER_STEPS: usize = 2;

/// Initial profile `u0(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    Zero,
    /// `amplitude * sin(pi x / L)`
    Sine { amplitude: f64 },
    /// `amplitude * x^2 (L - x)^2 sin(pi x / L)`
    Bump { amplitude: f64 },
    /// `sum_k c_k x^2 (L - x)^2 sin(k pi x / L)`, `k = 1, 2, ...`
    Modes { coefficients: Vec<f64> },
    /// `x^2 (L - x)^2 sin(pi x / L) sum_i c_i (x / L)^i`, `i = 0, 1, ...`
    Polynomial { coefficients: Vec<f64> },
    /// Piecewise-linear through `(x[i], values[i])`, zero outside.
    Tabulated { x: Vec<f64>, values: Vec<f64> },
}

impl InitialProfile {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        let k = std::f64::consts::PI / length;
        let envelope = x * x * (length - x) * (length - x);
        match self {
            InitialProfile::Zero => 0.0,
            InitialProfile::Sine { amplitude } => amplitude * (k * x).sin(),
            InitialProfile::Bump { amplitude } => amplitude * envelope * (k * x).sin(),
            InitialProfile::Modes { coefficients } => {
                envelope
                    * coefficients
                        .iter()
                        .enumerate()
                        .map(|(i, c)| c * ((i + 1) as f64 * k * x).sin())
                        .sum::<f64>()
            }
            InitialProfile::Polynomial { coefficients } => {
                let xi = x / length;
                envelope
                    * (k * x).sin()
                    * coefficients.iter().rev().fold(0.0, |acc, c| acc * xi + c)
            }
            InitialProfile::Tabulated { x: xs, values } => {
                if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
                    0.0
                } else {
                    crate::model::interp_linear(xs, values, x)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialProfile::Tabulated { x, values } => {
                if x.len() < 2 || x.len() != values.len() {
                    return Err(Error::InvalidParameter {
                        name: "initial.u0",
                        reason: "tabulated profile needs >= 2 points and matching values".into(),
                    });
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter {
                        name: "initial.u0",
                        reason: "tabulated x must increase strictly".into(),
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Initial boundary history `z0(t)` for `t` in `(-tau2, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistorySpec {
    Zero,
    Constant { c: f64 },
    /// `amplitude * sin(omega t + phase)`
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise-linear through `(t[i], values[i])`.
    Tabulated { t: Vec<f64>, values: Vec<f64> },
}

impl HistorySpec {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            HistorySpec::Zero => 0.0,
            HistorySpec::Constant { c } => *c,
            HistorySpec::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).sin(),
            HistorySpec::Tabulated { t: ts, values } => crate::model::interp_linear(ts, values, t),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            HistorySpec::Tabulated { t, values } => {
                if t.len() < 2 || t.len() != values.len() || t.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(Error::InvalidParameter {
                        name: "initial.z0",
                        reason: "tabulated history needs increasing t and matching values".into(),
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Manufactured solution `u*(x, t) = amplitude e^{-t} x^2 (L - x)^2 sin(pi x / L)`.
///
/// `u*` satisfies all homogeneous conditions and `u*_xx = 0` at both ends, so the
/// feedback is consistent with zero history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsSpec {
    pub amplitude: f64,
}

impl MmsSpec {
    /// `d^k/dx^k` of `x^2 (L - x)^2 sin(pi x / L)`.
    pub fn profile_derivative(&self, x: f64, length: f64, k: usize) -> f64 {
        let l = length;
        // x^2 (L - x)^2 = x^4 - 2L x^3 + L^2 x^2
        let poly = [
            x.powi(4) - 2.0 * l * x.powi(3) + l * l * x * x,
            4.0 * x.powi(3) - 6.0 * l * x * x + 2.0 * l * l * x,
            12.0 * x * x - 12.0 * l * x + 2.0 * l * l,
            24.0 * x - 12.0 * l,
            24.0,
        ];
        let w = std::f64::consts::PI / l;
        let sine = |j: usize| w.powi(j as i32) * (w * x + j as f64 * std::f64::consts::FRAC_PI_2).sin();
        let mut binom = 1.0;
        let mut acc = 0.0;
        for j in 0..=k {
            if j <= 4 {
                acc += binom * poly[j] * sine(k - j);
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        acc
    }

    pub fn exact(&self, x: f64, t: f64, length: f64) -> f64 {
        self.amplitude * (-t).exp() * self.profile_derivative(x, length, 0)
    }

    /// Residual of `u*` in the equation; added to the right-hand side.
    pub fn forcing(&self, x: f64, t: f64, params: &PhysicalParams, linear_only: bool) -> f64 {
        let l = params.length;
        let s = self.amplitude * (-t).exp();
        let d = |k| s * self.profile_derivative(x, l, k);
        let u = d(0);
        let ux = d(1);
        let mut f = -u + params.a * ux + params.b * d(3) - d(5);
        if !linear_only {
            f += power(u, params.p) * ux;
        }
        f
    }
}

/// `u^p` for integer `p`, `|u|^p` otherwise.
pub fn power(u: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        u.powi(p as i32)
    } else {
        u.abs().powf(p)
    }
}

/// Everything one simulation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: PhysicalParams,
    pub gains: FeedbackGains,
    pub kernel: MemoryKernel,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub u0: InitialProfile,
    pub z0: HistorySpec,
    /// If set, `(u0, z0)` are rescaled so that `sqrt(E(0))` equals this value.
    pub data_norm: Option<f64>,
    pub mms: Option<MmsSpec>,
    pub linear_only: bool,
    pub record_every: usize,
    pub rannacher_steps: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        // zero gains are allowed here (open-loop runs); certificates flag them
        let g = &self.gains;
        if [g.alpha, g.beta, g.mu1, g.mu2, g.delta].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gains",
                reason: "must be finite".into(),
            });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "numerics.dt",
                reason: "must be positive".into(),
            });
        }
        if self.dt > self.kernel.tau1 {
            return Err(Error::InvalidParameter {
                name: "numerics.dt",
                reason: format!("dt = {} exceeds tau1 = {}", self.dt, self.kernel.tau1),
            });
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "numerics.T_end",
                reason: "must be non-negative".into(),
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "numerics.record_every",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(r) = self.data_norm {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "initial.norm",
                    reason: "must be non-negative".into(),
                });
            }
        }
        self.u0.validate()?;
        self.z0.validate()?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Solution values, trace history and the previous nonlinear term.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: Vec<f64>,
    pub history: HistoryBuffer,
    pub t_now: f64,
    pub step_index: usize,
    prev_nonlinear: Option<Vec<f64>>,
}

/// Assembled operator and factorizations for one configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub config: SimConfig,
    pub op: SpatialOperator,
    half: RankOneSolver,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = Grid::new(config.params.length, config.n)?;
        let op = SpatialOperator::build(&config.params, grid)?;
        let c = 0.5 * config.dt;
        let b = op.a_interior.scaled_plus_identity(-c, 1.0);
        let half = RankOneSolver::new(&b, &op.g_f, &op.trace0, c * config.gains.alpha)?;
        Ok(Self { config, op, half })
    }

    pub fn grid(&self) -> &Grid {
        &self.op.grid
    }

    /// State at `t = 0`; the newest history sample is the trace of `u0`.
    pub fn initial_state(&self) -> Result<SimState> {
        let cfg = &self.config;
        let l = cfg.params.length;
        let (u, z0): (Vec<f64>, HistorySpec) = match &cfg.mms {
            Some(m) => (self.grid().sample(|x| m.exact(x, 0.0, l)), HistorySpec::Zero),
            None => (self.grid().sample(|x| cfg.u0.eval(x, l)), cfg.z0.clone()),
        };
        let mut state = self.state_from(u, &z0, 1.0)?;
        if let (Some(target), None) = (cfg.data_norm, &cfg.mms) {
            let norm = self.energy(&state)?.sqrt();
            if norm > 0.0 {
                let scale = target / norm;
                let u = state.u.iter().map(|v| v * scale).collect();
                state = self.state_from(u, &z0, scale)?;
            }
        }
        Ok(state)
    }

    fn state_from(&self, u: Vec<f64>, z0: &HistorySpec, scale: f64) -> Result<SimState> {
        let mut history =
            HistoryBuffer::new(self.config.dt, self.config.kernel.tau2, 0.0, |t| {
                scale * z0.eval(t)
            })?;
        history.set_latest(self.op.trace_uxx0(&u));
        Ok(SimState {
            u,
            history,
            t_now: 0.0,
            step_index: 0,
            prev_nonlinear: None,
        })
    }

    /// `E = ||u||^2 + |beta| z_energy` for a state.
    pub fn energy(&self, state: &SimState) -> Result<f64> {
        let (l2, _) = crate::discretization::mass_and_weighted_mass(&state.u, self.grid());
        let z = z_energy(&state.history, &self.config.kernel, ZWeight::Plain)?;
        Ok(l2 + self.config.gains.beta.abs() * z)
    }

    /// `-u^p u_x` in the skew-symmetric split
    /// `(D1(u phi) + phi D1 u) / (p + 2)`, `phi = u^p`.
    pub fn nonlinear_term(&self, u: &[f64]) -> Vec<f64> {
        let p = self.config.params.p;
        let phi: Vec<f64> = u.iter().map(|&v| power(v, p)).collect();
        let uphi: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a * b).collect();
        let d_uphi = self.op.d1(&uphi);
        let du = self.op.d1(u);
        let c = 1.0 / (p + 2.0);
        d_uphi
            .iter()
            .zip(phi.iter().zip(&du))
            .map(|(a, (f, d))| -c * (a + f * d))
            .collect()
    }

    fn forcing(&self, t: f64) -> Option<Vec<f64>> {
        let m = self.config.mms?;
        let params = &self.config.params;
        let linear = self.config.linear_only;
        Some(self.grid().sample(|x| m.forcing(x, t, params, linear)))
    }

    /// `M u = A u + alpha g_F trace0(u)`
    fn apply_m(&self, u: &[f64]) -> Vec<f64> {
        let w = self.op.trace_uxx0(u);
        self.op.apply(u, self.config.gains.alpha * w)
    }

    /// Feedback `F = alpha w + beta m` at the state's time.
    pub fn feedback(&self, state: &SimState) -> Result<f64> {
        let m = memory_integral_shifted(&state.history, &self.config.kernel, 0.0)?;
        Ok(self.config.gains.alpha * self.op.trace_uxx0(&state.u) + self.config.gains.beta * m)
    }

    /// Advance one step of size `dt`.
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let cfg = &self.config;
        let dt = cfg.dt;
        let n = state.u.len();
        let beta = cfg.gains.beta;
        let kernel = &cfg.kernel;
        let t = state.t_now;
        let linear = cfg.linear_only;

        let mut u_new;
        let mut nonlinear_now = None;
        if state.step_index < cfg.rannacher_steps {
            let half = 0.5 * dt;
            let mut u = state.u.clone();
            for stage in 1..=2 {
                let shift = half * stage as f64;
                let m = memory_integral_shifted(&state.history, kernel, shift)?;
                let mut rhs = u.clone();
                let gm = half * beta * m;
                for (r, g) in rhs.iter_mut().zip(&self.op.g_f) {
                    *r += gm * g;
                }
                if !linear {
                    let nl = self.nonlinear_term(&u);
                    for (r, v) in rhs.iter_mut().zip(&nl) {
                        *r += half * v;
                    }
                    if stage == 1 {
                        nonlinear_now = Some(nl);
                    }
                }
                if let Some(f) = self.forcing(t + shift) {
                    for (r, v) in rhs.iter_mut().zip(&f) {
                        *r += half * v;
                    }
                }
                self.half.solve_in_place(&mut rhs);
                u = rhs;
            }
            u_new = u;
        } else {
            let m0 = memory_integral_shifted(&state.history, kernel, 0.0)?;
            let m1 = memory_integral_shifted(&state.history, kernel, dt)?;
            let mu = self.apply_m(&state.u);
            let gm = dt * beta * 0.5 * (m0 + m1);
            u_new = Vec::with_capacity(n);
            for i in 0..n {
                u_new.push(state.u[i] + 0.5 * dt * mu[i] + gm * self.op.g_f[i]);
            }
            if !linear {
                let nl = self.nonlinear_term(&state.u);
                match &state.prev_nonlinear {
                    Some(prev) => {
                        for i in 0..n {
                            u_new[i] += dt * (1.5 * nl[i] - 0.5 * prev[i]);
                        }
                    }
                    None => {
                        for i in 0..n {
                            u_new[i] += dt * nl[i];
                        }
                    }
                }
                nonlinear_now = Some(nl);
            }
            if let (Some(f0), Some(f1)) = (self.forcing(t), self.forcing(t + dt)) {
                for i in 0..n {
                    u_new[i] += 0.5 * dt * (f0[i] + f1[i]);
                }
            }
            self.half.solve_in_place(&mut u_new);
        }

        let step_index = state.step_index + 1;
        let t_new = step_index as f64 * dt;
        if u_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: step_index,
                time: t_new,
            });
        }
        let mut history = state.history.clone();
        history.push(self.op.trace_uxx0(&u_new));
        Ok(SimState {
            u: u_new,
            history,
            t_now: t_new,
            step_index,
            prev_nonlinear: nonlinear_now,
        })
    }

    /// Run to `T_end`, calling `observe` on the initial state and every
    /// `record_every`-th state. With zero steps nothing is observed.
    pub fn run_with<F>(&self, mut observe: F) -> Result<SimState>
    where
        F: FnMut(&SimState) -> Result<()>,
    {
        let steps = self.config.n_steps();
        let mut state = self.initial_state()?;
        if steps == 0 {
            return Ok(state);
        }
        observe(&state)?;
        for _ in 0..steps {
            state = self.step(&state)?;
            if state.step_index % self.config.record_every == 0 {
                observe(&state)?;
            }
        }
        Ok(state)
    }

    /// Discrete L2 error against the manufactured solution.
    pub fn mms_error(&self, state: &SimState) -> Option<f64> {
        let m = self.config.mms?;
        let l = self.config.params.length;
        let h = self.grid().h;
        let err: f64 = state
            .u
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let e = v - m.exact(self.grid().x(j + 1), state.t_now, l);
                e * e
            })
            .sum();
        Some((h * err).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::mass_and_weighted_mass;
    use std::f64::consts::PI;

    fn reference(n: usize, dt: f64, t_end: f64) -> SimConfig {
        SimConfig {
            params: PhysicalParams::new(1.0, 1.0, PI, 1.0).unwrap(),
            gains: FeedbackGains::new(0.5, 0.25, 0.01, 0.01, 1.0).unwrap(),
            kernel: MemoryKernel::constant(1.0, 2.0, 1.0).unwrap(),
            n,
            dt,
            t_end,
            u0: InitialProfile::Bump { amplitude: 1.0 },
            z0: HistorySpec::Zero,
            data_norm: Some(0.25),
            mms: None,
            linear_only: true,
            record_every: 1,
            rannacher_steps: DEFAULT_RANNACHER_STEPS,
        }
    }

    #[test]
    fn polynomial_profile_scales_the_bump() {
        let l = 2.5;
        let bump = InitialProfile::Bump { amplitude: 1.0 };
        let c = InitialProfile::Polynomial { coefficients: vec![1.0] };
        let p = InitialProfile::Polynomial { coefficients: vec![0.5, -1.0, 2.0] };
        for i in 0..=20 {
            let x = l * i as f64 / 20.0;
            let xi = x / l;
            assert_eq!(c.eval(x, l), bump.eval(x, l));
            let want = bump.eval(x, l) * (0.5 - xi + 2.0 * xi * xi);
            assert!((p.eval(x, l) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let mut cfg = reference(32, 0.05, 1.0);
        cfg.u0 = InitialProfile::Zero;
        cfg.linear_only = false;
        let sim = Simulator::new(cfg).unwrap();
        let mut s = sim.initial_state().unwrap();
        for _ in 0..30 {
            s = sim.step(&s).unwrap();
            assert!(s.u.iter().all(|v| v.to_bits() == 0));
            assert_eq!(s.history.latest().to_bits(), 0);
        }
    }

    #[test]
    fn zero_end_time_gives_empty_trajectory() {
        let sim = Simulator::new(reference(32, 0.05, 0.0)).unwrap();
        let mut count = 0;
        let fin = sim
            .run_with(|_| {
                count += 1;
                Ok(())
            })
            .unwrap();
        assert_eq!(count, 0);
        assert_eq!(fin, sim.initial_state().unwrap());
    }

    #[test]
    fn step_count_rounds_up() {
        assert_eq!(reference(32, 0.01, 30.0).n_steps(), 3000);
        assert_eq!(reference(32, 0.3, 1.0).n_steps(), 4);
    }

    #[test]
    fn dt_above_tau1_rejected() {
        let cfg = reference(32, 1.5, 3.0);
        assert!(matches!(
            Simulator::new(cfg),
            Err(Error::InvalidParameter { name: "numerics.dt", .. })
        ));
    }

    #[test]
    fn data_norm_sets_initial_energy() {
        let mut cfg = reference(64, 0.02, 1.0);
        cfg.z0 = HistorySpec::Sinusoid {
            amplitude: 1.0,
            omega: 2.0,
            phase: 0.3,
        };
        let sim = Simulator::new(cfg).unwrap();
        let s = sim.initial_state().unwrap();
        assert!((sim.energy(&s).unwrap().sqrt() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn undamped_linear_energy_does_not_grow() {
        // no feedback at all: energy leaves only through the boundary
        let mut cfg = reference(64, 0.01, 3.0);
        cfg.gains.alpha = 0.0;
        cfg.gains.beta = 0.0;
        let sim = Simulator::new(cfg).unwrap();
        let mut s = sim.initial_state().unwrap();
        let mut prev = mass_and_weighted_mass(&s.u, sim.grid()).0;
        let tol = 1e-10 * prev;
        for _ in 0..300 {
            s = sim.step(&s).unwrap();
            let e = mass_and_weighted_mass(&s.u, sim.grid()).0;
            assert!(e <= prev + tol, "{e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn skew_form_conserves_discretely() {
        let sim = Simulator::new(reference(64, 0.01, 1.0)).unwrap();
        let u = sim.grid().sample(|x| (x * (PI - x)).sin() - 0.3 * x);
        let nl = sim.nonlinear_term(&u);
        let dot: f64 = u.iter().zip(&nl).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-13);
    }

    #[test]
    fn power_convention() {
        assert_eq!(power(-2.0, 1.0), -2.0);
        assert_eq!(power(-2.0, 2.0), 4.0);
        assert!((power(-4.0, 1.5) - 8.0).abs() < 1e-14);
        assert!((power(4.0, 1.5) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn nonlinear_term_matches_polynomial_form() {
        for p in [1.0, 2.0, 1.5] {
            let mut cfg = reference(256, 0.01, 1.0);
            cfg.params.p = p;
            let sim = Simulator::new(cfg).unwrap();
            // positive data so the fractional power is the ordinary one
            let f = |x: f64| (x * (PI - x)).powi(2) + 0.0;
            let u = sim.grid().sample(f);
            let nl = sim.nonlinear_term(&u);
            let h = sim.grid().h;
            for j in 20..236 {
                let x = sim.grid().x(j + 1);
                let ux = 2.0 * x * (PI - x) * (PI - 2.0 * x);
                let want = -f(x).powf(p) * ux;
                assert!((nl[j] - want).abs() < 50.0 * h * h * (1.0 + want.abs()), "p={p}");
            }
        }
    }

    #[test]
    fn mms_profile_derivatives_match_finite_differences() {
        let m = MmsSpec { amplitude: 1.0 };
        let l = 2.5;
        let f = |x: f64| m.profile_derivative(x, l, 0);
        let h = 1e-3;
        for &x in &[0.3, 1.1, 2.0] {
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((d1 - m.profile_derivative(x, l, 1)).abs() < 1e-5);
            let d = |k: usize| move |y: f64| m.profile_derivative(y, l, k);
            for k in 1..5 {
                let g = d(k);
                let fd = (g(x + h) - g(x - h)) / (2.0 * h);
                let want = m.profile_derivative(x, l, k + 1);
                assert!((fd - want).abs() < 1e-4 * (1.0 + want.abs()), "k={k}");
            }
        }
        // boundary compatibility
        for k in 0..3 {
            assert!(m.profile_derivative(0.0, l, k).abs() < 1e-12);
            assert!(m.profile_derivative(l, l, k).abs() < 1e-9);
        }
    }

    fn mms_error(n: usize, dt: f64, linear: bool) -> f64 {
        let mut cfg = reference(n, dt, 1.0);
        cfg.mms = Some(MmsSpec { amplitude: 0.2 });
        cfg.linear_only = linear;
        cfg.data_norm = None;
        cfg.record_every = 1000;
        let sim = Simulator::new(cfg).unwrap();
        let fin = sim.run_with(|_| Ok(())).unwrap();
        sim.mms_error(&fin).unwrap()
    }

    #[test]
    fn mms_converges_at_second_order_in_space_and_time() {
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| mms_error(n, 0.8 * PI / (n + 1) as f64, false))
            .collect();
        for w in errs.windows(2) {
            let q = (w[0] / w[1]).log2();
            assert!((1.8..=2.3).contains(&q), "order {q} {errs:?}");
        }
    }

    #[test]
    fn cfl_free_at_dt_equal_h() {
        let n = 512;
        let h = PI / (n + 1) as f64;
        let mut cfg = reference(n, h, 0.5);
        cfg.record_every = 10_000;
        let sim = Simulator::new(cfg).unwrap();
        let e0 = sim.energy(&sim.initial_state().unwrap()).unwrap();
        let fin = sim.run_with(|_| Ok(())).unwrap();
        let e1 = sim.energy(&fin).unwrap();
        assert!(e1.is_finite() && e1 <= e0);
    }
}
