//! History of the boundary trace `w(t) = u_xx(t, 0)` and the memory functionals
//! built from it.
//!
//! All integrals are written in the lag variable `sigma`, so `w(t - sigma)` is
//! read from the buffer at lag `sigma`. Quadrature is composite trapezoid on the
//! sample grid with linear interpolation at window ends that fall between
//! samples. Gain factors (`beta`, `|beta|`) are left to callers.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::MemoryKernel;

/// Slack on lag lookups so a window ending exactly on the oldest sample is accepted.
const LAG_SLACK: f64 = 1e-9;

/// Uniformly spaced trace samples, newest first: `samples[k] = w(t_now - k dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    dt: f64,
    t0: f64,
    steps: u64,
    capacity: usize,
    samples: VecDeque<f64>,
}

impl HistoryBuffer {
    /// Buffer at time `t_now` filled with `history(t)` at `t = t_now - k dt`.
    /// The buffer keeps `ceil(tau2 / dt) + 3` samples.
    pub fn new(dt: f64, tau2: f64, t_now: f64, history: impl Fn(f64) -> f64) -> Result<Self> {
        Self::with_extra_capacity(dt, tau2, t_now, 0, history)
    }

    /// As [`HistoryBuffer::new`] with `extra` additional retained samples.
    pub fn with_extra_capacity(
        dt: f64,
        tau2: f64,
        t_now: f64,
        extra: usize,
        history: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "must be positive".into(),
            });
        }
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tau2",
                reason: "must be positive".into(),
            });
        }
        let capacity = (tau2 / dt - 1e-9).ceil() as usize + 3 + extra;
        let samples = (0..capacity)
            .map(|k| history(t_now - k as f64 * dt))
            .collect();
        Ok(Self {
            dt,
            t0: t_now,
            steps: 0,
            capacity,
            samples,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_now(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Largest lag the buffer can answer.
    pub fn span(&self) -> f64 {
        (self.samples.len().saturating_sub(1)) as f64 * self.dt
    }

    /// Newest sample `w(t_now)`.
    pub fn latest(&self) -> f64 {
        self.samples[0]
    }

    /// Replace the newest sample (used when the trace at `t_now` is recomputed).
    pub fn set_latest(&mut self, w: f64) {
        self.samples[0] = w;
    }

    /// Sample at lag `k dt`.
    pub fn sample(&self, k: usize) -> Option<f64> {
        self.samples.get(k).copied()
    }

    /// Advance `t_now` by `dt` with the new trace value; evicts the oldest sample.
    pub fn push(&mut self, w_new: f64) {
        self.samples.push_front(w_new);
        self.steps += 1;
        while self.samples.len() > self.capacity {
            self.samples.pop_back();
        }
    }

    /// `w(t_now - lag)` with linear interpolation between samples.
    pub fn at_lag(&self, lag: f64) -> Result<f64> {
        let pos = lag / self.dt;
        if lag < -LAG_SLACK * self.dt || pos > self.span() / self.dt + LAG_SLACK {
            return Err(Error::InsufficientHistory {
                needed: lag,
                available: self.span(),
            });
        }
        let pos = pos.max(0.0);
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        let lo = self.samples[k.min(self.samples.len() - 1)];
        if frac <= 0.0 || k + 1 >= self.samples.len() {
            return Ok(lo);
        }
        Ok(lo + frac * (self.samples[k + 1] - lo))
    }

    /// `w(t)` for `t` within the retained window.
    pub fn lookup(&self, t: f64) -> Result<f64> {
        self.at_lag(self.t_now() - t)
    }

    /// Trapezoid of `g(sigma, w(t_now + shift - sigma))` for `sigma` in `[lo, hi]`.
    ///
    /// Nodes are the sample lags inside the window plus both endpoints.
    pub fn window_integral(
        &self,
        lo: f64,
        hi: f64,
        shift: f64,
        g: impl Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let dt = self.dt;
        let value = |sigma: f64| -> Result<f64> { Ok(g(sigma, self.at_lag(sigma - shift)?)) };
        // sample lags k dt correspond to sigma = k dt + shift
        let first = ((lo - shift) / dt).floor() as i64 + 1;
        let mut prev_s = lo;
        let mut prev_v = value(lo)?;
        let mut acc = 0.0;
        let mut k = first.max(0);
        loop {
            let s = k as f64 * dt + shift;
            if s >= hi - 1e-12 * dt {
                break;
            }
            if s > prev_s + 1e-12 * dt {
                let v = g(s, self.samples_at(k as usize)?);
                acc += 0.5 * (s - prev_s) * (prev_v + v);
                prev_s = s;
                prev_v = v;
            }
            k += 1;
        }
        let v = value(hi)?;
        acc += 0.5 * (hi - prev_s) * (prev_v + v);
        Ok(acc)
    }

    fn samples_at(&self, k: usize) -> Result<f64> {
        self.samples
            .get(k)
            .copied()
            .ok_or(Error::InsufficientHistory {
                needed: k as f64 * self.dt,
                available: self.span(),
            })
    }
}

/// `int_{tau1}^{tau2} lambda(sigma) w(t - sigma) d sigma` at `t = t_now`.
pub fn memory_integral(buf: &HistoryBuffer, kernel: &MemoryKernel) -> Result<f64> {
    memory_integral_shifted(buf, kernel, 0.0)
}

/// Memory integral at `t_now + shift`; needs `shift <= tau1`.
pub fn memory_integral_shifted(
    buf: &HistoryBuffer,
    kernel: &MemoryKernel,
    shift: f64,
) -> Result<f64> {
    buf.window_integral(kernel.tau1, kernel.tau2, shift, |s, w| kernel.eval(s) * w)
}

/// Weight `W(sigma)` inside the memory energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZWeight {
    Plain,
    /// `exp(-delta sigma)`
    Exp(f64),
}

impl ZWeight {
    fn eval(self, sigma: f64) -> f64 {
        match self {
            ZWeight::Plain => 1.0,
            ZWeight::Exp(delta) => (-delta * sigma).exp(),
        }
    }
}

/// `int_{tau1}^{tau2} lambda(s) int_0^s W(sigma) w^2(t - sigma) d sigma ds`.
///
/// Inner integral by cumulative trapezoid on the sample lags, outer by
/// trapezoid on the sample lags inside `(tau1, tau2)` plus both endpoints.
pub fn z_energy(buf: &HistoryBuffer, kernel: &MemoryKernel, weight: ZWeight) -> Result<f64> {
    let dt = buf.dt();
    let needed = kernel.tau2;
    if needed > buf.span() + LAG_SLACK * dt {
        return Err(Error::InsufficientHistory {
            needed,
            available: buf.span(),
        });
    }
    let kmax = ((needed / dt).ceil() as usize).min(buf.len() - 1);
    let integrand = |k: usize| {
        let w = buf.samples[k];
        weight.eval(k as f64 * dt) * w * w
    };
    let mut cumulative = Vec::with_capacity(kmax + 1);
    cumulative.push(0.0);
    for k in 1..=kmax {
        let prev = cumulative[k - 1];
        cumulative.push(prev + 0.5 * dt * (integrand(k - 1) + integrand(k)));
    }
    let inner = |s: f64| -> Result<f64> {
        let k = ((s / dt).floor() as usize).min(kmax);
        let sk = k as f64 * dt;
        if s - sk <= 1e-12 * dt {
            return Ok(cumulative[k]);
        }
        let w = buf.at_lag(s)?;
        let v = weight.eval(s) * w * w;
        Ok(cumulative[k] + 0.5 * (s - sk) * (integrand(k) + v))
    };
    buf.window_integral(kernel.tau1, kernel.tau2, 0.0, |s, _| {
        kernel.eval(s) * inner(s).unwrap_or(f64::NAN)
    })
}

/// Weight on `lambda(s) w^2(t - s)` in the boundary norms of the transport variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryWeight {
    /// `1`
    Plain,
    /// `exp(-delta s)`
    Exp(f64),
    /// `s`
    S,
}

/// `int_{tau1}^{tau2} W(s) lambda(s) w^2(t - s) ds` at `t = t_now + shift`.
pub fn boundary_norm(
    buf: &HistoryBuffer,
    kernel: &MemoryKernel,
    weight: BoundaryWeight,
    shift: f64,
) -> Result<f64> {
    buf.window_integral(kernel.tau1, kernel.tau2, shift, |s, w| {
        let ws = match weight {
            BoundaryWeight::Plain => 1.0,
            BoundaryWeight::Exp(delta) => (-delta * s).exp(),
            BoundaryWeight::S => s,
        };
        ws * kernel.eval(s) * w * w
    })
}

/// `int_{tau1}^{tau2} exp(-delta s) lambda(s) w^2(t - s) ds`.
pub fn z_boundary_norm(buf: &HistoryBuffer, kernel: &MemoryKernel, delta: f64) -> Result<f64> {
    boundary_norm(buf, kernel, BoundaryWeight::Exp(delta), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use crate::rng::Lcg64;
    use proptest::prelude::*;

    fn unit() -> MemoryKernel {
        MemoryKernel::constant(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn zero_pushes_stay_zero() {
        let mut b = HistoryBuffer::new(0.1, 2.0, 0.0, |_| 0.0).unwrap();
        for _ in 0..100 {
            b.push(0.0);
        }
        assert!((0..b.len()).all(|k| b.sample(k) == Some(0.0)));
        assert_eq!(memory_integral(&b, &unit()).unwrap(), 0.0);
        assert_eq!(z_energy(&b, &unit(), ZWeight::Plain).unwrap(), 0.0);
        assert_eq!(z_boundary_norm(&b, &unit(), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn fifo_and_capacity() {
        let dt = 0.03;
        let mut b = HistoryBuffer::new(dt, 2.0, 0.0, |_| -1.0).unwrap();
        let cap = (2.0_f64 / dt).ceil() as usize + 3;
        assert_eq!(b.capacity(), cap);
        for k in 1..=500 {
            b.push(k as f64);
            assert!(b.len() <= cap);
            assert_eq!(b.lookup(b.t_now()).unwrap(), k as f64);
        }
        assert_eq!(b.sample(3), Some(497.0));
        assert!((b.t_now() - 15.0).abs() < 1e-12);
        assert!(b.span() >= 2.0 + dt);
    }

    #[test]
    fn initial_history_is_sampled() {
        let b = HistoryBuffer::new(0.25, 1.0, 0.0, |t| t * t).unwrap();
        for k in 0..b.len() {
            let t = -(k as f64) * 0.25;
            assert_eq!(b.sample(k), Some(t * t));
        }
    }

    #[test]
    fn memory_integral_examples() {
        let k = unit();
        let b = HistoryBuffer::new(0.1, 2.0, 0.0, |_| 3.0).unwrap();
        assert!((memory_integral(&b, &k).unwrap() - 3.0).abs() < 1e-14);
        // w(t) = t at t_now = 5, dt not dividing the lags
        for dt in [0.1, 0.07, 0.3] {
            let b = HistoryBuffer::new(dt, 2.0, 5.0, |t| t).unwrap();
            let m = memory_integral(&b, &k).unwrap();
            assert!((m - 3.5).abs() < 1e-12, "dt {dt}: {m}");
        }
    }

    #[test]
    fn shifted_memory_integral_matches_advanced_buffer() {
        let k = unit();
        let dt = 0.05;
        let f = |t: f64| (0.7 * t).sin() + 0.2 * t;
        let b = HistoryBuffer::new(dt, 2.0, 3.0, f).unwrap();
        let mut advanced = b.clone();
        advanced.push(f(3.0 + dt));
        let shifted = memory_integral_shifted(&b, &k, dt).unwrap();
        let direct = memory_integral(&advanced, &k).unwrap();
        assert!((shifted - direct).abs() < 1e-14);
    }

    #[test]
    fn z_energy_examples() {
        let k = unit();
        let b = HistoryBuffer::new(0.01, 2.0, 0.0, |_| 1.0).unwrap();
        let plain = z_energy(&b, &k, ZWeight::Plain).unwrap();
        assert!((plain - 1.5).abs() < 1e-12);
        let exp = z_energy(&b, &k, ZWeight::Exp(1.0)).unwrap();
        let exact = 1.0 - ((-1.0f64).exp() - (-2.0f64).exp());
        assert!((exact - 0.76746).abs() < 1e-5);
        assert!((exp - exact).abs() < 1e-5);
        let zero = HistoryBuffer::new(0.01, 2.0, 0.0, |_| 0.0).unwrap();
        assert_eq!(z_energy(&zero, &k, ZWeight::Plain).unwrap(), 0.0);
    }

    #[test]
    fn boundary_norm_examples() {
        let k = unit();
        let ones = HistoryBuffer::new(0.01, 2.0, 0.0, |_| 1.0).unwrap();
        assert!((z_boundary_norm(&ones, &k, 0.0).unwrap() - 1.0).abs() < 1e-13);
        let twos = HistoryBuffer::new(0.01, 2.0, 0.0, |_| 2.0).unwrap();
        let v = z_boundary_norm(&twos, &k, 1.0).unwrap();
        let exact = 4.0 * ((-1.0f64).exp() - (-2.0f64).exp());
        assert!((exact - 0.93017).abs() < 1e-5);
        assert!((v - exact).abs() < 1e-5);
        let s = boundary_norm(&ones, &k, BoundaryWeight::S, 0.0).unwrap();
        assert!((s - 1.5).abs() < 1e-13);
    }

    #[test]
    fn insufficient_span_is_reported() {
        let b = HistoryBuffer::new(0.1, 1.0, 0.0, |_| 1.0).unwrap();
        let long = MemoryKernel::constant(1.0, 3.0, 1.0).unwrap();
        assert!(matches!(
            memory_integral(&b, &long),
            Err(Error::InsufficientHistory { .. })
        ));
        assert!(matches!(
            z_energy(&b, &long, ZWeight::Plain),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn change_of_variable_matches_rho_form() {
        // rho form: int lambda(s) s int_0^1 w^2(t - s rho) d rho ds, w = sin, lambda = 1
        let t = 4.0;
        let rho_form = adaptive_simpson(
            |s| {
                s * adaptive_simpson(|r| (t - s * r).sin().powi(2), 0.0, 1.0, 1e-13).unwrap()
            },
            1.0,
            2.0,
            1e-11,
        )
        .unwrap();
        let k = unit();
        let errs: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&dt| {
                let b = HistoryBuffer::new(dt, 2.0, t, |x| x.sin()).unwrap();
                (z_energy(&b, &k, ZWeight::Plain).unwrap() - rho_form).abs()
            })
            .collect();
        assert!(errs[0] < 1e-3);
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn eviction_does_not_change_results() {
        let k = MemoryKernel::constant(0.3, 1.7, 2.0).unwrap();
        let f = |t: f64| (1.3 * t).cos() * (0.2 * t).exp();
        let dt = 0.013;
        let mut short = HistoryBuffer::new(dt, k.tau2, 0.0, f).unwrap();
        let mut long = HistoryBuffer::with_extra_capacity(dt, k.tau2, 0.0, 8, f).unwrap();
        for n in 1..400 {
            let w = f(n as f64 * dt);
            short.push(w);
            long.push(w);
        }
        assert_eq!(
            memory_integral(&short, &k).unwrap().to_bits(),
            memory_integral(&long, &k).unwrap().to_bits()
        );
        assert_eq!(
            z_energy(&short, &k, ZWeight::Exp(0.5)).unwrap().to_bits(),
            z_energy(&long, &k, ZWeight::Exp(0.5)).unwrap().to_bits()
        );
    }

    #[test]
    fn random_histories_obey_linearity_and_cauchy_schwarz() {
        let mut rng = Lcg64::new(11);
        for _ in 0..200 {
            let tau1 = rng.uniform(0.05, 1.0);
            let tau2 = tau1 + rng.uniform(0.1, 2.0);
            let c = rng.uniform(0.1, 3.0);
            let k = MemoryKernel::constant(tau1, tau2, c).unwrap();
            let dt = rng.uniform(0.005, tau1.min(0.1));
            let vals: Vec<f64> = (0..1000).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let b = HistoryBuffer::new(dt, tau2, 0.0, |t| vals[((-t / dt).round() as usize) % 1000])
                .unwrap();
            let b2 = HistoryBuffer::new(dt, tau2, 0.0, |t| {
                2.0 * vals[((-t / dt).round() as usize) % 1000]
            })
            .unwrap();
            let m = memory_integral(&b, &k).unwrap();
            assert_eq!(memory_integral(&b2, &k).unwrap(), 2.0 * m);
            let sq = boundary_norm(&b, &k, BoundaryWeight::Plain, 0.0).unwrap();
            assert!(m * m <= k.lambda_integral * sq * (1.0 + 1e-12) + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cauchy_schwarz_for_smooth_histories(
            amp in -10.0f64..10.0,
            omega in 0.0f64..20.0,
            phase in 0.0f64..6.3,
            offset in -3.0f64..3.0,
            dt in 0.003f64..0.2,
        ) {
            let k = unit();
            let b = HistoryBuffer::new(dt, 2.0, 0.0, |t| offset + amp * (omega * t + phase).sin()).unwrap();
            let m = memory_integral(&b, &k).unwrap();
            let sq = boundary_norm(&b, &k, BoundaryWeight::Plain, 0.0).unwrap();
            prop_assert!(m * m <= k.lambda_integral * sq + 1e-12 * (1.0 + m * m));
        }
    }
}
