//! Physical parameters, the memory kernel, feedback gains and the closed-form
//! certificates (gain condition, critical length, the dissipation matrices and
//! the guaranteed decay rate).
//!
//! Every certificate here is evaluated from exact 2x2 closed forms. No
//! eigenvalue solver is involved, so the checks are reproducible to the bit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::adaptive_simpson;

/// Tolerance used by tabulated-kernel moments that have no closed form.
pub const MOMENT_TOL: f64 = 1e-10;

/// Coefficients of `u_t + a u_x + b u_xxx - u_xxxxx + u^p u_x = 0` on `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub p: f64,
}

impl PhysicalParams {
    pub fn new(a: f64, b: f64, length: f64, p: f64) -> Result<Self> {
        let params = Self { a, b, length, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid("a", "must be positive"));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(invalid("b", "must be positive"));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid("L", "must be positive"));
        }
        if !(1.0..=2.0).contains(&self.p) {
            return Err(invalid("p", "must lie in [1, 2]"));
        }
        Ok(())
    }
}

/// Shape of the memory kernel on `(tau1, tau2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case")]
pub enum KernelForm {
    /// `lambda(s) = c`
    Constant { c: f64 },
    /// `lambda(s) = c * exp(-sigma * s)`
    Exponential { c: f64, sigma: f64 },
    /// Piecewise-linear interpolation of the samples `(s[i], values[i])`.
    Tabulated { s: Vec<f64>, values: Vec<f64> },
}

/// Weight multiplying `lambda` in a kernel moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentWeight {
    One,
    S,
    /// `s * exp(-delta * rho * s)` at a fixed `rho`.
    SExp { delta: f64, rho: f64 },
}

/// Positive, bounded memory kernel on `(tau1, tau2)` with cached moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryKernel {
    pub tau1: f64,
    pub tau2: f64,
    #[serde(flatten)]
    pub form: KernelForm,
    pub lambda_integral: f64,
    pub s_lambda_integral: f64,
}

impl MemoryKernel {
    pub fn new(tau1: f64, tau2: f64, form: KernelForm) -> Result<Self> {
        if !(tau1 > 0.0 && tau1.is_finite()) {
            return Err(invalid("tau1", "must be positive"));
        }
        if !(tau2 > tau1 && tau2.is_finite()) {
            return Err(invalid("tau2", "must exceed tau1"));
        }
        match &form {
            KernelForm::Constant { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(invalid("kernel.c", "must be positive"));
                }
            }
            KernelForm::Exponential { c, sigma } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(invalid("kernel.c", "must be positive"));
                }
                if !sigma.is_finite() {
                    return Err(invalid("kernel.sigma", "must be finite"));
                }
            }
            KernelForm::Tabulated { s, values } => {
                if s.len() < 2 || s.len() != values.len() {
                    return Err(invalid(
                        "kernel.s",
                        "need at least two samples and matching value count",
                    ));
                }
                if s.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("kernel.s", "sample points must increase strictly"));
                }
                if s[0] > tau1 || s[s.len() - 1] < tau2 {
                    return Err(invalid("kernel.s", "samples must cover [tau1, tau2]"));
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(invalid("kernel.values", "must be positive and finite"));
                }
            }
        }
        let mut kernel = Self {
            tau1,
            tau2,
            form,
            lambda_integral: 0.0,
            s_lambda_integral: 0.0,
        };
        kernel.lambda_integral = kernel.moment(MomentWeight::One)?;
        kernel.s_lambda_integral = kernel.moment(MomentWeight::S)?;
        if kernel.lambda_integral <= 0.0 {
            return Err(Error::ZeroKernelMass);
        }
        Ok(kernel)
    }

    /// Constant kernel `lambda = c` on `(tau1, tau2)`.
    pub fn constant(tau1: f64, tau2: f64, c: f64) -> Result<Self> {
        Self::new(tau1, tau2, KernelForm::Constant { c })
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.form {
            KernelForm::Constant { c } => *c,
            KernelForm::Exponential { c, sigma } => c * (-sigma * s).exp(),
            KernelForm::Tabulated { s: xs, values } => interp_linear(xs, values, s),
        }
    }

    /// `int_{tau1}^{tau2} weight(s) lambda(s) ds`.
    pub fn moment(&self, weight: MomentWeight) -> Result<f64> {
        let (a, b) = (self.tau1, self.tau2);
        match (&self.form, weight) {
            (KernelForm::Constant { c }, MomentWeight::One) => Ok(c * (b - a)),
            (KernelForm::Constant { c }, MomentWeight::S) => Ok(c * 0.5 * (b * b - a * a)),
            (KernelForm::Constant { c }, MomentWeight::SExp { delta, rho }) => {
                Ok(c * s_exp_integral(delta * rho, a, b))
            }
            (KernelForm::Exponential { c, sigma }, MomentWeight::One) => {
                Ok(c * exp_integral(*sigma, a, b))
            }
            (KernelForm::Exponential { c, sigma }, MomentWeight::S) => {
                Ok(c * s_exp_integral(*sigma, a, b))
            }
            (KernelForm::Exponential { c, sigma }, MomentWeight::SExp { delta, rho }) => {
                Ok(c * s_exp_integral(sigma + delta * rho, a, b))
            }
            (KernelForm::Tabulated { s, values }, MomentWeight::One) => {
                Ok(piecewise_linear_moment(s, values, a, b, false))
            }
            (KernelForm::Tabulated { s, values }, MomentWeight::S) => {
                Ok(piecewise_linear_moment(s, values, a, b, true))
            }
            (KernelForm::Tabulated { .. }, MomentWeight::SExp { delta, rho }) => {
                let rate = delta * rho;
                let f = |x: f64| x * (-rate * x).exp() * self.eval(x);
                // integrate segment by segment so the kinks of the interpolant sit on nodes
                let mut total = 0.0;
                for (lo, hi) in self.segments() {
                    total += adaptive_simpson(f, lo, hi, MOMENT_TOL)?;
                }
                Ok(total)
            }
        }
    }

    /// Sub-intervals of `[tau1, tau2]` on which the kernel is smooth.
    fn segments(&self) -> Vec<(f64, f64)> {
        match &self.form {
            KernelForm::Tabulated { s, .. } => {
                let mut pts = vec![self.tau1];
                pts.extend(s.iter().copied().filter(|&x| x > self.tau1 && x < self.tau2));
                pts.push(self.tau2);
                pts.windows(2).map(|w| (w[0], w[1])).collect()
            }
            _ => vec![(self.tau1, self.tau2)],
        }
    }
}

pub(crate) fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Exact moment of the piecewise-linear interpolant, weight 1 or s.
fn piecewise_linear_moment(xs: &[f64], ys: &[f64], a: f64, b: f64, with_s: bool) -> f64 {
    let mut pts = vec![a];
    pts.extend(xs.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.windows(2)
        .map(|w| {
            let (x0, x1) = (w[0], w[1]);
            let (l0, l1) = (interp_linear(xs, ys, x0), interp_linear(xs, ys, x1));
            if with_s {
                (x1 - x0) / 6.0 * (x0 * (2.0 * l0 + l1) + x1 * (l0 + 2.0 * l1))
            } else {
                0.5 * (x1 - x0) * (l0 + l1)
            }
        })
        .sum()
}

/// `int_a^b exp(-k s) ds`
fn exp_integral(k: f64, a: f64, b: f64) -> f64 {
    if k == 0.0 {
        b - a
    } else {
        (-k * a).exp() * -(-k * (b - a)).exp_m1() / k
    }
}

/// `int_a^b s exp(-k s) ds`
fn s_exp_integral(k: f64, a: f64, b: f64) -> f64 {
    if (k * b).abs() < 1e-4 {
        let p = |n: i32| b.powi(n) - a.powi(n);
        return p(2) / 2.0 - k * p(3) / 3.0 + k * k * p(4) / 8.0 - k * k * k * p(5) / 30.0;
    }
    let anti = |s: f64| -(-k * s).exp() * (k * s + 1.0) / (k * k);
    anti(b) - anti(a)
}

/// Feedback gains and Lyapunov weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGains {
    pub alpha: f64,
    pub beta: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub delta: f64,
}

impl FeedbackGains {
    pub fn new(alpha: f64, beta: f64, mu1: f64, mu2: f64, delta: f64) -> Result<Self> {
        let g = Self {
            alpha,
            beta,
            mu1,
            mu2,
            delta,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return Err(invalid("alpha", "must be finite and nonzero"));
        }
        if self.beta == 0.0 || !self.beta.is_finite() {
            return Err(invalid("beta", "must be finite and nonzero"));
        }
        if !(self.mu1 >= 0.0 && self.mu1.is_finite()) {
            return Err(invalid("mu1", "must be non-negative"));
        }
        if !(self.mu2 >= 0.0 && self.mu2.is_finite()) {
            return Err(invalid("mu2", "must be non-negative"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be positive"));
        }
        Ok(())
    }
}

/// Real 2x2 matrix, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub fn symmetric(m11: f64, m12: f64, m22: f64) -> Self {
        Self([[m11, m12], [m12, m22]])
    }

    /// Determinant with Kahan's fused-multiply-add scheme.
    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let w = b * c;
        let e = (-b).mul_add(c, w);
        let f = a.mul_add(d, -w);
        f + e
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    /// `<M v, v>`
    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        let [[a, b], [c, d]] = self.0;
        v[0] * (a * v[0] + b * v[1]) + v[1] * (c * v[0] + d * v[1])
    }
}

impl std::ops::Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut r = self.0;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += o.0[i][j];
            }
        }
        Mat2(r)
    }
}

impl Serialize for Mat2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Value of `|alpha| + |beta| int lambda` and whether it is `< 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainCheck {
    pub value: f64,
    pub ok: bool,
}

pub fn check_gain_condition(gains: &FeedbackGains, kernel: &MemoryKernel) -> GainCheck {
    let value = gains.alpha.abs() + gains.beta.abs() * kernel.lambda_integral;
    GainCheck {
        value,
        ok: value < 1.0,
    }
}

/// `sqrt(3b/a) * pi`
pub fn critical_length(params: &PhysicalParams) -> f64 {
    (3.0 * params.b / params.a).sqrt() * PI
}

pub fn length_ok(params: &PhysicalParams) -> bool {
    params.length < critical_length(params)
}

/// Dissipation matrix of the boundary quadratic form in `V = (u_xx(0), int lambda z(1,s))`.
pub fn assemble_p(gains: &FeedbackGains, kernel: &MemoryKernel) -> Result<Mat2> {
    let mass = kernel.lambda_integral;
    if mass == 0.0 {
        return Err(Error::ZeroKernelMass);
    }
    let (alpha, beta) = (gains.alpha, gains.beta);
    Ok(Mat2::symmetric(
        alpha * alpha - 1.0 + beta.abs() * mass,
        alpha * beta,
        beta * beta - beta.abs() / mass,
    ))
}

/// Matrix of the adjoint boundary form; off-diagonal uses `alpha |beta|`.
pub fn assemble_p_star(gains: &FeedbackGains, kernel: &MemoryKernel) -> Result<Mat2> {
    let p = assemble_p(gains, kernel)?;
    let off = gains.alpha * gains.beta.abs();
    Ok(Mat2::symmetric(p.0[0][0], off, p.0[1][1]))
}

/// `det P = |beta| / int lambda * ((1 - |beta| int lambda)^2 - alpha^2)`
pub fn closed_form_det_p(gains: &FeedbackGains, kernel: &MemoryKernel) -> f64 {
    let mass = kernel.lambda_integral;
    let b = gains.beta.abs();
    let margin = 1.0 - b * mass;
    b / mass * (margin * margin - gains.alpha * gains.alpha)
}

/// `P + mu1 L [[a^2, ab], [ab, b^2]] + mu2 [[|beta| int lambda, 0], [0, 0]]`
pub fn assemble_t(
    gains: &FeedbackGains,
    kernel: &MemoryKernel,
    params: &PhysicalParams,
) -> Result<Mat2> {
    let p = assemble_p(gains, kernel)?;
    let (alpha, beta) = (gains.alpha, gains.beta);
    let w1 = gains.mu1 * params.length;
    let p_mu1 = Mat2::symmetric(w1 * alpha * alpha, w1 * alpha * beta, w1 * beta * beta);
    let p_mu2 = Mat2::symmetric(gains.mu2 * beta.abs() * kernel.lambda_integral, 0.0, 0.0);
    Ok(p + p_mu1 + p_mu2)
}

/// A symmetric 2x2 matrix is negative definite iff `det > 0` and `tr < 0`.
pub fn is_negative_definite(m: &Mat2) -> Result<bool> {
    let asym = (m.0[0][1] - m.0[1][0]).abs();
    let scale = m.0[0][1].abs().max(m.0[1][0].abs()).max(1.0);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(m.det() > 0.0 && m.trace() < 0.0)
}

/// Smallness radius `((p+2)(3 pi^2 b - a L^2) / (2 pi^2 L^(2-p/2)))^(1/p)`.
pub fn r_max(params: &PhysicalParams) -> Result<f64> {
    if !length_ok(params) {
        return Err(Error::LengthConditionViolated {
            length: params.length,
            critical: critical_length(params),
        });
    }
    let PhysicalParams { a, b, length, p } = *params;
    let pi2 = PI * PI;
    let num = (p + 2.0) * (3.0 * pi2 * b - a * length * length);
    let den = 2.0 * pi2 * length.powf(2.0 - 0.5 * p);
    Ok((num / den).powf(1.0 / p))
}

/// The two terms whose minimum bounds the admissible decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    pub memory: f64,
    pub interior: f64,
}

impl RateTerms {
    pub fn min(&self) -> f64 {
        self.memory.min(self.interior)
    }
}

/// Both rate terms, without checking the certificates.
pub fn rate_terms(
    params: &PhysicalParams,
    gains: &FeedbackGains,
    kernel: &MemoryKernel,
    r: f64,
) -> RateTerms {
    let PhysicalParams { a, b, length, p } = *params;
    let beta = gains.beta.abs();
    let memory = gains.mu2 * beta * (-gains.delta * kernel.tau2).exp() * gains.delta
        / (2.0 * (1.0 + gains.mu1 * beta));
    let pi2 = PI * PI;
    let bracket = (p + 2.0) * (3.0 * pi2 * b - a * length * length)
        - 2.0 * pi2 * length.powf(2.0 - 0.5 * p) * r.powf(p);
    let interior = gains.mu1 / (2.0 * length * length * (1.0 + length * gains.mu1) * (p + 2.0))
        * bracket.max(0.0);
    RateTerms { memory, interior }
}

/// Supremum of the decay rates `mu` certified for data of radius `r`.
///
/// Fails on the first violated precondition: gain condition, length
/// condition, negativity of `T(mu1, mu2)`, then `r <= r_max`.
pub fn mu_guaranteed(
    params: &PhysicalParams,
    gains: &FeedbackGains,
    kernel: &MemoryKernel,
    r: f64,
) -> Result<f64> {
    if !check_gain_condition(gains, kernel).ok {
        return Err(Error::CertificateFailed("gain_condition"));
    }
    if !length_ok(params) {
        return Err(Error::CertificateFailed("length_condition"));
    }
    if !is_negative_definite(&assemble_t(gains, kernel, params)?)? {
        return Err(Error::CertificateFailed("t_negative_definite"));
    }
    let rm = r_max(params)?;
    if r.is_nan() || r < 0.0 || r > rm {
        return Err(Error::RadiusTooLarge { r, r_max: rm });
    }
    Ok(rate_terms(params, gains, kernel, r).min())
}

/// Halve `(mu1, mu2)` from `(1, 1)` until `T` is negative definite.
/// Returns the weights and the number of halvings, or `None` after 60.
pub fn find_certified_weights(
    gains: &FeedbackGains,
    kernel: &MemoryKernel,
    params: &PhysicalParams,
) -> Result<Option<(f64, f64, u32)>> {
    let mut g = *gains;
    g.mu1 = 1.0;
    g.mu2 = 1.0;
    for k in 0..=60 {
        if is_negative_definite(&assemble_t(&g, kernel, params)?)? {
            return Ok(Some((g.mu1, g.mu2, k)));
        }
        g.mu1 *= 0.5;
        g.mu2 *= 0.5;
    }
    Ok(None)
}

/// Everything `kaw check` reports.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub gain_condition_value: f64,
    pub gain_condition_ok: bool,
    pub critical_length: f64,
    pub length_ok: bool,
    #[serde(rename = "P")]
    pub p: Mat2,
    #[serde(rename = "P_star")]
    pub p_star: Mat2,
    #[serde(rename = "T")]
    pub t: Mat2,
    #[serde(rename = "detP")]
    pub det_p: f64,
    #[serde(rename = "trP")]
    pub tr_p: f64,
    #[serde(rename = "detT")]
    pub det_t: f64,
    #[serde(rename = "trT")]
    pub tr_t: f64,
    pub p_negative_definite: bool,
    pub t_negative_definite: bool,
    pub r_max: Option<f64>,
    /// Radius of the initial data the rate is evaluated at.
    pub r: f64,
    pub rate_terms: Option<RateTerms>,
    pub mu_guaranteed: Option<f64>,
    /// Names of failed checks, in evaluation order.
    pub failures: Vec<String>,
}

impl Certificate {
    pub fn evaluate(
        params: &PhysicalParams,
        gains: &FeedbackGains,
        kernel: &MemoryKernel,
        r: f64,
    ) -> Result<Self> {
        let gain = check_gain_condition(gains, kernel);
        let p = assemble_p(gains, kernel)?;
        let p_star = assemble_p_star(gains, kernel)?;
        let t = assemble_t(gains, kernel, params)?;
        let p_neg = is_negative_definite(&p)?;
        let t_neg = is_negative_definite(&t)?;
        let len_ok = length_ok(params);
        let rm = r_max(params).ok();
        let mu = mu_guaranteed(params, gains, kernel, r).ok();

        let mut failures = Vec::new();
        if !gain.ok {
            failures.push("gain_condition".to_string());
        }
        if !len_ok {
            failures.push("length_condition".to_string());
        }
        if !t_neg {
            failures.push("t_negative_definite".to_string());
        }
        if !rm.is_some_and(|v| v > 0.0) {
            failures.push("r_max".to_string());
        } else if rm.is_some_and(|v| r > v) {
            failures.push("radius".to_string());
        }
        if !mu.is_some_and(|v| v > 0.0) {
            failures.push("mu_guaranteed".to_string());
        }

        Ok(Self {
            gain_condition_value: gain.value,
            gain_condition_ok: gain.ok,
            critical_length: critical_length(params),
            length_ok: len_ok,
            p,
            p_star,
            t,
            det_p: p.det(),
            tr_p: p.trace(),
            det_t: t.det(),
            tr_t: t.trace(),
            p_negative_definite: p_neg,
            t_negative_definite: t_neg,
            r_max: rm,
            r,
            rate_terms: rm.map(|_| rate_terms(params, gains, kernel, r)),
            mu_guaranteed: mu,
            failures,
        })
    }

    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_kernel() -> MemoryKernel {
        MemoryKernel::constant(1.0, 2.0, 1.0).unwrap()
    }

    fn gains(alpha: f64, beta: f64) -> FeedbackGains {
        FeedbackGains::new(alpha, beta, 0.01, 0.01, 1.0).unwrap()
    }

    #[test]
    fn gain_condition_examples() {
        let k = unit_kernel();
        let g = check_gain_condition(&gains(0.5, 0.25), &k);
        assert_eq!(g.value, 0.75);
        assert!(g.ok);
        let g = check_gain_condition(&gains(0.9, 0.2), &k);
        assert_relative_eq!(g.value, 1.1, max_relative = 1e-15);
        assert!(!g.ok);
        let g = check_gain_condition(&gains(0.5, 0.5), &k);
        assert_eq!(g.value, 1.0);
        assert!(!g.ok, "equality must fail");
    }

    #[test]
    fn critical_length_examples() {
        let cl = |a, b| critical_length(&PhysicalParams::new(a, b, 1.0, 1.0).unwrap());
        assert_relative_eq!(cl(1.0, 1.0), PI * 3f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(cl(1.0, 1.0), 5.441398092702653, max_relative = 1e-15);
        assert_relative_eq!(cl(3.0, 1.0), PI, max_relative = 1e-15);
        assert_relative_eq!(cl(1.0, 3.0), 3.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn p_matrix_example() {
        let p = assemble_p(&gains(0.5, 0.25), &unit_kernel()).unwrap();
        assert_eq!(p.0, [[-0.5, 0.125], [0.125, -0.1875]]);
        let closed = closed_form_det_p(&gains(0.5, 0.25), &unit_kernel());
        assert!((closed - 0.078125).abs() < 1e-14);
        assert!((p.det() - closed).abs() < 1e-14);
        assert!(is_negative_definite(&p).unwrap());
    }

    #[test]
    fn p_star_shares_det_and_trace() {
        let g = gains(0.3, -0.4);
        let k = unit_kernel();
        let p = assemble_p(&g, &k).unwrap();
        let ps = assemble_p_star(&g, &k).unwrap();
        assert_relative_eq!(p.det(), ps.det(), max_relative = 1e-14);
        assert_eq!(p.trace(), ps.trace());
    }

    #[test]
    fn p_is_diagonal_without_damping() {
        // alpha = 0 is outside FeedbackGains' contract; build the struct directly
        let g = FeedbackGains {
            alpha: 0.0,
            beta: 0.5,
            mu1: 0.0,
            mu2: 0.0,
            delta: 1.0,
        };
        let p = assemble_p(&g, &unit_kernel()).unwrap();
        assert_eq!(p.0[0][1], 0.0);
        assert!(p.0[0][0] < 0.0 && p.0[1][1] < 0.0);
    }

    #[test]
    fn t_matrix_examples() {
        let params = PhysicalParams::new(1.0, 1.0, PI, 1.0).unwrap();
        let k = unit_kernel();
        let mut g = gains(0.5, 0.25);
        g.mu1 = 0.0;
        g.mu2 = 0.0;
        assert_eq!(
            assemble_t(&g, &k, &params).unwrap(),
            assemble_p(&g, &k).unwrap()
        );
        g.mu1 = 0.01;
        g.mu2 = 0.01;
        let t = assemble_t(&g, &k, &params).unwrap();
        // direct entries: P + 0.01 pi [[.25,.125],[.125,.0625]] + 0.01 [[.25,0],[0,0]]
        let w = 0.01 * PI;
        let direct = Mat2::symmetric(
            -0.5 + w * 0.25 + 0.0025,
            0.125 + w * 0.125,
            -0.1875 + w * 0.0625,
        );
        assert_relative_eq!(t.det(), direct.det(), max_relative = 1e-13);
        assert!(t.det() > 0.0 && t.trace() < 0.0);
        g.mu1 = 1e6;
        let t = assemble_t(&g, &k, &params).unwrap();
        assert!(t.det() < 0.0);
        assert!(!is_negative_definite(&t).unwrap());
    }

    #[test]
    fn negative_definite_examples() {
        assert!(is_negative_definite(&Mat2::symmetric(-1.0, 0.0, -1.0)).unwrap());
        assert!(!is_negative_definite(&Mat2::symmetric(1.0, 0.0, 1.0)).unwrap());
        let m = Mat2::symmetric(-1.0, 2.0, -1.0);
        assert_eq!(m.det(), -3.0);
        assert!(!is_negative_definite(&m).unwrap());
        let r = is_negative_definite(&Mat2([[-1.0, 0.5], [0.4, -1.0]]));
        assert!(matches!(r, Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn r_max_examples() {
        let p1 = PhysicalParams::new(1.0, 1.0, PI, 1.0).unwrap();
        assert_relative_eq!(r_max(&p1).unwrap(), 3.0 / PI.powf(1.5), max_relative = 1e-14);
        assert_relative_eq!(r_max(&p1).unwrap(), 0.538_761_4, max_relative = 1e-6);
        let p2 = PhysicalParams::new(1.0, 1.0, PI, 2.0).unwrap();
        assert_relative_eq!(r_max(&p2).unwrap(), (4.0 / PI).sqrt(), max_relative = 1e-14);

        let crit = critical_length(&p1);
        let near = PhysicalParams::new(1.0, 1.0, crit * (1.0 - 1e-9), 1.0).unwrap();
        assert!(r_max(&near).unwrap() < 1e-8);
        let beyond = PhysicalParams::new(1.0, 1.0, 10.0, 1.0).unwrap();
        assert!(matches!(
            r_max(&beyond),
            Err(Error::LengthConditionViolated { .. })
        ));
    }

    #[test]
    fn mu_guaranteed_examples() {
        let params = PhysicalParams::new(1.0, 1.0, PI, 1.0).unwrap();
        let k = unit_kernel();
        let g = gains(0.5, 0.25);
        // oracle: both closed-form terms evaluated by hand
        let term1 = 0.01 * 0.25 * (-2.0f64).exp() / (2.0 * (1.0 + 0.01 * 0.25));
        let term2 = 0.01 / (2.0 * PI * PI * (1.0 + 0.01 * PI) * 3.0)
            * (3.0 * 2.0 * PI * PI - 2.0 * PI * PI * PI.sqrt() * 0.1);
        assert_relative_eq!(term1, 1.6875e-4, max_relative = 1e-3);
        assert_relative_eq!(term2, 9.1226e-3, max_relative = 1e-4);
        let mu = mu_guaranteed(&params, &g, &k, 0.1).unwrap();
        assert_relative_eq!(mu, term1.min(term2), max_relative = 1e-13);

        let mut g0 = g;
        g0.mu2 = 0.0;
        assert_eq!(mu_guaranteed(&params, &g0, &k, 0.1).unwrap(), 0.0);

        let rm = r_max(&params).unwrap();
        let terms = rate_terms(&params, &g, &k, rm);
        assert!(terms.interior.abs() < 1e-15);
        assert!(mu_guaranteed(&params, &g, &k, rm).unwrap().abs() < 1e-15);

        let bad = gains(0.9, 0.2);
        assert_eq!(
            mu_guaranteed(&params, &bad, &k, 0.1),
            Err(Error::CertificateFailed("gain_condition"))
        );
        let long = PhysicalParams::new(1.0, 1.0, 10.0, 1.0).unwrap();
        assert_eq!(
            mu_guaranteed(&long, &g, &k, 0.1),
            Err(Error::CertificateFailed("length_condition"))
        );
    }

    #[test]
    fn kernel_moment_examples() {
        let k = MemoryKernel::constant(1.0, 3.0, 2.0).unwrap();
        assert_eq!(k.moment(MomentWeight::One).unwrap(), 4.0);
        assert_eq!(k.moment(MomentWeight::S).unwrap(), 8.0);
        let e = MemoryKernel::new(1.0, 2.0, KernelForm::Exponential { c: 1.0, sigma: 1.0 }).unwrap();
        let exact = (-1.0f64).exp() - (-2.0f64).exp();
        assert_relative_eq!(e.lambda_integral, exact, max_relative = 1e-14);
        assert_relative_eq!(e.lambda_integral, 0.23254, max_relative = 1e-4);
    }

    #[test]
    fn tabulated_kernel_moments_match_quadrature() {
        let k = MemoryKernel::new(
            0.5,
            2.5,
            KernelForm::Tabulated {
                s: vec![0.0, 1.0, 1.7, 3.0],
                values: vec![1.0, 2.0, 0.5, 1.5],
            },
        )
        .unwrap();
        let f1 = adaptive_simpson(|s| k.eval(s), 0.5, 1.0, 1e-13).unwrap()
            + adaptive_simpson(|s| k.eval(s), 1.0, 1.7, 1e-13).unwrap()
            + adaptive_simpson(|s| k.eval(s), 1.7, 2.5, 1e-13).unwrap();
        assert_relative_eq!(k.lambda_integral, f1, max_relative = 1e-12);
        let fs = adaptive_simpson(|s| s * k.eval(s), 0.5, 1.0, 1e-13).unwrap()
            + adaptive_simpson(|s| s * k.eval(s), 1.0, 1.7, 1e-13).unwrap()
            + adaptive_simpson(|s| s * k.eval(s), 1.7, 2.5, 1e-13).unwrap();
        assert_relative_eq!(k.s_lambda_integral, fs, max_relative = 1e-12);
        let w = k.moment(MomentWeight::SExp { delta: 1.0, rho: 0.5 }).unwrap();
        let fw = adaptive_simpson(|s| s * (-0.5 * s).exp() * k.eval(s), 0.5, 2.5, 1e-12).unwrap();
        assert_relative_eq!(w, fw, max_relative = 1e-8);
    }

    #[test]
    fn sexp_moment_matches_quadrature_all_forms() {
        for form in [
            KernelForm::Constant { c: 1.3 },
            KernelForm::Exponential { c: 0.7, sigma: 0.4 },
        ] {
            let k = MemoryKernel::new(0.8, 2.1, form).unwrap();
            for (delta, rho) in [(1.0, 0.0), (1.0, 0.3), (2.0, 1.0), (1e-7, 0.5)] {
                let got = k.moment(MomentWeight::SExp { delta, rho }).unwrap();
                let want =
                    adaptive_simpson(|s| s * (-delta * rho * s).exp() * k.eval(s), 0.8, 2.1, 1e-14)
                        .unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, 2.5).is_err());
        assert!(MemoryKernel::constant(2.0, 1.0, 1.0).is_err());
        assert!(MemoryKernel::constant(1.0, 2.0, -1.0).is_err());
        assert!(FeedbackGains::new(0.0, 0.1, 0.0, 0.0, 1.0).is_err());
        assert!(FeedbackGains::new(0.1, 0.1, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn certificate_reference_passes() {
        let params = PhysicalParams::new(1.0, 1.0, PI, 1.0).unwrap();
        let r = 0.5 * r_max(&params).unwrap();
        let c = Certificate::evaluate(&params, &gains(0.5, 0.25), &unit_kernel(), r).unwrap();
        assert!(c.all_ok(), "{:?}", c.failures);
        assert!(c.mu_guaranteed.unwrap() > 0.0);
    }
}
