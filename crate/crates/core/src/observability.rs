//! Numerical evidence for the observability inequality of the linear system.
//!
//! For data with `||(u0, z0)||_H = 1` the ratio is
//! `int_0^T (w^2(t) + int s lambda(s) w^2(t - s) ds) dt`; a positive minimum
//! over many samples is evidence for the inequality with `C = 1 / c_obs`.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{run, DiagnosticsRecord};
use crate::error::Result;
use crate::quadrature::trapezoid;
use crate::rng::Lcg64;
use crate::solver::{HistorySpec, InitialProfile, SimConfig, Simulator};

/// Number of polynomial coefficients in a random profile.
pub const RANDOM_COEFFICIENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservabilityEstimate {
    /// `min_k ratio_k`
    pub c_obs: f64,
    pub ratios: Vec<f64>,
    pub horizon: f64,
}

/// Observed output energy of one trajectory divided by `E(0)`.
pub fn observed_ratio(records: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    if first.e <= 0.0 {
        return 0.0;
    }
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = records
        .iter()
        .map(|r| r.w0 * r.w0 + r.boundary_s)
        .collect();
    trapezoid(&ts, &ys) / first.e
}

/// Ratio for the configuration's own initial data, normalized to unit norm.
pub fn observability_ratio(config: &SimConfig, horizon: f64) -> Result<f64> {
    let mut cfg = linear_unit(config, horizon);
    cfg.u0 = config.u0.clone();
    cfg.z0 = config.z0.clone();
    let traj = run(&Simulator::new(cfg)?)?;
    Ok(observed_ratio(&traj.records))
}

fn linear_unit(config: &SimConfig, horizon: f64) -> SimConfig {
    let mut cfg = config.clone();
    cfg.linear_only = true;
    cfg.mms = None;
    cfg.t_end = horizon;
    cfg.record_every = 1;
    cfg.data_norm = Some(1.0);
    cfg
}

/// Random smooth data drawn from `Lcg64::fork(seed, index)`: the bump profile
/// times a polynomial in `x / L` with `RANDOM_COEFFICIENTS` uniform coefficients
/// in `[-1, 1]`, plus a sinusoidal history with amplitude in `[-1, 1]`, frequency
/// in `[0.5, 3]` and phase in `[0, 2 pi)`.
///
/// Profiles stay at low wavenumbers so that the reference time steps resolve
/// their dispersion.
pub fn random_data(seed: u64, index: u64) -> (InitialProfile, HistorySpec) {
    let mut rng = Lcg64::fork(seed, index);
    let coefficients = (0..RANDOM_COEFFICIENTS)
        .map(|_| rng.uniform(-1.0, 1.0))
        .collect();
    let amplitude = rng.uniform(-1.0, 1.0);
    let omega = rng.uniform(0.5, 3.0);
    let phase = rng.uniform(0.0, std::f64::consts::TAU);
    (
        InitialProfile::Polynomial { coefficients },
        HistorySpec::Sinusoid {
            amplitude,
            omega,
            phase,
        },
    )
}

/// Run `n_samples` random unit-norm linear problems on `[0, horizon]` in parallel.
pub fn estimate_observability(
    config: &SimConfig,
    n_samples: usize,
    horizon: f64,
    seed: u64,
) -> Result<ObservabilityEstimate> {
    let ratios = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut cfg = linear_unit(config, horizon);
            let (u0, z0) = random_data(seed, k);
            cfg.u0 = u0;
            cfg.z0 = z0;
            let traj = run(&Simulator::new(cfg)?)?;
            Ok(observed_ratio(&traj.records))
        })
        .collect::<Result<Vec<f64>>>()?;
    let c_obs = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ObservabilityEstimate {
        c_obs: if ratios.is_empty() { 0.0 } else { c_obs },
        ratios,
        horizon,
    })
}
