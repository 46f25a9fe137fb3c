//! JSON run configuration.

use serde::{Deserialize, Serialize};

use kawahara_core::model::{
    r_max, FeedbackGains, KernelForm, MemoryKernel, PhysicalParams,
};
use kawahara_core::solver::{HistorySpec, InitialProfile, MmsSpec, SimConfig, DEFAULT_RANNACHER_STEPS};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: PhysicalParams,
    pub gains: FeedbackGains,
    pub kernel: KernelConfig,
    pub numerics: Numerics,
    pub initial: InitialConfig,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mms: Option<MmsSpec>,
    #[serde(default)]
    pub verify: VerifySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub tau1: f64,
    pub tau2: f64,
    #[serde(flatten)]
    pub form: KernelForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    #[serde(rename = "T_end")]
    pub t_end: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub linear_only: bool,
    /// Window `[t0, t1]` for the decay fit; defaults to `[T_end / 6, T_end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default = "default_rannacher")]
    pub rannacher_steps: usize,
}

fn one() -> usize {
    1
}

fn default_rannacher() -> usize {
    DEFAULT_RANNACHER_STEPS
}

/// Size of `(u0, z0)` in the energy norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataNorm {
    /// `||(u0, z0)||_H = fraction * r_max`
    FractionOfRMax(f64),
    /// `||(u0, z0)||_H = value`
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub u0: InitialProfile,
    #[serde(default = "zero_history")]
    pub z0: HistorySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<DataNorm>,
}

fn zero_history() -> HistorySpec {
    HistorySpec::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_report")]
    pub report: String,
}

fn default_csv() -> String {
    "series.csv".into()
}

fn default_report() -> String {
    "report.json".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            csv: default_csv(),
            report: default_report(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub observability_samples: usize,
    pub observability_t: f64,
    pub apriori_samples: usize,
    pub apriori_t: f64,
    /// Time step of the random a priori runs.
    pub apriori_dt: f64,
    pub apriori_slack: f64,
    pub spectral_n: usize,
    pub dissipation_samples: usize,
    pub dissipation_t_start: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            observability_samples: 20,
            observability_t: 5.0,
            apriori_samples: 20,
            apriori_t: 5.0,
            apriori_dt: 0.001,
            apriori_slack: 0.05,
            spectral_n: 300,
            dissipation_samples: 20,
            dissipation_t_start: 0.1,
        }
    }
}

impl RunConfig {
    /// Parse JSON, reporting line and column of syntax and type errors.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn kernel(&self) -> Result<MemoryKernel, CliError> {
        MemoryKernel::new(self.kernel.tau1, self.kernel.tau2, self.kernel.form.clone())
            .map_err(|e| CliError::Config(format!("kernel: {e}")))
    }

    /// Radius of the initial data used by the certificates.
    pub fn data_radius(&self) -> f64 {
        match self.initial.norm {
            Some(DataNorm::FractionOfRMax(f)) => r_max(&self.model).map_or(0.0, |r| f * r),
            Some(DataNorm::Value(v)) => v,
            None => 0.0,
        }
    }

    /// Check every field and build the simulator configuration.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let cfg_err = |e: kawahara_core::Error| CliError::Config(e.to_string());
        self.model.validate().map_err(cfg_err)?;
        self.gains.validate().map_err(cfg_err)?;
        let kernel = self.kernel()?;
        let data_norm = match self.initial.norm {
            None => None,
            Some(DataNorm::Value(v)) => Some(v),
            Some(DataNorm::FractionOfRMax(f)) => {
                let rm = r_max(&self.model).map_err(|e| {
                    CliError::Config(format!("initial.norm: fraction_of_r_max needs r_max: {e}"))
                })?;
                Some(f * rm)
            }
        };
        if let Some((a, b)) = self.numerics.fit_window {
            if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
                return Err(CliError::Config("numerics.fit_window: need t0 < t1".into()));
            }
        }
        let sim = SimConfig {
            params: self.model,
            gains: self.gains,
            kernel,
            n: self.numerics.n,
            dt: self.numerics.dt,
            t_end: self.numerics.t_end,
            u0: self.initial.u0.clone(),
            z0: self.initial.z0.clone(),
            data_norm,
            mms: self.mms,
            linear_only: self.numerics.linear_only,
            record_every: self.numerics.record_every,
            rannacher_steps: self.numerics.rannacher_steps,
        };
        sim.validate().map_err(cfg_err)?;
        if sim.n < kawahara_core::discretization::MIN_NODES {
            return Err(CliError::Config(format!(
                "numerics.N: need at least {}",
                kawahara_core::discretization::MIN_NODES
            )));
        }
        Ok(sim)
    }

    pub fn fit_window(&self) -> (f64, f64) {
        self.numerics
            .fit_window
            .unwrap_or((self.numerics.t_end / 6.0, self.numerics.t_end))
    }

    /// The reference configuration.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_JSON).expect("reference config parses")
    }
}

pub const REFERENCE_JSON: &str = r#"{
  "model": { "a": 1.0, "b": 1.0, "L": 3.141592653589793, "p": 1.0 },
  "gains": { "alpha": 0.5, "beta": 0.25, "mu1": 0.01, "mu2": 0.01, "delta": 1.0 },
  "kernel": { "form": "constant", "tau1": 1.0, "tau2": 2.0, "params": { "c": 1.0 } },
  "numerics": {
    "N": 128, "dt": 0.01, "T_end": 30.0, "record_every": 1,
    "linear_only": false, "fit_window": [5.0, 30.0]
  },
  "initial": {
    "u0": { "kind": "bump", "amplitude": 1.0 },
    "z0": { "kind": "zero" },
    "norm": { "fraction_of_r_max": 0.5 }
  },
  "outputs": { "csv": "series.csv", "report": "report.json" },
  "seed": 20240601
}
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parses_and_validates() {
        let c = RunConfig::reference();
        let sim = c.sim_config().unwrap();
        assert_eq!(sim.n, 128);
        assert!((c.data_radius() - 0.5 * 3.0 / std::f64::consts::PI.powf(1.5)).abs() < 1e-15);
        assert_eq!(c.fit_window(), (5.0, 30.0));
    }

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfig::reference();
        let again = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_json(), again.to_json());
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = RunConfig::from_json("{\n  \"model\": [1,\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_field_rejected() {
        let text = REFERENCE_JSON.replace("\"seed\"", "\"sede\"");
        assert!(matches!(RunConfig::from_json(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn dt_beyond_tau1_is_config_error() {
        let mut c = RunConfig::reference();
        c.numerics.dt = 1.5;
        assert!(matches!(c.sim_config(), Err(CliError::Config(_))));
    }

    #[test]
    fn kernel_forms_parse() {
        let text = REFERENCE_JSON.replace(
            r#""form": "constant", "tau1": 1.0, "tau2": 2.0, "params": { "c": 1.0 }"#,
            r#""form": "tabulated", "tau1": 1.0, "tau2": 2.0, "params": { "s": [1.0, 2.0], "values": [1.0, 3.0] }"#,
        );
        let c = RunConfig::from_json(&text).unwrap();
        assert!((c.kernel().unwrap().lambda_integral - 2.0).abs() < 1e-12);
    }
}
