//! Output document shapes. Every artifact embeds a format version, the
//! hash of the scenario that produced it, and an echo of the resolved
//! configuration, so any result can be traced back to its exact inputs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use decoyrl_core::irl::IrlResult;
use decoyrl_core::mdp::FeatureVector;
use decoyrl_core::sim::SummaryStats;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DOC_FORMAT_VERSION: u32 = 1;
pub const PARAMS_KIND: &str = "decoyrl-reward-params";

/// Named reward-weight document, written by `irl-fit` and consumed by
/// `simulate`, `eval`, and `report`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub format_version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
    /// Named coordinates, keyed by the canonical feature names.
    pub psi: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likelihood_curve: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_norm_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs_run: Option<usize>,
}

impl ParamsDoc {
    pub fn from_fit(result: &IrlResult, scenario_hash: &str, config: Value) -> ParamsDoc {
        ParamsDoc {
            format_version: DOC_FORMAT_VERSION,
            kind: PARAMS_KIND.to_string(),
            scenario_hash: Some(scenario_hash.to_string()),
            config: Some(config),
            psi: FeatureVector::NAMES
                .iter()
                .zip(result.psi_hat.psi.iter())
                .map(|(name, w)| (name.to_string(), *w))
                .collect(),
            likelihood_curve: Some(result.log_likelihood_curve.clone()),
            grad_norm_final: Some(result.grad_norm_final),
            converged: Some(result.converged),
            epochs_run: Some(result.epochs_run),
        }
    }

    /// Ordered weight vector, validated against the canonical names.
    pub fn ordered_psi(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(FeatureVector::NAMES.len());
        for name in FeatureVector::NAMES {
            let w = self
                .psi
                .get(name)
                .with_context(|| format!("params document is missing coordinate {name:?}"))?;
            out.push(*w);
        }
        for key in self.psi.keys() {
            if !FeatureVector::NAMES.contains(&key.as_str()) {
                bail!("params document has unknown coordinate {key:?}");
            }
        }
        Ok(out)
    }
}

pub fn load_params(path: &Path) -> Result<ParamsDoc> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read params file {}", path.display()))?;
    let doc: ParamsDoc = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse params file {}", path.display()))?;
    if doc.kind != PARAMS_KIND {
        bail!("{} is not a reward-params document (kind {:?})", path.display(), doc.kind);
    }
    if doc.format_version != DOC_FORMAT_VERSION {
        bail!("unsupported params format_version {}", doc.format_version);
    }
    Ok(doc)
}

/// Summary-statistics document written next to a simulation log.
#[derive(Debug, Serialize, Deserialize)]
pub struct StatsDoc {
    pub format_version: u32,
    pub kind: String,
    pub scenario_hash: String,
    pub config: Value,
    pub num_hosts: usize,
    pub num_decoys: usize,
    pub stats: SummaryStats,
}

/// Evaluation document: reward-quality metrics and the counterfactual
/// what-if values.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvalDoc {
    pub format_version: u32,
    pub kind: String,
    pub scenario_hash: String,
    pub config: Value,
    pub evd: f64,
    pub optimal_value: f64,
    pub evd_fraction_of_optimal: f64,
    pub counterfactual: CounterfactualBlock,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CounterfactualBlock {
    /// Value of the recovered attacker's Boltzmann policy on each variant,
    /// under its learned reward, ground-truth payoff mode.
    pub present_value: f64,
    pub absent_value: f64,
    /// Defender-side return under the zero-sum assumption: the negation of
    /// the attacker's ground-truth value.
    pub defender_zero_sum_present: f64,
    pub defender_zero_sum_absent: f64,
    pub deception_reduces_value: bool,
}

/// Profile report mirroring the ground-truth and inferred attribute sets.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub format_version: u32,
    pub kind: String,
    pub scenario_hash: String,
    pub config: Value,
    pub ground_truth_metrics: Vec<decoyrl_core::profiler::ProfileMetrics>,
    pub inferred: decoyrl_core::profiler::InferredProfile,
}

/// Side-by-side comparison emitted by `report`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDoc {
    pub format_version: u32,
    pub kind: String,
    pub scenario_hash: String,
    pub config: Value,
    pub window_horizon: usize,
    pub full_horizon: usize,
    pub present: VariantBlock,
    pub absent: VariantBlock,
    pub alert_ratio_absent_over_present: f64,
    pub foothold_delay_mean: f64,
    pub foothold_delay_se: f64,
    pub fit: FitBlock,
    pub policy_agreement: f64,
    pub evd: f64,
    pub optimal_value: f64,
    pub counterfactual: CounterfactualBlock,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VariantBlock {
    pub num_hosts: usize,
    pub num_decoys: usize,
    pub window_stats: SummaryStats,
    pub full_stats: SummaryStats,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitBlock {
    pub episodes: usize,
    pub converged: bool,
    pub epochs_run: usize,
    pub grad_norm_final: f64,
    pub psi: BTreeMap<String, f64>,
}

pub fn write_doc<T: Serialize>(doc: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Two-column numeric series file for external plotting.
pub fn write_series(path: &Path, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let mut text = format!("{}\t{}\n", header.0, header.1);
    for (x, y) in rows {
        text.push_str(&format!("{x}\t{y}\n"));
    }
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
