//! Maximum-entropy inverse reinforcement learning over trajectory logs,
//! plus model-based off-policy (counterfactual) evaluation.
//!
//! The fitter ascends the feature-matching objective
//!
//! ```text
//! J(psi) = psi . f_emp  -  V_psi(s0)  -  (l2/2) |psi|^2
//! ```
//!
//! where `f_emp` is the per-trajectory mean of discounted feature sums and
//! `V_psi` is the soft value of the initial state. The gradient of the soft
//! value with respect to the reward weights is exactly the discounted
//! feature expectation of the induced Boltzmann policy, so the ascent
//! direction is the classic feature-expectation gap
//!
//! ```text
//! grad J = f_emp - f_model - l2 * psi
//! ```
//!
//! computed with one soft solve and one forward visitation pass per epoch.
//! `J` is also the plug-in estimate of the expected discounted action
//! log-likelihood of the data, which is what the reported likelihood curve
//! tracks. [`log_likelihood`] separately scores the observed records
//! directly under the soft-optimal policy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{FeatureMode, RewardParams, ScenarioMdp};
use crate::sim::TrajectorySet;
use crate::softrl::{
    boltzmann_policy, evaluate_policy, greedy_policy, hard_value_iteration, soft_value_iteration,
    Policy, SoftValues, SolverError,
};
use crate::tabular::TabularMdp;

#[derive(Debug, Error)]
pub enum IrlError {
    #[error("empty trajectory set")]
    EmptySet,

    #[error("trajectory set has no stationary trajectories (reactive-defender data is excluded by default)")]
    NoStationaryData,

    #[error("trajectory log hash {log} does not match scenario hash {mdp}")]
    ScenarioMismatch { log: String, mdp: String },

    #[error("record references state index {0} outside the reachable state space")]
    UnknownState(u64),

    #[error("record action {action} is illegal in state index {state}")]
    UnknownAction { action: String, state: u64 },

    #[error("invalid config: {0}")]
    BadConfig(String),

    #[error(
        "objective dropped more than {threshold} for {epochs} consecutive epochs at epoch \
         {epoch}; try a smaller learning_rate"
    )]
    Diverged {
        epoch: usize,
        threshold: f64,
        epochs: usize,
    },

    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitStrategy {
    Zeros,
    /// Uniform draws in (-0.1, 0.1) from the given seed.
    SeededUniform { seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrlConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub grad_tol: f64,
    pub l2_reg: f64,
    /// Forward-pass truncation horizon.
    pub horizon: usize,
    pub gamma: f64,
    pub temperature: f64,
    pub init: InitStrategy,
    /// Include non-stationary (reactive-defender) trajectories.
    pub include_nonstationary: bool,
    /// Inner solver tolerance and iteration cap.
    pub vi_tol: f64,
    pub vi_max_iter: usize,
}

impl Default for IrlConfig {
    fn default() -> Self {
        IrlConfig {
            learning_rate: 0.05,
            max_epochs: 200,
            grad_tol: 1e-3,
            l2_reg: 1e-3,
            horizon: 100,
            gamma: 0.95,
            temperature: 1.0,
            init: InitStrategy::Zeros,
            include_nonstationary: false,
            vi_tol: 1e-9,
            vi_max_iter: 10_000,
        }
    }
}

impl IrlConfig {
    pub fn validate(&self) -> Result<(), IrlError> {
        for (name, value) in [
            ("learning_rate", self.learning_rate),
            ("grad_tol", self.grad_tol),
            ("temperature", self.temperature),
            ("vi_tol", self.vi_tol),
        ] {
            if !(value > 0.0) {
                return Err(IrlError::BadConfig(format!("{name} must be > 0, got {value}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(IrlError::BadConfig(format!(
                "gamma must be in (0,1), got {}",
                self.gamma
            )));
        }
        if self.l2_reg < 0.0 {
            return Err(IrlError::BadConfig(format!(
                "l2_reg must be >= 0, got {}",
                self.l2_reg
            )));
        }
        if self.horizon == 0 || self.max_epochs == 0 {
            return Err(IrlError::BadConfig(
                "horizon and max_epochs must be >= 1".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrlResult {
    pub psi_hat: RewardParams,
    /// Ascent objective per epoch (per-trajectory maxent log-likelihood
    /// surrogate, regularizer included).
    pub log_likelihood_curve: Vec<f64>,
    pub grad_norm_final: f64,
    pub converged: bool,
    pub epochs_run: usize,
}

/// Looks up the row of a logged record inside the compiled MDP.
fn record_row(
    mdp: &ScenarioMdp,
    state_index: u64,
    action: &crate::mdp::AttackerAction,
) -> Result<(usize, usize), IrlError> {
    let local = mdp
        .local_index(state_index)
        .ok_or(IrlError::UnknownState(state_index))? as usize;
    let action_id = mdp.action_id(action).ok_or_else(|| IrlError::UnknownAction {
        action: action.to_string(),
        state: state_index,
    })?;
    let row = mdp
        .tab
        .row_for_action(local, action_id)
        .ok_or_else(|| IrlError::UnknownAction {
            action: action.to_string(),
            state: state_index,
        })?;
    Ok((local, row))
}

fn usable<'t>(
    mdp: &ScenarioMdp,
    ts: &'t TrajectorySet,
    include_nonstationary: bool,
) -> Result<Vec<&'t crate::sim::Trajectory>, IrlError> {
    if ts.is_empty() {
        return Err(IrlError::EmptySet);
    }
    if ts.scenario_hash != mdp.scenario_hash {
        return Err(IrlError::ScenarioMismatch {
            log: ts.scenario_hash.clone(),
            mdp: mdp.scenario_hash.clone(),
        });
    }
    let kept: Vec<_> = ts
        .trajectories
        .iter()
        .filter(|t| include_nonstationary || t.stationary)
        .collect();
    if kept.is_empty() {
        return Err(IrlError::NoStationaryData);
    }
    Ok(kept)
}

/// Per-trajectory mean of the discounted feature sums
/// `sum_t gamma^t f(s_t, a_t)`, recomputed from the compiled feature table.
pub fn empirical_feature_expectations(
    mdp: &ScenarioMdp,
    ts: &TrajectorySet,
    gamma: f64,
    include_nonstationary: bool,
) -> Result<Vec<f64>, IrlError> {
    let kept = usable(mdp, ts, include_nonstationary)?;
    let dim = mdp.tab.feature_dim();
    let mut total = vec![0.0; dim];
    for t in &kept {
        let mut discount = 1.0;
        for r in &t.records {
            let (_, row) = record_row(mdp, r.state_index, &r.action)?;
            let f = mdp.tab.features_of(row, FeatureMode::AttackerVisible);
            for (acc, fi) in total.iter_mut().zip(f.iter()) {
                *acc += discount * fi;
            }
            discount *= gamma;
        }
    }
    let n = kept.len() as f64;
    for v in &mut total {
        *v /= n;
    }
    Ok(total)
}

/// Discounted state-action visitation mass under `policy`, from a point
/// mass on the initial state:
/// `mass(s,a) = sum_{t<horizon} gamma^t D_t(s) pi(a|s)`, row-aligned.
pub fn expected_visitation(
    mdp: &TabularMdp,
    policy: &Policy,
    gamma: f64,
    horizon: usize,
) -> Vec<f64> {
    let mut d = vec![0.0; mdp.num_states()];
    d[mdp.initial_state()] = 1.0;
    let mut mass = vec![0.0; mdp.num_rows()];
    let mut discount = 1.0;
    for _ in 0..horizon {
        let mut d_next = vec![0.0; mdp.num_states()];
        for s in 0..mdp.num_states() {
            let ds = d[s];
            if ds == 0.0 {
                continue;
            }
            for (slot, row) in mdp.state_rows(s).enumerate() {
                let pa = policy.probs[s][slot];
                if pa == 0.0 {
                    continue;
                }
                let flow = ds * pa;
                mass[row] += discount * flow;
                for &(next, p) in mdp.outcomes_of(row) {
                    d_next[next as usize] += flow * p;
                }
            }
        }
        d = d_next;
        discount *= gamma;
    }
    mass
}

/// Discounted model feature expectations under `policy`.
pub fn model_feature_expectations(
    mdp: &TabularMdp,
    policy: &Policy,
    gamma: f64,
    horizon: usize,
    mode: FeatureMode,
) -> Vec<f64> {
    let mass = expected_visitation(mdp, policy, gamma, horizon);
    let mut out = vec![0.0; mdp.feature_dim()];
    for (row, m) in mass.iter().enumerate() {
        if *m == 0.0 {
            continue;
        }
        for (acc, f) in out.iter_mut().zip(mdp.features_of(row, mode).iter()) {
            *acc += m * f;
        }
    }
    out
}

/// Sum over observed records of the action log-probability under the
/// soft-optimal policy for `psi`:
/// `sum_t [ Q(s_t,a_t)/tau - ln sum_a' exp(Q(s_t,a')/tau) ]`.
pub fn log_likelihood(
    mdp: &ScenarioMdp,
    psi: &[f64],
    ts: &TrajectorySet,
    gamma: f64,
    temperature: f64,
) -> Result<f64, IrlError> {
    let kept = usable(mdp, ts, false)?;
    let sv = soft_value_iteration(
        &mdp.tab,
        psi,
        FeatureMode::AttackerVisible,
        gamma,
        temperature,
        1e-10,
        100_000,
        None,
    )?;
    let mut ll = 0.0;
    for t in &kept {
        for r in &t.records {
            let (local, row) = record_row(mdp, r.state_index, &r.action)?;
            ll += log_prob_of_row(&mdp.tab, &sv, local, row, temperature);
        }
    }
    Ok(ll)
}

fn log_prob_of_row(
    mdp: &TabularMdp,
    sv: &SoftValues,
    state: usize,
    row: usize,
    tau: f64,
) -> f64 {
    let range = mdp.state_rows(state);
    let q = &sv.q[range];
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = q.iter().map(|&x| ((x - m) / tau).exp()).sum::<f64>().ln() + m / tau;
    (sv.q[row] - m) / tau + m / tau - lse
}

/// The ascent objective `psi . f_emp - V_psi(s0) - (l2/2)|psi|^2` and the
/// soft values it was computed from.
pub fn fit_objective(
    mdp: &TabularMdp,
    psi: &[f64],
    f_emp: &[f64],
    cfg: &IrlConfig,
    warm_start: Option<&[f64]>,
) -> Result<(f64, SoftValues), IrlError> {
    let sv = soft_value_iteration(
        mdp,
        psi,
        FeatureMode::AttackerVisible,
        cfg.gamma,
        cfg.temperature,
        cfg.vi_tol,
        cfg.vi_max_iter,
        warm_start,
    )?;
    let linear: f64 = psi.iter().zip(f_emp.iter()).map(|(w, f)| w * f).sum();
    let sq: f64 = psi.iter().map(|w| w * w).sum();
    Ok((linear - sv.v[mdp.initial_state()] - 0.5 * cfg.l2_reg * sq, sv))
}

/// Analytic ascent gradient `f_emp - f_model - l2 * psi` for the soft
/// values of the current iterate.
pub fn fit_gradient(
    mdp: &TabularMdp,
    psi: &[f64],
    f_emp: &[f64],
    sv: &SoftValues,
    cfg: &IrlConfig,
) -> Vec<f64> {
    let policy = boltzmann_policy(mdp, sv);
    let f_model = model_feature_expectations(
        mdp,
        &policy,
        cfg.gamma,
        cfg.horizon,
        FeatureMode::AttackerVisible,
    );
    f_emp
        .iter()
        .zip(f_model.iter())
        .zip(psi.iter())
        .map(|((fe, fm), w)| fe - fm - cfg.l2_reg * w)
        .collect()
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

const DIVERGENCE_DROP: f64 = 1e-3;
const DIVERGENCE_EPOCHS: usize = 5;

/// Gradient ascent on the feature-matching objective from a precomputed
/// empirical expectation vector.
pub fn fit_tabular(
    mdp: &TabularMdp,
    f_emp: &[f64],
    cfg: &IrlConfig,
) -> Result<IrlResult, IrlError> {
    cfg.validate()?;
    let dim = mdp.feature_dim();
    let mut psi: Vec<f64> = match cfg.init {
        InitStrategy::Zeros => vec![0.0; dim],
        InitStrategy::SeededUniform { seed } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..dim).map(|_| rng.gen_range(-0.1..0.1)).collect()
        }
    };
    let mut curve = Vec::with_capacity(cfg.max_epochs);
    let mut warm: Option<Vec<f64>> = None;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut drops = 0usize;
    let mut epochs_run = 0usize;
    for epoch in 0..cfg.max_epochs {
        let (objective, sv) = fit_objective(mdp, &psi, f_emp, cfg, warm.as_deref())?;
        if let Some(&prev) = curve.last() {
            if objective < prev - DIVERGENCE_DROP {
                drops += 1;
                if drops >= DIVERGENCE_EPOCHS {
                    return Err(IrlError::Diverged {
                        epoch,
                        threshold: DIVERGENCE_DROP,
                        epochs: DIVERGENCE_EPOCHS,
                    });
                }
            } else {
                drops = 0;
            }
        }
        curve.push(objective);
        let grad = fit_gradient(mdp, &psi, f_emp, &sv, cfg);
        warm = Some(sv.v);
        grad_norm = max_abs(&grad);
        epochs_run = epoch + 1;
        if grad_norm <= cfg.grad_tol {
            converged = true;
            break;
        }
        for (w, g) in psi.iter_mut().zip(grad.iter()) {
            *w += cfg.learning_rate * g;
        }
    }
    Ok(IrlResult {
        psi_hat: RewardParams { psi },
        log_likelihood_curve: curve,
        grad_norm_final: grad_norm,
        converged,
        epochs_run,
    })
}

/// Recovers reward weights from a trajectory set by maximum-likelihood
/// feature-expectation matching.
pub fn irl_fit(
    mdp: &ScenarioMdp,
    ts: &TrajectorySet,
    cfg: &IrlConfig,
) -> Result<IrlResult, IrlError> {
    cfg.validate()?;
    let f_emp = empirical_feature_expectations(mdp, ts, cfg.gamma, cfg.include_nonstationary)?;
    fit_tabular(&mdp.tab, &f_emp, cfg)
}

/// Expected value difference: how much return (under the true reward,
/// ground-truth feature mode) is lost by acting optimally for `psi_hat`
/// instead of `psi_true`. Both policies come from hard value iteration, so
/// the result is nonnegative up to solver tolerance.
pub fn evd(
    mdp: &TabularMdp,
    psi_true: &[f64],
    psi_hat: &[f64],
    gamma: f64,
    tol: f64,
) -> Result<f64, IrlError> {
    if psi_true.len() != psi_hat.len() || psi_true.len() != mdp.feature_dim() {
        return Err(IrlError::BadConfig(format!(
            "psi dimension mismatch: {} vs {} (features are {})",
            psi_true.len(),
            psi_hat.len(),
            mdp.feature_dim()
        )));
    }
    let mode = FeatureMode::GroundTruth;
    let max_iter = 100_000;
    let opt_true = hard_value_iteration(mdp, psi_true, mode, gamma, tol, max_iter)?;
    let pi_true = greedy_policy(mdp, &opt_true.q);
    let opt_hat = hard_value_iteration(mdp, psi_hat, mode, gamma, tol, max_iter)?;
    let pi_hat = greedy_policy(mdp, &opt_hat.q);
    let v_true = evaluate_policy(mdp, psi_true, mode, &pi_true, gamma, tol, max_iter)?;
    let v_hat = evaluate_policy(mdp, psi_true, mode, &pi_hat, gamma, tol, max_iter)?;
    let s0 = mdp.initial_state();
    Ok(v_true.v[s0] - v_hat.v[s0])
}

/// Model-based off-policy value of `alt_policy` at the initial state under
/// the (learned) reward `psi` — "what would this attacker obtain if it
/// acted differently". The feature mode picks between the attacker's
/// perceived payoff and the ground-truth payoff.
pub fn counterfactual_evaluate(
    mdp: &TabularMdp,
    psi: &[f64],
    alt_policy: &Policy,
    gamma: f64,
    mode: FeatureMode,
    tol: f64,
) -> Result<f64, IrlError> {
    let values = evaluate_policy(mdp, psi, mode, alt_policy, gamma, tol, 100_000)?;
    Ok(values.v[mdp.initial_state()])
}

/// `1 - mean total-variation distance` between two policies over the given
/// states (typically the states visited by expert data).
pub fn policy_agreement(pi_a: &Policy, pi_b: &Policy, states: &[usize]) -> f64 {
    if states.is_empty() {
        return 1.0;
    }
    let mut tv_sum = 0.0;
    for &s in states {
        let tv: f64 = pi_a.probs[s]
            .iter()
            .zip(pi_b.probs[s].iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        tv_sum += tv;
    }
    1.0 - tv_sum / states.len() as f64
}

/// Distinct local state ids visited by the set's stationary trajectories.
pub fn visited_states(mdp: &ScenarioMdp, ts: &TrajectorySet) -> Vec<usize> {
    let mut seen = std::collections::BTreeSet::new();
    for t in ts.stationary() {
        for r in &t.records {
            if let Some(local) = mdp.local_index(r.state_index) {
                seen.insert(local as usize);
            }
        }
    }
    seen.into_iter().collect()
}
