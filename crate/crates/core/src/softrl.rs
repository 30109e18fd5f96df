//! Soft-optimal solvers over a [`TabularMdp`]: soft value iteration with a
//! log-sum-exp backup, the Boltzmann policy it induces, a greedy baseline,
//! iterative policy evaluation, and a hard (max-backup) value iteration used
//! for optimal-value comparisons.
//!
//! Backups within one sweep read only the previous iterate, so per-state
//! work could be parallelized; at the state counts compiled here the sweeps
//! are single-threaded.

use thiserror::Error;

use crate::mdp::FeatureMode;
use crate::tabular::TabularMdp;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("gamma must be in (0,1), got {0}")]
    BadGamma(f64),

    #[error("temperature must be > 0, got {0}")]
    BadTemperature(f64),

    #[error("tol must be > 0, got {0}")]
    BadTol(f64),

    #[error("policy has {policy} states, mdp has {mdp}")]
    PolicyShape { policy: usize, mdp: usize },
}

/// Converged (or residual-flagged) soft values.
#[derive(Debug, Clone)]
pub struct SoftValues {
    /// State values; `v[s] = temperature * logsumexp_a(q[s][a] / temperature)`.
    pub v: Vec<f64>,
    /// Row-aligned action values (same layout as the mdp's rows).
    pub q: Vec<f64>,
    pub gamma: f64,
    pub temperature: f64,
    pub iterations_run: usize,
    /// Max-norm of the final sweep's update.
    pub residual: f64,
    /// Per-sweep residuals, for convergence diagnostics.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Per-state distributions over legal actions, row-aligned with the mdp.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub probs: Vec<Vec<f64>>,
}

impl Policy {
    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    /// Uniform over legal actions, a convenient behavior baseline.
    pub fn uniform(mdp: &TabularMdp) -> Policy {
        let probs = (0..mdp.num_states())
            .map(|s| {
                let k = mdp.num_actions_in(s);
                vec![1.0 / k as f64; k]
            })
            .collect();
        Policy { probs }
    }
}

fn check_hyper(gamma: f64, temperature: f64, tol: f64) -> Result<(), SolverError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SolverError::BadGamma(gamma));
    }
    if !(temperature > 0.0) {
        return Err(SolverError::BadTemperature(temperature));
    }
    if !(tol > 0.0) {
        return Err(SolverError::BadTol(tol));
    }
    Ok(())
}

/// Max-subtracted log-sum-exp: `tau * ln(sum_i exp(x_i / tau))`.
fn soft_max(values: &[f64], tau: f64) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = values.iter().map(|&x| ((x - m) / tau).exp()).sum();
    m + tau * sum.ln()
}

fn backup_q(mdp: &TabularMdp, rewards: &[f64], v: &[f64], gamma: f64, q: &mut [f64]) {
    for row in 0..mdp.num_rows() {
        let mut future = 0.0;
        for &(next, p) in mdp.outcomes_of(row) {
            future += p * v[next as usize];
        }
        q[row] = rewards[row] + gamma * future;
    }
}

/// Soft value iteration under the linear reward `psi` (in the given feature
/// mode), run until the value residual drops below `tol` or `max_iter`
/// sweeps elapse. Non-convergence is flagged, not an error. `warm_start`
/// seeds the value vector, which makes repeated solves under nearby reward
/// parameters cheap.
#[allow(clippy::too_many_arguments)]
pub fn soft_value_iteration(
    mdp: &TabularMdp,
    psi: &[f64],
    mode: FeatureMode,
    gamma: f64,
    temperature: f64,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<SoftValues, SolverError> {
    check_hyper(gamma, temperature, tol)?;
    let rewards = mdp.reward_table(psi, mode);
    let mut v = match warm_start {
        Some(seed) if seed.len() == mdp.num_states() => seed.to_vec(),
        _ => vec![0.0; mdp.num_states()],
    };
    let mut q = vec![0.0; mdp.num_rows()];
    let mut residual = f64::INFINITY;
    let mut residual_history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        backup_q(mdp, &rewards, &v, gamma, &mut q);
        residual = 0.0;
        for s in 0..mdp.num_states() {
            let range = mdp.state_rows(s);
            let new_v = soft_max(&q[range], temperature);
            let delta = (new_v - v[s]).abs();
            if delta > residual {
                residual = delta;
            }
            v[s] = new_v;
        }
        residual_history.push(residual);
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    // Recompute q from the final v so v and q are mutually consistent.
    backup_q(mdp, &rewards, &v, gamma, &mut q);
    let converged = residual < tol;
    Ok(SoftValues {
        v,
        q,
        gamma,
        temperature,
        iterations_run: iterations,
        residual,
        residual_history,
        converged,
    })
}

/// Boltzmann policy: `pi(a|s) = exp(q(s,a)/tau) / sum_a' exp(q(s,a')/tau)`
/// over legal actions, with max-subtraction.
pub fn boltzmann_policy(mdp: &TabularMdp, sv: &SoftValues) -> Policy {
    let tau = sv.temperature;
    let probs = (0..mdp.num_states())
        .map(|s| {
            let range = mdp.state_rows(s);
            let q = &sv.q[range];
            let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = q.iter().map(|&x| ((x - m) / tau).exp()).collect();
            let z: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / z).collect()
        })
        .collect();
    Policy { probs }
}

/// Deterministic argmax policy; ties break to the lowest action id.
pub fn greedy_policy(mdp: &TabularMdp, q: &[f64]) -> Policy {
    let probs = (0..mdp.num_states())
        .map(|s| {
            let range = mdp.state_rows(s);
            let row_q = &q[range];
            let mut best = 0usize;
            for (i, &x) in row_q.iter().enumerate() {
                if x > row_q[best] {
                    best = i;
                }
            }
            let mut row = vec![0.0; row_q.len()];
            row[best] = 1.0;
            row
        })
        .collect();
    Policy { probs }
}

/// Iterative policy evaluation of `V^pi` under the linear reward.
pub fn evaluate_policy(
    mdp: &TabularMdp,
    psi: &[f64],
    mode: FeatureMode,
    policy: &Policy,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SoftValues, SolverError> {
    check_hyper(gamma, 1.0, tol)?;
    if policy.num_states() != mdp.num_states() {
        return Err(SolverError::PolicyShape {
            policy: policy.num_states(),
            mdp: mdp.num_states(),
        });
    }
    let rewards = mdp.reward_table(psi, mode);
    let mut v = vec![0.0; mdp.num_states()];
    let mut q = vec![0.0; mdp.num_rows()];
    let mut residual = f64::INFINITY;
    let mut residual_history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        backup_q(mdp, &rewards, &v, gamma, &mut q);
        residual = 0.0;
        for s in 0..mdp.num_states() {
            let range = mdp.state_rows(s);
            let new_v: f64 = q[range]
                .iter()
                .zip(policy.probs[s].iter())
                .map(|(qa, pa)| qa * pa)
                .sum();
            let delta = (new_v - v[s]).abs();
            if delta > residual {
                residual = delta;
            }
            v[s] = new_v;
        }
        residual_history.push(residual);
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    backup_q(mdp, &rewards, &v, gamma, &mut q);
    let converged = residual < tol;
    Ok(SoftValues {
        v,
        q,
        gamma,
        temperature: 0.0,
        iterations_run: iterations,
        residual,
        residual_history,
        converged,
    })
}

/// Hard (max-backup) value iteration; yields the optimal deterministic
/// policy via [`greedy_policy`].
pub fn hard_value_iteration(
    mdp: &TabularMdp,
    psi: &[f64],
    mode: FeatureMode,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SoftValues, SolverError> {
    check_hyper(gamma, 1.0, tol)?;
    let rewards = mdp.reward_table(psi, mode);
    let mut v = vec![0.0; mdp.num_states()];
    let mut q = vec![0.0; mdp.num_rows()];
    let mut residual = f64::INFINITY;
    let mut residual_history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        backup_q(mdp, &rewards, &v, gamma, &mut q);
        residual = 0.0;
        for s in 0..mdp.num_states() {
            let range = mdp.state_rows(s);
            let new_v = q[range]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let delta = (new_v - v[s]).abs();
            if delta > residual {
                residual = delta;
            }
            v[s] = new_v;
        }
        residual_history.push(residual);
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    backup_q(mdp, &rewards, &v, gamma, &mut q);
    let converged = residual < tol;
    Ok(SoftValues {
        v,
        q,
        gamma,
        temperature: 0.0,
        iterations_run: iterations,
        residual,
        residual_history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::FeatureMode::AttackerVisible;
    use crate::tabular::TabularMdp;

    /// Single absorbing state with one action and a 1-dim feature.
    fn absorbing(feature: f64) -> TabularMdp {
        TabularMdp::from_rows(
            0,
            1,
            vec![vec![(0u32, vec![(0u32, 1.0)], vec![feature], vec![feature])]],
        )
        .unwrap()
    }

    /// Deterministic 2-state chain: s0 -> s1 -> s1, single action per state,
    /// rewards carried by a 1-dim feature.
    fn chain(r0: f64, r1: f64) -> TabularMdp {
        TabularMdp::from_rows(
            0,
            1,
            vec![
                vec![(0u32, vec![(1u32, 1.0)], vec![r0], vec![r0])],
                vec![(0u32, vec![(1u32, 1.0)], vec![r1], vec![r1])],
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_reward_absorbing_state_has_zero_fixed_point() {
        let mdp = absorbing(0.0);
        let sv =
            soft_value_iteration(&mdp, &[1.0], AttackerVisible, 0.9, 1.0, 1e-12, 1000, None)
                .unwrap();
        assert_eq!(sv.v[0], 0.0);
        assert_eq!(sv.q[0], 0.0);
        assert!(sv.converged);
    }

    #[test]
    fn chain_matches_finite_horizon_recursion_oracle() {
        let mdp = chain(1.0, 0.0);
        let gamma = 0.9;
        let sv =
            soft_value_iteration(&mdp, &[1.0], AttackerVisible, gamma, 1.0, 1e-12, 10_000, None)
                .unwrap();
        // brute-force horizon-200 backup: single action per state, so the
        // soft backup degenerates to the plain Bellman recursion
        let mut v0 = 0.0f64;
        let mut v1 = 0.0f64;
        for _ in 0..200 {
            let nv0 = 1.0 + gamma * v1;
            let nv1 = 0.0 + gamma * v1;
            v0 = nv0;
            v1 = nv1;
        }
        assert!((sv.v[0] - v0).abs() < 1e-9, "{} vs {}", sv.v[0], v0);
        assert!((sv.v[0] - 1.0).abs() < 1e-9);
        assert!((sv.v[1] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn equal_rewards_yield_uniform_boltzmann() {
        // two actions, both reward 0.5, both absorbing
        let mdp = TabularMdp::from_rows(
            0,
            1,
            vec![vec![
                (0u32, vec![(0u32, 1.0)], vec![0.5], vec![0.5]),
                (1u32, vec![(0u32, 1.0)], vec![0.5], vec![0.5]),
            ]],
        )
        .unwrap();
        let sv =
            soft_value_iteration(&mdp, &[1.0], AttackerVisible, 0.9, 1.0, 1e-12, 10_000, None)
                .unwrap();
        let pi = boltzmann_policy(&mdp, &sv);
        assert!((pi.probs[0][0] - 0.5).abs() < 1e-12);
        assert!((pi.probs[0][1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn boltzmann_closed_form_example() {
        // Q = (1, 0) at tau = 1: pi = (e/(e+1), 1/(e+1))
        let mdp = TabularMdp::from_rows(
            0,
            1,
            vec![vec![
                (0u32, vec![(0u32, 1.0)], vec![0.0], vec![0.0]),
                (1u32, vec![(0u32, 1.0)], vec![0.0], vec![0.0]),
            ]],
        )
        .unwrap();
        let sv = SoftValues {
            v: vec![0.0],
            q: vec![1.0, 0.0],
            gamma: 0.9,
            temperature: 1.0,
            iterations_run: 0,
            residual: 0.0,
            residual_history: Vec::new(),
            converged: true,
        };
        let pi = boltzmann_policy(&mdp, &sv);
        let e = std::f64::consts::E;
        assert!((pi.probs[0][0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((pi.probs[0][1] - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((pi.probs[0][0] - 0.7311).abs() < 1e-4);
        // single legal action degenerates to probability 1
        let single = absorbing(0.0);
        let sv1 = SoftValues {
            v: vec![0.0],
            q: vec![-3.0],
            gamma: 0.9,
            temperature: 1.0,
            iterations_run: 0,
            residual: 0.0,
            residual_history: Vec::new(),
            converged: true,
        };
        assert_eq!(boltzmann_policy(&single, &sv1).probs[0], vec![1.0]);
    }

    #[test]
    fn greedy_tie_breaks_to_lowest_action() {
        let mdp = TabularMdp::from_rows(
            0,
            1,
            vec![vec![
                (0u32, vec![(0u32, 1.0)], vec![0.0], vec![0.0]),
                (1u32, vec![(0u32, 1.0)], vec![0.0], vec![0.0]),
            ]],
        )
        .unwrap();
        let greedy = greedy_policy(&mdp, &[2.0, 1.0]);
        assert_eq!(greedy.probs[0], vec![1.0, 0.0]);
        let tie = greedy_policy(&mdp, &[1.0, 1.0]);
        assert_eq!(tie.probs[0], vec![1.0, 0.0]);
        let single = absorbing(0.0);
        assert_eq!(greedy_policy(&single, &[0.3]).probs[0], vec![1.0]);
    }

    #[test]
    fn policy_evaluation_geometric_series() {
        // reward -0.1 per step forever: V = -0.1 / (1 - 0.9) = -1
        let mdp = absorbing(1.0);
        let pi = Policy::uniform(&mdp);
        let values =
            evaluate_policy(&mdp, &[-0.1], AttackerVisible, &pi, 0.9, 1e-12, 100_000).unwrap();
        assert!((values.v[0] - (-1.0)).abs() < 1e-9);
        // zero reward evaluates to zero
        let zero = evaluate_policy(&mdp, &[0.0], AttackerVisible, &pi, 0.9, 1e-12, 1000).unwrap();
        assert_eq!(zero.v[0], 0.0);
    }

    #[test]
    fn terminal_states_evaluate_to_zero() {
        // Absorbing convention: terminal rows carry zero features, so the
        // terminal value is 0 for any reward weights.
        let scenario = crate::scenario::load_scenario(
            r#"{
            "hosts": [
                {"host_id": "a", "ip_address": "10.0.0.1", "os": "linux", "value": 2.0,
                 "services": [{"name": "http", "port": 80, "vulnerability": {"id": "CVE-X"}}]}
            ],
            "connectivity": {"external": ["a"]}
        }"#,
        )
        .unwrap();
        let mdp = crate::mdp::compile(&scenario).unwrap();
        let mut psi = vec![0.0; 7];
        psi[5] = -0.1;
        let pi = {
            // always the first legal row, which is do_nothing everywhere
            let probs = (0..mdp.tab.num_states())
                .map(|s| {
                    let mut row = vec![0.0; mdp.tab.num_actions_in(s)];
                    row[0] = 1.0;
                    row
                })
                .collect();
            Policy { probs }
        };
        let values = evaluate_policy(
            &mdp.tab,
            &psi,
            AttackerVisible,
            &pi,
            0.9,
            1e-12,
            100_000,
        )
        .unwrap();
        for s in 0..mdp.tab.num_states() {
            let state = mdp.state(s);
            if state.terminal {
                assert_eq!(values.v[s], 0.0);
            } else {
                assert!((values.v[s] - (-1.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let mdp = absorbing(0.0);
        assert!(matches!(
            soft_value_iteration(&mdp, &[0.0], AttackerVisible, 1.0, 1.0, 1e-9, 10, None),
            Err(SolverError::BadGamma(_))
        ));
        assert!(matches!(
            soft_value_iteration(&mdp, &[0.0], AttackerVisible, 0.9, 0.0, 1e-9, 10, None),
            Err(SolverError::BadTemperature(_))
        ));
        assert!(matches!(
            soft_value_iteration(&mdp, &[0.0], AttackerVisible, 0.9, 1.0, 0.0, 10, None),
            Err(SolverError::BadTol(_))
        ));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let mdp = chain(1.0, 1.0);
        let sv =
            soft_value_iteration(&mdp, &[1.0], AttackerVisible, 0.99, 1.0, 1e-12, 3, None)
                .unwrap();
        assert!(!sv.converged);
        assert!(sv.residual >= 1e-12);
        assert_eq!(sv.iterations_run, 3);
    }
}
