//! Shared helpers for the integration and acceptance suites.
#![allow(dead_code)]

use decoyrl_core::irl::{fit_gradient, fit_objective, IrlConfig};
use decoyrl_core::mdp::{compile, FeatureMode, ScenarioMdp};
use decoyrl_core::scenario::{load_scenario, Scenario};
use decoyrl_core::tabular::TabularMdp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PSI_STAR: [f64; 7] = [0.0, 1.0, 0.5, 2.0, -3.0, -0.1, -0.5];

pub fn fixture_scenario() -> Scenario {
    load_scenario(include_str!("../../../../fixtures/six_host.scn")).expect("fixture loads")
}

pub fn fixture_mdp() -> ScenarioMdp {
    compile(&fixture_scenario()).expect("fixture compiles")
}

/// Seeded random tabular MDP: up to `max_states` states and `max_actions`
/// global actions, random sparse stochastic transitions, random features of
/// dimension `dim` in [-1, 1]. Both feature tables are identical.
pub fn random_mdp(seed: u64, max_states: usize, max_actions: usize, dim: usize) -> TabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=max_states);
    let num_actions = rng.gen_range(2..=max_actions);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.gen_range(1..=num_actions);
        // pick k distinct action ids
        let mut ids: Vec<u32> = (0..num_actions as u32).collect();
        for i in (1..ids.len()).rev() {
            let j = rng.gen_range(0..=i);
            ids.swap(i, j);
        }
        ids.truncate(k);
        ids.sort_unstable();
        let mut state_rows = Vec::with_capacity(k);
        for action in ids {
            let support = rng.gen_range(1..=3.min(n));
            let mut targets = Vec::with_capacity(support);
            while targets.len() < support {
                let t = rng.gen_range(0..n) as u32;
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            let raw: Vec<f64> = (0..support).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut outcomes: Vec<(u32, f64)> =
                targets.iter().zip(raw.iter()).map(|(t, w)| (*t, w / total)).collect();
            // re-normalize exactly against accumulated rounding
            let sum: f64 = outcomes.iter().map(|(_, p)| p).sum();
            for (_, p) in &mut outcomes {
                *p /= sum;
            }
            let features: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            state_rows.push((action, outcomes, features.clone(), features));
        }
        rows.push(state_rows);
    }
    TabularMdp::from_rows(0, dim, rows).expect("random mdp is well-formed")
}

/// Random reward weights in [-1, 1].
pub fn random_psi(seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Every discounted return of every fixed-length action path through a
/// deterministic MDP — a brute-force tree walk, independent of the solver.
pub fn enumerate_returns(mdp: &TabularMdp, psi: &[f64], gamma: f64, horizon: usize) -> Vec<f64> {
    fn walk(
        mdp: &TabularMdp,
        rewards: &[f64],
        state: usize,
        depth: usize,
        horizon: usize,
        acc: f64,
        discount: f64,
        gamma: f64,
        out: &mut Vec<f64>,
    ) {
        if depth == horizon {
            out.push(acc);
            return;
        }
        for row in mdp.state_rows(state) {
            let outcomes = mdp.outcomes_of(row);
            assert!(
                outcomes.len() == 1 && outcomes[0].1 == 1.0,
                "enumeration requires deterministic dynamics"
            );
            walk(
                mdp,
                rewards,
                outcomes[0].0 as usize,
                depth + 1,
                horizon,
                acc + discount * rewards[row],
                discount * gamma,
                gamma,
                out,
            );
        }
    }
    let rewards = mdp.reward_table(psi, FeatureMode::AttackerVisible);
    let mut out = Vec::new();
    walk(
        mdp,
        &rewards,
        mdp.initial_state(),
        0,
        horizon,
        0.0,
        1.0,
        gamma,
        &mut out,
    );
    out
}

/// Deterministic 3-state fixture: the initial state branches into two
/// absorbing tails (two distinct arrows to the first), so the trajectory
/// set is finite and the log-partition over it is exactly enumerable.
/// Returns the MDP and the horizon-limited enumeration value
/// `tau * ln sum_i exp(R_i / tau)` at the initial state.
pub fn three_state_fixture_and_enumerated_value(
    gamma: f64,
    tau: f64,
    horizon: usize,
) -> (TabularMdp, f64) {
    let rows = vec![
        vec![
            (0u32, vec![(1u32, 1.0)], vec![1.0], vec![1.0]),
            (1u32, vec![(1u32, 1.0)], vec![0.3], vec![0.3]),
            (2u32, vec![(2u32, 1.0)], vec![0.6], vec![0.6]),
        ],
        vec![(0u32, vec![(1u32, 1.0)], vec![1.0], vec![1.0])],
        vec![(0u32, vec![(2u32, 1.0)], vec![-0.5], vec![-0.5])],
    ];
    let mdp = TabularMdp::from_rows(0, 1, rows).expect("fixture is well-formed");
    let returns = enumerate_returns(&mdp, &[1.0], gamma, horizon);
    assert_eq!(returns.len(), 3);
    let m = returns.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let z: f64 = returns.iter().map(|r| ((r - m) / tau).exp()).sum();
    (mdp, m + tau * z.ln())
}

/// Max-norm relative error between the analytic ascent gradient and a
/// central finite difference of the ascent objective, with the solver and
/// forward pass run tight enough that truncation cannot mask a defect.
pub fn gradient_fd_relative_error(mdp: &TabularMdp, psi: &[f64], f_emp: &[f64]) -> f64 {
    let cfg = IrlConfig {
        gamma: 0.9,
        temperature: 1.0,
        horizon: 600,
        l2_reg: 1e-3,
        vi_tol: 1e-13,
        vi_max_iter: 500_000,
        ..IrlConfig::default()
    };
    let (_, sv) = fit_objective(mdp, psi, f_emp, &cfg, None).expect("objective");
    let analytic = fit_gradient(mdp, psi, f_emp, &sv, &cfg);
    let h = 1e-5;
    let mut fd = vec![0.0; psi.len()];
    for i in 0..psi.len() {
        let mut plus = psi.to_vec();
        plus[i] += h;
        let mut minus = psi.to_vec();
        minus[i] -= h;
        let (jp, _) = fit_objective(mdp, &plus, f_emp, &cfg, Some(&sv.v)).expect("probe");
        let (jm, _) = fit_objective(mdp, &minus, f_emp, &cfg, Some(&sv.v)).expect("probe");
        fd[i] = (jp - jm) / (2.0 * h);
    }
    let max_diff = analytic
        .iter()
        .zip(fd.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let scale = fd.iter().map(|x| x.abs()).fold(0.0f64, f64::max).max(1e-12);
    max_diff / scale
}
