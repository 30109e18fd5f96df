//! decoyrl-core: a deception-aware cyber attack/defense simulator whose
//! attacker is a soft-optimal MDP agent, paired with a maximum-entropy
//! inverse reinforcement learning engine that recovers the attacker's
//! latent reward function from trajectory logs and supports counterfactual
//! evaluation of deception policies.
//!
//! Module map:
//!
//! * [`scenario`] — network terrain (hosts, decoys, services, accounts,
//!   connectivity, detection) and deception application.
//! * [`mdp`] — the attacker's tabular MDP: states, actions, transitions,
//!   features, and the reachable-state compiler.
//! * [`tabular`] — the flat solver-facing MDP representation.
//! * [`softrl`] — soft value iteration, Boltzmann/greedy policies, policy
//!   evaluation.
//! * [`sim`] — seeded episode simulation, alerts, batches.
//! * [`trajlog`] — line-delimited trajectory log format.
//! * [`irl`] — reward recovery and model-based counterfactual evaluation.
//! * [`profiler`] — ground-truth metrics and inferred attacker profiles.

pub mod irl;
pub mod mdp;
pub mod profiler;
pub mod scenario;
pub mod sim;
pub mod softrl;
pub mod tabular;
pub mod trajlog;

pub use mdp::{compile, ScenarioMdp};
pub use scenario::{load_scenario, Scenario};
