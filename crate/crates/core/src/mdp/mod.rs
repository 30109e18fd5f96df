//! The attacker's tabular MDP over a scenario: per-host knowledge state,
//! attacker and defender action spaces, the dense state-index convention,
//! transition dynamics, and the linear reward's feature map.
//!
//! # State index convention
//!
//! Hosts are sorted lexicographically by `host_id`; host `i` contributes a
//! base-6 digit (its [`KnowledgeLevel`]) with host 0 least significant. The
//! `admin_cred` bit sits at `6^H` and the `terminal` bit at `2 * 6^H`:
//!
//! ```text
//! index = sum_i level_i * 6^i  +  admin_cred * 6^H  +  terminal * 2 * 6^H
//! ```
//!
//! Index 0 is the initial state (all hosts unknown, no admin credential,
//! non-terminal) and `|S| = 6^H * 4`. This convention is part of the
//! trajectory-log contract.

mod compile;
mod dynamics;

pub use compile::{compile, ScenarioMdp};
pub use dynamics::{features, legal_actions, transition, FeatureMode};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{AccountSpec, HostId, HostSpec, Scenario};

/// Default cap on host count for state enumeration.
pub const DEFAULT_HOST_CAP: usize = 8;

/// Number of knowledge levels per host.
pub const NUM_LEVELS: u64 = 6;

/// Fixed feature dimension of scenario MDPs.
pub const FEATURE_DIM: usize = 7;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error(
        "state-space cap exceeded: {hosts} hosts require {required} states, \
         cap of {cap} hosts allows {allowed}"
    )]
    StateSpaceCap {
        hosts: usize,
        required: u64,
        cap: usize,
        allowed: u64,
    },

    #[error("action {action} is illegal in state {state}")]
    IllegalAction { action: String, state: u64 },

    #[error("action references unknown host {0}")]
    UnknownHost(String),

    #[error("reward/feature dimension mismatch: psi has {psi}, features have {features}")]
    DimensionMismatch { psi: usize, features: usize },

    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
}

/// Attacker knowledge about one host, ordered by progression.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeLevel {
    Unknown = 0,
    Discovered = 1,
    Scanned = 2,
    VulnKnown = 3,
    Foothold = 4,
    Looted = 5,
}

impl KnowledgeLevel {
    pub const ALL: [KnowledgeLevel; 6] = [
        KnowledgeLevel::Unknown,
        KnowledgeLevel::Discovered,
        KnowledgeLevel::Scanned,
        KnowledgeLevel::VulnKnown,
        KnowledgeLevel::Foothold,
        KnowledgeLevel::Looted,
    ];

    pub fn from_digit(d: u64) -> KnowledgeLevel {
        Self::ALL[d as usize]
    }

    pub fn digit(self) -> u64 {
        self as u64
    }
}

/// Tabular attacker state: one knowledge level per host plus global flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttackerState {
    /// Aligned with the scenario's sorted host order.
    pub levels: Vec<KnowledgeLevel>,
    pub admin_cred: bool,
    pub terminal: bool,
}

impl AttackerState {
    pub fn initial(num_hosts: usize) -> AttackerState {
        AttackerState {
            levels: vec![KnowledgeLevel::Unknown; num_hosts],
            admin_cred: false,
            terminal: false,
        }
    }
}

/// Bijection between [`AttackerState`] and dense indices `[0, |S|)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    hosts: Vec<HostId>,
}

impl StateSpace {
    pub fn hosts(&self) -> &[HostId] {
        &self.hosts
    }

    pub fn num_hosts(&self) -> usize {
        self.hosts.len()
    }

    pub fn host_rank(&self, id: &HostId) -> Option<usize> {
        self.hosts.binary_search(id).ok()
    }

    /// Total number of states: `6^H * 4`.
    pub fn size(&self) -> u64 {
        NUM_LEVELS.pow(self.hosts.len() as u32) * 4
    }

    pub fn encode(&self, state: &AttackerState) -> u64 {
        debug_assert_eq!(state.levels.len(), self.hosts.len());
        let mut index = 0u64;
        for (i, level) in state.levels.iter().enumerate() {
            index += level.digit() * NUM_LEVELS.pow(i as u32);
        }
        let base = NUM_LEVELS.pow(self.hosts.len() as u32);
        if state.admin_cred {
            index += base;
        }
        if state.terminal {
            index += 2 * base;
        }
        index
    }

    pub fn decode(&self, index: u64) -> AttackerState {
        let base = NUM_LEVELS.pow(self.hosts.len() as u32);
        let terminal = (index / (2 * base)) % 2 == 1;
        let admin_cred = (index / base) % 2 == 1;
        let mut rest = index % base;
        let mut levels = Vec::with_capacity(self.hosts.len());
        for _ in 0..self.hosts.len() {
            levels.push(KnowledgeLevel::from_digit(rest % NUM_LEVELS));
            rest /= NUM_LEVELS;
        }
        AttackerState {
            levels,
            admin_cred,
            terminal,
        }
    }
}

/// Builds the state-index bijection for a scenario, enforcing the host cap.
pub fn enumerate_states(scenario: &Scenario) -> Result<StateSpace, MdpError> {
    enumerate_states_capped(scenario, DEFAULT_HOST_CAP)
}

pub fn enumerate_states_capped(
    scenario: &Scenario,
    cap: usize,
) -> Result<StateSpace, MdpError> {
    let hosts = scenario.sorted_host_ids();
    if hosts.len() > cap {
        return Err(MdpError::StateSpaceCap {
            hosts: hosts.len(),
            required: NUM_LEVELS.pow(hosts.len() as u32) * 4,
            cap,
            allowed: NUM_LEVELS.pow(cap as u32) * 4,
        });
    }
    Ok(StateSpace { hosts })
}

/// Kind tags for attacker actions, used by detection configuration, alert
/// records, and the profiler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerActionKind {
    DoNothing,
    PassiveRecon,
    ActiveRecon,
    VulnSearch,
    ExploreService,
    Exploit,
    ActionsTarget,
}

impl AttackerActionKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackerActionKind::DoNothing => "do_nothing",
            AttackerActionKind::PassiveRecon => "passive_recon",
            AttackerActionKind::ActiveRecon => "active_recon",
            AttackerActionKind::VulnSearch => "vuln_search",
            AttackerActionKind::ExploreService => "explore_service",
            AttackerActionKind::Exploit => "exploit",
            AttackerActionKind::ActionsTarget => "actions_target",
        }
    }

    /// Position of this action along the kill chain, for escalation
    /// detection in the profiler.
    pub fn chain_rank(self) -> u8 {
        match self {
            AttackerActionKind::DoNothing => 0,
            AttackerActionKind::PassiveRecon => 1,
            AttackerActionKind::ActiveRecon => 2,
            AttackerActionKind::VulnSearch => 3,
            AttackerActionKind::ExploreService => 3,
            AttackerActionKind::Exploit => 4,
            AttackerActionKind::ActionsTarget => 5,
        }
    }
}

/// The seven adversarial action categories.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackerAction {
    DoNothing,
    PassiveRecon,
    ActiveRecon { host: HostId },
    VulnSearch { host: HostId },
    ExploreService { host: HostId },
    Exploit { host: HostId },
    ActionsTarget { host: HostId },
}

impl AttackerAction {
    pub fn kind(&self) -> AttackerActionKind {
        match self {
            AttackerAction::DoNothing => AttackerActionKind::DoNothing,
            AttackerAction::PassiveRecon => AttackerActionKind::PassiveRecon,
            AttackerAction::ActiveRecon { .. } => AttackerActionKind::ActiveRecon,
            AttackerAction::VulnSearch { .. } => AttackerActionKind::VulnSearch,
            AttackerAction::ExploreService { .. } => AttackerActionKind::ExploreService,
            AttackerAction::Exploit { .. } => AttackerActionKind::Exploit,
            AttackerAction::ActionsTarget { .. } => AttackerActionKind::ActionsTarget,
        }
    }

    pub fn target(&self) -> Option<&HostId> {
        match self {
            AttackerAction::DoNothing | AttackerAction::PassiveRecon => None,
            AttackerAction::ActiveRecon { host }
            | AttackerAction::VulnSearch { host }
            | AttackerAction::ExploreService { host }
            | AttackerAction::Exploit { host }
            | AttackerAction::ActionsTarget { host } => Some(host),
        }
    }
}

impl std::fmt::Display for AttackerAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.target() {
            Some(host) => write!(f, "{}({})", self.kind().name(), host),
            None => f.write_str(self.kind().name()),
        }
    }
}

/// Fixed global action ordering for a scenario: `do_nothing`,
/// `passive_recon`, then per host (sorted) the five host-targeted actions.
/// Greedy tie-breaking uses this order.
pub fn action_table(space: &StateSpace) -> Vec<AttackerAction> {
    let mut actions = vec![AttackerAction::DoNothing, AttackerAction::PassiveRecon];
    for host in space.hosts() {
        actions.push(AttackerAction::ActiveRecon { host: host.clone() });
        actions.push(AttackerAction::VulnSearch { host: host.clone() });
        actions.push(AttackerAction::ExploreService { host: host.clone() });
        actions.push(AttackerAction::Exploit { host: host.clone() });
        actions.push(AttackerAction::ActionsTarget { host: host.clone() });
    }
    actions
}

/// Service shape presented by a portspoof placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpoofedService {
    pub name: String,
    #[serde(default)]
    pub version: String,
    pub port: u16,
}

/// The eleven defensive/deceptive actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeceptionAction {
    DoNothing,
    MonitorIds,
    MonitorHbss,
    LaunchDecoy { host: HostSpec },
    PingResponder { addr: String },
    Portspoof { host: HostId, services: Vec<SpoofedService> },
    FalsifyResponse { host: HostId },
    TrafficControl { host: HostId, slowdown: f64 },
    TcpReset { host: HostId },
    CreateUser { account: AccountSpec },
    PlantCreds { account: AccountSpec },
}

/// Named, fixed-order feature vector of the linear reward.
///
/// Coordinates: `f0` bias (1 on non-terminal states), `f1` expected
/// knowledge-level increments, `f2` expected advertised value of a
/// real-or-apparent foothold acquisition, `f3` expected advertised value of
/// a loot completion, `f4` expected alerts from the per-action detection
/// probabilities, `f5` time cost (inflated by traffic_control), `f6` admin
/// credential use. Terminal states map to the zero vector so the absorbing
/// reward is 0 for every parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub const NAMES: [&'static str; FEATURE_DIM] = [
        "bias",
        "info_gain",
        "foothold_value",
        "loot_value",
        "alert_exposure",
        "time_cost",
        "admin_use",
    ];

    pub fn zeros() -> FeatureVector {
        FeatureVector([0.0; FEATURE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Weights of the linear reward, aligned with [`FeatureVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub psi: Vec<f64>,
}

impl RewardParams {
    pub fn zeros(dim: usize) -> RewardParams {
        RewardParams { psi: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }
}

/// Dot product `psi . f`.
pub fn reward(params: &RewardParams, features: &[f64]) -> Result<f64, MdpError> {
    if params.psi.len() != features.len() {
        return Err(MdpError::DimensionMismatch {
            psi: params.psi.len(),
            features: features.len(),
        });
    }
    Ok(params
        .psi
        .iter()
        .zip(features.iter())
        .map(|(w, f)| w * f)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;

    fn fixture() -> Scenario {
        load_scenario(include_str!("../../../../fixtures/six_host.scn")).unwrap()
    }

    #[test]
    fn one_host_space_has_24_states() {
        let doc = r#"{
            "hosts": [{"host_id": "h1", "ip_address": "10.0.0.1", "os": "linux", "value": 1.0}],
            "connectivity": {"external": ["h1"]}
        }"#;
        let scenario = load_scenario(doc).unwrap();
        let space = enumerate_states(&scenario).unwrap();
        assert_eq!(space.size(), 24);
    }

    #[test]
    fn six_host_space_size() {
        let space = enumerate_states(&fixture()).unwrap();
        assert_eq!(space.size(), 186_624);
    }

    #[test]
    fn cap_exceeded_reports_sizes() {
        let mut hosts = String::new();
        for i in 0..9 {
            if i > 0 {
                hosts.push(',');
            }
            hosts.push_str(&format!(
                r#"{{"host_id": "h{i}", "ip_address": "10.0.0.{i}", "os": "linux", "value": 1.0}}"#
            ));
        }
        let doc = format!(r#"{{"hosts": [{hosts}]}}"#);
        let scenario = load_scenario(&doc).unwrap();
        let err = enumerate_states(&scenario).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(&(NUM_LEVELS.pow(9) * 4).to_string()), "{msg}");
        assert!(msg.contains(&(NUM_LEVELS.pow(8) * 4).to_string()), "{msg}");
    }

    #[test]
    fn index_zero_is_initial_state() {
        let space = enumerate_states(&fixture()).unwrap();
        let initial = AttackerState::initial(space.num_hosts());
        assert_eq!(space.encode(&initial), 0);
        assert_eq!(space.decode(0), initial);
    }

    #[test]
    fn encode_decode_round_trip_samples() {
        let space = enumerate_states(&fixture()).unwrap();
        for index in [0u64, 1, 7, 6_000, 186_623, space.size() - 1] {
            assert_eq!(space.encode(&space.decode(index)), index);
        }
    }

    #[test]
    fn reward_is_dot_product() {
        let f = [1.0, 2.0, 0.0, 0.0, 0.5, 1.0, 0.0];
        assert_eq!(reward(&RewardParams::zeros(7), &f).unwrap(), 0.0);
        for i in 0..7 {
            let mut basis = RewardParams::zeros(7);
            basis.psi[i] = 1.0;
            assert_eq!(reward(&basis, &f).unwrap(), f[i]);
        }
        let psi = RewardParams {
            psi: vec![0.0, 1.0, 0.5, 2.0, -3.0, -0.1, -0.5],
        };
        // independent accumulation oracle
        let mut expected = 0.0;
        for i in 0..7 {
            expected += psi.psi[i] * f[i];
        }
        assert!((reward(&psi, &f).unwrap() - expected).abs() < 1e-15);
        let err = reward(&psi, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, MdpError::DimensionMismatch { .. }));
    }
}
