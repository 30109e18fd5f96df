//! Scenario terrain: hosts, decoys, services, accounts, connectivity, and
//! the deception placements folded into them.
//!
//! A scenario document is a JSON object with top-level keys `hosts`,
//! `accounts`, `connectivity`, `detection`, and `deceptions` (plus an
//! optional `goal_host`). The `deceptions` list is provenance: it records
//! placements that are *already reflected* in the terrain, so loading a
//! serialized scenario never re-applies them and round-trips are stable.
//!
//! Scenario values are immutable after load/apply and safe to share across
//! concurrent episode runners.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mdp::{AttackerActionKind, DeceptionAction};

/// Reserved connectivity key for the attacker's outside vantage point.
pub const EXTERNAL: &str = "external";

/// Current scenario schema version.
pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("scenario requires >=1 host")]
    NoHosts,

    #[error("duplicate ip_address {ip} (hosts {first} and {second})")]
    DuplicateIp {
        ip: String,
        first: String,
        second: String,
    },

    #[error("duplicate host_id {0}")]
    DuplicateHostId(String),

    #[error("duplicate username {0}")]
    DuplicateUsername(String),

    #[error("host {host}: duplicate port {port}")]
    DuplicatePort { host: String, port: u16 },

    #[error("host {host}: value must be >= 0, got {value}")]
    NegativeValue { host: String, value: f64 },

    #[error("host {host}: decoy_fidelity required when is_decoy")]
    MissingFidelity { host: String },

    #[error("host {host}: service {service} is spoofed but declares a ground-truth vulnerability")]
    SpoofedVuln { host: String, service: String },

    #[error("host {host}: traffic slowdown must be >= 1, got {slowdown}")]
    BadSlowdown { host: String, slowdown: f64 },

    #[error("host {host} references unknown account {username}")]
    UnknownAccountRef { host: String, username: String },

    #[error("account {username}: planted_on references unknown host {host}")]
    DanglingPlantedOn { username: String, host: String },

    #[error("connectivity references unknown host {0}")]
    DanglingConnectivity(String),

    #[error("goal_host {0} is not a declared host")]
    UnknownGoalHost(String),

    #[error("goal_host {0} must be a real host (not a decoy or phantom)")]
    DecoyGoalHost(String),

    #[error("no real host available to act as goal")]
    NoGoalCandidate,

    #[error("detection: alert probability for {kind} must be in [0,1], got {value}")]
    BadAlertProb { kind: String, value: f64 },

    #[error("detection: {field} must be in [0,1], got {value}")]
    BadProbability { field: &'static str, value: f64 },

    #[error("detection: {kind} alerts are not modeled; probability must be 0")]
    UnobservableAction { kind: String },

    #[error("deception target host {0} does not exist")]
    UnknownTarget(String),

    #[error("launch_decoy host must have is_decoy set (host {0})")]
    LaunchNonDecoy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OsKind {
    Windows,
    Linux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoyFidelity {
    LowInteraction,
    HighInteraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivLevel {
    User,
    Admin,
}

/// Opaque host identifier. Ordering is lexicographic and is the canonical
/// host order used by the state encoding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HostId(pub String);

impl HostId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for HostId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for HostId {
    fn from(s: &str) -> Self {
        HostId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnSpec {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub name: String,
    #[serde(default)]
    pub version: String,
    pub port: u16,
    #[serde(default)]
    pub vulnerability: Option<VulnSpec>,
    /// Presented by portspoof-style deception; looks exploitable but never is.
    #[serde(default)]
    pub spoofed: bool,
    /// Service reachable without credentials; the only services that
    /// `explore_service` can make progress against.
    #[serde(default)]
    pub unauthenticated: bool,
}

/// Per-host response-manipulation flags set by deception actions and
/// consumed by the transition dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseFlags {
    #[serde(default)]
    pub falsify_response: bool,
    #[serde(default)]
    pub tcp_reset: bool,
    #[serde(default = "default_slowdown")]
    pub traffic_slowdown: f64,
}

fn default_slowdown() -> f64 {
    1.0
}

impl Default for ResponseFlags {
    fn default() -> Self {
        ResponseFlags {
            falsify_response: false,
            tcp_reset: false,
            traffic_slowdown: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostSpec {
    pub host_id: HostId,
    pub ip_address: String,
    pub os: OsKind,
    #[serde(default)]
    pub os_version: String,
    #[serde(default)]
    pub is_decoy: bool,
    /// Meaningful only when `is_decoy`; required for decoys.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoy_fidelity: Option<DecoyFidelity>,
    /// Zero-service pseudo-host registered by a ping_responder; answers
    /// discovery but hosts nothing.
    #[serde(default)]
    pub phantom: bool,
    #[serde(default)]
    pub services: Vec<ServiceSpec>,
    /// Usernames (from the scenario account list) present on this host.
    #[serde(default)]
    pub accounts: Vec<String>,
    #[serde(default)]
    pub purpose: String,
    /// Defender-assigned worth. Decoys may advertise any value; their
    /// ground-truth attacker payoff is always 0.
    pub value: f64,
    #[serde(default)]
    pub response: ResponseFlags,
}

impl HostSpec {
    /// True when some service looks exploitable to the attacker
    /// (a declared vulnerability or a spoofed service).
    pub fn has_apparent_vuln(&self) -> bool {
        self.services
            .iter()
            .any(|s| s.vulnerability.is_some() || s.spoofed)
    }

    /// True when an exploit mechanically works against this host: a
    /// non-spoofed service with a declared vulnerability. On a
    /// high-interaction decoy this is a working exploit into the sandbox.
    pub fn has_working_exploit(&self) -> bool {
        self.services
            .iter()
            .any(|s| s.vulnerability.is_some() && !s.spoofed)
    }

    /// True when an unauthenticated service exposes an apparent weakness.
    pub fn has_unauthenticated_vuln(&self) -> bool {
        self.services
            .iter()
            .any(|s| s.unauthenticated && (s.vulnerability.is_some() || s.spoofed))
    }

    pub fn is_real(&self) -> bool {
        !self.is_decoy && !self.phantom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountSpec {
    pub username: String,
    pub priv_level: PrivLevel,
    #[serde(default)]
    pub is_decoy: bool,
    /// Hosts where this credential is planted as a lure.
    #[serde(default)]
    pub planted_on: Vec<HostId>,
    // Carried for completeness; no dynamics consume them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub password: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pwd_hash: Option<String>,
}

/// Per-action-class alert emission probabilities plus the transition
/// probabilities that deception manipulates. All scenario-configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Alert probability per attacker action kind. `do_nothing` and
    /// `passive_recon` must stay at 0: neither touches a monitored host.
    #[serde(default = "default_alert_probs")]
    pub alert_prob: BTreeMap<String, f64>,
    /// Probability that interacting with a decoy or phantom host raises a
    /// decoy-sourced alert.
    #[serde(default = "default_decoy_alert_prob")]
    pub decoy_alert_prob: f64,
    /// Per-host discovery probability for one passive_recon sweep.
    #[serde(default = "default_p_discover")]
    pub p_discover: f64,
    /// Exploit success probability against a working vulnerability.
    #[serde(default = "default_p_exploit")]
    pub p_exploit: f64,
    /// active_recon success probability against a TCP_reset host.
    #[serde(default = "default_tcp_reset_success")]
    pub tcp_reset_success: f64,
}

fn default_alert_probs() -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert("passive_recon".to_string(), 0.0);
    m.insert("active_recon".to_string(), 0.3);
    m.insert("vuln_search".to_string(), 0.4);
    m.insert("explore_service".to_string(), 0.0);
    m.insert("exploit".to_string(), 0.7);
    m.insert("actions_target".to_string(), 0.5);
    m
}

fn default_decoy_alert_prob() -> f64 {
    1.0
}
fn default_p_discover() -> f64 {
    0.6
}
fn default_p_exploit() -> f64 {
    0.8
}
fn default_tcp_reset_success() -> f64 {
    0.3
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            alert_prob: default_alert_probs(),
            decoy_alert_prob: default_decoy_alert_prob(),
            p_discover: default_p_discover(),
            p_exploit: default_p_exploit(),
            tcp_reset_success: default_tcp_reset_success(),
        }
    }
}

impl DetectionConfig {
    pub fn alert_prob_for(&self, kind: AttackerActionKind) -> f64 {
        self.alert_prob.get(kind.name()).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "scenario_format_version")]
    pub format_version: u32,
    /// Host whose looting ends the episode. Defaults to the highest-value
    /// real host (ties broken by host_id).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_host: Option<HostId>,
    pub hosts: Vec<HostSpec>,
    #[serde(default)]
    pub accounts: Vec<AccountSpec>,
    /// Directed reachability: `connectivity[u]` lists hosts reachable from
    /// `u`. The reserved key `external` lists the perimeter reachable from
    /// the attacker's starting vantage.
    #[serde(default)]
    pub connectivity: BTreeMap<String, Vec<HostId>>,
    #[serde(default)]
    pub detection: DetectionConfig,
    /// Deception placements already folded into the terrain above.
    #[serde(default)]
    pub deceptions: Vec<DeceptionAction>,
}

fn scenario_format_version() -> u32 {
    SCENARIO_FORMAT_VERSION
}

impl Scenario {
    pub fn num_hosts(&self) -> usize {
        self.hosts.len()
    }

    pub fn num_decoys(&self) -> usize {
        self.hosts.iter().filter(|h| h.is_decoy).count()
    }

    pub fn host(&self, id: &HostId) -> Option<&HostSpec> {
        self.hosts.iter().find(|h| &h.host_id == id)
    }

    /// Host ids in canonical (lexicographic) order.
    pub fn sorted_host_ids(&self) -> Vec<HostId> {
        let mut ids: Vec<HostId> = self.hosts.iter().map(|h| h.host_id.clone()).collect();
        ids.sort();
        ids
    }

    /// The effective goal host: the explicit one, or the highest-value real
    /// host with lexicographic tie-break.
    pub fn effective_goal(&self) -> Result<HostId, ScenarioError> {
        if let Some(goal) = &self.goal_host {
            return Ok(goal.clone());
        }
        let mut best: Option<&HostSpec> = None;
        for h in self.hosts.iter().filter(|h| h.is_real()) {
            best = match best {
                None => Some(h),
                Some(b) => {
                    if h.value > b.value || (h.value == b.value && h.host_id < b.host_id) {
                        Some(h)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best.map(|h| h.host_id.clone())
            .ok_or(ScenarioError::NoGoalCandidate)
    }

    /// True when a real (non-decoy) admin account is present on the host.
    pub fn real_admin_on(&self, host: &HostSpec) -> bool {
        host.accounts.iter().any(|username| {
            self.accounts
                .iter()
                .any(|a| &a.username == username && a.priv_level == PrivLevel::Admin && !a.is_decoy)
        })
    }

    /// Canonical serialization: compact JSON with struct-ordered keys and
    /// hosts sorted by host_id.
    pub fn canonical_json(&self) -> String {
        let mut normal = self.clone();
        normal.hosts.sort_by(|a, b| a.host_id.cmp(&b.host_id));
        normal
            .accounts
            .sort_by(|a, b| a.username.cmp(&b.username));
        serde_json::to_string(&normal).expect("scenario serialization cannot fail")
    }

    /// SHA-256 of the canonical serialization; the identity the trajectory
    /// log and every output document reference.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.hosts.is_empty() {
            return Err(ScenarioError::NoHosts);
        }
        let mut ips: BTreeMap<&str, &HostId> = BTreeMap::new();
        let mut ids: BTreeSet<&HostId> = BTreeSet::new();
        for h in &self.hosts {
            if !ids.insert(&h.host_id) {
                return Err(ScenarioError::DuplicateHostId(h.host_id.to_string()));
            }
            if let Some(prev) = ips.insert(h.ip_address.as_str(), &h.host_id) {
                return Err(ScenarioError::DuplicateIp {
                    ip: h.ip_address.clone(),
                    first: prev.to_string(),
                    second: h.host_id.to_string(),
                });
            }
            if h.value < 0.0 || !h.value.is_finite() {
                return Err(ScenarioError::NegativeValue {
                    host: h.host_id.to_string(),
                    value: h.value,
                });
            }
            if h.is_decoy && h.decoy_fidelity.is_none() {
                return Err(ScenarioError::MissingFidelity {
                    host: h.host_id.to_string(),
                });
            }
            if !(h.response.traffic_slowdown >= 1.0) {
                return Err(ScenarioError::BadSlowdown {
                    host: h.host_id.to_string(),
                    slowdown: h.response.traffic_slowdown,
                });
            }
            let mut ports = BTreeSet::new();
            for s in &h.services {
                if !ports.insert(s.port) {
                    return Err(ScenarioError::DuplicatePort {
                        host: h.host_id.to_string(),
                        port: s.port,
                    });
                }
                if s.spoofed && s.vulnerability.is_some() {
                    return Err(ScenarioError::SpoofedVuln {
                        host: h.host_id.to_string(),
                        service: s.name.clone(),
                    });
                }
            }
            for username in &h.accounts {
                if !self.accounts.iter().any(|a| &a.username == username) {
                    return Err(ScenarioError::UnknownAccountRef {
                        host: h.host_id.to_string(),
                        username: username.clone(),
                    });
                }
            }
        }
        let mut usernames = BTreeSet::new();
        for a in &self.accounts {
            if !usernames.insert(&a.username) {
                return Err(ScenarioError::DuplicateUsername(a.username.clone()));
            }
            for host in &a.planted_on {
                if !ids.contains(host) {
                    return Err(ScenarioError::DanglingPlantedOn {
                        username: a.username.clone(),
                        host: host.to_string(),
                    });
                }
            }
        }
        for (from, targets) in &self.connectivity {
            if from != EXTERNAL && !ids.contains(&HostId(from.clone())) {
                return Err(ScenarioError::DanglingConnectivity(from.clone()));
            }
            for to in targets {
                if !ids.contains(to) {
                    return Err(ScenarioError::DanglingConnectivity(to.to_string()));
                }
            }
        }
        if let Some(goal) = &self.goal_host {
            let host = self
                .host(goal)
                .ok_or_else(|| ScenarioError::UnknownGoalHost(goal.to_string()))?;
            if !host.is_real() {
                return Err(ScenarioError::DecoyGoalHost(goal.to_string()));
            }
        } else {
            self.effective_goal()?;
        }
        for (kind, p) in &self.detection.alert_prob {
            if !(0.0..=1.0).contains(p) {
                return Err(ScenarioError::BadAlertProb {
                    kind: kind.clone(),
                    value: *p,
                });
            }
            if (kind == "passive_recon" || kind == "do_nothing") && *p != 0.0 {
                return Err(ScenarioError::UnobservableAction { kind: kind.clone() });
            }
        }
        for (field, value) in [
            ("decoy_alert_prob", self.detection.decoy_alert_prob),
            ("p_discover", self.detection.p_discover),
            ("p_exploit", self.detection.p_exploit),
            ("tcp_reset_success", self.detection.tcp_reset_success),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ScenarioError::BadProbability { field, value });
            }
        }
        Ok(())
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(source)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Folds one deception action into the terrain, returning a new scenario.
/// The input is never mutated; `do_nothing` and the monitor actions return
/// an identical scenario.
pub fn apply_deception(
    scenario: &Scenario,
    action: &DeceptionAction,
) -> Result<Scenario, ScenarioError> {
    let mut next = scenario.clone();
    match action {
        DeceptionAction::DoNothing
        | DeceptionAction::MonitorIds
        | DeceptionAction::MonitorHbss => return Ok(next),
        DeceptionAction::LaunchDecoy { host } => {
            if !host.is_decoy {
                return Err(ScenarioError::LaunchNonDecoy(host.host_id.to_string()));
            }
            next.hosts.push(host.clone());
        }
        DeceptionAction::PingResponder { addr } => {
            next.hosts.push(HostSpec {
                host_id: HostId(format!("phantom-{addr}")),
                ip_address: addr.clone(),
                os: OsKind::Linux,
                os_version: String::new(),
                is_decoy: false,
                decoy_fidelity: None,
                phantom: true,
                services: Vec::new(),
                accounts: Vec::new(),
                purpose: "ping responder".to_string(),
                value: 0.0,
                response: ResponseFlags::default(),
            });
            // Phantoms answer discovery from anywhere on the perimeter.
            next.connectivity
                .entry(EXTERNAL.to_string())
                .or_default()
                .push(HostId(format!("phantom-{addr}")));
        }
        DeceptionAction::Portspoof { host, services } => {
            let target = next
                .hosts
                .iter_mut()
                .find(|h| &h.host_id == host)
                .ok_or_else(|| ScenarioError::UnknownTarget(host.to_string()))?;
            for svc in services {
                target.services.push(ServiceSpec {
                    name: svc.name.clone(),
                    version: svc.version.clone(),
                    port: svc.port,
                    vulnerability: None,
                    spoofed: true,
                    unauthenticated: false,
                });
            }
        }
        DeceptionAction::FalsifyResponse { host } => {
            flag_host(&mut next, host, |r| r.falsify_response = true)?;
        }
        DeceptionAction::TrafficControl { host, slowdown } => {
            let s = *slowdown;
            flag_host(&mut next, host, |r| r.traffic_slowdown = s)?;
        }
        DeceptionAction::TcpReset { host } => {
            flag_host(&mut next, host, |r| r.tcp_reset = true)?;
        }
        DeceptionAction::CreateUser { account } | DeceptionAction::PlantCreds { account } => {
            let mut planted = account.clone();
            planted.is_decoy = true;
            next.accounts.push(planted);
        }
    }
    next.deceptions.push(action.clone());
    next.validate()?;
    Ok(next)
}

fn flag_host(
    scenario: &mut Scenario,
    host: &HostId,
    set: impl FnOnce(&mut ResponseFlags),
) -> Result<(), ScenarioError> {
    let target = scenario
        .hosts
        .iter_mut()
        .find(|h| &h.host_id == host)
        .ok_or_else(|| ScenarioError::UnknownTarget(host.to_string()))?;
    set(&mut target.response);
    Ok(())
}

/// Derives the deception-absent variant: decoy and phantom hosts, decoy
/// accounts, spoofed services, and response manipulations are all removed.
pub fn strip_deceptions(scenario: &Scenario) -> Result<Scenario, ScenarioError> {
    let mut bare = scenario.clone();
    let removed: BTreeSet<HostId> = bare
        .hosts
        .iter()
        .filter(|h| h.is_decoy || h.phantom)
        .map(|h| h.host_id.clone())
        .collect();
    bare.hosts.retain(|h| !h.is_decoy && !h.phantom);
    for h in &mut bare.hosts {
        h.services.retain(|s| !s.spoofed);
        h.response = ResponseFlags::default();
    }
    bare.accounts.retain(|a| !a.is_decoy);
    let kept: BTreeSet<String> = bare.hosts.iter().map(|h| h.host_id.0.clone()).collect();
    for h in &mut bare.hosts {
        h.accounts
            .retain(|u| bare.accounts.iter().any(|a| &a.username == u));
    }
    bare.connectivity.retain(|k, _| k == EXTERNAL || kept.contains(k));
    for targets in bare.connectivity.values_mut() {
        targets.retain(|t| !removed.contains(t));
    }
    bare.deceptions.clear();
    bare.validate()?;
    Ok(bare)
}
