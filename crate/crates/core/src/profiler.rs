//! Attacker profiling from trajectory logs.
//!
//! Two layers with deliberately different visibility rules:
//!
//! * [`ProfileMetrics`] aggregates ground-truth activity (it may decode
//!   state indices and read knowledge levels).
//! * [`InferredProfile`] is computed purely from defender-visible record
//!   fields — action targets and kinds, alerts, timing — plus the
//!   defender's own knowledge of which hosts it planted as decoys. It never
//!   reads the attacker's knowledge state.
//!
//! Fields the underlying data cannot support (emotional state, attacker
//! count) are reported as explicit `not_inferable` sentinels rather than
//! guesses. All heuristic thresholds live in [`ProfilerConfig`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mdp::{enumerate_states_capped, AttackerActionKind, KnowledgeLevel};
use crate::scenario::{HostId, Scenario};
use crate::sim::{Severity, Trajectory, TrajectorySet};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("empty trajectory set")]
    EmptySet,

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("trajectory hash {log} does not match scenario hash {scenario}")]
    ScenarioMismatch { log: String, scenario: String },

    #[error(transparent)]
    Mdp(#[from] crate::mdp::MdpError),
}

/// Thresholds for the inferred-profile heuristics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfilerConfig {
    /// Coefficient of variation of inter-action gaps below which the
    /// actor is classified as scripted.
    pub scripted_cv_threshold: f64,
    /// Post-contact decoy-interaction rate must fall below this fraction
    /// of the initial engagement rate to count as deception-aware.
    pub deception_aware_drop: f64,
    /// Fraction of recon-class steps above which "recon-heavy" is tagged.
    pub recon_heavy_fraction: f64,
    /// Fraction of decoy-targeted steps above which "decoy-distracted" is
    /// tagged.
    pub decoy_distracted_fraction: f64,
}

impl Default for ProfilerConfig {
    fn default() -> Self {
        ProfilerConfig {
            scripted_cv_threshold: 0.05,
            deception_aware_drop: 0.5,
            recon_heavy_fraction: 0.5,
            decoy_distracted_fraction: 0.25,
        }
    }
}

/// Severity weights for the stealth score: low=1, medium=2, high=4.
fn severity_weight(s: Severity) -> f64 {
    match s {
        Severity::Low => 1.0,
        Severity::Medium => 2.0,
        Severity::High => 4.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetInteraction {
    pub interactions: usize,
    pub max_knowledge_level: KnowledgeLevel,
}

/// Ground-truth activity metadata for one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetrics {
    pub target_interactions: BTreeMap<HostId, TargetInteraction>,
    /// Total wall-time units from first to last record.
    pub attack_duration: f64,
    /// `1 - min(1, weighted_alerts / record_count)`; 1.0 means silent.
    pub stealth: f64,
    pub alert_count: usize,
    pub severity_histogram: BTreeMap<Severity, usize>,
}

/// Deterministic ground-truth aggregation over one chained trajectory.
pub fn compute_metrics(
    trajectory: &Trajectory,
    scenario: &Scenario,
) -> Result<ProfileMetrics, ProfileError> {
    if trajectory.records.is_empty() {
        return Err(ProfileError::EmptyTrajectory);
    }
    let space = enumerate_states_capped(scenario, scenario.num_hosts().max(1))?;
    let mut interactions: BTreeMap<HostId, TargetInteraction> = BTreeMap::new();
    let mut duration = 0.0;
    let mut weighted = 0.0;
    let mut alert_count = 0usize;
    let mut histogram: BTreeMap<Severity, usize> = BTreeMap::new();
    for r in &trajectory.records {
        duration += r.wall_time_units;
        for a in &r.alerts {
            weighted += severity_weight(a.severity);
            alert_count += 1;
            *histogram.entry(a.severity).or_insert(0) += 1;
        }
        if let Some(target) = r.action.target() {
            let next = space.decode(r.next_state_index);
            let level = space
                .host_rank(target)
                .map(|rank| next.levels[rank])
                .unwrap_or(KnowledgeLevel::Unknown);
            let entry = interactions
                .entry(target.clone())
                .or_insert(TargetInteraction {
                    interactions: 0,
                    max_knowledge_level: KnowledgeLevel::Unknown,
                });
            entry.interactions += 1;
            if level > entry.max_knowledge_level {
                entry.max_knowledge_level = level;
            }
        }
    }
    let stealth = 1.0 - (weighted / trajectory.records.len() as f64).min(1.0);
    Ok(ProfileMetrics {
        target_interactions: interactions,
        attack_duration: duration,
        stealth,
        alert_count,
        severity_histogram: histogram,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentience {
    LikelyScripted,
    LikelyHuman,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Low,
    High,
}

/// Sentinel for profile fields the log cannot support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotInferable {
    NotInferable,
}

/// Attributes inferred from attack patterns, mirroring the inferred-profile
/// characteristic set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredProfile {
    pub sentience: Sentience,
    pub num_attackers: NotInferable,
    /// Inverse alerts-per-progression, in [0,1].
    pub expertise: f64,
    pub deception_aware: bool,
    pub deception_aware_confidence: Confidence,
    pub emotional_state: NotInferable,
    /// Host with the highest interaction-weighted advertised value.
    pub goal: Option<HostId>,
    pub strategy: Vec<String>,
    /// Ordinal 1–5 from expertise and estimated goal value.
    pub threat_level: u8,
    /// Content hash of the action-kind bigram distribution.
    pub fingerprint: String,
}

/// Heuristic inference over a trajectory set, using defender-visible
/// fields only.
pub fn infer_profile(
    ts: &TrajectorySet,
    scenario: &Scenario,
    cfg: &ProfilerConfig,
) -> Result<InferredProfile, ProfileError> {
    if ts.is_empty() || ts.trajectories.iter().all(|t| t.records.is_empty()) {
        return Err(ProfileError::EmptySet);
    }

    let sentience = classify_sentience(ts, cfg);
    let expertise = estimate_expertise(ts);
    let (deception_aware, confidence) = estimate_deception_awareness(ts, scenario, cfg);
    let goal = estimate_goal(ts, scenario);
    let strategy = strategy_tags(ts, scenario, cfg);
    let threat_level = threat_level(expertise, goal.as_ref(), scenario);
    let fingerprint = fingerprint(ts);

    Ok(InferredProfile {
        sentience,
        num_attackers: NotInferable::NotInferable,
        expertise,
        deception_aware,
        deception_aware_confidence: confidence,
        emotional_state: NotInferable::NotInferable,
        goal,
        strategy,
        threat_level,
        fingerprint,
    })
}

fn classify_sentience(ts: &TrajectorySet, cfg: &ProfilerConfig) -> Sentience {
    let gaps: Vec<f64> = ts
        .trajectories
        .iter()
        .flat_map(|t| t.records.iter().map(|r| r.wall_time_units))
        .collect();
    if gaps.len() < 2 {
        return Sentience::Unknown;
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if mean <= 0.0 {
        return Sentience::Unknown;
    }
    let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / gaps.len() as f64;
    let cv = var.sqrt() / mean;
    if cv < cfg.scripted_cv_threshold {
        Sentience::LikelyScripted
    } else {
        Sentience::LikelyHuman
    }
}

/// Progressions are kill-chain escalations per host visible in the action
/// stream: acting on a host with a strictly higher-ranked action than any
/// previous action on it implies the earlier stage succeeded.
fn estimate_expertise(ts: &TrajectorySet) -> f64 {
    let mut alerts = 0.0;
    let mut progressions = 0usize;
    for t in &ts.trajectories {
        let mut best_rank: BTreeMap<&HostId, u8> = BTreeMap::new();
        for r in &t.records {
            alerts += r.alerts.iter().map(|a| severity_weight(a.severity)).sum::<f64>();
            if let Some(target) = r.action.target() {
                let rank = r.action.kind().chain_rank();
                let prev = best_rank.get(target).copied().unwrap_or(0);
                if rank > prev {
                    if prev > 0 {
                        progressions += 1;
                    }
                    best_rank.insert(target, rank);
                }
            }
        }
    }
    let ratio = alerts / progressions.max(1) as f64;
    1.0 / (1.0 + ratio)
}

/// Splits the steps after first decoy contact in half and compares decoy-
/// interaction rates: a pronounced drop suggests the attacker caught on.
fn estimate_deception_awareness(
    ts: &TrajectorySet,
    scenario: &Scenario,
    cfg: &ProfilerConfig,
) -> (bool, Confidence) {
    let is_decoyish = |id: &HostId| {
        scenario
            .host(id)
            .map(|h| h.is_decoy || h.phantom)
            .unwrap_or(false)
    };
    if scenario.hosts.iter().all(|h| h.is_real()) {
        return (false, Confidence::Low);
    }
    let mut early_hits = 0usize;
    let mut early_steps = 0usize;
    let mut late_hits = 0usize;
    let mut late_steps = 0usize;
    for t in &ts.trajectories {
        let first_contact = t.records.iter().position(|r| {
            r.action
                .target()
                .map(|target| is_decoyish(target))
                .unwrap_or(false)
        });
        let Some(start) = first_contact else { continue };
        let tail = &t.records[start..];
        let half = tail.len() / 2;
        for (i, r) in tail.iter().enumerate() {
            let hit = r
                .action
                .target()
                .map(|target| is_decoyish(target))
                .unwrap_or(false) as usize;
            if i < half.max(1) {
                early_steps += 1;
                early_hits += hit;
            } else {
                late_steps += 1;
                late_hits += hit;
            }
        }
    }
    if early_steps == 0 || late_steps == 0 || early_hits == 0 {
        return (false, Confidence::Low);
    }
    let early_rate = early_hits as f64 / early_steps as f64;
    let late_rate = late_hits as f64 / late_steps as f64;
    (late_rate < cfg.deception_aware_drop * early_rate, Confidence::High)
}

fn estimate_goal(ts: &TrajectorySet, scenario: &Scenario) -> Option<HostId> {
    let mut weighted: BTreeMap<&HostId, f64> = BTreeMap::new();
    for t in &ts.trajectories {
        for r in &t.records {
            if let Some(target) = r.action.target() {
                if let Some(host) = scenario.host(target) {
                    *weighted.entry(&host.host_id).or_insert(0.0) += host.value;
                }
            }
        }
    }
    weighted
        .into_iter()
        .max_by(|(ha, va), (hb, vb)| {
            va.partial_cmp(vb)
                .unwrap()
                .then_with(|| hb.cmp(ha)) // lexicographically-smaller id wins ties
        })
        .map(|(h, _)| h.clone())
}

fn strategy_tags(ts: &TrajectorySet, scenario: &Scenario, cfg: &ProfilerConfig) -> Vec<String> {
    let mut steps = 0usize;
    let mut recon = 0usize;
    let mut decoy_steps = 0usize;
    let mut first_exploit: Option<usize> = None;
    let mut total_len = 0usize;
    for t in &ts.trajectories {
        total_len += t.records.len();
        for r in &t.records {
            steps += 1;
            match r.action.kind() {
                AttackerActionKind::PassiveRecon | AttackerActionKind::ActiveRecon => recon += 1,
                AttackerActionKind::Exploit => {
                    if first_exploit.is_none() {
                        first_exploit = Some(r.step);
                    }
                }
                _ => {}
            }
            if let Some(target) = r.action.target() {
                if scenario
                    .host(target)
                    .map(|h| h.is_decoy || h.phantom)
                    .unwrap_or(false)
                {
                    decoy_steps += 1;
                }
            }
        }
    }
    let mut tags = Vec::new();
    if steps > 0 && recon as f64 / steps as f64 > cfg.recon_heavy_fraction {
        tags.push("recon-heavy".to_string());
    }
    let mean_len = total_len as f64 / ts.len().max(1) as f64;
    if let Some(step) = first_exploit {
        if (step as f64) < mean_len / 4.0 {
            tags.push("exploit-early".to_string());
        }
    }
    if steps > 0 && decoy_steps as f64 / steps as f64 > cfg.decoy_distracted_fraction {
        tags.push("decoy-distracted".to_string());
    }
    tags
}

fn threat_level(expertise: f64, goal: Option<&HostId>, scenario: &Scenario) -> u8 {
    let max_value = scenario
        .hosts
        .iter()
        .map(|h| h.value)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let goal_value = goal
        .and_then(|g| scenario.host(g))
        .map(|h| h.value)
        .unwrap_or(0.0);
    let score = expertise * (goal_value / max_value);
    ((score * 5.0).ceil() as u8).clamp(1, 5)
}

/// SHA-256 over the sorted action-kind bigram counts.
fn fingerprint(ts: &TrajectorySet) -> String {
    let mut bigrams: BTreeMap<(String, String), usize> = BTreeMap::new();
    for t in &ts.trajectories {
        for pair in t.records.windows(2) {
            let key = (
                pair[0].action.kind().name().to_string(),
                pair[1].action.kind().name().to_string(),
            );
            *bigrams.entry(key).or_insert(0) += 1;
        }
    }
    let mut canonical = String::new();
    for ((a, b), count) in &bigrams {
        canonical.push_str(&format!("{a}>{b}:{count};"));
    }
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::compile;
    use crate::scenario::load_scenario;
    use crate::sim::{run_batch, run_episode, SoftAttacker};

    fn fixture() -> Scenario {
        load_scenario(include_str!("../../../fixtures/six_host.scn")).unwrap()
    }

    fn sample(n: usize, horizon: usize) -> (Scenario, TrajectorySet) {
        let scenario = fixture();
        let mdp = compile(&scenario).unwrap();
        let attacker = SoftAttacker::new(vec![0.0, 1.0, 0.5, 2.0, -3.0, -0.1, -0.5]);
        let policy = attacker.solve(&mdp).unwrap();
        let (set, _) = run_batch(&mdp, &policy, n, 21, horizon).unwrap();
        (scenario, set)
    }

    #[test]
    fn zero_alert_trajectory_has_full_stealth() {
        let (scenario, set) = sample(5, 30);
        if let Some(t) = set
            .trajectories
            .iter()
            .find(|t| t.records.iter().all(|r| r.alerts.is_empty()))
        {
            let m = compute_metrics(t, &scenario).unwrap();
            assert_eq!(m.stealth, 1.0);
        }
        // synthetic certainty: strip all alerts from one trajectory
        let mut t = set.trajectories[0].clone();
        for r in &mut t.records {
            r.alerts.clear();
        }
        let m = compute_metrics(&t, &scenario).unwrap();
        assert_eq!(m.stealth, 1.0);
    }

    #[test]
    fn single_record_duration_is_that_records_wall_time() {
        let scenario = fixture();
        let mdp = compile(&scenario).unwrap();
        let attacker = SoftAttacker::new(vec![0.0; 7]);
        let policy = attacker.solve(&mdp).unwrap();
        let t = run_episode(&mdp, &policy, 3, 1).unwrap();
        let m = compute_metrics(&t, &scenario).unwrap();
        assert_eq!(m.attack_duration, t.records[0].wall_time_units);
    }

    #[test]
    fn stealth_matches_hand_aggregation() {
        let (scenario, set) = sample(1, 30);
        let mut t = set.trajectories[0].clone();
        t.records.truncate(10);
        // rebuild alerts: exactly two medium alerts
        for r in &mut t.records {
            r.alerts.clear();
        }
        for i in [2usize, 7] {
            let record = &t.records[i];
            let alert = crate::sim::Alert {
                step: record.step,
                source: crate::sim::AlertSource::Ids,
                severity: Severity::Medium,
                host_id: record
                    .action
                    .target()
                    .cloned()
                    .unwrap_or_else(|| HostId::from("corp-ws")),
                action_kind: record.action.kind(),
            };
            t.records[i].alerts.push(alert);
        }
        let m = compute_metrics(&t, &scenario).unwrap();
        assert!((m.stealth - 0.6).abs() < 1e-12, "stealth {}", m.stealth);
    }

    #[test]
    fn fixed_interval_trajectory_is_scripted() {
        let (scenario, set) = sample(3, 25);
        // the simulator emits constant unit wall times unless slowed; CV = 0
        let profile = infer_profile(&set, &scenario, &ProfilerConfig::default()).unwrap();
        assert_eq!(profile.sentience, Sentience::LikelyScripted);
        assert_eq!(profile.num_attackers, NotInferable::NotInferable);
        assert_eq!(profile.emotional_state, NotInferable::NotInferable);
        assert!(profile.expertise >= 0.0 && profile.expertise <= 1.0);
        assert!((1..=5).contains(&profile.threat_level));
    }

    #[test]
    fn no_decoys_means_not_deception_aware_low_confidence() {
        let scenario = crate::scenario::strip_deceptions(&fixture()).unwrap();
        let mdp = compile(&scenario).unwrap();
        let attacker = SoftAttacker::new(vec![0.0, 1.0, 0.5, 2.0, -3.0, -0.1, -0.5]);
        let policy = attacker.solve(&mdp).unwrap();
        let (set, _) = run_batch(&mdp, &policy, 3, 5, 25).unwrap();
        let profile = infer_profile(&set, &scenario, &ProfilerConfig::default()).unwrap();
        assert!(!profile.deception_aware);
        assert_eq!(profile.deception_aware_confidence, Confidence::Low);
    }

    #[test]
    fn profiles_are_deterministic() {
        let (scenario, set) = sample(4, 30);
        let cfg = ProfilerConfig::default();
        let a = infer_profile(&set, &scenario, &cfg).unwrap();
        let b = infer_profile(&set, &scenario, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let ma = compute_metrics(&set.trajectories[0], &scenario).unwrap();
        let mb = compute_metrics(&set.trajectories[0], &scenario).unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn adding_an_alert_never_increases_stealth() {
        let (scenario, set) = sample(1, 20);
        let t = set.trajectories[0].clone();
        let base = compute_metrics(&t, &scenario).unwrap();
        let mut more = t.clone();
        let alert = crate::sim::Alert {
            step: 0,
            source: crate::sim::AlertSource::Ids,
            severity: Severity::Low,
            host_id: more.records[0]
                .action
                .target()
                .cloned()
                .unwrap_or_else(|| HostId::from("corp-ws")),
            action_kind: more.records[0].action.kind(),
        };
        more.records[0].alerts.push(alert);
        let bumped = compute_metrics(&more, &scenario).unwrap();
        assert!(bumped.stealth <= base.stealth);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let scenario = fixture();
        let empty = TrajectorySet::new(Vec::new()).unwrap();
        assert!(matches!(
            infer_profile(&empty, &scenario, &ProfilerConfig::default()),
            Err(ProfileError::EmptySet)
        ));
    }
}
