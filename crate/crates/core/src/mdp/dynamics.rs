//! Transition dynamics and the feature map.
//!
//! Host-targeted actions only take effect against hosts reachable from the
//! attacker's current position: the perimeter (`connectivity["external"]`)
//! plus every host adjacent to one the attacker holds a foothold on.
//! Actions stay legal regardless of reachability (legality is gated purely
//! by knowledge level); an action against an unreachable host is a no-op.
//! `vuln_search` is exempt: it runs offline against already-gathered data.

use std::collections::BTreeSet;

use crate::scenario::{HostSpec, Scenario, EXTERNAL};

use super::{
    AttackerAction, AttackerActionKind, AttackerState, FeatureVector, KnowledgeLevel, MdpError,
    StateSpace, FEATURE_DIM,
};

/// Which value a decoy contributes to the value-bearing features.
///
/// `AttackerVisible` uses advertised values everywhere (what the attacker
/// perceives and what trajectories are scored with during reward recovery);
/// `GroundTruth` zeroes the payoff of decoys and phantoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    AttackerVisible,
    GroundTruth,
}

/// Actions legal in `state`. Total: every state admits at least
/// `do_nothing`, and terminal states admit exactly that.
pub fn legal_actions(state: &AttackerState, space: &StateSpace) -> Vec<AttackerAction> {
    if state.terminal {
        return vec![AttackerAction::DoNothing];
    }
    let mut actions = vec![AttackerAction::DoNothing];
    if state
        .levels
        .iter()
        .any(|&l| l == KnowledgeLevel::Unknown)
    {
        actions.push(AttackerAction::PassiveRecon);
    }
    for (i, host) in space.hosts().iter().enumerate() {
        match state.levels[i] {
            KnowledgeLevel::Unknown => {}
            KnowledgeLevel::Discovered => {
                actions.push(AttackerAction::ActiveRecon { host: host.clone() })
            }
            KnowledgeLevel::Scanned => {
                actions.push(AttackerAction::VulnSearch { host: host.clone() });
                actions.push(AttackerAction::ExploreService { host: host.clone() });
            }
            KnowledgeLevel::VulnKnown => {
                actions.push(AttackerAction::Exploit { host: host.clone() })
            }
            KnowledgeLevel::Foothold => {
                actions.push(AttackerAction::ActionsTarget { host: host.clone() })
            }
            KnowledgeLevel::Looted => {}
        }
    }
    actions
}

/// Host ranks currently reachable: perimeter hosts plus hosts adjacent to a
/// foothold.
fn reachable_set(scenario: &Scenario, space: &StateSpace, state: &AttackerState) -> BTreeSet<usize> {
    let mut reachable = BTreeSet::new();
    if let Some(perimeter) = scenario.connectivity.get(EXTERNAL) {
        for id in perimeter {
            if let Some(rank) = space.host_rank(id) {
                reachable.insert(rank);
            }
        }
    }
    for (i, host) in space.hosts().iter().enumerate() {
        if state.levels[i] >= KnowledgeLevel::Foothold {
            if let Some(adjacent) = scenario.connectivity.get(host.as_str()) {
                for id in adjacent {
                    if let Some(rank) = space.host_rank(id) {
                        reachable.insert(rank);
                    }
                }
            }
        }
    }
    reachable
}

fn host_by_rank<'s>(scenario: &'s Scenario, space: &StateSpace, rank: usize) -> &'s HostSpec {
    scenario
        .host(&space.hosts()[rank])
        .expect("state space host exists in scenario")
}

fn require_legal(
    state: &AttackerState,
    space: &StateSpace,
    action: &AttackerAction,
) -> Result<(), MdpError> {
    if legal_actions(state, space).contains(action) {
        Ok(())
    } else {
        Err(MdpError::IllegalAction {
            action: action.to_string(),
            state: space.encode(state),
        })
    }
}

fn rank_of(space: &StateSpace, action: &AttackerAction) -> Result<usize, MdpError> {
    let host = action.target().expect("host-targeted action");
    space
        .host_rank(host)
        .ok_or_else(|| MdpError::UnknownHost(host.to_string()))
}

/// Normalized sparse next-state distribution for a legal `(state, action)`.
pub fn transition(
    scenario: &Scenario,
    space: &StateSpace,
    state: &AttackerState,
    action: &AttackerAction,
) -> Result<Vec<(AttackerState, f64)>, MdpError> {
    require_legal(state, space, action)?;
    let stay = vec![(state.clone(), 1.0)];
    if state.terminal {
        return Ok(stay);
    }
    let det = &scenario.detection;
    let out = match action {
        AttackerAction::DoNothing => stay,
        AttackerAction::PassiveRecon => {
            let reachable = reachable_set(scenario, space, state);
            let discoverable: Vec<usize> = (0..state.levels.len())
                .filter(|&i| {
                    state.levels[i] == KnowledgeLevel::Unknown && reachable.contains(&i)
                })
                .collect();
            if discoverable.is_empty() {
                return Ok(stay);
            }
            // Independent Bernoulli reveal per discoverable host.
            let p = det.p_discover;
            let mut outcomes = Vec::with_capacity(1 << discoverable.len());
            for mask in 0u32..(1 << discoverable.len()) {
                let mut prob = 1.0;
                let mut next = state.clone();
                for (bit, &rank) in discoverable.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        prob *= p;
                        next.levels[rank] = KnowledgeLevel::Discovered;
                    } else {
                        prob *= 1.0 - p;
                    }
                }
                if prob > 0.0 {
                    outcomes.push((next, prob));
                }
            }
            outcomes
        }
        AttackerAction::ActiveRecon { .. } => {
            let rank = rank_of(space, action)?;
            let host = host_by_rank(scenario, space, rank);
            if !reachable_set(scenario, space, state).contains(&rank) {
                return Ok(stay);
            }
            let p_succ = if host.response.tcp_reset {
                det.tcp_reset_success
            } else {
                1.0
            };
            advance(state, rank, KnowledgeLevel::Scanned, p_succ, false, false)
        }
        AttackerAction::VulnSearch { .. } => {
            // Offline analysis of scan output; no reachability requirement.
            let rank = rank_of(space, action)?;
            let host = host_by_rank(scenario, space, rank);
            if host.has_apparent_vuln() {
                advance(state, rank, KnowledgeLevel::VulnKnown, 1.0, false, false)
            } else {
                stay
            }
        }
        AttackerAction::ExploreService { .. } => {
            let rank = rank_of(space, action)?;
            let host = host_by_rank(scenario, space, rank);
            if reachable_set(scenario, space, state).contains(&rank)
                && host.has_unauthenticated_vuln()
            {
                advance(state, rank, KnowledgeLevel::VulnKnown, 1.0, false, false)
            } else {
                stay
            }
        }
        AttackerAction::Exploit { .. } => {
            let rank = rank_of(space, action)?;
            let host = host_by_rank(scenario, space, rank);
            if !reachable_set(scenario, space, state).contains(&rank) {
                return Ok(stay);
            }
            if host.phantom {
                return Ok(stay);
            }
            if host.is_decoy {
                match host.decoy_fidelity {
                    Some(crate::scenario::DecoyFidelity::LowInteraction) => {
                        if host.response.falsify_response {
                            // The defender fakes success; the attacker books
                            // an apparent foothold on the decoy.
                            advance(state, rank, KnowledgeLevel::Foothold, 1.0, false, false)
                        } else {
                            stay
                        }
                    }
                    _ => {
                        if host.has_working_exploit() {
                            advance(
                                state,
                                rank,
                                KnowledgeLevel::Foothold,
                                det.p_exploit,
                                false,
                                false,
                            )
                        } else {
                            stay
                        }
                    }
                }
            } else if host.has_working_exploit() {
                let grants_admin = scenario.real_admin_on(host);
                advance(
                    state,
                    rank,
                    KnowledgeLevel::Foothold,
                    det.p_exploit,
                    grants_admin,
                    false,
                )
            } else {
                stay
            }
        }
        AttackerAction::ActionsTarget { .. } => {
            let rank = rank_of(space, action)?;
            let host = host_by_rank(scenario, space, rank);
            let is_goal = scenario.effective_goal()? == host.host_id && host.is_real();
            advance(state, rank, KnowledgeLevel::Looted, 1.0, false, is_goal)
        }
    };
    Ok(out)
}

fn advance(
    state: &AttackerState,
    rank: usize,
    to: KnowledgeLevel,
    p_succ: f64,
    grants_admin: bool,
    sets_terminal: bool,
) -> Vec<(AttackerState, f64)> {
    let mut success = state.clone();
    success.levels[rank] = to;
    if grants_admin {
        success.admin_cred = true;
    }
    if sets_terminal {
        success.terminal = true;
    }
    if p_succ >= 1.0 {
        vec![(success, 1.0)]
    } else if p_succ <= 0.0 {
        vec![(state.clone(), 1.0)]
    } else {
        vec![(success, p_succ), (state.clone(), 1.0 - p_succ)]
    }
}

/// Deterministic feature vector for a legal `(state, action)` pair.
/// Expectation-valued coordinates use the transition distribution so the
/// reward is a function of `(state, action)` alone.
pub fn features(
    scenario: &Scenario,
    space: &StateSpace,
    state: &AttackerState,
    action: &AttackerAction,
    mode: FeatureMode,
) -> Result<FeatureVector, MdpError> {
    require_legal(state, space, action)?;
    if state.terminal {
        return Ok(FeatureVector::zeros());
    }
    let dist = transition(scenario, space, state, action)?;
    let mut f = [0.0; FEATURE_DIM];
    f[0] = 1.0;

    let target_rank = action.target().and_then(|h| space.host_rank(h));
    for (next, p) in &dist {
        let increments: u64 = next
            .levels
            .iter()
            .zip(state.levels.iter())
            .map(|(a, b)| a.digit().saturating_sub(b.digit()))
            .sum();
        f[1] += p * increments as f64;
        if let Some(rank) = target_rank {
            let host = host_by_rank(scenario, space, rank);
            let value = match mode {
                FeatureMode::AttackerVisible => host.value,
                FeatureMode::GroundTruth => {
                    if host.is_real() {
                        host.value
                    } else {
                        0.0
                    }
                }
            };
            if state.levels[rank] < KnowledgeLevel::Foothold
                && next.levels[rank] >= KnowledgeLevel::Foothold
            {
                f[2] += p * value;
            }
            if state.levels[rank] < KnowledgeLevel::Looted
                && next.levels[rank] == KnowledgeLevel::Looted
            {
                f[3] += p * value;
            }
        }
    }

    f[4] = scenario.detection.alert_prob_for(action.kind());
    f[5] = match target_rank {
        Some(rank) => host_by_rank(scenario, space, rank).response.traffic_slowdown,
        None => 1.0,
    };
    f[6] = if state.admin_cred
        && matches!(
            action.kind(),
            AttackerActionKind::Exploit | AttackerActionKind::ActionsTarget
        ) {
        1.0
    } else {
        0.0
    };
    Ok(FeatureVector(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::enumerate_states;
    use crate::scenario::load_scenario;

    fn two_host_scenario() -> Scenario {
        load_scenario(
            r#"{
            "hosts": [
                {"host_id": "a", "ip_address": "10.0.0.1", "os": "linux", "value": 2.0,
                 "services": [{"name": "http", "port": 80, "vulnerability": {"id": "CVE-X"}}]},
                {"host_id": "b", "ip_address": "10.0.0.2", "os": "windows", "value": 1.0}
            ],
            "connectivity": {"external": ["a", "b"]}
        }"#,
        )
        .unwrap()
    }

    fn one_host_scenario() -> Scenario {
        load_scenario(
            r#"{
            "hosts": [
                {"host_id": "a", "ip_address": "10.0.0.1", "os": "linux", "value": 2.0,
                 "services": [{"name": "http", "port": 80, "vulnerability": {"id": "CVE-X"}}]}
            ],
            "connectivity": {"external": ["a"]}
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn initial_state_legal_actions() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let initial = AttackerState::initial(2);
        let legal = legal_actions(&initial, &space);
        assert_eq!(
            legal,
            vec![AttackerAction::DoNothing, AttackerAction::PassiveRecon]
        );
    }

    #[test]
    fn vuln_known_gates_exploit_not_actions_target() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let mut s = AttackerState::initial(2);
        s.levels[0] = KnowledgeLevel::VulnKnown;
        let legal = legal_actions(&s, &space);
        let host = crate::scenario::HostId::from("a");
        assert!(legal.contains(&AttackerAction::Exploit { host: host.clone() }));
        assert!(!legal.contains(&AttackerAction::ActionsTarget { host }));
    }

    #[test]
    fn terminal_admits_only_do_nothing() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let mut s = AttackerState::initial(2);
        s.terminal = true;
        assert_eq!(legal_actions(&s, &space), vec![AttackerAction::DoNothing]);
        let dist = transition(&scenario, &space, &s, &AttackerAction::DoNothing).unwrap();
        assert_eq!(dist, vec![(s, 1.0)]);
    }

    #[test]
    fn exploit_echoes_p_exploit() {
        let scenario = one_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let mut s = AttackerState::initial(1);
        s.levels[0] = KnowledgeLevel::VulnKnown;
        let host = crate::scenario::HostId::from("a");
        let dist = transition(&scenario, &space, &s, &AttackerAction::Exploit { host }).unwrap();
        assert_eq!(dist.len(), 2);
        let (success, p_succ) = &dist[0];
        assert_eq!(success.levels[0], KnowledgeLevel::Foothold);
        assert!((p_succ - 0.8).abs() < 1e-15);
        assert!((dist[1].1 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn passive_recon_two_unknowns_product_of_bernoullis() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let initial = AttackerState::initial(2);
        let dist =
            transition(&scenario, &space, &initial, &AttackerAction::PassiveRecon).unwrap();
        assert_eq!(dist.len(), 4);
        // brute-force oracle: enumerate the 2x2 joint
        let p = 0.6f64;
        let mut expected: Vec<f64> = vec![
            p * p,
            p * (1.0 - p),
            (1.0 - p) * p,
            (1.0 - p) * (1.0 - p),
        ];
        let mut got: Vec<f64> = dist.iter().map(|(_, q)| *q).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, g) in expected.iter().zip(got.iter()) {
            assert!((e - g).abs() < 1e-15);
        }
        let total: f64 = dist.iter().map(|(_, q)| q).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn do_nothing_features_are_unit_bias_and_time() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let initial = AttackerState::initial(2);
        let f = features(
            &scenario,
            &space,
            &initial,
            &AttackerAction::DoNothing,
            FeatureMode::AttackerVisible,
        )
        .unwrap();
        assert_eq!(f.0, [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn terminal_features_are_zero() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let mut s = AttackerState::initial(2);
        s.terminal = true;
        let f = features(
            &scenario,
            &space,
            &s,
            &AttackerAction::DoNothing,
            FeatureMode::AttackerVisible,
        )
        .unwrap();
        assert_eq!(f.0, [0.0; 7]);
    }

    #[test]
    fn passive_recon_info_gain_expectation() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let initial = AttackerState::initial(2);
        let f = features(
            &scenario,
            &space,
            &initial,
            &AttackerAction::PassiveRecon,
            FeatureMode::AttackerVisible,
        )
        .unwrap();
        // brute-force expectation oracle: sum over the 4 outcomes
        let p = 0.6f64;
        let expected = p * p * 2.0 + 2.0 * (p * (1.0 - p));
        assert!((f[1] - expected).abs() < 1e-12);
        assert!((f[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn falsified_decoy_exploit_features_depend_on_mode() {
        let scenario = load_scenario(
            r#"{
            "hosts": [
                {"host_id": "d", "ip_address": "10.0.0.9", "os": "linux", "value": 10.0,
                 "is_decoy": true, "decoy_fidelity": "low_interaction",
                 "response": {"falsify_response": true},
                 "services": [{"name": "smb", "port": 445, "spoofed": true}]},
                {"host_id": "r", "ip_address": "10.0.0.1", "os": "linux", "value": 1.0,
                 "services": [{"name": "http", "port": 80, "vulnerability": {"id": "CVE-X"}}]}
            ],
            "connectivity": {"external": ["d", "r"]}
        }"#,
        )
        .unwrap();
        let space = enumerate_states(&scenario).unwrap();
        let mut s = AttackerState::initial(2);
        s.levels[0] = KnowledgeLevel::VulnKnown;
        let action = AttackerAction::Exploit {
            host: crate::scenario::HostId::from("d"),
        };
        let visible = features(&scenario, &space, &s, &action, FeatureMode::AttackerVisible).unwrap();
        let truth = features(&scenario, &space, &s, &action, FeatureMode::GroundTruth).unwrap();
        assert!((visible[2] - 10.0).abs() < 1e-12);
        assert_eq!(truth[2], 0.0);
        // apparent foothold is certain under falsify_response
        let dist = transition(&scenario, &space, &s, &action).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist[0].0.levels[0], KnowledgeLevel::Foothold);
    }

    #[test]
    fn unreachable_host_actions_are_noops() {
        let scenario = load_scenario(
            r#"{
            "hosts": [
                {"host_id": "edge", "ip_address": "10.0.0.1", "os": "linux", "value": 1.0,
                 "services": [{"name": "http", "port": 80, "vulnerability": {"id": "CVE-X"}}]},
                {"host_id": "inner", "ip_address": "10.0.0.2", "os": "linux", "value": 5.0,
                 "services": [{"name": "smb", "port": 445, "vulnerability": {"id": "CVE-Y"}}]}
            ],
            "connectivity": {"external": ["edge"], "edge": ["inner"]}
        }"#,
        )
        .unwrap();
        let space = enumerate_states(&scenario).unwrap();
        // passive recon can only find the perimeter host
        let initial = AttackerState::initial(2);
        let dist =
            transition(&scenario, &space, &initial, &AttackerAction::PassiveRecon).unwrap();
        assert_eq!(dist.len(), 2);
        for (next, _) in &dist {
            assert_eq!(next.levels[1], KnowledgeLevel::Unknown); // "inner" sorted second
        }
        // after a foothold on edge, inner becomes discoverable
        let mut s = AttackerState::initial(2);
        s.levels[0] = KnowledgeLevel::Foothold;
        let dist = transition(&scenario, &space, &s, &AttackerAction::PassiveRecon).unwrap();
        assert!(dist
            .iter()
            .any(|(next, _)| next.levels[1] == KnowledgeLevel::Discovered));
    }

    #[test]
    fn illegal_action_is_rejected() {
        let scenario = two_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let initial = AttackerState::initial(2);
        let err = transition(
            &scenario,
            &space,
            &initial,
            &AttackerAction::Exploit {
                host: crate::scenario::HostId::from("a"),
            },
        )
        .unwrap_err();
        assert!(matches!(err, MdpError::IllegalAction { .. }));
    }

    #[test]
    fn goal_loot_sets_terminal() {
        let scenario = one_host_scenario();
        let space = enumerate_states(&scenario).unwrap();
        let mut s = AttackerState::initial(1);
        s.levels[0] = KnowledgeLevel::Foothold;
        let dist = transition(
            &scenario,
            &space,
            &s,
            &AttackerAction::ActionsTarget {
                host: crate::scenario::HostId::from("a"),
            },
        )
        .unwrap();
        assert_eq!(dist.len(), 1);
        assert!(dist[0].0.terminal);
        assert_eq!(dist[0].0.levels[0], KnowledgeLevel::Looted);
    }
}
