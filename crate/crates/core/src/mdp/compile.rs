//! Reachable-state compilation of a scenario into a [`TabularMdp`].
//!
//! The full state space (`6^H * 4` indices) stays a formula; only states
//! reachable from the initial state are materialized, via breadth-first
//! expansion of legal actions. Local dense ids are assigned in discovery
//! order with the initial state at 0.

use std::collections::HashMap;

use crate::scenario::Scenario;
use crate::tabular::TabularMdp;

use super::{
    action_table, dynamics, enumerate_states_capped, AttackerAction, AttackerState, FeatureMode,
    MdpError, StateSpace, DEFAULT_HOST_CAP,
};

/// A compiled scenario: the tabular MDP over reachable states plus the maps
/// needed to translate between local ids, global state indices, and actions.
#[derive(Debug, Clone)]
pub struct ScenarioMdp {
    pub scenario: Scenario,
    pub scenario_hash: String,
    pub space: StateSpace,
    pub actions: Vec<AttackerAction>,
    pub tab: TabularMdp,
    global_of_local: Vec<u64>,
    local_of_global: HashMap<u64, u32>,
}

impl ScenarioMdp {
    pub fn num_states(&self) -> usize {
        self.tab.num_states()
    }

    pub fn global_index(&self, local: usize) -> u64 {
        self.global_of_local[local]
    }

    pub fn local_index(&self, global: u64) -> Option<u32> {
        self.local_of_global.get(&global).copied()
    }

    pub fn state(&self, local: usize) -> AttackerState {
        self.space.decode(self.global_of_local[local])
    }

    pub fn action(&self, id: u32) -> &AttackerAction {
        &self.actions[id as usize]
    }

    pub fn action_id(&self, action: &AttackerAction) -> Option<u32> {
        self.actions
            .iter()
            .position(|a| a == action)
            .map(|i| i as u32)
    }
}

/// Compiles a validated scenario with the default host cap.
pub fn compile(scenario: &Scenario) -> Result<ScenarioMdp, MdpError> {
    compile_capped(scenario, DEFAULT_HOST_CAP)
}

pub fn compile_capped(scenario: &Scenario, cap: usize) -> Result<ScenarioMdp, MdpError> {
    scenario.validate()?;
    let space = enumerate_states_capped(scenario, cap)?;
    let actions = action_table(&space);
    let action_ids: HashMap<&AttackerAction, u32> = actions
        .iter()
        .enumerate()
        .map(|(i, a)| (a, i as u32))
        .collect();

    let initial = AttackerState::initial(space.num_hosts());
    let mut global_of_local: Vec<u64> = vec![space.encode(&initial)];
    let mut local_of_global: HashMap<u64, u32> = HashMap::new();
    local_of_global.insert(space.encode(&initial), 0);

    #[allow(clippy::type_complexity)]
    let mut rows: Vec<Vec<(u32, Vec<(u32, f64)>, Vec<f64>, Vec<f64>)>> = Vec::new();
    let mut cursor = 0usize;
    while cursor < global_of_local.len() {
        let state = space.decode(global_of_local[cursor]);
        let mut state_rows = Vec::new();
        for action in dynamics::legal_actions(&state, &space) {
            let dist = dynamics::transition(scenario, &space, &state, &action)?;
            let mut outcomes = Vec::with_capacity(dist.len());
            for (next, p) in &dist {
                let global = space.encode(next);
                let local = *local_of_global.entry(global).or_insert_with(|| {
                    global_of_local.push(global);
                    (global_of_local.len() - 1) as u32
                });
                outcomes.push((local, *p));
            }
            let visible =
                dynamics::features(scenario, &space, &state, &action, FeatureMode::AttackerVisible)?;
            let truth =
                dynamics::features(scenario, &space, &state, &action, FeatureMode::GroundTruth)?;
            state_rows.push((
                action_ids[&action],
                outcomes,
                visible.0.to_vec(),
                truth.0.to_vec(),
            ));
        }
        state_rows.sort_by_key(|(id, _, _, _)| *id);
        rows.push(state_rows);
        cursor += 1;
    }

    let tab = TabularMdp::from_rows(0, super::FEATURE_DIM, rows)
        .expect("compiled rows are normalized by construction");
    Ok(ScenarioMdp {
        scenario_hash: scenario.content_hash(),
        scenario: scenario.clone(),
        space,
        actions,
        tab,
        global_of_local,
        local_of_global,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;

    #[test]
    fn compiles_fixture_within_full_enumeration() {
        let scenario =
            load_scenario(include_str!("../../../../fixtures/six_host.scn")).unwrap();
        let mdp = compile(&scenario).unwrap();
        assert!(mdp.num_states() > 100);
        assert!((mdp.num_states() as u64) < mdp.space.size());
        // initial state is local 0 / global 0
        assert_eq!(mdp.global_index(0), 0);
        assert_eq!(mdp.local_index(0), Some(0));
    }

    #[test]
    fn every_reachable_state_has_legal_rows() {
        let scenario =
            load_scenario(include_str!("../../../../fixtures/six_host.scn")).unwrap();
        let mdp = compile(&scenario).unwrap();
        for s in 0..mdp.num_states() {
            assert!(mdp.tab.num_actions_in(s) >= 1);
            // do_nothing is always row 0 of every state
            assert_eq!(mdp.tab.action_of_row(mdp.tab.state_rows(s).start), 0);
        }
    }
}
