//! Flat tabular MDP representation consumed by the solvers and the reward
//! learner. Rows are `(state, legal-action-slot)` pairs; per-state legal
//! action lists are sorted by global action id, transition rows are sparse,
//! and each row carries two feature vectors (attacker-visible and ground
//! truth). Built once, then immutable; concurrent readers are safe.

use thiserror::Error;

use crate::mdp::FeatureMode;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("state {state} has no legal actions")]
    NoLegalActions { state: usize },

    #[error("transition row for state {state} slot {slot} sums to {sum}, expected 1")]
    RowNotNormalized { state: usize, slot: usize, sum: f64 },

    #[error("transition row for state {state} slot {slot} references state {target} out of range")]
    TargetOutOfRange {
        state: usize,
        slot: usize,
        target: usize,
    },

    #[error("feature rows must all have dimension {expected}, found {found}")]
    FeatureDim { expected: usize, found: usize },
}

/// One sparse transition entry: (next state, probability).
pub type Outcome = (u32, f64);

#[derive(Debug, Clone)]
pub struct TabularMdp {
    num_states: usize,
    initial_state: usize,
    feature_dim: usize,
    /// Global action id per (state, slot), flattened; slots sorted ascending.
    legal: Vec<u32>,
    /// Row offsets into `legal` (and into rows), length `num_states + 1`.
    state_offsets: Vec<u32>,
    /// Outcome offsets per row, length `num_rows + 1`.
    row_offsets: Vec<u32>,
    outcomes: Vec<Outcome>,
    feat_visible: Vec<f64>,
    feat_truth: Vec<f64>,
}

impl TabularMdp {
    /// Assembles and validates a tabular MDP from per-state rows.
    ///
    /// `rows[s]` lists `(global_action_id, outcomes, feat_visible, feat_truth)`
    /// for each legal action of state `s`, sorted by action id.
    #[allow(clippy::type_complexity)]
    pub fn from_rows(
        initial_state: usize,
        feature_dim: usize,
        rows: Vec<Vec<(u32, Vec<Outcome>, Vec<f64>, Vec<f64>)>>,
    ) -> Result<TabularMdp, TabularError> {
        let num_states = rows.len();
        let mut legal = Vec::new();
        let mut state_offsets = Vec::with_capacity(num_states + 1);
        let mut row_offsets = vec![0u32];
        let mut outcomes = Vec::new();
        let mut feat_visible = Vec::new();
        let mut feat_truth = Vec::new();
        state_offsets.push(0);
        for (s, state_rows) in rows.into_iter().enumerate() {
            if state_rows.is_empty() {
                return Err(TabularError::NoLegalActions { state: s });
            }
            for (slot, (action, row, fv, ft)) in state_rows.into_iter().enumerate() {
                let sum: f64 = row.iter().map(|(_, p)| p).sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(TabularError::RowNotNormalized { state: s, slot, sum });
                }
                for &(target, _) in &row {
                    if target as usize >= num_states {
                        return Err(TabularError::TargetOutOfRange {
                            state: s,
                            slot,
                            target: target as usize,
                        });
                    }
                }
                if fv.len() != feature_dim || ft.len() != feature_dim {
                    return Err(TabularError::FeatureDim {
                        expected: feature_dim,
                        found: fv.len().min(ft.len()),
                    });
                }
                legal.push(action);
                outcomes.extend_from_slice(&row);
                row_offsets.push(outcomes.len() as u32);
                feat_visible.extend_from_slice(&fv);
                feat_truth.extend_from_slice(&ft);
            }
            state_offsets.push(legal.len() as u32);
        }
        Ok(TabularMdp {
            num_states,
            initial_state,
            feature_dim,
            legal,
            state_offsets,
            row_offsets,
            outcomes,
            feat_visible,
            feat_truth,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_rows(&self) -> usize {
        self.legal.len()
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Row ids for a state's legal actions, in action-id order.
    pub fn state_rows(&self, state: usize) -> std::ops::Range<usize> {
        self.state_offsets[state] as usize..self.state_offsets[state + 1] as usize
    }

    pub fn num_actions_in(&self, state: usize) -> usize {
        self.state_rows(state).len()
    }

    /// Global action id of a row.
    pub fn action_of_row(&self, row: usize) -> u32 {
        self.legal[row]
    }

    /// Row id for (state, global action id), if the action is legal there.
    pub fn row_for_action(&self, state: usize, action: u32) -> Option<usize> {
        let range = self.state_rows(state);
        let slice = &self.legal[range.clone()];
        slice.binary_search(&action).ok().map(|i| range.start + i)
    }

    pub fn outcomes_of(&self, row: usize) -> &[Outcome] {
        &self.outcomes[self.row_offsets[row] as usize..self.row_offsets[row + 1] as usize]
    }

    pub fn features_of(&self, row: usize, mode: FeatureMode) -> &[f64] {
        let table = match mode {
            FeatureMode::AttackerVisible => &self.feat_visible,
            FeatureMode::GroundTruth => &self.feat_truth,
        };
        &table[row * self.feature_dim..(row + 1) * self.feature_dim]
    }

    /// Per-row rewards `psi . f` under the given feature mode.
    pub fn reward_table(&self, psi: &[f64], mode: FeatureMode) -> Vec<f64> {
        assert_eq!(psi.len(), self.feature_dim, "reward dimension mismatch");
        (0..self.num_rows())
            .map(|row| {
                self.features_of(row, mode)
                    .iter()
                    .zip(psi.iter())
                    .map(|(f, w)| f * w)
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_rows() {
        let rows = vec![vec![(0u32, vec![(0u32, 0.5)], vec![0.0], vec![0.0])]];
        let err = TabularMdp::from_rows(0, 1, rows).unwrap_err();
        assert!(matches!(err, TabularError::RowNotNormalized { .. }));
    }

    #[test]
    fn lookups_work() {
        let rows = vec![
            vec![
                (0u32, vec![(1u32, 1.0)], vec![1.0, 0.0], vec![1.0, 0.0]),
                (2u32, vec![(0u32, 0.5), (1u32, 0.5)], vec![0.0, 1.0], vec![0.0, 0.5]),
            ],
            vec![(0u32, vec![(1u32, 1.0)], vec![0.0, 0.0], vec![0.0, 0.0])],
        ];
        let mdp = TabularMdp::from_rows(0, 2, rows).unwrap();
        assert_eq!(mdp.num_states(), 2);
        assert_eq!(mdp.num_rows(), 3);
        assert_eq!(mdp.row_for_action(0, 2), Some(1));
        assert_eq!(mdp.row_for_action(0, 1), None);
        assert_eq!(mdp.outcomes_of(1), &[(0, 0.5), (1, 0.5)]);
        let rewards = mdp.reward_table(&[2.0, 4.0], FeatureMode::GroundTruth);
        assert_eq!(rewards, vec![2.0, 2.0, 0.0]);
    }
}
