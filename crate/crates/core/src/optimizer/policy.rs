//! Dual-cutoff bookkeeping for the adaptive strategy.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// `r_min` has not yet caught up with `r_max`.
    Ignition,
    /// After liftoff, `r_min` follows the intersection rank.
    Ascent,
    /// After liftoff, `r_min` is pinned by the precision rank.
    StageSeparation,
    /// Single-cutoff strategies.
    Fixed,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Ignition => "ignition",
            Phase::Ascent => "ascent",
            Phase::StageSeparation => "stage-separation",
            Phase::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Phase::Ignition, Phase::Ascent, Phase::StageSeparation, Phase::Fixed]
            .into_iter()
            .find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffState {
    pub r_min: usize,
    pub r_max: usize,
    pub liftoff: bool,
    pub epsilon: f64,
    pub phase: Phase,
}

impl CutoffState {
    pub fn initial(r_max: usize, epsilon: f64) -> Self {
        Self {
            r_min: 0,
            r_max,
            liftoff: false,
            epsilon,
            phase: Phase::Ignition,
        }
    }
}

/// One policy update from the intersection rank `r1` and precision rank
/// `r2`. `prev_r_min` is the previous iteration's `r_min` (`None` on the
/// first iteration, which never counts as stagnant).
pub fn cutoff_policy_update(
    state: &CutoffState,
    r1: usize,
    r2: usize,
    prev_r_min: Option<usize>,
) -> CutoffState {
    let r_min = r1.min(r2);
    let mut r_max = r1.max(state.r_max);
    let mut liftoff = state.liftoff;
    if !liftoff {
        if r_min >= r_max {
            liftoff = true;
        } else if prev_r_min == Some(r_min) {
            r_max += 1;
        }
    }
    let phase = if !liftoff {
        Phase::Ignition
    } else if r2 <= r1 {
        Phase::StageSeparation
    } else {
        Phase::Ascent
    };
    CutoffState {
        r_min,
        r_max,
        liftoff,
        epsilon: state.epsilon,
        phase,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(r_max: usize, liftoff: bool) -> CutoffState {
        CutoffState {
            r_min: 0,
            r_max,
            liftoff,
            epsilon: 1e-10,
            phase: if liftoff { Phase::Ascent } else { Phase::Ignition },
        }
    }

    #[test]
    fn stagnant_r_min_bumps_r_max() {
        let s = cutoff_policy_update(&state(10, false), 4, 7, Some(4));
        assert_eq!((s.r_min, s.r_max, s.liftoff), (4, 11, false));
        assert_eq!(s.phase, Phase::Ignition);
    }

    #[test]
    fn moving_r_min_leaves_r_max() {
        let s = cutoff_policy_update(&state(10, false), 5, 7, Some(4));
        assert_eq!((s.r_min, s.r_max), (5, 10));
        let first = cutoff_policy_update(&state(10, false), 4, 7, None);
        assert_eq!(first.r_max, 10);
    }

    #[test]
    fn reaching_r_max_lifts_off() {
        let s = cutoff_policy_update(&state(6, false), 8, 9, Some(5));
        assert!(s.liftoff);
        assert_eq!((s.r_min, s.r_max), (8, 8));
        assert_eq!(s.phase, Phase::Ascent);
    }

    #[test]
    fn lifted_r_max_never_drops() {
        let s = cutoff_policy_update(&state(12, true), 3, 9, Some(3));
        assert_eq!(s.r_max, 12);
        assert!(s.liftoff);
        // no stagnation bump once lifted
        assert_eq!(s.r_min, 3);
    }

    #[test]
    fn precision_pin_is_stage_separation() {
        let s = cutoff_policy_update(&state(12, true), 9, 4, Some(5));
        assert_eq!(s.phase, Phase::StageSeparation);
        assert_eq!(s.r_min, 4);
    }

    #[test]
    fn phase_names_round_trip() {
        for p in [Phase::Ignition, Phase::Ascent, Phase::StageSeparation, Phase::Fixed] {
            assert_eq!(Phase::parse(p.as_str()), Some(p));
        }
    }
}
