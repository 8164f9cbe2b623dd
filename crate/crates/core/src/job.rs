// SPDX-License-Identifier: Apache-2.0

//! Job lifecycle states and the legal transitions between them.

use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobState {
    Received,
    Queued,
    Preparing,
    Submitted,
    Running,
    Postprocessing,
    Finished,
    Error,
    Cancelled,
}

impl JobState {
    pub const ALL: [JobState; 9] = [
        JobState::Received,
        JobState::Queued,
        JobState::Preparing,
        JobState::Submitted,
        JobState::Running,
        JobState::Postprocessing,
        JobState::Finished,
        JobState::Error,
        JobState::Cancelled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JobState::Received => "RECEIVED",
            JobState::Queued => "QUEUED",
            JobState::Preparing => "PREPARING",
            JobState::Submitted => "SUBMITTED",
            JobState::Running => "RUNNING",
            JobState::Postprocessing => "POSTPROCESSING",
            JobState::Finished => "FINISHED",
            JobState::Error => "ERROR",
            JobState::Cancelled => "CANCELLED",
        }
    }

    pub fn from_name(name: &str) -> Option<JobState> {
        JobState::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Finished | JobState::Error | JobState::Cancelled)
    }

    /// Position along the happy path; terminal failure states have none.
    fn rank(self) -> Option<u8> {
        match self {
            JobState::Received => Some(0),
            JobState::Queued => Some(1),
            JobState::Preparing => Some(2),
            JobState::Submitted => Some(3),
            JobState::Running => Some(4),
            JobState::Postprocessing => Some(5),
            JobState::Finished => Some(6),
            JobState::Error | JobState::Cancelled => None,
        }
    }

    /// Whether the job may be cancelled from this state.
    pub fn is_cancellable(self) -> bool {
        self.rank().is_some_and(|r| r < 4)
    }

    pub fn can_transition_to(self, next: JobState) -> bool {
        match next {
            JobState::Error => !self.is_terminal(),
            JobState::Cancelled => self.is_cancellable(),
            _ => matches!((self.rank(), next.rank()), (Some(a), Some(b)) if b == a + 1),
        }
    }
}

impl fmt::Display for JobState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("illegal job transition {from} -> {to}")]
pub struct IllegalTransition {
    pub from: JobState,
    pub to: JobState,
}

pub fn check_transition(from: JobState, to: JobState) -> Result<(), IllegalTransition> {
    if from.can_transition_to(to) {
        Ok(())
    } else {
        Err(IllegalTransition { from, to })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn happy_path_is_linear() {
        let path = &JobState::ALL[..7];
        for w in path.windows(2) {
            assert!(w[0].can_transition_to(w[1]), "{} -> {}", w[0], w[1]);
        }
        assert!(!JobState::Received.can_transition_to(JobState::Preparing));
        assert!(!JobState::Running.can_transition_to(JobState::Queued));
    }

    #[test]
    fn failure_edges() {
        let error_sources: Vec<_> =
            JobState::ALL.into_iter().filter(|s| s.can_transition_to(JobState::Error)).collect();
        assert_eq!(error_sources, &JobState::ALL[..6]);
        let cancel_sources: Vec<_> =
            JobState::ALL.into_iter().filter(|s| s.can_transition_to(JobState::Cancelled)).collect();
        assert_eq!(cancel_sources, &JobState::ALL[..4]);
        for t in [JobState::Finished, JobState::Error, JobState::Cancelled] {
            assert!(JobState::ALL.iter().all(|&n| !t.can_transition_to(n)));
        }
    }

    #[test]
    fn names_round_trip() {
        for s in JobState::ALL {
            assert_eq!(JobState::from_name(s.name()), Some(s));
            assert_eq!(serde_json::to_string(&s).unwrap(), alloc::format!("\"{}\"", s.name()));
        }
        assert_eq!(JobState::from_name("finished"), Some(JobState::Finished));
    }
}
