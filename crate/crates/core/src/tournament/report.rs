use serde::{Deserialize, Serialize};

use crate::mom::PartitionMeta;
use crate::norm::ParameterTier;
use crate::problem::Action;

/// Version of the serialized [`TournamentReport`] layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of one match between pool members.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub x_index: usize,
    pub y_index: usize,
    pub blocks_won: usize,
    pub n: usize,
    /// `blocks_won > n / 2`.
    pub won: bool,
}

impl MatchRecord {
    pub fn new(x_index: usize, y_index: usize, blocks_won: usize, n: usize) -> Self {
        MatchRecord {
            x_index,
            y_index,
            blocks_won,
            n,
            won: 2 * blocks_won > n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partitions {
    pub phase1: PartitionMeta,
    pub phase2: PartitionMeta,
}

/// Parameters the tournament actually ran with and where they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tier: ParameterTier,
    pub r: f64,
    pub theta: f64,
    pub theta_is_default: bool,
    pub sigma2: f64,
    pub c_h: f64,
    pub split_fraction: f64,
    /// `c_H r² / 4`.
    pub home_slack: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fallback {
    /// No champion won all home matches; selection ran over the champions.
    pub winners_empty: bool,
    /// No pool member was a champion; the full-sample SAA was returned.
    pub champions_empty: bool,
}

impl Fallback {
    pub fn any(&self) -> bool {
        self.winners_empty || self.champions_empty
    }
}

/// Full record of a tournament run. Serializes to a stable JSON layout
/// tagged with `schema_version`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentReport {
    pub schema_version: u32,
    pub pool: Vec<Action>,
    /// Origin of each pool member, e.g. `saa_block_0`, `saa_full`, `user_3`.
    pub pool_sources: Vec<String>,
    pub phase1_matches: Vec<MatchRecord>,
    pub champions: Vec<usize>,
    pub phase2_matches: Vec<MatchRecord>,
    pub winners: Vec<usize>,
    pub selected: Action,
    /// Pool index of `selected`; `None` after the SAA fallback.
    pub selected_index: Option<usize>,
    /// Phase-2 median of block objectives of every champion, aligned with `champions`.
    pub champion_scores: Vec<f64>,
    pub partition_meta: Partitions,
    pub provenance: Provenance,
    pub fallback: Fallback,
    pub warnings: Vec<String>,
}

impl TournamentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
