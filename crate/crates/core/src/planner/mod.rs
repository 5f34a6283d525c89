//! Planners: the exact lattice search and the greedy baseline.

pub mod greedy;
pub mod matching;
pub mod optimal;

use std::time::Duration;

use crate::scene::{ObjectId, Plan, PlanDocument, StatsBlock};
use crate::stability::StabilityConfig;

pub use greedy::solve_greedy;
pub use optimal::{lower_bound, solve, BanRecord, SearchState};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub time_limit: Duration,
    pub enable_stability: bool,
    /// Friction override; `None` keeps the instance value.
    pub mu: Option<f64>,
    /// Use the forced-buffer lower bound; without it the search is uniform-cost.
    pub heuristic: bool,
    /// Seeds a permutation of ids used as the last tie-breaking key.
    pub tie_break_seed: Option<u64>,
    /// Screen every expanded transition instead of only complete candidates.
    pub eager_stability: bool,
    pub stability: StabilityConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(300),
            enable_stability: true,
            mu: None,
            heuristic: true,
            tie_break_seed: None,
            eager_stability: false,
            stability: StabilityConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn without_stability() -> Self {
        Self { enable_stability: false, ..Self::default() }
    }

    pub(crate) fn stability_config(&self) -> StabilityConfig {
        StabilityConfig { mu: self.mu.or(self.stability.mu), ..self.stability }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanStatus {
    /// Proven minimum-cost plan.
    Optimal,
    /// Greedy plan found.
    Solved,
    Infeasible,
    Timeout,
    /// Greedy hit an unstable intermediate arrangement.
    Unstable,
    /// Greedy could not make progress.
    Blocked,
}

impl PlanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanStatus::Optimal => "optimal",
            PlanStatus::Solved => "success",
            PlanStatus::Infeasible => "infeasible",
            PlanStatus::Timeout => "timeout",
            PlanStatus::Unstable => "unstable",
            PlanStatus::Blocked => "blocked",
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, PlanStatus::Optimal | PlanStatus::Solved)
    }
}

impl std::fmt::Display for PlanStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub stability_checks: u64,
    pub bans: u64,
    pub time_ms: f64,
    /// Cost of every candidate plan replayed by the lazy loop, in order.
    pub candidate_costs: Vec<u32>,
}

/// Where a greedy run failed: the action during which the table became
/// unstable, or the object that could not be handled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub action: usize,
    pub objects: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub plan: Option<Plan>,
    pub order: Option<Vec<ObjectId>>,
    pub failure: Option<Failure>,
    pub stats: SearchStats,
}

impl PlanResult {
    pub fn cost(&self) -> Option<usize> {
        self.plan.as_ref().map(Plan::cost)
    }

    pub fn buffers(&self) -> Option<usize> {
        self.plan.as_ref().map(Plan::buffer_count)
    }

    /// Plan file contents with the statistics block attached.
    pub fn to_document(&self) -> PlanDocument {
        PlanDocument {
            plan: self.plan.clone().unwrap_or_default(),
            stats: Some(StatsBlock {
                status: self.status.as_str().to_string(),
                expanded: self.stats.expanded,
                generated: self.stats.generated,
                stability_checks: self.stats.stability_checks,
                bans: self.stats.bans,
                time_ms: self.stats.time_ms,
            }),
        }
    }
}
