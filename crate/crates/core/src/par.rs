//! Data-parallel batch kernels. Every kernel takes an [`Execution`] and gives
//! identical results either way; without the `parallel` feature the
//! parallel variant runs sequentially.

use crate::planner::{solve, solve_greedy, PlanResult, PlannerConfig};
use crate::scene::{Arrangement, Instance, Plan, ReplayError, SceneError};
use crate::stability::{is_stable_with, micro_states, StabilityConfig, StabilityVerdict, UnstableAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Order-preserving map over `items`.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Runs `f` inside a pool of `threads` workers (0 means the global pool).
/// Parallel kernels called from `f` use that pool.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            log::warn!("could not build a {threads}-thread pool ({e}); using the global pool");
            f()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Stability verdict of each arrangement.
pub fn stability_batch(
    inst: &Instance,
    arrangements: &[Arrangement],
    cfg: &StabilityConfig,
    exec: Execution,
) -> Vec<StabilityVerdict> {
    map(exec, arrangements, |a| is_stable_with(inst, a, cfg))
}

/// Checks every micro-state of `plan` and reports the earliest unstable one.
/// Unlike the sequential screen this checks all states, so it pays off on
/// long plans with many workers.
pub fn screen_plan(
    inst: &Instance,
    plan: &Plan,
    cfg: &StabilityConfig,
    exec: Execution,
) -> Result<Option<UnstableAction>, ReplayError> {
    if exec == Execution::Sequential {
        return crate::stability::screen_plan(inst, plan, cfg);
    }
    let states = micro_states(inst, plan)?;
    let verdicts = map(exec, &states, |m| is_stable_with(inst, &m.arrangement, cfg));
    Ok(states.iter().zip(verdicts).find(|(_, v)| !v.stable).map(|(m, v)| UnstableAction {
        action: m.action,
        after_pick: m.after_pick,
        objects: v.unstable_objects,
    }))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanViolation {
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("arrangement unstable {} action {} (objects {:?})", if .0.after_pick { "after the pick of" } else { "after" }, .0.action, .0.objects)]
    Unstable(UnstableAction),
}

impl PlanViolation {
    /// Index of the offending action, if the plan got that far.
    pub fn action(&self) -> Option<usize> {
        match self {
            PlanViolation::Replay(e) => e.action,
            PlanViolation::Unstable(u) => Some(u.action),
        }
    }
}

/// Full validity check of an explicit plan: legal replay reaching the goal
/// and, when `stability` is given, every micro-state stable.
pub fn check_plan(
    inst: &Instance,
    plan: &Plan,
    stability: Option<&StabilityConfig>,
    exec: Execution,
) -> Result<(), PlanViolation> {
    match stability {
        None => {
            crate::scene::simulate_plan(inst, plan)?;
        }
        Some(cfg) => {
            if let Some(u) = screen_plan(inst, plan, cfg, exec)? {
                return Err(PlanViolation::Unstable(u));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Optimal,
    Greedy,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Optimal => "sipp",
            Algorithm::Greedy => "greedy",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sipp" | "optimal" => Ok(Algorithm::Optimal),
            "greedy" => Ok(Algorithm::Greedy),
            other => Err(format!("unknown algorithm '{other}' (expected sipp or greedy)")),
        }
    }
}

pub fn run(alg: Algorithm, inst: &Instance, cfg: &PlannerConfig) -> Result<PlanResult, SceneError> {
    match alg {
        Algorithm::Optimal => solve(inst, cfg),
        Algorithm::Greedy => solve_greedy(inst, cfg),
    }
}

/// Solves independent instances, one planner run per instance.
pub fn solve_batch(
    alg: Algorithm,
    instances: &[Instance],
    cfg: &PlannerConfig,
    exec: Execution,
) -> Vec<Result<PlanResult, SceneError>> {
    map(exec, instances, |inst| run(alg, inst, cfg))
}
