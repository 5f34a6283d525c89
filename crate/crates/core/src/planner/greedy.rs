//! Greedy best-first baseline.
//!
//! Objects are handled bottom-up by goal layer (then id). For each one, the
//! start objects covering its goal footprint and its own start pose are
//! cleared together (smallest removable id first), then the object itself is
//! removed. Every removal goes straight to the goal when possible and to a
//! buffer otherwise; buffered objects are placed as soon as they can be.
//! There is no backtracking: with stability on, the first unstable
//! intermediate arrangement ends the run.

use std::time::Instant;

use super::{Failure, PlanResult, PlanStatus, PlannerConfig, SearchStats};
use crate::objset::ObjSet;
use crate::relations::{build_relations, Relations};
use crate::scene::{Action, Instance, ObjectId, Plan, SceneError};
use crate::stability::StabilityOracle;

enum Stop {
    Unstable(Failure),
    Blocked(Failure),
}

struct Run<'a> {
    rel: &'a Relations,
    oracle: Option<StabilityOracle<'a>>,
    removed: ObjSet,
    order: Vec<ObjectId>,
    actions: Vec<Action>,
}

impl Run<'_> {
    fn remove(&mut self, i: ObjectId) -> Result<(), Stop> {
        let bundle = self.rel.bundle(self.removed, i);
        if let Some(oracle) = self.oracle.as_mut() {
            if let Some((micro, objects)) = oracle.edge(self.removed, i) {
                let offset = if bundle.direct { micro.saturating_sub(1) } else { micro };
                return Err(Stop::Unstable(Failure { action: self.actions.len() + offset, objects }));
            }
        }
        self.actions.extend(bundle.actions());
        self.removed.insert(i);
        self.order.push(i);
        Ok(())
    }

    /// Removes `targets` and everything stacked on them at the start.
    fn clear(&mut self, targets: ObjSet) -> Result<(), Stop> {
        let mut pending = ObjSet::EMPTY;
        let mut frontier: Vec<ObjectId> = targets.difference(self.removed).iter().collect();
        while !frontier.is_empty() {
            let mut next = ObjSet::EMPTY;
            for v in frontier {
                if !pending.contains(v) {
                    pending.insert(v);
                    next = next.union(self.rel.start_above(v).difference(self.removed));
                }
            }
            frontier = next.difference(pending).iter().collect();
        }
        while !pending.is_empty() {
            let Some(v) = pending.iter().find(|&v| self.rel.removable(v, self.removed)) else {
                let stuck = pending.first().unwrap();
                return Err(Stop::Blocked(Failure { action: self.actions.len(), objects: vec![stuck] }));
            };
            self.remove(v)?;
            pending.remove(v);
        }
        Ok(())
    }

    fn handle(&mut self, i: ObjectId) -> Result<(), Stop> {
        if self.rel.placement_closure(self.removed).contains(i) {
            return Ok(());
        }
        let mut targets = self.rel.blockers(i).without(i).intersection(self.rel.movable());
        if !self.removed.contains(i) {
            targets = targets.union(self.rel.start_above(i));
        }
        self.clear(targets)?;
        if !self.removed.contains(i) {
            self.remove(i)?;
        }
        Ok(())
    }
}

/// Runs the greedy baseline. A successful result has status `Solved`.
pub fn solve_greedy(inst: &Instance, cfg: &PlannerConfig) -> Result<PlanResult, SceneError> {
    let t0 = Instant::now();
    let rel = build_relations(inst)?;
    let oracle = cfg.enable_stability.then(|| StabilityOracle::new(inst, &rel, cfg.stability_config()));
    let mut run = Run { rel: &rel, oracle, removed: ObjSet::EMPTY, order: Vec::new(), actions: Vec::new() };

    let todo: Vec<ObjectId> = rel.placement_order().iter().copied().filter(|&i| rel.movable().contains(i)).collect();
    let mut outcome = Ok(());
    for i in todo {
        outcome = run.handle(i);
        if outcome.is_err() {
            break;
        }
    }
    let mut stats = SearchStats {
        expanded: run.order.len() as u64,
        generated: run.order.len() as u64,
        stability_checks: run.oracle.as_ref().map_or(0, StabilityOracle::checks),
        ..SearchStats::default()
    };
    stats.time_ms = t0.elapsed().as_secs_f64() * 1e3;

    let placed = rel.placement_closure(run.removed);
    let result = match outcome {
        Err(stop) => {
            let (status, f) = match stop {
                Stop::Unstable(f) => (PlanStatus::Unstable, f),
                Stop::Blocked(f) => (PlanStatus::Blocked, f),
            };
            PlanResult { status, plan: None, order: Some(run.order), failure: Some(f), stats }
        }
        Ok(()) if placed != rel.all() => {
            let missing = rel.all().difference(placed).iter().collect();
            PlanResult {
                status: PlanStatus::Blocked,
                plan: None,
                order: Some(run.order),
                failure: Some(Failure { action: run.actions.len(), objects: missing }),
                stats,
            }
        }
        Ok(()) => PlanResult {
            status: PlanStatus::Solved,
            plan: Some(Plan::new(run.actions)),
            order: Some(run.order),
            failure: None,
            stats,
        },
    };
    Ok(result)
}
