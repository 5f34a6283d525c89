//! Exact planner: best-first search over removed sets with lazy stability bans.
//!
//! A state is the set of objects already taken from their start poses. The
//! cost of removing `i` depends only on that set (everything placeable is
//! placed eagerly), so the lattice search is exact. Complete candidates are
//! replayed for stability; the first failing transition is banned and the
//! search restarts.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use super::matching::max_matching;
use super::{PlanResult, PlanStatus, PlannerConfig, SearchStats};
use crate::generators::rng::SplitMix;
use crate::objset::ObjSet;
use crate::relations::{build_relations, Relations};
use crate::scene::{Instance, ObjectId, SceneError};
use crate::stability::StabilityOracle;

/// A forbidden transition: removing `next` right after exactly `prefix`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BanRecord {
    pub prefix: ObjSet,
    pub next: ObjectId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchState {
    pub removed: ObjSet,
    pub placed: ObjSet,
    pub g: u32,
    pub parent: Option<usize>,
    pub last: Option<ObjectId>,
}

/// Admissible and consistent estimate of the cost still to pay from
/// `removed`: each remaining object's base cost plus one per pair in a
/// maximum matching of mutually conflicting remaining objects.
pub fn lower_bound(rel: &Relations, removed: ObjSet) -> u32 {
    let remaining = rel.movable().difference(removed);
    let base: u32 = remaining.iter().map(|i| rel.base_cost(i)).sum();
    let free = remaining.difference(rel.self_blocked());
    base + max_matching(free, |i| rel.conflicts(i)) as u32
}

/// Legal, unbanned removals from `removed` with their move costs.
pub fn successors(rel: &Relations, removed: ObjSet, bans: &HashSet<BanRecord>) -> Vec<(ObjectId, u32)> {
    rel.movable()
        .difference(removed)
        .iter()
        .filter(|&i| rel.removable(i, removed) && !bans.contains(&BanRecord { prefix: removed, next: i }))
        .map(|i| (i, rel.move_cost(i, removed)))
        .collect()
}

#[derive(Debug, PartialEq, Eq)]
struct Entry {
    f: u32,
    depth: u32,
    rank: u32,
    seq: u64,
    node: usize,
}

impl Ord for Entry {
    // Max-heap order: lowest f, then deepest, then lowest rank, then oldest.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.cmp(&self.f)
            .then(self.depth.cmp(&o.depth))
            .then(o.rank.cmp(&self.rank))
            .then(o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

enum Outcome {
    Found(Vec<ObjectId>, u32),
    Exhausted,
    Timeout,
}

struct Search<'a, 'o> {
    rel: &'a Relations,
    cfg: &'a PlannerConfig,
    rank: Vec<u32>,
    deadline: Instant,
    oracle: &'o mut StabilityOracle<'a>,
    stats: &'o mut SearchStats,
}

impl Search<'_, '_> {
    fn h(&self, removed: ObjSet) -> u32 {
        if self.cfg.heuristic {
            lower_bound(self.rel, removed)
        } else {
            0
        }
    }

    fn run(&mut self, bans: &HashSet<BanRecord>) -> Outcome {
        let goal = self.rel.movable();
        let mut nodes = vec![SearchState {
            removed: ObjSet::EMPTY,
            placed: self.rel.placement_closure(ObjSet::EMPTY),
            g: 0,
            parent: None,
            last: None,
        }];
        let mut best: HashMap<ObjSet, u32> = HashMap::from([(ObjSet::EMPTY, 0)]);
        let mut closed: HashSet<ObjSet> = HashSet::new();
        let mut heap = BinaryHeap::new();
        let mut seq = 0;
        heap.push(Entry { f: self.h(ObjSet::EMPTY), depth: 0, rank: 0, seq, node: 0 });

        while let Some(e) = heap.pop() {
            let st = nodes[e.node];
            if closed.contains(&st.removed) || best.get(&st.removed).is_some_and(|&g| g < st.g) {
                continue;
            }
            closed.insert(st.removed);
            if st.removed == goal {
                let mut order = Vec::with_capacity(goal.len());
                let mut k = e.node;
                while let (Some(p), Some(last)) = (nodes[k].parent, nodes[k].last) {
                    order.push(last);
                    k = p;
                }
                order.reverse();
                return Outcome::Found(order, st.g);
            }
            self.stats.expanded += 1;
            if self.stats.expanded % 256 == 0 && Instant::now() >= self.deadline {
                return Outcome::Timeout;
            }
            for (i, cost) in successors(self.rel, st.removed, bans) {
                let next = st.removed.with(i);
                if closed.contains(&next) {
                    continue;
                }
                let g = st.g + cost;
                if best.get(&next).is_some_and(|&b| b <= g) {
                    continue;
                }
                if self.cfg.enable_stability && self.cfg.eager_stability && !self.oracle.edge_stable(st.removed, i) {
                    continue;
                }
                best.insert(next, g);
                self.stats.generated += 1;
                nodes.push(SearchState {
                    removed: next,
                    placed: self.rel.placement_closure(next),
                    g,
                    parent: Some(e.node),
                    last: Some(i),
                });
                seq += 1;
                heap.push(Entry {
                    f: g + self.h(next),
                    depth: next.len() as u32,
                    rank: self.rank[i as usize],
                    seq,
                    node: nodes.len() - 1,
                });
            }
        }
        Outcome::Exhausted
    }
}

fn tie_ranks(n: usize, seed: Option<u64>) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..=n as u32).collect();
    if let Some(seed) = seed {
        SplitMix::new(seed).shuffle(&mut ids[1..]);
    }
    let mut rank = vec![0; n + 1];
    for (pos, &id) in ids.iter().enumerate() {
        rank[id as usize] = pos as u32;
    }
    rank
}

/// Minimum-cost plan whose every intermediate arrangement is stable (when
/// stability is enabled), or a proof that none exists.
pub fn solve(inst: &Instance, cfg: &PlannerConfig) -> Result<PlanResult, SceneError> {
    let t0 = Instant::now();
    let rel = build_relations(inst)?;
    let mut stats = SearchStats::default();
    let mut oracle = StabilityOracle::new(inst, &rel, cfg.stability_config());
    let mut bans: HashSet<BanRecord> = HashSet::new();
    let deadline = t0 + cfg.time_limit;
    let rank = tie_ranks(rel.n(), cfg.tie_break_seed);

    let finish = |status, order: Option<Vec<ObjectId>>, mut stats: SearchStats, checks| {
        stats.stability_checks = checks;
        stats.time_ms = t0.elapsed().as_secs_f64() * 1e3;
        let plan = order.as_ref().map(|o| rel.plan_from_removal_order(o).expect("search emits legal orders"));
        PlanResult { status, plan, order, failure: None, stats }
    };

    loop {
        let outcome = Search { rel: &rel, cfg, rank: rank.clone(), deadline, oracle: &mut oracle, stats: &mut stats }
            .run(&bans);
        match outcome {
            Outcome::Exhausted => return Ok(finish(PlanStatus::Infeasible, None, stats, oracle.checks())),
            Outcome::Timeout => return Ok(finish(PlanStatus::Timeout, None, stats, oracle.checks())),
            Outcome::Found(order, cost) => {
                stats.candidate_costs.push(cost);
                if !cfg.enable_stability {
                    return Ok(finish(PlanStatus::Optimal, Some(order), stats, oracle.checks()));
                }
                match oracle.first_unstable_step(&order).expect("search emits legal orders") {
                    None => return Ok(finish(PlanStatus::Optimal, Some(order), stats, oracle.checks())),
                    Some(step) => {
                        let m = step.bundle - 1;
                        let ban = BanRecord { prefix: order[..m].iter().copied().collect(), next: order[m] };
                        log::debug!("candidate of cost {cost} unstable at bundle {}; banning {ban:?}", step.bundle);
                        bans.insert(ban);
                        stats.bans += 1;
                    }
                }
                if Instant::now() >= deadline {
                    return Ok(finish(PlanStatus::Timeout, None, stats, oracle.checks()));
                }
            }
        }
    }
}
