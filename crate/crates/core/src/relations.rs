//! Contact extraction and the dependency structure between start and goal.
//!
//! Every predicate here treats the settled objects (see [`Relations::settled`])
//! as already removed and already placed: they never leave the table.

use crate::geometry::{self, Polygon, TouchingSegment};
use crate::objset::{ObjSet, MAX_OBJECTS};
use crate::scene::{Action, Arrangement, Instance, ObjectId, SceneError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lower {
    Table,
    Object(ObjectId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContactKind {
    /// Horizontal patch between an object and whatever lies directly below it.
    Support { region: Polygon },
    /// Flush vertical faces of two same-layer objects; the segment normal
    /// points from `lower` into `upper`.
    Side { segment: TouchingSegment },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactRecord {
    pub upper: ObjectId,
    pub lower: Lower,
    pub kind: ContactKind,
}

/// All support patches (including the table) and side contacts of `arr`,
/// ordered by upper id then lower id.
pub fn extract_contacts(inst: &Instance, arr: &Arrangement) -> Vec<ContactRecord> {
    let fps: Vec<(ObjectId, u32, Polygon)> =
        arr.iter().map(|(id, p)| (id, p.layer, inst.footprint(id, p))).collect();
    let tol = &inst.tol;
    let mut out = Vec::new();
    for (a, (ia, la, fa)) in fps.iter().enumerate() {
        if *la == 0 {
            out.push(ContactRecord { upper: *ia, lower: Lower::Table, kind: ContactKind::Support { region: fa.clone() } });
        }
        for (b, (ib, lb, fb)) in fps.iter().enumerate() {
            if a == b {
                continue;
            }
            if *lb + 1 == *la {
                if let Some(region) = geometry::intersection_with_tolerance(fa, fb, tol.area) {
                    out.push(ContactRecord { upper: *ia, lower: Lower::Object(*ib), kind: ContactKind::Support { region } });
                }
            } else if lb == la && ia < ib {
                if let Some(segment) = geometry::touching_segment(fa, fb, tol.gap, tol.gap) {
                    out.push(ContactRecord { upper: *ia, lower: Lower::Object(*ib), kind: ContactKind::Side { segment } });
                }
            }
        }
    }
    out
}

/// One removal together with the buffer flush it unlocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub object: ObjectId,
    pub direct: bool,
    /// Buffered objects placed right after the removal, in placement order.
    pub flush: Vec<ObjectId>,
}

impl Bundle {
    pub fn actions(&self) -> Vec<Action> {
        let first = if self.direct { Action::direct(self.object) } else { Action::to_buffer(self.object) };
        std::iter::once(first).chain(self.flush.iter().map(|&k| Action::from_buffer(k))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Relations {
    n: usize,
    start_layer: Vec<u32>,
    goal_layer: Vec<u32>,
    stationary: ObjSet,
    settled: ObjSet,
    rests_on: Vec<ObjSet>,
    start_over: Vec<ObjSet>,
    goal_below: Vec<ObjSet>,
    direct_blockers: Vec<ObjSet>,
    blockers: Vec<ObjSet>,
    self_blocked: ObjSet,
    conflicts: Vec<ObjSet>,
    placement_order: Vec<ObjectId>,
}

fn overlaps(a: &Polygon, b: &Polygon, tol: f64) -> bool {
    geometry::intersection_with_tolerance(a, b, tol).is_some()
}

/// Precomputes every pair relation the planners consult.
pub fn build_relations(inst: &Instance) -> Result<Relations, SceneError> {
    let n = inst.n();
    if n > MAX_OBJECTS {
        return Err(SceneError::Invariant(format!("at most {MAX_OBJECTS} objects are supported, got {n}")));
    }
    let tol = inst.tol.area;
    let pose = |arr: &Arrangement, id: ObjectId| *arr.get(id).expect("complete arrangement");
    let mut start_fp = vec![None; n + 1];
    let mut goal_fp = vec![None; n + 1];
    let mut start_layer = vec![0; n + 1];
    let mut goal_layer = vec![0; n + 1];
    for id in inst.ids() {
        let (s, g) = (pose(&inst.start, id), pose(&inst.goal, id));
        start_fp[id as usize] = Some(inst.footprint(id, &s));
        goal_fp[id as usize] = Some(inst.footprint(id, &g));
        start_layer[id as usize] = s.layer;
        goal_layer[id as usize] = g.layer;
    }
    let sf = |id: u32| start_fp[id as usize].as_ref().unwrap();
    let gf = |id: u32| goal_fp[id as usize].as_ref().unwrap();

    let ids: Vec<ObjectId> = inst.ids().collect();
    let mut rests_on = vec![ObjSet::EMPTY; n + 1];
    let mut start_over = vec![ObjSet::EMPTY; n + 1];
    let mut goal_over_direct = vec![ObjSet::EMPTY; n + 1];
    let mut start_under_goal = vec![ObjSet::EMPTY; n + 1];
    for &i in &ids {
        for &j in &ids {
            if i != j {
                let (li, lj) = (start_layer[i as usize], start_layer[j as usize]);
                if lj > li && overlaps(sf(i), sf(j), tol) {
                    start_over[i as usize].insert(j);
                    if lj == li + 1 {
                        rests_on[j as usize].insert(i);
                    }
                }
                if goal_layer[j as usize] < goal_layer[i as usize] && overlaps(gf(i), gf(j), tol) {
                    goal_over_direct[i as usize].insert(j);
                }
            }
            if overlaps(sf(j), gf(i), tol) {
                start_under_goal[i as usize].insert(j);
            }
        }
    }

    let mut placement_order = ids.clone();
    placement_order.sort_by_key(|&i| (goal_layer[i as usize], i));
    let mut goal_below = vec![ObjSet::EMPTY; n + 1];
    for &i in &placement_order {
        let mut acc = goal_over_direct[i as usize];
        for k in goal_over_direct[i as usize] {
            acc = acc.union(goal_below[k as usize]);
        }
        goal_below[i as usize] = acc;
    }

    let stationary: ObjSet = ids.iter().copied().filter(|&i| inst.is_stationary(i)).collect();
    // Ascending goal layer equals ascending start layer for stationary objects.
    let mut settled = ObjSet::EMPTY;
    for &i in &placement_order {
        let below_start: ObjSet = ids
            .iter()
            .copied()
            .filter(|&j| start_over[j as usize].contains(i))
            .collect();
        if stationary.contains(i)
            && below_start.is_subset(settled)
            && goal_below[i as usize].is_subset(settled)
        {
            settled.insert(i);
        }
    }

    let mut direct_blockers = vec![ObjSet::EMPTY; n + 1];
    let mut blockers = vec![ObjSet::EMPTY; n + 1];
    let mut self_blocked = stationary.difference(settled);
    for &i in &ids {
        direct_blockers[i as usize] = start_under_goal[i as usize].without(i);
        let mut b = direct_blockers[i as usize];
        for k in goal_below[i as usize].difference(settled) {
            b = b.union(start_under_goal[k as usize]);
        }
        blockers[i as usize] = b;
        if b.contains(i) {
            self_blocked.insert(i);
        }
    }

    // Removing i while j is still on the table forces i into a buffer.
    let forces = |i: ObjectId, j: ObjectId| blockers[i as usize].contains(j) || goal_below[i as usize].contains(j);
    let mut conflicts = vec![ObjSet::EMPTY; n + 1];
    let free: Vec<ObjectId> = ids
        .iter()
        .copied()
        .filter(|&i| !settled.contains(i) && !self_blocked.contains(i))
        .collect();
    for (a, &i) in free.iter().enumerate() {
        for &j in &free[a + 1..] {
            if forces(i, j) && forces(j, i) {
                conflicts[i as usize].insert(j);
                conflicts[j as usize].insert(i);
            }
        }
    }

    Ok(Relations {
        n,
        start_layer,
        goal_layer,
        stationary,
        settled,
        rests_on,
        start_over,
        goal_below,
        direct_blockers,
        blockers,
        self_blocked,
        conflicts,
        placement_order,
    })
}

impl Relations {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn all(&self) -> ObjSet {
        ObjSet::full(self.n)
    }

    pub fn start_layer(&self, i: ObjectId) -> u32 {
        self.start_layer[i as usize]
    }

    pub fn goal_layer(&self, i: ObjectId) -> u32 {
        self.goal_layer[i as usize]
    }

    /// Objects whose start pose equals their goal pose.
    pub fn stationary(&self) -> ObjSet {
        self.stationary
    }

    /// Stationary objects resting only on other settled objects (or the
    /// table) in both arrangements. They are never moved.
    pub fn settled(&self) -> ObjSet {
        self.settled
    }

    /// Objects that must be removed before anything else can change.
    pub fn movable(&self) -> ObjSet {
        self.all().difference(self.settled)
    }

    /// Objects that can never go straight from start to goal.
    pub fn self_blocked(&self) -> ObjSet {
        self.self_blocked
    }

    /// Objects directly supporting `i` in the start arrangement.
    pub fn start_supports(&self, i: ObjectId) -> ObjSet {
        self.rests_on[i as usize]
    }

    /// Objects at higher start layers whose footprint overlaps `i`'s; all of
    /// them must be gone before `i` can be picked.
    pub fn start_above(&self, i: ObjectId) -> ObjSet {
        self.start_over[i as usize]
    }

    /// Objects transitively below `i` in the goal arrangement.
    pub fn goal_below(&self, i: ObjectId) -> ObjSet {
        self.goal_below[i as usize]
    }

    /// Other objects whose start footprint overlaps `i`'s goal footprint.
    pub fn direct_blockers(&self, i: ObjectId) -> ObjSet {
        self.direct_blockers[i as usize]
    }

    /// Start footprints colliding with the goal of `i` or of anything below
    /// `i` in the goal; may contain `i` itself.
    pub fn blockers(&self, i: ObjectId) -> ObjSet {
        self.blockers[i as usize]
    }

    /// Objects forming a mutual conflict with `i`: whichever of the pair is
    /// removed first must be buffered.
    pub fn conflicts(&self, i: ObjectId) -> ObjSet {
        self.conflicts[i as usize]
    }

    /// All ids ordered by goal layer, then id.
    pub fn placement_order(&self) -> &[ObjectId] {
        &self.placement_order
    }

    /// Pairs `(i, j)` where `i` rests directly on `j` at the start.
    pub fn start_above_pairs(&self) -> Vec<(ObjectId, ObjectId)> {
        (1..=self.n as u32).flat_map(|i| self.rests_on[i as usize].iter().map(move |j| (i, j))).collect()
    }

    /// Pairs `(i, j)` where `i` lies transitively above `j` in the goal.
    pub fn goal_above_closure_pairs(&self) -> Vec<(ObjectId, ObjectId)> {
        (1..=self.n as u32).flat_map(|i| self.goal_below[i as usize].iter().map(move |j| (i, j))).collect()
    }

    /// `i` is top-clear once everything above it at the start is removed.
    pub fn removable(&self, i: ObjectId, removed: ObjSet) -> bool {
        self.start_over[i as usize].is_subset(removed.union(self.settled))
    }

    /// The largest set of removed objects that can sit at their goals given
    /// `removed`: goal supports placed, goal footprint free of start objects.
    pub fn placement_closure(&self, removed: ObjSet) -> ObjSet {
        let r = removed.union(self.settled);
        let mut placed = self.settled;
        for &i in &self.placement_order {
            if r.contains(i)
                && self.direct_blockers[i as usize].is_subset(r)
                && self.goal_below[i as usize].is_subset(placed)
            {
                placed.insert(i);
            }
        }
        placed
    }

    /// Whether `i`, just removed (so `i ∈ removed_after`), can go straight to
    /// its goal.
    pub fn is_direct(&self, i: ObjectId, removed_after: ObjSet) -> bool {
        !self.self_blocked.contains(i) && self.placement_closure(removed_after).contains(i)
    }

    /// Pick-n-places spent on `i` when it is removed after `removed`.
    pub fn move_cost(&self, i: ObjectId, removed: ObjSet) -> u32 {
        if self.settled.contains(i) {
            0
        } else if self.is_direct(i, removed.with(i)) {
            1
        } else {
            2
        }
    }

    /// Base cost of an object ignoring interactions: 0, 1 or 2.
    pub fn base_cost(&self, i: ObjectId) -> u32 {
        if self.settled.contains(i) {
            0
        } else if self.self_blocked.contains(i) {
            2
        } else {
            1
        }
    }

    /// The removal of `i` after `removed` and the eager flush that follows.
    pub fn bundle(&self, removed: ObjSet, i: ObjectId) -> Bundle {
        let before = self.placement_closure(removed);
        let after_set = removed.with(i);
        let after = self.placement_closure(after_set);
        let direct = !self.self_blocked.contains(i) && after.contains(i);
        let mut fresh = after.difference(before);
        if direct {
            fresh.remove(i);
        }
        let flush = self.placement_order.iter().copied().filter(|&k| fresh.contains(k)).collect();
        Bundle { object: i, direct, flush }
    }

    /// On-table arrangement: every object not removed at its start pose plus
    /// the placed objects at their goal poses.
    pub fn table(&self, inst: &Instance, removed: ObjSet, placed: ObjSet) -> Arrangement {
        let r = removed.union(self.settled);
        let mut arr = Arrangement::new();
        for i in self.all().difference(r) {
            arr.insert(i, *inst.start.get(i).expect("start pose"));
        }
        for i in placed.union(self.settled) {
            arr.insert(i, *inst.goal.get(i).expect("goal pose"));
        }
        arr
    }

    /// Checks that `order` removes every movable object once, each when top-clear.
    pub fn check_order(&self, order: &[ObjectId]) -> Result<(), OrderError> {
        let mut removed = ObjSet::EMPTY;
        for (k, &i) in order.iter().enumerate() {
            if i == 0 || i as usize > self.n || self.settled.contains(i) || removed.contains(i) {
                return Err(OrderError { position: k, object: i });
            }
            if !self.removable(i, removed) {
                return Err(OrderError { position: k, object: i });
            }
            removed.insert(i);
        }
        Ok(())
    }

    /// Expands a removal order into actions (eager buffer flushes included).
    pub fn plan_from_removal_order(&self, order: &[ObjectId]) -> Result<crate::scene::Plan, OrderError> {
        self.check_order(order)?;
        let mut removed = ObjSet::EMPTY;
        let mut actions = Vec::new();
        for &i in order {
            actions.extend(self.bundle(removed, i).actions());
            removed.insert(i);
        }
        if !self.movable().is_subset(removed) {
            return Err(OrderError { position: order.len(), object: self.movable().difference(removed).first().unwrap() });
        }
        Ok(crate::scene::Plan::new(actions))
    }

    /// Total cost of a removal order without expanding it.
    pub fn order_cost(&self, order: &[ObjectId]) -> u32 {
        let mut removed = ObjSet::EMPTY;
        let mut cost = 0;
        for &i in order {
            cost += self.move_cost(i, removed);
            removed.insert(i);
        }
        cost
    }
}

/// A removal order that is not legal: `object` at `position` is out of range,
/// settled, repeated, not yet top-clear, or (at `position == len`) missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("illegal removal order: object {object} at position {position}")]
pub struct OrderError {
    pub position: usize,
    pub object: ObjectId,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::tests::{arr, cubes};
    use crate::scene::simulate_plan;
    use proptest::prelude::*;

    fn inst(start: &[(u32, f64, f64, u32)], goal: &[(u32, f64, f64, u32)]) -> Instance {
        Instance::new(1.0, cubes(start.len() as u32), arr(start), arr(goal)).unwrap()
    }

    fn set(ids: &[u32]) -> ObjSet {
        ids.iter().copied().collect()
    }

    #[test]
    fn single_cube_contacts() {
        let i = inst(&[(1, 0., 0., 0)], &[(1, 0., 0., 0)]);
        let c = extract_contacts(&i, &i.start);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].lower, Lower::Table);
        match &c[0].kind {
            ContactKind::Support { region } => assert!((region.area() - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pyramid_row_contacts() {
        let p = [(1, 0., 0., 0), (2, 1., 0., 0), (3, 2., 0., 0), (4, 0.5, 0., 1), (5, 1.5, 0., 1), (6, 1., 0., 2)];
        let i = inst(&p, &p);
        let contacts = extract_contacts(&i, &i.start);
        for upper in [4, 5, 6] {
            let patches: Vec<f64> = contacts
                .iter()
                .filter(|c| c.upper == upper)
                .filter_map(|c| match &c.kind {
                    ContactKind::Support { region } => Some(region.area()),
                    _ => None,
                })
                .collect();
            assert_eq!(patches.len(), 2);
            assert!(patches.iter().all(|a| (a - 0.5).abs() < 1e-12));
        }
        let sides = contacts.iter().filter(|c| matches!(c.kind, ContactKind::Side { .. })).count();
        // 1|2, 2|3 on the bottom row and 4|5 on the middle one.
        assert_eq!(sides, 3);
    }

    #[test]
    fn flush_side_contact() {
        let p = [(1, 0., 0., 0), (2, 1., 0., 0), (3, 0., 0., 1), (4, 1., 0., 1)];
        let i = inst(&p, &p);
        let side: Vec<_> = extract_contacts(&i, &i.start)
            .into_iter()
            .filter(|c| c.upper == 3 && c.lower == Lower::Object(4))
            .collect();
        assert_eq!(side.len(), 1);
        match &side[0].kind {
            ContactKind::Side { segment } => assert!((segment.length() - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn swap_is_mutual() {
        let i = inst(&[(1, 0., 0., 0), (2, 1., 0., 0)], &[(1, 1., 0., 0), (2, 0., 0., 0)]);
        let rel = build_relations(&i).unwrap();
        assert!(rel.blockers(1).contains(2) && rel.blockers(2).contains(1));
        assert_eq!(rel.conflicts(1), set(&[2]));
        assert_eq!(rel.move_cost(1, ObjSet::EMPTY), 2);
        assert_eq!(rel.move_cost(2, set(&[1])), 1);
        assert_eq!(rel.order_cost(&[1, 2]), 3);
    }

    #[test]
    fn goal_stack_closure() {
        let i = inst(
            &[(1, 0., 0., 0), (2, 2., 0., 0), (3, 4., 0., 0)],
            &[(1, 8., 0., 0), (2, 8., 0., 1), (3, 8., 0., 2)],
        );
        let rel = build_relations(&i).unwrap();
        let pairs = rel.goal_above_closure_pairs();
        for p in [(3, 2), (3, 1), (2, 1)] {
            assert!(pairs.contains(&p), "{p:?}");
        }
        assert_eq!(rel.placement_closure(set(&[3])), ObjSet::EMPTY);
        assert_eq!(rel.placement_closure(set(&[1, 2, 3])), set(&[1, 2, 3]));
        assert!(!rel.is_direct(3, set(&[3])));
        assert!(rel.is_direct(1, set(&[1])));
    }

    #[test]
    fn disjoint_goal_has_no_start_blockers() {
        let i = inst(
            &[(1, 0., 0., 0), (2, 1., 0., 0), (3, 0.5, 0., 1)],
            &[(1, 10., 0., 0), (2, 11., 0., 0), (3, 10.5, 0., 1)],
        );
        let rel = build_relations(&i).unwrap();
        for id in 1..=3 {
            assert!(rel.blockers(id).is_empty());
        }
        assert_eq!(rel.goal_below(3), set(&[1, 2]));
    }

    #[test]
    fn removable_follows_tops() {
        let p = [(1, 0., 0., 0), (2, 0., 0., 1)];
        let i = inst(&p, &[(1, 3., 0., 0), (2, 5., 0., 0)]);
        let rel = build_relations(&i).unwrap();
        assert!(!rel.removable(1, ObjSet::EMPTY));
        assert!(rel.removable(1, set(&[2])));
        assert!(rel.removable(2, ObjSet::EMPTY));
        assert_eq!(rel.start_above_pairs(), vec![(2, 1)]);
        assert!(rel.check_order(&[1, 2]).is_err());
        assert!(rel.check_order(&[2, 1]).is_ok());
    }

    #[test]
    fn goal_blocked_by_start() {
        let i = inst(&[(1, 0., 0., 0), (2, 3., 0., 0)], &[(1, 3., 0., 0), (2, 6., 0., 0)]);
        let rel = build_relations(&i).unwrap();
        assert_eq!(rel.placement_closure(set(&[1])), ObjSet::EMPTY);
        assert!(!rel.is_direct(1, set(&[1])));
        assert!(rel.is_direct(2, set(&[1, 2])));
        assert!(rel.is_direct(1, set(&[1, 2])));
    }

    #[test]
    fn stationary_objects_settle_bottom_up() {
        // 1 stays put; 2 stays but sits on 3 which moves; 4 stays on settled 1.
        let i = inst(
            &[(1, 0., 0., 0), (2, 3., 0., 1), (3, 3., 0., 0), (4, 0., 0., 1), (5, 6., 0., 0)],
            &[(1, 0., 0., 0), (2, 3., 0., 1), (3, 8., 0., 0), (4, 0., 0., 1), (5, 3., 0., 0)],
        );
        let rel = build_relations(&i).unwrap();
        assert_eq!(rel.settled(), set(&[1, 4]));
        assert!(rel.self_blocked().contains(2));
        assert_eq!(rel.base_cost(2), 2);
        assert_eq!(rel.move_cost(1, ObjSet::EMPTY), 0);
        let plan = rel.plan_from_removal_order(&[2, 3, 5]).unwrap();
        assert_eq!(plan.cost(), 2 + 1 + 1);
        simulate_plan(&i, &plan).unwrap();
    }

    #[test]
    fn sliding_on_a_settled_base_is_direct() {
        let i = inst(&[(1, 0., 0., 0), (2, 0., 0., 1)], &[(1, 0., 0., 0), (2, 0.3, 0., 1)]);
        let rel = build_relations(&i).unwrap();
        assert_eq!(rel.settled(), set(&[1]));
        assert!(rel.self_blocked().is_empty());
        assert_eq!(rel.move_cost(2, ObjSet::EMPTY), 1);
    }

    #[test]
    fn identity_instance_is_free() {
        let p = [(1, 0., 0., 0), (2, 1., 0., 0), (3, 0.5, 0., 1)];
        let i = inst(&p, &p);
        let rel = build_relations(&i).unwrap();
        assert_eq!(rel.movable(), ObjSet::EMPTY);
        assert_eq!(rel.plan_from_removal_order(&[]).unwrap().cost(), 0);
    }

    #[test]
    fn bundle_places_goal_supports_first() {
        // Goal: 2 on top of 1 where 3 starts. Removing 3 unlocks both.
        let i = inst(
            &[(1, 0., 0., 0), (2, 1.5, 0., 0), (3, 5., 0., 0)],
            &[(1, 5., 0., 0), (2, 5., 0., 1), (3, 8., 0., 0)],
        );
        let rel = build_relations(&i).unwrap();
        let b = rel.bundle(set(&[1, 2]), 3);
        assert!(b.direct);
        assert_eq!(b.flush, vec![1, 2]);
        let plan = rel.plan_from_removal_order(&[1, 2, 3]).unwrap();
        assert_eq!(plan.cost(), 5);
        simulate_plan(&i, &plan).unwrap();
    }

    fn random_instance() -> impl Strategy<Value = Instance> {
        // Layer-0 rows of unit cubes with random labels, optionally a second layer.
        (2usize..6, any::<u64>(), prop::bool::ANY).prop_map(|(w, seed, two)| {
            let mut slots: Vec<(f64, u32)> = (0..w).map(|k| (k as f64, 0)).collect();
            if two {
                slots.extend((0..w - 1).map(|k| (k as f64 + 0.5, 1)));
            }
            let n = slots.len();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = seed;
            for k in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(k, (s >> 33) as usize % (k + 1));
            }
            let start: Vec<_> = slots.iter().enumerate().map(|(k, &(x, l))| (k as u32 + 1, x, 0.0, l)).collect();
            let goal: Vec<_> =
                slots.iter().enumerate().map(|(k, &(x, l))| (perm[k] as u32 + 1, x, 0.0, l)).collect();
            inst(&start, &goal)
        })
    }

    proptest! {
        #[test]
        fn closure_is_monotone_and_idempotent(i in random_instance(), a in any::<u128>(), b in any::<u128>()) {
            let rel = build_relations(&i).unwrap();
            let all = rel.all().bits();
            let small = from_bits(a & b & all);
            let big = from_bits((a | b) & all);
            let cs = rel.placement_closure(small);
            let cb = rel.placement_closure(big);
            prop_assert!(cs.is_subset(cb));
            let r = small.union(rel.settled());
            prop_assert!(cs.is_subset(r));
            // Fixpoint: members satisfy both conditions, non-members fail one.
            for i in r {
                let ok = rel.settled().contains(i)
                    || (rel.direct_blockers(i).is_subset(r) && rel.goal_below(i).is_subset(cs));
                prop_assert_eq!(ok, cs.contains(i), "object {}", i);
            }
        }

        #[test]
        fn any_legal_order_expands_to_a_valid_plan(i in random_instance(), seed in any::<u64>()) {
            let rel = build_relations(&i).unwrap();
            let mut removed = ObjSet::EMPTY;
            let mut order = Vec::new();
            let mut s = seed;
            while removed != rel.movable() {
                let cands: Vec<u32> = rel.movable().difference(removed).iter().filter(|&k| rel.removable(k, removed)).collect();
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                let k = cands[(s >> 33) as usize % cands.len()];
                order.push(k);
                removed.insert(k);
            }
            let plan = rel.plan_from_removal_order(&order).unwrap();
            prop_assert_eq!(plan.cost() as u32, rel.order_cost(&order));
            prop_assert!(simulate_plan(&i, &plan).is_ok());
            prop_assert!(simulate_plan(&i.reversed(), &plan.reversed()).is_ok());
        }
    }

    fn from_bits(bits: u128) -> ObjSet {
        (0..128u32).filter(|k| bits >> k & 1 == 1).map(|k| k + 1).collect()
    }
}
