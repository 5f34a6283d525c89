//! Quasi-static stability: an arrangement is stable when non-negative contact
//! forces inside linearised friction cones can balance gravity on every object.

pub mod lp;

use std::collections::HashMap;
use std::f64::consts::TAU;

use crate::geometry::{Point2, Vec3};
use crate::objset::ObjSet;
use crate::relations::{extract_contacts, ContactKind, Lower, OrderError, Relations};
use crate::scene::{simulate_plan, Arrangement, Destination, Instance, ObjectId, Plan, ReplayError, Source};
use lp::Dense;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    /// Friction coefficient; `None` uses the instance value.
    pub mu: Option<f64>,
    /// Edges of the friction pyramid, 3 to 16.
    pub cone_edges: usize,
    /// Feasibility slack of the equilibrium program.
    pub eps: f64,
    /// Try a frictionless vertical-only program first; its feasibility
    /// already proves stability.
    pub vertical_precheck: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { mu: None, cone_edges: 4, eps: 1e-7, vertical_precheck: true }
    }
}

impl StabilityConfig {
    pub fn with_mu(mu: f64) -> Self {
        Self { mu: Some(mu), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactPointForce {
    pub upper: ObjectId,
    pub lower: Lower,
    pub point: Vec3,
    /// Unit normal pushing into `upper`.
    pub normal: Vec3,
    pub cone_generators: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Objects whose balance equations could not be met; empty when stable.
    pub unstable_objects: Vec<ObjectId>,
}

impl StabilityVerdict {
    fn stable() -> Self {
        Self { stable: true, unstable_objects: Vec::new() }
    }
}

fn cone(normal: Vec3, t1: Vec3, t2: Vec3, mu: f64, k: usize) -> Vec<Vec3> {
    (0..k)
        .map(|j| {
            let th = TAU * j as f64 / k as f64;
            normal.add(t1.scale(mu * th.cos()).add(t2.scale(mu * th.sin()))).normalized()
        })
        .collect()
}

/// Contact points with their friction cones: patch vertices for supports
/// (table included) and segment ends at both face heights for side contacts.
pub fn contact_points(inst: &Instance, arr: &Arrangement, cfg: &StabilityConfig) -> Vec<ContactPointForce> {
    let mu = cfg.mu.unwrap_or(inst.friction);
    let k = cfg.cone_edges.clamp(3, 16);
    let h = inst.height;
    let up = Vec3::new(0.0, 0.0, 1.0);
    let (ex, ey) = (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
    let support_cone = cone(up, ex, ey, mu, k);
    let mut out = Vec::new();
    for c in extract_contacts(inst, arr) {
        let layer = arr.get(c.upper).expect("contact object present").layer;
        match &c.kind {
            ContactKind::Support { region } => {
                let z = layer as f64 * h;
                for v in region.vertices() {
                    out.push(ContactPointForce {
                        upper: c.upper,
                        lower: c.lower,
                        point: Vec3::new(v.x, v.y, z),
                        normal: up,
                        cone_generators: support_cone.clone(),
                    });
                }
            }
            ContactKind::Side { segment } => {
                let normal = Vec3::new(segment.normal.x, segment.normal.y, 0.0);
                let along = Vec3::new(-segment.normal.y, segment.normal.x, 0.0);
                let gens = cone(normal, along, up, mu, k);
                for p in [segment.start, segment.end] {
                    for z in [layer as f64 * h, (layer + 1) as f64 * h] {
                        out.push(ContactPointForce {
                            upper: c.upper,
                            lower: c.lower,
                            point: Vec3::new(p.x, p.y, z),
                            normal,
                            cone_generators: gens.clone(),
                        });
                    }
                }
            }
        }
    }
    out
}

struct Body {
    id: ObjectId,
    center: Vec3,
    load: f64,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Stability of `arr` with the instance friction and default settings.
pub fn is_stable(inst: &Instance, arr: &Arrangement) -> StabilityVerdict {
    is_stable_with(inst, arr, &StabilityConfig::default())
}

pub fn is_stable_with(inst: &Instance, arr: &Arrangement, cfg: &StabilityConfig) -> StabilityVerdict {
    if arr.is_empty() {
        return StabilityVerdict::stable();
    }
    let points = contact_points(inst, arr, cfg);
    let ids: Vec<ObjectId> = arr.ids().collect();
    let index: HashMap<ObjectId, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();

    let mut touched = vec![false; ids.len()];
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    for p in &points {
        let u = index[&p.upper];
        touched[u] = true;
        if let Lower::Object(l) = p.lower {
            let l = index[&l];
            touched[l] = true;
            let (a, b) = (find(&mut parent, u), find(&mut parent, l));
            parent[a.max(b)] = a.min(b);
        }
    }
    let lonely: Vec<ObjectId> = ids.iter().zip(&touched).filter(|(_, t)| !**t).map(|(&id, _)| id).collect();
    if !lonely.is_empty() {
        return StabilityVerdict { stable: false, unstable_objects: lonely };
    }

    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; ids.len()];
    for k in 0..ids.len() {
        let root = find(&mut parent, k);
        if slot[root] == usize::MAX {
            slot[root] = components.len();
            components.push(Vec::new());
        }
        components[slot[root]].push(k);
    }
    let mut by_component: Vec<Vec<&ContactPointForce>> = vec![Vec::new(); components.len()];
    for p in &points {
        by_component[slot[find(&mut parent, index[&p.upper])]].push(p);
    }

    let h = inst.height;
    let mut unstable = Vec::new();
    for (members, pts) in components.iter().zip(&by_component) {
        let reference = members.iter().map(|&k| inst.weight(ids[k])).fold(0.0, f64::max);
        let bodies: Vec<Body> = members
            .iter()
            .map(|&k| {
                let id = ids[k];
                let pose = arr.get(id).unwrap();
                let c: Point2 = inst.footprint(id, pose).centroid();
                Body { id, center: Vec3::new(c.x, c.y, (pose.layer as f64 + 0.5) * h), load: inst.weight(id) / reference }
            })
            .collect();
        if cfg.vertical_precheck && vertical_feasible(&bodies, pts, cfg.eps) {
            continue;
        }
        unstable.extend(full_violations(&bodies, pts, cfg.eps));
    }
    unstable.sort_unstable();
    StabilityVerdict { stable: unstable.is_empty(), unstable_objects: unstable }
}

fn local(bodies: &[Body]) -> HashMap<ObjectId, usize> {
    bodies.iter().enumerate().map(|(k, b)| (b.id, k)).collect()
}

/// Frictionless vertical forces at support points only: rows Fz, Tx, Ty.
fn vertical_feasible(bodies: &[Body], pts: &[&ContactPointForce], eps: f64) -> bool {
    let idx = local(bodies);
    let support: Vec<&&ContactPointForce> = pts.iter().filter(|p| p.normal.z > 0.5).collect();
    let mut a = Dense::zeros(3 * bodies.len(), support.len());
    let mut b = vec![0.0; 3 * bodies.len()];
    for (k, body) in bodies.iter().enumerate() {
        b[3 * k] = body.load;
    }
    for (col, p) in support.iter().enumerate() {
        let mut apply = |k: usize, sign: f64| {
            let r = p.point.sub(bodies[k].center);
            a.add(3 * k, col, sign);
            a.add(3 * k + 1, col, sign * r.y);
            a.add(3 * k + 2, col, -sign * r.x);
        };
        apply(idx[&p.upper], 1.0);
        if let Lower::Object(l) = p.lower {
            apply(idx[&l], -1.0);
        }
    }
    lp::phase_one(&a, &b, eps).feasible
}

/// Full six-row balance per object; returns the objects left unbalanced.
fn full_violations(bodies: &[Body], pts: &[&ContactPointForce], eps: f64) -> Vec<ObjectId> {
    let idx = local(bodies);
    let cols: usize = pts.iter().map(|p| p.cone_generators.len()).sum();
    let mut a = Dense::zeros(6 * bodies.len(), cols);
    let mut b = vec![0.0; 6 * bodies.len()];
    for (k, body) in bodies.iter().enumerate() {
        b[6 * k + 2] = body.load;
    }
    let mut col = 0;
    for p in pts {
        for g in &p.cone_generators {
            let mut apply = |k: usize, sign: f64| {
                let r = p.point.sub(bodies[k].center);
                let t = r.cross(*g);
                for (d, v) in [g.x, g.y, g.z, t.x, t.y, t.z].into_iter().enumerate() {
                    a.add(6 * k + d, col, sign * v);
                }
            };
            apply(idx[&p.upper], 1.0);
            if let Lower::Object(l) = p.lower {
                apply(idx[&l], -1.0);
            }
            col += 1;
        }
    }
    let f = lp::phase_one(&a, &b, eps);
    if f.feasible {
        return Vec::new();
    }
    let mut out: Vec<ObjectId> = f.violated_rows.iter().map(|r| bodies[r / 6].id).collect();
    if out.is_empty() {
        out = bodies.iter().map(|b| b.id).collect();
    }
    out.dedup();
    out
}

/// A removal bundle whose execution passes through an unstable state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnstableStep {
    /// 1-based index of the failing bundle in the removal order.
    pub bundle: usize,
    /// 0-based micro-action within the bundle: the pick is 0, each place follows.
    pub micro: usize,
    /// 0-based index of the plan action during which the failure happens.
    pub action: usize,
    pub objects: Vec<ObjectId>,
}

/// Micro-states of one bundle as (removed, placed) pairs.
fn bundle_states(rel: &Relations, removed: ObjSet, i: ObjectId) -> Vec<(ObjSet, ObjSet)> {
    let bundle = rel.bundle(removed, i);
    let after = removed.with(i);
    let mut placed = rel.placement_closure(removed);
    let mut out = vec![(after, placed)];
    if bundle.direct {
        placed.insert(i);
        out.push((after, placed));
    }
    for k in bundle.flush {
        placed.insert(k);
        out.push((after, placed));
    }
    out
}

/// Memoised stability queries over the abstract (removed, placed) states of
/// one instance.
pub struct StabilityOracle<'a> {
    inst: &'a Instance,
    rel: &'a Relations,
    cfg: StabilityConfig,
    states: HashMap<(ObjSet, ObjSet), Option<Vec<ObjectId>>>,
    edges: HashMap<(ObjSet, ObjectId), Option<(usize, Vec<ObjectId>)>>,
    checks: u64,
}

impl<'a> StabilityOracle<'a> {
    pub fn new(inst: &'a Instance, rel: &'a Relations, cfg: StabilityConfig) -> Self {
        Self { inst, rel, cfg, states: HashMap::new(), edges: HashMap::new(), checks: 0 }
    }

    /// Number of arrangements actually solved (cache misses).
    pub fn checks(&self) -> u64 {
        self.checks
    }

    /// Unstable objects of the on-table state, or `None` when stable.
    pub fn state(&mut self, removed: ObjSet, placed: ObjSet) -> Option<Vec<ObjectId>> {
        let s = self.rel.settled();
        let key = (removed.union(s), placed.union(s));
        if let Some(v) = self.states.get(&key) {
            return v.clone();
        }
        self.checks += 1;
        let arr = self.rel.table(self.inst, key.0, key.1);
        let v = is_stable_with(self.inst, &arr, &self.cfg);
        let res = (!v.stable).then_some(v.unstable_objects);
        self.states.insert(key, res.clone());
        res
    }

    /// First failing micro-action of removing `i` after `removed`.
    pub fn edge(&mut self, removed: ObjSet, i: ObjectId) -> Option<(usize, Vec<ObjectId>)> {
        let s = self.rel.settled();
        let key = (removed.union(s), i);
        if let Some(v) = self.edges.get(&key) {
            return v.clone();
        }
        let mut res = None;
        for (micro, (r, p)) in bundle_states(self.rel, key.0, i).into_iter().enumerate() {
            if let Some(objs) = self.state(r, p) {
                res = Some((micro, objs));
                break;
            }
        }
        self.edges.insert(key, res.clone());
        res
    }

    pub fn edge_stable(&mut self, removed: ObjSet, i: ObjectId) -> bool {
        self.edge(removed, i).is_none()
    }

    /// Replays `order` bundle by bundle and reports the first unstable one.
    pub fn first_unstable_step(&mut self, order: &[ObjectId]) -> Result<Option<UnstableStep>, OrderError> {
        self.rel.check_order(order)?;
        let mut removed = ObjSet::EMPTY;
        let mut action = 0;
        for (k, &i) in order.iter().enumerate() {
            if let Some((micro, objects)) = self.edge(removed, i) {
                let direct = self.rel.bundle(removed, i).direct;
                // The pick and the direct place share the first action.
                let offset = if direct { micro.saturating_sub(1) } else { micro };
                return Ok(Some(UnstableStep { bundle: k + 1, micro, action: action + offset, objects }));
            }
            action += self.rel.bundle(removed, i).flush.len() + 1;
            removed.insert(i);
        }
        Ok(None)
    }
}

/// Standalone form of [`StabilityOracle::first_unstable_step`].
pub fn first_unstable_step(
    inst: &Instance,
    order: &[ObjectId],
    rel: &Relations,
    cfg: &StabilityConfig,
) -> Result<Option<UnstableStep>, OrderError> {
    StabilityOracle::new(inst, rel, *cfg).first_unstable_step(order)
}

/// An action of an explicit plan during which the table became unstable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnstableAction {
    pub action: usize,
    /// True when the failing state is the one right after the pick.
    pub after_pick: bool,
    pub objects: Vec<ObjectId>,
}

/// An intermediate arrangement: after the pick of action `action` when
/// `after_pick`, otherwise after the whole action.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroState {
    pub action: usize,
    pub after_pick: bool,
    pub arrangement: Arrangement,
}

/// Replays `plan` and lists every micro-state in execution order. A move to a
/// buffer ends with the object off the table, so it has a single state.
pub fn micro_states(inst: &Instance, plan: &Plan) -> Result<Vec<MicroState>, ReplayError> {
    let states = simulate_plan(inst, plan)?;
    let mut out = Vec::with_capacity(2 * states.len());
    let mut prev = &inst.start;
    for (k, (act, after)) in plan.actions.iter().zip(&states).enumerate() {
        if act.from == Source::Start && act.to == Destination::Goal {
            let mut picked = prev.clone();
            picked.remove(act.object);
            out.push(MicroState { action: k, after_pick: true, arrangement: picked });
        }
        out.push(MicroState { action: k, after_pick: act.to == Destination::Buffer, arrangement: after.clone() });
        prev = after;
    }
    Ok(out)
}

/// Replays `plan` and checks every micro-state for stability, stopping at
/// the first failure. Replay violations are returned as errors.
pub fn screen_plan(
    inst: &Instance,
    plan: &Plan,
    cfg: &StabilityConfig,
) -> Result<Option<UnstableAction>, ReplayError> {
    for m in micro_states(inst, plan)? {
        let v = is_stable_with(inst, &m.arrangement, cfg);
        if !v.stable {
            return Ok(Some(UnstableAction { action: m.action, after_pick: m.after_pick, objects: v.unstable_objects }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::relations::build_relations;
    use crate::scene::tests::{arr, cubes};
    use crate::scene::ObjectShape;
    use crate::geometry::Polygon;

    fn scene(poses: &[(u32, f64, f64, u32)]) -> (Instance, Arrangement) {
        let a = arr(poses);
        let inst = Instance::new(1.0, cubes(poses.len() as u32), a.clone(), a.clone()).unwrap();
        (inst, a)
    }

    #[test]
    fn single_cube_is_stable() {
        let (inst, a) = scene(&[(1, 3.3, -2.0, 0)]);
        assert!(is_stable(&inst, &a).stable);
        let pts = contact_points(&inst, &a, &StabilityConfig::default());
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| p.normal == Vec3::new(0.0, 0.0, 1.0)));
        assert!(pts.iter().all(|p| p.cone_generators.len() == 4));
    }

    #[test]
    fn half_overlap_patch_points() {
        let (inst, a) = scene(&[(1, 0., 0., 0), (2, 0.5, 0., 1)]);
        let pts: Vec<_> = contact_points(&inst, &a, &StabilityConfig::default())
            .into_iter()
            .filter(|p| p.upper == 2)
            .collect();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert!((p.point.z - 1.0).abs() < 1e-12);
            assert!(p.point.x >= 0.5 - 1e-12 && p.point.x <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn flush_side_points_are_horizontal() {
        let (inst, a) = scene(&[(1, 0., 0., 0), (2, 1., 0., 0)]);
        let side: Vec<_> = contact_points(&inst, &a, &StabilityConfig::default())
            .into_iter()
            .filter(|p| p.lower == Lower::Object(2))
            .collect();
        assert_eq!(side.len(), 4);
        assert!(side.iter().all(|p| p.normal.z == 0.0 && (p.normal.x + 1.0).abs() < 1e-12));
    }

    #[test]
    fn overhang_threshold() {
        let (inst, _) = scene(&[(1, 0., 0., 0), (2, 0., 0., 1)]);
        let cfg = StabilityConfig::with_mu(0.5);
        let over = arr(&[(1, 0., 0., 0), (2, 0.51, 0., 1)]);
        let under = arr(&[(1, 0., 0., 0), (2, 0.49, 0., 1)]);
        let v = is_stable_with(&inst, &over, &cfg);
        assert!(!v.stable);
        assert_eq!(v.unstable_objects, vec![2]);
        assert!(is_stable_with(&inst, &under, &cfg).stable);
        // The full program alone agrees with the vertical shortcut.
        let full = StabilityConfig { vertical_precheck: false, ..cfg };
        assert!(!is_stable_with(&inst, &over, &full).stable);
        assert!(is_stable_with(&inst, &under, &full).stable);
    }

    #[test]
    fn towers_are_stable() {
        for height in 1..8u32 {
            let poses: Vec<_> = (0..height).map(|l| (l + 1, 0.0, 0.0, l)).collect();
            let (inst, a) = scene(&poses);
            assert!(is_stable(&inst, &a).stable, "height {height}");
        }
    }

    #[test]
    fn arch_needs_friction() {
        let (inst, a) = scene(&[(1, 0., 0., 0), (4, 2.5, 0., 0), (2, 0.75, 0., 1), (3, 1.75, 0., 1)]);
        let at = |mu| is_stable_with(&inst, &a, &StabilityConfig::with_mu(mu)).stable;
        assert!(at(1.0));
        assert!(at(0.5));
        assert!(!at(0.0));
        let mut lone = a.clone();
        lone.remove(3);
        assert!(!is_stable_with(&inst, &lone, &StabilityConfig::with_mu(1.0)).stable);
    }

    #[test]
    fn floating_object_is_unstable() {
        let (inst, _) = scene(&[(1, 0., 0., 0), (2, 5., 0., 0)]);
        let a: Arrangement = [(1, Pose::at(0., 0., 0)), (2, Pose::at(5., 0., 1))].into_iter().collect();
        let v = is_stable(&inst, &a);
        assert_eq!(v, StabilityVerdict { stable: false, unstable_objects: vec![2] });
    }

    #[test]
    fn density_scaling_keeps_verdict() {
        let poses = [(1, 0., 0., 0), (2, 0.6, 0., 1), (3, -0.1, 0., 2)];
        let (mut inst, a) = scene(&poses);
        let before = is_stable(&inst, &a);
        for o in &mut inst.objects {
            o.density *= 37.5;
        }
        assert_eq!(is_stable(&inst, &a), before);
    }

    #[test]
    fn counterweight_scene() {
        // 3 leans past the edge of 1 and is held by 4.
        let poses = [(1, 0., 0., 0), (2, 3., 0., 0), (3, 0.6, 0., 1), (4, 1.5, 0., 0)];
        let (inst, a) = scene(&poses);
        assert!(is_stable(&inst, &a).stable);
        let mut without = a.clone();
        without.remove(4);
        let v = is_stable(&inst, &without);
        assert!(!v.stable);
        assert!(v.unstable_objects.contains(&3));
    }

    #[test]
    fn first_unstable_step_finds_the_removal() {
        // 3 overhangs 1 and is held down by 4 resting on its inner end.
        let start = arr(&[(1, 0., 0., 0), (2, 3., 0., 0), (3, 0.6, 0., 1), (4, 0.15, 0., 2)]);
        let goal = arr(&[(1, 0., 0., 0), (2, 3., 0., 0), (3, 5., 0., 0), (4, 7., 0., 0)]);
        let inst = Instance::new(1.0, cubes(4), start, goal).unwrap();
        inst.check_stable().unwrap();
        let rel = build_relations(&inst).unwrap();
        let cfg = StabilityConfig::default();
        assert!(first_unstable_step(&inst, &[3, 4], &rel, &cfg).is_err());
        let hit = first_unstable_step(&inst, &[4, 3], &rel, &cfg).unwrap().unwrap();
        assert_eq!((hit.bundle, hit.micro, hit.action), (1, 0, 0));
        assert_eq!(hit.objects, vec![3]);
        let plan = rel.plan_from_removal_order(&[4, 3]).unwrap();
        let screened = screen_plan(&inst, &plan, &cfg).unwrap().unwrap();
        assert_eq!(screened.action, 0);
        assert!(screened.after_pick);
    }

    #[test]
    fn rotated_hexagon_on_table() {
        let hex = Polygon::new(
            (0..6).map(|k| Point2::new((k as f64 * TAU / 6.0).cos(), (k as f64 * TAU / 6.0).sin())).collect(),
        )
        .unwrap();
        let a: Arrangement = [(1, Pose::new(2.0, 1.0, 0, 0.3))].into_iter().collect();
        let inst = Instance::new(0.5, vec![ObjectShape::new(1, hex)], a.clone(), a.clone()).unwrap();
        assert!(is_stable(&inst, &a).stable);
    }
}
