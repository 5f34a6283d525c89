//! Instances, arrangements, pick-n-place actions and exact plan replay.

mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError, Polygon, Pose, AREA_EPS, GAP_EPS, VERTEX_EPS};

pub use io::{load_instance, load_plan, save_instance, save_plan, PlanDocument, StatsBlock, FORMAT_VERSION};

/// Object identifier; valid instances number their objects `1..=n`.
pub type ObjectId = u32;

pub const DEFAULT_FRICTION: f64 = 0.5;
pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub area: f64,
    pub vertex: f64,
    pub gap: f64,
    pub pose_position: f64,
    pub pose_yaw: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { area: AREA_EPS, vertex: VERTEX_EPS, gap: GAP_EPS, pose_position: 1e-6, pose_yaw: 1e-6 }
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid geometry for object {id}: {source}")]
    Geometry { id: ObjectId, source: GeometryError },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{which} arrangement is not statically stable (objects {objects:?})")]
    Unstable { which: &'static str, objects: Vec<ObjectId> },
    #[error("unknown object id {0}")]
    UnknownObject(ObjectId),
}

impl SceneError {
    /// Stable numeric code per error class, used by the command line tools.
    pub fn code(&self) -> u8 {
        match self {
            SceneError::Schema(_) => 10,
            SceneError::Geometry { .. } | SceneError::Invariant(_) | SceneError::UnknownObject(_) => 11,
            SceneError::Unstable { .. } => 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectShape {
    pub id: ObjectId,
    pub base: Polygon,
    pub density: f64,
}

impl ObjectShape {
    pub fn new(id: ObjectId, base: Polygon) -> Self {
        Self { id, base, density: 1.0 }
    }
}

/// Partial assignment of poses to objects; the table is implicit below layer 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Arrangement {
    poses: BTreeMap<ObjectId, Pose>,
}

impl Arrangement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: ObjectId, pose: Pose) -> Option<Pose> {
        self.poses.insert(id, pose)
    }

    pub fn remove(&mut self, id: ObjectId) -> Option<Pose> {
        self.poses.remove(&id)
    }

    pub fn get(&self, id: ObjectId) -> Option<&Pose> {
        self.poses.get(&id)
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.poses.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectId, &Pose)> + '_ {
        self.poses.iter().map(|(&id, p)| (id, p))
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.poses.keys().copied()
    }

    pub fn max_layer(&self) -> u32 {
        self.poses.values().map(|p| p.layer).max().unwrap_or(0)
    }

    /// Same objects at the same poses, within the instance pose tolerance.
    pub fn approx_eq(&self, other: &Arrangement, tol: &Tolerances) -> bool {
        self.len() == other.len()
            && self.iter().all(|(id, p)| {
                other.get(id).is_some_and(|q| p.approx_eq(q, tol.pose_position, tol.pose_yaw))
            })
    }
}

impl FromIterator<(ObjectId, Pose)> for Arrangement {
    fn from_iter<I: IntoIterator<Item = (ObjectId, Pose)>>(iter: I) -> Self {
        Self { poses: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub height: f64,
    pub friction: f64,
    pub gravity: f64,
    pub objects: Vec<ObjectShape>,
    pub start: Arrangement,
    pub goal: Arrangement,
    pub tol: Tolerances,
}

/// A geometric defect of an arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Collision(ObjectId, ObjectId),
    Unsupported(ObjectId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Collision(a, b) => write!(f, "collision({a},{b})"),
            Violation::Unsupported(a) => write!(f, "unsupported({a})"),
        }
    }
}

impl Instance {
    /// Builds an instance with default friction and gravity, checking every
    /// structural invariant except static stability (see [`Instance::check_stable`]).
    pub fn new(
        height: f64,
        objects: Vec<ObjectShape>,
        start: Arrangement,
        goal: Arrangement,
    ) -> Result<Self, SceneError> {
        let inst = Self {
            height,
            friction: DEFAULT_FRICTION,
            gravity: DEFAULT_GRAVITY,
            objects,
            start,
            goal,
            tol: Tolerances::default(),
        };
        inst.check_structure()?;
        Ok(inst)
    }

    pub fn with_friction(mut self, mu: f64) -> Self {
        self.friction = mu;
        self
    }

    pub fn n(&self) -> usize {
        self.objects.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.objects.iter().map(|o| o.id)
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectShape> {
        let idx = (id as usize).checked_sub(1)?;
        self.objects.get(idx).filter(|o| o.id == id)
    }

    fn shape(&self, id: ObjectId) -> Result<&ObjectShape, SceneError> {
        self.object(id).ok_or(SceneError::UnknownObject(id))
    }

    pub fn footprint(&self, id: ObjectId, pose: &Pose) -> Polygon {
        let shape = self.object(id).expect("known object id");
        shape.base.transformed(pose)
    }

    pub fn weight(&self, id: ObjectId) -> f64 {
        let o = self.object(id).expect("known object id");
        o.density * o.base.area() * self.height * self.gravity
    }

    /// Objects whose start and goal poses coincide.
    pub fn is_stationary(&self, id: ObjectId) -> bool {
        match (self.start.get(id), self.goal.get(id)) {
            (Some(s), Some(g)) => s.approx_eq(g, self.tol.pose_position, self.tol.pose_yaw),
            _ => false,
        }
    }

    pub fn check_structure(&self) -> Result<(), SceneError> {
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(SceneError::Invariant(format!("height must be positive, got {}", self.height)));
        }
        if !(0.0..=2.0).contains(&self.friction) {
            return Err(SceneError::Invariant(format!("friction must lie in [0, 2], got {}", self.friction)));
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(SceneError::Invariant(format!("gravity must be positive, got {}", self.gravity)));
        }
        for (k, o) in self.objects.iter().enumerate() {
            if o.id as usize != k + 1 {
                return Err(SceneError::Invariant(format!(
                    "object ids must be 1..n in order; position {} holds id {}",
                    k + 1,
                    o.id
                )));
            }
            if !(o.density > 0.0 && o.density.is_finite()) {
                return Err(SceneError::Invariant(format!("object {} has non-positive density", o.id)));
            }
        }
        for (which, arr) in [("start", &self.start), ("goal", &self.goal)] {
            if arr.len() != self.n() || self.ids().any(|id| !arr.contains(id)) {
                return Err(SceneError::Invariant(format!(
                    "{which} arrangement must place every object exactly once"
                )));
            }
            let violations = validate_arrangement(self, arr)?;
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                return Err(SceneError::Invariant(format!("{which}: {}", list.join(", "))));
            }
        }
        Ok(())
    }

    /// Rejects instances whose start or goal arrangement is not statically stable.
    pub fn check_stable(&self) -> Result<(), SceneError> {
        let cfg = crate::stability::StabilityConfig::default();
        for (which, arr) in [("start", &self.start), ("goal", &self.goal)] {
            let verdict = crate::stability::is_stable_with(self, arr, &cfg);
            if !verdict.stable {
                return Err(SceneError::Unstable { which, objects: verdict.unstable_objects });
            }
        }
        Ok(())
    }

    /// Swaps the roles of start and goal.
    pub fn reversed(&self) -> Instance {
        let mut r = self.clone();
        std::mem::swap(&mut r.start, &mut r.goal);
        r
    }
}

/// Lists collisions and unsupported objects of `arr`.
pub fn validate_arrangement(inst: &Instance, arr: &Arrangement) -> Result<Vec<Violation>, SceneError> {
    let mut fps = Vec::with_capacity(arr.len());
    for (id, pose) in arr.iter() {
        let shape = inst.shape(id)?;
        fps.push((id, pose.layer, shape.base.transformed(pose)));
    }
    let mut out = Vec::new();
    for (a, (ia, la, fa)) in fps.iter().enumerate() {
        for (ib, lb, fb) in &fps[a + 1..] {
            if la == lb && geometry::intersection_with_tolerance(fa, fb, inst.tol.area).is_some() {
                out.push(Violation::Collision(*ia, *ib));
            }
        }
    }
    for (ia, la, fa) in &fps {
        if *la == 0 {
            continue;
        }
        let supported = fps.iter().any(|(ib, lb, fb)| {
            ib != ia && *lb + 1 == *la && geometry::intersection_with_tolerance(fa, fb, inst.tol.area).is_some()
        });
        if !supported {
            out.push(Violation::Unsupported(*ia));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Start,
    Buffer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Destination {
    Goal,
    Buffer,
}

/// One pick-n-place. Legal shapes are start→goal, start→buffer and buffer→goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub object: ObjectId,
    pub from: Source,
    pub to: Destination,
}

impl Action {
    pub fn direct(object: ObjectId) -> Self {
        Self { object, from: Source::Start, to: Destination::Goal }
    }

    pub fn to_buffer(object: ObjectId) -> Self {
        Self { object, from: Source::Start, to: Destination::Buffer }
    }

    pub fn from_buffer(object: ObjectId) -> Self {
        Self { object, from: Source::Buffer, to: Destination::Goal }
    }

    pub fn is_legal(&self) -> bool {
        !(self.from == Source::Buffer && self.to == Destination::Buffer)
    }

    /// The same move with start and goal roles exchanged.
    pub fn reversed(&self) -> Action {
        match (self.from, self.to) {
            (Source::Start, Destination::Goal) => *self,
            (Source::Start, Destination::Buffer) => Action::from_buffer(self.object),
            (Source::Buffer, Destination::Goal) => Action::to_buffer(self.object),
            (Source::Buffer, Destination::Buffer) => *self,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let from = match self.from {
            Source::Start => "start",
            Source::Buffer => "buffer",
        };
        let to = match self.to {
            Destination::Goal => "goal",
            Destination::Buffer => "buffer",
        };
        write!(f, "o{}: {from} -> {to}", self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub actions: Vec<Action>,
}

impl Plan {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions }
    }

    pub fn cost(&self) -> usize {
        self.actions.len()
    }

    pub fn buffer_count(&self) -> usize {
        self.actions.iter().filter(|a| a.to == Destination::Buffer).count()
    }

    /// Plan for the reversed instance: actions reversed in order, each one inverted.
    pub fn reversed(&self) -> Plan {
        Plan { actions: self.actions.iter().rev().map(Action::reversed).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayFault {
    UnknownObject,
    IllegalAction,
    NotAtSource,
    PickBlocked { by: ObjectId },
    PlaceOccupied { by: ObjectId },
    PlaceUnsupported,
    PlaceCovered { by: ObjectId },
    FinalMismatch { object: ObjectId },
}

/// A plan replay failure; `action` is the 0-based index of the offending
/// action, absent for the final-arrangement check.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", describe_replay(.action, .fault))]
pub struct ReplayError {
    pub action: Option<usize>,
    pub fault: ReplayFault,
}

fn describe_replay(action: &Option<usize>, fault: &ReplayFault) -> String {
    let what = match fault {
        ReplayFault::UnknownObject => "unknown object".to_string(),
        ReplayFault::IllegalAction => "illegal action shape".to_string(),
        ReplayFault::NotAtSource => "object is not at the stated source".to_string(),
        ReplayFault::PickBlocked { by } => format!("pick blocked by object {by} above"),
        ReplayFault::PlaceOccupied { by } => format!("place collides with object {by}"),
        ReplayFault::PlaceUnsupported => "place is unsupported".to_string(),
        ReplayFault::PlaceCovered { by } => format!("place lies under object {by}"),
        ReplayFault::FinalMismatch { object } => format!("final mismatch at object {object}"),
    };
    match action {
        Some(k) => format!("action {k}: {what}"),
        None => what,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    Start,
    Goal,
    Buffer,
}

/// Replays `plan` symbolically. After each action the picked object must have
/// been top-clear and the placed object collision-free, supported and not
/// covered. Returns the on-table arrangement after every action.
pub fn simulate_plan(inst: &Instance, plan: &Plan) -> Result<Vec<Arrangement>, ReplayError> {
    let mut loc: BTreeMap<ObjectId, Location> = inst.ids().map(|id| (id, Location::Start)).collect();
    let mut table = inst.start.clone();
    let mut states = Vec::with_capacity(plan.actions.len());
    let tol = inst.tol.area;

    for (k, act) in plan.actions.iter().enumerate() {
        let fail = |fault| ReplayError { action: Some(k), fault };
        if inst.object(act.object).is_none() {
            return Err(fail(ReplayFault::UnknownObject));
        }
        if !act.is_legal() {
            return Err(fail(ReplayFault::IllegalAction));
        }
        let here = loc[&act.object];
        match (act.from, here) {
            (Source::Start, Location::Start) => {
                let pose = *table.get(act.object).expect("object on table");
                let fp = inst.footprint(act.object, &pose);
                for (other, op) in table.iter() {
                    if other != act.object
                        && op.layer > pose.layer
                        && geometry::intersection_with_tolerance(&fp, &inst.footprint(other, op), tol).is_some()
                    {
                        return Err(fail(ReplayFault::PickBlocked { by: other }));
                    }
                }
                table.remove(act.object);
            }
            (Source::Buffer, Location::Buffer) => {}
            _ => return Err(fail(ReplayFault::NotAtSource)),
        }
        match act.to {
            Destination::Buffer => {
                loc.insert(act.object, Location::Buffer);
            }
            Destination::Goal => {
                let pose = *inst.goal.get(act.object).expect("goal pose");
                let fp = inst.footprint(act.object, &pose);
                let mut supported = pose.layer == 0;
                for (other, op) in table.iter() {
                    let hit = geometry::intersection_with_tolerance(&fp, &inst.footprint(other, op), tol).is_some();
                    if !hit {
                        continue;
                    }
                    if op.layer == pose.layer {
                        return Err(fail(ReplayFault::PlaceOccupied { by: other }));
                    }
                    if op.layer > pose.layer {
                        return Err(fail(ReplayFault::PlaceCovered { by: other }));
                    }
                    if op.layer + 1 == pose.layer {
                        supported = true;
                    }
                }
                if !supported {
                    return Err(fail(ReplayFault::PlaceUnsupported));
                }
                table.insert(act.object, pose);
                loc.insert(act.object, Location::Goal);
            }
        }
        states.push(table.clone());
    }

    for id in inst.ids() {
        let ok = match loc[&id] {
            Location::Goal => true,
            Location::Start => inst.is_stationary(id),
            Location::Buffer => false,
        };
        if !ok {
            return Err(ReplayError { action: None, fault: ReplayFault::FinalMismatch { object: id } });
        }
    }
    Ok(states)
}
