//! JSON instance and plan documents.

use serde::{Deserialize, Serialize};

use super::{Action, Arrangement, Destination, Instance, ObjectShape, Plan, SceneError, Source, Tolerances};
use crate::geometry::{Point2, Polygon, Pose};

pub const FORMAT_VERSION: u32 = 1;

fn default_version() -> u32 {
    FORMAT_VERSION
}

fn default_friction() -> f64 {
    super::DEFAULT_FRICTION
}

fn default_gravity() -> f64 {
    super::DEFAULT_GRAVITY
}

fn default_density() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default = "default_version")]
    format_version: u32,
    height: f64,
    #[serde(default = "default_friction")]
    friction: f64,
    #[serde(default = "default_gravity")]
    gravity: f64,
    objects: Vec<ObjectEntry>,
    start: Vec<PoseEntry>,
    goal: Vec<PoseEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectEntry {
    id: u32,
    base: Vec<[f64; 2]>,
    #[serde(default = "default_density")]
    density: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PoseEntry {
    id: u32,
    x: f64,
    y: f64,
    layer: u32,
    #[serde(default)]
    yaw: f64,
}

fn check_version(v: u32) -> Result<(), SceneError> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(SceneError::Schema(format!("unsupported format_version {v}")))
    }
}

fn arrangement_from(entries: &[PoseEntry], which: &str) -> Result<Arrangement, SceneError> {
    let mut arr = Arrangement::new();
    for e in entries {
        if ![e.x, e.y, e.yaw].iter().all(|v| v.is_finite()) {
            return Err(SceneError::Invariant(format!("{which}: non-finite pose for object {}", e.id)));
        }
        if arr.insert(e.id, Pose::new(e.x, e.y, e.layer, e.yaw)).is_some() {
            return Err(SceneError::Invariant(format!("{which}: object {} listed twice", e.id)));
        }
    }
    Ok(arr)
}

fn entries_from(arr: &Arrangement) -> Vec<PoseEntry> {
    arr.iter().map(|(id, p)| PoseEntry { id, x: p.x, y: p.y, layer: p.layer, yaw: p.yaw }).collect()
}

/// Parses and fully validates an instance, including static stability of
/// both arrangements.
pub fn load_instance(bytes: &[u8]) -> Result<Instance, SceneError> {
    let file: InstanceFile = serde_json::from_slice(bytes).map_err(|e| SceneError::Schema(e.to_string()))?;
    check_version(file.format_version)?;
    let mut objects = Vec::with_capacity(file.objects.len());
    for o in &file.objects {
        let pts = o.base.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        let base = Polygon::new(pts).map_err(|source| SceneError::Geometry { id: o.id, source })?;
        objects.push(ObjectShape { id: o.id, base, density: o.density });
    }
    objects.sort_by_key(|o| o.id);
    let inst = Instance {
        height: file.height,
        friction: file.friction,
        gravity: file.gravity,
        objects,
        start: arrangement_from(&file.start, "start")?,
        goal: arrangement_from(&file.goal, "goal")?,
        tol: Tolerances::default(),
    };
    inst.check_structure()?;
    inst.check_stable()?;
    Ok(inst)
}

pub fn save_instance(inst: &Instance) -> Vec<u8> {
    let file = InstanceFile {
        format_version: FORMAT_VERSION,
        height: inst.height,
        friction: inst.friction,
        gravity: inst.gravity,
        objects: inst
            .objects
            .iter()
            .map(|o| ObjectEntry {
                id: o.id,
                base: o.base.vertices().iter().map(|p| [p.x, p.y]).collect(),
                density: o.density,
            })
            .collect(),
        start: entries_from(&inst.start),
        goal: entries_from(&inst.goal),
    };
    serde_json::to_vec_pretty(&file).expect("instance serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct ActionEntry {
    object: u32,
    from: Source,
    to: Destination,
}

/// Search statistics attached to a saved plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsBlock {
    pub status: String,
    pub expanded: u64,
    #[serde(default)]
    pub generated: u64,
    #[serde(default)]
    pub stability_checks: u64,
    pub bans: u64,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlanFile {
    #[serde(default = "default_version")]
    format_version: u32,
    cost: usize,
    actions: Vec<ActionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stats: Option<StatsBlock>,
}

/// A plan together with optional solver statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDocument {
    pub plan: Plan,
    pub stats: Option<StatsBlock>,
}

pub fn load_plan(bytes: &[u8]) -> Result<PlanDocument, SceneError> {
    let file: PlanFile = serde_json::from_slice(bytes).map_err(|e| SceneError::Schema(e.to_string()))?;
    check_version(file.format_version)?;
    let actions: Vec<Action> =
        file.actions.iter().map(|a| Action { object: a.object, from: a.from, to: a.to }).collect();
    if let Some(k) = actions.iter().position(|a| !a.is_legal()) {
        return Err(SceneError::Schema(format!("action {k} moves buffer -> buffer")));
    }
    if file.cost != actions.len() {
        return Err(SceneError::Schema(format!(
            "cost {} does not match {} actions",
            file.cost,
            actions.len()
        )));
    }
    Ok(PlanDocument { plan: Plan::new(actions), stats: file.stats })
}

pub fn save_plan(doc: &PlanDocument) -> Vec<u8> {
    let file = PlanFile {
        format_version: FORMAT_VERSION,
        cost: doc.plan.cost(),
        actions: doc
            .plan
            .actions
            .iter()
            .map(|a| ActionEntry { object: a.object, from: a.from, to: a.to })
            .collect(),
        stats: doc.stats.clone(),
    };
    serde_json::to_vec_pretty(&file).expect("plan serializes")
}
