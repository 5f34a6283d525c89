//! Optimal multi-layer tabletop rearrangement.
//!
//! Objects are equal-height extrusions of convex bases stacked in layers. A
//! plan is a sequence of pick-n-places (start to goal, start to buffer, buffer
//! to goal) and every intermediate arrangement must be statically stable.

pub mod bench;
pub mod generators;
pub mod geometry;
pub mod objset;
pub mod par;
pub mod planner;
pub mod relations;
pub mod scene;
pub mod stability;

pub use geometry::{Point2, Polygon, Pose, Vec3};
pub use objset::ObjSet;
pub use relations::{build_relations, Relations};
pub use scene::{Action, Arrangement, Instance, ObjectId, ObjectShape, Plan};
pub use stability::{is_stable, StabilityConfig, StabilityVerdict};
pub use generators::{generate, GenSpec, Mode, Scenario};
pub use planner::{solve, solve_greedy, PlanResult, PlanStatus, PlannerConfig};
