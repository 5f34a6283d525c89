#![allow(dead_code)]

use mort_core::objset::ObjSet;
use mort_core::relations::Relations;
use mort_core::scene::{Arrangement, Instance, ObjectId, ObjectShape};
use mort_core::stability::{first_unstable_step, StabilityConfig};
use mort_core::{Polygon, Pose};

pub fn cubes(n: u32) -> Vec<ObjectShape> {
    (1..=n).map(|id| ObjectShape::new(id, Polygon::unit_square())).collect()
}

/// Row arrangement: `(id, x, layer)` cubes at y = 0.
pub fn row(poses: &[(ObjectId, f64, u32)]) -> Arrangement {
    poses.iter().map(|&(id, x, layer)| (id, Pose::at(x, 0.0, layer))).collect()
}

pub fn cube_instance(start: &[(ObjectId, f64, u32)], goal: &[(ObjectId, f64, u32)]) -> Instance {
    Instance::new(1.0, cubes(start.len() as u32), row(start), row(goal)).unwrap()
}

pub fn swap() -> Instance {
    cube_instance(&[(1, 0.0, 0), (2, 1.0, 0)], &[(1, 1.0, 0), (2, 0.0, 0)])
}

/// Object 1 stays put. Block 3 overhangs 1 and leans sideways on 4, so 4
/// cannot leave while 3 is in place; ignoring that gives a 5-move plan.
pub fn leaning_stack() -> Instance {
    cube_instance(
        &[(1, 0.5, 0), (2, 2.5, 0), (3, 1.2, 1), (4, 2.2, 1)],
        &[(1, 0.5, 0), (2, 1.2, 1), (3, 1.9, 0), (4, 2.3, 1)],
    )
}

/// Same four blocks, solvable with a single buffer.
pub fn one_buffer_stack() -> Instance {
    cube_instance(
        &[(1, 0.5, 0), (2, 2.0, 1), (3, 0.4, 1), (4, 2.3, 0)],
        &[(1, 0.5, 0), (2, 1.5, 0), (3, 0.3, 1), (4, 2.6, 0)],
    )
}

/// Two top blocks each overhang their pillar and hold each other up by
/// friction; the goal swaps them.
pub fn friction_arch() -> Instance {
    cube_instance(
        &[(1, 0.0, 0), (2, 0.75, 1), (3, 1.75, 1), (4, 2.5, 0)],
        &[(1, 0.0, 0), (2, 1.75, 1), (3, 0.75, 1), (4, 2.5, 0)],
    )
}

/// Six-cube pyramid relabeling where greedy needs 11 moves and the optimum
/// 10.
pub fn pyramid_relabel() -> Instance {
    cube_instance(
        &[(1, 0.0, 0), (2, 1.0, 0), (3, 2.0, 0), (4, 0.5, 1), (5, 1.5, 1), (6, 1.0, 2)],
        &[(6, 0.0, 0), (3, 1.0, 0), (1, 2.0, 0), (2, 0.5, 1), (5, 1.5, 1), (4, 1.0, 2)],
    )
}

/// Seed of the generated 3-layer pyramid used as the greedy/optimal gap case.
pub const GAP_SEED: u64 = 8;

/// Every legal removal order of the movable objects, starting from `removed`,
/// with its cost as the sum of per-removal move costs.
pub fn all_orders(rel: &Relations, removed: ObjSet) -> Vec<(u32, Vec<ObjectId>)> {
    fn go(rel: &Relations, removed: ObjSet, cost: u32, prefix: &mut Vec<ObjectId>, out: &mut Vec<(u32, Vec<ObjectId>)>) {
        let left = rel.movable().difference(removed);
        if left.is_empty() {
            out.push((cost, prefix.clone()));
            return;
        }
        for i in left.iter() {
            if rel.removable(i, removed) {
                prefix.push(i);
                go(rel, removed.with(i), cost + rel.move_cost(i, removed), prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(rel, removed, 0, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive minimum over legal removal orders. With `stability`, an order
/// counts only if replaying it never leaves an unstable arrangement.
/// Returns the cost and a witness order.
pub fn brute_force(inst: &Instance, rel: &Relations, stability: Option<&StabilityConfig>) -> Option<(u32, Vec<ObjectId>)> {
    let mut orders = all_orders(rel, ObjSet::EMPTY);
    orders.sort();
    orders.into_iter().find(|(_, order)| match stability {
        None => true,
        Some(cfg) => first_unstable_step(inst, order, rel, cfg).unwrap().is_none(),
    })
}

/// Cheapest completion from `removed`, ignoring stability.
pub fn remaining_min(rel: &Relations, removed: ObjSet) -> Option<u32> {
    all_orders(rel, removed).into_iter().map(|(c, _)| c).min()
}
