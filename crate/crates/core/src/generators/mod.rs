//! Seeded benchmark scenarios: 2D pyramids, 3D pyramids and random piles of
//! unit cubes, each with an in-place or a disjoint goal.

pub mod rng;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Polygon, Pose};
use crate::scene::{Arrangement, Instance, ObjectId, ObjectShape, SceneError, Tolerances};
use crate::stability::{is_stable_with, StabilityConfig};
use rng::SplitMix;

/// Cube placement attempts allowed per random-pile arrangement.
pub const MAX_ATTEMPTS: usize = 1000;
pub const DEFAULT_REGION: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "pyramid2d")]
    Pyramid2d,
    #[serde(rename = "pyramid3d")]
    Pyramid3d,
    #[serde(rename = "random")]
    RandomPile,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Pyramid2d => "pyramid2d",
            Scenario::Pyramid3d => "pyramid3d",
            Scenario::RandomPile => "random",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pyramid2d" => Ok(Scenario::Pyramid2d),
            "pyramid3d" => Ok(Scenario::Pyramid3d),
            "random" | "random_pile" | "random-pile" => Ok(Scenario::RandomPile),
            other => Err(format!("unknown scenario '{other}' (expected pyramid2d, pyramid3d or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "in-place")]
    InPlace,
    #[serde(rename = "disjoint")]
    Disjoint,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::InPlace => "in-place",
            Mode::Disjoint => "disjoint",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "in-place" | "in_place" | "inplace" => Ok(Mode::InPlace),
            "disjoint" => Ok(Mode::Disjoint),
            other => Err(format!("unknown mode '{other}' (expected in-place or disjoint)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub scenario: Scenario,
    /// Layer count for pyramids, object count for random piles.
    pub size: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Side of the square spawn region of random piles.
    pub region: f64,
}

impl GenSpec {
    pub fn new(scenario: Scenario, size: usize, mode: Mode, seed: u64) -> Self {
        Self { scenario, size, mode, seed, region: DEFAULT_REGION }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("size must be at least 1")]
    ZeroSize,
    #[error("region side must exceed 1, got {0}")]
    Region(f64),
    #[error("no stable pile of {n} cubes after {attempts} placement attempts")]
    Exhausted { n: usize, attempts: usize },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    match spec.scenario {
        Scenario::Pyramid2d => gen_pyramid2d(spec.size, spec.mode, spec.seed),
        Scenario::Pyramid3d => gen_pyramid3d(spec.size, spec.mode, spec.seed),
        Scenario::RandomPile => gen_random_pile(spec.size, spec.mode, spec.seed, spec.region),
    }
}

/// Object count of a 2D pyramid with `m` layers.
pub fn pyramid2d_count(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Object count of a 3D pyramid with `m` layers.
pub fn pyramid3d_count(m: usize) -> usize {
    m * (m + 1) * (2 * m + 1) / 6
}

fn cubes(n: usize) -> Vec<ObjectShape> {
    (1..=n as ObjectId).map(|id| ObjectShape::new(id, Polygon::unit_square())).collect()
}

/// Start fills `slots` in order; the goal fills the same slots (shifted
/// when disjoint) with uniformly shuffled labels.
fn relabel(slots: &[(f64, f64, u32)], mode: Mode, width: f64, seed: u64) -> Result<Instance, GenError> {
    let n = slots.len();
    let mut rng = SplitMix::new(seed);
    let mut labels: Vec<ObjectId> = (1..=n as ObjectId).collect();
    rng.shuffle(&mut labels);
    let shift = match mode {
        Mode::InPlace => 0.0,
        Mode::Disjoint => width + 2.0,
    };
    let start: Arrangement =
        slots.iter().enumerate().map(|(k, &(x, y, l))| (k as ObjectId + 1, Pose::at(x, y, l))).collect();
    let goal: Arrangement =
        slots.iter().zip(&labels).map(|(&(x, y, l), &id)| (id, Pose::at(x + shift, y, l))).collect();
    Ok(Instance::new(1.0, cubes(n), start, goal)?)
}

/// Layer `i` (0-based) holds `m - i` cubes in a row, offset by half a cube.
pub fn gen_pyramid2d(m: usize, mode: Mode, seed: u64) -> Result<Instance, GenError> {
    if m == 0 {
        return Err(GenError::ZeroSize);
    }
    let slots: Vec<(f64, f64, u32)> = (0..m)
        .flat_map(|l| (0..m - l).map(move |k| (0.5 * l as f64 + k as f64, 0.0, l as u32)))
        .collect();
    relabel(&slots, mode, m as f64, seed)
}

/// Layer `i` (0-based) holds a `(m - i)²` grid, offset by half a cube in x and y.
pub fn gen_pyramid3d(m: usize, mode: Mode, seed: u64) -> Result<Instance, GenError> {
    if m == 0 {
        return Err(GenError::ZeroSize);
    }
    let slots: Vec<(f64, f64, u32)> = (0..m)
        .flat_map(|l| {
            let side = m - l;
            let off = 0.5 * l as f64;
            (0..side).flat_map(move |a| (0..side).map(move |b| (off + a as f64, off + b as f64, l as u32)))
        })
        .collect();
    relabel(&slots, mode, m as f64, seed)
}

fn scratch_instance(n: usize, arr: &Arrangement) -> Instance {
    Instance {
        height: 1.0,
        friction: crate::scene::DEFAULT_FRICTION,
        gravity: crate::scene::DEFAULT_GRAVITY,
        objects: cubes(n),
        start: arr.clone(),
        goal: arr.clone(),
        tol: Tolerances::default(),
    }
}

/// Drops cubes one at a time at uniform positions; a cube overlapping others
/// lands one layer above the highest of them. A cube that leaves the pile
/// unstable is resampled.
fn pile(rng: &mut SplitMix, n: usize, region: f64, shift: f64) -> Result<Arrangement, GenError> {
    let mut arr = Arrangement::new();
    let mut attempts = 0;
    let cfg = StabilityConfig::default();
    let tol = Tolerances::default().area;
    for id in 1..=n as ObjectId {
        loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(GenError::Exhausted { n, attempts: MAX_ATTEMPTS });
            }
            let x = shift + rng.uniform() * (region - 1.0);
            let y = rng.uniform() * (region - 1.0);
            let fp = Polygon::rectangle(x, y, 1.0, 1.0);
            let layer = arr
                .iter()
                .filter(|(_, p)| {
                    geometry::intersection_with_tolerance(&fp, &Polygon::rectangle(p.x, p.y, 1.0, 1.0), tol).is_some()
                })
                .map(|(_, p)| p.layer + 1)
                .max()
                .unwrap_or(0);
            arr.insert(id, Pose::at(x, y, layer));
            if is_stable_with(&scratch_instance(n, &arr), &arr, &cfg).stable {
                break;
            }
            arr.remove(id);
        }
    }
    Ok(arr)
}

/// Independent start and goal piles of `n` unit cubes in a `region`-sided square.
pub fn gen_random_pile(n: usize, mode: Mode, seed: u64, region: f64) -> Result<Instance, GenError> {
    if n == 0 {
        return Err(GenError::ZeroSize);
    }
    if !(region > 1.0) {
        return Err(GenError::Region(region));
    }
    let mut rng = SplitMix::new(seed);
    let start = pile(&mut rng, n, region, 0.0)?;
    let shift = match mode {
        Mode::InPlace => 0.0,
        Mode::Disjoint => region + 2.0,
    };
    let goal = pile(&mut rng, n, region, shift)?;
    Ok(Instance::new(1.0, cubes(n), start, goal)?)
}
