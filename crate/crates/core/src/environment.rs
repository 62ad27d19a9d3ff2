//! Simulated world: wall geometry, materials, robot mounting and routes.
//!
//! Scenario files are UTF-8 JSON with lengths in metres and angles in
//! degrees; angles are converted to radians on load. The in-memory
//! [`Scenario`] is immutable after load and safe to share across threads.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{degrees_preserving, wrap_angle, Pose, Vec2};

/// Schema version accepted by [`load_scenario`].
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Surface material: how much a radio bounce attenuates and whether the
/// LiDAR sees the surface at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Attenuation per bounce, dB. Valid range 0..=60.
    pub reflection_loss_db: f64,
    /// False for translucent surfaces (glass): LiDAR rays pass through.
    pub lidar_opaque: bool,
}

impl Material {
    pub fn new(name: &str, reflection_loss_db: f64, lidar_opaque: bool) -> Self {
        Material {
            name: name.to_string(),
            reflection_loss_db,
            lidar_opaque,
        }
    }
}

/// Default material table. Loss figures sit inside the 5-10 dB per-bounce
/// band typical for indoor surfaces at 60 GHz; the absorber swallows
/// everything it sees.
pub fn default_materials() -> Vec<Material> {
    vec![
        Material::new("brick", 7.0, true),
        Material::new("glass", 6.0, false),
        Material::new("metal", 5.0, true),
        Material::new("absorber", 60.0, true),
    ]
}

/// A wall is a 2D line segment with a resolved material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub a: Vec2,
    pub b: Vec2,
    pub material: Material,
}

impl WallSegment {
    pub fn new(a: Vec2, b: Vec2, material: Material) -> Self {
        WallSegment { a, b, material }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Mirror a point across the infinite line through the segment.
    pub fn mirror(&self, p: Vec2) -> Vec2 {
        let e = (self.b - self.a).normalized();
        let v = p - self.a;
        let along = e * v.dot(e);
        let perp = v - along;
        self.a + along - perp
    }
}

/// Sensor mounting geometry in the robot frame (x forward, y left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRig {
    pub lidar_offset: Vec2,
    pub initiator_offset: Vec2,
    pub responder_offset: Vec2,
    /// Shared boresight of both radios, radians relative to robot heading.
    pub array_boresight: f64,
    /// The absorber between the radios kills the direct path.
    pub direct_path_blocked: bool,
}

impl Default for RobotRig {
    fn default() -> Self {
        RobotRig {
            lidar_offset: Vec2::ZERO,
            initiator_offset: Vec2::new(0.0, 0.10),
            responder_offset: Vec2::new(0.0, -0.10),
            array_boresight: 0.0,
            direct_path_blocked: true,
        }
    }
}

/// One timed waypoint of the scripted route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutePoint {
    pub t: f64,
    pub pose: Pose,
}

/// A fully validated simulation world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub materials: Vec<Material>,
    pub walls: Vec<WallSegment>,
    pub rig: RobotRig,
    pub route: Vec<RoutePoint>,
    pub rng_seed: u64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported scenario schema version {0} (expected {SCENARIO_SCHEMA_VERSION})")]
    BadVersion(u32),
    #[error("wall {index} references undeclared material \"{name}\"")]
    UndeclaredMaterial { index: usize, name: String },
    #[error("material \"{0}\" declared more than once")]
    DuplicateMaterial(String),
    #[error("material \"{name}\" reflection_loss_db {value} outside [0, 60]")]
    LossOutOfRange { name: String, value: f64 },
    #[error("wall {0} has zero length")]
    DegenerateWall(usize),
    #[error("route times not strictly increasing at index {0}")]
    RouteNotMonotonic(usize),
    #[error("route is empty")]
    EmptyRoute,
    #[error("initiator and responder offsets coincide")]
    CoincidentRadios,
}

// ---------------------------------------------------------------------------
// File schema (degrees, material references by name)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    waveslam_scenario: u32,
    materials: Vec<Material>,
    walls: Vec<WallFile>,
    rig: RigFile,
    route: Vec<RouteFile>,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct WallFile {
    a: [f64; 2],
    b: [f64; 2],
    material: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RigFile {
    lidar_offset: [f64; 2],
    initiator_offset: [f64; 2],
    responder_offset: [f64; 2],
    array_boresight_deg: f64,
    #[serde(default = "default_true")]
    direct_path_blocked: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
struct RouteFile {
    t: f64,
    x: f64,
    y: f64,
    theta_deg: f64,
}

/// Load and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path)?;
    scenario_from_json(&text)
}

/// Parse scenario JSON (the file schema) into a validated [`Scenario`].
pub fn scenario_from_json(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.waveslam_scenario != SCENARIO_SCHEMA_VERSION {
        return Err(ScenarioError::BadVersion(file.waveslam_scenario));
    }

    for (i, m) in file.materials.iter().enumerate() {
        if file.materials[..i].iter().any(|other| other.name == m.name) {
            return Err(ScenarioError::DuplicateMaterial(m.name.clone()));
        }
        if !(0.0..=60.0).contains(&m.reflection_loss_db) {
            return Err(ScenarioError::LossOutOfRange {
                name: m.name.clone(),
                value: m.reflection_loss_db,
            });
        }
    }

    let mut walls = Vec::with_capacity(file.walls.len());
    for (i, w) in file.walls.iter().enumerate() {
        let material = file
            .materials
            .iter()
            .find(|m| m.name == w.material)
            .cloned()
            .ok_or_else(|| ScenarioError::UndeclaredMaterial {
                index: i,
                name: w.material.clone(),
            })?;
        let wall = WallSegment::new(
            Vec2::new(w.a[0], w.a[1]),
            Vec2::new(w.b[0], w.b[1]),
            material,
        );
        if wall.length() <= 0.0 {
            return Err(ScenarioError::DegenerateWall(i));
        }
        walls.push(wall);
    }

    if file.route.is_empty() {
        return Err(ScenarioError::EmptyRoute);
    }
    let mut route = Vec::with_capacity(file.route.len());
    let mut prev_t = f64::NEG_INFINITY;
    for (i, r) in file.route.iter().enumerate() {
        if r.t <= prev_t {
            return Err(ScenarioError::RouteNotMonotonic(i));
        }
        prev_t = r.t;
        route.push(RoutePoint {
            t: r.t,
            pose: Pose::new(r.x, r.y, r.theta_deg.to_radians()),
        });
    }

    let rig = RobotRig {
        lidar_offset: Vec2::new(file.rig.lidar_offset[0], file.rig.lidar_offset[1]),
        initiator_offset: Vec2::new(file.rig.initiator_offset[0], file.rig.initiator_offset[1]),
        responder_offset: Vec2::new(file.rig.responder_offset[0], file.rig.responder_offset[1]),
        array_boresight: wrap_angle(file.rig.array_boresight_deg.to_radians()),
        direct_path_blocked: file.rig.direct_path_blocked,
    };
    if rig.initiator_offset == rig.responder_offset {
        return Err(ScenarioError::CoincidentRadios);
    }

    Ok(Scenario {
        materials: file.materials,
        walls,
        rig,
        route,
        rng_seed: file.seed,
    })
}

/// Serialize a scenario back into the file schema (degrees in angle fields).
pub fn scenario_to_json(scenario: &Scenario) -> String {
    let file = ScenarioFile {
        waveslam_scenario: SCENARIO_SCHEMA_VERSION,
        materials: scenario.materials.clone(),
        walls: scenario
            .walls
            .iter()
            .map(|w| WallFile {
                a: [w.a.x, w.a.y],
                b: [w.b.x, w.b.y],
                material: w.material.name.clone(),
            })
            .collect(),
        rig: RigFile {
            lidar_offset: [scenario.rig.lidar_offset.x, scenario.rig.lidar_offset.y],
            initiator_offset: [
                scenario.rig.initiator_offset.x,
                scenario.rig.initiator_offset.y,
            ],
            responder_offset: [
                scenario.rig.responder_offset.x,
                scenario.rig.responder_offset.y,
            ],
            array_boresight_deg: degrees_preserving(scenario.rig.array_boresight),
            direct_path_blocked: scenario.rig.direct_path_blocked,
        },
        route: scenario
            .route
            .iter()
            .map(|r| RouteFile {
                t: r.t,
                x: r.pose.x,
                y: r.pose.y,
                theta_deg: degrees_preserving(r.pose.theta),
            })
            .collect(),
        seed: scenario.rng_seed,
    };
    let mut out = serde_json::to_string_pretty(&file).expect("scenario serialization");
    out.push('\n');
    out
}

impl Scenario {
    /// Axis-aligned bounding box over all wall endpoints and route poses.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut take = |p: Vec2| {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        };
        for w in &self.walls {
            take(w.a);
            take(w.b);
        }
        for r in &self.route {
            take(r.pose.xy());
        }
        (min, max)
    }
}

// ---------------------------------------------------------------------------
// Ray casting
// ---------------------------------------------------------------------------

/// Nearest wall intersection of a ray.
#[derive(Debug, Clone, Copy)]
pub struct RayHit<'a> {
    pub point: Vec2,
    pub distance: f64,
    pub wall: &'a WallSegment,
}

const RAY_T_MIN: f64 = 1e-9;

/// Cast a ray against every wall passing `opaque`, returning the nearest
/// hit. `direction` must be normalized. No hit is a value, not an error.
pub fn raycast<'a>(
    origin: Vec2,
    direction: Vec2,
    walls: &'a [WallSegment],
    opaque: impl Fn(&Material) -> bool,
) -> Option<RayHit<'a>> {
    debug_assert!((direction.norm() - 1.0).abs() < 1e-6, "direction not unit");
    let mut best: Option<RayHit<'a>> = None;
    for wall in walls {
        if !opaque(&wall.material) {
            continue;
        }
        if let Some((t, _s)) = ray_segment_intersection(origin, direction, wall.a, wall.b) {
            if t > RAY_T_MIN && best.map_or(true, |b| t < b.distance) {
                best = Some(RayHit {
                    point: origin + direction * t,
                    distance: t,
                    wall,
                });
            }
        }
    }
    best
}

/// Ray/segment intersection: returns `(t, s)` with the hit at
/// `origin + t*dir = a + s*(b-a)`, `t > 0`, `s` within `[0, 1]`.
/// Parallel (including collinear) rays yield no intersection.
pub fn ray_segment_intersection(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-14 {
        return None;
    }
    let ao = a - origin;
    let t = ao.cross(e) / denom;
    let s = ao.cross(dir) / denom;
    if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
        Some((t, s.clamp(0.0, 1.0)))
    } else {
        None
    }
}
