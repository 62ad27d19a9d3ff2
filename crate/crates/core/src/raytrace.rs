//! Specular multipath tracing between the two radios by the image method.
//!
//! Mirrors the initiator across every ordered wall sequence up to the
//! configured bounce count, walks the bounce points back from the responder,
//! and occlusion-tests every leg against every wall. Output paths carry the
//! complex gain, arrival angles and delay that feed CSI synthesis and FTM
//! timing.

use num_complex::Complex64;

use crate::environment::{ray_segment_intersection, WallSegment};
use crate::geom::{wrap_angle, Vec2};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// 802.11ad channel 2 centre frequency.
pub const DEFAULT_CARRIER_HZ: f64 = 60.48e9;

/// One propagation path between initiator and responder.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    /// Complex linear gain: free-space factor times per-bounce losses,
    /// phase `-2*pi*length/lambda`.
    pub gain: Complex64,
    /// Elevation at the responder, radians. Identically zero in the 2D
    /// world; jitter is injected downstream.
    pub elevation: f64,
    /// Azimuth at the responder relative to the array boresight, `(-pi, pi]`.
    pub azimuth: f64,
    /// Total path length over the speed of light, seconds.
    pub delay: f64,
    /// Reflection count.
    pub order: usize,
    /// Launch point, bounce point(s), arrival point.
    pub vertices: Vec<Vec2>,
}

impl RayPath {
    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }

    pub fn gain_db(&self) -> f64 {
        20.0 * self.gain.norm().log10()
    }

    /// World bearing of the first leg leaving the initiator.
    pub fn departure_bearing(&self) -> f64 {
        (self.vertices[1] - self.vertices[0]).angle()
    }

    /// World bearing from the responder back toward the last bounce
    /// (or the initiator for the direct path).
    pub fn arrival_bearing(&self) -> f64 {
        let n = self.vertices.len();
        (self.vertices[n - 2] - self.vertices[n - 1]).angle()
    }
}

/// Tracing knobs. `max_order` must be in 1..=3.
#[derive(Debug, Clone)]
pub struct TraceConfig {
    pub max_order: usize,
    /// Include the order-0 initiator->responder path. Off by default: the
    /// absorber between the radios blocks it.
    pub include_direct: bool,
    pub carrier_hz: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            max_order: 2,
            include_direct: false,
            carrier_hz: DEFAULT_CARRIER_HZ,
        }
    }
}

const OCCLUSION_EPS: f64 = 1e-9;

/// All geometrically valid specular paths up to `cfg.max_order` bounces,
/// sorted by descending gain magnitude. An empty list is a value.
pub fn trace_paths(
    initiator: Vec2,
    responder: Vec2,
    responder_boresight: f64,
    walls: &[WallSegment],
    cfg: &TraceConfig,
) -> Vec<RayPath> {
    assert!(
        (1..=3).contains(&cfg.max_order),
        "max_order must be in 1..=3"
    );
    assert!(
        (initiator - responder).norm() > 0.0,
        "initiator and responder coincide"
    );

    let lambda = SPEED_OF_LIGHT / cfg.carrier_hz;
    let mut paths = Vec::new();

    if cfg.include_direct {
        if let Some(path) = build_path(initiator, responder, &[], walls, responder_boresight, lambda)
        {
            paths.push(path);
        }
    }

    let mut sequence = Vec::with_capacity(cfg.max_order);
    enumerate_sequences(
        walls.len(),
        cfg.max_order,
        &mut sequence,
        &mut |seq: &[usize]| {
            if let Some(path) =
                build_path(initiator, responder, seq, walls, responder_boresight, lambda)
            {
                paths.push(path);
            }
        },
    );

    paths.sort_by(|a, b| {
        b.gain
            .norm()
            .partial_cmp(&a.gain.norm())
            .unwrap()
            .then(a.delay.partial_cmp(&b.delay).unwrap())
    });
    paths
}

fn enumerate_sequences(
    wall_count: usize,
    max_order: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if !current.is_empty() {
        visit(current);
    }
    if current.len() == max_order {
        return;
    }
    for w in 0..wall_count {
        // consecutive bounces off the same flat wall are impossible
        if current.last() == Some(&w) {
            continue;
        }
        current.push(w);
        enumerate_sequences(wall_count, max_order, current, visit);
        current.pop();
    }
}

/// Attempt the specular path bouncing off `sequence` in order; returns the
/// validated path or None.
fn build_path(
    initiator: Vec2,
    responder: Vec2,
    sequence: &[usize],
    walls: &[WallSegment],
    responder_boresight: f64,
    lambda: f64,
) -> Option<RayPath> {
    // forward chain of images of the initiator
    let mut images = Vec::with_capacity(sequence.len() + 1);
    images.push(initiator);
    for &wi in sequence {
        let prev = *images.last().unwrap();
        images.push(walls[wi].mirror(prev));
    }

    // walk bounce points backward from the responder
    let mut bounce_rev = Vec::with_capacity(sequence.len());
    let mut target = responder;
    for (k, &wi) in sequence.iter().enumerate().rev() {
        let image = images[k + 1];
        let seg = target - image;
        let len = seg.norm();
        if len < 1e-12 {
            return None;
        }
        let dir = seg * (1.0 / len);
        let (t, _s) = ray_segment_intersection(image, dir, walls[wi].a, walls[wi].b)?;
        // the bounce must sit strictly between image and target
        if t <= OCCLUSION_EPS * len.max(1.0) || t >= len * (1.0 - 1e-12) {
            return None;
        }
        let point = image + dir * t;
        bounce_rev.push(point);
        target = point;
    }

    let mut vertices = Vec::with_capacity(sequence.len() + 2);
    vertices.push(initiator);
    vertices.extend(bounce_rev.iter().rev());
    vertices.push(responder);

    // occlusion: every leg must be clear of every wall except at its own ends
    for leg in vertices.windows(2) {
        if leg_blocked(leg[0], leg[1], walls) {
            return None;
        }
    }

    let length: f64 = vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    if length < 1e-12 {
        return None;
    }

    let loss_linear: f64 = sequence
        .iter()
        .map(|&wi| 10f64.powf(-walls[wi].material.reflection_loss_db / 20.0))
        .product();
    let magnitude = lambda / (4.0 * std::f64::consts::PI * length) * loss_linear;
    // wrap the electrical length before taking sin/cos to keep phase precise
    let phase = -std::f64::consts::TAU * (length / lambda).rem_euclid(1.0);
    let gain = Complex64::from_polar(magnitude, phase);

    let n = vertices.len();
    let arrival = (vertices[n - 2] - vertices[n - 1]).angle();
    let azimuth = wrap_angle(arrival - responder_boresight);

    Some(RayPath {
        gain,
        elevation: 0.0,
        azimuth,
        delay: length / SPEED_OF_LIGHT,
        order: sequence.len(),
        vertices,
    })
}

fn leg_blocked(from: Vec2, to: Vec2, walls: &[WallSegment]) -> bool {
    let seg = to - from;
    let len = seg.norm();
    let dir = seg * (1.0 / len);
    for wall in walls {
        if let Some((t, _s)) = ray_segment_intersection(from, dir, wall.a, wall.b) {
            let f = t / len;
            if f > OCCLUSION_EPS && f < 1.0 - OCCLUSION_EPS {
                return true;
            }
        }
    }
    false
}

/// Debug dump: one CSV row per path.
pub fn paths_to_csv(paths: &[RayPath]) -> String {
    let mut out = String::from("order,length_m,gain_db,azimuth_deg\n");
    for p in paths {
        out.push_str(&format!(
            "{},{:.6},{:.3},{:.4}\n",
            p.order,
            p.length(),
            p.gain_db(),
            p.azimuth.to_degrees()
        ));
    }
    out
}
