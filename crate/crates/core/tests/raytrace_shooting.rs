//! Image-method / shooting equivalence.
//!
//! Brute-force oracle: launch 10^5 uniformly spaced rays from the initiator,
//! bounce them off the single wall, and bisect every bracketed sign change of
//! the signed miss distance at the responder. The oracle shares no code with
//! the image-method construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use waveslam_core::environment::{ray_segment_intersection, Material, WallSegment};
use waveslam_core::geom::Vec2;
use waveslam_core::raytrace::{trace_paths, TraceConfig};

const N_RAYS: usize = 100_000;

/// Signed perpendicular offset of the responder from the reflected ray, or
/// None when the ray misses the wall segment / reflects away from the
/// responder.
fn reflected_miss(
    initiator: Vec2,
    responder: Vec2,
    wall: &WallSegment,
    angle: f64,
) -> Option<(f64, Vec2)> {
    let dir = Vec2::from_angle(angle);
    let (t, _s) = ray_segment_intersection(initiator, dir, wall.a, wall.b)?;
    if t < 1e-9 {
        return None;
    }
    let hit = initiator + dir * t;
    // specular reflection of the direction about the wall tangent
    let tangent = (wall.b - wall.a).normalized();
    let along = tangent * dir.dot(tangent);
    let reflected = (along * 2.0 - dir).normalized();
    let to_responder = responder - hit;
    if reflected.dot(to_responder) <= 0.0 {
        return None;
    }
    Some((reflected.cross(to_responder), hit))
}

/// All order-1 bounce paths found by exhaustive angle sweep plus bisection.
/// Returns path lengths.
fn shooting_paths(initiator: Vec2, responder: Vec2, wall: &WallSegment) -> Vec<f64> {
    let step = std::f64::consts::TAU / N_RAYS as f64;
    let mut lengths = Vec::new();
    let mut prev: Option<(f64, f64)> = None; // (angle, signed miss)
    for i in 0..=N_RAYS {
        let angle = i as f64 * step;
        let cur = reflected_miss(initiator, responder, wall, angle).map(|(m, _)| (angle, m));
        if let (Some((a0, m0)), Some((a1, m1))) = (prev, cur) {
            if m0 == 0.0 || (m0 < 0.0) != (m1 < 0.0) {
                // bisect the bracket
                let (mut lo, mut hi) = (a0, a1);
                let mut mlo = m0;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    match reflected_miss(initiator, responder, wall, mid) {
                        Some((m, _)) => {
                            if (m < 0.0) == (mlo < 0.0) {
                                lo = mid;
                                mlo = m;
                            } else {
                                hi = mid;
                            }
                        }
                        None => break,
                    }
                }
                let root = 0.5 * (lo + hi);
                if let Some((m, hit)) = reflected_miss(initiator, responder, wall, root) {
                    let miss_dist = m.abs() / (responder - hit).norm().max(1e-12);
                    if miss_dist < 1e-7 {
                        lengths.push((hit - initiator).norm() + (responder - hit).norm());
                    }
                }
            }
        }
        prev = cur;
    }
    // dedupe roots found from adjacent brackets
    lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lengths.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    lengths
}

#[test]
fn image_method_matches_shooting_oracle_on_random_single_walls() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0001);
    let cfg = TraceConfig {
        max_order: 1,
        ..Default::default()
    };
    let mut nonempty = 0;
    for trial in 0..500 {
        let wall = WallSegment::new(
            Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)),
            Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)),
            Material::new("brick", 7.0, true),
        );
        if wall.length() < 0.5 {
            continue;
        }
        let initiator = Vec2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let responder = initiator
            + Vec2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        if (initiator - responder).norm() < 1e-3 {
            continue;
        }

        let traced = trace_paths(initiator, responder, 0.0, std::slice::from_ref(&wall), &cfg);
        let oracle = shooting_paths(initiator, responder, &wall);

        assert_eq!(
            traced.len(),
            oracle.len(),
            "trial {trial}: path count mismatch (image {} vs shooting {})",
            traced.len(),
            oracle.len()
        );
        let mut traced_lengths: Vec<f64> = traced.iter().map(|p| p.length()).collect();
        traced_lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in traced_lengths.iter().zip(oracle.iter()) {
            assert!(
                (a - b).abs() < 1e-6,
                "trial {trial}: length mismatch {a} vs {b}"
            );
        }
        if !traced.is_empty() {
            nonempty += 1;
        }
    }
    // the sweep must actually exercise reflecting geometry
    assert!(nonempty > 100, "only {nonempty} configs had paths");
}
