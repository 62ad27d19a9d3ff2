//! Narrowband CSI synthesis on a K x J uniform rectangular array.
//!
//! Each traced path contributes `gain * a(elevation, azimuth)` where `a` is
//! the sine-space steering vector; complex white Gaussian noise is added on
//! top. Path delay deliberately does not enter the snapshot: ranging is the
//! FTM module's job, angles are this one's.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::raytrace::{RayPath, DEFAULT_CARRIER_HZ};

/// Uniform rectangular array: K elements along Y, J along Z, half-wavelength
/// spacing by default.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArrayGeometry {
    pub k_elems: usize,
    pub j_elems: usize,
    pub spacing_wavelengths: f64,
    pub carrier_hz: f64,
}

impl ArrayGeometry {
    pub fn new(k_elems: usize, j_elems: usize) -> Self {
        ArrayGeometry {
            k_elems,
            j_elems,
            spacing_wavelengths: 0.5,
            carrier_hz: DEFAULT_CARRIER_HZ,
        }
    }

    fn validate(&self) {
        assert!(self.k_elems >= 2 && self.j_elems >= 2, "array must be >= 2x2");
        assert!(
            self.spacing_wavelengths > 0.0 && self.spacing_wavelengths <= 1.0,
            "spacing must be in (0, 1]"
        );
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry::new(6, 6)
    }
}

/// One complex channel snapshot over the array.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiSnapshot {
    /// K x J complex channel matrix, row index k, column index j.
    pub h: Array2<Complex64>,
    /// Per-element complex noise std (E[|w|^2] = sigma^2).
    pub noise_sigma: f64,
    pub geometry: ArrayGeometry,
}

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("angles outside sine space: sin^2(el) + sin^2(az) = {0:.6} > 1")]
    OutOfSineSpace(f64),
    #[error("CSI payload truncated or malformed ({0})")]
    BadPayload(String),
}

/// Paths skipped during synthesis, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthDiagnostics {
    /// Azimuth beyond the +-90 deg array field of view.
    pub dropped_out_of_fov: usize,
    /// Jittered elevation pushed the pair outside sine space.
    pub dropped_out_of_sine_space: usize,
}

fn sine_space_excess(elevation: f64, azimuth: f64) -> f64 {
    elevation.sin().powi(2) + azimuth.sin().powi(2)
}

/// Unit-modulus array response for a plane wave from `(elevation, azimuth)`.
///
/// Element (k, j), indices centred on the array midpoint:
/// `exp(i * 2*pi * spacing * (k_c*sin(azimuth) + j_c*sin(elevation)))`.
pub fn steering_vector(
    geometry: &ArrayGeometry,
    elevation: f64,
    azimuth: f64,
) -> Result<Array2<Complex64>, PhyError> {
    geometry.validate();
    let excess = sine_space_excess(elevation, azimuth);
    if excess > 1.0 + 1e-12 {
        return Err(PhyError::OutOfSineSpace(excess));
    }
    let (k_n, j_n) = (geometry.k_elems, geometry.j_elems);
    let k_mid = (k_n as f64 - 1.0) / 2.0;
    let j_mid = (j_n as f64 - 1.0) / 2.0;
    let c = std::f64::consts::TAU * geometry.spacing_wavelengths;
    let sin_az = azimuth.sin();
    let sin_el = elevation.sin();
    Ok(Array2::from_shape_fn((k_n, j_n), |(k, j)| {
        let phase = c * ((k as f64 - k_mid) * sin_az + (j as f64 - j_mid) * sin_el);
        Complex64::from_polar(1.0, phase)
    }))
}

/// Superpose the paths on the array and add white complex Gaussian noise.
/// Deterministic for a given rng state; draw order is path order, then
/// noise in row-major element order.
pub fn synthesize_csi(
    paths: &[RayPath],
    geometry: &ArrayGeometry,
    noise_sigma: f64,
    elevation_jitter_sigma: f64,
    rng: &mut impl Rng,
) -> (CsiSnapshot, SynthDiagnostics) {
    geometry.validate();
    let mut h = Array2::from_elem((geometry.k_elems, geometry.j_elems), Complex64::new(0.0, 0.0));
    let mut diag = SynthDiagnostics::default();

    let jitter = if elevation_jitter_sigma > 0.0 {
        Some(Normal::new(0.0, elevation_jitter_sigma).expect("valid jitter sigma"))
    } else {
        None
    };

    for path in paths {
        if path.azimuth.abs() > std::f64::consts::FRAC_PI_2 {
            diag.dropped_out_of_fov += 1;
            continue;
        }
        let elevation = match &jitter {
            Some(dist) => path.elevation + dist.sample(rng),
            None => path.elevation,
        };
        match steering_vector(geometry, elevation, path.azimuth) {
            Ok(a) => h = h + a.mapv(|v| v * path.gain),
            Err(_) => diag.dropped_out_of_sine_space += 1,
        }
    }

    if noise_sigma > 0.0 {
        // per-component std sigma/sqrt(2) so E[|w|^2] = sigma^2
        let comp = Normal::new(0.0, noise_sigma / std::f64::consts::SQRT_2)
            .expect("valid noise sigma");
        for v in h.iter_mut() {
            let re = comp.sample(rng);
            let im = comp.sample(rng);
            *v += Complex64::new(re, im);
        }
    }

    (
        CsiSnapshot {
            h,
            noise_sigma,
            geometry: *geometry,
        },
        diag,
    )
}

// ---------------------------------------------------------------------------
// Binary log payload
// ---------------------------------------------------------------------------

/// Pack a snapshot for the sensor log: u32 K, u32 J, f64 timestamp, then
/// row-major interleaved re/im f64, all little-endian.
pub fn encode_csi_payload(snapshot: &CsiSnapshot, timestamp: f64) -> Vec<u8> {
    let (k_n, j_n) = snapshot.h.dim();
    let mut out = Vec::with_capacity(8 + 8 + 16 * k_n * j_n);
    out.extend_from_slice(&(k_n as u32).to_le_bytes());
    out.extend_from_slice(&(j_n as u32).to_le_bytes());
    out.extend_from_slice(&timestamp.to_le_bytes());
    for v in snapshot.h.iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_csi_payload`]; returns the matrix and the timestamp.
pub fn decode_csi_payload(bytes: &[u8]) -> Result<(Array2<Complex64>, f64), PhyError> {
    if bytes.len() < 16 {
        return Err(PhyError::BadPayload("shorter than header".into()));
    }
    let k_n = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let j_n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let timestamp = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let need = 16 + 16 * k_n * j_n;
    if bytes.len() != need {
        return Err(PhyError::BadPayload(format!(
            "expected {need} bytes for {k_n}x{j_n}, got {}",
            bytes.len()
        )));
    }
    let mut values = Vec::with_capacity(k_n * j_n);
    for chunk in bytes[16..].chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    let h = Array2::from_shape_vec((k_n, j_n), values)
        .map_err(|e| PhyError::BadPayload(e.to_string()))?;
    Ok((h, timestamp))
}

pub fn payload_to_base64(bytes: &[u8]) -> String {
    BASE64.encode(bytes)
}

pub fn payload_from_base64(text: &str) -> Result<Vec<u8>, PhyError> {
    BASE64
        .decode(text)
        .map_err(|e| PhyError::BadPayload(e.to_string()))
}
