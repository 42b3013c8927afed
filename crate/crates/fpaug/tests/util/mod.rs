//! Shared fixtures: synthetic fingerprint worlds rendered into datasets.

#![allow(dead_code)]

pub mod gp;

use fpaug::dataset::{Dataset, FingerprintRecord};
use fpaug_refimpl::synthetic::{SyntheticPoint, SyntheticWorld};
use fpaug_refimpl::{RefKernel, SyntheticConfig};

/// dBm quantization used when a synthetic world becomes survey records.
pub fn quantize_dbm(v: f64) -> i16 {
    v.round_ties_even().clamp(-104.0, 0.0) as i16
}

pub fn ap_ids(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("WAP{i:03}")).collect()
}

pub fn record_at(point: &SyntheticPoint, building: i32, rssi: Vec<Option<i16>>) -> FingerprintRecord {
    FingerprintRecord {
        rssi,
        longitude: point.longitude,
        latitude: point.latitude,
        floor: point.floor,
        building,
        space_id: "1".into(),
        relative_position: "1".into(),
        user_id: "1".into(),
        phone_id: "1".into(),
        timestamp: "100".into(),
    }
}

/// Render the world's observed (noisy) values into a dataset, keeping only
/// the points `keep` accepts.
pub fn world_to_dataset(
    world: &SyntheticWorld,
    keep: impl Fn(usize, &SyntheticPoint) -> bool,
) -> Dataset {
    let m = world.config.n_aps;
    let records = world
        .points
        .iter()
        .enumerate()
        .filter(|(i, p)| keep(*i, p))
        .map(|(i, p)| {
            let rssi = world.observed[i].iter().map(|&v| Some(quantize_dbm(v))).collect();
            record_at(p, world.config.building, rssi)
        })
        .collect();
    Dataset { ap_ids: ap_ids(m), records }
}

/// Correlated output covariance with the given diagonal power and
/// cross-output correlation.
pub fn coreg(m: usize, diag: f64, rho: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { diag } else { rho * diag }).collect())
        .collect()
}

/// One-floor 8x8 world for the interpolation-oracle tests.
pub fn one_floor_world(seed: u64) -> SyntheticWorld {
    fpaug_refimpl::generate(&SyntheticConfig {
        nx: 8,
        ny: 8,
        spacing: 5.0,
        origin: (0.0, 0.0),
        floors: vec![0],
        building: 0,
        n_aps: 4,
        kernel: RefKernel::Matern52 { h: 12.0 },
        coreg: coreg(4, 120.0, 0.6),
        noise_sd: 0.5,
        mean_dbm: -65.0,
        floor_height: 4.0,
        seed,
    })
}

/// Three-floor world with strong cross-floor correlation (length-scale far
/// above the 4 m floor height) for the sparse-floor benefit scenario.
pub fn three_floor_world(seed: u64) -> SyntheticWorld {
    fpaug_refimpl::generate(&SyntheticConfig {
        nx: 6,
        ny: 6,
        spacing: 5.0,
        origin: (0.0, 0.0),
        floors: vec![0, 1, 2],
        building: 0,
        n_aps: 4,
        kernel: RefKernel::Matern52 { h: 14.0 },
        coreg: coreg(4, 120.0, 0.6),
        noise_sd: 0.5,
        mean_dbm: -65.0,
        floor_height: 4.0,
        seed,
    })
}

/// The sparse middle floor keeps only its four corners.
pub fn sparse_floor_keep(point: &SyntheticPoint, nx: usize, ny: usize) -> bool {
    if point.floor != 1 {
        return true;
    }
    (point.grid_ix == 0 || point.grid_ix == nx - 1)
        && (point.grid_iy == 0 || point.grid_iy == ny - 1)
}
