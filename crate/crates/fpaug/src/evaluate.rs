//! Desk-scale localization evaluation: a k-NN fingerprint localizer and the
//! building-hit / floor-hit / 3D-error metrics used to compare original and
//! augmented training sets.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetError, FingerprintRecord};
use crate::provenance::Provenance;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("results and truth differ in length: {results} vs {truth}")]
    LengthMismatch { results: usize, truth: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricOpts {
    pub k: usize,
    /// dBm substituted for not-detected entries in the RSSI-space metric
    /// only.
    pub fill_dbm: f64,
    pub floor_height: f64,
}

impl Default for MetricOpts {
    fn default() -> Self {
        MetricOpts { k: 3, fill_dbm: -105.0, floor_height: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedLocation {
    pub building: i32,
    pub floor: i32,
    pub longitude: f64,
    pub latitude: f64,
}

/// Single-query k-NN prediction: majority (building, floor) among the k
/// nearest fingerprints, coordinates from the centroid of the agreeing
/// neighbors. Ties break by smaller distance sum, then lower record index.
pub fn knn_localize(
    train: &Dataset,
    query: &FingerprintRecord,
    opts: &MetricOpts,
) -> Result<PredictedLocation, EvalError> {
    if train.records.is_empty() {
        return Err(EvalError::Input("empty training set".into()));
    }
    if query.rssi.len() != train.n_aps() {
        return Err(EvalError::Input(format!(
            "query has {} AP entries, training set has {}",
            query.rssi.len(),
            train.n_aps()
        )));
    }
    let k = opts.k.max(1).min(train.records.len());

    let qv: Vec<f64> = query.rssi.iter().map(|v| fill(v, opts.fill_dbm)).collect();
    let mut dists: Vec<(f64, usize)> = train
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let mut acc = 0.0;
            for (a, b) in rec.rssi.iter().zip(&qv) {
                let d = fill(a, opts.fill_dbm) - b;
                acc += d * d;
            }
            (acc.sqrt(), i)
        })
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let neighbors = &dists[..k];

    // group -> (count, distance sum, lowest index)
    let mut groups: BTreeMap<(i32, i32), (usize, f64, usize)> = BTreeMap::new();
    for &(d, i) in neighbors {
        let rec = &train.records[i];
        let e = groups.entry((rec.building, rec.floor)).or_insert((0, 0.0, i));
        e.0 += 1;
        e.1 += d;
        e.2 = e.2.min(i);
    }
    let (&(building, floor), _) = groups
        .iter()
        .max_by(|(_, a), (_, b)| {
            a.0.cmp(&b.0)
                .then(b.1.total_cmp(&a.1)) // smaller distance sum wins
                .then(b.2.cmp(&a.2)) // lower index wins
        })
        .expect("at least one neighbor group");

    let agreeing: Vec<&FingerprintRecord> = neighbors
        .iter()
        .map(|&(_, i)| &train.records[i])
        .filter(|r| r.building == building && r.floor == floor)
        .collect();
    let n = agreeing.len() as f64;
    Ok(PredictedLocation {
        building,
        floor,
        longitude: agreeing.iter().map(|r| r.longitude).sum::<f64>() / n,
        latitude: agreeing.iter().map(|r| r.latitude).sum::<f64>() / n,
    })
}

fn fill(v: &Option<i16>, fill_dbm: f64) -> f64 {
    v.map_or(fill_dbm, |x| x as f64)
}

/// Localize every query; order-preserving, fanned out across threads.
pub fn localize_all(
    train: &Dataset,
    queries: &[FingerprintRecord],
    opts: &MetricOpts,
) -> Result<Vec<PredictedLocation>, EvalError> {
    queries
        .par_iter()
        .map(|q| knn_localize(train, q, opts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub building_hit_pct: f64,
    pub floor_hit_pct: f64,
    pub mean_3d_error_m: f64,
}

/// Aggregate scores. A floor hit requires both building and floor to be
/// correct; the 3D error lifts floor indices to z = floor * floor_height.
pub fn score(
    results: &[PredictedLocation],
    truth: &[FingerprintRecord],
    floor_height: f64,
) -> Result<Metrics, EvalError> {
    if results.len() != truth.len() {
        return Err(EvalError::LengthMismatch { results: results.len(), truth: truth.len() });
    }
    if results.is_empty() {
        return Err(EvalError::Input("no queries to score".into()));
    }
    let mut building_hits = 0usize;
    let mut floor_hits = 0usize;
    let mut err_sum = 0.0;
    for (p, t) in results.iter().zip(truth) {
        if p.building == t.building {
            building_hits += 1;
            if p.floor == t.floor {
                floor_hits += 1;
            }
        }
        let dx = p.longitude - t.longitude;
        let dy = p.latitude - t.latitude;
        let dz = (p.floor - t.floor) as f64 * floor_height;
        err_sum += (dx * dx + dy * dy + dz * dz).sqrt();
    }
    let n = results.len() as f64;
    Ok(Metrics {
        building_hit_pct: 100.0 * building_hits as f64 / n,
        floor_hit_pct: 100.0 * floor_hits as f64 / n,
        mean_3d_error_m: err_sum / n,
    })
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub metrics: Metrics,
    pub config: MetricOpts,
    /// sha256 of the inputs plus any split descriptor, keyed by role.
    pub dataset_hashes: BTreeMap<String, String>,
    pub queries: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

/// Side-by-side comparison of evaluation runs over the same query set.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub columns: Vec<String>,
    pub building_hit_pct: Vec<f64>,
    pub floor_hit_pct: Vec<f64>,
    pub mean_3d_error_m: Vec<f64>,
    /// Deltas against the first (baseline) column.
    pub delta_building_hit_pct: Vec<f64>,
    pub delta_floor_hit_pct: Vec<f64>,
    pub delta_mean_3d_error_m: Vec<f64>,
}

pub fn compare_runs(runs: &[(String, EvaluationReport)]) -> Result<Comparison, EvalError> {
    if runs.len() < 2 {
        return Err(EvalError::Input("compare needs at least two reports".into()));
    }
    let base_hash = runs[0].1.dataset_hashes.get("test");
    for (name, report) in &runs[1..] {
        if report.dataset_hashes.get("test") != base_hash {
            return Err(EvalError::Input(format!(
                "report `{name}` was computed on a different query set"
            )));
        }
    }
    let pick = |f: fn(&Metrics) -> f64| -> Vec<f64> {
        runs.iter().map(|(_, r)| f(&r.metrics)).collect()
    };
    let building = pick(|m| m.building_hit_pct);
    let floor = pick(|m| m.floor_hit_pct);
    let err = pick(|m| m.mean_3d_error_m);
    let delta = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x - v[0]).collect() };
    Ok(Comparison {
        columns: runs.iter().map(|(n, _)| n.clone()).collect(),
        delta_building_hit_pct: delta(&building),
        delta_floor_hit_pct: delta(&floor),
        delta_mean_3d_error_m: delta(&err),
        building_hit_pct: building,
        floor_hit_pct: floor,
        mean_3d_error_m: err,
    })
}

/// Aligned text table, metrics as rows and runs as columns.
pub fn render_comparison(c: &Comparison) -> String {
    let cell = |i: usize, v: f64, d: f64| {
        if i == 0 {
            format!("{v:.2}")
        } else {
            format!("{v:.2} ({d:+.2})")
        }
    };
    let rows: Vec<(&str, Vec<String>)> = vec![
        (
            "Building hit rate [%]",
            c.building_hit_pct
                .iter()
                .zip(&c.delta_building_hit_pct)
                .enumerate()
                .map(|(i, (&v, &d))| cell(i, v, d))
                .collect(),
        ),
        (
            "Floor hit rate [%]",
            c.floor_hit_pct
                .iter()
                .zip(&c.delta_floor_hit_pct)
                .enumerate()
                .map(|(i, (&v, &d))| cell(i, v, d))
                .collect(),
        ),
        (
            "3D error [m]",
            c.mean_3d_error_m
                .iter()
                .zip(&c.delta_mean_3d_error_m)
                .enumerate()
                .map(|(i, (&v, &d))| cell(i, v, d))
                .collect(),
        ),
    ];
    // Each column is as wide as its widest cell or header.
    let widths: Vec<usize> = c
        .columns
        .iter()
        .enumerate()
        .map(|(j, name)| {
            rows.iter()
                .map(|(_, cells)| cells[j].len())
                .max()
                .unwrap_or(0)
                .max(name.len())
                + 2
        })
        .collect();
    let mut out = String::new();
    out.push_str(&format!("{:<24}", "Performance metric"));
    for (name, w) in c.columns.iter().zip(&widths) {
        out.push_str(&format!("{name:>w$}"));
    }
    out.push('\n');
    for (label, cells) in &rows {
        out.push_str(&format!("{label:<24}"));
        for (text, w) in cells.iter().zip(&widths) {
            out.push_str(&format!("{text:>w$}"));
        }
        out.push('\n');
    }
    out
}

/// Deterministic half split of a record set (seeded shuffle, first/second
/// half), mirroring the public validation set being divided into new
/// validation and testing sets.
pub fn split_half(
    records: &[FingerprintRecord],
    seed: u64,
    take_second: bool,
) -> Vec<FingerprintRecord> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = fpaug_core::SeedRng::stream(seed, 0x5911f);
    for i in (1..order.len()).rev() {
        let j = rng.below((i + 1) as u64) as usize;
        order.swap(i, j);
    }
    let mid = records.len() / 2;
    let slice: Vec<usize> = if take_second {
        order[mid..].to_vec()
    } else {
        order[..mid].to_vec()
    };
    let mut sorted = slice;
    sorted.sort_unstable();
    sorted.into_iter().map(|i| records[i].clone()).collect()
}
