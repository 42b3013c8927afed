//! UJIIndoorLoc-format fingerprint data: CSV ingestion, validation,
//! statistics, and building/floor partitioning.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Marker value UJIIndoorLoc uses for "AP not detected".
pub const DEFAULT_SENTINEL: i64 = 100;
/// USERID given to generated records; loading maps it back to the synthetic
/// flag.
pub const SYNTHETIC_USER_ID: &str = "-1";

const COORD_COLUMNS: [&str; 4] = ["LONGITUDE", "LATITUDE", "FLOOR", "BUILDINGID"];
const META_COLUMNS: [&str; 5] =
    ["SPACEID", "RELATIVEPOSITION", "USERID", "PHONEID", "TIMESTAMP"];

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),
    #[error("no access-point columns found (prefix `{0}`)")]
    NoApColumns(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("line {line}: RSSI {value} in {column} outside [{min}, {max}]")]
    RssiRange { line: u64, column: String, value: i64, min: i64, max: i64 },
    #[error("empty partition: {0}")]
    EmptyPartition(String),
    #[error("no APs pass the coverage filter for {context}; best candidates: {candidates:?}")]
    NoApsPassFilter { context: String, candidates: Vec<String> },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Ingestion policy; defaults match the published UJIIndoorLoc files.
#[derive(Debug, Clone, Serialize)]
pub struct SchemaOptions {
    pub sentinel: i64,
    pub rssi_min: i64,
    pub rssi_max: i64,
    /// Clamp out-of-range RSSI instead of failing the row.
    pub clamp_out_of_range: bool,
    pub floor_range: Option<(i32, i32)>,
    pub building_range: Option<(i32, i32)>,
    pub ap_prefix: String,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        SchemaOptions {
            sentinel: DEFAULT_SENTINEL,
            rssi_min: -104,
            rssi_max: 0,
            clamp_out_of_range: false,
            floor_range: Some((0, 4)),
            building_range: Some((0, 2)),
            ap_prefix: "WAP".to_string(),
        }
    }
}

/// One fingerprint: an RSSI reading (or not-detected) per AP plus the
/// surveyed location and pass-through metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintRecord {
    pub rssi: Vec<Option<i16>>,
    pub longitude: f64,
    pub latitude: f64,
    pub floor: i32,
    pub building: i32,
    pub space_id: String,
    pub relative_position: String,
    pub user_id: String,
    pub phone_id: String,
    pub timestamp: String,
}

impl FingerprintRecord {
    pub fn is_synthetic(&self) -> bool {
        self.user_id == SYNTHETIC_USER_ID
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ap_ids: Vec<String>,
    pub records: Vec<FingerprintRecord>,
}

impl Dataset {
    pub fn n_aps(&self) -> usize {
        self.ap_ids.len()
    }

    /// Distinct building ids, ascending.
    pub fn buildings(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.records.iter().map(|r| r.building).collect();
        set.into_iter().collect()
    }

    /// Distinct floors of one building, ascending.
    pub fn floors_of(&self, building: i32) -> Vec<i32> {
        let set: BTreeSet<i32> = self
            .records
            .iter()
            .filter(|r| r.building == building)
            .map(|r| r.floor)
            .collect();
        set.into_iter().collect()
    }
}

pub fn load_csv(path: &Path, opts: &SchemaOptions) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path)
        .map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers()?.clone();

    let mut ap_cols: Vec<(usize, String)> = Vec::new();
    let mut named: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, name) in headers.iter().enumerate() {
        if name.starts_with(opts.ap_prefix.as_str()) {
            ap_cols.push((idx, name.to_string()));
        } else {
            named.insert(name.to_string(), idx);
        }
    }
    if ap_cols.is_empty() {
        return Err(DatasetError::NoApColumns(opts.ap_prefix.clone()));
    }
    let mut coord_idx = [0usize; 4];
    for (slot, name) in COORD_COLUMNS.iter().enumerate() {
        coord_idx[slot] = *named
            .get(*name)
            .ok_or_else(|| DatasetError::MissingColumn((*name).to_string()))?;
    }
    let meta_idx: Vec<Option<usize>> =
        META_COLUMNS.iter().map(|name| named.get(*name).copied()).collect();

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |idx: usize| row.get(idx).unwrap_or("").trim();

        let mut rssi = Vec::with_capacity(ap_cols.len());
        for (idx, name) in &ap_cols {
            let text = field(*idx);
            let value: i64 = text.parse().map_err(|_| DatasetError::Row {
                line,
                message: format!("unparseable RSSI `{text}` in {name}"),
            })?;
            if value == opts.sentinel {
                rssi.push(None);
            } else if value < opts.rssi_min || value > opts.rssi_max {
                if opts.clamp_out_of_range {
                    rssi.push(Some(value.clamp(opts.rssi_min, opts.rssi_max) as i16));
                } else {
                    return Err(DatasetError::RssiRange {
                        line,
                        column: name.clone(),
                        value,
                        min: opts.rssi_min,
                        max: opts.rssi_max,
                    });
                }
            } else {
                rssi.push(Some(value as i16));
            }
        }

        let parse_f64 = |idx: usize, what: &str| -> Result<f64, DatasetError> {
            field(idx).parse().map_err(|_| DatasetError::Row {
                line,
                message: format!("unparseable {what} `{}`", field(idx)),
            })
        };
        let parse_i32 = |idx: usize, what: &str| -> Result<i32, DatasetError> {
            field(idx).parse().map_err(|_| DatasetError::Row {
                line,
                message: format!("unparseable {what} `{}`", field(idx)),
            })
        };
        let longitude = parse_f64(coord_idx[0], "LONGITUDE")?;
        let latitude = parse_f64(coord_idx[1], "LATITUDE")?;
        let floor = parse_i32(coord_idx[2], "FLOOR")?;
        let building = parse_i32(coord_idx[3], "BUILDINGID")?;
        if let Some((lo, hi)) = opts.floor_range {
            if floor < lo || floor > hi {
                return Err(DatasetError::Row {
                    line,
                    message: format!("FLOOR {floor} outside [{lo}, {hi}]"),
                });
            }
        }
        if let Some((lo, hi)) = opts.building_range {
            if building < lo || building > hi {
                return Err(DatasetError::Row {
                    line,
                    message: format!("BUILDINGID {building} outside [{lo}, {hi}]"),
                });
            }
        }
        let meta = |slot: usize| meta_idx[slot].map_or(String::new(), |i| field(i).to_string());
        records.push(FingerprintRecord {
            rssi,
            longitude,
            latitude,
            floor,
            building,
            space_id: meta(0),
            relative_position: meta(1),
            user_id: meta(2),
            phone_id: meta(3),
            timestamp: meta(4),
        });
    }

    Ok(Dataset { ap_ids: ap_cols.into_iter().map(|(_, n)| n).collect(), records })
}

/// Write the UJIIndoorLoc schema back out; detected values and sentinels are
/// reproduced exactly, coordinates with shortest round-trip formatting.
pub fn write_csv(dataset: &Dataset, path: &Path, opts: &SchemaOptions) -> Result<(), DatasetError> {
    let file = std::fs::File::create(path)
        .map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;
    let mut out = std::io::BufWriter::new(file);
    let mut header: Vec<&str> = dataset.ap_ids.iter().map(String::as_str).collect();
    header.extend(COORD_COLUMNS);
    header.extend(META_COLUMNS);
    writeln!(out, "{}", header.join(","))
        .map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;

    let mut line = String::new();
    for rec in &dataset.records {
        line.clear();
        for value in &rec.rssi {
            match value {
                Some(v) => line.push_str(&v.to_string()),
                None => line.push_str(&opts.sentinel.to_string()),
            }
            line.push(',');
        }
        line.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            rec.longitude,
            rec.latitude,
            rec.floor,
            rec.building,
            rec.space_id,
            rec.relative_position,
            rec.user_id,
            rec.phone_id,
            rec.timestamp
        ));
        writeln!(out, "{line}")
            .map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;
    }
    out.flush().map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

/// Per-(building, floor) coverage statistics. `unique_reference_points`
/// counts distinct (longitude, latitude) pairs bit-exactly as parsed;
/// `records` and `unique_space_groups` are the alternative counting methods
/// recorded alongside.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetStats {
    pub total_records: usize,
    pub ap_count: usize,
    pub cells: Vec<CellStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellStats {
    pub building: i32,
    pub floor: i32,
    pub records: usize,
    pub unique_reference_points: usize,
    pub unique_space_groups: usize,
    /// Detected fraction per AP, aligned with the dataset's AP columns.
    pub detection_rate: Vec<f64>,
}

pub fn compute_stats(dataset: &Dataset) -> DatasetStats {
    let m = dataset.n_aps();
    let mut cells: BTreeMap<(i32, i32), (usize, BTreeSet<(u64, u64)>, BTreeSet<String>, Vec<usize>)> =
        BTreeMap::new();
    for rec in &dataset.records {
        let entry = cells
            .entry((rec.building, rec.floor))
            .or_insert_with(|| (0, BTreeSet::new(), BTreeSet::new(), vec![0; m]));
        entry.0 += 1;
        entry.1.insert((rec.longitude.to_bits(), rec.latitude.to_bits()));
        if !rec.space_id.is_empty() {
            entry.2.insert(rec.space_id.clone());
        }
        for (o, v) in rec.rssi.iter().enumerate() {
            if v.is_some() {
                entry.3[o] += 1;
            }
        }
    }
    let cells = cells
        .into_iter()
        .map(|((building, floor), (records, coords, spaces, detections))| CellStats {
            building,
            floor,
            records,
            unique_reference_points: coords.len(),
            unique_space_groups: spaces.len(),
            detection_rate: detections
                .into_iter()
                .map(|d| d as f64 / records as f64)
                .collect(),
        })
        .collect();
    DatasetStats { total_records: dataset.records.len(), ap_count: m, cells }
}

/// Record-selection strategies for fitting one GP model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionStrategy {
    SingleFloor { building: i32, floor: i32 },
    NeighboringFloors { building: i32, floor: i32 },
    SingleBuilding { building: i32 },
}

impl PartitionStrategy {
    pub fn describe(&self) -> String {
        match self {
            PartitionStrategy::SingleFloor { building, floor } => {
                format!("single_floor(building {building}, floor {floor})")
            }
            PartitionStrategy::NeighboringFloors { building, floor } => {
                format!("neighboring_floors(building {building}, floor {floor})")
            }
            PartitionStrategy::SingleBuilding { building } => {
                format!("single_building(building {building})")
            }
        }
    }
}

/// Coverage filter deciding which APs take part in a fit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ApFilter {
    pub min_detection_rate: f64,
    pub min_detections: usize,
}

impl Default for ApFilter {
    fn default() -> Self {
        ApFilter { min_detection_rate: 0.05, min_detections: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub strategy: PartitionStrategy,
    pub building: i32,
    /// Floors contributing training data, ascending.
    pub floors: Vec<i32>,
    pub record_indices: Vec<usize>,
    /// Indices into the dataset's AP columns.
    pub selected_aps: Vec<usize>,
    /// 2 for single-floor, 3 when a height coordinate is appended.
    pub input_dim: usize,
    pub floor_height: f64,
}

impl Partition {
    /// Model-space input point for a record under this partition's geometry.
    pub fn input_point(&self, rec: &FingerprintRecord) -> Vec<f64> {
        if self.input_dim == 2 {
            vec![rec.longitude, rec.latitude]
        } else {
            vec![rec.longitude, rec.latitude, rec.floor as f64 * self.floor_height]
        }
    }

    /// Query point for a sampling location on `floor`.
    pub fn query_point(&self, longitude: f64, latitude: f64, floor: i32) -> Vec<f64> {
        if self.input_dim == 2 {
            vec![longitude, latitude]
        } else {
            vec![longitude, latitude, floor as f64 * self.floor_height]
        }
    }
}

pub fn make_partition(
    dataset: &Dataset,
    strategy: PartitionStrategy,
    filter: &ApFilter,
    floor_height: f64,
) -> Result<Partition, DatasetError> {
    let (building, input_dim) = match strategy {
        PartitionStrategy::SingleFloor { building, .. } => (building, 2),
        PartitionStrategy::NeighboringFloors { building, .. } => (building, 3),
        PartitionStrategy::SingleBuilding { building } => (building, 3),
    };
    let keep = |rec: &FingerprintRecord| -> bool {
        if rec.building != building {
            return false;
        }
        match strategy {
            PartitionStrategy::SingleFloor { floor, .. } => rec.floor == floor,
            PartitionStrategy::NeighboringFloors { floor, .. } => (rec.floor - floor).abs() <= 1,
            PartitionStrategy::SingleBuilding { .. } => true,
        }
    };
    let record_indices: Vec<usize> = dataset
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| keep(r))
        .map(|(i, _)| i)
        .collect();
    if record_indices.is_empty() {
        return Err(DatasetError::EmptyPartition(strategy.describe()));
    }
    // The anchoring floor itself must exist in the data.
    if let PartitionStrategy::SingleFloor { floor, .. }
    | PartitionStrategy::NeighboringFloors { floor, .. } = strategy
    {
        if !record_indices.iter().any(|&i| dataset.records[i].floor == floor) {
            return Err(DatasetError::EmptyPartition(strategy.describe()));
        }
    }
    let floors: Vec<i32> = {
        let set: BTreeSet<i32> =
            record_indices.iter().map(|&i| dataset.records[i].floor).collect();
        set.into_iter().collect()
    };

    let m = dataset.n_aps();
    let mut detections = vec![0usize; m];
    for &i in &record_indices {
        for (o, v) in dataset.records[i].rssi.iter().enumerate() {
            if v.is_some() {
                detections[o] += 1;
            }
        }
    }
    let total = record_indices.len();
    let selected_aps: Vec<usize> = (0..m)
        .filter(|&o| {
            detections[o] >= filter.min_detections
                && detections[o] as f64 / total as f64 >= filter.min_detection_rate
        })
        .collect();
    if selected_aps.is_empty() {
        let mut ranked: Vec<usize> = (0..m).collect();
        ranked.sort_by(|&a, &b| detections[b].cmp(&detections[a]).then(a.cmp(&b)));
        let candidates = ranked
            .into_iter()
            .take(5)
            .filter(|&o| detections[o] > 0)
            .map(|o| format!("{} ({} detections)", dataset.ap_ids[o], detections[o]))
            .collect();
        return Err(DatasetError::NoApsPassFilter {
            context: strategy.describe(),
            candidates,
        });
    }

    Ok(Partition {
        strategy,
        building,
        floors,
        record_indices,
        selected_aps,
        input_dim,
        floor_height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_dataset() -> Dataset {
        let rec = |b: i32, f: i32, lon: f64, lat: f64, rssi: Vec<Option<i16>>| FingerprintRecord {
            rssi,
            longitude: lon,
            latitude: lat,
            floor: f,
            building: b,
            space_id: "101".into(),
            relative_position: "1".into(),
            user_id: "7".into(),
            phone_id: "3".into(),
            timestamp: "1371713733".into(),
        };
        Dataset {
            ap_ids: vec!["WAP001".into(), "WAP002".into(), "WAP003".into()],
            records: vec![
                rec(0, 0, 0.0, 0.0, vec![Some(-50), None, Some(-80)]),
                rec(0, 0, 5.0, 0.0, vec![Some(-55), None, Some(-82)]),
                rec(0, 1, 0.0, 5.0, vec![Some(-60), Some(-70), None]),
                rec(0, 2, 5.0, 5.0, vec![Some(-65), Some(-72), None]),
                rec(1, 0, 50.0, 0.0, vec![None, Some(-40), None]),
            ],
        }
    }

    #[test]
    fn stats_counts_unique_coordinates() {
        let mut ds = tiny_dataset();
        // duplicate coordinates on (0,0): three records, two unique points
        ds.records.push(ds.records[0].clone());
        let stats = compute_stats(&ds);
        let cell = stats.cells.iter().find(|c| c.building == 0 && c.floor == 0).unwrap();
        assert_eq!(cell.records, 3);
        assert_eq!(cell.unique_reference_points, 2);
        let total: usize = stats.cells.iter().map(|c| c.records).sum();
        assert_eq!(total, stats.total_records);
    }

    #[test]
    fn single_floor_partition_is_two_dimensional() {
        let ds = tiny_dataset();
        let filter = ApFilter { min_detection_rate: 0.0, min_detections: 1 };
        let p = make_partition(
            &ds,
            PartitionStrategy::SingleFloor { building: 0, floor: 0 },
            &filter,
            4.0,
        )
        .unwrap();
        assert_eq!(p.record_indices, vec![0, 1]);
        assert_eq!(p.input_dim, 2);
        assert_eq!(p.input_point(&ds.records[0]), vec![0.0, 0.0]);
        // WAP002 never detected on that floor
        assert_eq!(p.selected_aps, vec![0, 2]);
    }

    #[test]
    fn neighboring_floors_clip_at_the_bottom() {
        let ds = tiny_dataset();
        let filter = ApFilter { min_detection_rate: 0.0, min_detections: 1 };
        let p = make_partition(
            &ds,
            PartitionStrategy::NeighboringFloors { building: 0, floor: 0 },
            &filter,
            4.0,
        )
        .unwrap();
        assert_eq!(p.floors, vec![0, 1]);
        assert_eq!(p.input_dim, 3);
        // floor 2 at 4 m spacing sits at z = 8 m
        assert_eq!(p.query_point(1.0, 2.0, 2), vec![1.0, 2.0, 8.0]);
    }

    #[test]
    fn empty_partition_is_an_error() {
        let ds = tiny_dataset();
        let filter = ApFilter::default();
        let err = make_partition(
            &ds,
            PartitionStrategy::SingleFloor { building: 2, floor: 0 },
            &filter,
            4.0,
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::EmptyPartition(_)));
    }

    #[test]
    fn failing_ap_filter_lists_candidates() {
        let ds = tiny_dataset();
        let filter = ApFilter { min_detection_rate: 0.9, min_detections: 100 };
        let err = make_partition(
            &ds,
            PartitionStrategy::SingleBuilding { building: 0 },
            &filter,
            4.0,
        )
        .unwrap_err();
        match err {
            DatasetError::NoApsPassFilter { candidates, .. } => {
                assert!(!candidates.is_empty());
                assert!(candidates[0].starts_with("WAP001"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
