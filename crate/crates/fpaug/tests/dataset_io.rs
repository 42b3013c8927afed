//! CSV ingestion and round-trip contracts plus the partition invariants.

mod util;

use std::io::Write;

use fpaug::dataset::{
    compute_stats, load_csv, make_partition, write_csv, ApFilter, DatasetError,
    PartitionStrategy, SchemaOptions,
};
use proptest::prelude::*;

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f.flush().unwrap();
    f
}

const HEADER: &str = "WAP001,WAP002,WAP003,LONGITUDE,LATITUDE,FLOOR,BUILDINGID,SPACEID,RELATIVEPOSITION,USERID,PHONEID,TIMESTAMP";

#[test]
fn header_only_file_is_an_empty_dataset() {
    let f = write_temp(&format!("{HEADER}\n"));
    let ds = load_csv(f.path(), &SchemaOptions::default()).unwrap();
    assert_eq!(ds.records.len(), 0);
    assert_eq!(ds.ap_ids, vec!["WAP001", "WAP002", "WAP003"]);
    let stats = compute_stats(&ds);
    assert_eq!(stats.total_records, 0);
    assert!(stats.cells.is_empty());
}

#[test]
fn sentinel_100_means_not_detected() {
    let f = write_temp(&format!(
        "{HEADER}\n100,-97,100,-7541.5,4864921.25,2,1,106,2,18,13,1371713733\n"
    ));
    let ds = load_csv(f.path(), &SchemaOptions::default()).unwrap();
    let rec = &ds.records[0];
    assert_eq!(rec.rssi, vec![None, Some(-97), None]);
    assert_eq!(rec.floor, 2);
    assert_eq!(rec.building, 1);
    assert_eq!(rec.longitude, -7541.5);
    assert_eq!(rec.space_id, "106");
}

#[test]
fn missing_mandatory_column_is_named() {
    let f = write_temp("WAP001,LONGITUDE,LATITUDE,FLOOR\n100,0,0,0\n");
    match load_csv(f.path(), &SchemaOptions::default()).unwrap_err() {
        DatasetError::MissingColumn(col) => assert_eq!(col, "BUILDINGID"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unparseable_cell_reports_its_line() {
    let f = write_temp(&format!(
        "{HEADER}\n100,100,100,0.0,0.0,0,0,1,1,1,1,1\n100,abc,100,0.0,0.0,0,0,1,1,1,1,1\n"
    ));
    match load_csv(f.path(), &SchemaOptions::default()).unwrap_err() {
        DatasetError::Row { line, message } => {
            assert_eq!(line, 3); // 1-based, counting the header line
            assert!(message.contains("WAP002"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn out_of_range_rssi_errors_or_clamps_per_options() {
    let content = format!("{HEADER}\n7,100,100,0.0,0.0,0,0,1,1,1,1,1\n");
    let f = write_temp(&content);
    match load_csv(f.path(), &SchemaOptions::default()).unwrap_err() {
        DatasetError::RssiRange { value, column, .. } => {
            assert_eq!(value, 7);
            assert_eq!(column, "WAP001");
        }
        other => panic!("unexpected {other:?}"),
    }
    let clamping = SchemaOptions { clamp_out_of_range: true, ..Default::default() };
    let ds = load_csv(f.path(), &clamping).unwrap();
    assert_eq!(ds.records[0].rssi[0], Some(0));
}

#[test]
fn round_trip_reproduces_values_and_sentinels() {
    let original = format!(
        "{HEADER}\n-61,100,-104,-7541.2643564,4864921.0000005,3,2,205,2,3,17,1380000000\n100,0,-45,-7300.1,4864800.9,0,0,1,1,1,1,2\n"
    );
    let f = write_temp(&original);
    let opts = SchemaOptions::default();
    let ds = load_csv(f.path(), &opts).unwrap();
    let out = tempfile::NamedTempFile::new().unwrap();
    write_csv(&ds, out.path(), &opts).unwrap();
    let ds2 = load_csv(out.path(), &opts).unwrap();
    assert_eq!(ds, ds2);
    // detected values and sentinels are textually exact
    let text = std::fs::read_to_string(out.path()).unwrap();
    let line = text.lines().nth(1).unwrap();
    assert!(line.starts_with("-61,100,-104,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn load_write_load_is_identity(
        rows in prop::collection::vec(
            (
                prop::collection::vec(prop_oneof![Just(None), (-104i16..=0).prop_map(Some)], 3),
                -100.0f64..100.0,
                -100.0f64..100.0,
                0i32..5,
                0i32..3,
            ),
            0..40,
        )
    ) {
        let mut content = String::from(HEADER);
        content.push('\n');
        for (rssi, lon, lat, floor, building) in &rows {
            let cells: Vec<String> = rssi
                .iter()
                .map(|v| v.map_or("100".to_string(), |x| x.to_string()))
                .collect();
            content.push_str(&format!(
                "{},{lon},{lat},{floor},{building},1,1,1,1,1\n",
                cells.join(",")
            ));
        }
        let f = write_temp(&content);
        let opts = SchemaOptions::default();
        let ds = load_csv(f.path(), &opts).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path(), &opts).unwrap();
        let ds2 = load_csv(out.path(), &opts).unwrap();
        prop_assert_eq!(&ds, &ds2);
        prop_assert_eq!(ds.records.len(), rows.len());
    }
}

/// A small multi-building dataset for partition invariants.
fn partition_fixture() -> fpaug::dataset::Dataset {
    let world0 = util::three_floor_world(500);
    let mut ds = util::world_to_dataset(&world0, |_, _| true);
    // second building shifted far away
    let world1 = util::three_floor_world(501);
    for (i, p) in world1.points.iter().enumerate() {
        let mut rec = util::record_at(
            p,
            1,
            world1.observed[i].iter().map(|&v| Some(util::quantize_dbm(v))).collect(),
        );
        rec.longitude += 500.0;
        ds.records.push(rec);
    }
    ds
}

#[test]
fn single_floor_partitions_cover_everything_disjointly() {
    let ds = partition_fixture();
    let filter = ApFilter { min_detection_rate: 0.0, min_detections: 1 };
    let mut seen = vec![0usize; ds.records.len()];
    for b in ds.buildings() {
        for f in ds.floors_of(b) {
            let p = make_partition(
                &ds,
                PartitionStrategy::SingleFloor { building: b, floor: f },
                &filter,
                4.0,
            )
            .unwrap();
            for &i in &p.record_indices {
                seen[i] += 1;
                assert_eq!(ds.records[i].building, b);
                assert_eq!(ds.records[i].floor, f);
            }
        }
    }
    assert!(seen.iter().all(|&c| c == 1), "partitions must tile the dataset exactly once");
}

#[test]
fn neighboring_floor_membership_is_symmetric_in_distance() {
    let ds = partition_fixture();
    let filter = ApFilter { min_detection_rate: 0.0, min_detections: 1 };
    for b in ds.buildings() {
        for f in ds.floors_of(b) {
            let p = make_partition(
                &ds,
                PartitionStrategy::NeighboringFloors { building: b, floor: f },
                &filter,
                4.0,
            )
            .unwrap();
            let member: std::collections::BTreeSet<usize> =
                p.record_indices.iter().copied().collect();
            for (i, rec) in ds.records.iter().enumerate() {
                let should = rec.building == b && (rec.floor - f).abs() <= 1;
                assert_eq!(member.contains(&i), should, "record {i} vs floor {f}");
            }
        }
    }
}

#[test]
fn stats_totals_are_consistent() {
    let ds = partition_fixture();
    let stats = compute_stats(&ds);
    let sum: usize = stats.cells.iter().map(|c| c.records).sum();
    assert_eq!(sum, stats.total_records);
    assert_eq!(stats.total_records, ds.records.len());
    for cell in &stats.cells {
        for &rate in &cell.detection_rate {
            assert!((0.0..=1.0).contains(&rate));
        }
        assert!(cell.unique_reference_points <= cell.records);
    }
}
