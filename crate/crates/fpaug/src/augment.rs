//! The three GP augmentation strategies end to end: partition the dataset,
//! fit a coregionalized model per partition, sample a rectangular grid, and
//! merge generated fingerprints with the originals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fpaug_core::{
    fit, round_ties_even, CoregionalizedModel, FitOptions, FitReport, GpError, KernelSpec,
    Predictor, SeedRng, TrainingSet,
};

use crate::dataset::{
    make_partition, ApFilter, Dataset, DatasetError, FingerprintRecord, Partition,
    PartitionStrategy, SYNTHETIC_USER_ID,
};

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("all {0} partitions failed")]
    AllPartitionsFailed(usize),
}

/// Which (building, floor) scope a plan strategy expands to; absent fields
/// mean "every one present in the dataset".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    SingleFloor,
    NeighboringFloors,
    SingleBuilding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanStrategy {
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub building: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum BboxPolicy {
    /// Extreme coordinates of the partition's reference points, per floor.
    ExtremeCoordinates,
    Explicit {
        min_longitude: f64,
        min_latitude: f64,
        max_longitude: f64,
        max_latitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum OutputPolicy {
    PosteriorMean,
    PosteriorSample { seed: u64 },
}

/// How unobserved (AP, point) entries enter the GP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Excluded from the likelihood (masked).
    Mask,
    /// Filled with a floor value, producing dense training vectors.
    FloorFill { fill_dbm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub schema_version: u32,
    pub strategy: PlanStrategy,
    #[serde(default = "default_grid_spacing")]
    pub grid_spacing: f64,
    #[serde(default = "default_bbox_policy")]
    pub bbox_policy: BboxPolicy,
    #[serde(default = "default_output_policy")]
    pub output_policy: OutputPolicy,
    #[serde(default = "default_detection_threshold")]
    pub detection_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_floors: Option<Vec<i32>>,
    #[serde(default)]
    pub ap_filter: ApFilter,
    #[serde(default = "default_floor_height")]
    pub floor_height: f64,
    #[serde(default = "default_missing_policy")]
    pub missing_policy: MissingPolicy,
}

fn default_grid_spacing() -> f64 {
    5.0
}
fn default_bbox_policy() -> BboxPolicy {
    BboxPolicy::ExtremeCoordinates
}
fn default_output_policy() -> OutputPolicy {
    OutputPolicy::PosteriorMean
}
fn default_detection_threshold() -> f64 {
    -100.0
}
fn default_floor_height() -> f64 {
    4.0
}
fn default_missing_policy() -> MissingPolicy {
    MissingPolicy::Mask
}

pub const PLAN_SCHEMA_VERSION: u32 = 1;

impl AugmentationPlan {
    pub fn single_building(building: Option<i32>) -> Self {
        AugmentationPlan {
            schema_version: PLAN_SCHEMA_VERSION,
            strategy: PlanStrategy {
                kind: StrategyKind::SingleBuilding,
                building,
                floor: None,
            },
            grid_spacing: default_grid_spacing(),
            bbox_policy: default_bbox_policy(),
            output_policy: default_output_policy(),
            detection_threshold: default_detection_threshold(),
            target_floors: None,
            ap_filter: ApFilter::default(),
            floor_height: default_floor_height(),
            missing_policy: default_missing_policy(),
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.schema_version != PLAN_SCHEMA_VERSION {
            return Err(AugmentError::Plan(format!(
                "unsupported schema_version {} (expected {PLAN_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !self.grid_spacing.is_finite() || self.grid_spacing <= 0.0 {
            return Err(AugmentError::Plan("grid_spacing must be > 0".into()));
        }
        if !(-110.0..=-60.0).contains(&self.detection_threshold) {
            return Err(AugmentError::Plan(format!(
                "detection_threshold {} outside [-110, -60]",
                self.detection_threshold
            )));
        }
        if !self.floor_height.is_finite() || self.floor_height <= 0.0 {
            return Err(AugmentError::Plan("floor_height must be > 0".into()));
        }
        if let BboxPolicy::Explicit { min_longitude, min_latitude, max_longitude, max_latitude } =
            self.bbox_policy
        {
            if min_longitude > max_longitude || min_latitude > max_latitude {
                return Err(AugmentError::Plan("explicit bbox has inverted bounds".into()));
            }
        }
        Ok(())
    }
}

/// Keys the plan schema knows, per JSON object path; used to reject or warn
/// about unknown fields.
pub fn plan_unknown_keys(value: &serde_json::Value) -> Vec<String> {
    fn check(
        value: &serde_json::Value,
        path: &str,
        known: &[(&str, &[&str])],
        out: &mut Vec<String>,
    ) {
        let Some(obj) = value.as_object() else { return };
        let keys = known
            .iter()
            .find(|(p, _)| *p == path)
            .map(|(_, ks)| *ks)
            .unwrap_or(&[]);
        for (k, v) in obj {
            if !keys.contains(&k.as_str()) {
                out.push(if path.is_empty() { k.clone() } else { format!("{path}.{k}") });
            } else if v.is_object() {
                let child = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                check(v, &child, known, out);
            }
        }
    }
    let known: &[(&str, &[&str])] = &[
        (
            "",
            &[
                "schema_version",
                "strategy",
                "grid_spacing",
                "bbox_policy",
                "output_policy",
                "detection_threshold",
                "target_floors",
                "ap_filter",
                "floor_height",
                "missing_policy",
            ],
        ),
        ("strategy", &["kind", "building", "floor"]),
        (
            "bbox_policy",
            &["policy", "min_longitude", "min_latitude", "max_longitude", "max_latitude"],
        ),
        ("output_policy", &["policy", "seed"]),
        ("ap_filter", &["min_detection_rate", "min_detections"]),
        ("missing_policy", &["policy", "fill_dbm"]),
    ];
    let mut out = Vec::new();
    check(value, "", known, &mut out);
    out
}

/// Model/fitting configuration the CLI carries alongside a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub kernel: KernelSpec,
    /// Number of latent components (1 = intrinsic coregionalization).
    pub rank: usize,
    pub learn_kappa: bool,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Cap on observed scalar entries (points x APs) per fit; larger
    /// partitions are fit in AP chunks.
    pub budget: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            kernel: KernelSpec::matern52(1.0),
            rank: 1,
            learn_kappa: true,
            restarts: 4,
            max_iters: 150,
            tol: 1e-6,
            seed: 0,
            budget: 20_000,
        }
    }
}

/// Axis-aligned rectangle over projected coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bbox {
    pub min_longitude: f64,
    pub min_latitude: f64,
    pub max_longitude: f64,
    pub max_latitude: f64,
}

/// Componentwise min/max over reference-point coordinates.
pub fn compute_bbox(points: impl IntoIterator<Item = (f64, f64)>) -> Option<Bbox> {
    let mut bbox: Option<Bbox> = None;
    for (lon, lat) in points {
        bbox = Some(match bbox {
            None => Bbox {
                min_longitude: lon,
                min_latitude: lat,
                max_longitude: lon,
                max_latitude: lat,
            },
            Some(b) => Bbox {
                min_longitude: b.min_longitude.min(lon),
                min_latitude: b.min_latitude.min(lat),
                max_longitude: b.max_longitude.max(lon),
                max_latitude: b.max_latitude.max(lat),
            },
        });
    }
    bbox
}

/// Regular lattice from the bbox minimum corner, row-major (latitude outer,
/// longitude inner), both ascending; far corners included when the extent is
/// an exact multiple of the spacing.
pub fn sample_grid(bbox: &Bbox, spacing: f64) -> Vec<(f64, f64)> {
    assert!(spacing > 0.0, "grid spacing must be positive");
    let steps = |extent: f64| ((extent / spacing) + 1e-9).floor() as usize + 1;
    let nx = steps(bbox.max_longitude - bbox.min_longitude);
    let ny = steps(bbox.max_latitude - bbox.min_latitude);
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push((
                bbox.min_longitude + ix as f64 * spacing,
                bbox.min_latitude + iy as f64 * spacing,
            ));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub ap_ids: Vec<String>,
    pub log_marginal: f64,
    pub iterations: usize,
    pub restart: usize,
    pub converged: bool,
    pub jitter: f64,
}

impl FitSummary {
    fn new(ap_ids: Vec<String>, report: &FitReport) -> Self {
        FitSummary {
            ap_ids,
            log_marginal: report.log_marginal,
            iterations: report.iterations,
            restart: report.restart,
            converged: report.converged,
            jitter: report.jitter,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub strategy: String,
    pub building: i32,
    pub trained_floors: Vec<i32>,
    pub emitted_floors: Vec<i32>,
    pub n_records: usize,
    pub n_aps_selected: usize,
    pub chunks: usize,
    pub fits: Vec<FitSummary>,
    pub n_generated: usize,
    /// Posterior marginal variance averaged over APs, summarized over grid
    /// points.
    pub posterior_variance: Option<VarianceSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionFailure {
    pub context: String,
    pub error: String,
}

pub struct AugmentOutcome {
    /// Original records (untouched, in order) followed by generated ones.
    pub dataset: Dataset,
    pub generated: usize,
    pub reports: Vec<PartitionReport>,
    pub failures: Vec<PartitionFailure>,
}

/// Expand a plan strategy into concrete partition tasks with their emission
/// floors, ordered by (building, floor).
fn expand_tasks(
    dataset: &Dataset,
    plan: &AugmentationPlan,
) -> Result<Vec<(PartitionStrategy, Vec<i32>)>, AugmentError> {
    let buildings = match plan.strategy.building {
        Some(b) => vec![b],
        None => dataset.buildings(),
    };
    if buildings.is_empty() {
        return Err(AugmentError::Plan("dataset has no records".into()));
    }
    let floor_allowed = |f: i32| match &plan.target_floors {
        Some(list) => list.contains(&f),
        None => true,
    };
    let mut tasks = Vec::new();
    for b in buildings {
        let floors = match plan.strategy.floor {
            Some(f) => vec![f],
            None => dataset.floors_of(b),
        };
        match plan.strategy.kind {
            StrategyKind::SingleFloor => {
                for f in floors.into_iter().filter(|&f| floor_allowed(f)) {
                    tasks.push((
                        PartitionStrategy::SingleFloor { building: b, floor: f },
                        vec![f],
                    ));
                }
            }
            StrategyKind::NeighboringFloors => {
                for f in floors.into_iter().filter(|&f| floor_allowed(f)) {
                    tasks.push((
                        PartitionStrategy::NeighboringFloors { building: b, floor: f },
                        vec![f],
                    ));
                }
            }
            StrategyKind::SingleBuilding => {
                let emit: Vec<i32> =
                    dataset.floors_of(b).into_iter().filter(|&f| floor_allowed(f)).collect();
                tasks.push((PartitionStrategy::SingleBuilding { building: b }, emit));
            }
        }
    }
    if tasks.is_empty() {
        return Err(AugmentError::Plan("strategy expands to no partitions".into()));
    }
    Ok(tasks)
}

/// Training set over a partition's records and selected APs.
fn training_set(
    dataset: &Dataset,
    partition: &Partition,
    ap_subset: &[usize],
    missing: MissingPolicy,
) -> Result<TrainingSet, GpError> {
    let inputs: Vec<Vec<f64>> = partition
        .record_indices
        .iter()
        .map(|&i| partition.input_point(&dataset.records[i]))
        .collect();
    let mut targets = Vec::with_capacity(inputs.len());
    let mut mask = Vec::with_capacity(inputs.len());
    for &i in &partition.record_indices {
        let rec = &dataset.records[i];
        let mut trow = Vec::with_capacity(ap_subset.len());
        let mut mrow = Vec::with_capacity(ap_subset.len());
        for &ap in ap_subset {
            match (rec.rssi[ap], missing) {
                (Some(v), _) => {
                    trow.push(v as f64);
                    mrow.push(true);
                }
                (None, MissingPolicy::Mask) => {
                    trow.push(0.0);
                    mrow.push(false);
                }
                (None, MissingPolicy::FloorFill { fill_dbm }) => {
                    trow.push(fill_dbm);
                    mrow.push(true);
                }
            }
        }
        targets.push(trow);
        mask.push(mrow);
    }
    let output_ids = ap_subset.iter().map(|&ap| dataset.ap_ids[ap].clone()).collect();
    TrainingSet::new(inputs, targets, mask, output_ids)
}

/// Training set over a partition's selected APs with masked missing entries,
/// as the `fit` subcommand consumes it.
pub fn partition_training_set(
    dataset: &Dataset,
    partition: &Partition,
) -> Result<TrainingSet, GpError> {
    training_set(dataset, partition, &partition.selected_aps, MissingPolicy::Mask)
}

/// The model structure a fit starts from.
pub fn fit_template(cfg: &FitConfig, m: usize, input_dim: usize) -> CoregionalizedModel {
    model_template(&cfg.kernel, cfg.rank, m, input_dim)
}

fn model_template(kernel: &KernelSpec, rank: usize, m: usize, input_dim: usize) -> CoregionalizedModel {
    let mut model = CoregionalizedModel::icm(kernel.clone(), vec![1.0; m], vec![4.0; m], input_dim);
    for _ in 1..rank.max(1) {
        model.latent.push(fpaug_core::LatentComponent::new(kernel.clone(), vec![0.5; m]));
    }
    for comp in &mut model.latent {
        comp.kappa = vec![0.01; m];
    }
    model
}

struct TaskOutput {
    report: PartitionReport,
    records: Vec<FingerprintRecord>,
}

fn run_task(
    dataset: &Dataset,
    plan: &AugmentationPlan,
    cfg: &FitConfig,
    strategy: PartitionStrategy,
    emit_floors: &[i32],
    task_ordinal: usize,
) -> Result<TaskOutput, String> {
    let partition = make_partition(dataset, strategy, &plan.ap_filter, plan.floor_height)
        .map_err(|e| e.to_string())?;
    let n_records = partition.record_indices.len();

    // AP chunking under the scalar-entry budget.
    let per_chunk = (cfg.budget / n_records.max(1)).max(1);
    let chunks: Vec<&[usize]> = partition.selected_aps.chunks(per_chunk).collect();

    let mut fits = Vec::new();
    let mut predictors: Vec<(Vec<usize>, Predictor)> = Vec::new();
    for (ci, chunk) in chunks.iter().enumerate() {
        let data = training_set(dataset, &partition, chunk, plan.missing_policy)
            .map_err(|e| e.to_string())?;
        let template = model_template(&cfg.kernel, cfg.rank, chunk.len(), partition.input_dim);
        let fit_opts = FitOptions {
            restarts: cfg.restarts,
            max_iters: cfg.max_iters,
            tol: cfg.tol,
            seed: cfg.seed.wrapping_add((task_ordinal as u64) << 16).wrapping_add(ci as u64),
            learn_kappa: cfg.learn_kappa,
            ..Default::default()
        };
        let (model, report) = fit(&template, &data, &fit_opts).map_err(|e| e.to_string())?;
        let ids = chunk.iter().map(|&ap| dataset.ap_ids[ap].clone()).collect();
        fits.push(FitSummary::new(ids, &report));
        let predictor = Predictor::new(&model, &data, &fit_opts.numeric).map_err(|e| e.to_string())?;
        predictors.push((chunk.to_vec(), predictor));
    }

    let m_total = dataset.n_aps();
    let mut records = Vec::new();
    let mut variance_samples: Vec<f64> = Vec::new();
    for &floor in emit_floors {
        let bbox = match plan.bbox_policy {
            BboxPolicy::Explicit {
                min_longitude,
                min_latitude,
                max_longitude,
                max_latitude,
            } => Bbox { min_longitude, min_latitude, max_longitude, max_latitude },
            BboxPolicy::ExtremeCoordinates => {
                let on_floor = partition
                    .record_indices
                    .iter()
                    .map(|&i| &dataset.records[i])
                    .filter(|r| r.floor == floor)
                    .map(|r| (r.longitude, r.latitude));
                match compute_bbox(on_floor) {
                    Some(b) => b,
                    // No reference points on the emission floor: fall back
                    // to the whole partition's extent.
                    None => compute_bbox(
                        partition
                            .record_indices
                            .iter()
                            .map(|&i| &dataset.records[i])
                            .map(|r| (r.longitude, r.latitude)),
                    )
                    .ok_or_else(|| "empty partition bbox".to_string())?,
                }
            }
        };
        for (pt_idx, (lon, lat)) in sample_grid(&bbox, plan.grid_spacing).into_iter().enumerate()
        {
            if !floor_plan_accepts(partition.building, floor, lon, lat) {
                continue;
            }
            let query = partition.query_point(lon, lat, floor);
            let mut rssi: Vec<Option<i16>> = vec![None; m_total];
            let mut var_acc = 0.0;
            let mut var_n = 0usize;
            for (chunk, predictor) in &predictors {
                let pred = predictor.predict(&query).map_err(|e| e.to_string())?;
                let values: Vec<f64> = match plan.output_policy {
                    OutputPolicy::PosteriorMean => pred.mean.clone(),
                    OutputPolicy::PosteriorSample { seed } => {
                        let stream = ((task_ordinal as u64) << 40)
                            ^ ((floor as u64 & 0xff) << 32)
                            ^ pt_idx as u64;
                        let mut rng = SeedRng::stream(seed, stream);
                        sample_posterior(&pred, &mut rng)
                    }
                };
                for (vi, (&ap, value)) in chunk.iter().zip(&values).enumerate() {
                    rssi[ap] = quantize(*value, plan.detection_threshold);
                    var_acc += pred.variances()[vi];
                    var_n += 1;
                }
            }
            if var_n > 0 {
                variance_samples.push(var_acc / var_n as f64);
            }
            records.push(FingerprintRecord {
                rssi,
                longitude: lon,
                latitude: lat,
                floor,
                building: partition.building,
                space_id: "0".into(),
                relative_position: "0".into(),
                user_id: SYNTHETIC_USER_ID.into(),
                phone_id: "-1".into(),
                timestamp: "0".into(),
            });
        }
    }

    let posterior_variance = if variance_samples.is_empty() {
        None
    } else {
        let min = variance_samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = variance_samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = variance_samples.iter().sum::<f64>() / variance_samples.len() as f64;
        Some(VarianceSummary { min, mean, max })
    };

    Ok(TaskOutput {
        report: PartitionReport {
            strategy: strategy.describe(),
            building: partition.building,
            trained_floors: partition.floors.clone(),
            emitted_floors: emit_floors.to_vec(),
            n_records,
            n_aps_selected: partition.selected_aps.len(),
            chunks: chunks.len(),
            fits,
            n_generated: records.len(),
            posterior_variance,
        },
        records,
    })
}

/// Posterior draw: mean + L z with L from the Cholesky of the predictive
/// covariance (fallback to independent marginals if the factorization is
/// rejected numerically).
fn sample_posterior(pred: &fpaug_core::PosteriorPrediction, rng: &mut SeedRng) -> Vec<f64> {
    let m = pred.mean.len();
    let mut cov = pred.covariance.clone();
    let bump = 1e-10 * cov.diag_mean().abs().max(1e-12);
    cov.add_to_diag(bump);
    let z: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
    match fpaug_core::linalg::cholesky(&cov) {
        Ok(f) => {
            let l = f.lower();
            (0..m)
                .map(|i| {
                    let mut acc = pred.mean[i];
                    for j in 0..=i {
                        acc += l.get(i, j) * z[j];
                    }
                    acc
                })
                .collect()
        }
        Err(_) => {
            let sd: Vec<f64> = pred.variances().iter().map(|&v| v.sqrt()).collect();
            (0..m).map(|i| pred.mean[i] + sd[i] * z[i]).collect()
        }
    }
}

/// Round half to even, clamp to the dataset's dBm range, drop readings below
/// the detection threshold.
fn quantize(value: f64, detection_threshold: f64) -> Option<i16> {
    let rounded = round_ties_even(value);
    let clamped = rounded.clamp(-104.0, 0.0);
    if clamped < detection_threshold {
        None
    } else {
        Some(clamped as i16)
    }
}

pub fn augment(
    dataset: &Dataset,
    plan: &AugmentationPlan,
    cfg: &FitConfig,
) -> Result<AugmentOutcome, AugmentError> {
    plan.validate()?;
    let tasks = expand_tasks(dataset, plan)?;

    let outcomes: Vec<(String, Result<TaskOutput, String>)> = tasks
        .par_iter()
        .enumerate()
        .map(|(ordinal, (strategy, emit))| {
            (
                strategy.describe(),
                run_task(dataset, plan, cfg, *strategy, emit, ordinal),
            )
        })
        .collect();

    let mut merged = dataset.clone();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut generated = 0usize;
    for (context, outcome) in outcomes {
        match outcome {
            Ok(out) => {
                generated += out.records.len();
                merged.records.extend(out.records);
                reports.push(out.report);
            }
            Err(error) => failures.push(PartitionFailure { context, error }),
        }
    }
    if reports.is_empty() {
        return Err(AugmentError::AllPartitionsFailed(failures.len()));
    }
    Ok(AugmentOutcome { dataset: merged, generated, reports, failures })
}

/// Floor-plan polygon filter hook. The rectangular-bbox assumption keeps
/// sampling points that may fall outside the real outline (cross-shaped
/// buildings); v1 accepts everything, and a polygon source can be attached
/// here later.
fn floor_plan_accepts(_building: i32, _floor: i32, _longitude: f64, _latitude: f64) -> bool {
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_is_componentwise_min_max() {
        let b = compute_bbox([(0.0, 0.0), (10.0, 5.0), (3.0, 9.0)]).unwrap();
        assert_eq!(
            b,
            Bbox { min_longitude: 0.0, min_latitude: 0.0, max_longitude: 10.0, max_latitude: 9.0 }
        );
    }

    #[test]
    fn degenerate_bbox_emits_exactly_one_point() {
        let b = compute_bbox([(2.5, -1.0)]).unwrap();
        assert_eq!(sample_grid(&b, 5.0), vec![(2.5, -1.0)]);
    }

    #[test]
    fn grid_counts_match_contract() {
        let b10 = Bbox { min_longitude: 0.0, min_latitude: 0.0, max_longitude: 10.0, max_latitude: 10.0 };
        assert_eq!(sample_grid(&b10, 5.0).len(), 9);
        assert_eq!(sample_grid(&b10, 20.0), vec![(0.0, 0.0)]);
        let b12 = Bbox { min_longitude: 0.0, min_latitude: 0.0, max_longitude: 1.0, max_latitude: 2.0 };
        assert_eq!(sample_grid(&b12, 1.0).len(), 6);
    }

    #[test]
    fn grid_order_is_row_major_ascending() {
        let b = Bbox { min_longitude: 0.0, min_latitude: 0.0, max_longitude: 1.0, max_latitude: 1.0 };
        assert_eq!(
            sample_grid(&b, 1.0),
            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        );
    }

    #[test]
    fn quantize_rounds_clamps_and_thresholds() {
        assert_eq!(quantize(-55.4, -100.0), Some(-55));
        assert_eq!(quantize(-55.5, -100.0), Some(-56)); // ties to even
        assert_eq!(quantize(-54.5, -100.0), Some(-54));
        assert_eq!(quantize(-300.0, -100.0), None); // clamped to -104, below threshold
        assert_eq!(quantize(-100.0, -100.0), Some(-100)); // at threshold stays detected
        assert_eq!(quantize(12.0, -100.0), Some(0)); // clamped from above
    }

    #[test]
    fn plan_json_round_trip_and_unknown_keys() {
        let plan = AugmentationPlan::single_building(Some(1));
        let text = serde_json::to_string_pretty(&plan).unwrap();
        let back: AugmentationPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(plan, back);

        let with_junk: serde_json::Value = serde_json::from_str(
            r#"{"schema_version":1,"strategy":{"kind":"single_floor","building":0,"floor":1,"wing":"north"},"grid_spacing":5.0,"frobnicate":true}"#,
        )
        .unwrap();
        let mut unknown = plan_unknown_keys(&with_junk);
        unknown.sort();
        assert_eq!(unknown, vec!["frobnicate".to_string(), "strategy.wing".to_string()]);
    }

    #[test]
    fn plan_validation_rejects_bad_thresholds() {
        let mut plan = AugmentationPlan::single_building(None);
        plan.detection_threshold = -50.0;
        assert!(matches!(plan.validate(), Err(AugmentError::Plan(_))));
        let mut plan = AugmentationPlan::single_building(None);
        plan.grid_spacing = 0.0;
        assert!(matches!(plan.validate(), Err(AugmentError::Plan(_))));
    }
}
