//! Model checkpoint files: the fitted coregionalized model plus the AP
//! identifiers it couples, losslessly round-tripped through JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fpaug_core::{CoregionalizedModel, FitReport};

use crate::provenance::Provenance;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: std::path::PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported checkpoint format_version {0}")]
    Version(u32),
    #[error("checkpoint couples {model} outputs but lists {ids} output ids")]
    OutputMismatch { model: usize, ids: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub format_version: u32,
    /// Standardization constants, kernel specs, coupling coefficients,
    /// kappa diagonals, noise variances, and output means.
    pub model: CoregionalizedModel,
    pub output_ids: Vec<String>,
    pub fit: FitReport,
    pub provenance: Provenance,
}

impl ModelCheckpoint {
    pub fn validate(&self) -> Result<(), CheckpointError> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(CheckpointError::Version(self.format_version));
        }
        if self.model.n_outputs() != self.output_ids.len() {
            return Err(CheckpointError::OutputMismatch {
                model: self.model.n_outputs(),
                ids: self.output_ids.len(),
            });
        }
        Ok(())
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &ModelCheckpoint) -> Result<(), CheckpointError> {
    let text = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| CheckpointError::Json { path: path.to_path_buf(), source: e })?;
    std::fs::write(path, text.as_bytes())
        .map_err(|e| CheckpointError::Io { path: path.to_path_buf(), source: e })
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint, CheckpointError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CheckpointError::Io { path: path.to_path_buf(), source: e })?;
    let checkpoint: ModelCheckpoint = serde_json::from_str(&text)
        .map_err(|e| CheckpointError::Json { path: path.to_path_buf(), source: e })?;
    checkpoint.validate()?;
    Ok(checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fpaug_core::{KernelSpec, Standardizer};

    fn awkward_model() -> CoregionalizedModel {
        // Values chosen to have no short decimal representation.
        let mut model = CoregionalizedModel::icm(
            KernelSpec::scaled(0.1 + 0.2, KernelSpec::matern52(1.0 / 3.0)),
            vec![std::f64::consts::PI, -1.0 / 7.0],
            vec![2.0f64.sqrt() * 1e-3, 0.3e-7],
            2,
        );
        model.latent[0].kappa = vec![1e-9 / 3.0, 0.7];
        model.output_means = vec![-63.123456789123456, -71.0 / 3.0];
        model.standardizer = Standardizer {
            shift: vec![-7541.264356781, 4864921.0000001],
            scale: vec![123.456789012345, 0.000012345],
        };
        model
    }

    #[test]
    fn json_round_trip_preserves_every_bit() {
        let model = awkward_model();
        let ckpt = ModelCheckpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            model: model.clone(),
            output_ids: vec!["WAP007".into(), "WAP013".into()],
            fit: FitReport {
                log_marginal: -1234.567890123456789,
                iterations: 37,
                restart: 2,
                converged: true,
                jitter: 1.0000000000000002e-8,
                wall_time_secs: 0.5,
            },
            provenance: Provenance::new("fit", 42, serde_json::json!({})),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.model, model);
        assert_eq!(
            back.fit.log_marginal.to_bits(),
            ckpt.fit.log_marginal.to_bits()
        );
        assert_eq!(back.fit.jitter.to_bits(), ckpt.fit.jitter.to_bits());
        for (a, b) in back
            .model
            .standardizer
            .shift
            .iter()
            .zip(&model.standardizer.shift)
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // Wall time is explicitly not serialized.
        assert_eq!(back.fit.wall_time_secs, 0.0);
    }

    #[test]
    fn version_and_shape_are_checked() {
        let mut ckpt = ModelCheckpoint {
            format_version: 99,
            model: awkward_model(),
            output_ids: vec!["a".into(), "b".into()],
            fit: FitReport {
                log_marginal: 0.0,
                iterations: 0,
                restart: 0,
                converged: false,
                jitter: 0.0,
                wall_time_secs: 0.0,
            },
            provenance: Provenance::new("fit", 0, serde_json::json!({})),
        };
        assert!(matches!(ckpt.validate(), Err(CheckpointError::Version(99))));
        ckpt.format_version = CHECKPOINT_FORMAT_VERSION;
        ckpt.output_ids.pop();
        assert!(matches!(
            ckpt.validate(),
            Err(CheckpointError::OutputMismatch { .. })
        ));
    }
}
