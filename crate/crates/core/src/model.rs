//! Data and model containers for coregionalized GP regression.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::GpError;
use crate::kernel::KernelSpec;
use crate::linalg::Mat;
use crate::scalar;

/// Immutable training data: N input points of dimension L, an N x M target
/// matrix, and a mask marking which (point, output) entries were observed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    mask: Vec<Vec<bool>>,
    output_ids: Vec<String>,
}

impl TrainingSet {
    pub fn new(
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        mask: Vec<Vec<bool>>,
        output_ids: Vec<String>,
    ) -> Result<Self, GpError> {
        use alloc::format;
        if inputs.is_empty() {
            return Err(GpError::Data("training set needs at least one point".into()));
        }
        let m = output_ids.len();
        if m == 0 {
            return Err(GpError::Data("training set needs at least one output".into()));
        }
        if targets.len() != inputs.len() || mask.len() != inputs.len() {
            return Err(GpError::Data(format!(
                "row misalignment: {} inputs, {} target rows, {} mask rows",
                inputs.len(),
                targets.len(),
                mask.len()
            )));
        }
        let dim = inputs[0].len();
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != dim {
                return Err(GpError::Data(format!(
                    "input row {i} has dimension {}, expected {dim}",
                    x.len()
                )));
            }
        }
        for (i, (t, mk)) in targets.iter().zip(&mask).enumerate() {
            if t.len() != m || mk.len() != m {
                return Err(GpError::Data(format!("row {i} does not have {m} outputs")));
            }
            for (o, (&v, &seen)) in t.iter().zip(mk).enumerate() {
                if seen && !v.is_finite() {
                    return Err(GpError::Data(format!(
                        "observed target ({i}, {o}) is not finite"
                    )));
                }
            }
        }
        Ok(TrainingSet { inputs, targets, mask, output_ids })
    }

    /// Convenience constructor with every entry observed.
    pub fn dense(
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        output_ids: Vec<String>,
    ) -> Result<Self, GpError> {
        let m = output_ids.len();
        let mask = vec![vec![true; m]; targets.len()];
        Self::new(inputs, targets, mask, output_ids)
    }

    pub fn n_points(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_ids.len()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn mask(&self) -> &[Vec<bool>] {
        &self.mask
    }

    pub fn output_ids(&self) -> &[String] {
        &self.output_ids
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().map(|r| r.iter().filter(|&&b| b).count()).sum()
    }

    /// Mean of the observed entries of each output; outputs never observed
    /// get 0. These are the constants the engine subtracts before fitting.
    pub fn observed_means(&self) -> Vec<f64> {
        let m = self.n_outputs();
        let mut sum = vec![0.0; m];
        let mut count = vec![0usize; m];
        for (t, mk) in self.targets.iter().zip(&self.mask) {
            for o in 0..m {
                if mk[o] {
                    sum[o] += t[o];
                    count[o] += 1;
                }
            }
        }
        (0..m).map(|o| if count[o] > 0 { sum[o] / count[o] as f64 } else { 0.0 }).collect()
    }
}

/// Per-dimension affine map applied to inputs before kernel evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer { shift: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    /// Zero mean, unit variance per dimension; constant dimensions keep
    /// scale 1 so they standardize to exactly 0.
    pub fn fit(points: &[Vec<f64>]) -> Self {
        let n = points.len().max(1);
        let dim = points.first().map_or(0, Vec::len);
        let mut shift = vec![0.0; dim];
        for p in points {
            for d in 0..dim {
                shift[d] += p[d];
            }
        }
        for s in &mut shift {
            *s /= n as f64;
        }
        let mut var = vec![0.0; dim];
        for p in points {
            for d in 0..dim {
                let c = p[d] - shift[d];
                var[d] += c * c;
            }
        }
        let scale = var
            .iter()
            .map(|&v| {
                let sd = scalar::sqrt(v / n as f64);
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { shift, scale }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(d, v)| (v - self.shift[d]) / self.scale[d])
            .collect()
    }
}

/// One latent function: a kernel plus its output-coupling coefficients.
/// The effective output covariance of the component is
/// B = coeffs coeffs^T + diag(kappa).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatentComponent {
    pub kernel: KernelSpec,
    pub coeffs: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl LatentComponent {
    pub fn new(kernel: KernelSpec, coeffs: Vec<f64>) -> Self {
        let kappa = vec![0.0; coeffs.len()];
        LatentComponent { kernel, coeffs, kappa }
    }

    /// Dense output covariance B for this component.
    pub fn coreg_matrix(&self) -> Mat {
        let m = self.coeffs.len();
        Mat::from_fn(m, m, |i, j| {
            let mut v = self.coeffs[i] * self.coeffs[j];
            if i == j {
                v += self.kappa[i];
            }
            v
        })
    }
}

/// Coregionalized multi-output GP; a single component with M = 1 is a plain
/// single-output GP.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoregionalizedModel {
    pub latent: Vec<LatentComponent>,
    /// Per-output observation noise variance (diagonal of the noise model).
    pub noise_var: Vec<f64>,
    /// Per-output constants subtracted before fitting, restored on
    /// prediction.
    pub output_means: Vec<f64>,
    pub standardizer: Standardizer,
}

impl CoregionalizedModel {
    /// Single-component model (the R = 1 coregionalization).
    pub fn icm(kernel: KernelSpec, coeffs: Vec<f64>, noise_var: Vec<f64>, input_dim: usize) -> Self {
        let m = coeffs.len();
        CoregionalizedModel {
            latent: vec![LatentComponent::new(kernel, coeffs)],
            noise_var,
            output_means: vec![0.0; m],
            standardizer: Standardizer::identity(input_dim),
        }
    }

    /// Single-output model with unit amplitude.
    pub fn sogp(kernel: KernelSpec, noise_var: f64, input_dim: usize) -> Self {
        Self::icm(kernel, vec![1.0], vec![noise_var], input_dim)
    }

    pub fn n_outputs(&self) -> usize {
        self.noise_var.len()
    }

    pub fn input_dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn validate(&self) -> Result<(), GpError> {
        use alloc::format;
        if self.latent.is_empty() {
            return Err(GpError::Model("model needs at least one latent component".into()));
        }
        let m = self.n_outputs();
        if m == 0 {
            return Err(GpError::Model("model needs at least one output".into()));
        }
        for (r, comp) in self.latent.iter().enumerate() {
            comp.kernel.validate()?;
            if comp.coeffs.len() != m || comp.kappa.len() != m {
                return Err(GpError::Model(format!(
                    "component {r} couples {} outputs, model has {m}",
                    comp.coeffs.len()
                )));
            }
            if comp.kappa.iter().any(|&k| !k.is_finite() || k < 0.0) {
                return Err(GpError::Model(format!("component {r} has negative kappa")));
            }
            if comp.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(GpError::Model(format!("component {r} has non-finite coefficients")));
            }
        }
        if self.noise_var.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(GpError::Model("noise variances must be finite and >= 0".into()));
        }
        if self.output_means.len() != m {
            return Err(GpError::Model("output mean count does not match outputs".into()));
        }
        Ok(())
    }
}

/// Posterior mean and covariance over all M outputs at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPrediction {
    pub mean: Vec<f64>,
    pub covariance: Mat,
}

impl PosteriorPrediction {
    /// Marginal variances clamped to zero from below.
    pub fn variances(&self) -> Vec<f64> {
        self.covariance.diag().iter().map(|&v| v.max(0.0)).collect()
    }
}

/// Outcome of a fit: the objective reached and how it got there.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitReport {
    pub log_marginal: f64,
    pub iterations: usize,
    /// Index of the restart that won.
    pub restart: usize,
    pub converged: bool,
    /// Diagonal jitter (absolute) used by the winning factorization.
    pub jitter: f64,
    /// Wall time is informational only; it is excluded from determinism
    /// comparisons and from serialized provenance.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub wall_time_secs: f64,
}

impl FitReport {
    /// The deterministic fields, for bit-identical rerun checks.
    pub fn deterministic_fields(&self) -> (u64, usize, usize, bool, u64) {
        (
            self.log_marginal.to_bits(),
            self.iterations,
            self.restart,
            self.converged,
            self.jitter.to_bits(),
        )
    }
}
