//! Exact inference for coregionalized GPs over the stacked (point, output)
//! representation: joint covariance assembly, marginal likelihood with
//! analytic gradients, and posterior prediction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::GpError;
use crate::kernel::distance;
use crate::linalg::{cholesky, dot, CholeskyFactor, Mat};
use crate::model::{CoregionalizedModel, PosteriorPrediction, TrainingSet};

const LN_2PI: f64 = 1.8378770664093453_f64;

/// Numerical safeguards for the covariance factorization. Jitter levels are
/// relative to the mean diagonal of the assembled covariance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NumericOpts {
    pub jitter_initial: f64,
    pub jitter_max: f64,
}

impl Default for NumericOpts {
    fn default() -> Self {
        NumericOpts { jitter_initial: 1e-8, jitter_max: 1e-2 }
    }
}

/// Observed (point, output) pairs in row-major point order; the stacked
/// system is indexed by this list everywhere.
fn observed_stack(mask: &[Vec<bool>]) -> Vec<(usize, usize)> {
    let mut stack = Vec::new();
    for (i, row) in mask.iter().enumerate() {
        for (o, &seen) in row.iter().enumerate() {
            if seen {
                stack.push((i, o));
            }
        }
    }
    stack
}

/// Cross-covariance between two stacked point sets under the model's
/// coregionalized prior (no noise). Masked entries are dropped; `None`
/// keeps every (point, output) pair. Inputs are raw coordinates; the
/// model's standardizer is applied internally.
pub fn joint_covariance(
    model: &CoregionalizedModel,
    points_a: &[Vec<f64>],
    mask_a: Option<&[Vec<bool>]>,
    points_b: &[Vec<f64>],
    mask_b: Option<&[Vec<bool>]>,
) -> Result<Mat, GpError> {
    model.validate()?;
    let m = model.n_outputs();
    let dim = model.input_dim();
    for p in points_a.iter().chain(points_b) {
        if p.len() != dim {
            return Err(GpError::QueryDimension { expected: dim, got: p.len() });
        }
    }
    let full_a;
    let stack_a = match mask_a {
        Some(mk) => {
            if mk.len() != points_a.len() {
                return Err(GpError::Data("mask rows do not match points".into()));
            }
            observed_stack(mk)
        }
        None => {
            full_a = vec![vec![true; m]; points_a.len()];
            observed_stack(&full_a)
        }
    };
    let full_b;
    let stack_b = match mask_b {
        Some(mk) => {
            if mk.len() != points_b.len() {
                return Err(GpError::Data("mask rows do not match points".into()));
            }
            observed_stack(mk)
        }
        None => {
            full_b = vec![vec![true; m]; points_b.len()];
            observed_stack(&full_b)
        }
    };
    let xa: Vec<Vec<f64>> = points_a.iter().map(|p| model.standardizer.apply(p)).collect();
    let xb: Vec<Vec<f64>> = points_b.iter().map(|p| model.standardizer.apply(p)).collect();
    let coregs: Vec<Mat> = model.latent.iter().map(|c| c.coreg_matrix()).collect();

    let mut out = Mat::zeros(stack_a.len(), stack_b.len());
    for (si, &(ia, oa)) in stack_a.iter().enumerate() {
        for (sj, &(ib, ob)) in stack_b.iter().enumerate() {
            let r = distance(&xa[ia], &xb[ib]);
            let mut v = 0.0;
            for (comp, coreg) in model.latent.iter().zip(&coregs) {
                v += coreg.get(oa, ob) * comp.kernel.eval_at_distance(r);
            }
            out.set(si, sj, v);
        }
    }
    Ok(out)
}

/// Training-side factorization shared by likelihood, fitting, and
/// prediction.
pub(crate) struct Factorized {
    pub stack: Vec<(usize, usize)>,
    pub x_std: Vec<Vec<f64>>,
    /// Distances between distinct training points (standardized).
    pub dist: Mat,
    /// Per-component kernel value matrices over distinct points.
    pub kernel_vals: Vec<Mat>,
    pub coregs: Vec<Mat>,
    pub chol: CholeskyFactor,
    /// K̃⁻¹ỹ.
    pub alpha: Vec<f64>,
    pub y_centered: Vec<f64>,
    pub jitter_abs: f64,
}

pub(crate) fn factorize(
    model: &CoregionalizedModel,
    data: &TrainingSet,
    opts: &NumericOpts,
) -> Result<Factorized, GpError> {
    model.validate()?;
    if model.n_outputs() != data.n_outputs() {
        return Err(GpError::Model(alloc::format!(
            "model couples {} outputs, data has {}",
            model.n_outputs(),
            data.n_outputs()
        )));
    }
    if model.input_dim() != data.input_dim() {
        return Err(GpError::QueryDimension {
            expected: model.input_dim(),
            got: data.input_dim(),
        });
    }
    let stack = observed_stack(data.mask());
    if stack.is_empty() {
        return Err(GpError::Data("no observed entries in training set".into()));
    }
    let n = stack.len();
    let x_std: Vec<Vec<f64>> = data.inputs().iter().map(|p| model.standardizer.apply(p)).collect();
    let np = x_std.len();

    let mut dist = Mat::zeros(np, np);
    for i in 0..np {
        for j in 0..=i {
            let r = distance(&x_std[i], &x_std[j]);
            dist.set(i, j, r);
            dist.set(j, i, r);
        }
    }
    let kernel_vals: Vec<Mat> = model
        .latent
        .iter()
        .map(|c| Mat::from_fn(np, np, |i, j| c.kernel.eval_at_distance(dist.get(i, j))))
        .collect();
    let coregs: Vec<Mat> = model.latent.iter().map(|c| c.coreg_matrix()).collect();

    let mut cov = Mat::zeros(n, n);
    for (si, &(ia, oa)) in stack.iter().enumerate() {
        for (sj, &(ib, ob)) in stack.iter().enumerate() {
            let mut v = 0.0;
            for (kv, coreg) in kernel_vals.iter().zip(&coregs) {
                v += coreg.get(oa, ob) * kv.get(ia, ib);
            }
            if si == sj {
                v += model.noise_var[oa];
            }
            cov.set(si, sj, v);
        }
    }

    let y_centered: Vec<f64> = stack
        .iter()
        .map(|&(i, o)| data.targets()[i][o] - model.output_means[o])
        .collect();

    // Jitter escalation: relative levels applied to the mean diagonal.
    let base = cov.diag_mean().max(f64::MIN_POSITIVE);
    let mut rel = opts.jitter_initial;
    let mut attempted = Vec::new();
    loop {
        let jitter_abs = rel * base;
        attempted.push(jitter_abs);
        let mut attempt = cov.clone();
        attempt.add_to_diag(jitter_abs);
        if let Ok(chol) = cholesky(&attempt) {
            let alpha = chol.solve(&y_centered);
            return Ok(Factorized {
                stack,
                x_std,
                dist,
                kernel_vals,
                coregs,
                chol,
                alpha,
                y_centered,
                jitter_abs,
            });
        }
        rel *= 10.0;
        if rel > opts.jitter_max * (1.0 + 1e-12) {
            return Err(GpError::Factorization { attempted });
        }
    }
}

/// Log marginal likelihood of the observed, mean-subtracted stacked data.
pub fn log_marginal_likelihood(
    model: &CoregionalizedModel,
    data: &TrainingSet,
    opts: &NumericOpts,
) -> Result<f64, GpError> {
    let f = factorize(model, data, opts)?;
    Ok(lml_from_factor(&f))
}

fn lml_from_factor(f: &Factorized) -> f64 {
    let n = f.stack.len() as f64;
    -0.5 * dot(&f.y_centered, &f.alpha) - 0.5 * f.chol.log_det() - 0.5 * n * LN_2PI
}

/// Gradient of the log marginal likelihood with respect to every raw model
/// hyperparameter, mirroring the model structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    pub components: Vec<ComponentGradient>,
    pub noise_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentGradient {
    pub kernel: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// Likelihood value plus analytic gradient via the trace identity
/// dL/dθ = ½ tr((αα^T - K̃^{-1}) ∂K̃/∂θ).
pub fn log_marginal_with_grad(
    model: &CoregionalizedModel,
    data: &TrainingSet,
    opts: &NumericOpts,
) -> Result<(f64, ModelGradient), GpError> {
    let f = factorize(model, data, opts)?;
    let value = lml_from_factor(&f);

    let n = f.stack.len();
    let np = f.x_std.len();
    let m = model.n_outputs();

    // W = αα^T - K̃^{-1}
    let inv = f.chol.inverse();
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            w.set(i, j, f.alpha[i] * f.alpha[j] - inv.get(i, j));
        }
    }

    let mut components = Vec::with_capacity(model.latent.len());
    for (r, comp) in model.latent.iter().enumerate() {
        let kv = &f.kernel_vals[r];
        let coreg = &f.coregs[r];

        // H = W ∘ C (stacked); folded on the fly into the three reductions.
        let mut coeff_grad = vec![0.0; m];
        let mut kappa_grad = vec![0.0; m];
        // F[i][j] = Σ_{s,t} W[s,t] B[a_s,a_t] over stacked pairs mapping to
        // the distinct point pair (i, j).
        let mut point_weight = Mat::zeros(np, np);

        for (s, &(is, os)) in f.stack.iter().enumerate() {
            let wrow = w.row(s);
            let mut hv = 0.0; // (H · cvec)[s]
            for (t, &(it, ot)) in f.stack.iter().enumerate() {
                let wst = wrow[t];
                let h = wst * kv.get(is, it);
                hv += h * comp.coeffs[ot];
                if os == ot {
                    kappa_grad[os] += 0.5 * h;
                }
                point_weight.set(is, it, point_weight.get(is, it) + wst * coreg.get(os, ot));
            }
            coeff_grad[os] += hv;
        }

        // Kernel hyperparameters: accumulate ∂k/∂p over distinct point pairs.
        let pcount = comp.kernel.param_count();
        let mut kern_grad = vec![0.0; pcount];
        let mut partials = Vec::with_capacity(pcount);
        for i in 0..np {
            for j in 0..np {
                let fw = point_weight.get(i, j);
                if fw == 0.0 {
                    continue;
                }
                partials.clear();
                comp.kernel.value_and_grad(f.dist.get(i, j), &mut partials);
                for (p, &g) in partials.iter().enumerate() {
                    kern_grad[p] += 0.5 * fw * g;
                }
            }
        }

        components.push(ComponentGradient {
            kernel: kern_grad,
            coeffs: coeff_grad,
            kappa: kappa_grad,
        });
    }

    let mut noise_grad = vec![0.0; m];
    for (s, &(_, os)) in f.stack.iter().enumerate() {
        noise_grad[os] += 0.5 * w.get(s, s);
    }

    Ok((value, ModelGradient { components, noise_var: noise_grad }))
}

/// Reusable posterior evaluator: factorizes the training system once and
/// answers any number of query points.
pub struct Predictor {
    model: CoregionalizedModel,
    coregs: Vec<Mat>,
    stack: Vec<(usize, usize)>,
    x_std: Vec<Vec<f64>>,
    chol: CholeskyFactor,
    alpha: Vec<f64>,
    jitter_abs: f64,
}

impl Predictor {
    pub fn new(
        model: &CoregionalizedModel,
        data: &TrainingSet,
        opts: &NumericOpts,
    ) -> Result<Self, GpError> {
        let f = factorize(model, data, opts)?;
        Ok(Predictor {
            model: model.clone(),
            coregs: f.coregs,
            stack: f.stack,
            x_std: f.x_std,
            chol: f.chol,
            alpha: f.alpha,
            jitter_abs: f.jitter_abs,
        })
    }

    /// Absolute diagonal jitter the factorization settled on.
    pub fn jitter(&self) -> f64 {
        self.jitter_abs
    }

    /// Posterior mean and covariance over all M outputs at `query` (raw
    /// coordinates).
    pub fn predict(&self, query: &[f64]) -> Result<PosteriorPrediction, GpError> {
        let dim = self.model.input_dim();
        if query.len() != dim {
            return Err(GpError::QueryDimension { expected: dim, got: query.len() });
        }
        let q = self.model.standardizer.apply(query);
        let m = self.model.n_outputs();
        let n = self.stack.len();

        // Cross-covariance columns for each output.
        let mut cross: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
        for (s, &(is, os)) in self.stack.iter().enumerate() {
            let r = distance(&self.x_std[is], &q);
            for (comp, b) in self.model.latent.iter().zip(&self.coregs) {
                let kval = comp.kernel.eval_at_distance(r);
                for (out, cross_col) in cross.iter_mut().enumerate() {
                    cross_col[s] += b.get(os, out) * kval;
                }
            }
        }

        let mut mean = vec![0.0; m];
        for out in 0..m {
            mean[out] = dot(&cross[out], &self.alpha) + self.model.output_means[out];
        }

        // Prior block at the query point.
        let mut prior = Mat::zeros(m, m);
        for (comp, b) in self.model.latent.iter().zip(&self.coregs) {
            let k0 = comp.kernel.eval_at_distance(0.0);
            for i in 0..m {
                for j in 0..m {
                    prior.set(i, j, prior.get(i, j) + b.get(i, j) * k0);
                }
            }
        }

        let v: Vec<Vec<f64>> = cross.iter().map(|c| self.chol.solve_lower(c)).collect();
        let mut cov = Mat::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let red = dot(&v[i], &v[j]);
                let val = prior.get(i, j) - red;
                cov.set(i, j, val);
                cov.set(j, i, val);
            }
        }
        Ok(PosteriorPrediction { mean, covariance: cov })
    }
}

/// One-shot posterior at a single query point.
pub fn predict(
    model: &CoregionalizedModel,
    data: &TrainingSet,
    query: &[f64],
    opts: &NumericOpts,
) -> Result<PosteriorPrediction, GpError> {
    Predictor::new(model, data, opts)?.predict(query)
}
