//! Hyperparameter fitting: log-space packing, seeded random restarts, and
//! L-BFGS ascent on the marginal likelihood.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::{factorize, log_marginal_with_grad, ModelGradient, NumericOpts};
use crate::error::GpError;
use crate::kernel::ParamKind;
use crate::model::{CoregionalizedModel, FitReport, Standardizer, TrainingSet};
use crate::optim::{minimize, LbfgsOpts};
use crate::rng::SeedRng;
use crate::scalar;

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Learn the per-output diagonal of each coregionalization matrix.
    pub learn_kappa: bool,
    /// Learn the per-output observation noise.
    pub learn_noise: bool,
    /// Refit the input standardizer from the data (identity otherwise).
    pub standardize_inputs: bool,
    pub numeric: NumericOpts,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 4,
            max_iters: 150,
            tol: 1e-6,
            seed: 0,
            learn_kappa: true,
            learn_noise: true,
            standardize_inputs: true,
            numeric: NumericOpts::default(),
        }
    }
}

/// Positive parameters are optimized as logarithms; values at or below this
/// floor enter the pack as log(floor).
const LOG_FLOOR: f64 = 1e-12;
/// Clamp for unpacked exponents, keeping exp() finite.
const LOG_CLAMP: f64 = 27.6; // exp(±27.6) ≈ 1e±12

#[derive(Clone, Copy)]
enum Slot {
    KernelParam { component: usize, index: usize },
    Coeff { component: usize, output: usize },
    Kappa { component: usize, output: usize },
    Noise { output: usize },
}

impl Slot {
    fn log_space(&self) -> bool {
        // Coefficients are signed; everything else is positive.
        !matches!(self, Slot::Coeff { .. })
    }
}

struct Packing {
    slots: Vec<Slot>,
}

impl Packing {
    fn layout(model: &CoregionalizedModel, opts: &FitOptions) -> Self {
        let m = model.n_outputs();
        let mut slots = Vec::new();
        for (r, comp) in model.latent.iter().enumerate() {
            for index in 0..comp.kernel.param_count() {
                slots.push(Slot::KernelParam { component: r, index });
            }
            for output in 0..m {
                slots.push(Slot::Coeff { component: r, output });
            }
            if opts.learn_kappa {
                for output in 0..m {
                    slots.push(Slot::Kappa { component: r, output });
                }
            }
        }
        if opts.learn_noise {
            for output in 0..m {
                slots.push(Slot::Noise { output });
            }
        }
        Packing { slots }
    }

    fn pack(&self, model: &CoregionalizedModel) -> Vec<f64> {
        let kernel_params: Vec<Vec<f64>> =
            model.latent.iter().map(|c| c.kernel.params()).collect();
        self.slots
            .iter()
            .map(|slot| {
                let raw = match *slot {
                    Slot::KernelParam { component, index } => kernel_params[component][index],
                    Slot::Coeff { component, output } => model.latent[component].coeffs[output],
                    Slot::Kappa { component, output } => model.latent[component].kappa[output],
                    Slot::Noise { output } => model.noise_var[output],
                };
                if slot.log_space() {
                    scalar::ln(raw.max(LOG_FLOOR))
                } else {
                    raw
                }
            })
            .collect()
    }

    fn unpack(&self, x: &[f64], template: &CoregionalizedModel) -> CoregionalizedModel {
        let mut model = template.clone();
        let mut kernel_params: Vec<Vec<f64>> =
            model.latent.iter().map(|c| c.kernel.params()).collect();
        for (slot, &v) in self.slots.iter().zip(x) {
            let raw = if slot.log_space() {
                scalar::exp(v.clamp(-LOG_CLAMP, LOG_CLAMP))
            } else {
                v
            };
            match *slot {
                Slot::KernelParam { component, index } => kernel_params[component][index] = raw,
                Slot::Coeff { component, output } => {
                    model.latent[component].coeffs[output] = raw
                }
                Slot::Kappa { component, output } => model.latent[component].kappa[output] = raw,
                Slot::Noise { output } => model.noise_var[output] = raw,
            }
        }
        for (comp, params) in model.latent.iter_mut().zip(&kernel_params) {
            comp.kernel.set_params(params);
        }
        model
    }

    /// Map a structured raw-parameter gradient into packed coordinates
    /// (chain rule d/d log θ = θ d/dθ for log slots).
    fn pack_grad(&self, grad: &ModelGradient, model: &CoregionalizedModel) -> Vec<f64> {
        let kernel_params: Vec<Vec<f64>> =
            model.latent.iter().map(|c| c.kernel.params()).collect();
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::KernelParam { component, index } => {
                    grad.components[component].kernel[index] * kernel_params[component][index]
                }
                Slot::Coeff { component, output } => grad.components[component].coeffs[output],
                Slot::Kappa { component, output } => {
                    grad.components[component].kappa[output]
                        * model.latent[component].kappa[output]
                }
                Slot::Noise { output } => grad.noise_var[output] * model.noise_var[output],
            })
            .collect()
    }
}

/// Maximize the log marginal likelihood from `opts.restarts` initializations
/// (the first is the template itself); deterministic given the seed.
pub fn fit(
    template: &CoregionalizedModel,
    data: &TrainingSet,
    opts: &FitOptions,
) -> Result<(CoregionalizedModel, FitReport), GpError> {
    if opts.restarts == 0 {
        return Err(GpError::Data("fit needs at least one restart".into()));
    }
    template.validate()?;

    #[cfg(feature = "std")]
    let t0 = std::time::Instant::now();

    let mut base = template.clone();
    if opts.standardize_inputs {
        base.standardizer = Standardizer::fit(data.inputs());
    } else if base.standardizer.dim() != data.input_dim() {
        return Err(GpError::QueryDimension {
            expected: base.standardizer.dim(),
            got: data.input_dim(),
        });
    }
    base.output_means = data.observed_means();

    let packing = Packing::layout(&base, opts);
    let hints = InitHints::gather(&base, data);

    let lbfgs = LbfgsOpts {
        max_iters: opts.max_iters,
        tol_grad: opts.tol.max(1e-12),
        tol_obj: opts.tol * 1e-3,
        memory: 8,
    };

    let mut best: Option<(f64, CoregionalizedModel, usize, usize, bool)> = None;
    let mut diagnostics: Vec<String> = Vec::new();

    for restart in 0..opts.restarts {
        let x0 = if restart == 0 {
            packing.pack(&base)
        } else {
            let mut rng = SeedRng::stream(opts.seed, restart as u64);
            random_start(&packing, &base, &hints, &mut rng)
        };

        let objective = |x: &[f64]| {
            let model = packing.unpack(x, &base);
            match log_marginal_with_grad(&model, data, &opts.numeric) {
                Ok((value, grad)) if value.is_finite() => {
                    let mut g = packing.pack_grad(&grad, &model);
                    for gi in &mut g {
                        *gi = -*gi;
                    }
                    Some((-value, g))
                }
                _ => None,
            }
        };

        match minimize(objective, &x0, &lbfgs) {
            Some(out) => {
                let value = -out.value;
                let better = match &best {
                    Some((b, ..)) => value > *b,
                    None => true,
                };
                if better {
                    let model = packing.unpack(&out.x, &base);
                    best = Some((value, model, out.iterations, restart, out.converged));
                }
            }
            None => diagnostics.push(format!("restart {restart}: initial evaluation failed")),
        }
    }

    let Some((log_marginal, model, iterations, restart, converged)) = best else {
        return Err(GpError::FitFailed { restarts: opts.restarts, diagnostics });
    };

    // Final factorization pins the jitter actually needed at the optimum.
    let factor = factorize(&model, data, &opts.numeric)?;
    let report = FitReport {
        log_marginal,
        iterations,
        restart,
        converged,
        jitter: factor.jitter_abs,
        #[cfg(feature = "std")]
        wall_time_secs: t0.elapsed().as_secs_f64(),
        #[cfg(not(feature = "std"))]
        wall_time_secs: 0.0,
    };
    Ok((model, report))
}

/// Data-derived scales for random initialization.
struct InitHints {
    /// RMS spread of the standardized inputs.
    spread: f64,
    /// Standard deviation of the observed entries of each output.
    sd_out: Vec<f64>,
}

impl InitHints {
    fn gather(model: &CoregionalizedModel, data: &TrainingSet) -> Self {
        let x_std: Vec<Vec<f64>> =
            data.inputs().iter().map(|p| model.standardizer.apply(p)).collect();
        let n = x_std.len().max(1);
        let dim = data.input_dim().max(1);
        let mut mean = alloc::vec![0.0; dim];
        for p in &x_std {
            for d in 0..dim {
                mean[d] += p[d];
            }
        }
        for v in &mut mean {
            *v /= n as f64;
        }
        let mut var = alloc::vec![0.0; dim];
        for p in &x_std {
            for d in 0..dim {
                let c = p[d] - mean[d];
                var[d] += c * c;
            }
        }
        // Constant dimensions carry no range information; average the spread
        // over informative dimensions only.
        let mut total = 0.0;
        let mut informative = 0usize;
        for &v in &var {
            if v > 0.0 {
                total += v;
                informative += 1;
            }
        }
        let spread = if informative > 0 {
            scalar::sqrt(total / (n * informative) as f64).max(1e-3)
        } else {
            1e-3
        };

        let m = data.n_outputs();
        let means = data.observed_means();
        let mut sq = alloc::vec![0.0; m];
        let mut count = alloc::vec![0usize; m];
        for (t, mk) in data.targets().iter().zip(data.mask()) {
            for o in 0..m {
                if mk[o] {
                    let c = t[o] - means[o];
                    sq[o] += c * c;
                    count[o] += 1;
                }
            }
        }
        let sd_out = (0..m)
            .map(|o| {
                if count[o] > 1 {
                    scalar::sqrt(sq[o] / count[o] as f64).max(1e-3)
                } else {
                    1.0
                }
            })
            .collect();
        InitHints { spread, sd_out }
    }
}

fn random_start(
    packing: &Packing,
    base: &CoregionalizedModel,
    hints: &InitHints,
    rng: &mut SeedRng,
) -> Vec<f64> {
    let kinds: Vec<Vec<ParamKind>> =
        base.latent.iter().map(|c| c.kernel.param_kinds()).collect();
    let r_total = base.latent.len().max(1) as f64;
    packing
        .slots
        .iter()
        .map(|slot| match *slot {
            Slot::KernelParam { component, index } => match kinds[component][index] {
                ParamKind::LengthScale => {
                    scalar::ln(hints.spread) + rng.uniform_in(scalar::ln(0.1), scalar::ln(2.0))
                }
                ParamKind::Variance => rng.uniform_in(scalar::ln(0.3), scalar::ln(3.0)),
            },
            Slot::Coeff { output, .. } => {
                hints.sd_out[output] * rng.uniform_in(0.3, 1.0) / scalar::sqrt(r_total)
            }
            Slot::Kappa { output, .. } => {
                scalar::ln(0.05 * hints.sd_out[output] * hints.sd_out[output])
                    + rng.uniform_in(scalar::ln(0.5), scalar::ln(2.0))
            }
            Slot::Noise { output } => {
                scalar::ln(hints.sd_out[output] * hints.sd_out[output])
                    + rng.uniform_in(scalar::ln(0.01), scalar::ln(0.5))
            }
        })
        .collect()
}
