//! Random GP instance family shared by the acceptance criteria, with
//! mirrors into the independent reference implementation.

#![allow(dead_code)]

use fpaug_core::{
    CoregionalizedModel, KernelSpec, LatentComponent, SeedRng, Standardizer, TrainingSet,
};
use fpaug_refimpl::{RefComponent, RefKernel, RefMogp};

pub fn mirror_kernel(spec: &KernelSpec) -> RefKernel {
    match spec {
        KernelSpec::Rbf { gamma } => RefKernel::Rbf { gamma: *gamma },
        KernelSpec::Matern52 { h } => RefKernel::Matern52 { h: *h },
        KernelSpec::Sum { left, right } => {
            RefKernel::Sum(Box::new(mirror_kernel(left)), Box::new(mirror_kernel(right)))
        }
        KernelSpec::Product { left, right } => {
            RefKernel::Product(Box::new(mirror_kernel(left)), Box::new(mirror_kernel(right)))
        }
        KernelSpec::Scaled { variance, inner } => {
            RefKernel::Scaled { variance: *variance, inner: Box::new(mirror_kernel(inner)) }
        }
    }
}

pub fn mirror_model(model: &CoregionalizedModel) -> RefMogp {
    let m = model.n_outputs();
    RefMogp {
        components: model
            .latent
            .iter()
            .map(|c| {
                let b = c.coreg_matrix();
                RefComponent {
                    kernel: mirror_kernel(&c.kernel),
                    coreg: (0..m).map(|i| (0..m).map(|j| b.get(i, j)).collect()).collect(),
                }
            })
            .collect(),
        noise_var: model.noise_var.clone(),
        output_means: model.output_means.clone(),
        input_shift: model.standardizer.shift.clone(),
        input_scale: model.standardizer.scale.clone(),
    }
}

pub struct InstanceOpts {
    pub noise_free: bool,
    pub allow_mask: bool,
    pub max_nm: usize,
}

impl Default for InstanceOpts {
    fn default() -> Self {
        InstanceOpts { noise_free: false, allow_mask: true, max_nm: 60 }
    }
}

pub struct Instance {
    pub model: CoregionalizedModel,
    pub data: TrainingSet,
}

/// Well-conditioned random SOGP/ICM instances (minimum point separation
/// matched to the sampled length-scales so noise-free systems stay
/// factorizable in double precision).
pub fn random_instance(seed: u64, opts: &InstanceOpts) -> Instance {
    let mut rng = SeedRng::stream(0x1c31, seed);
    let dim = 1 + (rng.below(3) as usize);
    let m = 1 + (rng.below(3) as usize);
    let max_points = (opts.max_nm / m).clamp(1, 20);
    let n = 2.max(1 + rng.below(max_points as u64) as usize);

    let min_sep = 0.35;
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut guard = 0;
    while points.len() < n {
        let cand: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.0, 4.0)).collect();
        if points.iter().all(|p| fpaug_core::distance(p, &cand) >= min_sep) {
            points.push(cand);
        }
        guard += 1;
        if guard > 10_000 {
            break;
        }
    }
    let n = points.len();

    let kernel = match rng.below(3) {
        0 => KernelSpec::rbf(rng.uniform_in(0.4, 0.9)),
        1 => KernelSpec::matern52(rng.uniform_in(0.4, 1.2)),
        _ => KernelSpec::scaled(
            rng.uniform_in(0.5, 2.0),
            KernelSpec::matern52(rng.uniform_in(0.4, 1.2)),
        ),
    };

    let mut coeffs: Vec<f64> = (0..m).map(|_| rng.uniform_in(-1.5, 1.5)).collect();
    for c in &mut coeffs {
        if c.abs() < 0.2 {
            *c = if *c < 0.0 { -0.2 } else { 0.2 };
        }
    }
    let kappa: Vec<f64> = (0..m).map(|_| rng.uniform_in(0.05, 0.3)).collect();
    let noise: Vec<f64> = (0..m)
        .map(|_| if opts.noise_free { 0.0 } else { rng.uniform_in(0.01, 0.1) })
        .collect();

    let mut component = LatentComponent::new(kernel, coeffs);
    component.kappa = kappa;
    let model = CoregionalizedModel {
        latent: vec![component],
        noise_var: noise,
        output_means: vec![0.0; m],
        standardizer: Standardizer::identity(dim),
    };

    let targets: Vec<Vec<f64>> =
        (0..n).map(|_| (0..m).map(|_| -60.0 + 8.0 * rng.normal()).collect()).collect();
    let mut mask: Vec<Vec<bool>> = (0..n)
        .map(|_| (0..m).map(|_| !opts.allow_mask || rng.uniform() < 0.8).collect())
        .collect();
    for o in 0..m {
        if !mask.iter().any(|r| r[o]) {
            mask[o % n][o] = true;
        }
    }
    for row in &mut mask {
        if !row.iter().any(|&b| b) {
            row[0] = true;
        }
    }

    let data = TrainingSet::new(
        points,
        targets,
        mask,
        (0..m).map(|o| format!("AP{o:03}")).collect(),
    )
    .unwrap();
    Instance { model, data }
}
