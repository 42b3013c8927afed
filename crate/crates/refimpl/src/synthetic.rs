//! Ground-truth fingerprint worlds drawn from a known multi-output GP.
//!
//! The generator is self-contained (own RNG, own Cholesky) so the fixtures it
//! produces are independent of the engine being evaluated against them.

use crate::kernels::RefKernel;

/// SplitMix64: tiny, seedable, identical on every platform.
pub struct SplitMix64 {
    state: u64,
    spare_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed, spare_normal: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let mut u1 = self.next_f64();
        while u1 == 0.0 {
            u1 = self.next_f64();
        }
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

#[derive(Clone)]
pub struct SyntheticConfig {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: (f64, f64),
    pub floors: Vec<i32>,
    pub building: i32,
    pub n_aps: usize,
    /// Isotropic kernel over (x, y, z) in meters.
    pub kernel: RefKernel,
    /// M x M output covariance; its scale sets the dB dynamic range.
    pub coreg: Vec<Vec<f64>>,
    pub noise_sd: f64,
    pub mean_dbm: f64,
    pub floor_height: f64,
    pub seed: u64,
}

pub struct SyntheticPoint {
    pub longitude: f64,
    pub latitude: f64,
    pub floor: i32,
    pub grid_ix: usize,
    pub grid_iy: usize,
}

pub struct SyntheticWorld {
    pub points: Vec<SyntheticPoint>,
    /// Latent continuous dBm surface, one row per point, one column per AP.
    pub truth: Vec<Vec<f64>>,
    /// truth + iid measurement noise.
    pub observed: Vec<Vec<f64>>,
    pub config: SyntheticConfig,
}

pub fn generate(config: &SyntheticConfig) -> SyntheticWorld {
    let m = config.n_aps;
    assert_eq!(config.coreg.len(), m);
    let mut points = Vec::new();
    for &floor in &config.floors {
        for iy in 0..config.ny {
            for ix in 0..config.nx {
                points.push(SyntheticPoint {
                    longitude: config.origin.0 + ix as f64 * config.spacing,
                    latitude: config.origin.1 + iy as f64 * config.spacing,
                    floor,
                    grid_ix: ix,
                    grid_iy: iy,
                });
            }
        }
    }
    let coords: Vec<[f64; 3]> = points
        .iter()
        .map(|p| [p.longitude, p.latitude, p.floor as f64 * config.floor_height])
        .collect();

    let n = points.len() * m;
    let mut cov = vec![vec![0.0; n]; n];
    for (i, a) in coords.iter().enumerate() {
        for (j, b) in coords.iter().enumerate() {
            let k = config.kernel.eval(a, b);
            for oa in 0..m {
                for ob in 0..m {
                    cov[i * m + oa][j * m + ob] = config.coreg[oa][ob] * k;
                }
            }
        }
    }
    let mean_diag = cov.iter().enumerate().map(|(i, r)| r[i]).sum::<f64>() / n as f64;
    for i in 0..n {
        cov[i][i] += 1e-10 * mean_diag.max(1.0);
    }
    let chol = cholesky(&cov);

    let mut rng = SplitMix64::new(config.seed);
    let z: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    let mut draw = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += chol[i][j] * z[j];
        }
        draw[i] = acc;
    }

    let mut truth = vec![vec![0.0; m]; points.len()];
    let mut observed = vec![vec![0.0; m]; points.len()];
    for i in 0..points.len() {
        for o in 0..m {
            let v = config.mean_dbm + draw[i * m + o];
            truth[i][o] = v;
            observed[i][o] = v + config.noise_sd * rng.next_normal();
        }
    }
    SyntheticWorld { points, truth, observed, config: config.clone() }
}

/// Plain lower-triangular Cholesky; panics if the matrix is not positive
/// definite after the generator's jitter.
fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(s > 0.0, "generator covariance not positive definite");
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

/// Nearest-neighbor interpolation baseline: value at `query` is the value at
/// the closest training coordinate.
pub fn nearest_neighbor_value(
    train_coords: &[[f64; 3]],
    train_values: &[Vec<f64>],
    query: &[f64; 3],
) -> Vec<f64> {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in train_coords.iter().enumerate() {
        let d = (c[0] - query[0]).powi(2) + (c[1] - query[1]).powi(2) + (c[2] - query[2]).powi(2);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    train_values[best].clone()
}
