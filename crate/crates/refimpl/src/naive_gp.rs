//! Brute-force multi-output GP on the expanded input space (point, output).
//!
//! Every covariance entry is computed independently from the closed form
//! k((x,i),(x',j)) = sum_r B_r[i,j] * k_r(x, x'), and the linear systems are
//! solved with Gaussian elimination with partial pivoting rather than a
//! Cholesky factorization, so this shares no numerical path with the engine
//! it checks.

use crate::kernels::RefKernel;

/// One coregionalized component: a kernel and its full M x M output
/// covariance matrix.
pub struct RefComponent {
    pub kernel: RefKernel,
    pub coreg: Vec<Vec<f64>>,
}

pub struct RefMogp {
    pub components: Vec<RefComponent>,
    /// Per-output observation noise variance.
    pub noise_var: Vec<f64>,
    /// Per-output constant subtracted before solving and restored after.
    pub output_means: Vec<f64>,
    /// Per-dimension input shift/scale applied before kernel evaluation.
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
}

impl RefMogp {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(d, v)| (v - self.input_shift[d]) / self.input_scale[d])
            .collect()
    }

    /// Prior covariance between (point, output) pairs, already-standardized
    /// coordinates.
    pub fn cov_entry(&self, xa: &[f64], oa: usize, xb: &[f64], ob: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c.coreg[oa][ob] * c.kernel.eval(xa, xb))
            .sum()
    }

    /// Posterior mean (length M) and covariance (M x M) at `query`.
    ///
    /// `jitter_abs` is added to every diagonal entry of the training
    /// covariance, mirroring whatever the engine under test used.
    pub fn predict(
        &self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        mask: &[Vec<bool>],
        query: &[f64],
        jitter_abs: f64,
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let m_out = self.noise_var.len();
        let xs: Vec<Vec<f64>> = inputs.iter().map(|x| self.standardize(x)).collect();
        let q = self.standardize(query);

        // Expanded observation list in (point, output) row-major order.
        let mut obs: Vec<(usize, usize)> = Vec::new();
        for (i, row) in mask.iter().enumerate() {
            for (o, &seen) in row.iter().enumerate() {
                if seen {
                    obs.push((i, o));
                }
            }
        }
        let n = obs.len();

        let mut k = vec![vec![0.0; n]; n];
        for (a, &(ia, oa)) in obs.iter().enumerate() {
            for (b, &(ib, ob)) in obs.iter().enumerate() {
                let mut v = self.cov_entry(&xs[ia], oa, &xs[ib], ob);
                if a == b {
                    v += self.noise_var[oa] + jitter_abs;
                }
                k[a][b] = v;
            }
        }

        let y: Vec<f64> = obs
            .iter()
            .map(|&(i, o)| targets[i][o] - self.output_means[o])
            .collect();

        // K^-1 y and K^-1 K* via one elimination per right-hand side.
        let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(m_out + 1);
        rhs.push(y.clone());
        for o in 0..m_out {
            rhs.push(
                obs.iter()
                    .map(|&(i, oi)| self.cov_entry(&xs[i], oi, &q, o))
                    .collect(),
            );
        }
        let solved = solve_gauss_multi(&k, &rhs);
        let alpha = &solved[0];

        let kstar: Vec<Vec<f64>> = (0..m_out)
            .map(|o| {
                obs.iter()
                    .map(|&(i, oi)| self.cov_entry(&xs[i], oi, &q, o))
                    .collect()
            })
            .collect();

        let mut mean = vec![0.0; m_out];
        for o in 0..m_out {
            let dot: f64 = kstar[o].iter().zip(alpha).map(|(a, b)| a * b).sum();
            mean[o] = dot + self.output_means[o];
        }

        let mut cov = vec![vec![0.0; m_out]; m_out];
        for oa in 0..m_out {
            for ob in 0..m_out {
                let prior = self.cov_entry(&q, oa, &q, ob);
                let reduction: f64 = kstar[oa]
                    .iter()
                    .zip(&solved[1 + ob])
                    .map(|(a, b)| a * b)
                    .sum();
                cov[oa][ob] = prior - reduction;
            }
        }
        (mean, cov)
    }

    /// Log marginal likelihood via LU elimination (log-determinant from the
    /// pivot products).
    pub fn log_marginal(
        &self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        mask: &[Vec<bool>],
        jitter_abs: f64,
    ) -> f64 {
        let xs: Vec<Vec<f64>> = inputs.iter().map(|x| self.standardize(x)).collect();
        let mut obs: Vec<(usize, usize)> = Vec::new();
        for (i, row) in mask.iter().enumerate() {
            for (o, &seen) in row.iter().enumerate() {
                if seen {
                    obs.push((i, o));
                }
            }
        }
        let n = obs.len();
        let mut k = vec![vec![0.0; n]; n];
        for (a, &(ia, oa)) in obs.iter().enumerate() {
            for (b, &(ib, ob)) in obs.iter().enumerate() {
                let mut v = self.cov_entry(&xs[ia], oa, &xs[ib], ob);
                if a == b {
                    v += self.noise_var[oa] + jitter_abs;
                }
                k[a][b] = v;
            }
        }
        let y: Vec<f64> = obs
            .iter()
            .map(|&(i, o)| targets[i][o] - self.output_means[o])
            .collect();
        let (alpha, logdet) = solve_gauss_logdet(&k, &y);
        let quad: f64 = y.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        -0.5 * quad - 0.5 * logdet - 0.5 * n as f64 * (2.0 * core::f64::consts::PI).ln()
    }
}

/// Gaussian elimination with partial pivoting, several right-hand sides.
pub fn solve_gauss_multi(a: &[Vec<f64>], rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = rhs.len();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            for r in rhs {
                row.push(r[i]);
            }
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        assert!(p != 0.0, "singular system in reference solver");
        for row in col + 1..n {
            let f = aug[row][col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n + m {
                aug[row][k] -= f * aug[col][k];
            }
        }
    }
    let mut out = vec![vec![0.0; n]; m];
    for r in 0..m {
        for i in (0..n).rev() {
            let mut v = aug[i][n + r];
            for j in i + 1..n {
                v -= aug[i][j] * out[r][j];
            }
            out[r][i] = v / aug[i][i];
        }
    }
    out
}

/// Solve A x = b returning (x, log|A|). A must be positive definite for the
/// log-determinant to be meaningful; pivots of a PD matrix stay positive.
pub fn solve_gauss_logdet(a: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, f64) {
    let n = a.len();
    let mut u: Vec<Vec<f64>> = a.to_vec();
    let mut y = b.to_vec();
    let mut logdet = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| u[i][col].abs().total_cmp(&u[j][col].abs()))
            .unwrap();
        if piv != col {
            u.swap(col, piv);
            y.swap(col, piv);
            sign = -sign;
        }
        let p = u[col][col];
        assert!(p != 0.0, "singular system in reference solver");
        logdet += p.abs().ln();
        if p < 0.0 {
            sign = -sign;
        }
        for row in col + 1..n {
            let f = u[row][col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                u[row][k] -= f * u[col][k];
            }
            y[row] -= f * y[col];
        }
    }
    assert!(sign > 0.0, "negative determinant for a covariance matrix");
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = y[i];
        for j in i + 1..n {
            v -= u[i][j] * x[j];
        }
        x[i] = v / u[i][i];
    }
    (x, logdet)
}
