//! Stationary covariance functions and their composition algebra.
//!
//! Atoms are unit-amplitude; amplitude is carried explicitly by `Scaled`
//! wrappers (and, at the model level, by the coregionalization matrix), so
//! variance is never double-counted.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::KernelError;
use crate::scalar;

const SQRT5: f64 = 2.23606797749979_f64;

/// Role of a kernel hyperparameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    LengthScale,
    Variance,
}

/// Composable kernel expression evaluated on the Euclidean distance between
/// (standardized) input points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "type", rename_all = "snake_case")
)]
pub enum KernelSpec {
    /// exp(-r^2 / gamma^2); gamma in the units of the input coordinates.
    Rbf { gamma: f64 },
    /// (1 + sqrt5 r/h + 5 r^2/(3 h^2)) exp(-sqrt5 r/h).
    Matern52 { h: f64 },
    Sum { left: Box<KernelSpec>, right: Box<KernelSpec> },
    Product { left: Box<KernelSpec>, right: Box<KernelSpec> },
    Scaled { variance: f64, inner: Box<KernelSpec> },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        KernelSpec::Rbf { gamma }
    }

    pub fn matern52(h: f64) -> Self {
        KernelSpec::Matern52 { h }
    }

    pub fn sum(left: KernelSpec, right: KernelSpec) -> Self {
        KernelSpec::Sum { left: Box::new(left), right: Box::new(right) }
    }

    pub fn product(left: KernelSpec, right: KernelSpec) -> Self {
        KernelSpec::Product { left: Box::new(left), right: Box::new(right) }
    }

    pub fn scaled(variance: f64, inner: KernelSpec) -> Self {
        KernelSpec::Scaled { variance, inner: Box::new(inner) }
    }

    /// Check every hyperparameter in the expression tree.
    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            KernelSpec::Rbf { gamma } => {
                if !gamma.is_finite() || *gamma <= 0.0 {
                    return Err(KernelError::NonPositiveLengthScale { value: *gamma });
                }
            }
            KernelSpec::Matern52 { h } => {
                if !h.is_finite() || *h <= 0.0 {
                    return Err(KernelError::NonPositiveLengthScale { value: *h });
                }
            }
            KernelSpec::Sum { left, right } | KernelSpec::Product { left, right } => {
                left.validate()?;
                right.validate()?;
            }
            KernelSpec::Scaled { variance, inner } => {
                if !variance.is_finite() || *variance < 0.0 {
                    return Err(KernelError::InvalidVariance { value: *variance });
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// k(x, x'). Errors on mismatched dimensions or invalid hyperparameters.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        if x.len() != y.len() {
            return Err(KernelError::DimensionMismatch { left: x.len(), right: y.len() });
        }
        self.validate()?;
        Ok(self.eval_at_distance(distance(x, y)))
    }

    /// Evaluate on a precomputed Euclidean distance. No validation; the
    /// engine validates once per factorization.
    pub fn eval_at_distance(&self, r: f64) -> f64 {
        match self {
            KernelSpec::Rbf { gamma } => scalar::exp(-(r * r) / (gamma * gamma)),
            KernelSpec::Matern52 { h } => {
                let s = SQRT5 * r / h;
                (1.0 + s + s * s / 3.0) * scalar::exp(-s)
            }
            KernelSpec::Sum { left, right } => {
                left.eval_at_distance(r) + right.eval_at_distance(r)
            }
            KernelSpec::Product { left, right } => {
                left.eval_at_distance(r) * right.eval_at_distance(r)
            }
            KernelSpec::Scaled { variance, inner } => variance * inner.eval_at_distance(r),
        }
    }

    /// Analytic partials of k(x, x') with respect to every hyperparameter,
    /// in the same pre-order the other parameter accessors use.
    pub fn grad(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, KernelError> {
        if x.len() != y.len() {
            return Err(KernelError::DimensionMismatch { left: x.len(), right: y.len() });
        }
        self.validate()?;
        let mut grads = Vec::with_capacity(self.param_count());
        self.value_and_grad(distance(x, y), &mut grads);
        Ok(grads)
    }

    /// (value, partials appended to `out`) at distance r.
    pub fn value_and_grad(&self, r: f64, out: &mut Vec<f64>) -> f64 {
        match self {
            KernelSpec::Rbf { gamma } => {
                let k = scalar::exp(-(r * r) / (gamma * gamma));
                out.push(k * 2.0 * r * r / (gamma * gamma * gamma));
                k
            }
            KernelSpec::Matern52 { h } => {
                let s = SQRT5 * r / h;
                let e = scalar::exp(-s);
                let k = (1.0 + s + s * s / 3.0) * e;
                out.push(e * s * s * (1.0 + s) / (3.0 * h));
                k
            }
            KernelSpec::Sum { left, right } => {
                let a = left.value_and_grad(r, out);
                let b = right.value_and_grad(r, out);
                a + b
            }
            KernelSpec::Product { left, right } => {
                let start = out.len();
                let a = left.value_and_grad(r, out);
                let mid = out.len();
                let b = right.value_and_grad(r, out);
                for g in &mut out[start..mid] {
                    *g *= b;
                }
                for g in &mut out[mid..] {
                    *g *= a;
                }
                a * b
            }
            KernelSpec::Scaled { variance, inner } => {
                let slot = out.len();
                out.push(0.0);
                let inner_val = inner.value_and_grad(r, out);
                out[slot] = inner_val;
                for g in &mut out[slot + 1..] {
                    *g *= variance;
                }
                variance * inner_val
            }
        }
    }

    /// Gram matrix over a point set; each unordered pair is evaluated once so
    /// the result is exactly symmetric.
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<crate::linalg::Mat, KernelError> {
        self.validate()?;
        let n = points.len();
        let dim = points.first().map_or(0, Vec::len);
        for (row, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(KernelError::RaggedInput { expected: dim, row, got: p.len() });
            }
        }
        let mut m = crate::linalg::Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_at_distance(distance(&points[i], &points[j]));
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Ok(m)
    }

    pub fn param_count(&self) -> usize {
        match self {
            KernelSpec::Rbf { .. } | KernelSpec::Matern52 { .. } => 1,
            KernelSpec::Sum { left, right } | KernelSpec::Product { left, right } => {
                left.param_count() + right.param_count()
            }
            KernelSpec::Scaled { inner, .. } => 1 + inner.param_count(),
        }
    }

    /// Hyperparameters in pre-order (node before children, left before
    /// right); the order `grad`, `set_params`, and the optimizer all share.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut Vec<f64>) {
        match self {
            KernelSpec::Rbf { gamma } => out.push(*gamma),
            KernelSpec::Matern52 { h } => out.push(*h),
            KernelSpec::Sum { left, right } | KernelSpec::Product { left, right } => {
                left.collect_params(out);
                right.collect_params(out);
            }
            KernelSpec::Scaled { variance, inner } => {
                out.push(*variance);
                inner.collect_params(out);
            }
        }
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter();
        self.assign_params(&mut it);
        assert!(it.next().is_none(), "parameter count mismatch");
    }

    fn assign_params<'a>(&mut self, it: &mut impl Iterator<Item = &'a f64>) {
        match self {
            KernelSpec::Rbf { gamma } => *gamma = *it.next().expect("missing gamma"),
            KernelSpec::Matern52 { h } => *h = *it.next().expect("missing h"),
            KernelSpec::Sum { left, right } | KernelSpec::Product { left, right } => {
                left.assign_params(it);
                right.assign_params(it);
            }
            KernelSpec::Scaled { variance, inner } => {
                *variance = *it.next().expect("missing variance");
                inner.assign_params(it);
            }
        }
    }

    /// What each slot of `params()` means, for initialization heuristics.
    pub fn param_kinds(&self) -> Vec<ParamKind> {
        let mut out = Vec::with_capacity(self.param_count());
        self.collect_kinds(&mut out);
        out
    }

    fn collect_kinds(&self, out: &mut Vec<ParamKind>) {
        match self {
            KernelSpec::Rbf { .. } | KernelSpec::Matern52 { .. } => {
                out.push(ParamKind::LengthScale)
            }
            KernelSpec::Sum { left, right } | KernelSpec::Product { left, right } => {
                left.collect_kinds(out);
                right.collect_kinds(out);
            }
            KernelSpec::Scaled { inner, .. } => {
                out.push(ParamKind::Variance);
                inner.collect_kinds(out);
            }
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names("", &mut out);
        out
    }

    fn collect_names(&self, prefix: &str, out: &mut Vec<String>) {
        match self {
            KernelSpec::Rbf { .. } => out.push(format!("{prefix}rbf.gamma")),
            KernelSpec::Matern52 { .. } => out.push(format!("{prefix}matern52.h")),
            KernelSpec::Sum { left, right } => {
                left.collect_names(&format!("{prefix}sum.left."), out);
                right.collect_names(&format!("{prefix}sum.right."), out);
            }
            KernelSpec::Product { left, right } => {
                left.collect_names(&format!("{prefix}product.left."), out);
                right.collect_names(&format!("{prefix}product.right."), out);
            }
            KernelSpec::Scaled { variance: _, inner } => {
                out.push(format!("{prefix}scaled.variance"));
                inner.collect_names(&format!("{prefix}scaled."), out);
            }
        }
    }
}

#[inline]
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = 0.0;
    for i in 0..x.len() {
        let d = x[i] - y[i];
        s += d * d;
    }
    scalar::sqrt(s)
}
