//! Kernel value oracles (big-decimal route) and a plain f64 mirror of the
//! kernel expression tree for the naive GP.

use crate::bigdec::BigDec;

/// exp(-r^2 / gamma^2) evaluated in 60-digit decimal arithmetic.
pub fn rbf_value(r: f64, gamma: f64) -> f64 {
    let r = BigDec::from_f64(r);
    let g = BigDec::from_f64(gamma);
    let arg = r.mul(&r).div(&g.mul(&g)).neg();
    BigDec::exp(&arg).to_f64()
}

/// (1 + sqrt5*r/h + 5*r^2/(3*h^2)) * exp(-sqrt5*r/h) in 60-digit decimal.
pub fn matern52_value(r: f64, h: f64) -> f64 {
    let r = BigDec::from_f64(r);
    let h = BigDec::from_f64(h);
    let s5 = BigDec::sqrt(&BigDec::from_u64(5));
    let s = s5.mul(&r).div(&h);
    let quad = BigDec::from_u64(5)
        .mul(&r)
        .mul(&r)
        .div(&BigDec::from_u64(3).mul(&h).mul(&h));
    let poly = BigDec::one().add(&s).add(&quad);
    poly.mul(&BigDec::exp(&s.neg())).to_f64()
}

/// f64 mirror of the production kernel grammar. Evaluation here is written
/// directly from the closed forms and shares no code with the crate under
/// test.
#[derive(Clone, Debug)]
pub enum RefKernel {
    Rbf { gamma: f64 },
    Matern52 { h: f64 },
    Sum(Box<RefKernel>, Box<RefKernel>),
    Product(Box<RefKernel>, Box<RefKernel>),
    Scaled { variance: f64, inner: Box<RefKernel> },
}

impl RefKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = dist(a, b);
        self.eval_r(r)
    }

    pub fn eval_r(&self, r: f64) -> f64 {
        match self {
            RefKernel::Rbf { gamma } => (-(r * r) / (gamma * gamma)).exp(),
            RefKernel::Matern52 { h } => {
                let s = 5f64.sqrt() * r / h;
                (1.0 + s + 5.0 * r * r / (3.0 * h * h)) * (-s).exp()
            }
            RefKernel::Sum(l, rgt) => l.eval_r(r) + rgt.eval_r(r),
            RefKernel::Product(l, rgt) => l.eval_r(r) * rgt.eval_r(r),
            RefKernel::Scaled { variance, inner } => variance * inner.eval_r(r),
        }
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
