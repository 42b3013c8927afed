//! Arbitrary-precision decimal floats for kernel value oracles.
//!
//! A value is `mantissa * 10^exponent` with the mantissa kept to
//! [`PRECISION`] significant digits. Every finite `f64` converts exactly
//! (a binary float is a finite decimal), so oracle inputs carry no
//! representation error. `exp` uses square-halving plus a Taylor series,
//! which needs no precomputed constants.

use num_bigint::BigInt;
use num_bigint::Sign;

/// Significant decimal digits carried through every operation.
pub const PRECISION: u32 = 60;

#[derive(Clone, Debug)]
pub struct BigDec {
    mant: BigInt,
    exp: i64,
}

impl BigDec {
    pub fn zero() -> Self {
        BigDec { mant: BigInt::from(0), exp: 0 }
    }

    pub fn one() -> Self {
        BigDec { mant: BigInt::from(1), exp: 0 }
    }

    pub fn from_u64(v: u64) -> Self {
        BigDec { mant: BigInt::from(v), exp: 0 }.normalized()
    }

    /// Exact conversion: x = m * 2^e with m, e integers, and
    /// 2^e = 5^e * 10^(-e) for negative e.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "oracle inputs must be finite");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074i64) // subnormal
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let mant = BigInt::from(sign) * BigInt::from(m);
        let out = if e >= 0 {
            BigDec { mant: mant << (e as usize), exp: 0 }
        } else {
            let five = BigInt::from(5u32).pow((-e) as u32);
            BigDec { mant: mant * five, exp: e }
        };
        out.normalized()
    }

    /// Nearest f64 via a 30-significant-digit scientific string; Rust float
    /// parsing is correctly rounded.
    pub fn to_f64(&self) -> f64 {
        if self.mant.sign() == Sign::NoSign {
            return 0.0;
        }
        let digits = self.mant.magnitude().to_string();
        let ndigits = digits.len() as i64;
        // value = 0.digits * 10^(exp + ndigits)
        let keep = 30usize.min(digits.len());
        let head = &digits[..keep];
        let e10 = self.exp + ndigits - keep as i64;
        let sign = if self.mant.sign() == Sign::Minus { "-" } else { "" };
        let s = format!("{sign}{head}e{e10}");
        s.parse::<f64>().expect("scientific literal")
    }

    fn digit_count(&self) -> u32 {
        if self.mant.sign() == Sign::NoSign {
            return 0;
        }
        self.mant.magnitude().to_string().len() as u32
    }

    /// Truncate the mantissa to PRECISION digits (directed rounding; the
    /// 10^-60 relative slack is far below every tolerance we certify).
    fn normalized(mut self) -> Self {
        if self.mant.sign() == Sign::NoSign {
            self.exp = 0;
            return self;
        }
        let nd = self.digit_count();
        if nd > PRECISION {
            let drop = nd - PRECISION;
            let ten = BigInt::from(10u32).pow(drop);
            self.mant /= ten;
            self.exp += drop as i64;
        }
        self
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    pub fn neg(&self) -> Self {
        BigDec { mant: -self.mant.clone(), exp: self.exp }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (self, other);
        if a.mant.sign() == Sign::NoSign {
            return b.clone();
        }
        if b.mant.sign() == Sign::NoSign {
            return a.clone();
        }
        let (lo_exp, a_shift, b_shift) = if a.exp <= b.exp {
            (a.exp, 0, (b.exp - a.exp) as u32)
        } else {
            (b.exp, (a.exp - b.exp) as u32, 0)
        };
        // Cap the alignment shift: with both operands nonzero and at most
        // PRECISION digits, anything this far below the larger operand
        // cannot survive normalization.
        let cap = 2 * PRECISION + 8;
        if a_shift > cap {
            return a.clone();
        }
        if b_shift > cap {
            return b.clone();
        }
        let am = &a.mant * BigInt::from(10u32).pow(a_shift);
        let bm = &b.mant * BigInt::from(10u32).pow(b_shift);
        BigDec { mant: am + bm, exp: lo_exp }.normalized()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        BigDec { mant: &self.mant * &other.mant, exp: self.exp + other.exp }.normalized()
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(other.mant.sign() != Sign::NoSign, "division by zero");
        let scale = 2 * PRECISION + 8;
        let num = &self.mant * BigInt::from(10u32).pow(scale);
        BigDec { mant: num / &other.mant, exp: self.exp - other.exp - scale as i64 }.normalized()
    }

    pub fn div_u32(&self, d: u32) -> Self {
        self.div(&BigDec::from_u64(d as u64))
    }

    /// |self| < 10^p, cheap magnitude test used for range reduction.
    fn abs_lt_pow10(&self, p: i64) -> bool {
        if self.mant.sign() == Sign::NoSign {
            return true;
        }
        (self.digit_count() as i64 + self.exp) <= p
    }

    /// e^x by square-halving: halve x (exact in decimal) until |x| < 1/2,
    /// run the Taylor series, then square back.
    pub fn exp(x: &Self) -> Self {
        let mut halvings = 0u32;
        let mut t = x.clone();
        // |t| < 0.5 once digits+exp <= -1 ... use pow10(0) then one extra halve
        while !t.abs_lt_pow10(-1) {
            // t/2 = t*5 * 10^-1, exact
            t = BigDec { mant: &t.mant * BigInt::from(5u32), exp: t.exp - 1 }.normalized();
            halvings += 1;
            assert!(halvings < 64, "exp argument out of oracle range");
        }
        // Taylor sum
        let mut sum = BigDec::one();
        let mut term = BigDec::one();
        let mut k = 1u32;
        loop {
            term = term.mul(&t).div_u32(k);
            sum = sum.add(&term);
            if term.abs_lt_pow10(-(PRECISION as i64) - 8) {
                break;
            }
            k += 1;
            assert!(k < 500, "series failed to converge");
        }
        for _ in 0..halvings {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// Newton square root seeded and finished with BigInt::sqrt on a
    /// mantissa widened to 2*PRECISION digits.
    pub fn sqrt(x: &Self) -> Self {
        assert!(!x.is_negative(), "sqrt of negative value");
        if x.mant.sign() == Sign::NoSign {
            return Self::zero();
        }
        let widen = 2 * PRECISION + 8;
        let mut mant = &x.mant * BigInt::from(10u32).pow(widen);
        let mut exp = x.exp - widen as i64;
        if exp % 2 != 0 {
            mant *= BigInt::from(10u32);
            exp -= 1;
        }
        let root = mant.sqrt();
        BigDec { mant: root, exp: exp / 2 }.normalized()
    }
}
