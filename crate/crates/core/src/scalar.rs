//! Transcendental shims: `std` intrinsics when available, `libm` otherwise.

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("fpaug-core needs either the `std` or the `libm` feature");

macro_rules! shim {
    ($name:ident, $libm:ident) => {
        #[inline]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$name()
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm(x)
            }
        }
    };
}

shim!(exp, exp);
shim!(ln, log);
shim!(sqrt, sqrt);
shim!(abs, fabs);
shim!(cos, cos);
shim!(sin, sin);

/// Round half to even, matching the dataset's integer quantization contract.
#[inline]
pub fn round_ties_even(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.round_ties_even()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::rint(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_round_to_even() {
        assert_eq!(round_ties_even(-96.5), -96.0);
        assert_eq!(round_ties_even(-97.5), -98.0);
        assert_eq!(round_ties_even(2.5), 2.0);
    }
}
