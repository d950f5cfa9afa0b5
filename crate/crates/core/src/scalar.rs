//! Numeric traits the metric and similarity code is generic over.
//!
//! Agreement statistics that only need field arithmetic (Cohen's and
//! Fleiss' kappa, means) are written against [`Scalar`], so they can be
//! evaluated exactly over [`num_rational::Ratio`] as well as over `f32`/`f64`.
//! Anything that needs a square root (cosine similarity, Spearman's rho)
//! requires [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num};

/// A number type closed under `+ - * /` that can be built from counts.
pub trait Scalar: Num + FromPrimitive + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// Converts a count into the scalar type.
    ///
    /// Panics if the count is not representable, which for the supported
    /// types only happens far beyond any realistic panel or corpus size.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    fn from_rating(r: u8) -> Self {
        Self::from_u8(r).expect("rating not representable in scalar type")
    }
}

impl<T> Scalar for T where T: Num + FromPrimitive + Copy + PartialOrd + Debug + Send + Sync + 'static {}

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Scalar + Float {}

impl<T> Real for T where T: Scalar + Float {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn mean<T: Scalar>(xs: &[T]) -> T {
        let sum = xs.iter().fold(T::zero(), |acc, &x| acc + x);
        sum / T::from_count(xs.len())
    }

    #[test]
    fn counts_convert_for_all_backends() {
        assert_eq!(mean(&[1.0f64, 2.0, 4.0]), 7.0 / 3.0);
        assert_eq!(mean(&[1.0f32, 3.0]), 2.0);
        let exact = mean(&[Ratio::from_integer(1i64), Ratio::from_integer(2)]);
        assert_eq!(exact, Ratio::new(3, 2));
    }
}
