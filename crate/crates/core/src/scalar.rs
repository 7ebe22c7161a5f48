use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex64;
use num_traits::NumAssign;

/// Field element over which residuals are evaluated.
///
/// Models write their residual once, generically, and get both a real
/// evaluator (time marching, trim, Jacobians) and a complex one (perturbation
/// along complex eigenvectors when building interaction coefficients).
pub trait Scalar: NumAssign + Neg<Output = Self> + Copy + Debug + Send + Sync + 'static {
    fn from_real(x: f64) -> Self;
    fn real_part(self) -> f64;
    fn is_finite_value(self) -> bool;

    #[inline]
    fn scale(self, k: f64) -> Self {
        self * Self::from_real(k)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn real_part(self) -> f64 {
        self
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn real_part(self) -> f64 {
        self.re
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Complex64::new(self.re * k, self.im * k)
    }
}
