use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometry kernel is generic over.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale the
/// internal invariant checks with the precision of the type.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Orthonormality / bottom-row tolerance for internally constructed values.
    const STRICT_TOL: f64;

    /// Relative spread below which a point configuration counts as degenerate.
    const DEGENERATE_RATIO: f64;

    #[inline]
    fn lit(v: f64) -> Self {
        // Every f64 literal is representable (possibly rounded) in f32/f64.
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const STRICT_TOL: f64 = 1e-4;
    const DEGENERATE_RATIO: f64 = 3e-4;
}

impl Real for f64 {
    const STRICT_TOL: f64 = 1e-9;
    const DEGENERATE_RATIO: f64 = 1e-8;
}
