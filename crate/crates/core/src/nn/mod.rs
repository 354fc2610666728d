//! Dense networks with exact hand-derived gradients.

mod adam;
mod gradcheck;
mod mlp;

pub use adam::{Adam, ScalarAdam};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use mlp::{ForwardCache, Linear, Mlp, MlpGrads};

use ndarray::NdFloat;
use num_traits::FromPrimitive;

/// Floating-point element type for networks: `f32` for training, `f64` for
/// gradient checks.
pub trait Scalar: NdFloat + FromPrimitive + Default {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any float type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
