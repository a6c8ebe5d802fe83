//! Frequency-biased training of two-layer ReLU networks on spherical data:
//! harmonic bases, positive quadrature, the neural tangent kernel and its
//! spectrum, quadrature-weighted and Sobolev losses, gradient descent, and
//! diagnostics that compare observed training against kernel predictions.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod harmonics;
pub mod ntk;
pub mod numerics;
pub mod quadrature;
pub mod sobolev;
pub mod sphere;
pub mod trainer;

pub use error::{Error, Result};
pub use harmonics::{HarmonicExpansion, HarmonicIndex};
pub use ntk::{GeneralizedSpectrum, KernelMatrix, KernelSpectrum};
pub use quadrature::QuadratureRule;
pub use sobolev::{ImageSobolevMask, SobolevOperator};
pub use sphere::{SpherePoint, SpherePointSet};
pub use trainer::{LossOperator, TrainConfig, TrainingTrace, TwoLayerReluNet};
