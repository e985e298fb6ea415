//! Scalar activation functions with explicit kink metadata.
//!
//! The gradient engines need to know not just values and first derivatives
//! but whether the first derivative jumps somewhere: for kinked activations
//! the classical second derivative misses a Dirac impulse, which is exactly
//! the term the exact-distributional engine restores.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

/// Differentiability class of an activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    /// Continuous, first derivative jumps somewhere (ReLU).
    C0,
    /// Continuously differentiable, second derivative jumps (ReLU squared).
    C1,
    /// Infinitely differentiable.
    CInf,
}

/// Supported scalar activations.
///
/// `ReluSquared` is `max(0, z)²`: the C¹ rectifier whose first derivative is
/// continuous at the origin, which removes the delta from mixed derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[value(name = "relu")]
    Relu,
    #[value(name = "relu2")]
    #[serde(rename = "relu2")]
    ReluSquared,
    #[value(name = "tanh")]
    Tanh,
    #[value(name = "softplus")]
    Softplus,
}

impl Activation {
    pub fn smoothness(self) -> Smoothness {
        match self {
            Activation::Relu => Smoothness::C0,
            Activation::ReluSquared => Smoothness::C1,
            Activation::Tanh | Activation::Softplus => Smoothness::CInf,
        }
    }

    /// True iff the first derivative is discontinuous at argument zero.
    pub fn kink_at_zero(self) -> bool {
        matches!(self, Activation::Relu)
    }

    /// True for activations smooth enough that all gradient engines agree.
    pub fn is_smooth(self) -> bool {
        self.smoothness() != Smoothness::C0
    }

    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::ReluSquared => {
                let r = z.max(0.0);
                r * r
            }
            Activation::Tanh => z.tanh(),
            Activation::Softplus => softplus(z),
        }
    }

    /// First derivative. At the ReLU kink (z = 0) this returns 0, the same
    /// subgradient choice mainstream autodiff makes.
    pub fn d1(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::ReluSquared => 2.0 * z.max(0.0),
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Softplus => logistic(z),
        }
    }

    /// Classical (pointwise) part of the second derivative. For ReLU this is
    /// identically zero; the distributional impulse at the kink is carried
    /// separately as a [`crate::network::DeltaEvent`].
    pub fn d2_smooth(self, z: f64) -> f64 {
        match self {
            Activation::Relu => 0.0,
            Activation::ReluSquared => {
                if z > 0.0 {
                    2.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Activation::Softplus => {
                let s = logistic(z);
                s * (1.0 - s)
            }
        }
    }

    /// Spatial location of the neuron's kink, `x̂ = -θ²/θ¹`, when the
    /// activation has one and the inner weight is nonzero.
    pub fn kink_location(self, theta1: f64, theta2: f64) -> Option<f64> {
        if self.kink_at_zero() && theta1 != 0.0 {
            Some(-theta2 / theta1)
        } else {
            None
        }
    }
}

fn softplus(z: f64) -> f64 {
    // ln(1 + e^z) without overflowing for large |z|
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
