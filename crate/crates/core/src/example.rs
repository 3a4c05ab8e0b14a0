//! Squeezer, beamsplitter and delay: the reference network.
//!
//! A degenerate parametric amplifier (decay rate `κ`, squeezing strength `ε`)
//! drives one input of a beamsplitter with transmissivity `η`. The second
//! beamsplitter output returns to its second input after a delay `T`.

use crate::delay::{DelayNetwork, DelaySpec};
use crate::error::Result;
use crate::linalg::{c, CMat};
use crate::lti::{RationalTf, SlhModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    pub delay: f64,
    pub eta: f64,
    pub kappa: f64,
    pub epsilon: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        Self { delay: 2.0, eta: 0.6, kappa: 1.0, epsilon: 0.2 }
    }
}

impl ExampleParams {
    /// Reflectivity `√(1 − η²)`, which is also the constant loop gain.
    pub fn reflectivity(&self) -> f64 {
        (1.0 - self.eta * self.eta).sqrt()
    }

    /// Open-loop model: squeezer output into beamsplitter port 1, port 2 free.
    pub fn open_model(&self) -> Result<SlhModel> {
        let r = self.reflectivity();
        let s = CMat::from_row_slice(2, 2, &[c(-r, 0.0), c(self.eta, 0.0), c(self.eta, 0.0), c(r, 0.0)]);
        let sk = self.kappa.sqrt();
        SlhModel::single_mode(s, &[c(-r * sk, 0.0), c(self.eta * sk, 0.0)], &[c(0.0, 0.0); 2], 0.0, c(0.0, self.epsilon))
    }

    /// Squeezer alone as a one-port model.
    pub fn squeezer(&self) -> Result<SlhModel> {
        SlhModel::single_mode(CMat::identity(1, 1), &[c(self.kappa.sqrt(), 0.0)], &[c(0.0, 0.0)], 0.0, c(0.0, self.epsilon))
    }

    pub fn network(&self) -> Result<DelayNetwork> {
        let open = RationalTf::from_slh(&self.open_model()?)?;
        DelayNetwork::new(open, 1, DelaySpec::checked(vec![self.delay], self.delay)?)
    }

    /// Poles of the squeezer, `−κ/2 ± ε`.
    pub fn squeezer_poles(&self) -> [f64; 2] {
        [-0.5 * self.kappa + self.epsilon, -0.5 * self.kappa - self.epsilon]
    }

    /// Real part of the loop-generated poles, `ln(r)/T`.
    pub fn loop_pole_real_part(&self) -> f64 {
        self.reflectivity().ln() / self.delay
    }
}

/// The reference network with default parameters.
pub fn example_network() -> Result<DelayNetwork> {
    ExampleParams::default().network()
}
