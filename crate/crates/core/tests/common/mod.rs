#![allow(dead_code)]

use qcascade_core::delay::{DelayNetwork, DelaySpec};
use qcascade_core::lti::{RationalTf, SlhModel};
use std::f64::consts::PI;

/// Seeded random network: one external port, one or two delayed loops with delays 1 and 2.
pub fn random_network(seed: u64) -> DelayNetwork {
    let modes = 1 + (seed % 2) as usize;
    let n_int = 1 + ((seed / 2) % 2) as usize;
    let slh = SlhModel::random(modes, 1 + n_int, seed);
    let delays: Vec<f64> = (1..=n_int).map(|k| k as f64).collect();
    let open = RationalTf::from_slh(&slh).expect("random SLH realizable");
    DelayNetwork::new(open, 1, DelaySpec::checked(delays, 1.0).unwrap()).unwrap()
}

/// Seeded delay-free system with state dimension 2 or 4 and one or two port modes.
pub fn random_finite(seed: u64) -> RationalTf {
    let modes = 1 + (seed % 2) as usize;
    let ports = 1 + ((seed / 2) % 2) as usize;
    RationalTf::from_slh(&SlhModel::random(modes, ports, seed)).unwrap()
}

/// Half-period-and-a-bit window for base period 1.
pub fn random_window() -> f64 {
    PI + 0.37
}

pub fn omega_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}
