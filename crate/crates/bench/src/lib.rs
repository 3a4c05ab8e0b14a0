//! Shared fixtures for the benchmarks.

use qcascade_core::delay::DelayNetwork;
use qcascade_core::example::example_network;

/// The reference squeezer/beamsplitter/delay network.
pub fn reference_network() -> DelayNetwork {
    example_network().expect("preset parameters are valid")
}
