//! Shared fixtures for the benchmarks.

use polybubble::ansatz::Ansatz;
use polybubble::cutoff::Cutoff;
use polybubble::{DoubledCircleConfig, SpaceParams};

/// `(6, 1)` with `iota = 1/2`.
pub fn space_6_1() -> SpaceParams {
    SpaceParams::pipeline(6, 1, 0.5).expect("valid pipeline parameters")
}

/// Doubled circle of `k` points per circle at `r = 1`, `h = 0.5`.
pub fn doubled_circle(k: usize, n: usize) -> DoubledCircleConfig {
    DoubledCircleConfig::new(k, 1.0, 0.5, vec![0.0; n - 3]).expect("valid configuration")
}

/// Cut-off ansatz with `k` bubbles per circle at concentration `lambda`.
pub fn ansatz(k: usize, lambda: f64) -> Ansatz {
    let sp = space_6_1();
    let cut = Cutoff::new(1.0, vec![0.0; 3], 0.1, sp.m).expect("valid cutoff");
    Ansatz::new(&doubled_circle(k, sp.n), lambda, Some(cut), &sp).expect("valid ansatz")
}

/// A point in the cutoff annulus, where `E_k` needs the commutator stencil.
pub fn annulus_point() -> Vec<f64> {
    vec![1.15, 0.0, 0.0, 0.02, -0.01, 0.0]
}
