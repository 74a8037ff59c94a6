//! Shared fixtures for the criterion benchmarks.

use num_complex::Complex64;
use opo_core::{PhaseSpaceState, Representation, SystemParams, Topology};

pub fn bench_params() -> SystemParams {
    SystemParams::symmetric(10.0, 1.0, 0.1, 220.0)
}

/// A generic regime-3-scale state with nonzero phases on every mode.
pub fn bench_state(representation: Representation) -> PhaseSpaceState {
    let amps: Vec<Complex64> = (0..5)
        .map(|m| Complex64::from_polar(1.0 + 3.0 * m as f64, 0.3 * m as f64))
        .collect();
    let classical = PhaseSpaceState::new(Representation::Classical, amps);
    match representation {
        Representation::Classical => classical,
        Representation::Wigner => {
            PhaseSpaceState::new(Representation::Wigner, classical.amplitudes)
        }
        Representation::PositiveP => classical.to_positive_p(),
    }
}

pub fn bench_topology() -> Topology {
    Topology::Nondegenerate
}
