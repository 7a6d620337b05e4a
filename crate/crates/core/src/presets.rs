//! Ready-made validated parameter sets used by the tests, the CLI examples
//! and the toll-gate simulation.

use crate::model::{ModelParams, State, Variant};

/// Toll-gate example data: curvature law with a = 0, R = 1, sigma = 3/10,
/// V_f = V_c = 1, markers w in [-2/5, 3/10].
pub fn pt0_tollgate() -> ModelParams {
    ModelParams::new(Variant::PTa { a: 0.0, sigma: 0.3 }, 1.0, 1.0, 1.0, -0.4, 0.3)
        .expect("tollgate parameters validate")
}

/// The toll-gate law with the congested cap lowered to V_c = 4/5
/// (non-intersecting phases).
pub fn pt0_disjoint() -> ModelParams {
    ModelParams::new(Variant::PTa { a: 0.0, sigma: 0.3 }, 1.0, 0.8, 1.0, -0.4, 0.3)
        .expect("disjoint tollgate parameters validate")
}

/// Curvature law with a != 0 (strictly curved Lax curves everywhere).
pub fn pta_curved() -> ModelParams {
    ModelParams::new(Variant::PTa { a: -0.08, sigma: 0.3 }, 1.0, 1.0, 1.0, -0.1, 0.3)
        .expect("curved-law parameters validate")
}

/// Pressure law, gamma = 1, intersecting phases.
pub fn ptp_intersecting() -> ModelParams {
    ModelParams::new(Variant::PTp { gamma: 1.0 }, 0.3, 0.3, 1.0, 0.7, 1.0)
        .expect("pressure-law parameters validate")
}

/// Pressure law, gamma = 1, V_c < V_f.
pub fn ptp_disjoint() -> ModelParams {
    ModelParams::new(Variant::PTp { gamma: 1.0 }, 0.3, 0.2, 1.0, 0.7, 1.0)
        .expect("pressure-law parameters validate")
}

/// Pressure law with a small V_f so that markers below 1 are admissible.
pub fn ptp_smallv() -> ModelParams {
    ModelParams::new(Variant::PTp { gamma: 1.0 }, 0.2, 0.15, 1.0, 0.45, 1.0)
        .expect("pressure-law parameters validate")
}

/// Toll-gate scenario constants: gate capacity and the initial blocks of
/// stopped vehicles.
pub struct TollGate {
    pub f: f64,
    pub x1: f64,
    pub x2: f64,
    pub u1: State,
    pub u2: State,
}

pub fn tollgate_scenario() -> TollGate {
    TollGate {
        f: 3.0 / 25.0,
        x1: -5.0,
        x2: -1.0,
        u1: State::new(1.0, -0.4),
        u2: State::new(1.0, 0.3),
    }
}
