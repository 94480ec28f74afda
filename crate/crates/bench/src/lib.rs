//! Fixture models shared by the benchmarks.

use thermoshift_core::{IfsSystem, Interval, MapFamily, Model, Potential};

/// Continued-fraction maps 1/(d + x) for d ∈ {1, 2} on [1/3, 1] with the
/// geometric potential −2s·log(d + x).
pub fn cf12(s: f64) -> Model {
    let sys = IfsSystem::new(
        Interval::new(1.0 / 3.0, 1.0).expect("valid interval"),
        MapFamily::continued_fraction(&[1, 2]),
    )
    .expect("contracting system");
    Model::new(sys, Potential::Geometric { s }).expect("certified potential")
}

/// Maps 2^{-i}(1 + x/4) on [0, 1] with φ⁽ⁱ⁾ ≡ −i·log 2.
pub fn geometric_tail() -> Model {
    let sys = IfsSystem::new(Interval::unit(), MapFamily::GeometricTail).expect("contracting system");
    Model::new(
        sys,
        Potential::LinearTail {
            rate: std::f64::consts::LN_2,
        },
    )
    .expect("certified potential")
}
