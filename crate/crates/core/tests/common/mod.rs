#![allow(dead_code)]

use thermoshift_core::{AlphabetCutoff, IfsSystem, Interval, MapFamily, Model, Potential};

pub fn cut(n: u32) -> AlphabetCutoff {
    AlphabetCutoff::with_cap(n, 1 << 24).unwrap()
}

pub fn cantor() -> IfsSystem {
    IfsSystem::new(
        Interval::unit(),
        MapFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]),
    )
    .unwrap()
}

pub fn halving() -> IfsSystem {
    IfsSystem::new(Interval::unit(), MapFamily::affine(&[(0.5, 0.0), (0.5, 0.5)])).unwrap()
}

pub fn constant(sys: IfsSystem, values: &[f64]) -> Model {
    Model::new(
        sys,
        Potential::Constant {
            values: values.to_vec(),
        },
    )
    .unwrap()
}

/// Constant potentials (log ½, log ½) on the middle-thirds Cantor maps.
pub fn bernoulli_half() -> Model {
    constant(cantor(), &[0.5f64.ln(), 0.5f64.ln()])
}

/// Constant potentials (log 2, log 3) on the middle-thirds Cantor maps.
pub fn bernoulli_23() -> Model {
    constant(cantor(), &[2f64.ln(), 3f64.ln()])
}

pub fn geometric_tail() -> Model {
    let sys = IfsSystem::new(Interval::unit(), MapFamily::GeometricTail).unwrap();
    Model::new(
        sys,
        Potential::LinearTail {
            rate: std::f64::consts::LN_2,
        },
    )
    .unwrap()
}

pub fn cf12_system() -> IfsSystem {
    IfsSystem::new(
        Interval::new(1.0 / 3.0, 1.0).unwrap(),
        MapFamily::continued_fraction(&[1, 2]),
    )
    .unwrap()
}

pub fn cf12(s: f64) -> Model {
    Model::new(cf12_system(), Potential::Geometric { s }).unwrap()
}
