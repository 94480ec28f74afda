mod common;

use common::*;
use thermoshift_core::{DimensionParams, Error, IfsSystem, Interval, MapFamily, Model, Potential};

fn family(sys: IfsSystem) -> impl Fn(f64) -> thermoshift_core::Result<Model> {
    move |s| Model::new(sys.clone(), Potential::Geometric { s })
}

/// log Σ_{|ω|=n} q_n(ω)^{−2s} over digit words, from the continuant recurrence.
fn continuant_log_sum(digits: &[u64], n: usize, s: f64) -> f64 {
    let mut stack = vec![(1u64, 0u64, 0usize)];
    let mut acc = 0.0f64;
    while let Some((q, q_prev, k)) = stack.pop() {
        if k == n {
            acc += (q as f64).powf(-2.0 * s);
            continue;
        }
        for &d in digits {
            stack.push((d * q + q_prev, q, k + 1));
        }
    }
    acc.ln()
}

fn continuant_pressure(s: f64) -> f64 {
    continuant_log_sum(&[1, 2], 18, s) - continuant_log_sum(&[1, 2], 17, s)
}

#[test]
fn continuant_oracle_brackets_the_root() {
    assert!(continuant_pressure(0.528) > 0.0);
    assert!(continuant_pressure(0.534) < 0.0);
}

#[test]
fn cf_digits_root() {
    let params = DimensionParams::default();
    let r = thermoshift_core::dimension::solve_dimension(family(cf12_system()), &cut(2), 0.4, 0.7, &params).unwrap();
    assert!(r.overlap && r.monotone);
    assert!(r.combined.1 - r.combined.0 <= 1e-3);
    assert!(r.agreement <= 1e-4);
    assert!(r.s_star > 0.528 && r.s_star < 0.534);

    let (mut a, mut b) = (0.528, 0.534);
    for _ in 0..40 {
        let m = 0.5 * (a + b);
        if continuant_pressure(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    assert!((r.s_star - a).abs() < 2e-4, "{} vs oracle {a}", r.s_star);
    assert!((a - 0.5312805).abs() < 1e-5);
}

#[test]
fn trivial_roots() {
    let params = DimensionParams {
        depth: 8,
        ..Default::default()
    };
    let single = IfsSystem::new(Interval::unit(), MapFamily::affine(&[(0.5, 0.0)])).unwrap();
    let r = thermoshift_core::dimension::solve_dimension(family(single), &cut(1), -1.0, 0.7, &params).unwrap();
    assert!(r.s_star.abs() < 1e-4 && r.lambda_root.abs() < 1e-4);

    let r = thermoshift_core::dimension::solve_dimension(family(halving()), &cut(2), 0.3, 1.6, &params).unwrap();
    assert!((r.s_star - 1.0).abs() < 1e-4 && (r.lambda_root - 1.0).abs() < 1e-4);
    assert!(r.overlap && r.monotone);
}

#[test]
fn bracket_must_straddle() {
    let err = thermoshift_core::dimension::solve_dimension(
        family(cf12_system()),
        &cut(2),
        0.6,
        0.9,
        &DimensionParams::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::BracketInvalid { .. }));
}
