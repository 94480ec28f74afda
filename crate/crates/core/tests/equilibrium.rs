mod common;

use common::*;
use thermoshift_core::equilibrium::{
    block_entropy, check_finiteness, entropy_rate, equilibrium_defect, integral_phi, partition_entropy, Finiteness,
};
use thermoshift_core::pressure::pressure_estimate;
use thermoshift_core::{GibbsTable, IfsSystem, Interval, MapFamily, Model, Potential, SpectralParams, Spectrum};

fn table(m: &Model, n: u32, depth: usize) -> (Spectrum, GibbsTable) {
    let sp = Spectrum::compute(m, &cut(n), &SpectralParams::default()).unwrap();
    let t = GibbsTable::build(m, &cut(n), depth, &sp).unwrap();
    (sp, t)
}

fn two_atom(p: f64) -> f64 {
    -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
}

fn cf_tail(s: f64) -> Model {
    let sys = IfsSystem::new(Interval::unit(), MapFamily::ContinuedFractionTail { first_digit: 2 }).unwrap();
    Model::new(sys, Potential::Geometric { s }).unwrap()
}

#[test]
fn bernoulli_entropy_is_exact() {
    let m = bernoulli_half();
    let (sp, t) = table(&m, 2, 8);
    let (h, tail) = partition_entropy(&t, &m, &cut(2));
    assert!((h - 2f64.ln()).abs() < 1e-14);
    assert_eq!(tail, Some(0.0));
    for n in 1..=8 {
        assert!((entropy_rate(&t, n) - 2f64.ln()).abs() < 1e-12);
    }
    let (phi, _) = integral_phi(&t, &m, &cut(2), 8);
    assert!((phi + 2f64.ln()).abs() < 1e-14);
    let r = equilibrium_defect(&m, &t, &cut(2), 1e-12, sp.log_lambda_uncertainty());
    assert!(r.defect < 1e-12 && r.defect_alpha < 1e-12 && r.pass);

    // weights 2/5, 3/5 and λ = 5
    let m = bernoulli_23();
    let (sp, t) = table(&m, 2, 6);
    let h1 = block_entropy(&t, 1);
    assert!((h1 - two_atom(0.4)).abs() < 1e-12);
    assert!((h1 - (5f64.ln() - 0.4 * 2f64.ln() - 0.6 * 3f64.ln())).abs() < 1e-12);
    for n in 1..=6 {
        assert!((block_entropy(&t, n) - n as f64 * h1).abs() < 1e-11);
    }
    let (phi, _) = integral_phi(&t, &m, &cut(2), 3);
    assert!((phi - (0.4 * 2f64.ln() + 0.6 * 3f64.ln())).abs() < 1e-12);
    let p = pressure_estimate(&m, &cut(2), 10, &[]).unwrap();
    let r = equilibrium_defect(&m, &t, &cut(2), p.upper, sp.log_lambda_uncertainty());
    assert!(r.defect < 1e-10 && r.defect_alpha < 1e-10, "{r:?}");
    assert!(r.pass && r.variational_ok && r.rate_monotone);
}

#[test]
fn geometric_family_entropy_series() {
    let m = geometric_tail();
    let (sp, t) = table(&m, 40, 2);
    let (h, tail) = partition_entropy(&t, &m, &cut(40));
    // Σ i·2⁻ⁱ·log 2 = 2 log 2
    assert!((h - 2.0 * 2f64.ln()).abs() < 1e-4);
    assert!(tail.unwrap() < 1e-9);
    let (phi, _) = integral_phi(&t, &m, &cut(40), 2);
    assert!((phi + 2.0 * 2f64.ln()).abs() < 1e-4);

    let l = check_finiteness(&m, &t, &cut(40));
    for c in [&l.a, &l.b, &l.c] {
        assert_eq!(c.verdict, Finiteness::Finite);
        assert!(c.margin.unwrap() > 0.0);
    }
    assert!((l.b.head - 2.0 * 2f64.ln()).abs() < 1e-9);
    assert!(l.coherent);

    let p = pressure_estimate(&m, &cut(40), 8, &[]).unwrap();
    let r = equilibrium_defect(&m, &t, &cut(40), p.upper, sp.log_lambda_uncertainty());
    assert!(r.pass, "{r:?}");
}

#[test]
fn cf_digits_equilibrium() {
    let m = cf12(0.5313);
    let (sp, t) = table(&m, 2, 6);
    // H_n/n stabilises between depths five and six
    assert!((entropy_rate(&t, 5) - entropy_rate(&t, 6)).abs() < 1e-2);
    let p = pressure_estimate(&m, &cut(2), 12, &[]).unwrap();
    let r = equilibrium_defect(&m, &t, &cut(2), p.upper, sp.log_lambda_uncertainty());
    assert!(r.defect <= 2e-2);
    assert!(r.pass && r.variational_ok && r.rate_monotone, "{r:?}");
    assert!(r
        .entropy_n
        .windows(2)
        .all(|w| w[1].conditional <= w[0].conditional + 1e-9));
}

#[test]
fn cf_tail_conditions_agree() {
    let m = cf_tail(1.0);
    let (_, t) = table(&m, 50, 1);
    let l = check_finiteness(&m, &t, &cut(50));
    for c in [&l.a, &l.b, &l.c] {
        assert_eq!(c.verdict, Finiteness::Finite, "{l:?}");
        assert!((c.margin.unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(l.coherent);
    // Σ_{i≥2} 2 log i/(i+1)² over the digits ≥ 2, bracketed from below by the X = [0,1] range
    let oracle: f64 = (2..=51)
        .map(|d: u32| 2.0 * (d as f64).ln() / ((d + 1) as f64).powi(2))
        .sum();
    assert!(l.b.head >= oracle - 1e-12 && l.b.head <= oracle * 1.5);
}
