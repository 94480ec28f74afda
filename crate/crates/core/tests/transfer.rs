mod common;

use common::*;
use proptest::prelude::*;
use thermoshift_core::transfer::{apply_hat, check_bounds_q, convergence_profile, eigenmeasure, power_iteration};
use thermoshift_core::{shift::enumerate_words, Grid, GridFunction, HatOperator, Interval, SpectralParams, Spectrum};

fn grid_of(model: &thermoshift_core::Model, cells: usize) -> Grid {
    Grid::new(*model.system().domain(), cells).unwrap()
}

#[test]
fn apply_hat_examples() {
    let m = bernoulli_half();
    let one = GridFunction::constant(grid_of(&m, 64), 1.0);
    let (out, ledger) = apply_hat(&m, &one, &cut(2)).unwrap();
    assert!(out.values().iter().all(|&v| v == 1.0));
    assert_eq!(ledger.total(), 0.0);

    let m = geometric_tail();
    let one = GridFunction::constant(grid_of(&m, 64), 1.0);
    let (out, ledger) = apply_hat(&m, &one, &cut(40)).unwrap();
    for v in out.values() {
        assert!((v - (1.0 - 2f64.powi(-40))).abs() < 1e-15);
    }
    assert!((ledger.total() - 2f64.powi(-40)).abs() < 1e-25);

    let m = cf12(1.0);
    let grid = grid_of(&m, 100);
    let one = GridFunction::constant(grid, 1.0);
    let (out, _) = apply_hat(&m, &one, &cut(2)).unwrap();
    for (k, v) in out.values().iter().enumerate() {
        let x = grid.node(k);
        let expected = (1.0 + x).powi(-2) + (2.0 + x).powi(-2);
        assert!((v - expected).abs() < 1e-14);
    }
}

#[test]
fn power_iteration_examples() {
    let m = bernoulli_half();
    let op = HatOperator::new(&m, &cut(2), grid_of(&m, 128)).unwrap();
    let e = power_iteration(&op, 1e-12, 100).unwrap();
    assert_eq!(e.lambda, 1.0);
    assert_eq!(e.residual, 0.0);
    assert!(e.h.values().iter().all(|&v| v == 1.0));

    let m = bernoulli_23();
    let op = HatOperator::new(&m, &cut(2), grid_of(&m, 128)).unwrap();
    let e = power_iteration(&op, 1e-12, 100).unwrap();
    assert!((e.lambda - 5.0).abs() < 1e-12);
    assert!(e.h.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
}

#[test]
fn power_iteration_near_dimension_root() {
    let m = cf12(0.5313);
    let op = HatOperator::new(&m, &cut(2), grid_of(&m, 2048)).unwrap();
    let e = power_iteration(&op, 1e-10, 1000).unwrap();
    assert!((e.lambda - 1.0).abs() < 1e-3, "{}", e.lambda);
    assert!(e.residual <= 1e-10);
    assert!(e.h.inf() > 0.0);
}

#[test]
fn eigenmeasure_examples() {
    let m = constant(halving(), &[0.5f64.ln(), 0.5f64.ln()]);
    let grid = grid_of(&m, 1024);
    let d = eigenmeasure(&m, &cut(2), &grid, 4096, 1e-10, 1000).unwrap();
    assert!((d.lambda_dual - 1.0).abs() < 1e-12);
    let half = d.measure.mass_in(&Interval::new(0.0, 0.5).unwrap());
    assert!((half - 0.5).abs() < 2.0 / 1024.0, "{half}");

    let m = bernoulli_23();
    let grid = grid_of(&m, 1024);
    let d = eigenmeasure(&m, &cut(2), &grid, 4096, 1e-10, 1000).unwrap();
    assert!((d.lambda_dual - 5.0).abs() < 1e-9);

    let m = bernoulli_half();
    let grid = grid_of(&m, 1024);
    let d = eigenmeasure(&m, &cut(2), &grid, 4096, 1e-10, 1000).unwrap();
    let first = d.measure.mass_in(&Interval::new(0.0, 1.0 / 3.0).unwrap());
    assert!((first - 0.5).abs() < 1e-10);
}

#[test]
fn atom_cap_preserves_mass() {
    let m = cf12(0.6);
    let grid = grid_of(&m, 512);
    let d = eigenmeasure(&m, &cut(2), &grid, 40, 1e-10, 1000).unwrap();
    assert!(d.measure.len() <= 40);
    assert!((d.measure.mass() - 1.0).abs() < 1e-12);
}

#[test]
fn primal_and_dual_agree_on_cf() {
    for s in [0.5313, 0.8, 1.0] {
        let m = cf12(s);
        let sp = Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap();
        assert!(sp.lambda_gap < 1e-6, "s = {s}: gap {}", sp.lambda_gap);
        let norm = sp.measure().integrate(|x| sp.h().eval(x));
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(sp.ledger.total() < 1e-5, "{:?}", sp.ledger);
    }
}

#[test]
fn bounds_examples() {
    let m = bernoulli_half();
    let op = HatOperator::new(&m, &cut(2), grid_of(&m, 64)).unwrap();
    let r = check_bounds_q(&op, m.distortion().q, 10, 0.0, 0.0);
    assert!(r.pass);
    assert!(r.rows.iter().all(|row| row.min == 1.0 && row.max == 1.0));

    let m = geometric_tail();
    let op = HatOperator::new(&m, &cut(40), grid_of(&m, 64)).unwrap();
    let r = check_bounds_q(&op, m.distortion().q, 10, 0.0, 0.0);
    assert!(r.pass);
    for row in &r.rows {
        let expected = (1.0 - 2f64.powi(-40)).powi(row.n as i32);
        assert!((row.max - expected).abs() < 1e-14);
    }

    let m = cf12(1.0);
    let sp = Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap();
    let r = check_bounds_q(
        sp.operator(),
        m.distortion().q,
        30,
        sp.lambda().ln(),
        sp.log_lambda_uncertainty(),
    );
    assert!(r.pass, "{:?}", r.rows.iter().find(|row| !row.pass));
}

#[test]
fn convergence_profile_examples() {
    let m = bernoulli_half();
    let sp = Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap();
    let one = GridFunction::constant(*sp.h().grid(), 1.0);
    let p = convergence_profile(sp.operator(), &sp.eigen, sp.measure(), &one, 8);
    assert!(p.errors.iter().all(|&e| e < 1e-12));

    let m = cf12(1.0);
    let sp = Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap();
    let p = convergence_profile(sp.operator(), &sp.eigen, sp.measure(), sp.h(), 10);
    assert!(p.errors.iter().all(|&e| e < 1e-8));
    let x = GridFunction::from_fn(*sp.h().grid(), |x| x);
    let p = convergence_profile(sp.operator(), &sp.eigen, sp.measure(), &x, 12);
    assert!(p.errors[5] < p.errors[0]);
    assert!(p.rate.unwrap() < 1.0);
}

#[test]
fn dual_pairing() {
    let m = cf12(0.7);
    let sp = Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap();
    let g = GridFunction::from_fn(*sp.h().grid(), |x| (3.0 * x).sin() + 2.0);
    let lg = sp.operator().apply(&g);
    let lhs = sp.measure().integrate(|x| lg.eval(x));
    let rhs = sp.lambda_dual() * sp.measure().integrate(|x| g.eval(x));
    assert!((lhs - rhs).abs() <= 1e-6 * g.sup_abs(), "{lhs} vs {rhs}");
}

#[test]
fn eigenmeasure_lives_on_the_limit_set() {
    let m = cf12(0.7);
    let sp = Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap();
    let pad = sp.h().grid().step();
    for n in 1..=4 {
        let mass: f64 = enumerate_words(n, &cut(2))
            .unwrap()
            .map(|w| {
                let iv = m.system().word_image(&w).unwrap();
                sp.measure().mass_in(&Interval::new(iv.lo - pad, iv.hi + pad).unwrap())
            })
            .sum();
        assert!(mass >= 1.0 - 1e-9, "n = {n}: {mass}");
    }
}

/// L̂ⁿg(x) = Σ_{|ω|=n} e^{S_ω(x)} g(φ_ω(x)) with g interpolated on the grid.
#[test]
fn iterated_operator_matches_word_sums() {
    let m = cf12(0.9);
    let grid = grid_of(&m, 256);
    let op = HatOperator::new(&m, &cut(2), grid).unwrap();
    let g = GridFunction::from_fn(grid, |x| 1.0 + x * x);
    let mut it = g.clone();
    for n in 1..=3 {
        it = op.apply(&it);
        for k in [0, 17, 128, 255, 256] {
            let x = grid.node(k);
            // only the outermost application is exact at nodes; inner ones
            // interpolate, so compare with a tolerance set by the grid
            let direct: f64 = enumerate_words(n, &cut(2))
                .unwrap()
                .map(|w| m.branch_sum(&w, x).unwrap().exp() * (1.0 + m.system().apply_word(&w, x).unwrap().powi(2)))
                .sum();
            assert!((it.values()[k] - direct).abs() < 1e-4, "n={n} k={k}");
        }
    }
    // with n = 1 the node values are exact up to interpolating g itself
    let one = op.apply(&g);
    for k in 0..grid.len() {
        let x = grid.node(k);
        let direct: f64 = (1..=2u32)
            .map(|i| m.phi(i, x).exp() * g.eval(m.system().map(i).unwrap().apply(x)))
            .sum();
        assert!((one.values()[k] - direct).abs() < 1e-14);
    }
}

proptest! {
    #[test]
    fn operator_is_positive_monotone_and_linear(
        a in -3.0f64..3.0,
        c1 in proptest::collection::vec(-1.0f64..1.0, 33),
        c2 in proptest::collection::vec(0.0f64..1.0, 33),
    ) {
        let m = cf12(0.8);
        let grid = grid_of(&m, 32);
        let op = HatOperator::new(&m, &cut(2), grid).unwrap();
        let g1 = GridFunction::new(grid, c1.clone()).unwrap();
        let g2 = GridFunction::new(grid, c2.clone()).unwrap();
        let comb: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| a * x + y).collect();
        let lhs = op.apply(&GridFunction::new(grid, comb).unwrap());
        let (l1, l2) = (op.apply(&g1), op.apply(&g2));
        for k in 0..grid.len() {
            let rhs = a * l1.values()[k] + l2.values()[k];
            prop_assert!((lhs.values()[k] - rhs).abs() < 1e-12);
            prop_assert!(l2.values()[k] >= 0.0);
        }
        let bigger: Vec<f64> = c2.iter().map(|v| v + 0.5).collect();
        let lb = op.apply(&GridFunction::new(grid, bigger).unwrap());
        for k in 0..grid.len() {
            prop_assert!(lb.values()[k] >= l2.values()[k]);
        }
    }
}
