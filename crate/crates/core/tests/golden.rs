use scvar_core::cvar::{
    evaluate_cvar_at_x, scaled_feasibility_at_x, solve_cvar, solve_scaled_cvar,
};
use scvar_core::exact::{brute_force_optimal, grid_brute_force};
use scvar_core::fixtures;
use scvar_core::scaling::{
    algorithm1, eta_bounds, prune_alpha_mask, theorem1_construct, theorem2_blend,
    Algorithm1Options, Termination,
};
use scvar_core::{ScalingVector, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn scaled_value(inst: &scvar_core::CcpInstance, alpha: &[f64]) -> f64 {
    let a = ScalingVector::new(alpha.to_vec(), 1e6).unwrap();
    solve_scaled_cvar(inst, &a, &tol()).unwrap().objective
}

#[test]
fn example_two_curve() {
    let ex2 = fixtures::example2();
    assert!((brute_force_optimal(&ex2, 20, &tol()).unwrap().v_star - 1.0).abs() < 1e-9);
    assert!((solve_cvar(&ex2, &tol()).unwrap().objective - 2.0).abs() < 1e-9);
    for a in [4.0, 6.0, 10.0, 50.0] {
        assert!(
            (scaled_value(&ex2, &[1.0, a]) - (1.0 + 3.0 / a)).abs() < 1e-6,
            "alpha {a}"
        );
    }
    for a in [1.0, 2.0, 2.9] {
        assert!(
            (scaled_value(&ex2, &[1.0, a]) - 2.0).abs() < 1e-6,
            "alpha {a}"
        );
    }
    let mut prev = f64::INFINITY;
    for a in [1.0, 2.0, 4.0, 10.0, 50.0] {
        let v = scaled_value(&ex2, &[1.0, a]);
        assert!(v <= prev + 1e-9);
        prev = v;
    }
}

#[test]
fn example_three_construction() {
    let ex3 = fixtures::example3();
    let grid = fixtures::small_integer_grid();
    assert_eq!(grid_brute_force(&ex3, &grid, &tol()).unwrap().v_star, 0.0);
    assert!(!solve_cvar(&ex3, &tol()).unwrap().is_optimal());
    let c = theorem1_construct(&ex3, &[0.0], 0.0, &tol()).unwrap();
    assert_eq!(c.alpha_hat.as_slice(), &[1.0, 5.0, 5.0, 5.0]);
    assert_eq!(c.beta_hat, -10.0);
    assert_eq!(c.s_hat, vec![20.0, 0.0, 0.0, 0.0]);
    assert_eq!(c.tau, 0.25);
    assert!(c.verified && !c.clipped);
    // The construction closes the gap at x* = 0.
    assert!(scaled_value(&ex3, c.alpha_hat.as_slice()).abs() < 1e-6);
}

#[test]
fn examples_four_and_five_have_no_scaling() {
    for inst in [fixtures::example4(), fixtures::example5()] {
        for x in 0..=5 {
            assert!(scaled_feasibility_at_x(&inst, &[x as f64], &tol())
                .unwrap()
                .is_none());
        }
    }
    let ex4 = fixtures::example4();
    assert_eq!(
        grid_brute_force(&ex4, &fixtures::small_integer_grid(), &tol())
            .unwrap()
            .v_star,
        0.0
    );
    assert!(ex4.normalize_covering_rows().is_err());
}

#[test]
fn example_six_blend_and_construction() {
    let ex6 = fixtures::example6();
    let exact = brute_force_optimal(&ex6, 20, &tol()).unwrap();
    assert!((exact.v_star - 2.0).abs() < 1e-9);
    assert!((solve_cvar(&ex6, &tol()).unwrap().objective - 3.0).abs() < 1e-9);

    let x = theorem2_blend(&[0.0, 1.0], &[vec![0.0, 2.0]], 0.1).unwrap();
    assert!(x[0].abs() < 1e-12 && (x[1] - 1.1).abs() < 1e-12);
    for i in 1..3 {
        assert!((ex6.g_max(i, &x).unwrap() + 0.1).abs() < 1e-12);
    }
    let c = theorem1_construct(&ex6, &x, 0.0, &tol()).unwrap();
    assert!((c.alpha_bar - 5.0).abs() < 1e-9);
    assert!((c.beta_hat + 5.0).abs() < 1e-9);
    assert!((c.s_hat[0] - 6.0).abs() < 1e-9);
    for (a, e) in c.alpha_hat.as_slice().iter().zip([1.0, 50.0, 50.0]) {
        assert!((a - e).abs() < 1e-9);
    }
    assert!(scaled_value(&ex6, c.alpha_hat.as_slice()) <= 2.2 + 1e-6);

    let trace = algorithm1(&ex6, &x, &tol(), &Algorithm1Options::default()).unwrap();
    assert!((trace.incumbent.objective - 2.2).abs() < 1e-6);

    let eta = eta_bounds(&ex6, &tol()).unwrap();
    for (a, e) in eta.iter().zip([3.0, 2.0, 2.0]) {
        assert!((a - e).abs() < 1e-9);
    }
}

#[test]
fn example_seven_grid_stays_at_cvar() {
    let ex7 = fixtures::example7();
    let grid = [1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1e3, 1e4];
    let mut best = f64::INFINITY;
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                best = best.min(scaled_value(&ex7, &[a, b, c]));
            }
        }
    }
    assert!((best - 3.0).abs() < 1e-6, "{best}");
}

#[test]
fn example_one_cvar_arithmetic() {
    // Six equiprobable values at ε = 5/12: the tail mixes 2, 1 and half of −1.
    use scvar_core::model::{Domain, Scenario};
    let g = [-4.0, -3.0, -2.0, -1.0, 1.0, 2.0];
    let inst = scvar_core::CcpInstance {
        name: "example1".into(),
        cost: vec![0.0],
        scenarios: g
            .iter()
            .map(|&v| Scenario {
                w: vec![vec![0.0]],
                d: vec![v],
                p: 1.0 / 6.0,
            })
            .collect(),
        epsilon: 5.0 / 12.0,
        domain: Domain::free(1),
    };
    let expect = (2.0 / 6.0 + 1.0 / 6.0 - 1.0 / 12.0) / (5.0 / 12.0);
    assert!((evaluate_cvar_at_x(&inst, &[0.0]).unwrap() - expect).abs() < 1e-12);
    assert!((expect - 1.0).abs() < 1e-12);
}

#[test]
fn example_two_heuristic_and_pruning() {
    let ex2 = fixtures::example2();
    let x0 = solve_cvar(&ex2, &tol()).unwrap().x;
    let t = Tolerances {
        delta2: 0.0,
        ..tol()
    };
    let trace = algorithm1(&ex2, &x0, &t, &Algorithm1Options::default()).unwrap();
    assert!((trace.incumbent.objective - 2.0).abs() < 1e-9);
    assert_eq!(trace.termination, Termination::Stalled);

    let eta = eta_bounds(&ex2, &tol()).unwrap();
    assert_eq!(prune_alpha_mask(&eta, 1.5, 1e-6), vec![true, false]);
    assert_eq!(
        prune_alpha_mask(&eta, f64::INFINITY, 1e-6),
        vec![false, false]
    );
    assert_eq!(prune_alpha_mask(&eta, 0.5, 1e-6), vec![true, true]);
}
