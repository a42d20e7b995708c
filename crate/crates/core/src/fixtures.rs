//! Small hand-checkable instances used as golden tests and CLI samples.
//!
//! The integer-domain examples (3, 4, 5) are given the continuous relaxation
//! `x ≥ 0`; their integer optima come from `exact::grid_brute_force`.

use crate::model::{CcpInstance, Domain, Scenario};

fn covering_scenario(xi: &[f64], p: f64) -> Scenario {
    Scenario {
        w: vec![xi.iter().map(|v| -v).collect()],
        d: vec![1.0],
        p,
    }
}

fn scalar_scenario(w: f64, d: f64, p: f64) -> Scenario {
    Scenario {
        w: vec![vec![w]],
        d: vec![d],
        p,
    }
}

/// Two scenarios `1 − ξᵀx` with `ξ¹ = (1,0)`, `ξ² = (1,1)`, cost `(2,1)`, `ε = 2/3`.
pub fn example2() -> CcpInstance {
    CcpInstance {
        name: "example2".into(),
        cost: vec![2.0, 1.0],
        scenarios: vec![
            covering_scenario(&[1.0, 0.0], 0.5),
            covering_scenario(&[1.0, 1.0], 0.5),
        ],
        epsilon: 2.0 / 3.0,
        domain: Domain::nonnegative(2),
    }
}

/// `min −x` with rows `−9x + 10` and three copies of `4x − 2`, `ε = 1/2`.
pub fn example3() -> CcpInstance {
    CcpInstance {
        name: "example3".into(),
        cost: vec![-1.0],
        scenarios: vec![
            scalar_scenario(-9.0, 10.0, 0.25),
            scalar_scenario(4.0, -2.0, 0.25),
            scalar_scenario(4.0, -2.0, 0.25),
            scalar_scenario(4.0, -2.0, 0.25),
        ],
        epsilon: 0.5,
        domain: Domain::nonnegative(1),
    }
}

/// Example 3 with the fourth row replaced by `4x`.
pub fn example4() -> CcpInstance {
    let mut inst = example3();
    inst.name = "example4".into();
    inst.scenarios[3].d = vec![0.0];
    inst
}

/// Example 3 with `ε = 1/4`.
pub fn example5() -> CcpInstance {
    let mut inst = example3();
    inst.name = "example5".into();
    inst.epsilon = 0.25;
    inst
}

/// Three scenarios `1 − ξᵀx` with `ξ = (1,0), (1,1), (1,1)`, cost `(3,2)`, `ε = 0.4`.
pub fn example6() -> CcpInstance {
    let p = 1.0 / 3.0;
    CcpInstance {
        name: "example6".into(),
        cost: vec![3.0, 2.0],
        scenarios: vec![
            covering_scenario(&[1.0, 0.0], p),
            covering_scenario(&[1.0, 1.0], p),
            covering_scenario(&[1.0, 1.0], p),
        ],
        epsilon: 0.4,
        domain: Domain::nonnegative(2),
    }
}

/// Example 6 with `ε = 1/3`.
pub fn example7() -> CcpInstance {
    let mut inst = example6();
    inst.name = "example7".into();
    inst.epsilon = 1.0 / 3.0;
    inst
}

/// Integer candidates `{0, …, 5}` for the one-dimensional examples.
pub fn small_integer_grid() -> Vec<Vec<f64>> {
    (0..=5).map(|k| vec![k as f64]).collect()
}
