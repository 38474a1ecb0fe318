use std::sync::Arc;

use hmtlab::green::{extract_c_g, make_maps, solve_green};
use hmtlab::{make_grid, Dimension, Grading, Potential};

// Pole constants for the critical Hardy potential, computed independently with
// an adaptive high-order ODE integrator and a bracketing root finder.
const ORACLE: [(u32, f64, f64); 5] = [
    (2, 1e-6, 0.220635796502),
    (2, 1e-8, 0.220635602105),
    (3, 1e-6, 0.157896161178),
    (3, 1e-8, 0.157895958052),
    (4, 1e-6, 0.118829249356),
];

#[test]
fn hardy_pole_constant_matches_oracle() {
    for (n, eps, expected) in ORACLE {
        let grid = Arc::new(make_grid(4096, eps, Grading::default()).unwrap());
        let t = solve_green(Dimension::new(n).unwrap(), &Potential::HardyCritical, grid, 1e-8, 500).unwrap();
        let c = extract_c_g(&t).unwrap();
        println!("n={n} eps={eps:e}: c_g={:.12} extracted={c:.12} oracle={expected}", t.c_g);
        assert!((t.c_g - expected).abs() < 1e-6, "n={n}");
        assert!((c - expected).abs() < 1e-6, "n={n}");
    }
}

#[test]
fn inverse_map_reproduces_remainder() {
    let grid = Arc::new(make_grid(4096, 1e-6, Grading::default()).unwrap());
    let t = solve_green(Dimension::new(2).unwrap(), &Potential::HardyCritical, grid, 1e-8, 500).unwrap();
    let maps = make_maps(&t, 1.0).unwrap();
    let gamma = t.gamma();
    let mut worst: f64 = 0.0;
    for j in 0..maps.len() {
        let expected = ((t.c_g + maps.h_at_a[j]) / gamma).exp();
        worst = worst.max((maps.a_over_t[j] - expected).abs() / expected);
    }
    assert!(worst < 1e-8, "{worst}");
    assert_eq!(*maps.a.last().unwrap(), t.grid.last());
    assert!(maps.a_over_t.windows(2).all(|w| w[1] <= w[0] * (1.0 + 64.0 * f64::EPSILON)));
    assert!(maps.h_at_a.windows(2).all(|w| w[1] < w[0]));
    assert!(maps.a_over_t.iter().all(|&q| q <= maps.ratio_limit() * (1.0 + 1e-12)));
}

#[test]
fn phi_prime_matches_difference_quotients() {
    let grid = Arc::new(make_grid(4096, 1e-6, Grading::default()).unwrap());
    let t = solve_green(Dimension::new(3).unwrap(), &Potential::HardyCritical, grid, 1e-8, 500).unwrap();
    let maps = make_maps(&t, 0.0).unwrap();
    let tg = maps.t_grid.nodes();
    for j in (200..maps.len() - 200).step_by(97) {
        let fd = (maps.phi[j + 1] - maps.phi[j - 1]) / (tg[j + 1] - tg[j - 1]);
        let rel = (fd - maps.phi_prime[j]).abs() / maps.phi_prime[j].abs().max(1e-300);
        assert!(rel < 1e-3, "t={} fd={fd} formula={}", tg[j], maps.phi_prime[j]);
    }
}

