use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use helical_core::assembly::assemble_mode_system;
use helical_core::config::RunConfig;
use helical_core::energy::{
    proof_boundary_integrand, proof_volume_integrand, BoundarySample, VolumeSample,
};
use helical_core::field::sample;
use helical_core::grid::build_grid;
use helical_core::modes::{
    analyze_phi, conjugate_defect, euler_radial_derivative, mode_operator_apply, synthesize_phi,
    ModeField, ModeIndex,
};
use helical_core::quadrature::{boundary_quadrature, volume_quadrature};
use helical_core::reduction::{
    chi, classify_point, coefficients, Dimension, HelicalConfig, RegionTag, Sign,
};
use helical_core::solver::{solve_full, HelicalProblem, SolveOptions, SolvePath};
use helical_core::suites::run_suite;

fn config(n: usize, omega: f64, radius: f64) -> HelicalConfig {
    HelicalConfig::new(Dimension::from_usize(n).unwrap(), omega, radius, Sign::Plus).unwrap()
}

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3usize)]
}

fn rank(tag: RegionTag) -> u8 {
    match tag {
        RegionTag::Elliptic => 0,
        RegionTag::LightCylinder => 1,
        RegionTag::Hyperbolic => 2,
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_phi_phi_times_rho_is_chi(n in dims(), omega in 0.0f64..3.0, rho in 1e-3f64..5.0) {
        let cfg = config(n, omega, 1.0);
        let s = coefficients(rho, &cfg).unwrap();
        let x = chi(rho, &cfg).unwrap();
        prop_assert!((s.h_phi_phi * rho - x).abs() <= 1e-12 * (1.0 + x.abs()));
        prop_assert_eq!(s.sigma, rho);
    }

    #[test]
    fn classification_is_monotone_in_rho(omega in 0.1f64..3.0, a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let cfg = config(2, omega, 1.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let t_lo = classify_point(lo, &cfg, 1e-9).unwrap();
        let t_hi = classify_point(hi, &cfg, 1e-9).unwrap();
        prop_assert!(rank(t_lo) <= rank(t_hi));
    }

    #[test]
    fn phi_transform_round_trip_is_real(
        coeffs in prop::collection::vec(-1.0f64..1.0, 9),
        n_phi in prop_oneof![Just(12usize), Just(16usize)],
    ) {
        // band-limited samples with |m| <= 4
        let samples: Vec<f64> = (0..n_phi)
            .map(|p| {
                let phi = 2.0 * PI * p as f64 / n_phi as f64;
                coeffs[0] + (1..=4).map(|m| coeffs[2 * m - 1] * (m as f64 * phi).cos()
                    + coeffs[2 * m] * (m as f64 * phi).sin()).sum::<f64>()
            })
            .collect();
        let modes = analyze_phi(&samples, 4).unwrap();
        prop_assert!(conjugate_defect(&modes) <= 1e-14);
        let back = synthesize_phi(&modes, n_phi).unwrap();
        for (a, b) in samples.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn euler_derivative_of_linear_function(
        a in -2.0f64..2.0, b in prop::collection::vec(-2.0f64..2.0, 0..3),
        radius in 0.5f64..3.0, angles in prop::collection::vec(0.0f64..PI, 3),
    ) {
        // u = aρ + b·z restricted to a point on the sphere of radius R
        let nz = b.len();
        let mut dir = vec![angles[0].cos().abs() + 0.1];
        dir.extend(angles[1..=nz].iter().map(|t| t.cos()));
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rho = radius * dir[0] / norm;
        let z: Vec<f64> = dir[1..].iter().map(|v| radius * v / norm).collect();
        let u_at_r = a * rho + b.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>();
        let got = euler_radial_derivative(rho, &z, a, &b, radius);
        // homogeneous of degree one, so ∂_r u = u / R
        prop_assert!((got - u_at_r / radius).abs() <= 1e-12 * (1.0 + u_at_r.abs()));
    }

    #[test]
    fn proof_volume_integrand_is_nonnegative(
        n in dims(), omega in 0.0f64..3.0, rho in 1e-3f64..5.0,
        u_rho in -10.0f64..10.0, u_phi in -10.0f64..10.0, u_z in -10.0f64..10.0,
    ) {
        let cfg = config(n, omega, 1.0);
        let s = VolumeSample { rho, u_rho, u_phi, u_z: if n == 3 { vec![u_z] } else { vec![] } };
        prop_assert!(proof_volume_integrand(&s, &cfg).unwrap() >= 0.0);
    }

    #[test]
    fn boundary_integrand_is_invariant_under_z_rotation(
        omega in 0.0f64..3.0, alpha in 0.0f64..(2.0 * PI), theta in 0.05f64..1.5,
        beta in 0.0f64..(2.0 * PI), g in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        // n = 4: two z directions, rotated together with the gradient
        let cfg = config(3, omega, 1.0);
        let rho = theta.sin();
        let z = [theta.cos() * beta.cos(), theta.cos() * beta.sin()];
        let (ca, sa) = (alpha.cos(), alpha.sin());
        let rot = |v: [f64; 2]| vec![ca * v[0] - sa * v[1], sa * v[0] + ca * v[1]];
        let s0 = BoundarySample { rho, z: z.to_vec(), u_z: vec![g[0], g[1]], u_phi: g[2] };
        let s1 = BoundarySample { rho, z: rot(z), u_z: rot([g[0], g[1]]), u_phi: g[2] };
        let (a0, l0) = proof_boundary_integrand(&s0, &cfg).unwrap();
        let (a1, l1) = proof_boundary_integrand(&s1, &cfg).unwrap();
        prop_assert!((a0 - a1).abs() <= 1e-12 * (1.0 + a0.abs()));
        prop_assert!((l0 - l1).abs() <= 1e-12 * (1.0 + l0.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quadrature_is_exact_for_low_degree(
        radius in 0.5f64..3.0, q in 1usize..6, a in -2.0f64..2.0, b in -2.0f64..2.0,
    ) {
        let cfg = config(2, 0.3, radius);
        let grid = build_grid(&cfg, &[16], 12).unwrap();
        // σ' = r is linear, so the trapezoid rule is exact on a + b cos(qφ)
        let f = sample(&grid, |r, _, phi| r * (a + b * (q as f64 * phi).cos()));
        let vol = volume_quadrature(&grid, &f).unwrap();
        prop_assert!((vol - a * PI * radius * radius).abs() <= 1e-12 * (1.0 + vol.abs()));
        // boundary density in the chart carries the factor R
        let tau: Vec<f64> = (0..12).map(|p| radius * (a + b * (q as f64 * grid.phi(p)).cos())).collect();
        let bnd = boundary_quadrature(&grid, &tau).unwrap();
        prop_assert!((bnd - 2.0 * PI * radius * a).abs() <= 1e-12 * (1.0 + bnd.abs()));
    }

    #[test]
    fn operator_is_linear(
        n in dims(), m in 0i32..4, alpha in -2.0f64..2.0, seed in any::<u64>(),
    ) {
        let cfg = config(n, 1.0, 2.0);
        let res: Vec<usize> = if n == 2 { vec![16] } else { vec![16, 16] };
        let grid = build_grid(&cfg, &res, 8).unwrap();
        let op = assemble_mode_system(ModeIndex(m), &grid, &cfg).unwrap();
        let d = op.dim();
        let x: Vec<Complex64> = (0..d).map(|i| c(((seed ^ i as u64) % 97) as f64 / 97.0, (i % 5) as f64)).collect();
        let y: Vec<Complex64> = (0..d).map(|i| c((i % 7) as f64, ((seed >> 3) % 11) as f64 - i as f64 / d as f64)).collect();
        let combo: Vec<Complex64> = x.iter().zip(&y).map(|(a, b)| a * alpha + b).collect();
        let (ax, ay, az) = (op.apply(&x), op.apply(&y), op.apply(&combo));
        for i in 0..d {
            let want = ax[i] * alpha + ay[i];
            prop_assert!((az[i] - want).norm() <= 1e-9 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn matrix_free_residual_is_linear(n in dims(), m in 0i32..4, alpha in -2.0f64..2.0) {
        let cfg = config(n, 1.0, 2.0);
        let res: Vec<usize> = if n == 2 { vec![16] } else { vec![16, 16] };
        let grid = build_grid(&cfg, &res, 8).unwrap();
        let nodes = grid.node_count();
        let x: Vec<Complex64> = (0..nodes).map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let two_x: Vec<Complex64> = x.iter().map(|v| v * alpha).collect();
        let a = mode_operator_apply(&ModeField { m: ModeIndex(m), values: x }, &grid, &cfg).unwrap();
        let b = mode_operator_apply(&ModeField { m: ModeIndex(m), values: two_x }, &grid, &cfg).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p * alpha - q).norm() <= 1e-9 * (1.0 + q.norm()));
        }
    }

    #[test]
    fn config_round_trips_through_toml(
        n in dims(), omega in 0.01f64..3.0, radius in 0.1f64..4.0, j in 16usize..64,
        seed in any::<u64>(), n_phi in 4usize..32,
    ) {
        let res = if n == 2 { vec![j] } else { vec![j, 16] };
        let mut run = RunConfig::new(n, omega, radius, res);
        run.seed = seed;
        run.n_phi = n_phi;
        let back = RunConfig::parse(&run.to_toml()).unwrap();
        prop_assert_eq!(back, run);
    }
}

fn compatible_problem(n: usize, scale: f64, q: f64) -> HelicalProblem {
    let cfg = config(n, 1.0, 2.0);
    let res: Vec<usize> = if n == 2 { vec![32] } else { vec![16, 16] };
    // f has zero mean over every sphere; τ carries no m = 0 part
    HelicalProblem::from_functions(
        cfg,
        &res,
        8,
        3,
        move |r, _, phi| scale * r * (phi + q).cos(),
        move |theta, phi| scale * theta.sin() * (2.0 * phi).sin(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solution_scales_with_data(n in dims(), scale in 0.1f64..5.0, q in 0.0f64..PI) {
        let opts = SolveOptions::default();
        let u1 = solve_full(&compatible_problem(n, 1.0, q), &opts).field.unwrap();
        let us = solve_full(&compatible_problem(n, scale, q), &opts).field.unwrap();
        let norm = u1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in u1.iter().zip(&us) {
            prop_assert!((a * scale - b).abs() <= 1e-9 * scale * (1.0 + norm));
        }
    }

    #[test]
    fn gauged_solution_ignores_the_pin(n in dims(), q in 0.0f64..PI, pin_a in 0usize..200, pin_b in 0usize..200) {
        let problem = compatible_problem(n, 1.0, q);
        let nodes = problem.grid.node_count();
        let solve = |pin: usize| {
            let opts = SolveOptions { path: SolvePath::SparsePinned { pin: pin % nodes }, ..SolveOptions::default() };
            solve_full(&problem, &opts).field.unwrap()
        };
        let (a, b) = (solve(pin_a), solve(pin_b));
        let norm = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-8 * (1.0 + norm));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn suites_are_deterministic_in_the_seed(seed in any::<u64>()) {
        let mut run = RunConfig::new(2, 1.0, 2.0, vec![16]);
        run.seed = seed;
        run.samples = 2000;
        let a = run_suite("inequality", &run).unwrap().to_json();
        let b = run_suite("inequality", &run).unwrap().to_json();
        prop_assert_eq!(a, b);
    }
}
