use attrition::diffusion::{hat_curvature, hat_slope};
use attrition::{green_expected_local_time, hat_transform, hitting_laplace, Diffusion, DiffusionModel, Error};

fn baseline() -> DiffusionModel {
    DiffusionModel::new(0.02, 0.2, 0.1).unwrap()
}

#[test]
fn hitting_laplace_is_power_ratio() {
    let d = baseline();
    let down = hitting_laplace(&d, 2.0, 1.0).unwrap();
    assert!((down - 0.212_264_059_830_585_8).abs() < 1e-15);
    let up = hitting_laplace(&d, 1.0, 2.0).unwrap();
    assert!((up - 2f64.powf(-5f64.sqrt())).abs() < 1e-15);
    assert_eq!(hitting_laplace(&d, 1.5, 1.5).unwrap(), 1.0);
    assert!(matches!(hitting_laplace(&d, -1.0, 1.0), Err(Error::OutOfDomain(_))));
}

#[test]
fn green_function_at_center_is_two_ln_two() {
    let g = green_expected_local_time(&baseline(), 1.0, 4.0, 2.0, 2.0).unwrap();
    assert!((g - 2f64.ln() * 2.0).abs() < 1e-14);
}

#[test]
fn green_function_vanishes_at_the_boundary_and_is_continuous() {
    let d = DiffusionModel::new(0.05, 0.3, 0.1).unwrap();
    let near = green_expected_local_time(&d, 1.0, 4.0, 1.0 + 1e-9, 2.0).unwrap();
    assert!(near.abs() < 1e-8);
    let left = green_expected_local_time(&d, 1.0, 4.0, 2.0 - 1e-9, 2.0).unwrap();
    let right = green_expected_local_time(&d, 1.0, 4.0, 2.0 + 1e-9, 2.0).unwrap();
    assert!((left - right).abs() < 1e-8);
    assert!(green_expected_local_time(&d, 1.0, 4.0, 5.0, 2.0).is_err());
}

#[test]
fn wronskian_over_scale_density_is_constant() {
    for d in [baseline(), DiffusionModel::new(-0.03, 0.5, 0.07).unwrap()] {
        let g0 = d.wronskian_gamma_at(1.0);
        for x in [0.01, 0.3, 7.0, 120.0] {
            assert!(((d.wronskian_gamma_at(x) - g0) / g0).abs() < 1e-12);
        }
    }
    let g = baseline().wronskian_gamma_at(1.0);
    assert!((g - 2.0 * 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ode_solutions_are_affine_in_hat_coordinates() {
    let d = baseline();
    let u = |x: f64| 2.0 * d.psi(x) + 0.3 * d.phi(x);
    let hat = hat_transform(&d, u);
    for x in [0.02, 0.05, 0.2] {
        let y = d.zeta(x);
        assert!(((hat.eval(y).unwrap() - (2.0 + 0.3 * y)) / (2.0 + 0.3 * y)).abs() < 1e-12);
        let slope = hat_slope(&d, x, u(x), 2.0 * d.psi_prime(x) + 0.3 * d.phi_prime(x));
        assert!((slope - 0.3).abs() < 1e-10);
    }
}

#[test]
fn exit_payoff_is_concave_in_hat_coordinates_below_r_l() {
    // R(x) = 1 - x/(r - b) has L R - r R = x - r, so its hat image bends
    // down below x = 0.1 and up above it.
    let d = baseline();
    let exit = |x: f64| 1.0 - x / 0.08;
    let hat = hat_transform(&d, exit);
    let curv = |x: f64| hat_curvature(&d, x, exit(x), -1.0 / 0.08, 0.0);
    for x in [0.02, 0.05, 0.09] {
        assert!(curv(x) < 0.0);
        assert!(hat.second_difference(d.zeta(x), 1e-4).unwrap() < 0.0);
    }
    for x in [0.12, 0.5] {
        assert!(curv(x) > 0.0);
        assert!(hat.second_difference(d.zeta(x), 1e-4).unwrap() > 0.0);
    }
}
