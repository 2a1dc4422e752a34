mod common;

use std::f64::consts::{PI, SQRT_2};

use common::{block_exponential, c, max_abs_diff};
use num_complex::Complex64;
use proptest::prelude::*;

use so3_trotter::analysis::{log_log_fit, scan_n};
use so3_trotter::error::{
    error_via_integral, lower_bound_m0, lower_bound_top, trotter_error_exact, trotter_error_exact_with,
    trotter_error_oracle,
};
use so3_trotter::exec::Execution;
use so3_trotter::kinematics::{Ordering, TrotterParams};
use so3_trotter::linalg::{unitarity_defect, CMatrix};
use so3_trotter::rotation::{angle_of, compose, AxisAngle, UnitQuaternion, UnitVector3};
use so3_trotter::state::{generator_matrices, make_power_law_m0, make_power_law_top, BlockVector, SphericalState};
use so3_trotter::wigner::{legendre, legendre_upper_bound, wigner_d};

fn rotation() -> impl Strategy<Value = AxisAngle> {
    (0.0..PI, 0.0..PI, -PI..PI).prop_map(|(angle, theta, phi)| AxisAngle::new(angle, UnitVector3::from_spherical(theta, phi)))
}

fn quat_gap(a: UnitQuaternion, b: UnitQuaternion) -> f64 {
    let d = |s: f64| (a.w - s * b.w).abs() + (a.vx - s * b.vx).abs() + (a.vy - s * b.vy).abs() + (a.vz - s * b.vz).abs();
    d(1.0).min(d(-1.0))
}

fn block(r: AxisAngle, ell: u64) -> CMatrix {
    wigner_d(ell, r.quaternion().euler_zyz()).unwrap().entries
}

fn finite_state(max_ell: u64) -> impl Strategy<Value = SphericalState> {
    prop::collection::vec((0..=max_ell, prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 41)), 1..4).prop_map(
        |blocks| {
            SphericalState::from_blocks(blocks.into_iter().map(|(ell, raw)| {
                let dim = (2 * ell + 1) as usize;
                BlockVector::new(ell, raw[..dim].iter().map(|&(re, im)| c(re, im)).collect()).unwrap()
            }))
        },
    )
}

fn ordering() -> impl Strategy<Value = Ordering> {
    prop_oneof![Just(Ordering::YThenX), Just(Ordering::XThenY)]
}

proptest! {
    #[test]
    fn axis_angle_round_trip(r in rotation()) {
        let back = angle_of(r.quaternion());
        prop_assert!((back.angle - r.angle).abs() < 1e-12);
        if r.angle > 1e-6 {
            prop_assert!(back.axis.distance(r.axis) < 1e-10);
        }
    }

    #[test]
    fn euler_round_trip(r in rotation()) {
        let q = r.quaternion();
        prop_assert!(quat_gap(q.euler_zyz().quaternion(), q) < 1e-13);
    }

    #[test]
    fn composition_is_associative(a in rotation(), b in rotation(), d in rotation()) {
        let (qa, qb, qd) = (a.quaternion(), b.quaternion(), d.quaternion());
        prop_assert!(quat_gap((qa * qb) * qd, qa * (qb * qd)) < 1e-14);
    }

    #[test]
    fn inverse_composes_to_identity(r in rotation()) {
        let id = compose(r, r.inverse());
        prop_assert!(id.near_identity || id.angle < 1e-14);
    }

    #[test]
    fn composition_matches_l1_exponentials(a in rotation(), b in rotation()) {
        let ab = compose(a, b);
        let direct = block_exponential(1, a.angle, a.axis.to_array()) * block_exponential(1, b.angle, b.axis.to_array());
        prop_assert!(max_abs_diff(&block_exponential(1, ab.angle, ab.axis.to_array()), &direct) < 1e-12);
        prop_assert!(max_abs_diff(&block(ab, 1), &direct) < 1e-12);
    }

    #[test]
    fn blocks_are_homomorphic(a in rotation(), b in rotation(), ell in 0u64..=10) {
        let lhs = block(compose(a, b), ell);
        prop_assert!(max_abs_diff(&lhs, &(block(a, ell) * block(b, ell))) < 1e-9);
    }

    #[test]
    fn legendre_respects_upper_bound(ell in 0u64..2000, beta in 0.0..=PI) {
        prop_assert!(legendre(ell, beta.cos()).unwrap() <= legendre_upper_bound(ell, beta));
    }

    #[test]
    fn generators_close_the_algebra(ell in 0u64..=20) {
        let g = generator_matrices(ell).unwrap();
        let dim = (2 * ell + 1) as usize;
        let i = Complex64::new(0.0, 1.0);
        let casimir = CMatrix::identity(dim, dim) * c((ell * (ell + 1)) as f64, 0.0);
        prop_assert!(max_abs_diff(&g.casimir(), &casimir) < 1e-10);
        prop_assert!(max_abs_diff(&(&g.jx * &g.jy - &g.jy * &g.jx), &(g.jz.clone() * i)) < 1e-10);
    }

    #[test]
    fn fit_recovers_noisy_power_law(slope in -2.0..-0.1f64, scale in 0.1..10.0f64, noise in prop::collection::vec(-1e-6..1e-6f64, 25)) {
        let xs: Vec<f64> = (0..25).map(|k| 10f64.powf(1.0 + k as f64 / 12.0)).collect();
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| scale * x.powf(slope) * (1.0 + e)).collect();
        let (fitted, _, r2) = log_log_fit(&xs, &ys);
        prop_assert!((fitted - slope).abs() < 1e-4);
        prop_assert!(r2 <= 1.0);
    }

    #[test]
    fn tail_bound_shrinks_with_cutoff(gamma in 0.05..1.95f64, l in 1u64..1_000_000, extra in 1u64..1_000_000) {
        let a = make_power_law_m0(1.0, gamma, l).unwrap().law().tail_bound();
        let b = make_power_law_m0(1.0, gamma, l + extra).unwrap().law().tail_bound();
        prop_assert!(b <= a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn blocks_are_unitary(r in rotation(), ell in 0u64..=200) {
        prop_assert!(unitarity_defect(&block(r, ell)) < 1e-10);
    }

    #[test]
    fn block_columns_have_unit_norm(r in rotation(), ell in 0u64..=60) {
        let b = block(r, ell);
        for j in 0..b.ncols() {
            let norm: f64 = b.column(j).iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_matches_oracle_on_mixed_states(
        s in finite_state(20),
        k in 0u32..=6,
        t in prop_oneof![Just(0.5), Just(1.0), Just(SQRT_2), Just(3.0)],
        o in ordering(),
    ) {
        let p = TrotterParams::with_ordering(t, 1 << k, o).unwrap();
        let exact = trotter_error_exact(&s, &p).unwrap().xi;
        let oracle = trotter_error_oracle(&s, &p).unwrap();
        prop_assert!((exact - oracle).abs() <= 1e-9 * exact.max(1.0));
        prop_assert!(exact <= 2.0 * s.norm() + 1e-12);
    }

    #[test]
    fn small_blocks_exact_up_to_64_steps(s in finite_state(3), n in 1u64..=64, t in -3.0..3.0f64, o in ordering()) {
        let p = TrotterParams::with_ordering(t, n, o).unwrap();
        let exact = trotter_error_exact(&s, &p).unwrap().xi;
        prop_assert!((exact - trotter_error_oracle(&s, &p).unwrap()).abs() <= 1e-10 * exact.max(1.0));
    }

    #[test]
    fn integral_matches_exact(s in finite_state(8), n in 1u64..200, t in 0.1..3.0f64) {
        let p = TrotterParams::new(t, n).unwrap();
        let exact = trotter_error_exact(&s, &p).unwrap().xi;
        prop_assert!((error_via_integral(&s, &p, 32).unwrap() - exact).abs() <= 1e-9);
    }

    #[test]
    fn m0_certificate_holds(gamma in 0.1..1.9f64, n in 10u64..=1000, l_max in 1u64..200_000) {
        let s = make_power_law_m0(1.0, gamma, l_max).unwrap();
        let p = TrotterParams::new(1.0, n).unwrap();
        let cert = lower_bound_m0(gamma, 1.0, &p, Some(l_max)).unwrap();
        let xi = trotter_error_exact(&s, &p).unwrap().xi;
        prop_assert!(xi >= cert.value, "xi {} < cert {}", xi, cert.value);
        prop_assert!(xi <= 2.0 * s.norm() + 1e-12);
    }

    #[test]
    fn top_certificate_holds(gamma in 0.1..1.9f64, n in 10u64..=1000, l_max in 1u64..200_000) {
        let s = make_power_law_top(1.0, gamma, l_max).unwrap();
        let p = TrotterParams::new(1.0, n).unwrap();
        let cert = lower_bound_top(gamma, 1.0, &p, Some(l_max)).unwrap();
        let xi = trotter_error_exact(&s, &p).unwrap().xi;
        prop_assert!(xi >= cert.value, "xi {} < cert {}", xi, cert.value);
        prop_assert_eq!(cert.truncated, l_max < cert.cutoff);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise(gamma in 0.1..1.9f64, n in 1u64..5000, top in any::<bool>()) {
        let s = if top { make_power_law_top(1.0, gamma, 100_000) } else { make_power_law_m0(1.0, gamma, 100_000) }.unwrap();
        let p = TrotterParams::new(1.0, n).unwrap();
        let a = trotter_error_exact_with(&s, &p, Execution::Sequential).unwrap();
        let b = trotter_error_exact_with(&s, &p, Execution::Parallel).unwrap();
        prop_assert_eq!(a.xi.to_bits(), b.xi.to_bits());
    }
}

#[test]
fn scans_are_deterministic() {
    let s = make_power_law_top(1.0, 0.5, 200_000).unwrap();
    let grid = [10, 20, 50, 100];
    let csv = |exec| {
        let curve = scan_n(&s, 1.0, &grid, Ordering::YThenX, exec).unwrap();
        let mut out = Vec::new();
        so3_trotter::analysis::write_curve_csv(&curve, &mut out).unwrap();
        out
    };
    let first = csv(Execution::Parallel);
    assert_eq!(first, csv(Execution::Parallel));
    assert_eq!(first, csv(Execution::Sequential));
}
