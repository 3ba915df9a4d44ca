use approx::assert_relative_eq;
use lvbif::bifurcation::{bifurcation_points, neg_delta1, solve_bifurcation_beta};
use lvbif::continuation::{continue_branch, ContinuationConfig};
use lvbif::elliptic::{RadialProblem, StateFields};
use lvbif::export::{branch_states, read_branch_states};
use lvbif::linearization::spectral_split;
use lvbif::nodal::nodal_count;
use lvbif::par::Exec;
use lvbif::spectrum::{bessel_oracle, eigenpairs};
use lvbif::{constant_state, Params};
use proptest::prelude::*;

// first positive roots of J_1(x) = 0 and tan x = x, squared
const DISK_1: f64 = 14.681970642123892;
const BALL_1: f64 = 20.19072855642663;

#[test]
fn bessel_values() {
    assert_relative_eq!(bessel_oracle(2, 1).unwrap(), DISK_1, max_relative = 1e-12);
    assert_relative_eq!(bessel_oracle(3, 1).unwrap(), BALL_1, max_relative = 1e-12);
    // second zero of J_1
    assert_relative_eq!(
        bessel_oracle(2, 2).unwrap(),
        7.015586669815619_f64.powi(2),
        max_relative = 1e-12
    );
}

#[test]
fn eigenfunctions_are_orthogonal_and_sup_normalized() {
    let pr = RadialProblem::new(Params::new(1.0, 1.0, 2.0, 1.0, 3).unwrap(), 200).unwrap();
    let e = eigenpairs(&pr.op, &pr.grid, 4).unwrap();
    let ip = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .zip(&pr.grid.volumes)
            .map(|((a, b), v)| a * b * v)
            .sum()
    };
    for a in &e {
        let sup = a.f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!((sup - 1.0).abs() < 1e-15 && a.f[0] > 0.0);
        for b in e.iter().filter(|b| b.j != a.j) {
            let c = ip(&a.f, &b.f) / (ip(&a.f, &a.f) * ip(&b.f, &b.f)).sqrt();
            assert!(c.abs() < 1e-9, "({}, {}) -> {c}", a.j, b.j);
        }
        assert_eq!(nodal_count(&a.f, &pr.grid, 1e-10).count, a.j);
    }
}

#[test]
fn bifurcation_beta_against_fine_scan() {
    let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).unwrap();
    let b = solve_bifurcation_beta(&p, DISK_1).unwrap();
    // -δ1 is increasing; a fine geometric scan brackets the same root
    let mut lo = p.beta_min() * (1.0 + 1e-9);
    let mut hi = lo;
    while neg_delta1(&p, hi).unwrap() < DISK_1 {
        lo = hi;
        hi *= 1.001;
    }
    assert!(lo <= b && b <= hi, "{lo} {b} {hi}");
}

#[test]
fn newton_returns_to_constant_state() {
    let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).unwrap();
    let pr = RadialProblem::new(p, 128).unwrap();
    let c = constant_state(&p, 100.0).unwrap();
    let start = StateFields {
        u1: pr.grid.r.iter().map(|r| c.a + 1e-3 * r * r).collect(),
        u2: pr.grid.r.iter().map(|r| c.b - 1e-3 * r).collect(),
        beta: 100.0,
    };
    let rep = pr.newton_solve(&start, 1e-11, 30).unwrap();
    assert!(rep.state.distance_to_constant(c.a, c.b) < 1e-10);
    // quadratic convergence: the last useful step squares the residual
    let h = &rep.history;
    assert!(h.len() >= 3 && h[2] < 1e-3 * h[1]);
}

#[test]
fn stored_branch_round_trips() {
    let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).unwrap();
    let pr = RadialProblem::new(p, 64).unwrap();
    let e = eigenpairs(&pr.op, &pr.grid, 2).unwrap();
    let bp = bifurcation_points(&p, &e, Exec::Sequential)
        .unwrap()
        .remove(0);
    let cfg = ContinuationConfig {
        beta_max: Some(2.0 * bp.beta_j),
        ..ContinuationConfig::default()
    };
    let b = continue_branch(&pr, &bp, -1, &cfg).unwrap();
    let text = branch_states(&pr.grid, &b).render(&p).unwrap();
    let back = read_branch_states(&text).unwrap();
    assert_eq!(back.len(), b.points.len());
    for (s, q) in back.iter().zip(&b.points) {
        assert_eq!(s.beta.to_bits(), q.state.beta.to_bits());
        assert_eq!(s.u1, q.state.u1);
        assert_eq!(s.u2, q.state.u2);
    }
}

fn params() -> impl Strategy<Value = (Params, f64)> {
    (
        0.05f64..50.0,
        1.0f64..20.0,
        0.05f64..20.0,
        1.0f64..30.0,
        1.0f64..1e4,
    )
        .prop_map(|(mu, sr, gamma, ar, bf)| {
            let p = Params::new(mu, mu * sr, gamma * ar * 1.0001, gamma, 2).unwrap();
            (p, p.beta_min() * (1.0 + bf * 1e-3))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constant_state_is_an_equilibrium((p, beta) in params()) {
        let c = constant_state(&p, beta).unwrap();
        prop_assert!(c.a > 0.0 && c.a < 1.0 && c.b > 0.0 && c.b < 1.0);
        let [r1, r2] = c.reaction_residual(&p);
        prop_assert!(r1.abs() < 1e-13 * p.mu.max(1.0) && r2.abs() < 1e-13 * p.sigma.max(1.0));
    }

    #[test]
    fn split_matches_trace_and_determinant((p, beta) in params()) {
        let s = spectral_split(&p, beta).unwrap();
        let a = s.a_matrix(&p);
        let scale = a.max_abs();
        prop_assert!(s.delta1 < 0.0 && s.delta2 > 0.0);
        prop_assert!((s.delta1 + s.delta2 - a.trace()).abs() <= 1e-12 * scale);
        prop_assert!((s.delta1 * s.delta2 - a.det()).abs() <= 1e-11 * scale * scale);
    }

    #[test]
    fn neg_delta1_increases((p, beta) in params(), f in 1.0001f64..3.0) {
        prop_assert!(neg_delta1(&p, beta * f).unwrap() > neg_delta1(&p, beta).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn backends_agree(mu in 16.0f64..400.0) {
        let p = Params::new(mu, mu, 2.0, 1.0, 2).unwrap();
        let pr = RadialProblem::new(p, 96).unwrap();
        let e = eigenpairs(&pr.op, &pr.grid, 8).unwrap();
        let a = bifurcation_points(&p, &e, Exec::Sequential);
        let b = bifurcation_points(&p, &e, Exec::Parallel);
        prop_assert_eq!(a, b);
    }
}
