mod common;

use approx::assert_relative_eq;
use common::rng;
use gardingkit::hygeo::{pk_two_value, radial_curvatures};
use gardingkit::plateau::{
    cap_profile, derivatives, jacobian, residual, solve, summarize, verify_apriori, Init, RadialProfile,
};
use gardingkit::{CurvatureVector, Error, SolverConfig};
use rand::Rng;

fn config(nodes: usize, eps: Vec<f64>) -> SolverConfig {
    let mut c = SolverConfig::new(6, 3, 0.125, 1.0, eps);
    c.nodes = nodes;
    c
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn reproduces_the_cap_at_the_smallest_height() {
    let cfg = config(2048, vec![0.2, 0.1, 0.05, 0.025]);
    let run = solve(&cfg).unwrap();
    assert!(run.failure.is_none(), "{:?}", run.failure);
    let last = run.profiles.last().unwrap();
    let cap = cap_profile(&cfg, 0.025).unwrap();
    assert!(max_abs(last.u.iter().zip(&cap).map(|(a, b)| a - b)) <= 1e-5);
    let c = cfg.cap_curvature();
    assert!(max_abs(last.kappa_rad.iter().chain(&last.kappa_ang).map(|k| k - c)) <= 1e-5);
    assert!(last.elliptic && last.converged);
}

#[test]
fn residual_matches_the_geometry_module() {
    let cfg = config(512, vec![0.1]);
    let run = solve(&cfg).unwrap();
    let p = &run.profiles[0];
    let (res, _) = residual(&p.u, &cfg, 0.1);
    let (d1, d2) = derivatives(&p.u, cfg.h());
    for i in 0..cfg.nodes {
        let (kr, ka) = radial_curvatures(p.r[i], p.u[i], d1[i], d2[i]).unwrap();
        let other = pk_two_value(cfg.n, cfg.k, kr, ka) - cfg.sigma;
        assert!((other - res[i]).abs() <= 1e-10, "node {i}: {other} vs {}", res[i]);
    }
}

#[test]
fn two_value_pk_matches_the_bundle() {
    let mut r = rng(31);
    for _ in 0..100 {
        let (a, b) = (r.random_range(0.1..2.0), r.random_range(0.1..2.0));
        let mut v = vec![a];
        v.extend(std::iter::repeat_n(b, 5));
        let full = CurvatureVector::new(v).unwrap().bundle().normalized_pk(3).unwrap();
        assert_relative_eq!(pk_two_value(6, 3, a, b), full, max_relative = 1e-12);
    }
}

/// Perturbed cap: smooth bump that keeps u(R) fixed and u'(0) = 0.
fn random_profile(cfg: &SolverConfig, r: &mut impl Rng) -> Vec<f64> {
    let base = cap_profile(cfg, 0.1).unwrap();
    let (a, b) = (r.random_range(-0.02..0.02), r.random_range(-0.02..0.02));
    cfg.grid()
        .iter()
        .zip(base)
        .map(|(&x, u)| u + a * (1.0 - x * x) + b * (1.0 - x * x) * x * x)
        .collect()
}

#[test]
fn jacobian_columns_match_finite_differences() {
    let cfg = config(64, vec![0.1]);
    let mut r = rng(17);
    for _ in 0..10 {
        let u = random_profile(&cfg, &mut r);
        let (sub, diag, sup) = jacobian(&u, &cfg);
        let m = u.len();
        for j in 0..m {
            let step = 1e-8 * u[j].abs().max(1e-3);
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += step;
            dn[j] -= step;
            let (rp, _) = residual(&up, &cfg, 0.1);
            let (rm, _) = residual(&dn, &cfg, 0.1);
            let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * step)).collect();
            let analytic: Vec<f64> = (0..m)
                .map(|i| {
                    if i == j {
                        diag[i]
                    } else if i + 1 == j {
                        sup[i]
                    } else if j + 1 == i {
                        sub[i]
                    } else {
                        0.0
                    }
                })
                .collect();
            let scale = max_abs(fd.iter().copied()).max(1.0);
            let err = max_abs(fd.iter().zip(&analytic).map(|(a, b)| a - b));
            assert!(err / scale <= 1e-5, "column {j}: {}", err / scale);
        }
    }
}

#[test]
fn profiles_decrease_with_the_boundary_height() {
    let cfg = config(512, vec![0.2, 0.1, 0.05, 0.025]);
    let run = solve(&cfg).unwrap();
    assert_eq!(run.profiles.len(), 4);
    for w in run.profiles.windows(2) {
        assert!(w[0].u.iter().zip(&w[1].u).all(|(a, b)| a > b));
    }
}

#[test]
fn solutions_converge_at_second_order_in_the_grid() {
    // Compare against the exact cap on coarse and doubled grids.
    let err = |m: usize| {
        let cfg = config(m, vec![0.05]);
        let p = solve(&cfg).unwrap().profiles.remove(0);
        let cap = cap_profile(&cfg, 0.05).unwrap();
        max_abs(p.u.iter().zip(&cap).map(|(a, b)| a - b))
    };
    let (a, b) = (err(64), err(128));
    let order = (a / b).log2();
    assert!(order > 1.7 && order < 2.4, "order {order} from {a:e}, {b:e}");
}

#[test]
fn all_init_modes_agree() {
    let mut out = Vec::new();
    for init in [Init::Cap, Init::Previous, Init::Flat] {
        let mut cfg = config(256, vec![0.2, 0.1]);
        cfg.init = init;
        let run = solve(&cfg).unwrap();
        assert!(run.failure.is_none(), "{init:?}: {:?}", run.failure);
        out.push(run.profiles[1].u.clone());
    }
    for v in &out[1..] {
        assert!(max_abs(v.iter().zip(&out[0]).map(|(a, b)| a - b)) < 1e-8);
    }
}

#[test]
fn apriori_report_flags_a_diverging_sequence() {
    let cfg = config(256, vec![0.2, 0.1, 0.05]);
    let run = solve(&cfg).unwrap();
    let good = verify_apriori(&run.profiles, 1.0).unwrap();
    assert!(good.holds);
    assert!((good.kappa_ratio - 1.0).abs() < 0.01);
    // Same profiles, but the last one's curvature is blown up by hand.
    let mut bad = run.profiles.clone();
    let last = bad.last_mut().unwrap();
    for (i, k) in last.kappa_rad.iter_mut().enumerate() {
        *k *= 1.0 + 10.0 * i as f64 / cfg.nodes as f64;
    }
    assert!(!verify_apriori(&bad, 1.0).unwrap().holds);
    let mut flat = run.profiles.clone();
    for v in &mut flat.last_mut().unwrap().nu {
        *v *= 0.1;
    }
    assert!(!verify_apriori(&flat, 1.0).unwrap().holds);
}

#[test]
fn apriori_needs_two_profiles() {
    let cfg = config(64, vec![0.1]);
    let run = solve(&cfg).unwrap();
    assert!(matches!(verify_apriori(&run.profiles, 1.0), Err(Error::InsufficientData(_))));
    let s = summarize(&cfg, &run, 1.0);
    assert_eq!(s.verdict, "fails");
    assert!(s.apriori.is_none());
}

#[test]
fn cap_apriori_values_match_the_closed_form() {
    let cfg = config(1024, vec![0.2, 0.1, 0.05, 0.025]);
    let run = solve(&cfg).unwrap();
    let c = cfg.cap_curvature();
    let rep = verify_apriori(&run.profiles, 1.0).unwrap();
    for row in &rep.rows {
        assert!((row.max_abs_kappa - c).abs() < 1e-4);
        // ν at the rim equals √(ρ²-R²)/ρ for the cap through u(R) = ε.
        let (rho, _) = gardingkit::hygeo::cap_parameters(c, 1.0, row.epsilon).unwrap();
        assert_relative_eq!(row.min_nu, (rho * rho - 1.0).sqrt() / rho, max_relative = 1e-3);
        assert!(row.min_nu >= 0.5 * c);
    }
}

#[test]
fn solve_is_deterministic() {
    let cfg = config(256, vec![0.2, 0.1]);
    let a = serde_json::to_string(&solve(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&solve(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn near_one_sigma_is_nearly_flat() {
    let mut cfg = config(512, vec![0.2, 0.1]);
    cfg.sigma = 1.0 - 1e-3;
    let run = solve(&cfg).unwrap();
    assert!(run.failure.is_none());
    let p = run.profiles.last().unwrap();
    assert!(max_abs(p.kappa_rad.iter().chain(&p.kappa_ang).map(|k| k - 1.0)) < 1e-3);
}

#[test]
fn flat_profile_residual_is_one_minus_sigma() {
    let cfg = config(32, vec![0.3]);
    let (res, lost) = residual(&vec![0.3; 33], &cfg, 0.3);
    assert!(!lost);
    assert!(res[..32].iter().all(|r| (r - 0.875).abs() < 1e-14));
}

#[test]
fn profile_csv_header() {
    let cfg = config(8, vec![0.1]);
    let p = RadialProfile::from_values(&cfg, 0.1, cap_profile(&cfg, 0.1).unwrap());
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("r,u,kappa_rad,kappa_ang,nu,Q\n"));
    assert_eq!(text.lines().count(), 10);
}
