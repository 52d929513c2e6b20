use chemofront::analysis::{predicted_speed, BarenblattParams};
use chemofront::certificates::*;
use chemofront::harness::ScenarioConfig;
use chemofront::initial::{aggregating_v0, bump_u0, BumpSpec};
use chemofront::model::{integrate, make_grid, Grid, ModelParams, State};
use chemofront::solver::{ordering_run, run, SamplingPlan, StepControls};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    params: ModelParams,
    spec: BumpSpec,
    cells: usize,
}

fn case() -> impl Strategy<Value = Case> {
    (
        1.3f64..3.0,
        0.0f64..3.0,
        0.0f64..2.0,
        0usize..3,
        0.3f64..1.5,
        0.3f64..0.7,
        0.0f64..8.0,
        0.05f64..0.2,
        -0.3f64..0.3,
        40usize..120,
    )
        .prop_map(|(m, chi, alpha, shape, k0, r0, mu, dfrac, x0, cells)| {
            let (dim, radial) = [(1, false), (2, true), (3, true)][shape];
            let params = ModelParams::new(m, chi, alpha, dim, radial).unwrap();
            let mut spec = BumpSpec::canonical(&params, k0, r0, mu, dfrac * r0);
            if !radial {
                spec.x0 = x0;
            }
            Case { params, spec, cells }
        })
}

fn setup(c: &Case) -> (Grid, State) {
    let grid = make_grid(c.params.dim, c.params.radial, 2.0, c.cells).unwrap();
    let u = bump_u0(&grid, &c.spec, &c.params).unwrap();
    let v = aggregating_v0(&grid, &c.spec).unwrap();
    let s = State::new(&grid, u, v, 0.0).unwrap();
    (grid, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solver_invariants(c in case()) {
        let (grid, s) = setup(&c);
        let plan = SamplingPlan::uniform(0.0, 0.01, 8);
        let tr = run(&s, &c.params, &grid, &StepControls::until(0.01), &plan).unwrap();
        prop_assert!(tr.mass_drift() <= 1e-12, "drift {}", tr.mass_drift());
        prop_assert!(tr.diagnostics.min_u >= 0.0);
        prop_assert!(tr.diagnostics.min_v >= 0.0);
        prop_assert!(tr.diagnostics.max_v_increase <= 0.0);
        prop_assert_eq!(tr.diagnostics.support_jumps, 0);
        for w in tr.records.windows(2) {
            prop_assert!(w[1].linf_v <= w[0].linf_v);
            prop_assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn frozen_ordering(c in case(), a in 0.2f64..1.0, b in 0.4f64..1.0) {
        let (grid, upper) = setup(&c);
        let lower_spec = BumpSpec { k0: c.spec.k0 * a, r0: c.spec.r0 * b, delta: c.spec.delta * b, ..c.spec };
        let lower_u = bump_u0(&grid, &lower_spec, &c.params).unwrap();
        prop_assume!(lower_u.iter().zip(&upper.u).all(|(l, u)| l <= u));
        let lower = State::new(&grid, lower_u, upper.v.clone(), 0.0).unwrap();
        let rep = ordering_run(&lower, &upper, &c.params, &grid, &StepControls::until(0.005), &[0.001, 0.005]).unwrap();
        prop_assert!(rep.worst_excess <= 1e-10, "{}", rep.worst_excess);
    }

    #[test]
    fn beta_speed_identity(m in 1.05f64..5.0, chi in 0.0f64..5.0, k0 in 0.1f64..3.0, r0 in 0.1f64..2.0, mu in 0.0f64..20.0) {
        let p = ModelParams::line(m, chi).unwrap();
        let s = BumpSpec::canonical(&p, k0, r0, mu, r0 / 4.0);
        let beta = exact_speed_beta(&p, &s);
        let v = predicted_speed(&p, &s).unwrap();
        let scale = v.abs().max(r0 * (2.0 * m / (m - 1.0) * k0.powf(m - 1.0)));
        prop_assert!((r0 * beta / 2.0 - v).abs() <= 1e-12 * scale);
        let pr = SelfSimilarProfile { epsilon: k0, tau: 1.0, sigma: 1.0, beta, eta: r0, d: p.d(), x0: 0.0 };
        let h = 1e-6;
        let slope = (pr.support_radius(h).unwrap() - pr.support_radius(-h).unwrap()) / (2.0 * h);
        prop_assert!((slope - r0 * beta / 2.0).abs() <= 1e-6 * (1.0 + beta.abs() * r0));
    }

    #[test]
    fn predicted_speed_linear_and_monotone(m in 1.1f64..4.0, chi in 0.1f64..3.0, k0 in 0.2f64..2.0, r0 in 0.1f64..1.0, mu in 0.0f64..10.0, dk in 0.01f64..1.0) {
        let p = ModelParams::line(m, chi).unwrap();
        let at = |k: f64, mu: f64| predicted_speed(&p, &BumpSpec::canonical(&p, k, r0, mu, r0 / 4.0)).unwrap();
        let slope = at(k0, mu + 1.0) - at(k0, mu);
        prop_assert!((slope + r0 * chi).abs() <= 1e-10 * (1.0 + at(k0, mu).abs()));
        prop_assert!(at(k0 + dk, mu) > at(k0, mu));
    }

    #[test]
    fn profile_peak_and_sign(eps in 0.01f64..5.0, tau in 0.1f64..3.0, sigma in -3.0f64..3.0, beta in -1.0f64..1.0, eta in 0.1f64..2.0, m in 1.2f64..4.0, x in -3.0f64..3.0, t in 0.0f64..2.0) {
        let d = 1.0 / (m - 1.0);
        let p = SelfSimilarProfile { epsilon: eps, tau, sigma, beta, eta, d, x0: 0.0 };
        let g = p.eval(x, t).unwrap();
        prop_assert!(g >= 0.0);
        let peak = eps * (tau + t).powf(sigma) * eta.powf(2.0 * d);
        prop_assert!((p.eval(0.0, t).unwrap() - peak).abs() <= 1e-12 * peak);
        let r = p.support_radius(t).unwrap();
        prop_assert_eq!(g > 0.0, x.abs() < r);
    }

    #[test]
    fn shrinking_emission_rechecks(mu_excess in 0.1f64..20.0, c1 in 0.0f64..5.0, c2 in 0.0f64..5.0, r0 in 0.3f64..1.0) {
        let p = ModelParams::line(2.0, 1.0).unwrap();
        let base = BumpSpec::canonical(&p, 1.0, r0, 0.0, r0 / 5.0);
        let threshold = chemofront::initial::shrinking_threshold(&p, &base);
        let s = BumpSpec { mu: threshold + mu_excess, ..base };
        if let Ok(c) = shrinking_certificate(&p, &s, c1, c2, None) {
            prop_assert!(check_inequalities(&c, &p, &s).all_nonnegative);
            prop_assert!(c.profile.beta < 0.0);
        }
    }

    #[test]
    fn finite_speed_emission_rechecks(c1 in 0.0f64..5.0, c2 in 0.0f64..50.0, k0 in 0.3f64..2.0, env in 1.1f64..2.0) {
        let p = ModelParams::line(2.0, 1.0).unwrap();
        let s = BumpSpec::canonical(&p, k0, 0.5, 0.0, 0.1);
        let c = finite_speed_certificate(&p, &s, c1, c2, 0.5 * env).unwrap();
        prop_assert!(check_inequalities(&c, &p, &s).all_nonnegative);
        prop_assert!(c.profile.beta > 0.0);
        prop_assert!(c.profile.support_radius(c.window.1).unwrap() <= 0.5 * env * (1.0 + 1e-12));
    }

    #[test]
    fn expanding_recipe_always_feasible(eps1 in 1e-3f64..1.0, m in 1.2f64..3.0, chi in 0.0f64..3.0, core in 0.2f64..1.0, extra in 1.0f64..2.0) {
        let p = ModelParams::line(m, chi).unwrap();
        let c = expanding_certificate(&p, eps1, core, core * extra, None).unwrap();
        prop_assert!(c.min_margin() >= 0.0);
        prop_assert!(c.profile.beta > 0.0 && c.profile.sigma < 0.0);
        prop_assert!((c.profile.sigma + (1.0 - c.profile.beta) / (m - 1.0)).abs() <= 1e-12);
    }

    #[test]
    fn barenblatt_mass_is_constant(m in 1.2f64..4.0, n in 1usize..=3, t in 0.0f64..5.0) {
        let bp = BarenblattParams::new(m, n).unwrap();
        let grid = make_grid(n, n > 1, bp.front_radius(5.0) * 1.01, 4000).unwrap();
        let mass = |t: f64| {
            let f: Vec<f64> = grid.centers().iter().map(|r| bp.eval(r.abs(), t)).collect();
            integrate(&f, &grid).unwrap()
        };
        let m0 = mass(0.0);
        prop_assert!((mass(t) - m0).abs() <= 2e-3 * m0);
    }

    #[test]
    fn config_overrides_apply(cells in 8usize..2000, t_end in 0.001f64..10.0) {
        let base = ScenarioConfig::from_toml_str(
            "scenario = \"ordering\"\n[model]\nm = 2.0\nchi = 1.0\n[bump]\nk0 = 1.0\nr0 = 0.5\nd0 = 1.0\ndelta = 0.1\n",
        ).unwrap();
        let c = base
            .with_overrides(&[("grid.cells".into(), cells.to_string()), ("controls.t_end".into(), format!("{t_end:?}"))])
            .unwrap();
        prop_assert_eq!(c.grid.cells, cells);
        prop_assert_eq!(c.controls.t_end, t_end);
        prop_assert_eq!(c.model, base.model);
    }
}
