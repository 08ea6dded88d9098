//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints its own PASS/FAIL line; the process exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qdho::decoherence::{
    decoherence_time, decoherence_time_high_temperature_r0, delta_qd, gamma_short_time,
    thermal_fluctuation_time, timescale_report,
};
use qdho::fock::run_from_spec;
use qdho::gaussian::{moment_derivatives, sigma_short_time, uniform_times, GaussianState};
use qdho::verify::{moment_discrepancy, verify, VerifyOptions};
use qdho::{
    evolve, gibbs_coefficients, initial_state, sigma_analytic, Coefficients, Constants,
    MixedDiffusionScaling, OracleRun, Params, Spec, StepControl, Temperature, TimeScale,
    Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn p0() -> Params {
    Params::natural(1.0, 1.0, 0.2, 0.1, 2.0).unwrap()
}

fn p0_spec() -> Spec {
    Spec::new(2.0, 0.0, 1.0, 0.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// A valid Gibbs scenario drawn at random, with `hbar` free as well.
struct Scenario {
    params: Params,
    coeffs: Coefficients,
    spec: Spec,
}

fn random_scenarios(n: usize, seed: u64) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mass = rng.random_range(0.5..2.0);
            let omega = rng.random_range(0.5..2.0);
            let lambda: f64 = rng.random_range(0.05..0.5);
            let mu = rng.random_range(-0.8..0.8) * lambda;
            let c_min = lambda / (lambda * lambda - mu * mu).sqrt();
            let c = c_min * rng.random_range(1.0..3.0);
            let hbar = rng.random_range(0.5..2.0);
            let params = Params::new(
                mass,
                omega,
                lambda,
                mu,
                Temperature::CothEpsilon(c),
                Constants::new(hbar, 1.0).unwrap(),
            )
            .unwrap();
            let coeffs = gibbs_coefficients(&params).unwrap();
            let spec = Spec::new(
                rng.random_range(0.5..4.0),
                rng.random_range(-0.9..0.9),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            )
            .unwrap();
            Scenario {
                params,
                coeffs,
                spec,
            }
        })
        .collect()
}

fn evolve_to(s: &Scenario, t_final: f64, samples: usize) -> Trajectory {
    let state = initial_state(&s.spec, &s.params).unwrap();
    evolve(
        &state,
        &s.params,
        &s.coeffs,
        t_final,
        &StepControl::default().with_samples(samples),
    )
    .unwrap()
}

/// Oracle budgets: Hermitian within 1e-12, unit trace within 1e-10, smallest
/// eigenvalue at least -1e-8, leakage inside the configured budget.
fn oracle_budget_violation(run: &OracleRun) -> Option<String> {
    for s in &run.samples {
        let t = s.moments.time;
        if s.hermiticity_error > 1e-12 {
            return Some(format!("hermiticity {:.2e} at t={t}", s.hermiticity_error));
        }
        if (s.trace - 1.0).abs() > 1e-10 {
            return Some(format!(
                "trace drift {:.2e} at t={t}",
                (s.trace - 1.0).abs()
            ));
        }
        if let Some(e) = s.min_eigenvalue {
            if e < -1e-8 {
                return Some(format!("eigenvalue {e:.2e} at t={t}"));
            }
        }
        if s.leakage > run.leakage_budget {
            return Some(format!("leakage {:.2e} at t={t}", s.leakage));
        }
    }
    None
}

struct Shared {
    verification: qdho::verify::Verification<f64>,
    elapsed: Duration,
}

fn criterion_1(shared: &Shared) -> Outcome {
    let report = &shared.verification.report;
    let options = VerifyOptions::<f64>::default();
    let times = uniform_times(0.0, options.t_final, options.samples);
    let (params, spec) = (p0(), p0_spec());
    let coeffs = gibbs_coefficients(&params).unwrap();
    let big = run_from_spec(&spec, &params, &coeffs, 120, &times, &options.oracle)
        .map_err(|e| format!("N=120 oracle: {e}"))?;
    let small = shared.verification.oracle.trajectory().unwrap();
    let change = moment_discrepancy(&small, &big.trajectory().unwrap()).max();
    let secs = shared.elapsed.as_secs_f64();
    check(
        report.oracle.dim == 60
            && (report.oracle.step - 1e-3).abs() < 1e-15
            && report.max_discrepancy < 1e-4
            && secs < 120.0
            && change < 1e-6,
        format!(
            "N={} h={} max moment gap {:.2e} (< 1e-4), N=60 vs 120 change {:.2e} (< 1e-6), {:.1}s (< 120s)",
            report.oracle.dim, report.oracle.step, report.max_discrepancy, change, secs
        ),
    )
}

fn criterion_2(scenarios: &[Scenario]) -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_floor = 0.0f64;
    for s in scenarios {
        let h2 = s.params.hbar().powi(2) / 4.0;
        let t_final = 10.0 / s.params.lambda();
        let traj = evolve_to(s, t_final, 200);
        for st in traj.iter() {
            let exact = sigma_analytic(st.time, &s.spec, &s.params).unwrap();
            worst = worst.max(rel(st.uncertainty(), exact));
        }
        let a0 = sigma_analytic(0.0, &s.spec, &s.params).unwrap();
        worst_floor = worst_floor
            .max(rel(a0, h2))
            .max(rel(traj.first().uncertainty(), h2));
    }
    check(
        worst < 1e-6 && worst_floor < 1e-12,
        format!(
            "{} random sets: max relative gap {:.2e} (< 1e-6), sigma(0) vs hbar^2/4 {:.2e} (< 1e-12)",
            scenarios.len(),
            worst,
            worst_floor
        ),
    )
}

fn criterion_3(scenarios: &[Scenario]) -> Outcome {
    let (mut sigma_gap, mut dqd_gap) = (0.0f64, 0.0f64);
    for s in scenarios {
        let t = 50.0 / s.params.lambda();
        let c = s.params.coth_epsilon();
        let h = s.params.hbar();
        let target = h * h / 4.0 * c * c;
        let last = *evolve_to(s, t, 1).last();
        sigma_gap = sigma_gap
            .max(rel(last.uncertainty(), target))
            .max(rel(sigma_analytic(t, &s.spec, &s.params).unwrap(), target));
        dqd_gap = dqd_gap.max(rel(delta_qd(&last, h), s.params.tanh_epsilon()));
    }
    let p = p0();
    let p0_inf = timescale_report(&p0_spec(), &p).unwrap().delta_qd_infinity;
    check(
        sigma_gap < 1e-6 && dqd_gap < 1e-6 && p0_inf == 0.5,
        format!(
            "t=50/lambda: sigma gap {sigma_gap:.2e}, delta_QD vs tanh eps {dqd_gap:.2e} (< 1e-6); P0 delta_QD(inf) = {p0_inf}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let t_p0 = decoherence_time(&p0_spec(), &p0())
        .unwrap()
        .finite()
        .unwrap_or(f64::NAN);
    let cold = Params::natural(1.0, 1.0, 0.2, 0.0, 1.0).unwrap();
    let t_cold = decoherence_time(&Spec::new(2.0, 0.0, 0.0, 0.0).unwrap(), &cold).unwrap();
    let t_glauber = decoherence_time(&Spec::coherent(0.0, 0.0), &cold).unwrap();
    // tau = 2kT/(hbar omega) = 10
    let hot = Params::new(
        1.0,
        1.0,
        0.2,
        0.1,
        Temperature::Absolute(5.0),
        Constants::default(),
    )
    .unwrap();
    let spec = Spec::new(2.0, 0.0, 0.0, 0.0).unwrap();
    let t22 = decoherence_time_high_temperature_r0(&spec, &hot)
        .finite()
        .unwrap_or(f64::NAN);
    let td = thermal_fluctuation_time(&spec, &hot)
        .t_d
        .finite()
        .unwrap_or(f64::NAN);
    let ratio = t22 / td;
    let cold_ok = matches!(t_cold, TimeScale::Finite(v) if (v - 2.5).abs() < 1e-12);
    check(
        (t_p0 - 0.5556).abs() < 1e-4
            && cold_ok
            && t_glauber.is_infinite()
            && rel(ratio, 13.0 / 12.0) < 1e-12
            && ratio < 1.1,
        format!(
            "P0 t_deco {t_p0:.6}, T=0 t_deco {:?}, glauber {:?}, high-T t_deco/t_d {ratio:.6} (13/12 = {:.6})",
            t_cold.finite(),
            t_glauber.finite(),
            13.0 / 12.0
        ),
    )
}

/// Fixed-step RK4 on the moment equations, either direction in time.
fn rk4_to(
    state: GaussianState<f64>,
    params: &Params,
    coeffs: &Coefficients,
    t: f64,
    steps: usize,
) -> GaussianState<f64> {
    let f = |s: &GaussianState<f64>| {
        let d = moment_derivatives(s, params, coeffs);
        [d.q, d.p, d.qq, d.pp, d.pq]
    };
    let with = |s: &GaussianState<f64>, k: [f64; 5], a: f64, dt: f64| GaussianState {
        time: s.time + a,
        q: s.q + dt * k[0],
        p: s.p + dt * k[1],
        qq: s.qq + dt * k[2],
        pp: s.pp + dt * k[3],
        pq: s.pq + dt * k[4],
    };
    let h = (t - state.time) / steps as f64;
    let mut s = state;
    for _ in 0..steps {
        let k1 = f(&s);
        let k2 = f(&with(&s, k1, h / 2.0, h / 2.0));
        let k3 = f(&with(&s, k2, h / 2.0, h / 2.0));
        let k4 = f(&with(&s, k3, h, h));
        let k: [f64; 5] = std::array::from_fn(|i| (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) / 6.0);
        s = with(&s, k, h, h);
    }
    s
}

fn criterion_5() -> Outcome {
    let cases = [
        (p0(), p0_spec()),
        (p0(), Spec::new(2.0, 0.5, 1.0, 0.0).unwrap()),
        (p0(), Spec::new(1.5, -0.6, 0.0, 1.0).unwrap()),
        (
            Params::natural(1.0, 1.0, 0.2, 0.0, 1.0).unwrap(),
            Spec::new(3.0, 0.0, 0.0, 0.0).unwrap(),
        ),
        (
            Params::natural(2.0, 0.7, 0.3, -0.1, 4.0).unwrap(),
            Spec::new(0.8, 0.3, 0.5, 0.5).unwrap(),
        ),
    ];
    let dt = 1e-4;
    let (mut gamma_gap, mut sigma_gap) = (0.0f64, 0.0f64);
    for (params, spec) in &cases {
        let coeffs = gibbs_coefficients(params).unwrap();
        let h = params.hbar();
        let s0 = initial_state(spec, params).unwrap();
        let plus = rk4_to(s0, params, &coeffs, dt, 20);
        let minus = rk4_to(s0, params, &coeffs, -dt, 20);
        let gamma = |s: &GaussianState<f64>| s.uncertainty() / (2.0 * h * h * s.qq);
        let fd_gamma = (gamma(&plus) - gamma(&minus)) / (2.0 * dt);
        let fd_sigma = (plus.uncertainty() - minus.uncertainty()) / (2.0 * dt);
        let slope_gamma = gamma_short_time(1.0, spec, params) - gamma_short_time(0.0, spec, params);
        let slope_sigma = sigma_short_time(1.0, spec, params) - sigma_short_time(0.0, spec, params);
        gamma_gap = gamma_gap.max(rel(fd_gamma, slope_gamma));
        sigma_gap = sigma_gap.max(rel(fd_sigma, slope_sigma));
    }
    check(
        gamma_gap < 1e-5 && sigma_gap < 1e-5,
        format!(
            "{} cases: gamma slope gap {gamma_gap:.2e}, sigma slope gap {sigma_gap:.2e} (< 1e-5)",
            cases.len()
        ),
    )
}

fn criterion_6(shared: &Shared, scenarios: &[Scenario]) -> Outcome {
    let options = VerifyOptions::<f64>::default();
    let times = uniform_times(0.0, 10.0, 100);
    let extra = [
        (p0(), Spec::new(2.0, 0.5, 1.0, 0.5).unwrap()),
        (
            Params::natural(1.0, 1.0, 0.2, 0.0, 1.0).unwrap(),
            Spec::coherent(1.0, 0.0),
        ),
        (
            Params::natural(1.0, 1.0, 0.3, -0.1, 3.0).unwrap(),
            Spec::new(0.7, -0.4, 0.0, -1.0).unwrap(),
        ),
    ];
    let mut runs = vec![shared.verification.oracle.clone()];
    for (params, spec) in &extra {
        let coeffs = gibbs_coefficients(params).unwrap();
        runs.push(
            run_from_spec(spec, params, &coeffs, 60, &times, &options.oracle)
                .map_err(|e| e.to_string())?,
        );
    }
    let mut oracle_issue = None;
    let (mut herm, mut drift, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for run in &runs {
        oracle_issue = oracle_issue.or_else(|| oracle_budget_violation(run));
        for s in &run.samples {
            herm = herm.max(s.hermiticity_error);
            drift = drift.max((s.trace - 1.0).abs());
            min_eig = min_eig.min(s.min_eigenvalue.unwrap_or(f64::INFINITY));
        }
    }

    let (mut dqd_min, mut dqd_max, mut floor) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    for s in scenarios {
        let h = s.params.hbar();
        for st in evolve_to(s, 10.0 / s.params.lambda(), 200).iter() {
            let d = delta_qd(st, h);
            dqd_min = dqd_min.min(d);
            dqd_max = dqd_max.max(d);
            floor = floor.min(st.uncertainty() / (h * h / 4.0));
        }
    }
    // delta_QD = hbar / 2 sqrt(sigma), so the uncertainty floor bounds it by
    // (1 - 1e-9)^(-1/2); a pure state rounds to within a few ulp of 1
    let dqd_cap = (1.0f64 - 1e-9).sqrt().recip();
    check(
        oracle_issue.is_none() && dqd_min > 0.0 && dqd_max <= dqd_cap && floor >= 1.0 - 1e-9,
        format!(
            "{} oracle runs: hermiticity {herm:.1e}, trace drift {drift:.1e}, min eigenvalue {min_eig:.1e}{}; \
             delta_QD in [{dqd_min:.4}, {dqd_max:.17}]; min sigma/(hbar^2/4) {floor:.12}",
            runs.len(),
            oracle_issue.map(|m| format!(" [{m}]")).unwrap_or_default()
        ),
    )
}

fn criterion_7(shared: &Shared) -> Outcome {
    let report = &shared.verification.report;
    let mixed = &report.mixed_diffusion;
    let json = report.to_json();
    check(
        report.residual.points == 100
            && report.residual.max < 1e-4
            && json.contains("\"mixed_diffusion\"")
            && mixed.distinguishable
            && mixed.vanishing == vec![MixedDiffusionScaling::OverHbar],
        format!(
            "residual max {:.2e} over {} points (< 1e-4); mixed term at hbar={}: times-hbar {:.2e}, over-hbar {:.2e}",
            report.residual.max, report.residual.points, mixed.hbar, mixed.times_hbar.max, mixed.over_hbar.max
        ),
    )
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn t_deco_along(points: impl Iterator<Item = (Params, Spec)>) -> Vec<f64> {
    points
        .map(|(p, s)| {
            decoherence_time(&s, &p)
                .unwrap()
                .finite()
                .unwrap_or(f64::INFINITY)
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let grid = |a: f64, b: f64| uniform_times(a, b, 20);
    let spec = p0_spec();
    let by_lambda = t_deco_along(
        grid(0.12, 1.0)
            .into_iter()
            .map(|l| (p0().with_lambda(l).unwrap(), spec)),
    );
    let by_temp = t_deco_along(grid(0.0, 5.0).into_iter().map(|t| {
        let p = Params::new(
            1.0,
            1.0,
            0.2,
            0.0,
            Temperature::Absolute(t),
            Constants::default(),
        )
        .unwrap();
        (p, spec)
    }));
    let by_temp_mu = t_deco_along(
        grid(1.2, 5.0)
            .into_iter()
            .map(|c| (Params::natural(1.0, 1.0, 0.2, 0.1, c).unwrap(), spec)),
    );
    let by_delta = t_deco_along(
        grid(0.6, 5.0)
            .into_iter()
            .map(|d| (p0(), Spec::new(d, 0.0, 1.0, 0.0).unwrap())),
    );
    let monotone = [&by_lambda, &by_temp, &by_temp_mu, &by_delta]
        .iter()
        .all(|v| strictly_decreasing(v));

    let params = p0();
    let coeffs = gibbs_coefficients(&params).unwrap();
    let t = 50.0 / params.lambda();
    let mut spread = (f64::INFINITY, 0.0f64);
    for delta in [0.5, 1.0, 2.0, 4.0] {
        for r in [-0.8, 0.0, 0.5, 0.9] {
            let s = Scenario {
                params,
                coeffs,
                spec: Spec::new(delta, r, 1.0, -1.0).unwrap(),
            };
            let d = delta_qd(evolve_to(&s, t, 1).last(), params.hbar());
            spread = (spread.0.min(d), spread.1.max(d));
        }
    }
    let gap = spread.1 - spread.0;
    check(
        monotone && gap < 1e-6,
        format!(
            "t_deco strictly decreasing in lambda: {}, T: {}, T at mu=0.1: {}, delta: {}; delta_QD(inf) spread over (delta, r) {gap:.2e} (< 1e-6)",
            strictly_decreasing(&by_lambda),
            strictly_decreasing(&by_temp),
            strictly_decreasing(&by_temp_mu),
            strictly_decreasing(&by_delta)
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let params = p0();
    let coeffs = gibbs_coefficients(&params).unwrap();
    let options = VerifyOptions {
        oracle_dim: Some(60),
        ..VerifyOptions::default()
    };
    let shared = match verify(&p0_spec(), &params, &coeffs, &options) {
        Ok(verification) => Shared {
            verification,
            elapsed: started.elapsed(),
        },
        Err(e) => {
            println!("acceptance: reference verification failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let scenarios = random_scenarios(100, 2024);

    let results: [(&str, Outcome); 8] = [
        ("oracle equivalence", criterion_1(&shared)),
        ("closed-form uncertainty", criterion_2(&scenarios)),
        ("asymptotics", criterion_3(&scenarios)),
        ("decoherence times", criterion_4()),
        ("short-time slopes", criterion_5()),
        ("structural invariants", criterion_6(&shared, &scenarios)),
        ("coordinate residual", criterion_7(&shared)),
        ("monotonicity", criterion_8()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {name}: {tag} - {detail}", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
