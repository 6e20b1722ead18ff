//! Acceptance criteria. Runs as a plain binary and prints one line per
//! criterion; exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use netkin_core::coupling::{
    cattaneo_conditions, epsilon_limit_check, half_moment_conditions, kinetic_coupling_matrix,
    solve_node_cattaneo, AlphaWeights, BlockCondition, CattaneoCoupling,
};
use netkin_core::engine::Simulation;
use netkin_core::models::{cattaneo, half_moment, ModelKind, ModelParams};
use netkin_core::scenarios::{
    network_l1_distance, one_to_one_difference, preset_interval_riemann, preset_large_network,
    preset_tripod, run_model, ModelSpec, ScenarioConfig,
};
use netkin_core::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const HYPERBOLIC: [ModelKind; 3] = [
    ModelKind::Kinetic,
    ModelKind::Cattaneo,
    ModelKind::HalfMoment,
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn simulate(config: &ScenarioConfig, kind: ModelKind, eps: f64) -> Result<Simulation> {
    let mut c = config.clone();
    c.epsilon = eps;
    let net = c.validate()?;
    let mut sim = Simulation::new(c.setup(&ModelSpec::new(kind), &net)?)?;
    sim.advance_to(c.t_end)?;
    Ok(sim)
}

fn initial_mass(config: &ScenarioConfig, kind: ModelKind, eps: f64) -> Result<f64> {
    let mut c = config.clone();
    c.epsilon = eps;
    let net = c.validate()?;
    Ok(Simulation::new(c.setup(&ModelSpec::new(kind), &net)?)?.total_mass())
}

fn mass_conservation() -> Result<Outcome> {
    let config = preset_tripod();
    let mut worst_rel: f64 = 0.0;
    for kind in HYPERBOLIC {
        for eps in [1.0, 0.5, 0.1, 1e-6] {
            let m0 = initial_mass(&config, kind, eps)?;
            let m1 = simulate(&config, kind, eps)?.total_mass();
            worst_rel = worst_rel.max((m1 - m0).abs() / m0);
        }
    }
    let m0 = initial_mass(&config, ModelKind::KellerSegel, 1.0)?;
    let ks = (simulate(&config, ModelKind::KellerSegel, 1.0)?.total_mass() - m0).abs();
    outcome(
        worst_rel <= 1e-12 && ks <= 1e-12,
        format!("max relative drift {worst_rel:.2e}, keller-segel absolute drift {ks:.2e}"),
    )
}

fn one_to_one() -> Result<Outcome> {
    let params = ModelParams::new(ModelKind::Kinetic, Default::default(), 0.5, None)?;
    let spec = ModelSpec::new(ModelKind::Kinetic);
    let mut worst: f64 = 0.0;
    for reversed in [false, true] {
        worst = worst.max(one_to_one_difference(&spec, params, 50, 50, 0.2, reversed)?);
    }
    outcome(worst <= 1e-12, format!("max cell difference {worst:.2e}"))
}

fn interval_distance(
    config: &ScenarioConfig,
    kind: ModelKind,
    eps: f64,
    ks: &[Vec<f64>],
) -> Result<f64> {
    let sim = simulate(config, kind, eps)?;
    let rho = sim.densities();
    let a: Vec<&[f64]> = rho.iter().map(Vec::as_slice).collect();
    let b: Vec<&[f64]> = ks.iter().map(Vec::as_slice).collect();
    let dx: Vec<f64> = (0..a.len()).map(|e| sim.cell_width(e)).collect();
    network_l1_distance(&a, &b, &dx)
}

fn diffusive_limit() -> Result<Outcome> {
    let coarse = {
        let mut c = preset_interval_riemann();
        c.dx = Some(0.005);
        c
    };
    let fine = {
        let mut c = coarse.clone();
        c.dx = Some(0.0025);
        c
    };
    let ks_coarse = simulate(&coarse, ModelKind::KellerSegel, 1.0)?.densities();
    let ks_fine = simulate(&fine, ModelKind::KellerSegel, 1.0)?.densities();
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in HYPERBOLIC {
        let d: Vec<f64> = [0.5, 0.1, 1e-6]
            .iter()
            .map(|&eps| interval_distance(&coarse, kind, eps, &ks_coarse))
            .collect::<Result<_>>()?;
        let d_fine = interval_distance(&fine, kind, 1e-6, &ks_fine)?;
        let ratio = d[2] / d_fine;
        pass &= d[0] > d[1] && d[1] > d[2] && (2.0 / 1.5..=3.0).contains(&ratio);
        parts.push(format!(
            "{kind} {:.2e} > {:.2e} > {:.2e}, halving ratio {ratio:.2}",
            d[0], d[1], d[2]
        ));
    }
    outcome(pass, parts.join("; "))
}

fn ap_time_step() -> Result<Outcome> {
    let mut config = preset_tripod();
    config.physical.diffusivity = 0.001;
    let dx = 0.02;
    let parabolic = config.cfl_safety * dx * dx / (2.0 * config.physical.diffusivity);
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in HYPERBOLIC {
        let a = simulate(&config, kind, 1e-2)?;
        let b = simulate(&config, kind, 1e-6)?;
        let finite = [&a, &b]
            .iter()
            .all(|s| s.densities().iter().flatten().all(|r| r.is_finite()));
        pass &= a.dt() == b.dt() && a.dt() < parabolic && finite;
        parts.push(format!("{kind} dt {:.6e} / {:.6e}", a.dt(), b.dt()));
    }
    outcome(pass, parts.join(", "))
}

fn limit_algebra() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut full_rank = true;
    for n in 2..=5 {
        let a = kinetic_coupling_matrix(n)?;
        let [hm_rho, hm_q] = half_moment_conditions(&a);
        let blocks: [BlockCondition; 3] = [cattaneo_conditions(&a), hm_rho, hm_q];
        for block in &blocks {
            let limit = epsilon_limit_check(block, 0.0)?;
            worst = worst.max(limit.limit_residual());
            full_rank &= limit.rank() == n;
        }
    }
    outcome(
        worst <= 1e-14 && full_rank,
        format!(
            "max residual {worst:.2e}, degrees 2..5, rank {}",
            if full_rank { "full" } else { "deficient" }
        ),
    )
}

fn positivity() -> Result<Outcome> {
    let config = preset_tripod();
    let net = config.validate()?;
    let run = run_model(&config, &ModelSpec::new(ModelKind::Kinetic), &net)?;
    let min = run.min_distribution.unwrap_or(f64::NAN);
    outcome(
        min >= -1e-13,
        format!("min f {min:.3e} over {} steps", run.steps),
    )
}

fn variant_equivalence() -> Result<Outcome> {
    let a = kinetic_coupling_matrix(3)?;
    let sys = cattaneo::transport_system(ModelParams::default_phi(ModelKind::Cattaneo, 1.0, 1.0))?;
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for eps in [1.0, 0.1] {
        let alpha = CattaneoCoupling::AlphaTransmission(AlphaWeights::Uniform(
            2.0 / (3.0 * 3f64.sqrt() * eps * eps),
        ));
        for _ in 0..100 {
            let traces: Vec<[f64; 2]> = (0..3)
                .map(|_| [rng.gen_range(0.0..5.0), rng.gen_range(-2.0..2.0)])
                .collect();
            let x = solve_node_cattaneo(&sys, &traces, &CattaneoCoupling::KineticDerived, &a, eps)?;
            let y = solve_node_cattaneo(&sys, &traces, &alpha, &a, eps)?;
            for (s, t) in x.iter().zip(&y) {
                worst = worst.max((s[0] - t[0]).abs()).max((s[1] - t[1]).abs());
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max difference {worst:.2e} over 200 trace sets"),
    )
}

fn model_ordering() -> Result<Outcome> {
    let mut config = preset_large_network();
    config.t_end = 5.0;
    let mass = |kind| -> Result<f64> { Ok(simulate(&config, kind, config.epsilon)?.total_mass()) };
    let ks = mass(ModelKind::KellerSegel)?;
    let p1 = mass(ModelKind::Cattaneo)?;
    let hm = mass(ModelKind::HalfMoment)?;
    let kin = mass(ModelKind::Kinetic)?;
    let gap = (hm - kin).abs() / kin;
    outcome(
        ks > p1 && p1 > hm.max(kin) && gap <= 0.05,
        format!("keller-segel {ks:.4} > cattaneo {p1:.4} > half-moment {hm:.4} / kinetic {kin:.4}, gap {:.2}%", 100.0 * gap),
    )
}

fn half_moment_spectrum() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for phi in [1.0 / 6.0, 1.0 / 12.0] {
        // x² = φ (29/6 ± √((29/6)² - 2/3)) / 2
        let b: f64 = 29.0 / 6.0;
        let disc = (b * b - 4.0 / 6.0).sqrt();
        let big = (phi * (b + disc) / 2.0).sqrt();
        let small = (phi * (b - disc) / 2.0).sqrt();
        let mut expected = [-big, -small, small, big];
        expected.sort_by(f64::total_cmp);
        let sys = half_moment::transport_system(phi)?;
        let mut got = sys.eigenvalues().to_vec();
        got.sort_by(f64::total_cmp);
        for (g, e) in got.iter().zip(&expected) {
            worst = worst.max((g - e).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max eigenvalue error {worst:.2e}"))
}

type Criterion = (&'static str, fn() -> Result<Outcome>, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "mass conservation",
            mass_conservation,
            Duration::from_secs(10 * 13),
        ),
        (
            "one-to-one coupling equivalence",
            one_to_one,
            Duration::from_secs(10),
        ),
        (
            "diffusive-limit convergence",
            diffusive_limit,
            Duration::from_secs(120),
        ),
        (
            "asymptotic-preserving time step",
            ap_time_step,
            Duration::from_secs(30),
        ),
        (
            "coupling-limit algebra",
            limit_algebra,
            Duration::from_secs(1),
        ),
        ("kinetic positivity", positivity, Duration::from_secs(10)),
        (
            "cattaneo variant equivalence",
            variant_equivalence,
            Duration::from_secs(1),
        ),
        (
            "large-network mass ordering",
            model_ordering,
            Duration::from_secs(300),
        ),
        (
            "half-moment eigenstructure",
            half_moment_spectrum,
            Duration::from_secs(1),
        ),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} {name}: {detail} [{:.1}s of {}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
