//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Benchmark sizes count the neuron fixed at 0, so a network of `n`
//! neurons has `n - 1` movable breakpoints; rates use `n`.
//!
//! Everything runs inside one test so the timing criteria are not
//! disturbed by sibling tests.

mod common;

use std::io::Write;
use std::time::Instant;

use common::*;
use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ritz_dbn::*;

struct Criterion {
    id: usize,
    name: &'static str,
    limit_s: Option<f64>,
    run: fn() -> (bool, String),
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "stencil inverse exactness", limit_s: Some(5.0), run: c1_inverse },
    Criterion { id: 2, name: "condition number bound", limit_s: Some(30.0), run: c2_condition },
    Criterion { id: 3, name: "derivative oracles", limit_s: Some(60.0), run: c3_derivatives },
    Criterion { id: 4, name: "initial errors", limit_s: Some(5.0), run: c4_initial },
    Criterion { id: 5, name: "smooth problem rates", limit_s: Some(120.0), run: c5_rates },
    Criterion { id: 6, name: "singular problem: dBN / AdBN / aFEM", limit_s: Some(60.0), run: c6_singular },
    Criterion { id: 7, name: "interface problem", limit_s: Some(30.0), run: c7_interface },
    Criterion { id: 8, name: "BFGS comparison", limit_s: Some(60.0), run: c8_bfgs },
    Criterion { id: 9, name: "per-iteration cost scaling", limit_s: Some(60.0), run: c9_scaling },
    Criterion { id: 10, name: "energy monotonicity", limit_s: None, run: c10_monotone },
    Criterion { id: 11, name: "KKT vs penalty", limit_s: None, run: c11_kkt },
];

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    // start on a fresh line after libtest's "test acceptance ..."
    let _ = std::io::stdout().lock().write_all(b"\n");
    for c in CRITERIA {
        let t0 = Instant::now();
        let (ok, detail) = (c.run)();
        let secs = t0.elapsed().as_secs_f64();
        let in_time = c.limit_s.is_none_or(|l| secs < l);
        let pass = ok && in_time;
        let limit = c.limit_s.map_or(String::new(), |l| format!(" / limit {l:.0} s"));
        // straight to the stdout handle: libtest only captures the print macros,
        // and these lines should show up in a plain `cargo test` log
        let line = format!(
            "{} criterion {:>2} ({}): {} [{secs:.2} s{limit}]\n",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail
        );
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(line.as_bytes()).and_then(|_| out.flush());
        if !pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

fn problem(id: ProblemId) -> ProblemSpec {
    make_problem(&id).unwrap()
}

fn initial_error(p: &ProblemSpec, config: &SolverConfig, interior: usize) -> f64 {
    let b = uniform_breakpoints(interior);
    let c = solve_coefficients(&b, p, config).unwrap();
    relative_h1_error(&ShallowModel::new(p.alpha(), b, c).unwrap(), p).unwrap()
}

fn dbn_error(p: &ProblemSpec, config: &SolverConfig, interior: usize) -> f64 {
    let (model, _) = dbn_solve_uniform(p, config, interior).unwrap();
    relative_h1_error(&model, p).unwrap()
}

fn c1_inverse() -> (bool, String) {
    let problems = [
        ("a=1", problem(ProblemId::ExpSolution)),
        ("a=1+x", problem(ProblemId::Manufactured("variable".into()))),
        ("k=10", problem(ProblemId::Interface { k: 10.0 })),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in [4, 16, 64] {
        for (_, p) in &problems {
            for _ in 0..100 {
                // closer gaps push the f64 floor eps |A| |A^-1| past the tolerance
                let b = random_breakpoints(&mut rng, n, 1e-4, &[]);
                let data = assemble_stiffness(&b, p).unwrap();
                let a = dense_stiffness(&b, p);
                for col in 0..=n {
                    let mut e = vec![0.0; n + 1];
                    e[col] = 1.0;
                    let x = apply_stiffness_inverse(&data, &e).unwrap();
                    let ax = &a * nalgebra::DVector::from_vec(x);
                    for row in 0..=n {
                        let target = if row == col { 1.0 } else { 0.0 };
                        worst = worst.max((ax[row] - target).abs());
                    }
                }
            }
        }
    }
    (worst <= 1e-10, format!("max |A A^-1 - I| = {worst:.2e} (<= 1e-10) over 900 sets with gaps >= 1e-4"))
}

fn c2_condition() -> (bool, String) {
    let p = problem(ProblemId::ExpSolution);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_lib: f64 = 0.0;
    for n in [8, 32, 128] {
        for _ in 0..100 {
            let b = random_breakpoints(&mut rng, n, 1e-6, &[]);
            let nodes: Vec<f64> = std::iter::once(0.0).chain(b.iter().copied()).chain(std::iter::once(1.0)).collect();
            let h_min = nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let eig = SymmetricEigen::new(dense_stiffness(&b, &p)).eigenvalues;
            let cond = eig.max() / eig.min();
            worst_ratio = worst_ratio.max(cond / (4.0 * (n as f64 + 1.0) / h_min));
            let lib = condition_number(&assemble_stiffness(&b, &p).unwrap());
            worst_lib = worst_lib.max((lib - cond).abs() / cond);
        }
    }
    (
        worst_ratio <= 1.0 && worst_lib <= 1e-3,
        format!("max cond / (4(n+1)/h_min) = {worst_ratio:.3} (<= 1); library estimate within {worst_lib:.1e}"),
    )
}

fn c3_derivatives() -> (bool, String) {
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut g_err, mut h_err, mut p_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut directions = 0;
    for (_, p) in catalog() {
        for _ in 0..20 {
            let model = random_state(&mut rng, &p, &config, 8);
            let grad = gradient_b(&model, &p, &config).unwrap();
            let fd = fd_gradient(&model, &p, &config, 1e-6);
            let scale = max_abs(grad.iter().copied()).max(1e-8);
            g_err = g_err.max(max_abs(grad.iter().zip(&fd).map(|(a, b)| a - b)) / scale);

            let gp = compute_gprime(&model, &p);
            let dense = dense_hessian(&model.coefficients()[1..], &gp, config.gamma);
            let fdh = fd_hessian(&model, &p, &config, 1e-6);
            h_err = h_err.max((&dense - &fdh).amax() / dense.amax().max(1e-8));

            let cls = classify(&model, &p, &config).unwrap();
            let free = cls.free_mask();
            if !free.iter().any(|&f| f) {
                continue;
            }
            let Ok(dir) = newton_direction(&model, &p, &config, &cls) else { continue };
            let beta_bar = model.value_at_one() - p.beta();
            let oracle = dense_direction(&model.coefficients()[1..], &cls.gprime, &cls.g, config.gamma, beta_bar, &free);
            let scale = max_abs(oracle.iter().copied()).max(1e-300);
            p_err = p_err.max(max_abs(dir.iter().zip(&oracle).map(|(a, b)| a - b)) / scale);
            directions += 1;
        }
    }
    (
        g_err <= 1e-4 && h_err <= 1e-3 && p_err <= 1e-8 && directions > 0,
        format!(
            "gradient {g_err:.1e} (<= 1e-4), Hessian {h_err:.1e} (<= 1e-3), direction {p_err:.1e} (<= 1e-8) over {directions} states"
        ),
    )
}

fn c4_initial() -> (bool, String) {
    let config = SolverConfig::default();
    let e1 = initial_error(&problem(ProblemId::ExpSolution), &config, 20);
    let e2 = initial_error(&problem(ProblemId::XTwoThirds), &config, 21);
    let iface = SolverConfig { gamma: 1e11, ..SolverConfig::default() };
    let e3 = initial_error(&problem(ProblemId::Interface { k: 1e3 }), &iface, 14);
    let ok = (e1 / 0.238 - 1.0).abs() <= 0.01 && (e2 / 0.300 - 1.0).abs() <= 0.01 && (e3 / 0.203 - 1.0).abs() <= 0.02;
    (ok, format!("exp n=21: {e1:.4} (0.238 ± 1%), x^(2/3) n=22: {e2:.4} (0.300 ± 1%), interface n=15: {e3:.4} (0.203 ± 2%)"))
}

fn c5_rates() -> (bool, String) {
    let p = problem(ProblemId::ExpSolution);
    let runs: Vec<(usize, f64)> = [60usize, 120]
        .iter()
        .flat_map(|&n| (0..3u64).map(move |s| (n, s)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(n, seed)| {
            let config = SolverConfig { max_iters: 1000, fixed_budget: true, seed, ..SolverConfig::default() };
            (n, dbn_error(&p, &config, n - 1))
        })
        .collect();
    let med = |n: usize| median(runs.iter().filter(|r| r.0 == n).map(|r| r.1).collect());
    let (e60, e120) = (med(60), med(120));
    let (r60, r120) = (fit_rate(60, e60).unwrap(), fit_rate(120, e120).unwrap());
    let ok = (2.3e-2..=5.0e-2).contains(&e60)
        && (1.2e-2..=2.7e-2).contains(&e120)
        && (0.75..=0.88).contains(&r60)
        && (0.75..=0.88).contains(&r120);
    (
        ok,
        format!(
            "n=60: e={e60:.3e} in [2.3e-2, 5.0e-2], r={r60:.3}; n=120: e={e120:.3e} in [1.2e-2, 2.7e-2], r={r120:.3}; r in [0.75, 0.88]"
        ),
    )
}

fn c6_singular() -> (bool, String) {
    let p = problem(ProblemId::XTwoThirds);
    let dbn_cfg = SolverConfig { max_iters: 250, fixed_budget: true, ..SolverConfig::default() };
    let e_dbn = dbn_error(&p, &dbn_cfg, 23);

    let ad_cfg = SolverConfig { max_iters: 1000, tau: 1e-5, ..SolverConfig::default() };
    let (model, _) = adbn_solve_with(&p, &ad_cfg, 9, &AdaptiveOptions { n_max: 23, max_refinements: 8 }).unwrap();
    let e_ad = relative_h1_error(&model, &p).unwrap();

    let (fem, _) = afem_solve(&p, 9, 0.0, 16).unwrap();
    let e_fem = relative_h1_error(&fem.to_model(), &p).unwrap();

    let ok = e_dbn <= 8.5e-2 && model.n() == 23 && e_ad <= 7.5e-2 && (4e-2..=8e-2).contains(&e_fem);
    (
        ok,
        format!(
            "dBN n=24: {e_dbn:.3e} (<= 8.5e-2); AdBN 10->{}: {e_ad:.3e} (<= 7.5e-2); aFEM ({} points): {e_fem:.3e} in [4e-2, 8e-2]",
            model.n() + 1,
            fem.n() + 1
        ),
    )
}

fn c7_interface() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [1e1, 1e3, 1e6] {
        let p = problem(ProblemId::Interface { k });
        let e0 = initial_error(&p, &SolverConfig { gamma: 1e11, ..SolverConfig::default() }, 14);
        let finals: Vec<f64> = (0..3u64)
            .into_par_iter()
            .map(|seed| {
                let config =
                    SolverConfig { gamma: 1e11, max_iters: 500, fixed_budget: true, seed, ..SolverConfig::default() };
                dbn_error(&p, &config, 14)
            })
            .collect();
        let e = median(finals);
        ok &= (0.165..=0.215).contains(&e0) && e <= 0.10;
        parts.push(format!("k={k:.0e}: {e0:.3} -> {e:.4}"));
    }
    (ok, format!("{} (start ≈ 0.17-0.21, final <= 0.10)", parts.join(", ")))
}

fn c8_bfgs() -> (bool, String) {
    let p = problem(ProblemId::ExpSolution);
    let config = SolverConfig { max_iters: 200, fixed_budget: true, ..SolverConfig::default() };
    let b = uniform_breakpoints(29);
    let c = solve_coefficients(&b, &p, &config).unwrap();
    let start = ShallowModel::new(p.alpha(), b.clone(), c).unwrap();
    let (bfgs, _) = bfgs_solve(&p, &config, &start).unwrap();
    let e_bfgs = relative_h1_error(&bfgs, &p).unwrap();
    let run = dbn_run(&p, &config, &b).unwrap();
    let e_dbn = relative_h1_error(&run.model, &p).unwrap();
    let reached = run.trace.iter().find(|t| t.e_n.is_some_and(|e| e <= e_bfgs)).map(|t| t.k);
    let ok = e_dbn <= e_bfgs && reached.is_some_and(|k| k <= 25);
    (
        ok,
        format!(
            "dBN {e_dbn:.3e} vs BFGS {e_bfgs:.3e}; dBN reaches the BFGS error at iteration {} (<= 25)",
            reached.map_or("never".into(), |k| k.to_string())
        ),
    )
}

fn c9_scaling() -> (bool, String) {
    let p = problem(ProblemId::ExpSolution);
    let config = SolverConfig { max_iters: 40, fixed_budget: true, ..SolverConfig::default() };
    let per_iter = |n: usize| {
        // best of three medians, to shrug off scheduler noise
        (0..3)
            .map(|_| {
                let run = dbn_run(&p, &config, &uniform_breakpoints(n)).unwrap();
                median(run.trace.iter().map(|t| t.ms).collect())
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (t512, t1024) = (per_iter(512), per_iter(1024));
    let ratio = t1024 / t512;
    (ratio <= 3.0, format!("{t512:.3} ms vs {t1024:.3} ms per iteration, ratio {ratio:.2} (<= 3)"))
}

fn c10_monotone() -> (bool, String) {
    let mut checked = 0usize;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for (name, p) in catalog() {
        let gamma = if name.starts_with("interface") { 1e11 } else { 1e4 };
        for seed in 0..3u64 {
            let config = SolverConfig { gamma, max_iters: 200, fixed_budget: true, seed, ..SolverConfig::default() };
            let run = dbn_run(&p, &config, &uniform_breakpoints(20)).unwrap();
            for w in run.trace.windows(2) {
                if w[0].redistributed > 0 {
                    continue;
                }
                let slack = 1e-12 * (1.0 + w[0].energy.abs());
                let excess = (w[1].energy - w[0].energy) / (1.0 + w[0].energy.abs());
                worst = worst.max(excess);
                checked += 1;
                if w[1].energy > w[0].energy + slack {
                    bad.push(format!("{name} seed {seed} k={}", w[0].k));
                }
            }
        }
    }
    (
        bad.is_empty(),
        format!(
            "{checked} accepted steps on 6 problems x 3 seeds, max relative increase {worst:.1e} (<= 1e-12){}",
            if bad.is_empty() { String::new() } else { format!("; violations: {}", bad.join(", ")) }
        ),
    )
}

fn c11_kkt() -> (bool, String) {
    // On the smooth problem the Galerkin solution already meets u(1) = beta
    // up to rounding (the exact solution has u(1) = 0 and u'(1) ≈ 0), so the
    // constraint is inactive and the gap sits at the rounding floor; the
    // decrease is then also checked where the constraint binds.
    let diffs = |p: &ProblemSpec| -> (Vec<f64>, f64) {
        let b = uniform_breakpoints(19);
        let (ck, _) = solve_coefficients_kkt(&b, p).unwrap();
        let floor = 1e-13 * max_abs(ck.iter().copied());
        let d = [1e4, 1e6, 1e8]
            .iter()
            .map(|&gamma| {
                let c = solve_coefficients(&b, p, &SolverConfig { gamma, ..SolverConfig::default() }).unwrap();
                max_abs(c.iter().zip(&ck).map(|(a, b)| a - b))
            })
            .collect();
        (d, floor)
    };
    let decreasing = |(d, floor): &(Vec<f64>, f64)| {
        d.windows(2).all(|w| w[1] <= w[0] / 10.0 || (w[0] <= *floor && w[1] <= *floor))
    };
    let exp = diffs(&problem(ProblemId::ExpSolution));
    let sing = diffs(&problem(ProblemId::XTwoThirds));
    let fmt = |d: &[f64]| d.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join(" -> ");
    (
        decreasing(&exp) && decreasing(&sing),
        format!(
            "gamma 1e4/1e6/1e8, n=20: smooth {} (floor {:.0e}); x^(2/3) {} (>= 10x per step)",
            fmt(&exp.0),
            exp.1,
            fmt(&sing.0)
        ),
    )
}
