//! Acceptance gate for the solver. Every numbered criterion below runs
//! unconditionally, prints exactly one PASS/FAIL line with the measured
//! quantities, and the test panics at the end if any criterion failed.
//!
//! Run `cargo test -p shellfem --test acceptance -- --nocapture` to see the
//! lines for a passing run as well.

use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use shellfem::analysis::{
    analytic_clamped_solution, boundary_layer, error_norms, estimate_orders, PolyExpLoad,
    RateModel,
};
use shellfem::mesh::Mesh;
use shellfem::spline::{endpoint_defects, interpolate, Constraint, DiscreteFunction, SplineSpace};
use shellfem::study::{run_study, CaseResult, MeshChoice, StudyMode, StudyOutput, StudySpec};
use shellfem::system::{balanced_norm_sq, bilinear_form, solve_bvp, BoundaryData, ProblemConfig};
use shellfem::QuadRule;

/// Error-column selector for a study row.
type Pick = fn(&CaseResult) -> f64;

/// Measured (L2 slope, H2 slope) of an interpolation refinement study.
type Slopes = Result<(f64, f64), String>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: String) -> Outcome {
    Outcome { pass: true, detail }
}

fn fail(detail: String) -> Outcome {
    Outcome { pass: false, detail }
}

/// Manufactured-solution N-sweep used by criteria 1, 2 and 8: one-sided
/// Shishkin mesh, p = 3, sigma = 4, eps = 1e-2, N = 4, 8, ..., 1024.
fn manufactured_sweep(lambda: f64) -> (Vec<u8>, StudyOutput) {
    let spec = StudySpec {
        mode: StudyMode::NSweep,
        mesh: MeshChoice::Shishkin1,
        lambda,
        eps_list: vec![1e-2],
        n_list: (2..=10).map(|k| 1usize << k).collect(),
        ..StudySpec::default()
    };
    spec.validate().expect("sweep spec is valid");
    let mut buf = Vec::new();
    let out = run_study(&spec, &mut buf).expect("sweep runs");
    (buf, out)
}

fn last3(xs: &[f64]) -> [f64; 3] {
    let k = xs.len();
    [xs[k - 3], xs[k - 2], xs[k - 1]]
}

fn fmt3(t: [f64; 3]) -> String {
    format!("{:.3}/{:.3}/{:.3}", t[0], t[1], t[2])
}

fn within(t: [f64; 3], lo: f64, hi: f64) -> bool {
    t.iter().all(|&x| x >= lo && x <= hi)
}

/// Drop trailing sweep points whose per-step order falls more than 0.25 below
/// the preceding step. There the error has reached the rounding floor of the
/// assembled system, which grows with N while the algebraic residual stays
/// near machine precision, so a residual-based cutoff cannot flag it. At most
/// two points are dropped so a genuinely wrong rate cannot be trimmed away.
fn trim_round_off(ns: &mut Vec<usize>, errs: &mut Vec<f64>) -> usize {
    let mut dropped = 0;
    while ns.len() >= 5 && dropped < 2 {
        let est = estimate_orders(ns, errs, RateModel::NLogN).expect("orders");
        let k = est.per_step.len();
        if est.per_step[k - 1] < est.per_step[k - 2] - 0.25 {
            ns.pop();
            errs.pop();
            dropped += 1;
        } else {
            break;
        }
    }
    dropped
}

fn tail_orders(rows: &[CaseResult], pick: Pick) -> [f64; 3] {
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let errs: Vec<f64> = rows.iter().map(pick).collect();
    let est = estimate_orders(&ns, &errs, RateModel::NLogN).expect("orders");
    last3(&est.per_step)
}

fn trimmed_tail_orders(rows: &[CaseResult], pick: Pick) -> ([f64; 3], usize) {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let mut errs: Vec<f64> = rows.iter().map(pick).collect();
    let dropped = trim_round_off(&mut ns, &mut errs);
    let est = estimate_orders(&ns, &errs, RateModel::NLogN).expect("orders");
    (last3(&est.per_step), dropped)
}

fn criterion_1(rows: &[CaseResult], secs: f64) -> Outcome {
    let tu = tail_orders(rows, |r| r.report.err_u_dd);
    let tv = tail_orders(rows, |r| r.report.err_v_dd);
    let ok = within(tu, 1.7, 2.3) && within(tv, 1.7, 2.3) && secs < 60.0;
    let detail = format!(
        "per-step orders vs 2.0+-0.3, u_dd tail {}, v_dd tail {}, {:.2} s (budget 60 s)",
        fmt3(tu),
        fmt3(tv),
        secs
    );
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_2(rows3: &[CaseResult], rows4: &[CaseResult]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (lambda, rows) in [(3.0, rows3), (4.0, rows4)] {
        let (tu, du) = trimmed_tail_orders(rows, |r| r.report.err_u_l2);
        let (tv, dv) = trimmed_tail_orders(rows, |r| r.report.err_v_l2);
        ok &= within(tu, 3.7, 4.3) && within(tv, 3.7, 4.3);
        parts.push(format!(
            "lambda={lambda}: u_L2 tail {} (rounding-floor points dropped: {du}), v_L2 tail {} (dropped: {dv})",
            fmt3(tu),
            fmt3(tv)
        ));
    }
    let detail = format!("per-step orders vs 4.0+-0.3, {}", parts.join("; "));
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_3() -> Outcome {
    let spec = StudySpec {
        mode: StudyMode::EpsSweep,
        mesh: MeshChoice::Shishkin1,
        eps_list: (0..=10).map(|k| (-(k as f64)).exp()).collect(),
        n_list: vec![16],
        ..StudySpec::default()
    };
    spec.validate().expect("eps sweep spec is valid");
    let mut buf = Vec::new();
    let out = run_study(&spec, &mut buf).expect("eps sweep runs");
    // settled regime: eps from e^-4 down to e^-10 (rows are emitted with
    // decreasing eps, so the first row of the tail is eps = e^-4)
    let tail: Vec<CaseResult> = out
        .rows
        .iter()
        .filter(|r| r.eps <= (-4.0f64).exp() * (1.0 + 1e-9))
        .copied()
        .collect();
    assert_eq!(tail.len(), 7, "expected 7 settled eps values");

    let mut ok = true;
    let mut parts = Vec::new();
    let ratio_cols: [(&str, Pick); 4] = [
        ("err_u_dd", |r| r.report.err_u_dd),
        ("err_v_L2", |r| r.report.err_v_l2),
        ("err_v_dd", |r| r.report.err_v_dd),
        ("balanced", |r| r.report.balanced),
    ];
    for (name, pick) in ratio_cols {
        let vals: Vec<f64> = tail.iter().map(pick).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        let ratio = max / min;
        ok &= ratio <= 3.0;
        parts.push(format!("{name} ratio {ratio:.4}"));
    }
    // the layer carries O(sqrt(eps)) L2 mass, so ||u - u_h|| and the standard
    // energy error decay with eps instead of settling; for them the robustness
    // statement is that they never grow as eps -> 0
    for (name, pick) in [
        ("err_u_L2", (|r| r.report.err_u_l2) as Pick),
        ("energy_standard", |r| r.report.energy_standard),
    ] {
        let vals: Vec<f64> = tail.iter().map(pick).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let bounded = max <= vals[0] * 1.05;
        ok &= bounded;
        parts.push(format!(
            "{name} max {:.3e} {} its value at eps=e^-4",
            max,
            if bounded { "<=" } else { ">" }
        ));
    }
    let detail = format!(
        "N=16, eps in [e^-4, e^-10]: settled-column max/min vs 3, decaying columns bounded; {}",
        parts.join(", ")
    );
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(20_24);
    let setups: [(Mesh<f64>, f64, usize); 3] = [
        (Mesh::uniform(8).unwrap(), 0.3, 3),
        (Mesh::shishkin_one_sided(16, 4.0, 1e-2).unwrap(), 1e-2, 3),
        (Mesh::shishkin_two_sided(16, 3.5, 5e-3).unwrap(), 5e-3, 4),
    ];
    let mut worst_coer: f64 = f64::MAX;
    let mut worst_cont: f64 = 0.0;
    let mut checked = 0usize;
    for (mesh, eps, p) in setups {
        let us = Arc::new(SplineSpace::new(mesh.clone(), p, Constraint::Clamped).unwrap());
        let vs = Arc::new(SplineSpace::new(mesh, p, Constraint::Unconstrained).unwrap());
        for _ in 0..200 {
            let mut draw = || {
                let mut u = DiscreteFunction::zero(Arc::clone(&us));
                let mut v = DiscreteFunction::zero(Arc::clone(&vs));
                for s in 0..us.n_dofs() {
                    if !us.bc_mask().contains(&s) {
                        u.coeffs_mut()[s] = rng.gen_range(-1.0..1.0);
                    }
                    v.coeffs_mut()[s] = rng.gen_range(-1.0..1.0);
                }
                (u, v)
            };
            let (u, v) = draw();
            let (u2, v2) = draw();
            let w_norm = balanced_norm_sq(&u, &v, eps).unwrap();
            let w2_norm = balanced_norm_sq(&u2, &v2, eps).unwrap();
            for lambda in [3.0, 4.0, 10.0] {
                let b = bilinear_form((&u, &v), (&u, &v), eps, lambda).unwrap();
                let margin = (b - w_norm.total()) / b.abs().max(1.0);
                worst_coer = worst_coer.min(margin);
                if b < w_norm.total() - 1e-10 * b.abs().max(1.0) {
                    return fail(format!(
                        "coercivity violated at eps={eps}, lambda={lambda}: B={b}, norm^2={}",
                        w_norm.total()
                    ));
                }
                let b12 = bilinear_form((&u, &v), (&u2, &v2), eps, lambda).unwrap();
                let bound = (2.0 * lambda + 25.0) * w_norm.norm() * w2_norm.norm();
                let frac = b12.abs() / bound;
                worst_cont = worst_cont.max(frac);
                if b12.abs() > bound {
                    return fail(format!(
                        "continuity violated at eps={eps}, lambda={lambda}: |B|={} > {bound}",
                        b12.abs()
                    ));
                }
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{checked} pair/lambda checks on 3 meshes: min coercivity margin {worst_coer:.2e}, \
         max |B|/((2l+25)|||w||| |||w*|||) = {worst_cont:.3}, {secs:.2} s (budget 10 s)"
    );
    if secs < 10.0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn interp_rates(
    w: impl Fn(f64) -> f64 + Copy,
    dw: impl Fn(f64) -> f64 + Copy,
    d2w: impl Fn(f64) -> f64 + Copy,
    p: usize,
) -> Slopes {
    // node matching and one-sided endpoint defects on an uneven mesh
    let mesh = Mesh::shishkin_one_sided(16, 4.0, 1e-2).unwrap();
    let space = Arc::new(SplineSpace::new(mesh, p, Constraint::Unconstrained).unwrap());
    let iw = interpolate(&space, w, dw, d2w).map_err(|e| e.to_string())?;
    for &x in space.mesh().nodes() {
        let dv = (iw.eval(x, 0).unwrap() - w(x)).abs();
        let ds = (iw.eval(x, 1).unwrap() - dw(x)).abs();
        if dv > 1e-10 || ds > 1e-10 {
            return Err(format!("interpolant misses node data at x={x}: {dv:.2e}/{ds:.2e}"));
        }
    }
    for (e, d) in endpoint_defects(&space, w, dw, d2w).iter().enumerate() {
        if d[0].abs() > 1e-10 || d[1].abs() > 1e-10 {
            return Err(format!(
                "one-sided construction misses right endpoint of element {e}: {:.2e}/{:.2e}",
                d[0], d[1]
            ));
        }
    }
    // dyadic refinements on uniform meshes
    let rule: QuadRule<f64> = QuadRule::gauss_legendre(12).unwrap();
    let ns: Vec<usize> = (3..=7).map(|k| 1usize << k).collect();
    let mut l2 = Vec::new();
    let mut h2 = Vec::new();
    for &n in &ns {
        let mesh = Mesh::uniform(n).unwrap();
        let space = Arc::new(SplineSpace::new(mesh, p, Constraint::Unconstrained).unwrap());
        let iw = interpolate(&space, w, dw, d2w).unwrap();
        let mut s0 = 0.0;
        let mut s2 = 0.0;
        for e in 0..space.mesh().n_elements() {
            let (a, b, _) = space.mesh().element(e);
            s0 += rule.integrate(a, b, |x| {
                let d = w(x) - iw.eval(x, 0).unwrap();
                d * d
            });
            s2 += rule.integrate(a, b, |x| {
                let d = d2w(x) - iw.eval(x, 2).unwrap();
                d * d
            });
        }
        l2.push(s0.sqrt());
        h2.push(s2.sqrt());
    }
    let sl0 = estimate_orders(&ns, &l2, RateModel::N).unwrap().slope;
    let sl2 = estimate_orders(&ns, &h2, RateModel::N).unwrap().slope;
    Ok((sl0, sl2))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let pi = std::f64::consts::PI;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [3usize, 4] {
        let cases: [(&str, Slopes); 2] = [
            (
                "sin(pi x)",
                interp_rates(
                    |x: f64| (pi * x).sin(),
                    |x: f64| pi * (pi * x).cos(),
                    |x: f64| -pi * pi * (pi * x).sin(),
                    p,
                ),
            ),
            (
                "e^(2x)",
                interp_rates(
                    |x: f64| (2.0 * x).exp(),
                    |x: f64| 2.0 * (2.0 * x).exp(),
                    |x: f64| 4.0 * (2.0 * x).exp(),
                    p,
                ),
            ),
        ];
        for (name, res) in cases {
            match res {
                Ok((sl0, sl2)) => {
                    let good = (sl0 - (p as f64 + 1.0)).abs() <= 0.25
                        && (sl2 - (p as f64 - 1.0)).abs() <= 0.25;
                    ok &= good;
                    parts.push(format!("{name} p={p}: L2 {sl0:.3}, H2 {sl2:.3}"));
                }
                Err(msg) => {
                    ok = false;
                    parts.push(format!("{name} p={p}: {msg}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    let detail = format!(
        "node/endpoint matching to 1e-10, rates vs p+1 and p-1 within 0.25: {}; {:.2} s (budget 10 s)",
        parts.join("; "),
        secs
    );
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_6() -> Outcome {
    let layer_norms = |eps: f64| {
        let mesh = Mesh::shishkin_one_sided(128, 4.0, eps).unwrap();
        let us = Arc::new(SplineSpace::new(mesh.clone(), 3, Constraint::Clamped).unwrap());
        let vs = Arc::new(SplineSpace::new(mesh, 3, Constraint::Unconstrained).unwrap());
        let rep = error_norms(
            &DiscreteFunction::zero(us),
            &DiscreteFunction::zero(vs),
            &boundary_layer(eps),
        )
        .unwrap();
        (rep.energy_standard, rep.balanced)
    };
    let eps = 1e-3;
    let (energy_a, bal_a) = layer_norms(eps);
    let (energy_b, bal_b) = layer_norms(eps / 4.0);
    let r_energy = energy_a / energy_b;
    let r_bal = bal_a / bal_b;
    let ok = (1.8..=2.2).contains(&r_energy) && (0.8..=1.3).contains(&r_bal);
    let detail = format!(
        "boundary layer at eps={eps} vs eps/4: standard-energy ratio {r_energy:.4} (vs 2.0+-10%), \
         balanced ratio {r_bal:.4} (vs [0.8, 1.3])"
    );
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let exact = analytic_clamped_solution(
            eps,
            PolyExpLoad::constant(4.0),
            BoundaryData::homogeneous(),
        )
        .unwrap();
        // layers form at both endpoints, so the two-sided mesh is the one
        // that resolves the solution
        let mesh = Mesh::shishkin_two_sided(512, 4.0, eps).unwrap();
        let config =
            ProblemConfig::new(mesh, 3, eps, 3.0, exact.load_fn(), BoundaryData::homogeneous())
                .unwrap();
        let sol = solve_bvp(&config).unwrap();
        let dist = error_norms(&sol.u_h, &sol.v_h, &exact).unwrap().balanced;
        ok &= dist <= 1e-6;
        parts.push(format!("eps={eps}: {dist:.3e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    let detail = format!(
        "balanced distance to analytic solution at N=512 vs 1e-6: {}; {:.2} s (budget 30 s)",
        parts.join(", "),
        secs
    );
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_8(first: &[u8]) -> Outcome {
    let (second, _) = manufactured_sweep(3.0);
    if first == second.as_slice() {
        pass(format!("two runs, {} identical bytes", first.len()))
    } else {
        fail("repeated sweep produced different bytes".to_string())
    }
}

#[test]
fn acceptance_criteria() {
    let sweep_start = Instant::now();
    let (bytes3, out3) = manufactured_sweep(3.0);
    let sweep_secs = sweep_start.elapsed().as_secs_f64();
    let (_, out4) = manufactured_sweep(4.0);

    let results = [
        ("1 balanced-norm convergence rate", criterion_1(&out3.rows, sweep_secs)),
        ("2 L2 superconvergence", criterion_2(&out3.rows, &out4.rows)),
        ("3 eps-robustness", criterion_3()),
        ("4 coercivity and continuity", criterion_4()),
        ("5 interpolation operator", criterion_5()),
        ("6 norm scaling in the layer", criterion_6()),
        ("7 analytic-oracle agreement", criterion_7()),
        ("8 determinism", criterion_8(&bytes3)),
    ];

    let mut failed = Vec::new();
    for (name, outcome) in &results {
        println!(
            "acceptance {name}: {} [{}]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        if !outcome.pass {
            failed.push(*name);
        }
    }
    assert!(
        failed.is_empty(),
        "{} of {} acceptance criteria failed: {}",
        failed.len(),
        results.len(),
        failed.join("; ")
    );
}
