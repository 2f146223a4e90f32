//! Acceptance suite: one test per criterion, each printing a `criterion N: PASS|FAIL` line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::{Duration, Instant};

use ndarray::{s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use corner_flow::coefficients::{
    check_lemma21, CoefficientSnapshot, GasState, Lemma21Options, ReflectedCandidate, StaticPotential, Sym3,
};
use corner_flow::compatibility::{build_jet, check_compatibility, Wall};
use corner_flow::data::{Bump, BumpSum};
use corner_flow::energy::{check_estimate, h0, h0_floor, h1, select_multiplier, weighted_norms};
use corner_flow::extension::{check_lemma32, extend, BackgroundRatios, Lemma32Tolerances, Mollifier, Parity, RatioFields};
use corner_flow::geometry::{CornerDomain, WallProfile};
use corner_flow::grid::{max_abs, Coef, Grid, Layout};
use corner_flow::linear_solver::{solve, CosineOracle, LinearIbvp};
use corner_flow::nonlinear::{
    contraction_ratio, corner_gradient, nonlinear_residual, run_iteration, weighted_norm,
};
use corner_flow::scenario::Scenario;
use corner_flow::setup::FlowSetup;

fn verdict(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn gas() -> GasState {
    GasState::new(1.4, 0.0).unwrap()
}

fn wall(eps: f64, rng: &mut ChaCha8Rng) -> WallProfile {
    let p = [1.0, rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)];
    WallProfile::new(eps, &p, rng.gen_range(0.8..1.5)).unwrap()
}

fn perturbed() -> CornerDomain {
    CornerDomain::new(
        WallProfile::new(1e-3, &[1.0, -0.5], 1.0).unwrap(),
        WallProfile::new(8e-4, &[1.0, 0.3], 1.2).unwrap(),
    )
}

#[test]
fn criterion_1_geometry_round_trip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let flat = CornerDomain::flat();
    let mut flat_exact = true;
    for _ in 0..1000 {
        let x = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)];
        flat_exact &= flat.from_z(flat.to_z(x).unwrap()).unwrap() == x;
    }
    let mut worst: f64 = 0.0;
    for eps in [1e-4, 1e-3] {
        let dom = CornerDomain::new(wall(eps, &mut rng), wall(eps, &mut rng));
        for _ in 0..1000 {
            let x = dom.from_z([rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)]).unwrap();
            let back = dom.from_z(dom.to_z(x).unwrap()).unwrap();
            worst = worst.max((back[0] - x[0]).abs()).max((back[1] - x[1]).abs());
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        1,
        flat_exact && worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("flat exact = {flat_exact}, max error {worst:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_2_lemma21_suite() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let dom = CornerDomain::new(wall(rng.gen_range(1e-4..1e-3), &mut rng), wall(rng.gen_range(1e-4..1e-3), &mut rng));
        let cand = ReflectedCandidate {
            dom: dom.clone(),
            data: BumpSum {
                bumps: vec![Bump {
                    center: [rng.gen_range(0.1..0.4), rng.gen_range(0.1..0.4)],
                    radius: rng.gen_range(0.4..0.7),
                    amplitude: rng.gen_range(0.01..0.05),
                }],
                symmetrize: true,
            },
            projection_radius: 0.5,
            omega: rng.gen_range(0.5..2.0),
            h_diff: 1e-3,
        };
        let rep = check_lemma21(&dom, &gas(), &cand, &Lemma21Options::default()).unwrap();
        worst = worst.max(rep.max_residual());
    }
    let elapsed = t0.elapsed();
    verdict(
        2,
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("max residual {worst:.2e} over 5 wall pairs, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_3_lemma32_suite() {
    let t0 = Instant::now();
    let g = Grid::new(1.0, 256, 2, 1.0, Layout::Quarter).unwrap();
    let snap = CoefficientSnapshot::sample(&perturbed(), &gas(), &g, &StaticPotential, 0.0).unwrap();
    let ratios = RatioFields::from_snapshot(&snap);
    let bg = BackgroundRatios::default();
    let delta = [
        max_abs(&ratios.r01.view()),
        max_abs(&ratios.r02.view()),
        max_abs(&ratios.r12.view()),
        max_abs(&ratios.r22.mapv(|v| v - bg.r22).view()),
        max_abs(&ratios.b2.view()),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let m = Mollifier::new(4.0 * g.h, g.h).unwrap();
    let rep = check_lemma32(&ratios, &m, delta, bg, Lemma32Tolerances::default()).unwrap();
    let elapsed = t0.elapsed();
    verdict(
        3,
        rep.parity_pass && rep.corner_pass && rep.conormal_pass && rep.constants_pass && elapsed < Duration::from_secs(10),
        format!(
            "parity {:.1e}, corner {:.1e} / {:.1e}, co-normal {:.1e}, constants {:.1e}, {elapsed:.2?}",
            rep.parity_residual, rep.corner_value, rep.corner_first_difference, rep.conormal_residual, rep.constant_defect
        ),
    );
}

fn oracle_error(n: usize) -> f64 {
    let g = Grid::with_cfl(1.0, n, 0.5, 0.5, 1.0, Layout::Quarter).unwrap();
    let o = CosineOracle { c0sq: 1.0, m1: 1, m2: 1 };
    let sol = solve(&o.problem(&g), &g).unwrap();
    (&sol.levels - &o.exact(&g)).iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

#[test]
fn criterion_4_linear_convergence() {
    let t0 = Instant::now();
    let errs: Vec<f64> = [16, 32, 64, 128].iter().map(|&n| oracle_error(n)).collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let elapsed = t0.elapsed();
    verdict(
        4,
        ratios.iter().all(|r| (3.2..=4.8).contains(r)) && elapsed < Duration::from_secs(120),
        format!("errors {}, ratios {ratios:.3?}, {elapsed:.2?}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")),
    );
}

/// Largest distance (in cells) by which `|phi| > 1e-12` leaves the initial support grown by `c t`.
fn cone_excess(n: usize) -> f64 {
    let (center, radius, amp) = ([1.0, 1.0], 0.3, 1e-3);
    let g = Grid::with_cfl(2.0, n, 0.6, 0.7, 1.0, Layout::Quarter).unwrap();
    let mut p = LinearIbvp::background(&g, 1.0);
    p.phi0 = g.sample2(|a, b| {
        let q = 1.0 - ((a - center[0]).powi(2) + (b - center[1]).powi(2)) / (radius * radius);
        if q > 0.0 { amp * q.powi(7) } else { 0.0 }
    });
    let c = p.c_max(&g);
    let sol = solve(&p, &g).unwrap();
    let mut worst = f64::MIN;
    for (k, level) in sol.levels.axis_iter(Axis(0)).enumerate() {
        let reach = radius + c * g.z0(k);
        for ((i, j), v) in level.indexed_iter() {
            if v.abs() > 1e-12 {
                let d = (g.z1(i) - center[0]).hypot(g.z2(j) - center[1]);
                worst = worst.max((d - reach) / g.h);
            }
        }
    }
    worst
}

#[test]
fn criterion_5_finite_propagation() {
    let excess: Vec<f64> = [64, 128, 256].iter().map(|&n| cone_excess(n)).collect();
    verdict(5, excess.iter().all(|&e| e <= 5.0), format!("excess beyond c t in cells at n = 64/128/256: {excess:.2?}"));
}

/// Even-extended problem with coefficients from a perturbed-wall snapshot; returns
/// (bitwise symmetric, one-sided `d2` of the restriction on `z2 = 0`, `h`).
fn extended_run(n: usize) -> (bool, f64, f64) {
    let q = Grid::with_cfl(2.0, n, 0.4, 0.5, 1.2, Layout::Quarter).unwrap();
    let snap = CoefficientSnapshot::sample(&perturbed(), &gas(), &q, &StaticPotential, 0.0).unwrap();
    let g = q.extended();
    let ext = |a: &Array2<f64>, p: Parity| Coef::Space(extend(&a.view(), p).data);
    let bump = BumpSum { bumps: vec![Bump { center: [0.8, 0.3], radius: 0.4, amplitude: 1e-3 }], symmetrize: true };
    let phi0 = q.sample2(|a, b| bump.value([a, b]));
    let c0sq = gas().c0sq();
    let mut p = LinearIbvp::background(&g, c0sq);
    p.r01 = ext(&snap.r01, Parity::Even);
    p.r02 = ext(&snap.r02, Parity::Odd);
    p.r11 = ext(&snap.r11, Parity::Even);
    p.r12 = ext(&snap.r12, Parity::Odd);
    p.r22 = ext(&snap.r22, Parity::Even);
    p.lower = Some([ext(&snap.lower1, Parity::Even), ext(&snap.lower2, Parity::Odd)]);
    p.b1 = ext(&snap.b1, Parity::Even);
    p.b2 = ext(&snap.b2, Parity::Odd);
    p.b2_corner_jet = None;
    p.phi0 = extend(&phi0.view(), Parity::Even).data;
    let sol = solve(&p, &g).unwrap();
    let a = g.axis_index();
    let u = &sol.levels;
    let symmetric = (1..=a).all(|j| u.index_axis(Axis(2), a + j) == u.index_axis(Axis(2), a - j));
    let half = u.slice(s![.., .., a..]);
    let mut neumann: f64 = 0.0;
    for k in 0..=g.nt {
        for i in 0..=g.n {
            let d = (-3.0 * half[[k, i, 0]] + 4.0 * half[[k, i, 1]] - half[[k, i, 2]]) / (2.0 * g.h);
            neumann = neumann.max(d.abs());
        }
    }
    (symmetric, neumann, g.h)
}

#[test]
fn criterion_6_extension_symmetry() {
    let runs: Vec<(bool, f64, f64)> = [32, 64].iter().map(|&n| extended_run(n)).collect();
    let symmetric = runs.iter().all(|r| r.0);
    let order = (runs[0].1 / runs[1].1).log2();
    verdict(
        6,
        symmetric && order >= 1.8,
        format!(
            "bitwise symmetric = {symmetric}, restricted Neumann residual {:.2e} -> {:.2e} (order {order:.2})",
            runs[0].1, runs[1].1
        ),
    );
}

#[test]
fn criterion_7_energy_monitors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c0sq = gas().c0sq();
    let q = select_multiplier(-c0sq, -c0sq).unwrap();
    let bg = corner_flow::linear_solver::Background { r11: -c0sq, r22: -c0sq };
    let delta = 0.05;
    let floor = h0_floor(&q, bg, delta);
    let mut h0_ok = floor > 0.0;
    let mut worst_h0 = f64::MAX;
    for _ in 0..10_000 {
        let mut d = || rng.gen_range(-delta..delta);
        let r = Sym3 { m00: 1.0, m01: d(), m02: d(), m11: -c0sq + d(), m12: d(), m22: -c0sq + d() };
        let xi = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2 = xi.iter().map(|v| v * v).sum::<f64>();
        let v = h0(&q, &r, xi) / n2;
        worst_h0 = worst_h0.min(v);
        h0_ok &= v >= floor;
    }

    let g = Grid::new(1.0, 64, 2, 1.0, Layout::Quarter).unwrap();
    let snap = CoefficientSnapshot::sample(&perturbed(), &gas(), &g, &StaticPotential, 0.0).unwrap();
    let mut worst_h1: f64 = 0.0;
    for j in 0..=g.n {
        let r = Sym3 {
            m00: 1.0,
            m01: snap.r01[[0, j]],
            m02: snap.r02[[0, j]],
            m11: snap.r11[[0, j]],
            m12: snap.r12[[0, j]],
            m22: snap.r22[[0, j]],
        };
        let (b1, b2) = (snap.b1[[0, j]], snap.b2[[0, j]]);
        for _ in 0..10 {
            let s = rng.gen_range(-1.0..1.0);
            let xi = [rng.gen_range(-1.0..1.0), -s * b2, s * b1];
            let n2 = xi.iter().map(|v| v * v).sum::<f64>();
            worst_h1 = worst_h1.max(h1(&q, &r, xi).abs() / n2);
        }
    }

    let base = Grid::with_cfl(1.0, 32, 0.5, 0.5, 1.0, Layout::Quarter).unwrap();
    let o = CosineOracle { c0sq: 1.0, m1: 1, m2: 1 };
    let p = o.problem(&base);
    let sol = solve(&p, &base).unwrap();
    let reports: Vec<_> =
        [4.0, 8.0, 16.0].iter().map(|&e| weighted_norms(&sol.levels, &p, &base.clone().with_eta(e), 4).unwrap()).collect();
    let diag = check_estimate(&reports);
    let variation = diag.variation_all.iter().cloned().fold(0.0, f64::max);
    verdict(
        7,
        h0_ok && worst_h1 <= 1e-10 && variation < 2.0 && !diag.vacuous,
        format!(
            "H0/|xi|^2 >= {worst_h0:.3} (floor {floor:.3}), max |H1|/|xi|^2 = {worst_h1:.1e}, C(eta) variation {variation:.3}"
        ),
    );
}

fn flat_setup(n: usize) -> FlowSetup {
    let g = Grid::new(2.0, n, 4, 0.5, Layout::Quarter).unwrap();
    FlowSetup::new(CornerDomain::flat(), gas(), g).unwrap()
}

#[test]
fn criterion_8_compatibility() {
    let s = flat_setup(32);
    let z = s.grid.zeros2();
    let zero = check_compatibility(&build_jet(&s, &z, &z).unwrap(), &s, 2).unwrap().max_residual;

    let data = BumpSum { bumps: vec![Bump { center: [0.3, 0.2], radius: 0.8, amplitude: 1e-3 }], symmetrize: true };
    let sym: Vec<f64> = [32, 64]
        .iter()
        .map(|&n| {
            let s = flat_setup(n);
            let phi0 = s.grid.sample2(|a, b| data.value([a, b]));
            let phi1 = s.grid.sample2(|a, b| 0.5 * data.value([a, b]));
            check_compatibility(&build_jet(&s, &phi0, &phi1).unwrap(), &s, 2).unwrap().max_residual
        })
        .collect();
    let order = (sym[0] / sym[1]).log2();

    let s = flat_setup(64);
    let slope = 0.02;
    let phi0 = s.grid.sample2(|a, b| {
        let q = 1.0 - ((a - 1.0).powi(2) + b * b) / 0.25;
        if q > 0.0 { slope * b * q.powi(7) } else { 0.0 }
    });
    let jet = build_jet(&s, &phi0, &s.grid.zeros2()).unwrap();
    let flagged = check_compatibility(&jet, &s, 2).unwrap().residual(Wall::Wall2, 0, 0).unwrap();
    let rel = (flagged - slope).abs() / slope;
    verdict(
        8,
        zero == 0.0 && order >= 1.8 && rel <= 0.1,
        format!(
            "zero data {zero:e}, symmetric bump {:.2e} -> {:.2e} (order {order:.2}), injected slope {slope} reported as {flagged:.4}",
            sym[0], sym[1]
        ),
    );
}

#[test]
fn criterion_9_nonlinear_iteration() {
    let t0 = Instant::now();
    let zero = Scenario::bump(0.0, 0.0);
    let setup = zero.setup(0, 4.0).unwrap();
    let (p0, p1) = zero.initial_data(&setup).unwrap();
    let out = run_iteration(&setup, &build_jet(&setup, &p0, &p1).unwrap(), &zero.nonlinear_options()).unwrap();
    let zero_ok = out.trace.converged && out.trace.iterations() == 1 && out.field.iter().all(|&v| v == 0.0);
    println!("  zero scenario: converged at m = {}, identically zero = {zero_ok}", out.trace.iterations());

    let mut ok = zero_ok;
    let mut h4_over_eps = Vec::new();
    for perturbed_walls in [false, true] {
        let mut sigmas = Vec::new();
        for eps in [1e-4, 5e-4, 1e-3] {
            let sc = Scenario::bump(eps, if perturbed_walls { eps } else { 0.0 });
            let setup = sc.setup(0, 4.0).unwrap();
            let (p0, p1) = sc.initial_data(&setup).unwrap();
            let jet = build_jet(&setup, &p0, &p1).unwrap();
            let out = run_iteration(&setup, &jet, &sc.nonlinear_options()).unwrap();
            let ratios = out.trace.ratios();
            let sigma = contraction_ratio(&out.trace).unwrap_or(f64::NAN);
            let res = nonlinear_residual(&setup, &out.field).unwrap();
            let oracle = CosineOracle { c0sq: setup.gas.c0sq(), m1: 1, m2: 1 }.truncation_residual(&setup.grid).unwrap();
            let corner = corner_gradient(&setup, &out.field);
            let h4 = weighted_norm(&out.field, &setup.grid, 4).unwrap() / eps;
            let run_ok = out.trace.converged && ratios.iter().all(|&r| r < 1.0) && res.relative <= 10.0 * oracle && corner <= 1e-8;
            println!(
                "  walls perturbed = {perturbed_walls}, eps = {eps:e}: m = {}, max ratio {:.3}, sigma {sigma:.2e}, residual {:.2e} (oracle {oracle:.2e}), corner {corner:.1e}, H4/eps {h4:.1}",
                out.trace.iterations(),
                ratios.iter().cloned().fold(0.0, f64::max),
                res.relative
            );
            ok &= run_ok;
            sigmas.push(sigma);
            h4_over_eps.push(h4);
        }
        let increasing = sigmas.windows(2).all(|w| w[0] < w[1]);
        println!("  walls perturbed = {perturbed_walls}: sigma decreases with eps = {increasing}");
        ok &= increasing;
    }
    let spread = h4_over_eps.iter().cloned().fold(0.0, f64::max) / h4_over_eps.iter().cloned().fold(f64::MAX, f64::min);
    let elapsed = t0.elapsed();
    verdict(
        9,
        ok && spread <= 3.0 && elapsed < Duration::from_secs(600),
        format!("H4/eps spread {spread:.3} across the sweep, {elapsed:.2?}"),
    );
}
