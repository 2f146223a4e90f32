//! The four run modes.

use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use corner_flow::coefficients::{check_lemma21, CoefficientSnapshot, Lemma21Options, Lemma21Report, ReflectedCandidate, StaticPotential};
use corner_flow::compatibility::{build_jet, check_compatibility, InitialJet};
use corner_flow::data::BumpSum;
use corner_flow::energy::{check_estimate, weighted_norms, EnergyReport};
use corner_flow::extension::{check_lemma32, BackgroundRatios, Lemma32Tolerances, Mollifier, RatioFields};
use corner_flow::grid::Grid;
use corner_flow::linear_solver::{solve, validate_assumptions, AssumptionOptions, CosineOracle, LinearIbvp};
use corner_flow::nonlinear::{
    assemble_frozen, contraction_ratio, corner_gradient, nonlinear_residual, run_iteration,
    weighted_norm, IterationTrace, Lift, ResidualReport,
};
use corner_flow::scenario::Scenario;
use corner_flow::setup::FlowSetup;

use crate::report::Out;
use crate::{CliError, RunArgs};

type Res<T> = Result<T, CliError>;

fn eta0(sc: &Scenario) -> f64 {
    sc.grid.eta[0]
}

fn prepared(sc: &Scenario, refine: u32) -> Res<(FlowSetup, InitialJet)> {
    let setup = sc.setup(refine, eta0(sc))?;
    let (p0, p1) = sc.initial_data(&setup)?;
    let jet = build_jet(&setup, &p0, &p1)?;
    Ok((setup, jet))
}

/// The first frozen problem of the iteration: coefficients at the Taylor lift.
fn first_frozen(setup: &FlowSetup, jet: &InitialJet) -> Res<(LinearIbvp, Lift)> {
    let lift = Lift::new(jet, &setup.grid);
    let p = assemble_frozen(setup, &setup.grid.zeros3(), &lift)?;
    Ok((p, lift))
}

#[derive(Serialize)]
struct GeometryReport {
    seed: u64,
    samples: usize,
    round_trip_max: f64,
    det_min: f64,
    det_max: f64,
}

#[derive(Serialize)]
struct Lemma21Out {
    static_potential: Lemma21Report,
    data_candidate: Option<Lemma21Report>,
    data_candidate_error: Option<String>,
}

pub fn check_identities(sc: &Scenario, args: &RunArgs, out: &Out) -> Res<()> {
    let (setup, jet) = prepared(sc, args.refine.unwrap_or(0))?;
    let g = &setup.grid;
    let dom = &setup.domain;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let samples = 1000;
    let mut geo = GeometryReport { seed: args.seed, samples, round_trip_max: 0.0, det_min: f64::MAX, det_max: f64::MIN };
    for _ in 0..samples {
        let z = [rng.gen_range(0.0..g.extent), rng.gen_range(0.0..g.extent)];
        let back = dom.to_z(dom.from_z(z)?)?;
        geo.round_trip_max = geo.round_trip_max.max((back[0] - z[0]).abs()).max((back[1] - z[1]).abs());
        let det = dom.map_point_z(z)?.det();
        geo.det_min = geo.det_min.min(det);
        geo.det_max = geo.det_max.max(det);
    }
    out.json("geometry.json", g, &geo)?;

    let opts = Lemma21Options::default();
    let static_potential = check_lemma21(dom, &setup.gas, &StaticPotential, &opts)?;
    let data = BumpSum { bumps: sc.data.bumps.clone(), symmetrize: sc.data.symmetrize };
    let (data_candidate, data_candidate_error) = if data.is_zero() {
        (None, None)
    } else {
        let cand = ReflectedCandidate {
            dom: dom.clone(),
            data,
            projection_radius: sc.data.projection_radius,
            omega: 1.0,
            h_diff: opts.h_diff,
        };
        match check_lemma21(dom, &setup.gas, &cand, &opts) {
            Ok(r) => (Some(r), None),
            Err(corner_flow::Error::PreconditionViolated(m)) => (None, Some(m)),
            Err(e) => return Err(e.into()),
        }
    };
    let l21 = Lemma21Out { static_potential, data_candidate, data_candidate_error };
    out.json("lemma21.json", g, &l21)?;

    let snap = CoefficientSnapshot::sample(dom, &setup.gas, g, &StaticPotential, 0.0)?;
    let ratios = RatioFields::from_snapshot(&snap);
    let m = Mollifier::new(4.0 * g.h, g.h)?;
    let l32 = check_lemma32(&ratios, &m, sc.walls.wall1.epsilon.max(sc.walls.wall2.epsilon), BackgroundRatios::default(), Lemma32Tolerances::default())?;
    out.json("lemma32.json", g, &l32)?;

    let (p, _) = first_frozen(&setup, &jet)?;
    let assumptions = validate_assumptions(&p, g, &AssumptionOptions::default());
    out.json("assumptions.json", g, &assumptions)?;
    let compat = check_compatibility(&jet, &setup, 2)?;
    out.json("compatibility.json", g, &compat)?;

    println!("geometry: round trip {:.2e}, det in [{:.4}, {:.4}]", geo.round_trip_max, geo.det_min, geo.det_max);
    println!("lemma21: static {:.2e}, data {}", l21.static_potential.max_residual(), match (&l21.data_candidate, &l21.data_candidate_error) {
        (Some(r), _) => format!("{:.2e}", r.max_residual()),
        (None, Some(e)) => format!("rejected ({e})"),
        _ => "none".into(),
    });
    println!(
        "lemma32: parity {} corner {} co-normal {} constants {}",
        l32.parity_pass, l32.corner_pass, l32.conormal_pass, l32.constants_pass
    );
    println!("assumptions: {:?}; compatibility max residual {:.2e}", assumptions.pass, compat.max_residual);
    Ok(())
}

/// Highest energy order the grid supports, capped at 4.
fn energy_order(g: &Grid) -> usize {
    (g.nt.min(g.n) + 1).saturating_sub(2).min(4)
}

fn energy_reports(u: &Array3<f64>, p: &LinearIbvp, g: &Grid, etas: &[f64]) -> Res<Vec<EnergyReport>> {
    let k = energy_order(g);
    etas.iter().map(|&e| Ok(weighted_norms(u, p, &g.clone().with_eta(e), k)?)).collect()
}

pub fn linear(sc: &Scenario, args: &RunArgs, out: &Out) -> Res<()> {
    let (setup, jet) = prepared(sc, args.refine.unwrap_or(0))?;
    let g = &setup.grid;
    let (p, lift) = first_frozen(&setup, &jet)?;
    out.json("assumptions.json", g, &validate_assumptions(&p, g, &AssumptionOptions::default()))?;
    let sol = solve(&p, g)?;
    out.field("linear", &(&sol.levels + &lift.psi), g)?;
    let reports = energy_reports(&sol.levels, &p, g, &sc.grid.eta)?;
    let rows: Vec<String> = reports.iter().flat_map(EnergyReport::csv_rows).collect();
    out.csv("energy.csv", g, EnergyReport::csv_header(), &rows)?;
    let diag = check_estimate(&reports);
    out.json("estimate.json", g, &diag)?;
    println!(
        "linear: n = {}, nt = {}, sweeps {}, estimate constants stabilize = {}",
        g.n, g.nt, sol.sweeps_used, diag.stabilizes
    );
    Ok(())
}

#[derive(Serialize)]
struct NonlinearSummary {
    converged: bool,
    iterations: usize,
    contraction_ratio: Option<f64>,
    /// Largest weighted order-4 norm over the iterates, relative to the first.
    h4_growth: Option<f64>,
    residual: ResidualReport,
    corner_gradient: f64,
    h4_norm: f64,
}

fn h4_growth(trace: &IterationTrace) -> Option<f64> {
    let norms: Vec<f64> = trace.entries.iter().filter_map(|e| e.h4_norm).collect();
    let first = *norms.first()?;
    (first > 0.0).then(|| norms.iter().cloned().fold(0.0, f64::max) / first)
}

pub fn nonlinear(sc: &Scenario, args: &RunArgs, out: &Out) -> Res<()> {
    let (setup, jet) = prepared(sc, args.refine.unwrap_or(0))?;
    let g = &setup.grid;
    let sol = run_iteration(&setup, &jet, &sc.nonlinear_options())?;
    let trace = sol.trace.csv();
    let mut lines = trace.lines().map(str::to_string);
    let header = lines.next().unwrap_or_default();
    out.csv("trace.csv", g, &header, &lines.collect::<Vec<_>>())?;
    if !sol.trace.converged {
        let ratio = sol.trace.ratios().last().copied().unwrap_or(f64::NAN);
        return Err(corner_flow::Error::NoConvergence { iterations: sol.trace.iterations(), ratio }.into());
    }
    out.field("nonlinear", &sol.field, g)?;
    let summary = NonlinearSummary {
        converged: true,
        iterations: sol.trace.iterations(),
        contraction_ratio: contraction_ratio(&sol.trace),
        h4_growth: h4_growth(&sol.trace),
        residual: nonlinear_residual(&setup, &sol.field)?,
        corner_gradient: corner_gradient(&setup, &sol.field),
        h4_norm: weighted_norm(&sol.field, g, 4)?,
    };
    out.json("summary.json", g, &summary)?;
    println!(
        "nonlinear: converged after {} iterates, residual {:.2e} (relative {:.2e})",
        summary.iterations, summary.residual.max_abs, summary.residual.relative
    );
    Ok(())
}

#[derive(Serialize)]
struct StudyRow {
    level: u32,
    n: usize,
    h: f64,
    nt: usize,
    dt: f64,
    error: f64,
    observed_order: Option<f64>,
}

#[derive(Serialize)]
struct Study {
    reference: &'static str,
    rows: Vec<StudyRow>,
}

fn final_level(u: &Array3<f64>) -> Array2<f64> {
    u.index_axis(Axis(0), u.len_of(Axis(0)) - 1).to_owned()
}

/// Error table under successive halving. Without initial data the reference is the
/// lowest cosine eigenmode of the background problem; otherwise successive
/// nonlinear solutions are compared at `T` on the coarse nodes.
pub fn convergence_study(sc: &Scenario, args: &RunArgs, out: &Out) -> Res<()> {
    let levels = args.refine.unwrap_or(2);
    let oracle = sc.data.bumps.is_empty() && sc.data.velocity_bumps.is_empty();
    let mut grids = Vec::new();
    let mut errors = Vec::new();
    if oracle {
        let c0sq = sc.gas_state()?.c0sq();
        let o = CosineOracle { c0sq, m1: 1, m2: 1 };
        for r in 0..=levels {
            let g = sc.grid(r, eta0(sc))?;
            let sol = solve(&o.problem(&g), &g)?;
            let diff = &final_level(&sol.levels) - &final_level(&o.exact(&g));
            errors.push(diff.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            grids.push(g);
        }
    } else {
        let mut finals = Vec::new();
        for r in 0..=levels + 1 {
            let (setup, jet) = prepared(sc, r)?;
            let sol = run_iteration(&setup, &jet, &sc.nonlinear_options())?;
            if !sol.trace.converged {
                let ratio = sol.trace.ratios().last().copied().unwrap_or(f64::NAN);
                return Err(corner_flow::Error::NoConvergence { iterations: sol.trace.iterations(), ratio }.into());
            }
            finals.push(final_level(&sol.field));
            grids.push(setup.grid);
        }
        for w in finals.windows(2) {
            let fine = w[1].slice(ndarray::s![..;2, ..;2]);
            errors.push((&w[0] - &fine).iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        grids.pop();
    }
    let rows: Vec<StudyRow> = grids
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(k, (g, &e))| StudyRow {
            level: k as u32,
            n: g.n,
            h: g.h,
            nt: g.nt,
            dt: g.dt,
            error: e,
            observed_order: (k > 0 && e > 0.0).then(|| (errors[k - 1] / e).log2()),
        })
        .collect();
    let csv: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{:e},{}",
                r.level,
                r.n,
                r.h,
                r.nt,
                r.dt,
                r.error,
                r.observed_order.map_or(String::new(), |o| o.to_string())
            )
        })
        .collect();
    let g0 = &grids[0];
    out.csv("convergence.csv", g0, "level,n,h,nt,dt,error,observed_order", &csv)?;
    let study = Study { reference: if oracle { "cosine-eigenmode" } else { "successive-refinement" }, rows };
    out.json("convergence.json", g0, &study)?;
    for r in &study.rows {
        println!(
            "h = {:.5}: error {:.3e}{}",
            r.h,
            r.error,
            r.observed_order.map_or(String::new(), |o| format!(", order {o:.3}"))
        );
    }
    Ok(())
}
