use lpvar_core::bochner::{expectation, norm_integral};
use lpvar_core::distribution::{PushforwardRow, PUSHFORWARD_CSV_HEADER};
use lpvar_core::duality::{dyadic_dense_family, norm_via_sup, norming_functional, weak_modulus_check};
use lpvar_core::rv::{dyadic_approx, sup_error_vs_indicator};
use lpvar_core::verify::{random_step_fn, run_all};
use lpvar_core::{conjugate, Event, LpRandomVariable, PiecewiseConstantFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CommandKind, RunConfig};
use crate::error::CliError;
use crate::report::{Cell, Report};

/// Dense family used by the `duality` command.
pub const FAMILY_LEVEL: u32 = 8;
pub const FAMILY_VALUE_LEVELS: u32 = 16;
pub const FAMILY_BOUND: f64 = 1.0;
/// Random cases per check in the `duality` command.
pub const DUALITY_CASES: u64 = 20;

pub struct Outcome {
    pub report: Report,
    /// Human-readable lines for the terminal; never part of the report.
    pub console: Vec<String>,
    /// Drives the exit status of `verify`; always true elsewhere.
    pub success: bool,
}

impl Outcome {
    fn plain(report: Report) -> Self {
        let console = report
            .summary
            .iter()
            .map(|(k, v)| format!("{k} = {}", cell_text(v)))
            .collect();
        Outcome {
            report,
            console,
            success: true,
        }
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(v) => v.to_string(),
        Cell::Int(v) => v.to_string(),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn required<T: Copy>(v: Option<T>, flag: &'static str) -> Result<T, CliError> {
    v.ok_or(CliError::Usage {
        flag,
        message: "missing value".into(),
    })
}

pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    match config.command {
        CommandKind::Problem2 => problem2(config),
        CommandKind::Expectation => expectation_table(config),
        CommandKind::Approx => approx(config),
        CommandKind::Duality => duality(config),
        CommandKind::Verify => verify(config),
    }
}

fn problem2(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = required(config.p, "--p")?;
    let eps = required(config.epsilon, "--epsilon")?;
    let samples = required(config.samples, "--samples")?;
    let seed = required(config.seed, "--seed")?;
    let e = conjugate(p)?;
    let event = Event::ball(PiecewiseConstantFn::zero(), eps, e)?;
    let row = PushforwardRow::compute(&LpRandomVariable::IndicatorProcess, &event, samples, seed)?;
    let z = if row.std_error > 0.0 {
        (row.estimate - row.exact) / row.std_error
    } else {
        0.0
    };

    let mut report = Report::new(config.clone(), PUSHFORWARD_CSV_HEADER.split(',').collect());
    report.summarize("exact", row.exact);
    report.summarize("closed_form", eps.powf(p));
    report.summarize("estimate", row.estimate);
    report.summarize("std_error", row.std_error);
    report.summarize("z_score", z);
    report.summarize("within_4_sigma", z.abs() <= 4.0);
    report.push_row(vec![
        row.event.into(),
        row.exact.into(),
        row.estimate.into(),
        row.std_error.into(),
        row.n.into(),
        row.seed.into(),
    ]);
    Ok(Outcome::plain(report))
}

fn expectation_table(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = required(config.p, "--p")?;
    let nodes = required(config.nodes, "--nodes")?;
    let e = conjugate(p)?;
    let chi = LpRandomVariable::IndicatorProcess;
    let result = expectation(&chi, nodes)?;

    let mut report = Report::new(config.clone(), vec!["t", "expectation", "one_minus_t", "abs_err"]);
    let mut max_err = 0.0f64;
    for (t, v) in result.expectation.midpoint_samples() {
        let exact = 1.0 - t;
        let err = (v - exact).abs();
        max_err = max_err.max(err);
        report.push_row(vec![t.into(), v.into(), exact.into(), err.into()]);
    }
    report.summarize("method", format!("{:?}", result.method).to_lowercase());
    report.summarize("node_count", result.node_count);
    report.summarize("max_abs_err", max_err);
    report.summarize("expectation_norm", result.expectation.lp_norm(e));
    report.summarize("norm_integral", norm_integral(&chi, nodes, e)?);
    report.summarize("norm_integral_closed_form", p / (p + 1.0));
    Ok(Outcome::plain(report))
}

fn approx(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = required(config.p, "--p")?;
    let k = required(config.k, "--k")?;
    let e = conjugate(p)?;

    let mut report = Report::new(config.clone(), vec!["k", "cells", "sup_err", "bound", "holds"]);
    let mut all = true;
    for level in 1..=k {
        let approx = dyadic_approx(level)?;
        let sup = sup_error_vs_indicator(&approx, e)?;
        let bound = (-f64::from(level) / p).exp2();
        let holds = sup <= bound * (1.0 + 1e-12);
        all &= holds;
        report.push_row(vec![
            level.into(),
            approx.cells().len().into(),
            sup.into(),
            bound.into(),
            holds.into(),
        ]);
    }
    report.summarize("all_hold", all);
    Ok(Outcome::plain(report))
}

fn duality(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = required(config.p, "--p")?;
    let seed = required(config.seed, "--seed")?;
    let e = conjugate(p)?;
    let fam = dyadic_dense_family(FAMILY_LEVEL, FAMILY_VALUE_LEVELS, FAMILY_BOUND)?;
    let delta = fam.density_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut report = Report::new(
        config.clone(),
        vec!["check", "case", "lower", "value", "upper", "holds"],
    );
    let mut all = true;
    let mut push = |report: &mut Report, check: &str, case: u64, lo: f64, v: f64, hi: f64, ok: bool| {
        all &= ok;
        report.push_row(vec![check.into(), case.into(), lo.into(), v.into(), hi.into(), ok.into()]);
    };

    for case in 0..DUALITY_CASES {
        let values = (0..fam.num_cells())
            .map(|_| rng.random_range(-FAMILY_BOUND..=FAMILY_BOUND))
            .collect();
        let x = PiecewiseConstantFn::on_uniform_grid(values)?;
        let norm = x.lp_norm(e);
        let sup = norm_via_sup(&x, &fam, e)?;
        let lower = norm - 2.0 * delta;
        push(&mut report, "norm_via_sup", case, lower, sup, norm, sup <= norm + 1e-10 && sup >= lower);

        let nf = norming_functional(&x, e)?;
        let attained = nf.apply(&x);
        let tol = 1e-12 * norm.max(1.0);
        push(&mut report, "norming_value", case, norm, attained, norm, (attained - norm).abs() <= tol);
        let dual_norm = nf.representer().lp_norm(e.dual());
        push(&mut report, "norming_dual_norm", case, 1.0, dual_norm, 1.0, (dual_norm - 1.0).abs() <= 1e-12);
    }
    for case in 0..DUALITY_CASES {
        let a: f64 = rng.random_range(f64::EPSILON..1.0);
        let b: f64 = rng.random_range(f64::EPSILON..1.0);
        let y = random_step_fn(&mut rng, 8, 2.0);
        let (lhs, bound) = weak_modulus_check(a, b, &y, e)?;
        push(&mut report, "weak_modulus", case, 0.0, lhs, bound, lhs <= bound + 1e-12);
    }

    report.summarize("family_level", FAMILY_LEVEL);
    report.summarize("family_value_levels", FAMILY_VALUE_LEVELS);
    report.summarize("family_bound", FAMILY_BOUND);
    report.summarize("density_radius", delta);
    report.summarize("all_hold", all);
    Ok(Outcome::plain(report))
}

fn verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let seed = required(config.seed, "--seed")?;
    let result = run_all(seed)?;

    let mut report = Report::new(
        config.clone(),
        vec!["id", "name", "passed", "measured", "tolerance", "detail", "note"],
    );
    let mut console = Vec::new();
    for c in &result.criteria {
        console.push(c.summary_line());
        if let Some(note) = &c.note {
            console.push(format!("       note: {note}"));
        }
        report.push_row(vec![
            u64::from(c.id).into(),
            c.name.as_str().into(),
            c.passed.into(),
            c.measured.into(),
            c.tolerance.into(),
            c.detail.as_str().into(),
            c.note.clone().unwrap_or_default().into(),
        ]);
    }
    report.summarize("all_passed", result.all_passed);
    let success = result.success();
    console.push(format!(
        "{} of {} criteria passed",
        result.criteria.iter().filter(|c| c.passed).count(),
        result.criteria.len()
    ));
    Ok(Outcome {
        report,
        console,
        success,
    })
}
