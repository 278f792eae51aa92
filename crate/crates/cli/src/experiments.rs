use std::f64::consts::PI;

use genfn_core::dynamics::heat::heat_series;
use genfn_core::dynamics::{
    backward_heat_series, delta_vanishing_check, family_report, godunov_scalar, godunov_system, prey_mass_after,
    riemann_cells, shock_position_eoc, simulate_heat, simulate_prey_predator, sine_coefficients, Boundary, HeatProblem,
    PreyPredatorProblem, UniformGrid,
};
use genfn_core::eps_core::{classify, eq_in_en, infinitesimal_catalogue, AsymptoticClass, EpsRepresentative};
use genfn_core::genfunc::{association, default_battery, integral_i, pair, GenFunction1D, TestFunction};
use genfn_core::profiles::moment;
use genfn_core::riemann::{
    scalar_residual, scalar_speed, scalar_speed_variant, solve_system_with, viscous_profile_oracle, weak_form_speed,
    ScalarData, ScalarEquation, SolveOptions, State, StatementLedger, VerdictKind, ViscousProfileProblem,
};
use genfn_core::Error;
use serde_json::json;

use crate::config::*;
use crate::error::CliResult;
use crate::output::{Artifacts, Cell, Table};

pub fn execute(experiment: &Experiment) -> CliResult<Artifacts> {
    match experiment {
        Experiment::EpsTable(p) => eps_table(p),
        Experiment::Moments(p) => moments(p),
        Experiment::Association(p) => association_run(p),
        Experiment::SqrtDelta(p) => sqrt_delta(p),
        Experiment::RiemannScalar(p) => riemann_scalar(p),
        Experiment::RiemannSystem(p) => riemann_system(p),
        Experiment::ViscousOracle(p) => viscous_oracle(p),
        Experiment::PreyPredator(p) => prey_predator(p),
        Experiment::HeatForward(p) => match p.mode {
            HeatMode::Field => heat_field(p),
            HeatMode::DeltaVanishing => heat_delta(&p.delta),
        },
        Experiment::HeatBackwardSeries(p) => heat_backward(p),
        Experiment::IllposedFamily(p) => illposed(p),
        Experiment::GodunovScalar(p) => godunov_scalar_run(p),
        Experiment::GodunovSystem(p) => godunov_system_run(p),
    }
}

fn row<const N: usize>(cells: [Cell; N]) -> Vec<Cell> {
    cells.into()
}

/// `c eps^p` as text: `2`, `eps`, `2 eps^0.5`.
fn monomial_label(coeff: f64, power: f64) -> String {
    if power == 0.0 {
        return format!("{coeff}");
    }
    let base = if power == 1.0 {
        "eps".to_string()
    } else {
        format!("eps^{power}")
    };
    if coeff == 1.0 {
        base
    } else {
        format!("{coeff} {base}")
    }
}

fn limit_label(class: &AsymptoticClass, limit: f64) -> String {
    if class.associated_to_zero.is_true() {
        "associated to 0".into()
    } else if class.leading_order.is_some_and(|p| p < 0.0) {
        "moderate, not associated to any number".into()
    } else {
        format!("associated to {limit}")
    }
}

fn eps_table(p: &EpsTableParams) -> CliResult<Artifacts> {
    p.grid.validate()?;
    let catalogue = infinitesimal_catalogue();
    let infinity = EpsRepresentative::infinity();
    let mut results = Table::new(&[
        "quantity",
        "representative",
        "associated_to_zero",
        "product_with_infinity",
        "product_associated_to_zero",
        "product_leading_order",
        "classification",
    ]);
    let mut summary_rows = Vec::new();
    for (name, rep) in &catalogue {
        let class = classify(rep, &p.grid)?;
        let product = rep.mul(&infinity);
        let pc = classify(&product, &p.grid)?;
        let order = pc.leading_order.unwrap_or(f64::NAN);
        // Closed-form monomials: the coefficient is the value at eps = 1.
        let label = monomial_label(product.eval(1.0), order);
        let classification = limit_label(&pc, product.eval(1.0));
        summary_rows.push(json!({"quantity": name, "product": label, "classification": classification}));
        results.push(row([
            (*name).into(),
            monomial_label(rep.eval(1.0), class.leading_order.unwrap_or(f64::NAN)).into(),
            class.associated_to_zero.to_string().into(),
            label.into(),
            pc.associated_to_zero.to_string().into(),
            order.into(),
            classification.into(),
        ]));
    }

    let mut pairwise = Table::new(&["a", "b", "eq_in_EN"]);
    let mut distinct = true;
    for (i, (na, a)) in catalogue.iter().enumerate() {
        for (nb, b) in &catalogue[i + 1..] {
            let eq = eq_in_en(a, b, &p.grid)?;
            distinct &= eq.is_false();
            pairwise.push(row([(*na).into(), (*nb).into(), eq.to_string().into()]));
        }
    }

    let mut header = vec!["eps".to_string()];
    for (name, _) in &catalogue {
        header.push(name.to_string());
    }
    for (name, _) in &catalogue {
        header.push(format!("{name}_times_infinity"));
    }
    let mut plot = Table::new(&header);
    for k in 0..p.plot_points {
        let eps = p.grid.eps0 * 0.5f64.powi(k as i32);
        let mut r: Vec<Cell> = vec![eps.into()];
        r.extend(catalogue.iter().map(|(_, f)| Cell::from(f.eval(eps))));
        r.extend(catalogue.iter().map(|(_, f)| Cell::from(f.mul(&infinity).eval(eps))));
        plot.push(r);
    }

    let mut out = Artifacts {
        results,
        plot,
        summary: json!({"pairwise_distinct": distinct, "products": summary_rows}),
        ..Artifacts::default()
    };
    out.extra_csv("pairwise.csv", &pairwise);
    Ok(out)
}

fn moments(p: &MomentsParams) -> CliResult<Artifacts> {
    let mut results = Table::new(&["profile", "n", "value", "abs_error"]);
    let mut integral = Table::new(&["profile", "value", "abs_error"]);
    let mut header = vec!["n".to_string()];
    let mut columns = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_i = 0.0f64;
    for spec in &p.presets {
        let k = spec.heaviside()?;
        let mut col = Vec::new();
        for &n in &p.orders {
            let v = moment(&k, n)?;
            let err = (v - 1.0 / (n as f64 + 1.0)).abs();
            worst = worst.max(err);
            col.push(err);
            results.push(row([k.tag().into(), n.into(), v.into(), err.into()]));
        }
        let i = integral_i(&k, &p.integral_grid)?;
        let err = (i + 1.0 / 6.0).abs();
        worst_i = worst_i.max(err);
        integral.push(row([k.tag().into(), i.into(), err.into()]));
        header.push(k.tag().to_string());
        columns.push(col);
    }
    let mut plot = Table::new(&header);
    for (j, &n) in p.orders.iter().enumerate() {
        let mut r: Vec<Cell> = vec![n.into()];
        r.extend(columns.iter().map(|c| Cell::from(c[j])));
        plot.push(r);
    }
    let mut out = Artifacts {
        results,
        plot,
        summary: json!({"max_moment_error": worst, "max_integral_error": worst_i, "integral_target": -1.0 / 6.0}),
        ..Artifacts::default()
    };
    out.extra_csv("integral_i.csv", &integral);
    Ok(out)
}

fn battery_or_default(battery: &[TestFunction], domain: (f64, f64)) -> CliResult<Vec<TestFunction>> {
    if battery.is_empty() {
        Ok(default_battery(domain)?)
    } else {
        for phi in battery {
            TestFunction::new(phi.center, phi.width)?;
        }
        Ok(battery.to_vec())
    }
}

fn association_run(p: &AssociationParams) -> CliResult<Artifacts> {
    let u = p.u.build(p.domain)?;
    let v = p.v.build(p.domain)?;
    let battery = battery_or_default(&p.battery, p.domain)?;
    let verdict = association(&u, &v, &battery, &p.grid)?;

    let mut results = Table::new(&["eps", "phi_id", "value"]);
    for r in &verdict.sweep {
        results.push(row([r.eps.into(), r.phi_id.into(), r.value.into()]));
    }
    let mut header = vec!["eps".to_string()];
    header.extend((0..battery.len()).map(|i| format!("phi_{i}")));
    let mut plot = Table::new(&header);
    let samples = p.grid.samples();
    for (j, &eps) in samples.iter().enumerate() {
        let mut r: Vec<Cell> = vec![eps.into()];
        r.extend((0..battery.len()).map(|i| Cell::from(verdict.sweep[i * samples.len() + j].value)));
        plot.push(r);
    }
    let report = json!({
        "aggregate": verdict.aggregate,
        "confidence": verdict.confidence,
        "steepest_slope": verdict.steepest_slope(),
        "battery": battery,
        "per_test": verdict.per_test,
        "u": u.to_string(),
        "v": v.to_string(),
    });
    let mut out = Artifacts {
        results,
        plot,
        summary: json!({"aggregate": verdict.aggregate, "steepest_slope": verdict.steepest_slope()}),
        ..Artifacts::default()
    };
    out.extra_json("verdict.json", &report);
    Ok(out)
}

fn sqrt_delta(p: &SqrtDeltaParams) -> CliResult<Artifacts> {
    let psi = p.profile.dirac()?;
    let phi = TestFunction::new(p.phi.center, p.phi.width)?;
    let report = genfn_core::genfunc::sqrt_delta_demo(&psi, &phi, &p.grid)?;
    let (a, b) = phi.support();
    let field = GenFunction1D::dirac(0.0, psi, (a - 1.0, b + 1.0)).sqrt()?;
    let energy = field.pow(2)?;
    let mut results = Table::new(&["eps", "field_pairing", "energy_pairing", "field_prediction"]);
    for eps in p.grid.samples() {
        results.push(row([
            eps.into(),
            pair(&field, &phi, eps)?.into(),
            pair(&energy, &phi, eps)?.into(),
            (report.field_coefficient * eps.sqrt()).into(),
        ]));
    }
    let plot = results.clone();
    Ok(Artifacts {
        results,
        plot,
        summary: json!({
            "field_class": report.field_class,
            "energy_class": report.energy_class,
            "field_coefficient": report.field_coefficient,
            "energy_limit": report.energy_limit,
            "phi_at_center": report.phi_at_center,
        }),
        ..Artifacts::default()
    })
}

fn riemann_scalar(p: &RiemannScalarParams) -> CliResult<Artifacts> {
    let data = ScalarData { u_l: p.u_l, u_r: p.u_r };
    let k = p.profile.heaviside()?;
    let phi = TestFunction::new(p.phi.center, p.phi.width)?;
    let verdicts = [
        (ScalarEquation::Transport, scalar_speed(data)),
        (ScalarEquation::Multiplied, scalar_speed_variant(data)),
    ];
    let mut results = Table::new(&["equation", "verdict_speed", "weak_form_speed", "abs_difference"]);
    for (eq, v) in &verdicts {
        let closed = v.speed().unwrap_or(f64::NAN);
        let weak = match weak_form_speed(*eq, data, &k, &phi) {
            Ok(c) => c,
            Err(Error::InvalidInput(_)) => f64::NAN,
            Err(e) => return Err(e.into()),
        };
        let name = serde_json::to_value(eq)
            .expect("enum")
            .as_str()
            .unwrap_or_default()
            .to_string();
        results.push(row([
            name.into(),
            closed.into(),
            weak.into(),
            (closed - weak).abs().into(),
        ]));
    }

    let mut plot = Table::new(&["c", "transport_residual", "multiplied_residual"]);
    if p.u_l != p.u_r && p.plot_points >= 2 {
        let (lo, hi) = (p.u_l.min(p.u_r) - 0.5, p.u_l.max(p.u_r) + 0.5);
        let eps = 0.5f64.powi(8);
        for j in 0..p.plot_points {
            let c = lo + (hi - lo) * j as f64 / (p.plot_points - 1) as f64;
            let r = |eq| -> CliResult<f64> {
                Ok(pair(
                    &scalar_residual(eq, data, c, &k, genfn_core::genfunc::DEFAULT_DOMAIN)?,
                    &phi,
                    eps,
                )?)
            };
            plot.push(row([
                c.into(),
                r(ScalarEquation::Transport)?.into(),
                r(ScalarEquation::Multiplied)?.into(),
            ]));
        }
    }
    let mut out = Artifacts {
        results,
        plot,
        summary: json!({
            "transport_speed": verdicts[0].1.speed(),
            "multiplied_speed": verdicts[1].1.speed(),
        }),
        ..Artifacts::default()
    };
    out.extra_json("verdicts.json", &[&verdicts[0].1, &verdicts[1].1]);
    Ok(out)
}

fn riemann_system(p: &RiemannSystemParams) -> CliResult<Artifacts> {
    let ledger = StatementLedger::parse(&p.ledger)?;
    let mut opts = if p.diagnostics {
        SolveOptions::default()
    } else {
        SolveOptions::without_diagnostics()
    };
    opts.rho_profile = p.rho_profile.heaviside()?;
    opts.strong_search_speeds = p.strong_search_speeds;
    let verdict = solve_system_with(&ledger, &p.data, &opts)?;

    let mut results = Table::new(&["kind", "c", "a", "profiles"]);
    let mut plot = Table::new(&["a", "c"]);
    match &verdict.kind {
        VerdictKind::Unique { c, a, profiles, .. } => {
            results.push(row([
                "unique".into(),
                (*c).into(),
                (*a).into(),
                profiles.clone().into(),
            ]));
            plot.push(row([(*a).into(), (*c).into()]));
        }
        VerdictKind::Family { members, .. } => {
            let mut sorted = members.clone();
            sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
            for m in &sorted {
                results.push(row([
                    "family".into(),
                    m.c.into(),
                    m.a.into(),
                    m.profiles.clone().into(),
                ]));
                plot.push(row([m.a.into(), m.c.into()]));
            }
        }
        VerdictKind::NoSolution { witnesses, .. } => {
            for w in witnesses {
                results.push(row([
                    "witness".into(),
                    w.c.into(),
                    f64::NAN.into(),
                    w.profiles.clone().into(),
                ]));
            }
        }
        VerdictKind::Degenerate => {}
    }
    let mut diagnostics = Table::new(&[
        "equation",
        "tag",
        "negligible",
        "associated",
        "leading_order",
        "satisfied",
    ]);
    for d in &verdict.diagnostics {
        diagnostics.push(row([
            d.equation.into(),
            d.tag.to_string().into(),
            d.negligible.to_string().into(),
            d.associated.to_string().into(),
            d.leading_order.into(),
            d.satisfied.to_string().into(),
        ]));
    }
    let kind = serde_json::to_value(&verdict).expect("verdict")["kind"].clone();
    let mut out = Artifacts {
        results,
        plot,
        summary: json!({
            "kind": kind,
            "c": verdict.speed(),
            "speed_interval": verdict.speed_interval(),
            "contract_holds": verdict.contract_holds(),
        }),
        ..Artifacts::default()
    };
    out.extra_json("verdict.json", &verdict);
    if let Some(csv) = verdict.family_csv() {
        out.extras.push(("family.csv".into(), csv));
    }
    if !verdict.diagnostics.is_empty() {
        out.extra_csv("diagnostics.csv", &diagnostics);
    }
    Ok(out)
}

fn viscous_oracle(p: &ViscousOracleParams) -> CliResult<Artifacts> {
    let problem = ViscousProfileProblem {
        eps1: p.eps1,
        eps2: p.eps2,
        eps3: p.eps3,
        data: p.data,
    };
    let prof = viscous_profile_oracle(&problem)?;
    let mut results = Table::new(&["xi", "k_u", "k_tau"]);
    for ((x, u), t) in prof.xi.iter().zip(&prof.k_u).zip(&prof.k_tau) {
        results.push(row([(*x).into(), (*u).into(), (*t).into()]));
    }
    // The mixed ledger's answer on the same data, for comparison.
    let mixed = solve_system_with(&StatementLedger::mixed(), &p.data, &SolveOptions::without_diagnostics())
        .ok()
        .and_then(|v| match v.kind {
            VerdictKind::Unique { c, a, .. } => Some(json!({"c": c, "a": a})),
            _ => None,
        });
    Ok(Artifacts {
        plot: results.clone(),
        results,
        summary: json!({
            "c": prof.c,
            "a": prof.a,
            "right": prof.right,
            "far_field_residual": prof.far_field_residual,
            "mixed_ledger": mixed,
        }),
        ..Artifacts::default()
    })
}

fn prey_predator(p: &PreyPredatorParams) -> CliResult<Artifacts> {
    let problem = |eps: f64| PreyPredatorProblem {
        alpha1: p.alpha1,
        alpha2: p.alpha2,
        psi1: p.psi1.clone(),
        psi2: p.psi2.clone(),
        eps,
        t_final: p.t_final,
        domain: p.domain,
        cells_per_eps: p.cells_per_eps,
        snapshots: p.snapshots,
    };
    let first = *p
        .eps_list
        .first()
        .ok_or_else(|| Error::InvalidInput("empty eps list".into()))?;
    let report = prey_mass_after(&problem(first), &p.eps_list)?;
    let mut results = Table::new(&["eps", "predator_mass", "prey_mass"]);
    for &(e, pred, prey) in &report.per_eps {
        results.push(row([e.into(), pred.into(), prey.into()]));
    }

    // Snapshots of the coarsest run.
    let run = simulate_prey_predator(&problem(first))?;
    let mut snaps = Table::new(&["t", "x", "predator", "prey"]);
    let mut header = vec!["x".to_string()];
    for s in &run.snapshots {
        header.push(format!("predator_t{}", s.t));
        header.push(format!("prey_t{}", s.t));
        for (i, x) in run.x.iter().enumerate() {
            snaps.push(row([s.t.into(), (*x).into(), s.predator[i].into(), s.prey[i].into()]));
        }
    }
    let mut plot = Table::new(&header);
    for (i, x) in run.x.iter().enumerate() {
        let mut r: Vec<Cell> = vec![(*x).into()];
        for s in &run.snapshots {
            r.push(s.predator[i].into());
            r.push(s.prey[i].into());
        }
        plot.push(r);
    }
    let mut out = Artifacts {
        results,
        plot,
        summary: json!({
            "beta": report.beta,
            "prey_extrapolated": report.prey_extrapolated,
            "predator_extrapolated": report.predator_extrapolated,
            "prey_relative_error": report.prey_relative_error,
            "predator_relative_error": report.predator_relative_error,
        }),
        ..Artifacts::default()
    };
    out.extra_csv("snapshots.csv", &snaps);
    Ok(out)
}

fn heat_field(p: &HeatForwardParams) -> CliResult<Artifacts> {
    let initial = p.initial.build((0.0, PI))?;
    let mut problem = HeatProblem::new(initial.clone(), p.intervals, p.times.clone());
    problem.nonlinear = p.nonlinear;
    problem.diffusivity = p.diffusivity;
    problem.eps = p.eps;
    let run = simulate_heat(&problem)?;

    let coeffs = if p.nonlinear || p.oracle_modes == 0 {
        None
    } else {
        Some(sine_coefficients(
            |x| initial.evaluate(x, p.eps).unwrap_or(f64::NAN),
            PI,
            p.oracle_modes,
        )?)
    };
    let mut results = Table::new(&["t", "x", "value", "oracle"]);
    let mut header = vec!["x".to_string()];
    let mut max_err = 0.0f64;
    for (t, u) in &run.snapshots {
        header.push(format!("u_t{t}"));
        for (x, v) in run.x.iter().zip(u) {
            let oracle = coeffs
                .as_ref()
                .map_or(f64::NAN, |b| heat_series(b, PI, p.diffusivity, *t, *x));
            if oracle.is_finite() {
                max_err = max_err.max((v - oracle).abs());
            }
            results.push(row([(*t).into(), (*x).into(), (*v).into(), oracle.into()]));
        }
    }
    let mut plot = Table::new(&header);
    for (i, x) in run.x.iter().enumerate() {
        let mut r: Vec<Cell> = vec![(*x).into()];
        r.extend(run.snapshots.iter().map(|(_, u)| Cell::from(u[i])));
        plot.push(r);
    }
    Ok(Artifacts {
        results,
        plot,
        summary: json!({
            "steps": run.steps,
            "max_oracle_error": coeffs.is_some().then_some(max_err),
        }),
        ..Artifacts::default()
    })
}

fn heat_delta(p: &DeltaVanishingParams) -> CliResult<Artifacts> {
    let phi = TestFunction::new(p.phi.center, p.phi.width)?;
    let psi = p.psi.dirac()?;
    let r = delta_vanishing_check(p.omega, p.t0, &phi, &psi, p.eps0, p.levels, p.cells_per_eps)?;
    let mut results = Table::new(&["eps", "nonlinear", "linear", "kernel"]);
    for ((e, n), l) in r.eps.iter().zip(&r.nonlinear).zip(&r.linear) {
        results.push(row([(*e).into(), (*n).into(), (*l).into(), r.kernel.into()]));
    }
    Ok(Artifacts {
        plot: results.clone(),
        results,
        summary: json!({
            "kernel": r.kernel,
            "decreasing_tail": r.decreasing_tail,
            "class": r.class,
        }),
        ..Artifacts::default()
    })
}

fn heat_backward(p: &HeatBackwardSeriesParams) -> CliResult<Artifacts> {
    if p.points < 2 {
        return Err(Error::InvalidInput("need at least two points".into()).into());
    }
    let xs: Vec<f64> = (0..p.points).map(|j| PI * j as f64 / (p.points - 1) as f64).collect();
    let mut results = Table::new(&["t", "x", "value"]);
    let mut header = vec!["x".to_string()];
    let mut fields = Vec::new();
    let mut rates = Vec::new();
    for &t in &p.times {
        let (field, r) = backward_heat_series(&p.modes, p.k, t, &xs)?;
        for (x, v) in xs.iter().zip(&field) {
            results.push(row([t.into(), (*x).into(), (*v).into()]));
        }
        header.push(format!("u_t{t}"));
        fields.push(field);
        rates = r;
    }
    let mut plot = Table::new(&header);
    for (i, x) in xs.iter().enumerate() {
        let mut r: Vec<Cell> = vec![(*x).into()];
        r.extend(fields.iter().map(|f| Cell::from(f[i])));
        plot.push(r);
    }
    let mut rate_table = Table::new(&["mode", "coefficient", "rate"]);
    for (&(m, b), rate) in p.modes.iter().zip(&rates) {
        rate_table.push(row([m.into(), b.into(), (*rate).into()]));
    }
    let mut out = Artifacts {
        results,
        plot,
        summary: json!({"rates": rates}),
        ..Artifacts::default()
    };
    out.extra_csv("rates.csv", &rate_table);
    Ok(out)
}

fn illposed(p: &IllposedFamilyParams) -> CliResult<Artifacts> {
    let rows = family_report(&p.ns, &p.ts)?;
    let mut results = Table::new(&["n", "t", "log_sup_norm", "sup_norm", "sampled_scaled_sup", "residual"]);
    for r in &rows {
        results.push(row([
            r.n.into(),
            r.t.into(),
            r.log_sup_norm.into(),
            r.sup_norm.into(),
            r.sampled_scaled_sup.into(),
            r.residual.into(),
        ]));
    }
    let mut header = vec!["n".to_string()];
    header.extend(p.ts.iter().map(|t| format!("log_sup_t{t}")));
    let mut plot = Table::new(&header);
    for &n in &p.ns {
        let mut r: Vec<Cell> = vec![n.into()];
        for &t in &p.ts {
            let v = rows.iter().find(|x| x.n == n && x.t == t).map(|x| x.log_sup_norm);
            r.push(v.into());
        }
        plot.push(r);
    }
    Ok(Artifacts {
        results,
        plot,
        summary: json!({"max_residual": rows.iter().map(|r| r.residual).fold(0.0, f64::max)}),
        ..Artifacts::default()
    })
}

fn godunov_scalar_run(p: &GodunovScalarParams) -> CliResult<Artifacts> {
    let grid = UniformGrid::new(p.domain.0, p.domain.1, p.cells)?;
    let init = riemann_cells(&grid, p.x0, p.u_l, p.u_r);
    let ev = godunov_scalar(&init, grid, p.cfl, p.t_final, Boundary::Transmissive)?;
    let c = 0.5 * (p.u_l + p.u_r);
    // Entropy solution: a shock when u_l > u_r, a rarefaction fan otherwise.
    let exact = |x: f64| {
        let xi = (x - p.x0) / ev.t;
        if p.u_l > p.u_r {
            if xi < c {
                p.u_l
            } else {
                p.u_r
            }
        } else {
            xi.clamp(p.u_l, p.u_r)
        }
    };
    let mut results = Table::new(&["x", "u", "exact"]);
    for (x, u) in ev.x.iter().zip(&ev.u) {
        results.push(row([(*x).into(), (*u).into(), exact(*x).into()]));
    }
    let position = (p.u_l > p.u_r).then(|| ev.crossing(c)).flatten();
    let mut out = Artifacts {
        plot: results.clone(),
        results,
        ..Artifacts::default()
    };
    let mut eoc = None;
    if p.u_l > p.u_r && !p.eoc_cells.is_empty() {
        let (rows, order) = shock_position_eoc(p.u_l, p.u_r, &p.eoc_cells, p.cfl, p.t_final)?;
        let mut t = Table::new(&["cells", "position_error"]);
        for (n, e) in &rows {
            t.push(row([(*n).into(), (*e).into()]));
        }
        out.extra_csv("eoc.csv", &t);
        eoc = Some(order);
    }
    out.summary = json!({
        "dx": grid.dx(),
        "t": ev.t,
        "steps": ev.steps,
        "shock_position": position,
        "shock_expected": (p.u_l > p.u_r).then_some(p.x0 + c * ev.t),
        "mass_defect": ev.mass_defect(),
        "eoc_order": eoc,
    });
    Ok(out)
}

fn godunov_system_run(p: &GodunovSystemParams) -> CliResult<Artifacts> {
    p.data.validate()?;
    let grid = UniformGrid::new(p.domain.0, p.domain.1, p.cells)?;
    let init: Vec<State> = grid
        .centers()
        .iter()
        .map(|&x| if x < p.x0 { p.data.left } else { p.data.right })
        .collect();
    let ledger = StatementLedger::mixed();
    let ev = godunov_system(&init, grid, p.cfl, p.t_final, &ledger)?;
    let mut results = Table::new(&["x", "rho", "u", "tau"]);
    for (x, s) in ev.x.iter().zip(&ev.states) {
        results.push(row([(*x).into(), s.rho.into(), s.u.into(), s.tau.into()]));
    }
    let verdict = solve_system_with(&ledger, &p.data, &SolveOptions::without_diagnostics())?;
    let c = verdict.speed();
    let position = ev.density_crossing(0.5 * (p.data.left.rho + p.data.right.rho));
    Ok(Artifacts {
        plot: results.clone(),
        results,
        summary: json!({
            "dx": grid.dx(),
            "t": ev.t,
            "steps": ev.steps,
            "verdict_speed": c,
            "jump_position": position,
            "jump_expected": c.map(|c| p.x0 + c * ev.t),
            "mass_defect": ev.mass_defect(),
        }),
        ..Artifacts::default()
    })
}
