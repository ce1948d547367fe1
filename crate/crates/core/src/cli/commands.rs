//! One function per subcommand.

use serde_json::{json, Value};

use crate::analytic::{
    expected_survivors, expected_survivors_exact, find_c0, ln_failure_bound_infinite_mu, ln_failure_no_cooperation,
    never_hit, ruin_two_sided, ruin_two_sided_numeric, survival_bound_infinite_mu, survival_no_cooperation,
    two_person_exact_exit_probs, two_person_exit_probs, ExitProbs, RuinSpec, TwoPersonSpec,
};
use crate::dynamics::{
    run_replica, run_replica_observed, write_events_jsonl, EngineKind, Mu, SimParams, Snapshots,
};
use crate::error::{Error, Result};
use crate::field::RateField;
use crate::graph::{Graph, GraphMetrics};
use crate::montecarlo::{
    estimate_exit_distribution, estimate_expected_survivors, estimate_survival, first_death_times, ks_two_sample,
    martingale_check, replica_rng, wilson, Certification, EstimateResult, StoppingRule,
};
use crate::row;
use crate::sinks1d::{
    check_eps, conditional_death_check, death_density, detect_sinks, estimate_event_a, profile_csv, Boundary,
    DensityConfig, EventAWindow,
};

use super::report::{Format, Report};
use super::{
    CompareArgs, EnginesArgs, EventAArgs, MartingaleArgs, RuinArgs, SinksArgs, SurvivalArgs, TrajectoryArgs,
    TwoPersonArgs,
};

/// Margin used by `sinks` when the default `(1 - E(phi)) / 2` is not positive.
const FALLBACK_EPS: f64 = 0.05;

/// Offset that separates the graphical engine's replica streams from the
/// rate-driven ones in `engines`.
const ENGINE_SEED_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// Rates are listed in the parameter block only for small graphs.
const MAX_LISTED_RATES: usize = 64;

fn horizon_json(t: f64) -> Value {
    if t.is_finite() {
        json!(t)
    } else {
        json!("inf")
    }
}

fn setup(graph: &crate::graph::GraphKind, phi: &super::RatesArg, seed: u64) -> Result<(Graph, RateField)> {
    let g = Graph::build(graph)?;
    let rates = phi.materialize(g.vertex_count(), seed)?;
    Ok((g, rates))
}

fn rates_json(rates: &RateField) -> Value {
    if rates.len() <= MAX_LISTED_RATES {
        json!(rates.rates())
    } else {
        Value::Null
    }
}

/// Whether `value` lies in the 3-sigma Wilson interval of a proportion,
/// widened to cover every way the censored replicas could have gone.
fn proportion_covers(est: &EstimateResult, value: f64) -> bool {
    let n = est.n_replicas;
    let cens = est.n_censored;
    let decided = n - cens;
    let k = (est.point * decided as f64).round() as u64;
    let (lo, hi) = if cens == 0 {
        wilson(k, decided, 3.0)
    } else {
        (wilson(k, n, 3.0).0, wilson(k + cens, n, 3.0).1)
    };
    value >= lo - 1e-12 && value <= hi + 1e-12
}

fn mean_covers(est: &EstimateResult, value: f64) -> bool {
    (est.point - value).abs() <= 3.0 * est.std_error + 1e-12
}

pub fn survival(a: &SurvivalArgs, seed: u64) -> Result<Report> {
    let (g, rates) = setup(&a.graph, &a.phi, seed)?;
    let metrics = GraphMetrics::new(&g, &rates)?;
    let params = SimParams::new(a.mu, a.c, a.tmax)
        .with_seed(seed)
        .with_engine(a.engine)
        .with_max_events(a.max_events);
    params.validate()?;
    let est = estimate_survival(&g, &rates, &params, &Certification::new(a.delta), a.replicas)?;

    let mut r = Report::new(
        "survival",
        json!({
            "graph": a.graph.to_string(),
            "phi": a.phi.to_string(),
            "rates": rates_json(&rates),
            "n": metrics.n,
            "phi_bar": metrics.phi_bar,
            "distance_sum_max": metrics.dee,
            "c": a.c,
            "mu": a.mu,
            "replicas": a.replicas,
            "t_max": horizon_json(a.tmax),
            "delta": a.delta,
            "engine": a.engine,
            "seed": seed,
        }),
    );
    let (analytic, kind) = match a.mu {
        Mu::Infinite => (Some(survival_bound_infinite_mu(&metrics, a.c)), "lower_bound"),
        m if m.is_zero() => (Some(survival_no_cooperation(&rates, a.c)), "exact"),
        _ => (None, "none"),
    };
    let (b_lo, b_hi) = est.bracket.unwrap_or((est.point, est.point));
    r.row(row!(
        "target" => est.target,
        "point" => est.point,
        "ci_low" => est.ci_low,
        "ci_high" => est.ci_high,
        "n" => est.n_replicas,
        "censored" => est.n_censored,
        "bracket_low" => b_lo,
        "bracket_high" => b_hi,
        "analytic" => analytic,
        "analytic_kind" => kind,
    ));
    match (a.mu, analytic) {
        (Mu::Infinite, Some(bound)) => {
            let upper = b_hi.max(est.point);
            r.check(
                "estimate_above_lower_bound",
                upper + est.half_width() >= bound - 1e-12,
                format!("estimate {upper:.6} + half-width {:.6} vs bound {bound:.6}", est.half_width()),
            );
        }
        (_, Some(exact)) => {
            r.check(
                "estimate_matches_exact",
                proportion_covers(&est, exact),
                format!("estimate {:.6} vs exact {exact:.6} (3-sigma Wilson)", est.point),
            );
        }
        _ => {}
    }
    if est.n_censored > 0 {
        r.warn(format!(
            "{} of {} replicas hit the horizon or event cap undecided",
            est.n_censored, est.n_replicas
        ));
    }
    Ok(r)
}

pub fn two_person(a: &TwoPersonArgs, seed: u64) -> Result<Report> {
    let spec = TwoPersonSpec::new(a.phi_x, a.phi_y, a.c);
    spec.check_region()?;
    let closed = two_person_exit_probs(&spec)?;
    let exact = two_person_exact_exit_probs(&spec)?;
    let e_inf_closed = expected_survivors(&spec, Mu::Infinite)?;
    let e_inf_exact = expected_survivors_exact(&spec)?;
    let e0 = expected_survivors(&spec, Mu::Finite(0.0))?;

    let mut r = Report::new(
        "two-person",
        json!({"phi_x": a.phi_x, "phi_y": a.phi_y, "c": a.c, "replicas": a.replicas, "seed": seed}),
    );
    let mc = if a.replicas > 0 {
        Some((
            estimate_exit_distribution(&spec, a.replicas, seed)?,
            estimate_expected_survivors(&spec, Mu::Infinite, a.replicas, seed)?,
            estimate_expected_survivors(&spec, Mu::Finite(0.0), a.replicas, seed)?,
        ))
    } else {
        None
    };

    let mut exact_ok = true;
    let mut closed_ok = true;
    let mut add = |r: &mut Report, name: String, cf: f64, ex: f64, est: Option<&EstimateResult>, proportion: bool| {
        let covers = |v: f64| {
            est.map(|e| {
                if proportion {
                    proportion_covers(e, v)
                } else {
                    mean_covers(e, v)
                }
            })
        };
        let (cf_in, ex_in) = (covers(cf), covers(ex));
        exact_ok &= ex_in.unwrap_or(true);
        closed_ok &= cf_in.unwrap_or(true);
        r.row(row!(
            "quantity" => name,
            "closed_form" => cf,
            "exact" => ex,
            "mc" => est.map(|e| e.point),
            "ci_low" => est.map(|e| e.ci_low),
            "ci_high" => est.map(|e| e.ci_high),
            "closed_form_within_3sigma" => cf_in,
            "exact_within_3sigma" => ex_in,
        ));
    };
    for (i, &(x, y)) in ExitProbs::STATES.iter().enumerate() {
        let est = mc.as_ref().map(|m| &m.0.estimates[i]);
        add(&mut r, format!("p({x},{y})"), closed.ordered()[i], exact.ordered()[i], est, true);
    }
    add(&mut r, "E_inf".into(), e_inf_closed, e_inf_exact, mc.as_ref().map(|m| &m.1), false);
    add(&mut r, "E_0".into(), e0, e0, mc.as_ref().map(|m| &m.2), false);

    r.check(
        "cooperation_lowers_expected_survivors",
        e_inf_exact < e0,
        format!("E_inf {e_inf_exact:.6} < E_0 {e0:.6} (exact exit law)"),
    );
    r.check(
        "cooperation_lowers_expected_survivors_closed_form",
        e_inf_closed < e0,
        format!("E_inf {e_inf_closed:.6} < E_0 {e0:.6} (closed-form exit law)"),
    );
    if let Some((exits, _, _)) = &mc {
        r.check(
            "mc_matches_exact_law",
            exact_ok,
            format!("{} replicas, {} censored", exits.n_replicas, exits.n_censored),
        );
        if !closed_ok {
            r.warn("Monte Carlo rejects the closed-form exit law at 3 sigma; the exact column solves the chain directly");
        }
    }
    Ok(r)
}

pub fn sinks(a: &SinksArgs, seed: u64) -> Result<Report> {
    let spec = a.phi;
    spec.validate()?;
    let mean = spec.mean();
    let mut warnings = Vec::new();
    if mean >= 1.0 {
        warnings.push(format!(
            "E(phi) = {mean} >= 1: the positive sink density guarantee needs E(phi) < 1"
        ));
    }
    let eps = match a.eps {
        Some(e) => e,
        None if spec.default_epsilon() > 0.0 => spec.default_epsilon(),
        None => {
            warnings.push(format!(
                "default margin (1 - E(phi)) / 2 is not positive; using eps = {FALLBACK_EPS}"
            ));
            FALLBACK_EPS
        }
    };
    check_eps(eps)?;
    if a.c.0.is_empty() {
        return Err(Error::InvalidParameter("at least one value of c is required".into()));
    }
    let horizon = a.horizon.min(a.ring.saturating_sub(1) / 2);
    let checkpoints = a.checkpoints.as_ref().map(|l| l.0.clone()).unwrap_or_default();

    let mut r = Report::new(
        "sinks",
        json!({
            "phi": spec.to_string(),
            "mean_phi": mean,
            "ring": a.ring,
            "c": a.c.0,
            "mu": a.mu,
            "t_max": horizon_json(a.tmax),
            "replicas": a.replicas,
            "eps": eps,
            "horizon": horizon,
            "mode": crate::sinks1d::FieldMode::from(a.mode),
            "seed": seed,
        }),
    );
    for w in warnings {
        r.warn(w);
    }

    let configs: Vec<DensityConfig> = a
        .c
        .0
        .iter()
        .map(|&c| DensityConfig {
            eps: Some(eps),
            horizon,
            checkpoints: checkpoints.clone(),
            mode: a.mode.into(),
            ..DensityConfig::new(spec, a.ring, c, a.mu, a.tmax, a.replicas, seed)
        })
        .collect();
    let mut reports = Vec::new();
    for cfg in &configs {
        let rep = death_density(cfg)?;
        let dominates = rep.death_dominates_sinks();
        r.row(row!(
            "c" => cfg.c,
            "death_density" => rep.death.point,
            "death_se" => rep.death.std_error,
            "sink_density" => rep.sink.point,
            "sink_se" => rep.sink.std_error,
            "sinks_dead" => rep.sinks_dead.point,
            "dominates" => dominates,
        ));
        r.check(
            &format!("death_density_c{}_at_least_sink_density", cfg.c),
            dominates,
            format!(
                "death {:.6} (se {:.2e}) vs sinks {:.6} (se {:.2e})",
                rep.death.point, rep.death.std_error, rep.sink.point, rep.sink.std_error
            ),
        );
        reports.push(rep);
    }
    let first = &reports[0];
    if mean < 1.0 {
        r.check(
            "sink_density_positive",
            first.sink.ci_low > 0.0,
            format!("95% interval [{:.6}, {:.6}]", first.sink.ci_low, first.sink.ci_high),
        );
    }
    if reports.len() > 1 {
        r.check(
            "sink_flags_identical_across_c",
            reports.iter().all(|x| x.sink_flags == first.sink_flags),
            format!("{} values of c, {} replicas", reports.len(), a.replicas),
        );
    }
    if !first.sinks_dead_by.is_empty() && !checkpoints.is_empty() {
        for (t, f) in &first.sinks_dead_by {
            r.row(row!("c" => configs[0].c, "t" => t, "sinks_dead" => f));
        }
    }

    if let Some(path) = &a.profile {
        let cfg = &configs[0];
        let field = cfg.field(0)?;
        let flags = detect_sinks(&field, eps, horizon, Boundary::Periodic)?;
        let g = Graph::cycle(a.ring)?;
        let params = SimParams::new(cfg.mu, cfg.c, cfg.t_max);
        let tr = run_replica(&g, &field, &params, &StoppingRule::AllDead, &mut replica_rng(seed, 1))?;
        std::fs::write(path, profile_csv(&field, &flags, &tr.final_config))?;
    }
    Ok(r)
}

pub fn ruin(a: &RuinArgs) -> Result<Report> {
    let spec = RuinSpec::new(a.phi_bar, a.start, a.lower, a.upper);
    let mut r = Report::new(
        "ruin",
        json!({"phi_bar": a.phi_bar, "start": a.start, "lower": a.lower, "upper": a.upper}),
    );
    let (name, closed, oracle) = match a.upper {
        Some(_) => {
            let oracle = ruin_two_sided_numeric(&spec)?;
            let closed = if a.phi_bar == 1.0 {
                r.warn("no closed form at mean rate 1; showing the linear-solve value only");
                None
            } else {
                Some(ruin_two_sided(&spec)?)
            };
            ("reach_upper_first", closed, oracle)
        }
        None => {
            let closed = never_hit(&spec)?;
            // A far upper barrier converges to the one-sided limit.
            let oracle = if a.phi_bar > 1.0 && a.start > a.lower {
                let k = ((14.0 * 10f64.ln() / a.phi_bar.ln()).ceil() as i64).clamp(1, 1_000_000);
                ruin_two_sided_numeric(&RuinSpec::new(a.phi_bar, a.start, a.lower, Some(a.start + k)))?
            } else {
                0.0
            };
            ("never_hit_lower", Some(closed), oracle)
        }
    };
    let diff = closed.map(|c| (c - oracle).abs());
    r.row(row!("quantity" => name, "closed_form" => closed, "oracle" => oracle, "abs_diff" => diff));
    r.row(row!(
        "quantity" => "ruin",
        "closed_form" => closed.map(|c| 1.0 - c),
        "oracle" => 1.0 - oracle,
        "abs_diff" => diff,
    ));
    if let Some(d) = diff {
        r.check("closed_form_matches_oracle", d <= 1e-9, format!("|difference| = {d:.3e}"));
    }
    Ok(r)
}

pub fn trajectory(a: &TrajectoryArgs, seed: u64, format: Format) -> Result<String> {
    if !a.tmax.is_finite() {
        return Err(Error::InvalidParameter("trajectory needs a finite --tmax".into()));
    }
    let (g, rates) = setup(&a.graph, &a.phi, seed)?;
    let params = SimParams::new(a.mu, a.c, a.tmax).with_seed(seed).with_engine(a.engine);
    params.validate()?;
    let mut rng = replica_rng(seed, 0);
    match format {
        Format::Csv => {
            if !(a.dt > 0.0 && a.dt.is_finite()) {
                return Err(Error::InvalidParameter(format!("--dt must be positive, got {}", a.dt)));
            }
            let mut snaps = Snapshots::every(a.dt);
            run_replica_observed(&g, &rates, &params, &StoppingRule::Horizon, &mut rng, &mut snaps)?;
            Ok(snaps.to_csv())
        }
        Format::Json => {
            let tr = run_replica(&g, &rates, &params.recording(), &StoppingRule::Horizon, &mut rng)?;
            let mut buf = Vec::new();
            write_events_jsonl(&tr.events, &mut buf)?;
            Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
        }
        Format::Text => {
            let tr = run_replica(&g, &rates, &params, &StoppingRule::Horizon, &mut rng)?;
            let mut r = Report::new(
                "trajectory",
                json!({
                    "graph": a.graph.to_string(),
                    "phi": a.phi.to_string(),
                    "c": a.c,
                    "mu": a.mu,
                    "t_max": a.tmax,
                    "engine": a.engine,
                    "seed": seed,
                }),
            );
            for (z, &coins) in tr.final_config.coins().iter().enumerate() {
                r.row(row!(
                    "vertex" => z,
                    "phi" => rates.rates()[z],
                    "coins" => coins,
                    "death_time" => tr.death_times[z],
                ));
            }
            r.params.insert("reason".into(), json!(tr.reason));
            r.params.insert("events".into(), json!(tr.n_events));
            Ok(r.render(Format::Text))
        }
    }
}

pub fn compare(a: &CompareArgs, seed: u64) -> Result<Report> {
    let (g, rates) = setup(&a.graph, &a.phi, seed)?;
    let metrics = GraphMetrics::new(&g, &rates)?;
    let c0 = find_c0(&rates, metrics.dee, a.c_max);
    let mut r = Report::new(
        "compare",
        json!({
            "graph": a.graph.to_string(),
            "phi": a.phi.to_string(),
            "rates": rates_json(&rates),
            "phi_bar": metrics.phi_bar,
            "distance_sum_max": metrics.dee,
            "c_max": a.c_max,
            "c0": c0,
        }),
    );
    let mut cs: Vec<u64> = [0u64, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000]
        .into_iter()
        .filter(|&c| c <= a.c_max)
        .collect();
    cs.extend(c0);
    cs.push(a.c_max);
    cs.sort_unstable();
    cs.dedup();
    for c in cs {
        let lhs = ln_failure_no_cooperation(&rates, c);
        let rhs = ln_failure_bound_infinite_mu(&metrics, c);
        r.row(row!(
            "c" => c,
            "ln_fail_no_coop" => finite_or_null(lhs),
            "ln_fail_bound_coop" => finite_or_null(rhs),
            "no_coop_below_bound" => lhs >= rhs - 1e-12 * rhs.abs().max(1.0),
        ));
    }
    r.check(
        "finite_c0",
        c0.is_some(),
        match c0 {
            Some(c) => format!("survival without cooperation stays below the bound for c in [{c}, {}]", a.c_max),
            None => format!("comparison fails at c = {}", a.c_max),
        },
    );
    Ok(r)
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x < 0.0 {
        json!("-inf")
    } else {
        json!("inf")
    }
}

pub fn martingale(a: &MartingaleArgs, seed: u64) -> Result<Report> {
    let (g, rates) = setup(&a.graph, &a.phi, seed)?;
    let m = martingale_check(&g, &rates, a.mu, a.c, &a.times.0, a.replicas, seed)?;
    let mut r = Report::new(
        "martingale",
        json!({
            "graph": a.graph.to_string(),
            "phi": a.phi.to_string(),
            "phi_bar": m.phi_bar,
            "c": a.c,
            "mu": a.mu,
            "replicas": a.replicas,
            "seed": seed,
        }),
    );
    for i in 0..m.times.len() {
        let se = m.std_errors[i];
        let z = if se > 0.0 { (m.means[i] - m.initial) / se } else { 0.0 };
        r.row(row!("t" => m.times[i], "mean" => m.means[i], "std_error" => se, "initial" => m.initial, "z_score" => z));
    }
    r.check("constant_mean", m.constant, "every mean within 3 standard errors of the initial value");
    Ok(r)
}

pub fn engines(a: &EnginesArgs, seed: u64) -> Result<Report> {
    let (g, rates) = setup(&a.graph, &a.phi, seed)?;
    let rate = first_death_times(&g, &rates, a.mu, a.c, EngineKind::RateDriven, a.tmax, a.replicas, seed)?;
    let graphical = first_death_times(
        &g,
        &rates,
        a.mu,
        a.c,
        EngineKind::Graphical,
        a.tmax,
        a.replicas,
        seed ^ ENGINE_SEED_SALT,
    )?;
    let ks = ks_two_sample(&rate, &graphical, a.alpha);
    let mut r = Report::new(
        "engines",
        json!({
            "graph": a.graph.to_string(),
            "phi": a.phi.to_string(),
            "c": a.c,
            "mu": a.mu,
            "t_max": horizon_json(a.tmax),
            "replicas": a.replicas,
            "alpha": a.alpha,
            "seed": seed,
            "ks_statistic": ks.statistic,
            "ks_critical": ks.critical,
            "ks_p_value": ks.p_value,
        }),
    );
    for (name, times) in [("rate_driven", &rate), ("graphical", &graphical)] {
        let mut finite: Vec<f64> = times.iter().copied().filter(|t| t.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        let mean = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
        let median = (!finite.is_empty()).then(|| finite[finite.len() / 2]);
        r.row(row!(
            "engine" => name,
            "replicas" => times.len(),
            "mean" => mean,
            "median" => median,
            "censored" => times.len() - finite.len(),
        ));
    }
    r.check(
        "same_first_death_law",
        !ks.rejects(),
        format!("D = {:.5}, critical {:.5}, p = {:.4}", ks.statistic, ks.critical, ks.p_value),
    );
    Ok(r)
}

pub fn event_a(a: &EventAArgs, seed: u64) -> Result<Report> {
    let window = EventAWindow::new(a.radius.unwrap_or(a.c as usize + 3), a.c)?;
    let results = conditional_death_check(&a.phi, &window, &a.mu.0, a.samples, seed)?;
    let mut r = Report::new(
        "event-a",
        json!({
            "phi": a.phi.to_string(),
            "c": a.c,
            "radius": window.radius,
            "samples": a.samples,
            "seed": seed,
        }),
    );
    for d in &results {
        r.row(row!("mu" => d.mu, "samples" => d.samples, "dead_at_one" => d.dead_at_one));
        r.check(
            &format!("origin_dead_mu_{}", d.mu),
            d.all_dead(),
            format!("{} of {} conditioned draws", d.dead_at_one, d.samples),
        );
    }
    if a.estimate_samples > 0 {
        let est = estimate_event_a(&a.phi, &window, a.estimate_samples, seed)?;
        r.params.insert("event_probability".into(), json!(est.point));
        r.params.insert("event_probability_ci".into(), json!([est.ci_low, est.ci_high]));
    }
    Ok(r)
}
