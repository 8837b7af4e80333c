//! Subcommand bodies. Each returns the tables it produces.

use infospec::analysis::{
    channel_diagnostics, channel_rates, check_converse, check_direct, check_domination, check_eps,
    check_product_domination, check_strict_domination, default_threshold, entropy_spectra,
    information_spectra, separation_verdict, source_diagnostics, source_rates, Condition,
    ConditionTrace, ConverseDiagnostics, RateReport, SeparationSettings, ThresholdSchedule,
};
use infospec::bounds::{
    feinstein_bound, gamma_values, separation_bound_from_spectra, verdu_han_bound, BoundReport,
};
use infospec::coding::{
    brute_force_optimal_error, ensemble_average_error, induced_joint, sample_threshold_codes,
    two_step_code_with,
};
use infospec::models::{information_spectrum, joint_density_spectrum};
use infospec::{Error, Result, Spectrum};

use crate::output::{num, opt_num, Table};
use crate::scenario::{ConditionName, Scenario, ThresholdSpec};

pub struct Context<'a> {
    pub scenario: &'a Scenario,
    midpoint: std::sync::OnceLock<f64>,
}

impl<'a> Context<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Context {
            scenario,
            midpoint: std::sync::OnceLock::new(),
        }
    }

    fn midpoint(&self) -> Result<f64> {
        if let Some(m) = self.midpoint.get() {
            return Ok(*m);
        }
        let s = self.scenario;
        let candidates = s.independent_inputs();
        if candidates.is_empty() {
            return Err(Error::InvalidArgument(
                "a midpoint threshold needs at least one source-independent input".into(),
            ));
        }
        let m = default_threshold(
            &s.source.0,
            &s.channel.0,
            &candidates,
            s.rate_grid(),
            s.eps,
            &s.budget(),
        )?;
        Ok(*self.midpoint.get_or_init(|| m))
    }

    fn threshold(&self, spec: Option<&ThresholdSpec>) -> Result<ThresholdSchedule> {
        spec.unwrap_or(&ThresholdSpec::Midpoint)
            .resolve(|| self.midpoint())
    }

    fn c_schedule(&self) -> Result<ThresholdSchedule> {
        self.threshold(self.scenario.c_schedule.as_ref())
    }

    fn d_schedule(&self) -> Result<ThresholdSchedule> {
        match &self.scenario.d_schedule {
            Some(d) => self.threshold(Some(d)),
            None => self.c_schedule(),
        }
    }
}

fn thresholds_at(s: &ThresholdSchedule, idx: usize) -> f64 {
    match s {
        ThresholdSchedule::Constant(c) => *c,
        ThresholdSchedule::Explicit(v) => v[idx],
        ThresholdSchedule::Alternating { low, high } => {
            if idx % 2 == 0 {
                *low
            } else {
                *high
            }
        }
    }
}

fn spectrum_rows(t: &mut Table, kind: &str, input: &str, s: &Spectrum) {
    for a in s.atoms() {
        t.push(vec![
            kind.into(),
            input.into(),
            s.n().to_string(),
            num(a.value),
            num(a.mass),
        ]);
    }
    if s.pos_inf_mass() > 0.0 {
        t.push(vec![
            kind.into(),
            input.into(),
            s.n().to_string(),
            num(f64::INFINITY),
            num(s.pos_inf_mass()),
        ]);
    }
}

pub fn spectrum(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let b = s.budget();
    let mut t = Table::new("spectrum", &["kind", "input", "n", "value", "mass"]);
    for sp in entropy_spectra(&s.source.0, &s.n_grid, &b)? {
        spectrum_rows(&mut t, "entropy", "", &sp);
    }
    for (name, input) in s.named_inputs() {
        for &n in &s.n_grid {
            let a = if input.is_independent() {
                information_spectrum(&s.channel.0, &input, n, &b)?
            } else {
                joint_density_spectrum(&s.source.0, &input, &s.channel.0, n, &b)?.marginal_a()
            };
            spectrum_rows(&mut t, "information", &name, &a);
        }
    }
    Ok(vec![t])
}

fn bound_row(t: &mut Table, input: &str, threshold: Option<f64>, r: &BoundReport) {
    t.push(vec![
        r.kind.name().into(),
        input.into(),
        r.n.to_string(),
        num(r.gamma),
        opt_num(threshold),
        num(r.spectral_term),
        num(r.exponential_term),
        num(r.bound_value),
        num(r.clamped),
    ]);
}

pub fn bounds(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let b = s.budget();
    let schedule = gamma_values(&s.gamma(), &s.n_grid)?;
    let has_independent = s.inputs.iter().any(|i| i.law.0.is_independent());
    let cs = if has_independent {
        Some(ctx.c_schedule()?)
    } else {
        None
    };
    let mut t = Table::new(
        "bounds",
        &[
            "bound",
            "input",
            "n",
            "gamma",
            "threshold",
            "spectral_term",
            "exponential_term",
            "bound_value",
            "clamped",
        ],
    );
    for (name, input) in s.named_inputs() {
        for (idx, &n) in s.n_grid.iter().enumerate() {
            let gammas = s
                .bound_gammas
                .clone()
                .unwrap_or_else(|| vec![schedule.values[idx]]);
            let joint = joint_density_spectrum(&s.source.0, &input, &s.channel.0, n, &b)?;
            let marginals = match (&cs, input.is_independent()) {
                (Some(c), true) => Some((
                    joint.marginal_b(),
                    joint.marginal_a(),
                    thresholds_at(c, idx),
                )),
                _ => None,
            };
            for &g in &gammas {
                bound_row(&mut t, &name, None, &feinstein_bound(&joint, g)?);
                if input.is_encoder() {
                    bound_row(&mut t, &name, None, &verdu_han_bound(&joint, g)?);
                }
                if let Some((eb, ia, c)) = &marginals {
                    bound_row(
                        &mut t,
                        &name,
                        Some(*c),
                        &separation_bound_from_spectra(eb, ia, *c, g)?,
                    );
                }
            }
        }
    }
    Ok(vec![t])
}

pub fn code(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let b = s.budget();
    let Some(spec) = &s.code else {
        return Err(Error::InvalidArgument(
            "scenario has no `code` section".into(),
        ));
    };
    let gammas = gamma_values(&s.gamma(), &spec.ns)?.values;
    let rate = match spec.rate {
        Some(r) => r,
        None => ctx.midpoint()?,
    };
    let mut t = Table::new(
        "codes",
        &[
            "kind",
            "input",
            "n",
            "gamma",
            "sample",
            "rate",
            "messages",
            "average_error",
            "max_error",
            "source_error",
            "ensemble_error",
            "bound_value",
        ],
    );
    for (name, input) in s.named_inputs() {
        for (&n, &g) in spec.ns.iter().zip(&gammas) {
            if input.is_independent() {
                let o = two_step_code_with(
                    &s.source.0,
                    &s.channel.0,
                    &input,
                    rate,
                    g,
                    n,
                    s.seed(),
                    spec.decoding.into(),
                    &b,
                )?;
                t.push(vec![
                    "two_step".into(),
                    name.clone(),
                    n.to_string(),
                    num(g),
                    String::new(),
                    num(rate),
                    o.messages.to_string(),
                    num(o.report.average_error),
                    num(o.report.max_error),
                    num(o.source_error),
                    opt_num(o.ensemble_error),
                    num(o.bound.bound_value),
                ]);
            }
            if spec.samples > 0 && !input.is_encoder() {
                let ensemble = ensemble_average_error(&s.source.0, &input, &s.channel.0, g, n, &b)?;
                let joint = joint_density_spectrum(&s.source.0, &input, &s.channel.0, n, &b)?;
                let bound = feinstein_bound(&joint, g)?.bound_value;
                let codes = sample_threshold_codes(
                    &s.source.0,
                    &input,
                    &s.channel.0,
                    g,
                    n,
                    spec.samples,
                    s.seed(),
                    &b,
                )?;
                for (i, (_, r)) in codes.iter().enumerate() {
                    t.push(vec![
                        "threshold".into(),
                        name.clone(),
                        n.to_string(),
                        num(g),
                        i.to_string(),
                        String::new(),
                        String::new(),
                        num(r.average_error),
                        num(r.max_error),
                        String::new(),
                        num(ensemble),
                        num(bound),
                    ]);
                }
            }
        }
    }
    Ok(vec![t])
}

pub fn oracle(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let b = s.budget();
    let ns = s
        .oracle
        .as_ref()
        .map(|o| o.ns.clone())
        .unwrap_or_else(|| vec![s.n_grid[0]]);
    let gammas = gamma_values(&s.gamma(), &ns)?.values;
    let mut t = Table::new(
        "oracle",
        &["n", "optimal_error", "gamma", "verdu_han_bound"],
    );
    for (&n, &g) in ns.iter().zip(&gammas) {
        let (err, code) = brute_force_optimal_error(&s.source.0, &s.channel.0, n, &b)?;
        let joint = induced_joint(&code, &s.source.0, &s.channel.0, &b)?;
        let vh = verdu_han_bound(&joint, g)?;
        t.push(vec![n.to_string(), num(err), num(g), num(vh.bound_value)]);
    }
    Ok(vec![t])
}

fn trace_rows(t: &mut Table, input: &str, trace: &ConditionTrace) {
    for r in &trace.per_n_terms {
        let (src, chn) = match trace.condition {
            Condition::Direct
            | Condition::Converse
            | Condition::EpsDirect
            | Condition::EpsConverse => (String::new(), String::new()),
            _ => (opt_num(r.term("source")), opt_num(r.term("channel"))),
        };
        t.push(vec![
            trace.condition.name().into(),
            input.into(),
            r.n.to_string(),
            num(r.gamma),
            opt_num(r.threshold),
            src,
            chn,
            num(r.value),
            opt_num(trace.eps),
            trace.verdict.name().into(),
            trace.boundary_flagged.to_string(),
        ]);
    }
}

pub fn check(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let b = s.budget();
    let g = s.gamma();
    let wanted = |c: ConditionName| s.conditions.as_ref().map_or(true, |cs| cs.contains(&c));
    let mut t = Table::new(
        "check",
        &[
            "condition",
            "input",
            "n",
            "gamma_n",
            "threshold",
            "term_source",
            "term_channel",
            "sum",
            "eps",
            "verdict",
            "boundary_flagged",
        ],
    );
    let mut implications = Table::new("implication", &["input", "implication_holds"]);
    let needs_thresholds = [
        ConditionName::StrictDomination,
        ConditionName::Domination,
        ConditionName::ProductDomination,
    ]
    .into_iter()
    .any(wanted);
    let schedules = if needs_thresholds {
        Some((ctx.c_schedule()?, ctx.d_schedule()?))
    } else {
        None
    };
    let (src, ch, grid) = (&s.source.0, &s.channel.0, &s.n_grid);
    for (name, input) in s.named_inputs() {
        let mut traces = Vec::new();
        if input.is_encoder() {
            if wanted(ConditionName::Converse) {
                traces.push(check_converse(src, &input, ch, &g, grid, &b)?);
            }
            if let (true, Some(e)) = (wanted(ConditionName::EpsConverse), s.eps_level) {
                traces.push(check_eps(src, &input, ch, &g, grid, e, true, &b)?);
            }
        } else {
            if wanted(ConditionName::Direct) {
                traces.push(check_direct(src, &input, ch, &g, grid, &b)?);
            }
            if let (true, Some(e)) = (wanted(ConditionName::EpsDirect), s.eps_level) {
                traces.push(check_eps(src, &input, ch, &g, grid, e, false, &b)?);
            }
        }
        if let Some((c, d)) = &schedules {
            if wanted(ConditionName::StrictDomination) {
                traces.push(check_strict_domination(src, &input, ch, c, &g, grid, &b)?);
            }
            if wanted(ConditionName::Domination) {
                traces.push(check_domination(src, &input, ch, c, &g, grid, &b)?);
            }
            if wanted(ConditionName::ProductDomination) {
                let trace = check_product_domination(src, &input, ch, d, &g, grid, Some(c), &b)?;
                if let Some(h) = trace.implication_holds {
                    implications.push(vec![name.clone(), h.to_string()]);
                }
                traces.push(trace);
            }
        }
        for trace in &traces {
            trace_rows(&mut t, &name, trace);
        }
    }
    let mut out = vec![t];
    if !implications.rows.is_empty() {
        out.push(implications);
    }
    Ok(out)
}

fn rate_rows(t: &mut Table, th: &mut Table, reports: &[RateReport]) {
    for r in reports {
        let inputs = r.inputs_searched.join(";");
        t.push(vec![
            r.quantity.name().into(),
            inputs.clone(),
            num(r.value),
            num(r.estimate.estimate),
            num(r.estimate.extrapolated),
            r.estimate.mode.name().into(),
            num(r.estimate.eps),
            r.estimate.converged.to_string(),
        ]);
        for (&n, &v) in r.estimate.n_grid.iter().zip(&r.estimate.per_n_threshold) {
            th.push(vec![
                r.quantity.name().into(),
                inputs.clone(),
                n.to_string(),
                num(v),
            ]);
        }
    }
}

pub fn rates(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let b = s.budget();
    let mut t = Table::new(
        "rates",
        &[
            "quantity",
            "inputs",
            "value",
            "raw_estimate",
            "extrapolated",
            "mode",
            "eps",
            "converged",
        ],
    );
    let mut th = Table::new("rate_thresholds", &["quantity", "inputs", "n", "threshold"]);
    rate_rows(
        &mut t,
        &mut th,
        &source_rates(&s.source.0, s.rate_grid(), s.eps, &b)?,
    );
    let candidates = s.independent_inputs();
    if !candidates.is_empty() {
        rate_rows(
            &mut t,
            &mut th,
            &channel_rates(&s.channel.0, &candidates, s.rate_grid(), s.eps, &b)?,
        );
    }
    Ok(vec![t, th])
}

fn diagnostic_rows(
    d: &mut Table,
    st: &mut Table,
    subject: &str,
    input: &str,
    diag: &ConverseDiagnostics,
) {
    let rows = [
        ("strong_converse", diag.strong_gap, diag.strong_converse),
        ("information_stability", f64::NAN, diag.information_stable),
        (
            "semi_strong_converse_heuristic",
            diag.semi_strong_gap,
            diag.semi_strong_heuristic,
        ),
    ];
    for (what, gap, pass) in rows {
        let gap = if gap.is_nan() {
            String::new()
        } else {
            num(gap)
        };
        d.push(vec![
            subject.into(),
            input.into(),
            what.into(),
            gap,
            pass.to_string(),
        ]);
    }
    for r in &diag.stability {
        st.push(vec![
            subject.into(),
            input.into(),
            r.n.to_string(),
            num(r.delta),
            num(r.probability),
        ]);
    }
}

pub fn diagnostics(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let b = s.budget();
    let mut d = Table::new(
        "diagnostics",
        &["subject", "input", "diagnostic", "gap", "pass"],
    );
    let mut st = Table::new(
        "stability",
        &["subject", "input", "n", "delta", "probability"],
    );
    let spectra = entropy_spectra(&s.source.0, s.rate_grid(), &b)?;
    diagnostic_rows(
        &mut d,
        &mut st,
        "source",
        "",
        &source_diagnostics(&spectra, s.eps)?,
    );
    for (name, input) in s.independent_inputs() {
        let spectra = information_spectra(&s.channel.0, &input, s.rate_grid(), &b)?;
        diagnostic_rows(
            &mut d,
            &mut st,
            "channel",
            &name,
            &channel_diagnostics(&spectra, s.eps)?,
        );
    }
    Ok(vec![d, st])
}

pub fn separation(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let candidates = s.independent_inputs();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let settings = SeparationSettings {
        eps: s.eps,
        gamma: s.gamma(),
        seed: s.seed(),
        ..SeparationSettings::default()
    };
    let v = separation_verdict(
        &s.source.0,
        &s.channel.0,
        &candidates,
        s.rate_grid(),
        &settings,
        &s.budget(),
    )?;
    let mut t = Table::new("separation", &["key", "value"]);
    let rows = [
        ("R_f", num(v.rf)),
        ("underline_R_f", num(v.underline_rf)),
        ("C_lower", num(v.c_lower)),
        ("overline_C_lower", num(v.overline_c_lower)),
        ("separable", v.separable.to_string()),
        ("witness_rate", opt_num(v.witness_rate)),
        ("optimistic_margin", num(v.optimistic_margin)),
        ("pessimistic_margin", num(v.pessimistic_margin)),
        (
            "necessary_conditions_hold",
            v.necessary_conditions_hold.to_string(),
        ),
    ];
    for (k, val) in rows {
        t.push(vec![k.into(), val]);
    }
    let mut w = Table::new(
        "witness",
        &[
            "n",
            "messages",
            "average_error",
            "max_error",
            "source_error",
            "ensemble_error",
            "bound_value",
        ],
    );
    for o in &v.witness {
        w.push(vec![
            o.code.n.to_string(),
            o.messages.to_string(),
            num(o.report.average_error),
            num(o.report.max_error),
            num(o.source_error),
            opt_num(o.ensemble_error),
            num(o.bound.bound_value),
        ]);
    }
    Ok(vec![t, w])
}

pub fn report(ctx: &Context) -> Result<Vec<Table>> {
    let s = ctx.scenario;
    let mut out = Vec::new();
    out.extend(spectrum(ctx)?);
    out.extend(bounds(ctx)?);
    out.extend(check(ctx)?);
    out.extend(rates(ctx)?);
    out.extend(diagnostics(ctx)?);
    out.extend(separation(ctx)?);
    if s.code.is_some() {
        out.extend(code(ctx)?);
    }
    if s.oracle.is_some() {
        out.extend(oracle(ctx)?);
    }
    Ok(out)
}
