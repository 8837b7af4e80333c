//! Finite-n evaluation of transmissibility conditions, rate and capacity
//! estimates, and converse-property diagnostics.
//!
//! The conditions of interest are limits as `n -> inf`. Here they are traced
//! on a finite grid of blocklengths and summarised by a three-way verdict
//! that never claims the limit itself.

use rayon::prelude::*;

use crate::bounds::{gamma_values, GammaSchedule};
use crate::coding::{two_step_code_with, ChannelDecoding, TwoStepOutcome};
use crate::error::{Error, Result};
use crate::models::{
    entropy_spectrum, information_spectrum, joint_density_spectrum, Budget, ChannelModel,
    InputModel, SourceModel,
};
use crate::spectrum::{
    estimate_plim, JointSpectrum, LimitEstimate, LimitMode, Spectrum, STABILIZATION_TOL,
};

/// Margin above the target level used by the verdict rule.
pub const VERDICT_MARGIN: f64 = 0.05;
/// Boundary mass at the final grid point above which a verdict is withheld.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;
/// Largest p-limsup/p-liminf gap still read as the strong converse property.
pub const STRONG_CONVERSE_TOL: f64 = 0.02;
/// Tolerance for the necessary rate inequalities.
pub const RATE_TOL: f64 = STABILIZATION_TOL;
/// Default tail level for limit estimators.
pub const DEFAULT_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Direct,
    Converse,
    StrictDomination,
    Domination,
    ProductDomination,
    EpsDirect,
    EpsConverse,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Direct => "direct",
            Condition::Converse => "converse",
            Condition::StrictDomination => "strict_domination",
            Condition::Domination => "domination",
            Condition::ProductDomination => "product_domination",
            Condition::EpsDirect => "eps_direct",
            Condition::EpsConverse => "eps_converse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    SatisfiedOnGrid,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::SatisfiedOnGrid => "satisfied-on-grid",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Threshold sequence `c_n` or `d_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSchedule {
    Constant(f64),
    /// One value per grid point.
    Explicit(Vec<f64>),
    /// `low` at even grid positions, `high` at odd ones.
    Alternating {
        low: f64,
        high: f64,
    },
}

impl ThresholdSchedule {
    fn values(&self, len: usize) -> Result<Vec<f64>> {
        match self {
            ThresholdSchedule::Constant(c) => Ok(vec![*c; len]),
            ThresholdSchedule::Explicit(cs) if cs.len() == len => Ok(cs.clone()),
            ThresholdSchedule::Explicit(cs) => Err(Error::InvalidArgument(format!(
                "threshold schedule has {} values for {len} grid points",
                cs.len()
            ))),
            ThresholdSchedule::Alternating { low, high } => Ok((0..len)
                .map(|i| if i % 2 == 0 { *low } else { *high })
                .collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub gamma: f64,
    /// `c_n` or `d_n` for domination-type conditions.
    pub threshold: Option<f64>,
    /// Named probabilities making up the tracked value.
    pub terms: Vec<(&'static str, f64)>,
    /// The tracked quantity (a probability, or a sum of two).
    pub value: f64,
    /// Mass sitting exactly on the event boundary (with zero slack).
    pub boundary_mass: f64,
}

impl TraceRow {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == name).map(|t| t.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionTrace {
    pub condition: Condition,
    pub n_grid: Vec<usize>,
    pub per_n_terms: Vec<TraceRow>,
    pub verdict: Verdict,
    pub eps: Option<f64>,
    /// Set when the final grid point has non-negligible mass on the boundary.
    pub boundary_flagged: bool,
    /// For product domination with a comparison `c_n`: whether
    /// `kappa_n mu_n <= alpha_n + beta_n` held at every grid point.
    pub implication_holds: Option<bool>,
}

/// Three-way verdict on a term sequence that should tend to at most `level`.
///
/// Satisfied: every term in the last half is at most `level`, or the final
/// term is below `level + 0.05` and the last half is nonincreasing.
/// Violated: every last-half term is at least `level + 0.05` and the last
/// half is nondecreasing. Anything else is inconclusive.
pub fn verdict_for(values: &[f64], level: f64) -> Verdict {
    if values.is_empty() {
        return Verdict::Inconclusive;
    }
    let tail = &values[values.len() / 2..];
    let tail = if tail.is_empty() { values } else { tail };
    let slack = 1e-12;
    let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] + slack);
    let nondecreasing = tail.windows(2).all(|w| w[1] >= w[0] - slack);
    let last = *tail.last().unwrap();
    if tail.iter().all(|&v| v <= level + slack) || (last < level + VERDICT_MARGIN && nonincreasing)
    {
        Verdict::SatisfiedOnGrid
    } else if tail.iter().all(|&v| v >= level + VERDICT_MARGIN) && nondecreasing {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

fn finish(
    condition: Condition,
    n_grid: &[usize],
    rows: Vec<TraceRow>,
    eps: Option<f64>,
) -> ConditionTrace {
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let boundary_flagged = rows
        .last()
        .is_some_and(|r| r.boundary_mass > BOUNDARY_MASS_TOL);
    let verdict = if boundary_flagged {
        Verdict::Inconclusive
    } else {
        verdict_for(&values, eps.unwrap_or(0.0))
    };
    ConditionTrace {
        condition,
        n_grid: n_grid.to_vec(),
        per_n_terms: rows,
        verdict,
        eps,
        boundary_flagged,
        implication_holds: None,
    }
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() || n_grid.contains(&0) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "n grid must be nonempty, positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Runs `row` for every grid point in parallel, in grid order.
fn rows_over_grid<F>(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    n_grid: &[usize],
    budget: &Budget,
    row: F,
) -> Result<Vec<TraceRow>>
where
    F: Fn(usize, usize, &JointSpectrum) -> Result<TraceRow> + Sync,
{
    check_grid(n_grid)?;
    n_grid
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let joint = joint_density_spectrum(src, input, ch, n, budget)?;
            row(i, n, &joint)
        })
        .collect()
}

fn direct_rows(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    schedule: &GammaSchedule,
    n_grid: &[usize],
    budget: &Budget,
    sign: f64,
) -> Result<Vec<TraceRow>> {
    let gammas = gamma_values(schedule, n_grid)?.values;
    rows_over_grid(src, input, ch, n_grid, budget, |i, n, joint| {
        let gamma = gammas[i];
        let p = joint.prob_a_le_b_plus(sign * gamma);
        Ok(TraceRow {
            n,
            gamma,
            threshold: None,
            terms: vec![("spectral", p)],
            value: p,
            // direct: mass on A = B; converse: mass exactly on the event boundary
            boundary_mass: joint.boundary_mass(if sign > 0.0 { 0.0 } else { -gamma }),
        })
    })
}

/// `Pr{A_n <= B_n + gamma_n}` over the grid; vanishing terms are sufficient
/// for transmissibility.
pub fn check_direct(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    schedule: &GammaSchedule,
    n_grid: &[usize],
    budget: &Budget,
) -> Result<ConditionTrace> {
    let rows = direct_rows(src, input, ch, schedule, n_grid, budget, 1.0)?;
    Ok(finish(Condition::Direct, n_grid, rows, None))
}

/// `Pr{A_n <= B_n - gamma_n}` under an encoder-induced input; these terms
/// must vanish for any good code family.
pub fn check_converse(
    src: &SourceModel,
    encoder_input: &InputModel,
    ch: &ChannelModel,
    schedule: &GammaSchedule,
    n_grid: &[usize],
    budget: &Budget,
) -> Result<ConditionTrace> {
    if !encoder_input.is_encoder() {
        return Err(Error::NonEncoderInput);
    }
    let rows = direct_rows(src, encoder_input, ch, schedule, n_grid, budget, -1.0)?;
    Ok(finish(Condition::Converse, n_grid, rows, None))
}

/// Direct (`converse = false`) or converse terms judged against level `eps`.
pub fn check_eps(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    schedule: &GammaSchedule,
    n_grid: &[usize],
    eps: f64,
    converse: bool,
    budget: &Budget,
) -> Result<ConditionTrace> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps {eps} outside [0, 1)")));
    }
    if converse && !input.is_encoder() {
        return Err(Error::NonEncoderInput);
    }
    let sign = if converse { -1.0 } else { 1.0 };
    let rows = direct_rows(src, input, ch, schedule, n_grid, budget, sign)?;
    let condition = if converse {
        Condition::EpsConverse
    } else {
        Condition::EpsDirect
    };
    Ok(finish(condition, n_grid, rows, Some(eps)))
}

fn domination_rows(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    thresholds: &ThresholdSchedule,
    schedule: &GammaSchedule,
    n_grid: &[usize],
    budget: &Budget,
    sign: f64,
) -> Result<Vec<TraceRow>> {
    let gammas = gamma_values(schedule, n_grid)?.values;
    let cs = thresholds.values(n_grid.len())?;
    rows_over_grid(src, input, ch, n_grid, budget, |i, n, joint| {
        let (gamma, c) = (gammas[i], cs[i]);
        let (a, b) = (joint.marginal_a(), joint.marginal_b());
        let source = b.ccdf(c);
        let channel = a.cdf(c + sign * gamma);
        Ok(TraceRow {
            n,
            gamma,
            threshold: Some(c),
            terms: vec![("source", source), ("channel", channel)],
            value: source + channel,
            boundary_mass: a.prob_eq(c).max(b.prob_eq(c)),
        })
    })
}

/// `Pr{B_n >= c_n} + Pr{A_n <= c_n + gamma_n}` (sufficient condition).
pub fn check_strict_domination(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    c_schedule: &ThresholdSchedule,
    gamma_schedule: &GammaSchedule,
    n_grid: &[usize],
    budget: &Budget,
) -> Result<ConditionTrace> {
    let rows = domination_rows(
        src,
        input,
        ch,
        c_schedule,
        gamma_schedule,
        n_grid,
        budget,
        1.0,
    )?;
    Ok(finish(Condition::StrictDomination, n_grid, rows, None))
}

/// `Pr{B_n >= c_n} + Pr{A_n <= c_n - gamma_n}` (necessary condition).
pub fn check_domination(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    c_schedule: &ThresholdSchedule,
    gamma_schedule: &GammaSchedule,
    n_grid: &[usize],
    budget: &Budget,
) -> Result<ConditionTrace> {
    let rows = domination_rows(
        src,
        input,
        ch,
        c_schedule,
        gamma_schedule,
        n_grid,
        budget,
        -1.0,
    )?;
    Ok(finish(Condition::Domination, n_grid, rows, None))
}

/// `Pr{B_n >= d_n} * Pr{A_n <= d_n - gamma_n}`. With `c_schedule`, also
/// checks `kappa_n mu_n <= alpha_n + beta_n` against the sum form at `c_n`.
pub fn check_product_domination(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    d_schedule: &ThresholdSchedule,
    gamma_schedule: &GammaSchedule,
    n_grid: &[usize],
    c_schedule: Option<&ThresholdSchedule>,
    budget: &Budget,
) -> Result<ConditionTrace> {
    let gammas = gamma_values(gamma_schedule, n_grid)?.values;
    let ds = d_schedule.values(n_grid.len())?;
    let cs = c_schedule.map(|c| c.values(n_grid.len())).transpose()?;
    let rows = rows_over_grid(src, input, ch, n_grid, budget, |i, n, joint| {
        let (gamma, d) = (gammas[i], ds[i]);
        let (a, b) = (joint.marginal_a(), joint.marginal_b());
        let kappa = b.ccdf(d);
        let mu = a.cdf(d - gamma);
        let mut terms = vec![("source", kappa), ("channel", mu)];
        if let Some(cs) = &cs {
            terms.push(("alpha", b.ccdf(cs[i])));
            terms.push(("beta", a.cdf(cs[i] - gamma)));
        }
        Ok(TraceRow {
            n,
            gamma,
            threshold: Some(d),
            terms,
            value: kappa * mu,
            boundary_mass: a.prob_eq(d).max(b.prob_eq(d)),
        })
    })?;
    let implication_holds = cs.as_ref().map(|_| {
        rows.iter().all(|r| {
            let (alpha, beta) = (r.term("alpha").unwrap(), r.term("beta").unwrap());
            r.value <= alpha + beta + 1e-12
        })
    });
    let mut trace = finish(Condition::ProductDomination, n_grid, rows, None);
    trace.implication_holds = implication_holds;
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateQuantity {
    Rf,
    UnderlineRf,
    CLower,
    OverlineCLower,
    HBar,
    HUnderline,
    IUnderline,
    IOverline,
}

impl RateQuantity {
    pub fn name(self) -> &'static str {
        match self {
            RateQuantity::Rf => "R_f",
            RateQuantity::UnderlineRf => "underline_R_f",
            RateQuantity::CLower => "C_lower",
            RateQuantity::OverlineCLower => "overline_C_lower",
            RateQuantity::HBar => "H_bar",
            RateQuantity::HUnderline => "H_underline",
            RateQuantity::IUnderline => "I_underline",
            RateQuantity::IOverline => "I_overline",
        }
    }
}

/// Finite-grid estimate of a rate functional.
///
/// `value` is the reported rate. Pessimistic quantities use the
/// `n^-1/2`-extrapolated threshold. Optimistic quantities take the raw grid
/// extremum, combined with the matching pessimistic value so that
/// `underline_R_f <= R_f` and `C <= overline_C` hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub quantity: RateQuantity,
    pub value: f64,
    pub estimate: LimitEstimate,
    /// Candidate input names behind a channel quantity.
    pub inputs_searched: Vec<String>,
}

fn report(
    quantity: RateQuantity,
    value: f64,
    estimate: LimitEstimate,
    inputs: Vec<String>,
) -> RateReport {
    RateReport {
        quantity,
        value,
        estimate,
        inputs_searched: inputs,
    }
}

pub fn entropy_spectra(
    src: &SourceModel,
    n_grid: &[usize],
    budget: &Budget,
) -> Result<Vec<Spectrum>> {
    check_grid(n_grid)?;
    n_grid
        .par_iter()
        .map(|&n| entropy_spectrum(src, n, budget))
        .collect()
}

pub fn information_spectra(
    ch: &ChannelModel,
    input: &InputModel,
    n_grid: &[usize],
    budget: &Budget,
) -> Result<Vec<Spectrum>> {
    check_grid(n_grid)?;
    n_grid
        .par_iter()
        .map(|&n| information_spectrum(ch, input, n, budget))
        .collect()
}

/// `H_bar`, `H_underline`, `R_f` and `underline_R_f` of a source.
pub fn source_rates(
    src: &SourceModel,
    n_grid: &[usize],
    eps: f64,
    budget: &Budget,
) -> Result<Vec<RateReport>> {
    let spectra = entropy_spectra(src, n_grid, budget)?;
    source_rates_from(&spectra, eps)
}

pub fn source_rates_from(spectra: &[Spectrum], eps: f64) -> Result<Vec<RateReport>> {
    let upper = estimate_plim(spectra, LimitMode::PLimsup, eps)?;
    let lower = estimate_plim(spectra, LimitMode::PLiminf, eps)?;
    let optimistic = estimate_plim(spectra, LimitMode::OptimisticLimsup, eps)?;
    let rf = upper.extrapolated;
    Ok(vec![
        report(RateQuantity::HBar, rf, upper.clone(), vec![]),
        report(RateQuantity::HUnderline, lower.extrapolated, lower, vec![]),
        report(RateQuantity::Rf, rf, upper, vec![]),
        report(
            RateQuantity::UnderlineRf,
            optimistic.estimate.min(rf),
            optimistic,
            vec![],
        ),
    ])
}

/// `I_underline` and `I_overline` per candidate input, then `C_lower` and
/// `overline_C_lower` as maxima over the candidates.
pub fn channel_rates(
    ch: &ChannelModel,
    candidates: &[(String, InputModel)],
    n_grid: &[usize],
    eps: f64,
    budget: &Budget,
) -> Result<Vec<RateReport>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument(
            "channel rates need at least one candidate input".into(),
        ));
    }
    let mut out = Vec::new();
    let mut best_c: Option<(f64, LimitEstimate)> = None;
    let mut best_oc: Option<(f64, LimitEstimate)> = None;
    for (name, input) in candidates {
        let spectra = information_spectra(ch, input, n_grid, budget)?;
        let lower = estimate_plim(&spectra, LimitMode::PLiminf, eps)?;
        let upper = estimate_plim(&spectra, LimitMode::PLimsup, eps)?;
        let optimistic = estimate_plim(&spectra, LimitMode::OptimisticLiminf, eps)?;
        let c = lower.extrapolated;
        let oc = optimistic.estimate.max(c);
        if best_c.as_ref().map_or(true, |b| c > b.0) {
            best_c = Some((c, lower.clone()));
        }
        if best_oc.as_ref().map_or(true, |b| oc > b.0) {
            best_oc = Some((oc, optimistic));
        }
        out.push(report(
            RateQuantity::IUnderline,
            c,
            lower,
            vec![name.clone()],
        ));
        out.push(report(
            RateQuantity::IOverline,
            upper.extrapolated,
            upper,
            vec![name.clone()],
        ));
    }
    let names: Vec<String> = candidates.iter().map(|c| c.0.clone()).collect();
    let (c, c_est) = best_c.unwrap();
    let (oc, oc_est) = best_oc.unwrap();
    out.push(report(RateQuantity::CLower, c, c_est, names.clone()));
    out.push(report(RateQuantity::OverlineCLower, oc, oc_est, names));
    Ok(out)
}

pub fn find_rate(reports: &[RateReport], q: RateQuantity) -> Option<&RateReport> {
    reports.iter().find(|r| r.quantity == q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub n: usize,
    pub delta: f64,
    /// `Pr{|Z / E Z - 1| > delta}`.
    pub probability: f64,
}

/// Strong converse, information stability and (heuristic) semi-strong converse readings.
#[derive(Debug, Clone, PartialEq)]
pub struct ConverseDiagnostics {
    /// Gap between the extrapolated p-limsup and p-liminf estimates.
    pub strong_gap: f64,
    pub strong_converse: bool,
    pub stability: Vec<StabilityRow>,
    /// Stability probabilities trend to zero on the grid for every `delta`.
    pub information_stable: bool,
    /// Gap between pessimistic and optimistic raw grid estimates.
    pub semi_strong_gap: f64,
    /// Heuristic: finite grids cannot decide a property quantified over all subsequences.
    pub semi_strong_heuristic: bool,
}

pub const STABILITY_DELTAS: [f64; 2] = [0.1, 0.05];
/// Allowed step-to-step rise in a stability sequence (lattice effects).
pub const STABILITY_NOISE: f64 = 0.01;

fn stability_rows(spectra: &[Spectrum]) -> Vec<StabilityRow> {
    let mut rows = Vec::new();
    for &delta in &STABILITY_DELTAS {
        for s in spectra {
            let mean = s.mean();
            let probability = if mean.is_finite() && mean != 0.0 {
                let (lo, hi) = if mean > 0.0 {
                    (mean * (1.0 - delta), mean * (1.0 + delta))
                } else {
                    (mean * (1.0 + delta), mean * (1.0 - delta))
                };
                (s.prob_lt(lo) + s.prob_gt(hi)).min(1.0)
            } else {
                1.0
            };
            rows.push(StabilityRow {
                n: s.n(),
                delta,
                probability,
            });
        }
    }
    rows
}

/// Trend reading of a stability sequence: small at the end, or at least
/// halved across the grid with no rise beyond lattice noise.
fn stability_vanishing(values: &[f64]) -> bool {
    let (first, last) = (values[0], values[values.len() - 1]);
    let no_rise = values.windows(2).all(|w| w[1] <= w[0] + STABILITY_NOISE);
    last <= VERDICT_MARGIN || (no_rise && last <= 0.5 * first)
}

/// Diagnostics for a source from its entropy spectra over a grid.
pub fn source_diagnostics(spectra: &[Spectrum], eps: f64) -> Result<ConverseDiagnostics> {
    let upper = estimate_plim(spectra, LimitMode::PLimsup, eps)?;
    let lower = estimate_plim(spectra, LimitMode::PLiminf, eps)?;
    let optimistic = estimate_plim(spectra, LimitMode::OptimisticLimsup, eps)?;
    Ok(diagnostics(
        spectra,
        &upper,
        &lower,
        upper.estimate,
        optimistic.estimate,
    ))
}

/// Diagnostics for a channel under one designated input.
pub fn channel_diagnostics(spectra: &[Spectrum], eps: f64) -> Result<ConverseDiagnostics> {
    let upper = estimate_plim(spectra, LimitMode::PLimsup, eps)?;
    let lower = estimate_plim(spectra, LimitMode::PLiminf, eps)?;
    let optimistic = estimate_plim(spectra, LimitMode::OptimisticLiminf, eps)?;
    Ok(diagnostics(
        spectra,
        &upper,
        &lower,
        lower.estimate,
        optimistic.estimate,
    ))
}

fn diagnostics(
    spectra: &[Spectrum],
    upper: &LimitEstimate,
    lower: &LimitEstimate,
    pessimistic: f64,
    optimistic: f64,
) -> ConverseDiagnostics {
    let strong_gap = (upper.extrapolated - lower.extrapolated).abs();
    let stability = stability_rows(spectra);
    let information_stable = STABILITY_DELTAS.iter().all(|&d| {
        let values: Vec<f64> = stability
            .iter()
            .filter(|r| r.delta == d)
            .map(|r| r.probability)
            .collect();
        stability_vanishing(&values)
    });
    let semi_strong_gap = if pessimistic == optimistic {
        0.0
    } else {
        (pessimistic - optimistic).abs()
    };
    ConverseDiagnostics {
        strong_gap,
        strong_converse: strong_gap < STRONG_CONVERSE_TOL,
        stability,
        information_stable,
        semi_strong_gap,
        semi_strong_heuristic: semi_strong_gap <= STABILIZATION_TOL,
    }
}

/// Outcome of comparing source rates with channel capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationVerdict {
    pub rf: f64,
    pub underline_rf: f64,
    pub c_lower: f64,
    pub overline_c_lower: f64,
    /// `R_f < C_lower` on the estimates.
    pub separable: bool,
    /// Rate used by the witness codes, midway between `R_f` and `C_lower`.
    pub witness_rate: Option<f64>,
    /// Two-step codes at the witness blocklengths (present when separable).
    pub witness: Vec<TwoStepOutcome>,
    /// `underline_R_f - C_lower` (must not exceed the tolerance for a transmissible pair).
    pub optimistic_margin: f64,
    /// `R_f - overline_C_lower` (likewise).
    pub pessimistic_margin: f64,
    pub necessary_conditions_hold: bool,
}

/// Settings for [`separation_verdict`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationSettings {
    pub eps: f64,
    pub gamma: GammaSchedule,
    /// Blocklengths at which witness two-step codes are built.
    pub witness_ns: Vec<usize>,
    pub seed: u64,
    pub decoding: ChannelDecoding,
}

impl Default for SeparationSettings {
    fn default() -> Self {
        SeparationSettings {
            eps: DEFAULT_EPS,
            gamma: GammaSchedule::default(),
            witness_ns: vec![4, 8, 12],
            seed: 0,
            decoding: ChannelDecoding::Map,
        }
    }
}

pub fn separation_verdict(
    src: &SourceModel,
    ch: &ChannelModel,
    candidates: &[(String, InputModel)],
    n_grid: &[usize],
    settings: &SeparationSettings,
    budget: &Budget,
) -> Result<SeparationVerdict> {
    let s = source_rates(src, n_grid, settings.eps, budget)?;
    let c = channel_rates(ch, candidates, n_grid, settings.eps, budget)?;
    let get = |r: &[RateReport], q| find_rate(r, q).map(|x| x.value).unwrap();
    let rf = get(&s, RateQuantity::Rf);
    let underline_rf = get(&s, RateQuantity::UnderlineRf);
    let c_lower = get(&c, RateQuantity::CLower);
    let overline_c_lower = get(&c, RateQuantity::OverlineCLower);
    let separable = rf < c_lower;
    let optimistic_margin = underline_rf - c_lower;
    let pessimistic_margin = rf - overline_c_lower;

    let (witness_rate, witness) = if separable {
        let rate = 0.5 * (rf + c_lower);
        let best = find_rate(&c, RateQuantity::CLower).unwrap();
        let input = best_candidate(&c, candidates, best.value);
        let gammas = gamma_values(&settings.gamma, &settings.witness_ns)?.values;
        let codes = settings
            .witness_ns
            .iter()
            .zip(&gammas)
            .map(|(&n, &g)| {
                two_step_code_with(
                    src,
                    ch,
                    input,
                    rate,
                    g,
                    n,
                    settings.seed,
                    settings.decoding,
                    budget,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        (Some(rate), codes)
    } else {
        (None, Vec::new())
    };
    Ok(SeparationVerdict {
        rf,
        underline_rf,
        c_lower,
        overline_c_lower,
        separable,
        witness_rate,
        witness,
        optimistic_margin,
        pessimistic_margin,
        necessary_conditions_hold: optimistic_margin <= RATE_TOL && pessimistic_margin <= RATE_TOL,
    })
}

fn best_candidate<'a>(
    reports: &[RateReport],
    candidates: &'a [(String, InputModel)],
    value: f64,
) -> &'a InputModel {
    let name = reports
        .iter()
        .find(|r| r.quantity == RateQuantity::IUnderline && r.value == value)
        .map(|r| r.inputs_searched[0].clone());
    candidates
        .iter()
        .find(|c| Some(&c.0) == name.as_ref())
        .map(|c| &c.1)
        .unwrap_or(&candidates[0].1)
}

/// Midpoint of the `H_bar` and `C_lower` estimates, the default constant `c_n`.
pub fn default_threshold(
    src: &SourceModel,
    ch: &ChannelModel,
    candidates: &[(String, InputModel)],
    n_grid: &[usize],
    eps: f64,
    budget: &Budget,
) -> Result<f64> {
    let s = source_rates(src, n_grid, eps, budget)?;
    let c = channel_rates(ch, candidates, n_grid, eps, budget)?;
    Ok(0.5
        * (find_rate(&s, RateQuantity::HBar).unwrap().value
            + find_rate(&c, RateQuantity::CLower).unwrap().value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Encoder, Kernel, MessageSizes, Pmf};

    const LN2: f64 = std::f64::consts::LN_2;

    fn uniform2() -> InputModel {
        InputModel::Iid(Pmf::uniform(2).unwrap())
    }

    fn noiseless() -> ChannelModel {
        ChannelModel::Dmc(Kernel::identity(2).unwrap())
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(
            verdict_for(&[0.5, 0.3, 0.1, 0.04], 0.0),
            Verdict::SatisfiedOnGrid
        );
        assert_eq!(verdict_for(&[0.5, 0.7, 0.9, 0.95], 0.0), Verdict::Violated);
        assert_eq!(
            verdict_for(&[0.5, 0.1, 0.3, 0.2], 0.0),
            Verdict::Inconclusive
        );
        assert_eq!(verdict_for(&[0.9, 0.8], 0.99), Verdict::SatisfiedOnGrid);
    }

    #[test]
    fn identity_code_converse_terms_vanish() {
        let src = SourceModel::Iid(Pmf::uniform(2).unwrap());
        let enc = InputModel::Encoder(Encoder::Letterwise(vec![0, 1]));
        let t = check_converse(
            &src,
            &enc,
            &noiseless(),
            &GammaSchedule::default(),
            &[2, 4, 8],
            &Budget::default(),
        )
        .unwrap();
        assert!(t.per_n_terms.iter().all(|r| r.value == 0.0));
        assert_eq!(t.verdict, Verdict::SatisfiedOnGrid);
    }

    #[test]
    fn converse_rejects_random_input() {
        let src = SourceModel::Iid(Pmf::uniform(2).unwrap());
        let r = check_converse(
            &src,
            &uniform2(),
            &noiseless(),
            &GammaSchedule::default(),
            &[2],
            &Budget::default(),
        );
        assert_eq!(r.unwrap_err(), Error::NonEncoderInput);
    }

    #[test]
    fn rate_exactly_capacity_is_flagged() {
        let src = SourceModel::UniformMessage(MessageSizes::Power(2));
        let t = check_direct(
            &src,
            &uniform2(),
            &noiseless(),
            &GammaSchedule::default(),
            &[10, 20, 40],
            &Budget::default(),
        )
        .unwrap();
        assert!(t.per_n_terms.iter().all(|r| (r.value - 1.0).abs() < 1e-12));
        assert!(t.boundary_flagged);
        assert_eq!(t.verdict, Verdict::Inconclusive);
        let d = check_domination(
            &src,
            &uniform2(),
            &noiseless(),
            &ThresholdSchedule::Constant(LN2),
            &GammaSchedule::default(),
            &[10, 20, 40],
            &Budget::default(),
        )
        .unwrap();
        assert_eq!(d.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn uniform_message_rates_are_exact() {
        let src = SourceModel::UniformMessage(MessageSizes::Rate(0.3));
        let grid = [10, 20, 40];
        let spectra = entropy_spectra(&src, &grid, &Budget::default()).unwrap();
        let r = source_rates_from(&spectra, DEFAULT_EPS).unwrap();
        let est = &find_rate(&r, RateQuantity::Rf).unwrap().estimate;
        for (t, &n) in est.per_n_threshold.iter().zip(&grid) {
            let m = MessageSizes::Rate(0.3).size(n).unwrap() as f64;
            assert_eq!(*t, m.ln() / n as f64);
        }
        let d = source_diagnostics(&spectra, DEFAULT_EPS).unwrap();
        assert!(d.strong_converse && d.semi_strong_heuristic && d.information_stable);
    }

    #[test]
    fn noiseless_capacity_is_ln2() {
        let r = channel_rates(
            &noiseless(),
            &[("uniform".into(), uniform2())],
            &[10, 20, 40],
            DEFAULT_EPS,
            &Budget::default(),
        )
        .unwrap();
        assert!((find_rate(&r, RateQuantity::CLower).unwrap().value - LN2).abs() < 1e-12);
        assert!((find_rate(&r, RateQuantity::OverlineCLower).unwrap().value - LN2).abs() < 1e-12);
        assert!(channel_rates(
            &noiseless(),
            &[],
            &[1, 2, 3],
            DEFAULT_EPS,
            &Budget::default()
        )
        .is_err());
    }

    #[test]
    fn product_form_single_point() {
        let src = SourceModel::Iid(Pmf::bernoulli(0.2).unwrap());
        let ch = ChannelModel::Dmc(Kernel::bsc(0.1).unwrap());
        let t = check_product_domination(
            &src,
            &uniform2(),
            &ch,
            &ThresholdSchedule::Constant(0.4),
            &GammaSchedule::Constant(0.05),
            &[3],
            Some(&ThresholdSchedule::Constant(0.3)),
            &Budget::default(),
        )
        .unwrap();
        let row = &t.per_n_terms[0];
        let b = entropy_spectrum(&src, 3, &Budget::default()).unwrap();
        let a = information_spectrum(&ch, &uniform2(), 3, &Budget::default()).unwrap();
        assert_eq!(row.value, b.ccdf(0.4) * a.cdf(0.35));
        assert_eq!(t.implication_holds, Some(true));
    }
}
