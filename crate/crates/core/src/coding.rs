//! Explicit joint source-channel codes, their exact error probabilities, the
//! threshold-decoded random code ensemble and the exhaustive optimal-code oracle.

use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{separation_bound_from_spectra, BoundReport};
use crate::error::{Error, Result};
use crate::models::{
    entropy_spectrum, information_spectrum, Budget, ChannelModel, ConditionalLaw, Encoder,
    ExactModel, InputModel, Kernel, MessageSizes, SourceModel,
};
use crate::numeric::{self, NeumaierSum};
use crate::spectrum::{JointSpectrum, BOUNDARY_TOL};

/// Encoder and decoder tables for one blocklength. A decoder entry of `None`
/// is the failure symbol and always counts as an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCode {
    pub n: usize,
    /// Codeword index for each source outcome.
    pub encoder: Vec<usize>,
    /// Decoded source outcome for each channel output.
    pub decoder: Vec<Option<usize>>,
}

impl JointCode {
    pub fn new(n: usize, encoder: Vec<usize>, decoder: Vec<Option<usize>>) -> Self {
        JointCode {
            n,
            encoder,
            decoder,
        }
    }

    /// Plain-text table: an `n` line, then one `encoder v x` line per source
    /// outcome and one `decoder y v` line per output (`v` is `fail` for the
    /// failure symbol). Lines starting with `#` are comments.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.n).unwrap();
        for (v, x) in self.encoder.iter().enumerate() {
            writeln!(out, "encoder {v} {x}").unwrap();
        }
        for (y, v) in self.decoder.iter().enumerate() {
            match v {
                Some(v) => writeln!(out, "decoder {y} {v}").unwrap(),
                None => writeln!(out, "decoder {y} fail").unwrap(),
            }
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::InvalidArgument(format!("line {line}: {msg}"));
        let mut n = None;
        let mut encoder = Vec::new();
        let mut decoder = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| bad(line, &format!("`{s}` is not an index")))
            };
            match fields.as_slice() {
                ["n", v] => n = Some(num(v)?),
                ["encoder", v, x] => {
                    if num(v)? != encoder.len() {
                        return Err(bad(line, "encoder entries must be listed in order"));
                    }
                    encoder.push(num(x)?);
                }
                ["decoder", y, v] => {
                    if num(y)? != decoder.len() {
                        return Err(bad(line, "decoder entries must be listed in order"));
                    }
                    decoder.push(if *v == "fail" { None } else { Some(num(v)?) });
                }
                _ => return Err(bad(line, "expected `n`, `encoder` or `decoder` entry")),
            }
        }
        let n = n.ok_or_else(|| Error::InvalidArgument("missing `n` line".into()))?;
        Ok(JointCode::new(n, encoder, decoder))
    }
}

/// Exact error probabilities of one code.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub average_error: f64,
    /// Largest per-symbol error over source outcomes of positive probability.
    pub max_error: f64,
    /// `W^n(D^c(v) | encoder(v))` for every source outcome `v`.
    pub per_symbol_errors: Vec<f64>,
}

fn report_from_success(p_v: &[f64], success: &[NeumaierSum]) -> ErrorReport {
    let per_symbol_errors: Vec<f64> = success
        .iter()
        .map(|s| (1.0 - s.value()).clamp(0.0, 1.0))
        .collect();
    let average_error = numeric::sum(p_v.iter().zip(&per_symbol_errors).map(|(p, e)| p * e));
    let max_error = p_v
        .iter()
        .zip(&per_symbol_errors)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, e)| *e)
        .fold(0.0, f64::max);
    ErrorReport {
        average_error,
        max_error,
        per_symbol_errors,
    }
}

fn check_code_shape(code: &JointCode, nv: u128, nx: u128, ny: u128) -> Result<()> {
    if code.encoder.len() as u128 != nv {
        return Err(Error::AlphabetMismatch(format!(
            "encoder covers {} source outcomes, source has {nv}",
            code.encoder.len()
        )));
    }
    if code.decoder.len() as u128 != ny {
        return Err(Error::AlphabetMismatch(format!(
            "decoder covers {} outputs, channel has {ny}",
            code.decoder.len()
        )));
    }
    if let Some(x) = code.encoder.iter().find(|&&x| x as u128 >= nx) {
        return Err(Error::AlphabetMismatch(format!(
            "codeword {x} outside {nx} inputs"
        )));
    }
    if let Some(v) = code.decoder.iter().flatten().find(|&&v| v as u128 >= nv) {
        return Err(Error::AlphabetMismatch(format!(
            "decoded symbol {v} outside {nv} outcomes"
        )));
    }
    Ok(())
}

/// Exact average and maximum error by summing over channel outputs.
pub fn exact_error(
    code: &JointCode,
    src: &SourceModel,
    ch: &ChannelModel,
    budget: &Budget,
) -> Result<ErrorReport> {
    let n = code.n;
    let nv = src.outcomes(n)?;
    let (nx, ny) = ch.outcomes(n)?;
    budget.check("source outcomes and channel outputs", nv.saturating_add(ny))?;
    check_code_shape(code, nv, nx, ny)?;
    let p_v = src.pmf(n, budget)?;
    let mut success = vec![NeumaierSum::new(); p_v.len()];
    for (y, v) in code.decoder.iter().enumerate() {
        if let Some(v) = *v {
            success[v].add(ch.prob(n, code.encoder[v], y)?);
        }
    }
    Ok(report_from_success(&p_v, &success))
}

/// Decodes each output to the unique index whose codeword clears its
/// threshold: `a(codeword, y) > threshold + gamma`. Zero or several
/// candidates give the failure symbol.
fn threshold_decode(
    thresholds: &[f64],
    codebook: &[usize],
    ny: usize,
    gamma: f64,
    a: impl Fn(usize, usize) -> f64 + Sync,
) -> Vec<Option<usize>> {
    (0..ny)
        .into_par_iter()
        .map(|y| {
            let mut found = None;
            for (v, (&t, &x)) in thresholds.iter().zip(codebook).enumerate() {
                if t.is_finite() && a(x, y) > t + gamma + BOUNDARY_TOL {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(v);
                }
            }
            found
        })
        .collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// Threshold decoder for a given codebook. The output law inside the
/// information density is the one induced by `input_law` (the ensemble
/// law), not the empirical law of the codebook.
pub fn threshold_decoder(
    codebook: &[usize],
    src: &SourceModel,
    ch: &ChannelModel,
    input_law: &InputModel,
    gamma: f64,
    n: usize,
    budget: &Budget,
) -> Result<JointCode> {
    check_gamma(gamma)?;
    let em = ExactModel::build(src, input_law, ch, n, budget)?;
    let nx = em.channel.inputs();
    if codebook.len() != em.p_v.len() || codebook.iter().any(|&x| x >= nx) {
        return Err(Error::AlphabetMismatch(format!(
            "codebook has {} entries for {} source outcomes",
            codebook.len(),
            em.p_v.len()
        )));
    }
    let thresholds: Vec<f64> = (0..em.p_v.len()).map(|v| em.b(v)).collect();
    let decoder = threshold_decode(&thresholds, codebook, em.p_y.len(), gamma, |x, y| {
        em.a(x, y)
    });
    Ok(JointCode::new(n, codebook.to_vec(), decoder))
}

fn sampler(row: &[(usize, f64)]) -> Result<(Vec<usize>, WeightedIndex<f64>)> {
    let idx = row.iter().map(|r| r.0).collect();
    let dist = WeightedIndex::new(row.iter().map(|r| r.1))
        .map_err(|e| Error::InvalidDistribution(format!("cannot sample input law: {e}")))?;
    Ok((idx, dist))
}

/// Draws one codeword per source outcome from `P(x|v)`.
pub fn sample_codebook(
    law: &ConditionalLaw,
    source_outcomes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    match law {
        ConditionalLaw::Encoder(e) => Ok(e.clone()),
        ConditionalLaw::Independent(_) => {
            let (idx, dist) = sampler(&law.row(0))?;
            Ok((0..source_outcomes)
                .map(|_| idx[dist.sample(rng)])
                .collect())
        }
        ConditionalLaw::Rows(_) => (0..source_outcomes)
            .map(|v| {
                let (idx, dist) = sampler(&law.row(v))?;
                Ok(idx[dist.sample(rng)])
            })
            .collect(),
    }
}

/// Samples `samples` threshold-decoded codes and returns their exact errors.
/// Sample `i` uses stream `i` of a ChaCha8 generator seeded with `seed`.
pub fn sample_threshold_codes(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    gamma: f64,
    n: usize,
    samples: usize,
    seed: u64,
    budget: &Budget,
) -> Result<Vec<(JointCode, ErrorReport)>> {
    check_gamma(gamma)?;
    let em = ExactModel::build(src, input, ch, n, budget)?;
    let thresholds: Vec<f64> = (0..em.p_v.len()).map(|v| em.b(v)).collect();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let codebook = sample_codebook(&em.input, em.p_v.len(), &mut rng)?;
            let decoder = threshold_decode(&thresholds, &codebook, em.p_y.len(), gamma, |x, y| {
                em.a(x, y)
            });
            let code = JointCode::new(n, codebook, decoder);
            let report = exact_error_dense(&code, &em.p_v, &em.channel);
            Ok((code, report))
        })
        .collect()
}

fn exact_error_dense(code: &JointCode, p_v: &[f64], channel: &Kernel) -> ErrorReport {
    let mut success = vec![NeumaierSum::new(); p_v.len()];
    for (y, v) in code.decoder.iter().enumerate() {
        if let Some(v) = *v {
            success[v].add(channel.get(code.encoder[v], y));
        }
    }
    report_from_success(p_v, &success)
}

/// Expected average error of the threshold-decoded random code, over
/// codebooks drawn independently per source outcome from `P(x|v)`.
///
/// Given `v`, its codeword `x` and the output `y`, decoding succeeds iff
/// `(x, y)` clears `v`'s threshold and no other outcome's codeword clears
/// its own, so the conditional success probability is
/// `1{(x,y) in S(v)} * prod_{v' != v} (1 - q(v', y))`.
pub fn ensemble_average_error(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    gamma: f64,
    n: usize,
    budget: &Budget,
) -> Result<f64> {
    check_gamma(gamma)?;
    let nv = src.outcomes(n)?;
    let (nx, ny) = ch.outcomes(n)?;
    budget.check("ensemble terms", nv.saturating_mul(nx).saturating_mul(ny))?;
    let em = ExactModel::build(src, input, ch, n, budget)?;
    let nv = em.p_v.len();
    let ny = em.p_y.len();
    let shifted: Vec<f64> = (0..nv).map(|v| em.b(v) + gamma + BOUNDARY_TOL).collect();
    let rows: Vec<Vec<(usize, f64)>> = (0..nv).map(|v| em.input.row(v)).collect();

    let per_output: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|y| {
            let a: Vec<f64> = (0..em.channel.inputs()).map(|x| em.a(x, y)).collect();
            let q: Vec<f64> = (0..nv)
                .map(|v| {
                    if !shifted[v].is_finite() {
                        return 0.0;
                    }
                    numeric::sum(
                        rows[v]
                            .iter()
                            .filter(|(x, _)| a[*x] > shifted[v])
                            .map(|r| r.1),
                    )
                    .min(1.0)
                })
                .collect();
            let mut log_free = NeumaierSum::new();
            let mut certain = 0usize;
            for &qv in &q {
                if qv >= 1.0 {
                    certain += 1;
                } else if qv > 0.0 {
                    log_free.add((-qv).ln_1p());
                }
            }
            let log_free = log_free.value();
            let mut success = NeumaierSum::new();
            for v in 0..nv {
                if em.p_v[v] == 0.0 || q[v] == 0.0 {
                    continue;
                }
                let others = if q[v] >= 1.0 {
                    if certain == 1 {
                        log_free.exp()
                    } else {
                        0.0
                    }
                } else if certain == 0 {
                    (log_free - (-q[v]).ln_1p()).exp()
                } else {
                    0.0
                };
                if others == 0.0 {
                    continue;
                }
                let hit = numeric::sum(
                    rows[v]
                        .iter()
                        .filter(|(x, _)| a[*x] > shifted[v])
                        .map(|&(x, px)| px * em.channel.get(x, y)),
                );
                success.add(em.p_v[v] * hit * others);
            }
            success.value()
        })
        .collect();
    Ok((1.0 - numeric::sum(per_output)).clamp(0.0, 1.0))
}

/// Maximum a posteriori decoder for a fixed encoder; ties go to the smallest
/// source index.
pub fn map_decoder(
    encoder: &[usize],
    src: &SourceModel,
    ch: &ChannelModel,
    n: usize,
    budget: &Budget,
) -> Result<JointCode> {
    let nv = src.outcomes(n)?;
    let (nx, ny) = ch.outcomes(n)?;
    budget.check("source outcomes times outputs", nv.saturating_mul(ny))?;
    let p_v = src.pmf(n, budget)?;
    let probe = JointCode::new(n, encoder.to_vec(), vec![None; ny as usize]);
    check_code_shape(&probe, nv, nx, ny)?;
    let decoder = (0..ny as usize)
        .into_par_iter()
        .map(|y| {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (v, &p) in p_v.iter().enumerate() {
                let score = p * ch.prob(n, encoder[v], y)?;
                if score > best.1 {
                    best = (v, score);
                }
            }
            Ok(Some(best.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointCode::new(n, encoder.to_vec(), decoder))
}

/// Minimum average error over every encoder, each with its MAP decoder.
/// Null source outcomes are sent to codeword 0.
pub fn brute_force_optimal_error(
    src: &SourceModel,
    ch: &ChannelModel,
    n: usize,
    budget: &Budget,
) -> Result<(f64, JointCode)> {
    let p_v = src.pmf(n, budget)?;
    let kernel = ch.kernel(n, budget)?;
    let (nx, ny) = (kernel.inputs(), kernel.outputs());
    let support: Vec<usize> = (0..p_v.len()).filter(|&v| p_v[v] > 0.0).collect();
    let count = (nx as u128)
        .checked_pow(support.len() as u32)
        .unwrap_or(u128::MAX);
    budget.check_oracle(count)?;
    budget.check(
        "weighted kernel entries",
        (support.len() as u128) * (nx as u128) * (ny as u128),
    )?;
    // weighted[s][x][y] = P(v_s) W(y|x)
    let weighted: Vec<Vec<f64>> = support
        .iter()
        .map(|&v| {
            (0..nx)
                .flat_map(|x| {
                    let pv = p_v[v];
                    kernel.row(x).iter().map(move |w| pv * w)
                })
                .collect()
        })
        .collect();
    let digits = |mut e: u64| -> Vec<usize> {
        (0..support.len())
            .map(|_| {
                let d = (e % nx as u64) as usize;
                e /= nx as u64;
                d
            })
            .collect()
    };
    let (best_err, best_idx) = (0..count as u64)
        .into_par_iter()
        .map(|e| {
            let xs = digits(e);
            let mut hit = NeumaierSum::new();
            for y in 0..ny {
                let mut m: f64 = 0.0;
                for (s, &x) in xs.iter().enumerate() {
                    m = m.max(weighted[s][x * ny + y]);
                }
                hit.add(m);
            }
            (1.0 - hit.value(), e)
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                if a.0 < b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    let mut encoder = vec![0usize; p_v.len()];
    for (s, x) in support.iter().zip(digits(best_idx)) {
        encoder[*s] = x;
    }
    let code = map_decoder(&encoder, src, ch, n, budget)?;
    Ok((best_err.max(0.0), code))
}

/// Joint law of `(A_n, B_n)` under the coupling induced by a code's encoder.
pub fn induced_joint(
    code: &JointCode,
    src: &SourceModel,
    ch: &ChannelModel,
    budget: &Budget,
) -> Result<JointSpectrum> {
    ExactModel::build(
        src,
        &InputModel::Encoder(Encoder::from_code(code)),
        ch,
        code.n,
        budget,
    )?
    .joint_spectrum()
}

/// Result of fixed-length source coding followed by threshold-decoded channel coding.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepOutcome {
    pub code: JointCode,
    /// Exact errors of the realized (seeded) code.
    pub report: ErrorReport,
    /// Number of source sequences kept as messages.
    pub messages: usize,
    /// True when every source sequence of positive probability is kept.
    pub source_lossless: bool,
    /// Probability that the source output is not among the messages.
    pub source_error: f64,
    /// Expected error over the random channel codebook, when enumerable.
    pub ensemble_error: Option<f64>,
    pub bound: BoundReport,
}

/// Source output law over `X^n`-indexed outputs for a source-independent input.
fn output_law(
    ch: &ChannelModel,
    input: &InputModel,
    n: usize,
    budget: &Budget,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p_x = input.independent_pmf(n, budget)?;
    let (nx, ny) = ch.outcomes(n)?;
    if p_x.len() as u128 != nx {
        return Err(Error::AlphabetMismatch(format!(
            "input law has {} outcomes, channel accepts {nx}",
            p_x.len()
        )));
    }
    if let (InputModel::Iid(p), Some(k)) = (input, ch.letter_kernel()?) {
        let mut letter = vec![0.0; k.outputs()];
        for (x, &px) in p.probs().iter().enumerate() {
            for (y, w) in k.row(x).iter().enumerate() {
                letter[y] += px * w;
            }
        }
        let mut p_y = vec![1.0];
        for _ in 0..n {
            p_y = p_y
                .iter()
                .flat_map(|&a| letter.iter().map(move |&b| a * b))
                .collect();
        }
        return Ok((p_x, p_y));
    }
    let kernel = ch.kernel(n, budget)?;
    let mut p_y = vec![0.0; ny as usize];
    for (x, &px) in p_x.iter().enumerate() {
        for (y, w) in kernel.row(x).iter().enumerate() {
            p_y[y] += px * w;
        }
    }
    Ok((p_x, p_y))
}

/// Channel decoder of a two-step code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChannelDecoding {
    /// Unique message whose codeword clears `ln(M)/n + gamma`.
    #[default]
    Threshold,
    /// Most probable kept message given the output (ties to the smaller
    /// message). Never worse than threshold decoding on the same codebook.
    Map,
}

/// Two-step code at source rate `c`: keep the `floor(e^{cn})` most probable
/// source sequences (ties to the smaller index), then send the message index
/// with a threshold-decoded random code drawn from `channel_input`
/// (seeded ChaCha8 stream 0).
pub fn two_step_code(
    src: &SourceModel,
    ch: &ChannelModel,
    channel_input: &InputModel,
    c: f64,
    gamma: f64,
    n: usize,
    seed: u64,
    budget: &Budget,
) -> Result<TwoStepOutcome> {
    two_step_code_with(
        src,
        ch,
        channel_input,
        c,
        gamma,
        n,
        seed,
        ChannelDecoding::Threshold,
        budget,
    )
}

/// [`two_step_code`] with a choice of channel decoder. `ensemble_error` and
/// `bound` always refer to threshold decoding.
pub fn two_step_code_with(
    src: &SourceModel,
    ch: &ChannelModel,
    channel_input: &InputModel,
    c: f64,
    gamma: f64,
    n: usize,
    seed: u64,
    decoding: ChannelDecoding,
    budget: &Budget,
) -> Result<TwoStepOutcome> {
    check_gamma(gamma)?;
    if !channel_input.is_independent() {
        return Err(Error::InvalidArgument(
            "two-step channel input must not depend on the source".into(),
        ));
    }
    let p_v = src.pmf(n, budget)?;
    let (nx, ny) = ch.outcomes(n)?;
    let mut order: Vec<usize> = (0..p_v.len()).filter(|&v| p_v[v] > 0.0).collect();
    order.sort_by(|&u, &v| p_v[v].total_cmp(&p_v[u]).then(u.cmp(&v)));
    let budgeted = MessageSizes::Rate(c).size(n)?;
    let messages = (budgeted.min(order.len() as u64)) as usize;
    let source_lossless = messages == order.len();
    order.truncate(messages);
    budget.check(
        "messages times outputs",
        (messages as u128).saturating_mul(ny),
    )?;

    let (p_x, p_y) = output_law(ch, channel_input, n, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codebook = sample_codebook(
        &ConditionalLaw::Independent(p_x.clone()),
        messages,
        &mut rng,
    )?;
    let nf = n as f64;
    let rate = (messages as f64).ln() / nf;
    let density = |x: usize, y: usize| -> f64 {
        let w = ch.prob(n, x, y).unwrap_or(0.0);
        if w > 0.0 {
            (w.ln() - p_y[y].ln()) / nf
        } else {
            f64::NEG_INFINITY
        }
    };
    let thresholds = vec![rate; messages];
    let channel_decoder = match decoding {
        ChannelDecoding::Threshold => {
            threshold_decode(&thresholds, &codebook, ny as usize, gamma, density)
        }
        ChannelDecoding::Map => (0..ny as usize)
            .into_par_iter()
            .map(|y| {
                let mut best: Option<(usize, f64)> = None;
                for (m, (&x, &v)) in codebook.iter().zip(&order).enumerate() {
                    let score = p_v[v] * ch.prob(n, x, y).unwrap_or(0.0);
                    if score > 0.0 && best.map_or(true, |b| score > b.1) {
                        best = Some((m, score));
                    }
                }
                best.map(|b| b.0)
            })
            .collect(),
    };

    let mut encoder = vec![codebook[0]; p_v.len()];
    for (m, &v) in order.iter().enumerate() {
        encoder[v] = codebook[m];
    }
    let decoder = channel_decoder
        .iter()
        .map(|m| m.map(|m| order[m]))
        .collect();
    let code = JointCode::new(n, encoder, decoder);
    let report = exact_error(&code, src, ch, budget)?;
    let kept = numeric::sum(order.iter().map(|&v| p_v[v]));
    let source_error = (1.0 - kept).max(0.0);

    let ensemble_error = if nx.saturating_mul(ny) <= budget.enumeration as u128 {
        let shifted = rate + gamma + BOUNDARY_TOL;
        let per_output: Vec<(f64, f64)> = (0..ny as usize)
            .into_par_iter()
            .map(|y| {
                let mut q = NeumaierSum::new();
                let mut hit = NeumaierSum::new();
                for (x, &px) in p_x.iter().enumerate() {
                    if px > 0.0 && density(x, y) > shifted {
                        q.add(px);
                        hit.add(px * ch.prob(n, x, y).unwrap_or(0.0));
                    }
                }
                (q.value().min(1.0), hit.value())
            })
            .collect();
        let others = (messages - 1) as i32;
        let channel_success = numeric::sum(
            per_output
                .iter()
                .map(|&(q, hit)| hit * (1.0 - q).powi(others)),
        );
        let channel_error = (1.0 - channel_success).clamp(0.0, 1.0);
        Some(source_error + kept * channel_error)
    } else {
        None
    };

    let b = entropy_spectrum(src, n, budget)?;
    let a = information_spectrum(ch, channel_input, n, budget)?;
    let bound = separation_bound_from_spectra(&b, &a, c, gamma)?;
    Ok(TwoStepOutcome {
        code,
        report,
        messages,
        source_lossless,
        source_error,
        ensemble_error,
        bound,
    })
}
