//! Sources, channels and channel-input laws with exact per-blocklength access.
//!
//! Sequences of length `n` over a `k`-letter alphabet are identified with
//! indices in `0..k^n`, first letter most significant, so numeric order is
//! lexicographic order. `Table` families instead give one explicit law per
//! blocklength over an arbitrary outcome set.

use std::collections::{BTreeMap, HashMap};

use crate::coding::JointCode;
use crate::error::{Error, Result};
use crate::numeric;
use crate::spectrum::{
    convolve_iid, default_lower_slack, mixture_sandwich, JointSpectrum, Spectrum, SpectrumBracket,
    MASS_TOL, MERGE_TOL,
};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

/// Limits on exhaustive work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Joint outcomes an exact enumeration may visit.
    pub enumeration: u64,
    /// Encoders the optimal-code search may visit.
    pub oracle: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            enumeration: DEFAULT_ENUMERATION_BUDGET,
            oracle: DEFAULT_ORACLE_BUDGET,
        }
    }
}

impl Budget {
    pub fn with_enumeration(enumeration: u64) -> Self {
        Budget {
            enumeration,
            ..Budget::default()
        }
    }

    pub(crate) fn check(&self, what: &'static str, required: u128) -> Result<()> {
        if required > self.enumeration as u128 {
            return Err(Error::BudgetExceeded {
                what,
                required,
                budget: self.enumeration,
            });
        }
        Ok(())
    }

    pub(crate) fn check_oracle(&self, required: u128) -> Result<()> {
        if required > self.oracle as u128 {
            return Err(Error::BudgetExceeded {
                what: "encoders",
                required,
                budget: self.oracle,
            });
        }
        Ok(())
    }
}

/// Probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} is not a probability"
            )));
        }
        let total = numeric::sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("pmf sums to {total}")));
        }
        Ok(Pmf(probs))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    /// Truncates a countable pmf `f(0), f(1), ...` once the remaining tail is
    /// at most `tail_tol`; the tail mass becomes one extra final symbol.
    pub fn truncate_countable(f: impl Fn(usize) -> f64, tail_tol: f64) -> Result<Self> {
        const MAX_SUPPORT: usize = 1_000_000;
        let mut probs = Vec::new();
        let mut acc = numeric::NeumaierSum::new();
        while 1.0 - acc.value() > tail_tol {
            if probs.len() == MAX_SUPPORT {
                return Err(Error::InvalidDistribution(
                    "countable pmf tail does not vanish within the support limit".into(),
                ));
            }
            let p = f(probs.len());
            probs.push(p);
            acc.add(p);
        }
        let tail = 1.0 - acc.value();
        if tail > 0.0 {
            probs.push(tail);
        }
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        -numeric::sum(self.0.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()))
    }

    /// Law of `n` independent copies, lexicographically indexed.
    fn power(&self, n: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for _ in 0..n {
            out = kron_vec(&out, &self.0);
        }
        out
    }
}

fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

fn pow_u128(k: usize, n: usize) -> u128 {
    (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Row-stochastic matrix, `rows` inputs by `cols` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || cols == 0 {
            return Err(Error::InvalidDistribution("empty kernel".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::AlphabetMismatch(format!(
                    "kernel row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            Pmf::new(row.clone()).map_err(|e| match e {
                Error::InvalidDistribution(msg) => {
                    Error::InvalidDistribution(format!("kernel row {i}: {msg}"))
                }
                other => other,
            })?;
            data.extend_from_slice(row);
        }
        Ok(Kernel {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::from_map(&(0..k).collect::<Vec<_>>(), k)
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Deterministic kernel sending input `i` to output `map[i]`.
    pub fn from_map(map: &[usize], outputs: usize) -> Result<Self> {
        let rows = map
            .iter()
            .map(|&y| {
                if y >= outputs {
                    return Err(Error::AlphabetMismatch(format!(
                        "output {y} outside alphabet of size {outputs}"
                    )));
                }
                let mut row = vec![0.0; outputs];
                row[y] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn inputs(&self) -> usize {
        self.rows
    }

    pub fn outputs(&self) -> usize {
        self.cols
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.cols..(x + 1) * self.cols]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.cols + y]
    }

    fn kron(&self, other: &Kernel) -> Kernel {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..self.rows {
            for k in 0..other.rows {
                for j in 0..self.cols {
                    let a = self.get(i, j);
                    data.extend(other.row(k).iter().map(|&b| a * b));
                }
            }
        }
        Kernel { rows, cols, data }
    }

    fn power(&self, n: usize) -> Kernel {
        let mut out = Kernel {
            rows: 1,
            cols: 1,
            data: vec![1.0],
        };
        for _ in 0..n {
            out = out.kron(self);
        }
        out
    }
}

/// Message-set sizes `M_n` of a uniform message source.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageSizes {
    Constant(u64),
    /// `M_n = base^n`.
    Power(u64),
    /// `M_n = floor(e^{rate n})`, at least 1.
    Rate(f64),
    Explicit(BTreeMap<usize, u64>),
}

impl MessageSizes {
    pub fn size(&self, n: usize) -> Result<u64> {
        let m = match self {
            MessageSizes::Constant(m) => *m,
            MessageSizes::Power(b) => b.checked_pow(n as u32).ok_or_else(|| {
                Error::InvalidArgument(format!("message count {b}^{n} overflows"))
            })?,
            MessageSizes::Rate(r) => {
                let m = (r * n as f64).exp();
                if !(m < 1.8e19) {
                    return Err(Error::InvalidArgument(format!(
                        "message count e^({r}*{n}) overflows"
                    )));
                }
                // rounding guard so that an exactly integral e^{rn} is kept
                ((m * (1.0 + 1e-12)).floor() as u64).max(1)
            }
            MessageSizes::Explicit(map) => *map.get(&n).ok_or(Error::MissingBlocklength(n))?,
        };
        if m == 0 {
            return Err(Error::InvalidArgument("message set is empty".into()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Iid(Pmf),
    UniformMessage(MessageSizes),
    Mixed(Vec<(f64, SourceModel)>),
    /// One explicit pmf per blocklength over its own outcome set.
    Table(BTreeMap<usize, Pmf>),
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = numeric::NeumaierSum::new();
    let mut count = 0;
    for w in weights {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "mixture weight {w} must be positive"
            )));
        }
        total.add(w);
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidArgument("mixture has no components".into()));
    }
    if (total.value() - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidDistribution(format!(
            "mixture weights sum to {}",
            total.value()
        )));
    }
    Ok(())
}

impl SourceModel {
    pub fn mixed(components: Vec<(f64, SourceModel)>) -> Result<Self> {
        check_weights(components.iter().map(|c| c.0))?;
        Ok(SourceModel::Mixed(components))
    }

    /// Number of length-`n` outcomes (saturating).
    pub fn outcomes(&self, n: usize) -> Result<u128> {
        match self {
            SourceModel::Iid(p) => Ok(pow_u128(p.len(), n)),
            SourceModel::UniformMessage(sizes) => Ok(sizes.size(n)? as u128),
            SourceModel::Table(t) => {
                Ok(t.get(&n).ok_or(Error::MissingBlocklength(n))?.len() as u128)
            }
            SourceModel::Mixed(cs) => {
                let mut count = None;
                for (_, c) in cs {
                    let k = c.outcomes(n)?;
                    match count {
                        None => count = Some(k),
                        Some(m) if m != k => {
                            return Err(Error::AlphabetMismatch(format!(
                                "mixture components have {m} and {k} outcomes at n = {n}"
                            )))
                        }
                        _ => {}
                    }
                }
                count.ok_or_else(|| Error::InvalidArgument("mixture has no components".into()))
            }
        }
    }

    /// Letter alphabet size for product families.
    pub fn letter_alphabet(&self) -> Option<usize> {
        match self {
            SourceModel::Iid(p) => Some(p.len()),
            SourceModel::Mixed(cs) => {
                let sizes: Vec<Option<usize>> =
                    cs.iter().map(|(_, c)| c.letter_alphabet()).collect();
                match sizes.first() {
                    Some(&Some(k)) if sizes.iter().all(|s| *s == Some(k)) => Some(k),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Exact pmf of `V^n`.
    pub fn pmf(&self, n: usize, budget: &Budget) -> Result<Vec<f64>> {
        budget.check("source outcomes", self.outcomes(n)?)?;
        Ok(match self {
            SourceModel::Iid(p) => p.power(n),
            SourceModel::UniformMessage(sizes) => {
                let m = sizes.size(n)?;
                vec![1.0 / m as f64; m as usize]
            }
            SourceModel::Table(t) => t[&n].probs().to_vec(),
            SourceModel::Mixed(cs) => {
                let mut out = vec![0.0; self.outcomes(n)? as usize];
                for (w, c) in cs {
                    for (o, p) in out.iter_mut().zip(c.pmf(n, budget)?) {
                        *o += w * p;
                    }
                }
                out
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Dmc(Kernel),
    Deterministic {
        map: Vec<usize>,
        outputs: usize,
    },
    Mixed(Vec<(f64, ChannelModel)>),
    /// One explicit kernel per blocklength.
    Table(BTreeMap<usize, Kernel>),
}

impl ChannelModel {
    pub fn mixed(components: Vec<(f64, ChannelModel)>) -> Result<Self> {
        check_weights(components.iter().map(|c| c.0))?;
        Ok(ChannelModel::Mixed(components))
    }

    /// Per-letter kernel when the channel is memoryless.
    pub fn letter_kernel(&self) -> Result<Option<Kernel>> {
        Ok(match self {
            ChannelModel::Dmc(k) => Some(k.clone()),
            ChannelModel::Deterministic { map, outputs } => Some(Kernel::from_map(map, *outputs)?),
            _ => None,
        })
    }

    fn letter_sizes(&self) -> Option<(usize, usize)> {
        match self {
            ChannelModel::Dmc(k) => Some((k.inputs(), k.outputs())),
            ChannelModel::Deterministic { map, outputs } => Some((map.len(), *outputs)),
            ChannelModel::Mixed(cs) => {
                let sizes: Vec<_> = cs.iter().map(|(_, c)| c.letter_sizes()).collect();
                match sizes.first() {
                    Some(&Some(s)) if sizes.iter().all(|x| *x == Some(s)) => Some(s),
                    _ => None,
                }
            }
            ChannelModel::Table(_) => None,
        }
    }

    pub fn input_letters(&self) -> Option<usize> {
        self.letter_sizes().map(|s| s.0)
    }

    /// Input and output outcome counts at blocklength `n` (saturating).
    pub fn outcomes(&self, n: usize) -> Result<(u128, u128)> {
        if let ChannelModel::Table(t) = self {
            let k = t.get(&n).ok_or(Error::MissingBlocklength(n))?;
            return Ok((k.inputs() as u128, k.outputs() as u128));
        }
        if let ChannelModel::Mixed(cs) = self {
            let mut sizes = None;
            for (_, c) in cs {
                let s = c.outcomes(n)?;
                if sizes.is_some_and(|t| t != s) {
                    return Err(Error::AlphabetMismatch(
                        "mixed channel components have different alphabets".into(),
                    ));
                }
                sizes = Some(s);
            }
            return sizes.ok_or_else(|| Error::InvalidArgument("mixture has no components".into()));
        }
        let (kx, ky) = self.letter_sizes().expect("memoryless channel");
        Ok((pow_u128(kx, n), pow_u128(ky, n)))
    }

    /// `W^n(y|x)`.
    pub fn prob(&self, n: usize, x: usize, y: usize) -> Result<f64> {
        match self {
            ChannelModel::Dmc(k) => Ok(letterwise_prob(k, n, x, y)),
            ChannelModel::Deterministic { map, outputs } => {
                let (mut x, mut y) = (x, y);
                for _ in 0..n {
                    if map[x % map.len()] != y % outputs {
                        return Ok(0.0);
                    }
                    x /= map.len();
                    y /= outputs;
                }
                Ok(1.0)
            }
            ChannelModel::Mixed(cs) => {
                let mut acc = 0.0;
                for (w, c) in cs {
                    acc += w * c.prob(n, x, y)?;
                }
                Ok(acc)
            }
            ChannelModel::Table(t) => Ok(t.get(&n).ok_or(Error::MissingBlocklength(n))?.get(x, y)),
        }
    }

    /// Dense `n`-block kernel.
    pub fn kernel(&self, n: usize, budget: &Budget) -> Result<Kernel> {
        let (nx, ny) = self.outcomes(n)?;
        budget.check("channel input-output pairs", nx.saturating_mul(ny))?;
        Ok(match self {
            ChannelModel::Table(t) => t[&n].clone(),
            ChannelModel::Mixed(cs) => {
                let mut data = vec![0.0; (nx * ny) as usize];
                for (w, c) in cs {
                    let k = c.kernel(n, budget)?;
                    for (d, v) in data.iter_mut().zip(&k.data) {
                        *d += w * v;
                    }
                }
                Kernel {
                    rows: nx as usize,
                    cols: ny as usize,
                    data,
                }
            }
            _ => self.letter_kernel()?.expect("memoryless channel").power(n),
        })
    }
}

fn letterwise_prob(k: &Kernel, n: usize, mut x: usize, mut y: usize) -> f64 {
    let mut p = 1.0;
    for _ in 0..n {
        p *= k.get(x % k.inputs(), y % k.outputs());
        x /= k.inputs();
        y /= k.outputs();
    }
    p
}

/// Deterministic encoders `V^n -> X^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    /// Applies a per-letter map to every position.
    Letterwise(Vec<usize>),
    /// Explicit encoder per blocklength.
    Table(BTreeMap<usize, Vec<usize>>),
}

impl Encoder {
    pub fn from_code(code: &JointCode) -> Self {
        Encoder::Table(BTreeMap::from([(code.n, code.encoder.clone())]))
    }

    /// Codeword index for every source outcome.
    pub fn codewords(
        &self,
        n: usize,
        source_letters: Option<usize>,
        input_letters: Option<usize>,
        source_outcomes: usize,
    ) -> Result<Vec<usize>> {
        match self {
            Encoder::Table(t) => {
                let e = t.get(&n).ok_or(Error::MissingBlocklength(n))?;
                if e.len() != source_outcomes {
                    return Err(Error::AlphabetMismatch(format!(
                        "encoder covers {} source outcomes, source has {source_outcomes}",
                        e.len()
                    )));
                }
                Ok(e.clone())
            }
            Encoder::Letterwise(map) => {
                let kv = source_letters.ok_or_else(|| {
                    Error::AlphabetMismatch("letterwise encoder needs a product source".into())
                })?;
                let kx = input_letters.ok_or_else(|| {
                    Error::AlphabetMismatch("letterwise encoder needs a memoryless channel".into())
                })?;
                if map.len() != kv || map.iter().any(|&x| x >= kx) {
                    return Err(Error::AlphabetMismatch(format!(
                        "letterwise encoder {map:?} does not map {kv} letters into {kx}"
                    )));
                }
                Ok((0..source_outcomes)
                    .map(|mut v| {
                        let mut x = 0;
                        let mut scale = 1;
                        for _ in 0..n {
                            x += map[v % kv] * scale;
                            scale *= kx;
                            v /= kv;
                        }
                        x
                    })
                    .collect())
            }
        }
    }
}

/// Law of the channel input `X^n` given the source output `V^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputModel {
    /// Independent of the source, memoryless.
    Iid(Pmf),
    /// Independent of the source, explicit per blocklength.
    Table(BTreeMap<usize, Pmf>),
    /// Memoryless conditional law: row `v` is `P(x|v)` per letter.
    ConditionalIid(Vec<Pmf>),
    /// Explicit `P(x^n|v^n)` per blocklength, one row per source outcome.
    ConditionalTable(BTreeMap<usize, Vec<Pmf>>),
    Encoder(Encoder),
}

impl InputModel {
    pub fn is_independent(&self) -> bool {
        matches!(self, InputModel::Iid(_) | InputModel::Table(_))
    }

    pub fn is_encoder(&self) -> bool {
        matches!(self, InputModel::Encoder(_))
    }

    /// Input pmf for source-independent laws.
    pub fn independent_pmf(&self, n: usize, budget: &Budget) -> Result<Vec<f64>> {
        match self {
            InputModel::Iid(p) => {
                budget.check("input outcomes", pow_u128(p.len(), n))?;
                Ok(p.power(n))
            }
            InputModel::Table(t) => Ok(t
                .get(&n)
                .ok_or(Error::MissingBlocklength(n))?
                .probs()
                .to_vec()),
            _ => Err(Error::JointRequired),
        }
    }
}

/// `P(x^n|v^n)` materialized for one blocklength.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionalLaw {
    Independent(Vec<f64>),
    Rows(Kernel),
    Encoder(Vec<usize>),
}

impl ConditionalLaw {
    /// Nonzero `(x, P(x|v))` pairs.
    pub fn row(&self, v: usize) -> Vec<(usize, f64)> {
        match self {
            ConditionalLaw::Independent(p) => nonzero(p),
            ConditionalLaw::Rows(k) => nonzero(k.row(v)),
            ConditionalLaw::Encoder(e) => vec![(e[v], 1.0)],
        }
    }
}

fn nonzero(p: &[f64]) -> Vec<(usize, f64)> {
    p.iter()
        .copied()
        .enumerate()
        .filter(|(_, q)| *q > 0.0)
        .collect()
}

/// Every probability of the chain `V^n -> X^n -> Y^n` at one blocklength.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    pub n: usize,
    pub p_v: Vec<f64>,
    pub input: ConditionalLaw,
    pub channel: Kernel,
    /// Output law induced by the input law (the ensemble law for random codes).
    pub p_y: Vec<f64>,
}

impl ExactModel {
    pub fn build(
        src: &SourceModel,
        input: &InputModel,
        ch: &ChannelModel,
        n: usize,
        budget: &Budget,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be positive".into(),
            ));
        }
        let nv = src.outcomes(n)?;
        let (nx, ny) = ch.outcomes(n)?;
        let required = match input {
            InputModel::Iid(_) | InputModel::Table(_) => nv.saturating_add(nx.saturating_mul(ny)),
            InputModel::Encoder(_) => nv.saturating_mul(ny).saturating_add(nx.saturating_mul(ny)),
            _ => nv.saturating_mul(nx).saturating_mul(ny),
        };
        budget.check("joint outcomes", required)?;
        let p_v = src.pmf(n, budget)?;
        let channel = ch.kernel(n, budget)?;
        let (nv, nx, ny) = (nv as usize, nx as usize, ny as usize);

        let law = match input {
            InputModel::Iid(_) | InputModel::Table(_) => {
                let p = input.independent_pmf(n, budget)?;
                if p.len() != nx {
                    return Err(Error::AlphabetMismatch(format!(
                        "input law has {} outcomes, channel accepts {nx}",
                        p.len()
                    )));
                }
                ConditionalLaw::Independent(p)
            }
            InputModel::ConditionalIid(rows) => {
                let letters = Kernel::new(rows.iter().map(|r| r.probs().to_vec()).collect())?;
                let k = letters.power(n);
                if k.inputs() != nv || k.outputs() != nx {
                    return Err(Error::AlphabetMismatch(format!(
                        "conditional input is {}x{}, model needs {nv}x{nx}",
                        k.inputs(),
                        k.outputs()
                    )));
                }
                ConditionalLaw::Rows(k)
            }
            InputModel::ConditionalTable(t) => {
                let rows = t.get(&n).ok_or(Error::MissingBlocklength(n))?;
                let k = Kernel::new(rows.iter().map(|r| r.probs().to_vec()).collect())?;
                if k.inputs() != nv || k.outputs() != nx {
                    return Err(Error::AlphabetMismatch(format!(
                        "conditional input is {}x{}, model needs {nv}x{nx}",
                        k.inputs(),
                        k.outputs()
                    )));
                }
                ConditionalLaw::Rows(k)
            }
            InputModel::Encoder(e) => {
                let cw = e.codewords(n, src.letter_alphabet(), ch.input_letters(), nv)?;
                if let Some(&x) = cw.iter().find(|&&x| x >= nx) {
                    return Err(Error::AlphabetMismatch(format!(
                        "codeword {x} outside input alphabet of size {nx}"
                    )));
                }
                ConditionalLaw::Encoder(cw)
            }
        };

        let p_x = match &law {
            ConditionalLaw::Independent(p) => p.clone(),
            _ => {
                let mut p_x = vec![0.0; nx];
                for (v, &pv) in p_v.iter().enumerate() {
                    if pv > 0.0 {
                        for (x, q) in law.row(v) {
                            p_x[x] += pv * q;
                        }
                    }
                }
                p_x
            }
        };
        let mut p_y = vec![0.0; ny];
        for (x, &px) in p_x.iter().enumerate() {
            if px > 0.0 {
                for (y, w) in channel.row(x).iter().enumerate() {
                    p_y[y] += px * w;
                }
            }
        }
        Ok(ExactModel {
            n,
            p_v,
            input: law,
            channel,
            p_y,
        })
    }

    /// `(1/n) ln 1/P(v)`, `+inf` for null outcomes.
    pub fn b(&self, v: usize) -> f64 {
        let p = self.p_v[v];
        if p > 0.0 {
            -p.ln() / self.n as f64
        } else {
            f64::INFINITY
        }
    }

    /// `(1/n) ln W(y|x)/P_Y(y)`, `-inf` where `W(y|x) = 0`.
    pub fn a(&self, x: usize, y: usize) -> f64 {
        let w = self.channel.get(x, y);
        if w > 0.0 {
            (w.ln() - self.p_y[y].ln()) / self.n as f64
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Exact joint law of `(A_n, B_n)` by enumeration of `(v, x, y)`.
    pub fn joint_spectrum(&self) -> Result<JointSpectrum> {
        let ny = self.p_y.len();
        let nx = self.channel.inputs();
        // index distinct a-values over (x, y) and b-values over v
        let a_vals: Vec<f64> = (0..nx * ny).map(|i| self.a(i / ny, i % ny)).collect();
        let (a_index, a_atoms) = index_values(&a_vals);
        let b_vals: Vec<f64> = (0..self.p_v.len()).map(|v| self.b(v)).collect();
        let (b_index, b_atoms) = index_values(&b_vals);

        let mut masses: HashMap<(u32, u32), f64> = HashMap::new();
        for (v, &pv) in self.p_v.iter().enumerate() {
            if pv == 0.0 {
                continue;
            }
            for (x, q) in self.input.row(v) {
                let pvx = pv * q;
                for (y, &w) in self.channel.row(x).iter().enumerate() {
                    if w > 0.0 {
                        *masses
                            .entry((a_index[x * ny + y], b_index[v]))
                            .or_insert(0.0) += pvx * w;
                    }
                }
            }
        }
        let mut triples: Vec<((u32, u32), f64)> = masses.into_iter().collect();
        triples.sort_by_key(|t| t.0);
        JointSpectrum::from_masses(
            triples
                .into_iter()
                .map(|((ai, bi), m)| (a_atoms[ai as usize], b_atoms[bi as usize], m)),
            self.n,
        )
    }
}

/// Maps each value to the index of its merged representative.
fn index_values(values: &[f64]) -> (Vec<u32>, Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut index = vec![0u32; values.len()];
    let mut reps: Vec<f64> = Vec::new();
    for i in order {
        let v = values[i];
        match reps.last() {
            Some(&r) if v == r || v - r <= MERGE_TOL => {}
            _ => reps.push(v),
        }
        index[i] = (reps.len() - 1) as u32;
    }
    (index, reps)
}

fn self_information_spectrum(pmf: &[f64], n: usize) -> Result<Spectrum> {
    let nf = n as f64;
    Spectrum::from_masses(
        pmf.iter().filter(|&&p| p > 0.0).map(|&p| (-p.ln() / nf, p)),
        n,
    )
}

/// Exact law of `(1/n) ln 1/P(V^n)`.
///
/// Mixed sources are enumerated within budget. Beyond it the upper side of
/// the mixture bracket is returned; see [`entropy_bracket`].
pub fn entropy_spectrum(src: &SourceModel, n: usize, budget: &Budget) -> Result<Spectrum> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "blocklength must be positive".into(),
        ));
    }
    match src {
        SourceModel::Iid(p) => convolve_iid(&self_information_spectrum(p.probs(), 1)?, n),
        SourceModel::UniformMessage(sizes) => {
            Spectrum::point_mass((sizes.size(n)? as f64).ln() / n as f64, n)
        }
        SourceModel::Table(_) => self_information_spectrum(&src.pmf(n, budget)?, n),
        SourceModel::Mixed(_) => Ok(entropy_bracket(src, n, budget)?.upper),
    }
}

/// Stochastic bracket on the entropy spectrum; exact (`lower == upper`)
/// whenever the source can be enumerated within budget.
pub fn entropy_bracket(src: &SourceModel, n: usize, budget: &Budget) -> Result<SpectrumBracket> {
    match src {
        SourceModel::Mixed(cs) if src.outcomes(n)? > budget.enumeration as u128 => {
            let comps = cs
                .iter()
                .map(|(w, c)| Ok((*w, entropy_spectrum(c, n, budget)?)))
                .collect::<Result<Vec<_>>>()?;
            mixture_sandwich(&comps, n, default_lower_slack(n))
        }
        SourceModel::Mixed(_) => Ok(SpectrumBracket::exact(self_information_spectrum(
            &src.pmf(n, budget)?,
            n,
        )?)),
        _ => Ok(SpectrumBracket::exact(entropy_spectrum(src, n, budget)?)),
    }
}

/// Per-letter information density law of a memoryless channel under an iid input.
pub fn letter_information_spectrum(kernel: &Kernel, input: &Pmf) -> Result<Spectrum> {
    if kernel.inputs() != input.len() {
        return Err(Error::AlphabetMismatch(format!(
            "input pmf has {} letters, channel accepts {}",
            input.len(),
            kernel.inputs()
        )));
    }
    let mut p_y = vec![0.0; kernel.outputs()];
    for (x, &px) in input.probs().iter().enumerate() {
        for (y, w) in kernel.row(x).iter().enumerate() {
            p_y[y] += px * w;
        }
    }
    let mut pairs = Vec::new();
    for (x, &px) in input.probs().iter().enumerate() {
        for (y, &w) in kernel.row(x).iter().enumerate() {
            if px > 0.0 && w > 0.0 {
                pairs.push(((w / p_y[y]).ln(), px * w));
            }
        }
    }
    Spectrum::from_masses(pairs, 1)
}

/// Exact law of `(1/n) ln W(Y^n|X^n)/P_Y(Y^n)` for a source-independent input.
pub fn information_spectrum(
    ch: &ChannelModel,
    input: &InputModel,
    n: usize,
    budget: &Budget,
) -> Result<Spectrum> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "blocklength must be positive".into(),
        ));
    }
    if !input.is_independent() {
        return Err(Error::JointRequired);
    }
    if let (InputModel::Iid(p), Some(k)) = (input, ch.letter_kernel()?) {
        return convolve_iid(&letter_information_spectrum(&k, p)?, n);
    }
    let (nx, ny) = ch.outcomes(n)?;
    budget.check("channel input-output pairs", nx.saturating_mul(ny))?;
    let p_x = input.independent_pmf(n, budget)?;
    if p_x.len() as u128 != nx {
        return Err(Error::AlphabetMismatch(format!(
            "input law has {} outcomes, channel accepts {nx}",
            p_x.len()
        )));
    }
    let kernel = ch.kernel(n, budget)?;
    let mut p_y = vec![0.0; ny as usize];
    for (x, &px) in p_x.iter().enumerate() {
        for (y, w) in kernel.row(x).iter().enumerate() {
            p_y[y] += px * w;
        }
    }
    let nf = n as f64;
    let mut pairs = Vec::new();
    for (x, &px) in p_x.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &w) in kernel.row(x).iter().enumerate() {
            if w > 0.0 {
                pairs.push(((w.ln() - p_y[y].ln()) / nf, px * w));
            }
        }
    }
    Spectrum::from_masses(pairs, n)
}

/// Joint law of `(A_n, B_n)`. Source-independent inputs give the product of
/// the marginals; conditional inputs and encoders are enumerated.
pub fn joint_density_spectrum(
    src: &SourceModel,
    input: &InputModel,
    ch: &ChannelModel,
    n: usize,
    budget: &Budget,
) -> Result<JointSpectrum> {
    if input.is_independent() {
        let b = entropy_spectrum(src, n, budget)?;
        let a = information_spectrum(ch, input, n, budget)?;
        return JointSpectrum::product(a, b);
    }
    ExactModel::build(src, input, ch, n, budget)?.joint_spectrum()
}

/// The ternary-source, binary-channel example separating average and
/// maximum error. Channel letters `{1, 2}` are indices `0, 1`; source
/// letters `{0, 1, 2}` are indices `0, 1, 2`. The code sends `0` and `1` to
/// channel letter `1` and decodes by identity, so symbol `0` is always lost.
pub fn average_vs_max_instance(alpha: f64) -> Result<(SourceModel, ChannelModel, JointCode)> {
    let (src, ch, mut codes) = average_vs_max_schedule(&[(1, alpha)])?;
    Ok((src, ch, codes.remove(0)))
}

/// Per-blocklength version of [`average_vs_max_instance`] with `alpha_n` given for each `n`.
/// The statistics are normalized by `n` while the alphabet stays ternary.
pub fn average_vs_max_schedule(
    alphas: &[(usize, f64)],
) -> Result<(SourceModel, ChannelModel, Vec<JointCode>)> {
    let mut pmfs = BTreeMap::new();
    let mut kernels = BTreeMap::new();
    let mut codes = Vec::new();
    for &(n, alpha) in alphas {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} outside (0, 1)"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be positive".into(),
            ));
        }
        let rest = (1.0 - alpha) / 2.0;
        pmfs.insert(n, Pmf::new(vec![alpha, rest, rest])?);
        kernels.insert(n, Kernel::identity(2)?);
        codes.push(JointCode::new(n, vec![0, 0, 1], vec![Some(1), Some(2)]));
    }
    Ok((
        SourceModel::Table(pmfs),
        ChannelModel::Table(kernels),
        codes,
    ))
}

/// `alpha_n = 1/(n+1)` on a grid, the vanishing schedule used for the
/// average-versus-maximum illustration.
pub fn harmonic_alphas(n_grid: &[usize]) -> Vec<(usize, f64)> {
    n_grid
        .iter()
        .map(|&n| (n, 1.0 / (n as f64 + 1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn uniform_message_power_is_point_mass() {
        let src = SourceModel::UniformMessage(MessageSizes::Power(2));
        let s = entropy_spectrum(&src, 8, &Budget::default()).unwrap();
        assert_eq!(s.atoms().len(), 1);
        assert!((s.atoms()[0].value - LN2).abs() < 1e-15);
    }

    #[test]
    fn fair_coin_entropy_is_ln2() {
        let src = SourceModel::Iid(Pmf::bernoulli(0.5).unwrap());
        let s = entropy_spectrum(&src, 3, &Budget::default()).unwrap();
        assert_eq!(s.atoms().len(), 1);
        assert!((s.atoms()[0].value - LN2).abs() < 1e-15);
    }

    #[test]
    fn biased_coin_pair_atoms() {
        let src = SourceModel::Iid(Pmf::bernoulli(0.11).unwrap());
        let s = entropy_spectrum(&src, 2, &Budget::default()).unwrap();
        let expected = [(0.11653, 0.7921), (1.16190, 0.1958), (2.20727, 0.0121)];
        for (a, (v, m)) in s.atoms().iter().zip(expected) {
            assert!((a.value - v).abs() < 5e-6, "{} vs {v}", a.value);
            assert!((a.mass - m).abs() < 1e-12);
        }
    }

    #[test]
    fn bsc_single_use_density() {
        let ch = ChannelModel::Dmc(Kernel::bsc(0.1).unwrap());
        let input = InputModel::Iid(Pmf::uniform(2).unwrap());
        let s = information_spectrum(&ch, &input, 1, &Budget::default()).unwrap();
        assert_eq!(s.atoms().len(), 2);
        assert!((s.atoms()[0].value - 0.2f64.ln()).abs() < 1e-12);
        assert!((s.atoms()[0].mass - 0.1).abs() < 1e-12);
        assert!((s.atoms()[1].value - 1.8f64.ln()).abs() < 1e-12);
        assert!((s.atoms()[1].mass - 0.9).abs() < 1e-12);
    }

    #[test]
    fn noiseless_density_is_ln2() {
        let ch = ChannelModel::Deterministic {
            map: vec![0, 1],
            outputs: 2,
        };
        let input = InputModel::Iid(Pmf::uniform(2).unwrap());
        for n in [1, 5, 40] {
            let s = information_spectrum(&ch, &input, n, &Budget::default()).unwrap();
            assert_eq!(s.atoms().len(), 1);
            assert!((s.atoms()[0].value - LN2).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_mixed_channel() {
        let k = Kernel::bsc(0.2).unwrap();
        let mixed = ChannelModel::mixed(vec![
            (0.5, ChannelModel::Dmc(k.clone())),
            (0.5, ChannelModel::Dmc(k.clone())),
        ])
        .unwrap();
        let input = InputModel::Iid(Pmf::uniform(2).unwrap());
        let b = Budget::default();
        for n in 1..=4 {
            let m = information_spectrum(&mixed, &input, n, &b).unwrap();
            let d = information_spectrum(&ChannelModel::Dmc(k.clone()), &input, n, &b).unwrap();
            assert_eq!(m.atoms().len(), d.atoms().len());
            for (x, y) in m.atoms().iter().zip(d.atoms()) {
                assert!((x.value - y.value).abs() < 1e-12 && (x.mass - y.mass).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_message_joint_over_noiseless() {
        let src = SourceModel::UniformMessage(MessageSizes::Constant(2));
        let ch = ChannelModel::Dmc(Kernel::identity(2).unwrap());
        let input = InputModel::Iid(Pmf::uniform(2).unwrap());
        let j = joint_density_spectrum(&src, &input, &ch, 2, &Budget::default()).unwrap();
        let atoms = j.atoms();
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].a - LN2).abs() < 1e-15);
        assert!((atoms[0].b - LN2 / 2.0).abs() < 1e-15);
        assert!((atoms[0].mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn average_vs_max_joint_has_three_atoms() {
        let (src, ch, code) = average_vs_max_instance(0.2).unwrap();
        let input = InputModel::Encoder(Encoder::from_code(&code));
        let j = joint_density_spectrum(&src, &input, &ch, 1, &Budget::default()).unwrap();
        // P_Y = (0.6, 0.4); v=0 and v=1 share x=1 but differ in b
        let atoms = j.atoms();
        assert_eq!(atoms.len(), 3);
        let expect = [
            ((1.0f64 / 0.6).ln(), (1.0f64 / 0.4).ln(), 0.4),
            ((1.0f64 / 0.6).ln(), (1.0f64 / 0.2).ln(), 0.2),
            ((1.0f64 / 0.4).ln(), (1.0f64 / 0.4).ln(), 0.4),
        ];
        for (atom, (a, b, m)) in atoms.iter().zip(expect) {
            assert!((atom.a - a).abs() < 1e-12, "{atom:?}");
            assert!((atom.b - b).abs() < 1e-12, "{atom:?}");
            assert!((atom.mass - m).abs() < 1e-12, "{atom:?}");
        }
    }

    #[test]
    fn conditional_input_requires_joint() {
        let ch = ChannelModel::Dmc(Kernel::bsc(0.1).unwrap());
        let input = InputModel::ConditionalIid(vec![Pmf::uniform(2).unwrap(); 2]);
        assert_eq!(
            information_spectrum(&ch, &input, 1, &Budget::default()),
            Err(Error::JointRequired)
        );
    }

    #[test]
    fn budget_is_enforced() {
        let src = SourceModel::Table(BTreeMap::from([(1, Pmf::uniform(10).unwrap())]));
        let err = src.pmf(1, &Budget::with_enumeration(5)).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn average_vs_max_rejects_bad_alpha() {
        assert!(average_vs_max_instance(0.0).is_err());
        assert!(average_vs_max_instance(1.0).is_err());
    }

    #[test]
    fn truncated_geometric_keeps_tail() {
        let p = Pmf::truncate_countable(|k| 0.5f64.powi(k as i32 + 1), 1e-12).unwrap();
        let tail = *p.probs().last().unwrap();
        assert!(tail <= 1e-12 && tail > 0.0);
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_message_sizes() {
        assert_eq!(MessageSizes::Rate(LN2).size(10).unwrap(), 1024);
        assert_eq!(MessageSizes::Rate(0.0).size(10).unwrap(), 1);
        assert_eq!(MessageSizes::Power(3).size(4).unwrap(), 81);
    }
}
