//! Exact discrete laws of normalized information statistics.
//!
//! A [`Spectrum`] holds the distribution of a real-valued per-symbol
//! statistic such as `(1/n) ln 1/P(V^n)` (entropy spectrum) or
//! `(1/n) ln W(Y^n|X^n)/P(Y^n)` (mutual information spectrum). Values are in
//! nats. Outcomes whose statistic is `+inf` are kept as an explicit mass so
//! that the total is always one.

use crate::error::{Error, Result};
use crate::numeric;

/// Atoms whose values differ by at most this much are merged.
pub const MERGE_TOL: f64 = 1e-12;
/// Total-mass tolerance for every constructed law.
pub const MASS_TOL: f64 = 1e-12;
/// Values within this distance of an event threshold count as on the boundary.
///
/// Statistics are computed from logarithms along different arithmetic paths
/// (convolution sums versus direct enumeration), so two routes to the same
/// exact value can disagree in the last few ulps. Every inclusive event in the
/// crate (`<=`, `>=`) admits atoms within this distance and every strict event
/// excludes them, which keeps complementary events consistent.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Agreement required of the last three grid thresholds to flag convergence.
pub const STABILIZATION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub mass: f64,
}

/// Discrete distribution of a normalized information statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    atoms: Vec<Atom>,
    /// `cumulative[i]` is the mass of `atoms[..=i]`.
    cumulative: Vec<f64>,
    pos_inf_mass: f64,
    n: usize,
}

/// Sort by value and merge runs whose values lie within `tol` of the run's
/// first value. Zero masses are dropped.
fn merge_pairs(mut pairs: Vec<(f64, f64)>, tol: f64) -> Vec<Atom> {
    pairs.retain(|&(_, m)| m > 0.0);
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<Atom> = Vec::with_capacity(pairs.len());
    let mut anchor = f64::NAN;
    for (value, mass) in pairs {
        match out.last_mut() {
            Some(last) if value - anchor <= tol => last.mass += mass,
            _ => {
                anchor = value;
                out.push(Atom { value, mass });
            }
        }
    }
    out
}

fn check_mass(value: f64, mass: f64) -> Result<()> {
    if !mass.is_finite() || mass < 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "mass {mass} at value {value} is not a probability"
        )));
    }
    if value.is_nan() || (value == f64::NEG_INFINITY && mass > 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "value {value} carries positive mass {mass}"
        )));
    }
    Ok(())
}

impl Spectrum {
    /// Builds a spectrum from `(value, mass)` pairs. `+inf` values are routed
    /// to the sentinel mass; zero masses are dropped; near-equal values merge.
    pub fn from_masses<I>(pairs: I, n: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be positive".into(),
            ));
        }
        let mut finite = Vec::new();
        let mut inf = numeric::NeumaierSum::new();
        for (value, mass) in pairs {
            check_mass(value, mass)?;
            if value == f64::INFINITY {
                inf.add(mass);
            } else if mass > 0.0 {
                finite.push((value, mass));
            }
        }
        let atoms = merge_pairs(finite, MERGE_TOL);
        Self::from_atoms(atoms, inf.value(), n)
    }

    fn from_atoms(atoms: Vec<Atom>, pos_inf_mass: f64, n: usize) -> Result<Self> {
        let mut acc = numeric::NeumaierSum::new();
        let cumulative: Vec<f64> = atoms
            .iter()
            .map(|a| {
                acc.add(a.mass);
                acc.value()
            })
            .collect();
        let total = acc.value() + pos_inf_mass;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "spectrum mass sums to {total}, expected 1"
            )));
        }
        let s = Spectrum {
            atoms,
            cumulative,
            pos_inf_mass,
            n,
        };
        debug_assert!(s.check_invariants().is_ok());
        Ok(s)
    }

    pub fn point_mass(value: f64, n: usize) -> Result<Self> {
        Self::from_masses([(value, 1.0)], n)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pos_inf_mass(&self) -> f64 {
        self.pos_inf_mass
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0) + self.pos_inf_mass
    }

    /// Mass of the finite atoms.
    fn finite_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn check_invariants(&self) -> Result<()> {
        if (self.total_mass() - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution("total mass is not 1".into()));
        }
        for w in self.atoms.windows(2) {
            if w[1].value - w[0].value <= MERGE_TOL {
                return Err(Error::InvalidDistribution(
                    "atoms not strictly increasing beyond merge tolerance".into(),
                ));
            }
        }
        if self
            .atoms
            .iter()
            .any(|a| a.mass <= 0.0 || !a.value.is_finite())
        {
            return Err(Error::InvalidDistribution(
                "nonpositive mass or infinite atom".into(),
            ));
        }
        Ok(())
    }

    /// Expectation of the statistic (`+inf` if the sentinel carries mass).
    pub fn mean(&self) -> f64 {
        if self.pos_inf_mass > 0.0 {
            return f64::INFINITY;
        }
        numeric::sum(self.atoms.iter().map(|a| a.value * a.mass))
    }

    fn mass_before(&self, idx: usize) -> f64 {
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// `Pr{Z >= t}`, sentinel included.
    pub fn ccdf(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return self.pos_inf_mass;
        }
        let idx = self.atoms.partition_point(|a| a.value < t - BOUNDARY_TOL);
        ((self.finite_mass() - self.mass_before(idx)).max(0.0) + self.pos_inf_mass).min(1.0)
    }

    /// `Pr{Z <= t}`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 1.0;
        }
        let idx = self.atoms.partition_point(|a| a.value <= t + BOUNDARY_TOL);
        self.mass_before(idx).min(1.0)
    }

    /// `Pr{Z < t}`.
    pub fn prob_lt(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return self.finite_mass();
        }
        let idx = self.atoms.partition_point(|a| a.value < t - BOUNDARY_TOL);
        self.mass_before(idx).min(1.0)
    }

    /// `Pr{Z > t}`.
    pub fn prob_gt(&self, t: f64) -> f64 {
        (1.0 - self.cdf(t)).max(0.0)
    }

    /// `Pr{Z = t}` up to the boundary tolerance.
    pub fn prob_eq(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return self.pos_inf_mass;
        }
        (self.cdf(t) - self.prob_lt(t)).max(0.0)
    }

    /// Left-continuous inverse of the cdf: `inf{t : cdf(t) >= p}`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let idx = self.cumulative.partition_point(|&c| c < p - 1e-14);
        match self.atoms.get(idx) {
            Some(a) => a.value,
            None => f64::INFINITY,
        }
    }

    /// `inf{a : Pr{Z > a} <= eps}`, the per-n threshold behind p-limsup.
    pub fn upper_threshold(&self, eps: f64) -> f64 {
        let total_finite = self.finite_mass();
        // mass strictly above atom i is total_finite - cumulative[i] + pos_inf
        let idx = self
            .cumulative
            .partition_point(|&c| total_finite - c + self.pos_inf_mass > eps);
        match self.atoms.get(idx) {
            Some(a) => a.value,
            None => f64::INFINITY,
        }
    }

    /// `sup{b : Pr{Z < b} <= eps}`, the per-n threshold behind p-liminf.
    pub fn lower_threshold(&self, eps: f64) -> f64 {
        // largest i with mass_before(i) <= eps
        let count = self.cumulative.partition_point(|&c| c <= eps);
        // atoms[0..=count] have mass_before <= eps
        if count >= self.atoms.len() {
            return f64::INFINITY;
        }
        self.atoms[count].value
    }

    /// Adds `delta` to every finite value.
    pub fn shifted(&self, delta: f64) -> Spectrum {
        let pairs = self.atoms.iter().map(|a| (a.value + delta, a.mass));
        let atoms = merge_pairs(pairs.collect(), MERGE_TOL);
        Self::from_atoms(atoms, self.pos_inf_mass, self.n).expect("shift preserves mass")
    }

    /// Convex combination of spectra sharing one blocklength.
    pub fn mix(components: &[(f64, &Spectrum)]) -> Result<Spectrum> {
        let n = validate_components(components.iter().map(|(w, s)| (*w, s.n)))?;
        let mut pairs = Vec::new();
        let mut inf = numeric::NeumaierSum::new();
        for (w, s) in components {
            pairs.extend(s.atoms.iter().map(|a| (a.value, w * a.mass)));
            inf.add(w * s.pos_inf_mass);
        }
        Self::from_atoms(merge_pairs(pairs, MERGE_TOL), inf.value(), n)
    }

    /// True when `self` is stochastically no larger than `other`
    /// (`Pr_self{Z >= t} <= Pr_other{Z >= t} + tol` for every `t`).
    pub fn stochastically_le(&self, other: &Spectrum, tol: f64) -> bool {
        self.atoms
            .iter()
            .chain(other.atoms.iter())
            .map(|a| a.value)
            .chain(std::iter::once(f64::INFINITY))
            .all(|t| self.ccdf(t) <= other.ccdf(t) + tol)
    }
}

fn validate_components<I: Iterator<Item = (f64, usize)>>(components: I) -> Result<usize> {
    let mut n = None;
    let mut total = numeric::NeumaierSum::new();
    let mut count = 0;
    for (w, k) in components {
        count += 1;
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "mixture weight {w} must be positive"
            )));
        }
        total.add(w);
        match n {
            None => n = Some(k),
            Some(m) if m != k => {
                return Err(Error::InvalidArgument(format!(
                    "mixture components have blocklengths {m} and {k}"
                )))
            }
            _ => {}
        }
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
    Ok(n.unwrap())
}

/// Pairwise sum-convolution of two sub-probability atom lists.
fn convolve_pair(x: &[Atom], y: &[Atom], tol: f64) -> Vec<Atom> {
    let mut pairs = Vec::with_capacity(x.len() * y.len());
    for a in x {
        for b in y {
            pairs.push((a.value + b.value, a.mass * b.mass));
        }
    }
    merge_pairs(pairs, tol)
}

/// Exact law of the average of `n` independent copies of a per-letter statistic.
///
/// Works on unnormalized sums by repeated squaring; a partial sum of `m`
/// letters merges atoms within `m * MERGE_TOL`, which is the merge tolerance of
/// the normalized statistic.
pub fn convolve_iid(per_letter: &Spectrum, n: usize) -> Result<Spectrum> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "blocklength must be positive".into(),
        ));
    }
    if per_letter.n != 1 {
        return Err(Error::InvalidArgument(format!(
            "per-letter spectrum must have n = 1, got {}",
            per_letter.n
        )));
    }
    per_letter.check_invariants()?;

    // from the sentinel mass rather than the finite mass, so a zero sentinel stays exactly zero
    let pos_inf_mass = (-(n as f64 * (-per_letter.pos_inf_mass).ln_1p()).exp_m1()).clamp(0.0, 1.0);
    let target_finite = 1.0 - pos_inf_mass;
    if per_letter.atoms.is_empty() {
        return Spectrum::from_atoms(Vec::new(), 1.0, n);
    }

    let mut result: Option<(Vec<Atom>, usize)> = None;
    let mut base = (per_letter.atoms.clone(), 1usize);
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some((r, rc)) => {
                    let count = rc + base.1;
                    (convolve_pair(&r, &base.0, MERGE_TOL * count as f64), count)
                }
            });
        }
        k >>= 1;
        if k > 0 {
            let count = 2 * base.1;
            base = (
                convolve_pair(&base.0, &base.0, MERGE_TOL * count as f64),
                count,
            );
        }
    }
    let (sums, count) = result.expect("n >= 1");
    debug_assert_eq!(count, n);

    let scale = 1.0 / n as f64;
    let mut atoms = merge_pairs(
        sums.iter().map(|a| (a.value * scale, a.mass)).collect(),
        MERGE_TOL,
    );
    let got = numeric::sum(atoms.iter().map(|a| a.mass));
    if got > 0.0 {
        let fix = target_finite / got;
        for a in &mut atoms {
            a.mass *= fix;
        }
    }
    Spectrum::from_atoms(atoms, pos_inf_mass, n)
}

/// Stochastic bracket `lower <=st exact <=st upper` around an unknown law.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBracket {
    pub lower: Spectrum,
    pub upper: Spectrum,
}

impl SpectrumBracket {
    pub fn exact(s: Spectrum) -> Self {
        SpectrumBracket {
            lower: s.clone(),
            upper: s,
        }
    }

    pub fn contains(&self, exact: &Spectrum, tol: f64) -> bool {
        self.lower.stochastically_le(exact, tol) && exact.stochastically_le(&self.upper, tol)
    }
}

/// Default slack for the lower side of [`mixture_sandwich`]: moves
/// `(n + 1)^-2` of each component's mass to zero.
pub fn default_lower_slack(n: usize) -> f64 {
    2.0 * ((n + 1) as f64).ln() / n as f64
}

/// Brackets the entropy spectrum of a mixed source from its components'
/// entropy spectra.
///
/// Upper side: `P_mix(v) >= w_i P_i(v)` so, under component `i`, the mixed
/// statistic is at most the component's plus `ln(1/w_i)/n`.
///
/// Lower side: under component `i`, `Pr_i{P_mix(V) >= e^{n s} P_i(V)} <= e^{-n s}`,
/// so the mixed statistic is at least the component's minus `s` except on
/// an event of mass `e^{-n s}`, which is moved to zero (entropy statistics are
/// nonnegative). `lower_slack` is `s`.
///
/// A single component is returned exactly on both sides.
pub fn mixture_sandwich(
    components: &[(f64, Spectrum)],
    n: usize,
    lower_slack: f64,
) -> Result<SpectrumBracket> {
    let k = validate_components(components.iter().map(|(w, s)| (*w, s.n)))?;
    if k != n {
        return Err(Error::InvalidArgument(format!(
            "components have blocklength {k}, expected {n}"
        )));
    }
    if !(lower_slack >= 0.0) {
        return Err(Error::InvalidArgument(
            "lower slack must be nonnegative".into(),
        ));
    }
    if components.len() == 1 {
        return Ok(SpectrumBracket::exact(components[0].1.clone()));
    }
    let nf = n as f64;

    let uppers: Vec<Spectrum> = components
        .iter()
        .map(|(w, s)| s.shifted((1.0 / w).ln() / nf))
        .collect();
    let upper = Spectrum::mix(
        &components
            .iter()
            .zip(&uppers)
            .map(|((w, _), s)| (*w, s))
            .collect::<Vec<_>>(),
    )?;

    let drop = (-nf * lower_slack).exp().min(1.0);
    let lowers = components
        .iter()
        .map(|(_, s)| lower_component(s, lower_slack, drop))
        .collect::<Result<Vec<_>>>()?;
    let lower = Spectrum::mix(
        &components
            .iter()
            .zip(&lowers)
            .map(|((w, _), s)| (*w, s))
            .collect::<Vec<_>>(),
    )?;
    Ok(SpectrumBracket { lower, upper })
}

/// Shift down by `slack` (clamped at zero), then move the top `drop` mass to zero.
fn lower_component(s: &Spectrum, slack: f64, drop: f64) -> Result<Spectrum> {
    let mut remaining = drop;
    let inf_taken = remaining.min(s.pos_inf_mass);
    remaining -= inf_taken;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(s.atoms.len() + 1);
    for a in s.atoms.iter().rev() {
        let take = remaining.min(a.mass);
        remaining -= take;
        let keep = a.mass - take;
        if keep > 0.0 {
            pairs.push(((a.value - slack).max(0.0), keep));
        }
    }
    pairs.push((0.0, drop - remaining));
    let atoms = merge_pairs(pairs, MERGE_TOL);
    Spectrum::from_atoms(atoms, s.pos_inf_mass - inf_taken, s.n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAtom {
    pub a: f64,
    pub b: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum JointRepr {
    Product { a: Spectrum, b: Spectrum },
    Explicit(Vec<JointAtom>),
}

/// Joint law of the information density `A` and the source self-information
/// `B` at one blocklength.
///
/// Event conventions: an infinite `B` satisfies every event of the form
/// `A <= B + s`; an infinite `A` (with finite `B`) satisfies none.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    repr: JointRepr,
    n: usize,
}

impl JointSpectrum {
    /// Independent coupling of two marginals.
    pub fn product(a: Spectrum, b: Spectrum) -> Result<Self> {
        if a.n != b.n {
            return Err(Error::InvalidArgument(format!(
                "marginals have blocklengths {} and {}",
                a.n, b.n
            )));
        }
        let n = a.n;
        Ok(JointSpectrum {
            repr: JointRepr::Product { a, b },
            n,
        })
    }

    pub fn from_masses<I>(triples: I, n: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be positive".into(),
            ));
        }
        let mut raw = Vec::new();
        for (a, b, mass) in triples {
            check_mass(a, mass)?;
            check_mass(b, mass)?;
            if mass > 0.0 {
                raw.push(JointAtom { a, b, mass });
            }
        }
        let atoms = merge_joint(raw);
        let total = numeric::sum(atoms.iter().map(|j| j.mass));
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "joint spectrum mass sums to {total}"
            )));
        }
        Ok(JointSpectrum {
            repr: JointRepr::Explicit(atoms),
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_product(&self) -> bool {
        matches!(self.repr, JointRepr::Product { .. })
    }

    /// Materialized atoms (products are expanded; `+inf` values appear as such).
    pub fn atoms(&self) -> Vec<JointAtom> {
        match &self.repr {
            JointRepr::Explicit(atoms) => atoms.clone(),
            JointRepr::Product { a, b } => {
                let expand = |s: &Spectrum| {
                    let mut v: Vec<(f64, f64)> =
                        s.atoms.iter().map(|x| (x.value, x.mass)).collect();
                    if s.pos_inf_mass > 0.0 {
                        v.push((f64::INFINITY, s.pos_inf_mass));
                    }
                    v
                };
                let (xa, xb) = (expand(a), expand(b));
                let mut out = Vec::with_capacity(xa.len() * xb.len());
                for &(va, ma) in &xa {
                    for &(vb, mb) in &xb {
                        out.push(JointAtom {
                            a: va,
                            b: vb,
                            mass: ma * mb,
                        });
                    }
                }
                out
            }
        }
    }

    pub fn marginal_a(&self) -> Spectrum {
        match &self.repr {
            JointRepr::Product { a, .. } => a.clone(),
            JointRepr::Explicit(atoms) => {
                Spectrum::from_masses(atoms.iter().map(|j| (j.a, j.mass)), self.n)
                    .expect("marginal of a valid joint")
            }
        }
    }

    pub fn marginal_b(&self) -> Spectrum {
        match &self.repr {
            JointRepr::Product { b, .. } => b.clone(),
            JointRepr::Explicit(atoms) => {
                Spectrum::from_masses(atoms.iter().map(|j| (j.b, j.mass)), self.n)
                    .expect("marginal of a valid joint")
            }
        }
    }

    /// `Pr{A <= B + shift}`, boundary atoms included.
    pub fn prob_a_le_b_plus(&self, shift: f64) -> f64 {
        self.event(shift, true)
    }

    /// `Pr{A < B + shift}`, boundary atoms excluded.
    pub fn prob_a_lt_b_plus(&self, shift: f64) -> f64 {
        self.event(shift, false)
    }

    /// Mass lying on the boundary `A = B + shift`.
    pub fn boundary_mass(&self, shift: f64) -> f64 {
        (self.event(shift, true) - self.event(shift, false)).max(0.0)
    }

    fn event(&self, shift: f64, inclusive: bool) -> f64 {
        match &self.repr {
            JointRepr::Product { a, b } => {
                let mut acc = numeric::NeumaierSum::new();
                for atom in &b.atoms {
                    let t = atom.value + shift;
                    let p = if inclusive { a.cdf(t) } else { a.prob_lt(t) };
                    acc.add(atom.mass * p);
                }
                acc.add(b.pos_inf_mass);
                acc.value().min(1.0)
            }
            JointRepr::Explicit(atoms) => numeric::sum(
                atoms
                    .iter()
                    .filter(|j| joint_event(j.a, j.b, shift, inclusive))
                    .map(|j| j.mass),
            )
            .min(1.0),
        }
    }
}

/// `A <= B + shift` (inclusive) or `A < B + shift` (strict) with the sentinel
/// conventions of [`JointSpectrum`].
pub(crate) fn joint_event(a: f64, b: f64, shift: f64, inclusive: bool) -> bool {
    if b == f64::INFINITY {
        return true;
    }
    if a == f64::INFINITY {
        return false;
    }
    if inclusive {
        a <= b + shift + BOUNDARY_TOL
    } else {
        a < b + shift - BOUNDARY_TOL
    }
}

fn merge_joint(mut raw: Vec<JointAtom>) -> Vec<JointAtom> {
    raw.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b)));
    let mut out: Vec<JointAtom> = Vec::with_capacity(raw.len());
    let mut start = 0;
    while start < raw.len() {
        let anchor = raw[start].a;
        let mut end = start;
        while end < raw.len() && (raw[end].a == anchor || raw[end].a - anchor <= MERGE_TOL) {
            end += 1;
        }
        let mut group: Vec<(f64, f64)> = raw[start..end].iter().map(|j| (j.b, j.mass)).collect();
        group.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut b_anchor = f64::NAN;
        let first_out = out.len();
        for (b, mass) in group {
            let merge = out.len() > first_out && (b == b_anchor || b - b_anchor <= MERGE_TOL);
            if merge {
                out.last_mut().unwrap().mass += mass;
            } else {
                b_anchor = b;
                out.push(JointAtom { a: anchor, b, mass });
            }
        }
        start = end;
    }
    out
}

/// Which limit-in-probability a [`LimitEstimate`] approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitMode {
    /// `inf{a : Pr{Z_n > a} -> 0}`.
    PLimsup,
    /// `sup{b : Pr{Z_n < b} -> 0}`.
    PLiminf,
    /// `inf{a : liminf_n Pr{Z_n >= a} = 0}`.
    OptimisticLimsup,
    /// `sup{b : liminf_n Pr{Z_n <= b} = 0}`.
    OptimisticLiminf,
}

impl LimitMode {
    pub fn is_upper_tail(self) -> bool {
        matches!(self, LimitMode::PLimsup | LimitMode::OptimisticLimsup)
    }

    pub fn is_optimistic(self) -> bool {
        matches!(
            self,
            LimitMode::OptimisticLimsup | LimitMode::OptimisticLiminf
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            LimitMode::PLimsup => "p-limsup",
            LimitMode::PLiminf => "p-liminf",
            LimitMode::OptimisticLimsup => "optimistic-limsup",
            LimitMode::OptimisticLiminf => "optimistic-liminf",
        }
    }
}

/// Finite-grid estimate of a limit in probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub n_grid: Vec<usize>,
    /// Tail threshold at each grid point (`eps` upper or lower quantile).
    pub per_n_threshold: Vec<f64>,
    /// Last threshold for pessimistic modes; grid min (limsup) or max
    /// (liminf) for optimistic modes.
    pub estimate: f64,
    /// Intercept of a least-squares fit `threshold ~ L + s / sqrt(n)`,
    /// removing the central-limit drift of a fixed-`eps` quantile.
    pub extrapolated: f64,
    pub mode: LimitMode,
    pub eps: f64,
    pub converged: bool,
}

pub fn estimate_plim(spectra: &[Spectrum], mode: LimitMode, eps: f64) -> Result<LimitEstimate> {
    if spectra.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "limit estimation needs at least 3 blocklengths, got {}",
            spectra.len()
        )));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "eps {eps} outside (0, 0.5)"
        )));
    }
    let n_grid: Vec<usize> = spectra.iter().map(|s| s.n).collect();
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "n grid must be strictly increasing".into(),
        ));
    }
    let per_n_threshold: Vec<f64> = spectra
        .iter()
        .map(|s| {
            if mode.is_upper_tail() {
                s.upper_threshold(eps)
            } else {
                s.lower_threshold(eps)
            }
        })
        .collect();
    let last = *per_n_threshold.last().unwrap();
    let estimate = match mode {
        LimitMode::PLimsup | LimitMode::PLiminf => last,
        LimitMode::OptimisticLimsup => per_n_threshold
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
        LimitMode::OptimisticLiminf => per_n_threshold
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
    };
    let tail = &per_n_threshold[per_n_threshold.len() - 3..];
    let converged = tail.iter().all(|t| t.is_finite())
        && tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - tail.iter().copied().fold(f64::INFINITY, f64::min)
            <= STABILIZATION_TOL;
    let extrapolated = extrapolate_root_n(&n_grid, &per_n_threshold);
    Ok(LimitEstimate {
        n_grid,
        per_n_threshold,
        estimate,
        extrapolated,
        mode,
        eps,
        converged,
    })
}

/// Intercept of the least-squares line through `(n^-1/2, y)`.
fn extrapolate_root_n(n_grid: &[usize], ys: &[f64]) -> f64 {
    let last = *ys.last().unwrap();
    if ys.iter().any(|y| !y.is_finite()) {
        return last;
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return ys[0];
    }
    let xs: Vec<f64> = n_grid.iter().map(|&n| 1.0 / (n as f64).sqrt()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return last;
    }
    my - (sxy / sxx) * mx
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn bern_self_info(p: f64) -> Spectrum {
        Spectrum::from_masses([(-(1.0 - p).ln(), 1.0 - p), (-p.ln(), p)], 1).unwrap()
    }

    #[test]
    fn construction_merges_and_sorts() {
        let s = Spectrum::from_masses([(0.5, 0.25), (0.1, 0.5), (0.5 + 1e-13, 0.25)], 1).unwrap();
        assert_eq!(s.atoms().len(), 2);
        assert_eq!(s.atoms()[0].value, 0.1);
        assert!((s.atoms()[1].mass - 0.5).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_bad_mass() {
        assert!(Spectrum::from_masses([(0.0, 0.9)], 1).is_err());
        assert!(Spectrum::from_masses([(0.0, 1.2), (1.0, -0.2)], 1).is_err());
        assert!(Spectrum::from_masses([(f64::NAN, 1.0)], 1).is_err());
        assert!(Spectrum::from_masses([(0.0, 1.0)], 0).is_err());
    }

    #[test]
    fn point_mass_convolves_to_itself() {
        let s = Spectrum::point_mass(LN2, 1).unwrap();
        let c = convolve_iid(&s, 4).unwrap();
        assert_eq!(c.atoms().len(), 1);
        assert!((c.atoms()[0].value - LN2).abs() < 1e-15);
        assert_eq!(c.n(), 4);
    }

    #[test]
    fn bernoulli_pair_masses() {
        // enumerate the four length-2 strings by hand
        let c = convolve_iid(&bern_self_info(0.11), 2).unwrap();
        let masses: Vec<f64> = c.atoms().iter().map(|a| a.mass).collect();
        let expected = [0.89 * 0.89, 2.0 * 0.89 * 0.11, 0.11 * 0.11];
        assert_eq!(masses.len(), 3);
        for (m, e) in masses.iter().zip(expected) {
            assert!((m - e).abs() < 1e-14, "{m} vs {e}");
        }
        assert!((expected[0] - 0.7921).abs() < 1e-12);
        assert!((expected[1] - 0.1958).abs() < 1e-12);
        assert!((expected[2] - 0.0121).abs() < 1e-12);
    }

    #[test]
    fn infinite_mass_propagates() {
        let s = Spectrum::from_masses([(0.2, 0.9), (f64::INFINITY, 0.1)], 1).unwrap();
        let c = convolve_iid(&s, 2).unwrap();
        assert!((c.pos_inf_mass() - 0.19).abs() < 1e-15);
        assert!((c.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(c.ccdf(1e9), c.pos_inf_mass());
    }

    #[test]
    fn convolve_rejects_bad_inputs() {
        let s = bern_self_info(0.3);
        assert!(convolve_iid(&s, 0).is_err());
        let c = convolve_iid(&s, 2).unwrap();
        assert!(convolve_iid(&c, 2).is_err());
    }

    #[test]
    fn convolution_of_large_n_keeps_mass() {
        let c = convolve_iid(&bern_self_info(0.11), 2000).unwrap();
        assert!((c.total_mass() - 1.0).abs() < 1e-12);
        let h = -(0.89f64 * 0.89f64.ln() + 0.11 * 0.11f64.ln());
        assert!((c.mean() - h).abs() < 1e-10);
    }

    #[test]
    fn ccdf_includes_atom() {
        let s = Spectrum::point_mass(0.5, 1).unwrap();
        assert_eq!(s.ccdf(0.5), 1.0);
        assert_eq!(s.ccdf(0.6), 0.0);
        assert_eq!(s.cdf(0.5), 1.0);
        assert_eq!(s.prob_lt(0.5), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let s = Spectrum::from_masses([(0.3, 0.25), (0.7, 0.75)], 1).unwrap();
        assert_eq!(s.quantile(0.5), 0.7);
        assert_eq!(s.quantile(0.25), 0.3);
        assert_eq!(s.quantile(0.0), 0.3);
        assert_eq!(s.quantile(1.0), 0.7);
    }

    #[test]
    fn tail_thresholds() {
        let s = Spectrum::from_masses([(0.1, 0.01), (0.3, 0.49), (0.7, 0.495), (0.9, 0.005)], 1)
            .unwrap();
        // mass above 0.7 is 0.005 <= 0.01, above 0.3 is 0.5
        assert_eq!(s.upper_threshold(0.01), 0.7);
        assert_eq!(s.upper_threshold(0.001), 0.9);
        // mass below 0.3 is 0.01 <= 0.01, below 0.7 is 0.5
        assert_eq!(s.lower_threshold(0.01), 0.3);
        assert_eq!(s.lower_threshold(0.001), 0.1);
        let inf = Spectrum::from_masses([(0.1, 0.9), (f64::INFINITY, 0.1)], 1).unwrap();
        assert_eq!(inf.upper_threshold(0.01), f64::INFINITY);
    }

    #[test]
    fn sandwich_single_component_is_exact() {
        let s = convolve_iid(&bern_self_info(0.2), 3).unwrap();
        let b = mixture_sandwich(&[(1.0, s.clone())], 3, default_lower_slack(3)).unwrap();
        assert_eq!(b.lower, s);
        assert_eq!(b.upper, s);
    }

    #[test]
    fn sandwich_shift_arithmetic() {
        let h = 0.4;
        let s = Spectrum::point_mass(h, 10).unwrap();
        let slack = 0.5;
        let b = mixture_sandwich(&[(0.5, s.clone()), (0.5, s.clone())], 10, slack).unwrap();
        assert_eq!(b.upper.atoms().len(), 1);
        assert!((b.upper.atoms()[0].value - (h + LN2 / 10.0)).abs() < 1e-15);
        let drop = (-5.0f64).exp();
        assert_eq!(b.lower.atoms().len(), 1, "{:?}", b.lower);
        // h - slack < 0 clamps to zero, and so does the dropped mass
        assert_eq!(b.lower.atoms()[0].value, 0.0);
        let b2 = mixture_sandwich(&[(0.5, s.clone()), (0.5, s)], 10, 0.1).unwrap();
        let lo = b2.lower.atoms();
        assert_eq!(lo.len(), 2);
        assert!((lo[0].mass - (-1.0f64).exp()).abs() < 1e-15);
        assert!((lo[1].value - 0.3).abs() < 1e-15);
        assert!(drop > 0.0);
    }

    #[test]
    fn sandwich_rejects_bad_weights() {
        let s = Spectrum::point_mass(0.1, 2).unwrap();
        assert!(mixture_sandwich(&[], 2, 0.1).is_err());
        assert!(mixture_sandwich(&[(0.5, s.clone()), (0.4, s.clone())], 2, 0.1).is_err());
        let t = Spectrum::point_mass(0.1, 3).unwrap();
        assert!(mixture_sandwich(&[(0.5, s), (0.5, t)], 2, 0.1).is_err());
    }

    #[test]
    fn joint_product_event_matches_expansion() {
        let a = Spectrum::from_masses([(0.1, 0.3), (0.5, 0.7)], 2).unwrap();
        let b = Spectrum::from_masses([(0.2, 0.6), (0.45, 0.4)], 2).unwrap();
        let prod = JointSpectrum::product(a, b).unwrap();
        let explicit =
            JointSpectrum::from_masses(prod.atoms().iter().map(|j| (j.a, j.b, j.mass)), 2).unwrap();
        for shift in [-0.3, -0.05, 0.0, 0.05, 0.3] {
            let x = prod.prob_a_le_b_plus(shift);
            let y = explicit.prob_a_le_b_plus(shift);
            assert!((x - y).abs() < 1e-15, "shift {shift}: {x} vs {y}");
        }
        // A=0.5, B=0.45 sits exactly on the boundary for shift 0.05
        assert!((prod.boundary_mass(0.05) - 0.7 * 0.4).abs() < 1e-12);
    }

    #[test]
    fn joint_infinity_conventions() {
        let j = JointSpectrum::from_masses(
            [
                (f64::INFINITY, 0.1, 0.25),
                (0.1, f64::INFINITY, 0.25),
                (0.3, 0.1, 0.5),
            ],
            1,
        )
        .unwrap();
        // infinite A never counts, infinite B always counts
        assert!((j.prob_a_le_b_plus(0.0) - 0.25).abs() < 1e-15);
        assert!((j.prob_a_le_b_plus(0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn plim_on_constant_spectra() {
        let spectra: Vec<Spectrum> = [10, 20, 40]
            .iter()
            .map(|&n| Spectrum::point_mass(LN2, n).unwrap())
            .collect();
        for mode in [
            LimitMode::PLimsup,
            LimitMode::PLiminf,
            LimitMode::OptimisticLimsup,
            LimitMode::OptimisticLiminf,
        ] {
            let e = estimate_plim(&spectra, mode, 1e-3).unwrap();
            assert_eq!(e.estimate, LN2);
            assert_eq!(e.extrapolated, LN2);
            assert!(e.converged);
        }
    }

    #[test]
    fn plim_rejects_short_grids() {
        let s = Spectrum::point_mass(0.1, 1).unwrap();
        assert!(estimate_plim(&[s.clone(), s.clone()], LimitMode::PLimsup, 1e-3).is_err());
        let grid: Vec<Spectrum> = (1..=3)
            .map(|n| Spectrum::point_mass(0.1, n).unwrap())
            .collect();
        assert!(estimate_plim(&grid, LimitMode::PLimsup, 0.0).is_err());
        assert!(estimate_plim(&grid, LimitMode::PLimsup, 0.5).is_err());
    }

    #[test]
    fn iid_entropy_rate_estimate() {
        let letter = bern_self_info(0.4);
        let spectra: Vec<Spectrum> = [500, 1000, 2000]
            .iter()
            .map(|&n| convolve_iid(&letter, n).unwrap())
            .collect();
        let e = estimate_plim(&spectra, LimitMode::PLimsup, 1e-3).unwrap();
        let h = -(0.4f64 * 0.4f64.ln() + 0.6 * 0.6f64.ln());
        assert!((h - 0.67301).abs() < 1e-5);
        assert!((e.estimate - h).abs() < 0.02, "{}", e.estimate);
        assert!((e.extrapolated - h).abs() < 0.02, "{}", e.extrapolated);
        assert!(!e.converged);
    }
}
