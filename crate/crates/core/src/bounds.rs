//! Achievability and converse bounds on the error of joint source-channel codes.

use crate::error::{Error, Result};
use crate::models::{
    entropy_spectrum, information_spectrum, Budget, ChannelModel, InputModel, SourceModel,
};
use crate::spectrum::{JointSpectrum, Spectrum};

/// Slack sequence `gamma_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSchedule {
    /// `gamma_n = c * n^-p` with `c > 0`, `0 < p < 1`.
    Power { c: f64, p: f64 },
    /// Fixed `gamma`; does not vanish, so only meaningful for single-`n` studies.
    Constant(f64),
    /// One value per grid point, in grid order.
    Explicit(Vec<f64>),
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::Power { c: 1.0, p: 0.5 }
    }
}

impl GammaSchedule {
    pub fn power(c: f64, p: f64) -> Result<Self> {
        let s = GammaSchedule::Power { c, p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GammaSchedule::Power { c, p } => {
                if !(*c > 0.0 && c.is_finite()) || !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "power schedule needs c > 0 and 0 < p < 1, got c = {c}, p = {p}"
                    )));
                }
            }
            GammaSchedule::Constant(g) => check_gamma(*g)?,
            GammaSchedule::Explicit(gs) => {
                for &g in gs {
                    check_gamma(g)?;
                }
            }
        }
        Ok(())
    }

    /// `gamma_n` at the `idx`-th grid point (blocklength `n`).
    pub fn at(&self, idx: usize, n: usize) -> Result<f64> {
        match self {
            GammaSchedule::Power { c, p } => Ok(c * (n as f64).powf(-p)),
            GammaSchedule::Constant(g) => Ok(*g),
            GammaSchedule::Explicit(gs) => gs.get(idx).copied().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "explicit schedule has no entry for grid point {idx}"
                ))
            }),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaValues {
    pub n_grid: Vec<usize>,
    pub values: Vec<f64>,
    /// First grid `n` with `n * gamma_n >= 10`, where `e^{-n gamma_n}` drops below `5e-5`.
    pub bound_active_n: Option<usize>,
    /// Set for constant schedules, which do not vanish.
    pub non_vanishing: bool,
}

pub fn gamma_values(s: &GammaSchedule, n_grid: &[usize]) -> Result<GammaValues> {
    s.validate()?;
    if let GammaSchedule::Explicit(gs) = s {
        if gs.len() != n_grid.len() {
            return Err(Error::InvalidArgument(format!(
                "explicit schedule has {} values for {} grid points",
                gs.len(),
                n_grid.len()
            )));
        }
    }
    let values = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| s.at(i, n))
        .collect::<Result<Vec<_>>>()?;
    let bound_active_n = n_grid
        .iter()
        .zip(&values)
        .find(|(&n, &g)| n as f64 * g >= 10.0)
        .map(|(&n, _)| n);
    Ok(GammaValues {
        n_grid: n_grid.to_vec(),
        values,
        bound_active_n,
        non_vanishing: matches!(s, GammaSchedule::Constant(_)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    FeinsteinUpper,
    VerduHanLower,
    SeparationUpper,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::FeinsteinUpper => "feinstein_upper",
            BoundKind::VerduHanLower => "verdu_han_lower",
            BoundKind::SeparationUpper => "separation_upper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub n: usize,
    pub gamma: f64,
    /// Probability of the spectral event (for separation, the sum of both terms).
    pub spectral_term: f64,
    /// `e^{-n gamma}`.
    pub exponential_term: f64,
    /// Upper bounds: `spectral + exponential`. Lower bound: `max(0, spectral - exponential)`.
    pub bound_value: f64,
    /// `spectral +/- exponential` without clamping.
    pub unclamped: f64,
    /// `bound_value` clamped to `[0, 1]`.
    pub clamped: f64,
    /// Named terms, for bounds made of several events.
    pub components: Vec<(&'static str, f64)>,
}

fn upper_report(
    kind: BoundKind,
    n: usize,
    gamma: f64,
    terms: Vec<(&'static str, f64)>,
) -> BoundReport {
    let spectral_term = terms.iter().map(|t| t.1).sum::<f64>();
    let exponential_term = (-(n as f64) * gamma).exp();
    let unclamped = spectral_term + exponential_term;
    BoundReport {
        kind,
        n,
        gamma,
        spectral_term,
        exponential_term,
        bound_value: unclamped,
        unclamped,
        clamped: unclamped.clamp(0.0, 1.0),
        components: terms,
    }
}

/// `Pr{A_n <= B_n + gamma} + e^{-n gamma}`, an upper bound on the average
/// error of the threshold-decoded random code ensemble whose input law
/// induced `joint`.
pub fn feinstein_bound(joint: &JointSpectrum, gamma: f64) -> Result<BoundReport> {
    check_gamma(gamma)?;
    let spectral = joint.prob_a_le_b_plus(gamma);
    Ok(upper_report(
        BoundKind::FeinsteinUpper,
        joint.n(),
        gamma,
        vec![("spectral", spectral)],
    ))
}

/// `max(0, Pr{A_n <= B_n - gamma} - e^{-n gamma})`, a lower bound on the
/// error of any code whose encoder induced `joint` (the caller must pass an
/// encoder-induced coupling).
pub fn verdu_han_bound(joint: &JointSpectrum, gamma: f64) -> Result<BoundReport> {
    check_gamma(gamma)?;
    let n = joint.n();
    let spectral_term = joint.prob_a_le_b_plus(-gamma);
    let exponential_term = (-(n as f64) * gamma).exp();
    let unclamped = spectral_term - exponential_term;
    let bound_value = unclamped.max(0.0);
    Ok(BoundReport {
        kind: BoundKind::VerduHanLower,
        n,
        gamma,
        spectral_term,
        exponential_term,
        bound_value,
        unclamped,
        clamped: bound_value.min(1.0),
        components: vec![("spectral", spectral_term)],
    })
}

/// `Pr{B_n >= c} + Pr{A_n <= c + gamma} + e^{-n gamma}` from the two marginals.
pub fn separation_bound_from_spectra(
    entropy: &Spectrum,
    information: &Spectrum,
    c: f64,
    gamma: f64,
) -> Result<BoundReport> {
    check_gamma(gamma)?;
    if entropy.n() != information.n() {
        return Err(Error::InvalidArgument(
            "spectra have different blocklengths".into(),
        ));
    }
    let source = entropy.ccdf(c);
    let channel = information.cdf(c + gamma);
    Ok(upper_report(
        BoundKind::SeparationUpper,
        entropy.n(),
        gamma,
        vec![("source", source), ("channel", channel)],
    ))
}

/// Error bound for fixed-length source coding at rate `c` followed by
/// channel coding of the resulting messages.
pub fn separation_bound(
    src: &SourceModel,
    ch: &ChannelModel,
    input: &InputModel,
    c: f64,
    gamma: f64,
    n: usize,
    budget: &Budget,
) -> Result<BoundReport> {
    check_gamma(gamma)?;
    let b = entropy_spectrum(src, n, budget)?;
    let a = information_spectrum(ch, input, n, budget)?;
    separation_bound_from_spectra(&b, &a, c, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{joint_density_spectrum, Kernel, MessageSizes, Pmf};

    fn noiseless_uniform_pair() -> JointSpectrum {
        let src = SourceModel::UniformMessage(MessageSizes::Constant(2));
        let ch = ChannelModel::Dmc(Kernel::identity(2).unwrap());
        let input = InputModel::Iid(Pmf::uniform(2).unwrap());
        joint_density_spectrum(&src, &input, &ch, 2, &Budget::default()).unwrap()
    }

    #[test]
    fn feinstein_point_mass_example() {
        let r = feinstein_bound(&noiseless_uniform_pair(), 0.3).unwrap();
        assert_eq!(r.spectral_term, 0.0);
        assert!((r.bound_value - (-0.6f64).exp()).abs() < 1e-15);
        assert!((r.bound_value - 0.54881).abs() < 1e-5);
    }

    #[test]
    fn feinstein_vacuous_when_event_certain() {
        let r = feinstein_bound(&noiseless_uniform_pair(), 1.0).unwrap();
        assert_eq!(r.spectral_term, 1.0);
        assert!(r.bound_value > 1.0);
        assert_eq!(r.clamped, 1.0);
    }

    #[test]
    fn verdu_han_clamps() {
        let r = verdu_han_bound(&noiseless_uniform_pair(), 10.0).unwrap();
        assert_eq!(r.bound_value, 0.0);
        assert!(r.unclamped < 0.0);
        let eq = JointSpectrum::from_masses([(0.3, 0.3, 1.0)], 100).unwrap();
        let r = verdu_han_bound(&eq, 0.01).unwrap();
        assert_eq!(r.spectral_term, 0.0);
        assert_eq!(r.bound_value, 0.0);
    }

    #[test]
    fn bounds_reject_nonpositive_gamma() {
        let j = noiseless_uniform_pair();
        assert!(feinstein_bound(&j, 0.0).is_err());
        assert!(verdu_han_bound(&j, -1.0).is_err());
    }

    #[test]
    fn gamma_schedule_arithmetic() {
        let s = GammaSchedule::default();
        let v = gamma_values(&s, &[100, 10000]).unwrap();
        assert!((v.values[0] - 0.1).abs() < 1e-15);
        assert!((v.values[1] - 0.01).abs() < 1e-15);
        assert_eq!(v.bound_active_n, Some(100));
        let e = gamma_values(&GammaSchedule::Explicit(vec![0.3, 0.2, 0.1]), &[1, 2, 3]).unwrap();
        assert_eq!(e.values, vec![0.3, 0.2, 0.1]);
        assert!(
            gamma_values(&GammaSchedule::Constant(0.1), &[1])
                .unwrap()
                .non_vanishing
        );
        assert!(GammaSchedule::power(1.0, 1.0).is_err());
        assert!(gamma_values(&GammaSchedule::Explicit(vec![0.3]), &[1, 2]).is_err());
    }

    #[test]
    fn separation_vacuous_and_boundary() {
        let src = SourceModel::UniformMessage(MessageSizes::Power(2));
        let ch = ChannelModel::Dmc(Kernel::identity(2).unwrap());
        let input = InputModel::Iid(Pmf::uniform(2).unwrap());
        let b = Budget::default();
        let r = separation_bound(&src, &ch, &input, 0.1, 1.0, 4, &b).unwrap();
        assert_eq!(r.components, vec![("source", 1.0), ("channel", 1.0)]);
        assert!((r.bound_value - (2.0 + (-4.0f64).exp())).abs() < 1e-15);
        // M_n = e^{cn} exactly: the source event includes its atom
        let r = separation_bound(&src, &ch, &input, std::f64::consts::LN_2, 0.1, 4, &b).unwrap();
        assert_eq!(r.components[0].1, 1.0);
    }
}
