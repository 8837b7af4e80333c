//! Finite-blocklength information-spectrum laboratory for joint source-channel coding.
//!
//! The crate is organised around one currency: the [`Spectrum`], an exact
//! discrete law of a per-symbol information statistic (self-information of a
//! source block, or information density of a channel block). On top of it:
//!
//! - [`models`]: general sources, channels and channel-input laws with exact
//!   per-blocklength access.
//! - [`bounds`]: the random-coding achievability bound, the converse lower
//!   bound and the two-step separation bound, plus threshold schedules.
//! - [`coding`]: explicit joint source-channel codes, threshold decoders, MAP
//!   decoders, exact error evaluation and the exhaustive optimal-code oracle.
//! - [`analysis`]: finite-n traces of transmissibility conditions, rate and
//!   capacity estimators, and converse-property diagnostics.
//!
//! All logarithms are natural; every statistic is measured in nats per symbol.

pub mod analysis;
pub mod bounds;
pub mod coding;
mod error;
pub mod models;
mod numeric;
pub mod spectrum;

pub use error::{Error, Result};
pub use numeric::NeumaierSum;
pub use spectrum::{
    convolve_iid, estimate_plim, mixture_sandwich, Atom, JointAtom, JointSpectrum, LimitEstimate,
    LimitMode, Spectrum, SpectrumBracket, BOUNDARY_TOL, MASS_TOL, MERGE_TOL,
};
