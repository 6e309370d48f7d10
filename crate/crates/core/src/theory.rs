//! Closed-form capacity constants and recognition bounds.
//!
//! The bounds here concern the clustered model: `M` random messages over `c`
//! clusters of `l` neurons are stored, and a further message is
//! *recognized* when every pair of its neurons is joined by some stored
//! message. Each edge is present with probability `d = 1 - (1 - 1/l^2)^M`
//! and the edge indicators are positively associated, so the probability of
//! recognizing a message whose `L` edges are all random is at least `d^L`.

use core::fmt;
use core::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::rng::substream;

/// Stream tag for the Monte Carlo recognition oracle.
pub const TAG_RECOGNITION: u64 = 0x7265_636f;

/// Largest number of grouped stored-set realizations visited by
/// [`RecognitionMode::Enumerate`].
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("erasure rate {0} outside [0, 1)")]
    RhoOutOfRange(f64),
    #[error("constant {0} needs an erasure rate")]
    MissingRho(CapacityConstant),
    #[error("unknown constant {0:?}")]
    UnknownConstant(alloc::string::String),
    #[error("enumeration over all {0} exceeds the size guard")]
    EnumerationTooLarge(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Named load thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CapacityConstant {
    /// `e^-2`: stored messages stay fixed under the integer-count rule.
    AmariStability,
    /// `(1-rho) e^{-(1 + 1/(1+rho))}`: erasure correction, integer counts.
    AmariErasure,
    /// `-ln(1 - e^-1)`.
    AmariUpper,
    /// `-ln(1 - e^{-1/(1-rho)})`: winner-take-all with clipped weights.
    WillshawWta,
    /// Same expression as [`CapacityConstant::WillshawWta`], in `l^2/c^2` units.
    GbWta,
    /// Recognition of random messages sets in above this load.
    WrongMessageAlpha,
}

impl CapacityConstant {
    pub const ALL: [CapacityConstant; 6] = [
        CapacityConstant::AmariStability,
        CapacityConstant::AmariErasure,
        CapacityConstant::AmariUpper,
        CapacityConstant::WillshawWta,
        CapacityConstant::GbWta,
        CapacityConstant::WrongMessageAlpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CapacityConstant::AmariStability => "amari-stability",
            CapacityConstant::AmariErasure => "amari-erasure",
            CapacityConstant::AmariUpper => "amari-upper",
            CapacityConstant::WillshawWta => "willshaw-wta",
            CapacityConstant::GbWta => "gb-wta",
            CapacityConstant::WrongMessageAlpha => "wrong-message-alpha",
        }
    }

    pub fn takes_rho(self) -> bool {
        matches!(
            self,
            CapacityConstant::AmariErasure
                | CapacityConstant::WillshawWta
                | CapacityConstant::GbWta
        )
    }
}

impl fmt::Display for CapacityConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CapacityConstant {
    type Err = TheoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| TheoryError::UnknownConstant(s.into()))
    }
}

fn wta_constant(rho: f64) -> f64 {
    -libm::log1p(-libm::exp(-1.0 / (1.0 - rho)))
}

fn check_rho(rho: f64) -> Result<f64, TheoryError> {
    if (0.0..1.0).contains(&rho) {
        Ok(rho)
    } else {
        Err(TheoryError::RhoOutOfRange(rho))
    }
}

/// Value of `constant`. Rate-dependent constants require `rho` in `[0, 1)`;
/// the others ignore it.
pub fn eval_constant(constant: CapacityConstant, rho: Option<f64>) -> Result<f64, TheoryError> {
    let rho = match (constant.takes_rho(), rho) {
        (true, Some(r)) => check_rho(r)?,
        (true, None) => return Err(TheoryError::MissingRho(constant)),
        (false, _) => 0.0,
    };
    Ok(match constant {
        CapacityConstant::AmariStability => libm::exp(-2.0),
        CapacityConstant::AmariErasure => (1.0 - rho) * libm::exp(-(1.0 + 1.0 / (1.0 + rho))),
        CapacityConstant::AmariUpper => wta_constant(0.0),
        CapacityConstant::WillshawWta | CapacityConstant::GbWta => wta_constant(rho),
        CapacityConstant::WrongMessageAlpha => 2.0,
    })
}

/// Probability `d = 1 - (1 - 1/l^2)^M` that a given inter-cluster edge is
/// present after `M` random messages.
pub fn edge_probability(l: u64, m: f64) -> f64 {
    let l2 = (l as f64) * (l as f64);
    -libm::expm1(m * libm::log1p(-1.0 / l2))
}

/// Edge count `L = c(c-1)/2` of a clique on `c` clusters.
pub fn edge_count(c: u64) -> u64 {
    c * c.saturating_sub(1) / 2
}

/// `r(c, rho) = rho(1-rho)c^2 + (1-rho)c((1-rho)c - 1)/2`: random edges in a
/// message keeping `rho c` true neurons and `(1-rho) c` random ones.
pub fn subclique_edges(c: u64, rho: f64) -> f64 {
    let c = c as f64;
    let wrong = (1.0 - rho) * c;
    rho * (1.0 - rho) * c * c + wrong * (wrong - 1.0) / 2.0
}

/// `d^L`: lower bound on the probability that a random message is recognized.
pub fn recognition_lower_bound(l: u64, c: u64, m: u64) -> f64 {
    recognition_bound_continuous(l as f64, c as f64, m as f64)
}

/// [`recognition_lower_bound`] for real-valued `l`, `c`, `M`, as used for
/// scaling trends where `c = ln N` is not an integer.
pub fn recognition_bound_continuous(l: f64, c: f64, m: f64) -> f64 {
    let d = -libm::expm1(m * libm::log1p(-1.0 / (l * l)));
    let edges = c * (c - 1.0) / 2.0;
    libm::pow(d, edges)
}

/// `d^r(c, rho)`: lower bound for the subclique recognition event.
pub fn subclique_lower_bound(l: u64, c: u64, m: u64, rho: f64) -> f64 {
    libm::pow(edge_probability(l, m as f64), subclique_edges(c, rho))
}

/// `log2 C(n, k)` through the log-gamma function.
pub fn log2_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let ln = libm::lgamma(n as f64 + 1.0)
        - libm::lgamma(k as f64 + 1.0)
        - libm::lgamma((n - k) as f64 + 1.0);
    ln / core::f64::consts::LN_2
}

/// How [`exact_recognition_probability`] evaluates the probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecognitionMode {
    /// Sum over every stored-set realization.
    Enumerate,
    /// Sample `trials` stored sets from stream `seed`.
    MonteCarlo { trials: u64, seed: u64 },
}

/// Result of [`exact_recognition_probability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecognitionEstimate {
    pub probability: f64,
    /// Zero for enumeration.
    pub stderr: f64,
    /// `(numerator, denominator)` for enumeration.
    pub exact: Option<(u128, u128)>,
    pub trials: u64,
}

/// Probability that a fixed message is recognized by a clustered network
/// holding `M` independent uniform messages.
///
/// By symmetry the probed message uses neuron 0 of every cluster. A stored
/// message matters only through the set of clusters where it agrees with
/// the probe, so enumeration runs over `M`-tuples of such sets, each
/// weighted by the number of messages producing it. Enumeration requires
/// `(2^c)^M` within [`ENUMERATION_LIMIT`]; Monte Carlo requires `c <= 64`.
pub fn exact_recognition_probability(
    l: u64,
    c: u64,
    m: u64,
    mode: RecognitionMode,
) -> Result<RecognitionEstimate, TheoryError> {
    if l < 1 || c < 2 {
        return Err(TheoryError::InvalidParameter("need l >= 1 and c >= 2"));
    }
    match mode {
        RecognitionMode::Enumerate => enumerate_recognition(l, c, m),
        RecognitionMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(TheoryError::InvalidParameter("trials must be positive"));
            }
            if c > 64 {
                return Err(TheoryError::InvalidParameter("Monte Carlo needs c <= 64"));
            }
            let mut hits = 0u64;
            for t in 0..trials {
                let mut rng = substream(seed, &[TAG_RECOGNITION, l, c, m, t]);
                hits += u64::from(sample_recognized(l, c as usize, m, &mut rng));
            }
            let p = hits as f64 / trials as f64;
            Ok(RecognitionEstimate {
                probability: p,
                stderr: libm::sqrt(p * (1.0 - p) / trials as f64),
                exact: None,
                trials,
            })
        }
    }
}

/// Whether the agreement masks cover every pair of the `c` clusters.
fn covers_all_pairs(masks: &[u64], c: usize) -> bool {
    let full = if c == 64 { u64::MAX } else { (1u64 << c) - 1 };
    let mut reach = [0u64; 64];
    for &s in masks {
        let mut bits = s;
        while bits != 0 {
            let a = bits.trailing_zeros() as usize;
            reach[a] |= s;
            bits &= bits - 1;
        }
    }
    (0..c).all(|a| reach[a] | (1 << a) == full)
}

fn sample_recognized<R: Rng + ?Sized>(l: u64, c: usize, m: u64, rng: &mut R) -> bool {
    let mut masks = alloc::vec::Vec::with_capacity(m as usize);
    for _ in 0..m {
        let mut s = 0u64;
        for a in 0..c {
            if rng.gen_range(0..l) == 0 {
                s |= 1 << a;
            }
        }
        masks.push(s);
    }
    covers_all_pairs(&masks, c)
}

fn enumerate_recognition(l: u64, c: u64, m: u64) -> Result<RecognitionEstimate, TheoryError> {
    let subsets = 1u64
        .checked_shl(c as u32)
        .filter(|_| c < 64)
        .ok_or(TheoryError::EnumerationTooLarge("agreement sets"))?;
    let tuples = u32::try_from(m)
        .ok()
        .and_then(|m| subsets.checked_pow(m))
        .filter(|&t| t <= ENUMERATION_LIMIT)
        .ok_or(TheoryError::EnumerationTooLarge("stored sets"))?;
    let per_message = u128::from(l)
        .checked_pow(c as u32)
        .ok_or(TheoryError::EnumerationTooLarge("messages"))?;
    let denominator = u32::try_from(m)
        .ok()
        .and_then(|m| per_message.checked_pow(m))
        .ok_or(TheoryError::EnumerationTooLarge("stored sets"))?;
    // Messages agreeing with the probe exactly on cluster set s.
    let weight: alloc::vec::Vec<u128> = (0..subsets)
        .map(|s| u128::from(l - 1).pow(c as u32 - s.count_ones()))
        .collect();

    let c = c as usize;
    let mut masks = alloc::vec![0u64; m as usize];
    let mut numerator = 0u128;
    for code in 0..tuples {
        let mut rest = code;
        let mut w = 1u128;
        for slot in masks.iter_mut() {
            *slot = rest % subsets;
            rest /= subsets;
            w *= weight[*slot as usize];
        }
        if w != 0 && covers_all_pairs(&masks, c) {
            numerator += w;
        }
    }
    Ok(RecognitionEstimate {
        probability: numerator as f64 / denominator as f64,
        stderr: 0.0,
        exact: Some((numerator, denominator)),
        trials: 0,
    })
}
