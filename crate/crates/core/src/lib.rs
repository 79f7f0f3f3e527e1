//! Resource-monotone computations for quantum states, channels, and
//! measurements over pluggable convex free sets.
//!
//! The library is organised bottom-up:
//!
//! * [`linalg`] — dense complex matrices, Hermitian eigendecompositions,
//!   PSD checks, support projectors, tensor/partial-trace plumbing.
//! * [`objects`] — validated density operators, Choi matrices, POVM sets,
//!   ensembles, and seeded random generators for all three.
//! * [`divergence`] — max-relative divergence `R_max` in closed form, with
//!   an honest `∞` when supports do not match.
//! * [`cones`] — finite descriptions of convex free-set cones (incoherent
//!   states, replacement channels, jointly measurable POVM sets, trivial
//!   POVMs) plus the linear-map toolkit used to assemble them.
//! * [`engine`] — a small conic-program layer (Hermitian variables, PSD and
//!   equality constraints) lowered to an interior-point solver, with
//!   independent feasibility/gap certification of every answer.
//! * [`monotones`] — projective robustness, generalized robustness, free
//!   weight, and the bound reports tying them together.
//! * [`games`] — discrimination/exclusion game values and the witness
//!   constructions that realise a monotone as a game advantage.
//! * [`distill`] — overlap maximisation, distillation error/overhead
//!   bounds, and submultiplicativity checks.

#![forbid(unsafe_code)]

pub mod cones;
pub mod distill;
pub mod divergence;
pub mod engine;
pub mod games;
pub mod linalg;
pub mod monotones;
pub mod objects;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Error taxonomy shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violates a mathematical precondition (not PSD, not a state, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Operands have incompatible shapes or subsystem dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An iterative routine failed to converge or a certificate check failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A size guard was exceeded (problem too large for this solver).
    #[error("size guard: {0}")]
    Size(String),
    /// The optimisation problem itself is ill-posed (vanishing denominator,
    /// undefined bound, empty cone, ...).
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    /// An operation was invoked in a mode it does not support.
    #[error("mode error: {0}")]
    Mode(String),
    /// Inconsistent configuration (cone/object kind mismatch, bad registry).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Extended real value: a finite `f64` or a genuine `+∞`.
///
/// Divergences and monotones return `Infinite` when a support condition
/// fails; it is never approximated by a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// The finite value, or `None` for `∞`.
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// The finite value; errors with the given context for `∞`.
    pub fn expect_finite(self, what: &str) -> Result<f64> {
        self.finite()
            .ok_or_else(|| Error::Domain(format!("{what} is infinite")))
    }

    /// Product with `∞·x = ∞` for any nonnegative operand.
    pub fn mul(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a * b),
            _ => Extended::Infinite,
        }
    }

    pub fn max(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.max(b)),
            _ => Extended::Infinite,
        }
    }

    pub fn min(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.min(b)),
            (Extended::Finite(a), Extended::Infinite) => Extended::Finite(a),
            (Extended::Infinite, x) => x,
        }
    }

    /// `self ≤ other` in the extended order.
    pub fn le(self, other: Extended) -> bool {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a <= b,
            (_, Extended::Infinite) => true,
            (Extended::Infinite, Extended::Finite(_)) => false,
        }
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        Extended::Finite(v)
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

// JSON: finite values are numbers, infinity is the string "inf".
impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Extended::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Extended::Infinite),
            Raw::Str(s) => Err(D::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_serde_round_trip() {
        let fin = serde_json::to_string(&Extended::Finite(2.5)).unwrap();
        assert_eq!(fin, "2.5");
        let inf = serde_json::to_string(&Extended::Infinite).unwrap();
        assert_eq!(inf, "\"inf\"");
        assert_eq!(
            serde_json::from_str::<Extended>("2.5").unwrap(),
            Extended::Finite(2.5)
        );
        assert_eq!(
            serde_json::from_str::<Extended>("\"inf\"").unwrap(),
            Extended::Infinite
        );
    }

    #[test]
    fn extended_order_and_products() {
        let two = Extended::Finite(2.0);
        let inf = Extended::Infinite;
        assert!(two.le(inf));
        assert!(!inf.le(two));
        assert_eq!(two.mul(two), Extended::Finite(4.0));
        assert_eq!(two.mul(inf), Extended::Infinite);
    }
}
