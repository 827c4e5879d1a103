//! Lipschitz initial potentials `φ₀`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};

/// Closed-form initial data. Every variant is Lipschitz with a known
/// constant and non-negative unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile<T> {
    Constant { value: T },
    /// `p·x`; may be negative.
    Linear { slope: Vec<T> },
    /// `|x − center|` (Euclidean norm in 2-D: a cone).
    Abs { center: Vec<T> },
    /// `min(|x|, cap)`.
    TruncatedAbs { cap: T },
    /// `min(|x − a|, |x + a|)` along the first axis.
    DoubleWell { offset: T },
}

impl<T: Scalar> InitialProfile<T> {
    pub fn eval(&self, x: &[T]) -> T {
        match self {
            InitialProfile::Constant { value } => *value,
            InitialProfile::Linear { slope } => {
                slope.iter().zip(x).fold(T::zero(), |s, (&a, &b)| s + a * b)
            }
            InitialProfile::Abs { center } => {
                let d: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
                norm(&d)
            }
            InitialProfile::TruncatedAbs { cap } => norm(x).min(*cap),
            InitialProfile::DoubleWell { offset } => {
                let mut y = x.to_vec();
                y[0] = x[0] - *offset;
                let left = norm(&y);
                y[0] = x[0] + *offset;
                left.min(norm(&y))
            }
        }
    }

    pub fn lipschitz(&self) -> T {
        match self {
            InitialProfile::Constant { .. } => T::zero(),
            InitialProfile::Linear { slope } => norm(slope),
            _ => T::one(),
        }
    }

    /// Spatial dimension the profile is tied to, if any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            InitialProfile::Linear { slope } => Some(slope.len()),
            InitialProfile::Abs { center } => Some(center.len()),
            _ => None,
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if let Some(d) = self.dimension() {
            if d != dimension {
                return Err(Error::InvalidArgument(format!(
                    "profile has dimension {d}, grid has {dimension}"
                )));
            }
        }
        let finite = match self {
            InitialProfile::Constant { value } => value.is_finite(),
            InitialProfile::Linear { slope } => slope.iter().all(|s| s.is_finite()),
            InitialProfile::Abs { center } => center.iter().all(|s| s.is_finite()),
            InitialProfile::TruncatedAbs { cap } => cap.is_finite() && *cap >= T::zero(),
            InitialProfile::DoubleWell { offset } => offset.is_finite(),
        };
        if !finite {
            return Err(Error::InvalidArgument(format!("bad profile parameters: {self:?}")));
        }
        Ok(())
    }
}
