use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Number of leading coefficients a custom accessor is checked against its
/// declared bound at construction.
pub const CUSTOM_SPOT_CHECK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionKind {
    Log,
    Reciprocal,
    Custom,
}

impl ExpansionKind {
    pub fn name(self) -> &'static str {
        match self {
            ExpansionKind::Log => "log",
            ExpansionKind::Reciprocal => "reciprocal",
            ExpansionKind::Custom => "custom",
        }
    }
}

type Accessor<T> = Arc<dyn Fn(usize) -> Option<T> + Send + Sync>;

/// Taylor expansion of `f` around `x0`, written in the scaled form
/// `f(m) = sum_k gamma_k (m/x0 - 1)^k` with `gamma_k = f^(k)(x0) x0^k / k!`.
///
/// `c` bounds `|gamma_k|` for every `k >= 1`.
#[derive(Clone)]
pub struct Expansion<T: Scalar> {
    kind: ExpansionKind,
    x0: T,
    c: T,
    custom: Option<Accessor<T>>,
}

impl<T: Scalar> fmt::Debug for Expansion<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expansion").field("kind", &self.kind).field("x0", &self.x0).field("c", &self.c).finish()
    }
}

fn check_positive_x0<T: Scalar>(x0: T) -> Result<()> {
    if !(x0.is_finite() && x0 > T::zero()) {
        return Err(Error::domain(format!("expansion point must be finite and > 0, got {x0}")));
    }
    Ok(())
}

impl<T: Scalar> Expansion<T> {
    /// `f(x) = log x`: `gamma_0 = log x0`, `gamma_k = (-1)^(k-1) / k`.
    pub fn log(x0: T) -> Result<Self> {
        check_positive_x0(x0)?;
        Ok(Self { kind: ExpansionKind::Log, x0, c: T::one(), custom: None })
    }

    /// `f(x) = 1/x`: `gamma_k = (-1)^k / x0`.
    pub fn reciprocal(x0: T) -> Result<Self> {
        check_positive_x0(x0)?;
        Ok(Self { kind: ExpansionKind::Reciprocal, x0, c: x0.recip(), custom: None })
    }

    /// User supplied coefficients. The accessor returns `None` for indices it
    /// cannot provide; `c` must bound `|gamma_k|` for `k >= 1` and is
    /// spot-checked on the first [`CUSTOM_SPOT_CHECK`] available coefficients.
    pub fn custom<F>(x0: T, c: T, accessor: F) -> Result<Self>
    where
        F: Fn(usize) -> Option<T> + Send + Sync + 'static,
    {
        if !(x0.is_finite() && x0 != T::zero()) {
            return Err(Error::domain(format!("expansion point must be finite and non-zero, got {x0}")));
        }
        if !(c.is_finite() && c >= T::zero()) {
            return Err(Error::domain(format!("coefficient bound c must be finite and >= 0, got {c}")));
        }
        for k in 1..=CUSTOM_SPOT_CHECK {
            match accessor(k) {
                Some(g) if !g.is_finite() || g.abs() > c => {
                    return Err(Error::domain(format!("|gamma_{k}| = {} exceeds the declared bound c = {c}", g.abs())));
                }
                Some(_) => {}
                None => break,
            }
        }
        Ok(Self { kind: ExpansionKind::Custom, x0, c, custom: Some(Arc::new(accessor)) })
    }

    /// Custom expansion backed by a finite table `gamma_0..gamma_{n-1}`.
    /// Asking for an index past the table is a domain error.
    pub fn custom_table(x0: T, c: T, gammas: Vec<T>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::domain("coefficient table is empty"));
        }
        Self::custom(x0, c, move |k| gammas.get(k).copied())
    }

    pub fn kind(&self) -> ExpansionKind {
        self.kind
    }

    pub fn x0(&self) -> T {
        self.x0
    }

    /// Sup-bound on `|gamma_k|`, `k >= 1`.
    pub fn c(&self) -> T {
        self.c
    }

    /// Same function expanded around a different point.
    pub fn with_x0(&self, x0: T) -> Result<Self> {
        match self.kind {
            ExpansionKind::Log => Self::log(x0),
            ExpansionKind::Reciprocal => Self::reciprocal(x0),
            ExpansionKind::Custom => Err(Error::domain("custom expansions are tied to their expansion point")),
        }
    }

    /// `gamma_k`.
    pub fn coefficient(&self, k: usize) -> Result<T> {
        match self.kind {
            ExpansionKind::Log => Ok(if k == 0 {
                self.x0.ln()
            } else {
                let mag = T::from_usize_lossy(k).recip();
                if k % 2 == 1 {
                    mag
                } else {
                    -mag
                }
            }),
            ExpansionKind::Reciprocal => {
                let mag = self.x0.recip();
                Ok(if k.is_multiple_of(2) { mag } else { -mag })
            }
            ExpansionKind::Custom => {
                let accessor = self.custom.as_ref().expect("custom expansion has an accessor");
                accessor(k)
                    .ok_or_else(|| Error::domain(format!("coefficient gamma_{k} is not available (no extrapolation)")))
            }
        }
    }

    /// `gamma_0..=gamma_n`.
    pub fn coefficients(&self, n: usize) -> Result<Vec<T>> {
        (0..=n).map(|k| self.coefficient(k)).collect()
    }

    /// `f(m)` in closed form, where known.
    pub fn target(&self, m: T) -> Option<T> {
        match self.kind {
            ExpansionKind::Log => Some(m.ln()),
            ExpansionKind::Reciprocal => Some(m.recip()),
            ExpansionKind::Custom => None,
        }
    }
}
