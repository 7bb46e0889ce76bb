use serde::{Deserialize, Serialize};

use crate::erlang::ProviderParams;
use crate::{Error, Result};

/// One of the two service providers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provider {
    P1,
    P2,
}

impl Provider {
    pub fn index(self) -> usize {
        match self {
            Provider::P1 => 0,
            Provider::P2 => 1,
        }
    }

    pub fn other(self) -> Provider {
        match self {
            Provider::P1 => Provider::P2,
            Provider::P2 => Provider::P1,
        }
    }
}

/// Number of servers each provider contributes to the common pool.
///
/// Integer values select an exact configuration; fractional values are
/// interpreted as long-run time-sharing between the adjacent integer
/// configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharingConfig {
    pub k1: f64,
    pub k2: f64,
}

impl SharingConfig {
    pub fn new(k1: f64, k2: f64, p1: &ProviderParams, p2: &ProviderParams) -> Result<Self> {
        let cfg = SharingConfig { k1, k2 };
        cfg.validate(p1.servers(), p2.servers())?;
        Ok(cfg)
    }

    pub fn validate(&self, n1: u32, n2: u32) -> Result<()> {
        for (k, n, name) in [(self.k1, n1, "k1"), (self.k2, n2, "k2")] {
            if !k.is_finite() || k < 0.0 || k > n as f64 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {k} must lie in [0, {n}]"
                )));
            }
        }
        Ok(())
    }

    pub fn is_integer(&self) -> bool {
        self.k1.fract() == 0.0 && self.k2.fract() == 0.0
    }

    /// The two `(k1, k2)` components as integers, or an error for fractional
    /// configurations.
    pub fn as_integer(&self) -> Result<(u32, u32)> {
        if !self.is_integer() {
            return Err(Error::InvalidParameter(format!(
                "configuration ({}, {}) must be integer-valued",
                self.k1, self.k2
            )));
        }
        Ok((self.k1 as u32, self.k2 as u32))
    }

    pub fn full(p1: &ProviderParams, p2: &ProviderParams) -> Self {
        SharingConfig {
            k1: p1.servers() as f64,
            k2: p2.servers() as f64,
        }
    }

    pub fn none() -> Self {
        SharingConfig { k1: 0.0, k2: 0.0 }
    }

    pub fn swap(&self) -> Self {
        SharingConfig {
            k1: self.k2,
            k2: self.k1,
        }
    }
}

/// How a metric value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Analytic,
    Ctmc,
    Simulation,
}

/// Per-provider waiting probabilities and mean response times.
///
/// Either metric may be absent when the producing method does not supply it
/// (for example, the c.o.s. product form yields waiting probabilities only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    /// Waiting probabilities `(C1, C2)`.
    pub wait: Option<[f64; 2]>,
    /// Mean response times `(D1, D2)`.
    pub response: Option<[f64; 2]>,
    pub provenance: Provenance,
}

impl MetricPair {
    pub fn analytic_wait(c1: f64, c2: f64) -> Self {
        MetricPair {
            wait: Some([c1, c2]),
            response: None,
            provenance: Provenance::Analytic,
        }
    }

    pub fn analytic_response(d1: f64, d2: f64) -> Self {
        MetricPair {
            wait: None,
            response: Some([d1, d2]),
            provenance: Provenance::Analytic,
        }
    }
}
