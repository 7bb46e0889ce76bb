//! Standalone M/M/N benchmark formulas.
//!
//! These are the baselines the pooling analyses are compared against, and the
//! building blocks for deriving arrival rates from target waiting
//! probabilities.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Arrival and service parameters of a single provider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProviderParams {
    lambda: f64,
    nu: f64,
    servers: u32,
}

impl ProviderParams {
    /// `lambda`: Poisson arrival rate, `nu`: inverse mean job size,
    /// `servers`: number of unit-rate servers.
    ///
    /// Requires all values strictly positive and the load `lambda / nu`
    /// strictly below the server count.
    pub fn new(lambda: f64, nu: f64, servers: u32) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "arrival rate {lambda} must be positive and finite"
            )));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "service parameter {nu} must be positive and finite"
            )));
        }
        if servers == 0 {
            return Err(Error::InvalidParameter("server count must be positive".into()));
        }
        let p = ProviderParams { lambda, nu, servers };
        if p.load() >= servers as f64 {
            return Err(Error::Unstable(format!(
                "load {} must be below the server count {}",
                p.load(),
                servers
            )));
        }
        Ok(p)
    }

    /// Provider with the arrival rate chosen so that the standalone Erlang-C
    /// waiting probability equals `target`.
    pub fn from_standalone_wait(target: f64, nu: f64, servers: u32) -> Result<Self> {
        let rho = invert_erlang_c(target, servers)?;
        ProviderParams::new(rho * nu, nu, servers)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn servers(&self) -> u32 {
        self.servers
    }

    /// Offered load in Erlangs, `lambda / nu`.
    pub fn load(&self) -> f64 {
        self.lambda / self.nu
    }
}

/// Steady-state probability that an arriving job waits in an M/M/`n` queue
/// with offered load `rho`.
///
/// Computed through the Erlang-B recurrence, which stays finite for large
/// `n` where the textbook factorial form overflows.
pub fn erlang_c(rho: f64, n: u32) -> Result<f64> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::InvalidParameter(format!("load {rho} must be nonnegative")));
    }
    if rho >= n as f64 {
        return Err(Error::Unstable(format!("load {rho} must be below {n} servers")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let mut b = 1.0;
    for k in 1..=n {
        b = rho * b / (k as f64 + rho * b);
    }
    let util = rho / n as f64;
    Ok(b / (1.0 - util * (1.0 - b)))
}

/// Standalone mean response time `1/nu + C / (nu (N - rho))`.
pub fn standalone_delay(p: &ProviderParams) -> Result<f64> {
    let c = erlang_c(p.load(), p.servers())?;
    Ok(1.0 / p.nu() + c / (p.nu() * (p.servers() as f64 - p.load())))
}

/// Load `rho` for which `erlang_c(rho, n)` equals `target`.
///
/// Bisection on the strictly increasing map `rho -> C(rho, n)`, to within
/// `1e-10` on the probability.
pub fn invert_erlang_c(target: f64, n: u32) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target waiting probability {target} must lie in (0, 1)"
        )));
    }
    let mut lo = 0.0;
    let mut hi = n as f64 * (1.0 - 1e-14);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = erlang_c(mid, n)?;
        if (c - target).abs() < 1e-10 {
            return Ok(mid);
        }
        if c < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Textbook direct-summation Erlang C, usable for n small enough that
    /// factorials stay finite. Independent oracle for the recurrence.
    fn erlang_c_direct(rho: f64, n: u32) -> f64 {
        let nf = n as f64;
        let mut fact = 1.0; // k!
        let mut sum = 0.0; // sum_{k < n} rho^k / k!
        for k in 0..n {
            if k > 0 {
                fact *= k as f64;
            }
            sum += rho.powi(k as i32) / fact;
        }
        let n_fact = fact * nf;
        let top = rho.powi(n as i32);
        top / (top + (1.0 - rho / nf) * sum * n_fact)
    }

    #[test]
    fn intro_example_values() {
        assert!((erlang_c(16.0, 20).unwrap() - 0.2561).abs() < 0.0005);
        assert!((erlang_c(28.0, 30).unwrap() - 0.6201).abs() < 0.0005);
        assert!((erlang_c(44.0, 50).unwrap() - 0.2843).abs() < 0.0005);
    }

    #[test]
    fn single_server_wait_equals_load() {
        for rho in [0.05, 0.3, 0.72, 0.999] {
            assert_relative_eq!(erlang_c(rho, 1).unwrap(), rho, max_relative = 1e-12);
        }
    }

    #[test]
    fn empty_system_never_waits() {
        assert_eq!(erlang_c(0.0, 7).unwrap(), 0.0);
    }

    #[test]
    fn recurrence_matches_direct_summation() {
        for n in [1u32, 2, 5, 10, 30, 60, 100] {
            for frac in [0.1, 0.4, 0.7, 0.9, 0.999] {
                let rho = frac * n as f64;
                if rho == 0.0 {
                    continue;
                }
                let a = erlang_c(rho, n).unwrap();
                let b = erlang_c_direct(rho, n);
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn monotone_in_load_and_servers() {
        for n in 1..=50u32 {
            let mut prev = -1.0;
            for i in 0..100 {
                let rho = (i as f64 + 0.5) / 100.0 * n as f64;
                let c = erlang_c(rho, n).unwrap();
                assert!(c > prev, "not increasing in rho at n={n}, rho={rho}");
                prev = c;
            }
        }
        for i in 1..100 {
            let rho = i as f64 / 100.0;
            let mut prev = f64::INFINITY;
            for n in 1..=50u32 {
                let c = erlang_c(rho, n).unwrap();
                assert!(c < prev, "not decreasing in n at rho={rho}, n={n}");
                prev = c;
            }
        }
    }

    #[test]
    fn delay_examples() {
        // M/M/1 with lambda 0.5: mean response 1 / (1 - 0.5) = 2.
        let p = ProviderParams::new(0.5, 1.0, 1).unwrap();
        assert_relative_eq!(standalone_delay(&p).unwrap(), 2.0, max_relative = 1e-12);

        // N = 20, rho = 16: D = 1 + C(16, 20) / 4.
        let p = ProviderParams::new(16.0, 1.0, 20).unwrap();
        let expected = 1.0 + erlang_c_direct(16.0, 20) / 4.0;
        assert!((standalone_delay(&p).unwrap() - expected).abs() < 2e-3);
        assert!((standalone_delay(&p).unwrap() - 1.0625).abs() < 2e-3);

        // Vanishing load: pure service time.
        let p = ProviderParams::new(1e-12, 2.0, 3).unwrap();
        assert_relative_eq!(standalone_delay(&p).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn inversion_examples() {
        assert_relative_eq!(invert_erlang_c(0.1, 1).unwrap(), 0.1, epsilon = 1e-8);

        let rho = invert_erlang_c(0.05, 5).unwrap();
        assert!((erlang_c_direct(rho, 5) - 0.05).abs() < 1e-9);

        // 30 servers at 62% waiting probability is about 28 Erlangs.
        let rho = invert_erlang_c(0.62, 30).unwrap();
        assert!((rho - 28.0).abs() < 0.5);
    }

    #[test]
    fn rejects_invalid_domains() {
        assert!(erlang_c(-0.1, 3).is_err());
        assert!(erlang_c(3.0, 3).is_err());
        assert!(invert_erlang_c(0.0, 3).is_err());
        assert!(invert_erlang_c(1.0, 3).is_err());
        assert!(ProviderParams::new(5.0, 1.0, 5).is_err());
        assert!(ProviderParams::new(-1.0, 1.0, 5).is_err());
        assert!(ProviderParams::new(1.0, 0.0, 5).is_err());
    }

    proptest! {
        #[test]
        fn inversion_round_trips(n in 1u32..40, frac in 0.01f64..0.95) {
            let rho = frac * n as f64;
            let c = erlang_c(rho, n).unwrap();
            prop_assume!(c > 1e-12);
            let back = invert_erlang_c(c, n).unwrap();
            prop_assert!((erlang_c(back, n).unwrap() - c).abs() < 1e-8);
        }
    }
}
