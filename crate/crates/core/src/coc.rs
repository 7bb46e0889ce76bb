//! Cancel-on-complete replication via the balanced-fairness equivalence.
//!
//! A partially pooled c.o.c. system with configuration `(k1, k2)` has the
//! same steady-state occupancy law as a two-class single server under
//! balanced fair scheduling over the polymatroid rate region with per-class
//! caps `N1 + k2`, `N2 + k1` and total cap `N1 + N2`. Mean response times
//! follow from the normalization constant `G` of that system:
//! `D_i = (dG/d rho_i) / (nu_i G)`.

use crate::erlang::ProviderParams;
use crate::{Error, MetricPair, Provider, Result, SharingConfig};

/// Polymatroid capacity region for two job classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRegion {
    /// Cap on the class-1 service rate (`N1 + k2`, or `mu1 + k2`).
    pub cap1: f64,
    /// Cap on the class-2 service rate (`N2 + k1`, or `mu2 + k1`).
    pub cap2: f64,
    /// Cap on the aggregate service rate (`N1 + N2`, or `mu1 + mu2`).
    pub cap_total: f64,
}

impl RateRegion {
    pub fn new(cap1: f64, cap2: f64, cap_total: f64) -> Result<Self> {
        let r = RateRegion { cap1, cap2, cap_total };
        if !(cap1 > 0.0 && cap2 > 0.0 && cap_total > 0.0) {
            return Err(Error::InvalidParameter("rate caps must be positive".into()));
        }
        if cap1 > cap_total || cap2 > cap_total || cap1 + cap2 < cap_total {
            return Err(Error::InvalidParameter(format!(
                "caps ({cap1}, {cap2}, {cap_total}) violate the polymatroid constraints"
            )));
        }
        Ok(r)
    }

    /// Region induced by a multi-server sharing configuration.
    pub fn from_servers(p1: &ProviderParams, p2: &ProviderParams, cfg: &SharingConfig) -> Result<Self> {
        cfg.validate(p1.servers(), p2.servers())?;
        let n1 = p1.servers() as f64;
        let n2 = p2.servers() as f64;
        RateRegion::new(n1 + cfg.k2, n2 + cfg.k1, n1 + n2)
    }

    /// Region for the single-server setting with pooled service rates
    /// `mu1`, `mu2` and real-valued contributions `k_i` in `[0, mu_i]`.
    pub fn from_rates(mu1: f64, mu2: f64, k1: f64, k2: f64) -> Result<Self> {
        if !(k1 >= 0.0 && k1 <= mu1 && k2 >= 0.0 && k2 <= mu2) {
            return Err(Error::InvalidParameter(format!(
                "contributions ({k1}, {k2}) must lie in [0, {mu1}] x [0, {mu2}]"
            )));
        }
        RateRegion::new(mu1 + k2, mu2 + k1, mu1 + mu2)
    }

    fn check_stability(&self, rho1: f64, rho2: f64) -> Result<()> {
        if rho1 >= self.cap1 || rho2 >= self.cap2 || rho1 + rho2 >= self.cap_total {
            return Err(Error::Unstable(format!(
                "loads ({rho1}, {rho2}) exceed the region caps ({}, {}, {})",
                self.cap1, self.cap2, self.cap_total
            )));
        }
        Ok(())
    }
}

/// Per-subset terms of the normalization constant, exposed for testing.
///
/// `G = empty + class1 + class2 + both`, built by the recursion
/// `G_A = sum_{i in A} rho_i G_{A \ i} / (mu(A) - rho(A))` with
/// `G_empty = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTerms {
    pub empty: f64,
    pub class1: f64,
    pub class2: f64,
    pub both: f64,
}

impl NormalizationTerms {
    pub fn total(&self) -> f64 {
        self.empty + self.class1 + self.class2 + self.both
    }
}

/// Normalization constant terms for loads `(rho1, rho2)` on `region`.
pub fn normalization_terms(region: &RateRegion, rho1: f64, rho2: f64) -> Result<NormalizationTerms> {
    region.check_stability(rho1, rho2)?;
    let g1 = rho1 / (region.cap1 - rho1);
    let g2 = rho2 / (region.cap2 - rho2);
    let g12 = (rho1 * g2 + rho2 * g1) / (region.cap_total - rho1 - rho2);
    Ok(NormalizationTerms {
        empty: 1.0,
        class1: g1,
        class2: g2,
        both: g12,
    })
}

/// Normalization constant `G(k1, k2)` of the partially pooled c.o.c. system.
pub fn normalization(p1: &ProviderParams, p2: &ProviderParams, cfg: &SharingConfig) -> Result<f64> {
    let region = RateRegion::from_servers(p1, p2, cfg)?;
    Ok(normalization_terms(&region, p1.load(), p2.load())?.total())
}

/// `(G, dG/drho_1, dG/drho_2)` in closed form.
fn normalization_with_gradient(region: &RateRegion, rho1: f64, rho2: f64) -> Result<(f64, f64, f64)> {
    region.check_stability(rho1, rho2)?;
    let a = region.cap1;
    let b = region.cap2;
    let t = region.cap_total;
    let g1 = rho1 / (a - rho1);
    let g2 = rho2 / (b - rho2);
    let slack = t - rho1 - rho2;
    let g12 = (rho1 * g2 + rho2 * g1) / slack;
    let g = 1.0 + g1 + g2 + g12;

    let dg1 = a / ((a - rho1) * (a - rho1));
    let dg2 = b / ((b - rho2) * (b - rho2));
    // d/drho1 of (rho1 g2 + rho2 g1) / slack
    let dg12_d1 = ((g2 + rho2 * dg1) * slack + (rho1 * g2 + rho2 * g1)) / (slack * slack);
    let dg12_d2 = ((g1 + rho1 * dg2) * slack + (rho1 * g2 + rho2 * g1)) / (slack * slack);
    Ok((g, dg1 + dg12_d1, dg2 + dg12_d2))
}

fn response_from_region(
    region: &RateRegion,
    rho1: f64,
    rho2: f64,
    nu1: f64,
    nu2: f64,
) -> Result<[f64; 2]> {
    let (g, d1, d2) = normalization_with_gradient(region, rho1, rho2)?;
    Ok([d1 / (nu1 * g), d2 / (nu2 * g)])
}

/// Mean response time of provider `i` under c.o.c. replication at an integer
/// configuration.
pub fn mean_response(
    p1: &ProviderParams,
    p2: &ProviderParams,
    cfg: &SharingConfig,
    provider: Provider,
) -> Result<f64> {
    Ok(mean_response_both(p1, p2, cfg)?[provider.index()])
}

/// Both providers' mean response times `(D1, D2)`.
pub fn mean_response_both(
    p1: &ProviderParams,
    p2: &ProviderParams,
    cfg: &SharingConfig,
) -> Result<[f64; 2]> {
    cfg.as_integer()?;
    let region = RateRegion::from_servers(p1, p2, cfg)?;
    response_from_region(&region, p1.load(), p2.load(), p1.nu(), p2.nu())
}

/// Arrival-rate-weighted mean response time of the overall system.
pub fn mean_response_overall(
    p1: &ProviderParams,
    p2: &ProviderParams,
    cfg: &SharingConfig,
) -> Result<f64> {
    let [d1, d2] = mean_response_both(p1, p2, cfg)?;
    Ok((p1.lambda() * d1 + p2.lambda() * d2) / (p1.lambda() + p2.lambda()))
}

/// Stationary occupancy distribution of the two-class balanced-fairness
/// system, computed by the balance-function recursion. Independent oracle
/// for the closed-form mean response times.
#[derive(Debug, Clone)]
pub struct BfOccupancy {
    /// `P(n1 = i, n2 = j)` for `i, j < truncation`.
    pub dist: Vec<Vec<f64>>,
    pub mean_n1: f64,
    pub mean_n2: f64,
    /// Mean response times via Little's law.
    pub response: [f64; 2],
    /// Upper bound on the probability mass outside the truncated box.
    pub tail_bound: f64,
}

/// Balance-function occupancy oracle over `region`.
///
/// `truncation` bounds each occupancy coordinate. Fails if the geometric
/// tail estimate cannot certify at most `1e-9` truncated mass.
pub fn bf_occupancy_oracle(
    p1: &ProviderParams,
    p2: &ProviderParams,
    region: &RateRegion,
    truncation: usize,
) -> Result<BfOccupancy> {
    let rho1 = p1.load();
    let rho2 = p2.load();
    region.check_stability(rho1, rho2)?;
    let n = truncation;

    // Balance function Phi over the truncated box, combined with the load
    // powers on the fly: w(i, j) = Phi(i, j) rho1^i rho2^j.
    let mut w = vec![vec![0.0f64; n]; n];
    w[0][0] = 1.0;
    for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            w[i][j] = if j == 0 {
                w[i - 1][0] * rho1 / region.cap1
            } else if i == 0 {
                w[0][j - 1] * rho2 / region.cap2
            } else {
                (w[i - 1][j] * rho1 + w[i][j - 1] * rho2) / region.cap_total
            };
        }
    }

    let total: f64 = w.iter().flatten().sum();
    // Outside the box every step multiplies the weight by at most `ratio`.
    let ratio = (rho1 / region.cap1)
        .max(rho2 / region.cap2)
        .max((rho1 + rho2) / region.cap_total);
    let boundary: f64 = (0..n)
        .map(|i| w[i][n - 1] + w[n - 1][i])
        .sum::<f64>()
        - w[n - 1][n - 1];
    let tail_bound = boundary / total * ratio / (1.0 - ratio) * 2.0;
    if tail_bound > 1e-9 {
        return Err(Error::Truncation(format!(
            "tail bound {tail_bound:.3e} exceeds 1e-9 at truncation {n}"
        )));
    }

    let mut mean_n1 = 0.0;
    let mut mean_n2 = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v /= total;
            mean_n1 += i as f64 * *v;
            mean_n2 += j as f64 * *v;
        }
    }
    let response = [mean_n1 / p1.lambda(), mean_n2 / p2.lambda()];
    Ok(BfOccupancy {
        dist: w,
        mean_n1,
        mean_n2,
        response,
        tail_bound,
    })
}

/// All Pareto-optimal c.o.c. configurations for the mean response time
/// metric: exactly the full-pooling configuration `(N1, N2)`.
///
/// Performs an exhaustive dominance audit over the integer grid and fails if
/// any other configuration turns out undominated.
pub fn pareto(p1: &ProviderParams, p2: &ProviderParams) -> Result<Vec<SharingConfig>> {
    let n1 = p1.servers();
    let n2 = p2.servers();
    let full = SharingConfig::full(p1, p2);
    let [d1_full, d2_full] = mean_response_both(p1, p2, &full)?;
    for k1 in 0..=n1 {
        for k2 in 0..=n2 {
            if k1 == n1 && k2 == n2 {
                continue;
            }
            let cfg = SharingConfig { k1: k1 as f64, k2: k2 as f64 };
            let [d1, d2] = mean_response_both(p1, p2, &cfg)?;
            let weakly_worse = d1 >= d1_full - 1e-12 && d2 >= d2_full - 1e-12;
            let strictly_worse_somewhere = d1 > d1_full + 1e-12 || d2 > d2_full + 1e-12;
            if !weakly_worse || !strictly_worse_somewhere {
                return Err(Error::Infeasible(format!(
                    "configuration ({k1}, {k2}) is not dominated by full pooling: \
                     D = ({d1}, {d2}) vs ({d1_full}, {d2_full})"
                )));
            }
        }
    }
    Ok(vec![full])
}

/// Parameters of the single-server balanced-fairness pooling variant.
#[derive(Debug, Clone, Copy)]
pub struct SingleServerSetting {
    /// Server speeds of the two providers.
    pub mu1: f64,
    pub mu2: f64,
    /// Loads `lambda_i / nu_i`.
    pub rho1: f64,
    pub rho2: f64,
    /// Inverse mean job sizes.
    pub nu1: f64,
    pub nu2: f64,
}

impl SingleServerSetting {
    pub fn new(mu1: f64, mu2: f64, rho1: f64, rho2: f64, nu1: f64, nu2: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 > 0.0 && nu1 > 0.0 && nu2 > 0.0 && rho1 > 0.0 && rho2 > 0.0) {
            return Err(Error::InvalidParameter(
                "single-server setting requires positive rates".into(),
            ));
        }
        if rho1 >= mu1 || rho2 >= mu2 {
            return Err(Error::Unstable(format!(
                "loads ({rho1}, {rho2}) must be below the speeds ({mu1}, {mu2})"
            )));
        }
        Ok(SingleServerSetting { mu1, mu2, rho1, rho2, nu1, nu2 })
    }
}

/// Mean response times in the single-server setting with real-valued
/// contributions `k_i` in `[0, mu_i]`.
pub fn single_server_metrics(s: &SingleServerSetting, k1: f64, k2: f64) -> Result<MetricPair> {
    let region = RateRegion::from_rates(s.mu1, s.mu2, k1, k2)?;
    let [d1, d2] = response_from_region(&region, s.rho1, s.rho2, s.nu1, s.nu2)?;
    Ok(MetricPair::analytic_response(d1, d2))
}

/// Dominance audit over a real grid for the single-server setting: confirms
/// full sharing (`k_i = mu_i`) is the unique undominated configuration.
pub fn single_server_pareto_check(s: &SingleServerSetting, steps: usize) -> Result<()> {
    let full = single_server_metrics(s, s.mu1, s.mu2)?.response.unwrap();
    for i in 0..=steps {
        for j in 0..=steps {
            let k1 = s.mu1 * i as f64 / steps as f64;
            let k2 = s.mu2 * j as f64 / steps as f64;
            if i == steps && j == steps {
                continue;
            }
            let d = single_server_metrics(s, k1, k2)?.response.unwrap();
            let weakly_worse = d[0] >= full[0] - 1e-12 && d[1] >= full[1] - 1e-12;
            let strictly = d[0] > full[0] + 1e-12 || d[1] > full[1] + 1e-12;
            if !weakly_worse || !strictly {
                return Err(Error::Infeasible(format!(
                    "single-server configuration ({k1}, {k2}) not dominated by full sharing"
                )));
            }
        }
    }
    Ok(())
}
