//! Cancel-on-start replication via the multi-type server framework.
//!
//! Under c.o.s. the system is equivalent to a single FCFS queue feeding three
//! classes of exchangeable servers: the providers' dedicated pools and the
//! shared pool. With assignment rates chosen to satisfy the rate condition,
//! the stationary distribution has product form; this module solves for the
//! assignment rates, evaluates the product form, and derives the waiting
//! probabilities. An exact typed Markov-chain oracle lives in [`ctmc`].

pub mod ctmc;

use crate::erlang::ProviderParams;
use crate::{Error, Provider, Result, SharingConfig};

/// Busy-server counts per class: dedicated-1, dedicated-2, shared.
pub type Occupancy = [u32; 3];

/// The three server classes induced by an integer sharing configuration,
/// together with the traffic parameters.
#[derive(Debug, Clone, Copy)]
pub struct ServerClasses {
    sizes: [u32; 3],
    lambda: [f64; 2],
    nu: f64,
}

impl ServerClasses {
    pub fn new(p1: &ProviderParams, p2: &ProviderParams, cfg: &SharingConfig) -> Result<Self> {
        let (k1, k2) = cfg.as_integer()?;
        cfg.validate(p1.servers(), p2.servers())?;
        if (p1.nu() - p2.nu()).abs() > 1e-12 * p1.nu() {
            return Err(Error::Unsupported(
                "cancel-on-start analysis requires equal service rates".into(),
            ));
        }
        let c = ServerClasses {
            sizes: [p1.servers() - k1, p2.servers() - k2, k1 + k2],
            lambda: [p1.lambda(), p2.lambda()],
            nu: p1.nu(),
        };
        let elig1 = (c.sizes[0] + c.sizes[2]) as f64 * c.nu;
        let elig2 = (c.sizes[1] + c.sizes[2]) as f64 * c.nu;
        let total = c.total() as f64 * c.nu;
        if c.lambda[0] >= elig1 || c.lambda[1] >= elig2 || c.lambda[0] + c.lambda[1] >= total {
            return Err(Error::Unstable(format!(
                "loads ({}, {}) unstable for class sizes {:?}",
                c.lambda[0], c.lambda[1], c.sizes
            )));
        }
        Ok(c)
    }

    pub fn sizes(&self) -> [u32; 3] {
        self.sizes
    }

    pub fn lambda(&self) -> [f64; 2] {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Total number of servers.
    pub fn total(&self) -> u32 {
        self.sizes.iter().sum()
    }

    pub fn state_count(&self) -> usize {
        self.sizes.iter().map(|&s| s as usize + 1).product()
    }

    /// Dense index of an occupancy vector (lexicographic).
    pub fn index(&self, x: Occupancy) -> usize {
        let [_, d2, s] = self.sizes;
        ((x[0] as usize * (d2 as usize + 1)) + x[1] as usize) * (s as usize + 1) + x[2] as usize
    }

    /// All occupancy vectors in lexicographic order.
    pub fn states(&self) -> Vec<Occupancy> {
        let mut v = Vec::with_capacity(self.state_count());
        for x1 in 0..=self.sizes[0] {
            for x2 in 0..=self.sizes[1] {
                for x3 in 0..=self.sizes[2] {
                    v.push([x1, x2, x3]);
                }
            }
        }
        v
    }

    /// Whether every server eligible for the given provider's jobs is busy.
    pub fn blocked(&self, x: Occupancy, provider: Provider) -> bool {
        let i = provider.index();
        x[i] == self.sizes[i] && x[2] == self.sizes[2]
    }

    /// Aggregate arrival rate of jobs that no idle server can take.
    pub fn blocked_rate(&self, x: Occupancy) -> f64 {
        let mut r = 0.0;
        if self.blocked(x, Provider::P1) {
            r += self.lambda[0];
        }
        if self.blocked(x, Provider::P2) {
            r += self.lambda[1];
        }
        r
    }

    /// `r(x)`: aggregate arrival rate of jobs some idle server can take.
    pub fn servable_rate(&self, x: Occupancy) -> f64 {
        self.lambda[0] + self.lambda[1] - self.blocked_rate(x)
    }
}

/// Per-server assignment rates `r_c(x)` for each occupancy vector, solved so
/// that the product of rates along a path of server activations is
/// permutation invariant.
#[derive(Debug, Clone)]
pub struct AssignmentRateTable {
    classes: ServerClasses,
    rates: Vec<[f64; 3]>,
}

impl AssignmentRateTable {
    pub fn classes(&self) -> &ServerClasses {
        &self.classes
    }

    pub fn get(&self, x: Occupancy) -> [f64; 3] {
        self.rates[self.classes.index(x)]
    }

    /// Checks nonnegativity, the zero convention at full classes, the
    /// balance equation, the two swap families, and the boundary values.
    pub fn verify(&self) -> Result<()> {
        let c = &self.classes;
        let sizes = c.sizes;
        let [l1, l2] = c.lambda;
        let fail = |msg: String| Err(Error::Infeasible(msg));
        for x in c.states() {
            let r = self.get(x);
            let mut balance = -c.servable_rate(x);
            for i in 0..3 {
                if r[i] < 0.0 {
                    return fail(format!("negative rate r_{i}{x:?} = {}", r[i]));
                }
                if x[i] == sizes[i] && r[i] != 0.0 {
                    return fail(format!("r_{i}{x:?} nonzero with class {i} full"));
                }
                balance += (sizes[i] - x[i]) as f64 * r[i];
            }
            if x.iter().zip(sizes).any(|(&xi, si)| xi < si) && balance.abs() > 1e-9 * (l1 + l2) {
                return fail(format!("balance residual {balance:.3e} at {x:?}"));
            }
            // swap families against the shared class
            for (i, e) in [(0usize, [1, 0, 0]), (1, [0, 1, 0])] {
                if x[i] < sizes[i] && x[2] < sizes[2] {
                    let xe = [x[0] + e[0], x[1] + e[1], x[2]];
                    let xs = [x[0], x[1], x[2] + 1];
                    let lhs = r[i] * self.get(xe)[2];
                    let rhs = self.get(xs)[i] * r[2];
                    if (lhs - rhs).abs() > 1e-9 * (l1 + l2) * (l1 + l2) {
                        return fail(format!("swap inconsistency for class {i} at {x:?}"));
                    }
                }
            }
        }
        for (i, want) in [(0usize, l1), (1, l2), (2, l1 + l2)] {
            if sizes[i] == 0 {
                continue;
            }
            let mut x = sizes;
            x[i] -= 1;
            let got = self.get(x)[i];
            if (got - want).abs() > 1e-9 * (l1 + l2) {
                return fail(format!("boundary r_{i} = {got}, expected {want}"));
            }
        }
        Ok(())
    }

    /// Deterministic textual form, one line per occupancy vector.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for x in self.classes.states() {
            let r = self.get(x);
            out.push_str(&format!(
                "{} {} {} {:.12e} {:.12e} {:.12e}\n",
                x[0], x[1], x[2], r[0], r[1], r[2]
            ));
        }
        out
    }

    /// Product of per-server assignment rates along a path from the empty
    /// system to `x` (path independent by construction).
    pub fn path_product(&self, x: Occupancy) -> f64 {
        let mut cur = [0u32; 3];
        let mut p = 1.0;
        for c in 0..3 {
            for _ in 0..x[c] {
                p *= self.get(cur)[c];
                cur[c] += 1;
            }
        }
        p
    }
}

/// Solves the assignment-rate equations by backward recursion over
/// occupancy levels, anchored on the shared class where available.
pub fn solve_assignment_rates(classes: &ServerClasses) -> Result<AssignmentRateTable> {
    let sizes = classes.sizes;
    let [l1, l2] = classes.lambda;
    let total = classes.total();
    let mut rates = vec![[0.0f64; 3]; classes.state_count()];
    let mut by_level: Vec<Vec<Occupancy>> = vec![Vec::new(); total as usize + 1];
    for x in classes.states() {
        by_level[x.iter().sum::<u32>() as usize].push(x);
    }
    for level in (0..total).rev() {
        for &x in &by_level[level as usize] {
            let idle: Vec<usize> = (0..3).filter(|&c| x[c] < sizes[c]).collect();
            let idx = classes.index(x);
            if level == total - 1 {
                // exactly one class has an idle server
                let c = idle[0];
                rates[idx][c] = [l1, l2, l1 + l2][c];
                continue;
            }
            // Express each idle class's rate as a multiple of the anchor's
            // via the swap identity r_c(x) r_a(x+e_c) = r_a(x) r_c(x+e_a),
            // then pin the anchor with the balance equation.
            let anchor = if x[2] < sizes[2] { 2 } else { *idle.last().unwrap() };
            let mut coef = [0.0f64; 3];
            for &c in &idle {
                if c == anchor {
                    coef[c] = 1.0;
                    continue;
                }
                let mut xa = x;
                xa[anchor] += 1;
                let mut xc = x;
                xc[c] += 1;
                let den = rates[classes.index(xc)][anchor];
                if den <= 0.0 {
                    return Err(Error::Infeasible(format!(
                        "vanishing anchor rate above {x:?}"
                    )));
                }
                coef[c] = rates[classes.index(xa)][c] / den;
            }
            let denom: f64 = idle
                .iter()
                .map(|&c| (sizes[c] - x[c]) as f64 * coef[c])
                .sum();
            let ra = classes.servable_rate(x) / denom;
            for &c in &idle {
                rates[idx][c] = coef[c] * ra;
            }
        }
    }
    let table = AssignmentRateTable {
        classes: *classes,
        rates,
    };
    table.verify()?;
    Ok(table)
}

/// Stationary description of the c.o.s. system aggregated over occupancy
/// vectors (queue contents summed out through the geometric factors).
#[derive(Debug, Clone)]
pub struct CosStationary {
    classes: ServerClasses,
    /// Normalized occupancy-marginal probabilities, indexed by
    /// `ServerClasses::index`.
    pub occupancy: Vec<f64>,
    /// `alpha(x) = lambda(x) / (|x| nu)`, the geometric queue ratio at `x`.
    pub alphas: Vec<f64>,
    /// Probability of the empty system.
    pub pi0: f64,
}

impl CosStationary {
    pub fn classes(&self) -> &ServerClasses {
        &self.classes
    }

    pub fn prob(&self, x: Occupancy) -> f64 {
        self.occupancy[self.classes.index(x)]
    }

    pub fn total_mass(&self) -> f64 {
        self.occupancy.iter().sum()
    }

    /// Waiting probabilities `(C1, C2)` by PASTA: mass of occupancies where
    /// every eligible server is busy.
    pub fn waiting(&self) -> [f64; 2] {
        let mut c = [0.0f64; 2];
        for x in self.classes.states() {
            let p = self.prob(x);
            for (i, pr) in [Provider::P1, Provider::P2].into_iter().enumerate() {
                if self.classes.blocked(x, pr) {
                    c[i] += p;
                }
            }
        }
        c
    }
}

/// Evaluates the product form over occupancy vectors in level order,
/// folding in the geometric queue factors `1/(1 - alpha)`.
pub fn stationary_normalization(
    classes: &ServerClasses,
    rates: &AssignmentRateTable,
) -> Result<CosStationary> {
    let sizes = classes.sizes;
    let nu = classes.nu;
    let n = classes.state_count();
    let mut w = vec![0.0f64; n];
    let mut alphas = vec![0.0f64; n];
    let mut states = classes.states();
    states.sort_by_key(|x| x.iter().sum::<u32>());
    w[classes.index([0, 0, 0])] = 1.0;
    for &x in &states {
        let level: u32 = x.iter().sum();
        if level == 0 {
            continue;
        }
        let idx = classes.index(x);
        let mut acc = 0.0;
        for c in 0..3 {
            if x[c] == 0 {
                continue;
            }
            let mut xp = x;
            xp[c] -= 1;
            let pidx = classes.index(xp);
            acc += w[pidx] * (sizes[c] - xp[c]) as f64 * rates.rates[pidx][c]
                / (level as f64 * nu);
        }
        let alpha = classes.blocked_rate(x) / (level as f64 * nu);
        if alpha >= 1.0 {
            return Err(Error::Unstable(format!("alpha = {alpha} at {x:?}")));
        }
        alphas[idx] = alpha;
        w[idx] = acc / (1.0 - alpha);
    }
    let z: f64 = w.iter().sum();
    for v in &mut w {
        *v /= z;
    }
    Ok(CosStationary {
        classes: *classes,
        pi0: w[classes.index([0, 0, 0])],
        occupancy: w,
        alphas,
    })
}

/// Waiting probabilities `(C1, C2)` at an integer configuration.
pub fn waiting_probabilities(
    p1: &ProviderParams,
    p2: &ProviderParams,
    cfg: &SharingConfig,
) -> Result<[f64; 2]> {
    let classes = ServerClasses::new(p1, p2, cfg)?;
    let rates = solve_assignment_rates(&classes)?;
    Ok(stationary_normalization(&classes, &rates)?.waiting())
}

/// Comparison of the literal nested-sum expressions for the waiting
/// probability against the product-form evaluation. The sums are
/// transcribed as printed (with their index symbols read literally) and are
/// reported, not trusted.
#[derive(Debug, Clone, Copy)]
pub struct PrintedSumReport {
    /// `(pi_{1}, pi_{1,2})` from the nested sums, provider-1 orientation.
    pub printed: [f64; 2],
    /// The same masses from the product form.
    pub exact: [f64; 2],
}

impl PrintedSumReport {
    pub fn discrepancy(&self) -> [f64; 2] {
        [
            (self.printed[0] - self.exact[0]).abs(),
            (self.printed[1] - self.exact[1]).abs(),
        ]
    }
}

/// Evaluates the printed nested sums for provider 1. Requires `nu = 1`,
/// matching the scope of the printed expressions.
pub fn printed_sum_diagnostic(
    p1: &ProviderParams,
    p2: &ProviderParams,
    cfg: &SharingConfig,
) -> Result<PrintedSumReport> {
    let classes = ServerClasses::new(p1, p2, cfg)?;
    if (classes.nu - 1.0).abs() > 1e-12 {
        return Err(Error::Unsupported("printed sums assume unit service rate".into()));
    }
    let rates = solve_assignment_rates(&classes)?;
    let st = stationary_normalization(&classes, &rates)?;
    let [d1, d2, s] = classes.sizes;
    let [l1, l2] = classes.lambda;
    let a = (d1 + s) as f64; // servers eligible for provider 1
    let t = classes.total() as f64;
    let fact = |n: f64| -> f64 {
        let mut f = 1.0;
        let mut i = 2.0;
        while i <= n + 0.5 {
            f *= i;
            i += 1.0;
        }
        f
    };
    let binom = |n: u32, k: u32| -> f64 {
        let mut b = 1.0;
        for j in 0..k {
            b = b * (n - j) as f64 / (j + 1) as f64;
        }
        b
    };

    let mut pi1 = 0.0;
    for x2 in 0..d2 {
        let pref = rates.path_product([d1, x2, s]) * st.pi0 / fact(a + x2 as f64)
            * binom(d2, x2);
        let mut inner = 0.0;
        for wv in 0..=x2 {
            let mut prod = 1.0;
            for v in 0..=wv {
                let m = a + (x2 - wv + v) as f64;
                prod *= m / (m - l1);
            }
            inner += binom(x2, wv)
                * fact(wv as f64)
                * a
                * fact(a + (x2 - wv) as f64 - 1.0)
                * prod;
        }
        pi1 += pref * inner;
    }

    let pref = rates.path_product([d1, d2, s]) * st.pi0 / (fact(t - 1.0) * (t - l1 - l2));
    let mut inner = 0.0;
    for wv in 0..=d2 {
        let mut prod = 1.0;
        for v in 0..wv {
            let m = t - wv as f64 + v as f64;
            prod *= m / (m - l1);
        }
        inner += binom(d2, wv) * fact(wv as f64) * a * fact(t - wv as f64 - 1.0) * prod;
    }
    let pi12 = pref * inner;

    let mut exact = [0.0f64; 2];
    for x in classes.states() {
        if x[0] == d1 && x[2] == s {
            if x[1] < d2 {
                exact[0] += st.prob(x);
            } else {
                exact[1] += st.prob(x);
            }
        }
    }
    Ok(PrintedSumReport {
        printed: [pi1, pi12],
        exact,
    })
}

/// Waiting probabilities for real-valued contributions, by bilinear
/// time-sharing between the four adjacent integer corner configurations.
/// Caches corner evaluations, so grid sweeps stay cheap.
#[derive(Debug, Clone)]
pub struct MixedEvaluator {
    p1: ProviderParams,
    p2: ProviderParams,
    corners: std::collections::HashMap<(u32, u32), [f64; 2]>,
}

impl MixedEvaluator {
    pub fn new(p1: &ProviderParams, p2: &ProviderParams) -> Self {
        MixedEvaluator {
            p1: p1.clone(),
            p2: p2.clone(),
            corners: std::collections::HashMap::new(),
        }
    }

    pub fn servers(&self) -> (u32, u32) {
        (self.p1.servers(), self.p2.servers())
    }

    pub fn corner(&mut self, k1: u32, k2: u32) -> Result<[f64; 2]> {
        if let Some(&c) = self.corners.get(&(k1, k2)) {
            return Ok(c);
        }
        let cfg = SharingConfig {
            k1: k1 as f64,
            k2: k2 as f64,
        };
        let c = waiting_probabilities(&self.p1, &self.p2, &cfg)?;
        self.corners.insert((k1, k2), c);
        Ok(c)
    }

    /// `(C1, C2)` at real `(k1, k2)`.
    pub fn waiting(&mut self, k1: f64, k2: f64) -> Result<[f64; 2]> {
        SharingConfig::new(k1, k2, &self.p1, &self.p2)?;
        let (lo1, f1) = split(k1);
        let (lo2, f2) = split(k2);
        let mut c = [0.0f64; 2];
        for (i1, wf1) in [(lo1, 1.0 - f1), (lo1 + 1, f1)] {
            for (i2, wf2) in [(lo2, 1.0 - f2), (lo2 + 1, f2)] {
                let weight = wf1 * wf2;
                if weight == 0.0 {
                    continue;
                }
                let corner = self.corner(i1, i2)?;
                c[0] += weight * corner[0];
                c[1] += weight * corner[1];
            }
        }
        Ok(c)
    }
}

fn split(k: f64) -> (u32, f64) {
    let lo = k.floor();
    (lo as u32, k - lo)
}

/// One-shot evaluation of [`MixedEvaluator::waiting`].
pub fn mixed_config_metrics(
    p1: &ProviderParams,
    p2: &ProviderParams,
    k1: f64,
    k2: f64,
) -> Result<[f64; 2]> {
    MixedEvaluator::new(p1, p2).waiting(k1, k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erlang::erlang_c;
    use approx::assert_relative_eq;

    fn provider(lambda: f64, n: u32) -> ProviderParams {
        ProviderParams::new(lambda, 1.0, n).unwrap()
    }

    fn classes_for(l1: f64, l2: f64, n1: u32, n2: u32, k1: u32, k2: u32) -> ServerClasses {
        let cfg = SharingConfig {
            k1: k1 as f64,
            k2: k2 as f64,
        };
        ServerClasses::new(&provider(l1, n1), &provider(l2, n2), &cfg).unwrap()
    }

    #[test]
    fn blocked_rate_cases() {
        let c = classes_for(0.3, 0.4, 2, 2, 1, 1);
        assert_eq!(c.sizes(), [1, 1, 2]);
        assert_eq!(c.blocked_rate([0, 0, 0]), 0.0);
        assert_eq!(c.servable_rate([0, 0, 0]), 0.7);
        assert_eq!(c.blocked_rate([1, 0, 2]), 0.3);
        assert_eq!(c.blocked_rate([1, 1, 2]), 0.7);
        assert_eq!(c.servable_rate([1, 1, 2]), 0.0);
    }

    #[test]
    fn rate_table_verifies_on_grid() {
        for (n1, n2) in [(1, 1), (1, 2), (2, 2), (3, 2)] {
            for k1 in 0..=n1 {
                for k2 in 0..=n2 {
                    let c = classes_for(0.4 * n1 as f64, 0.5 * n2 as f64, n1, n2, k1, k2);
                    solve_assignment_rates(&c).unwrap();
                }
            }
        }
    }

    #[test]
    fn decoupled_rate_table() {
        // No shared pool: the total class rate is the provider's arrival
        // rate, split per server.
        let c = classes_for(0.8, 0.4, 2, 1, 0, 0);
        let table = solve_assignment_rates(&c).unwrap();
        for x in c.states() {
            let r = table.get(x);
            if x[0] < 2 {
                assert_relative_eq!((2 - x[0]) as f64 * r[0], 0.8, max_relative = 1e-12);
            }
            if x[1] < 1 {
                assert_relative_eq!(r[1], 0.4, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn path_products_permutation_invariant() {
        let c = classes_for(0.5, 0.7, 2, 2, 1, 1);
        let table = solve_assignment_rates(&c).unwrap();
        // Walk every ordering of every class multiset and compare products.
        fn orders(x: Occupancy) -> Vec<Vec<usize>> {
            if x == [0, 0, 0] {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for c in 0..3 {
                if x[c] == 0 {
                    continue;
                }
                let mut xp = x;
                xp[c] -= 1;
                for mut tail in orders(xp) {
                    tail.push(c);
                    out.push(tail);
                }
            }
            out
        }
        for x in c.states() {
            let mut first = None;
            for order in orders(x) {
                let mut cur = [0u32; 3];
                let mut p = 1.0;
                for c in order {
                    p *= table.get(cur)[c];
                    cur[c] += 1;
                }
                match first {
                    None => first = Some(p),
                    Some(f) => assert_relative_eq!(p, f, max_relative = 1e-11),
                }
            }
        }
    }

    #[test]
    fn single_server_no_sharing_is_mm1() {
        let c = waiting_probabilities(
            &provider(0.3, 1),
            &provider(0.4, 1),
            &SharingConfig::none(),
        )
        .unwrap();
        assert_relative_eq!(c[0], 0.3, max_relative = 1e-12);
        assert_relative_eq!(c[1], 0.4, max_relative = 1e-12);
    }

    #[test]
    fn no_sharing_is_decoupled_erlang() {
        let p1 = provider(1.3, 2);
        let p2 = provider(2.1, 3);
        let c = waiting_probabilities(&p1, &p2, &SharingConfig::none()).unwrap();
        assert_relative_eq!(c[0], erlang_c(1.3, 2).unwrap(), max_relative = 1e-10);
        assert_relative_eq!(c[1], erlang_c(2.1, 3).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn full_pooling_is_aggregated_erlang() {
        for (n1, n2, l1, l2) in [(1u32, 1u32, 0.1, 0.5), (2, 3, 1.1, 1.9)] {
            let p1 = provider(l1, n1);
            let p2 = provider(l2, n2);
            let cfg = SharingConfig::full(&p1, &p2);
            let c = waiting_probabilities(&p1, &p2, &cfg).unwrap();
            let agg = erlang_c(l1 + l2, n1 + n2).unwrap();
            assert_relative_eq!(c[0], agg, max_relative = 1e-10);
            assert_relative_eq!(c[1], agg, max_relative = 1e-10);
        }
    }

    #[test]
    fn table2_full_sharing_values() {
        for (l1, l2, pct) in [(0.1, 0.1, 1.82), (0.1, 0.3, 6.65), (0.1, 0.5, 13.85)] {
            let p1 = provider(l1, 1);
            let p2 = provider(l2, 1);
            let cfg = SharingConfig { k1: 1.0, k2: 1.0 };
            let c = waiting_probabilities(&p1, &p2, &cfg).unwrap();
            assert!((100.0 * c[0] - pct).abs() < 0.05, "C1 = {}", c[0]);
            assert!((100.0 * c[1] - pct).abs() < 0.05);
        }
    }

    #[test]
    fn stationary_mass_and_alphas() {
        let c = classes_for(0.6, 0.8, 2, 2, 1, 1);
        let rates = solve_assignment_rates(&c).unwrap();
        let st = stationary_normalization(&c, &rates).unwrap();
        assert_relative_eq!(st.total_mass(), 1.0, max_relative = 1e-12);
        assert!(st.pi0 > 0.0);
        for (&a, &p) in st.alphas.iter().zip(&st.occupancy) {
            assert!((0.0..1.0).contains(&a));
            assert!(p >= 0.0);
        }
    }

    #[test]
    fn label_swap_symmetry() {
        let p1 = provider(0.7, 2);
        let p2 = provider(1.1, 3);
        let cfg = SharingConfig { k1: 1.0, k2: 2.0 };
        let c = waiting_probabilities(&p1, &p2, &cfg).unwrap();
        let s = waiting_probabilities(&p2, &p1, &cfg.swap()).unwrap();
        assert_relative_eq!(c[0], s[1], max_relative = 1e-12);
        assert_relative_eq!(c[1], s[0], max_relative = 1e-12);
    }

    #[test]
    fn printed_sums_reported() {
        // The first printed sum reproduces the product form; the second is
        // only exact when no intermediate blocking of provider 2 can occur.
        for (n1, n2, k1, k2, l1, l2) in [
            (1u32, 1u32, 1u32, 0u32, 0.3, 0.4),
            (1, 1, 0, 0, 0.1, 0.5),
            (2, 2, 1, 1, 0.6, 0.8),
            (2, 2, 2, 0, 0.6, 0.8),
        ] {
            let cfg = SharingConfig {
                k1: k1 as f64,
                k2: k2 as f64,
            };
            let rep = printed_sum_diagnostic(&provider(l1, n1), &provider(l2, n2), &cfg).unwrap();
            assert!(rep.discrepancy()[0] < 1e-10, "pi_1 off: {rep:?}");
            assert!(rep.printed[1].is_finite());
        }
        // a case where the second sum is known to deviate
        let rep = printed_sum_diagnostic(
            &provider(0.3, 1),
            &provider(0.4, 1),
            &SharingConfig::none(),
        )
        .unwrap();
        assert!(rep.discrepancy()[1] > 1e-3);
    }

    #[test]
    fn mixed_reduces_to_integer() {
        let p1 = provider(0.4, 2);
        let p2 = provider(0.6, 2);
        let exact = waiting_probabilities(&p1, &p2, &SharingConfig { k1: 1.0, k2: 2.0 }).unwrap();
        let mixed = mixed_config_metrics(&p1, &p2, 1.0, 2.0).unwrap();
        assert_eq!(exact, mixed);
    }

    #[test]
    fn mixed_symmetric_midpoint_is_corner_average() {
        let p1 = provider(0.2, 1);
        let p2 = provider(0.2, 1);
        let mut ev = MixedEvaluator::new(&p1, &p2);
        let mid = ev.waiting(0.5, 0.5).unwrap();
        let mut avg = [0.0f64; 2];
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let c = ev.corner(a, b).unwrap();
            avg[0] += 0.25 * c[0];
            avg[1] += 0.25 * c[1];
        }
        assert_relative_eq!(mid[0], avg[0], max_relative = 1e-12);
        assert_relative_eq!(mid[1], avg[1], max_relative = 1e-12);
    }

    #[test]
    fn table2_ksbs_point_metrics() {
        let p1 = provider(0.1, 1);
        let p2 = provider(0.5, 1);
        let c = mixed_config_metrics(&p1, &p2, 0.372, 1.0).unwrap();
        assert!((100.0 * c[0] - 8.26).abs() < 0.05, "C1 = {}", c[0]);
        assert!((100.0 * c[1] - 37.30).abs() < 0.05, "C2 = {}", c[1]);
    }

    #[test]
    fn rejects_unequal_service_rates() {
        let p1 = ProviderParams::new(0.3, 1.0, 1).unwrap();
        let p2 = ProviderParams::new(0.3, 2.0, 1).unwrap();
        assert!(matches!(
            ServerClasses::new(&p1, &p2, &SharingConfig::none()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_contributions() {
        let p1 = provider(0.3, 1);
        let p2 = provider(0.4, 2);
        assert!(mixed_config_metrics(&p1, &p2, 1.5, 0.0).is_err());
        assert!(mixed_config_metrics(&p1, &p2, 0.0, 2.5).is_err());
        assert!(mixed_config_metrics(&p1, &p2, -0.1, 0.0).is_err());
        assert!(mixed_config_metrics(&p1, &p2, 1.0, 2.0).is_ok());
    }

    #[test]
    fn dump_is_sorted_and_parseable() {
        let c = classes_for(0.3, 0.4, 1, 1, 1, 0);
        let table = solve_assignment_rates(&c).unwrap();
        let dump = table.dump();
        let mut lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), c.state_count());
        let sorted = {
            let mut s = lines.clone();
            s.sort();
            s
        };
        lines.sort();
        assert_eq!(lines, sorted);
        for line in dump.lines() {
            assert_eq!(line.split_whitespace().count(), 6);
        }
    }
}
