//! Pareto frontier over sharing configurations and the Kalai-Smorodinsky
//! bargaining solution.
//!
//! Under cancel-on-complete the mean response time of each provider improves
//! with any extra contribution from its partner, so full pooling dominates
//! everything and the frontier is the single point `(N1, N2)`. Under
//! cancel-on-start the waiting probabilities trade off against each other
//! and the frontier lives on the boundary of the configuration rectangle;
//! for one server each it is fully characterized by linear threshold
//! equations, because the waiting probability of a time-shared configuration
//! is bilinear in `(k1, k2)`.

use crate::coc;
use crate::cos::MixedEvaluator;
use crate::erlang::ProviderParams;
use crate::{Error, Result, SharingConfig};

/// Replication policy whose metric defines the bargaining set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    CancelOnComplete,
    CancelOnStart,
}

/// Per-provider objective minimized on the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Stationary waiting probability (cancel-on-start).
    Wait,
    /// Mean response time (cancel-on-complete).
    Delay,
}

/// A candidate configuration with its metric pair and frontier flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub k1: f64,
    pub k2: f64,
    pub b1: f64,
    pub b2: f64,
    /// Both providers strictly improve on the no-sharing baseline.
    pub individually_rational: bool,
    /// No other grid point weakly improves both metrics with one strict.
    pub undominated: bool,
    pub is_ksbs: bool,
}

/// Shape of the single-server cancel-on-start frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrontierStructure {
    /// Full pooling is individually rational for both providers. The
    /// frontier is the union of the two boundary arms
    /// `{(x, 1): x > x1_hat}` and `{(1, x): x > x2_hat}`.
    BothBenefit { x1_hat: f64, x2_hat: f64 },
    /// Only the loaded provider gains from full pooling. The frontier is a
    /// single arm: `{(1, x): x in (lower, upper)}` when provider 1 carries
    /// the heavier load, `{(x, 1)}` with the roles swapped otherwise.
    OneBenefits {
        heavy_is_p1: bool,
        lower: f64,
        upper: f64,
    },
}

/// Default per-axis grid resolution, as a fraction of `N_i`.
pub fn default_grid_step(n1: u32, n2: u32) -> f64 {
    if n1.max(n2) <= 1 {
        0.01
    } else {
        0.05
    }
}

fn grid_axis(n: u32, step: f64) -> Vec<f64> {
    let cells = (1.0 / step).round().max(1.0) as usize;
    (0..=cells)
        .map(|i| n as f64 * i as f64 / cells as f64)
        .collect()
}

fn evaluate_grid(
    p1: &ProviderParams,
    p2: &ProviderParams,
    policy: PolicyKind,
    metric: Metric,
    grid_step: f64,
) -> Result<Vec<ParetoPoint>> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid_step {grid_step} outside (0, 1]"
        )));
    }
    let mut points = Vec::new();
    match (policy, metric) {
        (PolicyKind::CancelOnComplete, Metric::Delay) => {
            for k1 in 0..=p1.servers() {
                for k2 in 0..=p2.servers() {
                    let cfg = SharingConfig {
                        k1: k1 as f64,
                        k2: k2 as f64,
                    };
                    let [b1, b2] = coc::mean_response_both(p1, p2, &cfg)?;
                    points.push(ParetoPoint {
                        k1: k1 as f64,
                        k2: k2 as f64,
                        b1,
                        b2,
                        individually_rational: false,
                        undominated: false,
                        is_ksbs: false,
                    });
                }
            }
        }
        (PolicyKind::CancelOnStart, Metric::Wait) => {
            let mut eval = MixedEvaluator::new(p1, p2);
            for &k1 in &grid_axis(p1.servers(), grid_step) {
                for &k2 in &grid_axis(p2.servers(), grid_step) {
                    let [b1, b2] = eval.waiting(k1, k2)?;
                    points.push(ParetoPoint {
                        k1,
                        k2,
                        b1,
                        b2,
                        individually_rational: false,
                        undominated: false,
                        is_ksbs: false,
                    });
                }
            }
        }
        (PolicyKind::CancelOnComplete, Metric::Wait) => {
            return Err(Error::Unsupported(
                "waiting probability is not computed for cancel-on-complete".into(),
            ))
        }
        (PolicyKind::CancelOnStart, Metric::Delay) => {
            return Err(Error::Unsupported(
                "mean response time is not computed for time-shared cancel-on-start".into(),
            ))
        }
    }
    Ok(points)
}

fn flag_points(points: &mut [ParetoPoint]) {
    let baseline = points
        .iter()
        .find(|p| p.k1 == 0.0 && p.k2 == 0.0)
        .map(|p| (p.b1, p.b2))
        .expect("grid always contains (0, 0)");
    for p in points.iter_mut() {
        p.individually_rational = p.b1 < baseline.0 && p.b2 < baseline.1;
    }
    // dominance by index sort: a point is dominated when some other point is
    // weakly better in both coordinates and strictly better in one; metrics
    // are quantized so that equal values differing by rounding noise count
    // as ties, and ties are kept
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&a| (quantize(points[a].b1), quantize(points[a].b2)));
    let mut prefix_min_b2 = i64::MAX;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len()
            && quantize(points[order[j]].b1) == quantize(points[order[i]].b1)
        {
            j += 1;
        }
        let group_min_b2 = quantize(points[order[i]].b2);
        for &idx in &order[i..j] {
            let p = &mut points[idx];
            let qb2 = quantize(p.b2);
            p.undominated = qb2 < prefix_min_b2 && qb2 <= group_min_b2;
        }
        prefix_min_b2 = prefix_min_b2.min(group_min_b2);
        i = j;
    }
}

/// Resolution at which two metric values count as equal for dominance.
fn quantize(v: f64) -> i64 {
    (v * 1e11).round() as i64
}

fn dominance_audit(frontier: &[ParetoPoint], grid: &[ParetoPoint]) {
    for p in frontier {
        let (p1, p2) = (quantize(p.b1), quantize(p.b2));
        for q in grid {
            let (q1, q2) = (quantize(q.b1), quantize(q.b2));
            let weakly = q1 <= p1 && q2 <= p2;
            let strictly = q1 < p1 || q2 < p2;
            assert!(
                !(weakly && strictly),
                "frontier point ({}, {}) dominated by ({}, {})",
                p.k1,
                p.k2,
                q.k1,
                q.k2
            );
        }
    }
}

/// Individually rational, undominated configurations on the evaluation
/// grid. Cancel-on-complete uses the integer grid and the mean response
/// time; cancel-on-start uses a real grid (per-axis resolution `grid_step`
/// as a fraction of `N_i`) and the waiting probability.
pub fn pareto_frontier(
    p1: &ProviderParams,
    p2: &ProviderParams,
    policy: PolicyKind,
    metric: Metric,
    grid_step: f64,
) -> Result<Vec<ParetoPoint>> {
    let mut points = evaluate_grid(p1, p2, policy, metric, grid_step)?;
    flag_points(&mut points);
    let frontier: Vec<ParetoPoint> = points
        .iter()
        .copied()
        .filter(|p| p.individually_rational && p.undominated)
        .collect();
    if frontier.is_empty() {
        return Err(Error::NoFrontier(
            "no configuration improves on standalone operation for both providers".into(),
        ));
    }
    dominance_audit(&frontier, &points);
    Ok(frontier)
}

/// The four corner waiting probabilities of a single-server pair, as
/// `corners[i][k1][k2]`.
fn unit_corners(p1: &ProviderParams, p2: &ProviderParams) -> Result<[[[f64; 2]; 2]; 2]> {
    let mut eval = MixedEvaluator::new(p1, p2);
    let mut c = [[[0.0; 2]; 2]; 2];
    for k1 in 0..2u32 {
        for k2 in 0..2u32 {
            let w = eval.corner(k1, k2)?;
            c[0][k1 as usize][k2 as usize] = w[0];
            c[1][k1 as usize][k2 as usize] = w[1];
        }
    }
    Ok(c)
}

/// Closed-form single-server frontier: each threshold solves a linear
/// equation because the time-shared waiting probability is bilinear in the
/// contributions.
pub fn theorem2_frontier_closed_form(
    p1: &ProviderParams,
    p2: &ProviderParams,
) -> Result<FrontierStructure> {
    if p1.servers() != 1 || p2.servers() != 1 {
        return Err(Error::Unsupported(
            "closed-form frontier requires one server per provider".into(),
        ));
    }
    let c = unit_corners(p1, p2)?;
    let full1 = c[0][1][1] < c[0][0][0];
    let full2 = c[1][1][1] < c[1][0][0];
    // x such that C_i is back at its standalone value along the given arm
    let cross = |ci: &[[f64; 2]; 2], arm_k1: bool| -> f64 {
        let (at0, at1) = if arm_k1 {
            (ci[1][0], ci[1][1])
        } else {
            (ci[0][1], ci[1][1])
        };
        (ci[0][0] - at0) / (at1 - at0)
    };
    match (full1, full2) {
        (true, true) => Ok(FrontierStructure::BothBenefit {
            x1_hat: cross(&c[1], false),
            x2_hat: cross(&c[0], true),
        }),
        (true, false) => {
            let lower = cross(&c[0], true);
            let upper = cross(&c[1], true);
            if lower >= upper {
                return Err(Error::NoFrontier(format!(
                    "empty arm: thresholds {lower} >= {upper}"
                )));
            }
            if (c[1][1][1] - c[1][0][0]).abs() < 1e-12 {
                log::warn!("provider 2 breaks even at full pooling; endpoint excluded");
            }
            Ok(FrontierStructure::OneBenefits {
                heavy_is_p1: true,
                lower,
                upper,
            })
        }
        (false, true) => {
            let lower = cross(&c[1], false);
            let upper = cross(&c[0], false);
            if lower >= upper {
                return Err(Error::NoFrontier(format!(
                    "empty arm: thresholds {lower} >= {upper}"
                )));
            }
            Ok(FrontierStructure::OneBenefits {
                heavy_is_p1: false,
                lower,
                upper,
            })
        }
        (false, false) => Err(Error::NoFrontier(
            "neither provider benefits from any sharing".into(),
        )),
    }
}

/// Bilinear partial derivatives of both waiting probabilities at a real
/// configuration of a single-server pair: `[[dC1/dk1, dC1/dk2], [dC2/dk1,
/// dC2/dk2]]`.
fn unit_gradients(
    c: &[[[f64; 2]; 2]; 2],
    k1: f64,
    k2: f64,
) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        let ci = &c[i];
        g[i][0] = (1.0 - k2) * (ci[1][0] - ci[0][0]) + k2 * (ci[1][1] - ci[0][1]);
        g[i][1] = (1.0 - k1) * (ci[0][1] - ci[0][0]) + k1 * (ci[1][1] - ci[1][0]);
    }
    g
}

/// A direction `(1, theta)` along which both waiting probabilities strictly
/// decrease from an interior configuration, certifying that interior points
/// are dominated. Returns `(theta, (lo, hi))` with the admissible open
/// interval.
pub fn boundary_direction_check(
    p1: &ProviderParams,
    p2: &ProviderParams,
    k1: f64,
    k2: f64,
) -> Result<(f64, (f64, f64))> {
    if p1.servers() != 1 || p2.servers() != 1 {
        return Err(Error::Unsupported(
            "direction check requires one server per provider".into(),
        ));
    }
    if !(0.0..1.0).contains(&k1) || !(0.0..1.0).contains(&k2) {
        return Err(Error::InvalidParameter(format!(
            "({k1}, {k2}) is not interior to the unit square"
        )));
    }
    let c = unit_corners(p1, p2)?;
    let g = unit_gradients(&c, k1, k2);
    // own contribution hurts, partner contribution helps
    debug_assert!(g[0][0] > 0.0 && g[0][1] < 0.0 && g[1][0] < 0.0 && g[1][1] > 0.0);
    let lo = -g[0][0] / g[0][1];
    let hi = -g[1][0] / g[1][1];
    if lo >= hi {
        return Err(Error::Infeasible(format!(
            "no improving direction: interval [{lo}, {hi}] empty"
        )));
    }
    Ok((0.5 * (lo + hi), (lo, hi)))
}

/// Outcome of sweeping the frontier for interior points.
#[derive(Debug, Clone)]
pub struct ConjectureReport {
    pub frontier_size: usize,
    /// Frontier points with both contributions strictly below the boundary.
    pub counterexamples: Vec<ParetoPoint>,
}

impl ConjectureReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Checks that every cancel-on-start frontier point has `k1 = N1` or
/// `k2 = N2` within grid resolution.
pub fn conjecture_check(
    p1: &ProviderParams,
    p2: &ProviderParams,
    grid_step: f64,
) -> Result<ConjectureReport> {
    let frontier = pareto_frontier(p1, p2, PolicyKind::CancelOnStart, Metric::Wait, grid_step)?;
    // within grid resolution: one cell off the boundary still counts
    let tol1 = grid_step * p1.servers() as f64 + 1e-9;
    let tol2 = grid_step * p2.servers() as f64 + 1e-9;
    let mut eval = MixedEvaluator::new(p1, p2);
    let mut counterexamples = Vec::new();
    for p in frontier
        .iter()
        .filter(|p| p1.servers() as f64 - p.k1 > tol1 && p2.servers() as f64 - p.k2 > tol2)
    {
        // interior grid survivors can be artifacts: coarse steps may miss
        // every slope that improves both providers at once, so only report
        // a counterexample if no finer boundary sweep dominates it
        if boundary_dominates(&mut eval, p, grid_step / 20.0)? {
            log::debug!(
                "interior point ({}, {}) dominated at finer resolution",
                p.k1,
                p.k2
            );
        } else {
            counterexamples.push(*p);
        }
    }
    for p in &counterexamples {
        log::warn!(
            "interior frontier point ({}, {}) with metrics ({}, {})",
            p.k1,
            p.k2,
            p.b1,
            p.b2
        );
    }
    Ok(ConjectureReport {
        frontier_size: frontier.len(),
        counterexamples,
    })
}

fn boundary_dominates(
    eval: &mut MixedEvaluator,
    p: &ParetoPoint,
    step: f64,
) -> Result<bool> {
    let (qb1, qb2) = (quantize(p.b1), quantize(p.b2));
    for t in 0..=((2.0 / step).round() as usize) {
        let t = t as f64 * step;
        let n1 = eval.servers().0 as f64;
        let n2 = eval.servers().1 as f64;
        let (k1, k2) = if t <= 1.0 {
            (t * n1, n2)
        } else {
            (n1, (2.0 - t) * n2)
        };
        let [b1, b2] = eval.waiting(k1, k2)?;
        let (q1, q2) = (quantize(b1), quantize(b2));
        if q1 <= qb1 && q2 <= qb2 && (q1 < qb1 || q2 < qb2) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Kalai-Smorodinsky bargaining solution: the frontier point whose utility
/// ratio equals the ratio of ideal utilities, with utilities measured as
/// improvement over the no-sharing baseline and ideal points taken as grid
/// minima over the full rectangle.
pub fn ksbs(
    p1: &ProviderParams,
    p2: &ProviderParams,
    policy: PolicyKind,
    metric: Metric,
    grid_step: f64,
) -> Result<ParetoPoint> {
    if policy == PolicyKind::CancelOnComplete {
        // full pooling dominates every other configuration, so the
        // bargaining set collapses to a single point
        let frontier = pareto_frontier(p1, p2, policy, metric, grid_step)?;
        if frontier.len() != 1 {
            return Err(Error::Infeasible(format!(
                "expected a singleton frontier, found {} points",
                frontier.len()
            )));
        }
        let mut point = frontier[0];
        point.is_ksbs = true;
        return Ok(point);
    }
    let grid = evaluate_grid(p1, p2, policy, metric, grid_step)?;
    let baseline = grid
        .iter()
        .find(|p| p.k1 == 0.0 && p.k2 == 0.0)
        .map(|p| (p.b1, p.b2))
        .unwrap();
    let ideal1 = baseline.0 - grid.iter().map(|p| p.b1).fold(f64::INFINITY, f64::min);
    let ideal2 = baseline.1 - grid.iter().map(|p| p.b2).fold(f64::INFINITY, f64::min);
    if ideal1 <= 0.0 || ideal2 <= 0.0 {
        return Err(Error::NoFrontier(
            "a provider cannot improve anywhere, so no bargain exists".into(),
        ));
    }
    let ratio = ideal1 / ideal2;

    // walk the boundary arms (0,N2) -> (N1,N2) -> (N1,0); the utility gap
    // u1 - ratio * u2 decreases strictly along this path
    let n1 = p1.servers() as f64;
    let n2 = p2.servers() as f64;
    let mut eval = MixedEvaluator::new(p1, p2);
    let mut gap = |t: f64| -> Result<f64> {
        let (k1, k2) = if t <= 1.0 {
            (t * n1, n2)
        } else {
            (n1, (2.0 - t) * n2)
        };
        let [b1, b2] = eval.waiting(k1, k2)?;
        Ok((baseline.0 - b1) - ratio * (baseline.1 - b2))
    };
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    let (glo, ghi) = (gap(lo)?, gap(hi)?);
    if glo < 0.0 || ghi > 0.0 {
        return Err(Error::Infeasible(format!(
            "utility gap does not change sign along the boundary ({glo}, {ghi})"
        )));
    }
    // count sign changes on a coarse sweep; the paper asserts uniqueness
    let mut crossings = 0;
    let mut prev = glo;
    for i in 1..=40 {
        let g = gap(i as f64 / 20.0)?;
        if prev > 0.0 && g <= 0.0 {
            crossings += 1;
        }
        prev = g;
    }
    if crossings > 1 {
        log::warn!("{crossings} sign changes along the frontier; reporting the first root");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let residual = gap(t)?;
    if residual.abs() >= 1e-8 {
        return Err(Error::Infeasible(format!(
            "bargaining ratio residual {residual} too large"
        )));
    }
    let (k1, k2) = if t <= 1.0 { (t * n1, n2) } else { (n1, (2.0 - t) * n2) };
    let [b1, b2] = eval.waiting(k1, k2)?;
    let point = ParetoPoint {
        k1,
        k2,
        b1,
        b2,
        individually_rational: b1 < baseline.0 && b2 < baseline.1,
        undominated: true,
        is_ksbs: true,
    };
    if !point.individually_rational {
        return Err(Error::NoFrontier(
            "bargaining point is not individually rational".into(),
        ));
    }
    Ok(point)
}
