//! Exact typed Markov chain for the c.o.s. system.
//!
//! The state keeps the per-class busy counts, the number of shared servers
//! currently serving provider-1 jobs, and the full FCFS order of waiting
//! jobs tagged by provider. This is the physical chain with nothing
//! aggregated away, so it serves as an independent oracle for the product
//! form. The waiting room is truncated at a buffer size with a certified
//! geometric tail bound.

use std::collections::HashMap;

use super::{Occupancy, ServerClasses, solve_assignment_rates};
use crate::erlang::ProviderParams;
use crate::{Error, Provider, Result, SharingConfig};

/// How an arriving job picks among eligible idle servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentPolicy {
    /// Probabilities derived from the assignment-rate table, so the chain
    /// realizes the product-form system.
    RateCondition,
    /// Uniform over idle eligible servers. Not product form; kept to
    /// quantify how much the assignment rule matters.
    UniformIdle,
}

#[derive(Debug, Clone, Copy)]
pub struct CtmcOptions {
    /// Maximum number of waiting jobs kept in the state.
    pub buffer_cap: u32,
    pub policy: AssignmentPolicy,
    /// Hard limit on the enumerated state count.
    pub state_cap: usize,
    /// Target on the certified truncated tail mass.
    pub tail_tolerance: f64,
}

impl Default for CtmcOptions {
    fn default() -> Self {
        CtmcOptions {
            buffer_cap: 16,
            policy: AssignmentPolicy::RateCondition,
            state_cap: 2_000_000,
            tail_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CtmcSolution {
    /// Waiting probabilities `(C1, C2)` by PASTA.
    pub waiting: [f64; 2],
    /// Mean response times `(D1, D2)` by Little's law.
    pub response: [f64; 2],
    /// Stationary mass aggregated to occupancy vectors, indexed by
    /// `ServerClasses::index`.
    pub occupancy: Vec<f64>,
    pub states: usize,
    /// Certified bound on the mass lost to buffer truncation.
    pub tail_bound: f64,
    pub sweeps: usize,
}

// State packing: 4 bits each for x1, x2, x3, y, then the queue word with a
// leading sentinel bit (provider 2 jobs are 1-bits, head at the low end).
const WORD_SHIFT: u32 = 16;

fn pack(x: Occupancy, y: u32, word: u64) -> u64 {
    debug_assert!(x[0] < 16 && x[1] < 16 && x[2] < 16 && y < 16);
    (x[0] as u64) | ((x[1] as u64) << 4) | ((x[2] as u64) << 8) | ((y as u64) << 12)
        | (word << WORD_SHIFT)
}

fn unpack(s: u64) -> (Occupancy, u32, u64) {
    (
        [
            (s & 15) as u32,
            ((s >> 4) & 15) as u32,
            ((s >> 8) & 15) as u32,
        ],
        ((s >> 12) & 15) as u32,
        s >> WORD_SHIFT,
    )
}

fn word_len(word: u64) -> u32 {
    63 - word.leading_zeros()
}

fn word_push(word: u64, p2: bool) -> u64 {
    let len = word_len(word);
    let body = word & !(1u64 << len);
    body | ((p2 as u64) << len) | (1u64 << (len + 1))
}

fn word_remove(word: u64, pos: u32) -> u64 {
    let len = word_len(word);
    let body = word & !(1u64 << len);
    let low = body & ((1u64 << pos) - 1);
    let high = (body >> (pos + 1)) << pos;
    low | high | (1u64 << (len - 1))
}

/// Position of the first job a freed server of the given class may take.
fn first_eligible(word: u64, class: usize) -> Option<u32> {
    let len = word_len(word);
    if len == 0 {
        return None;
    }
    let body = word & !(1u64 << len);
    match class {
        0 => {
            // dedicated-1: first 0-bit
            let pos = (!body).trailing_zeros();
            (pos < len).then_some(pos)
        }
        1 => {
            let pos = body.trailing_zeros();
            (pos < len).then_some(pos)
        }
        _ => Some(0),
    }
}

struct Chain {
    classes: ServerClasses,
    states: Vec<u64>,
    transitions: Vec<(u32, u32, f64)>,
}

/// `typed_ctmc_oracle` with default options.
pub fn typed_ctmc_oracle(
    p1: &ProviderParams,
    p2: &ProviderParams,
    cfg: &SharingConfig,
    buffer_cap: u32,
) -> Result<CtmcSolution> {
    typed_ctmc_oracle_with(
        p1,
        p2,
        cfg,
        CtmcOptions {
            buffer_cap,
            ..CtmcOptions::default()
        },
    )
}

/// Builds and solves the typed chain.
pub fn typed_ctmc_oracle_with(
    p1: &ProviderParams,
    p2: &ProviderParams,
    cfg: &SharingConfig,
    opts: CtmcOptions,
) -> Result<CtmcSolution> {
    let classes = ServerClasses::new(p1, p2, cfg)?;
    if classes.sizes().iter().any(|&s| s >= 16) || opts.buffer_cap > 40 {
        return Err(Error::StateSpace {
            got: usize::MAX,
            cap: opts.state_cap,
        });
    }
    let tail_bound = certify_tail(&classes, opts.buffer_cap);
    if tail_bound > opts.tail_tolerance {
        return Err(Error::Truncation(format!(
            "tail bound {tail_bound:.3e} exceeds {:.1e} at buffer {}",
            opts.tail_tolerance, opts.buffer_cap
        )));
    }
    let chain = build_chain(&classes, &opts)?;
    let (pi, sweeps) = solve_stationary(&chain)?;
    Ok(summarize(&chain, &pi, tail_bound, sweeps))
}

/// Largest geometric queue ratio over blocked occupancy levels, turned into
/// a bound on the stationary mass beyond the buffer.
fn certify_tail(classes: &ServerClasses, buffer: u32) -> f64 {
    let [l1, l2] = classes.lambda();
    let nu = classes.nu();
    let sizes = classes.sizes();
    let mut alpha_max: f64 = 0.0;
    for (rate, level) in [
        (l1, sizes[0] + sizes[2]),
        (l2, sizes[1] + sizes[2]),
        (l1 + l2, classes.total()),
    ] {
        if level > 0 {
            alpha_max = alpha_max.max(rate / (level as f64 * nu));
        }
    }
    alpha_max.powi(buffer as i32) / (1.0 - alpha_max)
}

fn build_chain(classes: &ServerClasses, opts: &CtmcOptions) -> Result<Chain> {
    let sizes = classes.sizes();
    let [l1, l2] = classes.lambda();
    let nu = classes.nu();
    let rates = match opts.policy {
        AssignmentPolicy::RateCondition => Some(solve_assignment_rates(classes)?),
        AssignmentPolicy::UniformIdle => None,
    };

    let start = pack([0, 0, 0], 0, 1);
    let mut index = HashMap::new();
    index.insert(start, 0u32);
    let mut states = vec![start];
    let mut transitions: Vec<(u32, u32, f64)> = Vec::new();
    let mut frontier = 0usize;
    while frontier < states.len() {
        if states.len() > opts.state_cap {
            return Err(Error::StateSpace {
                got: states.len(),
                cap: opts.state_cap,
            });
        }
        let s = states[frontier];
        let i = frontier as u32;
        frontier += 1;
        let (x, y, word) = unpack(s);
        let len = word_len(word);

        let mut add = |states: &mut Vec<u64>, ns: u64, rate: f64| {
            if rate <= 0.0 {
                return;
            }
            let next = states.len() as u32;
            let j = *index.entry(ns).or_insert_with(|| {
                states.push(ns);
                next
            });
            transitions.push((i, j, rate));
        };

        // arrivals
        for (t, lt) in [(Provider::P1, l1), (Provider::P2, l2)] {
            let ti = t.index();
            if classes.blocked(x, t) {
                if len < opts.buffer_cap {
                    add(&mut states, pack(x, y, word_push(word, ti == 1)), lt);
                }
                // else: dropped, covered by the tail certificate
                continue;
            }
            let ded_idle = (sizes[ti] - x[ti]) as f64;
            let shared_idle = (sizes[2] - x[2]) as f64;
            let p_ded = match (&rates, ded_idle > 0.0) {
                (_, false) => 0.0,
                // a job that cannot go to a shared server must take a
                // dedicated one; guard against round-off in the rate table
                (Some(_), true) if shared_idle == 0.0 => 1.0,
                (Some(table), true) => ded_idle * table.get(x)[ti] / lt,
                (None, true) => {
                    if shared_idle > 0.0 {
                        ded_idle / (ded_idle + shared_idle)
                    } else {
                        1.0
                    }
                }
            };
            if p_ded > 0.0 {
                let mut nx = x;
                nx[ti] += 1;
                add(&mut states, pack(nx, y, word), lt * p_ded);
            }
            if p_ded < 1.0 {
                let mut nx = x;
                nx[2] += 1;
                let ny = y + (ti == 0) as u32;
                add(&mut states, pack(nx, ny, word), lt * (1.0 - p_ded));
            }
        }

        // completions: a freed server immediately takes the first waiting
        // job it is eligible for, preserving FCFS order
        for class in 0..3 {
            let busy = match class {
                0 => x[0],
                1 => x[1],
                _ => x[2],
            };
            if busy == 0 {
                continue;
            }
            let splits: &[(f64, u32)] = match class {
                // shared servers split by the provider they are serving
                2 => &[(y as f64 * nu, 1), ((x[2] - y) as f64 * nu, 0)],
                _ => &[(busy as f64 * nu, 0)],
            };
            for &(rate, y_drop) in splits {
                if rate <= 0.0 {
                    continue;
                }
                match first_eligible(word, class) {
                    Some(pos) => {
                        let body = word & !(1u64 << len);
                        let taken_p2 = (body >> pos) & 1 == 1;
                        let ny = if class == 2 {
                            y - y_drop + (!taken_p2) as u32
                        } else {
                            y
                        };
                        add(&mut states, pack(x, ny, word_remove(word, pos)), rate);
                    }
                    None => {
                        let mut nx = x;
                        nx[class] -= 1;
                        add(&mut states, pack(nx, y - y_drop, word), rate);
                    }
                }
            }
        }
    }
    Ok(Chain {
        classes: *classes,
        states,
        transitions,
    })
}

/// Gauss-Seidel on the global balance equations.
fn solve_stationary(chain: &Chain) -> Result<(Vec<f64>, usize)> {
    let n = chain.states.len();
    let mut out_rate = vec![0.0f64; n];
    let mut incoming_count = vec![0u32; n];
    for &(from, to, rate) in &chain.transitions {
        out_rate[from as usize] += rate;
        incoming_count[to as usize] += 1;
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + incoming_count[i] as usize;
    }
    let mut incoming = vec![(0u32, 0.0f64); chain.transitions.len()];
    let mut cursor = offsets.clone();
    for &(from, to, rate) in &chain.transitions {
        incoming[cursor[to as usize]] = (from, rate);
        cursor[to as usize] += 1;
    }

    let mut pi = vec![1.0 / n as f64; n];
    let max_sweeps = 20_000;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let inflow: f64 = incoming[offsets[i]..offsets[i + 1]]
                .iter()
                .map(|&(j, r)| pi[j as usize] * r)
                .sum();
            let new = inflow / out_rate[i];
            delta = delta.max((new - pi[i]).abs());
            pi[i] = new;
        }
        let total: f64 = pi.iter().sum();
        for v in &mut pi {
            *v /= total;
        }
        if delta < 1e-14 || sweeps >= max_sweeps {
            break;
        }
    }

    // residual check on the balance equations
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let inflow: f64 = incoming[offsets[i]..offsets[i + 1]]
            .iter()
            .map(|&(j, r)| pi[j as usize] * r)
            .sum();
        residual = residual.max((inflow - pi[i] * out_rate[i]).abs());
    }
    if residual > 1e-10 {
        return Err(Error::Truncation(format!(
            "stationary solve stalled: residual {residual:.3e} after {sweeps} sweeps"
        )));
    }
    Ok((pi, sweeps))
}

fn summarize(chain: &Chain, pi: &[f64], tail_bound: f64, sweeps: usize) -> CtmcSolution {
    let classes = &chain.classes;
    let [l1, l2] = classes.lambda();
    let mut waiting = [0.0f64; 2];
    let mut mean_jobs = [0.0f64; 2];
    let mut occupancy = vec![0.0f64; classes.state_count()];
    for (s, &p) in chain.states.iter().zip(pi) {
        let (x, y, word) = unpack(*s);
        occupancy[classes.index(x)] += p;
        let len = word_len(word);
        let body = word & !(1u64 << len);
        let q2 = body.count_ones();
        let q1 = len - q2;
        if classes.blocked(x, Provider::P1) {
            waiting[0] += p;
        }
        if classes.blocked(x, Provider::P2) {
            waiting[1] += p;
        }
        mean_jobs[0] += p * (x[0] + y + q1) as f64;
        mean_jobs[1] += p * (x[1] + (x[2] - y) + q2) as f64;
    }
    CtmcSolution {
        waiting,
        response: [mean_jobs[0] / l1, mean_jobs[1] / l2],
        occupancy,
        states: chain.states.len(),
        tail_bound,
        sweeps,
    }
}

/// Total-variation distance between two occupancy distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cos::{stationary_normalization, waiting_probabilities};
    use crate::erlang::erlang_c;
    use approx::assert_relative_eq;

    fn provider(lambda: f64, n: u32) -> ProviderParams {
        ProviderParams::new(lambda, 1.0, n).unwrap()
    }

    #[test]
    fn word_codec_roundtrip() {
        let mut w = 1u64;
        for p2 in [false, true, true, false, true] {
            w = word_push(w, p2);
        }
        assert_eq!(word_len(w), 5);
        // word is [1,2,2,1,2] head-first
        assert_eq!(first_eligible(w, 0), Some(0));
        assert_eq!(first_eligible(w, 1), Some(1));
        assert_eq!(first_eligible(w, 2), Some(0));
        let w = word_remove(w, 1); // drop the first provider-2 job
        assert_eq!(word_len(w), 4);
        assert_eq!(first_eligible(w, 1), Some(1));
        let empty = 1u64;
        assert_eq!(first_eligible(empty, 2), None);
    }

    #[test]
    fn decoupled_matches_erlang() {
        let sol = typed_ctmc_oracle(
            &provider(0.3, 2),
            &provider(0.2, 1),
            &SharingConfig::none(),
            12,
        )
        .unwrap();
        assert!((sol.waiting[0] - erlang_c(0.3, 2).unwrap()).abs() < 1e-8);
        assert!((sol.waiting[1] - erlang_c(0.2, 1).unwrap()).abs() < 1e-8);
        // M/M/1 mean response for provider 2
        assert!((sol.response[1] - 1.0 / (1.0 - 0.2)).abs() < 1e-6);
    }

    #[test]
    fn full_pooling_matches_aggregated_erlang() {
        let p1 = provider(0.15, 1);
        let p2 = provider(0.25, 1);
        let cfg = SharingConfig::full(&p1, &p2);
        let sol = typed_ctmc_oracle(&p1, &p2, &cfg, 12).unwrap();
        let agg = erlang_c(0.4, 2).unwrap();
        assert!((sol.waiting[0] - agg).abs() < 1e-8);
        assert!((sol.waiting[1] - agg).abs() < 1e-8);
        // both providers see the same M/M/2 response time
        let mm2 = 1.0 + agg / (2.0 - 0.4);
        assert!((sol.response[0] - mm2).abs() < 1e-6);
        assert!((sol.response[1] - mm2).abs() < 1e-6);
    }

    #[test]
    fn partial_config_matches_product_form() {
        for (n1, n2, k1, k2, l1, l2, buffer) in [
            (1u32, 1u32, 1.0, 0.0, 0.15, 0.2, 12),
            (1, 1, 0.0, 1.0, 0.05, 0.25, 14),
            (2, 2, 1.0, 1.0, 0.3, 0.3, 12),
        ] {
            let p1 = provider(l1, n1);
            let p2 = provider(l2, n2);
            let cfg = SharingConfig { k1, k2 };
            let sol = typed_ctmc_oracle(&p1, &p2, &cfg, buffer).unwrap();
            let pf = waiting_probabilities(&p1, &p2, &cfg).unwrap();
            assert!(
                (sol.waiting[0] - pf[0]).abs() + (sol.waiting[1] - pf[1]).abs() < 1e-8,
                "C mismatch at N=({n1},{n2}) k=({k1},{k2}): {:?} vs {pf:?}",
                sol.waiting
            );
        }
    }

    #[test]
    fn occupancy_marginal_matches_product_form() {
        let p1 = provider(0.15, 1);
        let p2 = provider(0.2, 1);
        let cfg = SharingConfig { k1: 1.0, k2: 0.0 };
        let classes = ServerClasses::new(&p1, &p2, &cfg).unwrap();
        let rates = solve_assignment_rates(&classes).unwrap();
        let st = stationary_normalization(&classes, &rates).unwrap();
        let sol = typed_ctmc_oracle(&p1, &p2, &cfg, 12).unwrap();
        assert!(total_variation(&sol.occupancy, &st.occupancy) < 1e-8);
    }

    #[test]
    fn uniform_policy_differs_from_product_form() {
        let p1 = provider(0.3, 1);
        let p2 = provider(0.4, 1);
        let cfg = SharingConfig { k1: 1.0, k2: 0.0 };
        let sol = typed_ctmc_oracle_with(
            &p1,
            &p2,
            &cfg,
            CtmcOptions {
                buffer_cap: 14,
                policy: AssignmentPolicy::UniformIdle,
                tail_tolerance: 1e-6,
                ..CtmcOptions::default()
            },
        )
        .unwrap();
        let pf = waiting_probabilities(&p1, &p2, &cfg).unwrap();
        assert!(
            (sol.waiting[0] - pf[0]).abs() > 1e-3,
            "uniform assignment unexpectedly reproduced the product form"
        );
    }

    #[test]
    fn respects_service_rate_scaling() {
        // nu != 1: scale time; waiting probabilities are invariant
        let cfg = SharingConfig { k1: 1.0, k2: 0.0 };
        let a = typed_ctmc_oracle(&provider(0.15, 1), &provider(0.2, 1), &cfg, 12).unwrap();
        let p1 = ProviderParams::new(0.3, 2.0, 1).unwrap();
        let p2 = ProviderParams::new(0.4, 2.0, 1).unwrap();
        let b = typed_ctmc_oracle(&p1, &p2, &cfg, 12).unwrap();
        assert!((a.waiting[0] - b.waiting[0]).abs() < 1e-9);
        assert!((a.waiting[1] - b.waiting[1]).abs() < 1e-9);
        assert_relative_eq!(a.response[0], 2.0 * b.response[0], max_relative = 1e-6);
    }

    #[test]
    fn truncation_certificate_enforced() {
        let p1 = provider(0.9, 1);
        let p2 = provider(0.9, 1);
        let cfg = SharingConfig { k1: 1.0, k2: 1.0 };
        assert!(matches!(
            typed_ctmc_oracle(&p1, &p2, &cfg, 5),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn state_cap_enforced() {
        let p1 = provider(0.3, 1);
        let p2 = provider(0.4, 1);
        let cfg = SharingConfig { k1: 1.0, k2: 1.0 };
        assert!(matches!(
            typed_ctmc_oracle_with(
                &p1,
                &p2,
                &cfg,
                CtmcOptions {
                    buffer_cap: 20,
                    state_cap: 10,
                    ..CtmcOptions::default()
                }
            ),
            Err(Error::StateSpace { .. })
        ));
    }
}
