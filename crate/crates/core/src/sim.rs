//! Discrete-event simulation of the physical replication systems.
//!
//! This is a formula-independent oracle: servers, FCFS queues, replica
//! fan-out, and cancellations are simulated literally. Cancel-on-complete
//! replicates a job to every eligible server with independent exponential
//! sizes and keeps the first replica to finish; cancel-on-start lets exactly
//! one copy ever enter service, which reduces to a central FCFS queue.
//!
//! Arrival assignment under cancel-on-start follows the analytic
//! assignment-rate table. Choosing uniformly among idle eligible servers
//! looks harmless but measurably changes the waiting probabilities, so the
//! oracle must realize the same assignment law as the analysis.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cos::{solve_assignment_rates, AssignmentRateTable, ServerClasses};
use crate::erlang::ProviderParams;
use crate::{Error, Result, SharingConfig};

/// Replication policy simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    CancelOnComplete,
    CancelOnStart,
}

#[derive(Debug, Clone)]
pub struct SimScenario {
    pub p1: ProviderParams,
    pub p2: ProviderParams,
    pub cfg: SharingConfig,
    pub policy: Policy,
    /// Total number of arrivals generated.
    pub horizon: u64,
    /// Arrivals discarded from the statistics.
    pub warmup: u64,
    pub seed: u64,
    pub replications: u32,
}

impl SimScenario {
    fn validate(&self) -> Result<()> {
        if self.horizon <= self.warmup {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must exceed warmup {}",
                self.horizon, self.warmup
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be positive".into()));
        }
        self.cfg.validate(self.p1.servers(), self.p2.servers())?;
        Ok(())
    }
}

/// Point estimate with standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// 95% confidence interval (normal approximation).
    pub fn ci95(&self) -> (f64, f64) {
        (
            self.value - 1.96 * self.stderr,
            self.value + 1.96 * self.stderr,
        )
    }

    pub fn contains(&self, target: f64, sigmas: f64) -> bool {
        (target - self.value).abs() <= sigmas * self.stderr
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    /// Waiting probability estimates per provider.
    pub wait: [Estimate; 2],
    /// Mean response time estimates per provider.
    pub response: [Estimate; 2],
    /// Measured jobs per provider.
    pub jobs: [u64; 2],
}

const BATCHES: usize = 30;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn child_seed(seed: u64, replication: u32) -> u64 {
    splitmix64(seed ^ splitmix64(replication as u64))
}

/// Runs the scenario and aggregates across replications.
pub fn simulate(scn: &SimScenario) -> Result<SimResult> {
    scn.validate()?;
    let corners = vec![(scn.cfg.as_integer()?, 1.0)];
    run_replications(scn, &corners, 0)
}

/// Time-shares between the four integer corner configurations adjacent to a
/// real `(k1, k2)`, with the long-run fractions of the bilinear mixture.
/// `switch_cycles` counts how many times the full corner rotation is played
/// over the horizon. Cancel-on-start only for fractional inputs.
pub fn simulate_mixed(
    scn: &SimScenario,
    k1: f64,
    k2: f64,
    switch_cycles: u32,
) -> Result<SimResult> {
    let cfg = SharingConfig::new(k1, k2, &scn.p1, &scn.p2)?;
    if cfg.is_integer() {
        let mut integral = scn.clone();
        integral.cfg = cfg;
        return simulate(&integral);
    }
    if scn.policy != Policy::CancelOnStart {
        return Err(Error::Unsupported(
            "fractional configurations are defined for cancel-on-start only".into(),
        ));
    }
    if switch_cycles == 0 {
        return Err(Error::InvalidParameter("switch_cycles must be positive".into()));
    }
    let (lo1, f1) = (k1.floor() as u32, k1.fract());
    let (lo2, f2) = (k2.floor() as u32, k2.fract());
    let mut corners = Vec::new();
    for (i1, w1) in [(lo1, 1.0 - f1), (lo1 + 1, f1)] {
        for (i2, w2) in [(lo2, 1.0 - f2), (lo2 + 1, f2)] {
            if w1 * w2 > 0.0 {
                corners.push(((i1, i2), w1 * w2));
            }
        }
    }
    let mut scn = scn.clone();
    scn.cfg = cfg;
    run_replications(&scn, &corners, switch_cycles)
}

fn run_replications(
    scn: &SimScenario,
    corners: &[((u32, u32), f64)],
    switch_cycles: u32,
) -> Result<SimResult> {
    scn.validate()?;
    let mut runs = Vec::with_capacity(scn.replications as usize);
    for rep in 0..scn.replications {
        let seed = child_seed(scn.seed, rep);
        let run = match scn.policy {
            Policy::CancelOnStart => CosEngine::new(scn, corners, switch_cycles, seed)?.run(),
            Policy::CancelOnComplete => CocEngine::new(scn, seed)?.run(),
        }?;
        runs.push(run);
    }
    Ok(combine(&runs))
}

/// Raw tallies of one replication, split into batches by arrival order.
struct RunStats {
    wait_batches: [[f64; BATCHES]; 2],
    resp_batches: [[f64; BATCHES]; 2],
    counts: [u64; 2],
}

impl RunStats {
    fn point(&self, table: &[[f64; BATCHES]; 2], i: usize) -> (f64, f64) {
        let b = &table[i];
        let mean = b.iter().sum::<f64>() / BATCHES as f64;
        let var = b.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (BATCHES as f64 - 1.0);
        (mean, (var / BATCHES as f64).sqrt())
    }
}

fn combine(runs: &[RunStats]) -> SimResult {
    let n = runs.len();
    let mut wait = [Estimate { value: 0.0, stderr: 0.0 }; 2];
    let mut response = wait;
    let mut jobs = [0u64; 2];
    for i in 0..2 {
        jobs[i] = runs.iter().map(|r| r.counts[i]).sum();
        if n == 1 {
            let (w, we) = runs[0].point(&runs[0].wait_batches, i);
            let (r, re) = runs[0].point(&runs[0].resp_batches, i);
            wait[i] = Estimate { value: w, stderr: we };
            response[i] = Estimate { value: r, stderr: re };
        } else {
            for (dst, table) in [(&mut wait, 0), (&mut response, 1)] {
                let vals: Vec<f64> = runs
                    .iter()
                    .map(|r| {
                        let t = if table == 0 { &r.wait_batches } else { &r.resp_batches };
                        r.point(t, i).0
                    })
                    .collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (n as f64 - 1.0);
                dst[i] = Estimate {
                    value: mean,
                    stderr: (var / n as f64).sqrt(),
                };
            }
        }
    }
    SimResult { wait, response, jobs }
}

/// Accumulates per-batch wait fractions and response means.
struct Tally {
    warmup: u64,
    measured: u64,
    wait_count: [[u64; BATCHES]; 2],
    job_count: [[u64; BATCHES]; 2],
    resp_sum: [[f64; BATCHES]; 2],
}

impl Tally {
    fn new(warmup: u64, horizon: u64) -> Self {
        Tally {
            warmup,
            measured: horizon - warmup,
            wait_count: [[0; BATCHES]; 2],
            job_count: [[0; BATCHES]; 2],
            resp_sum: [[0.0; BATCHES]; 2],
        }
    }

    fn batch(&self, arrival_index: u64) -> Option<usize> {
        if arrival_index < self.warmup {
            return None;
        }
        Some((((arrival_index - self.warmup) * BATCHES as u64) / self.measured) as usize)
    }

    fn record_arrival(&mut self, provider: usize, batch: usize, waited: bool) {
        self.job_count[provider][batch] += 1;
        self.wait_count[provider][batch] += waited as u64;
    }

    fn record_response(&mut self, provider: usize, batch: usize, response: f64) {
        debug_assert!(response >= 0.0);
        self.resp_sum[provider][batch] += response;
    }

    fn finish(self) -> Result<RunStats> {
        let mut stats = RunStats {
            wait_batches: [[0.0; BATCHES]; 2],
            resp_batches: [[0.0; BATCHES]; 2],
            counts: [0; 2],
        };
        for i in 0..2 {
            for b in 0..BATCHES {
                let n = self.job_count[i][b];
                if n == 0 {
                    return Err(Error::InvalidParameter(
                        "horizon too short: empty statistics batch".into(),
                    ));
                }
                stats.wait_batches[i][b] = self.wait_count[i][b] as f64 / n as f64;
                stats.resp_batches[i][b] = self.resp_sum[i][b] / n as f64;
                stats.counts[i] += n;
            }
        }
        Ok(stats)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Arrival(usize),
    Completion { server: u32, epoch: u32 },
    Switch,
}

/// Deterministic event queue: ties broken by insertion sequence.
struct EventQueue {
    heap: BinaryHeap<Reverse<(u64, u64, Event)>>,
    seq: u64,
}

impl EventQueue {
    fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            seq: 0,
        }
    }

    fn push(&mut self, time: f64, ev: Event) {
        debug_assert!(time >= 0.0);
        self.seq += 1;
        self.heap.push(Reverse((time.to_bits(), self.seq, ev)));
    }

    fn pop(&mut self) -> Option<(f64, Event)> {
        self.heap
            .pop()
            .map(|Reverse((bits, _, ev))| (f64::from_bits(bits), ev))
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen::<f64>();
    -(1.0 - u).ln() / rate
}

// ---------------------------------------------------------------------------
// cancel-on-start

struct CosQueuedJob {
    provider: usize,
    arrival_index: u64,
    arrival_time: f64,
}

struct CosEngine {
    lambda: [f64; 2],
    nu: f64,
    n1: u32,
    /// Corner rotation: (table, weight).
    corners: Vec<(AssignmentRateTable, f64)>,
    active: usize,
    switch_times: VecDeque<(f64, usize)>,
    /// Per-server provider being served, if busy; class mapping depends on
    /// the active corner.
    serving: Vec<Option<usize>>,
    epochs: Vec<u32>,
    queue: VecDeque<CosQueuedJob>,
    queued_by_type: [u64; 2],
    rng: ChaCha8Rng,
    events: EventQueue,
    tally: Tally,
    horizon: u64,
    arrivals_seen: u64,
    in_flight: u64,
    /// (arrival_index batch, arrival time) for jobs in service, per server.
    service_meta: Vec<(Option<usize>, f64)>,
}

impl CosEngine {
    fn new(
        scn: &SimScenario,
        corners: &[((u32, u32), f64)],
        switch_cycles: u32,
        seed: u64,
    ) -> Result<Self> {
        let mut tables = Vec::new();
        for &((k1, k2), weight) in corners {
            let cfg = SharingConfig {
                k1: k1 as f64,
                k2: k2 as f64,
            };
            let classes = ServerClasses::new(&scn.p1, &scn.p2, &cfg)?;
            tables.push((solve_assignment_rates(&classes)?, weight));
        }
        let total_servers = (scn.p1.servers() + scn.p2.servers()) as usize;
        let mut engine = CosEngine {
            lambda: [scn.p1.lambda(), scn.p2.lambda()],
            nu: scn.p1.nu(),
            n1: scn.p1.servers(),
            corners: tables,
            active: 0,
            switch_times: VecDeque::new(),
            serving: vec![None; total_servers],
            epochs: vec![0; total_servers],
            queue: VecDeque::new(),
            queued_by_type: [0; 2],
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: EventQueue::new(),
            tally: Tally::new(scn.warmup, scn.horizon),
            horizon: scn.horizon,
            arrivals_seen: 0,
            in_flight: 0,
            service_meta: vec![(None, 0.0); total_servers],
        };
        if engine.corners.len() > 1 {
            let expected_span = scn.horizon as f64 / (engine.lambda[0] + engine.lambda[1]);
            let cycle = expected_span / switch_cycles as f64;
            let mut t = 0.0;
            for c in 0..switch_cycles {
                let _ = c;
                for idx in 0..engine.corners.len() {
                    if idx > 0 || t > 0.0 {
                        engine.switch_times.push_back((t, idx));
                    }
                    t += cycle * engine.corners[idx].1;
                }
            }
        }
        Ok(engine)
    }

    /// Class of a physical server under the active corner: providers own
    /// contiguous ranges, contributed servers sit at the front of each.
    fn class_of(&self, server: usize) -> usize {
        let sizes = self.corners[self.active].0.classes().sizes();
        let k1 = self.n1 - sizes[0];
        let k2 = sizes[2] - k1;
        if (server as u32) < self.n1 {
            if (server as u32) < k1 {
                2
            } else {
                0
            }
        } else if server as u32 - self.n1 < k2 {
            2
        } else {
            1
        }
    }

    fn occupancy(&self) -> [u32; 3] {
        let mut x = [0u32; 3];
        for (s, serving) in self.serving.iter().enumerate() {
            if serving.is_some() {
                x[self.class_of(s)] += 1;
            }
        }
        x
    }

    fn idle_server_of_class(&self, class: usize) -> Option<usize> {
        (0..self.serving.len())
            .find(|&s| self.serving[s].is_none() && self.class_of(s) == class)
    }

    fn start_service(&mut self, server: usize, provider: usize, batch: Option<usize>, arrival: f64, now: f64) {
        self.serving[server] = Some(provider);
        self.service_meta[server] = (batch, arrival);
        let size = exp_sample(&mut self.rng, self.nu);
        self.epochs[server] += 1;
        self.events.push(
            now + size,
            Event::Completion {
                server: server as u32,
                epoch: self.epochs[server],
            },
        );
    }

    fn assert_work_conserving(&self) {
        // a queued job of type t implies every t-eligible server is busy
        let x = self.occupancy();
        let sizes = self.corners[self.active].0.classes().sizes();
        for t in 0..2 {
            if self.queued_by_type[t] > 0 {
                assert!(
                    x[t] == sizes[t] && x[2] == sizes[2],
                    "idle eligible server with type-{} job queued",
                    t + 1
                );
            }
        }
    }

    fn run(mut self) -> Result<RunStats> {
        self.events.push(
            exp_sample(&mut self.rng, self.lambda[0]),
            Event::Arrival(0),
        );
        self.events.push(
            exp_sample(&mut self.rng, self.lambda[1]),
            Event::Arrival(1),
        );
        if let Some(&(t, _)) = self.switch_times.front() {
            self.events.push(t, Event::Switch);
        }
        while let Some((now, ev)) = self.events.pop() {
            match ev {
                Event::Arrival(provider) => self.on_arrival(now, provider),
                Event::Completion { server, epoch } => {
                    if self.epochs[server as usize] == epoch {
                        self.on_completion(now, server as usize);
                    }
                }
                Event::Switch => self.on_switch(now),
            }
            if self.arrivals_seen >= self.horizon && self.in_flight == 0 {
                break;
            }
        }
        self.tally.finish()
    }

    fn on_arrival(&mut self, now: f64, provider: usize) {
        if self.arrivals_seen >= self.horizon {
            return;
        }
        let index = self.arrivals_seen;
        self.arrivals_seen += 1;
        if self.arrivals_seen < self.horizon {
            self.events.push(
                now + exp_sample(&mut self.rng, self.lambda[provider]),
                Event::Arrival(provider),
            );
        } else {
            // keep both streams alive until the horizon is reached
        }
        let batch = self.tally.batch(index);
        let table = &self.corners[self.active].0;
        let classes = *table.classes();
        let sizes = classes.sizes();
        let x = self.occupancy();
        let blocked = x[provider] == sizes[provider] && x[2] == sizes[2];
        if let Some(b) = batch {
            self.tally.record_arrival(provider, b, blocked);
        }
        self.in_flight += 1;
        if blocked {
            self.queue.push_back(CosQueuedJob {
                provider,
                arrival_index: index,
                arrival_time: now,
            });
            self.queued_by_type[provider] += 1;
            self.assert_work_conserving();
            return;
        }
        let ded_idle = (sizes[provider] - x[provider]) as f64;
        let p_ded = if ded_idle > 0.0 {
            ded_idle * table.get(x)[provider] / self.lambda[provider]
        } else {
            0.0
        };
        let class = if ded_idle > 0.0 && self.rng.gen::<f64>() < p_ded {
            provider
        } else {
            2
        };
        let server = self
            .idle_server_of_class(class)
            .expect("assignment chose a class with no idle server");
        self.start_service(server, provider, batch, now, now);
    }

    fn on_completion(&mut self, now: f64, server: usize) {
        let provider = self.serving[server].expect("completion on idle server");
        let (batch, arrival) = self.service_meta[server];
        if let Some(b) = batch {
            self.tally.record_response(provider, b, now - arrival);
        }
        self.serving[server] = None;
        self.in_flight -= 1;
        self.take_from_queue(server, now);
        self.assert_work_conserving();
    }

    fn take_from_queue(&mut self, server: usize, now: f64) {
        let class = self.class_of(server);
        let pos = self.queue.iter().position(|j| match class {
            2 => true,
            c => j.provider == c,
        });
        if let Some(pos) = pos {
            let job = self.queue.remove(pos).unwrap();
            self.queued_by_type[job.provider] -= 1;
            let batch = self.tally.batch(job.arrival_index);
            self.start_service(server, job.provider, batch, job.arrival_time, now);
        }
    }

    fn on_switch(&mut self, now: f64) {
        let (_, idx) = self.switch_times.pop_front().unwrap();
        self.active = idx;
        if let Some(&(t, _)) = self.switch_times.front() {
            self.events.push(t.max(now), Event::Switch);
        }
        // reclassification may open servers to waiting jobs
        for server in 0..self.serving.len() {
            if self.serving[server].is_none() {
                self.take_from_queue(server, now);
            }
        }
        self.assert_work_conserving();
    }
}

// ---------------------------------------------------------------------------
// cancel-on-complete

struct CocJob {
    provider: usize,
    arrival_time: f64,
    batch: Option<usize>,
    done: bool,
    /// Replicas still referenced by queues or servers.
    refs: u32,
    /// Servers currently serving a replica of this job.
    serving: Vec<u32>,
}

struct CocEngine {
    lambda: [f64; 2],
    nu: [f64; 2],
    n1: u32,
    k1: u32,
    k2: u32,
    total: u32,
    jobs: Vec<CocJob>,
    free_slots: Vec<u32>,
    server_job: Vec<Option<u32>>,
    queues: Vec<VecDeque<u32>>,
    epochs: Vec<u32>,
    rng: ChaCha8Rng,
    events: EventQueue,
    tally: Tally,
    horizon: u64,
    arrivals_seen: u64,
    live_jobs: u64,
}

impl CocEngine {
    fn new(scn: &SimScenario, seed: u64) -> Result<Self> {
        let (k1, k2) = scn.cfg.as_integer()?;
        let n1 = scn.p1.servers();
        let n2 = scn.p2.servers();
        let rho1 = scn.p1.load();
        let rho2 = scn.p2.load();
        if rho1 >= (n1 + k2) as f64
            || rho2 >= (n2 + k1) as f64
            || rho1 + rho2 >= (n1 + n2) as f64
        {
            return Err(Error::Unstable(format!(
                "loads ({rho1}, {rho2}) unstable under configuration ({k1}, {k2})"
            )));
        }
        let total = n1 + n2;
        Ok(CocEngine {
            lambda: [scn.p1.lambda(), scn.p2.lambda()],
            nu: [scn.p1.nu(), scn.p2.nu()],
            n1,
            k1,
            k2,
            total,
            jobs: Vec::new(),
            free_slots: Vec::new(),
            server_job: vec![None; total as usize],
            queues: vec![VecDeque::new(); total as usize],
            epochs: vec![0; total as usize],
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: EventQueue::new(),
            tally: Tally::new(scn.warmup, scn.horizon),
            horizon: scn.horizon,
            arrivals_seen: 0,
            live_jobs: 0,
        })
    }

    /// Servers a provider's jobs replicate to: all of its own plus the
    /// partner's contributed ones (which sit at the front of the partner's
    /// range).
    fn eligible_servers(&self, provider: usize) -> impl Iterator<Item = u32> + '_ {
        let n1 = self.n1;
        let (own, shared) = if provider == 0 {
            (0..n1, n1..n1 + self.k2)
        } else {
            (n1..self.total, 0..self.k1)
        };
        own.chain(shared)
    }

    fn start_service(&mut self, server: u32, job_id: u32, now: f64) {
        let provider = self.jobs[job_id as usize].provider;
        self.server_job[server as usize] = Some(job_id);
        self.jobs[job_id as usize].serving.push(server);
        let size = exp_sample(&mut self.rng, self.nu[provider]);
        self.epochs[server as usize] += 1;
        self.events.push(
            now + size,
            Event::Completion {
                server,
                epoch: self.epochs[server as usize],
            },
        );
    }

    fn release_ref(&mut self, job_id: u32) {
        let job = &mut self.jobs[job_id as usize];
        job.refs -= 1;
        if job.refs == 0 {
            debug_assert!(job.done);
            self.free_slots.push(job_id);
        }
    }

    fn next_from_queue(&mut self, server: u32, now: f64) {
        self.server_job[server as usize] = None;
        // invalidate any pending completion for a cancelled replica
        self.epochs[server as usize] += 1;
        while let Some(job_id) = self.queues[server as usize].pop_front() {
            if self.jobs[job_id as usize].done {
                self.release_ref(job_id);
                continue;
            }
            self.start_service(server, job_id, now);
            return;
        }
    }

    fn run(mut self) -> Result<RunStats> {
        self.events.push(
            exp_sample(&mut self.rng, self.lambda[0]),
            Event::Arrival(0),
        );
        self.events.push(
            exp_sample(&mut self.rng, self.lambda[1]),
            Event::Arrival(1),
        );
        while let Some((now, ev)) = self.events.pop() {
            match ev {
                Event::Arrival(provider) => self.on_arrival(now, provider),
                Event::Completion { server, epoch } => {
                    if self.epochs[server as usize] == epoch {
                        self.on_completion(now, server);
                    }
                }
                Event::Switch => unreachable!(),
            }
            if self.arrivals_seen >= self.horizon && self.live_jobs == 0 {
                break;
            }
        }
        self.tally.finish()
    }

    fn on_arrival(&mut self, now: f64, provider: usize) {
        if self.arrivals_seen >= self.horizon {
            return;
        }
        let index = self.arrivals_seen;
        self.arrivals_seen += 1;
        if self.arrivals_seen < self.horizon {
            self.events.push(
                now + exp_sample(&mut self.rng, self.lambda[provider]),
                Event::Arrival(provider),
            );
        }
        let batch = self.tally.batch(index);
        let eligible: Vec<u32> = self.eligible_servers(provider).collect();
        let waited = eligible
            .iter()
            .all(|&s| self.server_job[s as usize].is_some());
        if let Some(b) = batch {
            self.tally.record_arrival(provider, b, waited);
        }
        let job_id = match self.free_slots.pop() {
            Some(id) => id,
            None => {
                self.jobs.push(CocJob {
                    provider,
                    arrival_time: now,
                    batch,
                    done: false,
                    refs: 0,
                    serving: Vec::with_capacity(4),
                });
                (self.jobs.len() - 1) as u32
            }
        };
        {
            let job = &mut self.jobs[job_id as usize];
            job.provider = provider;
            job.arrival_time = now;
            job.batch = batch;
            job.done = false;
            job.refs = eligible.len() as u32;
            job.serving.clear();
        }
        self.live_jobs += 1;
        for s in eligible {
            if self.server_job[s as usize].is_none() {
                self.start_service(s, job_id, now);
            } else {
                self.queues[s as usize].push_back(job_id);
            }
        }
    }

    fn on_completion(&mut self, now: f64, server: u32) {
        let job_id = self.server_job[server as usize].expect("completion on idle server");
        let (provider, batch, arrival) = {
            let job = &mut self.jobs[job_id as usize];
            debug_assert!(!job.done);
            job.done = true;
            (job.provider, job.batch, job.arrival_time)
        };
        let response = now - arrival;
        assert!(response >= 0.0, "response time went negative");
        if let Some(b) = batch {
            self.tally.record_response(provider, b, response);
        }
        self.live_jobs -= 1;
        // cancel replicas still in service elsewhere
        let serving = std::mem::take(&mut self.jobs[job_id as usize].serving);
        for s in serving {
            self.release_ref(job_id);
            if s != server {
                self.next_from_queue(s, now);
            }
        }
        self.next_from_queue(server, now);
    }
}
