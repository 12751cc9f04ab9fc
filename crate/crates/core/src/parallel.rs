//! Master/worker orchestration.
//!
//! Candidate generation is scattered over contiguous feature slices and
//! gathered back in worker order, so the result never depends on the worker
//! count. Optimization runs one island per worker; every `exchange_interval`
//! generations the islands meet at a synchronous rendezvous where the master
//! picks the global best chromosome and broadcasts it. The master only
//! coordinates and never evolves a population of its own.

use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{feature_candidates, CandidateError, CandidateSet, Feature, LayerConfig, Problem};
use crate::optimizer::{Chromosome, Optimizer, OptimizerConfig, OptimizerError, RunTrace};
use crate::quality::FitnessTable;

pub const DEFAULT_EXCHANGE_INTERVAL: usize = 500;
pub const DEFAULT_EXCHANGE_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParallelError {
    #[error("worker count must be at least 1")]
    InvalidWorkerCount,
    #[error("exchange interval must be at least 1")]
    InvalidExchangeInterval,
    #[error("worker {worker} failed: {reason}")]
    WorkerFailure { worker: u16, reason: String },
    #[error("worker {worker} missed the rendezvous at generation {generation}")]
    ExchangeTimeout { worker: u16, generation: u32 },
    #[error(transparent)]
    Candidate(#[from] CandidateError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerPlan {
    pub worker_count: usize,
    pub slices: Vec<Range<usize>>,
    pub seeds: Vec<u64>,
    pub exchange_interval: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker 0 keeps `base`, so a one-worker plan reproduces a plain run.
pub fn worker_seeds(base: u64, workers: usize) -> Vec<u64> {
    let mut seeds: Vec<u64> = Vec::with_capacity(workers);
    let mut state = base;
    for w in 0..workers {
        let mut s = if w == 0 { base } else { splitmix64(state) };
        while seeds.contains(&s) {
            state = state.wrapping_add(1);
            s = splitmix64(state);
        }
        state = s;
        seeds.push(s);
    }
    seeds
}

impl WorkerPlan {
    pub fn new(n_features: usize, workers: usize, seed: u64, exchange_interval: usize) -> Result<Self, ParallelError> {
        if workers == 0 {
            return Err(ParallelError::InvalidWorkerCount);
        }
        if exchange_interval == 0 {
            return Err(ParallelError::InvalidExchangeInterval);
        }
        let (base, extra) = (n_features / workers, n_features % workers);
        let mut slices = Vec::with_capacity(workers);
        let mut start = 0;
        for w in 0..workers {
            let len = base + usize::from(w < extra);
            slices.push(start..start + len);
            start += len;
        }
        Ok(WorkerPlan { worker_count: workers, slices, seeds: worker_seeds(seed, workers), exchange_interval })
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.len()).collect()
    }
}

/// Balanced contiguous split with seed 0 and the default exchange interval.
pub fn partition_features(n_features: usize, workers: usize) -> Result<WorkerPlan, ParallelError> {
    WorkerPlan::new(n_features, workers, 0, DEFAULT_EXCHANGE_INTERVAL)
}

/// Per-worker task durations in seconds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskTiming {
    pub tasks: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionTimes {
    pub per_worker: Vec<f64>,
    pub makespan: f64,
}

pub fn completion_time(timing: &TaskTiming) -> CompletionTimes {
    let per_worker: Vec<f64> = timing.tasks.iter().map(|t| t.iter().sum()).collect();
    let makespan = per_worker.iter().copied().fold(0.0, f64::max);
    CompletionTimes { per_worker, makespan }
}

fn panic_reason(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_string())
}

#[derive(Debug, Clone)]
pub struct Gathered {
    pub problem: Problem,
    pub timing: TaskTiming,
}

type SliceResult = Result<(Vec<CandidateSet>, Vec<f64>), CandidateError>;

/// Generates candidate sets for each slice on its own worker, gathers them
/// in slice order and applies the shortcut rule on the master.
pub fn scatter_generate_gather(
    features: Vec<Feature>,
    layers: LayerConfig,
    plan: &WorkerPlan,
) -> Result<Gathered, ParallelError> {
    layers.validate()?;
    let results: Vec<Result<SliceResult, ParallelError>> = thread::scope(|scope| {
        let handles: Vec<_> = plan
            .slices
            .iter()
            .map(|range| {
                let slice = &features[range.clone()];
                let layers = &layers;
                scope.spawn(move || -> SliceResult {
                    let mut sets = Vec::with_capacity(slice.len());
                    let mut times = Vec::with_capacity(slice.len());
                    for f in slice {
                        let t0 = Instant::now();
                        sets.push(feature_candidates(f, layers)?);
                        times.push(t0.elapsed().as_secs_f64());
                    }
                    Ok((sets, times))
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(w, h)| {
                h.join().map_err(|p| ParallelError::WorkerFailure { worker: w as u16, reason: panic_reason(p) })
            })
            .collect()
    });
    let mut sets = Vec::with_capacity(features.len());
    let mut timing = TaskTiming::default();
    for r in results {
        let (s, t) = r??;
        sets.extend(s);
        timing.tasks.push(t);
    }
    Ok(Gathered { problem: Problem::from_sets(features, layers, sets), timing })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum FrameKind {
    Exchange = 1,
    Broadcast = 2,
    Result = 3,
}

impl TryFrom<u8> for FrameKind {
    type Error = FrameError;
    fn try_from(v: u8) -> Result<Self, FrameError> {
        match v {
            1 => Ok(FrameKind::Exchange),
            2 => Ok(FrameKind::Broadcast),
            3 => Ok(FrameKind::Result),
            k => Err(FrameError::UnknownKind(k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeMessage {
    pub sender: u16,
    pub generation: u32,
    pub chromosome: Chromosome,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("unknown frame kind {0}")]
    UnknownKind(u8),
    #[error("gene value {0} out of range")]
    BadGene(u8),
}

/// Header bytes after the length prefix: kind, worker id, generation.
pub const FRAME_HEADER: usize = 1 + 2 + 4;

/// `u32` little-endian length, then kind, sender, generation, the genes and
/// the fitness. The length counts every byte after the prefix.
pub fn encode_frame(kind: FrameKind, msg: &ExchangeMessage) -> Vec<u8> {
    let genes = &msg.chromosome.genes;
    let body = FRAME_HEADER + genes.len() + 8;
    let mut out = Vec::with_capacity(4 + body);
    out.extend_from_slice(&(body as u32).to_le_bytes());
    out.push(kind as u8);
    out.extend_from_slice(&msg.sender.to_le_bytes());
    out.extend_from_slice(&msg.generation.to_le_bytes());
    out.extend_from_slice(genes);
    out.extend_from_slice(&msg.chromosome.fitness.to_le_bytes());
    out
}

/// Decodes one frame from the front of `buf`, returning it with the number
/// of bytes consumed.
pub fn decode_frame(buf: &[u8]) -> Result<(FrameKind, ExchangeMessage, usize), FrameError> {
    let need = |n: usize| if buf.len() < n { Err(FrameError::Truncated { need: n, have: buf.len() }) } else { Ok(()) };
    need(4)?;
    let body = u32::from_le_bytes(buf[0..4].try_into().unwrap()) as usize;
    need(4 + body)?;
    if body < FRAME_HEADER + 8 {
        return Err(FrameError::Truncated { need: 4 + FRAME_HEADER + 8, have: 4 + body });
    }
    let kind = FrameKind::try_from(buf[4])?;
    let sender = u16::from_le_bytes(buf[5..7].try_into().unwrap());
    let generation = u32::from_le_bytes(buf[7..11].try_into().unwrap());
    let end = 4 + body;
    let genes = buf[11..end - 8].to_vec();
    if let Some(&g) = genes.iter().find(|&&g| g > crate::optimizer::MAX_GENE) {
        return Err(FrameError::BadGene(g));
    }
    let fitness = f64::from_le_bytes(buf[end - 8..end].try_into().unwrap());
    Ok((kind, ExchangeMessage { sender, generation, chromosome: Chromosome { genes, fitness } }, end))
}

/// One rendezvous as seen by the master.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    pub generation: u32,
    pub winner: u16,
    pub fitness: f64,
    /// Best fitness each participating worker published.
    pub published: Vec<(u16, f64)>,
}

#[derive(Debug, Clone)]
pub struct IslandOutcome {
    pub best: Chromosome,
    pub best_worker: u16,
    pub traces: Vec<RunTrace>,
    pub exchanges: Vec<ExchangeRecord>,
    pub timing: TaskTiming,
}

enum ToMaster {
    Exchange(ExchangeMessage),
    Done { worker: u16, best: Chromosome, trace: RunTrace, seconds: f64 },
    Failed { worker: u16, reason: String },
}

fn island_worker(
    worker: u16,
    table: &FitnessTable,
    cfg: OptimizerConfig,
    interval: usize,
    to_master: &Sender<ToMaster>,
    from_master: &Receiver<ExchangeMessage>,
) -> Result<(), String> {
    let started = Instant::now();
    let iterations = cfg.iterations;
    let mut opt = Optimizer::new(table, cfg).map_err(|e| e.to_string())?;
    loop {
        let target = (opt.generation() / interval + 1) * interval;
        opt.run_until(target.min(iterations));
        if opt.generation() >= iterations || opt.reached_threshold() {
            break;
        }
        let msg = ExchangeMessage { sender: worker, generation: opt.generation() as u32, chromosome: opt.best().clone() };
        if to_master.send(ToMaster::Exchange(msg)).is_err() {
            return Ok(());
        }
        let Ok(global) = from_master.recv() else {
            return Ok(());
        };
        if global.sender != worker {
            opt.inject(global.chromosome);
        }
    }
    let seconds = started.elapsed().as_secs_f64();
    let (best, trace) = opt.finish();
    let _ = to_master.send(ToMaster::Done { worker, best, trace, seconds });
    Ok(())
}

fn coordinate(
    plan: &WorkerPlan,
    rx: Receiver<ToMaster>,
    broadcast: Vec<Sender<ExchangeMessage>>,
    timeout: Duration,
) -> Result<IslandOutcome, ParallelError> {
    let w = plan.worker_count;
    let mut finished: Vec<Option<(Chromosome, RunTrace, f64)>> = vec![None; w];
    let mut exchanges = Vec::new();
    let mut generation = plan.exchange_interval as u32;
    while finished.iter().any(Option::is_none) {
        let mut round: Vec<Option<ExchangeMessage>> = vec![None; w];
        let waiting = |round: &[Option<ExchangeMessage>], finished: &[Option<_>]| {
            (0..w).find(|&i| round[i].is_none() && finished[i].is_none())
        };
        while let Some(missing) = waiting(&round, &finished) {
            match rx.recv_timeout(timeout) {
                Ok(ToMaster::Exchange(m)) => {
                    let i = m.sender as usize;
                    round[i] = Some(m);
                }
                Ok(ToMaster::Done { worker, best, trace, seconds }) => {
                    finished[worker as usize] = Some((best, trace, seconds));
                }
                Ok(ToMaster::Failed { worker, reason }) => return Err(ParallelError::WorkerFailure { worker, reason }),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(ParallelError::ExchangeTimeout { worker: missing as u16, generation })
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(ParallelError::WorkerFailure { worker: missing as u16, reason: "channel closed".into() })
                }
            }
        }
        let published: Vec<&ExchangeMessage> = round.iter().flatten().collect();
        if published.is_empty() {
            break;
        }
        let mut best = published[0];
        for m in &published[1..] {
            if m.chromosome.fitness < best.chromosome.fitness {
                best = m;
            }
        }
        exchanges.push(ExchangeRecord {
            generation: best.generation,
            winner: best.sender,
            fitness: best.chromosome.fitness,
            published: published.iter().map(|m| (m.sender, m.chromosome.fitness)).collect(),
        });
        log::debug!("exchange at generation {}: worker {} best {:.6}", best.generation, best.sender, best.chromosome.fitness);
        let best = best.clone();
        for m in &published {
            let _ = broadcast[m.sender as usize].send(best.clone());
        }
        generation = best.generation + plan.exchange_interval as u32;
    }
    let mut traces = Vec::with_capacity(w);
    let mut timing = TaskTiming::default();
    let mut overall: Option<(Chromosome, u16)> = None;
    for (i, f) in finished.into_iter().enumerate() {
        let (best, trace, seconds) = f.expect("every worker finished");
        if overall.as_ref().is_none_or(|(b, _)| best.fitness < b.fitness) {
            overall = Some((best, i as u16));
        }
        traces.push(trace);
        timing.tasks.push(vec![seconds]);
    }
    let (best, best_worker) = overall.expect("at least one worker");
    Ok(IslandOutcome { best, best_worker, traces, exchanges, timing })
}

/// Runs one island per worker over the full search space. Island `w` seeds
/// its generator with `plan.seeds[w]`; `cfg.seed` is ignored.
pub fn optimize_islands(
    table: &FitnessTable,
    cfg: &OptimizerConfig,
    plan: &WorkerPlan,
    timeout: Duration,
) -> Result<IslandOutcome, ParallelError> {
    cfg.validate()?;
    if plan.worker_count == 0 {
        return Err(ParallelError::InvalidWorkerCount);
    }
    if plan.exchange_interval == 0 {
        return Err(ParallelError::InvalidExchangeInterval);
    }
    let (tx, rx) = mpsc::channel();
    let mut broadcast = Vec::with_capacity(plan.worker_count);
    thread::scope(|scope| {
        for w in 0..plan.worker_count {
            let (btx, brx) = mpsc::channel();
            broadcast.push(btx);
            let tx = tx.clone();
            let island_cfg = OptimizerConfig { seed: plan.seeds[w], ..cfg.clone() };
            let interval = plan.exchange_interval;
            scope.spawn(move || {
                let worker = w as u16;
                let outcome =
                    catch_unwind(AssertUnwindSafe(|| island_worker(worker, table, island_cfg, interval, &tx, &brx)));
                let reason = match outcome {
                    Ok(Ok(())) => return,
                    Ok(Err(e)) => e,
                    Err(p) => panic_reason(p),
                };
                let _ = tx.send(ToMaster::Failed { worker, reason });
            });
        }
        drop(tx);
        coordinate(plan, rx, broadcast, timeout)
    })
}
