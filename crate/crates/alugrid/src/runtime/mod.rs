//! Simulated multi-rank message-passing runtime.
//!
//! P logical ranks run as threads over in-process channels. Messages between
//! a fixed (sender, receiver) pair are delivered in send order with no loss
//! or duplication; collectives act as barriers and combine contributions in
//! ascending rank order so reduction results are bitwise deterministic.
//!
//! Two execution modes are provided. `Deterministic` (the default) passes a
//! turn token between ranks: a rank runs until it has to block, then hands
//! the token to the next rank in round-robin order. `Concurrent` lets the
//! threads run freely. Both modes must produce identical results; only
//! wall-clock behaviour differs. If no rank can make progress for a full
//! scheduling round, the simulator aborts every rank with a
//! "collective mismatch" error instead of hanging.

mod buffer;
pub mod exchange;

pub use buffer::{MsgReader, MsgWriter};

use crate::error::{GridError, Result};
use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

/// How the simulator drives its ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Round-robin turn passing; fully serialized, reproducible schedule.
    Deterministic,
    /// One free-running worker thread per rank.
    Concurrent,
}

/// Message accounting categories, so that "without communication" claims
/// are testable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MsgCategory {
    /// Reductions, barriers and allgathers.
    Collective,
    /// Ghost-cell data exchange during computation.
    Halo,
    /// Ghost tree structure (re)builds after adaptation or migration.
    GhostSync,
    /// Macro trees and attached user data moving between ranks.
    Migration,
    /// All-to-all exchange run when a partition plan's import ranks are unknown.
    PresenceExchange,
    /// All-to-all face-key exchange identifying undeclared process borders.
    FaceKeyExchange,
    /// Neighbor-scoped ownership updates around a repartition.
    OwnerUpdate,
}

/// Per-category message counters.
#[derive(Debug, Clone, Default)]
pub struct MessageStats {
    counts: BTreeMap<MsgCategory, (u64, u64)>,
}

impl MessageStats {
    fn record(&mut self, cat: MsgCategory, bytes: u64) {
        let e = self.counts.entry(cat).or_insert((0, 0));
        e.0 += 1;
        e.1 += bytes;
    }

    pub fn messages(&self, cat: MsgCategory) -> u64 {
        self.counts.get(&cat).map_or(0, |e| e.0)
    }

    pub fn bytes(&self, cat: MsgCategory) -> u64 {
        self.counts.get(&cat).map_or(0, |e| e.1)
    }

    pub fn messages_total(&self) -> u64 {
        self.counts.values().map(|e| e.0).sum()
    }

    pub fn bytes_total(&self) -> u64 {
        self.counts.values().map(|e| e.1).sum()
    }

    pub fn merge(&mut self, other: &MessageStats) {
        for (cat, (m, b)) in &other.counts {
            let e = self.counts.entry(*cat).or_insert((0, 0));
            e.0 += m;
            e.1 += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CollOp {
    MinF64,
    MaxF64,
    SumF64,
    SumU64,
    MaxU64,
    Or,
    And,
    Gather,
}

#[derive(Debug, Clone)]
enum Contribution {
    F(f64),
    U(u64),
    B(bool),
    Bytes(Vec<u8>),
}

#[derive(Debug, Clone)]
enum CollResult {
    F(f64),
    U(u64),
    B(bool),
    Many(Vec<Vec<u8>>),
}

#[derive(Default)]
struct CollectiveState {
    op: Option<CollOp>,
    slots: Vec<Option<Contribution>>,
    deposited: usize,
    result: Option<CollResult>,
    taken: usize,
    generation: u64,
}

struct SchedState {
    turn: usize,
    finished: Vec<bool>,
    /// Token hops since the last successful operation.
    idle_hops: usize,
}

struct Channel {
    queue: Mutex<VecDeque<(MsgCategory, Vec<u8>)>>,
    cv: Condvar,
}

struct Shared {
    p: usize,
    mode: ExecMode,
    channels: Vec<Channel>,
    coll: Mutex<CollectiveState>,
    coll_cv: Condvar,
    sched: Mutex<SchedState>,
    sched_cv: Condvar,
    progress: AtomicU64,
    blocked: AtomicUsize,
    poisoned: AtomicBool,
    stats: Mutex<MessageStats>,
}

impl Shared {
    fn poison(&self) {
        self.poisoned.store(true, Ordering::SeqCst);
        self.coll_cv.notify_all();
        self.sched_cv.notify_all();
        for c in &self.channels {
            c.cv.notify_all();
        }
    }

    fn bump_progress(&self) {
        self.progress.fetch_add(1, Ordering::SeqCst);
        let mut sched = self.sched.lock().unwrap();
        sched.idle_hops = 0;
    }
}

/// Handle to the simulated communicator of one rank.
#[derive(Clone)]
pub struct Comm {
    shared: Arc<Shared>,
    rank: usize,
}

impl std::fmt::Debug for Comm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Comm(rank {} of {})", self.rank, self.shared.p)
    }
}

fn new_shared(p: usize, mode: ExecMode) -> Arc<Shared> {
    let channels = (0..p * p)
        .map(|_| Channel {
            queue: Mutex::new(VecDeque::new()),
            cv: Condvar::new(),
        })
        .collect();
    Arc::new(Shared {
        p,
        mode,
        channels,
        coll: Mutex::new(CollectiveState {
            slots: vec![None; p],
            ..Default::default()
        }),
        coll_cv: Condvar::new(),
        sched: Mutex::new(SchedState {
            turn: 0,
            finished: vec![false; p],
            idle_hops: 0,
        }),
        sched_cv: Condvar::new(),
        progress: AtomicU64::new(0),
        blocked: AtomicUsize::new(0),
        poisoned: AtomicBool::new(false),
        stats: Mutex::new(MessageStats::default()),
    })
}

impl Comm {
    /// A single-rank communicator for serial use.
    pub fn solo() -> Comm {
        Comm {
            shared: new_shared(1, ExecMode::Deterministic),
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.shared.p
    }

    /// Snapshot of the global message tally.
    pub fn stats(&self) -> MessageStats {
        self.shared.stats.lock().unwrap().clone()
    }

    fn check_poison(&self) -> Result<()> {
        if self.shared.poisoned.load(Ordering::SeqCst) {
            Err(GridError::CollectiveMismatch)
        } else {
            Ok(())
        }
    }

    /// Send bytes to a peer. Sends are buffered and never block.
    pub fn send(&self, to: usize, cat: MsgCategory, bytes: Vec<u8>) {
        assert!(to < self.shared.p && to != self.rank, "send to {to}");
        let len = bytes.len() as u64;
        {
            let ch = &self.shared.channels[self.rank * self.shared.p + to];
            let mut q = ch.queue.lock().unwrap();
            q.push_back((cat, bytes));
            ch.cv.notify_all();
        }
        self.shared.stats.lock().unwrap().record(cat, len);
        self.shared.bump_progress();
        self.shared.sched_cv.notify_all();
    }

    /// Blocking in-order receive from a specific peer. The category must
    /// match the head-of-queue message; a mismatch means the ranks drifted
    /// out of protocol.
    pub fn recv(&self, from: usize, cat: MsgCategory) -> Result<Vec<u8>> {
        assert!(from < self.shared.p && from != self.rank, "recv from {from}");
        let idx = from * self.shared.p + self.rank;
        loop {
            self.check_poison()?;
            {
                let ch = &self.shared.channels[idx];
                let mut q = ch.queue.lock().unwrap();
                if let Some((got, bytes)) = q.pop_front() {
                    if got != cat {
                        self.shared.poison();
                        return Err(GridError::Io(format!(
                            "message category mismatch: expected {cat:?}, got {got:?}"
                        )));
                    }
                    drop(q);
                    self.shared.bump_progress();
                    return Ok(bytes);
                }
            }
            self.block_until(|| {
                let ch = &self.shared.channels[idx];
                let q = ch.queue.lock().unwrap();
                !q.is_empty()
            })?;
        }
    }

    /// True if a message from `from` is already waiting.
    pub fn probe(&self, from: usize) -> bool {
        let idx = from * self.shared.p + self.rank;
        !self.shared.channels[idx].queue.lock().unwrap().is_empty()
    }

    fn block_until(&self, ready: impl Fn() -> bool) -> Result<()> {
        match self.shared.mode {
            ExecMode::Concurrent => self.block_concurrent(ready),
            ExecMode::Deterministic => self.block_deterministic(ready),
        }
    }

    fn block_concurrent(&self, ready: impl Fn() -> bool) -> Result<()> {
        let start_progress = self.shared.progress.load(Ordering::SeqCst);
        self.shared.blocked.fetch_add(1, Ordering::SeqCst);
        let res = loop {
            if self.shared.poisoned.load(Ordering::SeqCst) {
                break Err(GridError::CollectiveMismatch);
            }
            if ready() {
                break Ok(());
            }
            // Sleep briefly; wake-ups come from sends and collective deposits.
            std::thread::sleep(Duration::from_micros(200));
            let all_blocked = self.shared.blocked.load(Ordering::SeqCst) == self.shared.p;
            let stalled = self.shared.progress.load(Ordering::SeqCst) == start_progress;
            if all_blocked && stalled && !ready() {
                self.shared.poison();
                break Err(GridError::CollectiveMismatch);
            }
        };
        self.shared.blocked.fetch_sub(1, Ordering::SeqCst);
        res
    }

    fn block_deterministic(&self, ready: impl Fn() -> bool) -> Result<()> {
        // Hand the token to the next unfinished rank, then wait for our
        // turn to come around again and re-check the condition.
        let mut sched = self.shared.sched.lock().unwrap();
        loop {
            if self.shared.poisoned.load(Ordering::SeqCst) {
                return Err(GridError::CollectiveMismatch);
            }
            if sched.turn == self.rank {
                drop(sched);
                if ready() {
                    return Ok(());
                }
                sched = self.shared.sched.lock().unwrap();
                if sched.turn == self.rank {
                    sched.idle_hops += 1;
                    let active = sched.finished.iter().filter(|f| !**f).count();
                    if sched.idle_hops > 2 * active.max(1) {
                        drop(sched);
                        self.shared.poison();
                        return Err(GridError::CollectiveMismatch);
                    }
                    advance_turn(&mut sched, self.shared.p);
                    self.shared.sched_cv.notify_all();
                }
            } else {
                let (guard, _) = self
                    .shared
                    .sched_cv
                    .wait_timeout(sched, Duration::from_millis(5))
                    .unwrap();
                sched = guard;
            }
        }
    }

    fn mark_finished(&self) {
        let mut sched = self.shared.sched.lock().unwrap();
        sched.finished[self.rank] = true;
        if sched.turn == self.rank {
            advance_turn(&mut sched, self.shared.p);
        }
        self.shared.sched_cv.notify_all();
    }

    fn collective(&self, op: CollOp, mine: Contribution) -> Result<CollResult> {
        let p = self.shared.p;
        if p == 1 {
            return Ok(combine(&op, std::slice::from_ref(&mine)));
        }
        let bytes = match &mine {
            Contribution::Bytes(b) => b.len() as u64,
            _ => 8,
        };
        // Wait until any previous collective is fully collected and our
        // slot for the fresh generation is empty.
        loop {
            self.check_poison()?;
            let can_enter = {
                let st = self.shared.coll.lock().unwrap();
                st.result.is_none() && st.slots[self.rank].is_none()
            };
            if can_enter {
                break;
            }
            self.block_until(|| {
                let st = self.shared.coll.lock().unwrap();
                st.result.is_none() && st.slots[self.rank].is_none()
            })?;
        }
        let my_gen;
        {
            let mut st = self.shared.coll.lock().unwrap();
            if st.deposited > 0 && st.op.as_ref() != Some(&op) {
                drop(st);
                self.shared.poison();
                return Err(GridError::CollectiveMismatch);
            }
            if st.deposited == 0 {
                st.op = Some(op.clone());
            }
            my_gen = st.generation;
            assert!(st.slots[self.rank].is_none(), "rank deposited twice");
            st.slots[self.rank] = Some(mine);
            st.deposited += 1;
            if st.deposited == p {
                let contribs: Vec<Contribution> =
                    st.slots.iter().map(|s| s.clone().unwrap()).collect();
                st.result = Some(combine(&op, &contribs));
                self.shared.coll_cv.notify_all();
            }
        }
        self.shared.stats.lock().unwrap().record(MsgCategory::Collective, bytes);
        self.shared.bump_progress();
        self.shared.sched_cv.notify_all();
        // Wait for the result of our generation.
        loop {
            self.check_poison()?;
            {
                let mut st = self.shared.coll.lock().unwrap();
                if st.generation == my_gen && st.result.is_some() {
                    let r = st.result.clone().unwrap();
                    st.taken += 1;
                    if st.taken == p {
                        st.op = None;
                        st.slots = vec![None; p];
                        st.deposited = 0;
                        st.result = None;
                        st.taken = 0;
                        st.generation += 1;
                        self.shared.coll_cv.notify_all();
                    }
                    drop(st);
                    self.shared.bump_progress();
                    self.shared.sched_cv.notify_all();
                    return Ok(r);
                }
                if st.generation != my_gen {
                    panic!("collective generation skipped");
                }
            }
            self.block_until(|| {
                let st = self.shared.coll.lock().unwrap();
                st.result.is_some() || st.generation != my_gen
            })?;
        }
    }

    /// Exact global minimum; identical on every rank.
    pub fn global_min(&self, x: f64) -> Result<f64> {
        match self.collective(CollOp::MinF64, Contribution::F(x))? {
            CollResult::F(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    /// Exact global maximum; identical on every rank.
    pub fn global_max(&self, x: f64) -> Result<f64> {
        match self.collective(CollOp::MaxF64, Contribution::F(x))? {
            CollResult::F(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    /// Global sum, reduced in ascending rank order: bitwise deterministic.
    pub fn global_sum(&self, x: f64) -> Result<f64> {
        match self.collective(CollOp::SumF64, Contribution::F(x))? {
            CollResult::F(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn global_sum_u64(&self, x: u64) -> Result<u64> {
        match self.collective(CollOp::SumU64, Contribution::U(x))? {
            CollResult::U(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn global_max_u64(&self, x: u64) -> Result<u64> {
        match self.collective(CollOp::MaxU64, Contribution::U(x))? {
            CollResult::U(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    /// Logical OR over all ranks.
    pub fn all_or(&self, x: bool) -> Result<bool> {
        match self.collective(CollOp::Or, Contribution::B(x))? {
            CollResult::B(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    /// Logical AND over all ranks.
    pub fn all_and(&self, x: bool) -> Result<bool> {
        match self.collective(CollOp::And, Contribution::B(x))? {
            CollResult::B(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn barrier(&self) -> Result<()> {
        self.all_or(false).map(|_| ())
    }

    /// Gather every rank's bytes on every rank, ordered by rank.
    pub fn allgather(&self, bytes: Vec<u8>) -> Result<Vec<Vec<u8>>> {
        match self.collective(CollOp::Gather, Contribution::Bytes(bytes))? {
            CollResult::Many(v) => Ok(v),
            _ => unreachable!(),
        }
    }
}

fn advance_turn(sched: &mut SchedState, p: usize) {
    for step in 1..=p {
        let next = (sched.turn + step) % p;
        if !sched.finished[next] {
            sched.turn = next;
            return;
        }
    }
}

fn combine(op: &CollOp, contribs: &[Contribution]) -> CollResult {
    match op {
        CollOp::MinF64 => CollResult::F(
            contribs
                .iter()
                .map(|c| match c {
                    Contribution::F(v) => *v,
                    _ => unreachable!(),
                })
                .fold(f64::INFINITY, f64::min),
        ),
        CollOp::MaxF64 => CollResult::F(
            contribs
                .iter()
                .map(|c| match c {
                    Contribution::F(v) => *v,
                    _ => unreachable!(),
                })
                .fold(f64::NEG_INFINITY, f64::max),
        ),
        CollOp::SumF64 => {
            let mut s = 0.0;
            for c in contribs {
                match c {
                    Contribution::F(v) => s += *v,
                    _ => unreachable!(),
                }
            }
            CollResult::F(s)
        }
        CollOp::SumU64 => {
            let mut s = 0u64;
            for c in contribs {
                match c {
                    Contribution::U(v) => s += *v,
                    _ => unreachable!(),
                }
            }
            CollResult::U(s)
        }
        CollOp::MaxU64 => CollResult::U(
            contribs
                .iter()
                .map(|c| match c {
                    Contribution::U(v) => *v,
                    _ => unreachable!(),
                })
                .max()
                .unwrap(),
        ),
        CollOp::Or => CollResult::B(contribs.iter().any(|c| match c {
            Contribution::B(v) => *v,
            _ => unreachable!(),
        })),
        CollOp::And => CollResult::B(contribs.iter().all(|c| match c {
            Contribution::B(v) => *v,
            _ => unreachable!(),
        })),
        CollOp::Gather => CollResult::Many(
            contribs
                .iter()
                .map(|c| match c {
                    Contribution::Bytes(b) => b.clone(),
                    _ => unreachable!(),
                })
                .collect(),
        ),
    }
}

/// Runs P rank programs to completion and returns their results by rank.
pub struct Simulator;

impl Simulator {
    pub fn run<T, F>(p: usize, mode: ExecMode, program: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Comm) -> Result<T> + Sync,
    {
        assert!(p >= 1);
        let shared = new_shared(p, mode);
        let results: Vec<Result<T>> = std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(p);
            for rank in 0..p {
                let comm = Comm {
                    shared: shared.clone(),
                    rank,
                };
                let program = &program;
                handles.push(scope.spawn(move || {
                    let out = program(comm.clone());
                    comm.mark_finished();
                    out
                }));
            }
            handles
                .into_iter()
                .map(|h| match h.join() {
                    Ok(r) => r,
                    Err(panic) => {
                        shared.poison();
                        std::panic::resume_unwind(panic);
                    }
                })
                .collect()
        });
        results.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_over_three_ranks() {
        for mode in [ExecMode::Deterministic, ExecMode::Concurrent] {
            let vals = Simulator::run(3, mode, |c| {
                let x = [3.0, 1.0, 2.0][c.rank()];
                c.global_min(x)
            })
            .unwrap();
            assert_eq!(vals, vec![1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn solo_reduction_is_identity() {
        let c = Comm::solo();
        assert_eq!(c.global_min(4.5).unwrap(), 4.5);
        assert_eq!(c.global_sum(4.5).unwrap(), 4.5);
    }

    #[test]
    fn sum_order_is_fixed() {
        // 0.1 summed over 4 ranks must give identical bits on every run.
        let expect = ((0.1 + 0.1) + 0.1) + 0.1;
        for _ in 0..3 {
            let vals =
                Simulator::run(4, ExecMode::Concurrent, |c| c.global_sum(0.1)).unwrap();
            for v in vals {
                assert_eq!(v.to_bits(), expect.to_bits());
            }
        }
    }

    #[test]
    fn pairwise_order_preserved() {
        let vals = Simulator::run(2, ExecMode::Deterministic, |c| {
            if c.rank() == 0 {
                for i in 0..10u64 {
                    c.send(1, MsgCategory::Halo, i.to_le_bytes().to_vec());
                }
                Ok(0u64)
            } else {
                let mut prev = None;
                for _ in 0..10 {
                    let b = c.recv(0, MsgCategory::Halo)?;
                    let v = u64::from_le_bytes(b.try_into().unwrap());
                    if let Some(p) = prev {
                        assert_eq!(v, p + 1);
                    }
                    prev = Some(v);
                }
                Ok(prev.unwrap())
            }
        })
        .unwrap();
        assert_eq!(vals[1], 9);
    }

    #[test]
    fn mismatched_collectives_are_detected() {
        for mode in [ExecMode::Deterministic, ExecMode::Concurrent] {
            let res = Simulator::run(2, mode, |c| {
                if c.rank() == 0 {
                    c.global_min(1.0)
                } else {
                    // never participates
                    c.recv(0, MsgCategory::Halo).map(|_| 0.0)
                }
            });
            assert!(matches!(res, Err(GridError::CollectiveMismatch)));
        }
    }

    #[test]
    fn allgather_ranks_in_order() {
        let vals = Simulator::run(4, ExecMode::Deterministic, |c| {
            c.allgather(vec![c.rank() as u8])
        })
        .unwrap();
        for v in vals {
            assert_eq!(v, vec![vec![0], vec![1], vec![2], vec![3]]);
        }
    }
}
