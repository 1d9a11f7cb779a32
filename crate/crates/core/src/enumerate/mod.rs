//! Exhaustive enumeration of (program, data) pairs and bounded complexity tables.
//!
//! A [`ComplexityTable`] records, for every string some pair within the budget
//! outputs, the least total length `l(q) + l(d)` (the bounded prefix
//! complexity `K_T`), a canonical witness, the Pareto frontier of
//! (program length, data length) trade-offs and the number of optimal pairs.
//!
//! Pair order is (total length, program order, data lexicographic); program
//! order is (length, lexicographic) on encodings. Canonical witnesses are the
//! first pair in that order, so tables do not depend on how work is scheduled.

mod cache;
mod snapshot;

pub use cache::{default_cache_dir, k_cond, snapshot_path, table_address, TableCache, CACHE_DIR_ENV};
pub use snapshot::{
    decode_snapshot, encode_snapshot, load_table, load_table_as, save_table, snapshot_digest, SnapshotError,
    SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::bits::Bits;
use crate::pvm::{eval_instrs, BudgetError, Budgets, EvalOutcome, Instr, Program, ProgramShape};

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("enumeration would evaluate {projected} pairs, above the safety cap of {cap}")]
    ResourceExceeded { projected: u64, cap: u64 },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// One point of a Pareto frontier with its canonical realizing pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParetoPoint {
    pub program_bits: u32,
    pub data_bits: u32,
    #[serde(serialize_with = "ser_bits")]
    pub program: Bits,
    #[serde(serialize_with = "ser_bits")]
    pub data: Bits,
}

impl ParetoPoint {
    pub fn total(&self) -> u32 {
        self.program_bits + self.data_bits
    }
}

/// Table entry for one output string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Entry {
    /// Least `l(q) + l(d)` over halting pairs that output the key.
    pub k: u32,
    #[serde(serialize_with = "ser_bits")]
    pub witness_program: Bits,
    #[serde(serialize_with = "ser_bits")]
    pub witness_data: Bits,
    /// Strictly increasing program length, strictly decreasing data length.
    pub pareto: Vec<ParetoPoint>,
    /// Number of pairs attaining `k`.
    pub optimal_count: u64,
}

fn ser_bits<S: serde::Serializer>(b: &Bits, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

/// Bounded complexity: known, or beyond the enumeration budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Complexity {
    Known(u32),
    /// No pair within `budget` total bits outputs the string; `K_T > budget`.
    Unknown {
        budget: u32,
    },
}

impl Complexity {
    pub fn known(self) -> Option<u32> {
        match self {
            Complexity::Known(k) => Some(k),
            Complexity::Unknown { .. } => None,
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Known(k) => write!(f, "{k}"),
            Complexity::Unknown { budget } => write!(f, ">{budget}"),
        }
    }
}

/// Read access shared by full tables and targeted tables.
pub trait TableView: Sync {
    fn budgets(&self) -> &Budgets;
    fn aux(&self) -> &Bits;
    fn entry(&self, x: &Bits) -> Option<&Entry>;
    /// Strings of length `n` with an entry, in canonical order.
    fn strings_of_length(&self, n: usize) -> Vec<&Bits>;

    fn k(&self, x: &Bits) -> Complexity {
        match self.entry(x) {
            Some(e) => Complexity::Known(e.k),
            None => Complexity::Unknown {
                budget: self.budgets().max_pair_bits,
            },
        }
    }
}

/// Bounded complexity table `K_T(· | aux)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityTable {
    pub budgets: Budgets,
    pub aux: Bits,
    pub entries: BTreeMap<Bits, Entry>,
    /// `halting_by_length[t]` = number of halting pairs with `l(q) + l(d) = t`.
    pub halting_by_length: Vec<u64>,
}

impl ComplexityTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: &Bits) -> Option<&Entry> {
        self.entries.get(x)
    }

    /// `Σ 2^-(l(q)+l(d))` over all halting pairs, exactly.
    pub fn kraft_sum(&self) -> BigRational {
        kraft_from_counts(&self.halting_by_length)
    }

    pub fn max_k(&self) -> Option<u32> {
        self.entries.values().map(|e| e.k).max()
    }

    pub fn halting_pairs(&self) -> u64 {
        self.halting_by_length.iter().sum()
    }
}

impl TableView for ComplexityTable {
    fn budgets(&self) -> &Budgets {
        &self.budgets
    }

    fn aux(&self) -> &Bits {
        &self.aux
    }

    fn entry(&self, x: &Bits) -> Option<&Entry> {
        self.entries.get(x)
    }

    fn strings_of_length(&self, n: usize) -> Vec<&Bits> {
        let lo = Bits::filled(false, n);
        self.entries
            .range(lo..)
            .take_while(|(x, _)| x.len() == n)
            .map(|(x, _)| x)
            .collect()
    }
}

pub(crate) fn kraft_from_counts(counts: &[u64]) -> BigRational {
    let top = counts.len().saturating_sub(1);
    let mut num = BigInt::from(0);
    for (t, &c) in counts.iter().enumerate() {
        num += BigInt::from(c) << (top - t);
    }
    BigRational::new(num, BigInt::from(1) << top)
}

/// `k` of `x` in `t`, or Unknown with the table's pair budget.
pub fn k(t: &impl TableView, x: &Bits) -> Complexity {
    t.k(x)
}

/// Every valid program of at most `max_bits` bits, in program order.
pub fn programs_upto(max_bits: usize) -> Vec<Program> {
    fn grow(body: &mut Vec<Instr>, len: usize, max_bits: usize, out: &mut Vec<Program>) {
        if len + Instr::End.code_len() <= max_bits {
            out.push(Program::from_body(body).expect("END appended"));
        }
        for &i in &Instr::ALL[1..] {
            let next = len + i.code_len();
            if next + Instr::End.code_len() <= max_bits {
                body.push(i);
                grow(body, next, max_bits, out);
                body.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), 0, max_bits, &mut out);
    out.sort();
    out
}

/// Options that shape how a table is computed but never what it contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub workers: usize,
    /// Refuse to enumerate more pairs than this.
    pub pair_cap: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            pair_cap: 4_000_000_000,
        }
    }
}

impl BuildOptions {
    pub fn with_workers(workers: usize) -> Self {
        BuildOptions {
            workers: workers.max(1),
            ..BuildOptions::default()
        }
    }
}

/// A program together with the data lengths it is run on.
struct Job {
    program: Program,
    data_lens: std::ops::RangeInclusive<usize>,
}

fn plan(b: &Budgets) -> (Vec<Job>, u64) {
    let mut jobs = Vec::new();
    let mut projected: u64 = 0;
    let max_prog = b.max_program_bits.min(b.max_pair_bits) as usize;
    for program in programs_upto(max_prog) {
        let shape = ProgramShape::of(program.instrs());
        if shape.never_halts() {
            continue;
        }
        let Some(cap) = b.data_cap_for(program.bit_len()) else {
            continue;
        };
        let lo = shape.reads_before_readall;
        let hi = if shape.has_readall { cap } else { lo };
        if lo > hi || hi > cap {
            continue;
        }
        for len in lo..=hi {
            projected = projected.saturating_add(1u64 << len.min(63));
        }
        jobs.push(Job {
            program,
            data_lens: lo..=hi,
        });
    }
    (jobs, projected)
}

/// Number of pairs [`build_table`] would evaluate at these budgets.
pub fn projected_pairs(b: &Budgets) -> u64 {
    plan(b).1
}

/// Running per-string accumulator; merging is commutative and associative.
#[derive(Clone, Debug)]
pub(crate) struct Acc {
    best: u32,
    best_count: u64,
    frontier: SmallVec<[ParetoPoint; 2]>,
}

impl Acc {
    pub(crate) fn new() -> Self {
        Acc {
            best: u32::MAX,
            best_count: 0,
            frontier: SmallVec::new(),
        }
    }

    pub(crate) fn add(&mut self, q: &Bits, d: &Bits, count: u64) {
        let (lq, ld) = (q.len() as u32, d.len() as u32);
        let total = lq + ld;
        if total < self.best {
            self.best = total;
            self.best_count = count;
        } else if total == self.best {
            self.best_count += count;
        }
        for p in self.frontier.iter_mut() {
            if p.program_bits <= lq && p.data_bits <= ld {
                if p.program_bits == lq && p.data_bits == ld && (q, d) < (&p.program, &p.data) {
                    p.program = q.clone();
                    p.data = d.clone();
                }
                return;
            }
        }
        self.frontier.retain(|p| !(lq <= p.program_bits && ld <= p.data_bits));
        let at = self
            .frontier
            .iter()
            .position(|p| p.program_bits > lq)
            .unwrap_or(self.frontier.len());
        self.frontier.insert(
            at,
            ParetoPoint {
                program_bits: lq,
                data_bits: ld,
                program: q.clone(),
                data: d.clone(),
            },
        );
    }

    pub(crate) fn finish(self) -> Option<Entry> {
        if self.best_count == 0 {
            return None;
        }
        let w = self
            .frontier
            .iter()
            .find(|p| p.total() == self.best)
            .expect("an optimal pair lies on the frontier");
        Some(Entry {
            k: self.best,
            witness_program: w.program.clone(),
            witness_data: w.data.clone(),
            optimal_count: self.best_count,
            pareto: self.frontier.into_vec(),
        })
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, EnumerateError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EnumerateError::Pool(e.to_string()))
}

/// Evaluates every pair within `b` with auxiliary tape `aux`.
pub fn build_table(b: &Budgets, aux: &Bits) -> Result<ComplexityTable, EnumerateError> {
    build_table_with(b, aux, BuildOptions::default())
}

pub fn build_table_with(b: &Budgets, aux: &Bits, opts: BuildOptions) -> Result<ComplexityTable, EnumerateError> {
    b.validate()?;
    let (jobs, projected) = plan(b);
    if projected > opts.pair_cap {
        return Err(EnumerateError::ResourceExceeded {
            projected,
            cap: opts.pair_cap,
        });
    }
    let pair = b.max_pair_bits as usize;
    let accs: DashMap<Bits, Acc> = DashMap::new();
    let counts: Vec<AtomicU64> = (0..=pair).map(|_| AtomicU64::new(0)).collect();

    pool(opts.workers)?.install(|| {
        jobs.par_iter().for_each(|job| {
            let q = job.program.bits();
            let lq = q.len();
            let mut local = vec![0u64; pair + 1];
            for len in job.data_lens.clone() {
                for d in Bits::all_of_length(len) {
                    if let EvalOutcome::Ok { output, .. } = eval_instrs(job.program.instrs(), &d, aux, b) {
                        local[lq + len] += 1;
                        accs.entry(output).or_insert_with(Acc::new).add(q, &d, 1);
                    }
                }
            }
            for (c, l) in counts.iter().zip(local) {
                if l > 0 {
                    c.fetch_add(l, Ordering::Relaxed);
                }
            }
        });
    });

    let entries: BTreeMap<Bits, Entry> = accs
        .into_iter()
        .filter_map(|(x, acc)| acc.finish().map(|e| (x, e)))
        .collect();
    Ok(ComplexityTable {
        budgets: *b,
        aux: aux.clone(),
        entries,
        halting_by_length: counts.into_iter().map(|c| c.into_inner()).collect(),
    })
}

/// Exact Kraft sum of all halting pairs within `b` for auxiliary tape `aux`.
pub fn kraft_sum(b: &Budgets, aux: &Bits) -> Result<BigRational, EnumerateError> {
    Ok(build_table(b, aux)?.kraft_sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::pvm::decode_program;

    #[test]
    fn programs_upto_small() {
        assert_eq!(programs_upto(2), vec![Program::from_body(&[]).unwrap()]);
        let five = programs_upto(5);
        // Brute force: every string of at most 5 bits that decodes exactly.
        let brute: Vec<Program> = Bits::all_upto(5).filter_map(|s| decode_program(&s).ok()).collect();
        assert_eq!(five, brute);
        assert_eq!(five.len(), 6);
        for p in &five {
            assert!(p.bit_len() <= 5);
        }
    }

    #[test]
    fn programs_upto_matches_decode_count() {
        for max in 2..=12 {
            let brute = Bits::all_upto(max).filter(|s| decode_program(s).is_ok()).count();
            assert_eq!(programs_upto(max).len(), brute, "max_bits={max}");
        }
    }

    #[test]
    fn tiny_tables() {
        let t = build_table(&Budgets::with_pair_bits(2), &Bits::new()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.kraft_sum(), BigRational::new(1.into(), 4.into()));

        let t8 = build_table(&Budgets::with_pair_bits(8), &Bits::new()).unwrap();
        let eps = t8.get(&Bits::new()).unwrap();
        assert_eq!(eps.k, 2);
        assert_eq!(eps.witness_program, bits("00"));
        assert_eq!(eps.optimal_count, 1);
        let one = t8.get(&bits("1")).unwrap();
        assert_eq!(one.k, 5);
        assert_eq!(one.witness_program, bits("01100"));
        assert_eq!(one.witness_data, Bits::new());
    }

    #[test]
    fn kraft_at_five_bits() {
        // [END]·ε, [ZERO,END]·ε, [ONE,END]·ε; the CAT/REP programs underflow
        // and [READ,END] needs a sixth bit.
        let expect = BigRational::new(1.into(), 4.into()) + BigRational::new(2.into(), 32.into());
        assert_eq!(kraft_sum(&Budgets::with_pair_bits(5), &Bits::new()).unwrap(), expect);
    }

    #[test]
    fn resource_cap_enforced() {
        let err = build_table_with(
            &Budgets::with_pair_bits(12),
            &Bits::new(),
            BuildOptions {
                workers: 1,
                pair_cap: 10,
            },
        )
        .unwrap_err();
        assert!(matches!(err, EnumerateError::ResourceExceeded { cap: 10, .. }));
    }

    #[test]
    fn acc_keeps_antichain() {
        let mut acc = Acc::new();
        acc.add(&bits("111000"), &bits("0101"), 1);
        acc.add(&bits("0100111000"), &Bits::new(), 1);
        acc.add(&bits("110110100"), &bits("00"), 1);
        let e = acc.finish().unwrap();
        let pts: Vec<(u32, u32)> = e.pareto.iter().map(|p| (p.program_bits, p.data_bits)).collect();
        assert_eq!(pts, vec![(6, 4), (9, 2), (10, 0)]);
        assert_eq!(e.witness_program, bits("111000"));
        assert_eq!(e.k, 10);
        assert_eq!(e.optimal_count, 2);
    }
}
