//! Property suites run by `sophlab selftest`.
//!
//! The instruction-code checks work from a copy of the code table so a
//! mutated table can be injected and the failure observed.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::bits::Bits;
use crate::enumerate::{build_table_with, kraft_sum, programs_upto, snapshot_digest, BuildOptions, ComplexityTable};
use crate::models::{pmf_to_func, set_to_pmf, FiniteSetModel, Log2};
use crate::pvm::{eval, Budgets, Instr, ISA};
use crate::stats::{sophistication, structure_lambda, SufficiencyParams};

/// Instruction codes as text, in [`Instr::ALL`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeTable(pub Vec<(Instr, String)>);

impl CodeTable {
    pub fn pvm1() -> CodeTable {
        CodeTable(ISA.iter().map(|e| (e.instr, e.code.to_string())).collect())
    }

    /// Replaces the code of `mnemonic`, e.g. `DUP=1111`.
    pub fn mutate(&mut self, spec: &str) -> Result<(), String> {
        let (name, code) = spec
            .split_once('=')
            .ok_or_else(|| format!("expected MNEMONIC=CODE, got {spec:?}"))?;
        let instr = Instr::from_mnemonic(name).ok_or_else(|| format!("unknown instruction {name:?}"))?;
        if code.is_empty() || !code.chars().all(|c| c == '0' || c == '1') {
            return Err(format!("bad code {code:?}"));
        }
        for row in &mut self.0 {
            if row.0 == instr {
                row.1 = code.to_string();
            }
        }
        Ok(())
    }

    /// Every encoded program of at most `max_bits` bits: code words in
    /// sequence with END exactly once, last.
    fn programs(&self, max_bits: usize) -> BTreeSet<String> {
        fn go(t: &CodeTable, prefix: &mut String, max: usize, out: &mut BTreeSet<String>) {
            for (instr, code) in &t.0 {
                if prefix.len() + code.len() > max {
                    continue;
                }
                let n = prefix.len();
                prefix.push_str(code);
                if *instr == Instr::End {
                    out.insert(prefix.clone());
                } else {
                    go(t, prefix, max, out);
                }
                prefix.truncate(n);
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut String::new(), max_bits, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub property: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

type Check = Result<String, String>;

fn prefix_free(words: &BTreeSet<String>) -> Check {
    // In lexicographic order a word's extensions follow it directly.
    let sorted: Vec<&String> = words.iter().collect();
    for w in sorted.windows(2) {
        if w[1].starts_with(w[0].as_str()) {
            return Err(format!("{} is a prefix of {}", w[0], w[1]));
        }
    }
    Ok(format!("{} words", words.len()))
}

fn isa_prefix_free(codes: &CodeTable) -> Check {
    let words: BTreeSet<String> = codes.0.iter().map(|(_, c)| c.clone()).collect();
    if words.len() != codes.0.len() {
        return Err("two instructions share a code".into());
    }
    prefix_free(&words)
}

fn isa_kraft(codes: &CodeTable) -> Check {
    let sum: BigRational = codes
        .0
        .iter()
        .map(|(_, c)| BigRational::new(BigInt::one(), BigInt::one() << c.len()))
        .sum();
    if sum.is_one() {
        Ok("sum = 1".into())
    } else {
        Err(format!("sum = {sum}"))
    }
}

fn program_prefix_free(codes: &CodeTable, max_bits: usize) -> Check {
    prefix_free(&codes.programs(max_bits))
}

fn decoder_agreement(codes: &CodeTable, max_bits: usize) -> Check {
    let table: BTreeSet<String> = codes.programs(max_bits);
    let machine: BTreeSet<String> = programs_upto(max_bits).iter().map(|p| p.bits().to_string()).collect();
    if table == machine {
        Ok(format!("{} programs", table.len()))
    } else {
        let diff = table.symmetric_difference(&machine).next().cloned().unwrap_or_default();
        Err(format!("code table and decoder disagree on {diff}"))
    }
}

fn pair_kraft(budgets: &[u32]) -> Check {
    let mut prev = BigRational::from_integer(0.into());
    let mut parts = Vec::new();
    for &p in budgets {
        let k = kraft_sum(&Budgets::with_pair_bits(p), &Bits::new()).map_err(|e| e.to_string())?;
        if k > BigRational::one() {
            return Err(format!("pair budget {p}: {k} > 1"));
        }
        if k < prev {
            return Err(format!("pair budget {p}: {k} decreased from {prev}"));
        }
        parts.push(format!("{p}:{k}"));
        prev = k;
    }
    Ok(parts.join(" "))
}

/// Straight enumeration of every (program, data) pair, no pruning.
fn naive_entries(b: &Budgets) -> BTreeMap<Bits, (u32, Bits, Bits, u64)> {
    let mut out: BTreeMap<Bits, (u32, Bits, Bits, u64)> = BTreeMap::new();
    for q in programs_upto(b.max_program_bits.min(b.max_pair_bits) as usize) {
        let Some(cap) = b.data_cap_for(q.bit_len()) else {
            continue;
        };
        for d in Bits::all_upto(cap) {
            let Some(x) = eval(&q, &d, &Bits::new(), b).into_output() else {
                continue;
            };
            let total = (q.bit_len() + d.len()) as u32;
            match out.get_mut(&x) {
                None => {
                    out.insert(x, (total, q.bits().clone(), d, 1));
                }
                Some(e) if total < e.0 => *e = (total, q.bits().clone(), d, 1),
                Some(e) if total == e.0 => {
                    e.3 += 1;
                    if (q.bits(), &d) < (&e.1, &e.2) {
                        e.1 = q.bits().clone();
                        e.2 = d;
                    }
                }
                Some(_) => {}
            }
        }
    }
    out
}

fn oracle_equivalence(pair: u32) -> Check {
    let b = Budgets::with_pair_bits(pair);
    let t = build_table_with(&b, &Bits::new(), BuildOptions::with_workers(1)).map_err(|e| e.to_string())?;
    let naive = naive_entries(&b);
    if naive.len() != t.len() {
        return Err(format!(
            "{} entries vs {} from the naive enumerator",
            t.len(),
            naive.len()
        ));
    }
    for (x, (k, q, d, n)) in &naive {
        let e = t.get(x).ok_or_else(|| format!("missing entry {}", x.display_eps()))?;
        if (e.k, &e.witness_program, &e.witness_data, e.optimal_count) != (*k, q, d, *n) {
            return Err(format!("entry {} differs", x.display_eps()));
        }
    }
    Ok(format!("{} entries at pair budget {pair}", t.len()))
}

fn worker_determinism(pair: u32) -> Check {
    let b = Budgets::with_pair_bits(pair);
    let digests: Vec<[u8; 32]> = [1, 2, 4]
        .iter()
        .map(|&w| build_table_with(&b, &Bits::new(), BuildOptions::with_workers(w)).map(|t| snapshot_digest(&t)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if digests.windows(2).all(|w| w[0] == w[1]) {
        Ok(format!("digest {}", hex::encode(&digests[0][..8])))
    } else {
        Err("snapshot digest depends on the worker count".into())
    }
}

fn budget_monotonicity(small: &ComplexityTable, large: &ComplexityTable) -> Check {
    for (x, e) in &small.entries {
        match large.get(x) {
            Some(f) if f.k <= e.k => {}
            _ => return Err(format!("k({}) grew with the budget", x.display_eps())),
        }
    }
    Ok(format!("{} entries", small.len()))
}

fn statistic_shapes(t: &ComplexityTable) -> Check {
    for (x, e) in &t.entries {
        let s = sophistication(t, x, SufficiencyParams::new(0)).map_err(|e| e.to_string())?;
        if s.soph > e.k {
            return Err(format!("soph({}) > k", x.display_eps()));
        }
        let lam = structure_lambda(t, x).map_err(|e| e.to_string())?;
        let vals: Vec<Option<u32>> = lam.iter().map(|p| p.lambda).collect();
        let nonincreasing = vals.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b <= a,
            (None, _) => true,
            (Some(_), None) => false,
        });
        let flat = lam.iter().filter(|p| p.alpha >= s.soph).all(|p| p.lambda == Some(e.k));
        if !nonincreasing || !flat || vals.last() != Some(&Some(e.k)) {
            return Err(format!("structure function of {} has the wrong shape", x.display_eps()));
        }
    }
    Ok(format!("{} entries", t.len()))
}

fn conversion_chain() -> Check {
    for n in 1..=16usize {
        let s =
            FiniteSetModel::new((0..n as u64).map(|i| Bits::from_u64(i, 5)).collect()).map_err(|e| e.to_string())?;
        let code = pmf_to_func(&set_to_pmf(&s));
        let want = Log2::of_usize(n).ceil() as usize;
        if code.entries().keys().any(|c| c.len() != want) {
            return Err(format!("|S| = {n}: code length differs from ceil(log |S|) = {want}"));
        }
        if code.kraft_sum() > BigRational::one() {
            return Err(format!("|S| = {n}: Kraft sum exceeds 1"));
        }
    }
    Ok("sets of size 1..16".into())
}

fn timed(property: &'static str, f: impl FnOnce() -> Check) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckResult {
        property,
        passed,
        detail,
        millis: start.elapsed().as_millis(),
    }
}

/// Runs every suite at fixed small budgets.
pub fn run(codes: &CodeTable) -> Report {
    let mut checks = vec![
        timed("isa-prefix-free", || isa_prefix_free(codes)),
        timed("isa-kraft", || isa_kraft(codes)),
        timed("program-prefix-free", || program_prefix_free(codes, 16)),
        timed("decoder-agreement", || decoder_agreement(codes, 16)),
        timed("pair-kraft", || pair_kraft(&[8, 10, 12, 14])),
        timed("oracle-equivalence", || oracle_equivalence(12)),
        timed("worker-determinism", || worker_determinism(14)),
    ];
    let tables = (
        build_table_with(&Budgets::with_pair_bits(12), &Bits::new(), BuildOptions::default()),
        build_table_with(&Budgets::with_pair_bits(14), &Bits::new(), BuildOptions::default()),
    );
    match tables {
        (Ok(small), Ok(large)) => {
            checks.push(timed("budget-monotonicity", || budget_monotonicity(&small, &large)));
            checks.push(timed("statistic-shapes", || statistic_shapes(&large)));
        }
        (Err(e), _) | (_, Err(e)) => checks.push(timed("budget-monotonicity", || Err(e.to_string()))),
    }
    checks.push(timed("conversion-chain", conversion_chain));
    Report { checks }
}
