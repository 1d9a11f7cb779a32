//! Reference machine and naive enumerator for cross-checking the library.
//!
//! Strings are plain `'0'`/`'1'` text. Nothing here calls into the library:
//! decoding, evaluation and enumeration are written out from the instruction
//! table directly, single-threaded, with no pruning and no memoization.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    End,
    Zero,
    One,
    Cat,
    Rep,
    Read,
    ReadAll,
    Dup,
    Aux,
}

pub const CODES: [(Op, &str); 9] = [
    (Op::End, "00"),
    (Op::Zero, "010"),
    (Op::One, "011"),
    (Op::Cat, "100"),
    (Op::Rep, "101"),
    (Op::Read, "110"),
    (Op::ReadAll, "1110"),
    (Op::Dup, "11110"),
    (Op::Aux, "11111"),
];

pub const IDENTITY: &str = "111000";

/// A program iff `s` is a sequence of code words ending in END at its last bit.
pub fn decode(s: &str) -> Option<Vec<Op>> {
    let mut ops = Vec::new();
    let mut i = 0;
    loop {
        let (op, code) = CODES.iter().find(|(_, c)| s[i..].starts_with(c))?;
        i += code.len();
        ops.push(*op);
        if *op == Op::End {
            return (i == s.len()).then_some(ops);
        }
    }
}

pub fn encode(ops: &[Op]) -> String {
    ops.iter()
        .map(|op| CODES.iter().find(|(o, _)| o == op).unwrap().1)
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub pair: usize,
    pub prog: usize,
    pub data: usize,
    pub steps: u64,
    pub size: usize,
}

impl Limits {
    pub fn pair(n: usize) -> Limits {
        Limits {
            pair: n,
            prog: n,
            data: n,
            steps: 4096,
            size: 64,
        }
    }
}

/// Index of `s` in the order ε, 0, 1, 00, 01, ...
pub fn nat(s: &str) -> Option<u128> {
    if s.len() > 120 {
        return None;
    }
    u128::from_str_radix(&format!("1{s}"), 2).ok().map(|v| v - 1)
}

/// Output of the program on `data` with auxiliary string `aux`, if it halts cleanly.
pub fn run(ops: &[Op], data: &str, aux: &str, lim: &Limits) -> Option<String> {
    let mut stack: Vec<String> = Vec::new();
    let mut pos = 0;
    let mut steps: u64 = 0;
    for op in ops {
        let (top, cost) = match op {
            Op::End => {
                steps += 1;
                if steps > lim.steps || pos != data.len() {
                    return None;
                }
                return Some(stack.pop().unwrap_or_default());
            }
            Op::Zero => ("0".to_string(), 0),
            Op::One => ("1".to_string(), 0),
            Op::Cat => {
                let b = stack.pop()?;
                let a = stack.pop()?;
                let s = a + &b;
                let n = s.len();
                (s, n)
            }
            Op::Rep => {
                let n = stack.pop()?;
                let a = stack.pop()?;
                if a.is_empty() {
                    (String::new(), 0)
                } else {
                    let times = nat(&n)?;
                    if times > (lim.size / a.len()) as u128 {
                        return None;
                    }
                    let s = a.repeat(times as usize);
                    let n = s.len();
                    (s, n)
                }
            }
            Op::Read => {
                if pos >= data.len() {
                    return None;
                }
                pos += 1;
                (data[pos - 1..pos].to_string(), 0)
            }
            Op::ReadAll => {
                let s = data[pos..].to_string();
                pos = data.len();
                let n = s.len();
                (s, n)
            }
            Op::Dup => {
                let s = stack.last()?.clone();
                let n = s.len();
                (s, n)
            }
            Op::Aux => (aux.to_string(), aux.len()),
        };
        if top.len() > lim.size {
            return None;
        }
        steps += 1 + cost as u64;
        if steps > lim.steps {
            return None;
        }
        stack.push(top);
    }
    None
}

pub fn strings_of_length(len: usize) -> impl Iterator<Item = String> {
    (0u64..1 << len).map(move |v| if len == 0 { String::new() } else { format!("{v:0len$b}") })
}

pub fn strings_upto(max: usize) -> impl Iterator<Item = String> {
    (0..=max).flat_map(strings_of_length)
}

/// Every program of at most `max` bits as (bits, ops), by length then lexicographically.
pub fn programs(max: usize) -> Vec<(String, Vec<Op>)> {
    strings_upto(max)
        .filter_map(|s| decode(&s).map(|ops| (s, ops)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct OEntry {
    pub k: usize,
    pub q: String,
    pub d: String,
    pub count: u64,
    /// Program length -> least data length over realizing pairs.
    pub best_data: BTreeMap<usize, usize>,
    /// Every realizing pair uses the identity program.
    pub identity_only: bool,
}

impl OEntry {
    /// Minimal (program, data) length pairs, by increasing program length.
    pub fn pareto(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (&lq, &ld) in &self.best_data {
            if out.last().map_or(true, |&(_, d)| ld < d) {
                out.push((lq, ld));
            }
        }
        out
    }

    /// Shortest program among optimal pairs.
    pub fn soph0(&self) -> usize {
        self.pareto().into_iter().find(|(q, d)| q + d == self.k).unwrap().0
    }

    /// Best total length using a program of at most `alpha` bits.
    pub fn lambda(&self, alpha: usize) -> Option<usize> {
        self.best_data.range(..=alpha).map(|(q, d)| q + d).min()
    }
}

pub struct OTable {
    pub entries: BTreeMap<String, OEntry>,
    /// Halting pairs by total length.
    pub halting: Vec<u64>,
}

impl OTable {
    pub fn kraft(&self) -> BigRational {
        self.halting
            .iter()
            .enumerate()
            .map(|(t, &c)| BigRational::new(BigInt::from(c), BigInt::from(1) << t))
            .sum()
    }
}

/// Evaluates every pair within the limits.
pub fn build(lim: &Limits, aux: &str) -> OTable {
    let mut entries: BTreeMap<String, OEntry> = BTreeMap::new();
    let mut halting = vec![0u64; lim.pair + 1];
    for (q, ops) in programs(lim.prog.min(lim.pair)) {
        for dl in 0..=lim.data.min(lim.pair - q.len()) {
            for d in strings_of_length(dl) {
                let Some(x) = run(&ops, &d, aux, lim) else { continue };
                let total = q.len() + d.len();
                halting[total] += 1;
                let identity = q == IDENTITY;
                match entries.get_mut(&x) {
                    None => {
                        entries.insert(
                            x,
                            OEntry {
                                k: total,
                                q: q.clone(),
                                d,
                                count: 1,
                                best_data: BTreeMap::from([(q.len(), dl)]),
                                identity_only: identity,
                            },
                        );
                    }
                    Some(e) => {
                        if total < e.k {
                            e.k = total;
                            e.q = q.clone();
                            e.d = d;
                            e.count = 1;
                        } else if total == e.k {
                            e.count += 1;
                        }
                        let best = e.best_data.entry(q.len()).or_insert(dl);
                        *best = (*best).min(dl);
                        e.identity_only &= identity;
                    }
                }
            }
        }
    }
    OTable { entries, halting }
}
