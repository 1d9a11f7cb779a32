//! Exact ball sizes for program models without enumerating every data string.
//!
//! Fix the bits taken by READs before the first READALL. The remaining data
//! `R` enters the computation only through READALL, so if `R` never reaches a
//! REP count every stack value is a word over literal strings and `R`. Sizes
//! and step costs then depend on `|R|` alone, and when the output word
//! contains `R` the map `R ↦ output` is injective (lengths separate different
//! `|R|`, the first occurrence recovers `R`). When at most one READ prefix
//! yields such a word, the ball size follows by counting. Anything else falls
//! back to enumeration.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::bits::Bits;
use crate::pvm::{eval_instrs, string_to_nat, Budgets, Instr, Program, ProgramShape};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Seg {
    Lit(Bits),
    Var,
}

type Word = Vec<Seg>;

enum Sym {
    Word(Word),
    /// Halts abnormally for every remainder.
    Abort,
    /// The remainder reaches a REP count.
    Unsupported,
}

fn has_var(w: &Word) -> bool {
    w.contains(&Seg::Var)
}

fn append(w: &mut Word, tail: &Word) {
    for s in tail {
        match (w.last_mut(), s) {
            (Some(Seg::Lit(a)), Seg::Lit(b)) => a.extend_from(b),
            _ => w.push(s.clone()),
        }
    }
}

fn literal(w: &Word) -> Option<Bits> {
    let mut out = Bits::new();
    for s in w {
        match s {
            Seg::Lit(b) => out.extend_from(b),
            Seg::Var => return None,
        }
    }
    Some(out)
}

fn instantiate(w: &Word, r: &Bits) -> Bits {
    let mut out = Bits::new();
    for s in w {
        match s {
            Seg::Lit(b) => out.extend_from(b),
            Seg::Var => out.extend_from(r),
        }
    }
    out
}

fn sym_eval(instrs: &[Instr], prefix: &Bits, aux: &Bits, b: &Budgets) -> Sym {
    let max_len = b.max_string_len as usize;
    let mut stack: Vec<Word> = Vec::new();
    let mut read = 0;
    let mut seen_readall = false;
    for &i in instrs {
        match i {
            Instr::End => return Sym::Word(stack.pop().unwrap_or_default()),
            Instr::Zero | Instr::One => {
                let mut s = Bits::new();
                s.push(i == Instr::One);
                stack.push(vec![Seg::Lit(s)]);
            }
            Instr::Read => {
                if seen_readall || read >= prefix.len() {
                    return Sym::Abort;
                }
                stack.push(vec![Seg::Lit(prefix.slice(read, 1))]);
                read += 1;
            }
            Instr::ReadAll => {
                stack.push(if seen_readall { Vec::new() } else { vec![Seg::Var] });
                seen_readall = true;
            }
            Instr::Aux => stack.push(vec![Seg::Lit(aux.clone())]),
            Instr::Dup => match stack.last() {
                Some(t) => stack.push(t.clone()),
                None => return Sym::Abort,
            },
            Instr::Cat => {
                let (Some(rhs), Some(mut lhs)) = (stack.pop(), stack.pop()) else {
                    return Sym::Abort;
                };
                append(&mut lhs, &rhs);
                stack.push(lhs);
            }
            Instr::Rep => {
                let (Some(count), Some(base)) = (stack.pop(), stack.pop()) else {
                    return Sym::Abort;
                };
                let Some(count) = literal(&count) else {
                    return Sym::Unsupported;
                };
                let n = match string_to_nat(&count) {
                    Some(n) if n <= max_len as u128 + 1 => n as usize,
                    _ => return Sym::Unsupported,
                };
                let mut out = Word::new();
                for _ in 0..n {
                    append(&mut out, &base);
                }
                stack.push(out);
            }
        }
    }
    Sym::Abort
}

/// `|{f(d) : l(d) ≤ radius}|` with an empty auxiliary tape, or `None` when the
/// program is outside the countable shape.
pub(crate) fn ball_size_symbolic(f: &Program, radius: usize, b: &Budgets) -> Option<BigUint> {
    let shape = ProgramShape::of(f.instrs());
    if shape.never_halts() {
        return Some(BigUint::zero());
    }
    let reads = shape.reads_before_readall;
    let aux = Bits::new();
    if reads > radius {
        return Some(BigUint::zero());
    }
    if reads > 16 {
        return None;
    }
    if !shape.has_readall {
        let outs: BTreeSet<Bits> = Bits::all_of_length(reads)
            .filter_map(|d| eval_instrs(f.instrs(), &d, &aux, b).into_output())
            .collect();
        return Some(BigUint::from(outs.len()));
    }
    let mut family: Option<(Word, Vec<usize>)> = None;
    let mut constants: BTreeSet<Bits> = BTreeSet::new();
    for prefix in Bits::all_of_length(reads) {
        let word = match sym_eval(f.instrs(), &prefix, &aux, b) {
            Sym::Abort => continue,
            Sym::Unsupported => return None,
            Sym::Word(w) => w,
        };
        let ok_lens: Vec<usize> = (0..=radius - reads)
            .filter(|&m| {
                let d = prefix.concat(&Bits::filled(false, m));
                eval_instrs(f.instrs(), &d, &aux, b).output().is_some()
            })
            .collect();
        if ok_lens.is_empty() {
            continue;
        }
        if has_var(&word) {
            if family.is_some() {
                return None;
            }
            family = Some((word, ok_lens));
        } else {
            constants.insert(literal(&word).expect("no remainder in word"));
        }
    }
    let Some((word, ok_lens)) = family else {
        return Some(BigUint::from(constants.len()));
    };
    let vars = word.iter().filter(|s| **s == Seg::Var).count();
    let lit_len: usize = word
        .iter()
        .map(|s| match s {
            Seg::Lit(b) => b.len(),
            Seg::Var => 0,
        })
        .sum();
    let offset: usize = word
        .iter()
        .take_while(|s| **s != Seg::Var)
        .map(|s| match s {
            Seg::Lit(b) => b.len(),
            Seg::Var => 0,
        })
        .sum();
    let in_family = |c: &Bits| -> bool {
        if c.len() < lit_len || (c.len() - lit_len) % vars != 0 {
            return false;
        }
        let m = (c.len() - lit_len) / vars;
        ok_lens.contains(&m) && instantiate(&word, &c.slice(offset, m)) == *c
    };
    let mut total: BigUint = ok_lens.iter().map(|&m| BigUint::from(1u8) << m).sum();
    total += BigUint::from(constants.iter().filter(|c| !in_family(c)).count());
    Some(total)
}
