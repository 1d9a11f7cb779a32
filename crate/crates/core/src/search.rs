//! Preimage search: the shortest data that makes a program output a target.
//!
//! Exhaustive search over data strings is exponential in the data length. For
//! a fixed target `x` most of that space is irrelevant. A data string splits
//! into the bits taken by READs before the first READALL (enumerated
//! exhaustively, there are few of them) and the remainder `R` pushed by
//! READALL. Every occurrence of `R` in the computation is either
//!
//! * copied into the output, so `R` is a substring of `x`;
//! * part of a REP count whose base is nonempty, so `|R| ≤ log2(L + 1)` where
//!   `L` is the string-size cap (otherwise the repetition exceeds `L`); or
//! * dead: erased by an empty base, a zero count, or left below the top of
//!   stack at END.
//!
//! If every occurrence is dead then `R = ε` yields the same output with no
//! larger operand or step cost. So the shortest working `R`, and every working
//! `R` of that length, lies in [`data_candidates`]. The tests cross-check this
//! against exhaustive search and against full tables.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::bits::Bits;
use crate::enumerate::{programs_upto, Acc, BuildOptions, Entry, EnumerateError, TableView};
use crate::pvm::{eval_instrs, Budgets, EvalOutcome, Program, ProgramShape};

/// Every possible READALL remainder of a shortest preimage of `x`, canonical order.
pub fn data_candidates(x: &Bits, b: &Budgets) -> Vec<Bits> {
    let mut out: Vec<Bits> = Vec::new();
    for start in 0..=x.len() {
        for len in 0..=(x.len() - start) {
            out.push(x.slice(start, len));
        }
    }
    let short = usize::BITS as usize - 1 - (b.max_string_len as usize + 1).leading_zeros() as usize;
    out.extend(Bits::all_upto(short.min(20)));
    out.sort();
    out.dedup();
    out
}

/// A program prepared for repeated preimage queries against one target.
pub struct Preimages<'a> {
    program: &'a Program,
    shape: ProgramShape,
    target: &'a Bits,
    aux: &'a Bits,
    budgets: &'a Budgets,
    candidates: &'a [Bits],
}

impl<'a> Preimages<'a> {
    pub fn new(
        program: &'a Program,
        target: &'a Bits,
        aux: &'a Bits,
        budgets: &'a Budgets,
        candidates: &'a [Bits],
    ) -> Self {
        Preimages {
            program,
            shape: ProgramShape::of(program.instrs()),
            target,
            aux,
            budgets,
            candidates,
        }
    }

    fn hits(&self, d: &Bits) -> bool {
        matches!(
            eval_instrs(self.program.instrs(), d, self.aux, self.budgets),
            EvalOutcome::Ok { ref output, .. } if output == self.target
        )
    }

    /// Working data strings of exactly `len` bits, in lexicographic order.
    pub fn of_length(&self, len: usize) -> Box<dyn Iterator<Item = Bits> + '_> {
        let reads = self.shape.reads_before_readall;
        if self.shape.never_halts() || !self.shape.accepts_data_len(len) || reads >= 63 {
            return Box::new(std::iter::empty());
        }
        if !self.shape.has_readall {
            return Box::new(Bits::all_of_length(reads).filter(move |d| self.hits(d)));
        }
        let rest = len - reads;
        let lo = self.candidates.partition_point(|c| c.len() < rest);
        let hi = self.candidates.partition_point(|c| c.len() <= rest);
        let tails = &self.candidates[lo..hi];
        Box::new(
            Bits::all_of_length(reads)
                .flat_map(move |p| tails.iter().map(move |r| p.concat(r)))
                .filter(move |d| self.hits(d)),
        )
    }

    /// Shortest (then lexicographically least) working data of at most `max_len` bits.
    pub fn shortest(&self, max_len: usize) -> Option<Bits> {
        if self.shape.never_halts() {
            return None;
        }
        let reads = self.shape.reads_before_readall;
        let top = if self.shape.has_readall {
            max_len
        } else {
            reads.min(max_len)
        };
        (reads..=top).find_map(|len| self.of_length(len).next())
    }
}

/// Shortest data `d` with `l(d) ≤ max_len` such that `program(d) = x`.
pub fn min_preimage(program: &Program, x: &Bits, aux: &Bits, b: &Budgets, max_len: usize) -> Option<Bits> {
    let cands = data_candidates(x, b);
    Preimages::new(program, x, aux, b, &cands).shortest(max_len)
}

/// Reference implementation of [`min_preimage`]: tries every data string.
pub fn min_preimage_exhaustive(program: &Program, x: &Bits, aux: &Bits, b: &Budgets, max_len: usize) -> Option<Bits> {
    Bits::all_upto(max_len).find(|d| eval_instrs(program.instrs(), d, aux, b).output() == Some(x))
}

/// Table entries for a chosen set of strings, computed without tabulating
/// every output. Entries equal those of the full table at the same budgets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetedTable {
    pub budgets: Budgets,
    pub aux: Bits,
    pub entries: BTreeMap<Bits, Entry>,
}

impl TargetedTable {
    pub fn build(b: &Budgets, aux: &Bits, targets: &[Bits], opts: BuildOptions) -> Result<Self, EnumerateError> {
        b.validate()?;
        let mut targets = targets.to_vec();
        targets.sort();
        targets.dedup();
        let candidates: Vec<Vec<Bits>> = targets.iter().map(|x| data_candidates(x, b)).collect();
        let accs: Vec<Mutex<Acc>> = targets.iter().map(|_| Mutex::new(Acc::new())).collect();
        let programs = programs_upto(b.max_program_bits.min(b.max_pair_bits) as usize);
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers.max(1))
            .build()
            .map_err(|e| EnumerateError::Pool(e.to_string()))?
            .install(|| {
                programs.par_iter().for_each(|q| {
                    let Some(cap) = b.data_cap_for(q.bit_len()) else { return };
                    for (i, x) in targets.iter().enumerate() {
                        let search = Preimages::new(q, x, aux, b, &candidates[i]);
                        if let Some(d) = search.shortest(cap) {
                            let count = search.of_length(d.len()).count() as u64;
                            accs[i].lock().expect("acc lock").add(q.bits(), &d, count);
                        }
                    }
                });
            });
        let entries = targets
            .into_iter()
            .zip(accs)
            .filter_map(|(x, acc)| acc.into_inner().expect("acc lock").finish().map(|e| (x, e)))
            .collect();
        Ok(TargetedTable {
            budgets: *b,
            aux: aux.clone(),
            entries,
        })
    }
}

impl TableView for TargetedTable {
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
        self.entries.keys().filter(|x| x.len() == n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::pvm::Instr::*;
    use proptest::prelude::*;

    #[test]
    fn repeat_program_needs_three_bits() {
        let p = Program::from_body(&[One, Zero, Cat, ReadAll, Rep]).unwrap();
        let x = bits(&"10".repeat(13));
        let b = Budgets::with_pair_bits(32);
        assert_eq!(min_preimage(&p, &x, &Bits::new(), &b, 26), Some(bits("110")));
        assert_eq!(min_preimage_exhaustive(&p, &x, &Bits::new(), &b, 8), Some(bits("110")));
    }

    #[test]
    fn identity_preimage_is_the_string() {
        let x = bits("10110011100011110000101");
        let b = Budgets::with_pair_bits(32);
        assert_eq!(
            min_preimage(&Program::identity(), &x, &Bits::new(), &b, 30),
            Some(x.clone())
        );
        assert_eq!(min_preimage(&Program::identity(), &x, &Bits::new(), &b, 10), None);
    }

    #[test]
    fn candidates_cover_short_strings() {
        let c = data_candidates(&bits("0110"), &Budgets::with_pair_bits(8));
        // log2(64 + 1) rounds down to 6.
        assert!(c.contains(&bits("111111")));
        assert!(!c.contains(&bits("1111111")));
        assert!(c.contains(&bits("0110")));
    }

    fn arb_program() -> impl Strategy<Value = Program> {
        prop::collection::vec(prop::sample::select(crate::pvm::Instr::ALL[1..].to_vec()), 0..7)
            .prop_map(|body| Program::from_body(&body).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn shortest_matches_exhaustive(
            p in arb_program(),
            d in "[01]{0,7}",
            aux in "[01]{0,3}",
            len_cap in 8u32..16,
        ) {
            let b = Budgets { max_string_len: len_cap, ..Budgets::with_pair_bits(24) };
            let aux = bits(&aux);
            // Aim at something the program can actually produce.
            let target = eval_instrs(p.instrs(), &bits(&d), &aux, &b).into_output().unwrap_or_else(|| bits(&d));
            let fast = min_preimage(&p, &target, &aux, &b, 9);
            let slow = min_preimage_exhaustive(&p, &target, &aux, &b, 9);
            prop_assert_eq!(&fast, &slow);
            if let Some(d) = slow {
                let cands = data_candidates(&target, &b);
                let pre = Preimages::new(&p, &target, &aux, &b, &cands);
                let exhaustive = Bits::all_of_length(d.len())
                    .filter(|e| eval_instrs(p.instrs(), e, &aux, &b).output() == Some(&target))
                    .count();
                prop_assert_eq!(pre.of_length(d.len()).count(), exhaustive);
            }
        }
    }
}
