//! Statistic-level quantities read off complexity tables.
//!
//! The slack `c` makes the usual "equal up to a constant" explicit: a program
//! `q` is a sufficient statistic for `x` when it has a data string `d` with
//! `l(q) + l(d) ≤ K_T(x) + c`. Sophistication is the shortest such program.
//! All results are relative to the PVM-1 model class and the table's budgets;
//! strings without an entry are never assigned a complexity.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::Bits;
use crate::enumerate::{Complexity, Entry, TableCache, TableView};
use crate::pvm::{decode_program, Budgets, Program};
use crate::search::min_preimage;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("string {} is not reachable within the table budget", .0.display_eps())]
    UnknownString(Bits),
    #[error("no string of length {0} is reachable within the table budget")]
    NoCoverage(usize),
    #[error(transparent)]
    Table(#[from] Box<crate::Error>),
}

fn entry<'t, T: TableView + ?Sized>(t: &'t T, x: &Bits) -> Result<&'t Entry, StatsError> {
    t.entry(x).ok_or_else(|| StatsError::UnknownString(x.clone()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SufficiencyParams {
    /// Slack in bits.
    pub c: u32,
}

impl SufficiencyParams {
    pub fn new(c: u32) -> Self {
        SufficiencyParams { c }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SophResult {
    pub soph: u32,
    pub witness_program: Program,
    pub witness_data: Bits,
    pub k: u32,
    pub c_used: u32,
}

/// One sample `(α, λ_x(α), h_x(α))` of the structure function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StructurePoint {
    pub alpha: u32,
    /// Shortest two-part code with program length at most `alpha`.
    pub lambda: Option<u32>,
    /// Data length of the pair attaining `lambda` (the shortest one on ties).
    pub h: Option<u32>,
}

/// Minimal `(l(q), l(d))` pairs realizing `x`.
pub fn pareto_pairs<T: TableView + ?Sized>(t: &T, x: &Bits) -> Result<Vec<(u32, u32)>, StatsError> {
    Ok(entry(t, x)?
        .pareto
        .iter()
        .map(|p| (p.program_bits, p.data_bits))
        .collect())
}

/// Whether `q` is a sufficient statistic for `x` at slack `p.c`.
pub fn is_sufficient<T: TableView + ?Sized>(
    t: &T,
    q: &Program,
    x: &Bits,
    p: SufficiencyParams,
) -> Result<bool, StatsError> {
    let k = entry(t, x)?.k;
    let b = t.budgets();
    let Some(cap) = b.data_cap_for(q.bit_len()) else {
        return Ok(false);
    };
    Ok(min_preimage(q, x, t.aux(), b, cap).is_some_and(|d| (q.bit_len() + d.len()) as u64 <= k as u64 + p.c as u64))
}

/// Shortest program among pairs within `K_T(x) + c`, with its canonical pair.
pub fn sophistication<T: TableView + ?Sized>(t: &T, x: &Bits, p: SufficiencyParams) -> Result<SophResult, StatsError> {
    let e = entry(t, x)?;
    let limit = e.k as u64 + p.c as u64;
    // The frontier is sorted by program length, and any feasible pair is
    // dominated by a frontier point that is also feasible.
    let w = e
        .pareto
        .iter()
        .find(|pt| pt.total() as u64 <= limit)
        .expect("the optimal pair is feasible at any slack");
    Ok(SophResult {
        soph: w.program_bits,
        witness_program: decode_program(&w.program).expect("table witnesses are valid programs"),
        witness_data: w.data.clone(),
        k: e.k,
        c_used: p.c,
    })
}

/// `λ_x(α)` and `h_x(α)` for `α = 0..=max_program_bits`.
pub fn structure_lambda<T: TableView + ?Sized>(t: &T, x: &Bits) -> Result<Vec<StructurePoint>, StatsError> {
    let e = entry(t, x)?;
    let max_alpha = t.budgets().max_program_bits.min(t.budgets().max_pair_bits);
    Ok((0..=max_alpha)
        .map(|alpha| {
            // Ties keep the later frontier point, which has the shorter data.
            let best = e
                .pareto
                .iter()
                .take_while(|pt| pt.program_bits <= alpha)
                .fold(None::<(u32, u32)>, |acc, pt| match acc {
                    Some((lam, _)) if lam < pt.total() => acc,
                    _ => Some((pt.total(), pt.data_bits)),
                });
            StructurePoint {
                alpha,
                lambda: best.map(|b| b.0),
                h: best.map(|b| b.1),
            }
        })
        .collect())
}

/// Number of pairs attaining `K_T(x)`.
pub fn count_optimal_pairs<T: TableView + ?Sized>(t: &T, x: &Bits) -> Result<u64, StatsError> {
    Ok(entry(t, x)?.optimal_count)
}

/// What the conditional table is conditioned on in [`mutual_info`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum MutualMode {
    /// The auxiliary tape holds `x` itself.
    #[default]
    Plain,
    /// The auxiliary tape holds the bits `q·d` of the canonical witness for `x`.
    Witness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MutualInfo {
    pub k_y: u32,
    pub k_y_given_x: u32,
    /// `k_y − k_y_given_x`; may be negative at desk scale.
    pub value: i64,
    pub mode: MutualMode,
}

/// Information in `x` about `y`: `K_T(y) − K_T(y | x)`.
pub fn mutual_info(
    cache: &TableCache,
    x: &Bits,
    y: &Bits,
    b: &Budgets,
    mode: MutualMode,
) -> Result<MutualInfo, StatsError> {
    let wrap = |e: crate::Error| StatsError::Table(Box::new(e));
    let plain = cache.table(b, &Bits::new()).map_err(wrap)?;
    let k_y = entry(&*plain, y)?.k;
    let aux = match mode {
        MutualMode::Plain => x.clone(),
        MutualMode::Witness => {
            let e = entry(&*plain, x)?;
            e.witness_program.concat(&e.witness_data)
        }
    };
    let k_y_given_x = match cache.k_cond(y, &aux, b).map_err(wrap)? {
        Complexity::Known(k) => k,
        Complexity::Unknown { .. } => unreachable!("conditional tables dominate the unconditional one"),
    };
    Ok(MutualInfo {
        k_y,
        k_y_given_x,
        value: k_y as i64 - k_y_given_x as i64,
        mode,
    })
}

/// `I(x:y) − I(y:x)`, a diagnostic for how far symmetry of information is off.
pub fn symmetry_gap(cache: &TableCache, x: &Bits, y: &Bits, b: &Budgets, mode: MutualMode) -> Result<i64, StatsError> {
    Ok(mutual_info(cache, x, y, b, mode)?.value - mutual_info(cache, y, x, b, mode)?.value)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxSoph {
    pub x: Bits,
    pub soph: u32,
    /// Length-`n` strings with a table entry.
    pub present: usize,
    /// Length-`n` strings skipped for lack of an entry.
    pub absent: u128,
}

/// The most sophisticated length-`n` string in the table (lex-least on ties).
pub fn max_soph_of_length<T: TableView + ?Sized>(t: &T, n: usize, p: SufficiencyParams) -> Result<MaxSoph, StatsError> {
    let strings = t.strings_of_length(n);
    let best = strings
        .par_iter()
        .map(|x| (sophistication(t, x, p).map(|r| r.soph).unwrap_or(0), *x))
        .reduce_with(|a, b| match a.0.cmp(&b.0) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        })
        .ok_or(StatsError::NoCoverage(n))?;
    let total = if n < 128 { 1u128 << n } else { u128::MAX };
    Ok(MaxSoph {
        x: best.1.clone(),
        soph: best.0,
        present: strings.len(),
        absent: total - strings.len() as u128,
    })
}

/// CSV header for structure-function rows.
pub const STRUCTFN_COLUMNS: &str = "x,alpha,lambda,h";
/// CSV header for sophistication rows.
pub const SOPH_COLUMNS: &str = "x,k,c,soph,witness_q,witness_d";

fn opt(v: Option<u32>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Rows for [`STRUCTFN_COLUMNS`]; unknown values are empty fields.
pub fn structure_csv_rows(x: &Bits, points: &[StructurePoint]) -> Vec<String> {
    points
        .iter()
        .map(|p| format!("{x},{},{},{}", p.alpha, opt(p.lambda), opt(p.h)))
        .collect()
}

/// Row for [`SOPH_COLUMNS`].
pub fn soph_csv_row(x: &Bits, r: &SophResult) -> String {
    format!(
        "{x},{},{},{},{},{}",
        r.k,
        r.c_used,
        r.soph,
        r.witness_program.bits(),
        r.witness_data
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::enumerate::{build_table, BuildOptions};
    use crate::pvm::Instr::*;

    fn t16() -> crate::enumerate::ComplexityTable {
        build_table(&Budgets::with_pair_bits(16), &Bits::new()).unwrap()
    }

    #[test]
    fn empty_string_statistics() {
        let t = t16();
        let eps = Bits::new();
        assert_eq!(pareto_pairs(&t, &eps).unwrap(), vec![(2, 0)]);
        assert_eq!(sophistication(&t, &eps, SufficiencyParams::new(0)).unwrap().soph, 2);
        assert_eq!(count_optimal_pairs(&t, &eps).unwrap(), 1);
        let curve = structure_lambda(&t, &eps).unwrap();
        assert_eq!(curve[0].lambda, None);
        assert_eq!(curve[1].lambda, None);
        assert!(curve[2..].iter().all(|p| p.lambda == Some(2) && p.h == Some(0)));
    }

    #[test]
    fn unknown_string_is_an_error() {
        let t = t16();
        let x = bits(&"0110".repeat(5));
        assert!(matches!(
            sophistication(&t, &x, SufficiencyParams::default()),
            Err(StatsError::UnknownString(_))
        ));
        assert!(structure_lambda(&t, &x).is_err());
        assert!(pareto_pairs(&t, &x).is_err());
        assert!(count_optimal_pairs(&t, &x).is_err());
    }

    #[test]
    fn identity_is_sufficient_for_incompressible_strings() {
        let t = t16();
        let id = Program::identity();
        let mut checked = 0;
        for (x, e) in &t.entries {
            if e.k as usize == 6 + x.len() {
                assert!(is_sufficient(&t, &id, x, SufficiencyParams::new(0)).unwrap());
                checked += 1;
            }
            let w = decode_program(&e.witness_program).unwrap();
            assert!(is_sufficient(&t, &w, x, SufficiencyParams::new(0)).unwrap());
        }
        assert!(checked > 0);
    }

    #[test]
    fn single_bits_have_literal_programs() {
        let t = build_table(&Budgets::with_pair_bits(7), &Bits::new()).unwrap();
        let m = max_soph_of_length(&t, 1, SufficiencyParams::new(0)).unwrap();
        assert_eq!((m.soph, m.present, m.absent), (5, 2, 0));
        assert_eq!(m.x, bits("0"));
        let m0 = max_soph_of_length(&t, 0, SufficiencyParams::new(0)).unwrap();
        assert_eq!((m0.x, m0.soph), (Bits::new(), 2));
        assert!(matches!(
            max_soph_of_length(&t, 30, SufficiencyParams::new(0)),
            Err(StatsError::NoCoverage(30))
        ));
    }

    #[test]
    fn soph_is_monotone_in_slack() {
        let t = t16();
        for x in t.entries.keys() {
            let mut prev = u32::MAX;
            for c in 0..6 {
                let r = sophistication(&t, x, SufficiencyParams::new(c)).unwrap();
                assert!(r.soph <= prev);
                assert!(r.soph <= r.k);
                assert!(r.witness_program.bit_len() + r.witness_data.len() <= (r.k + c) as usize);
                assert!(is_sufficient(&t, &r.witness_program, x, SufficiencyParams::new(c)).unwrap());
                prev = r.soph;
            }
        }
    }

    #[test]
    fn structure_function_drops_at_sophistication() {
        let t = t16();
        for x in t.entries.keys() {
            let k = t.get(x).unwrap().k;
            let soph = sophistication(&t, x, SufficiencyParams::new(0)).unwrap().soph;
            let curve = structure_lambda(&t, x).unwrap();
            assert_eq!(curve.last().unwrap().lambda, Some(k));
            for p in &curve {
                if p.alpha >= soph {
                    assert_eq!(p.lambda, Some(k));
                }
            }
            if soph > 0 {
                assert!(curve[soph as usize - 1].lambda.is_none_or(|l| l > k));
            }
        }
    }

    #[test]
    fn repeat_program_sufficiency_with_targeted_table() {
        let x = bits(&"10".repeat(13));
        let b = Budgets::new(32, 21, 26, Budgets::DEFAULT_STEPS, Budgets::DEFAULT_STRING_LEN).unwrap();
        let tt =
            crate::search::TargetedTable::build(&b, &Bits::new(), std::slice::from_ref(&x), BuildOptions::default())
                .unwrap();
        let id = Program::identity();
        assert!(!is_sufficient(&tt, &id, &x, SufficiencyParams::new(10)).unwrap());
        assert!(is_sufficient(&tt, &id, &x, SufficiencyParams::new(11)).unwrap());
        let rep = Program::from_body(&[One, Zero, Cat, ReadAll, Rep]).unwrap();
        assert!(is_sufficient(&tt, &rep, &x, SufficiencyParams::new(0)).unwrap());
    }

    #[test]
    fn csv_rows() {
        let t = t16();
        let eps = Bits::new();
        let r = sophistication(&t, &eps, SufficiencyParams::new(0)).unwrap();
        assert_eq!(soph_csv_row(&eps, &r), ",2,0,2,00,");
        let rows = structure_csv_rows(&eps, &structure_lambda(&t, &eps).unwrap());
        assert_eq!(rows[0], ",0,,");
        assert_eq!(rows[2], ",2,2,0");
    }
}
