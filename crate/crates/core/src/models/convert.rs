//! Conversions between model classes and the description length of a model.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::One;

use super::{
    ball, distortion, CodeTable, Distortion, FiniteSetModel, FuncModel, Log2, Model, ModelError, PmfModel, Radius,
};
use crate::bits::Bits;
use crate::pvm::{encode_std, Budgets};

/// The uniform distribution on `s`.
pub fn set_to_pmf(s: &FiniteSetModel) -> PmfModel {
    let p = BigRational::new(BigInt::one(), BigInt::from(s.len()));
    PmfModel::new(s.elements().iter().map(|x| (x.clone(), p.clone())).collect()).expect("uniform pmf is valid")
}

/// Shannon-Fano code for `p`: each `y` gets a codeword of length `⌈log2 1/P(y)⌉`.
///
/// Support elements are taken by decreasing probability, ties by ascending
/// string, and each receives the least string of its length that extends no
/// earlier codeword. Lengths are nondecreasing in that order, so this is the
/// previous codeword plus one, padded with zeros.
pub fn pmf_to_func(p: &PmfModel) -> CodeTable {
    let mut order: Vec<(&Bits, &BigRational)> = p.support().iter().collect();
    order.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let mut entries = Vec::with_capacity(order.len());
    let mut prev: Option<Bits> = None;
    for (y, q) in order {
        let len = Log2::of(q.recip()).ceil() as usize;
        let cw = match prev {
            None => Bits::filled(false, len),
            Some(ref c) => {
                let mut next = c.increment().expect("Kraft sum of Shannon-Fano lengths is at most 1");
                next.extend_from(&Bits::filled(false, len - c.len()));
                next
            }
        };
        prev = Some(cw.clone());
        entries.push((cw, y.clone()));
    }
    CodeTable::new(entries).expect("canonical codewords are prefix-free")
}

/// `{y : distortion(y, f) ≤ distortion(x, f)}`, which contains `x`.
pub fn func_to_set(f: &FuncModel, x: &Bits, b: &Budgets) -> Result<FiniteSetModel, ModelError> {
    let m = Model::Func(f.clone());
    let r = match distortion(x, &m, b) {
        Distortion::Finite(l) => Radius::Log(l),
        Distortion::Infinite { cap } => {
            return Err(ModelError::NoPreimage {
                x: x.clone(),
                cap: cap.unwrap_or(0),
            })
        }
    };
    FiniteSetModel::new(ball(&m, &r, b)?.members)
}

fn nat_bits(n: &BigUint) -> Bits {
    let s = (n + 1u8).to_str_radix(2);
    s[1..].parse().expect("binary digits")
}

fn std_len(x: &Bits) -> u64 {
    encode_std(x).len() as u64
}

fn rational_len(q: &BigRational) -> u64 {
    let num = q.numer().to_biguint().expect("positive");
    let den = q.denom().to_biguint().expect("positive");
    debug_assert_eq!(q.numer().sign(), Sign::Plus);
    std_len(&nat_bits(&num)) + std_len(&nat_bits(&den))
}

/// Length in bits of the canonical serialization of a model.
///
/// * set: `Σ l(std(y))`
/// * pmf: `Σ l(std(y)) + l(std(num)) + l(std(den))`, numbers as strings
/// * program: its encoded length
/// * code table: `Σ l(std(codeword)) + l(std(y))`
pub fn model_dl(m: &Model) -> u64 {
    match m {
        Model::Set(s) => s.elements().iter().map(std_len).sum(),
        Model::Pmf(p) => p.support().iter().map(|(y, q)| std_len(y) + rational_len(q)).sum(),
        Model::Func(FuncModel::Program(f)) => f.bit_len() as u64,
        Model::Func(FuncModel::Table(t)) => t.entries().iter().map(|(c, y)| std_len(c) + std_len(y)).sum(),
    }
}
