//! Model classes: finite sets, finite-support probability mass functions and
//! total functions (programs or finite code tables), with distortion, distortion
//! balls, randomness deficiency and the conversions between classes.
//!
//! Models evaluate programs with an empty auxiliary tape.

mod convert;
mod family;
pub mod format;
mod log2;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::Bits;
use crate::enumerate::{Complexity, TableView};
use crate::pvm::{eval_instrs, Budgets, Program, ProgramShape};
use crate::search::min_preimage;

pub use convert::{func_to_set, model_dl, pmf_to_func, set_to_pmf};
pub use log2::Log2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a finite set model needs at least one element")]
    EmptySet,
    #[error("{0} appears twice in the model")]
    Duplicate(Bits),
    #[error("probability of {0} is not positive")]
    NonPositive(Bits),
    #[error("probabilities sum to {0}, not 1")]
    BadSum(BigRational),
    #[error("codeword {0} is a prefix of codeword {1}")]
    NotPrefixFree(Bits, Bits),
    #[error("{0} is not in the distortion ball")]
    NotInBall(Bits),
    #[error("no data of at most {cap} bits makes the model output {x}")]
    NoPreimage { x: Bits, cap: usize },
    #[error("radius {radius} exceeds the data budget of {max} bits")]
    RadiusTooLarge { radius: String, max: u32 },
    #[error("radius must be nonnegative")]
    NegativeRadius,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A finite set of strings, kept sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteSetModel {
    #[serde(serialize_with = "ser_bits_vec")]
    elements: Vec<Bits>,
}

impl FiniteSetModel {
    /// Sorts and deduplicates `elements`.
    pub fn new(mut elements: Vec<Bits>) -> Result<Self, ModelError> {
        if elements.is_empty() {
            return Err(ModelError::EmptySet);
        }
        elements.sort();
        elements.dedup();
        Ok(FiniteSetModel { elements })
    }

    pub fn elements(&self) -> &[Bits] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &Bits) -> bool {
        self.elements.binary_search(x).is_ok()
    }
}

/// A probability mass function with finite support and exact rational values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PmfModel {
    support: BTreeMap<Bits, BigRational>,
}

impl PmfModel {
    pub fn new(entries: Vec<(Bits, BigRational)>) -> Result<Self, ModelError> {
        let mut support = BTreeMap::new();
        let mut sum = BigRational::zero();
        for (x, p) in entries {
            if !p.is_positive() {
                return Err(ModelError::NonPositive(x));
            }
            sum += &p;
            if support.insert(x.clone(), p).is_some() {
                return Err(ModelError::Duplicate(x));
            }
        }
        if !sum.is_one() {
            return Err(ModelError::BadSum(sum));
        }
        Ok(PmfModel { support })
    }

    pub fn support(&self) -> &BTreeMap<Bits, BigRational> {
        &self.support
    }

    pub fn prob(&self, x: &Bits) -> Option<&BigRational> {
        self.support.get(x)
    }
}

/// A finite lookup table from a prefix-free set of codewords to strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeTable {
    map: BTreeMap<Bits, Bits>,
}

impl CodeTable {
    pub fn new(entries: Vec<(Bits, Bits)>) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for (cw, y) in entries {
            if map.insert(cw.clone(), y).is_some() {
                return Err(ModelError::Duplicate(cw));
            }
        }
        let words: Vec<&Bits> = map.keys().collect();
        for a in &words {
            for b in &words {
                if a != b && b.starts_with(a) {
                    return Err(ModelError::NotPrefixFree((*a).clone(), (*b).clone()));
                }
            }
        }
        Ok(CodeTable { map })
    }

    pub fn entries(&self) -> &BTreeMap<Bits, Bits> {
        &self.map
    }

    pub fn lookup(&self, codeword: &Bits) -> Option<&Bits> {
        self.map.get(codeword)
    }

    /// Shortest (then least) codeword mapping to `y`.
    pub fn codeword_of(&self, y: &Bits) -> Option<&Bits> {
        self.map.iter().filter(|(_, v)| *v == y).map(|(c, _)| c).min()
    }

    /// Exact `Σ 2^-l(codeword)`.
    pub fn kraft_sum(&self) -> BigRational {
        self.map
            .keys()
            .map(|c| BigRational::new(BigInt::one(), BigInt::one() << c.len()))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FuncModel {
    Program(Program),
    Table(CodeTable),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Model {
    Set(FiniteSetModel),
    Pmf(PmfModel),
    Func(FuncModel),
}

impl From<FiniteSetModel> for Model {
    fn from(s: FiniteSetModel) -> Model {
        Model::Set(s)
    }
}

impl From<PmfModel> for Model {
    fn from(p: PmfModel) -> Model {
        Model::Pmf(p)
    }
}

impl From<Program> for Model {
    fn from(p: Program) -> Model {
        Model::Func(FuncModel::Program(p))
    }
}

impl From<CodeTable> for Model {
    fn from(t: CodeTable) -> Model {
        Model::Func(FuncModel::Table(t))
    }
}

/// Distortion of a string with respect to a model, in bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distortion {
    Finite(Log2),
    /// Outside the model. For programs `cap` is the data length searched, so
    /// this only says the distortion exceeds `cap`.
    Infinite {
        cap: Option<usize>,
    },
}

impl Distortion {
    pub fn finite(&self) -> Option<&Log2> {
        match self {
            Distortion::Finite(l) => Some(l),
            Distortion::Infinite { .. } => None,
        }
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distortion::Finite(l) => write!(f, "{l}"),
            Distortion::Infinite { cap: Some(c) } => write!(f, ">{c}"),
            Distortion::Infinite { cap: None } => f.write_str("inf"),
        }
    }
}

/// A ball radius: a nonnegative rational, or the logarithm a distortion produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Radius {
    Bits(BigRational),
    Log(Log2),
}

impl Radius {
    pub fn bits(n: u32) -> Radius {
        Radius::Bits(BigRational::from_integer(n.into()))
    }

    fn check(&self) -> Result<(), ModelError> {
        match self {
            Radius::Bits(r) if r.is_negative() => Err(ModelError::NegativeRadius),
            Radius::Log(l) if l.cmp_int(0) == Ordering::Less => Err(ModelError::NegativeRadius),
            _ => Ok(()),
        }
    }

    /// `d ≤ r`, exactly.
    pub fn admits(&self, d: &Log2) -> bool {
        match self {
            Radius::Bits(r) => d.cmp_rational(r) != Ordering::Greater,
            Radius::Log(l) => d <= l,
        }
    }

    /// Largest integer not above the radius.
    pub fn floor(&self) -> i64 {
        match self {
            Radius::Bits(r) => r.floor().to_integer().to_i64().expect("radius fits in i64"),
            Radius::Log(l) => match l.exact_integer() {
                Some(m) => m,
                None => l.ceil() - 1,
            },
        }
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Bits(r) => write!(f, "{r}"),
            Radius::Log(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistortionBall {
    pub center: Model,
    pub radius: Radius,
    pub members: Vec<Bits>,
}

/// Distortion with the default data search cap of `b.max_data_bits`.
pub fn distortion(x: &Bits, m: &Model, b: &Budgets) -> Distortion {
    distortion_within(x, m, b, b.max_data_bits as usize)
}

/// Distortion, searching program data up to `cap` bits.
pub fn distortion_within(x: &Bits, m: &Model, b: &Budgets, cap: usize) -> Distortion {
    match m {
        Model::Set(s) if s.contains(x) => Distortion::Finite(Log2::of_usize(s.len())),
        Model::Set(_) => Distortion::Infinite { cap: None },
        Model::Pmf(p) => match p.prob(x) {
            Some(q) => Distortion::Finite(Log2::of(q.recip())),
            None => Distortion::Infinite { cap: None },
        },
        Model::Func(FuncModel::Table(t)) => match t.codeword_of(x) {
            Some(c) => Distortion::Finite(Log2::bits(c.len() as u32)),
            None => Distortion::Infinite { cap: None },
        },
        Model::Func(FuncModel::Program(f)) => match min_preimage(f, x, &Bits::new(), b, cap) {
            Some(d) => Distortion::Finite(Log2::bits(d.len() as u32)),
            None => Distortion::Infinite { cap: Some(cap) },
        },
    }
}

fn program_radius(r: &Radius, b: &Budgets) -> Result<Option<usize>, ModelError> {
    r.check()?;
    let n = r.floor();
    if n < 0 {
        return Ok(None);
    }
    if n > b.max_data_bits as i64 {
        return Err(ModelError::RadiusTooLarge {
            radius: r.to_string(),
            max: b.max_data_bits,
        });
    }
    Ok(Some(n as usize))
}

/// Every output of `f` on data of at most `radius` bits, sorted.
fn program_outputs(f: &Program, radius: usize, b: &Budgets) -> Vec<Bits> {
    let shape = ProgramShape::of(f.instrs());
    if shape.never_halts() {
        return Vec::new();
    }
    let aux = Bits::new();
    let outs: BTreeSet<Bits> = (0..=radius)
        .filter(|&len| shape.accepts_data_len(len))
        .flat_map(|len| {
            (0..1u64 << len)
                .into_par_iter()
                .filter_map(|v| eval_instrs(f.instrs(), &Bits::from_u64(v, len), &aux, b).into_output())
                .collect::<BTreeSet<Bits>>()
        })
        .collect();
    outs.into_iter().collect()
}

/// `B_M(r) = {y : distortion(y, M) ≤ r}` with an explicit member list.
pub fn ball(m: &Model, r: &Radius, b: &Budgets) -> Result<DistortionBall, ModelError> {
    r.check()?;
    let members = match m {
        Model::Set(s) => {
            if r.admits(&Log2::of_usize(s.len())) {
                s.elements().to_vec()
            } else {
                Vec::new()
            }
        }
        Model::Pmf(p) => p
            .support()
            .iter()
            .filter(|(_, q)| r.admits(&Log2::of(q.recip())))
            .map(|(y, _)| y.clone())
            .collect(),
        Model::Func(FuncModel::Table(t)) => {
            let set: BTreeSet<Bits> = t
                .entries()
                .iter()
                .filter(|(c, _)| r.admits(&Log2::bits(c.len() as u32)))
                .map(|(_, y)| y.clone())
                .collect();
            set.into_iter().collect()
        }
        Model::Func(FuncModel::Program(f)) => match program_radius(r, b)? {
            Some(n) => program_outputs(f, n, b),
            None => Vec::new(),
        },
    };
    Ok(DistortionBall {
        center: m.clone(),
        radius: r.clone(),
        members,
    })
}

/// `|B_M(r)|`. Program balls are counted without listing members when the
/// program's shape allows, which permits radii above the data budget.
pub fn ball_size(m: &Model, r: &Radius, b: &Budgets) -> Result<BigUint, ModelError> {
    if let Model::Func(FuncModel::Program(f)) = m {
        r.check()?;
        let n = r.floor();
        if n < 0 {
            return Ok(BigUint::zero());
        }
        if let Some(size) = family::ball_size_symbolic(f, n as usize, b) {
            return Ok(size);
        }
    }
    Ok(BigUint::from(ball(m, r, b)?.members.len()))
}

/// Randomness deficiency `log2|B| − K̂` where `K̂ = min(k, ⌈log2|B|⌉ + 1)`.
///
/// `K̂` is an upper bound on the conditional complexity (an index into the
/// ball, preceded by its length), so the value is a lower bound on the true
/// deficiency. A string missing from the table counts as `k = ∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deficiency {
    pub radius: Radius,
    pub ball_size: BigUint,
    pub k: Complexity,
    pub index_bound: u32,
    pub k_hat: u32,
}

impl Deficiency {
    pub fn log_ball(&self) -> Log2 {
        Log2::of_int(&self.ball_size)
    }

    pub fn to_f64(&self) -> f64 {
        self.log_ball().to_f64() - self.k_hat as f64
    }

    /// `|δ| ≤ θ`, exactly.
    pub fn within(&self, theta: &BigRational) -> bool {
        let k = BigRational::from_integer(self.k_hat.into());
        let lb = self.log_ball();
        lb.cmp_rational(&(&k + theta)) != Ordering::Greater && lb.cmp_rational(&(&k - theta)) != Ordering::Less
    }

    /// Exact comparison of `δ` with the rational `v`.
    pub fn cmp_value(&self, v: &BigRational) -> Ordering {
        self.log_ball()
            .cmp_rational(&(v + BigRational::from_integer(self.k_hat.into())))
    }
}

impl fmt::Display for Deficiency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.log_ball().exact_integer() {
            Some(m) => write!(f, "{}", m - self.k_hat as i64),
            None => write!(f, "log2({}) - {}", self.ball_size, self.k_hat),
        }
    }
}

/// Deficiency of `x` in `B_M(r)`. `r` defaults to the distortion of `x`,
/// searched up to the larger of the data budget and the string-size cap.
pub fn deficiency<T: TableView + ?Sized>(
    t: &T,
    x: &Bits,
    m: &Model,
    r: Option<Radius>,
) -> Result<Deficiency, ModelError> {
    let b = t.budgets();
    let r = match r {
        Some(r) => r,
        None => match distortion_within(x, m, b, b.max_data_bits.max(b.max_string_len) as usize) {
            Distortion::Finite(l) => Radius::Log(l),
            Distortion::Infinite { .. } => return Err(ModelError::NotInBall(x.clone())),
        },
    };
    r.check()?;
    let cap = r.floor().max(0) as usize;
    match distortion_within(x, m, b, cap) {
        Distortion::Finite(l) if r.admits(&l) => {}
        _ => return Err(ModelError::NotInBall(x.clone())),
    }
    let size = ball_size(m, &r, b)?;
    let index_bound = Log2::of_int(&size).ceil() as u32 + 1;
    let k = t.k(x);
    let k_hat = match k.known() {
        Some(k) => k.min(index_bound),
        None => index_bound,
    };
    Ok(Deficiency {
        radius: r,
        ball_size: size,
        k,
        index_bound,
        k_hat,
    })
}

pub fn is_typical<T: TableView + ?Sized>(
    t: &T,
    x: &Bits,
    m: &Model,
    r: Option<Radius>,
    theta: &BigRational,
) -> Result<bool, ModelError> {
    Ok(deficiency(t, x, m, r)?.within(theta))
}

fn ser_bits_vec<S: serde::Serializer>(v: &[Bits], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|b| b.to_string()))
}
