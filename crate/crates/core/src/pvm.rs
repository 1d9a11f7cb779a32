//! The PVM-1 prefix virtual machine.
//!
//! A program is a sequence of instructions drawn from a complete prefix code
//! and terminated by exactly one `END`. It runs on a stack of bit strings with
//! a read-only data tape (which must be consumed exactly) and a read-only
//! auxiliary tape that realizes conditioning. There are no jumps or loops, so
//! every evaluation terminates; the step and size limits in [`Budgets`] only
//! bound its cost.
//!
//! | mnemonic | code    | effect                                             |
//! |----------|---------|----------------------------------------------------|
//! | END      | `00`    | halt; output the top of stack (ε if empty)         |
//! | ZERO     | `010`   | push `0`                                           |
//! | ONE      | `011`   | push `1`                                           |
//! | CAT      | `100`   | pop b, pop a, push a·b                             |
//! | REP      | `101`   | pop n, pop a, push a repeated nat(n) times         |
//! | READ     | `110`   | consume one data bit and push it                   |
//! | READALL  | `1110`  | consume all remaining data and push it             |
//! | DUP      | `11110` | duplicate the top of stack                         |
//! | AUX      | `11111` | push the auxiliary string                          |
//!
//! Step cost is one per instruction, plus the size of the produced string for
//! CAT, DUP, READALL, AUX and REP.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::bits::Bits;

/// Version tag attached to every serialized artifact.
pub const ISA_VERSION: &str = "PVM-1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Instr {
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

/// One row of the instruction reference table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IsaEntry {
    pub instr: Instr,
    pub mnemonic: &'static str,
    pub code: &'static str,
    pub semantics: &'static str,
}

/// Machine-readable instruction reference table, in code order.
pub const ISA: [IsaEntry; 9] = [
    IsaEntry {
        instr: Instr::End,
        mnemonic: "END",
        code: "00",
        semantics: "halt; output top of stack or ε if empty; all data must be consumed",
    },
    IsaEntry {
        instr: Instr::Zero,
        mnemonic: "ZERO",
        code: "010",
        semantics: "push \"0\"",
    },
    IsaEntry {
        instr: Instr::One,
        mnemonic: "ONE",
        code: "011",
        semantics: "push \"1\"",
    },
    IsaEntry {
        instr: Instr::Cat,
        mnemonic: "CAT",
        code: "100",
        semantics: "pop b, pop a, push a·b",
    },
    IsaEntry {
        instr: Instr::Rep,
        mnemonic: "REP",
        code: "101",
        semantics: "pop n, pop a, push a repeated nat(n) times",
    },
    IsaEntry {
        instr: Instr::Read,
        mnemonic: "READ",
        code: "110",
        semantics: "consume one data bit and push it",
    },
    IsaEntry {
        instr: Instr::ReadAll,
        mnemonic: "READALL",
        code: "1110",
        semantics: "consume all remaining data and push it",
    },
    IsaEntry {
        instr: Instr::Dup,
        mnemonic: "DUP",
        code: "11110",
        semantics: "duplicate top of stack",
    },
    IsaEntry {
        instr: Instr::Aux,
        mnemonic: "AUX",
        code: "11111",
        semantics: "push the auxiliary string",
    },
];

impl Instr {
    pub const ALL: [Instr; 9] = [
        Instr::End,
        Instr::Zero,
        Instr::One,
        Instr::Cat,
        Instr::Rep,
        Instr::Read,
        Instr::ReadAll,
        Instr::Dup,
        Instr::Aux,
    ];

    /// Code as (value, bit length).
    #[inline]
    pub const fn code(self) -> (u8, u8) {
        match self {
            Instr::End => (0b00, 2),
            Instr::Zero => (0b010, 3),
            Instr::One => (0b011, 3),
            Instr::Cat => (0b100, 3),
            Instr::Rep => (0b101, 3),
            Instr::Read => (0b110, 3),
            Instr::ReadAll => (0b1110, 4),
            Instr::Dup => (0b11110, 5),
            Instr::Aux => (0b11111, 5),
        }
    }

    #[inline]
    pub const fn code_len(self) -> usize {
        self.code().1 as usize
    }

    pub fn code_bits(self) -> Bits {
        let (v, l) = self.code();
        Bits::from_u64(v as u64, l as usize)
    }

    pub fn mnemonic(self) -> &'static str {
        ISA[self as usize].mnemonic
    }

    pub fn from_mnemonic(s: &str) -> Option<Instr> {
        ISA.iter().find(|e| e.mnemonic.eq_ignore_ascii_case(s)).map(|e| e.instr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("program bits end at bit {at} before END was reached")]
    Incomplete { at: usize },
    #[error("{extra} trailing bit(s) after END at bit {at}")]
    TrailingBits { at: usize, extra: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("program must end with exactly one END as its last instruction")]
    MisplacedEnd,
}

/// A decoded program together with its exact encoding.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Program {
    instrs: Vec<Instr>,
    bits: Bits,
}

impl Program {
    /// Builds a program from instructions; `END` must appear exactly once, last.
    pub fn new(instrs: Vec<Instr>) -> Result<Program, ProgramError> {
        match instrs.iter().position(|&i| i == Instr::End) {
            Some(p) if p + 1 == instrs.len() => {}
            _ => return Err(ProgramError::MisplacedEnd),
        }
        let mut bits = Bits::with_capacity(instrs.iter().map(|i| i.code_len()).sum());
        for i in &instrs {
            bits.extend_from(&i.code_bits());
        }
        Ok(Program { instrs, bits })
    }

    /// Builds a program from the instructions before `END`.
    pub fn from_body(body: &[Instr]) -> Result<Program, ProgramError> {
        let mut v = body.to_vec();
        v.push(Instr::End);
        Program::new(v)
    }

    /// The identity program `[READALL, END]`.
    pub fn identity() -> Program {
        Program::from_body(&[Instr::ReadAll]).expect("valid")
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn bit_len(&self) -> usize {
        self.bits.len()
    }

    /// Parses either a bit string or a mnemonic list such as `ONE ZERO CAT END`.
    pub fn parse(text: &str) -> Result<Program, String> {
        let t = text.trim();
        if t.chars().all(|c| c == '0' || c == '1') {
            let b: Bits = t.parse().map_err(|e| format!("{e}"))?;
            return decode_program(&b).map_err(|e| e.to_string());
        }
        let mut instrs = Vec::new();
        for tok in t
            .trim_start_matches('[')
            .trim_end_matches(']')
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
        {
            instrs.push(Instr::from_mnemonic(tok).ok_or_else(|| format!("unknown instruction {tok:?}"))?);
        }
        Program::new(instrs).map_err(|e| e.to_string())
    }
}

impl std::fmt::Debug for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.instrs.iter().map(|i| i.mnemonic()).collect();
        write!(f, "[{}]", names.join(","))
    }
}

impl PartialOrd for Program {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Program order: by encoding length, then lexicographically by encoding.
impl Ord for Program {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bits.cmp(&other.bits)
    }
}

/// Decodes the unique program whose encoding is exactly `bits`.
pub fn decode_program(bits: &Bits) -> Result<Program, DecodeError> {
    let (instrs, used) = decode_prefix(bits)?;
    if used != bits.len() {
        return Err(DecodeError::TrailingBits {
            at: used,
            extra: bits.len() - used,
        });
    }
    Ok(Program {
        instrs,
        bits: bits.clone(),
    })
}

/// Reads instructions left to right up to and including the first END.
/// Returns the instructions and the number of bits consumed.
pub fn decode_prefix(bits: &Bits) -> Result<(Vec<Instr>, usize), DecodeError> {
    let mut instrs = Vec::new();
    let mut pos = 0;
    loop {
        let start = pos;
        let mut next = || {
            if pos < bits.len() {
                pos += 1;
                Ok(bits.get(pos - 1))
            } else {
                Err(DecodeError::Incomplete { at: start })
            }
        };
        let instr = match (next()?, next()?) {
            (false, false) => Instr::End,
            (false, true) => {
                if next()? {
                    Instr::One
                } else {
                    Instr::Zero
                }
            }
            (true, false) => {
                if next()? {
                    Instr::Rep
                } else {
                    Instr::Cat
                }
            }
            (true, true) => {
                if !next()? {
                    Instr::Read
                } else if !next()? {
                    Instr::ReadAll
                } else if !next()? {
                    Instr::Dup
                } else {
                    Instr::Aux
                }
            }
        };
        instrs.push(instr);
        if instr == Instr::End {
            return Ok((instrs, pos));
        }
    }
}

pub fn encode_program(p: &Program) -> Bits {
    p.bits.clone()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BudgetError {
    #[error("budget {0} must be positive")]
    NotPositive(&'static str),
    #[error("budget {name} ({value}) exceeds max_pair_bits ({pair})")]
    ExceedsPair { name: &'static str, value: u32, pair: u32 },
}

/// Enumeration and evaluation limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Budgets {
    /// Cap on l(q) + l(d).
    pub max_pair_bits: u32,
    pub max_program_bits: u32,
    pub max_data_bits: u32,
    /// Step cap per evaluation.
    pub max_steps: u64,
    /// Cap on the length of any string the machine produces.
    pub max_string_len: u32,
}

impl Budgets {
    pub const DEFAULT_STEPS: u64 = 4096;
    pub const DEFAULT_STRING_LEN: u32 = 64;

    pub fn new(
        max_pair_bits: u32,
        max_program_bits: u32,
        max_data_bits: u32,
        max_steps: u64,
        max_string_len: u32,
    ) -> Result<Budgets, BudgetError> {
        let b = Budgets {
            max_pair_bits,
            max_program_bits,
            max_data_bits,
            max_steps,
            max_string_len,
        };
        b.validate()?;
        Ok(b)
    }

    /// Program and data caps equal to the pair cap, default step and size limits.
    pub fn with_pair_bits(pair: u32) -> Budgets {
        Budgets {
            max_pair_bits: pair,
            max_program_bits: pair,
            max_data_bits: pair,
            max_steps: Self::DEFAULT_STEPS,
            max_string_len: Self::DEFAULT_STRING_LEN,
        }
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        for (name, v) in [
            ("max_pair_bits", self.max_pair_bits as u64),
            ("max_program_bits", self.max_program_bits as u64),
            ("max_data_bits", self.max_data_bits as u64),
            ("max_steps", self.max_steps),
            ("max_string_len", self.max_string_len as u64),
        ] {
            if v == 0 {
                return Err(BudgetError::NotPositive(name));
            }
        }
        for (name, v) in [
            ("max_program_bits", self.max_program_bits),
            ("max_data_bits", self.max_data_bits),
        ] {
            if v > self.max_pair_bits {
                return Err(BudgetError::ExceedsPair {
                    name,
                    value: v,
                    pair: self.max_pair_bits,
                });
            }
        }
        Ok(())
    }

    /// Largest data length a program of `program_len` bits may receive.
    #[inline]
    pub fn data_cap_for(&self, program_len: usize) -> Option<usize> {
        let pair = self.max_pair_bits as usize;
        if program_len > pair || program_len > self.max_program_bits as usize {
            return None;
        }
        Some((pair - program_len).min(self.max_data_bits as usize))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbortReason {
    DataExhausted,
    DataUnconsumed,
    StackUnderflow,
    StepLimit,
    SizeLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalOutcome {
    Ok {
        output: Bits,
        steps: u64,
        data_consumed: usize,
    },
    Abort(AbortReason),
}

impl EvalOutcome {
    pub fn output(&self) -> Option<&Bits> {
        match self {
            EvalOutcome::Ok { output, .. } => Some(output),
            EvalOutcome::Abort(_) => None,
        }
    }

    pub fn into_output(self) -> Option<Bits> {
        match self {
            EvalOutcome::Ok { output, .. } => Some(output),
            EvalOutcome::Abort(_) => None,
        }
    }
}

/// Runs `p` on `data` with auxiliary tape `aux`.
pub fn eval(p: &Program, data: &Bits, aux: &Bits, b: &Budgets) -> EvalOutcome {
    eval_instrs(&p.instrs, data, aux, b)
}

/// [`eval`] over a raw instruction slice (which must end in END).
pub fn eval_instrs(instrs: &[Instr], data: &Bits, aux: &Bits, b: &Budgets) -> EvalOutcome {
    use AbortReason::*;
    let max_len = b.max_string_len as usize;
    let mut stack: SmallVec<[Bits; 8]> = SmallVec::new();
    let mut steps: u64 = 0;
    let mut pos = 0usize;

    macro_rules! charge {
        ($cost:expr) => {{
            steps = steps.saturating_add(1).saturating_add($cost as u64);
            if steps > b.max_steps {
                return EvalOutcome::Abort(StepLimit);
            }
        }};
    }
    macro_rules! pop {
        () => {
            match stack.pop() {
                Some(v) => v,
                None => return EvalOutcome::Abort(StackUnderflow),
            }
        };
    }

    for &instr in instrs {
        match instr {
            Instr::End => {
                charge!(0);
                if pos != data.len() {
                    return EvalOutcome::Abort(DataUnconsumed);
                }
                let output = stack.pop().unwrap_or_default();
                return EvalOutcome::Ok {
                    output,
                    steps,
                    data_consumed: pos,
                };
            }
            Instr::Zero | Instr::One => {
                charge!(0);
                let mut s = Bits::new();
                s.push(instr == Instr::One);
                stack.push(s);
            }
            Instr::Cat => {
                let rhs = pop!();
                let mut lhs = pop!();
                let size = lhs.len() + rhs.len();
                if size > max_len {
                    return EvalOutcome::Abort(SizeLimit);
                }
                charge!(size);
                lhs.extend_from(&rhs);
                stack.push(lhs);
            }
            Instr::Rep => {
                let count = pop!();
                let base = pop!();
                let result = if base.is_empty() {
                    charge!(0);
                    Bits::new()
                } else {
                    let n = match string_to_nat(&count) {
                        Some(n) if n <= (max_len / base.len()) as u128 => n as usize,
                        _ => return EvalOutcome::Abort(SizeLimit),
                    };
                    charge!(base.len() * n);
                    base.repeat(n)
                };
                stack.push(result);
            }
            Instr::Read => {
                if pos >= data.len() {
                    return EvalOutcome::Abort(DataExhausted);
                }
                charge!(0);
                let mut s = Bits::new();
                s.push(data.get(pos));
                pos += 1;
                stack.push(s);
            }
            Instr::ReadAll => {
                let rest = data.len() - pos;
                if rest > max_len {
                    return EvalOutcome::Abort(SizeLimit);
                }
                charge!(rest);
                stack.push(if pos == 0 { data.clone() } else { data.suffix(pos) });
                pos = data.len();
            }
            Instr::Dup => {
                let top = match stack.last() {
                    Some(t) => t.clone(),
                    None => return EvalOutcome::Abort(StackUnderflow),
                };
                charge!(top.len());
                stack.push(top);
            }
            Instr::Aux => {
                if aux.len() > max_len {
                    return EvalOutcome::Abort(SizeLimit);
                }
                charge!(aux.len());
                stack.push(aux.clone());
            }
        }
    }
    // Unreachable for well-formed programs: END is always last.
    EvalOutcome::Abort(StackUnderflow)
}

/// Maps a string to its index in canonical order: ε→0, 0→1, 1→2, 00→3, ...
/// (the value of the numeral `1·s`, minus one). `None` past 126 bits.
pub fn string_to_nat(s: &Bits) -> Option<u128> {
    if s.len() > 126 {
        return None;
    }
    let v = s.to_u128()?;
    Some(((1u128 << s.len()) | v) - 1)
}

/// Inverse of [`string_to_nat`].
pub fn nat_to_string(n: u128) -> Bits {
    let m = n + 1;
    let width = 127 - m.leading_zeros() as usize;
    let mut out = Bits::with_capacity(width);
    for i in (0..width).rev() {
        out.push((m >> i) & 1 == 1);
    }
    out
}

/// `x̄ = 1^l(x) 0 x`.
pub fn encode_bar(x: &Bits) -> Bits {
    let mut out = Bits::filled(true, x.len());
    out.push(false);
    out.extend_from(x);
    out
}

/// `x′ = bar(nat_to_string(l(x))) · x`.
pub fn encode_std(x: &Bits) -> Bits {
    let mut out = encode_bar(&nat_to_string(x.len() as u128));
    out.extend_from(x);
    out
}

/// `⟨x, y⟩ = x′ y`.
pub fn pair(x: &Bits, y: &Bits) -> Bits {
    encode_std(x).concat(y)
}

/// Reads one `x̄` code word from the front of `bits`; returns `(x, rest)`.
pub fn decode_bar(bits: &Bits) -> Option<(Bits, Bits)> {
    let n = bits.iter().take_while(|&b| b).count();
    if bits.len() < 2 * n + 1 {
        return None;
    }
    Some((bits.slice(n + 1, n), bits.suffix(2 * n + 1)))
}

/// Reads one `x′` code word from the front of `bits`; returns `(x, rest)`.
pub fn decode_std(bits: &Bits) -> Option<(Bits, Bits)> {
    let (len_str, rest) = decode_bar(bits)?;
    let len = usize::try_from(string_to_nat(&len_str)?).ok()?;
    if rest.len() < len {
        return None;
    }
    Some((rest.slice(0, len), rest.suffix(len)))
}

/// Inverse of [`pair`].
pub fn unpair(bits: &Bits) -> Option<(Bits, Bits)> {
    decode_std(bits)
}

/// Static data-consumption and stack shape of a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProgramShape {
    /// READs executed before the first READALL (all READs if there is none).
    pub reads_before_readall: usize,
    pub has_readall: bool,
    /// A READ after a READALL always exhausts the data.
    pub read_after_readall: bool,
    /// Some instruction pops an empty stack regardless of data.
    pub underflows: bool,
}

impl ProgramShape {
    pub fn of(instrs: &[Instr]) -> ProgramShape {
        let mut shape = ProgramShape {
            reads_before_readall: 0,
            has_readall: false,
            read_after_readall: false,
            underflows: false,
        };
        let mut depth: i64 = 0;
        for &i in instrs {
            match i {
                Instr::Read => {
                    if shape.has_readall {
                        shape.read_after_readall = true;
                    } else {
                        shape.reads_before_readall += 1;
                    }
                    depth += 1;
                }
                Instr::ReadAll => {
                    shape.has_readall = true;
                    depth += 1;
                }
                Instr::Zero | Instr::One | Instr::Aux => depth += 1,
                Instr::Dup => {
                    if depth < 1 {
                        shape.underflows = true;
                    }
                    depth += 1;
                }
                Instr::Cat | Instr::Rep => {
                    if depth < 2 {
                        shape.underflows = true;
                    }
                    depth -= 1;
                }
                Instr::End => {}
            }
        }
        shape
    }

    /// No data string can ever make this program halt normally.
    pub fn never_halts(&self) -> bool {
        self.underflows || self.read_after_readall
    }

    pub fn reads_data(&self) -> bool {
        self.has_readall || self.reads_before_readall > 0
    }

    /// Whether a data string of length `len` can be consumed exactly.
    pub fn accepts_data_len(&self, len: usize) -> bool {
        if self.has_readall {
            len >= self.reads_before_readall
        } else {
            len == self.reads_before_readall
        }
    }
}
