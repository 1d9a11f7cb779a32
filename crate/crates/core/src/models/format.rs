//! Text format for model files.
//!
//! ```text
//! sophlab-model v1
//! set:
//! 00
//! 01
//! ```
//!
//! The section line is `set:` (one string per line), `pmf:` (`string p/q`
//! lines) or `func:` followed by either a program as a bit string or `table:`
//! and `codeword string` lines. `-` (or `ε`) stands for the empty string.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use num_rational::BigRational;

use super::{CodeTable, FiniteSetModel, FuncModel, Model, ModelError, PmfModel};
use crate::bits::Bits;
use crate::pvm::{decode_program, Program};

pub const HEADER: &str = "sophlab-model v1";

fn err(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse { line, msg: msg.into() }
}

fn parse_bits(line: usize, s: &str) -> Result<Bits, ModelError> {
    s.parse()
        .map_err(|e: crate::bits::ParseBitsError| err(line, e.to_string()))
}

fn show(x: &Bits) -> String {
    if x.is_empty() {
        "-".to_string()
    } else {
        x.to_string()
    }
}

pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, l)) => return Err(err(n, format!("expected header {HEADER:?}, found {l:?}"))),
        None => return Err(err(1, "empty model file")),
    }
    let (n, section) = lines.next().ok_or_else(|| err(1, "missing section line"))?;
    let body: Vec<(usize, &str)> = lines.collect();
    match section {
        "set:" => {
            let xs = body
                .iter()
                .map(|&(n, l)| parse_bits(n, l))
                .collect::<Result<Vec<_>, _>>()?;
            let mut sorted = xs.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != xs.len() {
                return Err(err(n, "duplicate set element"));
            }
            Ok(Model::Set(FiniteSetModel::new(xs).map_err(|e| err(n, e.to_string()))?))
        }
        "pmf:" => {
            let mut entries = Vec::new();
            for &(n, l) in &body {
                let mut parts = l.split_whitespace();
                let (Some(x), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(n, "expected `string p/q`"));
                };
                let p: BigRational = p.parse().map_err(|_| err(n, format!("bad probability {p:?}")))?;
                entries.push((parse_bits(n, x)?, p));
            }
            Ok(Model::Pmf(PmfModel::new(entries).map_err(|e| err(n, e.to_string()))?))
        }
        "func:" => match body.split_first() {
            Some((&(_, "table:"), rows)) => {
                let mut entries = Vec::new();
                for &(n, l) in rows {
                    let mut parts = l.split_whitespace();
                    let (Some(c), Some(y), None) = (parts.next(), parts.next(), parts.next()) else {
                        return Err(err(n, "expected `codeword string`"));
                    };
                    entries.push((parse_bits(n, c)?, parse_bits(n, y)?));
                }
                Ok(Model::Func(FuncModel::Table(
                    CodeTable::new(entries).map_err(|e| err(n, e.to_string()))?,
                )))
            }
            Some((&(n, l), [])) => {
                let p = decode_program(&parse_bits(n, l)?).map_err(|e| err(n, e.to_string()))?;
                Ok(Model::Func(FuncModel::Program(p)))
            }
            Some((_, [(n, _), ..])) => Err(err(*n, "unexpected line after program")),
            None => Err(err(n, "missing program")),
        },
        other => Err(err(n, format!("unknown section {other:?}"))),
    }
}

pub fn write_model(m: &Model) -> String {
    let mut out = format!("{HEADER}\n");
    match m {
        Model::Set(s) => {
            out.push_str("set:\n");
            for x in s.elements() {
                writeln!(out, "{}", show(x)).unwrap();
            }
        }
        Model::Pmf(p) => {
            out.push_str("pmf:\n");
            for (x, q) in p.support() {
                writeln!(out, "{} {}/{}", show(x), q.numer(), q.denom()).unwrap();
            }
        }
        Model::Func(FuncModel::Program(p)) => {
            writeln!(out, "func:\n{}", p.bits()).unwrap();
        }
        Model::Func(FuncModel::Table(t)) => {
            out.push_str("func:\ntable:\n");
            for (c, y) in t.entries() {
                writeln!(out, "{} {}", show(c), show(y)).unwrap();
            }
        }
    }
    out
}

/// A program model from its bit string or mnemonic listing.
pub fn program_model(text: &str) -> Result<Model, ModelError> {
    Program::parse(text)
        .map(|p| Model::Func(FuncModel::Program(p)))
        .map_err(|msg| err(1, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::models::{pmf_to_func, set_to_pmf};

    #[test]
    fn round_trips() {
        let s = FiniteSetModel::new(vec![bits(""), bits("01"), bits("1")]).unwrap();
        let p = set_to_pmf(&s);
        let t = pmf_to_func(&p);
        for m in [Model::Set(s), Model::Pmf(p), t.into(), Program::identity().into()] {
            let text = write_model(&m);
            assert_eq!(parse_model(&text).unwrap(), m, "{text}");
        }
    }

    #[test]
    fn written_forms() {
        let s = FiniteSetModel::new(vec![bits(""), bits("0")]).unwrap();
        assert_eq!(write_model(&s.into()), "sophlab-model v1\nset:\n-\n0\n");
        assert_eq!(
            write_model(&Program::identity().into()),
            "sophlab-model v1\nfunc:\n111000\n"
        );
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_model("sophlab-model v1\npmf:\n0 1/2\n1 x\n").unwrap_err();
        assert!(matches!(e, ModelError::Parse { line: 4, .. }), "{e}");
        assert!(matches!(
            parse_model("model v2\nset:\n0\n"),
            Err(ModelError::Parse { line: 1, .. })
        ));
        assert!(parse_model("sophlab-model v1\npmf:\n0 1/2\n").is_err());
        assert!(parse_model("sophlab-model v1\nfunc:\n1110\n").is_err());
        assert!(parse_model("sophlab-model v1\nset:\n0\n0\n").is_err());
        let m = parse_model("# comment\nsophlab-model v1\nset:\nε\n\n10\n").unwrap();
        assert_eq!(m, Model::Set(FiniteSetModel::new(vec![bits(""), bits("10")]).unwrap()));
    }
}
