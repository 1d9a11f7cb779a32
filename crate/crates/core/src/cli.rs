//! The `sophlab` command line.
//!
//! Settings resolve as flags, then the `--config` TOML file, then `SOPHLAB_*`
//! environment variables, then defaults. Exit codes: 0 ok, 1 selftest
//! failure, 2 bad input or unknown string, 3 missing snapshot, 4 domain error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::bits::Bits;
use crate::enumerate::{
    default_cache_dir, load_table, snapshot_digest, snapshot_path, BuildOptions, Complexity, ComplexityTable,
    TableCache, CACHE_DIR_ENV,
};
use crate::models::format::{parse_model, program_model, write_model};
use crate::models::{
    deficiency, distortion, func_to_set, model_dl, pmf_to_func, set_to_pmf, FuncModel, Log2, Model, ModelError, Radius,
};
use crate::pvm::{eval, Budgets, EvalOutcome, Program};
use crate::selftest;
use crate::stats::{
    max_soph_of_length, mutual_info, sophistication, structure_lambda, symmetry_gap, MutualMode, StatsError,
    SufficiencyParams,
};
use crate::Error;

const DEFAULT_PAIR_BITS: u32 = 22;

#[derive(Parser, Debug)]
#[command(
    name = "sophlab",
    version,
    about = "Bounded prefix complexity, sophistication and model statistics on a small prefix machine"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Cap on program plus data bits.
    #[arg(long, global = true)]
    pub pair_bits: Option<u32>,
    /// Cap on program bits (defaults to the pair cap).
    #[arg(long, global = true)]
    pub program_bits: Option<u32>,
    /// Cap on data bits (defaults to the pair cap).
    #[arg(long, global = true)]
    pub data_bits: Option<u32>,
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    #[arg(long, global = true)]
    pub string_len: Option<u32>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Sufficiency slack in bits.
    #[arg(long, global = true)]
    pub c: Option<u32>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Omit the timestamp comment line from CSV output.
    #[arg(long, global = true)]
    pub no_header: bool,
    /// TOML file with any of the settings above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved settings to stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build (or reuse) the complexity table for the current budgets.
    Build,
    /// Read statistics from a built table.
    Query {
        #[command(subcommand)]
        query: Query,
    },
    /// Convert a model file: set to pmf, pmf to func, func to set.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        /// The string whose distortion fixes the radius (func to set).
        #[arg(long)]
        x: Option<String>,
        /// Write the model here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one program on data.
    Eval {
        /// Bit string or mnemonics such as "ONE ZERO CAT END".
        #[arg(long)]
        program: String,
        #[arg(long, default_value = "")]
        data: String,
        #[arg(long, default_value = "")]
        aux: String,
    },
    /// Run the property suites at small budgets.
    Selftest {
        /// Replace an instruction code before the audits, e.g. DUP=1111.
        #[arg(long, hide = true)]
        mutate_isa: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Pmf,
    Func,
    Set,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Plain,
    Witness,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Query {
    /// Bounded complexity, optionally conditioned on --y.
    K {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: Option<String>,
    },
    /// Sophistication at slack --c, or for every slack up to --sweep.
    Soph {
        #[arg(long)]
        x: String,
        #[arg(long)]
        sweep: Option<u32>,
    },
    /// Structure function samples.
    Structfn {
        #[arg(long)]
        x: String,
    },
    /// Randomness deficiency of --x in a model ball.
    Deficiency {
        #[arg(long)]
        x: String,
        /// Model file.
        #[arg(long, conflicts_with = "program")]
        model: Option<PathBuf>,
        /// Program model as bits or mnemonics.
        #[arg(long)]
        program: Option<String>,
        /// Ball radius in bits, e.g. 26 or 7/2 (defaults to the distortion of x).
        #[arg(long)]
        radius: Option<String>,
        /// Typicality threshold in bits.
        #[arg(long, default_value = "2")]
        theta: String,
    },
    /// Information in --x about --y.
    Mutual {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
    },
    /// Most sophisticated string of length --n (through --to).
    Maxsoph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        to: Option<usize>,
    },
}

/// Settings from a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub pair_bits: Option<u32>,
    pub program_bits: Option<u32>,
    pub data_bits: Option<u32>,
    pub steps: Option<u64>,
    pub string_len: Option<u32>,
    pub workers: Option<usize>,
    pub c: Option<u32>,
    pub cache_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Fully resolved settings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub budgets: Budgets,
    pub c: u32,
    pub cache_dir: PathBuf,
    pub format: Format,
    pub workers: usize,
    pub header: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        CliError::new(2, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Stats(StatsError::Table(inner)) => CliError::from(*inner),
            Error::Stats(StatsError::UnknownString(_)) | Error::Budget(_) => CliError::new(2, e.to_string()),
            Error::Model(ModelError::Parse { .. }) => CliError::new(2, e.to_string()),
            _ => CliError::new(4, e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        Error::from(e).into()
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Error::from(e).into()
    }
}

fn env<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match std::env::var(name) {
        Ok(v) if !v.is_empty() => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::input(format!("cannot parse {name}={v:?}"))),
        _ => Ok(None),
    }
}

impl Config {
    /// Applies the precedence flags > config file > environment > defaults.
    pub fn resolve(g: &GlobalArgs) -> Result<Config, CliError> {
        let file: FileConfig = match &g.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let pair = g
            .pair_bits
            .or(file.pair_bits)
            .or(env("SOPHLAB_PAIR_BITS")?)
            .unwrap_or(DEFAULT_PAIR_BITS);
        let budgets = Budgets {
            max_pair_bits: pair,
            max_program_bits: g
                .program_bits
                .or(file.program_bits)
                .or(env("SOPHLAB_PROGRAM_BITS")?)
                .unwrap_or(pair),
            max_data_bits: g
                .data_bits
                .or(file.data_bits)
                .or(env("SOPHLAB_DATA_BITS")?)
                .unwrap_or(pair),
            max_steps: g
                .steps
                .or(file.steps)
                .or(env("SOPHLAB_STEPS")?)
                .unwrap_or(Budgets::DEFAULT_STEPS),
            max_string_len: g
                .string_len
                .or(file.string_len)
                .or(env("SOPHLAB_STRING_LEN")?)
                .unwrap_or(Budgets::DEFAULT_STRING_LEN),
        };
        budgets.validate().map_err(|e| CliError::input(e.to_string()))?;
        let workers = g
            .workers
            .or(file.workers)
            .or(env("SOPHLAB_WORKERS")?)
            .unwrap_or_else(|| BuildOptions::default().workers);
        if workers == 0 {
            return Err(CliError::input("worker count must be at least 1"));
        }
        let format = match g.format.or(file.format) {
            Some(f) => f,
            None => match std::env::var("SOPHLAB_FORMAT").ok().as_deref() {
                None | Some("") | Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => return Err(CliError::input(format!("unknown SOPHLAB_FORMAT {other:?}"))),
            },
        };
        Ok(Config {
            budgets,
            c: g.c.or(file.c).or(env("SOPHLAB_C")?).unwrap_or(0),
            cache_dir: g
                .cache_dir
                .clone()
                .or(file.cache_dir)
                .or_else(|| {
                    std::env::var_os(CACHE_DIR_ENV)
                        .filter(|v| !v.is_empty())
                        .map(PathBuf::from)
                })
                .unwrap_or_else(default_cache_dir),
            format,
            workers,
            header: !g.no_header,
        })
    }

    fn options(&self) -> BuildOptions {
        BuildOptions {
            workers: self.workers,
            ..BuildOptions::default()
        }
    }
}

/// A value in an output row.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i64),
    Bool(bool),
    Null,
}

impl Cell {
    fn bits(b: &Bits) -> Cell {
        Cell::Str(b.to_string())
    }

    fn opt(v: Option<u32>) -> Cell {
        v.map(|v| Cell::Int(v as i64)).unwrap_or(Cell::Null)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => json!(s),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Null => Value::Null,
        }
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Cell {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Cell {
        Cell::Str(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Str(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Cell {
        Cell::Bool(v)
    }
}

/// Rows with named columns, rendered as CSV or a JSON array of objects.
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    note: Option<String>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
            note: None,
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg: &Config) -> String {
        match cfg.format {
            Format::Csv => {
                let mut out = String::new();
                if cfg.header {
                    let now = SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0);
                    write!(out, "# sophlab {} generated_at={now}", env!("CARGO_PKG_VERSION")).unwrap();
                    if let Some(n) = &self.note {
                        write!(out, " {n}").unwrap();
                    }
                    out.push('\n');
                }
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for r in &self.rows {
                    let fields: Vec<String> = r.iter().map(Cell::csv).collect();
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("json");
                s.push('\n');
                s
            }
        }
    }
}

fn parse_x(s: &str) -> Result<Bits, CliError> {
    s.parse()
        .map_err(|e: crate::bits::ParseBitsError| CliError::input(e.to_string()))
}

fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let r: BigRational = s
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("bad number {s:?}")))?;
    if r < BigRational::from_integer(0.into()) {
        return Err(CliError::input(format!("{s} is negative")));
    }
    Ok(r)
}

fn load_snapshot(cfg: &Config) -> Result<ComplexityTable, CliError> {
    let path = snapshot_path(&cfg.cache_dir, &cfg.budgets, &Bits::new());
    if !path.exists() {
        return Err(CliError::new(
            3,
            format!(
                "no snapshot for pair budget {} in {} (run `sophlab build` with the same budgets)",
                cfg.budgets.max_pair_bits,
                cfg.cache_dir.display()
            ),
        ));
    }
    load_table(&path).map_err(|e| CliError::new(3, format!("{}: {e}", path.display())))
}

fn cache(cfg: &Config) -> TableCache {
    TableCache::new(1 << 30, cfg.options()).with_dir(&cfg.cache_dir)
}

fn cmd_build(cfg: &Config) -> Result<Table, CliError> {
    let path = snapshot_path(&cfg.cache_dir, &cfg.budgets, &Bits::new());
    let start = Instant::now();
    let hit = path.exists() && load_table(&path).is_ok_and(|t| t.budgets == cfg.budgets);
    let table = cache(cfg).table(&cfg.budgets, &Bits::new())?;
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!(
        "{} {} in {elapsed:.2} s",
        if hit { "cache hit:" } else { "built" },
        path.display()
    );
    let mut t = Table::new(&["snapshot", "entries", "kraft_sum", "max_k", "digest"]);
    t.note = Some(format!("elapsed_s={elapsed:.3}"));
    t.push(vec![
        path.display().to_string().into(),
        table.len().into(),
        table.kraft_sum().to_string().into(),
        Cell::opt(table.max_k()),
        hex::encode(snapshot_digest(&table)).into(),
    ]);
    Ok(t)
}

fn entry_row(t: &mut Table, x: &Bits, aux: &Bits, table: &ComplexityTable) -> Result<(), CliError> {
    let e = table
        .get(x)
        .ok_or_else(|| CliError::from(StatsError::UnknownString(x.clone())))?;
    t.push(vec![
        Cell::bits(x),
        Cell::bits(aux),
        e.k.into(),
        Cell::bits(&e.witness_program),
        Cell::bits(&e.witness_data),
        e.optimal_count.into(),
    ]);
    Ok(())
}

fn mode_rows(t: &mut Table, cfg: &Config, x: &Bits, y: &Bits, modes: &[MutualMode]) -> Result<(), CliError> {
    let cache = cache(cfg);
    for &mode in modes {
        let m = mutual_info(&cache, x, y, &cfg.budgets, mode)?;
        let gap = symmetry_gap(&cache, x, y, &cfg.budgets, mode)?;
        t.push(vec![
            Cell::bits(x),
            Cell::bits(y),
            match mode {
                MutualMode::Plain => "plain",
                MutualMode::Witness => "witness",
            }
            .into(),
            m.k_y.into(),
            m.k_y_given_x.into(),
            m.value.into(),
            gap.into(),
        ]);
    }
    Ok(())
}

fn cmd_query(cfg: &Config, q: &Query) -> Result<Table, CliError> {
    let table = load_snapshot(cfg)?;
    match q {
        Query::K { x, y } => {
            let x = parse_x(x)?;
            let mut t = Table::new(&["x", "aux", "k", "witness_q", "witness_d", "optimal_count"]);
            match y {
                None => entry_row(&mut t, &x, &Bits::new(), &table)?,
                Some(y) => {
                    let y = parse_x(y)?;
                    let cond = cache(cfg).table(&cfg.budgets, &y)?;
                    entry_row(&mut t, &x, &y, &cond)?;
                }
            }
            Ok(t)
        }
        Query::Soph { x, sweep } => {
            let x = parse_x(x)?;
            let mut t = Table::new(&["x", "k", "c", "soph", "witness_q", "witness_d"]);
            let cs: Vec<u32> = match sweep {
                Some(max) => (0..=*max).collect(),
                None => vec![cfg.c],
            };
            for c in cs {
                let r = sophistication(&table, &x, SufficiencyParams::new(c))?;
                t.push(vec![
                    Cell::bits(&x),
                    r.k.into(),
                    c.into(),
                    r.soph.into(),
                    Cell::bits(r.witness_program.bits()),
                    Cell::bits(&r.witness_data),
                ]);
            }
            Ok(t)
        }
        Query::Structfn { x } => {
            let x = parse_x(x)?;
            let mut t = Table::new(&["x", "alpha", "lambda", "h"]);
            for p in structure_lambda(&table, &x)? {
                t.push(vec![
                    Cell::bits(&x),
                    p.alpha.into(),
                    Cell::opt(p.lambda),
                    Cell::opt(p.h),
                ]);
            }
            Ok(t)
        }
        Query::Deficiency {
            x,
            model,
            program,
            radius,
            theta,
        } => {
            let x = parse_x(x)?;
            let m = match (model, program) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
                    parse_model(&text)?
                }
                (None, Some(p)) => program_model(p)?,
                (None, None) => return Err(CliError::input("give --model or --program")),
            };
            let r = radius.as_deref().map(parse_rational).transpose()?.map(Radius::Bits);
            let theta = parse_rational(theta)?;
            let d = deficiency(&table, &x, &m, r)?;
            let mut t = Table::new(&[
                "x",
                "radius",
                "ball_size",
                "k",
                "index_bound",
                "k_hat",
                "deficiency",
                "deficiency_approx",
                "typical",
            ]);
            t.push(vec![
                Cell::bits(&x),
                d.radius.to_string().into(),
                d.ball_size.to_string().into(),
                match d.k {
                    Complexity::Known(k) => k.into(),
                    Complexity::Unknown { .. } => Cell::Null,
                },
                d.index_bound.into(),
                d.k_hat.into(),
                d.to_string().into(),
                format!("{:.6}", d.to_f64()).into(),
                d.within(&theta).into(),
            ]);
            Ok(t)
        }
        Query::Mutual { x, y, mode } => {
            let (x, y) = (parse_x(x)?, parse_x(y)?);
            let modes = match mode {
                ModeArg::Plain => vec![MutualMode::Plain],
                ModeArg::Witness => vec![MutualMode::Witness],
                ModeArg::Both => vec![MutualMode::Plain, MutualMode::Witness],
            };
            let mut t = Table::new(&["x", "y", "mode", "k_y", "k_y_given_x", "mutual_info", "symmetry_gap"]);
            mode_rows(&mut t, cfg, &x, &y, &modes)?;
            Ok(t)
        }
        Query::Maxsoph { n, to } => {
            let mut t = Table::new(&["n", "c", "x", "soph", "present", "absent"]);
            for len in *n..=to.unwrap_or(*n) {
                let r = max_soph_of_length(&table, len, SufficiencyParams::new(cfg.c))?;
                t.push(vec![
                    len.into(),
                    cfg.c.into(),
                    Cell::bits(&r.x),
                    r.soph.into(),
                    r.present.into(),
                    r.absent.to_string().into(),
                ]);
            }
            Ok(t)
        }
    }
}

fn log_text(l: &Log2) -> String {
    match l.exact_integer() {
        Some(m) => m.to_string(),
        None => format!("{l} ~ {:.4}", l.to_f64()),
    }
}

fn cmd_convert(
    cfg: &Config,
    input: &Path,
    to: Target,
    x: Option<&str>,
    output: Option<&Path>,
) -> Result<String, CliError> {
    let text =
        std::fs::read_to_string(input).map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    let m = parse_model(&text)?;
    let mut acct: Vec<String> = vec![format!("model_dl_before: {}", model_dl(&m))];
    let out: Model = match (&m, to) {
        (Model::Set(s), Target::Pmf) => {
            let p = set_to_pmf(s);
            acct.push(format!("set_size: {}", s.len()));
            acct.push(format!("log2_set_size: {}", log_text(&Log2::of_usize(s.len()))));
            acct.push(format!(
                "log2_inverse_probability: {}",
                log_text(&Log2::of_usize(s.len()))
            ));
            p.into()
        }
        (Model::Pmf(p), Target::Func) => {
            let code = pmf_to_func(p);
            for (cw, y) in code.entries() {
                let l = Log2::of(p.prob(y).expect("code covers support").recip());
                acct.push(format!(
                    "code: {} p={} log2_inverse_p={} ceil={} codeword={} length={}",
                    y.display_eps(),
                    p.prob(y).expect("support"),
                    log_text(&l),
                    l.ceil(),
                    cw.display_eps(),
                    cw.len()
                ));
            }
            acct.push(format!("kraft_sum: {}", code.kraft_sum()));
            code.into()
        }
        (Model::Func(f), Target::Set) => {
            let x = parse_x(x.ok_or_else(|| CliError::input("func to set needs --x"))?)?;
            let r = distortion(&x, &m, &cfg.budgets);
            let s = match func_to_set(f, &x, &cfg.budgets) {
                Ok(s) => s,
                Err(e @ ModelError::NoPreimage { .. }) => return Err(CliError::new(4, e.to_string())),
                Err(e) => return Err(e.into()),
            };
            let log_s = Log2::of_usize(s.len());
            acct.push(format!("distortion: {r}"));
            acct.push(format!("set_size: {}", s.len()));
            acct.push(format!("log2_set_size: {}", log_text(&log_s)));
            if let (FuncModel::Program(_), Some(l)) = (f, r.finite()) {
                let bound = l.exact_integer().expect("program distortion is an integer") + 1;
                acct.push(format!(
                    "log2_set_size_at_most_distortion_plus_1: {}",
                    log_s.cmp_int(bound).is_le()
                ));
            }
            s.into()
        }
        (Model::Set(s), Target::Func) => {
            let code = pmf_to_func(&set_to_pmf(s));
            acct.push(format!("set_size: {}", s.len()));
            acct.push(format!("codeword_length: {}", Log2::of_usize(s.len()).ceil()));
            code.into()
        }
        _ => {
            return Err(CliError::input(
                format!("cannot convert this model to {to:?}").to_lowercase(),
            ))
        }
    };
    acct.push(format!("model_dl_after: {}", model_dl(&out)));
    let written = write_model(&out);
    let mut report = String::new();
    for line in &acct {
        writeln!(report, "# {line}").unwrap();
    }
    match output {
        Some(path) => {
            std::fs::write(path, &written).map_err(|e| CliError::new(4, format!("{}: {e}", path.display())))?;
            Ok(report)
        }
        None => Ok(written + &report),
    }
}

fn cmd_eval(cfg: &Config, program: &str, data: &str, aux: &str) -> Result<Table, CliError> {
    let p = Program::parse(program).map_err(CliError::input)?;
    let (d, a) = (parse_x(data)?, parse_x(aux)?);
    let mut t = Table::new(&["program", "outcome", "output", "steps"]);
    match eval(&p, &d, &a, &cfg.budgets) {
        EvalOutcome::Ok { output, steps, .. } => t.push(vec![
            Cell::bits(p.bits()),
            "ok".into(),
            Cell::bits(&output),
            steps.into(),
        ]),
        EvalOutcome::Abort(r) => t.push(vec![
            Cell::bits(p.bits()),
            format!("{r:?}").into(),
            Cell::Null,
            Cell::Null,
        ]),
    }
    Ok(t)
}

fn cmd_selftest(mutate: Option<&str>) -> Result<(Table, bool), CliError> {
    let mut codes = selftest::CodeTable::pvm1();
    if let Some(m) = mutate {
        codes.mutate(m).map_err(CliError::input)?;
    }
    let report = selftest::run(&codes);
    let mut t = Table::new(&["property", "passed", "detail", "millis"]);
    for c in &report.checks {
        t.push(vec![
            c.property.into(),
            c.passed.into(),
            c.detail.replace(',', ";").into(),
            (c.millis as u64).into(),
        ]);
    }
    Ok((t, report.passed()))
}

fn run_inner(cli: &Cli, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let cfg = Config::resolve(&cli.global)?;
    if cli.global.verbose {
        eprintln!("settings: {cfg:?}");
    }
    let emit = |out: &mut dyn std::io::Write, s: &str| -> Result<(), CliError> {
        out.write_all(s.as_bytes()).map_err(|e| CliError::new(4, e.to_string()))
    };
    match &cli.command {
        Command::Build => emit(out, &cmd_build(&cfg)?.render(&cfg))?,
        Command::Query { query } => emit(out, &cmd_query(&cfg, query)?.render(&cfg))?,
        Command::Convert { input, to, x, output } => {
            emit(out, &cmd_convert(&cfg, input, *to, x.as_deref(), output.as_deref())?)?
        }
        Command::Eval { program, data, aux } => emit(out, &cmd_eval(&cfg, program, data, aux)?.render(&cfg))?,
        Command::Selftest { mutate_isa } => {
            let (t, passed) = cmd_selftest(mutate_isa.as_deref())?;
            emit(out, &t.render(&cfg))?;
            if !passed {
                let failed = t
                    .rows
                    .iter()
                    .find(|r| r[1] == Cell::Bool(false))
                    .map(|r| r[0].csv())
                    .unwrap_or_default();
                eprintln!("selftest failed: {failed}");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run_inner(&cli, &mut lock) {
        Ok(code) => {
            let _ = lock.flush();
            code
        }
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
