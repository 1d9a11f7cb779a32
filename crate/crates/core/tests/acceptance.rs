//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed; the process
//! exits nonzero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{Limits, OTable};
use sophlab::enumerate::{
    build_table, build_table_with, encode_snapshot, kraft_sum, programs_upto, save_table, snapshot_digest,
    BuildOptions, Complexity, ComplexityTable, TableCache,
};
use sophlab::models::{
    deficiency, distortion, func_to_set, pmf_to_func, set_to_pmf, Distortion, FiniteSetModel, FuncModel, Model,
};
use sophlab::pvm::{decode_program, eval, ISA};
use sophlab::stats::{mutual_info, sophistication, structure_lambda, symmetry_gap, MutualMode, SufficiencyParams};
use sophlab::{Bits, Budgets, Instr, Program};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn b(s: &str) -> Bits {
    s.parse().unwrap()
}

fn eps() -> Bits {
    Bits::new()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn table(pair: u32) -> &'static ComplexityTable {
    static T: OnceLock<BTreeMap<u32, &'static ComplexityTable>> = OnceLock::new();
    let all = T.get_or_init(|| {
        [10, 12, 14, 16]
            .into_iter()
            .map(|p| {
                (
                    p,
                    &*Box::leak(Box::new(build_table(&Budgets::with_pair_bits(p), &eps()).unwrap())),
                )
            })
            .collect()
    });
    all[&pair]
}

fn oracle(pair: u32) -> &'static OTable {
    static T: OnceLock<BTreeMap<u32, &'static OTable>> = OnceLock::new();
    let all = T.get_or_init(|| {
        [10, 12, 14, 16]
            .into_iter()
            .map(|p| (p, &*Box::leak(Box::new(common::build(&Limits::pair(p as usize), "")))))
            .collect()
    });
    all[&pair]
}

fn table22() -> &'static ComplexityTable {
    static T: OnceLock<ComplexityTable> = OnceLock::new();
    T.get_or_init(|| build_table_with(&Budgets::with_pair_bits(22), &eps(), BuildOptions::with_workers(8)).unwrap())
}

fn repeat_x() -> Bits {
    b(&"10".repeat(13))
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:.1?}, limit {limit:?}");
    Ok(())
}

/// Library table equals the oracle's: keys, k, witnesses, optimal counts, frontiers, Kraft sum.
fn same_table(t: &ComplexityTable, o: &OTable) -> Result<(), String> {
    ensure!(
        t.len() == o.entries.len(),
        "{} entries vs oracle {}",
        t.len(),
        o.entries.len()
    );
    for (x, oe) in &o.entries {
        let e = t.get(&b(x)).ok_or_else(|| format!("{x:?} missing"))?;
        ensure!(e.k as usize == oe.k, "k({x:?}) = {} vs oracle {}", e.k, oe.k);
        ensure!(
            e.witness_program.to_string() == oe.q && e.witness_data.to_string() == oe.d,
            "witness of {x:?}: ({}, {}) vs oracle ({}, {})",
            e.witness_program,
            e.witness_data,
            oe.q,
            oe.d
        );
        ensure!(
            e.optimal_count == oe.count,
            "optimal_count({x:?}) = {} vs {}",
            e.optimal_count,
            oe.count
        );
        let pareto: Vec<(usize, usize)> = e
            .pareto
            .iter()
            .map(|p| (p.program_bits as usize, p.data_bits as usize))
            .collect();
        ensure!(pareto == oe.pareto(), "pareto({x:?}) = {pareto:?} vs {:?}", oe.pareto());
    }
    ensure!(
        t.kraft_sum() == o.kraft(),
        "kraft {} vs oracle {}",
        t.kraft_sum(),
        o.kraft()
    );
    Ok(())
}

fn c1_prefix_audit() -> Check {
    let start = Instant::now();
    let mut valid = HashSet::new();
    for s in common::strings_upto(16) {
        let lib = decode_program(&b(&s)).is_ok();
        ensure!(lib == common::decode(&s).is_some(), "decoders disagree on {s:?}");
        if lib {
            valid.insert(s);
        }
    }
    for s in &valid {
        for i in 1..s.len() {
            ensure!(!valid.contains(&s[..i]), "{:?} is a prefix of {s:?}", &s[..i]);
        }
    }
    for (op, code) in common::CODES {
        let lib = ISA
            .iter()
            .find(|e| e.code == code)
            .ok_or_else(|| format!("code {code} missing"))?;
        ensure!(
            format!("{:?}", lib.instr) == format!("{op:?}"),
            "code {code} is {:?}",
            lib.instr
        );
    }
    let isa: BigRational = ISA
        .iter()
        .map(|e| BigRational::new(1.into(), BigInt::from(1) << e.code.len()))
        .sum();
    ensure!(isa == rat(1, 1), "instruction Kraft sum {isa}");
    let k14 = kraft_sum(&Budgets::with_pair_bits(14), &eps()).map_err(|e| e.to_string())?;
    let o14 = common::build(&Limits::pair(14), "").kraft();
    ensure!(k14 == o14, "pair Kraft {k14} vs oracle {o14}");
    ensure!(k14 <= rat(1, 1), "pair Kraft {k14} > 1");
    within(Duration::from_secs(30), start)?;
    Ok(format!(
        "{} programs <= 16 bits prefix-free, code Kraft 1, pair Kraft {k14} at 14 bits",
        valid.len()
    ))
}

fn c2_oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut sizes = Vec::new();
    for p in [10u32, 12, 14] {
        same_table(table(p), oracle(p)).map_err(|e| format!("budget {p}: {e}"))?;
        sizes.push(format!("{p}:{}", table(p).len()));
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("exact match at budgets 10/12/14 (entries {})", sizes.join(" ")))
}

fn c3_soph_bounds() -> Check {
    let (t, o) = (table(16), oracle(16));
    same_table(t, o)?;
    let mut bounded = 0;
    for (x, e) in &t.entries {
        let s = sophistication(t, x, SufficiencyParams::new(0)).map_err(|e| e.to_string())?;
        let oe = &o.entries[&x.to_string()];
        ensure!(
            s.soph as usize == oe.soph0(),
            "soph0({x:?}) = {} vs oracle {}",
            s.soph,
            oe.soph0()
        );
        ensure!(s.soph <= e.k, "soph0({x:?}) = {} > k = {}", s.soph, e.k);
        if 6 + x.len() <= 16 {
            ensure!(e.k as usize <= 6 + x.len(), "k({x:?}) = {} > 6 + l(x)", e.k);
            bounded += 1;
        }
    }
    Ok(format!(
        "{} entries with soph0 <= k, {bounded} with k <= 6 + l(x)",
        t.len()
    ))
}

fn c4_identity_behaviour() -> Check {
    let (t, o) = (table(16), oracle(16));
    let mut identity_only = 0;
    let mut min_soph: Option<u32> = None;
    let mut incompressible = 0;
    for n in 0..=8usize {
        for x in t.entries.keys().filter(|x| x.len() == n) {
            let e = &t.entries[x];
            let soph = sophistication(t, x, SufficiencyParams::new(0))
                .map_err(|e| e.to_string())?
                .soph;
            if o.entries[&x.to_string()].identity_only {
                ensure!(soph == 6, "{x:?} is realized only by the identity but soph0 = {soph}");
                identity_only += 1;
            }
            if e.k as usize == 6 + n {
                incompressible += 1;
                min_soph = Some(min_soph.map_or(soph, |m| m.min(soph)));
            }
        }
    }
    ensure!(identity_only > 0, "no identity-only strings found");
    ensure!(
        min_soph == Some(6),
        "minimum soph0 over incompressible strings is {min_soph:?}"
    );
    Ok(format!(
        "{identity_only} identity-only strings all at soph0 6; min soph0 over {incompressible} incompressible = 6"
    ))
}

fn c5_worked_example() -> Check {
    let start = Instant::now();
    let t = table22();
    let x = repeat_x();
    let e = t.get(&x).ok_or("x missing at budget 22")?;
    let expected = Program::from_body(&[Instr::One, Instr::Zero, Instr::Cat, Instr::ReadAll, Instr::Rep]).unwrap();
    ensure!(e.k == 21, "k = {}", e.k);
    ensure!(
        e.witness_program == *expected.bits(),
        "witness program {}",
        e.witness_program
    );
    ensure!(
        e.witness_program.len() == 18,
        "witness program has {} bits",
        e.witness_program.len()
    );
    ensure!(
        e.witness_data == b("110") && common::nat("110") == Some(13),
        "witness data {}",
        e.witness_data
    );

    let o = common::build(&Limits::pair(22), "");
    same_table(t, &o).map_err(|e| format!("oracle at 22: {e}"))?;
    let oe = &o.entries[&x.to_string()];

    let lambda = structure_lambda(t, &x).map_err(|e| e.to_string())?;
    ensure!(lambda.len() == 23, "alpha runs over {} values", lambda.len());
    for p in &lambda {
        let want = if p.alpha < 18 { None } else { Some(21) };
        ensure!(
            p.lambda == want,
            "lambda({}) = {:?}, expected {want:?}",
            p.alpha,
            p.lambda
        );
        ensure!(
            p.lambda.map(|l| l as usize) == oe.lambda(p.alpha as usize),
            "lambda({}) disagrees with oracle",
            p.alpha
        );
    }
    let s = sophistication(t, &x, SufficiencyParams::new(0)).map_err(|e| e.to_string())?;
    ensure!(
        s.soph == 18 && oe.soph0() == 18,
        "soph0 = {} (oracle {})",
        s.soph,
        oe.soph0()
    );
    within(Duration::from_secs(600), start)?;
    Ok(format!(
        "k = 21, witness {} + 110, lambda unknown below 18 then 21, soph0 18",
        e.witness_program
    ))
}

fn c6_structure_shape() -> Check {
    let (t, o) = (table(16), oracle(16));
    for (x, e) in &t.entries {
        let pts = structure_lambda(t, x).map_err(|e| e.to_string())?;
        let soph = sophistication(t, x, SufficiencyParams::new(0))
            .map_err(|e| e.to_string())?
            .soph;
        let oe = &o.entries[&x.to_string()];
        let as_inf = |l: Option<u32>| l.unwrap_or(u32::MAX);
        for w in pts.windows(2) {
            ensure!(
                as_inf(w[1].lambda) <= as_inf(w[0].lambda),
                "lambda of {x:?} rises at alpha {}",
                w[1].alpha
            );
        }
        ensure!(
            pts.last().unwrap().lambda == Some(e.k),
            "lambda({x:?}) at max alpha is not k"
        );
        if soph > 0 {
            let below = pts[soph as usize - 1].lambda;
            ensure!(below.map_or(true, |l| l > e.k), "no strict drop at soph0 for {x:?}");
        }
        for p in &pts {
            if p.alpha >= soph {
                ensure!(
                    p.lambda == Some(e.k),
                    "lambda({x:?}, {}) = {:?} != k",
                    p.alpha,
                    p.lambda
                );
            }
            ensure!(
                p.lambda.map(|l| l as usize) == oe.lambda(p.alpha as usize),
                "lambda({x:?}, {}) vs oracle",
                p.alpha
            );
        }
    }
    Ok(format!(
        "{} structure functions nonincreasing and flat at k from soph0",
        t.len()
    ))
}

fn c7_conversions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let pool: Vec<String> = common::strings_upto(10).collect();
    let mut checked = 0;
    for _ in 0..50 {
        let size = rng.gen_range(1..=32usize);
        let chosen: Vec<Bits> = pool.choose_multiple(&mut rng, size).map(|s| b(s)).collect();
        let s = FiniteSetModel::new(chosen.clone()).map_err(|e| e.to_string())?;
        let f = pmf_to_func(&set_to_pmf(&s));
        let mut codewords: Vec<String> = Vec::new();
        let mut kraft = rat(0, 1);
        for y in &chosen {
            let cw = f.codeword_of(y).ok_or_else(|| format!("{y:?} has no codeword"))?;
            ensure!(f.lookup(cw) == Some(y), "codeword {cw} does not decode to {y:?}");
            let l = cw.len() as u32;
            // log2|S| <= l < log2|S| + 1
            let fits = BigUint::from(1u8) << l >= BigUint::from(size);
            let tight = l == 0 || BigUint::from(1u8) << (l - 1) < BigUint::from(size);
            ensure!(fits && tight, "|S| = {size} but codeword length {l}");
            kraft += BigRational::new(1.into(), BigInt::from(1) << l);
            codewords.push(cw.to_string());
        }
        ensure!(kraft <= rat(1, 1) && kraft == f.kraft_sum(), "code Kraft sum {kraft}");
        for (i, a) in codewords.iter().enumerate() {
            for (j, c) in codewords.iter().enumerate() {
                ensure!(i == j || !c.starts_with(a.as_str()), "{a} is a prefix of {c}");
            }
        }
        checked += 1;
    }

    let bud = Budgets::with_pair_bits(22);
    let lim = Limits::pair(22);
    let candidates: Vec<Program> = programs_upto(14)
        .into_iter()
        .filter(|p| p.instrs().iter().any(|i| matches!(i, Instr::Read | Instr::ReadAll)))
        .collect();
    let mut programs = 0;
    while programs < 20 {
        let f = candidates.choose(&mut rng).unwrap();
        let len = rng.gen_range(0..=8usize);
        let d: String = (0..len).map(|_| if rng.gen() { '1' } else { '0' }).collect();
        let Some(x) = eval(f, &b(&d), &eps(), &bud).into_output() else {
            continue;
        };
        let model = FuncModel::Program(f.clone());
        let set = func_to_set(&model, &x, &bud).map_err(|e| e.to_string())?;
        let r = match distortion(&x, &Model::Func(model), &bud) {
            Distortion::Finite(l) => l.exact_integer().ok_or("program distortion is not whole")? as u32,
            other => return Err(format!("distortion of {x:?} is {other}")),
        };
        ensure!(set.contains(&x), "{x:?} not in its own ball");
        ensure!(
            BigUint::from(set.len()) <= BigUint::from(1u8) << (r + 1),
            "log2|S| > distortion + 1 for {x:?}"
        );
        let ops = common::decode(&f.bits().to_string()).unwrap();
        let xs = x.to_string();
        let o_r = common::strings_upto(r as usize).find(|d| common::run(&ops, d, "", &lim).as_ref() == Some(&xs));
        ensure!(
            o_r.as_ref().map(|d| d.len()) == Some(r as usize),
            "distortion {r} vs oracle {o_r:?}"
        );
        let o_set: BTreeSet<String> = common::strings_upto(r as usize)
            .filter_map(|d| common::run(&ops, &d, "", &lim))
            .collect();
        let got: BTreeSet<String> = set.elements().iter().map(|y| y.to_string()).collect();
        ensure!(got == o_set, "ball of {} at {r} differs from oracle", f.bits());
        programs += 1;
    }
    Ok(format!(
        "{checked} set->pmf->func chains and {programs} program balls within bounds"
    ))
}

fn c8_deficiency() -> Check {
    let t = table22();
    let id = Model::Func(FuncModel::Program(Program::identity()));
    let two = rat(2, 1);
    let mut typical = 0;
    let mut tested: Vec<Bits> = Vec::new();
    for (x, e) in &t.entries {
        if x.len() <= 12 && e.k as usize == 6 + x.len() {
            let d = deficiency(t, x, &id, None).map_err(|e| e.to_string())?;
            ensure!(d.within(&two), "delta({x:?}) = {d} under the identity");
            typical += 1;
            tested.push(x.clone());
        }
    }
    ensure!(typical > 0, "no incompressible strings of length <= 12");
    let x = repeat_x();
    let d = deficiency(t, &x, &id, None).map_err(|e| e.to_string())?;
    ensure!(d.cmp_value(&rat(4, 1)).is_ge(), "delta(10^13) = {d}");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let all: Vec<&Bits> = t.entries.keys().collect();
    tested.extend(all.choose_multiple(&mut rng, 200).map(|x| (*x).clone()));
    tested.push(x.clone());
    for y in &tested {
        let single = Model::Set(FiniteSetModel::new(vec![y.clone()]).unwrap());
        let s = deficiency(t, y, &single, None).map_err(|e| e.to_string())?;
        ensure!(
            s.cmp_value(&rat(-1, 1)).is_ge() && s.cmp_value(&rat(0, 1)).is_le(),
            "singleton delta({y:?}) = {s}"
        );
    }
    Ok(format!(
        "{typical} incompressible strings typical, delta(10^13) = {d} ~ {:.2}, {} singletons in [-1, 0]",
        d.to_f64(),
        tested.len()
    ))
}

fn c9_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut digests = Vec::new();
    for p in [14u32, 16] {
        let bud = Budgets::with_pair_bits(p);
        let mut files: Vec<Vec<u8>> = Vec::new();
        let mut digest = None;
        for w in [1usize, 2, 8] {
            let t = build_table_with(&bud, &eps(), BuildOptions::with_workers(w)).map_err(|e| e.to_string())?;
            let path = dir.path().join(format!("t{p}-{w}.pvmt"));
            let saved = save_table(&t, &path).map_err(|e| e.to_string())?;
            ensure!(saved == snapshot_digest(&t), "digest returned by save differs");
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            ensure!(bytes == encode_snapshot(&t), "file differs from encoding");
            files.push(bytes);
            ensure!(
                digest.map_or(true, |d| d == saved),
                "budget {p}: {w} workers changed the digest"
            );
            digest = Some(saved);
        }
        ensure!(files.windows(2).all(|w| w[0] == w[1]), "budget {p}: snapshots differ");
        digests.push(format!("{p}:{}", hex_prefix(&digest.unwrap())));
    }
    Ok(format!("1/2/8 workers byte-identical ({})", digests.join(" ")))
}

fn hex_prefix(d: &[u8; 32]) -> String {
    d[..6].iter().map(|b| format!("{b:02x}")).collect()
}

fn c10_conditional() -> Check {
    let bud = Budgets::with_pair_bits(14);
    let t = table(14);
    let cache = TableCache::new(1 << 30, BuildOptions::with_workers(2));
    for (x, e) in &t.entries {
        ensure!(
            cache.k_cond(x, &eps(), &bud).map_err(|e| e.to_string())? == Complexity::Known(e.k),
            "k({x:?}|ε) != k"
        );
        for mode in [MutualMode::Plain, MutualMode::Witness] {
            let i = mutual_info(&cache, x, &eps(), &bud, mode).map_err(|e| e.to_string())?;
            ensure!(i.value == 0, "I({x:?} : ε) = {} in {mode:?} mode", i.value);
        }
        let i = mutual_info(&cache, &eps(), x, &bud, MutualMode::Plain).map_err(|e| e.to_string())?;
        ensure!(i.value == 0, "I(ε : {x:?}) = {}", i.value);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let keys: Vec<&Bits> = t.entries.keys().collect();
    let mut oracles: BTreeMap<String, OTable> = BTreeMap::new();
    let mut gaps = Vec::new();
    for _ in 0..200 {
        let x = *keys.choose(&mut rng).unwrap();
        let y = *keys.choose(&mut rng).unwrap();
        let kc = cache.k_cond(x, y, &bud).map_err(|e| e.to_string())?;
        let kc = kc.known().ok_or_else(|| format!("k({x:?}|{y:?}) unknown"))?;
        ensure!(kc <= t.entries[x].k, "k({x:?}|{y:?}) = {kc} > k = {}", t.entries[x].k);
        let o = oracles
            .entry(y.to_string())
            .or_insert_with(|| common::build(&Limits::pair(14), &y.to_string()));
        let ok = o.entries[&x.to_string()].k;
        ensure!(kc as usize == ok, "k({x:?}|{y:?}) = {kc} vs oracle {ok}");
        gaps.push(symmetry_gap(&cache, x, y, &bud, MutualMode::Plain).map_err(|e| e.to_string())?);
    }
    let nonzero = gaps.iter().filter(|g| **g != 0).count();
    let mean = gaps.iter().sum::<i64>() as f64 / gaps.len() as f64;
    Ok(format!(
        "{} entries conditional on ε match; 200 pairs dominated; symmetry gap min {} max {} mean {mean:.2} nonzero {nonzero}",
        t.len(),
        gaps.iter().min().unwrap(),
        gaps.iter().max().unwrap()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("prefix audit", c1_prefix_audit),
        ("oracle equivalence", c2_oracle_equivalence),
        ("sophistication bounds", c3_soph_bounds),
        ("identity and randomness", c4_identity_behaviour),
        ("repeating-pattern example", c5_worked_example),
        ("structure function shape", c6_structure_shape),
        ("model conversions", c7_conversions),
        ("deficiency calibration", c8_deficiency),
        ("determinism", c9_determinism),
        ("conditional complexity", c10_conditional),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
