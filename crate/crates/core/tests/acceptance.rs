// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//!     cargo test --release -p leakload --test acceptance

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use leakload::corpus::{loaded_inverter, loaded_nand2, random_dag, DagParams, Manifest, DUT};
use leakload::device::{preset, DevicePair, Environment, LeakageComponents};
use leakload::estimator::{estimate, vector_sweep, DeviceSet, EstimateOptions, Estimator, LoadingReport, VectorSource};
use leakload::netlist::{load_bench, parse_bench, simulate_logic, Circuit, InputVector};
use leakload::oracle::{compare, solve_full, OracleConfig};
use leakload::solver::SolverConfig;
use leakload::variation::{monte_carlo, VariationSpec};

type Outcome = Result<String, String>;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn pair(name: &str) -> DevicePair {
    preset(name).expect("preset")
}

fn report(c: &Circuit, v: &InputVector, p: &DevicePair, env: &Environment) -> LoadingReport {
    let r = estimate(c, v, p, env, &SolverConfig::default()).expect("estimate");
    assert_eq!(r.diagnostics.failures, 0, "gate solve failures");
    r
}

fn pct(x: f64) -> String {
    format!("{:+.3}%", x * 100.0)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Fixture and random corpus cases against the full-circuit solve.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let m = Manifest::load(&corpus().join("manifest.kv")).map_err(|e| e.to_string())?;
    let random = m.cases.iter().filter(|c| c.name.starts_with("rand_")).count();
    let (mut worst_total, mut worst_gate, mut runs) = (0.0f64, 0.0f64, 0);
    let mut bad = Vec::new();
    for case in &m.cases {
        let c = case.circuit(&corpus()).map_err(|e| e.to_string())?;
        if case.name.starts_with("rand_") && c.gates.len() > 50 {
            return Err(format!("{} has {} gates", case.name, c.gates.len()));
        }
        let devices = case.devices().map_err(|e| e.to_string())?;
        let env = case.env().map_err(|e| e.to_string())?;
        let est = Estimator::new(&c, &devices, &env, SolverConfig::default(), EstimateOptions::default())
            .map_err(|e| e.to_string())?;
        for v in case.vectors().map_err(|e| e.to_string())? {
            let r = est.estimate(&v).map_err(|e| e.to_string())?;
            let s = solve_full(&c, &v, &devices, &env, &OracleConfig::default()).map_err(|e| e.to_string())?;
            if !s.converged {
                return Err(format!("{} {v}: oracle did not converge", case.name));
            }
            let cmp = compare(&s, &r).map_err(|e| e.to_string())?;
            let t = cmp.total.itotal.unwrap_or(f64::INFINITY).abs();
            let g = cmp.worst_gate.map_or(0.0, |w| w.1.abs());
            if t > 0.02 || g > 0.10 {
                bad.push(format!("{} {v}", case.name));
            }
            worst_total = worst_total.max(t);
            worst_gate = worst_gate.max(g);
            runs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        bad.is_empty() && random >= 20 && secs < 60.0,
        format!(
            "{} cases ({random} random), {runs} vectors, worst total {} worst gate {}, {secs:.1} s{}",
            m.cases.len(),
            pct(worst_total),
            pct(worst_gate),
            if bad.is_empty() { String::new() } else { format!(", over tolerance: {}", bad.join(", ")) }
        ),
    )
}

/// Appends three inverters to the output of every reader of each front gate.
fn with_second_level(c: &Circuit) -> (Circuit, Vec<String>) {
    let pis: Vec<usize> = c.primary_inputs.clone();
    let mut text = c.to_bench();
    let mut fronts = Vec::new();
    let mut k = 0;
    for g in &c.gates {
        if !g.inputs.iter().all(|i| pis.contains(i)) {
            continue;
        }
        fronts.push(c.nets[g.output].clone());
        for &r in &c.fanout[g.output] {
            let net = &c.nets[c.gates[r].output];
            for _ in 0..3 {
                let _ = writeln!(text, "OUTPUT(second_{k})\nsecond_{k} = NOT({net})");
                k += 1;
            }
        }
    }
    (parse_bench(&text).expect("extended netlist"), fronts)
}

fn gate_by_output(c: &Circuit, net: &str) -> usize {
    let n = c.net_index(net).expect("net");
    c.gates.iter().position(|g| g.output == n).expect("driver")
}

fn one_level_locality() -> Outcome {
    let m = Manifest::load(&corpus().join("manifest.kv")).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut seen = std::collections::BTreeSet::new();
    for case in m.cases.iter().filter(|c| !c.name.starts_with("rand_")) {
        if !seen.insert(case.netlist.clone()) {
            continue;
        }
        let c = case.circuit(&corpus()).map_err(|e| e.to_string())?;
        let (ext, fronts) = with_second_level(&c);
        let devices = case.devices().map_err(|e| e.to_string())?;
        let env = case.env().map_err(|e| e.to_string())?;
        for v in case.vectors().map_err(|e| e.to_string())? {
            let a = solve_full(&c, &v, &devices, &env, &OracleConfig::default()).map_err(|e| e.to_string())?;
            let b = solve_full(&ext, &v, &devices, &env, &OracleConfig::default()).map_err(|e| e.to_string())?;
            if !(a.converged && b.converged) {
                return Err(format!("{} {v}: oracle did not converge", case.name));
            }
            for f in &fronts {
                let before = a.gate_leakage[gate_by_output(&c, f)].itotal();
                let after = b.gate_leakage[gate_by_output(&ext, f)].itotal();
                worst = worst.max(((after - before) / before).abs());
                checked += 1;
            }
        }
    }
    check(worst < 0.005, format!("{checked} front-gate solves, worst change {}", pct(worst)))
}

fn direction_suite() -> Outcome {
    let p = pair("D25-S");
    let env = Environment::default();
    let mut notes = Vec::new();
    let mut ok = true;
    let (mut last_in, mut last_out) = (0.0f64, 0.0f64);
    for n in 1..=12 {
        // DUT input '0': the driving inverter sees a '1'
        let g = &report(&loaded_inverter(n, 0), &InputVector(vec![true]), &p, &env).gates[DUT];
        let l = g.ld_in_all.expect("input loading");
        let (s, gt, b, t) = (l.isub.unwrap(), l.igate.unwrap(), l.ibtbt.unwrap(), l.itotal.unwrap());
        ok &= s > 0.0 && gt < 0.0 && b.abs() < 0.01 && t.abs() > last_in;
        last_in = t.abs();
        if n == 12 {
            notes.push(format!("in x12 sub {} gate {} btbt {}", pct(s), pct(gt), pct(b)));
        }
        // DUT output '0': input '1'
        let g = &report(&loaded_inverter(0, n), &InputVector(vec![false]), &p, &env).gates[DUT];
        let l = g.ld_out;
        let (s, gt, b, t) = (l.isub.unwrap(), l.igate.unwrap(), l.ibtbt.unwrap(), l.itotal.unwrap());
        ok &= s < 0.0 && gt < 0.0 && b < 0.0 && t.abs() > last_out;
        last_out = t.abs();
        if n == 12 {
            notes.push(format!("out x12 sub {} gate {} btbt {}", pct(s), pct(gt), pct(b)));
        }
    }
    check(ok, notes.join("; "))
}

/// NAND2 input patterns in stack order, input 0 next to the output.
const NAND_VECTORS: [&str; 4] = ["00", "01", "10", "11"];

fn nand_table(p: &DevicePair) -> Vec<(f64, f64)> {
    let c = loaded_nand2(6);
    let env = Environment::default();
    NAND_VECTORS
        .iter()
        .map(|v| {
            // primary inputs are inverted before reaching the NAND
            let pi = InputVector(v.chars().map(|b| b == '0').collect());
            let r = report(&c, &pi, p, &env);
            let g = &r.gates[2];
            let state = simulate_logic(&c, &pi).unwrap();
            let seen: String = c.gates[2].inputs.iter().map(|&n| if state.get(n) { '1' } else { '0' }).collect();
            assert_eq!(&seen, v);
            (g.nominal.itotal(), g.ld_in_all.and_then(|l| l.itotal).unwrap())
        })
        .collect()
}

fn argmin(t: &[(f64, f64)]) -> &'static str {
    let k = (0..t.len()).min_by(|&a, &b| t[a].0.total_cmp(&t[b].0)).unwrap();
    NAND_VECTORS[k]
}

fn stacking() -> Outcome {
    let s = nand_table(&pair("D25-S"));
    let g = nand_table(&pair("D25-G"));
    let ok = s[0].0 < s[1].0
        && s[0].0 < s[2].0
        && s[0].1.abs() < s[1].1.abs()
        && s[0].1.abs() < s[2].1.abs()
        && argmin(&s) == "00"
        && argmin(&g) == "10";
    let row = |t: &[(f64, f64)]| {
        t.iter()
            .zip(NAND_VECTORS)
            .map(|((i, l), v)| format!("{v}:{i:.3e}/{}", pct(*l)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    check(ok, format!("S {} min {}; G min {}", row(&s), argmin(&s), argmin(&g)))
}

fn flavor_ordering() -> Outcome {
    let c = loaded_inverter(6, 6);
    let env = Environment::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for bit in [false, true] {
        let ld = |name: &str| {
            let g = report(&c, &InputVector(vec![!bit]), &pair(name), &env).gates[DUT].clone();
            (g.ld_in_all.unwrap().itotal.unwrap().abs(), g.ld_out.itotal.unwrap().abs())
        };
        let (s, g, jn) = (ld("D25-S"), ld("D25-G"), ld("D25-JN"));
        ok &= s.0 > g.0 && s.0 > jn.0 && jn.1 > s.1 && jn.1 > g.1 && g.0 < jn.0 && g.1 < s.1;
        notes.push(format!(
            "in={} |in| S {} G {} JN {}, |out| S {} G {} JN {}",
            u8::from(bit),
            pct(s.0),
            pct(g.0),
            pct(jn.0),
            pct(s.1),
            pct(g.1),
            pct(jn.1)
        ));
    }
    check(ok, notes.join("; "))
}

fn temperature() -> Outcome {
    let p = pair("D25-G");
    let inv = loaded_inverter(0, 0);
    let avg = |t: f64| {
        let env = Environment::new(t, 0.9).unwrap();
        let mut sum = LeakageComponents::default();
        for bit in [false, true] {
            sum += report(&inv, &InputVector(vec![bit]), &p, &env).gates[DUT].nominal;
        }
        sum
    };
    let cold = avg(300.0);
    let cross = (300..=400).step_by(5).map(f64::from).find(|&t| {
        let s = avg(t);
        s.isub > s.igate()
    });
    let fan = loaded_inverter(6, 6);
    let (mut sub, mut tot) = (Vec::new(), Vec::new());
    for t in [300.0, 325.0, 350.0, 375.0] {
        let env = Environment::new(t, 0.9).unwrap();
        let g = &report(&fan, &InputVector(vec![true]), &p, &env).gates[DUT];
        sub.push(g.ld_all.isub.unwrap());
        tot.push(g.ld_all.itotal.unwrap().abs());
    }
    let range = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    let rising = sub.windows(2).all(|w| w[1] > w[0]);
    let ok = cold.igate() > cold.isub && cross.is_some() && rising && range(&tot) < range(&sub);
    let list = |v: &[f64]| v.iter().map(|x| pct(*x)).collect::<Vec<_>>().join(" ");
    check(
        ok,
        format!(
            "300 K igate/isub {:.2}, isub > igate from {} K; LD sub [{}] |LD tot| [{}]",
            cold.igate() / cold.isub,
            cross.map_or("never".into(), |t| t.to_string()),
            list(&sub),
            list(&tot)
        ),
    )
}

fn variation() -> Outcome {
    let c = loaded_inverter(6, 6);
    let spec = VariationSpec::vth_only(0.05, 1000, 11);
    let env = Environment::default();
    let run = || {
        monte_carlo(&c, &InputVector(vec![true]), &pair("D25-S"), &spec, &env, &SolverConfig::default(), true)
            .expect("monte carlo")
    };
    let (a, b) = (run(), run());
    let same = a.totals.len() == b.totals.len()
        && a.totals.iter().zip(&b.totals).all(|(x, y)| {
            x.0.itotal().to_bits() == y.0.itotal().to_bits() && x.1.itotal().to_bits() == y.1.itotal().to_bits()
        });
    let with = a.with_loading.itotal;
    let without = a.without_loading.itotal;
    check(
        with.std > without.std && same && a.failures == 0,
        format!(
            "{} samples, std increase {}, max increase {} (paper: >40% and about 2x), reproducible {same}",
            a.samples,
            pct(a.std_increase()),
            pct(with.max / without.max - 1.0)
        ),
    )
}

fn sign_mixing() -> Outcome {
    let m = Manifest::load(&corpus().join("manifest.kv")).map_err(|e| e.to_string())?;
    let mut mixed = None;
    'cases: for case in &m.cases {
        let c = case.circuit(&corpus()).map_err(|e| e.to_string())?;
        let devices = case.devices().map_err(|e| e.to_string())?;
        let env = case.env().map_err(|e| e.to_string())?;
        let est = Estimator::new(&c, &devices, &env, SolverConfig::default(), EstimateOptions::default())
            .map_err(|e| e.to_string())?;
        for v in case.vectors().map_err(|e| e.to_string())? {
            let r = est.estimate(&v).map_err(|e| e.to_string())?;
            let signs: Vec<f64> = r.gates.iter().filter_map(|g| g.ld_all.itotal).collect();
            if signs.iter().any(|x| *x > 0.0) && signs.iter().any(|x| *x < 0.0) {
                mixed = Some(format!("{} {v}", case.name));
                break 'cases;
            }
        }
    }
    let c = random_dag(&DagParams::new(32, 1000), 8).map_err(|e| e.to_string())?;
    let est = Estimator::new(
        &c,
        &DeviceSet::Uniform(pair("D25-S")),
        &Environment::default(),
        SolverConfig::default(),
        EstimateOptions {
            detail: false,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let sw = vector_sweep(&est, &VectorSource::Random { count: 100, seed: 1 }).map_err(|e| e.to_string())?;
    let a = &sw.average_abs_ld;
    let (s, b, g) = (a.isub.unwrap(), a.ibtbt.unwrap(), a.igate.unwrap());
    check(
        mixed.is_some() && s >= b && b >= g,
        format!(
            "mixed signs in {}; 1000-gate sweep |LD| sub {} btbt {} gate {} (paper: ~8% / ~4.5% / ~3.6%)",
            mixed.unwrap_or_else(|| "no case".into()),
            pct(s),
            pct(b),
            pct(g)
        ),
    )
}

fn reference(kw: &str, bits: &[bool]) -> bool {
    let x = bits.iter().fold(false, |a, &b| a ^ b);
    match kw {
        "AND" => bits.iter().all(|&b| b),
        "OR" => bits.iter().any(|&b| b),
        "NAND" => !bits.iter().all(|&b| b),
        "NOR" => !bits.iter().any(|&b| b),
        "XOR" => x,
        _ => !x,
    }
}

fn parser() -> Outcome {
    let m = Manifest::load(&corpus().join("manifest.kv")).map_err(|e| e.to_string())?;
    let mut files = std::collections::BTreeSet::new();
    for case in &m.cases {
        files.insert(case.netlist.clone());
    }
    for f in &files {
        let c = load_bench(&corpus().join(f)).map_err(|e| e.to_string())?;
        let again = parse_bench(&c.to_bench()).map_err(|e| e.to_string())?;
        if !c.isomorphic(&again) {
            return Err(format!("{} does not round-trip", f.display()));
        }
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let mut vectors = 0;
    for kw in ["AND", "OR", "NAND", "NOR", "XOR", "XNOR"] {
        for k in 2..=9usize {
            let names: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
            let mut text: String = names.iter().map(|n| format!("INPUT({n})\n")).collect();
            let _ = writeln!(text, "OUTPUT(y)\ny = {kw}({})", names.join(", "));
            let c = parse_bench(&text).map_err(|e| e.to_string())?;
            let y = c.net_index("y").unwrap();
            let vs: Vec<InputVector> = if k <= 4 {
                (0..1u64 << k).map(|m| InputVector::from_index(k, m)).collect()
            } else {
                (0..1000).map(|_| InputVector::random(k, &mut rng)).collect()
            };
            for v in &vs {
                if simulate_logic(&c, v).map_err(|e| e.to_string())?.get(y) != reference(kw, &v.0) {
                    return Err(format!("{kw}{k} wrong at {v}"));
                }
            }
            vectors += vs.len();
        }
    }
    Ok(format!("{} fixtures round-trip, {vectors} decomposition vectors", files.len()))
}

fn performance() -> Outcome {
    let c = random_dag(&DagParams::new(256, 10_000), 42).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let est = Estimator::new(
        &c,
        &DeviceSet::Uniform(pair("D25-S")),
        &Environment::default(),
        SolverConfig::default(),
        EstimateOptions {
            detail: false,
            parallel: false,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let sw = vector_sweep(&est, &VectorSource::Random { count: 100, seed: 3 }).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 30.0 && sw.rows.len() == 100 && sw.failures == 0,
        format!("{} gates x 100 vectors in {secs:.2} s single-threaded", c.gates.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("one-level locality", one_level_locality),
        ("direction suite", direction_suite),
        ("stacking and vector dependence", stacking),
        ("device-flavor ordering", flavor_ordering),
        ("temperature", temperature),
        ("variation", variation),
        ("circuit-level sign mixing", sign_mixing),
        ("parser", parser),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
