// SPDX-License-Identifier: Apache-2.0

//! Preset calibration. Searches device shape parameters for the three
//! flavors against the behavioural targets, then scales each flavor's
//! current prefactors so the isolated inverter leaks `TARGET_TOTAL`.
//!
//!     cargo run --release --example calibrate            # report only
//!     cargo run --release --example calibrate -- --write # rewrite presets/

use std::path::Path;

use leakload::corpus::{random_dag, DagParams};
use leakload::device::{eval_subthreshold, DeviceParams, DevicePair, Environment, Preset, TerminalVoltages};
use leakload::estimator::{estimate, vector_sweep, DeviceSet, EstimateOptions, Estimator, GateReport, VectorSource};
use leakload::netlist::{Circuit, CircuitBuilder, InputVector, Keyword};
use leakload::solver::SolverConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGET_TOTAL: f64 = 100e-9;
const SEED: u64 = 2024;
const DIMS: usize = 10;

// (lo, hi) per shape coordinate:
// n, vth0, lambda, kappa, log10(a_ov/is0), log10(a_ch/a_ov), alpha, log10(jb/is0), bb0, kappa_bb
const BOUNDS: [(f64, f64); DIMS] = [
    (1.2, 3.0),
    (0.0, 0.45),
    (0.0, 0.3),
    (3e-4, 3e-3),
    (-6.0, 1.0),
    (-1.0, 1.0),
    (1.0, 8.0),
    (-4.0, 3.0),
    (1.0, 20.0),
    (0.0, 1.0),
];

fn device(x: &[f64], pmos: bool) -> DeviceParams {
    let is0 = 1e-7;
    let a_ov = is0 * 10f64.powf(x[4]);
    let bb0 = x[8];
    // keeps the junction current's 300 K to 375 K ratio at or below 1.45
    let kbb = x[9] * 0.0045 / bb0;
    let mut p = DeviceParams {
        is0,
        n: x[0],
        vth0: x[1],
        lambda_dibl: x[2],
        kappa_vth_t: x[3],
        a_ov,
        a_ch: a_ov * 10f64.powf(x[5]),
        alpha_g: x[6],
        jb: is0 * 10f64.powf(x[7]),
        bb0,
        kappa_bb_t: kbb,
        w_ratio: 1.0,
    };
    if pmos {
        p.is0 *= 0.5;
        p.n *= 1.12;
        p.lambda_dibl *= 1.3;
        p.a_ov *= 0.6;
        p.a_ch *= 0.6;
        p.jb *= 2.0;
    }
    p
}

fn pair(x: &[f64]) -> DevicePair {
    DevicePair {
        nmos: device(x, false),
        pmos: device(x, true),
    }
}

fn scaled(p: &DevicePair, k: f64) -> DevicePair {
    let mut p = p.clone();
    for d in [&mut p.nmos, &mut p.pmos] {
        d.is0 *= k;
        d.a_ov *= k;
        d.a_ch *= k;
        d.jb *= k;
    }
    p
}

struct Fixtures {
    inv: Circuit,
    fan: Vec<(usize, usize, Circuit)>,
    nand: Circuit,
    dag: Circuit,
}

fn loaded_inverter(nin: usize, nout: usize) -> Circuit {
    let mut b = CircuitBuilder::new();
    b.input("a").output("out");
    b.assign(Keyword::Not, &["a"], "in");
    b.assign(Keyword::Not, &["in"], "out");
    for i in 0..nin {
        b.assign(Keyword::Not, &["in"], &format!("l{i}"));
    }
    for i in 0..nout {
        b.assign(Keyword::Not, &["out"], &format!("o{i}"));
    }
    b.build().expect("fixture")
}

fn nand_fixture() -> Circuit {
    let mut b = CircuitBuilder::new();
    b.input("a").input("b").output("y");
    b.assign(Keyword::Not, &["a"], "x1");
    b.assign(Keyword::Not, &["b"], "x2");
    b.assign(Keyword::Nand, &["x1", "x2"], "y");
    for i in 0..6 {
        b.assign(Keyword::Not, &["x1"], &format!("p{i}"));
        b.assign(Keyword::Not, &["x2"], &format!("q{i}"));
    }
    b.build().expect("fixture")
}

impl Fixtures {
    fn new() -> Self {
        let mut fan = Vec::new();
        for (i, o) in [(0, 0), (1, 0), (12, 0), (0, 1), (0, 12), (6, 0), (0, 6), (6, 6)] {
            fan.push((i, o, loaded_inverter(i, o)));
        }
        Fixtures {
            inv: loaded_inverter(0, 0),
            fan,
            nand: nand_fixture(),
            dag: random_dag(&DagParams::new(10, 40), 7).expect("dag"),
        }
    }

    fn fan(&self, i: usize, o: usize) -> &Circuit {
        &self.fan.iter().find(|f| f.0 == i && f.1 == o).expect("fixture").2
    }
}

/// The driven inverter of a loaded-inverter fixture with its own input at `bit`.
fn dut(c: &Circuit, p: &DevicePair, env: &Environment, bit: bool) -> Option<GateReport> {
    let r = match estimate(c, &InputVector(vec![!bit]), p, env, &SolverConfig::default()) {
        Ok(r) => r,
        Err(e) => {
            if std::env::var_os("CAL_DEBUG").is_some() {
                eprintln!("estimate failed: {e}");
            }
            return None;
        }
    };
    if r.diagnostics.failures > 0 {
        if std::env::var_os("CAL_DEBUG").is_some() {
            let names: Vec<&str> = r.gates.iter().filter(|g| g.failed).map(|g| g.name.as_str()).collect();
            eprintln!("{} gates, bit {bit}, T {}: failed {names:?}", c.gates.len(), env.temperature);
            eprintln!("{}", p.to_text("failing"));
        }
        return None;
    }
    Some(r.gates[1].clone())
}

#[derive(Default, Debug)]
struct Flavor {
    share: f64,
    total: f64,
    droop: f64,
    in_ld: [f64; 2],
    out_ld: [f64; 2],
}

/// Records a positive penalty term with the source line that produced it.
fn term(log: &mut Vec<String>, line: u32, v: f64) -> f64 {
    if v > 1e-9 {
        log.push(format!("penalty line {line}: {v:.4}"));
    }
    v
}

fn hinge(x: f64) -> f64 {
    x.max(0.0)
}

/// `a` should exceed `b` by `margin` in ratio.
fn above(a: f64, b: f64, margin: f64) -> f64 {
    hinge((b.abs() * margin + 1e-12).ln() - (a.abs() + 1e-12).ln())
}

fn flavor(p: &DevicePair, preset: Preset, fx: &Fixtures, env: &Environment, log: &mut Vec<String>) -> Option<Flavor> {
    let mut f = Flavor::default();
    let mut sum = leakload::device::LeakageComponents::default();
    for bit in [false, true] {
        let g = dut(&fx.inv, p, env, bit)?;
        sum += g.nominal;
        let rail = if bit { 0.0 } else { env.vdd };
        f.droop = f.droop.max((g.output_voltage - rail).abs());
    }
    f.total = sum.itotal() / 2.0;
    f.share = sum.get(preset.dominant()) / sum.itotal();
    for (k, bit) in [false, true].into_iter().enumerate() {
        let g = dut(fx.fan(6, 6), p, env, bit)?;
        f.in_ld[k] = g.ld_in_all?.itotal?;
        f.out_ld[k] = g.ld_out.itotal?;
    }
    log.push(format!(
        "{:6} share {:.3} total {:.3e} droop {:.2} mV in_ld {:+.3}% {:+.3}% out_ld {:+.3}% {:+.3}%",
        preset.name(),
        f.share,
        f.total,
        f.droop * 1e3,
        f.in_ld[0] * 100.0,
        f.in_ld[1] * 100.0,
        f.out_ld[0] * 100.0,
        f.out_ld[1] * 100.0
    ));
    Some(f)
}

fn nand_totals(p: &DevicePair, fx: &Fixtures, env: &Environment) -> Option<[(f64, f64); 4]> {
    let mut out = [(0.0, 0.0); 4];
    for (m, slot) in out.iter_mut().enumerate() {
        // bits of the NAND's own inputs; fixture inputs are inverted
        let v = InputVector(vec![m & 2 == 0, m & 1 == 0]);
        let r = estimate(&fx.nand, &v, p, env, &SolverConfig::default()).ok()?;
        let g = &r.gates[2];
        *slot = (g.nominal.itotal(), g.ld_in_all?.itotal?);
    }
    Some(out)
}

fn evaluate(x: &[f64], fx: &Fixtures, verbose: bool) -> (f64, Vec<String>) {
    let mut log = Vec::new();
    let r = evaluate_inner(x, fx, &mut log);
    if verbose {
        for l in &log {
            println!("  {l}");
        }
    }
    (r.unwrap_or(1e6), log)
}

fn evaluate_inner(x: &[f64], fx: &Fixtures, log: &mut Vec<String>) -> Option<f64> {
    let env = Environment::default();
    let pairs: Vec<DevicePair> = (0..3).map(|k| pair(&x[k * DIMS..(k + 1) * DIMS])).collect();
    let mut pen = 0.0;
    let mut fl = Vec::new();
    for (k, preset) in Preset::ALL.into_iter().enumerate() {
        let f = flavor(&pairs[k], preset, fx, &env, log)?;
        pen += term(log, 241, 20.0 * hinge(0.66 - f.share));
        let droop_cap = if preset == Preset::D25S { 0.004 } else { 0.015 };
        pen += term(log, 243, 200.0 * hinge(f.droop - droop_cap));
        // loading magnitudes kept in the range where one-level estimation holds
        for v in f.in_ld.iter().chain(&f.out_ld) {
            pen += term(log, 246, 20.0 * hinge(v.abs() - 0.12));
        }
        fl.push(f);
    }
    let (s, g, jn) = (&fl[0], &fl[1], &fl[2]);
    // paper-scale input loading on the default flavor
    pen += 2.0 * hinge((0.03 / s.in_ld[0].abs().max(1e-9)).ln());
    for k in 0..2 {
        pen += term(log, 252, above(s.in_ld[k], g.in_ld[k], 1.15) + above(s.in_ld[k], jn.in_ld[k], 1.15));
        pen += term(log, 253, above(jn.in_ld[k], g.in_ld[k], 1.1));
        pen += term(log, 254, above(jn.out_ld[k], s.out_ld[k], 1.15) + above(jn.out_ld[k], g.out_ld[k], 1.15));
        pen += term(log, 255, above(s.out_ld[k], g.out_ld[k], 1.1));
    }

    // direction suite on D25-S
    let sp = &pairs[0];
    let mut mags = Vec::new();
    for n in [1, 6, 12] {
        let g = dut(fx.fan(n, 0), sp, &env, false)?;
        let l = g.ld_in_all?;
        pen += term(log, 264, 100.0 * hinge(0.005 - l.isub?) + 100.0 * hinge(l.igate? + 0.002));
        pen += term(log, 265, 200.0 * hinge(l.ibtbt?.abs() - 0.005));
        mags.push(l.itotal?.abs());
        if n == 12 {
            log.push(format!(
                "S in-load 12: sub {:+.3}% g {:+.3}% b {:+.4}%",
                l.isub? * 100.0,
                l.igate? * 100.0,
                l.ibtbt? * 100.0
            ));
        }
    }
    for n in [1, 6, 12] {
        let g = dut(fx.fan(0, n), sp, &env, true)?;
        let l = g.ld_out;
        for c in [l.isub?, l.igate?, l.ibtbt?] {
            pen += term(log, 280, 200.0 * hinge(c + 0.0002));
        }
        if n == 12 {
            log.push(format!(
                "S out-load 12: sub {:+.3}% g {:+.3}% b {:+.3}%",
                l.isub? * 100.0,
                l.igate? * 100.0,
                l.ibtbt? * 100.0
            ));
        }
    }

    // stacking
    let ns = nand_totals(sp, fx, &env)?;
    pen += term(log, 294, 10.0 * (above(ns[1].0, ns[0].0, 1.05) + above(ns[2].0, ns[0].0, 1.05) + above(ns[3].0, ns[0].0, 1.05)));
    pen += term(log, 295, above(ns[1].1, ns[0].1, 1.1) + above(ns[2].1, ns[0].1, 1.1));
    let ng = nand_totals(&pairs[1], fx, &env)?;
    pen += term(log, 297, 10.0 * (above(ng[0].0, ng[2].0, 1.05) + above(ng[1].0, ng[2].0, 1.05) + above(ng[3].0, ng[2].0, 1.05)));
    log.push(format!(
        "nand S {:.3e} {:.3e} {:.3e} {:.3e} | G {:.3e} {:.3e} {:.3e} {:.3e}",
        ns[0].0, ns[1].0, ns[2].0, ns[3].0, ng[0].0, ng[1].0, ng[2].0, ng[3].0
    ));

    // device-level temperature sensitivity of the default flavor
    let off = TerminalVoltages::new(0.0, 0.9, 0.0, 0.0);
    let hot = Environment::new(375.0, 0.9).ok()?;
    let ratio = eval_subthreshold(&sp.nmos, &off, &hot).ok()? / eval_subthreshold(&sp.nmos, &off, &env).ok()?;
    pen += term(log, 307, 10.0 * hinge((6.0f64).ln() - ratio.ln()));

    // temperature on D25-G
    let gp = &pairs[1];
    let mut sub_ld = Vec::new();
    let mut tot_ld = Vec::new();
    for t in [300.0, 325.0, 350.0, 375.0] {
        let e = Environment::new(t, 0.9).ok()?;
        let d = dut(fx.fan(6, 6), gp, &e, false)?;
        sub_ld.push(d.ld_all.isub?);
        tot_ld.push(d.ld_all.itotal?.abs());
    }
    for w in sub_ld.windows(2) {
        pen += term(log, 320, 100.0 * hinge(0.0002 + 0.01 * w[0].abs() - (w[1] - w[0])));
    }
    pen += term(log, 322, 100.0 * hinge(0.005 - sub_ld[0].abs()));
    let range = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    pen += term(log, 323, 100.0 * hinge(range(&tot_ld) - 0.8 * range(&sub_ld)));
    let e400 = Environment::new(400.0, 0.9).ok()?;
    let mut sum = leakload::device::LeakageComponents::default();
    for bit in [false, true] {
        sum += dut(&fx.inv, gp, &e400, bit)?.nominal;
    }
    pen += term(log, 329, 10.0 * above(sum.isub, sum.igate(), 1.15));
    log.push(format!(
        "G temp: LD sub {:?} |LD tot| {:?} at 400 K sub {:.3e} g {:.3e}; S sub ratio 375/300 {:.2}",
        sub_ld.iter().map(|v| (v * 1e4).round() / 100.0).collect::<Vec<_>>(),
        tot_ld.iter().map(|v| (v * 1e4).round() / 100.0).collect::<Vec<_>>(),
        sum.isub,
        sum.igate(),
        ratio
    ));

    // circuit-level component ordering on D25-S
    let est = Estimator::new(
        &fx.dag,
        &DeviceSet::Uniform(sp.clone()),
        &env,
        SolverConfig::default(),
        EstimateOptions {
            detail: false,
            ..Default::default()
        },
    )
    .ok()?;
    let sw = vector_sweep(&est, &VectorSource::Random { count: 8, seed: 1 }).ok()?;
    let a = &sw.average_abs_ld;
    pen += term(log, 353, 5.0 * (above(a.isub?, a.ibtbt?, 1.15) + above(a.ibtbt?, a.igate?, 1.15)));
    log.push(format!(
        "S sweep |LD| sub {:.3}% btbt {:.3}% gate {:.3}% total {:.3}%",
        a.isub? * 100.0,
        a.ibtbt? * 100.0,
        a.igate? * 100.0,
        a.itotal? * 100.0
    ));
    Some(pen)
}

fn clamp(x: &mut [f64]) {
    for (i, v) in x.iter_mut().enumerate() {
        let (lo, hi) = BOUNDS[i % DIMS];
        *v = v.clamp(lo, hi);
    }
}

fn start_point() -> Vec<f64> {
    // subthreshold, gate and junction dominated guesses
    let s = [1.47028, 0.06252, 0.06395, 2.13e-3, -2.9937, 0.87134, 3.4205, -3.9998, 8.9875, 0.3];
    let g = [1.28185, 0.30974, 0.02878, 7.7234e-4, -4.686, 1.0, 4.00901, -2.16535, 1.0, 1.0];
    let jn = [2.006, 0.261, 0.131, 1.5e-3, -3.0, 0.0514, 2.64, 1.211, 4.0, 0.3];
    [s, g, jn].concat()
}

/// Uniform samples of one flavor's block with the others held fixed.
fn sample_block(fx: &Fixtures, rng: &mut ChaCha8Rng, best: &mut Vec<f64>, best_pen: &mut f64, block: usize, n: usize) {
    for _ in 0..n {
        let mut x = best.clone();
        for i in 0..DIMS {
            let (lo, hi) = BOUNDS[i];
            x[block * DIMS + i] = lo + (hi - lo) * rng.random::<f64>();
        }
        let p = evaluate(&x, fx, false).0;
        if p < *best_pen {
            *best = x;
            *best_pen = p;
            eprintln!("block {block} sample penalty {p:.5}");
        }
    }
}

fn search(fx: &Fixtures, budget: usize, samples: usize, blocks: Vec<usize>) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut best = start_point();
    let mut best_pen = evaluate(&best, fx, true).0;
    eprintln!("start penalty {best_pen:.5}");
    for block in blocks {
        sample_block(fx, &mut rng, &mut best, &mut best_pen, block, samples);
    }
    let mut step: Vec<f64> = (0..3 * DIMS).map(|i| (BOUNDS[i % DIMS].1 - BOUNDS[i % DIMS].0) * 0.1).collect();
    let mut evals = 0;
    while evals < budget && best_pen > 0.0 {
        let mut improved = false;
        for i in 0..3 * DIMS {
            for dir in [1.0, -1.0] {
                let mut x = best.clone();
                x[i] += dir * step[i] * (0.5 + rng.random::<f64>());
                clamp(&mut x);
                let p = evaluate(&x, fx, false).0;
                evals += 1;
                if p < best_pen {
                    best = x;
                    best_pen = p;
                    step[i] *= 1.5;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
            if step.iter().zip(0..).all(|(s, i)| *s < (BOUNDS[i % DIMS].1 - BOUNDS[i % DIMS].0) * 1e-3) {
                break;
            }
        }
        eprintln!("evals {evals} penalty {best_pen:.5}");
        if improved {
            eprintln!("shape {best:?}");
        }
    }
    best
}

fn main() {
    let write = std::env::args().any(|a| a == "--write");
    let budget = std::env::args()
        .skip_while(|a| a != "--budget")
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4000);
    let samples = std::env::args()
        .skip_while(|a| a != "--samples")
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let blocks: Vec<usize> = std::env::args()
        .skip_while(|a| a != "--blocks")
        .nth(1)
        .map(|s| s.split(',').filter_map(|b| b.parse().ok()).collect())
        .unwrap_or_else(|| vec![0, 1, 2]);
    let fx = Fixtures::new();
    let x = search(&fx, budget, samples, blocks);
    let (pen, _) = evaluate(&x, &fx, true);
    println!("final penalty {pen:.6}");
    println!("shape {x:?}");
    let env = Environment::default();
    for (k, preset) in Preset::ALL.into_iter().enumerate() {
        let p = pair(&x[k * DIMS..(k + 1) * DIMS]);
        let mut total = 0.0;
        for bit in [false, true] {
            total += dut(&fx.inv, &p, &env, bit).expect("inverter").nominal.itotal() / 2.0;
        }
        let p = scaled(&p, TARGET_TOTAL / total);
        let text = p.to_text(&format!(
            "{} device flavor, {}-dominated leakage. Generated by examples/calibrate.rs.",
            preset.name(),
            preset.dominant().name()
        ));
        if write {
            let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(preset.file_name());
            std::fs::write(&path, &text).expect("write preset");
            println!("wrote {}", path.display());
        } else {
            println!("--- {}\n{text}", preset.file_name());
        }
    }
}
