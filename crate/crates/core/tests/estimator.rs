// SPDX-License-Identifier: Apache-2.0

use leakload::corpus::{loaded_inverter, random_dag, DagParams, DUT};
use leakload::device::{preset, Component, Environment, Preset};
use leakload::estimator::{estimate, vector_sweep, DeviceSet, EstimateOptions, Estimator, VectorSource};
use leakload::netlist::{load_bench, InputVector};
use leakload::oracle::{compare, solve_full, OracleConfig};
use leakload::solver::SolverConfig;

fn bench(name: &str) -> leakload::netlist::Circuit {
    load_bench(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/benches").join(name)).unwrap()
}

#[test]
fn loading_disabled_reports_nominal() {
    let c = bench("c17.bench");
    let env = Environment::default();
    let est = Estimator::new(
        &c,
        &DeviceSet::Uniform(preset("D25-S").unwrap()),
        &env,
        SolverConfig::default(),
        EstimateOptions {
            loading: false,
            ..Default::default()
        },
    )
    .unwrap();
    let r = est.estimate(&"10101".parse().unwrap()).unwrap();
    assert_eq!(r.nominal_total, r.loaded_total);
    for g in &r.gates {
        assert_eq!(g.nominal, g.loaded);
    }
}

#[test]
fn zero_gate_tunneling_means_no_loading() {
    let mut p = preset("D25-S").unwrap();
    for d in [&mut p.nmos, &mut p.pmos] {
        d.a_ov = 0.0;
        d.a_ch = 0.0;
    }
    let c = loaded_inverter(6, 6);
    for bit in [false, true] {
        let r = estimate(&c, &InputVector(vec![bit]), &p, &Environment::default(), &SolverConfig::default()).unwrap();
        for g in &r.gates {
            assert_eq!(g.nominal, g.loaded, "{}", g.name);
            assert_eq!(g.ld_all.itotal, Some(0.0));
        }
    }
}

#[test]
fn ld_is_relative_change() {
    let c = loaded_inverter(6, 6);
    let r = estimate(&c, &InputVector(vec![true]), &preset("D25-S").unwrap(), &Environment::default(), &SolverConfig::default())
        .unwrap();
    let g = &r.gates[DUT];
    for comp in Component::ALL {
        let (n, l) = (g.nominal.get(comp), g.loaded.get(comp));
        let ld = g.ld_all.get(comp).unwrap();
        assert!((ld - (l - n) / n).abs() <= 1e-15 * ld.abs().max(1.0));
    }
    assert!(g.ld_all.itotal.unwrap() != 0.0);
}

#[test]
fn isolated_gates_agree_with_oracle() {
    let c = loaded_inverter(0, 0);
    let env = Environment::default();
    for p in Preset::ALL {
        let pair = p.params();
        for bit in [false, true] {
            let v = InputVector(vec![bit]);
            let r = estimate(&c, &v, &pair, &env, &SolverConfig::default()).unwrap();
            let s = solve_full(&c, &v, &DeviceSet::Uniform(pair), &env, &OracleConfig::default()).unwrap();
            assert!(s.converged);
            let cmp = compare(&s, &r).unwrap();
            assert!(cmp.total.itotal.unwrap().abs() < 1e-3, "{} {bit}: {:?}", p.name(), cmp.total);
        }
    }
}

#[test]
fn c17_oracle_residual() {
    let c = bench("c17.bench");
    let devices = DeviceSet::Uniform(preset("D25-S").unwrap());
    for v in ["00000", "10101", "11111"] {
        let s = solve_full(&c, &v.parse().unwrap(), &devices, &Environment::default(), &OracleConfig::default()).unwrap();
        assert!(s.converged);
        assert!(s.max_residual <= 1e-16, "{v}: {}", s.max_residual);
    }
}

#[test]
fn parallel_sweep_is_bit_identical() {
    let c = random_dag(&DagParams::new(12, 200), 5).unwrap();
    let devices = DeviceSet::Uniform(preset("D25-JN").unwrap());
    let run = |parallel| {
        let est = Estimator::new(
            &c,
            &devices,
            &Environment::default(),
            SolverConfig::default(),
            EstimateOptions {
                parallel,
                detail: false,
                ..Default::default()
            },
        )
        .unwrap();
        vector_sweep(&est, &VectorSource::Random { count: 16, seed: 2 }).unwrap()
    };
    assert_eq!(run(false), run(true));
}

#[test]
fn exhaustive_vectors_and_minimum() {
    let c = bench("c17.bench");
    let est = Estimator::new(
        &c,
        &DeviceSet::Uniform(preset("D25-S").unwrap()),
        &Environment::default(),
        SolverConfig::default(),
        EstimateOptions::default(),
    )
    .unwrap();
    let sw = vector_sweep(&est, &VectorSource::Exhaustive).unwrap();
    assert_eq!(sw.rows.len(), 32);
    let min = sw
        .rows
        .iter()
        .min_by(|a, b| a.nominal_total.itotal().total_cmp(&b.nominal_total.itotal()))
        .unwrap();
    assert_eq!(min.vector, sw.min_vector_nominal);
}
