// SPDX-License-Identifier: Apache-2.0

use leakload::corpus::{loaded_inverter, DUT};
use leakload::device::{preset, Environment};
use leakload::estimator::{DeviceSet, EstimateOptions};
use leakload::netlist::InputVector;
use leakload::solver::SolverConfig;
use leakload::variation::{monte_carlo, temperature_sweep, VariationSpec};

#[test]
fn monte_carlo_is_seeded_and_order_independent() {
    let c = loaded_inverter(6, 6);
    let p = preset("D25-S").unwrap();
    let spec = VariationSpec::vth_only(0.05, 64, 3);
    let env = Environment::default();
    let v = InputVector(vec![true]);
    let serial = monte_carlo(&c, &v, &p, &spec, &env, &SolverConfig::default(), false).unwrap();
    let parallel = monte_carlo(&c, &v, &p, &spec, &env, &SolverConfig::default(), true).unwrap();
    assert_eq!(serial, parallel);
    let other = monte_carlo(&c, &v, &p, &VariationSpec { seed: 4, ..spec.clone() }, &env, &SolverConfig::default(), false)
        .unwrap();
    assert_ne!(serial.totals, other.totals);
    assert_eq!(serial.samples, 64);
    assert_eq!(serial.histogram.with_loading.iter().sum::<usize>(), 64);
}

#[test]
fn zero_sigma_reproduces_nominal() {
    let c = loaded_inverter(2, 2);
    let p = preset("D25-G").unwrap();
    let mut spec = VariationSpec::vth_only(0.0, 8, 1);
    spec.inter = Default::default();
    let d = monte_carlo(&c, &InputVector(vec![false]), &p, &spec, &Environment::default(), &SolverConfig::default(), false)
        .unwrap();
    assert_eq!(d.with_loading.itotal.std, 0.0);
    assert_eq!(d.with_loading.itotal.min, d.with_loading.itotal.max);
    let first = d.totals[0];
    assert!(d.totals.iter().all(|t| *t == first));
}

#[test]
fn spec_file_round_trip() {
    let spec = VariationSpec::vth_only(0.03, 50, 9);
    let again = VariationSpec::parse(&spec.to_text()).unwrap();
    assert_eq!(spec, again);
    assert!(VariationSpec::parse("[intra]\nvdd = 0.01\n").is_err());
    assert!(VariationSpec::parse("[variation]\nsamples = 0\n").is_err());
}

#[test]
fn temperature_sweep_tracks_focus_gate() {
    let c = loaded_inverter(6, 6);
    let temps = [300.0, 325.0, 350.0, 375.0];
    let s = temperature_sweep(
        &c,
        &InputVector(vec![true]),
        &DeviceSet::Uniform(preset("D25-G").unwrap()),
        0.9,
        &temps,
        &SolverConfig::default(),
        EstimateOptions::default(),
        Some(DUT),
    )
    .unwrap();
    assert_eq!(s.points.len(), 4);
    let mut csv = Vec::new();
    s.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
    assert!(temperature_sweep(
        &c,
        &InputVector(vec![true]),
        &DeviceSet::Uniform(preset("D25-G").unwrap()),
        0.9,
        &[],
        &SolverConfig::default(),
        EstimateOptions::default(),
        None
    )
    .is_err());
}
