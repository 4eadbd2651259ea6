// SPDX-License-Identifier: Apache-2.0

//! Reference solution: every net and internal node of the circuit solved
//! together by damped Gauss–Seidel sweeps.
//!
//! Each sweep visits gates in topological order. A gate's stack nodes are
//! re-solved from its own transistors, then its output net from the driver's
//! transistors plus the gate-terminal currents of every reader at their
//! present voltages. Updates are damped: `V += damping * (V* - V)`. Gates with
//! more than one stack node also take Newton steps over those nodes together,
//! kept only when they lower the stack residual.

use serde::{Deserialize, Serialize};

use crate::device::{Environment, LeakageComponents};
use crate::error::{Error, Result};
use crate::estimator::{CircuitModels, ComponentLd, DeviceSet, LoadingReport};
use crate::gates::GateLibrary;
use crate::netlist::{simulate_logic, Circuit, InputVector};
use crate::solver::{decreasing_root, GateModel, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Largest voltage move of a converged sweep, volts.
    pub voltage_tolerance: f64,
    /// Largest KCL residual of a converged solution, amperes.
    pub current_tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            voltage_tolerance: 1e-7,
            current_tolerance: 1e-16,
            max_iterations: 10_000,
            damping: 0.7,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping {} outside (0, 1]", self.damping)));
        }
        if !(self.voltage_tolerance > 0.0 && self.current_tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::Config("oracle tolerances and iteration limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub vector: String,
    pub net_voltages: Vec<f64>,
    /// Stack and boundary node voltages per gate.
    pub internal_voltages: Vec<Vec<f64>>,
    pub iterations: usize,
    pub max_residual: f64,
    pub converged: bool,
    pub gate_leakage: Vec<LeakageComponents>,
    pub total: LeakageComponents,
}

struct State<'a> {
    circuit: &'a Circuit,
    models: &'a [std::sync::Arc<GateModel>],
    /// Per-gate node voltages in template layout.
    local: Vec<Vec<f64>>,
    nets: Vec<f64>,
    /// Input pins of each reader gate that read each net.
    readers: Vec<Vec<(usize, Vec<usize>)>>,
}

impl State<'_> {
    fn sync(&mut self, g: usize) {
        let gate = &self.circuit.gates[g];
        let v = &mut self.local[g];
        for (p, &n) in gate.inputs.iter().enumerate() {
            v[2 + p] = self.nets[n];
        }
        let last = v.len() - 1;
        v[last] = self.nets[gate.output];
    }

    /// KCL residual of a driven net at voltage `x`.
    fn net_residual(&mut self, g: usize, x: f64) -> f64 {
        let net = self.circuit.gates[g].output;
        let model = &self.models[g];
        let k_out = model.template.unknown_count() - 1;
        let v = &mut self.local[g];
        let last = v.len() - 1;
        v[last] = x;
        let mut r = model.node_residual(k_out, v, 0.0);
        for (reader, pins) in &self.readers[net] {
            let rv = &mut self.local[*reader];
            for &p in pins {
                rv[2 + p] = x;
            }
            r -= self.models[*reader].input_draw(rv, pins);
        }
        r
    }

    fn internal_residual(&self, g: usize, k: usize) -> f64 {
        self.models[g].node_residual(k, &self.local[g], 0.0)
    }
}

/// Root of a decreasing node function, searched near `start` first.
fn local_root(mut f: impl FnMut(f64) -> f64, start: f64, lo: f64, hi: f64, ftol: f64) -> Result<f64> {
    let mut delta = 1e-4;
    loop {
        let a = (start - delta).max(lo);
        let b = (start + delta).min(hi);
        let full = a == lo && b == hi;
        if full || (f(a) >= 0.0 && f(b) <= 0.0) {
            return decreasing_root(&mut f, a, b, f64::EPSILON, ftol, 400).map(|r| r.x);
        }
        delta *= 16.0;
    }
}

/// Solves every node of `circuit` under `vector`.
pub fn solve_full(
    circuit: &Circuit,
    vector: &InputVector,
    devices: &DeviceSet,
    env: &Environment,
    config: &OracleConfig,
) -> Result<OracleSolution> {
    config.validate()?;
    let models = CircuitModels::build(circuit, &GateLibrary::default(), devices, env)?;
    solve_with_models(circuit, vector, &models, config)
}

pub fn solve_with_models(
    circuit: &Circuit,
    vector: &InputVector,
    models: &CircuitModels,
    config: &OracleConfig,
) -> Result<OracleSolution> {
    config.validate()?;
    let vdd = models.env.vdd;
    let state = simulate_logic(circuit, vector)?;
    let mut nets: Vec<f64> = state.values.iter().map(|&b| if b { vdd } else { 0.0 }).collect();
    let mut local = Vec::with_capacity(circuit.gates.len());
    let solver = SolverConfig::default();
    for (g, gate) in circuit.gates.iter().enumerate() {
        let rails: Vec<f64> = gate.inputs.iter().map(|&n| nets[n]).collect();
        let m = &models.models[g];
        // nominal solve of each gate is the starting point
        let v = match m.solve(&rails, 0.0, &solver) {
            Ok(p) => p.node_voltages(),
            Err(_) => m.initial_guess(&rails),
        };
        local.push(v);
    }
    for (g, gate) in circuit.gates.iter().enumerate() {
        let v = &local[g];
        nets[gate.output] = v[v.len() - 1];
    }
    let mut readers: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); circuit.nets.len()];
    for (g, gate) in circuit.gates.iter().enumerate() {
        for (p, &n) in gate.inputs.iter().enumerate() {
            match readers[n].last_mut() {
                Some((r, pins)) if *r == g => pins.push(p),
                _ => readers[n].push((g, vec![p])),
            }
        }
    }
    let mut st = State {
        circuit,
        models: &models.models,
        local,
        nets,
        readers,
    };
    for g in 0..circuit.gates.len() {
        st.sync(g);
    }

    let lo = models.models.first().map(|m| m.lo()).unwrap_or(-0.05);
    let hi = models.models.first().map(|m| m.hi()).unwrap_or(vdd + 0.05);
    let ftol = config.current_tolerance * 1e-3;
    let d = config.damping;
    let mut iterations = 0;
    let mut converged = circuit.gates.is_empty();
    let mut max_residual = 0.0;
    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let mut moved: f64 = 0.0;
        for &g in &circuit.topo_order {
            st.sync(g);
            let m = st.models[g].clone();
            let first = m.template.first_unknown();
            let internals = m.template.unknown_count() - 1;
            for k in 0..internals {
                let idx = first + k;
                let old = st.local[g][idx];
                let target = local_root(
                    |x| {
                        st.local[g][idx] = x;
                        st.internal_residual(g, k)
                    },
                    old,
                    lo,
                    hi,
                    ftol,
                )?;
                let new = old + d * (target - old);
                st.local[g][idx] = new;
                moved = moved.max((new - old).abs());
            }
            if internals > 1 {
                // on-transistors couple stack nodes far more strongly than anything
                // ties them down, which node-by-node sweeps resolve slowly
                moved = moved.max(m.polish_internals(&mut st.local[g], ftol, 8));
            }
            let net = circuit.gates[g].output;
            let old = st.nets[net];
            let target = local_root(|x| st.net_residual(g, x), old, lo, hi, ftol)?;
            let new = old + d * (target - old);
            st.nets[net] = new;
            st.net_residual(g, new);
            moved = moved.max((new - old).abs());
        }
        if moved < config.voltage_tolerance {
            max_residual = residual(&mut st);
            converged = max_residual <= config.current_tolerance;
        }
    }
    if !converged {
        max_residual = residual(&mut st);
    }

    let mut gate_leakage = Vec::with_capacity(circuit.gates.len());
    let mut total = LeakageComponents::default();
    for g in 0..circuit.gates.len() {
        st.sync(g);
        let l = st.models[g].leakage_at(&st.local[g]).components;
        total += l;
        gate_leakage.push(l);
    }
    let internal_voltages = (0..circuit.gates.len())
        .map(|g| {
            let v = &st.local[g];
            let first = st.models[g].template.first_unknown();
            v[first..v.len() - 1].to_vec()
        })
        .collect();
    Ok(OracleSolution {
        vector: vector.to_string(),
        net_voltages: st.nets,
        internal_voltages,
        iterations,
        max_residual,
        converged,
        gate_leakage,
        total,
    })
}

fn residual(st: &mut State<'_>) -> f64 {
    let mut worst: f64 = 0.0;
    for g in 0..st.circuit.gates.len() {
        st.sync(g);
    }
    for g in 0..st.circuit.gates.len() {
        let internals = st.models[g].template.unknown_count() - 1;
        for k in 0..internals {
            worst = worst.max(st.internal_residual(g, k).abs());
        }
        let x = st.nets[st.circuit.gates[g].output];
        worst = worst.max(st.net_residual(g, x).abs());
    }
    worst
}

/// Relative error `(estimate - oracle) / oracle` per component.
pub type RelativeError = ComponentLd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateError {
    pub index: usize,
    pub name: String,
    pub error: RelativeError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub gates: Vec<GateError>,
    pub total: RelativeError,
    /// Gate with the largest |itotal| error and that error.
    pub worst_gate: Option<(usize, f64)>,
}

pub fn compare(oracle: &OracleSolution, report: &LoadingReport) -> Result<Comparison> {
    if oracle.vector != report.vector {
        return Err(Error::invalid(format!(
            "oracle vector {} differs from report vector {}",
            oracle.vector, report.vector
        )));
    }
    if oracle.gate_leakage.len() != report.gates.len() {
        return Err(Error::invalid(format!(
            "oracle has {} gates, report has {}",
            oracle.gate_leakage.len(),
            report.gates.len()
        )));
    }
    let gates: Vec<GateError> = report
        .gates
        .iter()
        .zip(&oracle.gate_leakage)
        .map(|(g, o)| GateError {
            index: g.index,
            name: g.name.clone(),
            error: ComponentLd::between(o, &g.loaded),
        })
        .collect();
    let worst_gate = gates
        .iter()
        .filter_map(|g| g.error.itotal.map(|e| (g.index, e)))
        .fold(None, |m: Option<(usize, f64)>, (i, e)| match m {
            Some((_, w)) if w.abs() >= e.abs() => m,
            _ => Some((i, e)),
        });
    Ok(Comparison {
        total: ComponentLd::between(&oracle.total, &report.loaded_total),
        gates,
        worst_gate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Preset;
    use crate::estimator::estimate;
    use crate::netlist::parse_bench;

    fn setup(text: &str) -> (Circuit, DeviceSet, Environment) {
        (
            parse_bench(text).unwrap(),
            DeviceSet::Uniform(Preset::DEFAULT.params()),
            Environment::default(),
        )
    }

    #[test]
    fn isolated_inverter_matches_gate_solver() {
        let (c, d, env) = setup("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n");
        let v: InputVector = "0".parse().unwrap();
        let o = solve_full(&c, &v, &d, &env, &OracleConfig::default()).unwrap();
        assert!(o.converged);
        let r = estimate(&c, &v, &Preset::DEFAULT.params(), &env, &SolverConfig::default()).unwrap();
        assert!((o.net_voltages[c.net_index("y").unwrap()] - r.gates[0].output_voltage).abs() < 1e-9);
        let cmp = compare(&o, &r).unwrap();
        assert!(cmp.total.itotal.unwrap().abs() < 1e-6);
    }

    #[test]
    fn inverter_chain_residuals() {
        let (c, d, env) = setup(
            "INPUT(a)\nOUTPUT(f)\nb = NOT(a)\nc = NOT(b)\nd = NOT(c)\ne = NOT(d)\nf = NOT(e)\n",
        );
        let o = solve_full(&c, &"1".parse().unwrap(), &d, &env, &OracleConfig::default()).unwrap();
        assert!(o.converged);
        assert!(o.max_residual <= 1e-16, "{}", o.max_residual);
        assert!(o.net_voltages.iter().all(|&v| (-0.05..=0.95).contains(&v)));
    }

    #[test]
    fn mismatched_compare_rejected() {
        let (c, d, env) = setup("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n");
        let o = solve_full(&c, &"0".parse().unwrap(), &d, &env, &OracleConfig::default()).unwrap();
        let r = estimate(&c, &"1".parse().unwrap(), &Preset::DEFAULT.params(), &env, &SolverConfig::default())
            .unwrap();
        assert!(compare(&o, &r).is_err());
    }

    #[test]
    fn bad_damping_rejected() {
        let (c, d, env) = setup("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n");
        let cfg = OracleConfig {
            damping: 0.0,
            ..Default::default()
        };
        assert!(solve_full(&c, &"0".parse().unwrap(), &d, &env, &cfg).is_err());
    }
}
