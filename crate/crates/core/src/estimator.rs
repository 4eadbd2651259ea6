// SPDX-License-Identifier: Apache-2.0

//! One-level loading-aware leakage estimation over a circuit.
//!
//! PASS A solves every gate alone with its inputs at the rails and nothing on
//! its output, which gives the nominal leakage and the tunneling current each
//! gate pulls from its input nets. Summing those draws per net gives the
//! loading current of every net. PASS B then re-solves each gate with
//!
//! * every input net at the voltage its driver's output settles to when that
//!   net's loading current is injected (primary inputs are ideal sources), and
//! * its own output net's loading current injected.
//!
//! Loading currents are never refreshed from PASS B voltages.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{Component, DevicePair, DeviceParams, Environment, LeakageComponents};
use crate::error::{Error, Result};
use crate::gates::{GateLibrary, GateTemplate, GateType};
use crate::netlist::{simulate_logic, Circuit, Driver, InputVector};
use crate::solver::{GateLeakage, GateModel, GateOperatingPoint, SolverConfig};

/// Exhaustive sweeps are refused above this many inputs.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 20;

/// Device parameters for every transistor of a circuit.
#[derive(Debug, Clone)]
pub enum DeviceSet {
    Uniform(DevicePair),
    /// One list per gate, one entry per template transistor.
    PerGate(Vec<Vec<DeviceParams>>),
}

/// Compiled gate models, shared between gates of one type when possible.
#[derive(Debug, Clone)]
pub struct CircuitModels {
    pub models: Vec<Arc<GateModel>>,
    pub env: Environment,
    shared: bool,
}

impl CircuitModels {
    pub fn build(circuit: &Circuit, library: &GateLibrary, devices: &DeviceSet, env: &Environment) -> Result<Self> {
        env.validate()?;
        let mut templates: HashMap<GateType, Arc<GateTemplate>> = HashMap::new();
        for g in &circuit.gates {
            if let std::collections::hash_map::Entry::Vacant(e) = templates.entry(g.gate_type) {
                e.insert(Arc::new(library.template_for(g.gate_type)?));
            }
        }
        let models = match devices {
            DeviceSet::Uniform(pair) => {
                let mut by_type: HashMap<GateType, Arc<GateModel>> = HashMap::new();
                for (gt, t) in &templates {
                    by_type.insert(*gt, Arc::new(GateModel::new(t.clone(), pair, env)?));
                }
                circuit.gates.iter().map(|g| by_type[&g.gate_type].clone()).collect()
            }
            DeviceSet::PerGate(per) => {
                if per.len() != circuit.gates.len() {
                    return Err(Error::invalid(format!(
                        "{} parameter lists for {} gates",
                        per.len(),
                        circuit.gates.len()
                    )));
                }
                circuit
                    .gates
                    .iter()
                    .zip(per)
                    .map(|(g, p)| {
                        GateModel::with_params(templates[&g.gate_type].clone(), p, env).map(Arc::new)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(CircuitModels {
            models,
            env: *env,
            shared: matches!(devices, DeviceSet::Uniform(_)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// When false every loading current is forced to zero.
    pub loading: bool,
    /// Per-input and input-only solves for LD_IN.
    pub detail: bool,
    /// Use the rayon pool for independent gate solves and sweep vectors.
    pub parallel: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            loading: true,
            detail: true,
            parallel: false,
        }
    }
}

/// A gate solved alone at rail inputs with nothing on its output.
#[derive(Debug, Clone)]
pub struct Nominal {
    pub point: GateOperatingPoint,
    pub leakage: GateLeakage,
}

/// Relative change per component; `None` where the nominal value is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentLd {
    pub isub: Option<f64>,
    pub igate: Option<f64>,
    pub ibtbt: Option<f64>,
    pub itotal: Option<f64>,
}

impl ComponentLd {
    pub fn between(nominal: &LeakageComponents, loaded: &LeakageComponents) -> Self {
        let ld = |c: Component| {
            let n = nominal.get(c);
            (n != 0.0).then(|| (loaded.get(c) - n) / n)
        };
        ComponentLd {
            isub: ld(Component::Isub),
            igate: ld(Component::Igate),
            ibtbt: ld(Component::Ibtbt),
            itotal: ld(Component::Itotal),
        }
    }

    pub fn get(&self, c: Component) -> Option<f64> {
        match c {
            Component::Isub => self.isub,
            Component::Igate => self.igate,
            Component::Ibtbt => self.ibtbt,
            Component::Itotal => self.itotal,
        }
    }

    fn set(&mut self, c: Component, v: Option<f64>) {
        match c {
            Component::Isub => self.isub = v,
            Component::Igate => self.igate = v,
            Component::Ibtbt => self.ibtbt = v,
            Component::Itotal => self.itotal = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdMetrics {
    pub ld_in: Vec<ComponentLd>,
    pub ld_out: ComponentLd,
    pub ld_all: ComponentLd,
}

/// LD_IN per input, LD_OUT and LD_ALL from the four kinds of solve.
pub fn ld_metrics(
    nominal: &LeakageComponents,
    input_only: &[LeakageComponents],
    output_only: &LeakageComponents,
    all: &LeakageComponents,
) -> LdMetrics {
    LdMetrics {
        ld_in: input_only.iter().map(|l| ComponentLd::between(nominal, l)).collect(),
        ld_out: ComponentLd::between(nominal, output_only),
        ld_all: ComponentLd::between(nominal, all),
    }
}

/// Loading of one net by the gates that read it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetLoading {
    /// Amperes into the net (the negated sum of the readers' draws).
    pub into_net: f64,
    /// `(gate, amperes into the net)` per reader, in gate order.
    pub readers: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadingCurrents {
    pub nets: Vec<NetLoading>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub index: usize,
    /// Output net name.
    pub name: String,
    pub gate_type: GateType,
    pub inputs: String,
    pub output: bool,
    pub input_voltages: Vec<f64>,
    pub output_voltage: f64,
    pub output_injection: f64,
    pub nominal: LeakageComponents,
    pub loaded: LeakageComponents,
    pub output_only: LeakageComponents,
    pub input_only: Option<LeakageComponents>,
    pub per_input: Vec<LeakageComponents>,
    pub ld_in: Vec<ComponentLd>,
    pub ld_in_all: Option<ComponentLd>,
    pub ld_out: ComponentLd,
    pub ld_all: ComponentLd,
    /// A loaded solve failed and nominal values stand in.
    pub failed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub failures: usize,
    pub solves: usize,
    pub iterations: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingReport {
    pub vector: String,
    pub temperature: f64,
    pub vdd: f64,
    pub loading: bool,
    pub gates: Vec<GateReport>,
    pub loading_currents: LoadingCurrents,
    pub nominal_total: LeakageComponents,
    pub loaded_total: LeakageComponents,
    pub ld_total: ComponentLd,
    pub diagnostics: SolverDiagnostics,
}

impl LoadingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// One row per gate.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["gate", "name", "type", "inputs", "output", "failed"];
        let comps = ["isub", "igate", "ibtbt", "itotal"];
        let cols: Vec<String> = ["nominal", "loaded"]
            .iter()
            .flat_map(|k| comps.iter().map(move |c| format!("{k}_{c}")))
            .chain(["ld_out", "ld_all"].iter().flat_map(|k| comps.iter().map(move |c| format!("{k}_{c}"))))
            .collect();
        header.extend(cols.iter().map(|s| s.as_str()));
        header.push("output_voltage");
        header.push("output_injection");
        out.write_record(&header).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for g in &self.gates {
            let mut row = vec![
                g.index.to_string(),
                g.name.clone(),
                g.gate_type.to_string(),
                g.inputs.clone(),
                u8::from(g.output).to_string(),
                u8::from(g.failed).to_string(),
            ];
            for l in [&g.nominal, &g.loaded] {
                row.extend(Component::ALL.iter().map(|&c| l.get(c).to_string()));
            }
            for ld in [&g.ld_out, &g.ld_all] {
                row.extend(Component::ALL.iter().map(|&c| opt(ld.get(c))));
            }
            row.push(g.output_voltage.to_string());
            row.push(g.output_injection.to_string());
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn rail(bit: bool, vdd: f64) -> f64 {
    if bit {
        vdd
    } else {
        0.0
    }
}

fn bits_key(bits: &[bool]) -> u32 {
    bits.iter().enumerate().fold(0, |k, (i, &b)| k | (u32::from(b) << i))
}

pub struct Estimator<'c> {
    circuit: &'c Circuit,
    models: CircuitModels,
    config: SolverConfig,
    options: EstimateOptions,
    cache: HashMap<(GateType, u32), Arc<Nominal>>,
}

impl<'c> Estimator<'c> {
    pub fn new(
        circuit: &'c Circuit,
        devices: &DeviceSet,
        env: &Environment,
        config: SolverConfig,
        options: EstimateOptions,
    ) -> Result<Self> {
        Self::with_library(circuit, &GateLibrary::default(), devices, env, config, options)
    }

    pub fn with_library(
        circuit: &'c Circuit,
        library: &GateLibrary,
        devices: &DeviceSet,
        env: &Environment,
        config: SolverConfig,
        options: EstimateOptions,
    ) -> Result<Self> {
        config.validate()?;
        let models = CircuitModels::build(circuit, library, devices, env)?;
        let mut cache = HashMap::new();
        if models.shared {
            for (gi, g) in circuit.gates.iter().enumerate() {
                let k = g.gate_type.input_count();
                for m in 0..1u32 << k {
                    if cache.contains_key(&(g.gate_type, m)) {
                        continue;
                    }
                    let bits: Vec<bool> = (0..k).map(|i| m >> i & 1 == 1).collect();
                    let nominal = solve_nominal(&models.models[gi], &bits, &config)?;
                    cache.insert((g.gate_type, m), Arc::new(nominal));
                }
            }
        }
        Ok(Estimator {
            circuit,
            models,
            config,
            options,
            cache,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn env(&self) -> &Environment {
        &self.models.env
    }

    pub fn options(&self) -> &EstimateOptions {
        &self.options
    }

    pub fn models(&self) -> &CircuitModels {
        &self.models
    }

    fn nominal(&self, gate: usize, bits: &[bool]) -> Result<Arc<Nominal>> {
        if self.models.shared {
            let gt = self.circuit.gates[gate].gate_type;
            if let Some(n) = self.cache.get(&(gt, bits_key(bits))) {
                return Ok(n.clone());
            }
        }
        solve_nominal(&self.models.models[gate], bits, &self.config).map(Arc::new)
    }

    fn map_gates<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        let n = self.circuit.gates.len();
        if self.options.parallel {
            (0..n).into_par_iter().map(f).collect()
        } else {
            (0..n).map(f).collect()
        }
    }

    /// Runs both passes for one input vector.
    pub fn estimate(&self, vector: &InputVector) -> Result<LoadingReport> {
        let c = self.circuit;
        let vdd = self.models.env.vdd;
        let state = simulate_logic(c, vector)?;
        let bits: Vec<Vec<bool>> = (0..c.gates.len()).map(|g| c.gate_inputs(g, &state)).collect();

        // PASS A
        let nominal = self.map_gates(|g| self.nominal(g, &bits[g])).into_iter().collect::<Result<Vec<_>>>()?;

        let mut nets = vec![NetLoading::default(); c.nets.len()];
        if self.options.loading {
            for (gi, g) in c.gates.iter().enumerate() {
                for (p, &n) in g.inputs.iter().enumerate() {
                    let i = -nominal[gi].leakage.input_draw[p];
                    nets[n].into_net += i;
                    match nets[n].readers.last_mut() {
                        Some((r, v)) if *r == gi => *v += i,
                        _ => nets[n].readers.push((gi, i)),
                    }
                }
            }
        }

        // output-only solves double as the loaded voltage of each driven net
        let out_only: Vec<(Option<GateOperatingPoint>, Option<Error>)> = self.map_gates(|g| {
            let inj = nets[c.gates[g].output].into_net;
            if inj == 0.0 {
                return (None, None);
            }
            let rails = &nominal[g].point.input_voltages;
            match self.models.models[g].solve_from(rails, inj, &self.config, &nominal[g].point) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e)),
            }
        });
        let mut loaded_net: Vec<Option<f64>> = vec![None; c.nets.len()];
        for (g, (p, _)) in out_only.iter().enumerate() {
            if let Some(p) = p {
                loaded_net[c.gates[g].output] = Some(p.output_voltage);
            }
        }

        // PASS B
        let mut rows: Vec<Option<(GateReport, SolverDiagnostics)>> = vec![None; c.gates.len()];
        let pass_b = |g: usize| -> (GateReport, SolverDiagnostics) {
            let gate = &c.gates[g];
            let model = &self.models.models[g];
            let nom = &nominal[g];
            let mut diag = SolverDiagnostics::default();
            let mut failed = out_only[g].1.is_some();
            let rails: Vec<f64> = bits[g].iter().map(|&b| rail(b, vdd)).collect();
            let vin: Vec<f64> = gate
                .inputs
                .iter()
                .zip(&rails)
                .map(|(&n, &r)| match c.drivers[n] {
                    Driver::Gate(_) => loaded_net[n].unwrap_or(r),
                    _ => r,
                })
                .collect();
            let inj = nets[gate.output].into_net;
            let mut solve = |inputs: &[f64], inj: f64| -> (LeakageComponents, f64) {
                if inj == 0.0 && inputs == rails.as_slice() {
                    return (nom.leakage.components, nom.point.output_voltage);
                }
                diag.solves += 1;
                match model.solve_from(inputs, inj, &self.config, &nom.point) {
                    Ok(p) => {
                        diag.iterations += p.iterations;
                        diag.max_residual = diag.max_residual.max(p.max_residual());
                        (model.leakage(&p).components, p.output_voltage)
                    }
                    Err(_) => {
                        failed = true;
                        (nom.leakage.components, nom.point.output_voltage)
                    }
                }
            };
            let output_only = match &out_only[g].0 {
                Some(p) => model.leakage(p).components,
                None => nom.leakage.components,
            };
            let (loaded, vout) = solve(&vin, inj);
            let (per_input, input_only) = if self.options.detail {
                let per: Vec<LeakageComponents> = (0..vin.len())
                    .map(|p| {
                        let mut v = rails.clone();
                        v[p] = vin[p];
                        solve(&v, 0.0).0
                    })
                    .collect();
                (per, Some(solve(&vin, 0.0).0))
            } else {
                (Vec::new(), None)
            };
            let loaded = if failed { nom.leakage.components } else { loaded };
            let m = ld_metrics(&nom.leakage.components, &per_input, &output_only, &loaded);
            if failed {
                diag.failures = 1;
            }
            let report = GateReport {
                index: g,
                name: c.nets[gate.output].clone(),
                gate_type: gate.gate_type,
                inputs: InputVector(bits[g].clone()).to_string(),
                output: state.get(gate.output),
                input_voltages: vin,
                output_voltage: vout,
                output_injection: inj,
                nominal: nom.leakage.components,
                loaded,
                output_only,
                input_only,
                per_input,
                ld_in: m.ld_in,
                ld_in_all: input_only.map(|l| ComponentLd::between(&nom.leakage.components, &l)),
                ld_out: m.ld_out,
                ld_all: m.ld_all,
                failed,
            };
            (report, diag)
        };
        if self.options.parallel {
            let done: Vec<_> = c.topo_order.par_iter().map(|&g| (g, pass_b(g))).collect();
            for (g, r) in done {
                rows[g] = Some(r);
            }
        } else {
            for &g in &c.topo_order {
                rows[g] = Some(pass_b(g));
            }
        }

        let mut gates = Vec::with_capacity(rows.len());
        let mut diagnostics = SolverDiagnostics::default();
        let mut nominal_total = LeakageComponents::default();
        let mut loaded_total = LeakageComponents::default();
        for (report, d) in rows.into_iter().flatten() {
            diagnostics.failures += d.failures;
            diagnostics.solves += d.solves;
            diagnostics.iterations += d.iterations;
            diagnostics.max_residual = diagnostics.max_residual.max(d.max_residual);
            nominal_total += report.nominal;
            loaded_total += report.loaded;
            gates.push(report);
        }
        Ok(LoadingReport {
            vector: vector.to_string(),
            temperature: self.models.env.temperature,
            vdd,
            loading: self.options.loading,
            gates,
            loading_currents: LoadingCurrents { nets },
            ld_total: ComponentLd::between(&nominal_total, &loaded_total),
            nominal_total,
            loaded_total,
            diagnostics,
        })
    }
}

fn solve_nominal(model: &GateModel, bits: &[bool], config: &SolverConfig) -> Result<Nominal> {
    let rails: Vec<f64> = bits.iter().map(|&b| rail(b, model.vdd)).collect();
    let point = model.solve(&rails, 0.0, config)?;
    let leakage = model.leakage(&point);
    Ok(Nominal { point, leakage })
}

/// Single estimate with uniform parameters and default options.
pub fn estimate(
    circuit: &Circuit,
    vector: &InputVector,
    params: &DevicePair,
    env: &Environment,
    config: &SolverConfig,
) -> Result<LoadingReport> {
    Estimator::new(
        circuit,
        &DeviceSet::Uniform(*params),
        env,
        *config,
        EstimateOptions::default(),
    )?
    .estimate(vector)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorSource {
    Explicit(Vec<InputVector>),
    Random { count: usize, seed: u64 },
    Exhaustive,
}

impl VectorSource {
    pub fn vectors(&self, inputs: usize) -> Result<Vec<InputVector>> {
        match self {
            VectorSource::Explicit(v) => {
                if let Some(bad) = v.iter().find(|v| v.len() != inputs) {
                    return Err(Error::invalid(format!(
                        "vector `{bad}` has {} bits, circuit has {inputs} inputs",
                        bad.len()
                    )));
                }
                Ok(v.clone())
            }
            VectorSource::Random { count, seed } => {
                if *count == 0 {
                    return Err(Error::invalid("random vector count must be positive"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count).map(|_| InputVector::random(inputs, &mut rng)).collect())
            }
            VectorSource::Exhaustive => {
                if inputs > MAX_EXHAUSTIVE_INPUTS {
                    return Err(Error::Config(format!(
                        "exhaustive mode is limited to {MAX_EXHAUSTIVE_INPUTS} inputs, circuit has {inputs}"
                    )));
                }
                Ok((0..1u64 << inputs).map(|m| InputVector::from_index(inputs, m)).collect())
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            VectorSource::Random { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub vector: String,
    pub nominal_total: LeakageComponents,
    pub loaded_total: LeakageComponents,
    pub ld_total: ComponentLd,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: Option<u64>,
    pub rows: Vec<SweepRow>,
    /// Mean over vectors of the circuit-level LD per component.
    pub average_ld: ComponentLd,
    /// Mean of |LD|.
    pub average_abs_ld: ComponentLd,
    /// Signed LD of largest magnitude.
    pub max_ld: ComponentLd,
    pub min_vector_nominal: String,
    pub min_vector_loaded: String,
    pub min_vector_changed: bool,
    pub failures: usize,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["vector".to_string()];
        for k in ["nominal", "loaded", "ld"] {
            for c in Component::ALL {
                header.push(format!("{k}_{}", c.name()));
            }
        }
        header.push("failures".into());
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut row = vec![r.vector.clone()];
            for l in [&r.nominal_total, &r.loaded_total] {
                row.extend(Component::ALL.iter().map(|&c| l.get(c).to_string()));
            }
            row.extend(
                Component::ALL
                    .iter()
                    .map(|&c| r.ld_total.get(c).map(|x| x.to_string()).unwrap_or_default()),
            );
            row.push(r.failures.to_string());
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Average and maximum loading deltas per component.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["component", "average_ld", "average_abs_ld", "max_ld"])
            .map_err(csv_err)?;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in Component::ALL {
            out.write_record([
                c.name().to_string(),
                f(self.average_ld.get(c)),
                f(self.average_abs_ld.get(c)),
                f(self.max_ld.get(c)),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Estimates every vector of `source` and summarises the loading deltas.
pub fn vector_sweep(estimator: &Estimator<'_>, source: &VectorSource) -> Result<SweepReport> {
    let vectors = source.vectors(estimator.circuit().input_count())?;
    let run = |v: &InputVector| -> Result<SweepRow> {
        let r = estimator.estimate(v)?;
        Ok(SweepRow {
            vector: r.vector,
            nominal_total: r.nominal_total,
            loaded_total: r.loaded_total,
            ld_total: r.ld_total,
            failures: r.diagnostics.failures,
        })
    };
    let rows: Vec<SweepRow> = if estimator.options().parallel {
        vectors.par_iter().map(run).collect::<Result<_>>()?
    } else {
        vectors.iter().map(run).collect::<Result<_>>()?
    };
    Ok(summarize(rows, source.seed()))
}

fn summarize(rows: Vec<SweepRow>, seed: Option<u64>) -> SweepReport {
    let mut average_ld = ComponentLd::default();
    let mut average_abs_ld = ComponentLd::default();
    let mut max_ld = ComponentLd::default();
    for c in Component::ALL {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.ld_total.get(c)).collect();
        if vals.is_empty() {
            continue;
        }
        let n = vals.len() as f64;
        average_ld.set(c, Some(vals.iter().sum::<f64>() / n));
        average_abs_ld.set(c, Some(vals.iter().map(|v| v.abs()).sum::<f64>() / n));
        max_ld.set(
            c,
            vals.iter().copied().fold(None, |m: Option<f64>, v| match m {
                Some(m) if m.abs() >= v.abs() => Some(m),
                _ => Some(v),
            }),
        );
    }
    let argmin = |f: &dyn Fn(&SweepRow) -> f64| -> String {
        rows.iter()
            .fold(None::<&SweepRow>, |best, r| match best {
                Some(b) if f(b) <= f(r) => Some(b),
                _ => Some(r),
            })
            .map(|r| r.vector.clone())
            .unwrap_or_default()
    };
    let min_vector_nominal = argmin(&|r| r.nominal_total.itotal());
    let min_vector_loaded = argmin(&|r| r.loaded_total.itotal());
    SweepReport {
        seed,
        failures: rows.iter().map(|r| r.failures).sum(),
        average_ld,
        average_abs_ld,
        max_ld,
        min_vector_changed: min_vector_nominal != min_vector_loaded,
        min_vector_nominal,
        min_vector_loaded,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Preset;
    use crate::netlist::parse_bench;

    fn run(text: &str, vector: &str) -> LoadingReport {
        let c = parse_bench(text).unwrap();
        estimate(
            &c,
            &vector.parse().unwrap(),
            &Preset::DEFAULT.params(),
            &Environment::default(),
            &SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn isolated_inverter_has_no_loading() {
        let r = run("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n", "0");
        let g = &r.gates[0];
        assert_eq!(g.loaded, g.nominal);
        for c in Component::ALL {
            assert_eq!(g.ld_all.get(c), Some(0.0));
        }
    }

    #[test]
    fn ld_ratio_identity() {
        let nom = LeakageComponents {
            isub: 2e-9,
            igc: 1e-9,
            ..Default::default()
        };
        let scaled = LeakageComponents {
            isub: 2.1e-9,
            igc: 1.05e-9,
            ..Default::default()
        };
        let m = ld_metrics(&nom, &[nom], &nom, &scaled);
        assert_eq!(m.ld_in[0].isub, Some(0.0));
        assert!((m.ld_all.isub.unwrap() - 0.05).abs() < 1e-12);
        assert!((m.ld_all.itotal.unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(m.ld_all.ibtbt, None);
    }

    #[test]
    fn totals_are_sums() {
        let r = run(
            "INPUT(a)\nINPUT(b)\nOUTPUT(z)\nx = NAND(a,b)\ny = NOT(x)\nz = NOR(x,y)\n",
            "10",
        );
        let mut sum = LeakageComponents::default();
        for g in &r.gates {
            sum += g.loaded;
        }
        assert_eq!(sum, r.loaded_total);
    }

    #[test]
    fn loading_currents_sum_readers() {
        let r = run("INPUT(a)\nOUTPUT(y)\nx = NOT(a)\ny = NAND(x,x)\nw = NOT(x)\n", "1");
        for n in &r.loading_currents.nets {
            let s: f64 = n.readers.iter().map(|(_, i)| i).sum();
            assert!((s - n.into_net).abs() <= 1e-30 + 1e-15 * s.abs());
        }
    }

    #[test]
    fn no_loading_flag_gives_nominal() {
        let c = parse_bench("INPUT(a)\nOUTPUT(y)\nx = NOT(a)\ny = NOT(x)\nz = NOT(x)\n").unwrap();
        let e = Estimator::new(
            &c,
            &DeviceSet::Uniform(Preset::DEFAULT.params()),
            &Environment::default(),
            SolverConfig::default(),
            EstimateOptions {
                loading: false,
                ..Default::default()
            },
        )
        .unwrap();
        let r = e.estimate(&"0".parse().unwrap()).unwrap();
        assert_eq!(r.loaded_total, r.nominal_total);
    }

    #[test]
    fn exhaustive_limit() {
        assert!(VectorSource::Exhaustive.vectors(21).is_err());
        assert_eq!(VectorSource::Exhaustive.vectors(3).unwrap().len(), 8);
    }

    #[test]
    fn random_vectors_reproducible() {
        let s = VectorSource::Random { count: 5, seed: 9 };
        assert_eq!(s.vectors(7).unwrap(), s.vectors(7).unwrap());
    }
}
