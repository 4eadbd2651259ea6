// SPDX-License-Identifier: Apache-2.0

//! Test circuits: seeded random DAGs, the corpus manifest and golden cases.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{Environment, LeakageComponents, Preset};
use crate::error::{Error, Result};
use crate::estimator::{write_atomic, DeviceSet, EstimateOptions, Estimator};
use crate::gates::GateType;
use crate::kv::{KvDocument, KvSection, KvWriter};
use crate::netlist::{load_bench, Circuit, CircuitBuilder, InputVector, Keyword};
use crate::oracle::{compare, solve_full, Comparison, OracleConfig};
use crate::solver::SolverConfig;

/// Generator settings for a random combinational DAG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagParams {
    pub inputs: usize,
    pub gates: usize,
    /// Readers per net are capped at this value.
    pub max_fanout: usize,
    /// Inputs are drawn from the most recent `window` nets with probability
    /// `locality`, otherwise from all nets.
    pub window: usize,
    pub locality: f64,
    /// Relative weight of each gate type.
    pub mix: Vec<(GateType, u32)>,
}

impl DagParams {
    pub fn default_mix() -> Vec<(GateType, u32)> {
        vec![
            (GateType::Inv, 20),
            (GateType::Buf, 4),
            (GateType::Nand(2), 20),
            (GateType::Nand(3), 8),
            (GateType::Nand(4), 4),
            (GateType::Nor(2), 15),
            (GateType::Nor(3), 5),
            (GateType::Nor(4), 2),
            (GateType::And(2), 8),
            (GateType::And(3), 3),
            (GateType::Or(2), 8),
            (GateType::Or(3), 3),
        ]
    }

    pub fn new(inputs: usize, gates: usize) -> Self {
        DagParams {
            inputs,
            gates,
            max_fanout: 8,
            window: 24,
            locality: 0.7,
            mix: Self::default_mix(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.inputs == 0 {
            return Err(Error::invalid("random DAG needs at least one input"));
        }
        if self.max_fanout == 0 || self.window == 0 || !(0.0..=1.0).contains(&self.locality) {
            return Err(Error::invalid("bad fanout cap, window or locality"));
        }
        if self.mix.iter().map(|(_, w)| *w as u64).sum::<u64>() == 0 {
            return Err(Error::invalid("gate mix has no weight"));
        }
        Ok(())
    }
}

/// Seeded random DAG. Nets are `i<k>` for inputs and `g<k>` for gates;
/// every net without readers becomes a primary output.
pub fn random_dag(params: &DagParams, seed: u64) -> Result<Circuit> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: u32 = params.mix.iter().map(|(_, w)| w).sum();
    let mut names: Vec<String> = (0..params.inputs).map(|i| format!("i{i}")).collect();
    let mut fanout = vec![0usize; params.inputs];
    let mut b = CircuitBuilder::new();
    for n in &names {
        b.input(n);
    }
    for g in 0..params.gates {
        let mut pick = rng.random_range(0..total);
        let mut gt = params.mix[0].0;
        for &(t, w) in &params.mix {
            if pick < w {
                gt = t;
                break;
            }
            pick -= w;
        }
        let open: Vec<usize> = (0..names.len()).filter(|&i| fanout[i] < params.max_fanout).collect();
        let gt = if open.len() < gt.input_count() { GateType::Inv } else { gt };
        let mut chosen: Vec<usize> = Vec::with_capacity(gt.input_count());
        let mut guard = 0;
        while chosen.len() < gt.input_count() && guard < 1000 {
            guard += 1;
            let candidates: Vec<usize> = if rng.random_bool(params.locality) {
                let start = open.len().saturating_sub(params.window);
                open[start..].to_vec()
            } else {
                open.clone()
            };
            if candidates.is_empty() {
                break;
            }
            let c = candidates[rng.random_range(0..candidates.len())];
            if !chosen.contains(&c) {
                chosen.push(c);
            }
        }
        if chosen.len() < gt.input_count() {
            // not enough distinct open nets: fall back to an inverter on the newest
            chosen = vec![*open.last().unwrap_or(&(names.len() - 1))];
            let name = format!("g{g}");
            b.gate(GateType::Inv, &[names[chosen[0]].as_str()], &name);
            fanout[chosen[0]] += 1;
            names.push(name);
            fanout.push(0);
            continue;
        }
        let ins: Vec<&str> = chosen.iter().map(|&i| names[i].as_str()).collect();
        let name = format!("g{g}");
        b.gate(gt, &ins, &name);
        for &i in &chosen {
            fanout[i] += 1;
        }
        names.push(name);
        fanout.push(0);
    }
    for (i, n) in names.iter().enumerate().skip(params.inputs) {
        if fanout[i] == 0 {
            b.output(n);
        }
    }
    b.build()
}

/// Inverter `out = NOT(in)` driven by `in = NOT(a)`, with `input_loads`
/// extra inverters reading `in` and `output_loads` reading `out`. The
/// driven inverter is gate 1.
pub fn loaded_inverter(input_loads: usize, output_loads: usize) -> Circuit {
    let mut b = CircuitBuilder::new();
    b.input("a").output("out");
    b.assign(Keyword::Not, &["a"], "in");
    b.assign(Keyword::Not, &["in"], "out");
    for i in 0..input_loads {
        b.assign(Keyword::Not, &["in"], &format!("li{i}"));
    }
    for i in 0..output_loads {
        b.assign(Keyword::Not, &["out"], &format!("lo{i}"));
    }
    b.build().expect("fixed fixture is well formed")
}

/// Index of the driven gate in [`loaded_inverter`] and [`loaded_nand2`].
pub const DUT: usize = 1;

/// `y = NAND(x1, x2)` with `x1 = NOT(a)` and `x2 = NOT(b)` as drivers and
/// `loads` extra inverters on each of `x1` and `x2`. The NAND is gate 2; its
/// own input bits are the complements of the primary inputs.
pub fn loaded_nand2(loads: usize) -> Circuit {
    let mut b = CircuitBuilder::new();
    b.input("a").input("b").output("y");
    b.assign(Keyword::Not, &["a"], "x1");
    b.assign(Keyword::Not, &["b"], "x2");
    b.assign(Keyword::Nand, &["x1", "x2"], "y");
    for i in 0..loads {
        b.assign(Keyword::Not, &["x1"], &format!("la{i}"));
        b.assign(Keyword::Not, &["x2"], &format!("lb{i}"));
    }
    b.build().expect("fixed fixture is well formed")
}

/// One entry of the corpus manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCase {
    pub name: String,
    pub netlist: PathBuf,
    pub preset: String,
    pub temperature: f64,
    pub vdd: f64,
    pub vectors: Vec<String>,
    /// Relative tolerance of the estimate against the golden oracle total.
    pub total_tolerance: f64,
    /// Relative tolerance per gate.
    pub gate_tolerance: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Generator settings recorded for the random cases.
    pub generator: BTreeMap<String, String>,
    pub cases: Vec<CorpusCase>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        let mut generator = BTreeMap::new();
        let mut cases = Vec::new();
        for s in &doc.sections {
            let section = s.name.as_deref().unwrap_or("");
            if section == "generator" {
                for e in &s.entries {
                    generator.insert(e.key.clone(), e.value.clone());
                }
                continue;
            }
            let Some(name) = section.strip_prefix("case.") else {
                return Err(Error::parse(s.line.max(1), format!("unexpected section [{section}]")));
            };
            cases.push(case_from_section(name, s)?);
        }
        Ok(Manifest { generator, cases })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.comment("Corpus manifest: one [case.<name>] section per golden case.");
        w.section("generator");
        for (k, v) in &self.generator {
            w.entry(k, v);
        }
        for c in &self.cases {
            w.section(&format!("case.{}", c.name));
            w.entry("netlist", c.netlist.display());
            w.entry("preset", &c.preset);
            w.float("temperature", c.temperature);
            w.float("vdd", c.vdd);
            w.entry("vectors", &c.vectors.join(" "));
            w.float("total_tolerance", c.total_tolerance);
            w.float("gate_tolerance", c.gate_tolerance);
            w.entry("description", &c.description);
        }
        w.finish()
    }
}

fn case_from_section(name: &str, s: &KvSection) -> Result<CorpusCase> {
    s.check_keys(&[
        "netlist",
        "preset",
        "temperature",
        "vdd",
        "vectors",
        "total_tolerance",
        "gate_tolerance",
        "description",
    ])?;
    let vectors: Vec<String> = s.require::<String>("vectors")?.split_whitespace().map(str::to_string).collect();
    if vectors.is_empty() {
        return Err(Error::parse(s.line, format!("case {name} lists no vectors")));
    }
    Ok(CorpusCase {
        name: name.to_string(),
        netlist: PathBuf::from(s.require::<String>("netlist")?),
        preset: s.require::<String>("preset")?,
        temperature: s.parse_value("temperature")?.unwrap_or(300.0),
        vdd: s.parse_value("vdd")?.unwrap_or(0.9),
        vectors,
        total_tolerance: s.parse_value("total_tolerance")?.unwrap_or(0.02),
        gate_tolerance: s.parse_value("gate_tolerance")?.unwrap_or(0.10),
        description: s.get("description").map(|e| e.value.clone()).unwrap_or_default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenVector {
    pub vector: String,
    pub net_voltages: Vec<f64>,
    pub gates: Vec<LeakageComponents>,
    pub total: LeakageComponents,
    pub iterations: usize,
    pub max_residual: f64,
}

/// Oracle results of one manifest case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    pub case: String,
    pub netlist: PathBuf,
    pub preset: String,
    pub temperature: f64,
    pub vdd: f64,
    pub vectors: Vec<GoldenVector>,
}

impl Golden {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn golden_path(root: &Path, case: &str) -> PathBuf {
    root.join("goldens").join(format!("{case}.json"))
}

impl CorpusCase {
    pub fn circuit(&self, root: &Path) -> Result<Circuit> {
        load_bench(&root.join(&self.netlist))
    }

    pub fn env(&self) -> Result<Environment> {
        Environment::new(self.temperature, self.vdd)
    }

    pub fn devices(&self) -> Result<DeviceSet> {
        Ok(DeviceSet::Uniform(self.preset.parse::<Preset>()?.params()))
    }

    pub fn vectors(&self) -> Result<Vec<InputVector>> {
        self.vectors.iter().map(|v| v.parse()).collect()
    }

    /// Runs the oracle on every vector. Non-convergence is an error.
    pub fn solve(&self, root: &Path, config: &OracleConfig) -> Result<Golden> {
        let c = self.circuit(root)?;
        let env = self.env()?;
        let devices = self.devices()?;
        let mut vectors = Vec::new();
        for v in self.vectors()? {
            if v.0.len() != c.input_count() {
                return Err(Error::Config(format!(
                    "case {}: vector {v} has {} bits, circuit has {} inputs",
                    self.name,
                    v.0.len(),
                    c.input_count()
                )));
            }
            let s = solve_full(&c, &v, &devices, &env, config)?;
            if !s.converged {
                return Err(Error::Solver {
                    message: format!("case {} vector {v}: oracle did not converge", self.name),
                    residual: s.max_residual,
                    best: Vec::new(),
                });
            }
            vectors.push(GoldenVector {
                vector: s.vector,
                net_voltages: s.net_voltages,
                gates: s.gate_leakage,
                total: s.total,
                iterations: s.iterations,
                max_residual: s.max_residual,
            });
        }
        Ok(Golden {
            case: self.name.clone(),
            netlist: self.netlist.clone(),
            preset: self.preset.clone(),
            temperature: self.temperature,
            vdd: self.vdd,
            vectors,
        })
    }

    /// Estimator against the stored golden, one comparison per vector.
    pub fn check(&self, root: &Path, golden: &Golden) -> Result<CaseCheck> {
        let c = self.circuit(root)?;
        let env = self.env()?;
        let est = Estimator::new(
            &c,
            &self.devices()?,
            &env,
            SolverConfig::default(),
            EstimateOptions {
                detail: false,
                ..EstimateOptions::default()
            },
        )?;
        let mut comparisons = Vec::new();
        for g in &golden.vectors {
            let report = est.estimate(&g.vector.parse()?)?;
            let oracle = crate::oracle::OracleSolution {
                vector: g.vector.clone(),
                net_voltages: g.net_voltages.clone(),
                internal_voltages: Vec::new(),
                iterations: g.iterations,
                max_residual: g.max_residual,
                converged: true,
                gate_leakage: g.gates.clone(),
                total: g.total,
            };
            comparisons.push((g.vector.clone(), compare(&oracle, &report)?));
        }
        let worst_total = comparisons
            .iter()
            .filter_map(|(_, c)| c.total.itotal)
            .fold(0.0f64, |m, e| m.max(e.abs()));
        let worst_gate = comparisons
            .iter()
            .filter_map(|(_, c)| c.worst_gate.map(|w| w.1))
            .fold(0.0f64, |m, e| m.max(e.abs()));
        Ok(CaseCheck {
            case: self.name.clone(),
            pass: worst_total <= self.total_tolerance && worst_gate <= self.gate_tolerance,
            worst_total,
            worst_gate,
            comparisons,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseCheck {
    pub case: String,
    pub pass: bool,
    pub worst_total: f64,
    pub worst_gate: f64,
    pub comparisons: Vec<(String, Comparison)>,
}

/// Recomputes every golden of the manifest at `manifest_path`. All cases are
/// solved before anything is written, so a failure leaves the old files.
pub fn regenerate_goldens(manifest_path: &Path, config: &OracleConfig) -> Result<Vec<PathBuf>> {
    let manifest = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for case in &manifest.cases {
        let g = case.solve(root, config)?;
        let mut text = serde_json::to_string_pretty(&g).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        out.push((golden_path(root, &case.name), text));
    }
    for (path, text) in &out {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(out.into_iter().map(|(p, _)| p).collect())
}

/// Checks every case of the manifest against its stored golden.
pub fn check_goldens(manifest_path: &Path) -> Result<Vec<CaseCheck>> {
    let manifest = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .cases
        .iter()
        .map(|case| case.check(root, &Golden::load(&golden_path(root, &case.name))?))
        .collect()
}

/// `.bench` text of a random DAG with a provenance header.
pub fn random_dag_bench(params: &DagParams, seed: u64) -> Result<String> {
    let c = random_dag(params, seed)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# random DAG: seed {seed}, {} inputs, {} gates, fanout cap {}",
        params.inputs, params.gates, params.max_fanout
    );
    s.push_str(&c.to_bench());
    Ok(s)
}
