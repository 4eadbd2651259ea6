// SPDX-License-Identifier: Apache-2.0

//! Command implementations behind the `leakload` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use leakload::corpus::{check_goldens, loaded_inverter, regenerate_goldens};
use leakload::device::{
    eval_components, Component, DevicePair, Environment, LeakageComponents, Polarity, Preset, TerminalVoltages,
};
use leakload::estimator::{
    vector_sweep, write_atomic, DeviceSet, EstimateOptions, Estimator, LoadingReport, VectorSource,
    MAX_EXHAUSTIVE_INPUTS,
};
use leakload::netlist::{load_bench, Circuit, InputVector};
use leakload::oracle::{compare, solve_full, OracleConfig};
use leakload::solver::SolverConfig;
use leakload::variation::{monte_carlo, VariationSpec};
use leakload::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_SOLVE: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;
pub const EXIT_IO: i32 = 6;
pub const EXIT_CHECK: i32 = 7;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
    /// A verification command found mismatches.
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Check(_) => EXIT_CHECK,
            CliError::Lib(e) => match e {
                Error::Parse { .. } | Error::UnsupportedGate { .. } => EXIT_PARSE,
                Error::Solver { .. } => EXIT_SOLVE,
                Error::InvalidInput(_) | Error::UnknownPreset { .. } | Error::Config(_) => EXIT_CONFIG,
                Error::Io { .. } => EXIT_IO,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "leakload", version, about = "Loading-aware static leakage estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-component currents of a transistor and an inverter along one axis.
    Characterize(CharacterizeArgs),
    /// Loading-aware estimate of a netlist for one or more vectors.
    Estimate(EstimateArgs),
    /// Average and maximum loading deltas over a vector set.
    Sweep(SweepArgs),
    /// Monte Carlo leakage distribution with and without loading.
    Montecarlo(MonteCarloArgs),
    /// Regenerate or check the corpus golden files.
    Goldens(GoldenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DeviceArgs {
    /// D25-S, D25-G, D25-JN or DEFAULT.
    #[arg(long, conflicts_with = "params")]
    pub preset: Option<String>,
    /// Device parameter file with [nmos] and [pmos] sections.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

impl DeviceArgs {
    pub fn pair(&self) -> CliResult<DevicePair> {
        match (&self.preset, &self.params) {
            (_, Some(p)) => Ok(DevicePair::load(p)?),
            (Some(name), None) => Ok(leakload::device::preset(name)?),
            (None, None) => Ok(Preset::DEFAULT.params()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// Temperature in kelvin.
    #[arg(long = "temp", default_value_t = 300.0)]
    pub temperature: f64,
    /// Supply voltage in volts.
    #[arg(long, default_value_t = 0.9)]
    pub vdd: f64,
}

impl EnvArgs {
    pub fn env(&self) -> CliResult<Environment> {
        Ok(Environment::new(self.temperature, self.vdd)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct VectorArgs {
    /// Explicit input bits, primary inputs first then flip-flop outputs.
    #[arg(long, conflicts_with_all = ["random", "exhaustive"])]
    pub vector: Option<String>,
    /// Number of random vectors.
    #[arg(long, conflicts_with = "exhaustive")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Every input combination (at most 20 inputs).
    #[arg(long)]
    pub exhaustive: bool,
}

impl VectorArgs {
    /// `fallback` applies when no source flag is given.
    pub fn source(&self, circuit: &Circuit, fallback: VectorSource) -> CliResult<VectorSource> {
        if self.exhaustive && circuit.input_count() > MAX_EXHAUSTIVE_INPUTS {
            return Err(CliError::Usage(format!(
                "--exhaustive refused: {} inputs exceed the limit of {MAX_EXHAUSTIVE_INPUTS}",
                circuit.input_count()
            )));
        }
        if let Some(v) = &self.vector {
            return Ok(VectorSource::Explicit(vec![v.parse::<InputVector>()?]));
        }
        if let Some(n) = self.random {
            if n == 0 {
                return Err(CliError::Usage("--random needs at least one vector".into()));
            }
            return Ok(VectorSource::Random {
                count: n,
                seed: self.seed,
            });
        }
        if self.exhaustive {
            return Ok(VectorSource::Exhaustive);
        }
        Ok(fallback)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisKind {
    Temp,
    Vdd,
    /// A device parameter applied to both polarities, named by `--param`.
    Param,
}

#[derive(Debug, Clone, Args)]
pub struct CharacterizeArgs {
    #[command(flatten)]
    pub device: DeviceArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, value_enum)]
    pub axis: AxisKind,
    /// Parameter name for `--axis param`, e.g. `vth0`.
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    /// Directory for `characterize.csv` and `characterize.gp`; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub netlist: PathBuf,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub vectors: VectorArgs,
    /// Also run the full-circuit solver and report relative errors.
    #[arg(long)]
    pub oracle: bool,
    /// Force every loading current to zero.
    #[arg(long)]
    pub no_loading: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub netlist: PathBuf,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    /// Defaults to 100 random vectors.
    #[command(flatten)]
    pub vectors: VectorArgs,
    #[arg(long)]
    pub no_loading: bool,
    /// Run vectors on the rayon pool.
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MonteCarloArgs {
    /// Netlist; the 6+6 loaded inverter fixture when omitted.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    /// Input bits; all zeros when omitted.
    #[arg(long)]
    pub vector: Option<String>,
    /// Variation spec file; built-in defaults when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the spec's sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GoldenArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Compare the estimator with the stored goldens instead of rewriting them.
    #[arg(long)]
    pub check: bool,
}

/// Runs a parsed command; human-readable output is appended to `out`.
pub fn run(cli: &Cli, out: &mut String) -> CliResult<()> {
    match &cli.command {
        Command::Characterize(a) => characterize(a, out),
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Montecarlo(a) => cmd_montecarlo(a, out),
        Command::Goldens(a) => cmd_goldens(a, out),
    }
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, bytes)?;
    Ok(path)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> leakload::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:+.3}%", v * 100.0),
        None => "n/a".into(),
    }
}

/// Evenly spaced values from `from` to `to` inclusive.
pub fn axis_values(from: f64, to: f64, steps: usize) -> CliResult<Vec<f64>> {
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Usage("range needs finite bounds and at least one step".into()));
    }
    if steps == 1 {
        if from != to {
            return Err(CliError::Usage("a single step needs --from equal to --to".into()));
        }
        return Ok(vec![from]);
    }
    if from == to {
        return Err(CliError::Usage("empty range: --from equals --to".into()));
    }
    Ok((0..steps)
        .map(|k| if k == steps - 1 { to } else { from + (to - from) * k as f64 / (steps - 1) as f64 })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizeRow {
    pub axis: f64,
    pub subject: &'static str,
    pub components: LeakageComponents,
}

/// Off and on transistors of both polarities plus an isolated inverter at
/// each input, for every axis value.
pub fn characterize_rows(a: &CharacterizeArgs) -> CliResult<Vec<CharacterizeRow>> {
    let base = a.device.pair()?;
    if a.axis == AxisKind::Param {
        let name = a.param.as_deref().ok_or_else(|| CliError::Usage("--axis param needs --param".into()))?;
        if base.nmos.get(name).is_none() {
            return Err(CliError::Usage(format!(
                "unknown parameter `{name}` (known: {})",
                leakload::device::DeviceParams::keys().join(", ")
            )));
        }
    }
    let values = axis_values(a.from, a.to, a.steps)?;
    let inverter = loaded_inverter(0, 0);
    let mut rows = Vec::new();
    for x in values {
        let mut pair = base;
        let mut env = a.env.clone();
        match a.axis {
            AxisKind::Temp => env.temperature = x,
            AxisKind::Vdd => env.vdd = x,
            AxisKind::Param => {
                let name = a.param.as_deref().unwrap_or_default();
                pair.nmos.set(name, x)?;
                pair.pmos.set(name, x)?;
            }
        }
        let env = env.env()?;
        let vdd = env.vdd;
        let devices = [
            ("nmos_off", Polarity::Nmos, TerminalVoltages::new(0.0, vdd, 0.0, 0.0)),
            ("nmos_on", Polarity::Nmos, TerminalVoltages::new(vdd, 0.0, 0.0, 0.0)),
            ("pmos_off", Polarity::Pmos, TerminalVoltages::new(vdd, 0.0, vdd, vdd)),
            ("pmos_on", Polarity::Pmos, TerminalVoltages::new(0.0, vdd, vdd, vdd)),
        ];
        for (subject, pol, v) in devices {
            rows.push(CharacterizeRow {
                axis: x,
                subject,
                components: eval_components(pair.get(pol), pol, &v, &env)?,
            });
        }
        let est = Estimator::new(
            &inverter,
            &DeviceSet::Uniform(pair),
            &env,
            SolverConfig::default(),
            EstimateOptions {
                loading: false,
                detail: false,
                parallel: false,
            },
        )?;
        let mut avg = LeakageComponents::default();
        for (subject, bit) in [("inv_in0", false), ("inv_in1", true)] {
            let r = est.estimate(&InputVector(vec![!bit]))?;
            let l = r.gates[leakload::corpus::DUT].nominal;
            avg += l;
            rows.push(CharacterizeRow {
                axis: x,
                subject,
                components: l,
            });
        }
        rows.push(CharacterizeRow {
            axis: x,
            subject: "inv_avg",
            components: scale(&avg, 0.5),
        });
    }
    Ok(rows)
}

fn scale(l: &LeakageComponents, k: f64) -> LeakageComponents {
    LeakageComponents {
        isub: l.isub * k,
        igc: l.igc * k,
        igso: l.igso * k,
        igdo: l.igdo * k,
        igb: l.igb * k,
        ibtbt_drain: l.ibtbt_drain * k,
        ibtbt_source: l.ibtbt_source * k,
    }
}

fn characterize(a: &CharacterizeArgs, out: &mut String) -> CliResult<()> {
    let rows = characterize_rows(a)?;
    let axis = match a.axis {
        AxisKind::Temp => "temperature".to_string(),
        AxisKind::Vdd => "vdd".to_string(),
        AxisKind::Param => a.param.clone().unwrap_or_default(),
    };
    let mut csv = format!("{axis},subject,isub,igate,ibtbt,itotal\n");
    for r in &rows {
        let c = &r.components;
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.axis, r.subject, c.isub, c.igate(), c.ibtbt(), c.itotal());
    }
    match &a.out {
        Some(dir) => {
            let p = write_out(dir, "characterize.csv", csv.as_bytes())?;
            let gp = format!(
                "set datafile separator ','\nset logscale y\nset xlabel '{axis}'\nset ylabel 'current (A)'\n\
                 plot for [col=3:6] '< grep inv_avg characterize.csv' using 1:col with linespoints title columnheader(col)\n"
            );
            write_out(dir, "characterize.gp", gp.as_bytes())?;
            let _ = writeln!(out, "wrote {}", p.display());
        }
        None => out.push_str(&csv),
    }
    Ok(())
}

fn summary(r: &LoadingReport, out: &mut String) {
    let _ = writeln!(out, "vector {}  T={} K  Vdd={} V  loading={}", r.vector, r.temperature, r.vdd, r.loading);
    let _ = writeln!(out, "  {:<8} {:>14} {:>14} {:>10}", "", "nominal (A)", "loaded (A)", "delta");
    for c in Component::ALL {
        let _ = writeln!(
            out,
            "  {:<8} {:>14.6e} {:>14.6e} {:>10}",
            c.name(),
            r.nominal_total.get(c),
            r.loaded_total.get(c),
            pct(r.ld_total.get(c))
        );
    }
    if r.diagnostics.failures > 0 {
        let _ = writeln!(out, "  {} gate solves fell back to nominal", r.diagnostics.failures);
    }
}

fn open_netlist(path: &Path) -> CliResult<Circuit> {
    Ok(load_bench(path)?)
}

fn cmd_estimate(a: &EstimateArgs, out: &mut String) -> CliResult<()> {
    let circuit = open_netlist(&a.netlist)?;
    let pair = a.device.pair()?;
    let env = a.env.env()?;
    let source = a.vectors.source(&circuit, VectorSource::Random { count: 1, seed: a.vectors.seed })?;
    let vectors = source.vectors(circuit.input_count())?;
    let devices = DeviceSet::Uniform(pair);
    let est = Estimator::new(
        &circuit,
        &devices,
        &env,
        SolverConfig::default(),
        EstimateOptions {
            loading: !a.no_loading,
            ..EstimateOptions::default()
        },
    )?;
    for v in &vectors {
        let r = est.estimate(v)?;
        summary(&r, out);
        let mut oracle_json = None;
        if a.oracle {
            let s = solve_full(&circuit, v, &devices, &env, &OracleConfig::default())?;
            if !s.converged {
                return Err(Error::Solver {
                    message: format!("full-circuit solve did not converge for {v}"),
                    residual: s.max_residual,
                    best: Vec::new(),
                }
                .into());
            }
            let cmp = compare(&s, &r)?;
            let _ = writeln!(out, "  oracle: {} iterations, max residual {:.3e} A", s.iterations, s.max_residual);
            for c in Component::ALL {
                let _ = writeln!(out, "  error {:<8} {}", c.name(), pct(cmp.total.get(c)));
            }
            if let Some((g, e)) = cmp.worst_gate {
                let _ = writeln!(out, "  worst gate {} ({}) {}", g, circuit.nets[circuit.gates[g].output], pct(Some(e)));
            }
            oracle_json = Some(
                serde_json::to_string_pretty(&serde_json::json!({ "oracle": s, "comparison": cmp }))
                    .map_err(|e| Error::Config(e.to_string()))?,
            );
        }
        if let Some(dir) = &a.out {
            let stem = format!("report_{}", r.vector);
            write_out(dir, &format!("{stem}.json"), r.to_json().as_bytes())?;
            write_out(dir, &format!("{stem}.csv"), &csv_bytes(|b| r.write_csv(b))?)?;
            if let Some(j) = oracle_json {
                write_out(dir, &format!("oracle_{}.json", r.vector), j.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut String) -> CliResult<()> {
    let circuit = open_netlist(&a.netlist)?;
    let env = a.env.env()?;
    let source = a.vectors.source(&circuit, VectorSource::Random { count: 100, seed: a.vectors.seed })?;
    let est = Estimator::new(
        &circuit,
        &DeviceSet::Uniform(a.device.pair()?),
        &env,
        SolverConfig::default(),
        EstimateOptions {
            loading: !a.no_loading,
            detail: false,
            parallel: a.parallel,
        },
    )?;
    let s = vector_sweep(&est, &source)?;
    let _ = writeln!(out, "{} vectors, {} gates", s.rows.len(), circuit.gates.len());
    let _ = writeln!(out, "  {:<8} {:>10} {:>10} {:>10}", "", "avg", "avg |.|", "max");
    for c in Component::ALL {
        let _ = writeln!(
            out,
            "  {:<8} {:>10} {:>10} {:>10}",
            c.name(),
            pct(s.average_ld.get(c)),
            pct(s.average_abs_ld.get(c)),
            pct(s.max_ld.get(c))
        );
    }
    let _ = writeln!(
        out,
        "  min-leakage vector: nominal {} loaded {}{}",
        s.min_vector_nominal,
        s.min_vector_loaded,
        if s.min_vector_changed { " (changed by loading)" } else { "" }
    );
    if let Some(dir) = &a.out {
        write_out(dir, "sweep.csv", &csv_bytes(|b| s.write_csv(b))?)?;
        write_out(dir, "sweep_summary.csv", &csv_bytes(|b| s.write_summary_csv(b))?)?;
    }
    Ok(())
}

fn cmd_montecarlo(a: &MonteCarloArgs, out: &mut String) -> CliResult<()> {
    let circuit = match &a.netlist {
        Some(p) => open_netlist(p)?,
        None => loaded_inverter(6, 6),
    };
    let mut spec = match &a.spec {
        Some(p) => VariationSpec::load(p)?,
        None => VariationSpec::default(),
    };
    if let Some(n) = a.samples {
        spec.sample_count = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let vector = match &a.vector {
        Some(v) => v.parse()?,
        None => InputVector(vec![false; circuit.input_count()]),
    };
    let d = monte_carlo(
        &circuit,
        &vector,
        &a.device.pair()?,
        &spec,
        &a.env.env()?,
        &SolverConfig::default(),
        a.parallel,
    )?;
    let _ = writeln!(out, "{} samples ({} failed), vector {}", d.samples, d.failures, d.vector);
    let _ = writeln!(out, "  {:<8} {:>14} {:>14} {:>14} {:>14}", "", "mean w/o", "mean with", "std w/o", "std with");
    for c in Component::ALL {
        let (w, n) = (d.with_loading.get(c), d.without_loading.get(c));
        let _ = writeln!(out, "  {:<8} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}", c.name(), n.mean, w.mean, n.std, w.std);
    }
    let _ = writeln!(out, "  itotal std change due to loading {}", pct(Some(d.std_increase())));
    if let Some(dir) = &a.out {
        write_out(dir, "mc_summary.csv", &csv_bytes(|b| d.write_summary_csv(b))?)?;
        write_out(dir, "mc_histogram.csv", &csv_bytes(|b| d.write_histogram_csv(b))?)?;
        write_out(dir, "mc_samples.csv", &csv_bytes(|b| d.write_samples_csv(b))?)?;
    }
    Ok(())
}

fn cmd_goldens(a: &GoldenArgs, out: &mut String) -> CliResult<()> {
    if a.check {
        let checks = check_goldens(&a.manifest)?;
        let mut failed = Vec::new();
        for c in &checks {
            let _ = writeln!(
                out,
                "{:<5} {:<20} total {:.3}%  worst gate {:.3}%",
                if c.pass { "ok" } else { "FAIL" },
                c.case,
                c.worst_total * 100.0,
                c.worst_gate * 100.0
            );
            if !c.pass {
                failed.push(c.case.clone());
            }
        }
        if !failed.is_empty() {
            return Err(CliError::Check(format!("golden mismatch: {}", failed.join(", "))));
        }
    } else {
        for p in regenerate_goldens(&a.manifest, &OracleConfig::default())? {
            let _ = writeln!(out, "wrote {}", p.display());
        }
    }
    Ok(())
}
