// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo process variation and temperature sweeps.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{Component, DeviceParams, DevicePair, Environment, LeakageComponents};
use crate::error::{Error, Result};
use crate::estimator::{csv_err, DeviceSet, EstimateOptions, Estimator, LoadingReport};
use crate::gates::GateLibrary;
use crate::kv::{KvDocument, KvSection, KvWriter};
use crate::netlist::{Circuit, InputVector};
use crate::solver::SolverConfig;

/// Standard deviations of the four varied quantities. `l_eff` and `tox` are
/// in nm, `vth0` and `vdd` in volts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Sigmas {
    pub vth0: f64,
    pub l_eff: f64,
    pub tox: f64,
    pub vdd: f64,
}

impl Sigmas {
    const KEYS: [&'static str; 4] = ["vth0", "l_eff", "tox", "vdd"];

    fn from_section(s: &KvSection) -> Result<Self> {
        s.check_keys(&Self::KEYS)?;
        Ok(Sigmas {
            vth0: s.parse_value("vth0")?.unwrap_or(0.0),
            l_eff: s.parse_value("l_eff")?.unwrap_or(0.0),
            tox: s.parse_value("tox")?.unwrap_or(0.0),
            vdd: s.parse_value("vdd")?.unwrap_or(0.0),
        })
    }

    fn values(&self) -> [f64; 4] {
        [self.vth0, self.l_eff, self.tox, self.vdd]
    }
}

/// Maps channel length and oxide thickness deviations onto the compact model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    /// Threshold shift per nm of channel length.
    pub dvth_dl: f64,
    /// Tunneling prefactors scale by `exp(-beta_tox * dtox)`.
    pub beta_tox: f64,
    /// Threshold shift per nm of oxide thickness.
    pub dvth_dtox: f64,
}

impl Default for Mapping {
    fn default() -> Self {
        Mapping {
            dvth_dl: 0.004,
            beta_tox: 11.5,
            dvth_dtox: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    /// One draw per sample, shared by every transistor.
    pub inter: Sigmas,
    /// Independent draw per transistor. Supply variation is global, so
    /// `intra.vdd` must be zero.
    pub intra: Sigmas,
    pub mapping: Mapping,
    /// Draws are truncated at this many standard deviations.
    pub truncate: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub histogram_bins: usize,
}

impl Default for VariationSpec {
    fn default() -> Self {
        VariationSpec {
            inter: Sigmas {
                vth0: 0.02,
                l_eff: 1.0,
                tox: 0.02,
                vdd: 0.02,
            },
            intra: Sigmas {
                vth0: 0.02,
                l_eff: 0.5,
                tox: 0.01,
                vdd: 0.0,
            },
            mapping: Mapping::default(),
            truncate: 4.0,
            sample_count: 1000,
            seed: 1,
            histogram_bins: 40,
        }
    }
}

impl VariationSpec {
    /// Only intra-die threshold variation of `sigma` volts.
    pub fn vth_only(sigma: f64, sample_count: usize, seed: u64) -> Self {
        VariationSpec {
            inter: Sigmas::default(),
            intra: Sigmas {
                vth0: sigma,
                ..Sigmas::default()
            },
            sample_count,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.inter.values().into_iter().chain(self.intra.values()) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("sigma {v} must be finite and non-negative")));
            }
        }
        if self.intra.vdd != 0.0 {
            return Err(Error::invalid("supply variation is inter-die only"));
        }
        if self.sample_count == 0 {
            return Err(Error::invalid("sample_count must be at least 1"));
        }
        if !(self.truncate.is_finite() && self.truncate > 0.0) {
            return Err(Error::invalid("truncate must be positive"));
        }
        if self.histogram_bins == 0 {
            return Err(Error::invalid("histogram_bins must be at least 1"));
        }
        let m = &self.mapping;
        if ![m.dvth_dl, m.beta_tox, m.dvth_dtox].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("mapping coefficients must be finite"));
        }
        Ok(())
    }

    /// Sections `[variation]` (samples, seed, truncate, bins), `[inter]`,
    /// `[intra]` and `[mapping]`. Missing keys keep their defaults; a
    /// missing sigma section means no variation of that kind.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        let mut spec = VariationSpec::default();
        for s in &doc.sections {
            match s.name.as_deref() {
                Some("variation") => {}
                Some("inter") | Some("intra") | Some("mapping") => {}
                Some(other) => return Err(Error::parse(s.line, format!("unknown section [{other}]"))),
                None => return Err(Error::parse(s.entries[0].line, "entries before the first section")),
            }
        }
        if let Some(s) = doc.section("variation") {
            s.check_keys(&["samples", "seed", "truncate", "bins"])?;
            spec.sample_count = s.parse_value("samples")?.unwrap_or(spec.sample_count);
            spec.seed = s.parse_value("seed")?.unwrap_or(spec.seed);
            spec.truncate = s.parse_value("truncate")?.unwrap_or(spec.truncate);
            spec.histogram_bins = s.parse_value("bins")?.unwrap_or(spec.histogram_bins);
        }
        spec.inter = doc.section("inter").map(Sigmas::from_section).transpose()?.unwrap_or_default();
        spec.intra = doc.section("intra").map(Sigmas::from_section).transpose()?.unwrap_or_default();
        if let Some(s) = doc.section("mapping") {
            s.check_keys(&["dvth_dl", "beta_tox", "dvth_dtox"])?;
            let d = Mapping::default();
            spec.mapping = Mapping {
                dvth_dl: s.parse_value("dvth_dl")?.unwrap_or(d.dvth_dl),
                beta_tox: s.parse_value("beta_tox")?.unwrap_or(d.beta_tox),
                dvth_dtox: s.parse_value("dvth_dtox")?.unwrap_or(d.dvth_dtox),
            };
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.section("variation");
        w.entry("samples", self.sample_count);
        w.entry("seed", self.seed);
        w.float("truncate", self.truncate);
        w.entry("bins", self.histogram_bins);
        for (name, s) in [("inter", &self.inter), ("intra", &self.intra)] {
            w.section(name);
            for (k, v) in Sigmas::KEYS.iter().zip(s.values()) {
                w.float(k, v);
            }
        }
        w.section("mapping");
        w.float("dvth_dl", self.mapping.dvth_dl);
        w.float("beta_tox", self.mapping.beta_tox);
        w.float("dvth_dtox", self.mapping.dvth_dtox);
        w.finish()
    }

    fn draw(&self, rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() <= self.truncate {
                return z * sigma;
            }
        }
    }

    fn draw_all(&self, rng: &mut ChaCha8Rng, s: &Sigmas) -> [f64; 4] {
        [
            self.draw(rng, s.vth0),
            self.draw(rng, s.l_eff),
            self.draw(rng, s.tox),
            self.draw(rng, s.vdd),
        ]
    }

    /// Applies `(dvth0, dl, dtox)` to one transistor.
    pub fn perturb(&self, p: &DeviceParams, dvth0: f64, dl: f64, dtox: f64) -> DeviceParams {
        let m = &self.mapping;
        let mut q = *p;
        q.vth0 += dvth0 + m.dvth_dl * dl + m.dvth_dtox * dtox;
        let k = (-m.beta_tox * dtox).exp();
        q.a_ov *= k;
        q.a_ch *= k;
        q
    }
}

/// Per-gate, per-transistor parameters and supply voltage of one sample.
/// Sample `index` uses its own ChaCha stream, so results do not depend on
/// evaluation order.
pub fn draw_sample(
    circuit: &Circuit,
    library: &GateLibrary,
    pair: &DevicePair,
    env: &Environment,
    spec: &VariationSpec,
    index: u64,
) -> Result<(DeviceSet, Environment)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let inter = spec.draw_all(&mut rng, &spec.inter);
    let mut per = Vec::with_capacity(circuit.gates.len());
    for g in &circuit.gates {
        let t = library.template_for(g.gate_type)?;
        let mut list = Vec::with_capacity(t.transistors.len());
        for tr in &t.transistors {
            let intra = spec.draw_all(&mut rng, &spec.intra);
            let base = pair.get(tr.polarity);
            list.push(spec.perturb(base, inter[0] + intra[0], inter[1] + intra[1], inter[2] + intra[2]));
        }
        per.push(list);
    }
    let env = Environment::new(env.temperature, env.vdd + inter[3])?;
    Ok((DeviceSet::PerGate(per), env))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub p1: f64,
    pub p50: f64,
    pub p99: f64,
}

impl Stats {
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("no samples"));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        // offsets from the first value keep a constant sample exact
        let x0 = values[0];
        let mean = x0 + values.iter().map(|x| x - x0).sum::<f64>() / n;
        let var = if v.len() > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Stats {
            mean,
            std: var.sqrt(),
            min: v[0],
            max: v[v.len() - 1],
            p1: percentile(&v, 0.01),
            p50: percentile(&v, 0.50),
            p99: percentile(&v, 0.99),
        })
    }
}

/// Linear interpolation between order statistics of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges shared by both distributions.
    pub edges: Vec<f64>,
    pub with_loading: Vec<usize>,
    pub without_loading: Vec<usize>,
}

impl Histogram {
    fn build(a: &[f64], b: &[f64], bins: usize) -> Self {
        let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 0.0 };
        let edges = (0..=bins).map(|k| if k == bins { hi } else { lo + width * k as f64 }).collect();
        let count = |xs: &[f64]| {
            let mut c = vec![0usize; bins];
            for &x in xs {
                let k = if width > 0.0 { ((x - lo) / width) as usize } else { 0 };
                c[k.min(bins - 1)] += 1;
            }
            c
        };
        Histogram {
            edges,
            with_loading: count(a),
            without_loading: count(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub isub: Stats,
    pub igate: Stats,
    pub ibtbt: Stats,
    pub itotal: Stats,
}

impl ComponentStats {
    fn from_samples(s: &[LeakageComponents]) -> Result<Self> {
        let pick = |c: Component| Stats::from_samples(&s.iter().map(|l| l.get(c)).collect::<Vec<_>>());
        Ok(ComponentStats {
            isub: pick(Component::Isub)?,
            igate: pick(Component::Igate)?,
            ibtbt: pick(Component::Ibtbt)?,
            itotal: pick(Component::Itotal)?,
        })
    }

    pub fn get(&self, c: Component) -> &Stats {
        match c {
            Component::Isub => &self.isub,
            Component::Igate => &self.igate,
            Component::Ibtbt => &self.ibtbt,
            Component::Itotal => &self.itotal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub spec: VariationSpec,
    pub vector: String,
    pub samples: usize,
    pub failures: usize,
    pub with_loading: ComponentStats,
    pub without_loading: ComponentStats,
    /// Histogram of circuit itotal.
    pub histogram: Histogram,
    /// Per-sample circuit totals `(without, with)` in sample order.
    pub totals: Vec<(LeakageComponents, LeakageComponents)>,
}

impl DistributionSummary {
    /// Relative change of the itotal standard deviation due to loading.
    pub fn std_increase(&self) -> f64 {
        self.with_loading.itotal.std / self.without_loading.itotal.std - 1.0
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["loading", "component", "mean", "std", "min", "max", "p1", "p50", "p99"])
            .map_err(csv_err)?;
        for (label, st) in [("with", &self.with_loading), ("without", &self.without_loading)] {
            for c in Component::ALL {
                let s = st.get(c);
                let mut row = vec![label.to_string(), c.name().to_string()];
                row.extend([s.mean, s.std, s.min, s.max, s.p1, s.p50, s.p99].iter().map(|v| v.to_string()));
                out.write_record(&row).map_err(csv_err)?;
            }
        }
        out.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lo", "hi", "with_loading", "without_loading"]).map_err(csv_err)?;
        let h = &self.histogram;
        for k in 0..h.with_loading.len() {
            out.write_record([
                h.edges[k].to_string(),
                h.edges[k + 1].to_string(),
                h.with_loading[k].to_string(),
                h.without_loading[k].to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })
    }

    pub fn write_samples_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["sample".to_string()];
        for k in ["without", "with"] {
            for c in Component::ALL {
                header.push(format!("{k}_{}", c.name()));
            }
        }
        out.write_record(&header).map_err(csv_err)?;
        for (i, (a, b)) in self.totals.iter().enumerate() {
            let mut row = vec![i.to_string()];
            for l in [a, b] {
                row.extend(Component::ALL.iter().map(|&c| l.get(c).to_string()));
            }
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })
    }
}

/// Failed samples are excluded while they stay within 1% of the run.
pub const FAILURE_BUDGET: f64 = 0.01;

/// Circuit leakage distribution with and without loading. Each sample is
/// one estimate; its nominal totals are the loading-free result.
pub fn monte_carlo(
    circuit: &Circuit,
    vector: &InputVector,
    pair: &DevicePair,
    spec: &VariationSpec,
    env: &Environment,
    config: &SolverConfig,
    parallel: bool,
) -> Result<DistributionSummary> {
    spec.validate()?;
    env.validate()?;
    let library = GateLibrary::default();
    let run = |i: usize| -> Result<Option<(LeakageComponents, LeakageComponents)>> {
        let (devices, env) = draw_sample(circuit, &library, pair, env, spec, i as u64)?;
        let opts = EstimateOptions {
            detail: false,
            parallel: false,
            ..EstimateOptions::default()
        };
        let est = match Estimator::with_library(circuit, &library, &devices, &env, *config, opts) {
            Ok(e) => e,
            Err(Error::Solver { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        match est.estimate(vector) {
            Ok(r) if r.diagnostics.failures == 0 => Ok(Some((r.nominal_total, r.loaded_total))),
            Ok(_) | Err(Error::Solver { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let results: Vec<Option<(LeakageComponents, LeakageComponents)>> = if parallel {
        (0..spec.sample_count).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..spec.sample_count).map(run).collect::<Result<_>>()?
    };
    let failures = results.iter().filter(|r| r.is_none()).count();
    if failures as f64 > FAILURE_BUDGET * spec.sample_count as f64 {
        return Err(Error::Solver {
            message: format!(
                "{failures} of {} samples failed to solve, over the {}% budget",
                spec.sample_count,
                FAILURE_BUDGET * 100.0
            ),
            residual: f64::NAN,
            best: Vec::new(),
        });
    }
    let totals: Vec<_> = results.into_iter().flatten().collect();
    if totals.is_empty() {
        return Err(Error::invalid("every sample failed"));
    }
    let without: Vec<LeakageComponents> = totals.iter().map(|t| t.0).collect();
    let with: Vec<LeakageComponents> = totals.iter().map(|t| t.1).collect();
    let hist = Histogram::build(
        &with.iter().map(|l| l.itotal()).collect::<Vec<_>>(),
        &without.iter().map(|l| l.itotal()).collect::<Vec<_>>(),
        spec.histogram_bins,
    );
    Ok(DistributionSummary {
        spec: spec.clone(),
        vector: vector.to_string(),
        samples: totals.len(),
        failures,
        with_loading: ComponentStats::from_samples(&with)?,
        without_loading: ComponentStats::from_samples(&without)?,
        histogram: hist,
        totals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePoint {
    pub temperature: f64,
    pub report: LoadingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSweep {
    /// Gate whose LD_ALL is tabulated next to the circuit totals.
    pub focus: Option<usize>,
    pub points: Vec<TemperaturePoint>,
}

impl TemperatureSweep {
    /// Columns: temperature, nominal and loaded circuit totals per
    /// component, circuit LD per component, and the focus gate's LD_ALL.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["temperature".to_string()];
        for k in ["nominal", "loaded", "ld"] {
            for c in Component::ALL {
                header.push(format!("{k}_{}", c.name()));
            }
        }
        if self.focus.is_some() {
            for c in Component::ALL {
                header.push(format!("gate_ld_all_{}", c.name()));
            }
        }
        out.write_record(&header).map_err(csv_err)?;
        for p in &self.points {
            let r = &p.report;
            let mut row = vec![p.temperature.to_string()];
            row.extend(Component::ALL.iter().map(|&c| r.nominal_total.get(c).to_string()));
            row.extend(Component::ALL.iter().map(|&c| r.loaded_total.get(c).to_string()));
            row.extend(Component::ALL.iter().map(|&c| opt(r.ld_total.get(c))));
            if let Some(g) = self.focus {
                row.extend(Component::ALL.iter().map(|&c| opt(r.gates[g].ld_all.get(c))));
            }
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })
    }

    /// LD_ALL of the focus gate per temperature.
    pub fn focus_ld(&self, c: Component) -> Vec<Option<f64>> {
        match self.focus {
            Some(g) => self.points.iter().map(|p| p.report.gates[g].ld_all.get(c)).collect(),
            None => Vec::new(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One estimate per temperature at fixed supply.
#[allow(clippy::too_many_arguments)]
pub fn temperature_sweep(
    circuit: &Circuit,
    vector: &InputVector,
    devices: &DeviceSet,
    vdd: f64,
    temperatures: &[f64],
    config: &SolverConfig,
    options: EstimateOptions,
    focus: Option<usize>,
) -> Result<TemperatureSweep> {
    if temperatures.is_empty() {
        return Err(Error::invalid("empty temperature list"));
    }
    if let Some(g) = focus {
        if g >= circuit.gates.len() {
            return Err(Error::invalid(format!("focus gate {g} out of range")));
        }
    }
    let mut points = Vec::with_capacity(temperatures.len());
    for &t in temperatures {
        let env = Environment::new(t, vdd)?;
        let est = Estimator::new(circuit, devices, &env, *config, options)?;
        points.push(TemperaturePoint {
            temperature: t,
            report: est.estimate(vector)?,
        });
    }
    Ok(TemperatureSweep { focus, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert!((percentile(&v, 0.01) - 1.04).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_are_exact() {
        let x = 1.234_567e-7;
        let s = Stats::from_samples(&[x; 7]).unwrap();
        assert_eq!(s.mean, x);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.p99, x);
    }

    #[test]
    fn spec_round_trip_and_validation() {
        let s = VariationSpec::default();
        assert_eq!(VariationSpec::parse(&s.to_text()).unwrap(), s);
        assert!(VariationSpec::parse("[inter]\nvth0 = -0.1\n").is_err());
        assert!(VariationSpec::parse("[variation]\nsamples = 0\n").is_err());
        assert!(VariationSpec::parse("[intra]\nvdd = 0.01\n").is_err());
        assert!(VariationSpec::parse("[bogus]\n").is_err());
        let only = VariationSpec::parse("[intra]\nvth0 = 0.05\n").unwrap();
        assert_eq!(only.inter, Sigmas::default());
        assert_eq!(only.intra.vth0, 0.05);
    }

    #[test]
    fn draws_are_truncated() {
        let spec = VariationSpec {
            truncate: 1.0,
            ..VariationSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            assert!(spec.draw(&mut rng, 0.5).abs() <= 0.5);
        }
    }

    #[test]
    fn tox_mapping_scales_tunneling() {
        let spec = VariationSpec::default();
        let p = DeviceParams {
            a_ov: 1.0,
            a_ch: 2.0,
            ..crate::device::Preset::DEFAULT.params().nmos
        };
        let q = spec.perturb(&p, 0.0, 0.0, 0.1);
        assert!((q.a_ov - (-1.15f64).exp()).abs() < 1e-12);
        assert!((q.vth0 - p.vth0 - 0.005).abs() < 1e-12);
        let q = spec.perturb(&p, 0.0, 1.0, 0.0);
        assert!((q.vth0 - p.vth0 - 0.004).abs() < 1e-12);
    }
}
