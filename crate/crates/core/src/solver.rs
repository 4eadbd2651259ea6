// SPDX-License-Identifier: Apache-2.0

//! Steady-state node voltages of a single gate.
//!
//! Every solved node obeys `f(V) = injected - sum(currents into devices) = 0`,
//! which is strictly decreasing in its own voltage. A cold solve alternates
//! one-dimensional bracketed root finds over the gate's nodes until no node
//! moves by more than the voltage tolerance, then finishes with a few Newton
//! steps on the whole gate so the KCL residuals reach the current tolerance.
//! A warm solve starts Newton from a nearby operating point and falls back to
//! the cold path if it does not converge quickly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::device::{CompiledDevice, DevicePair, DeviceParams, Environment, LeakageComponents, TerminalVoltages};
use crate::error::{Error, Result};
use crate::gates::{GateTemplate, TNode};

/// Voltages are confined to the rails widened by this margin.
pub const CLAMP_MARGIN: f64 = 0.05;

/// Bracket width at which bisection hands over to interpolation.
const POLISH_WIDTH: f64 = 1e-3;

const WARM_NEWTON_STEPS: usize = 8;
const POLISH_NEWTON_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Amperes.
    pub current_tolerance: f64,
    /// Volts.
    pub voltage_tolerance: f64,
    pub max_bisection_steps: usize,
    pub max_outer_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            current_tolerance: 1e-17,
            voltage_tolerance: 1e-7,
            max_bisection_steps: 200,
            max_outer_iterations: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.current_tolerance > 0.0 && self.voltage_tolerance > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.max_bisection_steps == 0 || self.max_outer_iterations == 0 {
            return Err(Error::Config("solver iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOperatingPoint {
    pub input_voltages: Vec<f64>,
    pub output_voltage: f64,
    pub internal_voltages: Vec<f64>,
    /// Into the output node, amperes.
    pub injected_current: f64,
    /// KCL residual of each solved node: internals first, then the output.
    pub residuals: Vec<f64>,
    pub vdd: f64,
    /// Outer sweeps plus Newton steps spent.
    pub iterations: usize,
}

impl GateOperatingPoint {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn node_voltages(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 + self.input_voltages.len() + self.internal_voltages.len());
        v.push(0.0);
        v.push(self.vdd);
        v.extend_from_slice(&self.input_voltages);
        v.extend_from_slice(&self.internal_voltages);
        v.push(self.output_voltage);
        v
    }
}

/// Leakage of a solved gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateLeakage {
    pub components: LeakageComponents,
    /// Gate tunneling current drawn from each input net (positive: out of
    /// the net into this gate).
    pub input_draw: Vec<f64>,
}

/// Outcome of a bracketed scalar root search.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub f: f64,
    pub width: f64,
    pub steps: usize,
}

/// Root of a decreasing function on `[lo, hi]`: bisection until the bracket
/// is below a millivolt, then Illinois false position inside the bracket.
pub fn decreasing_root(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    ftol: f64,
    max_steps: usize,
) -> Result<Root> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::Solver {
            message: "node function is not finite".into(),
            residual: f64::NAN,
            best: vec![lo, hi],
        });
    }
    if flo <= 0.0 && flo.abs() <= ftol {
        return Ok(Root { x: lo, f: flo, width: hi - lo, steps: 0 });
    }
    if fhi >= 0.0 && fhi.abs() <= ftol {
        return Ok(Root { x: hi, f: fhi, width: hi - lo, steps: 0 });
    }
    if flo < 0.0 || fhi > 0.0 {
        return Err(Error::Solver {
            message: format!("node function does not bracket a root on [{lo}, {hi}]: f = ({flo:e}, {fhi:e})"),
            residual: flo.abs().min(fhi.abs()),
            best: vec![if flo.abs() < fhi.abs() { lo } else { hi }],
        });
    }
    let mut steps = 0;
    // Which end was retained on the previous interpolation step.
    let mut side = 0i8;
    while steps < max_steps {
        let width = hi - lo;
        let x = if width > POLISH_WIDTH {
            0.5 * (lo + hi)
        } else {
            let t = lo + flo * (hi - lo) / (flo - fhi);
            if t > lo && t < hi { t } else { 0.5 * (lo + hi) }
        };
        if x <= lo || x >= hi {
            break;
        }
        let fx = f(x);
        steps += 1;
        if fx == 0.0 || fx.abs() <= ftol && width <= POLISH_WIDTH {
            return Ok(Root { x, f: fx, width, steps });
        }
        if fx > 0.0 {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
        if hi - lo <= xtol {
            break;
        }
    }
    // The interpolation halving above only scales the stored values, so
    // re-evaluate the retained ends before picking the better one.
    let (a, b) = (f(lo), f(hi));
    let (x, fx) = if a.abs() <= b.abs() { (lo, a) } else { (hi, b) };
    Ok(Root { x, f: fx, width: hi - lo, steps })
}

/// A gate template bound to compiled devices and a supply.
#[derive(Debug, Clone)]
pub struct GateModel {
    pub template: Arc<GateTemplate>,
    pub devices: Vec<CompiledDevice>,
    pub vdd: f64,
    /// `(transistor, terminal index)` touching each solved node.
    incidence: Vec<Vec<(usize, usize)>>,
    /// Node index of each terminal of each transistor.
    terminals: Vec<[usize; 4]>,
}

impl GateModel {
    /// Uniform NMOS/PMOS parameters; template widths multiply `w_ratio`.
    pub fn new(template: Arc<GateTemplate>, params: &DevicePair, env: &Environment) -> Result<Self> {
        let per: Vec<DeviceParams> = template
            .transistors
            .iter()
            .map(|t| *params.get(t.polarity))
            .collect();
        Self::with_params(template, &per, env)
    }

    /// One parameter set per template transistor.
    pub fn with_params(template: Arc<GateTemplate>, params: &[DeviceParams], env: &Environment) -> Result<Self> {
        env.validate()?;
        if params.len() != template.transistors.len() {
            return Err(Error::invalid(format!(
                "{} parameter sets for {} transistors",
                params.len(),
                template.transistors.len()
            )));
        }
        let mut devices = Vec::with_capacity(params.len());
        for (t, p) in template.transistors.iter().zip(params) {
            p.validate()?;
            let mut p = *p;
            p.w_ratio *= t.w_ratio;
            devices.push(CompiledDevice::new(&p, t.polarity, env));
        }
        let first = template.first_unknown();
        let mut incidence = vec![Vec::new(); template.unknown_count()];
        let mut terminals = Vec::with_capacity(devices.len());
        for (ti, t) in template.transistors.iter().enumerate() {
            let nodes = t.terminals().map(|n| template.node_index(n));
            for (k, &n) in nodes.iter().enumerate() {
                if n >= first {
                    incidence[n - first].push((ti, k));
                }
            }
            terminals.push(nodes);
        }
        Ok(GateModel {
            template,
            devices,
            vdd: env.vdd,
            incidence,
            terminals,
        })
    }

    pub(crate) fn lo(&self) -> f64 {
        -CLAMP_MARGIN
    }

    pub(crate) fn hi(&self) -> f64 {
        self.vdd + CLAMP_MARGIN
    }

    fn terminal_voltages(&self, ti: usize, v: &[f64]) -> TerminalVoltages {
        let n = self.terminals[ti];
        TerminalVoltages::new(v[n[1]], v[n[0]], v[n[2]], v[n[3]])
    }

    /// KCL residual of solved node `k` (0-based among unknowns).
    pub(crate) fn node_residual(&self, k: usize, v: &[f64], injected: f64) -> f64 {
        let mut r = if k + 1 == self.template.unknown_count() { injected } else { 0.0 };
        for &(ti, term) in &self.incidence[k] {
            r -= self.devices[ti].currents(&self.terminal_voltages(ti, v))[term];
        }
        r
    }

    /// Residuals of all solved nodes and the Jacobian over them.
    fn residual_and_jacobian(&self, v: &[f64], injected: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let m = self.template.unknown_count();
        let first = self.template.first_unknown();
        let mut r = vec![0.0; m];
        r[m - 1] = injected;
        let mut jac = vec![vec![0.0; m]; m];
        for (ti, dev) in self.devices.iter().enumerate() {
            let nodes = self.terminals[ti];
            if nodes.iter().all(|&n| n < first) {
                continue;
            }
            let s = dev.stamp(&self.terminal_voltages(ti, v));
            for (a, &na) in nodes.iter().enumerate() {
                if na < first {
                    continue;
                }
                r[na - first] -= s.current[a];
                for (b, &nb) in nodes.iter().enumerate() {
                    if nb >= first {
                        jac[na - first][nb - first] -= s.jacobian[a][b];
                    }
                }
            }
        }
        (r, jac)
    }

    pub fn residuals(&self, v: &[f64], injected: f64) -> Vec<f64> {
        (0..self.template.unknown_count())
            .map(|k| self.node_residual(k, v, injected))
            .collect()
    }

    fn check_inputs(&self, inputs: &[f64], injected: f64) -> Result<()> {
        if inputs.len() != self.template.input_count {
            return Err(Error::invalid(format!(
                "{} input voltages for a {}-input gate",
                inputs.len(),
                self.template.input_count
            )));
        }
        for &v in inputs {
            if !v.is_finite() || v < self.lo() || v > self.hi() {
                return Err(Error::invalid(format!(
                    "input voltage {v} V outside [{}, {}] V",
                    self.lo(),
                    self.hi()
                )));
            }
        }
        if !injected.is_finite() {
            return Err(Error::invalid("injected current must be finite"));
        }
        Ok(())
    }

    /// Starting voltages from the logic levels implied by the inputs.
    pub(crate) fn initial_guess(&self, inputs: &[f64]) -> Vec<f64> {
        let t = &*self.template;
        let bits: Vec<bool> = inputs.iter().map(|&v| v > 0.5 * self.vdd).collect();
        let stage_values = t.stage_values(&bits);
        let mut v = vec![0.0; t.node_count()];
        v[1] = self.vdd;
        v[2..2 + inputs.len()].copy_from_slice(inputs);
        let rail = |b: bool| if b { self.vdd } else { 0.0 };
        for (s, &val) in t.stages.iter().zip(&stage_values) {
            v[t.node_index(s.output)] = rail(val);
        }
        // stack nodes start at the rail of the network they sit in
        for tr in &t.transistors {
            for n in [tr.drain, tr.source] {
                if let TNode::Internal(i) = n {
                    if t.stages.iter().all(|s| s.output != n) {
                        v[t.node_index(TNode::Internal(i))] = match tr.network {
                            crate::gates::Network::PullDown => 0.0,
                            crate::gates::Network::PullUp => self.vdd,
                        };
                    }
                }
            }
        }
        v
    }

    /// Solved-node order for the alternating sweep: stage by stage, each
    /// stage output followed by its stack nodes.
    fn sweep_order(&self) -> Vec<usize> {
        let t = &*self.template;
        let first = t.first_unknown();
        let mut order = Vec::with_capacity(t.unknown_count());
        for (si, s) in t.stages.iter().enumerate() {
            order.push(t.node_index(s.output) - first);
            for tr in t.transistors.iter().filter(|tr| tr.stage == si) {
                for n in [tr.drain, tr.source] {
                    if let TNode::Internal(_) = n {
                        let k = t.node_index(n) - first;
                        if !order.contains(&k) {
                            order.push(k);
                        }
                    }
                }
            }
        }
        order
    }

    /// Cold solve by alternating per-node bracketed root finds.
    pub fn solve(&self, inputs: &[f64], injected: f64, cfg: &SolverConfig) -> Result<GateOperatingPoint> {
        cfg.validate()?;
        self.check_inputs(inputs, injected)?;
        let mut v = self.initial_guess(inputs);
        let first = self.template.first_unknown();
        let order = self.sweep_order();
        let mut iterations = 0;
        for _ in 0..cfg.max_outer_iterations {
            iterations += 1;
            let mut moved: f64 = 0.0;
            for &k in &order {
                let idx = first + k;
                let old = v[idx];
                let mut work = v.clone();
                let root = decreasing_root(
                    |x| {
                        work[idx] = x;
                        self.node_residual(k, &work, injected)
                    },
                    self.lo(),
                    self.hi(),
                    f64::EPSILON,
                    cfg.current_tolerance,
                    cfg.max_bisection_steps,
                )?;
                v[idx] = root.x;
                moved = moved.max((root.x - old).abs());
            }
            if moved < cfg.voltage_tolerance {
                break;
            }
        }
        let (v, steps) = self.newton(v, injected, cfg, POLISH_NEWTON_STEPS);
        iterations += steps;
        self.finish(v, inputs, injected, cfg, iterations)
    }

    /// Newton from a nearby operating point; cold solve if that fails.
    pub fn solve_from(
        &self,
        inputs: &[f64],
        injected: f64,
        cfg: &SolverConfig,
        warm: &GateOperatingPoint,
    ) -> Result<GateOperatingPoint> {
        cfg.validate()?;
        self.check_inputs(inputs, injected)?;
        if warm.input_voltages.len() == inputs.len()
            && warm.internal_voltages.len() == self.template.internal_nodes.len()
        {
            let mut v = warm.node_voltages();
            v[1] = self.vdd;
            v[2..2 + inputs.len()].copy_from_slice(inputs);
            let (v, steps) = self.newton(v, injected, cfg, WARM_NEWTON_STEPS);
            if let Ok(p) = self.finish(v, inputs, injected, cfg, steps) {
                return Ok(p);
            }
        }
        self.solve(inputs, injected, cfg)
    }

    /// Damped Newton on all solved nodes. Returns the best iterate.
    fn newton(&self, mut v: Vec<f64>, injected: f64, cfg: &SolverConfig, max_steps: usize) -> (Vec<f64>, usize) {
        let first = self.template.first_unknown();
        let m = self.template.unknown_count();
        let (mut r, mut jac) = self.residual_and_jacobian(&v, injected);
        let mut norm = max_abs(&r);
        let mut steps = 0;
        while steps < max_steps && norm > cfg.current_tolerance {
            steps += 1;
            let Some(dx) = solve_dense(jac.clone(), r.iter().map(|x| -x).collect()) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let mut trial = v.clone();
                for k in 0..m {
                    trial[first + k] = (v[first + k] + lambda * dx[k]).clamp(self.lo(), self.hi());
                }
                let (tr, tj) = self.residual_and_jacobian(&trial, injected);
                let tn = max_abs(&tr);
                if tn < norm {
                    v = trial;
                    r = tr;
                    jac = tj;
                    norm = tn;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (v, steps)
    }

    /// Newton steps on the internal nodes alone, the output held where it is.
    /// Returns the largest voltage change made.
    pub(crate) fn polish_internals(&self, v: &mut [f64], tol: f64, max_steps: usize) -> f64 {
        let first = self.template.first_unknown();
        let m = self.template.unknown_count() - 1;
        let block = |v: &[f64]| {
            let (mut r, mut jac) = self.residual_and_jacobian(v, 0.0);
            r.truncate(m);
            jac.truncate(m);
            jac.iter_mut().for_each(|row| row.truncate(m));
            (r, jac)
        };
        let start = v[first..first + m].to_vec();
        let (mut r, mut jac) = block(v);
        let mut norm = max_abs(&r);
        for _ in 0..max_steps {
            if norm <= tol {
                break;
            }
            let Some(dx) = solve_dense(jac.clone(), r.iter().map(|x| -x).collect()) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let mut trial = v.to_vec();
                for k in 0..m {
                    trial[first + k] = (v[first + k] + lambda * dx[k]).clamp(self.lo(), self.hi());
                }
                let (tr, tj) = block(&trial);
                let tn = max_abs(&tr);
                if tn < norm {
                    v.copy_from_slice(&trial);
                    (r, jac, norm) = (tr, tj, tn);
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        start.iter().zip(&v[first..first + m]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn finish(
        &self,
        v: Vec<f64>,
        inputs: &[f64],
        injected: f64,
        cfg: &SolverConfig,
        iterations: usize,
    ) -> Result<GateOperatingPoint> {
        let residuals = self.residuals(&v, injected);
        let worst = max_abs(&residuals);
        let first = self.template.first_unknown();
        let m = self.template.unknown_count();
        if !(worst <= cfg.current_tolerance) {
            // Accept only if every node sits on its own root to within the
            // voltage tolerance, i.e. the residual is at the floating floor.
            let stuck = (0..m).all(|k| {
                let idx = first + k;
                let mut w = v.clone();
                w[idx] = (v[idx] - cfg.voltage_tolerance).max(self.lo());
                let a = self.node_residual(k, &w, injected);
                w[idx] = (v[idx] + cfg.voltage_tolerance).min(self.hi());
                let b = self.node_residual(k, &w, injected);
                a >= 0.0 && b <= 0.0
            });
            if !stuck {
                return Err(Error::Solver {
                    message: format!(
                        "{} did not converge (residual {worst:e} A > {:e} A)",
                        self.template.gate_type, cfg.current_tolerance
                    ),
                    residual: worst,
                    best: v[first..].to_vec(),
                });
            }
        }
        Ok(GateOperatingPoint {
            input_voltages: inputs.to_vec(),
            output_voltage: v[first + m - 1],
            internal_voltages: v[first..first + m - 1].to_vec(),
            injected_current: injected,
            residuals,
            vdd: self.vdd,
            iterations,
        })
    }

    /// Gate-terminal current drawn through the listed input pins at node
    /// voltages `v`.
    pub(crate) fn input_draw(&self, v: &[f64], pins: &[usize]) -> f64 {
        let mut draw = 0.0;
        for (ti, t) in self.template.transistors.iter().enumerate() {
            if let TNode::Input(i) = t.gate {
                if pins.contains(&i) {
                    draw += self.devices[ti].currents(&self.terminal_voltages(ti, v))[crate::device::GATE];
                }
            }
        }
        draw
    }

    /// Leakage at arbitrary node voltages (layout as `GateOperatingPoint`).
    pub fn leakage_at(&self, v: &[f64]) -> GateLeakage {
        let first = self.template.first_unknown();
        let k = self.template.input_count;
        let m = self.template.unknown_count();
        self.leakage(&GateOperatingPoint {
            input_voltages: v[2..2 + k].to_vec(),
            output_voltage: v[first + m - 1],
            internal_voltages: v[first..first + m - 1].to_vec(),
            injected_current: 0.0,
            residuals: Vec::new(),
            vdd: self.vdd,
            iterations: 0,
        })
    }

    /// Leakage components and per-input tunneling draw at a solved point.
    pub fn leakage(&self, point: &GateOperatingPoint) -> GateLeakage {
        let t = &*self.template;
        let v = point.node_voltages();
        let bits: Vec<bool> = point.input_voltages.iter().map(|&x| x > 0.5 * self.vdd).collect();
        let path = t.leakage_path(&t.stage_values(&bits));
        let mut total = LeakageComponents::default();
        let mut draw = vec![0.0; t.input_count];
        for (ti, dev) in self.devices.iter().enumerate() {
            let s = dev.stamp(&self.terminal_voltages(ti, &v));
            let mut c = s.components;
            if !path.contains(&ti) {
                c.isub = 0.0;
            }
            total += c;
            if let TNode::Input(i) = t.transistors[ti].gate {
                draw[i] += s.current[crate::device::GATE];
            }
        }
        GateLeakage {
            components: total,
            input_draw: draw,
        }
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Gaussian elimination with partial pivoting. `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Solves a gate with uniform device parameters.
pub fn solve_gate(
    template: &GateTemplate,
    params: &DevicePair,
    input_voltages: &[f64],
    injected_output_current: f64,
    env: &Environment,
    config: &SolverConfig,
) -> Result<GateOperatingPoint> {
    GateModel::new(Arc::new(template.clone()), params, env)?.solve(input_voltages, injected_output_current, config)
}

/// Leakage of a gate at a solved operating point.
pub fn gate_leakage(
    point: &GateOperatingPoint,
    template: &GateTemplate,
    params: &DevicePair,
    env: &Environment,
) -> Result<GateLeakage> {
    Ok(GateModel::new(Arc::new(template.clone()), params, env)?.leakage(point))
}
