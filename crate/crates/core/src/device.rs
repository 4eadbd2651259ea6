// SPDX-License-Identifier: Apache-2.0

//! Single-transistor leakage model.
//!
//! A transistor is a set of voltage-controlled current sources:
//!
//! ```text
//!   channel   I_ch = Is0 W (S(u) - S(u - Vds/vT))
//!             u    = (Vgs - Vth(T) + lambda Vds) / (n vT)
//!             S(u) = ln^2(1 + exp(u/2))          ~ exp(u) below threshold
//!             (below threshold I_ch = Is0 W exp(u) (1 - exp(-Vds/vT)))
//!   overlap   I_gso = Aov W F(Vgs),  I_gdo = Aov W F(Vgd)
//!   channel   I_gc  = Ach W F(Vgs) sigma((Vgs - Vth(T)) / (n vT))
//!   junction  I_bt  = Jb W V exp(-Bb(T) / V)     for reverse bias V > 0
//!
//!   F(x)     = sgn(x) (exp(alpha |x|) - 1)
//!   Vth(T)   = vth0 - kappa_vth (T - 300)
//!   Bb(T)    = bb0 (1 - kappa_bb (T - 300))
//! ```
//!
//! Everything is evaluated in the NMOS frame. A PMOS is the NMOS evaluated
//! at negated terminal voltages with negated terminal currents.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kv::{KvDocument, KvSection, KvWriter};

/// Boltzmann constant over elementary charge, V/K.
pub const K_OVER_Q: f64 = 8.617_333_262e-5;

pub const T_REF: f64 = 300.0;

/// Reverse biases at or below this are treated as zero junction current.
pub const BTBT_MIN_BIAS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Nmos,
    Pmos,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Nmos => "nmos",
            Polarity::Pmos => "pmos",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Subthreshold prefactor, A.
    pub is0: f64,
    /// Subthreshold swing factor.
    pub n: f64,
    /// Zero-bias threshold at 300 K, V.
    pub vth0: f64,
    /// DIBL coefficient, V/V.
    pub lambda_dibl: f64,
    /// Threshold temperature coefficient, V/K.
    pub kappa_vth_t: f64,
    /// Overlap tunneling prefactor, A.
    pub a_ov: f64,
    /// Gate-to-channel tunneling prefactor, A.
    pub a_ch: f64,
    /// Tunneling voltage exponent, 1/V.
    pub alpha_g: f64,
    /// Junction BTBT prefactor, A/V.
    pub jb: f64,
    /// Junction BTBT exponential constant, V.
    pub bb0: f64,
    /// Bandgap temperature coefficient of `bb0`, 1/K.
    pub kappa_bb_t: f64,
    /// Width relative to the unit device.
    pub w_ratio: f64,
}

const PARAM_KEYS: [&str; 12] = [
    "is0",
    "n",
    "vth0",
    "lambda_dibl",
    "kappa_vth_t",
    "a_ov",
    "a_ch",
    "alpha_g",
    "jb",
    "bb0",
    "kappa_bb_t",
    "w_ratio",
];

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.is0,
            self.n,
            self.vth0,
            self.lambda_dibl,
            self.kappa_vth_t,
            self.a_ov,
            self.a_ch,
            self.alpha_g,
            self.jb,
            self.bb0,
            self.kappa_bb_t,
            self.w_ratio,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("device parameters must be finite"));
        }
        if self.is0 < 0.0 || self.a_ov < 0.0 || self.a_ch < 0.0 || self.jb < 0.0 {
            return Err(Error::invalid("current prefactors must be non-negative"));
        }
        if !(self.n > 1.0 && self.n <= 3.0) {
            return Err(Error::invalid(format!("swing factor n = {} outside (1, 3]", self.n)));
        }
        if self.alpha_g <= 0.0 {
            return Err(Error::invalid("alpha_g must be positive"));
        }
        if self.bb0 <= 0.0 {
            return Err(Error::invalid("bb0 must be positive"));
        }
        if self.w_ratio <= 0.0 {
            return Err(Error::invalid("w_ratio must be positive"));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "is0" => self.is0,
            "n" => self.n,
            "vth0" => self.vth0,
            "lambda_dibl" => self.lambda_dibl,
            "kappa_vth_t" => self.kappa_vth_t,
            "a_ov" => self.a_ov,
            "a_ch" => self.a_ch,
            "alpha_g" => self.alpha_g,
            "jb" => self.jb,
            "bb0" => self.bb0,
            "kappa_bb_t" => self.kappa_bb_t,
            "w_ratio" => self.w_ratio,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "is0" => &mut self.is0,
            "n" => &mut self.n,
            "vth0" => &mut self.vth0,
            "lambda_dibl" => &mut self.lambda_dibl,
            "kappa_vth_t" => &mut self.kappa_vth_t,
            "a_ov" => &mut self.a_ov,
            "a_ch" => &mut self.a_ch,
            "alpha_g" => &mut self.alpha_g,
            "jb" => &mut self.jb,
            "bb0" => &mut self.bb0,
            "kappa_bb_t" => &mut self.kappa_bb_t,
            "w_ratio" => &mut self.w_ratio,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown device parameter `{key}` (known: {})",
                    PARAM_KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn keys() -> &'static [&'static str] {
        &PARAM_KEYS
    }

    fn from_section(section: &KvSection) -> Result<Self> {
        section.check_keys(&PARAM_KEYS)?;
        let p = DeviceParams {
            is0: section.require("is0")?,
            n: section.require("n")?,
            vth0: section.require("vth0")?,
            lambda_dibl: section.require("lambda_dibl")?,
            kappa_vth_t: section.require("kappa_vth_t")?,
            a_ov: section.require("a_ov")?,
            a_ch: section.require("a_ch")?,
            alpha_g: section.require("alpha_g")?,
            jb: section.require("jb")?,
            bb0: section.require("bb0")?,
            kappa_bb_t: section.require("kappa_bb_t")?,
            w_ratio: section.parse_value("w_ratio")?.unwrap_or(1.0),
        };
        p.validate().map_err(|e| Error::parse(section.line, e.to_string()))?;
        Ok(p)
    }

    fn write_section(&self, w: &mut KvWriter, name: &str) {
        w.section(name);
        for key in PARAM_KEYS {
            w.float(key, self.get(key).expect("known key"));
        }
    }
}

/// NMOS and PMOS parameters for one process corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevicePair {
    pub nmos: DeviceParams,
    pub pmos: DeviceParams,
}

impl DevicePair {
    pub fn get(&self, polarity: Polarity) -> &DeviceParams {
        match polarity {
            Polarity::Nmos => &self.nmos,
            Polarity::Pmos => &self.pmos,
        }
    }

    pub fn get_mut(&mut self, polarity: Polarity) -> &mut DeviceParams {
        match polarity {
            Polarity::Nmos => &mut self.nmos,
            Polarity::Pmos => &mut self.pmos,
        }
    }

    /// Parses a parameter file with `[nmos]` and `[pmos]` sections.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        if let Some(top) = doc.top() {
            let e = &top.entries[0];
            return Err(Error::parse(e.line, "parameters must sit under [nmos] or [pmos]"));
        }
        for s in &doc.sections {
            let name = s.name.as_deref().unwrap_or_default();
            if name != "nmos" && name != "pmos" {
                return Err(Error::parse(s.line, format!("unknown section [{name}]")));
            }
        }
        let nmos = doc
            .section("nmos")
            .ok_or_else(|| Error::parse(1, "missing [nmos] section"))?;
        let pmos = doc
            .section("pmos")
            .ok_or_else(|| Error::parse(1, "missing [pmos] section"))?;
        Ok(DevicePair {
            nmos: DeviceParams::from_section(nmos)?,
            pmos: DeviceParams::from_section(pmos)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self, header: &str) -> String {
        let mut w = KvWriter::new();
        w.comment(header);
        self.nmos.write_section(&mut w, "nmos");
        self.pmos.write_section(&mut w, "pmos");
        w.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalVoltages {
    pub vg: f64,
    pub vd: f64,
    pub vs: f64,
    pub vb: f64,
}

impl TerminalVoltages {
    pub fn new(vg: f64, vd: f64, vs: f64, vb: f64) -> Self {
        Self { vg, vd, vs, vb }
    }

    fn negated(&self) -> Self {
        Self::new(-self.vg, -self.vd, -self.vs, -self.vb)
    }

    fn check_finite(&self) -> Result<()> {
        if [self.vg, self.vd, self.vs, self.vb].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-finite terminal voltage {self:?}")))
        }
    }

    fn check_range(&self, vdd: f64) -> Result<()> {
        self.check_finite()?;
        let (lo, hi) = (-0.2 * vdd, 1.2 * vdd);
        for v in [self.vg, self.vd, self.vs, self.vb] {
            if v < lo || v > hi {
                return Err(Error::invalid(format!(
                    "terminal voltage {v} V outside [{lo}, {hi}] V"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Kelvin.
    pub temperature: f64,
    /// Volts.
    pub vdd: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            temperature: 300.0,
            vdd: 0.9,
        }
    }
}

impl Environment {
    pub const T_MIN: f64 = 233.0;
    pub const T_MAX: f64 = 425.0;
    pub const VDD_MAX: f64 = 1.5;

    pub fn new(temperature: f64, vdd: f64) -> Result<Self> {
        let env = Self { temperature, vdd };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= Self::T_MIN && self.temperature <= Self::T_MAX) {
            return Err(Error::invalid(format!(
                "temperature {} K outside [{}, {}] K",
                self.temperature,
                Self::T_MIN,
                Self::T_MAX
            )));
        }
        if !(self.vdd > 0.0 && self.vdd <= Self::VDD_MAX) {
            return Err(Error::invalid(format!("vdd {} V outside (0, 1.5] V", self.vdd)));
        }
        Ok(())
    }

    pub fn thermal_voltage(&self) -> f64 {
        K_OVER_Q * self.temperature
    }
}

/// Per-transistor (or aggregated) leakage magnitudes in amperes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
pub struct LeakageComponents {
    pub isub: f64,
    pub igc: f64,
    pub igso: f64,
    pub igdo: f64,
    pub igb: f64,
    pub ibtbt_drain: f64,
    pub ibtbt_source: f64,
}

impl LeakageComponents {
    pub fn igate(&self) -> f64 {
        self.igc + self.igso + self.igdo + self.igb
    }

    pub fn ibtbt(&self) -> f64 {
        self.ibtbt_drain + self.ibtbt_source
    }

    pub fn itotal(&self) -> f64 {
        self.isub + self.igate() + self.ibtbt()
    }

    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::Isub => self.isub,
            Component::Igate => self.igate(),
            Component::Ibtbt => self.ibtbt(),
            Component::Itotal => self.itotal(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        [
            self.isub,
            self.igc,
            self.igso,
            self.igdo,
            self.igb,
            self.ibtbt_drain,
            self.ibtbt_source,
        ]
        .iter()
        .all(|v| *v >= 0.0)
    }
}

impl Add for LeakageComponents {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for LeakageComponents {
    fn add_assign(&mut self, rhs: Self) {
        self.isub += rhs.isub;
        self.igc += rhs.igc;
        self.igso += rhs.igso;
        self.igdo += rhs.igdo;
        self.igb += rhs.igb;
        self.ibtbt_drain += rhs.ibtbt_drain;
        self.ibtbt_source += rhs.ibtbt_source;
    }
}

impl Serialize for LeakageComponents {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LeakageComponents", 10)?;
        st.serialize_field("isub", &self.isub)?;
        st.serialize_field("igc", &self.igc)?;
        st.serialize_field("igso", &self.igso)?;
        st.serialize_field("igdo", &self.igdo)?;
        st.serialize_field("igb", &self.igb)?;
        st.serialize_field("ibtbt_drain", &self.ibtbt_drain)?;
        st.serialize_field("ibtbt_source", &self.ibtbt_source)?;
        st.serialize_field("igate", &self.igate())?;
        st.serialize_field("ibtbt", &self.ibtbt())?;
        st.serialize_field("itotal", &self.itotal())?;
        st.end()
    }
}

/// The aggregate quantities reports and metrics are keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Isub,
    Igate,
    Ibtbt,
    Itotal,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Isub,
        Component::Igate,
        Component::Ibtbt,
        Component::Itotal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Component::Isub => "isub",
            Component::Igate => "igate",
            Component::Ibtbt => "ibtbt",
            Component::Itotal => "itotal",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GateTunneling {
    pub igc: f64,
    pub igso: f64,
    pub igdo: f64,
    pub igb: f64,
}

/// Signed currents flowing *into* the device at each terminal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TerminalCurrents {
    pub drain: f64,
    pub gate: f64,
    pub source: f64,
    pub body: f64,
}

impl TerminalCurrents {
    pub fn sum(&self) -> f64 {
        self.drain + self.gate + self.source + self.body
    }
}

/// Terminal order used by [`Stamp`].
pub const DRAIN: usize = 0;
pub const GATE: usize = 1;
pub const SOURCE: usize = 2;
pub const BODY: usize = 3;

/// Terminal currents and their voltage derivatives at one bias point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stamp {
    /// Current into the device at drain, gate, source, body.
    pub current: [f64; 4],
    /// `jacobian[i][j]` = d current[i] / d v[j].
    pub jacobian: [[f64; 4]; 4],
    /// Signed drain-to-source channel current.
    pub channel: f64,
    pub components: LeakageComponents,
}

/// A transistor with its temperature-dependent constants folded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompiledDevice {
    pub polarity: Polarity,
    k_sub: f64,
    inv_nvt: f64,
    vt: f64,
    vth: f64,
    lambda: f64,
    k_ov: f64,
    k_ch: f64,
    alpha: f64,
    k_bt: f64,
    bb: f64,
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln^2(1 + exp(u/2))` and its derivative.
#[inline]
fn sq_softplus(u: f64) -> (f64, f64) {
    let l = softplus(0.5 * u);
    (l * l, l * logistic(0.5 * u))
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `F(x) = sgn(x) (exp(alpha |x|) - 1)` and its derivative.
#[inline]
fn tunnel(alpha: f64, x: f64) -> (f64, f64) {
    let a = alpha * x.abs();
    let f = if x == 0.0 { 0.0 } else { a.exp_m1().copysign(x) };
    (f, alpha * a.exp())
}

#[inline]
fn junction(bb: f64, v: f64) -> (f64, f64) {
    if v > BTBT_MIN_BIAS {
        let e = (-bb / v).exp();
        (v * e, e * (1.0 + bb / v))
    } else {
        (0.0, 0.0)
    }
}

impl CompiledDevice {
    pub fn new(p: &DeviceParams, polarity: Polarity, env: &Environment) -> Self {
        let vt = env.thermal_voltage();
        let dt = env.temperature - T_REF;
        CompiledDevice {
            polarity,
            k_sub: p.is0 * p.w_ratio,
            inv_nvt: 1.0 / (p.n * vt),
            vt,
            vth: p.vth0 - p.kappa_vth_t * dt,
            lambda: p.lambda_dibl,
            k_ov: p.a_ov * p.w_ratio,
            k_ch: p.a_ch * p.w_ratio,
            alpha: p.alpha_g,
            k_bt: p.jb * p.w_ratio,
            bb: p.bb0 * (1.0 - p.kappa_bb_t * dt),
        }
    }

    /// Forward channel current for `vxy >= 0` with partials in
    /// (gate-to-source, drain-to-source). Forward minus reverse charge
    /// terms, so the on-device has a square-law linear region.
    #[inline]
    fn channel_fwd(&self, vgx: f64, vxy: f64) -> (f64, f64, f64) {
        let u = (vgx - self.vth + self.lambda * vxy) * self.inv_nvt;
        let ur = u - vxy / self.vt;
        let (sf, dsf) = sq_softplus(u);
        let (sr, dsr) = sq_softplus(ur);
        let i = self.k_sub * (sf - sr);
        let d_g = self.k_sub * self.inv_nvt * (dsf - dsr);
        let d_x = self.k_sub * (self.lambda * self.inv_nvt * (dsf - dsr) + dsr / self.vt);
        (i, d_g, d_x)
    }

    /// Signed drain-to-source current, NMOS frame, source/drain swapped
    /// when `vds < 0`.
    pub fn channel_current(&self, v: &TerminalVoltages) -> f64 {
        let vds = v.vd - v.vs;
        if vds >= 0.0 {
            self.channel_fwd(v.vg - v.vs, vds).0
        } else {
            -self.channel_fwd(v.vg - v.vd, -vds).0
        }
    }

    fn tunneling_nmos(&self, v: &TerminalVoltages) -> (f64, f64, f64) {
        let vgs = v.vg - v.vs;
        let vgd = v.vg - v.vd;
        let (f_s, _) = tunnel(self.alpha, vgs);
        let (f_d, _) = tunnel(self.alpha, vgd);
        let inv = logistic((vgs - self.vth) * self.inv_nvt);
        (self.k_ch * inv * f_s, self.k_ov * f_s, self.k_ov * f_d)
    }

    /// Full evaluation in the NMOS frame.
    fn stamp_nmos(&self, v: &TerminalVoltages) -> Stamp {
        let vds = v.vd - v.vs;
        let vgs = v.vg - v.vs;
        let vgd = v.vg - v.vd;

        // channel: partials wrt (vd, vg, vs)
        let (ich, dch) = if vds >= 0.0 {
            let (i, dg, dx) = self.channel_fwd(vgs, vds);
            (i, [dx, dg, -dg - dx])
        } else {
            let (j, dg, dx) = self.channel_fwd(vgd, -vds);
            (-j, [dg + dx, -dg, -dx])
        };

        let (f_s, fp_s) = tunnel(self.alpha, vgs);
        let (f_d, fp_d) = tunnel(self.alpha, vgd);
        let gso = self.k_ov * f_s;
        let d_gso = self.k_ov * fp_s; // d/dvgs
        let gdo = self.k_ov * f_d;
        let d_gdo = self.k_ov * fp_d; // d/dvgd
        let sig = logistic((vgs - self.vth) * self.inv_nvt);
        let gc = self.k_ch * sig * f_s;
        let d_gc = self.k_ch * (sig * (1.0 - sig) * self.inv_nvt * f_s + sig * fp_s);

        let (hd, dhd) = junction(self.bb, v.vd - v.vb);
        let (hs, dhs) = junction(self.bb, v.vs - v.vb);
        let bd = self.k_bt * hd;
        let d_bd = self.k_bt * dhd;
        let bs = self.k_bt * hs;
        let d_bs = self.k_bt * dhs;

        let current = [
            ich - gdo - 0.5 * gc + bd,
            gso + gdo + gc,
            -ich - gso - 0.5 * gc + bs,
            -bd - bs,
        ];

        // Each contribution as a row over (vd, vg, vs, vb).
        let r_ch = [dch[0], dch[1], dch[2], 0.0];
        let r_gso = [0.0, d_gso, -d_gso, 0.0];
        let r_gdo = [-d_gdo, d_gdo, 0.0, 0.0];
        let r_gc = [0.0, d_gc, -d_gc, 0.0];
        let r_bd = [d_bd, 0.0, 0.0, -d_bd];
        let r_bs = [0.0, 0.0, d_bs, -d_bs];
        let mut jacobian = [[0.0; 4]; 4];
        for j in 0..4 {
            jacobian[DRAIN][j] = r_ch[j] - r_gdo[j] - 0.5 * r_gc[j] + r_bd[j];
            jacobian[GATE][j] = r_gso[j] + r_gdo[j] + r_gc[j];
            jacobian[SOURCE][j] = -r_ch[j] - r_gso[j] - 0.5 * r_gc[j] + r_bs[j];
            jacobian[BODY][j] = -r_bd[j] - r_bs[j];
        }

        Stamp {
            current,
            jacobian,
            channel: ich,
            components: LeakageComponents {
                isub: ich.abs(),
                igc: gc.abs(),
                igso: gso.abs(),
                igdo: gdo.abs(),
                igb: 0.0,
                ibtbt_drain: bd,
                ibtbt_source: bs,
            },
        }
    }

    /// Terminal currents, derivatives and component magnitudes at physical
    /// terminal voltages. No validation; this is the solver hot path.
    #[inline]
    pub fn stamp(&self, v: &TerminalVoltages) -> Stamp {
        match self.polarity {
            Polarity::Nmos => self.stamp_nmos(v),
            Polarity::Pmos => {
                let mut s = self.stamp_nmos(&v.negated());
                for c in &mut s.current {
                    *c = -*c;
                }
                s.channel = -s.channel;
                s
            }
        }
    }

    /// Terminal currents only.
    #[inline]
    pub fn currents(&self, v: &TerminalVoltages) -> [f64; 4] {
        self.stamp(v).current
    }
}

fn check_inputs(p: &DeviceParams, v: &TerminalVoltages, env: &Environment) -> Result<()> {
    p.validate()?;
    env.validate()?;
    v.check_finite()
}

/// Signed drain-to-source subthreshold current in the NMOS frame. Callers
/// mirror PMOS voltages themselves (see [`eval_components`]).
pub fn eval_subthreshold(p: &DeviceParams, v: &TerminalVoltages, env: &Environment) -> Result<f64> {
    check_inputs(p, v, env)?;
    Ok(CompiledDevice::new(p, Polarity::Nmos, env).channel_current(v))
}

/// Gate tunneling magnitudes in the NMOS frame.
pub fn eval_gate_tunneling(
    p: &DeviceParams,
    v: &TerminalVoltages,
    env: &Environment,
) -> Result<GateTunneling> {
    check_inputs(p, v, env)?;
    let (gc, gso, gdo) = CompiledDevice::new(p, Polarity::Nmos, env).tunneling_nmos(v);
    Ok(GateTunneling {
        igc: gc.abs(),
        igso: gso.abs(),
        igdo: gdo.abs(),
        igb: 0.0,
    })
}

/// Junction BTBT (drain, source) in the NMOS frame.
pub fn eval_btbt(p: &DeviceParams, v: &TerminalVoltages, env: &Environment) -> Result<(f64, f64)> {
    check_inputs(p, v, env)?;
    let d = CompiledDevice::new(p, Polarity::Nmos, env);
    Ok((
        d.k_bt * junction(d.bb, v.vd - v.vb).0,
        d.k_bt * junction(d.bb, v.vs - v.vb).0,
    ))
}

pub fn eval_components(
    p: &DeviceParams,
    polarity: Polarity,
    v: &TerminalVoltages,
    env: &Environment,
) -> Result<LeakageComponents> {
    Ok(eval_full(p, polarity, v, env)?.0)
}

/// Component magnitudes plus signed terminal currents.
pub fn eval_full(
    p: &DeviceParams,
    polarity: Polarity,
    v: &TerminalVoltages,
    env: &Environment,
) -> Result<(LeakageComponents, TerminalCurrents)> {
    p.validate()?;
    env.validate()?;
    v.check_range(env.vdd)?;
    let s = CompiledDevice::new(p, polarity, env).stamp(v);
    Ok((
        s.components,
        TerminalCurrents {
            drain: s.current[DRAIN],
            gate: s.current[GATE],
            source: s.current[SOURCE],
            body: s.current[BODY],
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// Subthreshold dominated.
    D25S,
    /// Gate tunneling dominated.
    D25G,
    /// Junction BTBT dominated.
    D25JN,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::D25S, Preset::D25G, Preset::D25JN];
    pub const DEFAULT: Preset = Preset::D25S;

    pub fn name(&self) -> &'static str {
        match self {
            Preset::D25S => "D25-S",
            Preset::D25G => "D25-G",
            Preset::D25JN => "D25-JN",
        }
    }

    pub fn file_name(&self) -> &'static str {
        match self {
            Preset::D25S => "d25-s.params",
            Preset::D25G => "d25-g.params",
            Preset::D25JN => "d25-jn.params",
        }
    }

    /// The component this flavor is calibrated to be dominated by.
    pub fn dominant(&self) -> Component {
        match self {
            Preset::D25S => Component::Isub,
            Preset::D25G => Component::Igate,
            Preset::D25JN => Component::Ibtbt,
        }
    }

    fn source(&self) -> &'static str {
        match self {
            Preset::D25S => include_str!("../presets/d25-s.params"),
            Preset::D25G => include_str!("../presets/d25-g.params"),
            Preset::D25JN => include_str!("../presets/d25-jn.params"),
        }
    }

    pub fn params(&self) -> DevicePair {
        DevicePair::parse(self.source()).expect("shipped preset files parse")
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('_', "-");
        match key.as_str() {
            "D25-S" | "D25S" | "DEFAULT" => Ok(Preset::D25S),
            "D25-G" | "D25G" => Ok(Preset::D25G),
            "D25-JN" | "D25JN" => Ok(Preset::D25JN),
            _ => Err(Error::UnknownPreset {
                name: s.to_string(),
                valid: "D25-S, D25-G, D25-JN, DEFAULT".to_string(),
            }),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Looks up a named preset; `DEFAULT` is an alias of `D25-S`.
pub fn preset(name: &str) -> Result<DevicePair> {
    Ok(name.parse::<Preset>()?.params())
}
