// SPDX-License-Identifier: Apache-2.0

//! Transistor-level templates for the supported logic primitives.
//!
//! Stack order convention: input 0 drives the series transistor adjacent to
//! the stage output, the last input drives the one tied to the rail. For a
//! NAND2 with inputs `ab`, vector `10` therefore turns on the transistor next
//! to the output and leaves the grounded one off.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::Polarity;
use crate::error::{Error, Result};
use crate::kv::KvDocument;

pub const MAX_FANIN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateType {
    Inv,
    Buf,
    Nand(u8),
    Nor(u8),
    And(u8),
    Or(u8),
}

impl GateType {
    pub const ALL: [GateType; 14] = [
        GateType::Inv,
        GateType::Buf,
        GateType::Nand(2),
        GateType::Nand(3),
        GateType::Nand(4),
        GateType::Nor(2),
        GateType::Nor(3),
        GateType::Nor(4),
        GateType::And(2),
        GateType::And(3),
        GateType::And(4),
        GateType::Or(2),
        GateType::Or(3),
        GateType::Or(4),
    ];

    pub fn input_count(&self) -> usize {
        match *self {
            GateType::Inv | GateType::Buf => 1,
            GateType::Nand(k) | GateType::Nor(k) | GateType::And(k) | GateType::Or(k) => k as usize,
        }
    }

    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            GateType::Inv => !inputs[0],
            GateType::Buf => inputs[0],
            GateType::Nand(_) => !inputs.iter().all(|&b| b),
            GateType::Nor(_) => !inputs.iter().any(|&b| b),
            GateType::And(_) => inputs.iter().all(|&b| b),
            GateType::Or(_) => inputs.iter().any(|&b| b),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GateType::Nand(k) | GateType::Nor(k) | GateType::And(k) | GateType::Or(k)
                if !(2..=MAX_FANIN as u8).contains(&k) =>
            {
                Err(Error::UnsupportedGate {
                    name: self.to_string(),
                    hint: format!(
                        "templates cover 2..={MAX_FANIN} inputs; the .bench parser splits wider gates into balanced trees"
                    ),
                })
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateType::Inv => write!(f, "INV"),
            GateType::Buf => write!(f, "BUF"),
            GateType::Nand(k) => write!(f, "NAND{k}"),
            GateType::Nor(k) => write!(f, "NOR{k}"),
            GateType::And(k) => write!(f, "AND{k}"),
            GateType::Or(k) => write!(f, "OR{k}"),
        }
    }
}

impl FromStr for GateType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let split = up.find(|c: char| c.is_ascii_digit()).unwrap_or(up.len());
        let (base, digits) = up.split_at(split);
        let k = if digits.is_empty() {
            None
        } else {
            Some(digits.parse::<u8>().map_err(|_| Error::invalid(format!("bad gate type `{s}`")))?)
        };
        let t = match (base, k) {
            ("INV" | "NOT", None) => GateType::Inv,
            ("BUF" | "BUFF", None) => GateType::Buf,
            ("NAND", Some(k)) => GateType::Nand(k),
            ("NOR", Some(k)) => GateType::Nor(k),
            ("AND", Some(k)) => GateType::And(k),
            ("OR", Some(k)) => GateType::Or(k),
            ("XOR" | "XNOR", _) => {
                return Err(Error::UnsupportedGate {
                    name: s.to_string(),
                    hint: "XOR/XNOR have no transistor template; the .bench parser decomposes them into NAND2 (+INV) networks".into(),
                })
            }
            _ => {
                return Err(Error::UnsupportedGate {
                    name: s.to_string(),
                    hint: "supported: INV, BUF, NAND2-4, NOR2-4, AND2-4, OR2-4".into(),
                })
            }
        };
        t.validate()?;
        Ok(t)
    }
}

/// A node of a gate template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TNode {
    Gnd,
    Vdd,
    Input(usize),
    Internal(usize),
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Network {
    PullUp,
    PullDown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateTransistor {
    pub polarity: Polarity,
    pub w_ratio: f64,
    pub gate: TNode,
    pub drain: TNode,
    pub source: TNode,
    pub body: TNode,
    pub network: Network,
    pub stage: usize,
}

impl TemplateTransistor {
    pub fn terminals(&self) -> [TNode; 4] {
        [self.drain, self.gate, self.source, self.body]
    }
}

/// One static CMOS stage: a pull-up and a pull-down network sharing an
/// output node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub output: TNode,
    pub transistors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateTemplate {
    pub gate_type: GateType,
    pub transistors: Vec<TemplateTransistor>,
    pub internal_nodes: Vec<String>,
    pub input_count: usize,
    pub stages: Vec<Stage>,
}

impl GateTemplate {
    pub fn logic_fn(&self, inputs: &[bool]) -> bool {
        self.gate_type.eval(inputs)
    }

    /// Position of a node in the flat voltage vector used by the solver:
    /// `[gnd, vdd, inputs.., internals.., output]`.
    pub fn node_index(&self, node: TNode) -> usize {
        match node {
            TNode::Gnd => 0,
            TNode::Vdd => 1,
            TNode::Input(i) => 2 + i,
            TNode::Internal(i) => 2 + self.input_count + i,
            TNode::Output => 2 + self.input_count + self.internal_nodes.len(),
        }
    }

    pub fn node_count(&self) -> usize {
        3 + self.input_count + self.internal_nodes.len()
    }

    /// Solved (non-fixed) nodes: internals then the output.
    pub fn unknown_count(&self) -> usize {
        self.internal_nodes.len() + 1
    }

    pub fn first_unknown(&self) -> usize {
        2 + self.input_count
    }

    /// Logic level of every stage output for the given inputs.
    pub fn stage_values(&self, inputs: &[bool]) -> Vec<bool> {
        let mut internal = vec![false; self.internal_nodes.len()];
        let mut values = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            let gate_value = |n: TNode| match n {
                TNode::Input(i) => inputs[i],
                TNode::Internal(i) => internal[i],
                TNode::Vdd => true,
                TNode::Gnd => false,
                TNode::Output => unreachable!("stage inputs never read the gate output"),
            };
            let v = self.stage_function(stage, &gate_value);
            if let TNode::Internal(i) = stage.output {
                internal[i] = v;
            }
            values.push(v);
        }
        values
    }

    fn stage_function(&self, stage: &Stage, gate_value: &dyn Fn(TNode) -> bool) -> bool {
        // The pull-down network conducts iff the output is 0.
        !conducts(
            &self.transistors,
            &stage.transistors,
            Network::PullDown,
            stage.output,
            TNode::Gnd,
            gate_value,
        )
    }

    /// Transistors that form the off network of each stage and touch its
    /// rail, given the stage output values. Their channel current is the
    /// stage's subthreshold leakage.
    pub fn leakage_path(&self, stage_values: &[bool]) -> Vec<usize> {
        let mut out = Vec::new();
        for (stage, &v) in self.stages.iter().zip(stage_values) {
            let (net, rail) = if v {
                (Network::PullDown, TNode::Gnd)
            } else {
                (Network::PullUp, TNode::Vdd)
            };
            for &t in &stage.transistors {
                let tr = &self.transistors[t];
                if tr.network == net && (tr.source == rail || tr.drain == rail) {
                    out.push(t);
                }
            }
        }
        out
    }
}

/// Whether `from` and `to` are connected through conducting transistors of
/// `net` within the listed set.
fn conducts(
    all: &[TemplateTransistor],
    set: &[usize],
    net: Network,
    from: TNode,
    to: TNode,
    gate_value: &dyn Fn(TNode) -> bool,
) -> bool {
    let mut reached = vec![from];
    let mut changed = true;
    while changed {
        changed = false;
        for &t in set {
            let tr = &all[t];
            if tr.network != net {
                continue;
            }
            let on = match tr.polarity {
                Polarity::Nmos => gate_value(tr.gate),
                Polarity::Pmos => !gate_value(tr.gate),
            };
            if !on {
                continue;
            }
            let (a, b) = (tr.drain, tr.source);
            if reached.contains(&a) && !reached.contains(&b) {
                reached.push(b);
                changed = true;
            } else if reached.contains(&b) && !reached.contains(&a) {
                reached.push(a);
                changed = true;
            }
        }
    }
    reached.contains(&to)
}

/// Transistor widths relative to the unit device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateLibrary {
    pub nmos_w_ratio: f64,
    pub pmos_w_ratio: f64,
}

impl Default for GateLibrary {
    fn default() -> Self {
        Self {
            nmos_w_ratio: 1.0,
            pmos_w_ratio: 2.0,
        }
    }
}

impl GateLibrary {
    /// Applies a `key = value` override file (`nmos_w_ratio`, `pmos_w_ratio`).
    pub fn with_overrides(mut self, text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        for section in &doc.sections {
            section.check_keys(&["nmos_w_ratio", "pmos_w_ratio"])?;
            if let Some(w) = section.parse_value::<f64>("nmos_w_ratio")? {
                self.nmos_w_ratio = w;
            }
            if let Some(w) = section.parse_value::<f64>("pmos_w_ratio")? {
                self.pmos_w_ratio = w;
            }
        }
        if !(self.nmos_w_ratio > 0.0 && self.pmos_w_ratio > 0.0) {
            return Err(Error::invalid("width ratios must be positive"));
        }
        Ok(self)
    }

    pub fn load_overrides(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.with_overrides(&text)
    }

    pub fn template_for(&self, gate_type: GateType) -> Result<GateTemplate> {
        gate_type.validate()?;
        let mut b = Builder {
            lib: *self,
            transistors: Vec::new(),
            internal_nodes: Vec::new(),
            stages: Vec::new(),
        };
        let inputs: Vec<TNode> = (0..gate_type.input_count()).map(TNode::Input).collect();
        match gate_type {
            GateType::Inv => b.nand(&inputs, TNode::Output),
            GateType::Nand(_) => b.nand(&inputs, TNode::Output),
            GateType::Nor(_) => b.nor(&inputs, TNode::Output),
            GateType::Buf => {
                b.nand(&inputs, PENDING);
                let mid = TNode::Internal(0);
                b.nand(&[mid], TNode::Output);
            }
            GateType::And(_) => {
                b.nand(&inputs, PENDING);
                let mid = b.stages[0].output;
                b.nand(&[mid], TNode::Output);
            }
            GateType::Or(_) => {
                b.nor(&inputs, PENDING);
                let mid = b.stages[0].output;
                b.nand(&[mid], TNode::Output);
            }
        }
        Ok(GateTemplate {
            gate_type,
            transistors: b.transistors,
            internal_nodes: b.internal_nodes,
            input_count: gate_type.input_count(),
            stages: b.stages,
        })
    }
}

/// Template for `gate_type` with the default library widths.
pub fn template_for(gate_type: GateType) -> Result<GateTemplate> {
    GateLibrary::default().template_for(gate_type)
}

/// Output placeholder resolved once the stage's stack nodes are numbered,
/// so the boundary net of a composite gate comes after them.
const PENDING: TNode = TNode::Internal(usize::MAX);

struct Builder {
    lib: GateLibrary,
    transistors: Vec<TemplateTransistor>,
    internal_nodes: Vec<String>,
    stages: Vec<Stage>,
}

impl Builder {
    fn internal(&mut self, name: &str) -> TNode {
        self.internal_nodes.push(name.to_string());
        TNode::Internal(self.internal_nodes.len() - 1)
    }

    fn push(&mut self, polarity: Polarity, gate: TNode, drain: TNode, source: TNode, network: Network) {
        let (w_ratio, body) = match polarity {
            Polarity::Nmos => (self.lib.nmos_w_ratio, TNode::Gnd),
            Polarity::Pmos => (self.lib.pmos_w_ratio, TNode::Vdd),
        };
        self.transistors.push(TemplateTransistor {
            polarity,
            w_ratio,
            gate,
            drain,
            source,
            body,
            network,
            stage: self.stages.len(),
        });
    }

    /// Allocates the stack nodes for a k-high series chain, then resolves a
    /// pending boundary output.
    fn chain_nodes(&mut self, k: usize, out: TNode, prefix: &str) -> (Vec<TNode>, TNode) {
        let mut nodes = Vec::with_capacity(k.saturating_sub(1));
        let stage = self.stages.len();
        for i in 0..k.saturating_sub(1) {
            let name = if stage == 0 {
                format!("{prefix}{i}")
            } else {
                format!("s{stage}{prefix}{i}")
            };
            nodes.push(self.internal(&name));
        }
        let out = if out == PENDING {
            self.internal("b")
        } else {
            out
        };
        (nodes, out)
    }

    fn nand(&mut self, inputs: &[TNode], out: TNode) {
        let k = inputs.len();
        let (stack, out) = self.chain_nodes(k, out, "x");
        let first = self.transistors.len();
        for &g in inputs {
            self.push(Polarity::Pmos, g, out, TNode::Vdd, Network::PullUp);
        }
        for (i, &g) in inputs.iter().enumerate() {
            let drain = if i == 0 { out } else { stack[i - 1] };
            let source = if i + 1 == k { TNode::Gnd } else { stack[i] };
            self.push(Polarity::Nmos, g, drain, source, Network::PullDown);
        }
        self.stages.push(Stage {
            output: out,
            transistors: (first..self.transistors.len()).collect(),
        });
    }

    fn nor(&mut self, inputs: &[TNode], out: TNode) {
        let k = inputs.len();
        let (stack, out) = self.chain_nodes(k, out, "y");
        let first = self.transistors.len();
        for (i, &g) in inputs.iter().enumerate() {
            // PMOS drain faces the output, source faces Vdd
            let drain = if i == 0 { out } else { stack[i - 1] };
            let source = if i + 1 == k { TNode::Vdd } else { stack[i] };
            self.push(Polarity::Pmos, g, drain, source, Network::PullUp);
        }
        for &g in inputs {
            self.push(Polarity::Nmos, g, out, TNode::Gnd, Network::PullDown);
        }
        self.stages.push(Stage {
            output: out,
            transistors: (first..self.transistors.len()).collect(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_vectors(k: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << k).map(move |m| (0..k).map(|i| m >> (k - 1 - i) & 1 == 1).collect())
    }

    #[test]
    fn inverter_shape() {
        let t = template_for(GateType::Inv).unwrap();
        assert_eq!(t.transistors.len(), 2);
        assert!(t.internal_nodes.is_empty());
        assert_eq!(t.transistors.iter().filter(|t| t.polarity == Polarity::Pmos).count(), 1);
    }

    #[test]
    fn nand2_shape() {
        let t = template_for(GateType::Nand(2)).unwrap();
        let p: Vec<_> = t.transistors.iter().filter(|t| t.polarity == Polarity::Pmos).collect();
        let n: Vec<_> = t.transistors.iter().filter(|t| t.polarity == Polarity::Nmos).collect();
        assert_eq!((p.len(), n.len()), (2, 2));
        assert!(p.iter().all(|t| t.drain == TNode::Output && t.source == TNode::Vdd));
        assert_eq!(t.internal_nodes.len(), 1);
        // series: output -> x0 -> gnd, input 0 next to the output
        assert_eq!((n[0].gate, n[0].drain, n[0].source), (TNode::Input(0), TNode::Output, TNode::Internal(0)));
        assert_eq!((n[1].gate, n[1].drain, n[1].source), (TNode::Input(1), TNode::Internal(0), TNode::Gnd));
    }

    #[test]
    fn stack_node_counts() {
        for k in 2..=4u8 {
            assert_eq!(template_for(GateType::Nand(k)).unwrap().internal_nodes.len(), k as usize - 1);
            assert_eq!(template_for(GateType::Nor(k)).unwrap().internal_nodes.len(), k as usize - 1);
            // stack nodes plus the boundary net
            assert_eq!(template_for(GateType::And(k)).unwrap().internal_nodes.len(), k as usize);
        }
        assert_eq!(template_for(GateType::Buf).unwrap().internal_nodes, vec!["b".to_string()]);
    }

    #[test]
    fn rails_and_bodies() {
        for gt in GateType::ALL {
            let t = template_for(gt).unwrap();
            for tr in &t.transistors {
                match tr.polarity {
                    Polarity::Pmos => {
                        assert_eq!(tr.network, Network::PullUp);
                        assert_eq!(tr.body, TNode::Vdd);
                        assert_eq!(tr.w_ratio, 2.0);
                    }
                    Polarity::Nmos => {
                        assert_eq!(tr.network, Network::PullDown);
                        assert_eq!(tr.body, TNode::Gnd);
                    }
                }
            }
        }
    }

    #[test]
    fn internal_nodes_touch_two_terminals() {
        for gt in GateType::ALL {
            let t = template_for(gt).unwrap();
            for i in 0..t.internal_nodes.len() {
                let touches = t
                    .transistors
                    .iter()
                    .flat_map(|tr| tr.terminals())
                    .filter(|&n| n == TNode::Internal(i))
                    .count();
                assert!(touches >= 2, "{gt} node {i}");
            }
        }
    }

    #[test]
    fn network_matches_logic_function() {
        for gt in GateType::ALL {
            let t = template_for(gt).unwrap();
            for v in all_vectors(t.input_count) {
                let stages = t.stage_values(&v);
                assert_eq!(*stages.last().unwrap(), t.logic_fn(&v), "{gt} {v:?}");
                // the pull-up must conduct exactly when the pull-down does not
                let mut internal = vec![false; t.internal_nodes.len()];
                for (s, &val) in t.stages.iter().zip(&stages) {
                    let gv = |n: TNode| match n {
                        TNode::Input(i) => v[i],
                        TNode::Internal(i) => internal[i],
                        _ => unreachable!(),
                    };
                    let up = conducts(&t.transistors, &s.transistors, Network::PullUp, s.output, TNode::Vdd, &gv);
                    let down = conducts(&t.transistors, &s.transistors, Network::PullDown, s.output, TNode::Gnd, &gv);
                    assert_eq!(up, val, "{gt} {v:?}");
                    assert_ne!(up, down, "{gt} {v:?}");
                    if let TNode::Internal(i) = s.output {
                        internal[i] = val;
                    }
                }
            }
        }
    }

    #[test]
    fn stages_read_only_earlier_nodes() {
        // acyclic: a stage's gate inputs are primary inputs or outputs of
        // earlier stages
        for gt in GateType::ALL {
            let t = template_for(gt).unwrap();
            let mut produced = vec![];
            for s in &t.stages {
                for &ti in &s.transistors {
                    match t.transistors[ti].gate {
                        TNode::Input(_) => {}
                        n => assert!(produced.contains(&n), "{gt}"),
                    }
                }
                produced.push(s.output);
            }
        }
    }

    #[test]
    fn unsupported_types() {
        assert!(matches!("XOR".parse::<GateType>(), Err(Error::UnsupportedGate { .. })));
        match "XNOR2".parse::<GateType>() {
            Err(Error::UnsupportedGate { hint, .. }) => assert!(hint.contains("decompos")),
            other => panic!("{other:?}"),
        }
        assert!("NAND5".parse::<GateType>().is_err());
        assert_eq!("nand3".parse::<GateType>().unwrap(), GateType::Nand(3));
        assert_eq!("NOT".parse::<GateType>().unwrap(), GateType::Inv);
    }

    #[test]
    fn width_override() {
        let lib = GateLibrary::default().with_overrides("pmos_w_ratio = 1.5\n").unwrap();
        let t = lib.template_for(GateType::Inv).unwrap();
        assert!(t.transistors.iter().any(|tr| tr.w_ratio == 1.5));
        assert!(GateLibrary::default().with_overrides("pmos_w_ratio = -1\n").is_err());
        assert!(GateLibrary::default().with_overrides("bogus = 1\n").is_err());
    }

    #[test]
    fn leakage_path_selection() {
        let t = template_for(GateType::Nand(2)).unwrap();
        // output 1 (input 00): grounded NMOS only
        let path = t.leakage_path(&t.stage_values(&[false, false]));
        assert_eq!(path.len(), 1);
        assert_eq!(t.transistors[path[0]].source, TNode::Gnd);
        // output 0 (input 11): both parallel PMOS
        let path = t.leakage_path(&t.stage_values(&[true, true]));
        assert_eq!(path.len(), 2);
        assert!(path.iter().all(|&i| t.transistors[i].polarity == Polarity::Pmos));
    }
}
