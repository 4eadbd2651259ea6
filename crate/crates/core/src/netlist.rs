// SPDX-License-Identifier: Apache-2.0

//! ISCAS89 `.bench` netlists: parsing, the circuit graph, topological order
//! and zero-delay logic simulation.
//!
//! Flip-flops are cut: a `q = DFF(d)` line turns `q` into a pseudo primary
//! input and `d` into a pseudo primary output. Gates without a transistor
//! template are rewritten at parse time: XOR into four NAND2, XNOR into four
//! NAND2 plus an inverter, and AND/OR/NAND/NOR wider than four inputs into
//! balanced trees. Nets created by a rewrite are named `<output>__x<k>`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{GateType, MAX_FANIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    And,
    Or,
    Nand,
    Nor,
    Not,
    Buff,
    Xor,
    Xnor,
    Dff,
}

impl Keyword {
    pub fn as_str(&self) -> &'static str {
        match self {
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Nand => "NAND",
            Keyword::Nor => "NOR",
            Keyword::Not => "NOT",
            Keyword::Buff => "BUFF",
            Keyword::Xor => "XOR",
            Keyword::Xnor => "XNOR",
            Keyword::Dff => "DFF",
        }
    }

    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            Keyword::And => inputs.iter().all(|&b| b),
            Keyword::Or => inputs.iter().any(|&b| b),
            Keyword::Nand => !inputs.iter().all(|&b| b),
            Keyword::Nor => !inputs.iter().any(|&b| b),
            Keyword::Not => !inputs[0],
            Keyword::Buff | Keyword::Dff => inputs[0],
            Keyword::Xor => inputs.iter().fold(false, |a, &b| a ^ b),
            Keyword::Xnor => !inputs.iter().fold(false, |a, &b| a ^ b),
        }
    }
}

impl FromStr for Keyword {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "NAND" => Keyword::Nand,
            "NOR" => Keyword::Nor,
            "NOT" => Keyword::Not,
            "BUFF" => Keyword::Buff,
            "XOR" => Keyword::Xor,
            "XNOR" => Keyword::Xnor,
            "DFF" => Keyword::Dff,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub gate_type: GateType,
    pub inputs: Vec<usize>,
    pub output: usize,
    /// Source line of the statement this gate came from (0 if built in code).
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipFlop {
    pub q: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Driver {
    PrimaryInput,
    FlipFlop(usize),
    Gate(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Circuit {
    pub nets: Vec<String>,
    pub gates: Vec<Gate>,
    /// Declared inputs followed by flip-flop outputs.
    pub primary_inputs: Vec<usize>,
    /// Declared outputs followed by flip-flop inputs.
    pub primary_outputs: Vec<usize>,
    pub declared_inputs: usize,
    pub declared_outputs: usize,
    pub flip_flops: Vec<FlipFlop>,
    pub drivers: Vec<Driver>,
    /// Gates reading each net, ascending and without repeats.
    pub fanout: Vec<Vec<usize>>,
    pub topo_order: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Stmt {
    Input(String),
    Output(String),
    Assign { out: String, kw: Keyword, args: Vec<String> },
}

/// Incremental construction with the same checks the parser applies.
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    stmts: Vec<(Stmt, usize)>,
}

fn check_name(name: &str, line: usize) -> Result<()> {
    if name.is_empty() {
        return Err(Error::parse(line, "empty net name"));
    }
    if let Some(c) = name.chars().find(|c| c.is_whitespace() || "()=,#".contains(*c)) {
        return Err(Error::parse(line, format!("invalid character {c:?} in net name `{name}`")));
    }
    Ok(())
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: &str) -> &mut Self {
        self.stmts.push((Stmt::Input(name.to_string()), 0));
        self
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        self.stmts.push((Stmt::Output(name.to_string()), 0));
        self
    }

    pub fn gate(&mut self, gate_type: GateType, inputs: &[&str], output: &str) -> &mut Self {
        let kw = match gate_type {
            GateType::Inv => Keyword::Not,
            GateType::Buf => Keyword::Buff,
            GateType::Nand(_) => Keyword::Nand,
            GateType::Nor(_) => Keyword::Nor,
            GateType::And(_) => Keyword::And,
            GateType::Or(_) => Keyword::Or,
        };
        self.assign(kw, inputs, output)
    }

    pub fn assign(&mut self, kw: Keyword, inputs: &[&str], output: &str) -> &mut Self {
        self.stmts.push((
            Stmt::Assign {
                out: output.to_string(),
                kw,
                args: inputs.iter().map(|s| s.to_string()).collect(),
            },
            0,
        ));
        self
    }

    pub fn build(&self) -> Result<Circuit> {
        build(&self.stmts)
    }
}

fn parse_call(s: &str, line: usize) -> Result<(String, Vec<String>)> {
    let open = s
        .find('(')
        .ok_or_else(|| Error::parse(line, format!("expected `KEYWORD(...)`, found `{s}`")))?;
    let close = s
        .rfind(')')
        .filter(|&c| c > open)
        .ok_or_else(|| Error::parse(line, "missing `)`"))?;
    if !s[close + 1..].trim().is_empty() {
        return Err(Error::parse(line, format!("unexpected text after `)`: `{}`", s[close + 1..].trim())));
    }
    let head = s[..open].trim().to_string();
    let body = &s[open + 1..close];
    let args: Vec<String> = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',').map(|a| a.trim().to_string()).collect()
    };
    for a in &args {
        check_name(a, line)?;
    }
    Ok((head, args))
}

/// Parses `.bench` text.
pub fn parse_bench(text: &str) -> Result<Circuit> {
    let mut stmts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(eq) = s.find('=') {
            let out = s[..eq].trim();
            check_name(out, line)?;
            let (head, args) = parse_call(s[eq + 1..].trim(), line)?;
            let kw: Keyword = head
                .parse()
                .map_err(|_| Error::parse(line, format!("unknown gate keyword `{head}`")))?;
            stmts.push((
                Stmt::Assign {
                    out: out.to_string(),
                    kw,
                    args,
                },
                line,
            ));
        } else {
            let (head, args) = parse_call(s, line)?;
            if args.len() != 1 {
                return Err(Error::parse(line, format!("{head} takes exactly one net")));
            }
            let name = args.into_iter().next().unwrap_or_default();
            match head.to_ascii_uppercase().as_str() {
                "INPUT" => stmts.push((Stmt::Input(name), line)),
                "OUTPUT" => stmts.push((Stmt::Output(name), line)),
                _ => return Err(Error::parse(line, format!("unknown declaration `{head}`"))),
            }
        }
    }
    build(&stmts)
}

pub fn load_bench(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_bench(&text)
}

/// Primitive gate statements after rewriting, with their source line.
struct Expander<'a> {
    taken: &'a mut HashSet<String>,
    counters: HashMap<String, usize>,
    out: Vec<(GateType, Vec<String>, String, usize)>,
}

impl Expander<'_> {
    fn fresh(&mut self, base: &str) -> String {
        let k = self.counters.entry(base.to_string()).or_insert(0);
        loop {
            let name = format!("{base}__x{k}");
            *k += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    fn emit(&mut self, t: GateType, ins: Vec<String>, out: String, line: usize) {
        self.out.push((t, ins, out, line));
    }

    /// `kw` over `args` driving `out`; `args` non-empty.
    fn expand(&mut self, kw: Keyword, args: Vec<String>, out: String, base: &str, line: usize) -> Result<()> {
        let k = args.len();
        match kw {
            Keyword::Not | Keyword::Buff => {
                if k != 1 {
                    return Err(Error::parse(line, format!("{} takes exactly one input, got {k}", kw.as_str())));
                }
                let t = if kw == Keyword::Not { GateType::Inv } else { GateType::Buf };
                self.emit(t, args, out, line);
            }
            Keyword::And | Keyword::Or | Keyword::Nand | Keyword::Nor => {
                if k == 1 {
                    let t = match kw {
                        Keyword::And | Keyword::Or => GateType::Buf,
                        _ => GateType::Inv,
                    };
                    self.emit(t, args, out, line);
                } else if k <= MAX_FANIN {
                    let k8 = k as u8;
                    let t = match kw {
                        Keyword::And => GateType::And(k8),
                        Keyword::Or => GateType::Or(k8),
                        Keyword::Nand => GateType::Nand(k8),
                        _ => GateType::Nor(k8),
                    };
                    self.emit(t, args, out, line);
                } else {
                    // balanced groups of at most four, combined by the original operator
                    let inner = match kw {
                        Keyword::And | Keyword::Nand => Keyword::And,
                        _ => Keyword::Or,
                    };
                    let groups = k.div_ceil(MAX_FANIN);
                    let mut next = Vec::with_capacity(groups);
                    let mut start = 0;
                    for g in 0..groups {
                        let size = k / groups + usize::from(g < k % groups);
                        let chunk = args[start..start + size].to_vec();
                        start += size;
                        if chunk.len() == 1 {
                            next.extend(chunk);
                        } else {
                            let net = self.fresh(base);
                            self.expand(inner, chunk, net.clone(), base, line)?;
                            next.push(net);
                        }
                    }
                    self.expand(kw, next, out, base, line)?;
                }
            }
            Keyword::Xor | Keyword::Xnor => {
                if k < 2 {
                    return Err(Error::parse(line, format!("{} needs at least two inputs", kw.as_str())));
                }
                let mut acc = args[0].clone();
                for (i, b) in args[1..].iter().enumerate() {
                    let last = i + 2 == k;
                    let target = if last && kw == Keyword::Xor { out.clone() } else { self.fresh(base) };
                    let n1 = self.fresh(base);
                    let n2 = self.fresh(base);
                    let n3 = self.fresh(base);
                    self.emit(GateType::Nand(2), vec![acc.clone(), b.clone()], n1.clone(), line);
                    self.emit(GateType::Nand(2), vec![acc.clone(), n1.clone()], n2.clone(), line);
                    self.emit(GateType::Nand(2), vec![b.clone(), n1], n3.clone(), line);
                    self.emit(GateType::Nand(2), vec![n2, n3], target.clone(), line);
                    acc = target;
                }
                if kw == Keyword::Xnor {
                    self.emit(GateType::Inv, vec![acc], out, line);
                }
            }
            Keyword::Dff => unreachable!("flip-flops are cut before expansion"),
        }
        Ok(())
    }
}

fn build(stmts: &[(Stmt, usize)]) -> Result<Circuit> {
    let mut taken: HashSet<String> = HashSet::new();
    for (s, line) in stmts {
        match s {
            Stmt::Input(n) | Stmt::Output(n) => {
                check_name(n, *line)?;
                taken.insert(n.clone());
            }
            Stmt::Assign { out, args, .. } => {
                check_name(out, *line)?;
                taken.insert(out.clone());
                for a in args {
                    check_name(a, *line)?;
                    taken.insert(a.clone());
                }
            }
        }
    }

    let mut inputs: Vec<(String, usize)> = Vec::new();
    let mut outputs: Vec<(String, usize)> = Vec::new();
    let mut dffs: Vec<(String, String, usize)> = Vec::new();
    let mut ex = Expander {
        taken: &mut taken,
        counters: HashMap::new(),
        out: Vec::new(),
    };
    for (s, line) in stmts {
        let line = *line;
        match s {
            Stmt::Input(n) => {
                if inputs.iter().any(|(m, _)| m == n) {
                    return Err(Error::parse(line, format!("input `{n}` declared twice")));
                }
                inputs.push((n.clone(), line));
            }
            Stmt::Output(n) => {
                if outputs.iter().any(|(m, _)| m == n) {
                    return Err(Error::parse(line, format!("output `{n}` declared twice")));
                }
                outputs.push((n.clone(), line));
            }
            Stmt::Assign { out, kw, args } => {
                if args.is_empty() {
                    return Err(Error::parse(line, format!("{} with no inputs", kw.as_str())));
                }
                if *kw == Keyword::Dff {
                    if args.len() != 1 {
                        return Err(Error::parse(line, "DFF takes exactly one input"));
                    }
                    dffs.push((out.clone(), args[0].clone(), line));
                } else {
                    ex.expand(*kw, args.clone(), out.clone(), out, line)?;
                }
            }
        }
    }
    let prims = ex.out;

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut nets: Vec<String> = Vec::new();
    let mut intern = |name: &str| -> usize {
        if let Some(&i) = index.get(name) {
            return i;
        }
        nets.push(name.to_string());
        index.insert(name.to_string(), nets.len() - 1);
        nets.len() - 1
    };

    // first appearance order: declarations, flip-flops, then gates
    let pi_idx: Vec<usize> = inputs.iter().map(|(n, _)| intern(n)).collect();
    let po_idx: Vec<usize> = outputs.iter().map(|(n, _)| intern(n)).collect();
    let ff: Vec<FlipFlop> = dffs
        .iter()
        .map(|(q, d, _)| FlipFlop { q: intern(q), d: intern(d) })
        .collect();
    let mut gates = Vec::with_capacity(prims.len());
    for (t, ins, out, line) in &prims {
        let inputs = ins.iter().map(|n| intern(n)).collect();
        let output = intern(out);
        gates.push(Gate {
            gate_type: *t,
            inputs,
            output,
            line: *line,
        });
    }
    let n = nets.len();

    let mut drivers: Vec<Option<(Driver, usize)>> = vec![None; n];
    let mut set_driver = |net: usize, d: Driver, line: usize, nets: &[String]| -> Result<()> {
        if let Some((_, first)) = drivers[net] {
            return Err(Error::parse(
                line,
                format!("net `{}` is driven more than once (first driver on line {first})", nets[net]),
            ));
        }
        drivers[net] = Some((d, line));
        Ok(())
    };
    for (&p, (_, line)) in pi_idx.iter().zip(&inputs) {
        set_driver(p, Driver::PrimaryInput, *line, &nets)?;
    }
    for (i, (f, (_, _, line))) in ff.iter().zip(&dffs).enumerate() {
        set_driver(f.q, Driver::FlipFlop(i), *line, &nets)?;
    }
    for (gi, g) in gates.iter().enumerate() {
        set_driver(g.output, Driver::Gate(gi), g.line, &nets)?;
    }

    let mut fanout: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (gi, g) in gates.iter().enumerate() {
        for &i in &g.inputs {
            fanout[i].insert(gi);
        }
    }
    let undriven = |net: usize| drivers[net].is_none();
    for (g, line) in gates.iter().map(|g| (g, g.line)) {
        if let Some(&i) = g.inputs.iter().find(|&&i| undriven(i)) {
            return Err(Error::parse(line, format!("net `{}` is never driven", nets[i])));
        }
    }
    for (f, (_, _, line)) in ff.iter().zip(&dffs) {
        if undriven(f.d) {
            return Err(Error::parse(*line, format!("net `{}` is never driven", nets[f.d])));
        }
    }
    for (&p, (_, line)) in po_idx.iter().zip(&outputs) {
        if undriven(p) {
            return Err(Error::parse(*line, format!("output `{}` is never driven", nets[p])));
        }
    }

    let mut circuit = Circuit {
        primary_inputs: pi_idx.iter().copied().chain(ff.iter().map(|f| f.q)).collect(),
        primary_outputs: po_idx.iter().copied().chain(ff.iter().map(|f| f.d)).collect(),
        declared_inputs: pi_idx.len(),
        declared_outputs: po_idx.len(),
        flip_flops: ff,
        drivers: drivers.into_iter().map(|d| d.map(|(d, _)| d).unwrap_or(Driver::PrimaryInput)).collect(),
        fanout: fanout.into_iter().map(|s| s.into_iter().collect()).collect(),
        nets,
        gates,
        topo_order: Vec::new(),
    };
    circuit.topo_order = match topo_sort(&circuit) {
        Ok(o) => o,
        Err(CycleAt(g)) => {
            let gate = &circuit.gates[g];
            return Err(Error::parse(
                gate.line,
                format!("combinational cycle through net `{}`", circuit.nets[gate.output]),
            ));
        }
    };
    Ok(circuit)
}

/// A gate left on a cycle when topological sorting stalls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleAt(pub usize);

impl fmt::Display for CycleAt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "combinational cycle through gate {}", self.0)
    }
}

/// Kahn's algorithm, always taking the lowest ready gate index.
pub fn topo_sort(c: &Circuit) -> std::result::Result<Vec<usize>, CycleAt> {
    let ng = c.gates.len();
    let mut pending = vec![0usize; ng];
    for (gi, g) in c.gates.iter().enumerate() {
        pending[gi] = g
            .inputs
            .iter()
            .filter(|&&i| matches!(c.drivers[i], Driver::Gate(_)))
            .count();
    }
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..ng).filter(|&g| pending[g] == 0).map(std::cmp::Reverse).collect();
    let mut order = Vec::with_capacity(ng);
    while let Some(std::cmp::Reverse(g)) = ready.pop() {
        order.push(g);
        let out = c.gates[g].output;
        for &r in &c.fanout[out] {
            // a reader may use the same net on several pins
            let uses = c.gates[r].inputs.iter().filter(|&&i| i == out).count();
            pending[r] -= uses;
            if pending[r] == 0 {
                ready.push(std::cmp::Reverse(r));
            }
        }
    }
    if order.len() < ng {
        let stuck = (0..ng).find(|&g| pending[g] > 0).unwrap_or(0);
        return Err(CycleAt(stuck));
    }
    Ok(order)
}

/// One bit per primary input, pseudo inputs included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputVector(pub Vec<bool>);

impl InputVector {
    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        InputVector((0..len).map(|_| rng.random::<bool>()).collect())
    }

    /// Bit `i` of `value` for input `i`.
    pub fn from_index(len: usize, value: u64) -> Self {
        InputVector((0..len).map(|i| i < 64 && value >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for InputVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .filter(|c| *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::invalid(format!("bad bit {c:?} in vector `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(InputVector)
    }
}

impl fmt::Display for InputVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_char(if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicState {
    pub values: Vec<bool>,
}

impl LogicState {
    pub fn get(&self, net: usize) -> bool {
        self.values[net]
    }
}

impl Circuit {
    pub fn input_count(&self) -> usize {
        self.primary_inputs.len()
    }

    pub fn net_index(&self, name: &str) -> Option<usize> {
        self.nets.iter().position(|n| n == name)
    }

    pub fn gate_inputs(&self, gate: usize, state: &LogicState) -> Vec<bool> {
        self.gates[gate].inputs.iter().map(|&i| state.values[i]).collect()
    }

    /// Canonical `.bench` text; parsing it yields an isomorphic circuit.
    pub fn to_bench(&self) -> String {
        let mut s = String::new();
        for &p in &self.primary_inputs[..self.declared_inputs] {
            let _ = writeln!(s, "INPUT({})", self.nets[p]);
        }
        for &p in &self.primary_outputs[..self.declared_outputs] {
            let _ = writeln!(s, "OUTPUT({})", self.nets[p]);
        }
        for f in &self.flip_flops {
            let _ = writeln!(s, "{} = DFF({})", self.nets[f.q], self.nets[f.d]);
        }
        for g in &self.gates {
            let kw = match g.gate_type {
                GateType::Inv => "NOT",
                GateType::Buf => "BUFF",
                GateType::Nand(_) => "NAND",
                GateType::Nor(_) => "NOR",
                GateType::And(_) => "AND",
                GateType::Or(_) => "OR",
            };
            let args: Vec<&str> = g.inputs.iter().map(|&i| self.nets[i].as_str()).collect();
            let _ = writeln!(s, "{} = {}({})", self.nets[g.output], kw, args.join(", "));
        }
        s
    }

    /// Same nets by name, same declarations, flip-flops and gates up to order.
    pub fn isomorphic(&self, other: &Circuit) -> bool {
        let names = |c: &Circuit, idx: &[usize]| -> Vec<String> { idx.iter().map(|&i| c.nets[i].clone()).collect() };
        let gate_set = |c: &Circuit| -> BTreeSet<(String, String, Vec<String>)> {
            c.gates
                .iter()
                .map(|g| {
                    (
                        c.nets[g.output].clone(),
                        g.gate_type.to_string(),
                        g.inputs.iter().map(|&i| c.nets[i].clone()).collect(),
                    )
                })
                .collect()
        };
        let ff_set = |c: &Circuit| -> BTreeSet<(String, String)> {
            c.flip_flops
                .iter()
                .map(|f| (c.nets[f.q].clone(), c.nets[f.d].clone()))
                .collect()
        };
        let net_set = |c: &Circuit| -> BTreeSet<String> { c.nets.iter().cloned().collect() };
        net_set(self) == net_set(other)
            && names(self, &self.primary_inputs) == names(other, &other.primary_inputs)
            && names(self, &self.primary_outputs) == names(other, &other.primary_outputs)
            && ff_set(self) == ff_set(other)
            && gate_set(self) == gate_set(other)
    }
}

/// Zero-delay evaluation in topological order.
pub fn simulate_logic(c: &Circuit, vector: &InputVector) -> Result<LogicState> {
    if vector.len() != c.input_count() {
        return Err(Error::invalid(format!(
            "vector has {} bits, circuit has {} inputs",
            vector.len(),
            c.input_count()
        )));
    }
    let mut values = vec![false; c.nets.len()];
    for (&p, &b) in c.primary_inputs.iter().zip(&vector.0) {
        values[p] = b;
    }
    let mut buf = Vec::with_capacity(MAX_FANIN);
    for &g in &c.topo_order {
        let gate = &c.gates[g];
        buf.clear();
        buf.extend(gate.inputs.iter().map(|&i| values[i]));
        values[gate.output] = gate.gate_type.eval(&buf);
    }
    Ok(LogicState { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err_line(text: &str) -> usize {
        match parse_bench(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_nand() {
        let c = parse_bench("INPUT(a)\nINPUT(b)\nc = NAND(a,b)\nOUTPUT(c)\n").unwrap();
        assert_eq!(c.primary_inputs.len(), 2);
        assert_eq!(c.gates.len(), 1);
        assert_eq!(c.primary_outputs.len(), 1);
        assert_eq!(c.gates[0].gate_type, GateType::Nand(2));
    }

    #[test]
    fn comments_case_and_spacing() {
        let c = parse_bench("# header\n input( a )  # trailing\nOUTPUT(y)\n y =  not ( a )\n\n").unwrap();
        assert_eq!(c.gates[0].gate_type, GateType::Inv);
    }

    #[test]
    fn xor_becomes_four_nand2() {
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = XOR(a,b)\n").unwrap();
        assert_eq!(c.gates.len(), 4);
        assert!(c.gates.iter().all(|g| g.gate_type == GateType::Nand(2)));
        assert_eq!(c.nets.iter().filter(|n| n.starts_with("c__x")).count(), 3);
    }

    #[test]
    fn xnor_adds_inverter() {
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = XNOR(a,b)\n").unwrap();
        assert_eq!(c.gates.len(), 5);
        for v in 0..4 {
            let s = simulate_logic(&c, &InputVector::from_index(2, v)).unwrap();
            let out = c.net_index("c").unwrap();
            assert_eq!(s.get(out), (v & 1) == (v >> 1 & 1));
        }
    }

    #[test]
    fn wide_gate_tree() {
        let ins: Vec<String> = (0..9).map(|i| format!("i{i}")).collect();
        let mut text: String = ins.iter().map(|n| format!("INPUT({n})\n")).collect();
        text += &format!("OUTPUT(y)\ny = NAND({})\n", ins.join(","));
        let c = parse_bench(&text).unwrap();
        assert_eq!(c.gates.len(), 4);
        assert!(c.gates.iter().all(|g| g.inputs.len() <= 4));
    }

    #[test]
    fn synthetic_names_avoid_collisions() {
        let c = parse_bench("INPUT(a)\nINPUT(c__x0)\nOUTPUT(c)\nc = XOR(a,c__x0)\n").unwrap();
        let synth: Vec<&String> = c.nets.iter().filter(|n| n.starts_with("c__x")).collect();
        assert_eq!(synth.len(), 4);
        assert_eq!(c.gates.iter().filter(|g| c.nets[g.output] == "c__x0").count(), 0);
    }

    #[test]
    fn dff_cut() {
        let c = parse_bench("INPUT(a)\nOUTPUT(y)\nq = DFF(d)\nd = NAND(a,q)\ny = NOT(q)\n").unwrap();
        assert_eq!(c.input_count(), 2);
        assert_eq!(c.primary_outputs.len(), 2);
        assert_eq!(c.flip_flops.len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_err_line("INPUT(a)\nOUTPUT(b)\nb = FOO(a)\n"), 3);
        assert_eq!(parse_err_line("INPUT(a)\nOUTPUT(b)\nb = NOT(zz)\n"), 3);
        assert_eq!(parse_err_line("INPUT(a)\nb = NOT(a)\nb = NOT(a)\n"), 3);
        assert_eq!(parse_err_line("INPUT(a)\nx = NAND(a,y)\ny = NOT(x)\n"), 2);
        assert_eq!(parse_err_line("INPUT(a)\nOUTPUT(q)\n"), 2);
        assert_eq!(parse_err_line("INPUT(a\n"), 1);
        assert_eq!(parse_err_line("INPUT(a)\nb = NOT(a,a)\n"), 2);
        assert_eq!(parse_err_line("INPUT(a)\nINPUT(a)\n"), 2);
        assert_eq!(parse_err_line("INPUT(a b)\n"), 1);
    }

    #[test]
    fn topo_order_respects_edges() {
        let c = parse_bench(
            "INPUT(a)\nOUTPUT(z)\nz = NAND(l, r)\nl = NOT(s)\nr = NOT(s)\ns = NOT(a)\n",
        )
        .unwrap();
        let pos: Vec<usize> = {
            let mut p = vec![0; c.gates.len()];
            for (k, &g) in c.topo_order.iter().enumerate() {
                p[g] = k;
            }
            p
        };
        for (gi, g) in c.gates.iter().enumerate() {
            for &i in &g.inputs {
                if let Driver::Gate(d) = c.drivers[i] {
                    assert!(pos[d] < pos[gi]);
                }
            }
        }
        assert_eq!(c.topo_order, vec![3, 1, 2, 0]);
    }

    #[test]
    fn inverter_chain_alternates() {
        let c = parse_bench("INPUT(a)\nOUTPUT(d)\nb = NOT(a)\nc = NOT(b)\nd = NOT(c)\n").unwrap();
        let s = simulate_logic(&c, &"0".parse().unwrap()).unwrap();
        let v: Vec<bool> = ["a", "b", "c", "d"].iter().map(|n| s.get(c.net_index(n).unwrap())).collect();
        assert_eq!(v, vec![false, true, false, true]);
    }

    #[test]
    fn round_trip() {
        let text = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nq = DFF(y)\ny = XOR(a, q)\nz = OR(a,b,q,y,a)\n";
        let c = parse_bench(text).unwrap();
        let again = parse_bench(&c.to_bench()).unwrap();
        assert!(c.isomorphic(&again));
        assert_eq!(again.to_bench(), c.to_bench());
    }

    #[test]
    fn vector_parsing() {
        let v: InputVector = "10_1".parse().unwrap();
        assert_eq!(v.0, vec![true, false, true]);
        assert_eq!(v.to_string(), "101");
        assert!("102".parse::<InputVector>().is_err());
    }

    #[test]
    fn vector_length_checked() {
        let c = parse_bench("INPUT(a)\nOUTPUT(b)\nb = NOT(a)\n").unwrap();
        assert!(simulate_logic(&c, &InputVector(vec![])).is_err());
    }
}
