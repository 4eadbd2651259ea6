// SPDX-License-Identifier: Apache-2.0

//! Writes the random DAG netlists and the corpus manifest.
//!
//!     cargo run --release --example corpus
//!     cargo run --release -p leakload-cli -- goldens --manifest crates/core/corpus/manifest.kv

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use leakload::corpus::{random_dag_bench, CorpusCase, DagParams, Manifest};
use leakload::estimator::{write_atomic, VectorSource};
use leakload::netlist::parse_bench;

const RANDOM_CASES: u64 = 20;

fn case(name: &str, netlist: &str, preset: &str, temperature: f64, vectors: &[&str], description: &str) -> CorpusCase {
    CorpusCase {
        name: name.into(),
        netlist: PathBuf::from(netlist),
        preset: preset.into(),
        temperature,
        vdd: 0.9,
        vectors: vectors.iter().map(|v| v.to_string()).collect(),
        total_tolerance: 0.02,
        gate_tolerance: 0.10,
        description: description.into(),
    }
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut cases = vec![
        case("inv_chain8", "benches/inv_chain8.bench", "D25-S", 300.0, &["0", "1"], "eight inverters in series"),
        case("fanout_6x6", "benches/fanout_6x6.bench", "D25-S", 300.0, &["0", "1"], "inverter with six input and six output loads"),
        case("fanout_6x6_g", "benches/fanout_6x6.bench", "D25-G", 300.0, &["0", "1"], "gate dominated flavor"),
        case("fanout_6x6_jn", "benches/fanout_6x6.bench", "D25-JN", 300.0, &["0", "1"], "junction dominated flavor"),
        case("fanout_6x6_hot", "benches/fanout_6x6.bench", "D25-G", 375.0, &["0", "1"], "gate dominated flavor at 375 K"),
        case("c17", "benches/c17.bench", "D25-S", 300.0, &["00000", "10101", "01110", "11111"], "six NAND2"),
        case("nand_ladder", "benches/nand_ladder.bench", "D25-S", 300.0, &["00000", "11011", "10110"], "NAND2/3/4 ladder"),
        case("nor_ladder", "benches/nor_ladder.bench", "D25-S", 300.0, &["00000", "00100", "10010"], "NOR2/3/4 ladder"),
        case("fanout_tree", "benches/fanout_tree.bench", "D25-S", 300.0, &["0", "1"], "two-level fanout tree"),
        case("mixed", "benches/mixed.bench", "D25-S", 300.0, &["000000", "101011", "110100"], "XOR, XNOR, wide AND, flip-flop"),
    ];
    let mut generator = BTreeMap::new();
    let p0 = DagParams::new(8, 10);
    generator.insert("max_fanout".to_string(), p0.max_fanout.to_string());
    generator.insert("window".to_string(), p0.window.to_string());
    generator.insert("locality".to_string(), p0.locality.to_string());
    generator.insert(
        "mix".to_string(),
        p0.mix.iter().map(|(t, w)| format!("{t}:{w}")).collect::<Vec<_>>().join(" "),
    );
    generator.insert("seeds".to_string(), format!("0..{RANDOM_CASES}"));
    for seed in 0..RANDOM_CASES {
        let inputs = 4 + (seed as usize % 5) * 2;
        let gates = 10 + (seed as usize * 7) % 41;
        let params = DagParams::new(inputs, gates);
        let text = random_dag_bench(&params, seed).expect("generator");
        let rel = format!("benches/rand_{seed:02}.bench");
        write_atomic(&root.join(&rel), text.as_bytes()).expect("write bench");
        let c = parse_bench(&text).expect("generated netlist parses");
        let vectors = VectorSource::Random { count: 3, seed }
            .vectors(c.input_count())
            .expect("vectors");
        let vs: Vec<String> = vectors.iter().map(|v| v.to_string()).collect();
        let mut k = case(
            &format!("rand_{seed:02}"),
            &rel,
            "D25-S",
            300.0,
            &vs.iter().map(String::as_str).collect::<Vec<_>>(),
            &format!("random DAG, {inputs} inputs, {gates} gates"),
        );
        k.description = format!("random DAG, seed {seed}, {inputs} inputs, {gates} gates");
        cases.push(k);
    }
    let m = Manifest { generator, cases };
    write_atomic(&root.join("manifest.kv"), m.to_text().as_bytes()).expect("write manifest");
    println!("wrote {} cases", m.cases.len());
}
