// SPDX-License-Identifier: Apache-2.0
#![no_main]

use leakload::netlist::parse_bench;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(c) = parse_bench(text) {
        let again = parse_bench(&c.to_bench()).expect("printed netlist parses");
        assert!(c.isomorphic(&again));
    }
});
