// SPDX-License-Identifier: Apache-2.0
#![no_main]

use leakload::netlist::InputVector;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(v) = text.parse::<InputVector>() {
        assert_eq!(v.to_string().parse::<InputVector>().expect("printed vector parses"), v);
    }
});
