// SPDX-License-Identifier: Apache-2.0
#![no_main]

use leakload::device::DevicePair;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(p) = DevicePair::parse(text) {
        let again = DevicePair::parse(&p.to_text("fuzz")).expect("printed parameters parse");
        assert_eq!(p, again);
    }
});
