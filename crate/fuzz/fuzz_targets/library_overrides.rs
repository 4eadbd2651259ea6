// SPDX-License-Identifier: Apache-2.0
#![no_main]

use leakload::gates::GateLibrary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = std::hint::black_box(GateLibrary::default().with_overrides(text));
});
