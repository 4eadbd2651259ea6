// SPDX-License-Identifier: Apache-2.0
#![no_main]

use leakload::corpus::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = std::hint::black_box(Manifest::parse(text));
});
