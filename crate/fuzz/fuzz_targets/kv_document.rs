// SPDX-License-Identifier: Apache-2.0
#![no_main]

use leakload::kv::KvDocument;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = std::hint::black_box(KvDocument::parse(text));
});
