// SPDX-License-Identifier: Apache-2.0
#![no_main]

use leakload::variation::VariationSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(s) = VariationSpec::parse(text) {
        assert_eq!(VariationSpec::parse(&s.to_text()).expect("printed spec parses"), s);
    }
});
