//! Fuzzes the key=value configuration reader. Any configuration that
//! parses must already satisfy validation, and its text form must be a
//! fixed point of parse -> to_text.

#![no_main]

use demfuse::config::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = PipelineConfig::parse(text) else {
        return;
    };
    config.validate().expect("parse accepted a configuration that fails validation");

    let canonical = config.to_text();
    let reparsed = PipelineConfig::parse(&canonical).expect("canonical config rejected");
    assert_eq!(
        reparsed.to_text(),
        canonical,
        "config text not stable across a parse/print roundtrip"
    );
});
