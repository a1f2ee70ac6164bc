//! Fuzzes the rigid-transform file reader. Any accepted transform must be
//! rigid (the parser's own contract), survive an exact text roundtrip, and
//! compose with its inverse to something that still parses.

#![no_main]

use demfuse::align::RigidTransform;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(t) = RigidTransform::from_text(text) else {
        return;
    };
    let canonical = t.to_text();
    let back = RigidTransform::from_text(&canonical).expect("serialized transform rejected");
    assert_eq!(back.to_text(), canonical, "transform text not canonical");

    // The inverse of an accepted rigid transform is rigid as well.
    let inv = t.inverse();
    RigidTransform::from_text(&inv.to_text()).expect("inverse of accepted transform rejected");
});
