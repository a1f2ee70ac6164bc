//! Fuzzes the ASCII grid reader. Any input that parses must survive an
//! exact write/read roundtrip: the writer may never fail on a parsed grid,
//! and the re-read grid must equal the original (nodata included).

#![no_main]

use demfuse::raster::{read_ascii_grid, write_ascii_grid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(grid) = read_ascii_grid(text) else {
        return;
    };
    // Parsed grids hold NaN where the sentinel appeared and reject
    // non-finite data, so serialization must always succeed ...
    let written = write_ascii_grid(&grid).expect("parsed grid failed to serialize");
    // ... and the round trip must be lossless.
    let back = read_ascii_grid(&written).expect("serialized grid failed to parse");
    assert_eq!(grid, back, "grid changed across a write/read roundtrip");
});
