//! Fuzzes the network model-file reader. Any input that loads must
//! re-serialize to a canonical form that loads again and re-serializes
//! byte-identically, with internally consistent dimensions.

#![no_main]

use demfuse::mlp::{load_model, save_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(model) = load_model(text) else {
        return;
    };
    assert!(model.layer_sizes().len() >= 2, "model with fewer than two layers");
    assert_eq!(
        model.feature_names().len(),
        model.input_len(),
        "feature names out of step with the input layer"
    );

    let canonical = save_model(&model);
    let reloaded = load_model(&canonical).expect("saved model failed to load");
    assert_eq!(
        save_model(&reloaded),
        canonical,
        "model file not stable across a save/load roundtrip"
    );
});
