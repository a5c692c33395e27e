#![no_main]

use hrvcorr::model::{load_weights, save_weights};
use libfuzzer_sys::fuzz_target;

// Byte-level round trip rather than struct equality: fuzzed floats can
// be NaN, which never compares equal to itself.
fuzz_target!(|data: &[u8]| {
    if let Ok(w) = load_weights(data) {
        let bytes = save_weights(&w);
        let again = load_weights(&bytes).expect("saved weights reload");
        assert_eq!(save_weights(&again), bytes);
    }
});
