#![no_main]

use hrvcorr::synth::parse_activity_profile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(segments) = parse_activity_profile(text) {
        // NaN intensities parse (range checks live in the generator) but
        // never compare equal, so skip those for the round-trip claim.
        if segments.iter().any(|s| s.intensity.is_nan()) {
            return;
        }
        let rendered = segments
            .iter()
            .map(|s| format!("{}:{}:{}", s.start_s, s.end_s, s.intensity))
            .collect::<Vec<_>>()
            .join(",");
        let again = parse_activity_profile(&rendered).expect("rendered profile reparses");
        assert_eq!(again, segments);
    }
});
