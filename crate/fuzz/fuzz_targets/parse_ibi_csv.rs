#![no_main]

use hrvcorr::ingest::{parse_ibi_csv, write_ibi_csv, SourceTag};
use libfuzzer_sys::fuzz_target;

// Anything that parses must survive a serialize/parse round trip
// unchanged; everything else must fail cleanly.
fuzz_target!(|data: &[u8]| {
    if let Ok(stream) = parse_ibi_csv(data, SourceTag::Watch) {
        let mut buf = Vec::new();
        write_ibi_csv(&mut buf, &stream.records).unwrap();
        let again = parse_ibi_csv(&buf, SourceTag::Watch).expect("canonical form reparses");
        assert_eq!(again.records, stream.records);
    }
});
