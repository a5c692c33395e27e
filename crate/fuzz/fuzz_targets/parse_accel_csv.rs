#![no_main]

use hrvcorr::ingest::{parse_accel_csv, write_accel_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_accel_csv(data) {
        let mut buf = Vec::new();
        write_accel_csv(&mut buf, &records).unwrap();
        let again = parse_accel_csv(&buf).expect("canonical form reparses");
        assert_eq!(again, records);
    }
});
