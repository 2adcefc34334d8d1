#![no_main]

use libfuzzer_sys::fuzz_target;
use otoc_core::protocol::MeasurementDataset;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ds) = MeasurementDataset::from_csv_str(text) {
        let back = MeasurementDataset::from_csv_str(&ds.to_csv_string()).expect("own output parses");
        assert_eq!(back, ds);
    }
});
