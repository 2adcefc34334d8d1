#![no_main]

use libfuzzer_sys::fuzz_target;
use otoc_core::analysis::QuenchData;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(q) = QuenchData::from_csv_str(text) {
        let back = QuenchData::from_csv_str(&q.to_csv_string()).expect("own output parses");
        assert_eq!(back, q);
    }
});
