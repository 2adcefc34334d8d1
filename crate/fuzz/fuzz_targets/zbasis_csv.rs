#![no_main]

use libfuzzer_sys::fuzz_target;
use otoc_core::protocol::ZBasisRecords;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(z) = ZBasisRecords::from_csv_str(text) {
        let back = ZBasisRecords::from_csv_str(&z.to_csv_string()).expect("own output parses");
        assert_eq!(back, z);
    }
});
