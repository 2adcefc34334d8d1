#![no_main]

use libfuzzer_sys::fuzz_target;
use otoc_core::campaign::CampaignConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = CampaignConfig::from_toml_str(text) {
        // anything accepted must survive its own echo
        let mut again: CampaignConfig = serde_json::from_value(cfg.echo()).expect("echo deserializes");
        again.output_dir = cfg.output_dir.clone();
        again.resolve().expect("echo validates");
        assert_eq!(again, cfg);
    }
});
