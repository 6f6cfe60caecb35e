#![no_main]

use hashmem::dram::SimConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(config) = SimConfig::parse(text) {
        let again = SimConfig::parse(&config.to_config_string()).expect("printed config parses");
        assert_eq!(again, config);
    }
});
