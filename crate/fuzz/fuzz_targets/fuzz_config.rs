#![no_main]

use libfuzzer_sys::fuzz_target;
use qknn_cli::config::parse_config_file;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(entries) = parse_config_file(text) {
        for (key, value) in &entries {
            assert!(!key.is_empty());
            assert!(!value.is_empty());
            assert_eq!(key.trim(), key);
            assert_eq!(value.trim(), value);
        }
    }
});
