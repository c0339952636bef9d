//! key=value run-configuration files.

use thiserror::Error;

/// A malformed configuration line.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are skipped,
/// whitespace around keys and values is trimmed, and a key may appear only once.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError {
                line,
                message: format!("expected key=value, got {trimmed:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError {
                line,
                message: "empty key".into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError {
                line,
                message: format!("empty value for key {key:?}"),
            });
        }
        if entries.iter().any(|(k, _)| k == key) {
            return Err(ConfigError {
                line,
                message: format!("duplicate key {key:?}"),
            });
        }
        entries.push((key.to_string(), value.to_string()));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_trimmed_pairs_and_skips_noise() {
        let text = "# comment\n\n  k = 5 \nfold-seed=42\n   # another\nencoding=extension\n";
        let entries = parse_config_file(text).unwrap();
        assert_eq!(
            entries,
            vec![
                ("k".to_string(), "5".to_string()),
                ("fold-seed".to_string(), "42".to_string()),
                ("encoding".to_string(), "extension".to_string()),
            ]
        );
    }

    #[test]
    fn values_may_contain_equals_signs() {
        let entries = parse_config_file("note=a=b").unwrap();
        assert_eq!(entries, vec![("note".to_string(), "a=b".to_string())]);
    }

    #[test]
    fn missing_separator_reports_the_line() {
        let err = parse_config_file("k=5\nnonsense\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("key=value"));
    }

    #[test]
    fn empty_keys_and_values_are_rejected() {
        assert_eq!(parse_config_file("=5").unwrap_err().line, 1);
        let err = parse_config_file("k=5\nshots=  ").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("empty value"));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_config_file("k=5\n# sep\nk=7").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn empty_input_yields_no_entries() {
        assert_eq!(parse_config_file("").unwrap(), vec![]);
        assert_eq!(parse_config_file("\n# only comments\n").unwrap(), vec![]);
    }
}
