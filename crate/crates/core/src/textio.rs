//! Versioned one-line headers shared by every tab-separated artifact.

use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeaderError {
    #[error("missing `#plc-{0}` header")]
    Missing(String),
    #[error("expected a `{expected}` file, found `{found}`")]
    WrongKind { expected: String, found: String },
    #[error("unsupported {kind} format version `{found}` (expected {FORMAT_VERSION})")]
    Version { kind: String, found: String },
}

/// `#plc-<kind>/<version>` followed by tab-separated header fields.
pub fn header_line<S: AsRef<str>>(kind: &str, fields: &[S]) -> String {
    let mut line = format!("#plc-{kind}/{FORMAT_VERSION}");
    for f in fields {
        line.push('\t');
        line.push_str(f.as_ref());
    }
    line
}

/// Validates the header and returns its remaining fields.
pub fn parse_header<'a>(line: Option<&'a str>, kind: &str) -> Result<Vec<&'a str>, HeaderError> {
    let line = line.ok_or_else(|| HeaderError::Missing(kind.to_string()))?;
    let mut fields = line.split('\t');
    let tag = fields.next().unwrap_or_default();
    let Some(rest) = tag.strip_prefix("#plc-") else {
        return Err(HeaderError::Missing(kind.to_string()));
    };
    let (found_kind, version) = rest.split_once('/').unwrap_or((rest, ""));
    if found_kind != kind {
        return Err(HeaderError::WrongKind {
            expected: kind.to_string(),
            found: found_kind.to_string(),
        });
    }
    if version != FORMAT_VERSION.to_string() {
        return Err(HeaderError::Version {
            kind: kind.to_string(),
            found: version.to_string(),
        });
    }
    Ok(fields.collect())
}

/// Shortest decimal text that parses back to the identical `f64`.
pub fn format_exact(x: f64) -> String {
    format!("{x:?}")
}

/// Fixed 17-significant-digit scientific notation.
pub fn format_sci17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let line = header_line("model", &["a", "b"]);
        assert_eq!(line, "#plc-model/1\ta\tb");
        assert_eq!(parse_header(Some(&line), "model").unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn header_rejections() {
        assert!(matches!(parse_header(None, "x"), Err(HeaderError::Missing(_))));
        assert!(matches!(parse_header(Some("id\tkey"), "x"), Err(HeaderError::Missing(_))));
        assert!(matches!(
            parse_header(Some("#plc-model/1"), "grounding"),
            Err(HeaderError::WrongKind { .. })
        ));
        assert!(matches!(
            parse_header(Some("#plc-model/2"), "model"),
            Err(HeaderError::Version { .. })
        ));
    }

    #[test]
    fn exact_formats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(format_exact(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
            assert_eq!(format_sci17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
