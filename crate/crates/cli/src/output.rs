//! Output plumbing: 17-significant-digit float formatting, JSON emission
//! through a fixed-width formatter, and `--out` handling.

use std::fs;
use std::io::{self, Write};

use serde::Serialize;

/// 17 significant digits, the round-trip width for f64; keeps golden files
/// reproducible.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes to JSON with every float printed to 17 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> io::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| io::Error::other(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| io::Error::other(e.to_string()))
}

/// Writes to the path, or to stdout when the path is `-`.
pub fn emit(out: &str, content: &str) -> io::Result<()> {
    if out == "-" {
        let mut stdout = io::stdout().lock();
        stdout.write_all(content.as_bytes())?;
        if !content.ends_with('\n') {
            stdout.write_all(b"\n")?;
        }
        Ok(())
    } else {
        let mut body = content.to_string();
        if !body.ends_with('\n') {
            body.push('\n');
        }
        fs::write(out, body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_width() {
        assert_eq!(fmt_f64(0.25), "2.5000000000000000e-1");
        let parsed: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }

    #[test]
    fn json_floats_fixed_width() {
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        let s = to_json(&S { x: 0.1 }).unwrap();
        assert_eq!(s, r#"{"x":1.0000000000000001e-1}"#);
    }
}
