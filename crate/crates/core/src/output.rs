//! CSV formatting shared by every exporter.
//!
//! Floats are written with 17 significant digits so a row parses back to the
//! exact same `f64`. Missing values are empty fields.

use std::io::{self, Write};

pub fn float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Write a header line followed by rows of already formatted fields.
pub fn write_csv<W: Write>(w: &mut W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123_456_789.123_456_78, f64::MIN_POSITIVE] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert!(s.is_ascii());
        }
        assert_eq!(float(f64::NAN), "");
        assert_eq!(opt_float(None), "");
    }
}
