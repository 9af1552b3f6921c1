use std::io::Write;

use serde::Serialize;

use crate::LabError;

/// Twelve significant digits, '.' decimal point, trailing zeros dropped.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..15).contains(&e) {
        let s = format!("{:.*}", (11 - e).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (m, exp) = s.split_once('e').expect("scientific format");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{exp}")
    }
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<(), LabError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(0.75), "0.75");
        assert_eq!(num(-2.0), "-2");
        assert_eq!(num(123456.7890123456), "123456.789012");
        assert_eq!(num(1.5e-9), "1.5e-9");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(7.0 / 48.0), "0.145833333333");
    }
}
