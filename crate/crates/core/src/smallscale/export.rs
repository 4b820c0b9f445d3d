//! CIR export.
//!
//! Text: one row per tap, `t_s,p,q,tap_index,delay_s,gain_re,gain_im`.
//! Binary: the same seven columns per tap as little-endian `f64`, no header.

use std::io::Write;

use super::channel::CirFrame;
use crate::error::Result;

pub const CIR_HEADER: &str = "t_s,p,q,tap_index,delay_s,gain_re,gain_im";
/// `f64` values per tap in the binary layout.
pub const BINARY_RECORD_LEN: usize = 7;

pub fn write_cir_header<W: Write>(out: &mut W) -> Result<()> {
    writeln!(out, "{CIR_HEADER}")?;
    Ok(())
}

pub fn write_cir_csv<W: Write>(out: &mut W, frame: &CirFrame) -> Result<()> {
    for pair in &frame.pairs {
        for (i, tap) in pair.taps.iter().enumerate() {
            writeln!(
                out,
                "{:.16e},{},{},{},{:.16e},{:.16e},{:.16e}",
                frame.t, pair.p, pair.q, i, tap.delay, tap.gain.re, tap.gain.im
            )?;
        }
    }
    Ok(())
}

pub fn write_cir_binary<W: Write>(out: &mut W, frame: &CirFrame) -> Result<()> {
    for pair in &frame.pairs {
        for (i, tap) in pair.taps.iter().enumerate() {
            for v in [frame.t, pair.p as f64, pair.q as f64, i as f64, tap.delay, tap.gain.re, tap.gain.im] {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smallscale::channel::{PairResponse, Tap};
    use num_complex::Complex64;

    fn frame() -> CirFrame {
        CirFrame {
            t: 0.25,
            rice_factor: 4.0,
            pvf: 1.0,
            large_scale: None,
            pairs: vec![PairResponse {
                p: 1,
                q: 0,
                taps: vec![
                    Tap { delay: 5e-7, gain: Complex64::new(0.5, -0.25), los: true },
                    Tap { delay: 6e-7, gain: Complex64::new(-1e-3, 2e-3), los: false },
                ],
            }],
        }
    }

    #[test]
    fn csv_rows_parse_back_exactly() {
        let mut buf = Vec::new();
        write_cir_header(&mut buf).unwrap();
        write_cir_csv(&mut buf, &frame()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], CIR_HEADER);
        let cols: Vec<&str> = rows[2].split(',').collect();
        assert_eq!(&cols[1..4], &["1", "0", "1"]);
        assert_eq!(cols[6].parse::<f64>().unwrap(), 2e-3);
    }

    #[test]
    fn binary_layout() {
        let mut buf = Vec::new();
        write_cir_binary(&mut buf, &frame()).unwrap();
        assert_eq!(buf.len(), 2 * BINARY_RECORD_LEN * 8);
        let v: Vec<f64> = buf.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(&v[..7], &[0.25, 1.0, 0.0, 0.0, 5e-7, 0.5, -0.25]);
    }
}
