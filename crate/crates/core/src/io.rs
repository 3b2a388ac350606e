//! CSV helpers. Floats are written with 17 significant digits and a `.`
//! decimal separator, rows end with LF.

use std::io::{Read, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn parse_field(field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad float `{field}`")))
}

/// One point per row, no header.
pub fn write_points<W: Write>(p: &PointSet, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for x in p.iter() {
        w.write_record(x.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points<R: Read>(input: R) -> Result<PointSet> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(rec.iter().map(parse_field).collect::<Result<Vec<f64>>>()?);
    }
    PointSet::from_rows(&rows)
}

/// A vector stored either as one value per line or as a single row.
pub fn read_vector<R: Read>(input: R) -> Result<DVector<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut values = Vec::new();
    for rec in r.records() {
        for field in rec?.iter() {
            if !field.trim().is_empty() {
                values.push(parse_field(field)?);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::EmptySet("vector file has no entries"));
    }
    Ok(DVector::from_vec(values))
}

/// One value per line.
pub fn write_vector<W: Write>(v: &DVector<f64>, mut out: W) -> Result<()> {
    for x in v.iter() {
        writeln!(out, "{}", fmt_f64(*x))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn format_is_fixed_width_scientific() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.1), "-1.0000000000000001e-1");
    }

    #[test]
    fn points_round_trip() {
        let p = PointSet::from_rows(&[vec![1.0, -2.5], vec![1e-300, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_points(&p, &mut buf).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn vector_accepts_row_or_column() {
        assert_eq!(read_vector("1,2,3\n".as_bytes()).unwrap().len(), 3);
        assert_eq!(read_vector("1\n2\n3\n".as_bytes()).unwrap().len(), 3);
        assert!(read_vector("".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
