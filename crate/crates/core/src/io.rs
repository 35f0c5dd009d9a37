//! CSV and JSON emission. All floats are written with 17 significant digits
//! and LF line endings so identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::model::FieldSample;
use crate::sampler::{Configuration, ConfigurationPoints};

/// Fixed decimal formatting: 17 significant digits, scientific notation.
/// Round-trips every finite f64 bit pattern.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// Write a CSV with a header row; every cell formatted by [`format_float`].
pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(header.join(",").as_bytes())?;
    out.write_all(b"\n")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        out.write_all(line.join(",").as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Field CSV: columns `re(z), im(z), value`.
pub fn write_field_csv<P: AsRef<Path>>(field: &FieldSample, path: P) -> Result<()> {
    write_csv(
        path,
        &["re", "im", "value"],
        field
            .points
            .iter()
            .zip(&field.values)
            .map(|(p, &v)| vec![p.re, p.im, v]),
    )
}

/// JSON sidecar for a field sample: model parameters plus metadata.
pub fn field_sidecar(field: &FieldSample) -> Value {
    let mut meta = Map::new();
    for (k, v) in &field.metadata {
        meta.insert(k.clone(), Value::String(v.clone()));
    }
    json!({
        "label": field.label,
        "model": {
            "k": field.model.k(),
            "c": field.model.c(),
            "tau0": field.model.tau0(),
            "n": field.model.n(),
            "beta": field.model.beta(),
        },
        "points": field.points.len(),
        "metadata": Value::Object(meta),
    })
}

/// Configuration CSV: `index, modulus` for moduli-exact samples,
/// `index, re, im` for planar ones.
pub fn write_configuration_csv<P: AsRef<Path>>(config: &Configuration, path: P) -> Result<()> {
    match &config.points {
        ConfigurationPoints::Moduli(moduli) => write_csv(
            path,
            &["index", "modulus"],
            moduli.iter().enumerate().map(|(i, &r)| vec![i as f64, r]),
        ),
        ConfigurationPoints::Planar(points) => write_csv(
            path,
            &["index", "re", "im"],
            points
                .iter()
                .enumerate()
                .map(|(i, z)| vec![i as f64, z.re, z.im]),
        ),
    }
}

/// Pretty-printed JSON with a trailing newline (stable byte output).
pub fn write_json<P: AsRef<Path>>(value: &Value, path: P) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RadialModel;
    use num_complex::Complex64;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.0, 1.0, -1.5, 0.6321205588285577, 1e-300, f64::MAX] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn field_csv_layout() {
        let m = RadialModel::standard(1, 0.0, 4).unwrap();
        let field = FieldSample::new(
            vec![Complex64::new(0.0, 0.5), Complex64::new(1.0, -1.0)],
            vec![1.0, 2.0],
            "test",
            m,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("mlfield_io_test.csv");
        write_field_csv(&field, &dir).unwrap();
        let text = std::fs::read_to_string(&dir).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "re,im,value");
        assert!(lines.next().unwrap().starts_with("0.0000000000000000e0,5.0000000000000000e-1"));
        assert!(!text.contains('\r'));
        std::fs::remove_file(dir).ok();
    }
}
