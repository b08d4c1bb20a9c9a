//! Versioned text format for trained networks.
//!
//! One `key value value ...` record per line. Floats use 17 significant
//! digits, so a reloaded network reproduces forward outputs bit for bit.
//! Lines starting with `#` are comments and are skipped on load.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::mlp::{Activation, Layer, MlpModel};
use crate::dataset::{fmt_f64, Normalizer};
use crate::{Error, Result};

pub const MLP_MAGIC: &str = "mdinet-mlp";
pub const FORMAT_VERSION: u32 = 1;

fn format_err(field: &str, message: impl Into<String>) -> Error {
    Error::ModelFormat {
        field: field.to_string(),
        message: message.into(),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

/// Appends the text form of `model` to `out`.
pub fn write_model(out: &mut String, model: &MlpModel) {
    let sizes: Vec<String> = model.sizes().iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{MLP_MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "sizes {}", sizes.join(" "));
    let _ = writeln!(out, "hidden {}", model.hidden_activation().name());
    for (tag, n) in [("input", &model.input_norm), ("output", &model.output_norm)] {
        let _ = writeln!(out, "{tag}_shift {}", join(&n.shift));
        let _ = writeln!(out, "{tag}_scale {}", join(&n.scale));
        let flags: Vec<&str> = n.log10.iter().map(|b| if *b { "1" } else { "0" }).collect();
        let _ = writeln!(out, "{tag}_log10 {}", flags.join(" "));
    }
    for (k, l) in model.layers.iter().enumerate() {
        let _ = writeln!(out, "layer{}_weights {}", k + 1, join(&l.weights));
        let _ = writeln!(out, "layer{}_thresholds {}", k + 1, join(&l.thresholds));
    }
    let _ = writeln!(out, "end");
}

/// Sequential reader over `key values...` records.
pub struct Reader<'a> {
    lines: std::iter::Peekable<Box<dyn Iterator<Item = &'a str> + 'a>>,
}

impl<'a> Reader<'a> {
    pub fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = &'a str> + 'a> =
            Box::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')));
        Reader { lines: it.peekable() }
    }

    /// Values of the next record, which must be `key`.
    pub fn field(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.lines.next().ok_or_else(|| format_err(key, "file ends before this field"))?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            Some(k) => Err(format_err(key, format!("expected `{key}`, found `{k}`"))),
            None => Err(format_err(key, "empty record")),
        }
    }

    pub fn floats(&mut self, key: &str, count: usize) -> Result<Vec<f64>> {
        let raw = self.field(key)?;
        if raw.len() != count {
            return Err(format_err(key, format!("expected {count} values, found {}", raw.len())));
        }
        raw.iter()
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format_err(key, format!("`{s}` is not a finite number"))),
            })
            .collect()
    }

    pub fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.field(key)?;
        match raw.as_slice() {
            [v] => v.parse().map_err(|_| format_err(key, format!("cannot parse `{v}`"))),
            _ => Err(format_err(key, format!("expected one value, found {}", raw.len()))),
        }
    }

    /// Checks a `magic version` header line.
    pub fn header(&mut self, magic: &str) -> Result<()> {
        let version: u32 = self.single(magic)?;
        if version != FORMAT_VERSION {
            return Err(format_err(
                "version",
                format!("file has version {version}, this build reads {FORMAT_VERSION}"),
            ));
        }
        Ok(())
    }

    pub fn model(&mut self) -> Result<MlpModel> {
        self.header(MLP_MAGIC)?;
        let sizes: Vec<usize> = self
            .field("sizes")?
            .iter()
            .map(|s| s.parse().map_err(|_| format_err("sizes", format!("`{s}` is not a count"))))
            .collect::<Result<_>>()?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(format_err("sizes", "need at least two non-empty layers"));
        }
        let hidden_name: String = self.single("hidden")?;
        let hidden = Activation::from_name(&hidden_name)
            .ok_or_else(|| format_err("hidden", format!("unknown activation `{hidden_name}`")))?;
        let mut norms = Vec::new();
        for (tag, dim) in [("input", sizes[0]), ("output", sizes[sizes.len() - 1])] {
            let shift = self.floats(&format!("{tag}_shift"), dim)?;
            let scale = self.floats(&format!("{tag}_scale"), dim)?;
            let key = format!("{tag}_log10");
            let flags = self.field(&key)?;
            if flags.len() != dim {
                return Err(format_err(&key, format!("expected {dim} flags, found {}", flags.len())));
            }
            let log10 = flags
                .iter()
                .map(|f| match *f {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(format_err(&key, format!("flag `{other}` is not 0 or 1"))),
                })
                .collect::<Result<_>>()?;
            let n = Normalizer { shift, scale, log10 };
            n.validate().map_err(|e| format_err(&format!("{tag}_scale"), e.to_string()))?;
            norms.push(n);
        }
        let mut model = MlpModel::zeros(&sizes, hidden)?;
        for (k, layer) in model.layers.iter_mut().enumerate() {
            let Layer { inputs, outputs, .. } = *layer;
            layer.weights = self.floats(&format!("layer{}_weights", k + 1), inputs * outputs)?;
            layer.thresholds = self.floats(&format!("layer{}_thresholds", k + 1), outputs)?;
        }
        self.field("end")?;
        model.output_norm = norms.pop().expect("two normalizers");
        model.input_norm = norms.pop().expect("two normalizers");
        Ok(model)
    }

    pub fn finish(&mut self) -> Result<()> {
        match self.lines.next() {
            None => Ok(()),
            Some(l) => Err(format_err("end", format!("unexpected trailing content `{l}`"))),
        }
    }
}

pub fn model_to_text(model: &MlpModel) -> String {
    let mut s = String::new();
    write_model(&mut s, model);
    s
}

pub fn model_from_text(text: &str) -> Result<MlpModel> {
    let mut r = Reader::new(text);
    let m = r.model()?;
    r.finish()?;
    Ok(m)
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    model_from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut m = MlpModel::new(&[3, 5, 4, 2], Activation::Tanh, 12).unwrap();
        m.input_norm = Normalizer {
            shift: vec![0.1, -3.0, 1e-7],
            scale: vec![0.7, 11.0, 3.3],
            log10: vec![false, false, true],
        };
        let back = model_from_text(&model_to_text(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncation_and_version_are_reported() {
        let m = MlpModel::new(&[2, 2, 1], Activation::Sigmoid, 1).unwrap();
        let text = model_to_text(&m);
        let cut: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        match model_from_text(&cut) {
            Err(Error::ModelFormat { field, .. }) => assert_eq!(field, "output_shift"),
            other => panic!("{other:?}"),
        }
        match model_from_text(&text.replace("mdinet-mlp 1", "mdinet-mlp 7")) {
            Err(Error::ModelFormat { field, .. }) => assert_eq!(field, "version"),
            other => panic!("{other:?}"),
        }
        let short = text.replacen("layer1_weights ", "layer1_weights 1 ", 1);
        assert!(matches!(model_from_text(&short), Err(Error::ModelFormat { .. })));
    }
}
