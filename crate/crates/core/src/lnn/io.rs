//! Versioned text model format.
//!
//! ```text
//! #plc-model/1
//! scorer  bounds-average
//! universe <fingerprint>
//! classes  anxiety,depression,...
//! train   learning_rate=.. epochs=.. seed=.. leak=.. init_scale=..
//! trace   <class> <comma-separated per-epoch loss>      (one per gate)
//! <class> <bias> <N>                                     (one block per gate)
//! <predicate name> <weight>                              (N lines)
//! #end
//! ```
//! All fields are tab-separated; reals use 17 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{LnnModel, Scorer, TrainConfig, WeightedAndGate};
use crate::textio::{format_sci17, header_line, parse_header, HeaderError};

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model has no gates or no predicates")]
    EmptyModel,
    #[error(transparent)]
    Version(#[from] HeaderError),
    #[error("byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("fingerprint mismatch: header {header}, predicates {computed}")]
    FingerprintMismatch { header: String, computed: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

const END: &str = "#end";

pub fn write_model<W: Write>(mut w: W, model: &LnnModel) -> Result<(), ModelIoError> {
    if model.gates.is_empty() || model.predicate_names.is_empty() {
        return Err(ModelIoError::EmptyModel);
    }
    let classes: Vec<&str> = model.classes().collect();
    let cfg = &model.config;
    writeln!(w, "{}", header_line::<&str>("model", &[]))?;
    writeln!(w, "scorer\t{}", cfg.scorer)?;
    writeln!(w, "universe\t{}", model.fingerprint)?;
    writeln!(w, "classes\t{}", classes.join(","))?;
    writeln!(
        w,
        "train\tlearning_rate={}\tepochs={}\tseed={}\tleak={}\tinit_scale={}",
        format_sci17(cfg.learning_rate),
        cfg.epochs,
        cfg.seed,
        format_sci17(cfg.leak),
        cfg.init_scale.map_or_else(|| "auto".to_string(), format_sci17)
    )?;
    for (i, g) in model.gates.iter().enumerate() {
        let trace = model.loss_trace.get(i).map(Vec::as_slice).unwrap_or(&[]);
        let trace: Vec<String> = trace.iter().map(|&x| format_sci17(x)).collect();
        writeln!(w, "trace\t{}\t{}", g.class, trace.join(","))?;
    }
    for g in &model.gates {
        writeln!(w, "{}\t{}\t{}", g.class, format_sci17(g.bias), g.weights.len())?;
        for (name, &wt) in model.predicate_names.iter().zip(&g.weights) {
            writeln!(w, "{name}\t{}", format_sci17(wt))?;
        }
    }
    writeln!(w, "{END}")?;
    Ok(())
}

pub fn save_model(path: impl AsRef<Path>, model: &LnnModel) -> Result<(), ModelIoError> {
    let mut buf = Vec::new();
    write_model(&mut buf, model)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LnnModel, ModelIoError> {
    let bytes = fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| ModelIoError::Malformed {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    read_model(text)
}

struct Lines<'a> {
    text: &'a str,
    offset: usize,
}

impl<'a> Lines<'a> {
    /// Next line and the byte offset of its start.
    fn next(&mut self) -> Result<(&'a str, usize), ModelIoError> {
        if self.offset >= self.text.len() {
            return Err(ModelIoError::Malformed {
                offset: self.text.len(),
                message: "unexpected end of file".into(),
            });
        }
        let rest = &self.text[self.offset..];
        let start = self.offset;
        let (line, advance) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.offset += advance;
        Ok((line, start))
    }
}

fn malformed(offset: usize, message: impl Into<String>) -> ModelIoError {
    ModelIoError::Malformed {
        offset,
        message: message.into(),
    }
}

fn parse_f64(s: &str, offset: usize) -> Result<f64, ModelIoError> {
    let v: f64 = s.parse().map_err(|_| malformed(offset, format!("bad number `{s}`")))?;
    if !v.is_finite() {
        return Err(malformed(offset, format!("non-finite number `{s}`")));
    }
    Ok(v)
}

fn keyed<'a>(line: &'a str, key: &str, offset: usize) -> Result<Vec<&'a str>, ModelIoError> {
    let mut f = line.split('\t');
    if f.next() != Some(key) {
        return Err(malformed(offset, format!("expected `{key}` line")));
    }
    Ok(f.collect())
}

pub fn read_model(text: &str) -> Result<LnnModel, ModelIoError> {
    let mut lines = Lines { text, offset: 0 };
    let header = lines.next().ok().map(|(l, _)| l);
    parse_header(header, "model")?;

    let (line, off) = lines.next()?;
    let scorer: Scorer = keyed(line, "scorer", off)?
        .first()
        .ok_or_else(|| malformed(off, "missing scorer"))?
        .parse()
        .map_err(|_| malformed(off, "unknown scorer"))?;

    let (line, off) = lines.next()?;
    let fingerprint = keyed(line, "universe", off)?
        .first()
        .ok_or_else(|| malformed(off, "missing fingerprint"))?
        .to_string();

    let (line, off) = lines.next()?;
    let classes: Vec<String> = keyed(line, "classes", off)?
        .first()
        .ok_or_else(|| malformed(off, "missing classes"))?
        .split(',')
        .map(str::to_string)
        .collect();

    let (line, off) = lines.next()?;
    let mut config = TrainConfig {
        scorer,
        ..TrainConfig::default()
    };
    for field in keyed(line, "train", off)? {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| malformed(off, format!("bad train field `{field}`")))?;
        match k {
            "learning_rate" => config.learning_rate = parse_f64(v, off)?,
            "epochs" => config.epochs = v.parse().map_err(|_| malformed(off, "bad epochs"))?,
            "seed" => config.seed = v.parse().map_err(|_| malformed(off, "bad seed"))?,
            "leak" => config.leak = parse_f64(v, off)?,
            "init_scale" => {
                config.init_scale = if v == "auto" { None } else { Some(parse_f64(v, off)?) }
            }
            _ => return Err(malformed(off, format!("unknown train field `{k}`"))),
        }
    }

    let mut traces = Vec::with_capacity(classes.len());
    for class in &classes {
        let (line, off) = lines.next()?;
        let f = keyed(line, "trace", off)?;
        if f.len() != 2 || f[0] != class {
            return Err(malformed(off, format!("expected trace for `{class}`")));
        }
        let t = if f[1].is_empty() {
            Vec::new()
        } else {
            f[1].split(',').map(|x| parse_f64(x, off)).collect::<Result<_, _>>()?
        };
        traces.push(t);
    }

    let mut names: Option<Vec<String>> = None;
    let mut gates = Vec::with_capacity(classes.len());
    for class in &classes {
        let (line, off) = lines.next()?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 || f[0] != class {
            return Err(malformed(off, format!("expected gate header for `{class}`")));
        }
        let bias = parse_f64(f[1], off)?;
        let n: usize = f[2].parse().map_err(|_| malformed(off, "bad predicate count"))?;
        let mut gate_names = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, off) = lines.next()?;
            let (name, w) = line
                .rsplit_once('\t')
                .ok_or_else(|| malformed(off, "expected `name TAB weight`"))?;
            let w = parse_f64(w, off)?;
            if w < 0.0 {
                return Err(malformed(off, format!("negative weight {w}")));
            }
            gate_names.push(name.to_string());
            weights.push(w);
        }
        match &names {
            None => names = Some(gate_names),
            Some(prev) if *prev != gate_names => {
                return Err(malformed(off, format!("gate `{class}` lists different predicates")))
            }
            Some(_) => {}
        }
        gates.push(WeightedAndGate::new(class.clone(), weights, bias).map_err(|e| malformed(off, e.to_string()))?);
    }
    let (line, off) = lines.next()?;
    if line != END {
        return Err(malformed(off, "expected `#end`"));
    }
    if lines.offset < text.len() {
        return Err(malformed(lines.offset, "trailing data after `#end`"));
    }

    let names = names.unwrap_or_default();
    if gates.is_empty() || names.is_empty() {
        return Err(ModelIoError::EmptyModel);
    }
    let model = LnnModel::new(names, gates, config, traces).map_err(|e| malformed(0, e.to_string()))?;
    if model.fingerprint != fingerprint {
        return Err(ModelIoError::FingerprintMismatch {
            header: fingerprint,
            computed: model.fingerprint,
        });
    }
    Ok(model)
}
