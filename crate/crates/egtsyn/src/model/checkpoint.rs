//! Versioned structured-text checkpoints: the model config, training
//! metadata, and every named parameter tensor with full-precision values.
//!
//! Values are written with Rust's shortest round-trip float formatting,
//! so a save/load cycle reproduces parameters bitwise.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::{Model, ModelConfig, ModelError, Pooling, Variant};
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint truncated: missing {0}")]
    Missing(&'static str),
    #[error("unsupported format_version `{found}`; this build reads version {supported}")]
    UnsupportedVersion { found: String, supported: u32 },
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("parameter {name}: expected {expected} values, found {found}")]
    ValueCount {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("parameter {0} missing from checkpoint")]
    MissingParam(String),
    #[error("parameter {0} not part of this architecture")]
    UnknownParam(String),
    #[error("parameter {name}: checkpoint shape {found:?} does not match config shape {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("checkpoint config rejected: {0}")]
    Config(#[from] ModelError),
}

/// A deserialized checkpoint: the reconstructed model plus the training
/// metadata recorded at save time.
#[derive(Debug)]
pub struct LoadedCheckpoint {
    pub model: Model,
    pub epoch: usize,
    pub loss: f64,
}

/// Serializes a model with its training metadata.
pub fn render_checkpoint(model: &Model, epoch: usize, loss: f64) -> String {
    let c = model.config();
    let mut out = String::new();
    let _ = writeln!(out, "format_version {FORMAT_VERSION}");
    let _ = writeln!(out, "variant {}", c.variant);
    let _ = writeln!(out, "gcn_layers {}", c.gcn_layers);
    let _ = writeln!(out, "gcn_hidden {}", c.gcn_hidden);
    let _ = writeln!(out, "graph_embed_dim {}", c.graph_embed_dim);
    let _ = writeln!(out, "attention_heads {}", c.attention_heads);
    let _ = writeln!(out, "ffn_hidden {}", c.ffn_hidden);
    let _ = writeln!(out, "cell_input_dim {}", c.cell_input_dim);
    let _ = writeln!(out, "cell_hidden {} {}", c.cell_hidden.0, c.cell_hidden.1);
    let _ = writeln!(out, "cell_embed_dim {}", c.cell_embed_dim);
    let _ = writeln!(out, "head_hidden {} {}", c.head_hidden.0, c.head_hidden.1);
    let _ = writeln!(out, "dropout_rate {}", c.dropout_rate);
    let _ = writeln!(out, "pooling {}", c.pooling);
    let _ = writeln!(out, "seed {}", c.seed);
    let _ = writeln!(out, "epoch {epoch}");
    let _ = writeln!(out, "loss {loss}");
    for (name, tensor) in model.names.iter().zip(&model.values) {
        let _ = writeln!(out, "param {} {} {}", name, tensor.rows(), tensor.cols());
        let mut first = true;
        for v in tensor.data() {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn write_checkpoint(
    path: &Path,
    model: &Model,
    epoch: usize,
    loss: f64,
) -> Result<(), CheckpointError> {
    fs::write(path, render_checkpoint(model, epoch, loss))?;
    Ok(())
}

fn header_value<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    key: &'static str,
) -> Result<&'a str, CheckpointError> {
    let line = lines.next().ok_or(CheckpointError::Missing(key))?;
    match line.split_once(' ') {
        Some((k, rest)) if k == key => Ok(rest),
        _ => Err(CheckpointError::Malformed {
            what: key,
            detail: format!("expected `{key} <value>`, found `{line}`"),
        }),
    }
}

fn parse_num<T: FromStr>(raw: &str, what: &'static str) -> Result<T, CheckpointError> {
    raw.parse().map_err(|_| CheckpointError::Malformed {
        what,
        detail: format!("cannot parse `{raw}`"),
    })
}

fn parse_pair(raw: &str, what: &'static str) -> Result<(usize, usize), CheckpointError> {
    let mut parts = raw.split_whitespace();
    let first = parts.next().ok_or(CheckpointError::Missing(what))?;
    let second = parts.next().ok_or(CheckpointError::Missing(what))?;
    if parts.next().is_some() {
        return Err(CheckpointError::Malformed {
            what,
            detail: format!("expected two widths, found `{raw}`"),
        });
    }
    Ok((parse_num(first, what)?, parse_num(second, what)?))
}

/// Parses a checkpoint document, rebuilding the model it describes.
pub fn parse_checkpoint(text: &str) -> Result<LoadedCheckpoint, CheckpointError> {
    let mut lines = text.lines();
    let version = header_value(&mut lines, "format_version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(CheckpointError::UnsupportedVersion {
            found: version.to_string(),
            supported: FORMAT_VERSION,
        });
    }
    let variant = Variant::parse(header_value(&mut lines, "variant")?)?;
    let config = ModelConfig {
        variant,
        gcn_layers: parse_num(header_value(&mut lines, "gcn_layers")?, "gcn_layers")?,
        gcn_hidden: parse_num(header_value(&mut lines, "gcn_hidden")?, "gcn_hidden")?,
        graph_embed_dim: parse_num(
            header_value(&mut lines, "graph_embed_dim")?,
            "graph_embed_dim",
        )?,
        attention_heads: parse_num(
            header_value(&mut lines, "attention_heads")?,
            "attention_heads",
        )?,
        ffn_hidden: parse_num(header_value(&mut lines, "ffn_hidden")?, "ffn_hidden")?,
        cell_input_dim: parse_num(
            header_value(&mut lines, "cell_input_dim")?,
            "cell_input_dim",
        )?,
        cell_hidden: parse_pair(header_value(&mut lines, "cell_hidden")?, "cell_hidden")?,
        cell_embed_dim: parse_num(
            header_value(&mut lines, "cell_embed_dim")?,
            "cell_embed_dim",
        )?,
        head_hidden: parse_pair(header_value(&mut lines, "head_hidden")?, "head_hidden")?,
        dropout_rate: parse_num(header_value(&mut lines, "dropout_rate")?, "dropout_rate")?,
        pooling: Pooling::parse(header_value(&mut lines, "pooling")?)?,
        seed: parse_num(header_value(&mut lines, "seed")?, "seed")?,
    };
    let epoch = parse_num(header_value(&mut lines, "epoch")?, "epoch")?;
    let loss = parse_num(header_value(&mut lines, "loss")?, "loss")?;

    let mut loaded: HashMap<String, Tensor> = HashMap::new();
    while let Some(line) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        if parts.next() != Some("param") {
            return Err(CheckpointError::Malformed {
                what: "param header",
                detail: format!("expected `param <name> <rows> <cols>`, found `{line}`"),
            });
        }
        let name = parts
            .next()
            .ok_or(CheckpointError::Missing("param name"))?
            .to_string();
        let rows: usize = parse_num(
            parts.next().ok_or(CheckpointError::Missing("param rows"))?,
            "param rows",
        )?;
        let cols: usize = parse_num(
            parts.next().ok_or(CheckpointError::Missing("param cols"))?,
            "param cols",
        )?;
        let values_line = lines
            .next()
            .ok_or(CheckpointError::Missing("param values"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for raw in values_line.split_whitespace() {
            data.push(parse_num::<f64>(raw, "param value")?);
        }
        if data.len() != rows * cols {
            return Err(CheckpointError::ValueCount {
                name,
                expected: rows * cols,
                found: data.len(),
            });
        }
        let tensor = Tensor::new(rows, cols, data).map_err(|e| CheckpointError::Malformed {
            what: "param shape",
            detail: e.to_string(),
        })?;
        if loaded.insert(name.clone(), tensor).is_some() {
            return Err(CheckpointError::Malformed {
                what: "param header",
                detail: format!("parameter {name} appears twice"),
            });
        }
    }

    let mut model = Model::new(config)?;
    install_values(&mut model, loaded)?;
    Ok(LoadedCheckpoint { model, epoch, loss })
}

pub fn read_checkpoint(path: &Path) -> Result<LoadedCheckpoint, CheckpointError> {
    parse_checkpoint(&fs::read_to_string(path)?)
}

/// Copies loaded tensors into the freshly built model, insisting on an
/// exact match between the architecture's parameter set and the
/// checkpoint's.
pub(super) fn install_values(
    model: &mut Model,
    mut loaded: HashMap<String, Tensor>,
) -> Result<(), CheckpointError> {
    for (name, tensor) in model.names.iter().zip(model.values.iter_mut()) {
        let source = loaded
            .remove(name)
            .ok_or_else(|| CheckpointError::MissingParam(name.clone()))?;
        if source.shape() != tensor.shape() {
            return Err(CheckpointError::ShapeMismatch {
                name: name.clone(),
                expected: tensor.shape(),
                found: source.shape(),
            });
        }
        tensor.data_mut().copy_from_slice(source.data());
    }
    let mut extra: Vec<String> = loaded.into_keys().collect();
    extra.sort();
    if let Some(name) = extra.into_iter().next() {
        return Err(CheckpointError::UnknownParam(name));
    }
    Ok(())
}
