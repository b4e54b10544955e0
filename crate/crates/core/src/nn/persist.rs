//! Plain-text network format.
//!
//! ```text
//! dense-network 1 <layers>
//! <outputs> <inputs> <activation>
//! <row 0 of weights>
//! ...
//! <row outputs-1 of weights>
//! <bias>
//! ...
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! loaded network reproduces the saved one bit for bit.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use super::{Activation, DenseLayer, DenseNetwork, Real};
use crate::error::{Error, Result};

const MAGIC: &str = "dense-network";
const VERSION: u32 = 1;

pub fn save_network<F: Real, W: Write>(net: &DenseNetwork<F>, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC} {VERSION} {}", net.layers().len())?;
    for layer in net.layers() {
        writeln!(
            out,
            "{} {} {}",
            layer.outputs(),
            layer.inputs(),
            layer.activation.tag()
        )?;
        for row in layer.weights.rows() {
            write_row(&mut out, row.iter())?;
        }
        write_row(&mut out, layer.bias.iter())?;
    }
    Ok(())
}

fn write_row<'a, F: Real, W: Write>(
    out: &mut W,
    values: impl Iterator<Item = &'a F>,
) -> Result<()> {
    let line = values.map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(out, "{line}")?;
    Ok(())
}

/// Reads a network written by [`save_network`], consuming exactly its lines.
pub fn load_network<F: Real, R: BufRead>(input: &mut R) -> Result<DenseNetwork<F>> {
    let header = next_line(input)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != MAGIC {
        return Err(Error::Parse(format!("bad network header `{header}`")));
    }
    let version: u32 = parse(fields[1])?;
    if version != VERSION {
        return Err(Error::Parse(format!(
            "unsupported network format version {version}"
        )));
    }
    let count: usize = parse(fields[2])?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let dims = next_line(input)?;
        let dims: Vec<&str> = dims.split_whitespace().collect();
        if dims.len() != 3 {
            return Err(Error::Parse("bad layer header".into()));
        }
        let outputs: usize = parse(dims[0])?;
        let inputs: usize = parse(dims[1])?;
        let activation = Activation::from_tag(dims[2])?;
        let mut weights = Vec::with_capacity(outputs * inputs);
        for _ in 0..outputs {
            weights.extend(parse_row::<F>(&next_line(input)?, inputs)?);
        }
        let bias = parse_row::<F>(&next_line(input)?, outputs)?;
        layers.push(DenseLayer {
            weights: Array2::from_shape_vec((outputs, inputs), weights)
                .map_err(|e| Error::Parse(e.to_string()))?,
            bias: Array1::from(bias),
            activation,
        });
    }
    DenseNetwork::new(layers)
}

pub(crate) fn next_line<R: BufRead>(input: &mut R) -> Result<String> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Err(Error::Parse("unexpected end of file".into()));
    }
    Ok(line.trim_end().to_string())
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

fn parse_row<F: Real>(line: &str, expected: usize) -> Result<Vec<F>> {
    let values = line
        .split_whitespace()
        .map(parse::<F>)
        .collect::<Result<Vec<F>>>()?;
    if values.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}
