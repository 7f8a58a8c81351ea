//! Checkpoint format: one line of JSON header, then the `w` values as
//! little-endian `f64`, row-major (ζ outer, θ inner), followed by the
//! previous-step field when the header says so.

use std::io::{BufRead, Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::field::{FlowState, LogField};
use crate::grid::CylGrid;

const MAGIC: &str = "cuspflow-checkpoint";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    zeta: Vec<f64>,
    zeta_split: f64,
    n_theta: usize,
    t: f64,
    step_index: u64,
    last_dt: f64,
    has_prev: bool,
    config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: FlowState,
    pub config_hash: String,
}

pub fn write_checkpoint<W: Write>(out: &mut W, state: &FlowState, config_hash: &str) -> Result<()> {
    let header = Header {
        format: MAGIC.into(),
        version: 1,
        zeta: state.grid.zeta().to_vec(),
        zeta_split: state.grid.zeta_split(),
        n_theta: state.grid.n_theta(),
        t: state.t,
        step_index: state.step_index,
        last_dt: state.last_dt,
        has_prev: state.prev_w.is_some(),
        config_hash: config_hash.into(),
    };
    let line = serde_json::to_string(&header).map_err(|e| FlowError::Format(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    write_block(out, state.w.values())?;
    if let Some(p) = &state.prev_w {
        write_block(out, p.values())?;
    }
    Ok(())
}

fn write_block<W: Write>(out: &mut W, a: &Array2<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(a.len() * 8);
    for x in a.iter() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(input: &mut R) -> Result<Checkpoint> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let h: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| FlowError::Format(format!("checkpoint header: {e}")))?;
    if h.format != MAGIC || h.version != 1 {
        return Err(FlowError::Format(format!(
            "not a version-1 checkpoint: {} v{}",
            h.format, h.version
        )));
    }
    let grid = CylGrid::from_nodes(h.zeta, h.n_theta, h.zeta_split)?;
    let shape = grid.shape();
    let w = LogField::new(read_block(input, shape)?)?;
    let prev_w = if h.has_prev {
        Some(LogField::new(read_block(input, shape)?)?)
    } else {
        None
    };
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(FlowError::Format(format!(
            "{} trailing bytes after checkpoint data",
            rest.len()
        )));
    }
    let mut state = FlowState::new(grid, w, h.t)?;
    state.step_index = h.step_index;
    state.last_dt = h.last_dt;
    state.prev_w = prev_w;
    Ok(Checkpoint {
        state,
        config_hash: h.config_hash,
    })
}

fn read_block<R: Read>(input: &mut R, shape: (usize, usize)) -> Result<Array2<f64>> {
    let n = shape.0 * shape.1;
    let mut buf = vec![0u8; n * 8];
    input
        .read_exact(&mut buf)
        .map_err(|e| FlowError::Format(format!("checkpoint data truncated: {e}")))?;
    let vals: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Array2::from_shape_vec(shape, vals).map_err(|e| FlowError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_data_is_rejected() {
        let g = CylGrid::uniform(-2.0, 3.0, 6, 4).unwrap();
        let w = LogField::from_fn(&g, |z, th| z + th.sin()).unwrap();
        let s = FlowState::new(g, w, 0.25).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s, "abc").unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_checkpoint(&mut buf.as_slice()),
            Err(FlowError::Format(_))
        ));
    }
}
