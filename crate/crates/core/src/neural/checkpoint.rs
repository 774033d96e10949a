//! `OFSMLP01` checkpoints.
//!
//! ```text
//! magic        8 bytes  "OFSMLP01"
//! input_dim    u32
//! n_hidden     u32
//! hidden dims  n_hidden x u32
//! output_dim   u32
//! hidden act   u8   (1 relu)
//! output act   u8   (2 sigmoid, 3 softmax)
//! dropout      f64
//! per layer    weights (out x in, row-major) f64, then bias (out) f64
//! ```
//! Integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, Layer, MlpArchitecture, MlpParams};
use crate::binio::{self, CheckpointError};

pub const MAGIC: &[u8; 8] = b"OFSMLP01";

/// Guard against absurd headers before allocating.
const MAX_WIDTH: u32 = 1 << 20;
const MAX_HIDDEN_LAYERS: u32 = 64;

pub fn write_mlp<W: Write>(
    w: &mut W,
    arch: &MlpArchitecture,
    params: &MlpParams,
) -> Result<(), CheckpointError> {
    if !params.fits(arch) {
        return Err(CheckpointError::Invalid(
            "parameters do not match the architecture".into(),
        ));
    }
    let u32_of = |n: usize| {
        u32::try_from(n).map_err(|_| CheckpointError::Invalid(format!("width {n} too large")))
    };
    w.write_all(MAGIC)?;
    binio::write_u32(w, u32_of(arch.input_dim)?)?;
    binio::write_u32(w, u32_of(arch.hidden.len())?)?;
    for &h in &arch.hidden {
        binio::write_u32(w, u32_of(h)?)?;
    }
    binio::write_u32(w, u32_of(arch.output_dim)?)?;
    binio::write_u8(w, arch.hidden_activation.code())?;
    binio::write_u8(w, arch.output_activation.code())?;
    binio::write_f64(w, arch.dropout_rate)?;
    for layer in params.layers() {
        binio::write_f64s(w, layer.weights())?;
        binio::write_f64s(w, layer.bias())?;
    }
    Ok(())
}

fn read_width<R: Read>(r: &mut R) -> Result<usize, CheckpointError> {
    let v = binio::read_u32(r).map_err(CheckpointError::from_read)?;
    if v == 0 || v > MAX_WIDTH {
        return Err(CheckpointError::Invalid(format!("layer width {v}")));
    }
    Ok(v as usize)
}

pub fn read_mlp<R: Read>(r: &mut R) -> Result<(MlpArchitecture, MlpParams), CheckpointError> {
    binio::expect_magic(r, MAGIC)?;
    let input_dim = read_width(r)?;
    let n_hidden = binio::read_u32(r).map_err(CheckpointError::from_read)?;
    if n_hidden > MAX_HIDDEN_LAYERS {
        return Err(CheckpointError::Invalid(format!(
            "{n_hidden} hidden layers"
        )));
    }
    let hidden = (0..n_hidden)
        .map(|_| read_width(r))
        .collect::<Result<Vec<_>, _>>()?;
    let output_dim = read_width(r)?;
    let act = |code: u8| {
        Activation::from_code(code)
            .ok_or_else(|| CheckpointError::Invalid(format!("activation code {code}")))
    };
    let hidden_activation = act(binio::read_u8(r).map_err(CheckpointError::from_read)?)?;
    let output_activation = act(binio::read_u8(r).map_err(CheckpointError::from_read)?)?;
    let dropout_rate = binio::read_f64(r).map_err(CheckpointError::from_read)?;
    let arch = MlpArchitecture {
        input_dim,
        hidden,
        output_dim,
        hidden_activation,
        output_activation,
        dropout_rate,
    };
    arch.validate()
        .map_err(|e| CheckpointError::Invalid(e.to_string()))?;

    let mut layers = Vec::new();
    for (fan_in, fan_out) in arch.layer_dims() {
        let weights = binio::read_f64s(r, fan_in * fan_out).map_err(CheckpointError::from_read)?;
        let bias = binio::read_f64s(r, fan_out).map_err(CheckpointError::from_read)?;
        layers
            .push(Layer::new(fan_in, fan_out, weights, bias).expect("sizes match by construction"));
    }
    if !binio::at_eof(r)? {
        return Err(CheckpointError::TrailingBytes);
    }
    let params = MlpParams::from_layers(&arch, layers).expect("shape matches by construction");
    if !params.is_finite() {
        return Err(CheckpointError::Invalid("non-finite parameter".into()));
    }
    Ok((arch, params))
}

pub fn save_mlp(
    path: &Path,
    arch: &MlpArchitecture,
    params: &MlpParams,
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mlp(&mut w, arch, params)?;
    w.flush()?;
    Ok(())
}

pub fn load_mlp(path: &Path) -> Result<(MlpArchitecture, MlpParams), CheckpointError> {
    read_mlp(&mut BufReader::new(File::open(path)?))
}
