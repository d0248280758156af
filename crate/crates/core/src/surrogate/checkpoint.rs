//! Binary model checkpoints.
//!
//! Layout (all integers and reals little-endian):
//!
//! ```text
//! magic      4 bytes  "NMSG"
//! version    u32
//! kind       u8       0 = single network, 1 = multi-stage
//! max_digit  u8
//! kind 0:    network
//! kind 1:    bins u32, then (lo f64, hi f64) per bin, router network,
//!            one expert network per bin
//!
//! network:   hidden activation u8, output activation u8 (0 relu,
//!            1 identity, 2 sigmoid), layer count u32, dims u32 each,
//!            parameter count u64, parameters f64 each
//! ```

use std::io::{Read, Write};

use super::net::{Activation, DenseNet};
use super::{MultiStageModel, Surrogate, SurrogateError};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"NMSG";
const MAX_DIMS: u32 = 64;

pub fn write_checkpoint<W: Write>(model: &Surrogate, mut out: W) -> Result<(), SurrogateError> {
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    match model {
        Surrogate::Mlp { max_digit, net } => {
            out.write_all(&[0, *max_digit])?;
            write_net(net, &mut out)?;
        }
        Surrogate::MultiStage { max_digit, model } => {
            out.write_all(&[1, *max_digit])?;
            out.write_all(&(model.bins().len() as u32).to_le_bytes())?;
            for (lo, hi) in model.bins() {
                out.write_all(&lo.to_le_bytes())?;
                out.write_all(&hi.to_le_bytes())?;
            }
            write_net(model.router(), &mut out)?;
            for e in model.experts() {
                write_net(e, &mut out)?;
            }
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Surrogate, SurrogateError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SurrogateError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(SurrogateError::Checkpoint(format!("unsupported version {version}")));
    }
    let kind = read_u8(&mut input)?;
    let max_digit = read_u8(&mut input)?;
    match kind {
        0 => Ok(Surrogate::Mlp {
            max_digit,
            net: read_net(&mut input)?,
        }),
        1 => {
            let count = read_u32(&mut input)?;
            if count == 0 || count > MAX_DIMS {
                return Err(SurrogateError::Checkpoint(format!("bad bin count {count}")));
            }
            let mut bins = Vec::with_capacity(count as usize);
            for _ in 0..count {
                bins.push((read_f64(&mut input)?, read_f64(&mut input)?));
            }
            let router = read_net(&mut input)?;
            let experts = (0..count).map(|_| read_net(&mut input)).collect::<Result<_, _>>()?;
            Ok(Surrogate::MultiStage {
                max_digit,
                model: MultiStageModel::from_parts(bins, experts, router)?,
            })
        }
        other => Err(SurrogateError::Checkpoint(format!("unknown model kind {other}"))),
    }
}

fn write_net<W: Write>(net: &DenseNet, out: &mut W) -> Result<(), SurrogateError> {
    out.write_all(&[net.hidden_activation().code(), net.output_activation().code()])?;
    out.write_all(&(net.dims().len() as u32).to_le_bytes())?;
    for d in net.dims() {
        out.write_all(&(*d as u32).to_le_bytes())?;
    }
    out.write_all(&(net.params().len() as u64).to_le_bytes())?;
    for p in net.params() {
        out.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_net<R: Read>(input: &mut R) -> Result<DenseNet, SurrogateError> {
    let activation = |code: u8| {
        Activation::from_code(code).ok_or_else(|| SurrogateError::Checkpoint(format!("bad activation {code}")))
    };
    let hidden = activation(read_u8(input)?)?;
    let output = activation(read_u8(input)?)?;
    let layers = read_u32(input)?;
    if !(2..=MAX_DIMS).contains(&layers) {
        return Err(SurrogateError::Checkpoint(format!("bad layer count {layers}")));
    }
    let dims = (0..layers)
        .map(|_| read_u32(input).map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let count = read_u64(input)?;
    let expected: u64 = dims.windows(2).map(|w| (w[0] * w[1] + w[1]) as u64).sum();
    if count != expected {
        return Err(SurrogateError::Checkpoint(format!("parameter count {count}, dims imply {expected}")));
    }
    let params = (0..count).map(|_| read_f64(input)).collect::<Result<Vec<_>, _>>()?;
    if params.iter().any(|p| !p.is_finite()) {
        return Err(SurrogateError::Checkpoint("non-finite parameter".into()));
    }
    DenseNet::from_params(dims, hidden, output, params)
}

fn read_u8<R: Read>(input: &mut R) -> Result<u8, SurrogateError> {
    let mut b = [0u8; 1];
    input.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, SurrogateError> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64, SurrogateError> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64, SurrogateError> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RunRng;

    #[test]
    fn round_trips_both_kinds() {
        let mut rng = RunRng::new(4);
        for model in [
            Surrogate::mlp(5, &[3, 2], 7, 0.1, &mut rng).unwrap(),
            Surrogate::multi_stage(5, &[3], 7, 4, 0.1, &mut rng).unwrap(),
        ] {
            let mut bytes = Vec::new();
            write_checkpoint(&model, &mut bytes).unwrap();
            assert_eq!(&bytes[..4], b"NMSG");
            assert_eq!(read_checkpoint(bytes.as_slice()).unwrap(), model);
        }
    }

    #[test]
    fn rejects_other_versions() {
        let model = Surrogate::mlp(2, &[2], 3, 0.1, &mut RunRng::new(0)).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&model, &mut bytes).unwrap();
        bytes[4] = 9;
        assert!(matches!(read_checkpoint(bytes.as_slice()), Err(SurrogateError::Checkpoint(_))));
    }
}
