//! Binary container for quantized models.
//!
//! Little-endian layout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ECQ1"
//! 4       2     version (u16) = 1
//! 6       1     family: 0 gmm, 1 dnn-sigmoid, 2 dnn-relu, 3 svm-linear
//! 7       1     reserved (0)
//! 8       2     input dim (u16)
//! 10      1     q integer bits
//! 11      1     q fractional bits
//! 12      1     lut descriptor count
//! 13      21*k  per lut: function (u8), lo (f64), hi (f64), size (u32)
//! ...           family payload (below), raw values as i32
//! ```
//!
//! Payloads:
//! - gmm: components (u16), then twice (target, background): means m*d,
//!   scales m*d, log normalizers m.
//! - dnn: layers (u16), hidden (u16), per layer weights h*fan_in then
//!   biases h, output weights h, output bias.
//! - svm-linear: support vectors (u32), vectors sv*d, coeffs sv, bias.
//!
//! Lookup tables are persisted as descriptors and resampled on load.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::engine::{QLayer, QuantizedDnn, QuantizedGmm, QuantizedSvm};
use super::{LutFunction, QFormat, QuantizedModel};

const MAGIC: &[u8; 4] = b"ECQ1";
const VERSION: u16 = 1;

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::Format("quantized model file truncated".into()));
        }
        let slice = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i32_vec(&mut self, n: usize) -> Result<Vec<i32>> {
        (0..n).map(|_| self.i32()).collect()
    }
}

fn push_i32s(out: &mut Vec<u8>, values: &[i32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialize a quantized model.
pub fn encode_quantized(model: &QuantizedModel) -> Vec<u8> {
    let q = model.q_format();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let family: u8 = match model {
        QuantizedModel::Gmm { .. } => 0,
        QuantizedModel::Dnn { dnn, .. } => {
            if dnn.relu {
                2
            } else {
                1
            }
        }
        QuantizedModel::SvmLinear { .. } => 3,
    };
    out.push(family);
    out.push(0);
    out.extend_from_slice(&(model.input_dim() as u16).to_le_bytes());
    out.push(q.integer_bits);
    out.push(q.fractional_bits);

    let luts: Vec<(LutFunction, f64, f64, usize)> = match model {
        QuantizedModel::Gmm { gmm, .. } => vec![gmm.lut_descriptor],
        QuantizedModel::Dnn { dnn, .. } => vec![dnn.lut_descriptor],
        QuantizedModel::SvmLinear { .. } => vec![],
    };
    out.push(luts.len() as u8);
    for (function, lo, hi, size) in &luts {
        out.push(function.tag());
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
        out.extend_from_slice(&(*size as u32).to_le_bytes());
    }

    match model {
        QuantizedModel::Gmm { gmm, .. } => {
            out.extend_from_slice(&(gmm.components as u16).to_le_bytes());
            for half in [&gmm.target_raw(), &gmm.background_raw()] {
                push_i32s(&mut out, &half.0);
                push_i32s(&mut out, &half.1);
                push_i32s(&mut out, &half.2);
            }
        }
        QuantizedModel::Dnn { dnn, .. } => {
            out.extend_from_slice(&(dnn.layers.len() as u16).to_le_bytes());
            out.extend_from_slice(&(dnn.hidden as u16).to_le_bytes());
            for layer in &dnn.layers {
                push_i32s(&mut out, &layer.weight);
                push_i32s(&mut out, &layer.bias);
            }
            push_i32s(&mut out, &dnn.output_weight);
            push_i32s(&mut out, &[dnn.output_bias]);
        }
        QuantizedModel::SvmLinear { svm, .. } => {
            out.extend_from_slice(&(svm.support_vectors as u32).to_le_bytes());
            push_i32s(&mut out, &svm.vectors);
            push_i32s(&mut out, &svm.coeffs);
            push_i32s(&mut out, &[svm.bias]);
        }
    }
    out
}

/// Parse a quantized model file.
pub fn decode_quantized(bytes: &[u8]) -> Result<QuantizedModel> {
    let mut cur = Cursor { bytes, at: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("not a quantized model file".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported quantized model version {version}"
        )));
    }
    let family = cur.u8()?;
    let _reserved = cur.u8()?;
    let dim = cur.u16()? as usize;
    let q = QFormat::new(cur.u8()?, cur.u8()?)?;
    let lut_count = cur.u8()? as usize;
    let mut luts = Vec::with_capacity(lut_count);
    for _ in 0..lut_count {
        let function = LutFunction::from_tag(cur.u8()?)?;
        let lo = cur.f64()?;
        let hi = cur.f64()?;
        let size = cur.u32()? as usize;
        luts.push((function, lo, hi, size));
    }

    let mut model = match family {
        0 => {
            let lut_descriptor = *luts
                .first()
                .ok_or_else(|| Error::Format("gmm file missing lut descriptor".into()))?;
            let m = cur.u16()? as usize;
            let mut halves = Vec::with_capacity(2);
            for _ in 0..2 {
                let means = cur.i32_vec(m * dim)?;
                let scales = cur.i32_vec(m * dim)?;
                let log_norm = cur.i32_vec(m)?;
                halves.push((means, scales, log_norm));
            }
            let background = halves.pop().unwrap();
            let target = halves.pop().unwrap();
            QuantizedModel::Gmm {
                q,
                gmm: QuantizedGmm::from_raw(m, dim, target, background, lut_descriptor),
            }
        }
        1 | 2 => {
            let lut_descriptor = *luts
                .first()
                .ok_or_else(|| Error::Format("dnn file missing lut descriptor".into()))?;
            let layers = cur.u16()? as usize;
            let hidden = cur.u16()? as usize;
            let mut qlayers = Vec::with_capacity(layers);
            for l in 0..layers {
                let fan_in = if l == 0 { dim } else { hidden };
                qlayers.push(QLayer {
                    weight: cur.i32_vec(hidden * fan_in)?,
                    bias: cur.i32_vec(hidden)?,
                });
            }
            let output_weight = cur.i32_vec(hidden)?;
            let output_bias = cur.i32()?;
            QuantizedModel::Dnn {
                q,
                dnn: QuantizedDnn::from_raw(
                    dim,
                    hidden,
                    family == 2,
                    qlayers,
                    output_weight,
                    output_bias,
                    lut_descriptor,
                ),
            }
        }
        3 => {
            let support_vectors = cur.u32()? as usize;
            let vectors = cur.i32_vec(support_vectors * dim)?;
            let coeffs = cur.i32_vec(support_vectors)?;
            let bias = cur.i32()?;
            QuantizedModel::SvmLinear {
                q,
                svm: QuantizedSvm {
                    support_vectors,
                    dim,
                    vectors,
                    coeffs,
                    bias,
                },
            }
        }
        other => return Err(Error::Format(format!("unknown model family tag {other}"))),
    };
    model.rebuild_luts()?;
    Ok(model)
}

/// Write a quantized model file.
pub fn write_quantized(model: &QuantizedModel, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode_quantized(model))?;
    Ok(())
}

/// Read a quantized model file.
pub fn read_quantized(path: impl AsRef<Path>) -> Result<QuantizedModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_quantized(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::{fixed_score, QuantizedModel, DEFAULT_LUT_SIZE};
    use crate::neural::{Activation, NetworkParams};
    use crate::svm::{KernelSpec, SvmModel};

    #[test]
    fn dnn_file_round_trip_preserves_scores() {
        let net = NetworkParams::<f64>::new_dnn(5, 2, 4, Activation::Sigmoid, 3).unwrap();
        let q = QFormat::new(7, 15).unwrap();
        let original = QuantizedModel::from_dnn(&net, q, DEFAULT_LUT_SIZE).unwrap();
        let bytes = encode_quantized(&original);
        assert_eq!(&bytes[..4], b"ECQ1");
        let decoded = decode_quantized(&bytes).unwrap();
        let x = vec![0.3, -0.4, 0.7, 0.0, -1.1];
        let a = fixed_score(&x, &original).unwrap();
        let b = fixed_score(&x, &decoded).unwrap();
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.lut_reads, b.lut_reads);
    }

    #[test]
    fn svm_file_round_trip() {
        let svm = SvmModel::new(
            vec![vec![0.5, -0.25], vec![1.0, 0.75]],
            vec![0.5, -0.5],
            0.125,
            KernelSpec::Linear,
        )
        .unwrap();
        let q = QFormat::q4_11();
        let original = QuantizedModel::from_svm_linear(&svm, q).unwrap();
        let decoded = decode_quantized(&encode_quantized(&original)).unwrap();
        let a = fixed_score(&[0.4, 0.6], &original).unwrap();
        let b = fixed_score(&[0.4, 0.6], &decoded).unwrap();
        assert_eq!(a.raw, b.raw);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(decode_quantized(b"nope").is_err());
        let svm = SvmModel::new(vec![vec![0.5]], vec![1.0], 0.0, KernelSpec::Linear).unwrap();
        let bytes = encode_quantized(
            &QuantizedModel::from_svm_linear(&svm, QFormat::q4_11()).unwrap(),
        );
        assert!(decode_quantized(&bytes[..bytes.len() - 2]).is_err());
    }
}
