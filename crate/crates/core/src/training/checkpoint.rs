//! Binary checkpoint format (all integers and reals little-endian):
//!
//! ```text
//! "ZSLCKPT v1\n"
//! u64 d, u64 h, u64 m
//! u8  stage (0 inductive, 1 transductive)
//! u64 epochs completed
//! f64[] W1 (d·h), b1 (h), W2 (h·m), b2 (m)
//! u64 adam step; f64 β1, β2, ε
//! f64[] first moments, then second moments, same layout as the weights
//! u64 text length, then UTF-8 text: config `key=value` lines followed by
//!     `history=<total>,<supervised>,<unsupervised>,<regularizer>,<retained>` lines
//! u64 FNV-1a digest of every preceding byte
//! ```

use std::fmt::Write as _;
use std::hash::Hasher;
use std::io::Write as _;
use std::path::Path;

use fnv::FnvHasher;

use super::{Checkpoint, Stage, TrainConfig};
use crate::error::{Error, Result};
use crate::losses::LossBreakdown;
use crate::numerics::{AdamState, DenseMatrix, ProjectionNet};

const MAGIC: &[u8] = b"ZSLCKPT v1\n";
const MAGIC_PREFIX: &[u8] = b"ZSLCKPT ";

pub fn write_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let net = &ckpt.net;
    let mut out = Vec::with_capacity(24 * net.num_params() + 4096);
    out.extend_from_slice(MAGIC);
    for dim in [net.semantic_dim(), net.hidden_dim(), net.feature_dim()] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    out.push(match ckpt.stage {
        Stage::Inductive => 0,
        Stage::Transductive => 1,
    });
    out.extend_from_slice(&(ckpt.epoch as u64).to_le_bytes());
    push_params(&mut out, net);
    out.extend_from_slice(&ckpt.adam.step.to_le_bytes());
    for v in [ckpt.adam.beta1, ckpt.adam.beta2, ckpt.adam.epsilon] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    push_params(&mut out, &ckpt.adam.first);
    push_params(&mut out, &ckpt.adam.second);

    let mut text = ckpt.config.to_text();
    for h in &ckpt.history {
        let _ = writeln!(
            text,
            "history={:?},{:?},{:?},{:?},{}",
            h.total, h.supervised, h.unsupervised, h.regularizer, h.retained
        );
    }
    out.extend_from_slice(&(text.len() as u64).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    let digest = fnv1a(&out);
    out.extend_from_slice(&digest.to_le_bytes());
    out
}

fn push_params(out: &mut Vec<u8>, net: &ProjectionNet) {
    for block in net.segments() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Corrupt("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&d| d <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt(format!("implausible dimension {v}")))
    }

    fn reals(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Corrupt("size overflow".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn params(&mut self, d: usize, h: usize, m: usize) -> Result<ProjectionNet> {
        let area = |a: usize, b: usize| {
            a.checked_mul(b)
                .ok_or_else(|| Error::Corrupt("size overflow".into()))
        };
        let w1 = DenseMatrix::from_vec(d, h, self.reals(area(d, h)?)?)?;
        let b1 = self.reals(h)?;
        let w2 = DenseMatrix::from_vec(h, m, self.reals(area(h, m)?)?)?;
        let b2 = self.reals(m)?;
        ProjectionNet::from_parts(w1, b1, w2, b2)
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if !bytes.starts_with(MAGIC) {
        if bytes.starts_with(MAGIC_PREFIX) {
            let line = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
            return Err(Error::Version(String::from_utf8_lossy(line).into_owned()));
        }
        return Err(Error::Corrupt("missing ZSLCKPT header".into()));
    }
    if bytes.len() < MAGIC.len() + 8 {
        return Err(Error::Corrupt("truncated file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let digest = u64::from_le_bytes(tail.try_into().unwrap());
    let mut r = Reader {
        bytes: body,
        pos: MAGIC.len(),
    };
    let (d, h, m) = (r.dim()?, r.dim()?, r.dim()?);
    let stage = match r.take(1)?[0] {
        0 => Stage::Inductive,
        1 => Stage::Transductive,
        s => return Err(Error::Corrupt(format!("unknown stage tag {s}"))),
    };
    let epoch = r.dim()?;
    let net = r.params(d, h, m)?;
    let step = r.u64()?;
    let (beta1, beta2, epsilon) = (r.f64()?, r.f64()?, r.f64()?);
    let first = r.params(d, h, m)?;
    let second = r.params(d, h, m)?;
    let text_len = r.dim()?;
    let text = std::str::from_utf8(r.take(text_len)?)
        .map_err(|_| Error::Corrupt("config block is not UTF-8".into()))?;
    if r.pos != body.len() {
        return Err(Error::Corrupt("trailing bytes after config block".into()));
    }
    if fnv1a(body) != digest {
        return Err(Error::Corrupt("digest mismatch".into()));
    }

    let mut config_text = String::new();
    let mut history = Vec::new();
    for line in text.lines() {
        match line.strip_prefix("history=") {
            Some(rest) => history.push(parse_history(rest)?),
            None => {
                config_text.push_str(line);
                config_text.push('\n');
            }
        }
    }
    if history.len() != epoch {
        return Err(Error::Corrupt(format!(
            "history has {} entries for {epoch} epochs",
            history.len()
        )));
    }
    Ok(Checkpoint {
        net,
        adam: AdamState {
            step,
            first,
            second,
            beta1,
            beta2,
            epsilon,
        },
        config: TrainConfig::from_text(&config_text)?,
        stage,
        epoch,
        history,
    })
}

fn parse_history(s: &str) -> Result<LossBreakdown> {
    let bad = || Error::Corrupt(format!("bad history line {s:?}"));
    let f: Vec<&str> = s.split(',').collect();
    if f.len() != 5 {
        return Err(bad());
    }
    let real = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
    Ok(LossBreakdown {
        total: real(0)?,
        supervised: real(1)?,
        unsupervised: real(2)?,
        regularizer: real(3)?,
        retained: f[4].parse().map_err(|_| bad())?,
    })
}

/// Writes via a temporary file in the target directory, renamed on success.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = write_checkpoint(ckpt);
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp_path = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("checkpoint")
    ));
    let mut f = std::fs::File::create(&tmp_path).map_err(|e| Error::io(&tmp_path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&tmp_path, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp_path, e))?;
    std::fs::rename(&tmp_path, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}
