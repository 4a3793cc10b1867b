//! Binary model file format.
//!
//! Layout (all integers little-endian):
//!   magic "BNF1", version u32,
//!   mode u8, dim u32, lr f64, epochs u32, window u32, min_count u64,
//!   bucket_count u64, use_hash_buckets u8, seed u64,
//!   label count u32, labels as (len u32, utf-8 bytes),
//!   vocab count u32, tokens as (len u32, utf-8 bytes, freq u64),
//!   embedding rows u64, embedding f32s row-major, output f32s row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

use super::{Hyperparams, Model, TrainMode};

const MAGIC: &[u8; 4] = b"BNF1";
const VERSION: u32 = 1;
const MAX_STRING_LEN: u32 = 1 << 20;
const MAX_COUNT: u32 = 1 << 30;

impl TrainMode {
    fn to_byte(self) -> u8 {
        match self {
            TrainMode::Raw => 0,
            TrainMode::Mask => 1,
            TrainMode::Augment => 2,
        }
    }

    fn from_byte(b: u8) -> Result<TrainMode> {
        match b {
            0 => Ok(TrainMode::Raw),
            1 => Ok(TrainMode::Mask),
            2 => Ok(TrainMode::Augment),
            other => Err(format_err(format!("unknown training mode byte {other}"))),
        }
    }
}

fn format_err(msg: String) -> Error {
    Error::ModelFormat(msg)
}

fn map_read_err(e: std::io::Error) -> Error {
    if e.kind() == ErrorKind::UnexpectedEof {
        format_err("model file is truncated".into())
    } else {
        Error::Io(e)
    }
}

impl Model {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut writer = BufWriter::new(file);
        self.write_to(&mut writer)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model> {
        let file = File::open(path)?;
        Model::read_from(&mut BufReader::new(file))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;

        let hp = self.hyperparams();
        w.write_u8(self.mode().to_byte())?;
        w.write_u32::<LittleEndian>(hp.dim as u32)?;
        w.write_f64::<LittleEndian>(hp.lr)?;
        w.write_u32::<LittleEndian>(hp.epochs as u32)?;
        w.write_u32::<LittleEndian>(hp.window as u32)?;
        w.write_u64::<LittleEndian>(hp.min_count)?;
        w.write_u64::<LittleEndian>(hp.bucket_count as u64)?;
        w.write_u8(hp.use_hash_buckets as u8)?;
        w.write_u64::<LittleEndian>(hp.seed)?;

        w.write_u32::<LittleEndian>(self.labels().len() as u32)?;
        for label in self.labels() {
            write_string(w, label)?;
        }

        let vocab = self.vocab();
        w.write_u32::<LittleEndian>(vocab.len() as u32)?;
        for id in 0..vocab.len() {
            write_string(w, vocab.token(id))?;
            w.write_u64::<LittleEndian>(vocab.freq(id))?;
        }

        w.write_u64::<LittleEndian>(self.embeddings().rows() as u64)?;
        for &v in self.embeddings().as_slice() {
            w.write_f32::<LittleEndian>(v)?;
        }
        for &v in self.output().as_slice() {
            w.write_f32::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Model> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(map_read_err)?;
        if &magic != MAGIC {
            return Err(format_err("not a model file (bad magic)".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(map_read_err)?;
        if version != VERSION {
            return Err(format_err(format!(
                "unsupported model file version {version} (expected {VERSION})"
            )));
        }

        let mode = TrainMode::from_byte(r.read_u8().map_err(map_read_err)?)?;
        let dim = r.read_u32::<LittleEndian>().map_err(map_read_err)? as usize;
        let lr = r.read_f64::<LittleEndian>().map_err(map_read_err)?;
        let epochs = r.read_u32::<LittleEndian>().map_err(map_read_err)? as usize;
        let window = r.read_u32::<LittleEndian>().map_err(map_read_err)? as usize;
        let min_count = r.read_u64::<LittleEndian>().map_err(map_read_err)?;
        let bucket_count = r.read_u64::<LittleEndian>().map_err(map_read_err)? as usize;
        let use_hash_buckets = match r.read_u8().map_err(map_read_err)? {
            0 => false,
            1 => true,
            other => return Err(format_err(format!("invalid hash-bucket flag {other}"))),
        };
        let seed = r.read_u64::<LittleEndian>().map_err(map_read_err)?;
        let hp = Hyperparams {
            dim,
            lr,
            epochs,
            window,
            min_count,
            bucket_count,
            use_hash_buckets,
            seed,
        };

        let n_labels = read_count(r, "label")?;
        let mut labels = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            labels.push(read_string(r)?);
        }

        let n_tokens = read_count(r, "vocab")?;
        let mut tokens = Vec::with_capacity(n_tokens);
        let mut freqs = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            tokens.push(read_string(r)?);
            freqs.push(r.read_u64::<LittleEndian>().map_err(map_read_err)?);
        }

        let e_rows = r.read_u64::<LittleEndian>().map_err(map_read_err)? as usize;
        let expected_rows = n_tokens + if use_hash_buckets { bucket_count } else { 0 };
        if e_rows != expected_rows {
            return Err(format_err(format!(
                "embedding row count {e_rows} does not match vocabulary ({expected_rows} expected)"
            )));
        }
        let mut embeddings = vec![0.0f32; e_rows * dim];
        r.read_f32_into::<LittleEndian>(&mut embeddings)
            .map_err(map_read_err)?;
        let mut output = vec![0.0f32; n_labels * dim];
        r.read_f32_into::<LittleEndian>(&mut output)
            .map_err(map_read_err)?;

        let mut probe = [0u8; 1];
        match r.read(&mut probe) {
            Ok(0) => {}
            Ok(_) => return Err(format_err("model file has trailing data".into())),
            Err(e) => return Err(Error::Io(e)),
        }

        Model::from_parts(hp, mode, tokens, freqs, labels, embeddings, output)
    }
}

fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    w.write_u32::<LittleEndian>(bytes.len() as u32)?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>().map_err(map_read_err)?;
    if len > MAX_STRING_LEN {
        return Err(format_err(format!("string length {len} is implausible")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf).map_err(map_read_err)?;
    String::from_utf8(buf).map_err(|_| format_err("string is not valid UTF-8".into()))
}

fn read_count<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    let n = r.read_u32::<LittleEndian>().map_err(map_read_err)?;
    if n > MAX_COUNT {
        return Err(format_err(format!("{what} count {n} is implausible")));
    }
    Ok(n as usize)
}
