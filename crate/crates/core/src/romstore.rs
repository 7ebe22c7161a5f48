//! `.nrom` archives: a UTF-8 `key: value` header followed by named binary
//! blocks of little-endian `f64`, each with a CRC32, and a trailer CRC32 over
//! the whole file.
//!
//! ```text
//! nrom
//! format_version: 1
//! model: aerofoil3dof
//! ...
//! end_header
//! [u16 name_len][name][u64 count][count x f64][u32 crc]   (repeated)
//! NROMEND\0[u32 crc of everything before]
//! ```
//!
//! Complex arrays are stored as interleaved `(re, im)` pairs, matrices
//! column-major.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::eig::CMatrix;
use crate::error::{Error, Result};
use crate::reduction::{BasisSelection, EigenBasis, ModeKind, PairRanking, ReducedModel, RomMetadata, RomOrder};
use crate::statespace::{FomModel, TrimState};

pub const FORMAT_VERSION: u32 = 1;
pub const EXTENSION: &str = "nrom";
const MAGIC: &str = "nrom";
const TRAILER: &[u8; 8] = b"NROMEND\0";

/// Header information that travels with a reduced model.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub model: String,
    /// Hex SHA-256 of the model description and trim state.
    pub fingerprint: String,
    pub selection: Option<BasisSelection>,
    pub created_unix: u64,
}

impl Provenance {
    pub fn new(model: &dyn FomModel, trim: &TrimState, selection: Option<BasisSelection>) -> Self {
        Self {
            model: model.name().to_string(),
            fingerprint: fingerprint(model, trim),
            selection,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchiveSummary {
    pub path: PathBuf,
    pub bytes: u64,
    pub fingerprint: String,
}

/// SHA-256 over the model's parameter description and the trim state bits.
pub fn fingerprint(model: &dyn FomModel, trim: &TrimState) -> String {
    let mut h = Sha256::new();
    h.update(model.describe().as_bytes());
    for part in [&trim.w0, &trim.uc0, &trim.ud0] {
        h.update((part.len() as u64).to_le_bytes());
        for v in part.iter() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Fails unless the archive was built from `model` at `trim`.
pub fn check_fingerprint(prov: &Provenance, model: &dyn FomModel, trim: &TrimState) -> Result<()> {
    let fp = fingerprint(model, trim);
    if fp != prov.fingerprint {
        return Err(Error::Archive {
            path: PathBuf::new(),
            reason: format!(
                "fingerprint mismatch: archive built for {} ({}), current model gives {}",
                prov.model, prov.fingerprint, fp
            ),
        });
    }
    Ok(())
}

fn selection_text(s: &BasisSelection) -> String {
    format!(
        "n_real={} n_complex={} origin_radius={} ranking={}",
        s.n_real,
        s.n_complex,
        s.origin_radius,
        s.ranking.label()
    )
}

fn parse_selection(text: &str) -> Option<BasisSelection> {
    let mut sel = BasisSelection::default();
    for part in text.split_whitespace() {
        let (k, v) = part.split_once('=')?;
        match k {
            "n_real" => sel.n_real = v.parse().ok()?,
            "n_complex" => sel.n_complex = v.parse().ok()?,
            "origin_radius" => sel.origin_radius = v.parse().ok()?,
            "ranking" => sel.ranking = PairRanking::from_label(v)?,
            _ => return None,
        }
    }
    Some(sel)
}

fn complex_values(values: &[Complex64]) -> Vec<f64> {
    values.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn put_block(out: &mut Vec<u8>, name: &str, data: &[f64]) {
    let start = out.len();
    out.extend((name.len() as u16).to_le_bytes());
    out.extend(name.as_bytes());
    out.extend((data.len() as u64).to_le_bytes());
    for v in data {
        out.extend(v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend(crc.to_le_bytes());
}

/// Serializes a reduced model. Only the `created_unix` header line depends on
/// anything but `rom` and `prov`.
pub fn encode(rom: &ReducedModel, prov: &Provenance) -> Result<Vec<u8>> {
    rom.validate()?;
    Ok(encode_unchecked(rom, prov))
}

fn encode_unchecked(rom: &ReducedModel, prov: &Provenance) -> Vec<u8> {
    let m = rom.m();
    let mut header = String::new();
    let mut line = |k: &str, v: String| header.push_str(&format!("{k}: {v}\n"));
    line("format_version", FORMAT_VERSION.to_string());
    line("model", prov.model.clone());
    line("model_fingerprint", prov.fingerprint.clone());
    line("order", rom.order.as_int().to_string());
    line("m", m.to_string());
    line("m_extended", rom.extended_len().to_string());
    line("n", rom.basis.n().to_string());
    line("n_c", rom.uc0.len().to_string());
    line("n_d", rom.ud0.len().to_string());
    line(
        "kinds",
        rom.basis.kinds.iter().map(|k| k.label()).collect::<Vec<_>>().join(","),
    );
    line("epsilon", format!("{:e}", rom.epsilon));
    line("epsilon_cubic", format!("{:e}", rom.meta.epsilon_cubic));
    line("residual_evaluations", rom.meta.residual_evaluations.to_string());
    line(
        "stencil_evaluations",
        format!("{},{}", rom.meta.stencil_evaluations[0], rom.meta.stencil_evaluations[1]),
    );
    line("tuples", format!("{},{}", rom.meta.tuples[0], rom.meta.tuples[1]));
    line("has_d", rom.d.is_some().to_string());
    line("has_e", rom.e.is_some().to_string());
    if let Some(sel) = &prov.selection {
        line("selection", selection_text(sel));
    }
    line("created_unix", prov.created_unix.to_string());
    for w in &rom.meta.warnings {
        line("warning", w.replace('\n', " "));
    }

    let mut out = Vec::new();
    out.extend(format!("{MAGIC}\n").as_bytes());
    out.extend(header.as_bytes());
    out.extend(b"end_header\n");
    put_block(&mut out, "lambdas", &complex_values(&rom.basis.lambdas));
    put_block(&mut out, "phis", &complex_values(rom.basis.phis.as_slice()));
    put_block(&mut out, "psis", &complex_values(rom.basis.psis.as_slice()));
    put_block(&mut out, "w0", &rom.w0);
    put_block(&mut out, "uc0", &rom.uc0);
    put_block(&mut out, "ud0", &rom.ud0);
    put_block(&mut out, "input_c", &complex_values(rom.input_c.as_slice()));
    put_block(&mut out, "input_g", &complex_values(rom.input_g.as_slice()));
    put_block(
        &mut out,
        "scalars",
        &[rom.epsilon, rom.meta.epsilon_cubic, rom.meta.epsilon_sensitivity],
    );
    if let Some(d) = &rom.d {
        put_block(&mut out, "d", &complex_values(d));
    }
    if let Some(e) = &rom.e {
        put_block(&mut out, "e", &complex_values(e));
    }
    let crc = crc32fast::hash(&out);
    out.extend(TRAILER);
    out.extend(crc.to_le_bytes());
    out
}

/// Writes the archive atomically (temporary file in the same directory, then rename).
pub fn save_rom(rom: &ReducedModel, prov: &Provenance, path: &Path) -> Result<ArchiveSummary> {
    let bytes = encode(rom, prov)?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path.file_name().ok_or_else(|| Error::Archive {
        path: path.to_path_buf(),
        reason: "path has no file name".into(),
    })?;
    let tmp = dir.join(format!(".{}.{}.tmp", file_name.to_string_lossy(), std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(ArchiveSummary {
        path: path.to_path_buf(),
        bytes: bytes.len() as u64,
        fingerprint: prov.fingerprint.clone(),
    })
}

pub fn load_rom(path: &Path) -> Result<(ReducedModel, Provenance)> {
    let bytes = fs::read(path)?;
    decode(&bytes).map_err(|e| match e {
        Error::Archive { reason, .. } => Error::Archive {
            path: path.to_path_buf(),
            reason,
        },
        Error::Reduction(reason) => Error::Archive {
            path: path.to_path_buf(),
            reason: format!("invariant violation: {reason}"),
        },
        other => other,
    })
}

fn corrupt(reason: impl Into<String>) -> Error {
    Error::Archive {
        path: PathBuf::new(),
        reason: reason.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| corrupt("truncated block"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

fn read_blocks(body: &[u8]) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut cur = Cursor { bytes: body, pos: 0 };
    let mut blocks = BTreeMap::new();
    while cur.pos < body.len() {
        let start = cur.pos;
        let len = u16::from_le_bytes(cur.take(2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(cur.take(len)?).map_err(|_| corrupt("block name is not UTF-8"))?.to_string();
        let count = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let count = usize::try_from(count).map_err(|_| corrupt("block length overflow"))?;
        let data = cur.take(count.checked_mul(8).ok_or_else(|| corrupt("block length overflow"))?)?;
        let end = cur.pos;
        let crc = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
        if crc32fast::hash(&body[start..end]) != crc {
            return Err(corrupt(format!("checksum mismatch in block `{name}`")));
        }
        let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if blocks.insert(name.clone(), values).is_some() {
            return Err(corrupt(format!("duplicate block `{name}`")));
        }
    }
    Ok(blocks)
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Parses and validates an archive held in memory.
pub fn decode(bytes: &[u8]) -> Result<(ReducedModel, Provenance)> {
    if bytes.len() < TRAILER.len() + 4 {
        return Err(corrupt("checksum error: file is truncated"));
    }
    let (content, tail) = bytes.split_at(bytes.len() - TRAILER.len() - 4);
    if &tail[..TRAILER.len()] != TRAILER {
        return Err(corrupt("checksum error: trailer missing (truncated file?)"));
    }
    let crc = u32::from_le_bytes(tail[TRAILER.len()..].try_into().unwrap());
    if crc32fast::hash(content) != crc {
        return Err(corrupt("checksum error: file checksum mismatch"));
    }

    let marker = b"end_header\n";
    let split = content
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| corrupt("header terminator missing"))?;
    let header = std::str::from_utf8(&content[..split]).map_err(|_| corrupt("header is not UTF-8"))?;
    let body = &content[split + marker.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(corrupt("not an nrom archive"));
    }
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    let mut warnings = Vec::new();
    for l in lines {
        let (k, v) = l.split_once(": ").ok_or_else(|| corrupt(format!("malformed header line `{l}`")))?;
        if k == "warning" {
            warnings.push(v.to_string());
        } else {
            fields.insert(k, v);
        }
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| corrupt(format!("header key `{k}` missing")));
    let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| corrupt(format!("header key `{k}` is not an integer"))) };
    let pair = |k: &str| -> Result<[usize; 2]> {
        let bad = || corrupt(format!("header key `{k}` is not an integer pair"));
        let (a, b) = get(k)?.split_once(',').ok_or_else(bad)?;
        Ok([a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?])
    };

    let version: u32 = get("format_version")?.parse().map_err(|_| corrupt("bad format_version"))?;
    if version != FORMAT_VERSION {
        return Err(corrupt(format!(
            "format version mismatch: archive has {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let order = RomOrder::from_int(num("order")? as u32).map_err(|_| corrupt("bad order"))?;
    let (m, n, n_c, n_d) = (num("m")?, num("n")?, num("n_c")?, num("n_d")?);
    let kinds = get("kinds")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| ModeKind::from_label(s).ok_or_else(|| corrupt(format!("unknown mode kind `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    if kinds.len() != m {
        return Err(corrupt("mode kind count disagrees with m"));
    }
    let selection = match fields.get("selection") {
        Some(s) => Some(parse_selection(s).ok_or_else(|| corrupt("malformed selection"))?),
        None => None,
    };
    let prov = Provenance {
        model: get("model")?.to_string(),
        fingerprint: get("model_fingerprint")?.to_string(),
        selection,
        created_unix: num("created_unix")? as u64,
    };

    let mut blocks = read_blocks(body)?;
    let mut take = |name: &str, len: usize| -> Result<Vec<f64>> {
        let v = blocks.remove(name).ok_or_else(|| corrupt(format!("block `{name}` missing")))?;
        if v.len() != len {
            return Err(corrupt(format!("block `{name}` has {} values, expected {len}", v.len())));
        }
        Ok(v)
    };
    let lambdas = to_complex(&take("lambdas", 2 * m)?);
    let phis = CMatrix::from_vec(n, m, to_complex(&take("phis", 2 * n * m)?));
    let psis = CMatrix::from_vec(n, m, to_complex(&take("psis", 2 * n * m)?));
    let w0 = take("w0", n)?;
    let uc0 = take("uc0", n_c)?;
    let ud0 = take("ud0", n_d)?;
    let input_c = CMatrix::from_vec(m, n_c, to_complex(&take("input_c", 2 * m * n_c)?));
    let input_g = CMatrix::from_vec(m, n_d, to_complex(&take("input_g", 2 * m * n_d)?));
    let scalars = take("scalars", 3)?;
    let basis = EigenBasis {
        lambdas,
        phis,
        psis,
        kinds,
    };
    let me = basis.extended_len();
    let d = if order >= RomOrder::Quadratic {
        Some(to_complex(&take("d", 2 * m * me * me)?))
    } else {
        None
    };
    let e = if order >= RomOrder::Cubic {
        Some(to_complex(&take("e", 2 * m * me * me * me)?))
    } else {
        None
    };
    if let Some(extra) = blocks.keys().next() {
        return Err(corrupt(format!("unexpected block `{extra}`")));
    }
    let rom = ReducedModel {
        basis,
        w0,
        uc0,
        ud0,
        order,
        epsilon: scalars[0],
        d,
        e,
        input_c,
        input_g,
        meta: RomMetadata {
            residual_evaluations: num("residual_evaluations")?,
            stencil_evaluations: pair("stencil_evaluations")?,
            tuples: pair("tuples")?,
            epsilon_cubic: scalars[1],
            epsilon_sensitivity: scalars[2],
            warnings,
        },
    };
    rom.validate()?;
    Ok((rom, prov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prov() -> Provenance {
        Provenance {
            model: "test".into(),
            fingerprint: "00ff".into(),
            selection: Some(BasisSelection::default()),
            created_unix: 42,
        }
    }

    fn rom(order: RomOrder, n_real: usize, n_complex: usize) -> ReducedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        ReducedModel::synthetic(&mut rng, 7, n_real, n_complex, (1, 2), order)
    }

    #[test]
    fn round_trip_preserves_everything() {
        for order in [RomOrder::Linear, RomOrder::Quadratic, RomOrder::Cubic] {
            let r = rom(order, 1, 2);
            let bytes = encode(&r, &prov()).unwrap();
            let (back, p) = decode(&bytes).unwrap();
            assert_eq!(p, prov());
            assert_eq!(encode(&back, &p).unwrap(), bytes);
            assert_eq!(back, r);
        }
    }

    #[test]
    fn linear_archive_has_no_tensor_blocks() {
        let bytes = encode(&rom(RomOrder::Linear, 2, 1), &prov()).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains("has_d: false") && text.contains("has_e: false"));
        let (back, _) = decode(&bytes).unwrap();
        assert!(back.d.is_none() && back.e.is_none());
    }

    #[test]
    fn quadratic_block_size() {
        // Four real modes: the extended coordinates coincide with the modal ones.
        let r = rom(RomOrder::Quadratic, 4, 0);
        assert_eq!(r.d.as_ref().unwrap().len(), 4 * 4 * 4);
    }

    #[test]
    fn truncation_is_a_checksum_error() {
        let bytes = encode(&rom(RomOrder::Quadratic, 1, 1), &prov()).unwrap();
        for cut in [1, 5, bytes.len() / 2, bytes.len() - 1] {
            let err = decode(&bytes[..cut]).unwrap_err().to_string();
            assert!(err.contains("checksum"), "{err}");
        }
    }

    fn reseal(mut content: Vec<u8>) -> Vec<u8> {
        let crc = crc32fast::hash(&content);
        content.extend(TRAILER);
        content.extend(crc.to_le_bytes());
        content
    }

    #[test]
    fn version_mismatch_is_reported() {
        let bytes = encode(&rom(RomOrder::Linear, 1, 0), &prov()).unwrap();
        let content = &bytes[..bytes.len() - 12];
        let head_len = content.windows(11).position(|w| w == b"end_header\n").unwrap();
        let header = String::from_utf8(content[..head_len].to_vec()).unwrap();
        let mut patched = header.replacen("format_version: 1", "format_version: 9", 1).into_bytes();
        patched.extend(&content[head_len..]);
        let err = decode(&reseal(patched)).unwrap_err().to_string();
        assert!(err.contains("version mismatch"), "{err}");
    }

    #[test]
    fn asymmetric_d_is_rejected_on_load() {
        let mut r = rom(RomOrder::Quadratic, 1, 1);
        r.d.as_mut().unwrap()[1] += Complex64::new(1.0, 0.0);
        assert!(r.validate().is_err());
        let bytes = encode_unchecked(&r, &prov());
        let err = decode(&bytes).unwrap_err().to_string();
        assert!(err.contains("symmetric"), "{err}");
    }

    #[test]
    fn cubic_archive_has_symmetric_e() {
        let r = rom(RomOrder::Cubic, 1, 2);
        let (back, _) = decode(&encode(&r, &prov()).unwrap()).unwrap();
        back.validate().unwrap();
        assert!(back.e.is_some());
    }

    #[test]
    fn save_is_atomic_and_loadable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.nrom");
        let r = rom(RomOrder::Cubic, 2, 2);
        let summary = save_rom(&r, &prov(), &path).unwrap();
        assert_eq!(summary.bytes, fs::metadata(&path).unwrap().len());
        let (back, _) = load_rom(&path).unwrap();
        assert_eq!(back, r);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
