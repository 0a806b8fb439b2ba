//! NPY v1.0 reader/writer, restricted to little-endian f32 in C order.
//!
//! Layout: magic `\x93NUMPY`, version bytes `01 00`, a u16 header length,
//! then an ASCII dict `{'descr': '<f4', 'fortran_order': False, 'shape':
//! (..), }` space-padded so the payload starts on a 64-byte boundary.
//! Anything else — other versions, dtypes, orders — is rejected rather
//! than coerced.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{file_stem, Embedding, FeatureSequence};
use crate::matrix::Matrix;

const MAGIC: &[u8; 6] = b"\x93NUMPY";

fn build_header(shape: &[usize]) -> Vec<u8> {
    let shape_str = match shape {
        [n] => format!("({n},)"),
        [r, c] => format!("({r}, {c})"),
        _ => unreachable!("only 1-D and 2-D arrays are written"),
    };
    let dict = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {shape_str}, }}");
    let mut header = dict.into_bytes();
    let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    header.extend(std::iter::repeat(b' ').take(pad));
    header.push(b'\n');
    header
}

fn write_npy(path: &Path, shape: &[usize], values: &[f32]) -> Result<()> {
    let header = build_header(shape);
    let mut bytes = Vec::with_capacity(10 + header.len() + values.len() * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&[0x01, 0x00]);
    bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
    bytes.extend_from_slice(&header);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Locates `'key'` in the header dict and returns the text after its `:`.
fn value_after<'a>(dict: &'a str, key: &str) -> Result<&'a str> {
    let idx = ["'", "\""]
        .iter()
        .find_map(|q| {
            let pat = format!("{q}{key}{q}");
            dict.find(&pat).map(|i| i + pat.len())
        })
        .ok_or_else(|| Error::Format(format!("NPY header missing key '{key}'")))?;
    let rest = dict[idx..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| Error::Format(format!("NPY header key '{key}' not followed by ':'")))?;
    Ok(rest.trim_start())
}

fn parse_quoted(v: &str) -> Result<&str> {
    let quote = v
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| Error::Format("expected quoted string in NPY header".into()))?;
    let inner = &v[1..];
    let end = inner
        .find(quote)
        .ok_or_else(|| Error::Format("unterminated string in NPY header".into()))?;
    Ok(&inner[..end])
}

fn parse_bool(v: &str) -> Result<bool> {
    if v.starts_with("True") {
        Ok(true)
    } else if v.starts_with("False") {
        Ok(false)
    } else {
        Err(Error::Format("expected True/False in NPY header".into()))
    }
}

fn parse_shape(v: &str) -> Result<Vec<usize>> {
    let v = v
        .strip_prefix('(')
        .ok_or_else(|| Error::Format("expected shape tuple in NPY header".into()))?;
    let end = v
        .find(')')
        .ok_or_else(|| Error::Format("unterminated shape tuple in NPY header".into()))?;
    v[..end]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad shape entry '{s}' in NPY header")))
        })
        .collect()
}

fn read_npy(path: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::Format(format!(
            "{} is not an NPY file (bad magic)",
            path.display()
        )));
    }
    if bytes[6..8] != [0x01, 0x00] {
        return Err(Error::Format(format!(
            "unsupported NPY version {}.{}, only 1.0 is accepted",
            bytes[6], bytes[7]
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    if bytes.len() < data_start {
        return Err(Error::Format("NPY header truncated".into()));
    }
    let header = std::str::from_utf8(&bytes[10..data_start])
        .map_err(|_| Error::Format("NPY header is not ASCII".into()))?;

    let descr = parse_quoted(value_after(header, "descr")?)?;
    if descr != "<f4" {
        return Err(Error::Schema(format!(
            "unsupported dtype '{descr}', only little-endian f32 ('<f4') is accepted"
        )));
    }
    if parse_bool(value_after(header, "fortran_order")?)? {
        return Err(Error::Schema(
            "Fortran-order arrays are not accepted, data must be C-order".into(),
        ));
    }
    let shape = parse_shape(value_after(header, "shape")?)?;

    let count: usize = shape.iter().product();
    let payload = &bytes[data_start..];
    if payload.len() != count * 4 {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {} for shape {:?}",
            payload.len(),
            count * 4,
            shape
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((shape, values))
}

/// Reads a 2-D f32 NPY file into a matrix.
pub fn read_matrix_npy(path: impl AsRef<Path>) -> Result<Matrix<f32>> {
    let path = path.as_ref();
    let (shape, values) = read_npy(path)?;
    match shape[..] {
        [rows, cols] => Matrix::from_flat(rows, cols, values),
        _ => Err(Error::Schema(format!(
            "expected a 2-D array, got {}-D shape {:?}",
            shape.len(),
            shape
        ))),
    }
}

/// Writes a matrix as a 2-D f32 NPY file. The parent directory must exist.
pub fn write_matrix_npy(path: impl AsRef<Path>, m: &Matrix<f32>) -> Result<()> {
    write_npy(path.as_ref(), &[m.rows(), m.cols()], m.as_slice())
}

/// Reads a 1-D f32 NPY file.
pub fn read_vector_npy(path: impl AsRef<Path>) -> Result<Vec<f32>> {
    let path = path.as_ref();
    let (shape, values) = read_npy(path)?;
    match shape[..] {
        [_] => Ok(values),
        _ => Err(Error::Schema(format!(
            "expected a 1-D array, got {}-D shape {:?}",
            shape.len(),
            shape
        ))),
    }
}

/// Writes a 1-D f32 NPY file.
pub fn write_vector_npy(path: impl AsRef<Path>, values: &[f32]) -> Result<()> {
    write_npy(path.as_ref(), &[values.len()], values)
}

/// Reads one utterance's frames; the utterance id is the file stem.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureSequence> {
    let path = path.as_ref();
    let frames = read_matrix_npy(path)?;
    FeatureSequence::new(file_stem(path), frames)
}

/// Writes one utterance's frames; `read_feature_file` recovers them bitwise.
pub fn write_feature_file(seq: &FeatureSequence, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_npy(path, &seq.frames)
}

/// Reads a 1-D embedding; the utterance id is the file stem and the
/// speaker id, if any, comes from a sidecar manifest.
pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<Embedding> {
    let path = path.as_ref();
    let vector = read_vector_npy(path)?;
    Embedding::new(file_stem(path), None, vector)
}

/// Writes an embedding vector as a 1-D NPY file.
pub fn write_embedding_file(emb: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    write_vector_npy(path, &emb.vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn reads_back_exact_values() {
        let dir = tmp();
        let path = dir.path().join("utt1.npy");
        let m = Matrix::from_rows(&[vec![1.0f32, 2.0], vec![3.0, 4.0]]).unwrap();
        let seq = FeatureSequence::new("utt1", m.clone()).unwrap();
        write_feature_file(&seq, &path).unwrap();
        let back = read_feature_file(&path).unwrap();
        assert_eq!(back.utterance_id, "utt1");
        assert_eq!(back.frames, m);
    }

    #[test]
    fn minimal_one_by_one() {
        let dir = tmp();
        let path = dir.path().join("tiny.npy");
        let m = Matrix::from_rows(&[vec![0.0f32]]).unwrap();
        write_matrix_npy(&path, &m).unwrap();
        let back = read_matrix_npy(&path).unwrap();
        assert_eq!(back.rows(), 1);
        assert_eq!(back.cols(), 1);
        assert_eq!(back.get(0, 0), 0.0);
    }

    #[test]
    fn payload_bytes_are_ieee754_little_endian() {
        let dir = tmp();
        let path = dir.path().join("five.npy");
        let m = Matrix::from_rows(&[vec![5.0f32]]).unwrap();
        write_matrix_npy(&path, &m).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0x00, 0x00, 0xA0, 0x40]);
        // header block ends on a 64-byte boundary
        assert_eq!((bytes.len() - 4) % 64, 0);
    }

    #[test]
    fn roundtrip_is_bitwise_over_random_matrices() {
        let dir = tmp();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for i in 0..100 {
            let rows = rng.gen_range(1..20);
            let cols = rng.gen_range(1..16);
            let data: Vec<f32> = (0..rows * cols)
                .map(|_| f32::from_bits(rng.gen::<u32>() & 0x7f7f_ffff))
                .collect();
            let m = Matrix::from_flat(rows, cols, data).unwrap();
            let path = dir.path().join(format!("m{i}.npy"));
            write_matrix_npy(&path, &m).unwrap();
            let back = read_matrix_npy(&path).unwrap();
            assert!(m
                .as_slice()
                .iter()
                .zip(back.as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tmp();
        let path = dir.path().join("bad.npy");
        std::fs::write(&path, b"not an npy file at all").unwrap();
        assert!(matches!(
            read_matrix_npy(&path).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn wrong_version_is_format_error() {
        let dir = tmp();
        let path = dir.path().join("v2.npy");
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&[0x02, 0x00, 0, 0]);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_matrix_npy(&path).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn wrong_dtype_is_schema_error() {
        let dir = tmp();
        let path = dir.path().join("f8.npy");
        let dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }";
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&[0x01, 0x00]);
        bytes.extend_from_slice(&(dict.len() as u16).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.extend_from_slice(&[0u8; 8]);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_matrix_npy(&path).unwrap_err(),
            Error::Schema(_)
        ));
    }

    #[test]
    fn wrong_rank_is_schema_error() {
        let dir = tmp();
        let path = dir.path().join("vec.npy");
        write_vector_npy(&path, &[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            read_matrix_npy(&path).unwrap_err(),
            Error::Schema(_)
        ));
        let path2 = dir.path().join("mat.npy");
        let m = Matrix::from_rows(&[vec![1.0f32, 2.0]]).unwrap();
        write_matrix_npy(&path2, &m).unwrap();
        assert!(matches!(
            read_vector_npy(&path2).unwrap_err(),
            Error::Schema(_)
        ));
    }

    #[test]
    fn non_finite_values_are_data_error() {
        let dir = tmp();
        let path = dir.path().join("nan.npy");
        let m = Matrix::from_flat(1, 2, vec![1.0f32, f32::NAN]).unwrap();
        write_matrix_npy(&path, &m).unwrap();
        assert!(matches!(
            read_feature_file(&path).unwrap_err(),
            Error::Data(_)
        ));
    }

    #[test]
    fn truncated_payload_is_format_error() {
        let dir = tmp();
        let path = dir.path().join("short.npy");
        let m = Matrix::from_rows(&[vec![1.0f32, 2.0], vec![3.0, 4.0]]).unwrap();
        write_matrix_npy(&path, &m).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            read_matrix_npy(&path).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn missing_parent_directory_is_io_error() {
        let dir = tmp();
        let path = dir.path().join("no_such_dir").join("x.npy");
        let m = Matrix::from_rows(&[vec![1.0f32]]).unwrap();
        assert!(matches!(
            write_matrix_npy(&path, &m).unwrap_err(),
            Error::Io { .. }
        ));
    }

    #[test]
    fn zero_embedding_rejected_on_read() {
        let dir = tmp();
        let path = dir.path().join("zero.npy");
        write_vector_npy(&path, &[0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            read_embedding_file(&path).unwrap_err(),
            Error::Data(_)
        ));
    }
}
