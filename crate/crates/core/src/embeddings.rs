//! Initial word-embedding matrices: random, or pretrained vectors from a
//! GloVe-style text file.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::init::uniform;
use crate::nn::tensor::Tensor;
use crate::text::{Vocabulary, PAD};

/// Half-width of the uniform distribution for randomly initialised rows.
pub const RANDOM_INIT_LIMIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSource {
    Random,
    Pretrained,
}

/// `V × d` matrix bound to a vocabulary. Row [`PAD`] is always zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub table: Tensor<f32>,
    pub sources: Vec<RowSource>,
    pub vocab_checksum: String,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn rows(&self) -> usize {
        self.table.rows()
    }
}

/// Result of [`load_pretrained`].
#[derive(Clone, Debug, PartialEq)]
pub struct PretrainedLoad {
    pub matrix: EmbeddingMatrix,
    /// Matched real tokens / (V − 2); zero for a vocabulary with no real tokens.
    pub coverage: f64,
    /// Hex SHA-256 of the vector file.
    pub file_checksum: String,
}

/// Rows after PAD drawn i.i.d. from `U[-0.05, 0.05]`.
pub fn init_random<R: Rng>(vocab: &Vocabulary, dim: usize, rng: &mut R) -> Result<EmbeddingMatrix> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be at least 1".into()));
    }
    let mut table: Tensor<f32> = uniform(&[vocab.len(), dim], RANDOM_INIT_LIMIT, rng);
    table.row_mut(PAD).fill(0.0);
    Ok(EmbeddingMatrix {
        table,
        sources: vec![RowSource::Random; vocab.len()],
        vocab_checksum: vocab.checksum(),
    })
}

/// Parsed word-vector file: token → vector, first occurrence wins.
#[derive(Clone, Debug, Default)]
pub struct WordVectors {
    pub dim: Option<usize>,
    pub vectors: HashMap<String, Vec<f32>>,
}

/// Reads `token v1 … vd` lines. A leading header of exactly two integers is skipped.
pub fn read_word_vectors(path: &Path, expected_dim: Option<usize>) -> Result<(WordVectors, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let checksum = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut out = WordVectors {
        dim: expected_dim,
        vectors: HashMap::new(),
    };
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if n == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
            continue;
        }
        let width = fields.len() - 1;
        match out.dim {
            None if width > 0 => out.dim = Some(width),
            Some(d) if d == width => {}
            Some(d) => {
                return Err(parse_err(
                    lineno,
                    format!("expected token plus {d} numbers, found {} fields", fields.len()),
                ))
            }
            None => return Err(parse_err(lineno, "token without a vector".into())),
        }
        let values = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f32>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(lineno, format!("unparsable number `{f}`")))
            })
            .collect::<Result<Vec<f32>>>()?;
        out.vectors.entry(fields[0].to_owned()).or_insert(values);
    }
    Ok((out, checksum))
}

/// Pretrained rows where the file has the token, [`init_random`] rows elsewhere.
///
/// The random matrix is drawn first with the same generator, so an empty file
/// yields exactly `init_random(vocab, dim, rng)`.
pub fn load_pretrained<R: Rng>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut R,
) -> Result<PretrainedLoad> {
    let (vectors, file_checksum) = read_word_vectors(path, Some(dim))?;
    let (matrix, coverage) = apply_vectors(&vectors, vocab, dim, rng)?;
    Ok(PretrainedLoad {
        matrix,
        coverage,
        file_checksum,
    })
}

/// [`load_pretrained`] over vectors that are already in memory. Returns the
/// matrix and its coverage.
pub fn apply_vectors<R: Rng>(
    vectors: &WordVectors,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut R,
) -> Result<(EmbeddingMatrix, f64)> {
    if let Some(d) = vectors.dim {
        if d != dim {
            return Err(Error::Config(format!("word vectors have dimension {d}, expected {dim}")));
        }
    }
    let mut matrix = init_random(vocab, dim, rng)?;
    let mut matched = 0usize;
    for (i, token) in vocab.tokens().iter().enumerate().skip(2) {
        if let Some(v) = vectors.vectors.get(token) {
            matrix.table.row_mut(i).copy_from_slice(v);
            matrix.sources[i] = RowSource::Pretrained;
            matched += 1;
        }
    }
    let real = vocab.len() - 2;
    let coverage = if real == 0 { 0.0 } else { matched as f64 / real as f64 };
    Ok((matrix, coverage))
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        let post: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        Vocabulary::build(&[post], None)
    }

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn random_init_is_seeded_and_pads_zero() {
        let v = vocab(&["a", "b", "c"]);
        let m1 = init_random(&v, 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let m2 = init_random(&v, 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(m1, m2);
        assert!(m1.table.row(PAD).iter().all(|&x| x == 0.0));
        assert!(init_random(&v, 0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn random_init_distribution() {
        let post: Vec<String> = (0..1000).map(|i| format!("t{i}")).collect();
        let v = Vocabulary::build(&[post], None);
        let m = init_random(&v, 100, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let vals: Vec<f64> = (1..v.len()).flat_map(|r| m.table.row(r).to_vec()).map(f64::from).collect();
        assert!(vals.len() >= 100_000);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 0.002, "mean {mean}");
        assert!(vals.iter().all(|x| x.abs() <= 0.05 + 1e-7));
    }

    #[test]
    fn full_and_partial_coverage() {
        let v = vocab(&["a", "b", "c", "d"]);
        let f = file("a 1 2\nb 3 4\nc 5 6\nd 7 8\n");
        let load = load_pretrained(f.path(), &v, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(load.coverage, 1.0);
        assert_eq!(load.matrix.table.row(v.get("c").unwrap()), &[5.0, 6.0]);

        let f = file("b 0.125 -0.5\nzz 1 1\nd 1e-3 2.5\n");
        let load = load_pretrained(f.path(), &v, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(load.coverage, 0.5);
        assert_eq!(load.matrix.table.row(v.get("b").unwrap()), &[0.125, -0.5]);
        assert_eq!(load.matrix.table.row(v.get("d").unwrap()), &[1e-3, 2.5]);
        assert_eq!(load.matrix.sources[v.get("a").unwrap()], RowSource::Random);
    }

    #[test]
    fn empty_file_equals_random_init() {
        let v = vocab(&["a", "b"]);
        let f = file("");
        let load = load_pretrained(f.path(), &v, 3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let rand = init_random(&v, 3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(load.coverage, 0.0);
        assert_eq!(load.matrix, rand);
    }

    #[test]
    fn header_line_is_skipped() {
        let v = vocab(&["a"]);
        let f = file("1 2\na 0.5 0.25\n");
        let load = load_pretrained(f.path(), &v, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(load.coverage, 1.0);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let v = vocab(&["a"]);
        let f = file("a 1 2\nb 1\n");
        match load_pretrained(f.path(), &v, 2, &mut ChaCha8Rng::seed_from_u64(0)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = file("a 1 x\n");
        match load_pretrained(f.path(), &v, 2, &mut ChaCha8Rng::seed_from_u64(0)) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 1);
                assert!(message.contains('x'));
            }
            other => panic!("{other:?}"),
        }
        // dimension mismatch against the requested d
        let f = file("a 1 2 3\n");
        assert!(load_pretrained(f.path(), &v, 2, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
