//! Hamming ranking and mean average precision.
//!
//! Rankings are by ascending Hamming distance with ties broken by ascending
//! database index. Average precision runs over the full ranking unless a
//! cutoff is given; queries without a single relevant item are skipped and
//! counted.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::codes::{words_per_row, CodeMatrix};
use crate::data::io::{read_exact, read_u16, read_u32, read_u64};
use crate::data::LabelMatrix;
use crate::error::{Error, Result};
use crate::similarity::{DenseSimilarity, LabelSimilarity, Similarity, SimilaritySource};

/// Packed code storage is the code matrix itself.
pub type PackedCodes = CodeMatrix;

pub const CODES_MAGIC: &[u8; 4] = b"DLFC";
pub const CODES_VERSION: u16 = 1;

pub fn pack(rows: &[Vec<i8>]) -> Result<PackedCodes> {
    CodeMatrix::from_rows(rows)
}

pub fn unpack(codes: &PackedCodes) -> Vec<Vec<i8>> {
    (0..codes.rows()).map(|i| codes.row(i)).collect()
}

/// Popcount of `a ^ b`; both rows must come from `c`-bit codes.
#[inline]
pub fn hamming(a: &[u64], b: &[u64]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Database indices by ascending distance to `query`, ties by index.
pub fn rank_database(query: &[u64], db: &PackedCodes) -> Result<Vec<usize>> {
    if query.len() != db.stride() {
        return Err(Error::contract(format!(
            "query has {} words, database rows have {}",
            query.len(),
            db.stride()
        )));
    }
    let dist: Vec<u32> = (0..db.rows()).map(|i| hamming(query, db.row_words(i))).collect();
    Ok(bucket_order(&dist, db.bits()))
}

/// Counting sort; stable, so equal distances keep index order.
fn bucket_order(dist: &[u32], bits: usize) -> Vec<usize> {
    let mut start = vec![0usize; bits + 2];
    for &d in dist {
        start[d as usize + 1] += 1;
    }
    for k in 1..start.len() {
        start[k] += start[k - 1];
    }
    let mut order = vec![0usize; dist.len()];
    for (i, &d) in dist.iter().enumerate() {
        order[start[d as usize]] = i;
        start[d as usize] += 1;
    }
    order
}

/// Relevance of database items to queries.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    rel: Similarity,
}

impl GroundTruth {
    /// `rel(q, i) = 1` iff query `q` and item `i` share at least one label.
    pub fn from_labels(query: &LabelMatrix, db: &LabelMatrix) -> Result<Self> {
        Ok(GroundTruth {
            rel: Similarity::Labels(LabelSimilarity::new(query.clone(), db.clone())?),
        })
    }

    pub fn from_fn(queries: usize, items: usize, rel: impl Fn(usize, usize) -> bool) -> Self {
        GroundTruth {
            rel: Similarity::Dense(DenseSimilarity::from_fn(queries, items, rel)),
        }
    }

    pub fn queries(&self) -> usize {
        self.rel.rows()
    }

    pub fn items(&self) -> usize {
        self.rel.cols()
    }

    #[inline]
    pub fn rel(&self, q: usize, i: usize) -> bool {
        self.rel.similar(q, i)
    }
}

/// `(1/R) sum_{p: rel} P@p` over the ranking, or `None` when `R = 0`.
pub fn average_precision(ranking: &[usize], rel: impl Fn(usize) -> bool) -> Option<f64> {
    average_precision_at(ranking, rel, None)
}

/// With a cutoff `K`, only the top `K` positions count and `R` is the number
/// of relevant items among them; a query with relevant items, none of them
/// in the top `K`, scores 0.
pub fn average_precision_at(
    ranking: &[usize],
    rel: impl Fn(usize) -> bool,
    cutoff: Option<usize>,
) -> Option<f64> {
    let k = cutoff.unwrap_or(ranking.len()).min(ranking.len());
    let mut hits = 0usize;
    let mut sum = 0.0;
    let mut total = 0usize;
    for (p, &item) in ranking.iter().enumerate() {
        if rel(item) {
            total += 1;
            if p < k {
                hits += 1;
                sum += hits as f64 / (p + 1) as f64;
            }
        }
    }
    match (total, hits) {
        (0, _) => None,
        (_, 0) => Some(0.0),
        _ => Some(sum / hits as f64),
    }
}

/// Fraction of the top `k` that is relevant.
pub fn precision_at(ranking: &[usize], rel: impl Fn(usize) -> bool, k: usize) -> f64 {
    let k = k.min(ranking.len());
    if k == 0 {
        return 0.0;
    }
    ranking[..k].iter().filter(|&&i| rel(i)).count() as f64 / k as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapReport {
    pub map: f64,
    pub scored: usize,
    pub skipped: usize,
}

pub fn mean_average_precision(
    queries: &PackedCodes,
    db: &PackedCodes,
    truth: &GroundTruth,
    cutoff: Option<usize>,
) -> Result<MapReport> {
    if queries.bits() != db.bits() {
        return Err(Error::contract(format!(
            "query codes have {} bits, database codes {}",
            queries.bits(),
            db.bits()
        )));
    }
    if truth.queries() != queries.rows() || truth.items() != db.rows() {
        return Err(Error::contract(format!(
            "ground truth is {}x{} but there are {} queries and {} items",
            truth.queries(),
            truth.items(),
            queries.rows(),
            db.rows()
        )));
    }
    if cutoff == Some(0) {
        return Err(Error::Config("MAP cutoff must be >= 1".into()));
    }
    let aps: Vec<Option<f64>> = (0..queries.rows())
        .into_par_iter()
        .map(|q| {
            let ranking = rank_database(queries.row_words(q), db).expect("shapes checked");
            average_precision_at(&ranking, |i| truth.rel(q, i), cutoff)
        })
        .collect();
    let scored: Vec<f64> = aps.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(Error::Evaluation(format!(
            "none of the {} queries has a relevant database item",
            queries.rows()
        )));
    }
    Ok(MapReport {
        map: pairwise_sum(&scored) / scored.len() as f64,
        scored: scored.len(),
        skipped: aps.len() - scored.len(),
    })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// One line of an evaluation report.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub task: String,
    pub code_len: usize,
    pub report: MapReport,
}

/// CSV with `# key = value` header lines, then
/// `task,code_len,map,queries_scored,queries_skipped`.
pub fn write_eval_report(
    mut w: impl Write,
    header: &[(String, String)],
    rows: &[EvalRow],
) -> Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "task,code_len,map,queries_scored,queries_skipped")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6},{},{}",
            r.task, r.code_len, r.report.map, r.report.scored, r.report.skipped
        )?;
    }
    Ok(())
}

pub fn write_codes(mut w: impl Write, codes: &PackedCodes) -> Result<()> {
    let bits = u32::try_from(codes.bits())
        .map_err(|_| Error::Format(format!("code length {} exceeds u32", codes.bits())))?;
    w.write_all(CODES_MAGIC)?;
    w.write_all(&CODES_VERSION.to_le_bytes())?;
    w.write_all(&(codes.rows() as u64).to_le_bytes())?;
    w.write_all(&bits.to_le_bytes())?;
    for word in codes.words() {
        w.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_codes(mut r: impl Read) -> Result<PackedCodes> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != CODES_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected {CODES_MAGIC:?}")));
    }
    let version = read_u16(&mut r)?;
    if version != CODES_VERSION {
        return Err(Error::Format(format!("unsupported code file version {version}")));
    }
    let n = read_u64(&mut r)?;
    let bits = read_u32(&mut r)? as usize;
    if n == 0 || bits == 0 {
        return Err(Error::Format(format!("empty code file {n}x{bits}")));
    }
    let len = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(words_per_row(bits)))
        .and_then(|w| w.checked_mul(8).map(|_| w))
        .ok_or_else(|| Error::Format(format!("code file shape {n}x{bits} overflows")))?;
    let mut buf = vec![0u8; len * 8];
    read_exact(&mut r, &mut buf, "code words")?;
    let words = buf
        .chunks_exact(8)
        .map(|b| u64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after codes".into()));
    }
    CodeMatrix::from_words(n as usize, bits, words)
}

pub fn save_codes(path: impl AsRef<Path>, codes: &PackedCodes) -> Result<()> {
    let path = path.as_ref();
    let inner = || -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        write_codes(&mut out, codes)?;
        out.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.at(path))
}

pub fn load_codes(path: impl AsRef<Path>) -> Result<PackedCodes> {
    let path = path.as_ref();
    let inner = || read_codes(BufReader::new(File::open(path)?));
    inner().map_err(|e| e.at(path))
}
