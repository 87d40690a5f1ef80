use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub query_count: usize,
    pub seed: u64,
}

/// Disjoint query and retrieval index sets, each ascending. The retrieval
/// set doubles as the training set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub query: Vec<usize>,
    pub retrieval: Vec<usize>,
}

pub fn make_split(n: usize, spec: &SplitSpec) -> Result<Split> {
    if spec.query_count >= n {
        return Err(Error::Config(format!(
            "query count {} must be smaller than the dataset size {n}",
            spec.query_count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut query = rand::seq::index::sample(&mut rng, n, spec.query_count).into_vec();
    query.sort_unstable();
    let mut is_query = vec![false; n];
    for &q in &query {
        is_query[q] = true;
    }
    let retrieval = (0..n).filter(|&i| !is_query[i]).collect();
    Ok(Split { query, retrieval })
}
