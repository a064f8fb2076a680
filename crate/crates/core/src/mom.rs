//! Block partitions and the scalar median-of-means estimator.

use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// `n` disjoint blocks of equal size `m = floor(N/n)` over `{0, …, N-1}`;
/// the trailing `N - n·m` indices are discarded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    n: usize,
    m: usize,
    total: usize,
    /// Optional relabelling of sample indices applied before blocking.
    order: Option<Vec<usize>>,
}

/// Size summary of a partition, as reported by tournaments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionMeta {
    pub n: usize,
    pub m: usize,
    pub discarded: usize,
}

impl BlockPartition {
    pub fn block_count(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn discarded(&self) -> usize {
        self.total - self.n * self.m
    }

    pub fn meta(&self) -> PartitionMeta {
        PartitionMeta {
            n: self.n,
            m: self.m,
            discarded: self.discarded(),
        }
    }

    /// Position range of block `j` (before any relabelling).
    pub fn range(&self, j: usize) -> Range<usize> {
        j * self.m..(j + 1) * self.m
    }

    /// Sample indices belonging to block `j`.
    pub fn indices(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.range(j).map(move |p| match &self.order {
            Some(order) => order[p],
            None => p,
        })
    }

    pub fn discarded_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (self.n * self.m..self.total).map(move |p| match &self.order {
            Some(order) => order[p],
            None => p,
        })
    }

    pub fn is_contiguous(&self) -> bool {
        self.order.is_none()
    }
}

/// Contiguous blocks of size `floor(N/n)`.
pub fn make_partition(total: usize, n: usize) -> Result<BlockPartition> {
    if n == 0 {
        return Err(Error::param("n", "block count must be positive"));
    }
    if n > total {
        return Err(Error::param("n", format!("block count {n} exceeds sample size {total}")));
    }
    Ok(BlockPartition {
        n,
        m: total / n,
        total,
        order: None,
    })
}

/// Blocks of a prescribed size `m`; `n = floor(N/m)`.
pub fn make_partition_by_block_size(total: usize, m: usize) -> Result<BlockPartition> {
    if m == 0 || m > total {
        return Err(Error::param("m", format!("block size {m} invalid for sample size {total}")));
    }
    Ok(BlockPartition {
        n: total / m,
        m,
        total,
        order: None,
    })
}

/// Like [`make_partition`], after a seeded shuffle of the indices.
pub fn make_shuffled_partition(total: usize, n: usize, seed: u64) -> Result<BlockPartition> {
    let mut p = make_partition(total, n)?;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng_from_seed(seed));
    p.order = Some(order);
    Ok(p)
}

/// Arithmetic mean of `values` over each block.
pub fn block_means(values: &[f64], partition: &BlockPartition) -> Result<Vec<f64>> {
    if values.len() != partition.total {
        return Err(Error::DimensionMismatch {
            expected: partition.total,
            got: values.len(),
        });
    }
    let m = partition.m as f64;
    Ok((0..partition.n)
        .map(|j| partition.indices(j).map(|i| values[i]).sum::<f64>() / m)
        .collect())
}

/// Median; midpoint of the two central order statistics for even length.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median input"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("median input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    Ok(if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    })
}

/// Median of the `n` contiguous block means of `values`.
pub fn median_of_means(values: &[f64], n: usize) -> Result<f64> {
    let partition = make_partition(values.len(), n)?;
    median(&block_means(values, &partition)?)
}

/// `n = clamp(round(θ · N · min(1, r²/σ²)), 1, N)`.
pub fn choose_block_count(total: usize, r: f64, sigma2: f64, theta: f64) -> Result<usize> {
    if total == 0 {
        return Err(Error::param("N", "sample size must be positive"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "radius must be positive"));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::param("sigma2", "variance proxy must be positive"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", "tuning parameter must lie in (0, 1)"));
    }
    let raw = (theta * total as f64 * (r * r / sigma2).min(1.0)).round();
    Ok((raw as usize).clamp(1, total))
}

/// Block size `m = ceil(3σ²/r²)` so that each block mean is within `r` of
/// the mean with probability at least 2/3; the count follows as `floor(N/m)`.
pub fn block_size_from_variance(r: f64, sigma2: f64) -> Result<usize> {
    if !(r > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::param("r/sigma2", "must be positive"));
    }
    Ok(((3.0 * sigma2 / (r * r)).ceil() as usize).max(1))
}
