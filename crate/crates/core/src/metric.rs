//! Positive diagonal and block-diagonal metrics.

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;

/// Smallest admissible metric entry.
pub const METRIC_FLOOR: f64 = 1e-300;

/// `U = diag(u)` with every `u_i >= METRIC_FLOOR`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMetric {
    diag: DenseVector,
}

impl DiagonalMetric {
    /// Rejects (does not clamp) entries below [`METRIC_FLOOR`].
    pub fn new(diag: DenseVector) -> Result<Self> {
        if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &u)| u < METRIC_FLOOR) {
            return Err(Error::NonPositiveMetric { index, value });
        }
        Ok(DiagonalMetric { diag })
    }

    pub fn from_vec(u: Vec<f64>) -> Result<Self> {
        match DenseVector::new(u) {
            Ok(d) => Self::new(d),
            Err(Error::NonFinite { index, value }) => Err(Error::NonPositiveMetric { index, value }),
            Err(e) => Err(e),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    /// `c * I`; panics if `c` is not a valid metric entry.
    pub fn scalar(n: usize, c: f64) -> Self {
        assert!(c >= METRIC_FLOOR && c.is_finite(), "invalid scalar metric {c}");
        DiagonalMetric {
            diag: DenseVector::filled(n, c),
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &DenseVector {
        &self.diag
    }

    pub fn as_slice(&self) -> &[f64] {
        self.diag.as_slice()
    }

    pub fn min(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.diag.iter().copied().fold(0.0, f64::max)
    }

    /// `U z`.
    pub fn apply(&self, z: &DenseVector) -> Result<DenseVector> {
        check_dim(self.dim(), z.len())?;
        Ok(self.diag.zip_map(z, |u, v| u * v))
    }

    /// `U^{-1} z`.
    pub fn apply_inverse(&self, z: &DenseVector) -> Result<DenseVector> {
        check_dim(self.dim(), z.len())?;
        Ok(self.diag.zip_map(z, |u, v| v / u))
    }

    /// `||z||_U^2 = z^T U z`.
    pub fn unorm_sq(&self, z: &DenseVector) -> Result<f64> {
        check_dim(self.dim(), z.len())?;
        Ok(self.diag.iter().zip(z).map(|(u, v)| u * v * v).sum())
    }

    /// `||z||_U = sqrt(z^T U z)`.
    pub fn unorm(&self, z: &DenseVector) -> Result<f64> {
        self.unorm_sq(z).map(f64::sqrt)
    }

    /// `c * U` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<DiagonalMetric> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("scale", format!("{c} is not a positive finite factor")));
        }
        DiagonalMetric::from_vec(self.diag.iter().map(|u| c * u).collect())
    }

    /// Inverse metric `U^{-1}`.
    pub fn inverse(&self) -> Result<DiagonalMetric> {
        DiagonalMetric::from_vec(self.diag.iter().map(|u| 1.0 / u).collect())
    }

    /// Entrywise `U + V`.
    pub fn add(&self, other: &DiagonalMetric) -> Result<DiagonalMetric> {
        check_dim(self.dim(), other.dim())?;
        DiagonalMetric::new(self.diag.add(&other.diag))
    }

    /// True when `U - c I` is positive semidefinite.
    pub fn dominates_scalar(&self, c: f64) -> bool {
        self.min() >= c
    }
}

/// Contiguous partition of `[0, dim)` into non-empty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    offsets: Vec<usize>,
}

impl Partition {
    /// From block sizes; every size must be positive.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition {
                dim: 0,
                reason: "no blocks".into(),
            });
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for (j, &s) in sizes.iter().enumerate() {
            if s == 0 {
                return Err(Error::InvalidPartition {
                    dim: sizes.iter().sum(),
                    reason: format!("block {j} is empty"),
                });
            }
            offsets.push(offsets[j] + s);
        }
        Ok(Partition { offsets })
    }

    /// `count` equal blocks of size `size`.
    pub fn uniform(count: usize, size: usize) -> Result<Self> {
        Self::from_sizes(&vec![size; count])
    }

    /// From boundaries `0 = b_0 < b_1 < ... < b_N = dim`.
    pub fn from_boundaries(bounds: &[usize]) -> Result<Self> {
        let dim = bounds.last().copied().unwrap_or(0);
        if bounds.len() < 2 || bounds[0] != 0 {
            return Err(Error::InvalidPartition {
                dim,
                reason: "boundaries must start at 0 and contain at least one block".into(),
            });
        }
        let sizes: Vec<usize> = bounds
            .windows(2)
            .map(|w| w[1].saturating_sub(w[0]))
            .collect();
        Self::from_sizes(&sizes)
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

/// `Blkdiag(U_1, ..., U_N)` of positive diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonalMetric {
    blocks: Vec<DiagonalMetric>,
    partition: Partition,
}

impl BlockDiagonalMetric {
    pub fn new(blocks: Vec<DiagonalMetric>) -> Result<Self> {
        let sizes: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
        let partition = Partition::from_sizes(&sizes)?;
        Ok(BlockDiagonalMetric { blocks, partition })
    }

    /// Splits a flat diagonal according to `partition`.
    pub fn from_flat(flat: &DiagonalMetric, partition: &Partition) -> Result<Self> {
        check_dim(partition.dim(), flat.dim())?;
        let blocks = (0..partition.num_blocks())
            .map(|j| {
                let r = partition.range(j);
                DiagonalMetric::new(flat.diag().slice(r.start, r.end))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockDiagonalMetric {
            blocks,
            partition: partition.clone(),
        })
    }

    pub fn blocks(&self) -> &[DiagonalMetric] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &DiagonalMetric {
        &self.blocks[j]
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    /// Start index of each block.
    pub fn offsets(&self) -> &[usize] {
        &self.partition.offsets()[..self.blocks.len()]
    }

    /// The equivalent flat diagonal metric.
    pub fn to_diagonal(&self) -> DiagonalMetric {
        let diags: Vec<DenseVector> = self.blocks.iter().map(|b| b.diag().clone()).collect();
        DiagonalMetric {
            diag: DenseVector::concat(&diags),
        }
    }

    fn per_block(
        &self,
        z: &DenseVector,
        f: impl Fn(&DiagonalMetric, &DenseVector) -> Result<DenseVector>,
    ) -> Result<DenseVector> {
        check_dim(self.dim(), z.len())?;
        let parts = self
            .blocks
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let r = self.partition.range(j);
                f(b, &z.slice(r.start, r.end))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseVector::concat(&parts))
    }

    pub fn apply(&self, z: &DenseVector) -> Result<DenseVector> {
        self.per_block(z, |b, zj| b.apply(zj))
    }

    pub fn apply_inverse(&self, z: &DenseVector) -> Result<DenseVector> {
        self.per_block(z, |b, zj| b.apply_inverse(zj))
    }

    pub fn unorm_sq(&self, z: &DenseVector) -> Result<f64> {
        self.to_diagonal().unorm_sq(z)
    }

    pub fn unorm(&self, z: &DenseVector) -> Result<f64> {
        self.unorm_sq(z).map(f64::sqrt)
    }

    /// Rescales every block by `c`.
    pub fn scaled(&self, c: f64) -> Result<BlockDiagonalMetric> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.scaled(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockDiagonalMetric {
            blocks,
            partition: self.partition.clone(),
        })
    }

    pub fn min(&self) -> f64 {
        self.blocks.iter().map(|b| b.min()).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.blocks.iter().map(|b| b.max()).fold(0.0, f64::max)
    }
}

/// `||z||_U`.
pub fn unorm(z: &DenseVector, metric: &DiagonalMetric) -> Result<f64> {
    metric.unorm(z)
}

/// `U^{-1} z`.
pub fn apply_inverse(metric: &DiagonalMetric, z: &DenseVector) -> Result<DenseVector> {
    metric.apply_inverse(z)
}
