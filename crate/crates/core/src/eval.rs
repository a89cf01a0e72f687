//! Confusion matrices, overall accuracy, and the threshold sweep.
//!
//! Rows are predicted labels, columns truth labels, both in alphabet order.
//! Overall accuracy (OA) is the diagonal share in percent; per-row
//! accuracy is absent (not zero) for labels never predicted.

use crate::changegrid::{change_map, ChangeConfig, GridChangeMap, Label, Pattern};
use crate::error::{Error, Result};
use crate::spectral::BuildingMask;

/// Ground-truth label for one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthCell<L: Label> {
    pub row: usize,
    pub col: usize,
    pub label: L,
}

/// Pattern-vs-truth count table over a label alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix<L: Label> {
    counts: Vec<u64>,
    _marker: std::marker::PhantomData<L>,
}

/// Three-pattern confusion matrix (SI / SD / AU).
pub type ConfusionMatrix3 = ConfusionMatrix<Pattern>;
/// Binary confusion matrix (C / UC).
pub type ConfusionMatrix2 = ConfusionMatrix<crate::changegrid::BinaryLabel>;

impl<L: Label> ConfusionMatrix<L> {
    /// Build from a row-major count table (rows predicted, columns truth).
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let k = L::ALL.len();
        if counts.len() != k * k {
            return Err(Error::DataLengthMismatch { expected: k * k, actual: counts.len() });
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidParameter("confusion matrix has no observations".into()));
        }
        Ok(Self { counts, _marker: std::marker::PhantomData })
    }

    pub fn count(&self, predicted: L, truth: L) -> u64 {
        self.counts[predicted.index() * L::ALL.len() + truth.index()]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        let k = L::ALL.len();
        (0..k).map(|i| self.counts[i * k + i]).sum()
    }

    /// Overall accuracy in percent.
    pub fn overall_accuracy(&self) -> f64 {
        100.0 * self.trace() as f64 / self.total() as f64
    }

    pub fn row_total(&self, predicted: L) -> u64 {
        let k = L::ALL.len();
        self.counts[predicted.index() * k..(predicted.index() + 1) * k].iter().sum()
    }

    /// Percent of a predicted label's cells that were correct; `None` when
    /// the label was never predicted.
    pub fn row_accuracy(&self, predicted: L) -> Option<f64> {
        let total = self.row_total(predicted);
        if total == 0 {
            return None;
        }
        Some(100.0 * self.count(predicted, predicted) as f64 / total as f64)
    }
}

/// Count predicted-vs-truth pairs over every cell of the map.
///
/// The truth must cover each of the N x N cells exactly once; gaps are
/// reported with their coordinates, duplicates and out-of-range entries by
/// the offending cell.
pub fn confusion<L: Label>(
    pred: &GridChangeMap<L>,
    truth: &[TruthCell<L>],
) -> Result<ConfusionMatrix<L>> {
    let n = pred.n_segments();
    let k = L::ALL.len();
    let mut truth_grid: Vec<Option<L>> = vec![None; n * n];
    for t in truth {
        if t.row >= n || t.col >= n {
            return Err(Error::BadTruthCell {
                row: t.row,
                col: t.col,
                reason: format!("outside the {n}x{n} grid"),
            });
        }
        let slot = &mut truth_grid[t.row * n + t.col];
        if slot.is_some() {
            return Err(Error::BadTruthCell {
                row: t.row,
                col: t.col,
                reason: "duplicate entry".into(),
            });
        }
        *slot = Some(t.label);
    }
    let missing: Vec<(usize, usize)> = truth_grid
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(i, _)| (i / n, i % n))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingTruthCells { cells: missing });
    }
    let mut counts = vec![0u64; k * k];
    for cell in pred.cells() {
        let truth_label = truth_grid[cell.row * n + cell.col].expect("coverage checked");
        counts[cell.label.index() * k + truth_label.index()] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

/// Overall accuracy of the ratio classifier at each threshold in turn,
/// with the partition and every other setting held fixed.
pub fn t_sweep(
    mask_t1: &BuildingMask,
    mask_t2: &BuildingMask,
    truth: &[TruthCell<Pattern>],
    cfg: &ChangeConfig,
    t_values: &[f64],
) -> Result<Vec<(f64, f64)>> {
    for &t in t_values {
        if !(t > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "change_threshold must exceed 1, got {t}"
            )));
        }
    }
    t_values
        .iter()
        .map(|&t| {
            let run_cfg = ChangeConfig { change_threshold: t, ..*cfg };
            let map = change_map(mask_t1, mask_t2, &run_cfg)?;
            let m = confusion(&map, truth)?;
            Ok((t, m.overall_accuracy()))
        })
        .collect()
}
