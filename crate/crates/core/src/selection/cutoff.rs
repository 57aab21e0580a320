//! Monte Carlo table of learning-phase lengths for the CCM rule.
//!
//! For a cell `(b, n, q)` each replica draws `n` candidate scores from
//! `U(0, 1)` and `b` preselection scores from `U(q - 0.05, q + 0.05)` clipped
//! to `[0, 1]`. Every cutoff `c` in `0..n` is evaluated on the same replica,
//! and the rank-based cost (offline rank sum minus achieved rank sum, per
//! resource) is averaged. The stored cutoff minimizes the 3-point moving
//! average of that curve.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::rng::{self, Stream};

/// Quality buckets.
pub const Q_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Sequence lengths covered by a default table.
pub const DEFAULT_N_GRID: [usize; 27] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 18, 20, 25, 30, 35, 40, 45, 50, 60, 70, 80, 90,
    100,
];

const MIN_REPLICAS: usize = 1000;
const PRESELECTION_SPREAD: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum CutoffTableError {
    #[error("at least {MIN_REPLICAS} replicas are required, got {0}")]
    InsufficientReplicas(usize),
    #[error("empty grid")]
    EmptyGrid,
    #[error("invalid cell: {0}")]
    InvalidCell(String),
}

/// Index of the nearest quality bucket.
pub fn q_bucket(q: f64) -> usize {
    let idx = ((q - Q_GRID[0]) / 0.1).round();
    idx.clamp(0.0, (Q_GRID.len() - 1) as f64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffCell {
    pub b: usize,
    pub n: usize,
    pub q_bucket: f64,
    pub c_star: usize,
    pub est_cost: f64,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CutoffTable {
    cells: BTreeMap<(usize, usize, usize), CutoffCell>,
}

impl CutoffTable {
    pub fn from_cells(cells: impl IntoIterator<Item = CutoffCell>) -> Result<Self, CutoffTableError> {
        let mut map = BTreeMap::new();
        for cell in cells {
            if cell.n > 0 && cell.c_star >= cell.n {
                return Err(CutoffTableError::InvalidCell(format!(
                    "c_star {} not below n {}",
                    cell.c_star, cell.n
                )));
            }
            let qi = q_bucket(cell.q_bucket);
            if (Q_GRID[qi] - cell.q_bucket).abs() > 1e-9 {
                return Err(CutoffTableError::InvalidCell(format!(
                    "q_bucket {} is not on the grid",
                    cell.q_bucket
                )));
            }
            map.insert((cell.b, cell.n, qi), cell);
        }
        Ok(CutoffTable { cells: map })
    }

    pub fn cells(&self) -> impl Iterator<Item = &CutoffCell> {
        self.cells.values()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cutoff for `n` candidates at quality `q`. Off-grid `n` uses the
    /// nearest tabulated length with the cutoff scaled by `n / n_grid`.
    /// `None` when the budget is not tabulated.
    pub fn lookup(&self, b: usize, n: usize, q: f64) -> Option<usize> {
        if n <= 1 {
            return Some(0);
        }
        let qi = q_bucket(q);
        if let Some(cell) = self.cells.get(&(b, n, qi)) {
            return Some(cell.c_star.min(n - 1));
        }
        let nearest = self
            .cells
            .range((b, 0, 0)..=(b, usize::MAX, usize::MAX))
            .filter(|((_, _, q), _)| *q == qi)
            .map(|(_, cell)| cell)
            .min_by_key(|cell| (cell.n.abs_diff(n), cell.n))?;
        let scaled = (nearest.c_star as f64 * n as f64 / nearest.n as f64).round() as usize;
        Some(scaled.min(n - 1))
    }
}

/// Achieved rank sum of the CCM rule with every cutoff, on one replica.
/// `pre` and `cand` hold ranks within the pooled scores.
fn ccm_rank_sums(pre: &[u32], cand: &[u32], out: &mut [u64]) {
    let b = pre.len();
    let mut learned: Vec<u32> = pre.to_vec();
    let mut slots: Vec<u32> = Vec::with_capacity(b);
    let mut reference: Vec<u32> = Vec::with_capacity(b);
    for (c, sum) in out.iter_mut().enumerate() {
        // reference = b best of preselection and the first c candidates
        reference.clear();
        reference.extend_from_slice(&learned);
        reference.sort_unstable_by(|x, y| y.cmp(x));
        reference.truncate(b);
        reference.reverse();
        slots.clear();
        slots.extend_from_slice(pre);
        let mut pointer = 0;
        for &r in &cand[c..] {
            if pointer == b {
                break;
            }
            if r > reference[pointer] {
                let (k, _) = slots.iter().enumerate().min_by_key(|(_, &v)| v).expect("b >= 1");
                slots[k] = r;
                pointer += 1;
            }
        }
        *sum = slots.iter().map(|&v| v as u64).sum();
        if c < cand.len() {
            learned.push(cand[c]);
        }
    }
}

/// Estimates one cell of the table.
pub fn build_cutoff_cell(
    b: usize,
    n: usize,
    q: f64,
    replicas: usize,
    seed: u64,
) -> Result<CutoffCell, CutoffTableError> {
    if replicas < MIN_REPLICAS {
        return Err(CutoffTableError::InsufficientReplicas(replicas));
    }
    if b == 0 || n == 0 {
        return Err(CutoffTableError::InvalidCell(format!("need b >= 1 and n >= 1, got b={b}, n={n}")));
    }
    let qi = q_bucket(q);
    let index = ((b as u64) << 32) | ((n as u64) << 8) | qi as u64;
    let mut rng = rng::indexed_stream(seed, Stream::Table, index);

    let q = Q_GRID[qi];
    let (lo, hi) = (
        (q - PRESELECTION_SPREAD).max(0.0),
        (q + PRESELECTION_SPREAD).min(1.0),
    );
    let mut totals = vec![0.0f64; n];
    let mut sums = vec![0u64; n];
    let mut scores: Vec<(f64, bool)> = Vec::with_capacity(b + n);
    let mut pre_ranks = vec![0u32; b];
    let mut cand_ranks = vec![0u32; n];
    let mut order: Vec<usize> = Vec::with_capacity(b + n);
    for _ in 0..replicas {
        scores.clear();
        scores.extend((0..b).map(|_| (rng.random_range(lo..=hi), true)));
        scores.extend((0..n).map(|_| (rng.random::<f64>(), false)));
        order.clear();
        order.extend(0..b + n);
        order.sort_by(|&x, &y| scores[x].0.total_cmp(&scores[y].0));
        for (r, &k) in order.iter().enumerate() {
            let rank = r as u32 + 1;
            if k < b {
                pre_ranks[k] = rank;
            } else {
                cand_ranks[k - b] = rank;
            }
        }
        // offline keeps the b largest ranks: (n+1) + ... + (n+b)
        let offline: u64 = ((n + 1) as u64..=(n + b) as u64).sum();
        ccm_rank_sums(&pre_ranks, &cand_ranks, &mut sums);
        for (t, &s) in totals.iter_mut().zip(&sums) {
            *t += (offline - s) as f64 / b as f64;
        }
    }
    let mean: Vec<f64> = totals.iter().map(|t| t / replicas as f64).collect();
    let smoothed: Vec<f64> = (0..n)
        .map(|c| {
            let window = &mean[c.saturating_sub(1)..(c + 2).min(n)];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect();
    let c_star = smoothed
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(c, _)| c)
        .expect("n >= 1");
    Ok(CutoffCell {
        b,
        n,
        q_bucket: q,
        c_star,
        est_cost: mean[c_star],
        replicas,
        seed,
    })
}

/// Builds every `(b, n, q)` cell of the grids.
pub fn build_cutoff_table(
    budgets: &[usize],
    n_grid: &[usize],
    q_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<CutoffTable, CutoffTableError> {
    if budgets.is_empty() || n_grid.is_empty() || q_grid.is_empty() {
        return Err(CutoffTableError::EmptyGrid);
    }
    let mut cells = Vec::new();
    for &b in budgets {
        for &n in n_grid {
            for &q in q_grid {
                cells.push(build_cutoff_cell(b, n, q, replicas, seed)?);
            }
        }
    }
    CutoffTable::from_cells(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{run_online, OnlineRule, Scored, WsspInstance};

    #[test]
    fn bucket_lookup_is_nearest() {
        assert_eq!(q_bucket(0.0), 0);
        assert_eq!(q_bucket(0.14), 0);
        assert_eq!(q_bucket(0.16), 1);
        assert_eq!(q_bucket(0.5), 4);
        assert_eq!(q_bucket(0.99), 8);
    }

    #[test]
    fn rank_sums_match_generic_online_rule() {
        let mut r = crate::rng::seeded(4);
        for _ in 0..200 {
            let b = r.random_range(1..=4);
            let n = r.random_range(1..=12);
            let order = rand::seq::index::sample(&mut r, b + n, b + n).into_vec();
            let ranks: Vec<u32> = order.iter().map(|&v| v as u32 + 1).collect();
            let (pre, cand) = ranks.split_at(b);
            let mut sums = vec![0; n];
            ccm_rank_sums(pre, cand, &mut sums);
            let w = WsspInstance::new(
                b,
                pre.iter().enumerate().map(|(k, &v)| Scored::new(k, v as f64)).collect(),
                cand.iter().enumerate().map(|(k, &v)| Scored::new(b + k, v as f64)).collect(),
            )
            .unwrap();
            for c in 0..n {
                let d = run_online(&w, OnlineRule::Ccm { cutoff: c }).unwrap();
                let expected: u64 = d.selected.iter().map(|&i| w.score_of(i).unwrap() as u64).sum();
                assert_eq!(sums[c], expected, "b={b} n={n} c={c}");
            }
        }
    }

    #[test]
    fn table_is_deterministic() {
        let a = build_cutoff_table(&[2], &[5, 10], &[0.5], 1000, 3).unwrap();
        let b = build_cutoff_table(&[2], &[5, 10], &[0.5], 1000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.cells().all(|c| c.c_star < c.n));
    }

    #[test]
    fn rejects_few_replicas() {
        assert_eq!(
            build_cutoff_cell(1, 10, 0.5, 999, 0),
            Err(CutoffTableError::InsufficientReplicas(999))
        );
    }

    #[test]
    fn perfect_preselection_needs_little_learning() {
        let strong = build_cutoff_cell(1, 30, 0.9, 2000, 1).unwrap();
        let weak = build_cutoff_cell(1, 30, 0.1, 2000, 1).unwrap();
        assert!(strong.c_star <= weak.c_star);
        assert!(strong.c_star <= 30 / 3, "c* = {}", strong.c_star);
    }

    #[test]
    fn median_quality_cutoff_near_square_root_rule() {
        let cell = build_cutoff_cell(1, 100, 0.5, 2000, 2).unwrap();
        let reference = 100f64.sqrt() - 1.0;
        assert!(
            (cell.c_star as f64) >= reference / 2.0 && (cell.c_star as f64) <= reference * 2.0,
            "c* = {}",
            cell.c_star
        );
    }

    #[test]
    fn lookup_scales_between_grid_points() {
        let cells = [
            CutoffCell { b: 2, n: 10, q_bucket: 0.5, c_star: 3, est_cost: 0.0, replicas: 1000, seed: 0 },
            CutoffCell { b: 2, n: 20, q_bucket: 0.5, c_star: 6, est_cost: 0.0, replicas: 1000, seed: 0 },
        ];
        let t = CutoffTable::from_cells(cells).unwrap();
        assert_eq!(t.lookup(2, 10, 0.52), Some(3));
        assert_eq!(t.lookup(2, 40, 0.5), Some(12));
        assert_eq!(t.lookup(2, 1, 0.5), Some(0));
        assert_eq!(t.lookup(3, 10, 0.5), None);
        assert_eq!(t.lookup(2, 10, 0.9), None);
    }

    #[test]
    fn from_cells_validates() {
        let bad = CutoffCell { b: 1, n: 5, q_bucket: 0.5, c_star: 5, est_cost: 0.0, replicas: 1000, seed: 0 };
        assert!(CutoffTable::from_cells([bad]).is_err());
        let off_grid = CutoffCell { c_star: 1, q_bucket: 0.55, ..bad };
        assert!(CutoffTable::from_cells([off_grid]).is_err());
    }
}
