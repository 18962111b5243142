use std::collections::BTreeMap;

/// Sparse real matrix. Entries are kept sorted by (row, col), without
/// duplicates and without explicit zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triples; duplicates are summed, zeros
    /// dropped. Panics on an out-of-range index.
    pub fn from_entries<I>(rows: usize, cols: usize, it: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut map: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for (r, c, v) in it {
            assert!(r < rows && c < cols, "entry ({r},{c}) outside {rows}x{cols}");
            *map.entry((r as u32, c as u32)).or_insert(0.0) += v;
        }
        Self {
            rows,
            cols,
            entries: map
                .into_iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    pub fn from_dense(data: &[Vec<f64>]) -> Self {
        let rows = data.len();
        let cols = data.first().map_or(0, Vec::len);
        Self::from_entries(
            rows,
            cols,
            data.iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, v)| (r, c, *v))),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(r as u32, c as u32)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    /// Row `r` as a dense vector.
    pub fn row(&self, r: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for &(i, c, v) in &self.entries {
            if i as usize == r {
                out[c as usize] = v;
            }
        }
        out
    }

    /// `out += self * x`.
    #[inline]
    pub fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for &(r, c, v) in &self.entries {
            out[r as usize] += v * x[c as usize];
        }
    }

    /// Row indices that hold at least one entry, ascending.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        let mut rs: Vec<usize> = self.entries.iter().map(|e| e.0 as usize).collect();
        rs.dedup();
        rs
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.2.is_finite())
    }

    /// Mutable access for tests that corrupt a network on purpose.
    pub fn entries_mut(&mut self) -> &mut [(u32, u32, f64)] {
        &mut self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_multiply() {
        let m = Matrix::from_entries(2, 3, [(0, 0, 1.0), (1, 2, 2.0), (0, 0, 0.5), (1, 1, 0.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 1.5);
        assert_eq!(m.get(1, 1), 0.0);
        let mut out = vec![1.0, 1.0];
        m.mul_add(&[2.0, 5.0, 3.0], &mut out);
        assert_eq!(out, [4.0, 7.0]);
        assert_eq!(m.nonzero_rows(), [0, 1]);
        assert_eq!(m.row(1), [0.0, 0.0, 2.0]);
    }

    #[test]
    fn dense_round_trip() {
        let d = vec![vec![0.0, -1.0], vec![3.0, 0.0]];
        let m = Matrix::from_dense(&d);
        assert_eq!((0..2).map(|r| m.row(r)).collect::<Vec<_>>(), d);
        assert_eq!(m.max_abs(), 3.0);
    }
}
