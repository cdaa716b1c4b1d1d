use std::sync::Arc;

use faer::Mat;

use crate::basis::SectorBasis;
use crate::{Error, Result, C64};

/// A hermitian-or-not linear map that can be applied to dense vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`, overwriting `y`.
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// Sector-to-sector operator in compressed sparse row form.
///
/// Rows index the codomain basis and columns the domain basis. Within each
/// row the column indices are strictly increasing, so the entry list is
/// sorted by `(row, col)` and free of duplicates.
#[derive(Clone)]
pub struct SparseOperator {
    domain: Arc<SectorBasis>,
    codomain: Arc<SectorBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<C64>,
}

impl SparseOperator {
    /// Builds an operator from per-column entry lists. Duplicate rows within a
    /// column are summed in the order given; exact zeros are dropped.
    pub fn from_columns(
        domain: Arc<SectorBasis>,
        codomain: Arc<SectorBasis>,
        columns: Vec<Vec<(usize, C64)>>,
    ) -> Self {
        assert_eq!(columns.len(), domain.dim());
        let nrows = codomain.dim();
        let mut merged: Vec<Vec<(usize, C64)>> = Vec::with_capacity(columns.len());
        let mut counts = vec![0usize; nrows + 1];
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            let mut out: Vec<(usize, C64)> = Vec::with_capacity(col.len());
            for (r, v) in col {
                match out.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => out.push((r, v)),
                }
            }
            out.retain(|&(_, v)| v != C64::new(0.0, 0.0));
            for &(r, _) in &out {
                counts[r + 1] += 1;
            }
            merged.push(out);
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let nnz = counts[nrows];
        let mut cursor = counts.clone();
        let mut cols = vec![0u32; nnz];
        let mut values = vec![C64::new(0.0, 0.0); nnz];
        for (j, col) in merged.into_iter().enumerate() {
            for (r, v) in col {
                let at = cursor[r];
                cols[at] = j as u32;
                values[at] = v;
                cursor[r] += 1;
            }
        }
        Self {
            domain,
            codomain,
            row_ptr: counts,
            cols,
            values,
        }
    }

    pub fn from_triplets(
        domain: Arc<SectorBasis>,
        codomain: Arc<SectorBasis>,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut columns = vec![Vec::new(); domain.dim()];
        for (r, c, v) in triplets {
            columns[c].push((r, v));
        }
        Self::from_columns(domain, codomain, columns)
    }

    pub fn zero(domain: Arc<SectorBasis>, codomain: Arc<SectorBasis>) -> Self {
        let columns = vec![Vec::new(); domain.dim()];
        Self::from_columns(domain, codomain, columns)
    }

    pub fn diagonal(basis: Arc<SectorBasis>, diag: &[C64]) -> Self {
        assert_eq!(diag.len(), basis.dim());
        let columns = diag
            .iter()
            .enumerate()
            .map(|(j, &v)| vec![(j, v)])
            .collect();
        Self::from_columns(basis.clone(), basis, columns)
    }

    pub fn identity(basis: Arc<SectorBasis>) -> Self {
        let ones = vec![C64::new(1.0, 0.0); basis.dim()];
        Self::diagonal(basis, &ones)
    }

    pub fn domain(&self) -> &Arc<SectorBasis> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<SectorBasis> {
        &self.codomain
    }

    pub fn nrows(&self) -> usize {
        self.codomain.dim()
    }

    pub fn ncols(&self) -> usize {
        self.domain.dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// All stored entries as `(row, col, value)`, sorted by `(row, col)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows()).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&(col as u32)) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); self.ncols()];
        e[col] = C64::new(1.0, 0.0);
        self.apply(&e)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows()];
        self.apply_to(x, &mut y);
        y
    }

    /// `y = A x`.
    pub fn apply_to(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols());
        assert_eq!(y.len(), self.nrows());
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }

    /// `y += A^† x`.
    pub fn apply_adjoint_add(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.nrows());
        assert_eq!(y.len(), self.ncols());
        for (i, &xi) in x.iter().enumerate() {
            if xi == C64::new(0.0, 0.0) {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[k] as usize] += self.values[k].conj() * xi;
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut columns = vec![Vec::new(); self.nrows()];
        for (i, j, v) in self.entries() {
            columns[i].push((j, v.conj()));
        }
        Self::from_columns(self.codomain.clone(), self.domain.clone(), columns)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::from_triplets(
            self.domain.clone(),
            self.codomain.clone(),
            self.entries().map(|(i, j, v)| (i, j, v * factor)),
        )
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if *self.domain != *other.domain || *self.codomain != *other.codomain {
            return Err(Error::DimensionMismatch(format!(
                "{:?} -> {:?} vs {:?} -> {:?}",
                self.domain.label(),
                self.codomain.label(),
                other.domain.label(),
                other.codomain.label()
            )));
        }
        Ok(())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: C64) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut columns = vec![Vec::new(); self.ncols()];
        for (i, j, v) in self.entries() {
            columns[j].push((i, v));
        }
        for (i, j, v) in other.entries() {
            columns[j].push((i, v * factor));
        }
        Ok(Self::from_columns(
            self.domain.clone(),
            self.codomain.clone(),
            columns,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    /// Operator product `self ∘ rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if *rhs.codomain != *self.domain {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {:?} -> {:?} after {:?} -> {:?}",
                self.domain.label(),
                self.codomain.label(),
                rhs.domain.label(),
                rhs.codomain.label()
            )));
        }
        // Gustavson row-by-row product with a dense accumulator.
        let ncols = rhs.ncols();
        let mut acc = vec![C64::new(0.0, 0.0); ncols];
        let mut mark = vec![usize::MAX; ncols];
        let mut touched = Vec::new();
        let mut triplets = Vec::new();
        for i in 0..self.nrows() {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = C64::new(0.0, 0.0);
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                triplets.push((i, j, acc[j]));
            }
        }
        Ok(Self::from_triplets(
            rhs.domain.clone(),
            self.codomain.clone(),
            triplets,
        ))
    }

    /// Largest absolute entry; the natural scale for residual tolerances.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute entry, or 1 for the zero operator.
    pub fn tolerance_scale(&self) -> f64 {
        let s = self.max_abs();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// `max |A - A^†|` over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.nrows(), self.ncols());
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows(), self.ncols());
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_to(x, y)
    }
}

impl std::fmt::Debug for SparseOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SparseOperator({:?} -> {:?}, nnz {})",
            self.domain.label(),
            self.codomain.label(),
            self.nnz()
        )
    }
}
