//! Sparse complex matrices in compressed-row form.
//!
//! Every quantized operator is realized as one of these. Assembly goes
//! through sums and products of elementary mode operators, so the emphasis
//! is on exact, deterministic arithmetic rather than raw speed: column
//! indices are kept sorted within each row, entries that cancel to exactly
//! zero are dropped, and no tolerance-based pruning ever happens.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity tag carried by an assembled operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    AntiHermitian,
    General,
}

impl Symmetry {
    pub fn as_str(self) -> &'static str {
        match self {
            Symmetry::Hermitian => "hermitian",
            Symmetry::AntiHermitian => "anti-hermitian",
            Symmetry::General => "general",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hermitian" => Ok(Symmetry::Hermitian),
            "anti-hermitian" => Ok(Symmetry::AntiHermitian),
            "general" => Ok(Symmetry::General),
            other => Err(Error::Record(format!("unknown symmetry tag `{other}`"))),
        }
    }
}

/// Square sparse matrix over the complex field, CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    symmetry: Symmetry,
}

fn is_exact_zero(z: Complex64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        SparseOperator {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetry: Symmetry::Hermitian,
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseOperator {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![Complex64::new(1.0, 0.0); dim],
            symmetry: Symmetry::Hermitian,
        }
    }

    /// Diagonal matrix; exact zeros on the diagonal are dropped.
    pub fn diagonal(entries: &[Complex64]) -> Self {
        let dim = entries.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, &v) in entries.iter().enumerate() {
            if !is_exact_zero(v) {
                col_idx.push(i);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let symmetry = if entries.iter().all(|v| v.im == 0.0) {
            Symmetry::Hermitian
        } else {
            Symmetry::General
        };
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetry,
        }
    }

    pub fn diagonal_real(entries: &[f64]) -> Self {
        let complex: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        SparseOperator::diagonal(&complex)
    }

    /// Build from (row, col, value) triplets. Duplicates are summed; exact
    /// zeros after summation are dropped.
    pub fn from_triplets(
        dim: usize,
        triplets: &[(usize, usize, Complex64)],
        symmetry: Symmetry,
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::Operator(format!(
                    "triplet index ({r}, {c}) out of range for dim {dim}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, Complex64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(sorted.len());
        let mut current_row = 0usize;
        for (r, c, v) in sorted {
            while current_row < r {
                row_ptr[current_row + 1] = col_idx.len();
                current_row += 1;
            }
            if col_idx.len() > row_ptr[current_row] && *col_idx.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
                if is_exact_zero(*values.last().unwrap()) {
                    values.pop();
                    col_idx.pop();
                }
            } else if !is_exact_zero(v) {
                col_idx.push(c);
                values.push(v);
            }
        }
        while current_row < dim {
            row_ptr[current_row + 1] = col_idx.len();
            current_row += 1;
        }
        Ok(SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetry,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        if is_exact_zero(alpha) {
            return SparseOperator::zeros(self.dim);
        }
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out.symmetry = scale_symmetry(self.symmetry, alpha);
        out
    }

    /// alpha * self + beta * other, merged row-wise.
    pub fn linear_combination(
        &self,
        alpha: Complex64,
        other: &SparseOperator,
        beta: Complex64,
    ) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let dim = self.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            let (mut pa, ea) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut pb, eb) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while pa < ea || pb < eb {
                let ca = if pa < ea {
                    self.col_idx[pa]
                } else {
                    usize::MAX
                };
                let cb = if pb < eb {
                    other.col_idx[pb]
                } else {
                    usize::MAX
                };
                let (c, v) = if ca < cb {
                    let v = alpha * self.values[pa];
                    pa += 1;
                    (ca, v)
                } else if cb < ca {
                    let v = beta * other.values[pb];
                    pb += 1;
                    (cb, v)
                } else {
                    let v = alpha * self.values[pa] + beta * other.values[pb];
                    pa += 1;
                    pb += 1;
                    (ca, v)
                };
                if !is_exact_zero(v) {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let symmetry = combine_symmetry(
            scale_symmetry(self.symmetry, alpha),
            scale_symmetry(other.symmetry, beta),
        );
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetry,
        }
    }

    pub fn plus(&self, other: &SparseOperator) -> Self {
        self.linear_combination(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn minus(&self, other: &SparseOperator) -> Self {
        self.linear_combination(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// Sparse product self * other with a dense row accumulator.
    pub fn mul(&self, other: &SparseOperator) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let dim = self.dim;
        let mut acc = vec![Complex64::new(0.0, 0.0); dim];
        let mut stamp = vec![usize::MAX; dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            touched.clear();
            for pa in self.row_ptr[i]..self.row_ptr[i + 1] {
                let k = self.col_idx[pa];
                let a = self.values[pa];
                for pb in other.row_ptr[k]..other.row_ptr[k + 1] {
                    let j = other.col_idx[pb];
                    if stamp[j] != i {
                        stamp[j] = i;
                        acc[j] = Complex64::new(0.0, 0.0);
                        touched.push(j);
                    }
                    acc[j] += a * other.values[pb];
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if !is_exact_zero(acc[j]) {
                    col_idx.push(j);
                    values.push(acc[j]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetry: Symmetry::General,
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let dim = self.dim;
        let mut counts = vec![0usize; dim + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.values.len()];
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for i in 0..dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[p];
                let slot = next[c];
                next[c] += 1;
                col_idx[slot] = i;
                values[slot] = self.values[p].conj();
            }
        }
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetry: self.symmetry,
        }
    }

    /// [self, other] = self*other - other*self.
    pub fn commutator(&self, other: &SparseOperator) -> Self {
        self.mul(other).minus(&other.mul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max absolute row sum; cheap upper bound on the operator 2-norm.
    pub fn inf_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.dim {
            let s: f64 = (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|p| self.values[p].norm())
                .sum();
            best = best.max(s);
        }
        best
    }

    /// Frobenius norm of the submatrix keeping only columns flagged in `keep`.
    /// This is the norm of `self * P` with P the diagonal 0/1 projector.
    pub fn fro_norm_cols(&self, keep: &[bool]) -> f64 {
        assert_eq!(keep.len(), self.dim);
        let mut acc = 0.0f64;
        for p in 0..self.values.len() {
            if keep[self.col_idx[p]] {
                acc += self.values[p].norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Max |A - A^\dagger| entry; zero for an exactly hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        self.minus(&self.adjoint()).max_abs()
    }

    /// Principal submatrix on the given (strictly increasing) index list.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            position[old] = new;
        }
        let dim = keep.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &old_row in keep {
            for p in self.row_ptr[old_row]..self.row_ptr[old_row + 1] {
                let new_col = position[self.col_idx[p]];
                if new_col != usize::MAX {
                    col_idx.push(new_col);
                    values.push(self.values[p]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetry: self.symmetry,
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[p])] = self.values[p];
            }
        }
        m
    }

    /// Text dump: header lines, then one `row col re im` line per entry.
    pub fn write_triplets<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# sparse-operator v1")?;
        writeln!(w, "# dim {}", self.dim)?;
        writeln!(w, "# symmetry {}", self.symmetry.as_str())?;
        writeln!(w, "# nnz {}", self.nnz())?;
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(
                    w,
                    "{} {} {:.16e} {:.16e}",
                    i, self.col_idx[p], self.values[p].re, self.values[p].im
                )?;
            }
        }
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut symmetry = Symmetry::General;
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                match parts.next() {
                    Some("dim") => {
                        dim = Some(
                            parts
                                .next()
                                .ok_or_else(|| Error::Record("missing dim value".into()))?
                                .parse()
                                .map_err(|e| Error::Record(format!("bad dim: {e}")))?,
                        );
                    }
                    Some("symmetry") => {
                        symmetry = Symmetry::parse(
                            parts
                                .next()
                                .ok_or_else(|| Error::Record("missing symmetry value".into()))?,
                        )?;
                    }
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Record(format!("bad triplet line `{line}`")));
            }
            let row: usize = fields[0]
                .parse()
                .map_err(|e| Error::Record(format!("bad row: {e}")))?;
            let col: usize = fields[1]
                .parse()
                .map_err(|e| Error::Record(format!("bad col: {e}")))?;
            let re: f64 = fields[2]
                .parse()
                .map_err(|e| Error::Record(format!("bad re: {e}")))?;
            let im: f64 = fields[3]
                .parse()
                .map_err(|e| Error::Record(format!("bad im: {e}")))?;
            triplets.push((row, col, Complex64::new(re, im)));
        }
        let dim = dim.ok_or_else(|| Error::Record("triplet dump missing `# dim` header".into()))?;
        SparseOperator::from_triplets(dim, &triplets, symmetry)
    }
}

fn scale_symmetry(s: Symmetry, alpha: Complex64) -> Symmetry {
    if is_exact_zero(alpha) {
        return Symmetry::Hermitian;
    }
    if alpha.im == 0.0 {
        s
    } else if alpha.re == 0.0 {
        match s {
            Symmetry::Hermitian => Symmetry::AntiHermitian,
            Symmetry::AntiHermitian => Symmetry::Hermitian,
            Symmetry::General => Symmetry::General,
        }
    } else {
        Symmetry::General
    }
}

fn combine_symmetry(a: Symmetry, b: Symmetry) -> Symmetry {
    if a == b {
        a
    } else {
        Symmetry::General
    }
}
