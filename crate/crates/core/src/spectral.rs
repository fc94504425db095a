//! Ground-state solvers: restarted Lanczos with full reorthogonalization,
//! a dense hermitian oracle for desk-scale dimensions, per-sector solves
//! and the mass-limit sweep.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::operators::Model;
use crate::sparse::SparseOperator;

/// Hard ceiling for the dense oracle.
pub const DENSE_ORACLE_CAP: usize = 2000;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub dense_threshold: usize,
    /// Gap below which the ground space is reported as degenerate.
    pub degeneracy_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 2000,
            seed: 7,
            dense_threshold: 2000,
            degeneracy_tol: 1e-9,
        }
    }
}

/// Sector attribution of a computed ground vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SectorLabel {
    /// All mass in one charge sector.
    Pure(i64),
    /// Ground space degenerate or spread across sectors; carries the
    /// detected eigenspace dimension (1 when only the vector is known).
    Mixed { degeneracy: usize },
}

impl std::fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SectorLabel::Pure(z) => write!(f, "{z}"),
            SectorLabel::Mixed { degeneracy } => write!(f, "mixed({degeneracy})"),
        }
    }
}

/// One converged lowest-eigenpair solve.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub energy: f64,
    pub vector: Vec<Complex64>,
    pub sector: SectorLabel,
    /// <Phi, N_b Phi> = ||N_b^{1/2} Phi||^2.
    pub number_expect: f64,
    /// E1 - E0; infinite on a one-dimensional space.
    pub gap: f64,
    /// ||H Phi - E0 Phi||.
    pub residual: f64,
    /// Probability mass per charge sector.
    pub sector_mass: BTreeMap<i64, f64>,
}

/// Number-operator moments of a normalized vector.
#[derive(Debug, Clone)]
pub struct NumberMoment {
    pub expect: f64,
    /// n0 = floor(<N>) + 1, the smallest natural number exceeding <N>.
    pub n_zero: u32,
    pub sector_mass: BTreeMap<i64, f64>,
}

/// <N_b>, the derived n0 and per-sector probability mass.
pub fn number_moment(vector: &[Complex64], basis: &FockBasis) -> NumberMoment {
    let mut expect = 0.0;
    let mut sector_mass: BTreeMap<i64, f64> = BTreeMap::new();
    for (i, v) in vector.iter().enumerate() {
        let p = v.norm_sqr();
        if p == 0.0 {
            continue;
        }
        expect += p * basis.total(i) as f64;
        *sector_mass.entry(basis.charge_index(i)).or_insert(0.0) += p;
    }
    NumberMoment {
        expect,
        n_zero: expect.floor() as u32 + 1,
        sector_mass,
    }
}

/// Full spectrum by dense hermitian diagonalization, ascending eigenvalues.
/// The brute-force oracle behind every derived expectation.
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

pub fn oracle_dense_diag(op: &SparseOperator) -> Result<DenseSpectrum> {
    let dim = op.dim();
    if dim > DENSE_ORACLE_CAP {
        return Err(Error::Operator(format!(
            "dense oracle limited to dim <= {DENSE_ORACLE_CAP}, got {dim}"
        )));
    }
    if dim == 0 {
        return Err(Error::Operator("empty operator".into()));
    }
    let eig = SymmetricEigen::new(op.to_dense());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::<Complex64>::zeros(dim, dim);
    for (new, &old) in order.iter().enumerate() {
        eigenvectors.set_column(new, &eig.eigenvectors.column(old));
    }
    Ok(DenseSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * *xi;
    }
}

fn scale(y: &mut [Complex64], s: f64) {
    for yi in y.iter_mut() {
        *yi *= s;
    }
}

/// Deterministic pseudo-random start vector.
fn start_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

/// Lowest eigenpair of a hermitian operator restricted to the orthogonal
/// complement of `locked`, by restarted Lanczos with full
/// reorthogonalization. Returns (eigenvalue, vector, residual norm).
pub fn lanczos_lowest(
    op: &SparseOperator,
    locked: &[Vec<Complex64>],
    opts: &SolverOptions,
) -> Result<(f64, Vec<Complex64>, f64)> {
    let dim = op.dim();
    let free_dim = dim - locked.len();
    if free_dim == 0 {
        return Err(Error::Operator(
            "no free directions left for Lanczos".into(),
        ));
    }
    let scale_est = op.inf_norm().max(1.0);
    let block = free_dim.min(60);
    let mut v = start_vector(dim, opts.seed);
    let mut applied = 0usize;
    let mut best_residual = f64::INFINITY;

    let project_out = |v: &mut Vec<Complex64>, others: &[Vec<Complex64>]| {
        for q in others {
            let c = inner(q, v);
            axpy(v, -c, q);
        }
    };

    while applied < opts.max_iter {
        project_out(&mut v, locked);
        let n0 = norm(&v);
        if n0 < 1e-300 {
            v = start_vector(dim, opts.seed.wrapping_add(applied as u64 + 1));
            continue;
        }
        scale(&mut v, 1.0 / n0);

        let mut qs: Vec<Vec<Complex64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut breakdown = false;
        for step in 0..block {
            let mut w = op.matvec(&qs[step]);
            applied += 1;
            let a = inner(&qs[step], &w).re;
            alpha.push(a);
            axpy(&mut w, Complex64::new(-a, 0.0), &qs[step]);
            if step > 0 {
                let b = beta[step - 1];
                axpy(&mut w, Complex64::new(-b, 0.0), &qs[step - 1]);
            }
            // full reorthogonalization, twice for cancellation safety
            for _ in 0..2 {
                project_out(&mut w, locked);
                project_out(&mut w, &qs);
            }
            let b = norm(&w);
            if step + 1 == block || applied >= opts.max_iter {
                break;
            }
            if b < 1e-13 * scale_est {
                breakdown = true;
                break;
            }
            beta.push(b);
            scale(&mut w, 1.0 / b);
            qs.push(w);
        }

        // Ritz pairs of the small tridiagonal
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut jmin = 0usize;
        for j in 1..m {
            if eig.eigenvalues[j] < eig.eigenvalues[jmin] {
                jmin = j;
            }
        }
        let theta = eig.eigenvalues[jmin];
        let mut ritz = vec![Complex64::new(0.0, 0.0); dim];
        for (i, q) in qs.iter().enumerate() {
            axpy(
                &mut ritz,
                Complex64::new(eig.eigenvectors[(i, jmin)], 0.0),
                q,
            );
        }
        project_out(&mut ritz, locked);
        let rn = norm(&ritz);
        if rn < 1e-300 {
            v = start_vector(dim, opts.seed.wrapping_add(applied as u64 + 13));
            continue;
        }
        scale(&mut ritz, 1.0 / rn);
        // exact residual
        let hx = op.matvec(&ritz);
        applied += 1;
        let mut r = hx;
        axpy(&mut r, Complex64::new(-theta, 0.0), &ritz);
        let res = norm(&r);
        best_residual = best_residual.min(res);
        if res <= opts.tol * (theta.abs() + scale_est) || breakdown {
            return Ok((theta, ritz, res));
        }
        v = ritz;
    }
    Err(Error::NoConvergence {
        iterations: applied,
        residual: best_residual,
    })
}

fn postprocess(
    energy: f64,
    vector: Vec<Complex64>,
    gap: f64,
    residual: f64,
    degeneracy: usize,
    basis: &FockBasis,
) -> SpectralResult {
    let moment = number_moment(&vector, basis);
    let sector = if degeneracy > 1 {
        SectorLabel::Mixed { degeneracy }
    } else {
        // a vector is attributed to a sector when it carries all but
        // rounding mass there
        let dominant = moment
            .sector_mass
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(&z, _)| z);
        match dominant {
            Some(z) if moment.sector_mass[&z] >= 1.0 - 1e-10 => SectorLabel::Pure(z),
            Some(_) => SectorLabel::Mixed { degeneracy: 1 },
            None => SectorLabel::Pure(0),
        }
    };
    SpectralResult {
        energy,
        vector,
        sector,
        number_expect: moment.expect,
        gap,
        residual,
        sector_mass: moment.sector_mass,
    }
}

/// Lowest eigenpair via the dense oracle.
pub fn ground_state_dense(op: &SparseOperator, basis: &FockBasis) -> Result<SpectralResult> {
    let spec = oracle_dense_diag(op)?;
    let dim = op.dim();
    let e0 = spec.eigenvalues[0];
    let gap = if dim > 1 {
        spec.eigenvalues[1] - e0
    } else {
        f64::INFINITY
    };
    let vector: Vec<Complex64> = spec.eigenvectors.column(0).iter().copied().collect();
    let scale_est = op.inf_norm().max(1.0);
    let mut r = op.matvec(&vector);
    axpy(&mut r, Complex64::new(-e0, 0.0), &vector);
    let residual = norm(&r);
    let degeneracy = spec
        .eigenvalues
        .iter()
        .take_while(|&&e| e - e0 < 1e-9 * scale_est)
        .count();
    Ok(postprocess(e0, vector, gap, residual, degeneracy, basis))
}

/// Lowest eigenpair via Lanczos, with a second deflated solve for the gap.
pub fn ground_state_iterative(
    op: &SparseOperator,
    basis: &FockBasis,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    let dim = op.dim();
    if dim == 1 {
        let e0 = op.entry(0, 0).re;
        return Ok(postprocess(
            e0,
            vec![Complex64::new(1.0, 0.0)],
            f64::INFINITY,
            0.0,
            1,
            basis,
        ));
    }
    let (e0, v0, res0) = lanczos_lowest(op, &[], opts)?;
    let locked = vec![v0.clone()];
    let (e1, _, _) = lanczos_lowest(op, &locked, opts)?;
    let gap = e1 - e0;
    let scale_est = op.inf_norm().max(1.0);
    let degeneracy = if gap < opts.degeneracy_tol * scale_est {
        2
    } else {
        1
    };
    Ok(postprocess(e0, v0, gap, res0, degeneracy, basis))
}

/// Ground state with the documented path choice: dense solve at or below the
/// dense threshold, Lanczos above it.
pub fn ground_state(
    op: &SparseOperator,
    basis: &FockBasis,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    if op.symmetry() != crate::sparse::Symmetry::Hermitian {
        return Err(Error::Operator(
            "ground_state expects a hermitian-flagged operator".into(),
        ));
    }
    if op.dim() <= opts.dense_threshold.min(DENSE_ORACLE_CAP) {
        ground_state_dense(op, basis)
    } else {
        ground_state_iterative(op, basis, opts)
    }
}

/// Ground pair of the principal submatrix on one charge sector. The operator
/// must commute with the charge structure (checked entry-wise).
pub fn sector_ground_state(
    op: &SparseOperator,
    basis: &FockBasis,
    charge_op: &SparseOperator,
    z: i64,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    let indices = basis
        .sector(z)
        .ok_or_else(|| Error::Operator(format!("charge sector {z} is empty")))?;
    let comm = op.commutator(charge_op).max_abs();
    let tol = 1e-12 * op.inf_norm().max(1.0) * charge_op.inf_norm().max(1.0);
    if comm > tol {
        return Err(Error::Operator(format!(
            "operator does not commute with the charge operator (defect {comm:.3e})"
        )));
    }
    let sub = op
        .restrict(indices)
        .with_symmetry(crate::sparse::Symmetry::Hermitian);
    let sub_result = if sub.dim() <= opts.dense_threshold.min(DENSE_ORACLE_CAP) {
        let spec = oracle_dense_diag(&sub)?;
        let e0 = spec.eigenvalues[0];
        let gap = if sub.dim() > 1 {
            spec.eigenvalues[1] - e0
        } else {
            f64::INFINITY
        };
        let v: Vec<Complex64> = spec.eigenvectors.column(0).iter().copied().collect();
        (e0, v, gap)
    } else {
        let (e0, v, _) = lanczos_lowest(&sub, &[], opts)?;
        let (e1, _, _) = lanczos_lowest(&sub, std::slice::from_ref(&v), opts)?;
        (e0, v, e1 - e0)
    };
    let (e0, sub_vec, gap) = sub_result;
    let mut vector = vec![Complex64::new(0.0, 0.0); op.dim()];
    for (slot, &i) in indices.iter().enumerate() {
        vector[i] = sub_vec[slot];
    }
    let mut r = op.matvec(&vector);
    axpy(&mut r, Complex64::new(-e0, 0.0), &vector);
    let residual = norm(&r);
    let mut out = postprocess(e0, vector, gap, residual, 1, basis);
    out.sector = SectorLabel::Pure(z);
    Ok(out)
}

/// One row of a mass sweep.
#[derive(Debug, Clone)]
pub struct MassPoint {
    pub mass: f64,
    pub result: SpectralResult,
    /// E0(H_m) - E0(H); non-negative by operator monotonicity.
    pub excess_over_massless: f64,
}

/// Solve the massive Hamiltonian along a descending mass list plus m = 0.
/// Sweep points are independent and solved in parallel; results are merged
/// in input order.
pub fn mass_limit_sweep(
    model: &Model,
    masses: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<MassPoint>> {
    use rayon::prelude::*;
    for w in masses.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Operator(
                "mass list must be strictly descending".into(),
            ));
        }
    }
    if masses.iter().any(|&m| m <= 0.0) {
        return Err(Error::Operator("sweep masses must be positive".into()));
    }
    let h = model.hamiltonian();
    let massless = ground_state(&h, &model.basis, opts)?;
    let e_massless = massless.energy;
    let solved: Vec<Result<MassPoint>> = masses
        .par_iter()
        .map(|&m| {
            let hm = model.hamiltonian_massive(m)?;
            let r = ground_state(&hm, &model.basis, opts)?;
            let excess = r.energy - e_massless;
            Ok(MassPoint {
                mass: m,
                result: r,
                excess_over_massless: excess,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(masses.len() + 1);
    for r in solved {
        rows.push(r?);
    }
    rows.push(MassPoint {
        mass: 0.0,
        result: massless,
        excess_over_massless: 0.0,
    });
    Ok(rows)
}

/// Conjugate gradients for (H + shift) x = b with H hermitian and
/// H + shift positive definite. Used to apply resolvents without a dense
/// factorization.
pub fn solve_shifted_pd(
    op: &SparseOperator,
    shift: f64,
    b: &[Complex64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<Complex64>> {
    let dim = op.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); dim]);
    }
    let apply = |x: &[Complex64]| {
        let mut y = op.matvec(x);
        axpy(&mut y, Complex64::new(shift, 0.0), x);
        y
    };
    let mut x = vec![Complex64::new(0.0, 0.0); dim];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = inner(&r, &r).re;
    for _ in 0..max_iter {
        if rs.sqrt() <= rel_tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let denom = inner(&p, &ap).re;
        if denom <= 0.0 {
            return Err(Error::Operator(format!(
                "shifted operator is not positive definite (curvature {denom:.3e})"
            )));
        }
        let alpha = rs / denom;
        axpy(&mut x, Complex64::new(alpha, 0.0), &p);
        axpy(&mut r, Complex64::new(-alpha, 0.0), &ap);
        let rs_new = inner(&r, &r).re;
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..dim {
            p[i] = r[i] + Complex64::new(beta, 0.0) * p[i];
        }
    }
    if rs.sqrt() <= rel_tol * bnorm * 10.0 {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rs.sqrt() / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_basis;
    use crate::grid::{build_mode_grid, build_spatial_quadrature, ChiProfile, CutoffProfile};
    use crate::operators::ModelParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(mu: f64, lambda: f64, n_max: u32) -> Model {
        let grid = build_mode_grid(1, 1.0, 1, CutoffProfile::Triangular).unwrap();
        let quad =
            build_spatial_quadrature(1, 2.0, 5, ChiProfile::Gaussian { width: 1.0 }, true).unwrap();
        Model::new(ModelParams {
            mu,
            lambda,
            charge_unit: 1.0,
            mass: 0.0,
            n_max,
            grid,
            quad,
        })
        .unwrap()
    }

    #[test]
    fn dense_oracle_hermitian_2x2() {
        let op = SparseOperator::from_triplets(
            2,
            &[
                (0, 0, c(1.0, 0.0)),
                (0, 1, c(0.0, 1.0)),
                (1, 0, c(0.0, -1.0)),
                (1, 1, c(1.0, 0.0)),
            ],
            crate::sparse::Symmetry::Hermitian,
        )
        .unwrap();
        let spec = oracle_dense_diag(&op).unwrap();
        assert!((spec.eigenvalues[0] - 0.0).abs() < 1e-12);
        assert!((spec.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn h0_ground_state_is_vacuum() {
        let m = model(0.0, 1.0, 4);
        let h0 = m.h0();
        let opts = SolverOptions::default();
        let r = ground_state(&h0, &m.basis, &opts).unwrap();
        assert!(r.energy.abs() < 1e-12);
        assert_eq!(r.sector, SectorLabel::Pure(0));
        assert!(r.number_expect < 1e-12);
        // H0 eigenvalues are exactly the occupation-weighted omega sums
        let spec = oracle_dense_diag(&h0).unwrap();
        let mut expect: Vec<f64> = (0..m.dim()).map(|i| h0.entry(i, i).re).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in spec.eigenvalues.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn iterative_agrees_with_dense() {
        let m = model(-1.0, 0.5, 6);
        let h = m.hamiltonian();
        let opts = SolverOptions::default();
        let dense = ground_state_dense(&h, &m.basis).unwrap();
        let iter = ground_state_iterative(&h, &m.basis, &opts).unwrap();
        assert!(
            (dense.energy - iter.energy).abs() < 1e-8,
            "dense {} vs iterative {}",
            dense.energy,
            iter.energy
        );
        if dense.gap > 1e-6 {
            let overlap: Complex64 = inner(&dense.vector, &iter.vector);
            assert!(overlap.norm() > 1.0 - 1e-8);
        }
        assert!(iter.residual <= opts.tol * (iter.energy.abs() + h.inf_norm().max(1.0)));
    }

    #[test]
    fn sector_minimum_matches_global() {
        let m = model(-1.0, 1.0, 5);
        let h = m.hamiltonian();
        let q = m.charge_op();
        let opts = SolverOptions::default();
        let global = ground_state(&h, &m.basis, &opts).unwrap();
        let mut best = f64::INFINITY;
        for &z in m.basis.sectors().keys() {
            let r = sector_ground_state(&h, &m.basis, &q, z, &opts).unwrap();
            best = best.min(r.energy);
        }
        assert!((best - global.energy).abs() < 1e-10);
    }

    #[test]
    fn sector_top_charge_of_h0_fills_cheapest_mode() {
        // z = n_max sector of H0: all particles in the cheapest mode.
        let m = model(0.0, 1.0, 4);
        let h0 = m.h0();
        let q = m.charge_op();
        let opts = SolverOptions::default();
        let z = m.basis.n_max() as i64;
        let r = sector_ground_state(&h0, &m.basis, &q, z, &opts).unwrap();
        let omega_min = m
            .params
            .grid
            .omega()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((r.energy - m.basis.n_max() as f64 * omega_min).abs() < 1e-10);
    }

    #[test]
    fn empty_sector_and_commutator_guard() {
        let m = model(0.0, 1.0, 2);
        let h = m.hamiltonian();
        let q = m.charge_op();
        let opts = SolverOptions::default();
        assert!(sector_ground_state(&h, &m.basis, &q, 99, &opts).is_err());
        // an operator that moves charge must be rejected
        let bad = crate::operators::annihilator(&m.basis, crate::operators::Species::Particle, 0)
            .unwrap();
        let bad = bad
            .plus(&bad.adjoint())
            .with_symmetry(crate::sparse::Symmetry::Hermitian);
        assert!(sector_ground_state(&bad, &m.basis, &q, 0, &opts).is_err());
    }

    #[test]
    fn number_moments() {
        let basis = enumerate_basis(1, 3, 100).unwrap();
        let vac = basis.vacuum_index();
        let mut v = vec![c(0.0, 0.0); basis.dim()];
        v[vac] = c(1.0, 0.0);
        let m = number_moment(&v, &basis);
        assert_eq!(m.expect, 0.0);
        assert_eq!(m.n_zero, 1);
        assert_eq!(m.sector_mass.len(), 1);
        // a single two-particle basis state
        let two = crate::fock::FockState {
            occ_plus: vec![2],
            occ_minus: vec![0],
        };
        let i = basis.index_of(&two).unwrap();
        let mut v = vec![c(0.0, 0.0); basis.dim()];
        v[i] = c(1.0, 0.0);
        let m = number_moment(&v, &basis);
        assert_eq!(m.expect, 2.0);
        assert_eq!(m.n_zero, 3);
    }

    #[test]
    fn sweep_rows_and_ordering_guards() {
        let m = model(-1.0, 1.0, 4);
        let opts = SolverOptions::default();
        let rows = mass_limit_sweep(&m, &[1.0, 0.5, 0.1], &opts).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows.last().unwrap().mass, 0.0);
        for r in &rows {
            assert!(r.excess_over_massless >= -1e-10);
        }
        assert!(mass_limit_sweep(&m, &[0.5, 1.0], &opts).is_err());
        assert!(mass_limit_sweep(&m, &[1.0, 0.0], &opts).is_err());
    }

    #[test]
    fn non_convergence_reports_best_residual() {
        let m = model(-1.0, 1.0, 6);
        let h = m.hamiltonian();
        let opts = SolverOptions {
            tol: 1e-30,
            max_iter: 3,
            ..SolverOptions::default()
        };
        match ground_state_iterative(&h, &m.basis, &opts) {
            Err(crate::error::Error::NoConvergence {
                iterations,
                residual,
            }) => {
                assert!(iterations >= 3);
                assert!(residual.is_finite() && residual > 0.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn dense_oracle_on_vacuum_only_basis() {
        let m = model(0.5, 1.0, 0);
        let h = m.hamiltonian();
        assert_eq!(h.dim(), 1);
        let spec = oracle_dense_diag(&h).unwrap();
        assert_eq!(spec.eigenvalues.len(), 1);
        assert!((spec.eigenvalues[0] - h.entry(0, 0).re).abs() < 1e-15);
        let g = ground_state(&h, &m.basis, &SolverOptions::default()).unwrap();
        assert_eq!(g.gap, f64::INFINITY);
    }

    #[test]
    fn cg_matches_dense_resolvent() {
        let m = model(-1.0, 1.0, 4);
        let h = m.hamiltonian();
        let opts = SolverOptions::default();
        let g = ground_state(&h, &m.basis, &opts).unwrap();
        // solve (H - E0 + 0.7) x = b
        let shift = 0.7 - g.energy;
        let b: Vec<Complex64> = (0..m.dim())
            .map(|i| c((i % 5) as f64 - 2.0, (i % 3) as f64))
            .collect();
        let x = solve_shifted_pd(&h, shift, &b, 1e-12, 10_000).unwrap();
        let dense = h.to_dense() + DMatrix::<Complex64>::identity(m.dim(), m.dim()) * c(shift, 0.0);
        let xd = dense
            .lu()
            .solve(&nalgebra::DVector::from_vec(b.clone()))
            .expect("positive definite system");
        let diff: f64 = x
            .iter()
            .zip(xd.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-8, "CG vs dense solve diff {diff}");
    }

    #[test]
    fn variational_monotonicity_under_compression() {
        // Enlarging the space can only lower the ground energy of a fixed
        // assembled operator: E0(H) <= E0 of any principal submatrix. The
        // basis ordering by total makes the lower-truncation subspace an
        // index prefix.
        let opts = SolverOptions::default();
        for (mu, lambda) in [(-1.0, 1.0), (1.0, 0.1), (0.0, 1.0)] {
            let big = model(mu, lambda, 6);
            let h = big.hamiltonian();
            let e_big = ground_state(&h, &big.basis, &opts).unwrap().energy;
            let small_dim = crate::fock::dimension(big.basis.modes(), 4) as usize;
            let keep: Vec<usize> = (0..small_dim).collect();
            assert!(big.basis.states()[..small_dim]
                .iter()
                .all(|s| s.total() <= 4));
            let sub = h
                .restrict(&keep)
                .with_symmetry(crate::sparse::Symmetry::Hermitian);
            let e_small = oracle_dense_diag(&sub).unwrap().eigenvalues[0];
            assert!(
                e_big <= e_small + 1e-12,
                "E0(full) = {e_big} vs E0(compressed) = {e_small} at mu={mu} lambda={lambda}"
            );
        }
    }
}
