//! Momentum grid, dispersion, cutoff profile and spatial quadrature.
//!
//! The grid is the finite stand-in for the one-particle momentum space: a
//! uniform midpoint grid on [-K, K]^d, mirror-symmetric and with the origin
//! excluded, so the massless dispersion omega(k) = |k| is strictly positive
//! on every mode and all inverse-power profile norms stay finite.
//!
//! Quadrature weights are folded into smeared one-particle vectors (each
//! component carries sqrt(w)), which makes discrete inner products plain
//! component sums and gives the mode ladder operators textbook commutators.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Momentum-space cutoff profile, even by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffProfile {
    /// (1 - |k|/K)_+ : real, even, compactly supported, C^1 off the boundary.
    Triangular,
    /// Indicator of |k| <= K.
    Indicator,
}

impl CutoffProfile {
    pub fn eval(&self, k_norm: f64, extent: f64) -> f64 {
        match self {
            CutoffProfile::Triangular => (1.0 - k_norm / extent).max(0.0),
            CutoffProfile::Indicator => {
                if k_norm <= extent {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CutoffProfile::Triangular => "triangular",
            CutoffProfile::Indicator => "indicator",
        }
    }
}

/// Discretized momentum space: points, weights, dispersion and profile values.
#[derive(Debug, Clone)]
pub struct ModeGrid {
    dim_d: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    omega: Vec<f64>,
    phi: Vec<Complex64>,
    mirror: Vec<usize>,
}

impl ModeGrid {
    /// Validating constructor for externally supplied components. The mirror
    /// map is recovered by exact negation search, so callers must build the
    /// point set symmetrically.
    pub fn from_components(
        dim_d: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        phi: Vec<Complex64>,
    ) -> Result<Self> {
        let m = points.len();
        if weights.len() != m || phi.len() != m {
            return Err(Error::Grid(format!(
                "component length mismatch: {} points, {} weights, {} phi",
                m,
                weights.len(),
                phi.len()
            )));
        }
        if m == 0 {
            return Err(Error::Grid("empty grid".into()));
        }
        for p in &points {
            if p.len() != dim_d {
                return Err(Error::Grid("point dimension mismatch".into()));
            }
        }
        if let Some(w) = weights.iter().find(|&&w| w <= 0.0) {
            return Err(Error::Grid(format!("non-positive weight {w}")));
        }
        let omega: Vec<f64> = points.iter().map(|p| norm(p)).collect();
        if let Some(o) = omega.iter().find(|&&o| o <= 0.0) {
            return Err(Error::Grid(format!(
                "dispersion value {o} not strictly positive (zero mode present)"
            )));
        }
        let mut mirror = vec![usize::MAX; m];
        for j in 0..m {
            let neg: Vec<f64> = points[j].iter().map(|x| -x).collect();
            let jm = points
                .iter()
                .position(|p| p == &neg)
                .ok_or_else(|| Error::Grid(format!("grid is not mirror-symmetric at mode {j}")))?;
            if weights[jm] != weights[j] {
                return Err(Error::Grid(format!("mirror weight mismatch at mode {j}")));
            }
            if (phi[jm].norm() - phi[j].norm()).abs() > 1e-15 * phi[j].norm().max(1.0) {
                return Err(Error::Grid(format!(
                    "profile is not even: |phi| differs between mode {j} and its mirror"
                )));
            }
            mirror[j] = jm;
        }
        Ok(ModeGrid {
            dim_d,
            points,
            weights,
            omega,
            phi,
            mirror,
        })
    }

    /// Fixture constructor without invariant validation. Intended for
    /// negative-control tests that need deliberately broken grids.
    pub fn from_components_unchecked(
        dim_d: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        phi: Vec<Complex64>,
    ) -> Self {
        let omega: Vec<f64> = points.iter().map(|p| norm(p)).collect();
        let mirror = (0..points.len()).collect();
        ModeGrid {
            dim_d,
            points,
            weights,
            omega,
            phi,
            mirror,
        }
    }

    pub fn dim_d(&self) -> usize {
        self.dim_d
    }

    pub fn modes(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    /// The involution j -> j' with k_{j'} = -k_j.
    pub fn mirror(&self, j: usize) -> usize {
        self.mirror[j]
    }

    /// Discrete profile norm squared, sum_j w_j |phi_j|^2.
    pub fn profile_norm_sq(&self) -> f64 {
        (0..self.modes())
            .map(|j| self.weights[j] * self.phi[j].norm_sqr())
            .sum()
    }

    /// Discrete weighted norm of omega^p * phi.
    pub fn omega_weighted_profile_norm(&self, p: f64) -> f64 {
        (0..self.modes())
            .map(|j| self.weights[j] * self.phi[j].norm_sqr() * self.omega[j].powf(2.0 * p))
            .sum::<f64>()
            .sqrt()
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Uniform midpoint grid on [-K, K]^d with the origin excluded.
///
/// Each axis carries coordinates +/-(t + 1/2) K/n_half, stored so that the
/// mirror image of a point is bitwise exact. M = (2 n_half)^d modes, uniform
/// weights (K/n_half)^d.
pub fn build_mode_grid(
    dim_d: usize,
    extent: f64,
    n_half: usize,
    profile: CutoffProfile,
) -> Result<ModeGrid> {
    if dim_d == 0 || dim_d > 3 {
        return Err(Error::Grid(format!(
            "spatial dimension {dim_d} unsupported (want 1..=3)"
        )));
    }
    if extent <= 0.0 {
        return Err(Error::Grid(format!(
            "momentum extent must be positive, got {extent}"
        )));
    }
    if n_half == 0 {
        return Err(Error::Grid("n_half must be at least 1".into()));
    }
    let h = extent / n_half as f64;
    let mut axis = Vec::with_capacity(2 * n_half);
    for t in (0..n_half).rev() {
        axis.push(-((t as f64 + 0.5) * h));
    }
    for t in 0..n_half {
        axis.push((t as f64 + 0.5) * h);
    }
    let per_axis = axis.len();
    let m = per_axis.pow(dim_d as u32);
    let mut points = Vec::with_capacity(m);
    let mut index = vec![0usize; dim_d];
    loop {
        points.push(index.iter().map(|&t| axis[t]).collect::<Vec<f64>>());
        let mut carry = dim_d;
        while carry > 0 {
            index[carry - 1] += 1;
            if index[carry - 1] < per_axis {
                break;
            }
            index[carry - 1] = 0;
            carry -= 1;
        }
        if carry == 0 {
            break;
        }
    }
    let weight = h.powi(dim_d as i32);
    let weights = vec![weight; m];
    let phi: Vec<Complex64> = points
        .iter()
        .map(|p| Complex64::new(profile.eval(norm(p), extent), 0.0))
        .collect();
    ModeGrid::from_components(dim_d, points, weights, phi)
}

/// omega_m(k) = sqrt(k^2 + m^2), mode-wise; equals the grid dispersion at m=0.
pub fn dispersion_massive(grid: &ModeGrid, mass: f64) -> Result<Vec<f64>> {
    if mass < 0.0 {
        return Err(Error::Grid(format!(
            "mass must be non-negative, got {mass}"
        )));
    }
    Ok(grid
        .omega()
        .iter()
        .map(|&o| (o * o + mass * mass).sqrt())
        .collect())
}

/// One-particle vector over grid modes with quadrature weights folded in,
/// so <u, v> is the plain component sum conj(u_j) v_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    components: Vec<Complex64>,
}

impl ModeVector {
    pub fn new(components: Vec<Complex64>) -> Self {
        ModeVector { components }
    }

    pub fn zeros(modes: usize) -> Self {
        ModeVector {
            components: vec![Complex64::new(0.0, 0.0); modes],
        }
    }

    /// Coordinate vector e_j.
    pub fn coordinate(modes: usize, j: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); modes];
        c[j] = Complex64::new(1.0, 0.0);
        ModeVector { components: c }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    pub fn norm_sq(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product, antilinear in self and linear in other.
    pub fn inner(&self, other: &ModeVector) -> Complex64 {
        assert_eq!(self.len(), other.len());
        self.components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// f_x with components sqrt(w_j) phi(k_j) / sqrt(omega(k_j)) e^{-i k_j . x}.
pub fn smeared_vector(grid: &ModeGrid, x: &[f64]) -> ModeVector {
    assert_eq!(x.len(), grid.dim_d(), "spatial point dimension mismatch");
    let components = (0..grid.modes())
        .map(|j| {
            let phase: f64 = -grid.points()[j]
                .iter()
                .zip(x.iter())
                .map(|(k, xi)| k * xi)
                .sum::<f64>();
            let rot = Complex64::new(phase.cos(), phase.sin());
            grid.phi()[j] / grid.omega()[j].sqrt() * grid.weights()[j].sqrt() * rot
        })
        .collect();
    ModeVector { components }
}

/// Spatial cutoff shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChiProfile {
    /// exp(-|x|^2 / width^2), truncated to the quadrature box.
    Gaussian { width: f64 },
    /// Constant height on the box.
    Uniform { height: f64 },
}

impl ChiProfile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ChiProfile::Gaussian { width } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-r2 / (width * width)).exp()
            }
            ChiProfile::Uniform { height } => *height,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChiProfile::Gaussian { .. } => "gaussian",
            ChiProfile::Uniform { .. } => "uniform",
        }
    }
}

/// Midpoint quadrature for the spatial cutoff integral.
#[derive(Debug, Clone)]
pub struct SpatialQuadrature {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    chi: Vec<f64>,
}

impl SpatialQuadrature {
    /// Validating constructor; rejects negative chi samples and non-positive
    /// weights.
    pub fn from_components(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        chi: Vec<f64>,
    ) -> Result<Self> {
        let p = points.len();
        if weights.len() != p || chi.len() != p {
            return Err(Error::Quadrature("component length mismatch".into()));
        }
        if p == 0 {
            return Err(Error::Quadrature("empty quadrature".into()));
        }
        if let Some(w) = weights.iter().find(|&&w| w <= 0.0) {
            return Err(Error::Quadrature(format!("non-positive weight {w}")));
        }
        if let Some(c) = chi.iter().find(|&&c| c < 0.0) {
            return Err(Error::Quadrature(format!(
                "negative chi sample {c}: the spatial cutoff must be non-negative"
            )));
        }
        let mass: f64 = weights.iter().zip(chi.iter()).map(|(w, c)| w * c).sum();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Quadrature(format!(
                "discrete L1 mass {mass} must be positive and finite"
            )));
        }
        Ok(SpatialQuadrature {
            points,
            weights,
            chi,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    /// Discrete L1 mass, sum_i w_i chi_i.
    pub fn chi_l1(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.chi.iter())
            .map(|(w, c)| w * c)
            .sum()
    }

    /// Discrete second moment, sum_i w_i (1 + |x_i|^2) chi_i.
    pub fn second_moment(&self) -> f64 {
        self.points
            .iter()
            .zip(self.weights.iter().zip(self.chi.iter()))
            .map(|(x, (w, c))| w * c * (1.0 + x.iter().map(|v| v * v).sum::<f64>()))
            .sum()
    }
}

/// Midpoint rule on [-L, L]^d with `count` points per axis.
///
/// With `normalize` the chi samples are rescaled so the discrete L1 mass is
/// exactly one.
pub fn build_spatial_quadrature(
    dim_d: usize,
    extent: f64,
    count: usize,
    chi: ChiProfile,
    normalize: bool,
) -> Result<SpatialQuadrature> {
    if extent <= 0.0 {
        return Err(Error::Quadrature(format!(
            "spatial extent must be positive, got {extent}"
        )));
    }
    if count == 0 {
        return Err(Error::Quadrature(
            "spatial point count must be at least 1".into(),
        ));
    }
    let h = 2.0 * extent / count as f64;
    let axis: Vec<f64> = (0..count).map(|i| -extent + (i as f64 + 0.5) * h).collect();
    let total = count.pow(dim_d as u32);
    let mut points = Vec::with_capacity(total);
    let mut index = vec![0usize; dim_d];
    loop {
        points.push(index.iter().map(|&t| axis[t]).collect::<Vec<f64>>());
        let mut carry = dim_d;
        while carry > 0 {
            index[carry - 1] += 1;
            if index[carry - 1] < count {
                break;
            }
            index[carry - 1] = 0;
            carry -= 1;
        }
        if carry == 0 {
            break;
        }
    }
    let weight = h.powi(dim_d as i32);
    let weights = vec![weight; points.len()];
    let mut chi_vals: Vec<f64> = points.iter().map(|x| chi.eval(x)).collect();
    if normalize {
        let mass: f64 = weights
            .iter()
            .zip(chi_vals.iter())
            .map(|(w, c)| w * c)
            .sum();
        if mass <= 0.0 {
            return Err(Error::Quadrature(
                "cannot normalize: zero discrete mass".into(),
            ));
        }
        for c in &mut chi_vals {
            *c /= mass;
        }
    }
    SpatialQuadrature::from_components(points, weights, chi_vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_grid_matches_hand_values() {
        // d=1, K=1, n_half=1, profile == 1 (indicator): points +/- 0.5.
        let g = build_mode_grid(1, 1.0, 1, CutoffProfile::Indicator).unwrap();
        assert_eq!(g.modes(), 2);
        assert_eq!(g.points()[0], vec![-0.5]);
        assert_eq!(g.points()[1], vec![0.5]);
        assert_eq!(g.omega(), &[0.5, 0.5]);
        assert_eq!(g.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn triangular_profile_values() {
        // d=1, K=1, n_half=2: k = -0.75, -0.25, 0.25, 0.75 and phi = 1-|k|.
        let g = build_mode_grid(1, 1.0, 2, CutoffProfile::Triangular).unwrap();
        let phi: Vec<f64> = g.phi().iter().map(|p| p.re).collect();
        assert_eq!(phi, vec![0.25, 0.75, 0.75, 0.25]);
    }

    #[test]
    fn mirror_is_exact_involution() {
        for (d, n) in [(1usize, 3usize), (2, 2), (3, 1)] {
            let g = build_mode_grid(d, 1.3, n, CutoffProfile::Triangular).unwrap();
            for j in 0..g.modes() {
                let jm = g.mirror(j);
                assert_eq!(g.mirror(jm), j);
                let neg: Vec<f64> = g.points()[j].iter().map(|x| -x).collect();
                assert_eq!(g.points()[jm], neg);
                assert_eq!(g.weights()[jm], g.weights()[j]);
                assert_eq!(g.phi()[jm].norm(), g.phi()[j].norm());
            }
        }
    }

    #[test]
    fn zero_extent_rejected() {
        assert!(build_mode_grid(1, 0.0, 1, CutoffProfile::Triangular).is_err());
        assert!(build_mode_grid(1, 1.0, 0, CutoffProfile::Triangular).is_err());
    }

    #[test]
    fn uneven_profile_rejected() {
        let points = vec![vec![-0.5], vec![0.5]];
        let weights = vec![1.0, 1.0];
        let phi = vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        assert!(ModeGrid::from_components(1, points, weights, phi).is_err());
    }

    #[test]
    fn massive_dispersion_values() {
        let g = build_mode_grid(1, 1.0, 1, CutoffProfile::Indicator).unwrap();
        assert_eq!(dispersion_massive(&g, 0.0).unwrap(), g.omega().to_vec());
        // 3-4-5 triple on a fixture grid point.
        let fixture = ModeGrid::from_components(
            1,
            vec![vec![-0.3], vec![0.3]],
            vec![1.0, 1.0],
            vec![Complex64::new(1.0, 0.0); 2],
        )
        .unwrap();
        let om = dispersion_massive(&fixture, 0.4).unwrap();
        assert!((om[0] - 0.5).abs() < 1e-15);
        assert!(dispersion_massive(&g, -0.1).is_err());
        // omega_m - omega <= m mode-wise, and monotone in m.
        for m in [0.1, 0.5, 1.0] {
            let om = dispersion_massive(&g, m).unwrap();
            for (a, b) in om.iter().zip(g.omega()) {
                assert!(a - b <= m + 1e-15);
                assert!(a >= b);
            }
        }
    }

    #[test]
    fn smeared_vector_norm_independent_of_x() {
        let g = build_mode_grid(1, 1.0, 2, CutoffProfile::Triangular).unwrap();
        let f0 = smeared_vector(&g, &[0.0]);
        for p in f0.components() {
            assert_eq!(p.im, 0.0); // e^0 = 1 and phi real
        }
        let base = f0.norm();
        let mut x = -1.7;
        for _ in 0..10 {
            let f = smeared_vector(&g, &[x]);
            assert!((f.norm() - base).abs() < 1e-13 * base);
            x += 0.43;
        }
    }

    #[test]
    fn smeared_vectors_have_real_inner_products() {
        // Im <f_x, f_y> = 0: pairwise cancellation over the symmetric grid,
        // checked against the direct summation oracle.
        let g = build_mode_grid(1, 2.0, 4, CutoffProfile::Triangular).unwrap();
        let norm0 = smeared_vector(&g, &[0.0]).norm_sq();
        for (x, y) in [(0.0, 0.7), (-1.3, 0.4), (2.2, -0.9)] {
            let fx = smeared_vector(&g, &[x]);
            let fy = smeared_vector(&g, &[y]);
            let direct: Complex64 = (0..g.modes())
                .map(|j| fx.components()[j].conj() * fy.components()[j])
                .sum();
            assert!((fx.inner(&fy) - direct).norm() < 1e-15);
            assert!(direct.im.abs() < 1e-13 * norm0);
        }
    }

    #[test]
    fn single_point_quadrature() {
        // L=1, P=1, chi == 0.5: one point at x=0, weight 2, mass 1.
        let q = build_spatial_quadrature(1, 1.0, 1, ChiProfile::Uniform { height: 0.5 }, false)
            .unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.points()[0], vec![0.0]);
        assert_eq!(q.weights()[0], 2.0);
        assert!((q.chi_l1() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_mass_converges_at_second_order() {
        // Midpoint mass vs a high-resolution quadrature oracle: O(P^-2).
        let oracle =
            build_spatial_quadrature(1, 2.0, 20000, ChiProfile::Gaussian { width: 1.0 }, false)
                .unwrap()
                .chi_l1();
        let mut errs = Vec::new();
        for p in [4usize, 8, 16] {
            let q = build_spatial_quadrature(1, 2.0, p, ChiProfile::Gaussian { width: 1.0 }, false)
                .unwrap();
            let err = (q.chi_l1() - oracle).abs();
            assert!(err <= 6.0 / (p * p) as f64, "P={p}: err {err}");
            errs.push(err);
        }
        // halving h cuts the error by about 4
        assert!(errs[0] / errs[1] > 2.5);
        assert!(errs[1] / errs[2] > 2.5);
    }

    #[test]
    fn negative_chi_sample_rejected() {
        let r = SpatialQuadrature::from_components(vec![vec![0.0]], vec![1.0], vec![-0.25]);
        assert!(r.is_err());
    }

    #[test]
    fn normalized_quadrature_has_unit_mass() {
        let q =
            build_spatial_quadrature(1, 2.0, 9, ChiProfile::Gaussian { width: 1.0 }, true).unwrap();
        assert!((q.chi_l1() - 1.0).abs() < 1e-14);
        assert!(q.second_moment().is_finite());
    }
}
