//! Ladder, field and Hamiltonian operators on the truncated basis.
//!
//! Composite operators are products of already-truncated matrices. The one
//! subtlety is the quadratic factor phi(u)* phi(u): it is assembled in
//! normal-ordered form,
//!
//!   phi* phi = ( a+^ a+  +  a-^ a-  +  a+^ a-^  +  a- a+ ) / 2  +  |u|^2 / 2,
//!
//! because in that form the product of truncated ladder matrices coincides
//! with the exact compression of the untruncated operator: no intermediate
//! state in any monomial overshoots the truncation unless the final state
//! does too. Higher powers (the quartic term, the cubic S/L/T words) are
//! then plain products of these truncated factors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, FockBasis, DEFAULT_DIMENSION_CAP};
use crate::grid::{dispersion_massive, smeared_vector, ModeGrid, ModeVector, SpatialQuadrature};
use crate::sparse::{SparseOperator, Symmetry};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Particle species of the charged field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    /// Charge +q quanta.
    Particle,
    /// Charge -q quanta.
    AntiParticle,
}

/// Mode-j annihilator for one species: occupation n -> n-1 with weight sqrt(n).
pub fn annihilator(basis: &FockBasis, species: Species, mode: usize) -> Result<SparseOperator> {
    if mode >= basis.modes() {
        return Err(Error::Operator(format!(
            "mode {mode} out of range for {} grid modes",
            basis.modes()
        )));
    }
    let mut triplets = Vec::new();
    for (col, state) in basis.states().iter().enumerate() {
        let occ = match species {
            Species::Particle => state.occ_plus[mode],
            Species::AntiParticle => state.occ_minus[mode],
        };
        if occ == 0 {
            continue;
        }
        let mut lowered = state.clone();
        match species {
            Species::Particle => lowered.occ_plus[mode] -= 1,
            Species::AntiParticle => lowered.occ_minus[mode] -= 1,
        }
        let row = basis
            .index_of(&lowered)
            .expect("lowering never leaves the truncated basis");
        triplets.push((row, col, Complex64::new((occ as f64).sqrt(), 0.0)));
    }
    SparseOperator::from_triplets(basis.dim(), &triplets, Symmetry::General)
}

/// Mode-j creator; the adjoint of the annihilator, with transitions out of
/// the truncated space dropped.
pub fn creator(basis: &FockBasis, species: Species, mode: usize) -> Result<SparseOperator> {
    Ok(annihilator(basis, species, mode)?.adjoint())
}

/// a_species(u) = sum_j conj(u_j) a_species(j); antilinear in u.
pub fn smeared_annihilator(
    basis: &FockBasis,
    species: Species,
    u: &ModeVector,
) -> Result<SparseOperator> {
    if u.len() != basis.modes() {
        return Err(Error::Operator(format!(
            "mode vector length {} does not match {} grid modes",
            u.len(),
            basis.modes()
        )));
    }
    let mut acc = SparseOperator::zeros(basis.dim());
    for j in 0..basis.modes() {
        let coeff = u.components()[j].conj();
        if coeff.re == 0.0 && coeff.im == 0.0 {
            continue;
        }
        let a = annihilator(basis, species, j)?;
        acc = acc.linear_combination(ONE, &a, coeff);
    }
    Ok(acc.with_symmetry(Symmetry::General))
}

pub fn smeared_creator(
    basis: &FockBasis,
    species: Species,
    u: &ModeVector,
) -> Result<SparseOperator> {
    Ok(smeared_annihilator(basis, species, u)?.adjoint())
}

/// Field operator phi(u) = (a+(u) + a-(u)^dagger) / sqrt(2), truncated.
pub fn field_operator(basis: &FockBasis, u: &ModeVector) -> Result<SparseOperator> {
    let ap = smeared_annihilator(basis, Species::Particle, u)?;
    let amd = smeared_creator(basis, Species::AntiParticle, u)?;
    let s = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    Ok(ap
        .linear_combination(s, &amd, s)
        .with_symmetry(Symmetry::General))
}

/// Exact compression of phi(u)* phi(u) to the truncated basis, assembled in
/// normal-ordered form (see module docs).
pub fn field_quadratic(basis: &FockBasis, u: &ModeVector) -> Result<SparseOperator> {
    let ap = smeared_annihilator(basis, Species::Particle, u)?;
    let am = smeared_annihilator(basis, Species::AntiParticle, u)?;
    let cp = ap.adjoint();
    let cm = am.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let number_like = cp.mul(&ap).plus(&cm.mul(&am));
    let pair = cp.mul(&cm).plus(&am.mul(&ap));
    let constant =
        SparseOperator::identity(basis.dim()).scaled(Complex64::new(u.norm_sq() / 2.0, 0.0));
    Ok(number_like
        .plus(&pair)
        .scaled(half)
        .plus(&constant)
        .with_symmetry(Symmetry::Hermitian))
}

/// Second quantization of a one-particle multiplication operator: diagonal
/// with entry sum_j occ_plus_j vals_plus_j + occ_minus_j vals_minus_j.
pub fn dgamma_diag(
    basis: &FockBasis,
    vals_plus: &[f64],
    vals_minus: &[f64],
) -> Result<SparseOperator> {
    if vals_plus.len() != basis.modes() || vals_minus.len() != basis.modes() {
        return Err(Error::Operator("dgamma value list length mismatch".into()));
    }
    let diag: Vec<f64> = basis
        .states()
        .iter()
        .map(|s| {
            s.occ_plus
                .iter()
                .zip(vals_plus)
                .map(|(&n, &v)| n as f64 * v)
                .sum::<f64>()
                + s.occ_minus
                    .iter()
                    .zip(vals_minus)
                    .map(|(&n, &v)| n as f64 * v)
                    .sum::<f64>()
        })
        .collect();
    Ok(SparseOperator::diagonal_real(&diag))
}

/// A((u, v))^dagger = a+(u)^dagger + a-(v)^dagger.
pub fn pair_creator(basis: &FockBasis, u: &ModeVector, v: &ModeVector) -> Result<SparseOperator> {
    let cu = smeared_creator(basis, Species::Particle, u)?;
    let cv = smeared_creator(basis, Species::AntiParticle, v)?;
    Ok(cu.plus(&cv))
}

/// Relative-bound constant with explicit admissibility margin.
#[derive(Debug, Clone, Copy)]
pub struct BoundConstant {
    pub epsilon: f64,
    pub eta: f64,
    pub theta: f64,
    /// lambda^2 - 2 eps - lambda^2 mu^2 eta / eps; must be positive.
    pub margin: f64,
    pub value: f64,
}

/// C(mu, lambda, eps, eta) evaluated with the discrete chi and profile norms.
pub fn bound_constant(
    mu: f64,
    lambda: f64,
    chi_l1: f64,
    phi_l2_sq: f64,
    epsilon: f64,
    eta: f64,
) -> Result<BoundConstant> {
    if epsilon <= 0.0 || eta <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "epsilon and eta must be positive (got {epsilon}, {eta})"
        )));
    }
    let margin = lambda * lambda - 2.0 * epsilon - lambda * lambda * mu * mu * eta / epsilon;
    if margin <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "lambda^2 - 2 eps - lambda^2 mu^2 eta/eps = {margin:.6e} <= 0 \
             (mu={mu}, lambda={lambda}, eps={epsilon}, eta={eta})"
        )));
    }
    let chi_sq = chi_l1 * chi_l1;
    let inner = lambda * lambda * mu * mu / (4.0 * epsilon * eta) * chi_sq
        + chi_sq / (4.0 * epsilon)
        + lambda * lambda * phi_l2_sq * phi_l2_sq
        + 1.0;
    Ok(BoundConstant {
        epsilon,
        eta,
        theta: 1.0,
        margin,
        value: inner.sqrt() / margin.sqrt(),
    })
}

/// Physical and numerical parameters of one model instance.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub mu: f64,
    pub lambda: f64,
    pub charge_unit: f64,
    pub mass: f64,
    pub n_max: u32,
    pub grid: ModeGrid,
    pub quad: SpatialQuadrature,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.lambda <= 0.0 {
            return Err(Error::Operator(format!(
                "lambda must be a positive coupling constant, got {}",
                self.lambda
            )));
        }
        if self.charge_unit == 0.0 {
            return Err(Error::Operator("charge unit q must be nonzero".into()));
        }
        if self.mass < 0.0 {
            return Err(Error::Operator(format!(
                "mass must be non-negative, got {}",
                self.mass
            )));
        }
        Ok(())
    }
}

/// Everything needed to assemble operators at one parameter point: the basis,
/// the smeared vectors at the quadrature points, and the cached field factors.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub basis: FockBasis,
    smeared: Vec<ModeVector>,
    fields: Vec<SparseOperator>,
    quadratics: Vec<SparseOperator>,
    /// phi(f_x) (phi* phi) per quadrature point, shared by S2 and T3.
    cubic_left: Vec<SparseOperator>,
    /// (phi* phi) phi(f_x)* per quadrature point, shared by L2 and T4.
    cubic_right: Vec<SparseOperator>,
    h1: SparseOperator,
    h2: SparseOperator,
}

/// S1, S2, L1, L2 evaluated at one grid mode.
pub struct SlOps {
    pub s1: SparseOperator,
    pub s2: SparseOperator,
    pub l1: SparseOperator,
    pub l2: SparseOperator,
}

/// T1..T4 for one pair of smearing vectors.
pub struct TOps {
    pub t1: SparseOperator,
    pub t2: SparseOperator,
    pub t3: SparseOperator,
    pub t4: SparseOperator,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        Model::with_cap(params, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(params: ModelParams, cap: usize) -> Result<Self> {
        params.validate()?;
        let basis = enumerate_basis(params.grid.modes(), params.n_max, cap)?;
        let smeared: Vec<ModeVector> = params
            .quad
            .points()
            .iter()
            .map(|x| smeared_vector(&params.grid, x))
            .collect();
        let fields: Vec<SparseOperator> = smeared
            .iter()
            .map(|f| field_operator(&basis, f))
            .collect::<Result<_>>()?;
        let quadratics: Vec<SparseOperator> = smeared
            .iter()
            .map(|f| field_quadratic(&basis, f))
            .collect::<Result<_>>()?;
        let cubic_left: Vec<SparseOperator> = fields
            .iter()
            .zip(quadratics.iter())
            .map(|(phi, quad)| phi.mul(quad))
            .collect();
        let cubic_right: Vec<SparseOperator> = fields
            .iter()
            .zip(quadratics.iter())
            .map(|(phi, quad)| quad.mul(&phi.adjoint()))
            .collect();
        let (h1, h2) = assemble_interactions(&params.quad, &quadratics, basis.dim());
        Ok(Model {
            params,
            basis,
            smeared,
            fields,
            quadratics,
            cubic_left,
            cubic_right,
            h1,
            h2,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn smeared_vectors(&self) -> &[ModeVector] {
        &self.smeared
    }

    pub fn field_at(&self, i: usize) -> &SparseOperator {
        &self.fields[i]
    }

    pub fn quadratic_at(&self, i: usize) -> &SparseOperator {
        &self.quadratics[i]
    }

    /// Discrete ||chi||_{L1}.
    pub fn chi_l1(&self) -> f64 {
        self.params.quad.chi_l1()
    }

    /// Discrete ||phi||_{L2}^2 of the cutoff profile.
    pub fn phi_l2_sq(&self) -> f64 {
        self.params.grid.profile_norm_sq()
    }

    /// Free Hamiltonian dGamma([omega]).
    pub fn h0(&self) -> SparseOperator {
        let omega = self.params.grid.omega();
        dgamma_diag(&self.basis, omega, omega).expect("lengths match by construction")
    }

    /// dGamma([omega_m]) for the massive dispersion.
    pub fn h_free_massive(&self, mass: f64) -> Result<SparseOperator> {
        let om = dispersion_massive(&self.params.grid, mass)?;
        dgamma_diag(&self.basis, &om, &om)
    }

    /// Number operator dGamma([1]).
    pub fn number_op(&self) -> SparseOperator {
        let ones = vec![1.0; self.basis.modes()];
        dgamma_diag(&self.basis, &ones, &ones).expect("lengths match by construction")
    }

    /// Total charge dGamma(q (+) -q) = q (N+ - N-).
    pub fn charge_op(&self) -> SparseOperator {
        let q = self.params.charge_unit;
        let plus = vec![q; self.basis.modes()];
        let minus = vec![-q; self.basis.modes()];
        dgamma_diag(&self.basis, &plus, &minus).expect("lengths match by construction")
    }

    pub fn h1(&self) -> &SparseOperator {
        &self.h1
    }

    pub fn h2(&self) -> &SparseOperator {
        &self.h2
    }

    /// H = H0 + mu H1 + lambda H2 at the model couplings.
    pub fn hamiltonian(&self) -> SparseOperator {
        self.hamiltonian_with(self.params.mu, self.params.lambda)
    }

    pub fn hamiltonian_with(&self, mu: f64, lambda: f64) -> SparseOperator {
        self.h0()
            .linear_combination(ONE, &self.h1, Complex64::new(mu, 0.0))
            .linear_combination(ONE, &self.h2, Complex64::new(lambda, 0.0))
            .with_symmetry(Symmetry::Hermitian)
    }

    /// H_m = dGamma([omega_m]) + mu H1 + lambda H2; equals `hamiltonian` at m=0.
    pub fn hamiltonian_massive(&self, mass: f64) -> Result<SparseOperator> {
        self.hamiltonian_massive_with(mass, self.params.mu, self.params.lambda)
    }

    pub fn hamiltonian_massive_with(
        &self,
        mass: f64,
        mu: f64,
        lambda: f64,
    ) -> Result<SparseOperator> {
        Ok(self
            .h_free_massive(mass)?
            .linear_combination(ONE, &self.h1, Complex64::new(mu, 0.0))
            .linear_combination(ONE, &self.h2, Complex64::new(lambda, 0.0))
            .with_symmetry(Symmetry::Hermitian))
    }

    /// Annihilation kernel at grid mode j: the mode annihilator scaled by
    /// 1/sqrt(w_j) (density normalization).
    pub fn mode_annihilator_density(
        &self,
        species: Species,
        mode: usize,
    ) -> Result<SparseOperator> {
        let a = annihilator(&self.basis, species, mode)?;
        Ok(a.scaled(Complex64::new(
            1.0 / self.params.grid.weights()[mode].sqrt(),
            0.0,
        )))
    }

    /// S1, S2, L1, L2 at grid mode j: quadrature sums of e^{-i k_j x} times
    /// phi, phi phi* phi, phi*, phi* phi phi* respectively.
    pub fn s_l_ops(&self, mode: usize) -> Result<SlOps> {
        if mode >= self.basis.modes() {
            return Err(Error::Operator(format!("mode {mode} out of range")));
        }
        let k = &self.params.grid.points()[mode];
        let dim = self.dim();
        let mut s1 = SparseOperator::zeros(dim);
        let mut s2 = SparseOperator::zeros(dim);
        let mut l1 = SparseOperator::zeros(dim);
        let mut l2 = SparseOperator::zeros(dim);
        for (i, x) in self.params.quad.points().iter().enumerate() {
            let w = self.params.quad.weights()[i] * self.params.quad.chi()[i];
            if w == 0.0 {
                continue;
            }
            let phase: f64 = -k.iter().zip(x.iter()).map(|(kj, xj)| kj * xj).sum::<f64>();
            let c = Complex64::new(phase.cos(), phase.sin()) * w;
            s1 = s1.linear_combination(ONE, &self.fields[i], c);
            s2 = s2.linear_combination(ONE, &self.cubic_left[i], c);
            l1 = l1.linear_combination(ONE, &self.fields[i].adjoint(), c);
            l2 = l2.linear_combination(ONE, &self.cubic_right[i], c);
        }
        Ok(SlOps { s1, s2, l1, l2 })
    }

    /// T1..T4 for smearing vectors (u, v): quadrature sums with scalar
    /// factors <f_x, v> or <f_x, u>.
    pub fn t_ops(&self, u: &ModeVector, v: &ModeVector) -> Result<TOps> {
        if u.len() != self.basis.modes() || v.len() != self.basis.modes() {
            return Err(Error::Operator("mode vector length mismatch".into()));
        }
        let dim = self.dim();
        let mut t1 = SparseOperator::zeros(dim);
        let mut t2 = SparseOperator::zeros(dim);
        let mut t3 = SparseOperator::zeros(dim);
        let mut t4 = SparseOperator::zeros(dim);
        for i in 0..self.params.quad.len() {
            let w = self.params.quad.weights()[i] * self.params.quad.chi()[i];
            if w == 0.0 {
                continue;
            }
            let f = &self.smeared[i];
            let cv = f.inner(v) * w;
            let cu = f.inner(u) * w;
            if cv.norm_sqr() > 0.0 {
                t1 = t1.linear_combination(ONE, &self.fields[i], cv);
                t3 = t3.linear_combination(ONE, &self.cubic_left[i], cv);
            }
            if cu.norm_sqr() > 0.0 {
                t2 = t2.linear_combination(ONE, &self.fields[i].adjoint(), cu);
                t4 = t4.linear_combination(ONE, &self.cubic_right[i], cu);
            }
        }
        Ok(TOps { t1, t2, t3, t4 })
    }

    /// Relative-bound constant at the model couplings.
    pub fn bound_constant(&self, epsilon: f64, eta: f64) -> Result<BoundConstant> {
        bound_constant(
            self.params.mu,
            self.params.lambda,
            self.chi_l1(),
            self.phi_l2_sq(),
            epsilon,
            eta,
        )
    }
}

fn assemble_interactions(
    quad: &SpatialQuadrature,
    quadratics: &[SparseOperator],
    dim: usize,
) -> (SparseOperator, SparseOperator) {
    let mut h1 = SparseOperator::zeros(dim);
    let mut h2 = SparseOperator::zeros(dim);
    for i in 0..quad.len() {
        let w = Complex64::new(quad.weights()[i] * quad.chi()[i], 0.0);
        if w.re == 0.0 {
            continue;
        }
        h1 = h1.linear_combination(ONE, &quadratics[i], w);
        h2 = h2.linear_combination(ONE, &quadratics[i].mul(&quadratics[i]), w);
    }
    (
        h1.with_symmetry(Symmetry::Hermitian),
        h2.with_symmetry(Symmetry::Hermitian),
    )
}
