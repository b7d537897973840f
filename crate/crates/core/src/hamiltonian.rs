//! Assembly of the free, interaction, and full dilated Hamiltonians on the
//! truncated space C^2 (x) Fock.
//!
//! Spin ordering is (phi_1, phi_0): spin block 0 carries the upper atomic
//! level e_1, spin block 1 the ground level e_0 = 0, so K = diag(e_1, 0).
//! Global index = spin * fock_dim + fock_index.

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, FockBasis};
use crate::linalg::{Csr, OperatorMatrix};
use crate::modes::{
    dilated_dispersion, effective_coupling, DilationParam, FormFactorParams, GridSpec, RadialGrid,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// All physical and numerical parameters of one model instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    /// Upper atomic level; the ground level is fixed at e_0 = 0.
    pub e1: f64,
    /// Coupling constant g >= 0.
    pub g: f64,
    pub form: FormFactorParams,
    pub theta: DilationParam,
    pub grid: GridSpec,
    /// Total boson number cap.
    pub n_max: usize,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e1 > 0.0) {
            return Err(Error::InvalidParameter(format!("e1 = {} must be > 0", self.e1)));
        }
        if !(self.g >= 0.0) {
            return Err(Error::InvalidParameter(format!("g = {} must be >= 0", self.g)));
        }
        FormFactorParams::new(self.form.lambda, self.form.mu)?;
        self.grid.build()?;
        Ok(())
    }
}

/// A model instance with its basis, grid, and assembled operators.
pub struct Model {
    pub params: ModelParams,
    pub basis: FockBasis,
    pub grid: RadialGrid,
}

/// Spin block index of the upper level phi_1.
pub const SPIN_UP: usize = 0;
/// Spin block index of the ground level phi_0.
pub const SPIN_DOWN: usize = 1;

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let grid = params.grid.build()?;
        let basis = enumerate_basis(grid.len(), params.n_max)?;
        Ok(Model { params, basis, grid })
    }

    pub fn fock_dim(&self) -> usize {
        self.basis.dim()
    }

    /// Dimension of C^2 (x) Fock.
    pub fn dim(&self) -> usize {
        2 * self.basis.dim()
    }

    /// Index of phi_1 (x) Omega (the dressed-resonance unperturbed state).
    pub fn excited_vacuum_index(&self) -> usize {
        SPIN_UP * self.fock_dim()
    }

    /// Index of phi_0 (x) Omega (the unperturbed ground state).
    pub fn ground_vacuum_index(&self) -> usize {
        SPIN_DOWN * self.fock_dim()
    }

    /// Basis vector phi_i (x) Omega.
    pub fn atomic_vacuum(&self, spin: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[spin * self.fock_dim()] = C64::new(1.0, 0.0);
        v
    }

    /// sigma_1 (x) Id: swaps the two spin blocks.
    pub fn apply_sigma1(&self, x: &[C64]) -> Vec<C64> {
        let f = self.fock_dim();
        let mut y = vec![C64::new(0.0, 0.0); 2 * f];
        y[..f].copy_from_slice(&x[f..]);
        y[f..].copy_from_slice(&x[..f]);
        y
    }

    /// Free part K (x) Id + Id (x) H_f^theta at the given dilation.
    /// Diagonal: entries e_spin + exp(-theta) sum_j n_j r_j.
    pub fn assemble_free(&self, theta: &DilationParam) -> Result<OperatorMatrix> {
        let f = self.fock_dim();
        let mut triplets = Vec::with_capacity(2 * f);
        let levels = [self.params.e1, 0.0];
        // field contribution per Fock state
        let mut field = vec![C64::new(0.0, 0.0); f];
        for (i, fi) in field.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &nj) in self.basis.state(i).iter().enumerate() {
                if nj > 0 {
                    acc += dilated_dispersion(theta, self.grid.nodes()[j])? * f64::from(nj);
                }
            }
            *fi = acc;
        }
        for spin in 0..2 {
            for i in 0..f {
                let idx = spin * f + i;
                triplets.push((idx, idx, field[i] + levels[spin]));
            }
        }
        let mut op = OperatorMatrix::new(Csr::from_triplets(2 * f, triplets));
        op.hermitian = Some(theta.im == 0.0);
        op.complex_symmetric = Some(true);
        Ok(op)
    }

    /// Interaction sigma_1 (x) sum_j c_j(theta) (a_j + a_j^dagger), with
    /// c_j from `effective_coupling`. Complex symmetric for every theta;
    /// the smeared form a(f^conj(theta)) + a*(f^theta) collapses to these
    /// coefficients because f^conj(theta) = conj(f^theta) pointwise.
    pub fn assemble_interaction(&self, theta: &DilationParam) -> Result<OperatorMatrix> {
        let c = effective_coupling(&self.grid, theta, &self.params.form)?;
        let phi = self.basis.field_operator(&c)?;
        let f = self.fock_dim();
        let mut triplets = Vec::with_capacity(2 * phi.csr.nnz());
        for (r, col, v) in phi.csr.entries() {
            // sigma_1 swaps spin blocks
            triplets.push((SPIN_UP * f + r, SPIN_DOWN * f + col, v));
            triplets.push((SPIN_DOWN * f + r, SPIN_UP * f + col, v));
        }
        let mut op = OperatorMatrix::new(Csr::from_triplets(2 * f, triplets));
        op.hermitian = Some(theta.im == 0.0);
        op.complex_symmetric = Some(true);
        Ok(op)
    }

    /// Full dilated Hamiltonian H^theta = H_0^theta + g V^theta.
    pub fn assemble_full(&self, theta: &DilationParam) -> Result<OperatorMatrix> {
        let free = self.assemble_free(theta)?;
        let mut inter = self.assemble_interaction(theta)?;
        inter.csr.scale(C64::new(self.params.g, 0.0));
        let mut op = OperatorMatrix::new(free.csr.add(&inter.csr));
        op.hermitian = Some(theta.im == 0.0);
        op.complex_symmetric = Some(true);
        Ok(op)
    }

    /// H^theta at the model's own dilation parameter.
    pub fn hamiltonian(&self) -> Result<OperatorMatrix> {
        self.assemble_full(&self.params.theta)
    }

    /// Undilated (Hermitian) Hamiltonian.
    pub fn hamiltonian_undilated(&self) -> Result<OperatorMatrix> {
        self.assemble_full(&DilationParam::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::GridRule;

    fn small_model(g: f64, n_max: usize) -> Model {
        let params = ModelParams {
            e1: 1.0,
            g,
            form: FormFactorParams::new(1.0, 0.25).unwrap(),
            theta: DilationParam::new(0.0, 0.15).unwrap(),
            grid: GridSpec { r_min: 1e-3, r_max: 5.0, m: 6, rule: GridRule::LogGauss },
            n_max,
        };
        Model::new(params).unwrap()
    }

    #[test]
    fn free_hamiltonian_diagonal_and_vacuum_sector() {
        let m = small_model(0.0, 2);
        let h0 = m.assemble_free(&DilationParam::zero()).unwrap();
        // diagonal
        assert!(h0.csr.entries().all(|(r, c, _)| r == c));
        let d = h0.to_dense();
        // vacuum sector eigenvalues exactly {e1, 0}
        assert!((d[(m.excited_vacuum_index(), m.excited_vacuum_index())] - C64::new(1.0, 0.0))
            .norm()
            < 1e-15);
        assert!((d[(m.ground_vacuum_index(), m.ground_vacuum_index())]).norm() < 1e-15);
        // spectrum is {e_i + sum n_j r_j}
        for spin in 0..2 {
            for i in 0..m.fock_dim() {
                let expect: f64 = m
                    .basis
                    .state(i)
                    .iter()
                    .enumerate()
                    .map(|(j, &n)| f64::from(n) * m.grid.nodes()[j])
                    .sum::<f64>()
                    + if spin == SPIN_UP { 1.0 } else { 0.0 };
                let idx = spin * m.fock_dim() + i;
                assert!((d[(idx, idx)] - C64::new(expect, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn free_hamiltonian_dilated_diagonal() {
        let m = small_model(0.0, 1);
        let th = DilationParam::new(0.0, 0.15).unwrap();
        let h = m.assemble_free(&th).unwrap();
        let d = h.to_dense();
        let scale = (-C64::new(0.0, 0.15)).exp();
        for i in 0..m.fock_dim() {
            let occ: f64 = m
                .basis
                .state(i)
                .iter()
                .enumerate()
                .map(|(j, &n)| f64::from(n) * m.grid.nodes()[j])
                .sum();
            let idx = SPIN_DOWN * m.fock_dim() + i;
            assert!((d[(idx, idx)] - scale * occ).norm() < 1e-13);
        }
    }

    #[test]
    fn interaction_single_ladder_matrix_element() {
        let m = small_model(1.0, 1);
        let th = DilationParam::new(0.0, 0.12).unwrap();
        let v = m.assemble_interaction(&th).unwrap();
        let c = effective_coupling(&m.grid, &th, &m.params.form).unwrap();
        let d = v.to_dense();
        // <phi_1 Omega, V phi_0 (1 boson in mode j)> = c_j
        for j in 0..m.grid.len() {
            let mut one = vec![0u8; m.grid.len()];
            one[j] = 1;
            let fidx = m.basis.index_of(&one).unwrap();
            let row = m.excited_vacuum_index();
            let col = SPIN_DOWN * m.fock_dim() + fidx;
            assert!((d[(row, col)] - c[j]).norm() < 1e-14, "mode {j}");
        }
    }

    #[test]
    fn theta_zero_hamiltonian_is_real_symmetric() {
        let m = small_model(0.3, 2);
        let h = m.assemble_full(&DilationParam::zero()).unwrap();
        let rep = h.verify_flags().unwrap();
        assert!(rep.hermitian_defect <= 1e-14);
        assert!(rep.symmetric_defect <= 1e-14);
        assert!(h.csr.entries().all(|(_, _, v)| v.im == 0.0));
    }

    #[test]
    fn dilated_hamiltonian_complex_symmetric_not_hermitian() {
        let m = small_model(0.3, 2);
        let h = m.hamiltonian().unwrap();
        let rep = h.verify_flags().unwrap();
        assert!(rep.symmetric_defect <= 1e-14);
        assert!(rep.hermitian_defect > 1e-3);
    }

    #[test]
    fn conjugation_covariance_elementwise() {
        let m = small_model(0.25, 2);
        let h = m.hamiltonian().unwrap().to_dense();
        let hc = m.assemble_full(&m.params.theta.conj()).unwrap().to_dense();
        let max = h
            .iter()
            .zip(hc.iter())
            .map(|(a, b)| (a.conj() - b).norm())
            .fold(0.0_f64, f64::max);
        assert!(max <= 1e-14);
    }

    #[test]
    fn g_zero_block_diagonal_in_boson_number() {
        let m = small_model(0.0, 2);
        let h = m.hamiltonian().unwrap();
        for (r, c, _) in h.csr.entries() {
            assert_eq!(r, c); // free part is diagonal here
        }
    }
}
