//! Occupation-number basis for the boson space truncated by total particle
//! number, and the ladder-operator matrices built on it.
//!
//! Truncation is by total boson number N_max, so the canonical commutation
//! relations hold exactly on the sub-basis with total number <= N_max - 1;
//! `ccr_defect` measures the floating-point remainder of that identity.

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Csr, OperatorMatrix};
use num_complex::Complex64 as C64;
use std::collections::HashMap;

/// Hard cap on basis dimension; enumeration refuses to build beyond it.
pub const BASIS_CAP: u128 = 50_000_000;

/// Occupation-number basis of the truncated Fock space.
///
/// States are ordered graded-lexicographically: by total boson number first,
/// then lexicographically within each total-number sector. State 0 is the
/// vacuum.
#[derive(Debug, Clone)]
pub struct FockBasis {
    m: usize,
    n_max: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// Offsets of each total-number sector in the state list.
    sector_offsets: Vec<usize>,
}

/// Binomial coefficient in u128 with overflow checks.
fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

/// dim = sum_{n=0}^{N_max} C(M+n-1, n), the stars-and-bars count.
pub fn basis_dimension(m: usize, n_max: usize) -> Result<usize> {
    let mut total: u128 = 0;
    for n in 0..=n_max as u128 {
        let c = binomial(m as u128 + n - 1, n)
            .ok_or(Error::DimensionOverflow { dim: u128::MAX, cap: BASIS_CAP })?;
        total = total
            .checked_add(c)
            .ok_or(Error::DimensionOverflow { dim: u128::MAX, cap: BASIS_CAP })?;
        if total > BASIS_CAP {
            return Err(Error::DimensionOverflow { dim: total, cap: BASIS_CAP });
        }
    }
    Ok(total as usize)
}

/// Enumerate the truncated basis for `m` modes and total-number cap `n_max`.
pub fn enumerate_basis(m: usize, n_max: usize) -> Result<FockBasis> {
    if m < 1 {
        return Err(Error::InvalidParameter("mode count must be >= 1".into()));
    }
    let dim = basis_dimension(m, n_max)?;
    let mut states = Vec::with_capacity(dim);
    let mut sector_offsets = Vec::with_capacity(n_max + 2);
    for total in 0..=n_max {
        sector_offsets.push(states.len());
        let mut state = vec![0u8; m];
        compositions(&mut state, 0, total as u8, &mut states);
    }
    sector_offsets.push(states.len());
    debug_assert_eq!(states.len(), dim);
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(FockBasis { m, n_max, states, index, sector_offsets })
}

/// All length-M compositions of `remaining`, lexicographically ascending.
fn compositions(state: &mut Vec<u8>, pos: usize, remaining: u8, out: &mut Vec<Vec<u8>>) {
    if pos == state.len() - 1 {
        state[pos] = remaining;
        out.push(state.clone());
        state[pos] = 0;
        return;
    }
    for head in 0..=remaining {
        state[pos] = head;
        compositions(state, pos + 1, remaining - head, out);
    }
    state[pos] = 0;
}

impl FockBasis {
    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, state: &[u8]) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn total_number(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Dimension of the sub-basis with total number <= cap.
    pub fn sector_dim(&self, cap: usize) -> usize {
        self.sector_offsets[(cap + 1).min(self.sector_offsets.len() - 1)]
    }

    /// Annihilation operator for mode j: maps n_j -> n_j - 1 with
    /// amplitude sqrt(n_j).
    pub fn mode_annihilator(&self, j: usize) -> Result<OperatorMatrix> {
        if j >= self.m {
            return Err(Error::InvalidParameter(format!(
                "mode index {j} out of range for {} modes",
                self.m
            )));
        }
        let mut triplets = Vec::new();
        for (i, state) in self.states.iter().enumerate() {
            let nj = state[j];
            if nj == 0 {
                continue;
            }
            let mut lowered = state.clone();
            lowered[j] = nj - 1;
            let target = self.index[&lowered];
            triplets.push((target, i, C64::new(f64::from(nj).sqrt(), 0.0)));
        }
        let mut op = OperatorMatrix::new(Csr::from_triplets(self.dim(), triplets));
        op.hermitian = Some(false);
        Ok(op)
    }

    /// Creation operator for mode j (conjugate transpose of the annihilator;
    /// states above the cap are truncated away).
    pub fn mode_creator(&self, j: usize) -> Result<OperatorMatrix> {
        let a = self.mode_annihilator(j)?;
        let triplets = a.csr.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        Ok(OperatorMatrix::new(Csr::from_triplets(self.dim(), triplets)))
    }

    /// Smeared annihilator a(h) = sum_j conj(h_j) a_j (antilinear in h).
    pub fn smeared_annihilator(&self, h: &[C64]) -> Result<OperatorMatrix> {
        if h.len() != self.m {
            return Err(Error::InvalidParameter(format!(
                "coefficient vector length {} does not match mode count {}",
                h.len(),
                self.m
            )));
        }
        let mut triplets = Vec::new();
        for (i, state) in self.states.iter().enumerate() {
            for (j, &nj) in state.iter().enumerate() {
                if nj == 0 || h[j] == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut lowered = state.clone();
                lowered[j] = nj - 1;
                let target = self.index[&lowered];
                triplets.push((target, i, h[j].conj() * f64::from(nj).sqrt()));
            }
        }
        Ok(OperatorMatrix::new(Csr::from_triplets(self.dim(), triplets)))
    }

    /// Smeared creator a*(h) = adjoint of a(h) (linear in h).
    pub fn smeared_creator(&self, h: &[C64]) -> Result<OperatorMatrix> {
        let a = self.smeared_annihilator(h)?;
        let triplets = a.csr.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        Ok(OperatorMatrix::new(Csr::from_triplets(self.dim(), triplets)))
    }

    /// Field operator Phi(h) = a(h) + a*(h) for real-ish couplings; used by
    /// the interaction term with h = the effective coupling vector.
    /// Built as sum_j (c_j a_j + c_j a_j^dagger), i.e. a(conj(c)) + a*(c).
    pub fn field_operator(&self, c: &[C64]) -> Result<OperatorMatrix> {
        let cconj: Vec<C64> = c.iter().map(|v| v.conj()).collect();
        let a = self.smeared_annihilator(&cconj)?; // a(conj(c)) = sum c_j a_j
        let astar = self.smeared_creator(c)?; // sum c_j a_j^dagger
        let mut op = OperatorMatrix::new(a.csr.add(&astar.csr));
        op.complex_symmetric = Some(true);
        Ok(op)
    }

    /// Number operator sum_j a_j^dagger a_j; diagonal in this basis.
    pub fn number_operator(&self) -> OperatorMatrix {
        let triplets = (0..self.dim())
            .map(|i| (i, i, C64::new(self.total_number(i) as f64, 0.0)))
            .collect();
        OperatorMatrix::new(Csr::from_triplets(self.dim(), triplets))
    }

    /// Operator norm of [a(h), a*(l)] - <h, l> Id restricted to the
    /// sub-basis with total number <= N_max - 1. Algebraically zero; the
    /// returned value is pure floating-point noise.
    pub fn ccr_defect(&self, h: &[C64], l: &[C64]) -> Result<f64> {
        let a_h = self.smeared_annihilator(h)?;
        let astar_l = self.smeared_creator(l)?;
        let inner: C64 = h.iter().zip(l).map(|(a, b)| a.conj() * b).sum();
        let sub = if self.n_max == 0 { 0 } else { self.sector_dim(self.n_max - 1) };
        if sub == 0 {
            return Ok(0.0);
        }
        // commutator = a_h astar_l - astar_l a_h, restricted to the sub-basis
        let ad = a_h.to_dense();
        let cd = astar_l.to_dense();
        let comm = ad.dot(&cd) - cd.dot(&ad);
        let mut triplets = Vec::new();
        for r in 0..sub {
            for c in 0..sub {
                let v = comm[(r, c)] - if r == c { inner } else { C64::new(0.0, 0.0) };
                if v != C64::new(0.0, 0.0) {
                    triplets.push((r, c, v));
                }
            }
        }
        let defect = Csr::from_triplets(sub, triplets);
        Ok(spectral_norm(&defect))
    }
}
