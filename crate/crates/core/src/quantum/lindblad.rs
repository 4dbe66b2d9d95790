use super::density::DensityMatrix;
use super::hamiltonian::Hamiltonian;
use super::ops::hermiticity_error;
use super::{CMatrix, C64};
use crate::units::mhz_to_angular;
use crate::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Jump operator L with weight `rate` (rad/ns): contributes
/// rate·(LρL† − ½{L†L, ρ}).
#[derive(Debug, Clone)]
pub struct CollapseChannel {
    rate: f64,
    operator: CMatrix,
}

impl CollapseChannel {
    /// `rate` is an angular rate in rad/ns.
    pub fn new(rate: f64, operator: CMatrix) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::usage(format!("collapse rate must be finite and non-negative, got {rate}")));
        }
        if operator.nrows() != operator.ncols() {
            return Err(Error::usage("collapse operator must be square"));
        }
        Ok(Self { rate, operator })
    }

    /// `rate_mhz` is rate/2π in MHz.
    pub fn from_mhz(rate_mhz: f64, operator: CMatrix) -> Result<Self> {
        Self::new(mhz_to_angular(rate_mhz), operator)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn rate_mhz(&self) -> f64 {
        crate::units::angular_to_mhz(self.rate)
    }

    pub fn operator(&self) -> &CMatrix {
        &self.operator
    }
}

/// Hamiltonian, dissipators and level names: everything needed to evolve.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: Hamiltonian,
    channels: Vec<CollapseChannel>,
    labels: Vec<String>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Hamiltonian, channels: Vec<CollapseChannel>, labels: Vec<String>) -> Result<Self> {
        let dim = hamiltonian.dim();
        if !(2..=super::MAX_DIM).contains(&dim) {
            return Err(Error::usage(format!("dimension {dim} outside 2..={}", super::MAX_DIM)));
        }
        if labels.len() != dim {
            return Err(Error::usage(format!("{} labels for dimension {dim}", labels.len())));
        }
        if channels.iter().any(|c| c.operator.nrows() != dim) {
            return Err(Error::usage("collapse operator dimension mismatch"));
        }
        Ok(Self {
            hamiltonian,
            channels,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[CollapseChannel] {
        &self.channels
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn level(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::usage(format!("unknown level '{label}'")))
    }

    pub fn with_hamiltonian(&self, hamiltonian: Hamiltonian) -> Result<Self> {
        Self::new(hamiltonian, self.channels.clone(), self.labels.clone())
    }

    pub(crate) fn generator(&self) -> Generator {
        Generator::new(&self.hamiltonian, &self.channels)
    }
}

/// dρ/dt for a fixed Hamiltonian matrix.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &CMatrix, channels: &[CollapseChannel]) -> Result<CMatrix> {
    let n = rho.dim();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::usage("Hamiltonian dimension does not match the state"));
    }
    if channels.iter().any(|c| c.operator.nrows() != n) {
        return Err(Error::usage("collapse operator dimension mismatch"));
    }
    if hermiticity_error(h) > 1e-12 {
        return Err(Error::usage("Hamiltonian is not Hermitian"));
    }
    Ok(dense_rhs(rho.matrix(), h, channels))
}

pub(crate) fn dense_rhs(rho: &CMatrix, h: &CMatrix, channels: &[CollapseChannel]) -> CMatrix {
    let mut out = (h * rho - rho * h) * (-I);
    for c in channels {
        let l = &c.operator;
        let ld = l.adjoint();
        let ldl = &ld * l;
        let r = C64::new(c.rate, 0.0);
        out += (l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0)) * r;
    }
    out
}

/// Row-major vectorised generator: vec(dρ/dt) = 𝓛·vec(ρ), using
/// vec(AρB) = (A ⊗ Bᵀ)·vec(ρ).
pub fn liouvillian(h: &CMatrix, channels: &[CollapseChannel]) -> CMatrix {
    let n = h.nrows();
    let id = CMatrix::identity(n, n);
    let mut l = (id.kronecker(&h.transpose()) - h.kronecker(&id)) * I;
    for c in channels {
        let op = &c.operator;
        let ldl = op.adjoint() * op;
        let r = C64::new(c.rate, 0.0);
        l += (op.kronecker(&op.conjugate())
            - (ldl.kronecker(&id) + id.kronecker(&ldl.transpose())) * C64::new(0.5, 0.0))
            * r;
    }
    l
}

/// Tr(ρ·O) for Hermitian O.
pub fn expectation(rho: &DensityMatrix, observable: &CMatrix) -> Result<f64> {
    if observable.nrows() != rho.dim() || observable.ncols() != rho.dim() {
        return Err(Error::usage("observable dimension does not match the state"));
    }
    if hermiticity_error(observable) > 1e-10 {
        return Err(Error::usage("observable is not Hermitian"));
    }
    let v = (rho.matrix() * observable).trace();
    if v.im.abs() > 1e-10 {
        return Err(Error::usage(format!("expectation has imaginary residue {:.3e}", v.im)));
    }
    Ok(v.re)
}

/// Sparse operator as (row, column, value) triples.
type Triplets = Vec<(usize, usize, C64)>;

/// Compiled right-hand side working on row-major slices.
///
/// dρ/dt = −i(Kρ − ρK†) + Σ r·LρL† with K = H − (i/2)Σ r·L†L.
pub(crate) struct Generator {
    n: usize,
    k_static: Vec<C64>,
    drives: Vec<(Vec<C64>, Vec<C64>, super::Envelope)>,
    jumps: Vec<(f64, Triplets)>,
    hold: Option<f64>,
}

impl Generator {
    fn new(h: &Hamiltonian, channels: &[CollapseChannel]) -> Self {
        let n = h.dim();
        let mut k = h.static_part().clone();
        let mut jumps = Vec::new();
        for c in channels {
            if c.rate == 0.0 {
                continue;
            }
            let ldl = c.operator.adjoint() * &c.operator;
            k -= ldl * C64::new(0.0, 0.5 * c.rate);
            let mut entries = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let v = c.operator[(i, j)];
                    if v != C64::new(0.0, 0.0) {
                        entries.push((i, j, v));
                    }
                }
            }
            if !entries.is_empty() {
                jumps.push((c.rate, entries));
            }
        }
        let drives = h
            .terms()
            .iter()
            .map(|(a, e)| (super::ops::to_row_major(a), super::ops::to_row_major(&a.adjoint()), e.clone()))
            .collect();
        Self {
            n,
            k_static: super::ops::to_row_major(&k),
            drives,
            jumps,
            hold: None,
        }
    }

    /// Freeze every envelope at time `ts` (used per sample-and-hold slice).
    pub(crate) fn frozen_at(mut self, ts: f64) -> Self {
        self.hold = Some(ts);
        self
    }

    /// K(t) into `k` (row-major).
    #[inline]
    fn effective(&self, t: f64, k: &mut [C64]) {
        k.copy_from_slice(&self.k_static);
        let ts = self.hold.unwrap_or(t);
        for (a, ad, env) in &self.drives {
            let c = env.at(ts);
            let cc = c.conj();
            for idx in 0..k.len() {
                k[idx] += a[idx] * c + ad[idx] * cc;
            }
        }
    }

    #[inline]
    pub(crate) fn rhs(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        let mut k = [C64::new(0.0, 0.0); 16];
        let k = &mut k[..n * n];
        self.effective(t, k);
        for i in 0..n {
            for j in 0..n {
                // (Kρ)_ij − (ρK†)_ij
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..n {
                    acc += k[i * n + m] * rho[m * n + j] - rho[i * n + m] * k[j * n + m].conj();
                }
                out[i * n + j] = C64::new(acc.im, -acc.re);
            }
        }
        for (r, entries) in &self.jumps {
            for &(a, i, x) in entries {
                let xr = x * *r;
                for &(b, j, y) in entries {
                    out[a * n + b] += xr * rho[i * n + j] * y.conj();
                }
            }
        }
    }
}
