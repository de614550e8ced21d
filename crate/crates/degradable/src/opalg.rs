//! Complex operator-algebra kernel.
//!
//! Everything downstream manipulates operators through this module:
//! Hermitian eigendecomposition, Moore–Penrose pseudo-inverse, partial
//! traces, superoperator ↔ Choi reshuffling and von Neumann entropy.
//!
//! Conventions, fixed once here and relied on everywhere:
//!
//! - Operator bases are matrix units `E_{jk}` in row-major `(j,k)` order, so
//!   the coefficient vector of `X` in that basis is the row-major
//!   vectorization `vec(X)`.
//! - A superoperator matrix for `Φ: M_{d_in} → M_{d_out}` has shape
//!   `(d_out², d_in²)` and acts as `vec(Φ(X)) = M · vec(X)`.
//! - The Choi operator of `Φ` lives on the `d_in·d_out` space with the input
//!   copy as the *first* tensor factor: `J = Σ_{jk} E_{jk} ⊗ Φ(E_{jk})`
//!   (unnormalized; the API-level [`crate::channel::ChoiMatrix`] divides by
//!   `d_in` so that the trace is one).
//! - Entropies are in bits (base-2 logarithms).

use nalgebra::DMatrix;

pub type Complex64 = num_complex::Complex<f64>;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which tensor factor `partial_trace` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

pub fn czero(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn ceye(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn cscalar(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Frobenius norm.
pub fn fnorm(m: &CMatrix) -> f64 {
    m.norm()
}

/// Hermiticity deviation `‖M − M†‖ / max(1, ‖M‖)`.
pub fn herm_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm() / f64::max(1.0, m.norm())
}

/// Symmetrize to the nearest Hermitian matrix, `(M + M†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Row-major vectorization: `vec(X)[j*cols + k] = X[(j,k)]`.
pub fn vec_row_major(m: &CMatrix) -> Vec<Complex64> {
    let (r, c) = m.shape();
    let mut v = Vec::with_capacity(r * c);
    for j in 0..r {
        for k in 0..c {
            v.push(m[(j, k)]);
        }
    }
    v
}

pub fn unvec_row_major(v: &[Complex64], rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |j, k| v[j * cols + k])
}

/// Partial trace of a square operator on a `d1·d2` bipartite space.
///
/// Index convention: the composite index is `a*d2 + b` with `a` on the first
/// factor.
pub fn partial_trace(m: &CMatrix, d1: usize, d2: usize, keep: Keep) -> crate::Result<CMatrix> {
    let n = d1 * d2;
    if m.nrows() != n || m.ncols() != n {
        return Err(crate::Error::DimensionMismatch(format!(
            "partial_trace expects a {n}x{n} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(match keep {
        Keep::First => CMatrix::from_fn(d1, d1, |a, ap| {
            (0..d2).map(|b| m[(a * d2 + b, ap * d2 + b)]).sum()
        }),
        Keep::Second => CMatrix::from_fn(d2, d2, |b, bp| {
            (0..d1).map(|a| m[(a * d2 + b, a * d2 + bp)]).sum()
        }),
    })
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// Returns `(eigenvalues, V)` with the columns of `V` the matching
/// orthonormal eigenvectors, so `H = V diag(λ) V†`.
pub fn herm_eig(h: &CMatrix, tol: f64) -> crate::Result<(Vec<f64>, CMatrix)> {
    let dev = herm_deviation(h);
    if dev > tol.max(1e-12) {
        return Err(crate::Error::NotHermitian(dev));
    }
    let n = h.nrows();
    let se = hermitize(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = czero(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Outcome of a positive-semidefiniteness test.
#[derive(Debug, Clone)]
pub enum PsdCheck {
    Psd,
    /// Minimum eigenvalue and a witness vector `v` with `⟨v, Hv⟩ < 0`.
    NotPsd {
        min_eigenvalue: f64,
        witness: Vec<Complex64>,
    },
}

impl PsdCheck {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdCheck::Psd)
    }
}

/// PSD iff the minimum eigenvalue is `≥ −tol·max(1, ‖H‖)`.
pub fn psd_check(h: &CMatrix, tol: f64) -> crate::Result<PsdCheck> {
    let (vals, vecs) = herm_eig(h, tol.max(1e-9))?;
    let n = h.nrows();
    let scale = f64::max(1.0, h.norm());
    let min = *vals.last().expect("nonempty spectrum");
    if min >= -tol * scale {
        Ok(PsdCheck::Psd)
    } else {
        Ok(PsdCheck::NotPsd {
            min_eigenvalue: min,
            witness: vecs.column(n - 1).iter().copied().collect(),
        })
    }
}

/// Moore–Penrose pseudo-inverse; singular values below `tol·σ_max` are
/// treated as zero.
pub fn pinv(m: &CMatrix, tol: f64) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax;
    let sinv = CMatrix::from_fn(vt.nrows(), u.ncols(), |i, j| {
        if i == j && svd.singular_values[i] > cut && svd.singular_values[i] > 0.0 {
            cscalar(1.0 / svd.singular_values[i])
        } else {
            ZERO
        }
    });
    vt.adjoint() * sinv * u.adjoint()
}

/// Numerical rank: count of singular values above `tol·σ_max`.
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|&&s| s > tol * smax).count()
}

/// Orthonormal basis of the (right) kernel of `m`; vectors with singular
/// value `≤ tol·σ_max` span it.
pub fn kernel_basis(m: &CMatrix, tol: f64) -> Vec<Vec<Complex64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax;
    let ncols = vt.ncols();
    let nsv = svd.singular_values.len();
    let mut basis = Vec::new();
    for i in 0..ncols {
        let below = i >= nsv || svd.singular_values[i] <= cut || smax == 0.0;
        if below {
            basis.push(vt.row(i).iter().map(|z| z.conj()).collect());
        }
    }
    basis
}

/// A trace-one positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, tol: f64) -> crate::Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(crate::Error::NotDensityMatrix("not square".into()));
        }
        let dev = herm_deviation(&matrix);
        if dev > tol.max(1e-9) {
            return Err(crate::Error::NotDensityMatrix(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e3 * tol.max(1e-9) || tr.im.abs() > 1e3 * tol.max(1e-9) {
            return Err(crate::Error::NotDensityMatrix(format!(
                "trace {tr} is not 1"
            )));
        }
        let (vals, _) = herm_eig(&matrix, tol.max(1e-9))?;
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -1e3 * tol.max(1e-9) {
            return Err(crate::Error::NotDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self {
            dim,
            matrix: hermitize(&matrix),
        })
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            dim,
            matrix: ceye(dim).scale(1.0 / dim as f64),
        }
    }

    /// Pure state `|ψ⟩⟨ψ|` from an (unnormalized) state vector.
    pub fn pure(psi: &[Complex64]) -> Self {
        let dim = psi.len();
        let nrm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let m = CMatrix::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj() / cscalar(nrm * nrm));
        Self { dim, matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// Von Neumann entropy in bits, `S(ρ) = −Σ λ log₂ λ` with `0·log 0 = 0`.
///
/// Eigenvalues are clipped to `[0, 1]` before the logarithm.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&spectrum(rho.matrix()))
}

/// Entropy of an arbitrary PSD trace-one Hermitian matrix, without the
/// validation cost of constructing a [`DensityMatrix`].
pub fn entropy_bits(m: &CMatrix) -> f64 {
    entropy_of_spectrum(&spectrum(m))
}

fn spectrum(m: &CMatrix) -> Vec<f64> {
    hermitize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

fn entropy_of_spectrum(vals: &[f64]) -> f64 {
    vals.iter()
        .map(|&l| {
            let l = l.clamp(0.0, 1.0);
            if l > 0.0 {
                -l * l.log2()
            } else {
                0.0
            }
        })
        .sum()
}

/// `f(H)` for Hermitian `H` through the spectral decomposition.
pub fn herm_fn(h: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let se = hermitize(h).symmetric_eigen();
    let n = h.nrows();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cscalar(f(se.eigenvalues[i]))
        } else {
            ZERO
        }
    });
    &se.eigenvectors * d * se.eigenvectors.adjoint()
}

/// Reshuffle a superoperator matrix into the (unnormalized) Choi operator.
///
/// `m` has shape `(d_out², d_in²)`; the result is the `d_in·d_out` square
/// matrix `Σ_{jk} E_{jk} ⊗ Φ(E_{jk})`.
pub fn reshuffle(m: &CMatrix, d_in: usize, d_out: usize) -> crate::Result<CMatrix> {
    if m.nrows() != d_out * d_out || m.ncols() != d_in * d_in {
        return Err(crate::Error::DimensionMismatch(format!(
            "reshuffle expects ({}, {}), got ({}, {})",
            d_out * d_out,
            d_in * d_in,
            m.nrows(),
            m.ncols()
        )));
    }
    let n = d_in * d_out;
    Ok(CMatrix::from_fn(n, n, |row, col| {
        let (j, p) = (row / d_out, row % d_out);
        let (k, q) = (col / d_out, col % d_out);
        m[(p * d_out + q, j * d_in + k)]
    }))
}

/// Inverse of [`reshuffle`]: Choi operator back to the superoperator matrix.
pub fn unreshuffle(j_mat: &CMatrix, d_in: usize, d_out: usize) -> crate::Result<CMatrix> {
    let n = d_in * d_out;
    if j_mat.nrows() != n || j_mat.ncols() != n {
        return Err(crate::Error::DimensionMismatch(format!(
            "unreshuffle expects {n}x{n}, got {}x{}",
            j_mat.nrows(),
            j_mat.ncols()
        )));
    }
    Ok(CMatrix::from_fn(d_out * d_out, d_in * d_in, |row, col| {
        let (p, q) = (row / d_out, row % d_out);
        let (j, k) = (col / d_in, col % d_in);
        j_mat[(j * d_out + p, k * d_out + q)]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_cmatrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
        let m = random_cmatrix(rng, n, n);
        hermitize(&m)
    }

    #[test]
    fn partial_trace_of_tensor_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_cmatrix(&mut rng, 2, 2);
            let b = random_cmatrix(&mut rng, 2, 2);
            let ab = a.kronecker(&b);
            let tr2 = partial_trace(&ab, 2, 2, Keep::First).unwrap();
            assert!((&tr2 - a.clone().scale(1.0) * b.trace()).norm() < 1e-12);
            let tr1 = partial_trace(&ab, 2, 2, Keep::Second).unwrap();
            assert!((&tr1 - b.clone() * a.trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_bell_projector_is_maximally_mixed() {
        // (|00⟩+|11⟩)/√2
        let s = 1.0 / 2.0_f64.sqrt();
        let psi = [cscalar(s), ZERO, ZERO, cscalar(s)];
        let proj = CMatrix::from_fn(4, 4, |i, j| psi[i] * psi[j].conj());
        let red = partial_trace(&proj, 2, 2, Keep::Second).unwrap();
        assert!((&red - ceye(2).scale(0.5)).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_matches_index_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_hermitian(&mut rng, 4);
        // oracle: R[a,a'] = Σ_b ⟨a b| M |a' b⟩ by explicit index summation
        let mut oracle = czero(2, 2);
        for a in 0..2 {
            for ap in 0..2 {
                for b in 0..2 {
                    oracle[(a, ap)] += m[(a * 2 + b, ap * 2 + b)];
                }
            }
        }
        let got = partial_trace(&m, 2, 2, Keep::First).unwrap();
        assert!((&got - &oracle).norm() < 1e-13);
    }

    #[test]
    fn partial_trace_preserves_trace_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let m = random_cmatrix(&mut rng, 6, 6);
            let r = partial_trace(&m, 2, 3, Keep::Second).unwrap();
            assert!((r.trace() - m.trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn herm_eig_identity_and_sigma_z() {
        let (vals, _) = herm_eig(&ceye(2), 1e-12).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);

        let sz = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let (vals, vecs) = herm_eig(&sz, 1e-12).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);
        assert!((vecs[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((vecs[(1, 1)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herm_eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 5);
        let (vals, vecs) = herm_eig(&h, 1e-10).unwrap();
        let d = CMatrix::from_fn(5, 5, |i, j| if i == j { cscalar(vals[i]) } else { ZERO });
        let recon = &vecs * d * vecs.adjoint();
        assert!((&recon - &h).norm() < 1e-10 * h.norm().max(1.0));
        assert!((&vecs.adjoint() * &vecs - ceye(5)).norm() < 1e-10);
        // descending order
        for w in vals.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(herm_eig(&m, 1e-12).is_err());
    }

    #[test]
    fn psd_check_examples() {
        let d = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        assert!(psd_check(&d, 1e-9).unwrap().is_psd());

        let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        match psd_check(&sx, 1e-9).unwrap() {
            PsdCheck::NotPsd {
                min_eigenvalue,
                witness,
            } => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12);
                // ⟨v, Hv⟩ < 0
                let v = CMatrix::from_fn(2, 1, |i, _| witness[i]);
                let q = (v.adjoint() * &sx * &v)[(0, 0)];
                assert!(q.re < -0.5);
            }
            PsdCheck::Psd => panic!("σ_x is not PSD"),
        }
    }

    #[test]
    fn psd_check_pauli_submatrix_with_subunit_multiplier() {
        // 2x2 matrix [[a0, √(a0 am)/|φ|], [√(a0 am)/|φ|, am]] at
        // a0 = am = 1/2, |φ| = 1/2 has determinant a0·am(1 − |φ|⁻²) < 0.
        let a0 = 0.5;
        let am = 0.5;
        let phi_inv = 2.0;
        let off = (a0 * am).sqrt() * phi_inv;
        let m = CMatrix::from_row_slice(2, 2, &[cscalar(a0), cscalar(off), cscalar(off), cscalar(am)]);
        assert!(!psd_check(&m, 1e-9).unwrap().is_psd());
        let det = a0 * am - off * off;
        assert!(det < 0.0);
    }

    #[test]
    fn pinv_trivial_cases() {
        assert!((pinv(&ceye(3), 1e-12) - ceye(3)).norm() < 1e-13);
        let m = CMatrix::from_row_slice(2, 2, &[cscalar(2.0), ZERO, ZERO, ZERO]);
        let p = pinv(&m, 1e-12);
        assert!((p[(0, 0)] - cscalar(0.5)).norm() < 1e-13);
        assert!(p[(1, 1)].norm() < 1e-13);
    }

    #[test]
    fn pinv_satisfies_penrose_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = random_cmatrix(&mut rng, 6, 4);
        let p = pinv(&m, 1e-12);
        let tol = 1e-9 * m.norm().max(1.0);
        assert!((&m * &p * &m - &m).norm() < tol);
        assert!((&p * &m * &p - &p).norm() < tol);
        let mp = &m * &p;
        assert!((&mp - mp.adjoint()).norm() < tol);
        let pm = &p * &m;
        assert!((&pm - pm.adjoint()).norm() < tol);
    }

    #[test]
    fn pinv_times_matrix_is_projector_onto_row_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let m = random_cmatrix(&mut rng, 3, 5);
            let p = pinv(&m, 1e-12) * &m;
            assert!((&p * &p - &p).norm() < 1e-9);
            assert!((&p - p.adjoint()).norm() < 1e-9);
        }
    }

    #[test]
    fn entropy_examples() {
        let half = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&half) - 1.0).abs() < 1e-12);

        let pure = DensityMatrix::pure(&[ONE, ZERO]);
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);

        let third = DensityMatrix::maximally_mixed(3);
        assert!((von_neumann_entropy(&third) - 3.0_f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn entropy_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 3);
            let rho_raw = herm_fn(&h, f64::exp);
            let rho = rho_raw.clone().scale(1.0 / rho_raw.trace().re);
            // unitary from the eigenvectors of another random Hermitian
            let u = hermitize(&random_cmatrix(&mut rng, 3, 3))
                .symmetric_eigen()
                .eigenvectors;
            let rotated = &u * &rho * u.adjoint();
            assert!((entropy_bits(&rho) - entropy_bits(&rotated)).abs() < 1e-10);
        }
    }

    #[test]
    fn reshuffle_identity_superoperator_gives_bell_projector() {
        let j = reshuffle(&ceye(4), 2, 2).unwrap();
        // Σ_{jk} |jj⟩⟨kk|, entries 1 at (0,0),(0,3),(3,0),(3,3)
        let mut expect = czero(4, 4);
        for &r in &[0usize, 3] {
            for &c in &[0usize, 3] {
                expect[(r, c)] = ONE;
            }
        }
        assert!((&j - &expect).norm() < 1e-14);
    }

    #[test]
    fn reshuffle_sigma_x_conjugation() {
        // superoperator of ρ ↦ σ_x ρ σ_x with row-major vec is σ_x ⊗ σ_x
        let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let sup = sx.kronecker(&sx);
        let j = reshuffle(&sup, 2, 2).unwrap();
        // projector onto |01⟩+|10⟩ (unnormalized)
        let psi = [ZERO, ONE, ONE, ZERO];
        let expect = CMatrix::from_fn(4, 4, |i, k| psi[i] * psi[k].conj());
        assert!((&j - &expect).norm() < 1e-14);
    }

    #[test]
    fn reshuffle_roundtrip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let m = random_cmatrix(&mut rng, 9, 4);
            let j = reshuffle(&m, 2, 3).unwrap();
            let back = unreshuffle(&j, 2, 3).unwrap();
            assert!((&back - &m).norm() < 1e-14);
        }
    }
}
