//! Channel representations and structure.
//!
//! A channel is carried as a list of Kraus operators. The complementary
//! channel `Φ^C(ρ) = [Tr F_j ρ F_k†]_{jk}` is built directly from a minimal
//! Kraus set; when the stored set is already linearly independent it is used
//! as given (its ordering fixes the environment basis), otherwise the channel
//! is first re-expressed in the Choi-eigenvector gauge so the environment
//! dimension is minimal.

use crate::opalg::{
    ceye, cscalar, czero, herm_deviation, herm_eig, hermitize, partial_trace, pinv, psd_check,
    rank, reshuffle, unreshuffle, CMatrix, Complex64, DensityMatrix, Keep, PsdCheck, ONE, ZERO,
};
use crate::{Error, Result, DEFAULT_TOL};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A CPT map as a list of `d_out × d_in` Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMatrix>,
}

/// Trace-one Choi representative `(I ⊗ Φ)(|β⟩⟨β|)` on the `d_in·d_out`
/// space, input copy first.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub d_in: usize,
    pub d_out: usize,
    pub matrix: CMatrix,
}

/// Result of testing whether every pure input has a pure output.
#[derive(Debug, Clone)]
pub enum PurityClass {
    /// `Φ(ρ) = UρU†` with `U†U = I`; carries the partial isometry.
    Isometry(CMatrix),
    /// Every input is sent to the same fixed pure state.
    ConstantPure(Vec<Complex64>),
    Neither,
}

/// Outcome of the CPT test.
#[derive(Debug, Clone)]
pub enum CptCheck {
    Ok,
    Violation(String),
}

impl CptCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, CptCheck::Ok)
    }
}

/// Partial-transpose flag of the Choi state.
#[derive(Debug, Clone, PartialEq)]
pub enum PptFlag {
    /// PPT; `eb_certified` is true when `d_in·d_out ≤ 6` so PPT implies
    /// separability of the Choi state and hence entanglement breaking.
    Ppt { eb_certified: bool },
    Npt { min_eigenvalue: f64 },
}

impl KrausChannel {
    /// Build a channel, checking trace preservation `Σ A†A = I` within `tol`.
    pub fn new(d_in: usize, d_out: usize, kraus: Vec<CMatrix>, tol: f64) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("empty Kraus list".into()));
        }
        for a in &kraus {
            if a.nrows() != d_out || a.ncols() != d_in {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {d_out}x{d_in}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        let ch = Self { d_in, d_out, kraus };
        let dev = ch.tp_deviation();
        if dev > 1e3 * tol.max(1e-12) {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(ch)
    }

    /// Build without the TP check (for maps known valid by construction or
    /// deliberately invalid test inputs).
    pub fn new_unchecked(d_in: usize, d_out: usize, kraus: Vec<CMatrix>) -> Self {
        Self { d_in, d_out, kraus }
    }

    pub fn identity(d: usize) -> Self {
        Self::new_unchecked(d, d, vec![ceye(d)])
    }

    /// The full trace `ρ ↦ Tr ρ` into a one-dimensional output space.
    pub fn trace_channel(d: usize) -> Self {
        let kraus = (0..d)
            .map(|j| CMatrix::from_fn(1, d, |_, c| if c == j { ONE } else { ZERO }))
            .collect();
        Self::new_unchecked(d, 1, kraus)
    }

    /// Completely depolarizing channel `ρ ↦ Tr(ρ) I/d`.
    pub fn completely_depolarizing(d: usize) -> Self {
        let scale = cscalar(1.0 / (d as f64).sqrt());
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut a = czero(d, d);
                a[(i, j)] = scale;
                kraus.push(a);
            }
        }
        Self::new_unchecked(d, d, kraus)
    }

    /// Werner–Holevo channel `ρ ↦ (I − ρᵀ)/(d−1)`.
    pub fn werner_holevo(d: usize) -> Self {
        let c = cscalar(1.0 / ((d - 1) as f64).sqrt());
        let mut kraus = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                let mut a = czero(d, d);
                a[(i, j)] = c;
                a[(j, i)] = -c;
                kraus.push(a);
            }
        }
        Self::new_unchecked(d, d, kraus)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `‖Σ A†A − I‖`.
    pub fn tp_deviation(&self) -> f64 {
        let mut s = czero(self.d_in, self.d_in);
        for a in &self.kraus {
            s += a.adjoint() * a;
        }
        (s - ceye(self.d_in)).norm()
    }

    /// Apply to a density matrix: `Σ_k A_k ρ A_k†`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs channel input dim {}",
                rho.dim(),
                self.d_in
            )));
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()), 1e-7)
    }

    /// Apply to an arbitrary operator.
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        let mut out = czero(self.d_out, self.d_out);
        for a in &self.kraus {
            out += a * x * a.adjoint();
        }
        out
    }

    /// Adjoint (Heisenberg picture) action `Σ_k A_k† X A_k`.
    pub fn apply_adjoint(&self, x: &CMatrix) -> CMatrix {
        let mut out = czero(self.d_in, self.d_in);
        for a in &self.kraus {
            out += a.adjoint() * x * a;
        }
        out
    }

    /// Superoperator matrix of shape `(d_out², d_in²)` in the matrix-unit
    /// basis: `Σ_k A_k ⊗ conj(A_k)`.
    pub fn superoperator(&self) -> CMatrix {
        let mut m = czero(self.d_out * self.d_out, self.d_in * self.d_in);
        for a in &self.kraus {
            m += a.kronecker(&a.map(|z| z.conj()));
        }
        m
    }

    /// Trace-normalized Choi matrix `(I ⊗ Φ)(|β⟩⟨β|)`.
    pub fn choi(&self) -> ChoiMatrix {
        let n = self.d_in * self.d_out;
        let mut j = czero(n, n);
        for a in &self.kraus {
            let w = stack_columns(a);
            for r in 0..n {
                for c in 0..n {
                    j[(r, c)] += w[r] * w[c].conj();
                }
            }
        }
        ChoiMatrix {
            d_in: self.d_in,
            d_out: self.d_out,
            matrix: j.scale(1.0 / self.d_in as f64),
        }
    }

    /// Rank of the Choi matrix: eigenvalues above `tol·λ_max`. Equals the
    /// number of linearly independent Kraus operators and the dimension of
    /// the smallest pure environment.
    pub fn choi_rank(&self, tol: f64) -> usize {
        let j = self.choi();
        let (vals, _) = herm_eig(&j.matrix, 1e-8).expect("Choi is Hermitian");
        let max = vals.first().copied().unwrap_or(0.0);
        if max <= 0.0 {
            return 0;
        }
        vals.iter().filter(|&&v| v > tol * max).count()
    }

    /// Spectral gap diagnostics at the rank cut: `(smallest kept, largest
    /// dropped)` eigenvalues of the Choi matrix.
    pub fn choi_rank_gap(&self, tol: f64) -> (f64, f64) {
        let j = self.choi();
        let (vals, _) = herm_eig(&j.matrix, 1e-8).expect("Choi is Hermitian");
        let max = vals.first().copied().unwrap_or(0.0);
        let kept: Vec<f64> = vals.iter().copied().filter(|&v| v > tol * max).collect();
        let dropped = vals.get(kept.len()).copied().unwrap_or(0.0);
        (kept.last().copied().unwrap_or(0.0), dropped)
    }

    /// True when the stored Kraus operators are linearly independent.
    pub fn kraus_independent(&self, tol: f64) -> bool {
        let n = self.d_in * self.d_out;
        let mut m = czero(n, self.kraus.len());
        for (k, a) in self.kraus.iter().enumerate() {
            let w = stack_columns(a);
            for r in 0..n {
                m[(r, k)] = w[r];
            }
        }
        rank(&m, tol.max(1e-12)) == self.kraus.len()
    }

    /// Re-express the channel in the Choi-eigenvector Kraus gauge; the
    /// resulting set is minimal and orthogonal (`Tr F_j F_k† = τ_j δ_{jk}`).
    pub fn minimal_gauge(&self, tol: f64) -> Self {
        kraus_from_choi(&self.choi(), tol).expect("Choi of a valid channel")
    }

    /// Complementary channel `Φ^C: M_{d_A} → M_{d_E}`, `[Φ^C(ρ)]_{jk} =
    /// Tr F_j ρ F_k†` for a minimal Kraus set `{F_j}`.
    ///
    /// If the stored Kraus set is linearly independent it is used as given,
    /// so the environment basis follows the stored operator order; otherwise
    /// the channel is first reduced to the Choi-eigenvector gauge.
    pub fn complement(&self) -> Self {
        let tol = DEFAULT_TOL;
        if self.kraus_independent(tol) {
            complement_in_gauge(&self.kraus, self.d_in)
        } else {
            let min = self.minimal_gauge(tol);
            complement_in_gauge(&min.kraus, self.d_in)
        }
    }

    /// CPT test: trace preservation and positivity of the Choi matrix.
    pub fn is_cptp(&self, tol: f64) -> CptCheck {
        let dev = self.tp_deviation();
        if dev > 1e3 * tol {
            return CptCheck::Violation(format!("trace preservation deviation {dev:.3e}"));
        }
        match psd_check(&self.choi().matrix, tol) {
            Ok(PsdCheck::Psd) => CptCheck::Ok,
            Ok(PsdCheck::NotPsd { min_eigenvalue, .. }) => {
                CptCheck::Violation(format!("Choi min eigenvalue {min_eigenvalue:.3e}"))
            }
            Err(e) => CptCheck::Violation(format!("{e}")),
        }
    }

    /// Partial transpose test of the Choi state (transpose on the input
    /// copy). PPT certifies entanglement breaking only for `d_in·d_out ≤ 6`.
    pub fn ppt_flag(&self) -> PptFlag {
        let j = self.choi();
        let n = self.d_in * self.d_out;
        let pt = CMatrix::from_fn(n, n, |r, c| {
            let (a, p) = (r / self.d_out, r % self.d_out);
            let (b, q) = (c / self.d_out, c % self.d_out);
            j.matrix[(b * self.d_out + p, a * self.d_out + q)]
        });
        match psd_check(&pt, DEFAULT_TOL).expect("partial transpose is Hermitian") {
            PsdCheck::Psd => PptFlag::Ppt {
                eb_certified: self.d_in * self.d_out <= 6,
            },
            PsdCheck::NotPsd { min_eigenvalue, .. } => PptFlag::Npt {
                min_eigenvalue,
            },
        }
    }

    /// Tensor product channel with Kraus set `{A_i ⊗ B_j}`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kronecker(b));
            }
        }
        Self::new_unchecked(
            self.d_in * other.d_in,
            self.d_out * other.d_out,
            kraus,
        )
    }

    /// Flagged direct sum `ρ ↦ p |0⟩⟨0| ⊗ Φ₁(ρ) + (1−p) |1⟩⟨1| ⊗ Φ₂(ρ)`.
    ///
    /// Both channels must share the input dimension; outputs are embedded in
    /// a common space of dimension `max(d_out₁, d_out₂)` under the flag.
    pub fn direct_sum(&self, other: &Self, p: f64) -> Result<Self> {
        if self.d_in != other.d_in {
            return Err(Error::DimensionMismatch(
                "direct sum requires equal input dimensions".into(),
            ));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
        }
        let d = self.d_out.max(other.d_out);
        let mut kraus = Vec::new();
        for a in &self.kraus {
            kraus.push(flag_embed(a, d, 0).scale_c(p.sqrt()));
        }
        for b in &other.kraus {
            kraus.push(flag_embed(b, d, 1).scale_c((1.0 - p).sqrt()));
        }
        Ok(Self::new_unchecked(self.d_in, 2 * d, kraus))
    }

    /// Block direct sum on `M_{d₁+d₂}`: Kraus `{A_k ⊕ 0} ∪ {0 ⊕ B_j}`.
    pub fn block_direct_sum(&self, other: &Self) -> Self {
        let (ri, ci) = (self.d_out, self.d_in);
        let (ro, co) = (other.d_out, other.d_in);
        let mut kraus = Vec::new();
        for a in &self.kraus {
            kraus.push(CMatrix::from_fn(ri + ro, ci + co, |r, c| {
                if r < ri && c < ci {
                    a[(r, c)]
                } else {
                    ZERO
                }
            }));
        }
        for b in &other.kraus {
            kraus.push(CMatrix::from_fn(ri + ro, ci + co, |r, c| {
                if r >= ri && c >= ci {
                    b[(r - ri, c - ci)]
                } else {
                    ZERO
                }
            }));
        }
        Self::new_unchecked(ci + co, ri + ro, kraus)
    }

    /// Composition `other ∘ self` (apply `self` first).
    pub fn then(&self, other: &Self) -> Result<Self> {
        if other.d_in != self.d_out {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose: output dim {} feeds input dim {}",
                self.d_out, other.d_in
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for b in &other.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(Self::new_unchecked(self.d_in, other.d_out, kraus))
    }

    /// Post-compose with a unitary conjugation `ρ ↦ UρU†`.
    pub fn conjugate_output(&self, u: &CMatrix) -> Self {
        let kraus = self.kraus.iter().map(|a| u * a).collect();
        Self::new_unchecked(self.d_in, u.nrows(), kraus)
    }

    /// Pre-compose with a unitary conjugation on the input.
    pub fn conjugate_input(&self, u: &CMatrix) -> Self {
        let kraus = self.kraus.iter().map(|a| a * u).collect();
        Self::new_unchecked(u.ncols(), self.d_out, kraus)
    }

    /// Classify whether every pure input maps to a pure output.
    ///
    /// Tests the output rank on the computational basis, all pairwise
    /// superpositions, and `samples` seeded random pure states.
    pub fn purity_classify(&self, samples: usize) -> PurityClass {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let tol = 1e-8;
        let mut inputs: Vec<Vec<Complex64>> = Vec::new();
        for j in 0..self.d_in {
            let mut e = vec![ZERO; self.d_in];
            e[j] = ONE;
            inputs.push(e);
        }
        let s = cscalar(std::f64::consts::FRAC_1_SQRT_2);
        for j in 0..self.d_in {
            for k in (j + 1)..self.d_in {
                let mut e = vec![ZERO; self.d_in];
                e[j] = s;
                e[k] = s;
                inputs.push(e.clone());
                e[k] = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
                inputs.push(e);
            }
        }
        for _ in 0..samples {
            inputs.push(random_pure(&mut rng, self.d_in));
        }

        let mut outputs = Vec::with_capacity(inputs.len());
        for psi in &inputs {
            let rho = DensityMatrix::pure(psi);
            let out = self.apply_matrix(rho.matrix());
            let (vals, vecs) = herm_eig(&out, 1e-8).expect("output Hermitian");
            let max = vals[0].max(0.0);
            let r = vals.iter().filter(|&&v| v > tol * max.max(1.0)).count();
            if r != 1 {
                return PurityClass::Neither;
            }
            outputs.push(vecs.column(0).iter().copied().collect::<Vec<_>>());
        }
        let all_same = outputs.iter().all(|phi| {
            let ov: Complex64 = outputs[0]
                .iter()
                .zip(phi.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            (ov.norm() - 1.0).abs() < 1e-7
        });
        if all_same {
            return PurityClass::ConstantPure(outputs.into_iter().next().unwrap());
        }
        if self.choi_rank(DEFAULT_TOL) == 1 {
            let min = self.minimal_gauge(DEFAULT_TOL);
            return PurityClass::Isometry(min.kraus[0].clone());
        }
        PurityClass::Neither
    }

    /// Arveson map `X_E = Φ^C(ρ) D_Φ⁻¹` with `D_Φ = Φ^C(I_A)`.
    ///
    /// Requires the Kraus set in the Choi-eigenvector gauge, where
    /// `D_Φ` is diagonal; then `X_E Φ^C(I_A) = Φ^C(ρ)` holds on the support.
    pub fn arveson_map(&self, rho: &DensityMatrix, tol: f64) -> Result<CMatrix> {
        let comp = complement_in_gauge(&self.kraus, self.d_in);
        let d_phi = comp.apply_matrix(&ceye(self.d_in));
        let mut off = 0.0;
        for j in 0..d_phi.nrows() {
            for k in 0..d_phi.ncols() {
                if j != k {
                    off += d_phi[(j, k)].norm_sqr();
                }
            }
        }
        if off.sqrt() > 1e3 * tol * d_phi.norm().max(1.0) {
            return Err(Error::NotEigenvectorGauge);
        }
        Ok(comp.apply_matrix(rho.matrix()) * pinv(&d_phi, tol))
    }
}

trait ScaleC {
    fn scale_c(self, s: f64) -> Self;
}

impl ScaleC for CMatrix {
    fn scale_c(self, s: f64) -> Self {
        self * cscalar(s)
    }
}

/// Column-stacked vectorization `w[(j, p)] = A[(p, j)]` used for Choi sums;
/// eigenvectors of the Choi matrix unstack to Kraus operators through it.
pub fn stack_columns(a: &CMatrix) -> Vec<Complex64> {
    let (d_out, d_in) = a.shape();
    let mut w = Vec::with_capacity(d_in * d_out);
    for j in 0..d_in {
        for p in 0..d_out {
            w.push(a[(p, j)]);
        }
    }
    w
}

fn unstack_columns(w: &[Complex64], d_in: usize, d_out: usize) -> CMatrix {
    CMatrix::from_fn(d_out, d_in, |p, j| w[j * d_out + p])
}

fn random_pure(rng: &mut impl Rng, d: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= n;
    }
    v
}

/// Embed a `d_out×d_in` Kraus operator as `|flag⟩ ⊗ A` into a `2d` output.
fn flag_embed(a: &CMatrix, d: usize, flag: usize) -> CMatrix {
    let (rows, cols) = a.shape();
    CMatrix::from_fn(2 * d, cols, |r, c| {
        if r >= flag * d && r < flag * d + rows {
            a[(r - flag * d, c)]
        } else {
            ZERO
        }
    })
}

/// Complement `[Tr F_j ρ F_k†]` built from a Kraus list as given, without
/// re-gauging; the environment index follows the list order. Zero or
/// dependent operators are kept, so the environment need not be minimal.
pub fn complement_in_gauge(kraus: &[CMatrix], d_in: usize) -> KrausChannel {
    let d_e = kraus.len();
    let d_b = kraus[0].nrows();
    let comp_kraus = (0..d_b)
        .map(|i| CMatrix::from_fn(d_e, d_in, |k, j| kraus[k][(i, j)]))
        .collect();
    KrausChannel::new_unchecked(d_in, d_e, comp_kraus)
}

/// Extract exactly `rank(J)` Kraus operators from a Choi matrix by
/// eigendecomposition: eigenvectors unstacked and scaled by `√(d_in·λ)`.
///
/// Each operator's global phase is fixed by making its largest-magnitude
/// entry real and positive, so the output is deterministic.
pub fn kraus_from_choi(j: &ChoiMatrix, tol: f64) -> Result<KrausChannel> {
    let m = hermitize(&j.matrix);
    match psd_check(&m, 1e3 * tol.max(1e-12))? {
        PsdCheck::Psd => {}
        PsdCheck::NotPsd { min_eigenvalue, .. } => {
            return Err(Error::NotCompletelyPositive(min_eigenvalue))
        }
    }
    let red = partial_trace(&m, j.d_in, j.d_out, Keep::First)?;
    let dev = (red - ceye(j.d_in).scale(1.0 / j.d_in as f64)).norm();
    if dev > 1e4 * tol.max(1e-12) {
        return Err(Error::NotTracePreserving(dev));
    }
    let (vals, vecs) = herm_eig(&m, 1e-8)?;
    let max = vals.first().copied().unwrap_or(0.0);
    let mut kraus = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v > tol.max(1e-14) * max {
            let mut w: Vec<Complex64> = vecs.column(i).iter().copied().collect();
            let top = w
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            let phase = w[top] / cscalar(w[top].norm());
            let scale = (v * j.d_in as f64).sqrt();
            for z in &mut w {
                *z = *z * phase.conj() * cscalar(scale);
            }
            kraus.push(unstack_columns(&w, j.d_in, j.d_out));
        }
    }
    if kraus.is_empty() {
        return Err(Error::InvalidParameter("zero Choi matrix".into()));
    }
    Ok(KrausChannel::new_unchecked(j.d_in, j.d_out, kraus))
}

/// CPT test for a linear map given as a superoperator matrix.
pub fn is_cptp_super(m: &CMatrix, d_in: usize, d_out: usize, tol: f64) -> Result<CptCheck> {
    let j = reshuffle(m, d_in, d_out)?;
    if herm_deviation(&j) > 1e3 * tol {
        return Ok(CptCheck::Violation("Choi not Hermitian".into()));
    }
    let red = partial_trace(&j, d_in, d_out, Keep::First)?;
    let dev = (red - ceye(d_in)).norm();
    if dev > 1e3 * tol {
        return Ok(CptCheck::Violation(format!(
            "trace preservation deviation {dev:.3e}"
        )));
    }
    match psd_check(&hermitize(&j), tol)? {
        PsdCheck::Psd => Ok(CptCheck::Ok),
        PsdCheck::NotPsd { min_eigenvalue, .. } => Ok(CptCheck::Violation(format!(
            "Choi min eigenvalue {min_eigenvalue:.3e}"
        ))),
    }
}

/// Superoperator-level composition residual `‖M_Ψ M_Φ − M_target‖_F`.
pub fn compose_residual(psi: &KrausChannel, phi: &KrausChannel, target: &KrausChannel) -> f64 {
    (psi.superoperator() * phi.superoperator() - target.superoperator()).norm()
}

/// Co-isometry `u` (rows orthonormal) relating two Kraus representations of
/// the same channel: `G_i = Σ_k u_{ik} F_k` with `{G_i}` minimal.
///
/// Used to transport a witness verified against one complement gauge onto
/// another: if `Ψ∘Φ = Φ^C_F` then `Ψ∘Γ_{u†}∘Φ = Φ^C_G` fails dimensionally,
/// but `Γ_u ∘ Φ^C_F = Φ^C_G`, so `(Ψ')(X) = Ψ(u† X u)` degrades to `Φ^C_F`
/// whenever `Ψ` degrades to `Φ^C_G`.
pub fn gauge_coisometry(from: &KrausChannel, to_minimal: &KrausChannel, tol: f64) -> Result<CMatrix> {
    let n = from.d_in * from.d_out;
    if to_minimal.d_in != from.d_in || to_minimal.d_out != from.d_out {
        return Err(Error::DimensionMismatch("gauge between unequal shapes".into()));
    }
    let mf = {
        let mut m = czero(n, from.kraus.len());
        for (k, a) in from.kraus.iter().enumerate() {
            let w = stack_columns(a);
            for r in 0..n {
                m[(r, k)] = w[r];
            }
        }
        m
    };
    let mg = {
        let mut m = czero(n, to_minimal.kraus.len());
        for (k, a) in to_minimal.kraus.iter().enumerate() {
            let w = stack_columns(a);
            for r in 0..n {
                m[(r, k)] = w[r];
            }
        }
        m
    };
    // G_i = Σ_k u_{ik} F_k  ⇔  MG = MF uᵀ
    let ut = pinv(&mf, tol.max(1e-12)) * &mg;
    let u = ut.transpose();
    let resid = (&mf * ut - &mg).norm();
    if resid > 1e-6 * mg.norm().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "Kraus sets do not represent the same channel (residual {resid:.3e})"
        )));
    }
    Ok(u)
}

/// Random CPT channel: Gaussian Kraus operators, trace-normalized by right
/// multiplication with `(Σ A†A)^{-1/2}`.
pub fn random_channel(
    rng: &mut impl Rng,
    d_in: usize,
    d_out: usize,
    n_kraus: usize,
) -> KrausChannel {
    loop {
        let raw: Vec<CMatrix> = (0..n_kraus)
            .map(|_| {
                CMatrix::from_fn(d_out, d_in, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect();
        let mut s = czero(d_in, d_in);
        for a in &raw {
            s += a.adjoint() * a;
        }
        let (vals, _) = herm_eig(&s, 1e-8).expect("Gram Hermitian");
        if vals.last().copied().unwrap_or(0.0) < 1e-6 {
            continue;
        }
        let s_inv_sqrt = crate::opalg::herm_fn(&s, |x| 1.0 / x.max(1e-300).sqrt());
        let kraus = raw.into_iter().map(|a| a * &s_inv_sqrt).collect();
        return KrausChannel::new_unchecked(d_in, d_out, kraus);
    }
}

/// Haar-ish random unitary from the QR of a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let qr = g.qr();
    qr.q()
}

// ---------------------------------------------------------------------------
// Channel file format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    d_in: usize,
    d_out: usize,
    kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Serialize to the channel file format: `{"d_in", "d_out", "kraus"}` with
/// each matrix a list of rows and each entry `[re, im]`.
pub fn to_channel_file(ch: &KrausChannel) -> String {
    let kraus = ch
        .kraus
        .iter()
        .map(|a| {
            (0..a.nrows())
                .map(|r| (0..a.ncols()).map(|c| [a[(r, c)].re, a[(r, c)].im]).collect())
                .collect()
        })
        .collect();
    let file = ChannelFile {
        d_in: ch.d_in,
        d_out: ch.d_out,
        kraus,
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

/// Parse the channel file format and validate the CPT contract.
pub fn from_channel_file(text: &str, tol: f64) -> Result<KrausChannel> {
    let file: ChannelFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("{e}")))?;
    if file.kraus.is_empty() {
        return Err(Error::Parse("empty Kraus list".into()));
    }
    let mut kraus = Vec::with_capacity(file.kraus.len());
    for m in &file.kraus {
        if m.len() != file.d_out || m.iter().any(|row| row.len() != file.d_in) {
            return Err(Error::Parse(format!(
                "each Kraus matrix must be {}x{}",
                file.d_out, file.d_in
            )));
        }
        kraus.push(CMatrix::from_fn(file.d_out, file.d_in, |r, c| {
            let [re, im] = m[r][c];
            Complex64::new(re, im)
        }));
    }
    for a in &kraus {
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parse("non-finite entry".into()));
        }
    }
    KrausChannel::new(file.d_in, file.d_out, kraus, tol)
}
