//! The degradability engine.
//!
//! A channel `Φ` is degradable when some CPT `Ψ` satisfies `Ψ∘Φ = Φ^C` and
//! anti-degradable when its complement is degradable. Everything here is
//! phrased through the general question "does a CPT `Ψ` with `Ψ∘src = tgt`
//! exist", decided in three tiers of increasing cost:
//!
//! 1. the kernel condition `ker src ⊆ ker tgt` (necessary),
//! 2. the pseudo-inverse candidate `M_Ψ = M_tgt · pinv(M_src)`, conclusive
//!    both ways when `src` has full row rank as a superoperator,
//! 3. an alternating-projection (Dykstra) feasibility search over the
//!    intersection of the PSD cone with the affine set of Choi operators
//!    satisfying the composition and trace-preservation constraints.
//!
//! The classifier combines both directions with the closed-form fast paths
//! for qubit outputs and a coherent-information disproof of
//! anti-degradability.

use crate::channel::{
    compose_residual, is_cptp_super, kraus_from_choi, ChoiMatrix, CptCheck, KrausChannel, PptFlag,
};
use crate::opalg::{
    ceye, cscalar, czero, herm_eig, hermitize, kernel_basis, pinv, rank, reshuffle, unreshuffle,
    unvec_row_major, CMatrix, Complex64, DensityMatrix, ZERO,
};
use crate::{Error, Result, DEFAULT_TOL};

/// Which tier of the engine produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    PseudoInverse,
    Feasibility,
}

/// A named reason why one direction is impossible.
#[derive(Debug, Clone)]
pub enum ViolationKind {
    KernelCondition,
    CandidateNotCp,
    FeasibilityDistance,
    ClosedFormCriterion(String),
}

#[derive(Debug, Clone)]
pub struct ViolationRecord {
    pub kind: ViolationKind,
    /// By how much the necessary condition fails.
    pub margin: f64,
    /// Witness operator (kernel element, non-PSD eigenvector as a matrix, …).
    pub witness: Option<CMatrix>,
}

/// Three-valued answer for one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideStatus {
    Yes,
    No,
    Unknown,
}

/// One direction of the classification, with its certificate.
#[derive(Debug, Clone)]
pub struct SideResult {
    pub status: SideStatus,
    pub method: Method,
    /// The degrading map, when `status == Yes` and one was constructed.
    pub witness: Option<KrausChannel>,
    /// The map the witness composes onto (`src` for this direction).
    pub witness_source: Option<KrausChannel>,
    /// The composition target the witness reaches.
    pub witness_target: Option<KrausChannel>,
    /// Residual `‖Ψ∘src − tgt‖_F` of the verified witness.
    pub residual: Option<f64>,
    pub violation: Option<ViolationRecord>,
    /// Final inter-set distance when feasibility stalled.
    pub distance: Option<f64>,
}

impl SideResult {
    pub(crate) fn unknown(method: Method) -> Self {
        SideResult {
            status: SideStatus::Unknown,
            method,
            witness: None,
            witness_source: None,
            witness_target: None,
            residual: None,
            violation: None,
            distance: None,
        }
    }

    pub(crate) fn no(method: Method, violation: ViolationRecord) -> Self {
        SideResult {
            status: SideStatus::No,
            violation: Some(violation),
            ..Self::unknown(method)
        }
    }

    pub(crate) fn yes(
        method: Method,
        witness: KrausChannel,
        src: &KrausChannel,
        tgt: &KrausChannel,
    ) -> Self {
        let residual = compose_residual(&witness, src, tgt);
        SideResult {
            status: SideStatus::Yes,
            method,
            witness: Some(witness),
            witness_source: Some(src.clone()),
            witness_target: Some(tgt.clone()),
            residual: Some(residual),
            violation: None,
            distance: None,
        }
    }
}

/// Five-way classification tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictTag {
    Degradable,
    AntiDegradable,
    Both,
    Neither,
    Unknown,
}

impl std::fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VerdictTag::Degradable => "Degradable",
            VerdictTag::AntiDegradable => "AntiDegradable",
            VerdictTag::Both => "Both",
            VerdictTag::Neither => "Neither",
            VerdictTag::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

/// Classification result: both one-sided answers plus the tolerance used.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub deg: SideResult,
    pub anti: SideResult,
    pub tolerance: f64,
    /// `(d_A, d_B, d_E)` of the classified channel.
    pub dims: (usize, usize, usize),
    /// Lower bound on the coherent information when one was computed.
    pub coherent_lower_bound: Option<f64>,
}

impl Verdict {
    pub fn tag(&self) -> VerdictTag {
        use SideStatus::*;
        match (self.deg.status, self.anti.status) {
            (Yes, Yes) => VerdictTag::Both,
            (Yes, No) => VerdictTag::Degradable,
            (No, Yes) => VerdictTag::AntiDegradable,
            (No, No) => VerdictTag::Neither,
            _ => VerdictTag::Unknown,
        }
    }

    pub fn is_conclusive(&self) -> bool {
        self.tag() != VerdictTag::Unknown
    }
}

/// Options for [`classify`].
#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub tol: f64,
    /// Residual tolerance of the feasibility search.
    pub feasibility_tol: f64,
    pub max_iter: usize,
    /// Skip the alternating-projection fallback (filters and pseudo-inverse
    /// only).
    pub use_feasibility: bool,
    /// Use a positive coherent-information lower bound to exclude
    /// anti-degradability.
    pub use_capacity_bound: bool,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol: DEFAULT_TOL,
            feasibility_tol: 1e-7,
            max_iter: 5000,
            use_feasibility: true,
            use_capacity_bound: true,
            seed: 1,
        }
    }
}

/// Outcome of the necessary kernel condition `ker src ⊆ ker tgt`.
#[derive(Debug, Clone)]
pub enum KernelOutcome {
    Holds,
    /// Witness `A ∈ ker src` with `‖tgt(A)‖ > tol`.
    Fails { witness: CMatrix, image_norm: f64 },
}

impl KernelOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, KernelOutcome::Holds)
    }
}

/// Check `ker src ⊆ ker tgt` for two channels with the same input space.
pub fn kernel_compose(src: &KrausChannel, tgt: &KrausChannel, tol: f64) -> KernelOutcome {
    let d = src.d_in();
    let m_src = src.superoperator();
    for v in kernel_basis(&m_src, tol.max(1e-10)) {
        let a = unvec_row_major(&v, d, d);
        let image = tgt.apply_matrix(&a);
        let n = image.norm();
        if n > 1e3 * tol.max(1e-12) {
            return KernelOutcome::Fails {
                witness: a,
                image_norm: n,
            };
        }
    }
    KernelOutcome::Holds
}

/// Necessary condition for degradability: `ker Φ ⊆ ker Φ^C`.
pub fn kernel_condition(phi: &KrausChannel, tol: f64) -> KernelOutcome {
    kernel_compose(phi, &phi.complement(), tol)
}

/// Outcome of the pseudo-inverse tier.
#[derive(Debug, Clone)]
pub enum PinvOutcome {
    Feasible(KrausChannel),
    Infeasible(ViolationRecord),
    Inconclusive,
}

/// Build the candidate `M_Ψ = M_tgt · pinv(M_src)` and test it for CPT.
///
/// When `src` has full row rank the candidate is the only linear map with
/// `Ψ∘src = tgt`, so the test is conclusive both ways. Otherwise a CPT
/// candidate certifies feasibility while a failing one is inconclusive (a
/// different completion off the range of `src` may exist).
pub fn pinv_compose(src: &KrausChannel, tgt: &KrausChannel, tol: f64) -> PinvOutcome {
    let m_src = src.superoperator();
    let m_tgt = tgt.superoperator();
    let m_cand = &m_tgt * pinv(&m_src, tol.max(1e-12));
    let scale = m_tgt.norm().max(1.0);
    if (&m_cand * &m_src - &m_tgt).norm() > 1e5 * tol.max(1e-12) * scale {
        // the composition equation has no solution even as a linear map
        return PinvOutcome::Infeasible(ViolationRecord {
            kind: ViolationKind::KernelCondition,
            margin: (&m_cand * &m_src - &m_tgt).norm(),
            witness: None,
        });
    }
    let full_row_rank = rank(&m_src, 1e3 * tol.max(1e-12)) == src.d_out() * src.d_out();
    let d_in = src.d_out();
    let d_out = tgt.d_out();
    match is_cptp_super(&m_cand, d_in, d_out, tol.max(1e-12)) {
        Ok(CptCheck::Ok) => {
            let j = reshuffle(&m_cand, d_in, d_out).expect("shape by construction");
            let choi = ChoiMatrix {
                d_in,
                d_out,
                matrix: hermitize(&j).scale(1.0 / d_in as f64),
            };
            match kraus_from_choi(&choi, 1e-8) {
                Ok(psi) => PinvOutcome::Feasible(psi),
                Err(_) => PinvOutcome::Inconclusive,
            }
        }
        Ok(CptCheck::Violation(_)) => {
            if full_row_rank {
                let j = reshuffle(&m_cand, d_in, d_out).expect("shape by construction");
                let (vals, vecs) = herm_eig(&hermitize(&j), 1e-6).expect("hermitized");
                let min = vals.last().copied().unwrap_or(0.0);
                let n = j.nrows();
                let witness = CMatrix::from_fn(n, 1, |i, _| vecs[(i, n - 1)]);
                PinvOutcome::Infeasible(ViolationRecord {
                    kind: ViolationKind::CandidateNotCp,
                    margin: (-min).max(0.0),
                    witness: Some(witness),
                })
            } else {
                PinvOutcome::Inconclusive
            }
        }
        Err(_) => PinvOutcome::Inconclusive,
    }
}

/// `pinv_compose` in the degradability direction `Ψ∘Φ = Φ^C`.
pub fn pinv_degradability(phi: &KrausChannel, tol: f64) -> PinvOutcome {
    match kernel_condition(phi, tol) {
        KernelOutcome::Holds => pinv_compose(phi, &phi.complement(), tol),
        KernelOutcome::Fails {
            witness,
            image_norm,
        } => PinvOutcome::Infeasible(ViolationRecord {
            kind: ViolationKind::KernelCondition,
            margin: image_norm,
            witness: Some(witness),
        }),
    }
}

/// Outcome of the feasibility search.
#[derive(Debug, Clone)]
pub enum FeasibilityOutcome {
    Feasible(KrausChannel),
    /// The inter-set distance stalled at this floor: strong evidence that no
    /// CPT solution exists, but not a certificate.
    LikelyNot(f64),
    Unknown,
}

// Real coordinates on the space of n×n Hermitian matrices, orthonormal for
// the trace inner product: diagonal units, (E_ij+E_ji)/√2, i(E_ij−E_ji)/√2.
fn herm_to_coords(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut h = Vec::with_capacity(n * n);
    for i in 0..n {
        h.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            h.push((m[(i, j)].re + m[(j, i)].re) / s);
            h.push((m[(j, i)].im - m[(i, j)].im) / s);
        }
    }
    h
}

fn coords_to_herm(h: &[f64], n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = czero(n, n);
    for i in 0..n {
        m[(i, i)] = cscalar(h[i]);
    }
    let mut idx = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let re = h[idx] * s;
            let im = h[idx + 1] * s;
            idx += 2;
            m[(i, j)] = Complex64::new(re, -im);
            m[(j, i)] = Complex64::new(re, im);
        }
    }
    m
}

fn project_psd_coords(h: &[f64], n: usize) -> Vec<f64> {
    let m = coords_to_herm(h, n);
    let se = m.symmetric_eigen();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cscalar(se.eigenvalues[i].max(0.0))
        } else {
            ZERO
        }
    });
    let clipped = &se.eigenvectors * d * se.eigenvectors.adjoint();
    herm_to_coords(&clipped)
}

struct AffineProjector {
    a: nalgebra::DMatrix<f64>,
    a_pinv: nalgebra::DMatrix<f64>,
    b: nalgebra::DVector<f64>,
    /// Residual of the least-squares solution; positive when the affine set
    /// itself is empty.
    infeasibility: f64,
}

impl AffineProjector {
    fn project(&self, h: &[f64]) -> Vec<f64> {
        let x = nalgebra::DVector::from_column_slice(h);
        let r = &self.a * &x - &self.b;
        let corr = &self.a_pinv * r;
        (x - corr).as_slice().to_vec()
    }
}

/// Constraints on the (unnormalized) Choi operator `J(Ψ)`:
/// `M_Ψ M_src = M_tgt` and `Tr_out J = I`.
fn build_affine(src: &KrausChannel, tgt: &KrausChannel) -> AffineProjector {
    let m = src.d_out(); // input dim of Ψ
    let t = tgt.d_out(); // output dim of Ψ
    let a_dim = src.d_in();
    let n = m * t;
    let m_src = src.superoperator();
    let m_tgt = tgt.superoperator();

    let comp_rows = t * t * a_dim * a_dim;
    let tp_rows = m * m;
    let rows = 2 * (comp_rows + tp_rows);
    let cols = n * n;
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, cols);
    let mut b = nalgebra::DVector::<f64>::zeros(rows);

    // image of each Hermitian basis element under the linear constraint map
    let mut basis = vec![0.0f64; cols];
    for col in 0..cols {
        basis[col] = 1.0;
        let j = coords_to_herm(&basis, n);
        basis[col] = 0.0;
        let m_psi = unreshuffle(&j, m, t).expect("square by construction");
        let comp = &m_psi * &m_src;
        for rr in 0..comp.nrows() {
            for cc in 0..comp.ncols() {
                let flat = rr * comp.ncols() + cc;
                a[(2 * flat, col)] = comp[(rr, cc)].re;
                a[(2 * flat + 1, col)] = comp[(rr, cc)].im;
            }
        }
        let tr = crate::opalg::partial_trace(&j, m, t, crate::opalg::Keep::First)
            .expect("dims by construction");
        for rr in 0..m {
            for cc in 0..m {
                let flat = comp_rows + rr * m + cc;
                a[(2 * flat, col)] = tr[(rr, cc)].re;
                a[(2 * flat + 1, col)] = tr[(rr, cc)].im;
            }
        }
    }
    for rr in 0..t * t {
        for cc in 0..a_dim * a_dim {
            let flat = rr * (a_dim * a_dim) + cc;
            b[2 * flat] = m_tgt[(rr, cc)].re;
            b[2 * flat + 1] = m_tgt[(rr, cc)].im;
        }
    }
    for i in 0..m {
        let flat = comp_rows + i * m + i;
        b[2 * flat] = 1.0;
    }

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = 1e-11 * smax.max(1.0);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let sinv = nalgebra::DMatrix::<f64>::from_fn(vt.nrows(), u.ncols(), |i, j| {
        if i == j && svd.singular_values[i] > cut {
            1.0 / svd.singular_values[i]
        } else {
            0.0
        }
    });
    let a_pinv = vt.transpose() * sinv * u.transpose();
    let least_squares = &a_pinv * &b;
    let infeasibility = (&a * least_squares - &b).norm();
    AffineProjector {
        a,
        a_pinv,
        b,
        infeasibility,
    }
}

/// Dykstra alternating-projection search for a CPT `Ψ` with `Ψ∘src = tgt`.
pub fn feasibility_compose(
    src: &KrausChannel,
    tgt: &KrausChannel,
    max_iter: usize,
    tol: f64,
) -> FeasibilityOutcome {
    let m = src.d_out();
    let t = tgt.d_out();
    let n = m * t;
    let proj = build_affine(src, tgt);
    if proj.infeasibility > 1e-6 * (1.0 + proj.b.norm()) {
        return FeasibilityOutcome::LikelyNot(proj.infeasibility);
    }

    // start from the affine projection of a maximally-mixed-output guess
    let j0 = ceye(n).scale(1.0 / t as f64);
    let mut x = proj.project(&herm_to_coords(&j0));
    let mut p = vec![0.0; n * n];
    let mut q = vec![0.0; n * n];
    let mut dists: Vec<f64> = Vec::with_capacity(max_iter);

    let extract = |coords: &[f64]| -> Option<KrausChannel> {
        let j = coords_to_herm(coords, n);
        let se = hermitize(&j).symmetric_eigen();
        let d = CMatrix::from_fn(n, n, |i, jj| {
            if i == jj {
                cscalar(se.eigenvalues[i].max(0.0))
            } else {
                ZERO
            }
        });
        let j_psd = &se.eigenvectors * d * se.eigenvectors.adjoint();
        let choi = ChoiMatrix {
            d_in: m,
            d_out: t,
            matrix: j_psd.scale(1.0 / m as f64),
        };
        kraus_from_choi(&choi, 1e-7).ok()
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for iter in 0..max_iter {
        let y: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y_psd = project_psd_coords(&y, n);
        for i in 0..p.len() {
            p[i] = y[i] - y_psd[i];
        }
        let z: Vec<f64> = y_psd.iter().zip(&q).map(|(a, b)| a + b).collect();
        let z_aff = proj.project(&z);
        for i in 0..q.len() {
            q[i] = z[i] - z_aff[i];
        }
        x = z_aff;
        let dist: f64 = y_psd
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        dists.push(dist);
        if best.as_ref().map_or(true, |(d, _)| dist < *d) {
            best = Some((dist, x.clone()));
        }
        if dist < tol {
            if let Some(psi) = extract(&x) {
                let resid = compose_residual(&psi, src, tgt);
                if resid <= 100.0 * tol * tgt.superoperator().norm().max(1.0)
                    && psi.tp_deviation() <= 100.0 * tol
                {
                    return FeasibilityOutcome::Feasible(psi);
                }
            }
        }
        // early stall detection on a trailing window
        if iter > max_iter / 5 && iter % 50 == 49 {
            let w = max_iter / 10 + 1;
            if dists.len() > 2 * w {
                let recent = dists[dists.len() - w..]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                let before = dists[..dists.len() - w]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                if recent > 100.0 * tol && before - recent < 1e-3 * recent {
                    return FeasibilityOutcome::LikelyNot(recent);
                }
            }
        }
    }
    let w = (max_iter / 10).max(1);
    let tail = &dists[dists.len().saturating_sub(w)..];
    let floor = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let head_min = dists[..dists.len() - tail.len()]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if floor > 10.0 * tol && head_min - floor < 1e-3 * floor {
        FeasibilityOutcome::LikelyNot(floor)
    } else {
        // one last extraction attempt from the best iterate
        if let Some((_, coords)) = best {
            if let Some(psi) = extract(&coords) {
                let resid = compose_residual(&psi, src, tgt);
                if resid <= 100.0 * tol * tgt.superoperator().norm().max(1.0)
                    && psi.tp_deviation() <= 100.0 * tol
                {
                    return FeasibilityOutcome::Feasible(psi);
                }
            }
        }
        FeasibilityOutcome::Unknown
    }
}

/// Feasibility search in the degradability direction.
pub fn feasibility_degradability(
    phi: &KrausChannel,
    max_iter: usize,
    tol: f64,
) -> FeasibilityOutcome {
    feasibility_compose(phi, &phi.complement(), max_iter, tol)
}

/// Decide `∃ CPT Ψ: Ψ∘src = tgt` through all three tiers.
pub fn decide_compose(
    src: &KrausChannel,
    tgt: &KrausChannel,
    opts: &ClassifyOptions,
) -> SideResult {
    match kernel_compose(src, tgt, opts.tol) {
        KernelOutcome::Holds => {}
        KernelOutcome::Fails {
            witness,
            image_norm,
        } => {
            return SideResult::no(
                Method::ClosedForm,
                ViolationRecord {
                    kind: ViolationKind::KernelCondition,
                    margin: image_norm,
                    witness: Some(witness),
                },
            )
        }
    }
    match pinv_compose(src, tgt, opts.tol) {
        PinvOutcome::Feasible(psi) => {
            return SideResult::yes(Method::PseudoInverse, psi, src, tgt)
        }
        PinvOutcome::Infeasible(v) => return SideResult::no(Method::PseudoInverse, v),
        PinvOutcome::Inconclusive => {}
    }
    if !opts.use_feasibility {
        return SideResult::unknown(Method::PseudoInverse);
    }
    match feasibility_compose(src, tgt, opts.max_iter, opts.feasibility_tol) {
        FeasibilityOutcome::Feasible(psi) => SideResult::yes(Method::Feasibility, psi, src, tgt),
        FeasibilityOutcome::LikelyNot(d) => SideResult {
            distance: Some(d),
            ..SideResult::unknown(Method::Feasibility)
        },
        FeasibilityOutcome::Unknown => SideResult::unknown(Method::Feasibility),
    }
}

fn closed_form_no(name: &str, margin: f64) -> SideResult {
    SideResult::no(
        Method::ClosedForm,
        ViolationRecord {
            kind: ViolationKind::ClosedFormCriterion(name.into()),
            margin,
            witness: None,
        },
    )
}

/// Classify a channel as degradable / anti-degradable / both / neither.
///
/// Pipeline: degenerate-dimension shortcuts, closed forms for qubit output,
/// structural output-rank bounds, then kernel condition, pseudo-inverse and
/// feasibility in both directions, and finally a positive
/// coherent-information lower bound to exclude anti-degradability.
pub fn classify(phi: &KrausChannel, opts: &ClassifyOptions) -> Verdict {
    let tol = opts.tol;
    let d_a = phi.d_in();
    let d_b = phi.d_out();
    let d_e = phi.choi_rank(tol);
    let dims = (d_a, d_b, d_e);
    let make = |deg: SideResult, anti: SideResult, bound: Option<f64>| Verdict {
        deg,
        anti,
        tolerance: tol,
        dims,
        coherent_lower_bound: bound,
    };

    // d_A = 1: unique outputs on both sides; both directions hold with
    // completely noisy degrading maps.
    if d_a == 1 {
        let comp = phi.complement();
        let rho_b = phi.apply_matrix(&ceye(1));
        let rho_e = comp.apply_matrix(&ceye(1));
        let deg_w = prepare_state_channel(&rho_e, d_b);
        let anti_w = prepare_state_channel(&rho_b, comp.d_out());
        let deg = SideResult::yes(Method::ClosedForm, deg_w, phi, &comp);
        let anti = SideResult::yes(Method::ClosedForm, anti_w, &comp, phi);
        return make(deg, anti, None);
    }
    // d_E = 1: isometry; always degradable via the full trace.
    if d_e == 1 {
        let comp = phi.complement();
        let deg = SideResult::yes(
            Method::ClosedForm,
            KrausChannel::trace_channel(d_b),
            phi,
            &comp,
        );
        let anti = if d_b == 1 {
            SideResult::yes(Method::ClosedForm, phi.clone(), &comp, phi)
        } else {
            closed_form_no(
                "isometry has positive quantum capacity",
                (d_a as f64).log2(),
            )
        };
        return make(deg, anti, Some((d_a.min(d_b) as f64).log2()));
    }
    // d_B = 1: the full trace; anti-degradable, never degradable for d_A ≥ 2.
    if d_b == 1 {
        let comp = phi.complement();
        let deg = match kernel_compose(phi, &comp, tol) {
            KernelOutcome::Fails {
                witness,
                image_norm,
            } => SideResult::no(
                Method::ClosedForm,
                ViolationRecord {
                    kind: ViolationKind::KernelCondition,
                    margin: image_norm,
                    witness: Some(witness),
                },
            ),
            KernelOutcome::Holds => SideResult::unknown(Method::ClosedForm),
        };
        let anti = SideResult::yes(Method::ClosedForm, phi.clone(), &comp, phi);
        return make(deg, anti, None);
    }

    // closed forms for qubit output
    if d_b == 2 {
        if let Some(v) = crate::qubit::try_closed_form(phi, opts) {
            return v;
        }
    }

    // structural bounds on degradability from the output dimension
    let mut deg: Option<SideResult> = None;
    if d_b == 2 && d_e >= 3 {
        deg = Some(closed_form_no(
            "qubit output requires Choi rank <= 2",
            (d_e - 2) as f64,
        ));
    } else if d_b == 2 && d_a >= 4 {
        deg = Some(closed_form_no(
            "qubit output requires input dimension <= 3",
            (d_a - 3) as f64,
        ));
    } else if d_b == 3 && d_e >= 4 {
        deg = Some(closed_form_no(
            "qutrit output requires Choi rank <= 3",
            (d_e - 3) as f64,
        ));
    }

    let comp = phi.complement();
    let deg = deg.unwrap_or_else(|| decide_compose(phi, &comp, opts));

    // anti-degradability: entanglement-breaking certificate, the engine on
    // the complement, then the coherent-information disproof.
    let mut bound = None;
    let mut anti = if let PptFlag::Ppt { eb_certified: true } = phi.ppt_flag() {
        SideResult {
            status: SideStatus::Yes,
            ..SideResult::unknown(Method::ClosedForm)
        }
    } else {
        SideResult::unknown(Method::ClosedForm)
    };
    if anti.status != SideStatus::Yes {
        anti = decide_compose(&comp, phi, opts);
    }
    if anti.status == SideStatus::Unknown && opts.use_capacity_bound {
        let res = crate::capacity::maximize_coherent_info(
            phi,
            &crate::capacity::MaximizeOptions {
                restarts: 4,
                max_iter: 300,
                tol: 1e-9,
                seed: opts.seed,
                ..Default::default()
            },
        );
        // re-verify the value at the reported maximizer before using it
        let verified = crate::capacity::coherent_info(phi, &res.argmax).unwrap_or(f64::NAN);
        bound = Some(verified);
        if verified.is_finite() && verified > 1e-4 {
            anti = closed_form_no("positive coherent information", verified);
        }
    }
    make(deg, anti, bound)
}

/// `γ ↦ Tr(γ)·σ` as a Kraus channel (σ given unnormalized PSD, renormalized).
fn prepare_state_channel(sigma: &CMatrix, d_in: usize) -> KrausChannel {
    let tr = sigma.trace().re;
    let rho = sigma.scale(1.0 / tr);
    let (vals, vecs) = herm_eig(&rho, 1e-8).expect("state Hermitian");
    let d_out = rho.nrows();
    let mut kraus = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v > 1e-14 {
            for j in 0..d_in {
                let mut k = czero(d_out, d_in);
                for r in 0..d_out {
                    k[(r, j)] = vecs[(r, i)] * cscalar(v.sqrt());
                }
                kraus.push(k);
            }
        }
    }
    KrausChannel::new_unchecked(d_in, d_out, kraus)
}

/// Report of the range/rank consistency checks run against a verified
/// degrador.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub samples: usize,
    pub rank_mismatches: usize,
    pub containment_violations: usize,
    pub max_containment_residual: f64,
}

/// For sampled pure `ψ`: `rank Φ(ψ) = rank Φ^C(ψ)`, and for `φ` in the range
/// of `Φ(ψ)`, `range Ψ(|φ⟩⟨φ|) ⊆ range Φ^C(ψ)`. Violations indicate
/// numerical trouble, not mathematics.
pub fn rank_property_check(
    phi: &KrausChannel,
    psi: &KrausChannel,
    comp: &KrausChannel,
    n_samples: usize,
    seed: u64,
) -> RankReport {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-7;
    let mut rank_mismatches = 0;
    let mut containment_violations = 0;
    let mut max_resid: f64 = 0.0;
    for _ in 0..n_samples {
        let v: Vec<Complex64> = (0..phi.d_in())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let rho = DensityMatrix::pure(&v);
        let out_b = phi.apply_matrix(rho.matrix());
        let out_e = comp.apply_matrix(rho.matrix());
        let rank_of = |m: &CMatrix| {
            let (vals, _) = herm_eig(m, 1e-7).expect("output Hermitian");
            let max = vals[0].max(1e-30);
            vals.iter().filter(|&&x| x > tol * max).count()
        };
        if rank_of(&out_b) != rank_of(&out_e) {
            rank_mismatches += 1;
        }
        // projector onto range Φ^C(ψ)
        let (vals, vecs) = herm_eig(&out_e, 1e-7).expect("Hermitian");
        let max = vals[0].max(1e-30);
        let mut proj = czero(out_e.nrows(), out_e.nrows());
        for (i, &val) in vals.iter().enumerate() {
            if val > tol * max {
                let col = vecs.column(i);
                for r in 0..out_e.nrows() {
                    for c in 0..out_e.nrows() {
                        proj[(r, c)] += col[r] * col[c].conj();
                    }
                }
            }
        }
        let perp = ceye(out_e.nrows()) - proj;
        // sample φ from the range of Φ(ψ)
        let (bvals, bvecs) = herm_eig(&out_b, 1e-7).expect("Hermitian");
        let bmax = bvals[0].max(1e-30);
        for (i, &bv) in bvals.iter().enumerate() {
            if bv > tol * bmax {
                let phi_vec: Vec<Complex64> = bvecs.column(i).iter().copied().collect();
                let sigma = psi.apply_matrix(DensityMatrix::pure(&phi_vec).matrix());
                let resid = (&perp * sigma).norm();
                max_resid = max_resid.max(resid);
                if resid > 1e-6 {
                    containment_violations += 1;
                }
            }
        }
    }
    RankReport {
        samples: n_samples,
        rank_mismatches,
        containment_violations,
        max_containment_residual: max_resid,
    }
}

/// Move a witness across Kraus gauges: given `Ψ` verified against the
/// complement built from `rep`'s Kraus list, return `Ψ' = Ψ∘Γ_{u†}` verified
/// against the complement built from `minimal`'s list.
pub fn transport_witness(
    psi: &KrausChannel,
    rep: &KrausChannel,
    minimal: &KrausChannel,
    tol: f64,
) -> Result<KrausChannel> {
    let u = crate::channel::gauge_coisometry(rep, minimal, tol)?;
    if psi.d_in() != u.ncols() {
        return Err(Error::DimensionMismatch(
            "witness input does not match gauge".into(),
        ));
    }
    let embed = KrausChannel::new_unchecked(u.nrows(), u.ncols(), vec![u.adjoint()]);
    embed.then(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complement_in_gauge, random_channel};
    use crate::opalg::ONE;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sigma(k: usize) -> CMatrix {
        match k {
            0 => ceye(2),
            1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            2 => CMatrix::from_row_slice(
                2,
                2,
                &[
                    ZERO,
                    Complex64::new(0.0, -1.0),
                    Complex64::new(0.0, 1.0),
                    ZERO,
                ],
            ),
            _ => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    fn amplitude_damping(g: f64) -> KrausChannel {
        KrausChannel::new(
            2,
            2,
            vec![
                CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, cscalar((1.0 - g).sqrt())]),
                CMatrix::from_row_slice(2, 2, &[ZERO, cscalar(g.sqrt()), ZERO, ZERO]),
            ],
            1e-10,
        )
        .unwrap()
    }

    #[test]
    fn kernel_condition_holds_for_injective_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = random_channel(&mut rng, 2, 3, 2);
        assert!(kernel_condition(&ch, 1e-9).holds());
    }

    #[test]
    fn kernel_condition_fails_for_block_channel() {
        // M₄ → M₂ with A = (I 0), B = (0 I): Φ kills off-diagonal blocks but
        // Φ^C keeps their traces.
        let a = CMatrix::from_fn(2, 4, |r, c| if c == r { ONE } else { ZERO });
        let b = CMatrix::from_fn(2, 4, |r, c| if c == r + 2 { ONE } else { ZERO });
        let ch = KrausChannel::new(4, 2, vec![a, b], 1e-10).unwrap();
        match kernel_condition(&ch, 1e-9) {
            KernelOutcome::Fails { image_norm, .. } => assert!(image_norm > 1e-6),
            KernelOutcome::Holds => panic!("kernel condition should fail"),
        }
        // explicit witness of the off-diagonal block form with Tr X ≠ 0
        let mut x = czero(4, 4);
        x[(0, 2)] = ONE;
        x[(1, 3)] = ONE;
        x[(2, 0)] = ONE;
        x[(3, 1)] = ONE;
        assert!(ch.apply_matrix(&x).norm() < 1e-12);
        assert!(ch.complement().apply_matrix(&x).norm() > 0.5);
    }

    #[test]
    fn identity_is_degradable_via_pinv() {
        let id = KrausChannel::identity(2);
        match pinv_degradability(&id, 1e-9) {
            PinvOutcome::Feasible(psi) => {
                assert_eq!(psi.d_out(), 1);
                let resid = compose_residual(&psi, &id, &id.complement());
                assert!(resid < 1e-9);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn unital_dephasing_mix_pinv_conclusive() {
        // Kraus {√(1−p) I, √p σz}: degradable for p < 1/2
        let p: f64 = 0.2;
        let ch = KrausChannel::new(
            2,
            2,
            vec![
                sigma(0) * cscalar((1.0 - p).sqrt()),
                sigma(3) * cscalar(p.sqrt()),
            ],
            1e-10,
        )
        .unwrap();
        match pinv_degradability(&ch, 1e-9) {
            PinvOutcome::Feasible(psi) => {
                assert!(compose_residual(&psi, &ch, &ch.complement()) < 1e-8);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn feasibility_finds_known_degrador() {
        // anti-degradability of the two-Pauli channel at t² = 1/4:
        // Ψ∘Φ^C = Φ is feasible
        let t2: f64 = 0.25;
        let t = t2.sqrt();
        let a0 = (1.0 - 2.0 * t2).sqrt();
        let ch = KrausChannel::new(
            2,
            2,
            vec![
                sigma(0) * cscalar(a0),
                sigma(1) * cscalar(t),
                sigma(2) * cscalar(t),
            ],
            1e-10,
        )
        .unwrap();
        let comp = ch.complement();
        match feasibility_compose(&comp, &ch, 4000, 1e-7) {
            FeasibilityOutcome::Feasible(psi) => {
                assert!(compose_residual(&psi, &comp, &ch) < 1e-4);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn feasibility_rejects_antidegrading_the_identity() {
        let id = KrausChannel::identity(2);
        let comp = id.complement();
        match feasibility_compose(&comp, &id, 1500, 1e-7) {
            FeasibilityOutcome::LikelyNot(d) => assert!(d > 1e-4),
            FeasibilityOutcome::Feasible(_) => panic!("identity is not anti-degradable"),
            FeasibilityOutcome::Unknown => {}
        }
    }

    #[test]
    fn classify_werner_holevo_is_both() {
        let w = KrausChannel::werner_holevo(3);
        let v = classify(&w, &ClassifyOptions::default());
        assert_eq!(v.tag(), VerdictTag::Both);
        assert!(v.deg.residual.unwrap() < 1e-8);
        assert!(v.anti.residual.unwrap() < 1e-8);
    }

    #[test]
    fn classify_qutrit_xz_channel_is_neither() {
        let ch = crate::paulidiag::PauliDiagonalSpec::on_support(
            3,
            &[((0, 0), 0.5), ((1, 0), 0.3), ((0, 1), 0.2)],
        )
        .unwrap()
        .channel();
        let v = classify(&ch, &ClassifyOptions::default());
        assert_eq!(v.tag(), VerdictTag::Neither);
    }

    #[test]
    fn classify_block_sum_of_opposite_qubit_channels_is_neither() {
        let ch = amplitude_damping(0.2).block_direct_sum(&amplitude_damping(0.8));
        assert_eq!(ch.kraus().len(), 4);
        let v = classify(&ch, &ClassifyOptions::default());
        assert_eq!(v.tag(), VerdictTag::Neither);
    }

    #[test]
    fn classify_swaps_under_complement() {
        let ad = amplitude_damping(0.3);
        let v = classify(&ad, &ClassifyOptions::default());
        let vc = classify(&ad.complement(), &ClassifyOptions::default());
        assert_eq!(v.tag(), VerdictTag::Degradable);
        assert_eq!(vc.tag(), VerdictTag::AntiDegradable);
    }

    #[test]
    fn rank_property_holds_for_amplitude_damping() {
        let ad = amplitude_damping(0.3);
        let comp = complement_in_gauge(ad.kraus(), 2);
        let psi = match pinv_compose(&ad, &comp, 1e-9) {
            PinvOutcome::Feasible(psi) => psi,
            other => panic!("amplitude damping γ=0.3 is degradable, got {other:?}"),
        };
        let report = rank_property_check(&ad, &psi, &comp, 50, 17);
        assert_eq!(report.rank_mismatches, 0);
        assert_eq!(report.containment_violations, 0);
    }

    #[test]
    fn trivial_dimension_shortcuts() {
        // d_A = 1: state preparation, both
        let psi = [cscalar(0.6), cscalar(0.8)];
        let prep =
            KrausChannel::new(1, 2, vec![CMatrix::from_fn(2, 1, |r, _| psi[r])], 1e-10).unwrap();
        assert_eq!(
            classify(&prep, &ClassifyOptions::default()).tag(),
            VerdictTag::Both
        );

        // d_B = 1: the trace, anti-degradable only
        let tr = KrausChannel::trace_channel(3);
        assert_eq!(
            classify(&tr, &ClassifyOptions::default()).tag(),
            VerdictTag::AntiDegradable
        );

        // d_E = 1 with d_A < d_B: isometry, degradable only
        let mut v0 = czero(3, 2);
        v0[(0, 0)] = ONE;
        v0[(2, 1)] = ONE;
        let iso = KrausChannel::new(2, 3, vec![v0], 1e-10).unwrap();
        assert_eq!(
            classify(&iso, &ClassifyOptions::default()).tag(),
            VerdictTag::Degradable
        );
    }
}
