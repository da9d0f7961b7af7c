//! Bohr decomposition, frequency grouping, generator assembly and propagation.
//!
//! Interaction-picture states are `ρ̃(t) = e^{iHt} ρ(t) e^{-iHt}`. Cumulant and
//! Davies-global maps are built in the interaction picture; the Davies-local
//! generator is built in the Schrödinger picture and carries `-i[H, ·]`.
//! States are converted between pictures by exact conjugation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::{check_grid, DensityMatrix, Picture, TimeSeries};
use crate::bath::BathModel;
use crate::error::{Error, Result};
use crate::linalg::{
    dissipator_super, hermitian_eig, hermiticity_defect, max_abs, CMatrix, Superoperator, HERMITIAN_TOL,
};
use crate::rates::{assemble_gamma_matrix, QuadratureConfig, RateKernel, RateMethod};

/// Blocks with every entry below this (relative to the coupling) are dropped.
const ZERO_BLOCK_TOL: f64 = 1e-14;

pub const TRACE_INVARIANT_TOL: f64 = 1e-9;
pub const PSD_INVARIANT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    hamiltonian: CMatrix,
    couplings: Vec<CMatrix>,
}

fn check_hermitian(name: &'static str, m: &CMatrix) -> Result<()> {
    let deviation = hermiticity_defect(m);
    if deviation > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::param(name, format!("not Hermitian (defect {deviation:.3e})")));
    }
    Ok(())
}

impl SystemModel {
    /// System with Hermitian coupling operators `A_i`.
    pub fn new(hamiltonian: CMatrix, couplings: Vec<CMatrix>) -> Result<Self> {
        for a in &couplings {
            check_hermitian("coupling", a)?;
        }
        Self::with_general_couplings(hamiltonian, couplings)
    }

    /// Like [`SystemModel::new`] but accepts non-Hermitian `A_i`.
    pub fn with_general_couplings(hamiltonian: CMatrix, couplings: Vec<CMatrix>) -> Result<Self> {
        if hamiltonian.nrows() != hamiltonian.ncols() {
            return Err(Error::NotSquare {
                rows: hamiltonian.nrows(),
                cols: hamiltonian.ncols(),
            });
        }
        check_hermitian("hamiltonian", &hamiltonian)?;
        if couplings.is_empty() {
            return Err(Error::param("couplings", "at least one coupling operator is required"));
        }
        let d = hamiltonian.nrows();
        if let Some(a) = couplings.iter().find(|a| a.shape() != (d, d)) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.nrows().max(a.ncols()),
            });
        }
        Ok(Self {
            hamiltonian,
            couplings,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn couplings(&self) -> &[CMatrix] {
        &self.couplings
    }

    /// `1e-9 ‖H‖`, with `‖H‖` the largest absolute entry (at least 1).
    pub fn default_tol_freq(&self) -> f64 {
        1e-9 * max_abs(&self.hamiltonian).max(1.0)
    }

    /// `e^{-iHt}`.
    pub fn evolution_operator(&self, t: f64) -> Result<CMatrix> {
        let eig = hermitian_eig(&self.hamiltonian)?;
        let phases = nalgebra::DVector::from_iterator(
            eig.values.len(),
            eig.values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        );
        let v = &eig.vectors;
        Ok(v * CMatrix::from_diagonal(&phases) * v.adjoint())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub op: usize,
    pub freq: usize,
    pub matrix: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BohrDecomposition {
    dim: usize,
    n_ops: usize,
    energies: Vec<f64>,
    projectors: Vec<CMatrix>,
    frequencies: Vec<f64>,
    jumps: Vec<JumpOperator>,
}

impl BohrDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_ops(&self) -> usize {
        self.n_ops
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Ascending Bohr frequencies carrying at least one non-zero jump operator.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    /// `A_op(ω)` for the frequency with index `freq`, if non-zero.
    pub fn jump(&self, op: usize, freq: usize) -> Option<&CMatrix> {
        self.jumps
            .iter()
            .find(|j| j.op == op && j.freq == freq)
            .map(|j| &j.matrix)
    }

    pub fn frequency_index(&self, omega: f64, tol: f64) -> Option<usize> {
        self.frequencies.iter().position(|w| (w - omega).abs() <= tol)
    }
}

/// Merges sorted values whose consecutive gaps are at most `tol`, returning
/// the cluster means and each value's cluster index.
fn cluster_sorted(values: &[f64], tol: f64) -> (Vec<f64>, Vec<usize>) {
    let mut means = Vec::new();
    let mut labels = Vec::with_capacity(values.len());
    let mut start = 0;
    for k in 0..values.len() {
        if k > 0 && values[k] - values[k - 1] > tol {
            let slice = &values[start..k];
            means.push(slice.iter().sum::<f64>() / slice.len() as f64);
            start = k;
        }
        labels.push(means.len());
    }
    if !values.is_empty() {
        let slice = &values[start..];
        means.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    (means, labels)
}

/// `A_i(ω) = Σ_{ε' - ε = ω} Π(ε) A_i Π(ε')`, with energies and frequencies
/// merged within `tol_freq`.
pub fn bohr_decompose(sys: &SystemModel, tol_freq: f64) -> Result<BohrDecomposition> {
    if !(tol_freq >= 0.0) || tol_freq.is_infinite() {
        return Err(Error::param("tol_freq", format!("must be finite and non-negative, got {tol_freq}")));
    }
    let d = sys.dim();
    let eig = hermitian_eig(sys.hamiltonian())?;
    let (energies, level) = cluster_sorted(&eig.values, tol_freq);
    let projectors: Vec<CMatrix> = (0..energies.len())
        .map(|l| {
            let mut p = CMatrix::zeros(d, d);
            for (k, _) in level.iter().enumerate().filter(|&(_, &lk)| lk == l) {
                let v = eig.vectors.column(k);
                p += &v * v.adjoint();
            }
            p
        })
        .collect();

    let mut transitions: Vec<(f64, usize, usize)> = Vec::new();
    for (a, ea) in energies.iter().enumerate() {
        for (b, eb) in energies.iter().enumerate() {
            transitions.push((eb - ea, a, b));
        }
    }
    transitions.sort_by(|x, y| x.0.total_cmp(&y.0));
    let diffs: Vec<f64> = transitions.iter().map(|t| t.0).collect();
    let (all_freqs, labels) = cluster_sorted(&diffs, tol_freq);

    let mut blocks: Vec<Vec<CMatrix>> = vec![vec![CMatrix::zeros(d, d); all_freqs.len()]; sys.couplings().len()];
    for (&(_, a, b), &f) in transitions.iter().zip(&labels) {
        for (i, coupling) in sys.couplings().iter().enumerate() {
            blocks[i][f] += &projectors[a] * coupling * &projectors[b];
        }
    }

    let mut used = vec![false; all_freqs.len()];
    let mut kept: Vec<(usize, usize, CMatrix)> = Vec::new();
    for (i, row) in blocks.into_iter().enumerate() {
        let scale = max_abs(&sys.couplings()[i]).max(f64::MIN_POSITIVE);
        for (f, m) in row.into_iter().enumerate() {
            if max_abs(&m) > ZERO_BLOCK_TOL * scale {
                used[f] = true;
                kept.push((i, f, m));
            }
        }
    }
    let mut remap = vec![usize::MAX; all_freqs.len()];
    let mut frequencies = Vec::new();
    for (f, &w) in all_freqs.iter().enumerate() {
        if used[f] {
            remap[f] = frequencies.len();
            frequencies.push(w);
        }
    }
    let jumps = kept
        .into_iter()
        .map(|(op, f, matrix)| JumpOperator {
            op,
            freq: remap[f],
            matrix,
        })
        .collect();
    Ok(BohrDecomposition {
        dim: d,
        n_ops: sys.couplings().len(),
        energies,
        projectors,
        frequencies,
        jumps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGroup {
    pub mean: f64,
    /// Indices into [`BohrDecomposition::frequencies`].
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrouping {
    pub groups: Vec<FrequencyGroup>,
    /// Largest spread of frequencies inside one group.
    pub delta_omega: f64,
    /// Smallest gap between consecutive group means; `None` for a single group.
    pub delta_big_omega: Option<f64>,
    pub warning: Option<String>,
}

impl FrequencyGrouping {
    pub fn group_of(&self, freq: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.members.contains(&freq))
    }
}

/// Single-linkage clustering of the Bohr frequencies: split wherever two
/// consecutive frequencies are more than `gap_threshold` apart.
pub fn group_frequencies(dec: &BohrDecomposition, gap_threshold: f64) -> Result<FrequencyGrouping> {
    if !(gap_threshold > 0.0) || gap_threshold.is_infinite() {
        return Err(Error::param(
            "gap_threshold",
            format!("must be positive and finite, got {gap_threshold}"),
        ));
    }
    let freqs = dec.frequencies();
    if freqs.is_empty() {
        return Err(Error::param("frequencies", "no Bohr frequencies to group"));
    }
    let mut groups: Vec<FrequencyGroup> = Vec::new();
    for (k, &w) in freqs.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if w - freqs[*g.members.last().unwrap()] <= gap_threshold => g.members.push(k),
            _ => groups.push(FrequencyGroup {
                mean: 0.0,
                members: vec![k],
            }),
        }
    }
    let mut delta_omega: f64 = 0.0;
    for g in &mut groups {
        g.mean = g.members.iter().map(|&k| freqs[k]).sum::<f64>() / g.members.len() as f64;
        let spread = freqs[*g.members.last().unwrap()] - freqs[g.members[0]];
        delta_omega = delta_omega.max(spread);
    }
    let delta_big_omega = groups
        .windows(2)
        .map(|w| w[1].mean - w[0].mean)
        .reduce(f64::min);
    let mut warning = None;
    if let Some(big) = delta_big_omega {
        if delta_omega > big {
            return Err(Error::param(
                "gap_threshold",
                format!("groups overlap: intra-group spread {delta_omega} exceeds inter-group gap {big}"),
            ));
        }
        let ratio = delta_omega / big;
        if ratio > 0.1 {
            warning = Some(format!(
                "frequency groups are not well separated: spread/gap = {ratio:.3} > 0.1"
            ));
        }
    }
    Ok(FrequencyGrouping {
        groups,
        delta_omega,
        delta_big_omega,
        warning,
    })
}

/// Geometric mean of the small and large gap scales when the sorted gaps
/// between Bohr frequencies jump by more than a factor of 10; otherwise half
/// the smallest gap, which keeps every frequency in its own group.
pub fn default_gap_threshold(dec: &BohrDecomposition) -> f64 {
    let freqs = dec.frequencies();
    let mut gaps: Vec<f64> = freqs.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return 1.0;
    }
    gaps.sort_by(f64::total_cmp);
    let jump = gaps
        .windows(2)
        .map(|w| (w[1] / w[0], w[0], w[1]))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match jump {
        Some((ratio, small, large)) if ratio > 10.0 => (small * large).sqrt(),
        _ => 0.5 * gaps[0],
    }
}

/// `A_i^loc(ω̄_α) = Σ_{ω ∈ α} A_i(ω)` for every group `α`, in group order.
pub fn local_jump_ops(dec: &BohrDecomposition, grouping: &FrequencyGrouping, op: usize) -> Result<Vec<(f64, CMatrix)>> {
    if op >= dec.n_ops() {
        return Err(Error::param("op", format!("coupling index {op} out of range")));
    }
    let d = dec.dim();
    grouping
        .groups
        .iter()
        .map(|g| {
            let mut m = CMatrix::zeros(d, d);
            for &f in &g.members {
                if f >= dec.frequencies().len() {
                    return Err(Error::param("grouping", "group refers to an unknown frequency"));
                }
                if let Some(a) = dec.jump(op, f) {
                    m += a;
                }
            }
            Ok((g.mean, m))
        })
        .collect()
}

/// `Σ_{ab} Γ_ab D(A_a, A_b)` over the composite index `a = f n + i`.
fn gamma_weighted(dim: usize, ops: &[Option<&CMatrix>], gamma: &CMatrix) -> Result<Superoperator> {
    let mut out = Superoperator::zeros(dim);
    for (a, ja) in ops.iter().enumerate() {
        let Some(ja) = ja else { continue };
        for (b, jb) in ops.iter().enumerate() {
            let Some(jb) = jb else { continue };
            let w = gamma[(a, b)];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            out.add_scaled(&dissipator_super(ja, jb)?, w);
        }
    }
    Ok(out)
}

fn composite_ops(dec: &BohrDecomposition) -> Vec<Option<&CMatrix>> {
    let n = dec.n_ops();
    (0..dec.frequencies().len() * n)
        .map(|a| dec.jump(a % n, a / n))
        .collect()
}

/// Interaction-picture cumulant generator `K̃(t)`.
pub fn cumulant_generator(dec: &BohrDecomposition, kernel: &RateKernel, t: f64) -> Result<Superoperator> {
    if kernel.method() == RateMethod::Markov {
        return Err(Error::param("kernel", "the Markov rate does not define a cumulant generator"));
    }
    if dec.frequencies().is_empty() {
        return Ok(Superoperator::zeros(dec.dim()));
    }
    let gamma = assemble_gamma_matrix(kernel, dec.frequencies(), dec.n_ops(), t)?;
    gamma_weighted(dec.dim(), &composite_ops(dec), &gamma)
}

fn markov_kernel(bath: &BathModel) -> Result<RateKernel> {
    RateKernel::new(RateMethod::Markov, bath.clone(), QuadratureConfig::default())
}

/// Interaction-picture Davies generator `L̃_glob` (dissipative part only).
pub fn davies_global_generator(dec: &BohrDecomposition, bath: &BathModel) -> Result<Superoperator> {
    if dec.frequencies().is_empty() {
        return Ok(Superoperator::zeros(dec.dim()));
    }
    let gamma = assemble_gamma_matrix(&markov_kernel(bath)?, dec.frequencies(), dec.n_ops(), 0.0)?;
    gamma_weighted(dec.dim(), &composite_ops(dec), &gamma)
}

/// Schrödinger-picture local generator `-i[H, ·] + Σ_α Σ_ij γ_ij(ω̄_α) D(A_i^loc, A_j^loc)`.
pub fn davies_local_generator(
    sys: &SystemModel,
    dec: &BohrDecomposition,
    grouping: &FrequencyGrouping,
    bath: &BathModel,
) -> Result<Superoperator> {
    let n = dec.n_ops();
    let mut out = Superoperator::hamiltonian(sys.hamiltonian())?;
    if grouping.groups.is_empty() {
        return Ok(out);
    }
    let per_op: Vec<Vec<(f64, CMatrix)>> = (0..n)
        .map(|i| local_jump_ops(dec, grouping, i))
        .collect::<Result<_>>()?;
    let means: Vec<f64> = grouping.groups.iter().map(|g| g.mean).collect();
    let gamma = assemble_gamma_matrix(&markov_kernel(bath)?, &means, n, 0.0)?;
    let ops: Vec<Option<&CMatrix>> = (0..means.len() * n)
        .map(|a| {
            let m = &per_op[a % n][a / n].1;
            (max_abs(m) > 0.0).then_some(m)
        })
        .collect();
    out.add_scaled(&gamma_weighted(dec.dim(), &ops, &gamma)?, Complex64::new(1.0, 0.0));
    Ok(out)
}

/// Which family of dynamical maps to propagate with.
#[derive(Debug, Clone)]
pub enum Dynamics {
    /// `e^{K̃(t)}` with the kernel's regularization, rebuilt at every time.
    Cumulant(RateKernel),
    DaviesGlobal(BathModel),
    DaviesLocal { bath: BathModel, grouping: FrequencyGrouping },
}

impl Dynamics {
    pub fn name(&self) -> &'static str {
        match self {
            Dynamics::Cumulant(k) => k.method().name(),
            Dynamics::DaviesGlobal(_) => "davies-global",
            Dynamics::DaviesLocal { .. } => "davies-local",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub time: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub interaction: TimeSeries,
    pub schrodinger: TimeSeries,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn series(&self, picture: Picture) -> &TimeSeries {
        match picture {
            Picture::Interaction => &self.interaction,
            Picture::Schrodinger => &self.schrodinger,
        }
    }
}

/// Time-dependent dynamical maps of one system under one [`Dynamics`].
#[derive(Debug, Clone)]
pub struct Propagator {
    system: SystemModel,
    decomposition: BohrDecomposition,
    dynamics: Dynamics,
    generator: Option<Superoperator>,
}

impl Propagator {
    pub fn new(system: SystemModel, dynamics: Dynamics) -> Result<Self> {
        let decomposition = bohr_decompose(&system, system.default_tol_freq())?;
        Self::with_decomposition(system, decomposition, dynamics)
    }

    pub fn with_decomposition(system: SystemModel, decomposition: BohrDecomposition, dynamics: Dynamics) -> Result<Self> {
        if decomposition.dim() != system.dim() || decomposition.n_ops() != system.couplings().len() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                found: decomposition.dim(),
            });
        }
        let bath = match &dynamics {
            Dynamics::Cumulant(k) => k.bath(),
            Dynamics::DaviesGlobal(b) | Dynamics::DaviesLocal { bath: b, .. } => b,
        };
        if bath.n_ops() != system.couplings().len() {
            return Err(Error::DimensionMismatch {
                expected: system.couplings().len(),
                found: bath.n_ops(),
            });
        }
        let generator = match &dynamics {
            Dynamics::Cumulant(_) => None,
            Dynamics::DaviesGlobal(bath) => Some(davies_global_generator(&decomposition, bath)?),
            Dynamics::DaviesLocal { bath, grouping } => {
                Some(davies_local_generator(&system, &decomposition, grouping, bath)?)
            }
        };
        Ok(Self {
            system,
            decomposition,
            dynamics,
            generator,
        })
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn decomposition(&self) -> &BohrDecomposition {
        &self.decomposition
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    /// The interaction-picture map `ρ̃(0) ↦ ρ̃(t)`.
    pub fn interaction_map(&self, t: f64) -> Result<Superoperator> {
        if !(t >= 0.0) || t.is_infinite() {
            return Err(Error::param("t", format!("must be finite and non-negative, got {t}")));
        }
        match &self.dynamics {
            Dynamics::Cumulant(kernel) => cumulant_generator(&self.decomposition, kernel, t)?.exp(),
            Dynamics::DaviesGlobal(_) => self.generator.as_ref().expect("built in new").scale(t).exp(),
            Dynamics::DaviesLocal { .. } => {
                let schrodinger = self.generator.as_ref().expect("built in new").scale(t).exp()?;
                let u = self.system.evolution_operator(t)?;
                Ok(Superoperator::sandwich(&u.adjoint(), &u)?.compose(&schrodinger))
            }
        }
    }

    /// The Schrödinger-picture map `ρ(0) ↦ ρ(t)`.
    pub fn schrodinger_map(&self, t: f64) -> Result<Superoperator> {
        let u = self.system.evolution_operator(t)?;
        Ok(Superoperator::sandwich(&u, &u.adjoint())?.compose(&self.interaction_map(t)?))
    }

    /// `(ρ̃(t), ρ(t))` for the initial state `rho0`.
    pub fn evolve(&self, rho0: &CMatrix, t: f64) -> Result<(CMatrix, CMatrix)> {
        let interaction = self.interaction_map(t)?.apply(rho0);
        let u = self.system.evolution_operator(t)?;
        let schrodinger = &u * &interaction * u.adjoint();
        Ok((interaction, schrodinger))
    }

    /// States on `times`, each from a fresh map started at `t = 0`.
    pub fn propagate(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
        check_grid(times)?;
        if times[0] < 0.0 {
            return Err(Error::param("times", "grid must start at t >= 0"));
        }
        if rho0.dim() != self.system.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.system.dim(),
                found: rho0.dim(),
            });
        }
        DensityMatrix::with_tolerances(rho0.matrix().clone(), 1e-12, 1e-9, 1e-12)?;
        let steps: Vec<(DensityMatrix, DensityMatrix, StepDiagnostics)> = times
            .par_iter()
            .map(|&t| {
                let (tilde, rho) = self.evolve(rho0.matrix(), t)?;
                let diag = diagnose(t, &rho)?;
                if diag.trace_defect > TRACE_INVARIANT_TOL || diag.min_eigenvalue < -PSD_INVARIANT_TOL {
                    return Err(Error::Invariant {
                        time: t,
                        trace_defect: diag.trace_defect,
                        min_eigenvalue: diag.min_eigenvalue,
                    });
                }
                let relaxed = |m: CMatrix| DensityMatrix::with_tolerances(m, 1e-8, TRACE_INVARIANT_TOL, PSD_INVARIANT_TOL);
                Ok((relaxed(tilde)?, relaxed(rho)?, diag))
            })
            .collect::<Result<_>>()?;
        let mut interaction = Vec::with_capacity(steps.len());
        let mut schrodinger = Vec::with_capacity(steps.len());
        let mut diagnostics = Vec::with_capacity(steps.len());
        for (a, b, d) in steps {
            interaction.push(a);
            schrodinger.push(b);
            diagnostics.push(d);
        }
        let mut interaction = TimeSeries::new(times.to_vec(), interaction, Picture::Interaction)?;
        let mut schrodinger = TimeSeries::new(times.to_vec(), schrodinger, Picture::Schrodinger)?;
        for s in [&mut interaction, &mut schrodinger] {
            s.metadata.insert("method".into(), self.dynamics.name().into());
            s.metadata.insert("picture".into(), s.picture().name().into());
        }
        Ok(Trajectory {
            interaction,
            schrodinger,
            diagnostics,
        })
    }
}

fn diagnose(t: f64, rho: &CMatrix) -> Result<StepDiagnostics> {
    let h = (rho + rho.adjoint()).scale(0.5);
    let min_eigenvalue = hermitian_eig(&h)?.values[0];
    Ok(StepDiagnostics {
        time: t,
        trace_defect: (rho.trace() - 1.0).norm(),
        min_eigenvalue,
    })
}
