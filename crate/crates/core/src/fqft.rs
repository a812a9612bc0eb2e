//! State spaces and cylinder amplitudes of the massive free scalar field,
//! their composition, traces, and the functoriality checks.
//!
//! An amplitude is stored per mode as a Cayley block `C(α)` together with a
//! log prefactor multiplying the (unnormalized) exponential vector `ℰ(C)`.
//! Composition never builds Fock operators; the truncated Fock representation
//! only appears in [`projective_scalar_check`].

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fock::{compose_hs, gaussian_operator, log_cocycle_constant, log_fock_norm_sq};
use crate::geom::{
    alpha_operator, glue, mode_frequencies, BordismScene, CircleObject, CylinderMorphism, Mode,
    ModeSpectrum, TheoryConfig, TorusComponent,
};
use crate::opalg::{
    cayley, cayley_inverse, logdet_pos, schur_compose, BlockPosOp, CayleyForm, SymMatrix,
};
use crate::special::{ln_one_minus_exp_neg, CompensatedSum};
use crate::zeta::{SeriesControl, ZetaFamily};

/// Per-mode `e^{−ωL}` below which a mode is treated as decoupled.
pub const MODE_DECOUPLING_TOL: f64 = 1e-16;

/// `E(Y)` through its mode basis; a disjoint union lists one entry per circle.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    factors: Vec<(CircleObject, ModeSpectrum)>,
    truncation_degree: usize,
}

impl StateSpace {
    /// The scalar space of the empty circle.
    pub fn empty(truncation_degree: usize) -> Self {
        Self {
            factors: Vec::new(),
            truncation_degree,
        }
    }

    pub fn circles(&self) -> impl Iterator<Item = &CircleObject> {
        self.factors.iter().map(|(c, _)| c)
    }

    pub fn spectra(&self) -> impl Iterator<Item = &ModeSpectrum> {
        self.factors.iter().map(|(_, s)| s)
    }

    pub fn truncation_degree(&self) -> usize {
        self.truncation_degree
    }

    pub fn is_scalar(&self) -> bool {
        self.factors.is_empty()
    }

    /// All frequencies repeated by multiplicity, in factor order.
    pub fn frequencies(&self) -> Vec<f64> {
        self.factors
            .iter()
            .flat_map(|(_, s)| s.expanded_frequencies())
            .collect()
    }

    pub fn disjoint_union(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.truncation_degree != other.truncation_degree {
            return Err(Error::DimensionMismatch(
                "state spaces truncated at different degrees".into(),
            ));
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Ok(StateSpace {
            factors,
            truncation_degree: self.truncation_degree,
        })
    }
}

pub fn state_space(y: &CircleObject, cfg: &TheoryConfig) -> StateSpace {
    StateSpace {
        factors: vec![(y.clone(), mode_frequencies(y, cfg))],
        truncation_degree: cfg.truncation_degree(),
    }
}

/// Whether amplitudes carry the zeta-determinant prefactor or only the raw
/// exponential vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Zeta,
    Projective,
}

/// Cayley block of one mode; the first `dim_out` rows belong to the outgoing port.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBlock {
    pub mode: Mode,
    pub dim_out: usize,
    pub cayley: CayleyForm,
}

impl ModeBlock {
    pub fn dim_in(&self) -> usize {
        self.cayley.dim() - self.dim_out
    }

    fn alpha(&self) -> Result<BlockPosOp> {
        BlockPosOp::from_assembled(&cayley_inverse(&self.cayley)?, self.dim_out)
    }
}

/// One connected cylinder inside a (possibly disjoint) amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeFactor {
    pub label: String,
    pub circle: CircleObject,
    pub length: Option<f64>,
    pub blocks: Vec<ModeBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amplitude {
    factors: Vec<AmplitudeFactor>,
    log_prefactor: f64,
    error_estimate: f64,
    normalization: Normalization,
}

impl Amplitude {
    /// Raw amplitude `ℰ(C(α))` from arbitrary per-mode α blocks, with no prefactor.
    pub fn from_alpha_blocks(
        label: impl Into<String>,
        circle: CircleObject,
        blocks: Vec<(Mode, BlockPosOp)>,
    ) -> Result<Self> {
        let blocks = blocks
            .into_iter()
            .map(|(mode, op)| {
                Ok(ModeBlock {
                    mode,
                    dim_out: op.dim_out(),
                    cayley: cayley(&op.assembled())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            factors: vec![AmplitudeFactor {
                label: label.into(),
                circle,
                length: None,
                blocks,
            }],
            log_prefactor: 0.0,
            error_estimate: 0.0,
            normalization: Normalization::Projective,
        })
    }

    pub fn factors(&self) -> &[AmplitudeFactor] {
        &self.factors
    }

    pub fn log_prefactor(&self) -> f64 {
        self.log_prefactor
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn blocks(&self) -> impl Iterator<Item = &ModeBlock> {
        self.factors.iter().flat_map(|f| f.blocks.iter())
    }

    /// Swaps incoming and outgoing ports; each block is conjugated by the port swap.
    pub fn reversed(&self) -> Amplitude {
        let factors = self
            .factors
            .iter()
            .map(|f| AmplitudeFactor {
                blocks: f.blocks.iter().map(reverse_block).collect(),
                ..f.clone()
            })
            .collect();
        Amplitude {
            factors,
            ..self.clone()
        }
    }

    /// Disjoint union: factors concatenated, prefactors added.
    pub fn tensor(&self, other: &Amplitude) -> Result<Amplitude> {
        if self.normalization != other.normalization {
            return Err(Error::Port(
                "cannot combine zeta and projective amplitudes".into(),
            ));
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Ok(Amplitude {
            factors,
            log_prefactor: self.log_prefactor + other.log_prefactor,
            error_estimate: self.error_estimate + other.error_estimate,
            normalization: self.normalization,
        })
    }
}

fn reverse_block(b: &ModeBlock) -> ModeBlock {
    let n = b.cayley.dim();
    let (p, q) = (b.dim_out, n - b.dim_out);
    // new index i ← old index: in rows first, then out rows
    let old = |i: usize| if i < q { p + i } else { i - q };
    let m = b.cayley.matrix();
    let swapped = DMatrix::from_fn(n, n, |i, j| m[(old(i), old(j))]);
    let cayley = CayleyForm::new(SymMatrix::new(swapped).expect("permutation keeps symmetry"))
        .expect("permutation keeps the norm");
    ModeBlock {
        mode: b.mode,
        dim_out: q,
        cayley,
    }
}

/// Bound on `Σ mult·f(ω)` over the modes beyond `K_max` when
/// `|f(ω)| ≤ e^{−rate·ω}/(1 − e^{−rate·ω})`.
fn neglected_modes_bound(y: &CircleObject, k_max: usize, rate: f64) -> f64 {
    let step = TAU / y.circumference();
    let mut total = 0.0;
    for &twist in &y.twists() {
        let shift = (twist / TAU).min(1.0 - twist / TAU);
        let first = (k_max as f64 + 1.0 - shift) * step;
        let e = (-rate * first).exp();
        total += 2.0 * e / ((1.0 - e) * (1.0 - (-rate * step).exp()));
    }
    total
}

/// `E(Σ)` for a flat cylinder, with zeta-determinant prefactor.
pub fn amplitude(c: &CylinderMorphism, cfg: &TheoryConfig) -> Result<Amplitude> {
    amplitude_with(c, cfg, Normalization::Zeta, &SeriesControl::default())
}

pub fn amplitude_with(
    c: &CylinderMorphism,
    cfg: &TheoryConfig,
    normalization: Normalization,
    ctl: &SeriesControl,
) -> Result<Amplitude> {
    let ops = alpha_operator(c, cfg)?;
    let blocks = ops
        .par_iter()
        .map(|m| {
            Ok(ModeBlock {
                mode: m.mode,
                dim_out: 1,
                cayley: cayley(&m.op.assembled())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (log_prefactor, error_estimate) = match normalization {
        Normalization::Projective => (0.0, 0.0),
        Normalization::Zeta => {
            let family = ZetaFamily::new(c.boundary(), cfg.mass())?;
            let cyl = family.logdet_cylinder_dirichlet(c.length(), ctl)?;
            let two_dtn = family.logdet_2dtn_cylinder(ctl)?;
            let norms = blocks
                .iter()
                .map(|b| Ok(b.mode.multiplicity as f64 * log_fock_norm_sq(&b.cayley)?))
                .collect::<Result<CompensatedSum>>()?;
            let tail = 0.5 * neglected_modes_bound(c.boundary(), cfg.k_max(), 2.0 * c.length());
            (
                -0.5 * cyl.value - 0.25 * two_dtn.value - 0.5 * norms.value(),
                0.5 * cyl.error_estimate + 0.25 * two_dtn.error_estimate + tail,
            )
        }
    };
    Ok(Amplitude {
        factors: vec![AmplitudeFactor {
            label: c.label().to_string(),
            circle: c.boundary().clone(),
            length: Some(c.length()),
            blocks,
        }],
        log_prefactor,
        error_estimate,
        normalization,
    })
}

fn same_mode(a: &Mode, b: &Mode) -> bool {
    a.label == b.label
        && a.multiplicity == b.multiplicity
        && (a.omega - b.omega).abs() <= 1e-12 * a.omega
}

/// `E(Σ₂) ∘ E(Σ₁)`. Factor `i` of `a1` feeds factor `wiring[i]` of `a2`;
/// the result lists factors in `a1` order.
pub fn compose_amplitudes(a2: &Amplitude, a1: &Amplitude, wiring: &[usize]) -> Result<Amplitude> {
    if a1.normalization != a2.normalization {
        return Err(Error::Port(
            "cannot compose zeta and projective amplitudes".into(),
        ));
    }
    let n = a1.factors.len();
    if wiring.len() != n || a2.factors.len() != n {
        return Err(Error::Port(format!(
            "wiring has {} entries for {} and {} factors",
            wiring.len(),
            n,
            a2.factors.len()
        )));
    }
    let mut seen = vec![false; n];
    for &w in wiring {
        if w >= n || std::mem::replace(&mut seen[w], true) {
            return Err(Error::Port(
                "wiring is not a permutation of the factors".into(),
            ));
        }
    }

    let mut factors = Vec::with_capacity(n);
    let mut log_c = CompensatedSum::new();
    for (f1, &j) in a1.factors.iter().zip(wiring) {
        let f2 = &a2.factors[j];
        if !f1.circle.matches(&f2.circle) {
            return Err(Error::IncompatibleCircles(format!(
                "{} -> {}",
                f1.label, f2.label
            )));
        }
        if f1.blocks.len() != f2.blocks.len()
            || !f1
                .blocks
                .iter()
                .zip(&f2.blocks)
                .all(|(x, y)| same_mode(&x.mode, &y.mode))
        {
            return Err(Error::Port(format!(
                "mode sets of {} and {} differ",
                f1.label, f2.label
            )));
        }
        let per_mode = f1
            .blocks
            .par_iter()
            .zip(f2.blocks.par_iter())
            .map(|(b1, b2)| {
                if b1.dim_out != b2.dim_in() {
                    return Err(Error::Port(format!(
                        "port dimensions differ for mode k = {}",
                        b1.mode.label.k
                    )));
                }
                let (x1, x2) = (b1.alpha()?, b2.alpha()?);
                let composed = schur_compose(&x2, &x1)?;
                let c = cayley(&composed.assembled())?;
                let lc = log_cocycle_constant(&x2, &x1)?;
                Ok((
                    ModeBlock {
                        mode: b1.mode,
                        dim_out: composed.dim_out(),
                        cayley: c,
                    },
                    b1.mode.multiplicity as f64 * lc,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = Vec::with_capacity(per_mode.len());
        for (b, lc) in per_mode {
            log_c.add(lc);
            blocks.push(b);
        }
        factors.push(AmplitudeFactor {
            label: format!("{}+{}", f1.label, f2.label),
            circle: f1.circle.clone(),
            length: f1.length.zip(f2.length).map(|(x, y)| x + y),
            blocks,
        });
    }
    Ok(Amplitude {
        factors,
        log_prefactor: a1.log_prefactor + a2.log_prefactor + log_c.value(),
        error_estimate: a1.error_estimate + a2.error_estimate,
        normalization: a1.normalization,
    })
}

/// Log of a trace value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogTrace {
    pub value: f64,
    pub error_estimate: f64,
}

/// `ln tr E(Σ)`: per mode `tr ℰ(C) = det(I − C·S)^{−1/2}` with `S` the port swap.
pub fn trace_amplitude(a: &Amplitude) -> Result<LogTrace> {
    let mut acc = CompensatedSum::new();
    acc.add(a.log_prefactor);
    for f in &a.factors {
        for b in &f.blocks {
            if b.dim_out != b.dim_in() {
                return Err(Error::Port(format!(
                    "cannot trace {}: ports of dimension {} and {}",
                    f.label,
                    b.dim_out,
                    b.dim_in()
                )));
            }
            acc.add(b.mode.multiplicity as f64 * log_gaussian_trace(b)?);
        }
    }
    let tail: f64 = a
        .factors
        .iter()
        .filter_map(|f| {
            let k_max = f
                .blocks
                .iter()
                .map(|b| b.mode.label.k.unsigned_abs())
                .max()? as usize;
            f.length.map(|l| neglected_modes_bound(&f.circle, k_max, l))
        })
        .sum();
    Ok(LogTrace {
        value: acc.value(),
        error_estimate: a.error_estimate + tail,
    })
}

fn log_gaussian_trace(b: &ModeBlock) -> Result<f64> {
    let p = b.dim_out;
    let n = 2 * p;
    let c = b.cayley.matrix();
    // C·S with S swapping the two port blocks
    let cs = DMatrix::from_fn(n, n, |i, j| c[(i, if j < p { j + p } else { j - p })]);
    let m = DMatrix::identity(n, n) - cs;
    let det = m.determinant();
    if det.is_nan() || det <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: det,
        });
    }
    Ok(-0.5 * det.ln())
}

/// Direct per-mode `Σ mult·ln det α` and the determinant side
/// `ln det(2D) − 2·ln det(2(Δ_Y + m²)^{1/2})`, the denominator taken over both boundary circles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaDeterminantCheck {
    pub direct: f64,
    pub from_determinants: f64,
}

pub fn alpha_determinant_check(
    c: &CylinderMorphism,
    cfg: &TheoryConfig,
    ctl: &SeriesControl,
) -> Result<AlphaDeterminantCheck> {
    let direct = alpha_operator(c, cfg)?
        .iter()
        .map(|m| Ok(m.mode.multiplicity as f64 * logdet_pos(&m.op.assembled())?))
        .collect::<Result<CompensatedSum>>()?
        .value();
    let family = ZetaFamily::new(c.boundary(), cfg.mass())?;
    let two_dtn = family.logdet_2dtn_cylinder(ctl)?.value;
    // ln det 2(Δ+m²)^{1/2} = ½ ln det(Δ+m²) + ln 2·ζ(0) on one circle
    let one_circle =
        0.5 * family.logdet_circle().value + std::f64::consts::LN_2 * family.zeta_at_zero(ctl)?;
    Ok(AlphaDeterminantCheck {
        direct,
        from_determinants: two_dtn - 2.0 * one_circle,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyTolerances {
    pub block: f64,
    pub prefactor: f64,
    pub scalar: f64,
    pub torus_symmetry: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            block: 1e-10,
            prefactor: 1e-6,
            scalar: 1e-8,
            torus_symmetry: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub normalization: Normalization,
    pub tolerances: VerifyTolerances,
    pub series: SeriesControl,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            normalization: Normalization::Zeta,
            tolerances: VerifyTolerances::default(),
            series: SeriesControl::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeResidual {
    pub component: usize,
    pub k: i64,
    pub omega: f64,
    pub multiplicity: u32,
    pub block_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarCheck {
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
}

/// One side of a glued chain compared with the amplitude of the glued cylinder.
#[derive(Debug, Clone, Serialize)]
pub struct GluingCheck {
    pub chain: String,
    pub bracketing: String,
    pub max_block_residual: f64,
    pub prefactor_residual: f64,
    pub prefactor_error_estimate: f64,
    pub modes: Vec<ModeResidual>,
    pub scalars: Vec<ScalarCheck>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusCheck {
    pub label: String,
    pub circumference: f64,
    pub length: f64,
    pub log_trace: f64,
    pub expected: f64,
    pub residual: f64,
    pub symmetry_residual: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaCheck {
    pub cylinder: String,
    pub direct: f64,
    pub from_determinants: f64,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctorialityReport {
    pub normalization: Normalization,
    pub k_max: usize,
    pub gluings: Vec<GluingCheck>,
    pub tori: Vec<TorusCheck>,
    pub alpha_determinants: Vec<AlphaCheck>,
    pub passed: bool,
}

fn block_residual(a: &ModeBlock, b: &ModeBlock) -> f64 {
    (a.cayley.matrix() - b.cayley.matrix()).amax()
}

fn chain_cylinders<'a>(
    scene: &'a BordismScene,
    parts: &[String],
) -> Result<Vec<&'a CylinderMorphism>> {
    parts
        .iter()
        .map(|p| {
            scene
                .cylinder(p)
                .ok_or_else(|| Error::Scene(format!("unknown cylinder {p:?}")))
        })
        .collect()
}

/// Composes `amps` (ordered from the incoming end) left to right or right to left.
fn fold_chain(amps: &[Amplitude], from_left: bool) -> Result<Amplitude> {
    let id = [0usize];
    if from_left {
        let mut acc = amps[0].clone();
        for a in &amps[1..] {
            acc = compose_amplitudes(a, &acc, &id)?;
        }
        Ok(acc)
    } else {
        let mut acc = amps[amps.len() - 1].clone();
        for a in amps[..amps.len() - 1].iter().rev() {
            acc = compose_amplitudes(&acc, a, &id)?;
        }
        Ok(acc)
    }
}

/// Composition scalar of two raw amplitudes measured from truncated Fock
/// operators, mode by mode, against `Σ mult·ln c`.
pub fn projective_scalar_check(
    a2: &Amplitude,
    a1: &Amplitude,
    truncation_degree: usize,
) -> Result<ScalarCheck> {
    let wiring: Vec<usize> = (0..a1.factors.len()).collect();
    let composed = compose_amplitudes(a2, a1, &wiring)?;
    let mut measured = CompensatedSum::new();
    for ((b1, b2), b21) in a1.blocks().zip(a2.blocks()).zip(composed.blocks()) {
        let t1 = gaussian_operator(&b1.alpha()?, truncation_degree)?;
        let t2 = gaussian_operator(&b2.alpha()?, truncation_degree)?;
        let t21 = gaussian_operator(&b21.alpha()?, truncation_degree)?;
        let lhs = compose_hs(&t2, &t1)?;
        measured.add(b1.mode.multiplicity as f64 * (lhs.vacuum_entry() / t21.vacuum_entry()).ln());
    }
    let predicted = composed.log_prefactor - a1.log_prefactor - a2.log_prefactor;
    let measured = measured.value();
    Ok(ScalarCheck {
        measured,
        predicted,
        residual: (measured - predicted).abs(),
    })
}

fn check_chain(
    scene: &BordismScene,
    glued: &CylinderMorphism,
    opts: &VerifyOptions,
) -> Result<Vec<GluingCheck>> {
    let cfg = scene.theory();
    let parts = chain_cylinders(scene, glued.parts())?;
    let amps = parts
        .iter()
        .map(|c| amplitude_with(c, cfg, opts.normalization, &opts.series))
        .collect::<Result<Vec<_>>>()?;
    let target = amplitude_with(glued, cfg, opts.normalization, &opts.series)?;

    let mut scalars = Vec::new();
    if opts.normalization == Normalization::Projective {
        let mut acc = amps[0].clone();
        for a in &amps[1..] {
            scalars.push(projective_scalar_check(a, &acc, cfg.truncation_degree())?);
            acc = compose_amplitudes(a, &acc, &[0])?;
        }
    }

    let bracketings: &[bool] = if amps.len() > 2 {
        &[true, false]
    } else {
        &[true]
    };
    let mut out = Vec::new();
    for &from_left in bracketings {
        let composed = fold_chain(&amps, from_left)?;
        let modes: Vec<ModeResidual> = composed
            .blocks()
            .zip(target.blocks())
            .map(|(x, y)| ModeResidual {
                component: x.mode.label.component,
                k: x.mode.label.k,
                omega: x.mode.omega,
                multiplicity: x.mode.multiplicity,
                block_residual: block_residual(x, y),
            })
            .collect();
        let max_block_residual = modes.iter().map(|m| m.block_residual).fold(0.0, f64::max);
        // in projective mode the prefactor gap is the composition scalar, checked separately
        let prefactor_residual = match opts.normalization {
            Normalization::Zeta => (composed.log_prefactor - target.log_prefactor).abs(),
            Normalization::Projective => 0.0,
        };
        let scalars_ok = scalars.iter().all(|s| s.residual <= opts.tolerances.scalar);
        let passed = max_block_residual <= opts.tolerances.block
            && prefactor_residual <= opts.tolerances.prefactor
            && scalars_ok;
        out.push(GluingCheck {
            chain: glued.label().to_string(),
            bracketing: if from_left { "left" } else { "right" }.to_string(),
            max_block_residual,
            prefactor_residual,
            prefactor_error_estimate: composed.error_estimate + target.error_estimate,
            modes,
            scalars: scalars.clone(),
            passed,
        });
    }
    Ok(out)
}

fn check_torus(
    scene: &BordismScene,
    torus: &TorusComponent,
    opts: &VerifyOptions,
) -> Result<TorusCheck> {
    let cfg = scene.theory();
    let parts = chain_cylinders(scene, &torus.parts)?;
    let amps = parts
        .iter()
        .map(|c| amplitude_with(c, cfg, Normalization::Zeta, &opts.series))
        .collect::<Result<Vec<_>>>()?;
    let closed = fold_chain(&amps, true)?;
    let log_trace = trace_amplitude(&closed)?.value;
    let family = ZetaFamily::new(&torus.circle, cfg.mass())?;
    let expected = -0.5 * family.logdet_torus(torus.length, &opts.series)?.value;
    let residual = (log_trace - expected).abs();
    let symmetry_residual = if torus.circle.twists().iter().all(|&t| t == 0.0) {
        let rank = torus.circle.rank();
        let swapped =
            ZetaFamily::new(&CircleObject::trivial_rank(torus.length, rank)?, cfg.mass())?
                .logdet_torus(torus.circle.circumference(), &opts.series)?
                .value;
        Some((-0.5 * swapped - expected).abs())
    } else {
        None
    };
    let passed = residual <= opts.tolerances.prefactor
        && symmetry_residual.is_none_or(|r| r <= opts.tolerances.torus_symmetry);
    Ok(TorusCheck {
        label: torus.label.clone(),
        circumference: torus.circle.circumference(),
        length: torus.length,
        log_trace,
        expected,
        residual,
        symmetry_residual,
        passed,
    })
}

/// Both sides of every gluing in the scene, the torus traces, and the
/// determinant of α for every cylinder.
pub fn verify_functoriality(
    scene: &BordismScene,
    opts: &VerifyOptions,
) -> Result<FunctorialityReport> {
    let glued = glue(scene)?;
    let mut gluings = Vec::new();
    for c in glued.cylinders().iter().filter(|c| c.parts().len() > 1) {
        gluings.extend(check_chain(scene, c, opts)?);
    }
    let tori = match opts.normalization {
        Normalization::Zeta => glued
            .tori()
            .iter()
            .map(|t| check_torus(scene, t, opts))
            .collect::<Result<Vec<_>>>()?,
        Normalization::Projective => Vec::new(),
    };
    let alpha_determinants = scene
        .cylinders()
        .iter()
        .map(|c| {
            let chk = alpha_determinant_check(c, scene.theory(), &opts.series)?;
            let residual = (chk.direct - chk.from_determinants).abs();
            Ok(AlphaCheck {
                cylinder: c.label().to_string(),
                direct: chk.direct,
                from_determinants: chk.from_determinants,
                residual,
                passed: residual <= opts.tolerances.prefactor,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = gluings.iter().all(|g| g.passed)
        && tori.iter().all(|t| t.passed)
        && alpha_determinants.iter().all(|a| a.passed);
    Ok(FunctorialityReport {
        normalization: opts.normalization,
        k_max: scene.theory().k_max(),
        gluings,
        tori,
        alpha_determinants,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusTrace {
    pub label: String,
    pub circumference: f64,
    pub length: f64,
    pub log_trace: LogTrace,
}

/// Glues the scene and traces every closed component.
pub fn glue_and_trace(
    scene: &BordismScene,
    opts: &VerifyOptions,
) -> Result<(BordismScene, Vec<TorusTrace>)> {
    let glued = glue(scene)?;
    let tori = glued
        .tori()
        .iter()
        .map(|t| {
            let c = CylinderMorphism::new(t.label.clone(), t.circle.clone(), t.length)?;
            let a = amplitude_with(&c, scene.theory(), opts.normalization, &opts.series)?;
            Ok(TorusTrace {
                label: t.label.clone(),
                circumference: t.circle.circumference(),
                length: t.length,
                log_trace: trace_amplitude(&a)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((glued, tori))
}

/// `ln(1 − e^{−2ωL})` per mode, the log of the inverse Fock norm of a cylinder block.
pub fn cylinder_mode_log_norm(omega: f64, length: f64) -> f64 {
    -ln_one_minus_exp_neg(2.0 * omega * length)
}
