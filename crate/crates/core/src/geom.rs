//! Circles with flat-bundle holonomy, flat cylinders between them, their
//! mode spectra, exact per-mode Dirichlet-to-Neumann blocks and gluing.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::DEFAULT_TRUNCATION;
use crate::opalg::{BlockPosOp, SymMatrix};
use crate::special::coth_csch;

/// Relative tolerance when comparing circle data at a glued pair.
pub const CIRCLE_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConfig {
    mass: f64,
    k_max: usize,
    truncation_degree: usize,
}

impl TheoryConfig {
    pub fn new(mass: f64, k_max: usize, truncation_degree: usize) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if k_max == 0 {
            return Err(Error::InvalidParameter(
                "mode cutoff must be at least 1".into(),
            ));
        }
        if truncation_degree == 0 {
            return Err(Error::InvalidParameter(
                "truncation degree must be positive".into(),
            ));
        }
        Ok(Self {
            mass,
            k_max,
            truncation_degree,
        })
    }

    pub fn with_mass(mass: f64, k_max: usize) -> Result<Self> {
        Self::new(mass, k_max, DEFAULT_TRUNCATION)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn truncation_degree(&self) -> usize {
        self.truncation_degree
    }
}

/// Smallest cutoff `K` with `e^{−ω_K L} ≤ tol` for every mode beyond it on a
/// circle of circumference `ell`, for cylinders no shorter than `min_length`.
pub fn required_k_max(ell: f64, min_length: f64, tol: f64) -> usize {
    let k = ell * (1.0 / tol).ln() / (TAU * min_length);
    (k.ceil() as usize).max(1) + 1
}

/// Circle of circumference `ℓ` carrying a flat orthogonal bundle.
///
/// `holonomy_angles` lists the eigen-angles of the monodromy, one per real
/// dimension of the fiber, with a rotation block contributing `θ` and
/// `2π − θ`. An empty list is the trivial line bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleObject {
    circumference: f64,
    holonomy_angles: Vec<f64>,
}

impl CircleObject {
    pub fn new(circumference: f64, holonomy_angles: Vec<f64>) -> Result<Self> {
        if !(circumference > 0.0 && circumference.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "circumference must be positive, got {circumference}"
            )));
        }
        let mut angles = Vec::with_capacity(holonomy_angles.len());
        for a in holonomy_angles {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "holonomy angle {a} is not finite"
                )));
            }
            angles.push(normalize_angle(a));
        }
        Ok(Self {
            circumference,
            holonomy_angles: angles,
        })
    }

    pub fn trivial(circumference: f64) -> Result<Self> {
        Self::new(circumference, Vec::new())
    }

    /// Trivial bundle of rank `n`.
    pub fn trivial_rank(circumference: f64, n: usize) -> Result<Self> {
        Self::new(circumference, vec![0.0; n])
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn holonomy_angles(&self) -> &[f64] {
        &self.holonomy_angles
    }

    /// Twist angles of the scalar components, `[0]` for the trivial line bundle.
    pub fn twists(&self) -> Vec<f64> {
        if self.holonomy_angles.is_empty() {
            vec![0.0]
        } else {
            self.holonomy_angles.clone()
        }
    }

    pub fn rank(&self) -> usize {
        self.holonomy_angles.len().max(1)
    }

    pub fn matches(&self, other: &CircleObject) -> bool {
        let close =
            |a: f64, b: f64| (a - b).abs() <= CIRCLE_MATCH_TOL * a.abs().max(b.abs()).max(1.0);
        close(self.circumference, other.circumference)
            && self.twists().len() == other.twists().len()
            && self
                .twists()
                .iter()
                .zip(other.twists())
                .all(|(&a, b)| close(a, b))
    }
}

fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeLabel {
    /// Index of the twisted component (position in the holonomy list).
    pub component: usize,
    /// Fourier index; for untwisted components only `k ≥ 0` is listed.
    pub k: i64,
    pub twist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub label: ModeLabel,
    pub omega: f64,
    pub multiplicity: u32,
}

/// Modes of `(Δ + m²)^{1/2}` on a circle, sorted by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    modes: Vec<Mode>,
}

impl ModeSpectrum {
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of real modes counted with multiplicity.
    pub fn total_multiplicity(&self) -> u64 {
        self.modes.iter().map(|m| m.multiplicity as u64).sum()
    }

    pub fn max_omega(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.omega)
    }

    /// Frequencies repeated by multiplicity, ascending.
    pub fn expanded_frequencies(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .modes
            .iter()
            .flat_map(|m| std::iter::repeat_n(m.omega, m.multiplicity as usize))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Frequency `√((2π(k + θ/2π)/ℓ)² + m²)`.
pub fn mode_frequency(ell: f64, mass: f64, k: i64, twist: f64) -> f64 {
    let xi = TAU * (k as f64 + twist / TAU) / ell;
    xi.hypot(mass)
}

/// Untwisted components list `k = 0..=K` with multiplicity 2 for `k ≥ 1`
/// (cosine and sine); twisted components list `k = −K..=K` once each.
pub fn mode_frequencies(y: &CircleObject, cfg: &TheoryConfig) -> ModeSpectrum {
    let ell = y.circumference();
    let kk = cfg.k_max() as i64;
    let mut modes = Vec::new();
    for (component, &twist) in y.twists().iter().enumerate() {
        if twist == 0.0 {
            for k in 0..=kk {
                modes.push(Mode {
                    label: ModeLabel {
                        component,
                        k,
                        twist,
                    },
                    omega: mode_frequency(ell, cfg.mass(), k, 0.0),
                    multiplicity: if k == 0 { 1 } else { 2 },
                });
            }
        } else {
            for k in -kk..=kk {
                modes.push(Mode {
                    label: ModeLabel {
                        component,
                        k,
                        twist,
                    },
                    omega: mode_frequency(ell, cfg.mass(), k, twist),
                    multiplicity: 1,
                });
            }
        }
    }
    modes.sort_by(|a, b| {
        a.omega
            .total_cmp(&b.omega)
            .then(a.label.component.cmp(&b.label.component))
            .then(a.label.k.cmp(&b.label.k))
    });
    ModeSpectrum { modes }
}

/// Flat cylinder `[0, L] × Y`; `parts` records the constituent cylinders
/// of a glued chain in order from the incoming end.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMorphism {
    label: String,
    boundary: CircleObject,
    length: f64,
    parts: Vec<String>,
}

impl CylinderMorphism {
    pub fn new(label: impl Into<String>, boundary: CircleObject, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cylinder length must be positive, got {length}"
            )));
        }
        let label = label.into();
        if label.is_empty() || label.contains('.') {
            return Err(Error::InvalidParameter(format!(
                "invalid cylinder label {label:?}"
            )));
        }
        Ok(Self {
            parts: vec![label.clone()],
            label,
            boundary,
            length,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn boundary(&self) -> &CircleObject {
        &self.boundary
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn parts(&self) -> &[String] {
        &self.parts
    }

    pub fn in_port(&self) -> PortRef {
        PortRef {
            cylinder: self.label.clone(),
            end: PortEnd::In,
        }
    }

    pub fn out_port(&self) -> PortRef {
        PortRef {
            cylinder: self.label.clone(),
            end: PortEnd::Out,
        }
    }
}

/// Per-mode `2×2` block on (outgoing value, incoming value).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    pub mode: Mode,
    pub op: BlockPosOp,
}

fn mode_block(scale: f64, x: f64) -> Result<BlockPosOp> {
    let (coth, csch) = coth_csch(x);
    BlockPosOp::new(
        SymMatrix::from_diagonal(&[scale * coth]),
        DMatrix::from_element(1, 1, -scale * csch),
        SymMatrix::from_diagonal(&[scale * coth]),
    )
}

/// `ω [[coth ωL, −csch ωL], [−csch ωL, coth ωL]]` per mode, outward normals at both ends.
pub fn dtn_cylinder(c: &CylinderMorphism, cfg: &TheoryConfig) -> Result<Vec<ModeOperator>> {
    mode_frequencies(c.boundary(), cfg)
        .modes()
        .iter()
        .map(|&mode| {
            Ok(ModeOperator {
                mode,
                op: mode_block(mode.omega, mode.omega * c.length())?,
            })
        })
        .collect()
}

/// DtN blocks divided by `ω`.
pub fn alpha_operator(c: &CylinderMorphism, cfg: &TheoryConfig) -> Result<Vec<ModeOperator>> {
    mode_frequencies(c.boundary(), cfg)
        .modes()
        .iter()
        .map(|&mode| {
            Ok(ModeOperator {
                mode,
                op: mode_block(1.0, mode.omega * c.length())?,
            })
        })
        .collect()
}

/// `‖α − I‖ = coth(x/2) − 1 = 2e^{−x}/(1 − e^{−x})` for `x = ωL`.
pub fn alpha_deficit(x: f64) -> f64 {
    2.0 * (-x).exp() / -(-x).exp_m1()
}

/// Bound on `Σ mult·‖α_k − I‖` over the modes beyond the cutoff, from the
/// geometric envelope of the frequencies `ω_k ≥ 2π|k + θ/2π|/ℓ`.
pub fn alpha_tail_bound(y: &CircleObject, cfg: &TheoryConfig, length: f64) -> f64 {
    let ell = y.circumference();
    let step = TAU * length / ell;
    let mut total = 0.0;
    for &twist in &y.twists() {
        // both signs of k beyond the cutoff, nearest first
        let shift = (twist / TAU).min(1.0 - twist / TAU);
        let first = (cfg.k_max() as f64 + 1.0 - shift) * step;
        let r = (-step).exp();
        total += 2.0 * alpha_deficit(first) / (1.0 - r);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortEnd {
    In,
    Out,
}

/// `"<cylinder>.in"` or `"<cylinder>.out"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub cylinder: String,
    pub end: PortEnd,
}

impl FromStr for PortRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (cyl, end) = s
            .rsplit_once('.')
            .ok_or_else(|| Error::Port(format!("{s:?} is not of the form <cylinder>.in|out")))?;
        let end = match end {
            "in" => PortEnd::In,
            "out" => PortEnd::Out,
            other => return Err(Error::Port(format!("unknown port end {other:?} in {s:?}"))),
        };
        if cyl.is_empty() {
            return Err(Error::Port(format!("empty cylinder name in {s:?}")));
        }
        Ok(Self {
            cylinder: cyl.to_string(),
            end,
        })
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let end = match self.end {
            PortEnd::In => "in",
            PortEnd::Out => "out",
        };
        write!(f, "{}.{}", self.cylinder, end)
    }
}

/// Glues the outgoing end of `from` to the incoming end of `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wire {
    pub from: PortRef,
    pub to: PortRef,
}

/// Closed torus `Y × S¹_L` from a fully traced chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusComponent {
    pub label: String,
    pub circle: CircleObject,
    pub length: f64,
    pub parts: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BordismScene {
    theory: TheoryConfig,
    circles: BTreeMap<String, CircleObject>,
    cylinders: Vec<CylinderMorphism>,
    wiring: Vec<Wire>,
    tori: Vec<TorusComponent>,
}

impl BordismScene {
    pub fn new(
        theory: TheoryConfig,
        circles: BTreeMap<String, CircleObject>,
        cylinders: Vec<CylinderMorphism>,
        wiring: Vec<Wire>,
    ) -> Result<Self> {
        let scene = Self {
            theory,
            circles,
            cylinders,
            wiring,
            tori: Vec::new(),
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn theory(&self) -> &TheoryConfig {
        &self.theory
    }

    pub fn circles(&self) -> &BTreeMap<String, CircleObject> {
        &self.circles
    }

    pub fn cylinders(&self) -> &[CylinderMorphism] {
        &self.cylinders
    }

    pub fn wiring(&self) -> &[Wire] {
        &self.wiring
    }

    pub fn tori(&self) -> &[TorusComponent] {
        &self.tori
    }

    pub fn cylinder(&self, label: &str) -> Option<&CylinderMorphism> {
        self.cylinders.iter().find(|c| c.label == label)
    }

    /// Ports not consumed by the wiring, in cylinder order.
    pub fn free_ports(&self) -> Vec<PortRef> {
        let used: BTreeSet<&PortRef> = self.wiring.iter().flat_map(|w| [&w.from, &w.to]).collect();
        self.cylinders
            .iter()
            .flat_map(|c| [c.in_port(), c.out_port()])
            .filter(|p| !used.contains(p))
            .collect()
    }

    /// Shortest cylinder or torus length.
    pub fn min_length(&self) -> Option<f64> {
        self.cylinders
            .iter()
            .map(|c| c.length)
            .chain(self.tori.iter().map(|t| t.length))
            .reduce(f64::min)
    }

    fn validate(&self) -> Result<()> {
        let mut labels = BTreeSet::new();
        for c in &self.cylinders {
            if !labels.insert(c.label.as_str()) {
                return Err(Error::Scene(format!(
                    "duplicate cylinder label {:?}",
                    c.label
                )));
            }
        }
        let mut used = BTreeSet::new();
        for w in &self.wiring {
            if w.from.end != PortEnd::Out || w.to.end != PortEnd::In {
                return Err(Error::Port(format!(
                    "wire {} -> {} must join an out port to an in port",
                    w.from, w.to
                )));
            }
            for p in [&w.from, &w.to] {
                if !labels.contains(p.cylinder.as_str()) {
                    return Err(Error::Port(format!(
                        "port {p} refers to an unknown cylinder"
                    )));
                }
                if !used.insert(p.clone()) {
                    return Err(Error::Port(format!("port {p} is wired more than once")));
                }
            }
            let a = self.cylinder(&w.from.cylinder).expect("checked");
            let b = self.cylinder(&w.to.cylinder).expect("checked");
            if !a.boundary.matches(&b.boundary) {
                return Err(Error::IncompatibleCircles(format!(
                    "{} has circle (ℓ = {}, angles {:?}) but {} has (ℓ = {}, angles {:?})",
                    w.from,
                    a.boundary.circumference,
                    a.boundary.holonomy_angles,
                    w.to,
                    b.boundary.circumference,
                    b.boundary.holonomy_angles
                )));
            }
        }
        Ok(())
    }
}

/// Merges wired chains into single cylinders of summed length and closes
/// fully traced chains into tori. Chains are named by joining their parts
/// with `+`, from the incoming end.
pub fn glue(scene: &BordismScene) -> Result<BordismScene> {
    scene.validate()?;
    let next: BTreeMap<&str, &str> = scene
        .wiring
        .iter()
        .map(|w| (w.from.cylinder.as_str(), w.to.cylinder.as_str()))
        .collect();
    let prev: BTreeMap<&str, &str> = scene
        .wiring
        .iter()
        .map(|w| (w.to.cylinder.as_str(), w.from.cylinder.as_str()))
        .collect();

    let mut visited: BTreeSet<&str> = BTreeSet::new();
    let mut cylinders = Vec::new();
    let mut tori = scene.tori.clone();

    // open chains start at cylinders with a free incoming end
    for c in &scene.cylinders {
        if prev.contains_key(c.label.as_str()) {
            continue;
        }
        let mut chain = vec![c];
        visited.insert(&c.label);
        let mut cur = c.label.as_str();
        while let Some(&n) = next.get(cur) {
            let cyl = scene.cylinder(n).expect("validated");
            visited.insert(n);
            chain.push(cyl);
            cur = n;
        }
        cylinders.push(merge_chain(&chain));
    }

    // what remains lies on cycles
    for c in &scene.cylinders {
        if visited.contains(c.label.as_str()) {
            continue;
        }
        let mut chain = vec![c];
        visited.insert(&c.label);
        let mut cur = c.label.as_str();
        loop {
            let n = next[cur];
            if n == c.label {
                break;
            }
            visited.insert(n);
            chain.push(scene.cylinder(n).expect("validated"));
            cur = n;
        }
        let merged = merge_chain(&chain);
        tori.push(TorusComponent {
            label: merged.label,
            circle: merged.boundary,
            length: merged.length,
            parts: merged.parts,
        });
    }

    Ok(BordismScene {
        theory: scene.theory,
        circles: scene.circles.clone(),
        cylinders,
        wiring: Vec::new(),
        tori,
    })
}

fn merge_chain(chain: &[&CylinderMorphism]) -> CylinderMorphism {
    let parts: Vec<String> = chain.iter().flat_map(|c| c.parts.iter().cloned()).collect();
    // lengths summed in chain order
    let length = chain.iter().map(|c| c.length).sum();
    CylinderMorphism {
        label: parts.join("+"),
        boundary: chain[0].boundary.clone(),
        length,
        parts,
    }
}
