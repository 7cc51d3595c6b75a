//! Degree of measurement-independence relaxation, measured as the mutual
//! information between the hidden direction `λ` and whatever it is
//! conditioned on, with `λ` discretized on a [`SphereGrid`].
//!
//! Every number here is grid-relative: entropies grow with the number of
//! cells, and only differences, trends and inequalities carry meaning.
//! Logarithms are base 2 throughout.
//!
//! Two conventions are available for the three-hidden-variable models:
//!
//! * [`Convention::Weighted`]: the standard conditional entropy, weighting each
//!   conditioning value by its probability. Because `(λ₁, λ₂)` is pinned to
//!   the settings, this gives exactly the one-hidden-variable value.
//! * [`Convention::PaperUnweighted`]: conditioning pairs of `Ω` that lie
//!   outside the setting set `U` each add their full conditional entropy,
//!   unweighted, to `I(λ : λ₁, λ₂) − I(λ : x, y)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::ChshSettings;
use crate::models::{lambda_density, ModelId};
use crate::sphere::grid::SphereGrid;
use crate::sphere::{angle_between, UnitVector3};

/// Setting pairs closer than this to parallel or antiparallel are degenerate.
pub const DEGENERATE_ANGLE: f64 = 1e-9;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingPair {
    pub x: UnitVector3,
    pub y: UnitVector3,
    pub weight: f64,
}

/// Finite prior `P(x, y)` over setting pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsPrior {
    entries: Vec<SettingPair>,
}

impl SettingsPrior {
    /// Weights must be positive and already sum to 1.
    pub fn new(entries: Vec<SettingPair>) -> Result<Self> {
        Self::validate_weights(&entries)?;
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPrior(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { entries })
    }

    /// Positive weights, rescaled to sum to 1.
    pub fn normalized(mut entries: Vec<SettingPair>) -> Result<Self> {
        Self::validate_weights(&entries)?;
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        for e in &mut entries {
            e.weight /= total;
        }
        Ok(Self { entries })
    }

    pub fn uniform(pairs: &[(UnitVector3, UnitVector3)]) -> Result<Self> {
        Self::normalized(
            pairs
                .iter()
                .map(|&(x, y)| SettingPair { x, y, weight: 1.0 })
                .collect(),
        )
    }

    /// Uniform over the four pairs of the standard CHSH settings.
    pub fn chsh_default() -> Self {
        let pairs: Vec<_> = ChshSettings::standard()
            .terms()
            .iter()
            .map(|&(_, x, y, _)| (x, y))
            .collect();
        Self::uniform(&pairs).expect("four positive weights")
    }

    /// Parses lines of `x_angle_deg y_angle_deg weight` (planar settings).
    /// Blank lines and `#` comments are skipped; weights are normalized.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |detail: &str| Error::Parse {
                what: "prior file",
                detail: format!("line {}: {detail}", lineno + 1),
            };
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| bad(&format!("`{t}` is not a number")))
                })
                .collect::<Result<_>>()?;
            let [x_deg, y_deg, weight] = fields[..] else {
                return Err(bad("expected `x_angle_deg y_angle_deg weight`"));
            };
            if !(x_deg.is_finite() && y_deg.is_finite()) {
                return Err(bad("angles must be finite"));
            }
            entries.push(SettingPair {
                x: UnitVector3::in_plane_degrees(x_deg),
                y: UnitVector3::in_plane_degrees(y_deg),
                weight,
            });
        }
        Self::normalized(entries)
    }

    fn validate_weights(entries: &[SettingPair]) -> Result<()> {
        if entries.is_empty() {
            return Err(Error::InvalidPrior("no setting pairs".into()));
        }
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.weight > 0.0 && e.weight.is_finite()))
        {
            return Err(Error::InvalidPrior(format!(
                "weight {} is not positive",
                e.weight
            )));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[SettingPair] {
        &self.entries
    }

    /// Distinct setting directions (the set `U`), in first-seen order.
    pub fn directions(&self) -> Vec<UnitVector3> {
        let mut out: Vec<UnitVector3> = Vec::new();
        for e in &self.entries {
            for d in [e.x, e.y] {
                if !out.contains(&d) {
                    out.push(d);
                }
            }
        }
        out
    }
}

/// Probabilities indexed by grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidPrior(
                "negative or non-finite probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPrior(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `−Σ p log₂ p`, with `0 log 0 = 0`.
pub fn shannon_entropy(d: &DiscreteDistribution) -> f64 {
    entropy_bits(&d.probs)
}

fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

fn check_nondegenerate(d1: UnitVector3, d2: UnitVector3) -> Result<()> {
    let phi = angle_between(d1, d2).radians();
    if !(DEGENERATE_ANGLE..=PI - DEGENERATE_ANGLE).contains(&phi) {
        return Err(Error::DegenerateSettings { phi });
    }
    Ok(())
}

/// Unnormalized cell masses `ρ(center) · area`.
pub fn raw_cell_masses(
    model: ModelId,
    grid: &SphereGrid,
    d1: UnitVector3,
    d2: UnitVector3,
) -> Result<Vec<f64>> {
    check_nondegenerate(d1, d2)?;
    Ok(grid
        .cells()
        .iter()
        .map(|c| {
            lambda_density(model, c.center, d1, d2)
                .expect("density is defined away from degenerate settings")
                * c.area
        })
        .collect())
}

/// `P(λ-cell | d1, d2)`: density at each cell center times its area,
/// renormalized to sum to 1.
pub fn discretize_conditional(
    model: ModelId,
    grid: &SphereGrid,
    d1: UnitVector3,
    d2: UnitVector3,
) -> Result<DiscreteDistribution> {
    let mut masses = raw_cell_masses(model, grid, d1, d2)?;
    let total: f64 = masses.iter().sum();
    for m in &mut masses {
        *m /= total;
    }
    Ok(DiscreteDistribution { probs: masses })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    #[serde(rename = "weighted")]
    Weighted,
    #[serde(rename = "paper-unweighted")]
    PaperUnweighted,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Weighted => "weighted",
            Convention::PaperUnweighted => "paper-unweighted",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "weighted" => Ok(Convention::Weighted),
            "paper" | "paper-unweighted" => Ok(Convention::PaperUnweighted),
            other => Err(Error::Parse {
                what: "convention",
                detail: format!("`{other}` is not one of weighted, paper"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub model: ModelId,
    /// `H(λ)` in bits.
    pub h_lambda: f64,
    /// `H(λ | conditioning variables)` in bits.
    pub h_lambda_given: f64,
    /// `I = H(λ) − H(λ | ·)` in bits.
    pub mutual_info: f64,
    pub grid_resolution: u32,
    pub convention: Convention,
    /// Number of λ cells, `|Ω|`.
    pub omega_cells: usize,
    /// Number of distinct setting directions, `|U|`.
    pub u_points: usize,
    /// Conditioning pairs of `Ω` outside `U` that contributed.
    pub extra_pairs: usize,
}

/// Weighted mutual information `I(λ : settings)` under `prior`.
pub fn mutual_information(
    prior: &SettingsPrior,
    model: ModelId,
    grid: &SphereGrid,
) -> Result<RelaxationReport> {
    let mut marginal = vec![0.0; grid.len()];
    let mut h_given = 0.0;
    for e in prior.entries() {
        let cond = discretize_conditional(model, grid, e.x, e.y)?;
        for (m, p) in marginal.iter_mut().zip(cond.probs()) {
            *m += e.weight * p;
        }
        h_given += e.weight * shannon_entropy(&cond);
    }
    let h_lambda = entropy_bits(&marginal);
    Ok(RelaxationReport {
        model,
        h_lambda,
        h_lambda_given: h_given,
        mutual_info: h_lambda - h_given,
        grid_resolution: grid.resolution(),
        convention: Convention::Weighted,
        omega_cells: grid.len(),
        u_points: prior.directions().len(),
        extra_pairs: 0,
    })
}

/// Conditioning pairs `(λ₁, λ₂)` of `Ω` that lie outside the setting set `U`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OmegaPairs {
    extra: Vec<(UnitVector3, UnitVector3)>,
}

impl OmegaPairs {
    /// `Ω`-pairs coincide with `U`: no extra pairs.
    pub fn equal_to_u() -> Self {
        Self::default()
    }

    pub fn from_pairs(extra: Vec<(UnitVector3, UnitVector3)>) -> Self {
        Self { extra }
    }

    /// `count` distinct pairs of cell centers, drawn with a seeded generator
    /// from the cells that contain no setting direction. Parallel and
    /// antiparallel pairs are skipped.
    pub fn generate(grid: &SphereGrid, u: &SettingsPrior, count: usize, seed: u64) -> Result<Self> {
        let u_cells = embed_settings(grid, u)?;
        let free: Vec<usize> = (0..grid.len()).filter(|i| !u_cells.contains(i)).collect();
        if count > 0 && free.len() < 2 {
            return Err(Error::NotEmbeddable(format!(
                "grid has {} cells outside U, need at least 2",
                free.len()
            )));
        }
        let max_pairs = free.len() * (free.len() - 1);
        if count > max_pairs / 2 {
            return Err(Error::NotEmbeddable(format!(
                "{count} extra pairs requested but only {} cells lie outside U",
                free.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(count);
        while chosen.len() < count {
            let i = free[rng.random_range(0..free.len())];
            let j = free[rng.random_range(0..free.len())];
            if i == j || chosen.contains(&(i, j)) {
                continue;
            }
            let (a, b) = (grid.cells()[i].center, grid.cells()[j].center);
            if check_nondegenerate(a, b).is_err() {
                continue;
            }
            chosen.push((i, j));
        }
        Ok(Self {
            extra: chosen
                .into_iter()
                .map(|(i, j)| (grid.cells()[i].center, grid.cells()[j].center))
                .collect(),
        })
    }

    pub fn extra(&self) -> &[(UnitVector3, UnitVector3)] {
        &self.extra
    }

    pub fn len(&self) -> usize {
        self.extra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extra.is_empty()
    }
}

/// Cells holding the setting directions; distinct directions must land in
/// distinct cells.
fn embed_settings(grid: &SphereGrid, u: &SettingsPrior) -> Result<Vec<usize>> {
    let dirs = u.directions();
    let cells: Vec<usize> = dirs.iter().map(|&d| grid.cell_of(d)).collect();
    for (i, ci) in cells.iter().enumerate() {
        if let Some(j) = cells[..i].iter().position(|cj| cj == ci) {
            return Err(Error::NotEmbeddable(format!(
                "directions {} and {} share cell {ci} at resolution {}",
                dirs[j],
                dirs[i],
                grid.resolution()
            )));
        }
    }
    Ok(cells)
}

/// `I(λ : λ₁, λ₂) − I(λ : x, y)` under the unweighted convention: the sum of
/// conditional entropies over the extra `Ω`-pairs. Zero when `Ω = U`.
pub fn paper_entropy_difference(
    model: ModelId,
    grid_omega: &SphereGrid,
    u_settings: &SettingsPrior,
    omega: &OmegaPairs,
) -> Result<f64> {
    let u_cells = embed_settings(grid_omega, u_settings)?;
    let mut total = 0.0;
    for &(l1, l2) in omega.extra() {
        for d in [l1, l2] {
            if u_cells.contains(&grid_omega.cell_of(d)) {
                return Err(Error::NotEmbeddable(format!(
                    "extra direction {d} lies in a cell of U"
                )));
            }
        }
        total += shannon_entropy(&discretize_conditional(model, grid_omega, l1, l2)?);
    }
    Ok(total)
}

/// Report for a three-hidden-variable model under `convention`.
pub fn three_hidden_report(
    model: ModelId,
    prior: &SettingsPrior,
    grid: &SphereGrid,
    omega: &OmegaPairs,
    convention: Convention,
) -> Result<RelaxationReport> {
    if !model.has_intermediate() {
        return Err(Error::NotThreeHidden(model.to_string()));
    }
    let mut report = mutual_information(prior, model, grid)?;
    if convention == Convention::PaperUnweighted {
        let difference = paper_entropy_difference(model, grid, prior, omega)?;
        report.mutual_info += difference;
        report.h_lambda_given -= difference;
        report.convention = Convention::PaperUnweighted;
        report.extra_pairs = omega.len();
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    /// `I(λ : λ₁, λ₂) ≥ I(λ : x, y) − 1e−9`.
    pub holds: bool,
    /// `I(λ : λ₁, λ₂) − I(λ : x, y)` in bits.
    pub margin: f64,
    pub report: RelaxationReport,
}

/// Checks that the three-hidden-variable model needs at least as much
/// relaxation as the one-hidden-variable model, under the unweighted
/// convention.
pub fn verify_inequality(
    model2or3: ModelId,
    model1_report: &RelaxationReport,
    grid_omega: &SphereGrid,
    u: &SettingsPrior,
    omega: &OmegaPairs,
) -> Result<InequalityVerdict> {
    if !model2or3.has_intermediate() {
        return Err(Error::NotThreeHidden(model2or3.to_string()));
    }
    if model1_report.grid_resolution != grid_omega.resolution() {
        return Err(Error::IncompatibleGrids(
            model1_report.grid_resolution,
            grid_omega.resolution(),
        ));
    }
    let report = three_hidden_report(model2or3, u, grid_omega, omega, Convention::PaperUnweighted)?;
    let margin = report.mutual_info - model1_report.mutual_info;
    Ok(InequalityVerdict {
        holds: margin >= -1e-9,
        margin,
        report,
    })
}
