//! Hidden-variable models that reproduce (or, for the baseline, fail to
//! reproduce) singlet statistics.
//!
//! All three measurement-dependent models share one conditional density for
//! the hidden direction `λ` given two reference directions `d1, d2`:
//!
//! ```text
//! ρ(λ | d1, d2) = (1/4π) · [1 + (d1·d2) s] / [1 + (1 − 2φ/π) s]
//! s = sign((λ·d1)(λ·d2)),  φ = ∠(d1, d2)
//! ```
//!
//! The density is constant on the two regions `s = ±1`. The `s = +1` region
//! covers a solid-angle fraction `1 − φ/π` and carries total mass
//! `(1 + cos φ)/2`, which is what makes `E(a b) = −cos φ`.
//!
//! * [`ModelId::M1`] conditions `λ` directly on the settings `(x, y)`.
//! * [`ModelId::M2`] and [`ModelId::M3`] condition `λ` on intermediate hidden
//!   directions `(λ₁, λ₂)`, which are tied to the settings by `λ₁ = x`,
//!   `λ₂ = y`. M2's outcomes read the settings, M3's read `λ₁, λ₂`.
//! * [`ModelId::Baseline`] draws `λ` uniformly, independent of the settings.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::JointTable2x2;
use crate::sphere::{angle_between, dot, sample_uniform_sphere, sign_pm, Angle, UnitVector3};

const UNIFORM_DENSITY: f64 = 1.0 / (4.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Baseline,
    M1,
    M2,
    M3,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::Baseline, ModelId::M1, ModelId::M2, ModelId::M3];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Baseline => "baseline",
            ModelId::M1 => "m1",
            ModelId::M2 => "m2",
            ModelId::M3 => "m3",
        }
    }

    /// Models carrying the intermediate hidden directions `λ₁, λ₂`.
    pub fn has_intermediate(self) -> bool {
        matches!(self, ModelId::M2 | ModelId::M3)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelId> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse {
                what: "model",
                detail: format!("`{s}` is not one of baseline, m1, m2, m3"),
            })
    }
}

/// One sampled hidden configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenState {
    pub lambda: UnitVector3,
    pub lambda1: Option<UnitVector3>,
    pub lambda2: Option<UnitVector3>,
}

/// A measurement outcome, `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(s: i8) -> Outcome {
        if s >= 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    /// Table index: 0 for `+1`, 1 for `−1`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomePair {
    pub a: Outcome,
    pub b: Outcome,
}

/// Region label `sign((λ·d1)(λ·d2))`.
#[inline]
pub fn region(lambda: UnitVector3, d1: UnitVector3, d2: UnitVector3) -> i8 {
    sign_pm(dot(lambda, d1) * dot(lambda, d2))
}

/// Conditional density of `λ` in 1/steradian.
///
/// `None` marks the zero-measure branch with a vanishing denominator: the
/// `s = −1` region at `φ = 0` and the `s = +1` region at `φ = π`.
pub fn lambda_density(
    model: ModelId,
    lambda: UnitVector3,
    d1: UnitVector3,
    d2: UnitVector3,
) -> Option<f64> {
    if model == ModelId::Baseline {
        return Some(UNIFORM_DENSITY);
    }
    let s = f64::from(region(lambda, d1, d2));
    let phi = angle_between(d1, d2).radians();
    let denominator = 1.0 + (1.0 - 2.0 * phi / PI) * s;
    if denominator <= 0.0 {
        return None;
    }
    let numerator = 1.0 + dot(d1, d2).clamp(-1.0, 1.0) * s;
    Some(UNIFORM_DENSITY * numerator / denominator)
}

/// Probability mass of the `s = +1` region: `(1 + cos φ)/2`.
pub fn region_weight_plus(phi: Angle) -> f64 {
    0.5 * (1.0 + phi.radians().cos())
}

/// Draws `λ` uniformly from the region with label `s`.
fn sample_in_region<R: Rng + ?Sized>(
    s: i8,
    d1: UnitVector3,
    d2: UnitVector3,
    rng: &mut R,
) -> UnitVector3 {
    loop {
        let lambda = sample_uniform_sphere(rng);
        if region(lambda, d1, d2) == s {
            return lambda;
        }
    }
}

/// Samples the hidden state for settings `(x, y)`.
///
/// Measurement-dependent models pick the `s = +1` region with probability
/// `(1 + x·y)/2` (equal to [`region_weight_plus`] of the setting angle) and
/// then draw `λ` uniformly inside it. A region of zero weight is never picked,
/// so the sampler terminates at `φ ∈ {0, π}` too.
pub fn sample_hidden<R: Rng + ?Sized>(
    model: ModelId,
    x: UnitVector3,
    y: UnitVector3,
    rng: &mut R,
) -> HiddenState {
    let lambda = match model {
        ModelId::Baseline => sample_uniform_sphere(rng),
        ModelId::M1 | ModelId::M2 | ModelId::M3 => {
            let w_plus = 0.5 * (1.0 + dot(x, y).clamp(-1.0, 1.0));
            let s = if rng.random::<f64>() < w_plus { 1 } else { -1 };
            sample_in_region(s, x, y, rng)
        }
    };
    let (lambda1, lambda2) = if model.has_intermediate() {
        (Some(x), Some(y))
    } else {
        (None, None)
    };
    HiddenState {
        lambda,
        lambda1,
        lambda2,
    }
}

/// Alice's outcome `sign(λ·d)`.
#[inline]
pub fn response_a(lambda: UnitVector3, d: UnitVector3) -> Outcome {
    Outcome::from_sign(sign_pm(dot(lambda, d)))
}

/// Bob's outcome `−sign(λ·d)`.
#[inline]
pub fn response_b(lambda: UnitVector3, d: UnitVector3) -> Outcome {
    Outcome::from_sign(-sign_pm(dot(lambda, d)))
}

/// Samples a hidden state and evaluates both deterministic responses.
pub fn run_trial<R: Rng + ?Sized>(
    model: ModelId,
    x: UnitVector3,
    y: UnitVector3,
    rng: &mut R,
) -> OutcomePair {
    let h = sample_hidden(model, x, y, rng);
    let (da, db) = match (model, h.lambda1, h.lambda2) {
        (ModelId::M3, Some(l1), Some(l2)) => {
            assert!(l1 == x && l2 == y, "delta coupling violated");
            (l1, l2)
        }
        _ => (x, y),
    };
    OutcomePair {
        a: response_a(h.lambda, da),
        b: response_b(h.lambda, db),
    }
}

/// Singlet prediction `P(a, b | x, y) = (1 − a b x·y)/4`.
pub fn singlet_table(x: UnitVector3, y: UnitVector3) -> JointTable2x2 {
    let c = dot(x, y).clamp(-1.0, 1.0);
    let same = 0.25 * (1.0 - c);
    let opposite = 0.25 * (1.0 + c);
    JointTable2x2::from_probs([[same, opposite], [opposite, same]])
}

/// Closed-form `E(a b)`: `−cos φ` for the measurement-dependent models,
/// `−1 + 2φ/π` for the baseline.
pub fn analytic_correlation(model: ModelId, phi: Angle) -> f64 {
    match model {
        ModelId::Baseline => -1.0 + 2.0 * phi.radians() / PI,
        ModelId::M1 | ModelId::M2 | ModelId::M3 => -phi.radians().cos(),
    }
}

/// Closed-form joint table for `model` at the given settings.
pub fn analytic_table(model: ModelId, x: UnitVector3, y: UnitVector3) -> JointTable2x2 {
    match model {
        ModelId::Baseline => {
            let e = analytic_correlation(model, angle_between(x, y));
            // a and b are individually unbiased, so the table is fixed by E.
            let same = 0.25 * (1.0 + e);
            let opposite = 0.25 * (1.0 - e);
            JointTable2x2::from_probs([[same, opposite], [opposite, same]])
        }
        _ => singlet_table(x, y),
    }
}
