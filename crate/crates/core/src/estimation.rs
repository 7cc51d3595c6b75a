//! Monte Carlo estimation of joint outcome tables, correlations, CHSH values
//! and correlation-versus-angle scans.
//!
//! Trials are split into fixed-size chunks. Chunk `i` draws from a ChaCha8
//! generator seeded with the run seed and switched to stream `i`, so the
//! merged counts depend only on `(model, settings, n, seed)`, never on how
//! many worker threads processed the chunks.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{analytic_correlation, run_trial, ModelId, Outcome};
use crate::sphere::{angle_between, Angle, UnitVector3};

/// Trials per independently seeded chunk.
pub const CHUNK_TRIALS: u64 = 1 << 16;

/// `P(a, b)` over `a, b ∈ {+1, −1}`; index 0 is `+1`, index 1 is `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Quad<f64>", into = "Quad<f64>")]
pub struct JointTable2x2 {
    p: [[f64; 2]; 2],
}

/// Serialized form of a 2×2 outcome array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad<T> {
    #[serde(rename = "++")]
    pub pp: T,
    #[serde(rename = "+-")]
    pub pm: T,
    #[serde(rename = "-+")]
    pub mp: T,
    #[serde(rename = "--")]
    pub mm: T,
}

impl<T: Copy> From<[[T; 2]; 2]> for Quad<T> {
    fn from(p: [[T; 2]; 2]) -> Self {
        Quad {
            pp: p[0][0],
            pm: p[0][1],
            mp: p[1][0],
            mm: p[1][1],
        }
    }
}

impl<T> From<Quad<T>> for [[T; 2]; 2] {
    fn from(q: Quad<T>) -> Self {
        [[q.pp, q.pm], [q.mp, q.mm]]
    }
}

impl From<Quad<f64>> for JointTable2x2 {
    fn from(q: Quad<f64>) -> Self {
        JointTable2x2 { p: q.into() }
    }
}

impl From<JointTable2x2> for Quad<f64> {
    fn from(t: JointTable2x2) -> Self {
        t.p.into()
    }
}

impl JointTable2x2 {
    pub fn from_probs(p: [[f64; 2]; 2]) -> Self {
        debug_assert!(p.iter().flatten().all(|&x| x >= 0.0));
        debug_assert!((p.iter().flatten().sum::<f64>() - 1.0).abs() <= 1e-12);
        Self { p }
    }

    pub fn from_counts(counts: &[[u64; 2]; 2]) -> Self {
        let n: u64 = counts.iter().flatten().sum();
        let n = n as f64;
        Self {
            p: counts.map(|row| row.map(|c| c as f64 / n)),
        }
    }

    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        self.p[a.index()][b.index()]
    }

    pub fn probs(&self) -> [[f64; 2]; 2] {
        self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }
}

/// `E(a b) = p(+,+) + p(−,−) − p(+,−) − p(−,+)`.
pub fn correlation(table: &JointTable2x2) -> f64 {
    let p = table.p;
    p[0][0] + p[1][1] - p[0][1] - p[1][0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub table: JointTable2x2,
    #[serde(with = "quad_counts")]
    pub counts: [[u64; 2]; 2],
    pub n: u64,
    #[serde(with = "quad_f64")]
    pub se: [[f64; 2]; 2],
    pub seed: u64,
}

mod quad_counts {
    use super::Quad;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &[[u64; 2]; 2], s: S) -> Result<S::Ok, S::Error> {
        Quad::from(*c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[[u64; 2]; 2], D::Error> {
        Quad::<u64>::deserialize(d).map(Into::into)
    }
}

mod quad_f64 {
    use super::Quad;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &[[f64; 2]; 2], s: S) -> Result<S::Ok, S::Error> {
        Quad::from(*c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[[f64; 2]; 2], D::Error> {
        Quad::<f64>::deserialize(d).map(Into::into)
    }
}

impl EstimationResult {
    pub fn correlation(&self) -> f64 {
        correlation(&self.table)
    }

    /// Standard error of the empirical correlation, `√((1 − E²)/n)`.
    pub fn correlation_se(&self) -> f64 {
        let e = self.correlation();
        ((1.0 - e * e).max(0.0) / self.n as f64).sqrt()
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed `index` of `master`: `splitmix64(master + (index + 1)·γ)` with
/// `γ = 0x9E3779B97F4A7C15`, i.e. the `index + 1`-th output of a SplitMix64
/// stream started at `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn run_chunk(
    model: ModelId,
    x: UnitVector3,
    y: UnitVector3,
    seed: u64,
    chunk: u64,
    trials: u64,
) -> [[u64; 2]; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut counts = [[0u64; 2]; 2];
    for _ in 0..trials {
        let o = run_trial(model, x, y, &mut rng);
        counts[o.a.index()][o.b.index()] += 1;
    }
    counts
}

/// Runs `n` independent trials and tabulates outcome frequencies.
pub fn estimate_joint(
    model: ModelId,
    x: UnitVector3,
    y: UnitVector3,
    n: u64,
    seed: u64,
) -> Result<EstimationResult> {
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    let chunks = n.div_ceil(CHUNK_TRIALS);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let trials = CHUNK_TRIALS.min(n - i * CHUNK_TRIALS);
            run_chunk(model, x, y, seed, i, trials)
        })
        .reduce(
            || [[0u64; 2]; 2],
            |mut acc, c| {
                for (row, crow) in acc.iter_mut().zip(c) {
                    for (a, b) in row.iter_mut().zip(crow) {
                        *a += b;
                    }
                }
                acc
            },
        );
    let table = JointTable2x2::from_counts(&counts);
    let nf = n as f64;
    let se = table.p.map(|row| row.map(|p| (p * (1.0 - p) / nf).sqrt()));
    Ok(EstimationResult {
        table,
        counts,
        n,
        se,
        seed,
    })
}

/// Two settings per side for a CHSH test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub x1: UnitVector3,
    pub x2: UnitVector3,
    pub y1: UnitVector3,
    pub y2: UnitVector3,
}

impl ChshSettings {
    /// Planar settings at 0°, 90° (Alice) and 45°, 135° (Bob).
    pub fn standard() -> Self {
        Self::planar_degrees([0.0, 90.0, 45.0, 135.0])
    }

    /// `[x1, x2, y1, y2]` as angles in the fixed plane.
    pub fn planar_degrees(angles: [f64; 4]) -> Self {
        let [x1, x2, y1, y2] = angles.map(UnitVector3::in_plane_degrees);
        Self { x1, x2, y1, y2 }
    }

    /// `(label, x, y, sign in S)` in the order E₁₁, E₁₂, E₂₁, E₂₂.
    pub fn terms(&self) -> [(&'static str, UnitVector3, UnitVector3, f64); 4] {
        [
            ("x1y1", self.x1, self.y1, 1.0),
            ("x1y2", self.x1, self.y2, -1.0),
            ("x2y1", self.x2, self.y1, 1.0),
            ("x2y2", self.x2, self.y2, 1.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub label: String,
    pub x: UnitVector3,
    pub y: UnitVector3,
    pub e: f64,
    pub se: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub correlations: Vec<CorrelationEstimate>,
    /// `S = E₁₁ − E₁₂ + E₂₁ + E₂₂`.
    pub s: f64,
    /// Combined standard error of `S` (independent terms).
    pub se: f64,
    pub seed: u64,
}

/// CHSH value from four independent estimates; term `i` uses
/// `derive_seed(seed, i)`.
pub fn chsh(model: ModelId, settings: &ChshSettings, n: u64, seed: u64) -> Result<ChshResult> {
    let mut correlations = Vec::with_capacity(4);
    let mut s = 0.0;
    let mut var = 0.0;
    for (i, (label, x, y, sign)) in settings.terms().into_iter().enumerate() {
        let sub = derive_seed(seed, i as u64);
        let r = estimate_joint(model, x, y, n, sub)?;
        let (e, se) = (r.correlation(), r.correlation_se());
        s += sign * e;
        var += se * se;
        correlations.push(CorrelationEstimate {
            label: label.to_string(),
            x,
            y,
            e,
            se,
            seed: sub,
        });
    }
    Ok(ChshResult {
        correlations,
        s,
        se: var.sqrt(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub phi: f64,
    pub e_emp: f64,
    pub e_analytic: f64,
    pub se: f64,
}

/// Correlation at `steps` evenly spaced angles in `[0, π]`, with `x` fixed at
/// angle 0 of the plane and `y` rotated; row `i` uses `derive_seed(seed, i)`.
pub fn scan_angles(model: ModelId, steps: usize, n: u64, seed: u64) -> Result<Vec<ScanRow>> {
    if steps < 2 {
        return Err(Error::TooFewSteps(steps));
    }
    let x = UnitVector3::in_plane(0.0);
    (0..steps)
        .map(|i| {
            let phi = if i + 1 == steps {
                PI
            } else {
                PI * i as f64 / (steps - 1) as f64
            };
            let y = UnitVector3::in_plane(phi);
            let r = estimate_joint(model, x, y, n, derive_seed(seed, i as u64))?;
            let angle = Angle::new(phi).expect("scan angles lie in [0, pi]");
            debug_assert!((angle_between(x, y).radians() - phi).abs() < 1e-7);
            Ok(ScanRow {
                phi,
                e_emp: r.correlation(),
                e_analytic: analytic_correlation(model, angle),
                se: r.correlation_se(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::singlet_table;
    use approx::assert_abs_diff_eq;

    #[test]
    fn correlation_examples() {
        let flat = JointTable2x2::from_probs([[0.25; 2]; 2]);
        assert_eq!(correlation(&flat), 0.0);
        let anti = JointTable2x2::from_probs([[0.0, 0.5], [0.5, 0.0]]);
        assert_eq!(correlation(&anti), -1.0);
        let t = singlet_table(UnitVector3::in_plane(0.0), UnitVector3::in_plane(PI / 3.0));
        assert_abs_diff_eq!(correlation(&t), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_trials_rejected() {
        let x = UnitVector3::E1;
        assert_eq!(
            estimate_joint(ModelId::M1, x, x, 0, 1),
            Err(Error::ZeroTrials)
        );
        assert_eq!(
            scan_angles(ModelId::M1, 1, 10, 1),
            Err(Error::TooFewSteps(1))
        );
    }

    #[test]
    fn counts_are_consistent() {
        let r = estimate_joint(ModelId::M1, UnitVector3::E1, UnitVector3::E2, 200_001, 5).unwrap();
        assert_eq!(r.counts.iter().flatten().sum::<u64>(), r.n);
        assert!((r.table.total() - 1.0).abs() < 1e-12);
        for (row, crow) in r.table.probs().iter().zip(r.counts) {
            for (p, c) in row.iter().zip(crow) {
                assert_eq!(*p, c as f64 / r.n as f64);
            }
        }
    }

    #[test]
    fn orthogonal_settings_are_flat() {
        let r =
            estimate_joint(ModelId::M1, UnitVector3::E1, UnitVector3::E2, 1_000_000, 7).unwrap();
        for p in r.table.probs().iter().flatten() {
            assert!((p - 0.25).abs() < 0.002, "{p}");
        }
    }

    #[test]
    fn aligned_settings_never_agree() {
        let x = UnitVector3::in_plane(0.4);
        let r = estimate_joint(ModelId::M2, x, x, 1_000_000, 8).unwrap();
        assert!(r.table.get(Outcome::Plus, Outcome::Plus) <= 1e-4);
        assert_eq!(r.counts[0][0], 0);
    }

    #[test]
    fn baseline_linear_correlation() {
        let r = estimate_joint(
            ModelId::Baseline,
            UnitVector3::in_plane(0.0),
            UnitVector3::in_plane(PI / 4.0),
            1_000_000,
            9,
        )
        .unwrap();
        assert!((r.correlation() + 0.5).abs() < 0.004);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let x = UnitVector3::in_plane(0.2);
        let y = UnitVector3::in_plane(1.3);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_joint(ModelId::M1, x, y, 3 * CHUNK_TRIALS + 17, 42).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(3));
    }

    #[test]
    fn sub_seeds_differ() {
        let seeds: std::collections::HashSet<_> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn scan_aligned_row_is_exact() {
        for m in ModelId::ALL {
            let rows = scan_angles(m, 5, 20_000, 3).unwrap();
            assert_eq!(rows.len(), 5);
            assert_eq!(rows[0].e_emp, -1.0);
            assert_eq!(rows[0].phi, 0.0);
            assert_eq!(rows[4].phi, PI);
        }
        let rows = scan_angles(ModelId::Baseline, 9, 100, 3).unwrap();
        for r in rows {
            assert_eq!(r.e_analytic, -1.0 + 2.0 * r.phi / PI);
        }
    }

    #[test]
    fn chsh_m2_m3_identical() {
        let st = ChshSettings::standard();
        let a = chsh(ModelId::M2, &st, 50_000, 1).unwrap();
        let b = chsh(ModelId::M3, &st, 50_000, 1).unwrap();
        assert_eq!(a.s, b.s);
    }

    #[test]
    fn table_serializes_with_sign_keys() {
        let t = JointTable2x2::from_probs([[0.1, 0.2], [0.3, 0.4]]);
        let q: Quad<f64> = t.into();
        assert_eq!((q.pp, q.pm, q.mp, q.mm), (0.1, 0.2, 0.3, 0.4));
        assert_eq!(JointTable2x2::from(q), t);
    }
}
