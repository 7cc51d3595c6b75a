//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use mirelax_core::{
    chsh, d_separated, dot, estimate_joint, lambda_density, markov_identities, mic_holds,
    mutual_information, paper_entropy_difference, response_a, response_b, run_trial,
    sample_uniform_sphere, scan_angles, singlet_table, ChshSettings, Dag, Figure, ModelId,
    OmegaPairs, Quadrature, SettingsPrior, SphereGrid, UnitVector3,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const MEASUREMENT_DEPENDENT: [ModelId; 3] = [ModelId::M1, ModelId::M2, ModelId::M3];

fn singlet_reproduction() -> Check {
    let n = 1_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pairs: Vec<(UnitVector3, UnitVector3)> = (0..20)
        .map(|_| {
            (
                sample_uniform_sphere(&mut rng),
                sample_uniform_sphere(&mut rng),
            )
        })
        .collect();
    let mut worst: f64 = 0.0;
    for model in MEASUREMENT_DEPENDENT {
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let r = estimate_joint(model, x, y, n, 100 + i as u64).map_err(|e| e.to_string())?;
            let want = singlet_table(x, y).probs();
            let got = r.table.probs();
            for a in 0..2 {
                for b in 0..2 {
                    let p = want[a][b];
                    let tol = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
                    let dev = (got[a][b] - p).abs();
                    ensure(dev <= tol, || {
                        format!(
                            "{model} pair {i} cell ({a},{b}): |{} - {p}| > {tol}",
                            got[a][b]
                        )
                    })?;
                    if tol > 0.0 {
                        worst = worst.max(dev / tol);
                    }
                }
            }
        }
    }
    Ok(format!(
        "60 tables at n=1e6, worst deviation {worst:.2} of the 4-sigma bound"
    ))
}

fn density_normalization() -> Check {
    let d1 = UnitVector3::new(0.36, -0.48, 0.8).unwrap();
    let axis = d1.cross(&UnitVector3::new(0.1, 0.9, 0.2).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let phi = 0.05 + (PI - 0.1) * k as f64 / 19.0;
        let (s, c) = phi.sin_cos();
        let d2 = {
            let (p, q) = (d1.components(), axis.cross(&d1).unwrap().components());
            UnitVector3::new(
                c * p[0] + s * q[0],
                c * p[1] + s * q[1],
                c * p[2] + s * q[2],
            )
            .unwrap()
        };
        // Region boundaries are great circles through ±(d1 × d2).
        let grid = SphereGrid::oriented(40, d1.cross(&d2).unwrap()).map_err(|e| e.to_string())?;
        for model in MEASUREMENT_DEPENDENT {
            let total = grid.integrate(
                |l| lambda_density(model, l, d1, d2).expect("non-degenerate"),
                Quadrature::PIECEWISE,
            );
            let err = (total - 1.0).abs();
            ensure(err <= 1e-6, || format!("{model} phi={phi}: total {total}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!(
        "20 angles x 3 models, max |total - 1| = {worst:.1e}"
    ))
}

fn chsh_values() -> Check {
    let settings = ChshSettings::planar_degrees([0.0, 90.0, 45.0, 135.0]);
    let mut report = Vec::new();
    for (model, target) in [
        (ModelId::M1, 2.0 * 2f64.sqrt()),
        (ModelId::M2, 2.0 * 2f64.sqrt()),
        (ModelId::M3, 2.0 * 2f64.sqrt()),
        (ModelId::Baseline, 2.0),
    ] {
        let r = chsh(model, &settings, 1_000_000, 1).map_err(|e| e.to_string())?;
        ensure((r.s.abs() - target).abs() <= 0.02, || {
            format!("{model}: |S| = {} vs {target}", r.s.abs())
        })?;
        report.push(format!("{model} |S|={:.4}", r.s.abs()));
    }
    Ok(report.join(", "))
}

/// `∫ a b dλ / 4π` for uniform `λ`, by adaptive quadrature on a grid whose
/// pole is normal to the settings plane.
fn uniform_correlation_oracle(phi: f64) -> f64 {
    let x = UnitVector3::in_plane(0.0);
    let y = UnitVector3::in_plane(phi);
    let grid = SphereGrid::oriented(24, UnitVector3::E3).unwrap();
    grid.integrate(
        |l| f64::from(response_a(l, x).value() * response_b(l, y).value()) / (4.0 * PI),
        Quadrature::PIECEWISE,
    )
}

fn baseline_curve() -> Check {
    let rows = scan_angles(ModelId::Baseline, 19, 100_000, 5).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        let oracle = uniform_correlation_oracle(r.phi);
        let closed = -1.0 + 2.0 * r.phi / PI;
        ensure((oracle - closed).abs() <= 1e-9, || {
            format!("oracle {oracle} vs {closed} at {}", r.phi)
        })?;
        ensure((r.e_analytic - oracle).abs() <= 1e-9, || {
            format!("analytic {} vs oracle {oracle}", r.e_analytic)
        })?;
        let dev = (r.e_emp - oracle).abs();
        ensure(dev <= 4.0 * r.se + 1e-12, || {
            format!("phi={}: |{} - {oracle}| > 4*{}", r.phi, r.e_emp, r.se)
        })?;
        if r.se > 0.0 {
            worst = worst.max(dev / r.se);
        }
    }
    Ok(format!("19 points at n=1e5, worst deviation {worst:.2} se"))
}

fn causal_structure() -> Check {
    let mut identities = 0;
    for fig in Figure::ALL {
        let dag = Dag::builtin(fig);
        let holds = mic_holds(&dag).map_err(|e| e.to_string())?;
        let expected = matches!(fig, Figure::OneA | Figure::TwoA | Figure::ThreeA);
        ensure(holds == expected, || format!("{fig}: MIC holds = {holds}"))?;
        for q in markov_identities(&dag).map_err(|e| e.to_string())? {
            ensure(d_separated(&dag, &q).map_err(|e| e.to_string())?, || {
                format!("{fig}: {q} fails")
            })?;
            identities += 1;
        }
    }
    Ok(format!(
        "MIC verdicts for 6 graphs, {identities} factorization identities"
    ))
}

fn relaxation_inequality() -> Check {
    let grid = SphereGrid::new(60, mirelax_core::sphere::grid::Frame::STANDARD)
        .map_err(|e| e.to_string())?;
    ensure(grid.len() >= 1000, || {
        format!("grid has only {} cells", grid.len())
    })?;
    let u = SettingsPrior::chsh_default();
    let mut min_diff = f64::INFINITY;
    for model in [ModelId::M2, ModelId::M3] {
        let zero = paper_entropy_difference(model, &grid, &u, &OmegaPairs::equal_to_u())
            .map_err(|e| e.to_string())?;
        ensure(zero.abs() <= 1e-9, || {
            format!("{model}: difference {zero} with Omega = U")
        })?;
        for seed in 0..10 {
            let omega = OmegaPairs::generate(&grid, &u, 5 + seed as usize, seed)
                .map_err(|e| e.to_string())?;
            let d =
                paper_entropy_difference(model, &grid, &u, &omega).map_err(|e| e.to_string())?;
            ensure(d >= -1e-9, || {
                format!("{model} seed {seed}: difference {d}")
            })?;
            min_diff = min_diff.min(d);
        }
    }
    let m1 = mutual_information(&u, ModelId::M1, &grid).map_err(|e| e.to_string())?;
    let mut gap: f64 = 0.0;
    for model in [ModelId::M2, ModelId::M3] {
        let r = mutual_information(&u, model, &grid).map_err(|e| e.to_string())?;
        gap = gap.max((r.mutual_info - m1.mutual_info).abs());
    }
    ensure(gap <= 1e-9, || {
        format!("weighted information differs by {gap}")
    })?;
    Ok(format!(
        "{} cells, min difference over 20 random Omega {min_diff:.3} bits, weighted gap {gap:.1e}",
        grid.len()
    ))
}

fn model_equivalence() -> Check {
    let mut setting_rng = ChaCha8Rng::seed_from_u64(77);
    let x = sample_uniform_sphere(&mut setting_rng);
    let y = sample_uniform_sphere(&mut setting_rng);
    let mut r2 = ChaCha8Rng::seed_from_u64(123);
    let mut r3 = ChaCha8Rng::seed_from_u64(123);
    for i in 0..100_000 {
        let a = run_trial(ModelId::M2, x, y, &mut r2);
        let b = run_trial(ModelId::M3, x, y, &mut r3);
        ensure(a == b, || format!("trial {i}: {a:?} vs {b:?}"))?;
    }
    let e2 = estimate_joint(ModelId::M2, x, y, 100_000, 9).map_err(|e| e.to_string())?;
    let e3 = estimate_joint(ModelId::M3, x, y, 100_000, 9).map_err(|e| e.to_string())?;
    ensure(e2.counts == e3.counts, || {
        "parallel estimates differ".into()
    })?;
    Ok("1e5 trials identical, parallel counts identical".into())
}

/// Conditional cell distribution from the closed-form density, written
/// without the library's density or discretization code.
fn oracle_conditional(grid: &SphereGrid, x: UnitVector3, y: UnitVector3) -> Vec<f64> {
    let c = dot(x, y);
    let phi = c.clamp(-1.0, 1.0).acos();
    let masses: Vec<f64> = grid
        .cells()
        .iter()
        .map(|cell| {
            let l = cell.center;
            let s = if dot(l, x) * dot(l, y) >= 0.0 {
                1.0
            } else {
                -1.0
            };
            (1.0 + c * s) / (1.0 + (1.0 - 2.0 * phi / PI) * s) / (4.0 * PI) * cell.area
        })
        .collect();
    let total: f64 = masses.iter().sum();
    masses.into_iter().map(|m| m / total).collect()
}

fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&q| q > 0.0)
        .map(|q| q * q.log2())
        .sum::<f64>()
}

fn information_oracle() -> Check {
    let grid = SphereGrid::new(20, mirelax_core::sphere::grid::Frame::STANDARD)
        .map_err(|e| e.to_string())?;
    ensure(grid.len() <= 200, || format!("{} cells", grid.len()))?;
    let pairs = [
        (
            UnitVector3::in_plane_degrees(0.0),
            UnitVector3::in_plane_degrees(45.0),
            0.3,
        ),
        (
            UnitVector3::in_plane_degrees(90.0),
            UnitVector3::in_plane_degrees(160.0),
            0.7,
        ),
    ];
    let prior = SettingsPrior::new(
        pairs
            .iter()
            .map(|&(x, y, weight)| mirelax_core::SettingPair { x, y, weight })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let conditionals: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(x, y, _)| oracle_conditional(&grid, x, y))
        .collect();
    let mut marginal = vec![0.0; grid.len()];
    let mut h_cond = 0.0;
    for (cond, &(_, _, w)) in conditionals.iter().zip(&pairs) {
        for (m, p) in marginal.iter_mut().zip(cond) {
            *m += w * p;
        }
        h_cond += w * entropy_bits(cond);
    }
    let oracle = entropy_bits(&marginal) - h_cond;
    let got = mutual_information(&prior, ModelId::M1, &grid).map_err(|e| e.to_string())?;
    let err = (got.mutual_info - oracle).abs();
    ensure(err <= 1e-9, || {
        format!("library {} vs oracle {oracle}", got.mutual_info)
    })?;
    ensure(oracle > 0.0, || "oracle information is zero".into())?;
    Ok(format!(
        "{} cells, I = {oracle:.12} bits, |difference| = {err:.1e}",
        grid.len()
    ))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 7] = [
        &[
            "simulate",
            "--model",
            "m1",
            "--x-angle",
            "20",
            "--y-angle",
            "75",
            "--trials",
            "200000",
            "--seed",
            "4",
        ],
        &[
            "simulate", "--model", "m2", "--format", "csv", "--trials", "200000",
        ],
        &["chsh", "--model", "m3", "--trials", "100000", "--seed", "8"],
        &[
            "scan", "--model", "baseline", "--steps", "7", "--trials", "50000",
        ],
        &["dsep", "--figure", "3b", "--query", "a _||_ y | x,l,l1,l2"],
        &[
            "relaxation",
            "--extra-pairs",
            "6",
            "--seed",
            "3",
            "--resolution",
            "60",
        ],
        &[
            "relaxation",
            "--format",
            "csv",
            "--convention",
            "weighted",
            "--resolution",
            "40",
        ],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("run{i}-{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_mirelax"))
                .args(*args)
                .arg("--out")
                .arg(&path)
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), || {
                format!("{args:?} exited with {status}")
            })?;
            outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(!outputs[0].is_empty(), || format!("{args:?} wrote nothing"))?;
        ensure(outputs[0] == outputs[1], || {
            format!("{args:?} differs between runs")
        })?;
    }
    Ok(format!(
        "{} subcommand invocations byte-identical",
        runs.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("singlet reproduction", singlet_reproduction),
        ("density normalization", density_normalization),
        ("CHSH values", chsh_values),
        ("baseline curve", baseline_curve),
        ("causal structure", causal_structure),
        ("relaxation inequality", relaxation_inequality),
        ("model equivalence", model_equivalence),
        ("information oracle", information_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
