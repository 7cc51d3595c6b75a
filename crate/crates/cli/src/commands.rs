use std::fmt::Write as _;

use mirelax_core::estimation::Quad;
use mirelax_core::sphere::grid::Frame;
use mirelax_core::{
    analytic_correlation, analytic_table, angle_between, chsh, d_separated, estimate_joint,
    mutual_information, scan_angles, three_hidden_report, verify_inequality, ChshSettings,
    Convention, Dag, IndependenceQuery, JointTable2x2, ModelId, OmegaPairs, RelaxationReport,
    SettingsPrior, SphereGrid, UnitVector3,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{ChshArgs, DsepArgs, Format, RelaxationArgs, ScanArgs, SimulateArgs};
use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";

/// Rendered command output, ready to be written verbatim.
pub struct Rendered(pub String);

fn to_json(doc: Value) -> Result<Rendered, CliError> {
    check_finite(&doc)?;
    let mut s = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(Rendered(s))
}

fn check_finite(v: &Value) -> Result<(), CliError> {
    match v {
        Value::Number(n) if n.as_f64().is_some_and(|f| !f.is_finite()) => {
            Err(CliError::Internal("non-finite number in output".into()))
        }
        // serde_json turns NaN and infinities into null.
        Value::Null => Err(CliError::Internal("null value in output".into())),
        Value::Array(items) => items.iter().try_for_each(check_finite),
        Value::Object(map) => map.values().try_for_each(check_finite),
        _ => Ok(()),
    }
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn check_table(t: &JointTable2x2) -> Result<(), CliError> {
    if (t.total() - 1.0).abs() > 1e-12 {
        return Err(CliError::Internal(format!("table sums to {}", t.total())));
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<Rendered, CliError> {
    let model = ModelId::from(args.mc.model);
    let x = args
        .x
        .unwrap_or_else(|| UnitVector3::in_plane_degrees(args.x_angle));
    let y = args
        .y
        .unwrap_or_else(|| UnitVector3::in_plane_degrees(args.y_angle));
    let r = estimate_joint(model, x, y, args.mc.trials, args.mc.seed)?;
    check_table(&r.table)?;
    let analytic = analytic_table(model, x, y);
    let analytic_e = analytic_correlation(model, angle_between(x, y));
    match args.format {
        Format::Json => to_json(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "model": model,
            "x": x,
            "y": y,
            "n": r.n,
            "seed": r.seed,
            "counts": value(&Quad::from(r.counts)),
            "table": r.table,
            "analytic_table": analytic,
            "correlation": r.correlation(),
            "correlation_se": r.correlation_se(),
            "analytic_correlation": analytic_e,
            "se": value(&Quad::from(r.se)),
        })),
        Format::Csv => {
            let mut out = String::from("a,b,count,p,analytic_p,se\n");
            let labels = [("+1", 0), ("-1", 1)];
            for (la, ia) in labels {
                for (lb, ib) in labels {
                    writeln!(
                        out,
                        "{la},{lb},{},{},{},{}",
                        r.counts[ia][ib],
                        r.table.probs()[ia][ib],
                        analytic.probs()[ia][ib],
                        r.se[ia][ib]
                    )
                    .unwrap();
                }
            }
            Ok(Rendered(out))
        }
    }
}

pub fn chsh_cmd(args: &ChshArgs) -> Result<Rendered, CliError> {
    let model = ModelId::from(args.mc.model);
    let mut settings = ChshSettings::planar_degrees(args.angles);
    if let Some(v) = args.x1 {
        settings.x1 = v;
    }
    if let Some(v) = args.x2 {
        settings.x2 = v;
    }
    if let Some(v) = args.y1 {
        settings.y1 = v;
    }
    if let Some(v) = args.y2 {
        settings.y2 = v;
    }
    let r = chsh(model, &settings, args.mc.trials, args.mc.seed)?;
    match args.format {
        Format::Json => to_json(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "chsh",
            "model": model,
            "settings": settings,
            "n": args.mc.trials,
            "correlations": r.correlations,
            "S": r.s,
            "S_se": r.se,
            "seed": r.seed,
        })),
        Format::Csv => {
            let mut out = String::from("term,E,se\n");
            for c in &r.correlations {
                writeln!(out, "{},{},{}", c.label, c.e, c.se).unwrap();
            }
            writeln!(out, "S,{},{}", r.s, r.se).unwrap();
            Ok(Rendered(out))
        }
    }
}

pub fn scan(args: &ScanArgs) -> Result<Rendered, CliError> {
    let model = ModelId::from(args.mc.model);
    let rows = scan_angles(model, args.steps, args.mc.trials, args.mc.seed)?;
    match args.format {
        Format::Csv => {
            let mut out = String::from("phi_rad,E_emp,E_analytic,se\n");
            for r in &rows {
                writeln!(out, "{},{},{},{}", r.phi, r.e_emp, r.e_analytic, r.se).unwrap();
            }
            Ok(Rendered(out))
        }
        Format::Json => to_json(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "scan",
            "model": model,
            "n": args.mc.trials,
            "seed": args.mc.seed,
            "rows": rows,
        })),
    }
}

pub fn dsep(args: &DsepArgs) -> Result<Rendered, CliError> {
    let dag = match (&args.figure, &args.dag_file) {
        (Some(f), _) => Dag::builtin(*f),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            Dag::parse_edge_list(&text)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "either --figure or --dag-file is required".into(),
            ))
        }
    };
    if args.print_dag {
        return Ok(Rendered(dag.to_edge_list()));
    }
    let query: IndependenceQuery = args
        .query
        .as_deref()
        .ok_or_else(|| CliError::Usage("--query is required".into()))?
        .parse()?;
    let verdict = d_separated(&dag, &query)?;
    Ok(Rendered(format!("d-separated: {verdict}\n")))
}

pub fn relaxation(args: &RelaxationArgs) -> Result<Rendered, CliError> {
    let prior = match &args.prior {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            SettingsPrior::parse(&text)?
        }
        None => SettingsPrior::chsh_default(),
    };
    let grid = SphereGrid::new(args.resolution, Frame::STANDARD)?;
    let convention = Convention::from(args.convention);
    let model = ModelId::from(args.model);

    let reference = if model == ModelId::Baseline {
        ModelId::Baseline
    } else {
        ModelId::M1
    };
    let one_hidden = mutual_information(&prior, reference, &grid)?;
    let compared: &[ModelId] = match model {
        ModelId::Baseline => &[],
        ModelId::M1 => &[ModelId::M2, ModelId::M3],
        ModelId::M2 => &[ModelId::M2],
        ModelId::M3 => &[ModelId::M3],
    };
    let omega = if args.omega_equals_u || compared.is_empty() {
        OmegaPairs::equal_to_u()
    } else {
        OmegaPairs::generate(&grid, &prior, args.extra_pairs, args.seed)?
    };

    let mut three_hidden: Vec<RelaxationReport> = Vec::new();
    let mut difference = None;
    let mut holds = None;
    for &m in compared {
        let (report, margin, ok) = match convention {
            Convention::PaperUnweighted => {
                let v = verify_inequality(m, &one_hidden, &grid, &prior, &omega)?;
                (v.report, v.margin, v.holds)
            }
            Convention::Weighted => {
                let r = three_hidden_report(m, &prior, &grid, &omega, Convention::Weighted)?;
                let margin = r.mutual_info - one_hidden.mutual_info;
                (r, margin, margin >= -1e-9)
            }
        };
        if let Some(d) = difference {
            if d != margin {
                return Err(CliError::Internal(format!(
                    "m2 and m3 relaxation differ: {d} vs {margin}"
                )));
            }
        }
        difference = Some(margin);
        holds = Some(holds.unwrap_or(true) && ok);
        three_hidden.push(report);
    }
    let mut one_hidden = one_hidden;
    one_hidden.convention = convention;

    match args.format {
        Format::Json => {
            let mut doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "relaxation",
                "convention": convention,
                "log_base": 2,
                "grid": {
                    "resolution": grid.resolution(),
                    "cells": grid.len(),
                },
                "prior": prior.entries(),
                "extra_pairs": omega.len(),
                "extra_pair_directions": omega.extra(),
                "seed": args.seed,
                "one_hidden": one_hidden,
                "three_hidden": three_hidden,
            });
            if let (Some(d), Some(h)) = (difference, holds) {
                doc["difference"] = json!(d);
                doc["inequality_holds"] = json!(h);
            }
            to_json(doc)
        }
        Format::Csv => {
            let mut out = String::from(
                "role,model,convention,h_lambda,h_lambda_given,mutual_info,grid_resolution,omega_cells,u_points,extra_pairs\n",
            );
            let rows = std::iter::once(("one_hidden", &one_hidden))
                .chain(three_hidden.iter().map(|r| ("three_hidden", r)));
            for (role, r) in rows {
                writeln!(
                    out,
                    "{role},{},{},{},{},{},{},{},{},{}",
                    r.model,
                    r.convention,
                    r.h_lambda,
                    r.h_lambda_given,
                    r.mutual_info,
                    r.grid_resolution,
                    r.omega_cells,
                    r.u_points,
                    r.extra_pairs
                )
                .unwrap();
            }
            Ok(Rendered(out))
        }
    }
}
