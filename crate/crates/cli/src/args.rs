use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mirelax_core::{Convention, Figure, ModelId, UnitVector3};

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

/// Simulate hidden-variable models of the singlet experiment and measure how
/// much they relax measurement independence.
///
/// Planar settings are angles in degrees within a fixed great circle; full 3D
/// settings are given as comma-separated components, e.g. `--x 0,0.7071,0.7071`.
#[derive(Debug, Parser)]
#[command(name = "mirelax", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate P(a,b|x,y) for one setting pair.
    Simulate(SimulateArgs),
    /// Estimate the CHSH value S = E11 - E12 + E21 + E22.
    Chsh(ChshArgs),
    /// Estimate E(phi) at evenly spaced angles in [0, pi].
    Scan(ScanArgs),
    /// Decide a d-separation query on a built-in or user-supplied DAG.
    Dsep(DsepArgs),
    /// Discretized mutual information between lambda and the settings.
    Relaxation(RelaxationArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Baseline,
    M1,
    M2,
    M3,
}

impl From<ModelArg> for ModelId {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Baseline => ModelId::Baseline,
            ModelArg::M1 => ModelId::M1,
            ModelArg::M2 => ModelId::M2,
            ModelArg::M3 => ModelId::M3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Weighted,
    Paper,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Weighted => Convention::Weighted,
            ConventionArg::Paper => Convention::PaperUnweighted,
        }
    }
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long, value_enum, default_value = "m1")]
    pub model: ModelArg,
    /// Master seed; identical flags give byte-identical output.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Trials per estimated correlation.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub mc: MonteCarloArgs,
    /// Alice's setting as a planar angle in degrees.
    #[arg(
        long,
        default_value_t = 0.0,
        conflicts_with = "x",
        allow_negative_numbers = true
    )]
    pub x_angle: f64,
    /// Bob's setting as a planar angle in degrees.
    #[arg(
        long,
        default_value_t = 90.0,
        conflicts_with = "y",
        allow_negative_numbers = true
    )]
    pub y_angle: f64,
    /// Alice's setting as a 3D vector `c1,c2,c3` (normalized).
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub x: Option<UnitVector3>,
    /// Bob's setting as a 3D vector `c1,c2,c3` (normalized).
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub y: Option<UnitVector3>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[command(flatten)]
    pub mc: MonteCarloArgs,
    /// Planar settings `x1,x2,y1,y2` in degrees.
    #[arg(long, value_parser = parse_angles4, default_value = "0,90,45,135", allow_hyphen_values = true)]
    pub angles: [f64; 4],
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub x1: Option<UnitVector3>,
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub x2: Option<UnitVector3>,
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub y1: Option<UnitVector3>,
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub y2: Option<UnitVector3>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub mc: MonteCarloArgs,
    /// Number of angles, including both endpoints.
    #[arg(long, default_value_t = 19)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DsepArgs {
    /// Built-in figure: 1a, 1b, 2a, 2b, 3a or 3b.
    #[arg(long, value_parser = parse_figure, required_unless_present = "dag_file", conflicts_with = "dag_file")]
    pub figure: Option<Figure>,
    /// DAG as an edge list, one `parent -> child` per line.
    #[arg(long)]
    pub dag_file: Option<PathBuf>,
    /// Query `A,B _||_ C,D | E,F` over nodes a, b, x, y, l, l1, l2.
    #[arg(long, required_unless_present = "print_dag")]
    pub query: Option<String>,
    /// Print the DAG's edge list instead of answering a query.
    #[arg(long)]
    pub print_dag: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RelaxationArgs {
    /// m1 compares against both m2 and m3; m2/m3 against that model only;
    /// baseline reports the setting-independent model alone.
    #[arg(long, value_enum, default_value = "m1")]
    pub model: ModelArg,
    /// Grid resolution (number of polar bands); 157 gives about 10^4 cells.
    #[arg(long, default_value_t = mirelax_core::sphere::grid::DEFAULT_RESOLUTION)]
    pub resolution: u32,
    /// Prior file: one `x_angle_deg y_angle_deg weight` per line.
    /// Defaults to the four standard CHSH pairs, equally weighted.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "paper")]
    pub convention: ConventionArg,
    /// Restrict the conditioning pairs of Omega to the setting set U.
    #[arg(long, conflicts_with = "extra_pairs")]
    pub omega_equals_u: bool,
    /// Number of Omega pairs outside U, drawn from grid cell centers.
    #[arg(long, default_value_t = 10)]
    pub extra_pairs: usize,
    /// Seed for drawing the extra pairs.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn parse_vector(s: &str) -> Result<UnitVector3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect::<Result<_, _>>()?;
    let [c1, c2, c3] = parts[..] else {
        return Err(format!(
            "expected three comma-separated components, got `{s}`"
        ));
    };
    UnitVector3::new(c1, c2, c3).map_err(|e| e.to_string())
}

fn parse_angles4(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect::<Result<_, _>>()?;
    let angles: [f64; 4] = parts
        .try_into()
        .map_err(|_| format!("expected four comma-separated angles, got `{s}`"))?;
    if angles.iter().any(|a| !a.is_finite()) {
        return Err("angles must be finite".into());
    }
    Ok(angles)
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    s.parse().map_err(|e: mirelax_core::Error| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn vector_parsing() {
        let v = parse_vector("0.0,0.7071,0.7071").unwrap();
        assert!((v.c2() - v.c3()).abs() < 1e-15);
        assert!(parse_vector("1,2").is_err());
        assert!(parse_vector("0,0,0").is_err());
        assert!(parse_vector("a,b,c").is_err());
        assert_eq!(
            parse_angles4("0,90,45,135").unwrap(),
            [0.0, 90.0, 45.0, 135.0]
        );
        assert!(parse_angles4("0,90").is_err());
    }
}
