//! Command-line front end for the kellermap engine.
//!
//! Exit codes: 0 on success or a conclusive verdict, 1 on input or usage
//! errors, 2 when an analysis is inconclusive (difference sequence still
//! nonzero at the bound, or the degree cap was hit), 3 on internal
//! invariant violations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kellermap::case22::{case_2_2_emptiness, case_2_2_sanity};
use kellermap::invariants::{invariant_basis, nearly_invariant_basis};
use kellermap::keller::{
    classify, system1, verify_theorem, CubicKellerSpec, KellerError, THEOREM_MAX_M,
};
use kellermap::linalg::matrix_from_json;
use kellermap::map::{
    default_degree_cap, detect_polynomial_inverse, phi_recurrent, MapError, PhiReport,
    PolynomialMap,
};
use kellermap::parse::render;
use kellermap::search::{run_campaign, CampaignParams, Strategy};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "kellermap",
    version,
    about = "Exact analysis of polynomial map invertibility via iterated differences",
    after_help = "Defaults: --max-m 8 for inversion, 5 for verification; \
                  --degree-cap 3^n (9 at n=2, 27 at n=3); --d 3; --seed 0."
)]
struct Cli {
    /// Output format for machine consumers.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply the m-th difference along a map and print the result.
    Phi {
        /// Map file (header `map n=<int>`, one component per line).
        #[arg(long)]
        map: PathBuf,
        /// `id` or a path to a map file to difference.
        #[arg(long, default_value = "id")]
        f: String,
        /// Difference order.
        #[arg(long)]
        m: usize,
    },
    /// Detect a polynomial inverse through the difference sequence.
    Invert {
        #[arg(long)]
        map: PathBuf,
        /// Largest difference order to try.
        #[arg(long, default_value_t = 8)]
        max_m: usize,
        /// Abort when an intermediate difference exceeds this total degree
        /// (default 3^n).
        #[arg(long)]
        degree_cap: Option<u64>,
    },
    /// Print the Jacobian matrix of a map, optionally its determinant.
    Jacobian {
        #[arg(long)]
        map: PathBuf,
        /// Also print the symbolic determinant (maps up to dimension 4).
        #[arg(long)]
        det: bool,
    },
    /// Compose two maps: f applied after g.
    Compose {
        /// Outer map file.
        #[arg(long)]
        f: PathBuf,
        /// Inner map file.
        #[arg(long)]
        g: PathBuf,
    },
    /// Bases of invariant (and nearly invariant) polynomials of a map.
    Invariants {
        #[arg(long)]
        map: PathBuf,
        /// Degree bound for basis elements.
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Compute the nearly-invariant basis instead.
        #[arg(long)]
        nearly: bool,
    },
    /// Cubic Keller map analysis from a coefficient matrix.
    Keller {
        #[command(subcommand)]
        action: KellerAction,
    },
    /// Seeded search campaigns over cubic Keller specs.
    Search {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Map dimension (4 requires --explore).
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Append one JSON record per trial to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        max_m: usize,
        #[arg(long)]
        degree_cap: Option<u64>,
        /// Smallest sampled integer entry.
        #[arg(long, default_value_t = -3)]
        entry_min: i64,
        /// Largest sampled integer entry.
        #[arg(long, default_value_t = 3)]
        entry_max: i64,
        /// Allow dimension 4, which has no verified case analysis behind it.
        #[arg(long)]
        explore: bool,
    },
}

#[derive(Subcommand)]
enum KellerAction {
    /// Rank/case classification of a coefficient matrix.
    Classify {
        /// Matrix JSON file: {"rows", "cols", "entries"}.
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Full verification: difference sequence, inverse, witnesses.
    Verify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = THEOREM_MAX_M)]
        max_m: usize,
        #[arg(long)]
        degree_cap: Option<u64>,
    },
    /// The homogeneous constraint groups equivalent to a unit Jacobian.
    System1 {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Branch-tree emptiness proof for the rank-2 sub-case with both
    /// dependency coefficients nonzero.
    Case22 {
        /// Drop the nonzero-coefficient assumption (sanity mode: the
        /// remaining sub-cases become satisfiable).
        #[arg(long)]
        drop_lambda_constraint: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    DenseRandom,
    Rank1,
    Rank2,
    Triangular,
    Mixed,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::DenseRandom => Strategy::DenseRandom,
            StrategyArg::Rank1 => Strategy::Rank1,
            StrategyArg::Rank2 => Strategy::Rank2,
            StrategyArg::Triangular => Strategy::Triangular,
            StrategyArg::Mixed => Strategy::Mixed,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_INPUT);
            }
            print!("{e}");
            return ExitCode::from(EXIT_OK);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_INPUT,
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_INTERNAL,
        }
    }

    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::InverseVerificationFailed => CliError::internal(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<KellerError> for CliError {
    fn from(e: KellerError) -> Self {
        match e {
            KellerError::TheoremContradiction { .. } => CliError::internal(e.to_string()),
            KellerError::Map(MapError::InverseVerificationFailed) => {
                CliError::internal(e.to_string())
            }
            KellerError::InconclusiveBound { .. } => CliError {
                message: e.to_string(),
                code: EXIT_INCONCLUSIVE,
            },
            other => CliError::input(other.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<PolynomialMap, CliError> {
    PolynomialMap::from_text(&read_file(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<CubicKellerSpec, CliError> {
    let matrix = matrix_from_json(&read_file(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    CubicKellerSpec::analyze(matrix).map_err(CliError::from)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let format = cli.format;
    match cli.cmd {
        Cmd::Phi { map, f, m } => cmd_phi(&map, &f, m, format),
        Cmd::Invert {
            map,
            max_m,
            degree_cap,
        } => cmd_invert(&map, max_m, degree_cap, format),
        Cmd::Jacobian { map, det } => cmd_jacobian(&map, det, format),
        Cmd::Compose { f, g } => cmd_compose(&f, &g, format),
        Cmd::Invariants { map, d, nearly } => cmd_invariants(&map, d, nearly, format),
        Cmd::Keller { action } => match action {
            KellerAction::Classify { matrix } => cmd_classify(&matrix, format),
            KellerAction::Verify {
                matrix,
                max_m,
                degree_cap,
            } => cmd_verify(&matrix, max_m, degree_cap, format),
            KellerAction::System1 { matrix } => cmd_system1(&matrix, format),
            KellerAction::Case22 {
                drop_lambda_constraint,
            } => cmd_case22(drop_lambda_constraint, format),
        },
        Cmd::Search {
            strategy,
            count,
            seed,
            n,
            out,
            max_m,
            degree_cap,
            entry_min,
            entry_max,
            explore,
        } => cmd_search(
            strategy.into(),
            count,
            seed,
            n,
            out.as_deref(),
            max_m,
            degree_cap,
            (entry_min, entry_max),
            explore,
            format,
        ),
    }
}

fn cmd_phi(map_path: &Path, f: &str, m: usize, format: Format) -> Result<u8, CliError> {
    let phi = load_map(map_path)?;
    let f_map = if f == "id" {
        PolynomialMap::identity(phi.domain_dim())
    } else {
        load_map(Path::new(f))?
    };
    let result = phi_recurrent(&f_map, &phi, m)?;
    let components: Vec<String> = result.components().iter().map(render).collect();
    match format {
        Format::Text => {
            for c in &components {
                println!("{c}");
            }
        }
        Format::Json => println!(
            "{}",
            serde_json::json!({"m": m, "components": components})
        ),
    }
    Ok(EXIT_OK)
}

fn phi_report_json(report: &PhiReport) -> serde_json::Value {
    serde_json::json!({
        "vanishing_index": report.vanishing_index,
        "inverse": report.inverse.as_ref().map(|inv| {
            inv.components().iter().map(render).collect::<Vec<_>>()
        }),
        "bound_exceeded": report.bound_exceeded,
        "degree_cap_hit": report.degree_cap_hit,
        "degrees": report.degrees(),
        "composition_check": report.inverse.is_some(),
    })
}

fn cmd_invert(
    map_path: &Path,
    max_m: usize,
    degree_cap: Option<u64>,
    format: Format,
) -> Result<u8, CliError> {
    let phi = load_map(map_path)?;
    let cap = degree_cap.unwrap_or_else(|| default_degree_cap(phi.domain_dim()));
    let report = detect_polynomial_inverse(&phi, max_m, cap)?;
    match format {
        Format::Json => println!("{}", phi_report_json(&report)),
        Format::Text => match (&report.inverse, report.vanishing_index) {
            (Some(inv), Some(m)) => {
                println!("vanishing index: {m}");
                println!("inverse:");
                for c in inv.components() {
                    println!("  {}", render(c));
                }
                println!("composition check: passed both ways");
            }
            _ => {
                if report.degree_cap_hit {
                    println!(
                        "inconclusive: degree cap {cap} exceeded at difference {}",
                        report.phis.len() - 1
                    );
                } else {
                    println!("inconclusive: no vanishing difference up to m = {max_m}");
                }
            }
        },
    }
    if report.vanishing_index.is_some() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_INCONCLUSIVE)
    }
}

fn cmd_jacobian(map_path: &Path, det: bool, format: Format) -> Result<u8, CliError> {
    let phi = load_map(map_path)?;
    let jac = phi.jacobian();
    let rows: Vec<Vec<String>> = (0..jac.rows())
        .map(|r| (0..jac.cols()).map(|c| render(jac.get(r, c))).collect())
        .collect();
    let det_str = if det {
        Some(render(
            &jac.det().map_err(|e| CliError::input(e.to_string()))?,
        ))
    } else {
        None
    };
    match format {
        Format::Json => {
            println!(
                "{}",
                serde_json::json!({"rows": rows, "determinant": det_str})
            );
        }
        Format::Text => {
            for row in &rows {
                println!("[{}]", row.join(", "));
            }
            if let Some(d) = det_str {
                println!("det = {d}");
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_compose(f_path: &Path, g_path: &Path, format: Format) -> Result<u8, CliError> {
    let f = load_map(f_path)?;
    let g = load_map(g_path)?;
    let composed = f.compose(&g)?;
    match format {
        Format::Json => {
            let comps: Vec<String> = composed.components().iter().map(render).collect();
            println!(
                "{}",
                serde_json::json!({"n": composed.domain_dim(), "components": comps})
            );
        }
        Format::Text => print!("{}", composed.to_text()),
    }
    Ok(EXIT_OK)
}

fn cmd_invariants(
    map_path: &Path,
    d: usize,
    nearly: bool,
    format: Format,
) -> Result<u8, CliError> {
    let phi = load_map(map_path)?;
    let basis = if nearly {
        nearly_invariant_basis(&phi, d)
    } else {
        invariant_basis(&phi, d)
    }
    .map_err(|e| CliError::input(e.to_string()))?;
    let rendered: Vec<String> = basis.basis.iter().map(render).collect();
    match format {
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "kind": if nearly { "nearly_invariant" } else { "invariant" },
                "degree_bound": d,
                "basis": rendered,
            })
        ),
        Format::Text => {
            for b in &rendered {
                println!("{b}");
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_classify(matrix_path: &Path, format: Format) -> Result<u8, CliError> {
    let spec = load_spec(matrix_path)?;
    let tag = classify(&spec);
    match format {
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "case": tag.to_string(),
                "rank": spec.rank(),
                "is_keller": spec.is_keller(),
            })
        ),
        Format::Text => {
            println!("case: {tag}");
            println!("rank: {}", spec.rank());
            println!("unit jacobian: {}", spec.is_keller());
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(
    matrix_path: &Path,
    max_m: usize,
    degree_cap: Option<u64>,
    format: Format,
) -> Result<u8, CliError> {
    let spec = load_spec(matrix_path)?;
    if !spec.is_keller() {
        match format {
            Format::Json => println!(
                "{}",
                serde_json::json!({"case": "NOT_KELLER", "vanishing_index": null})
            ),
            Format::Text => println!("verdict: NOT_KELLER"),
        }
        return Ok(EXIT_INPUT);
    }
    let report = verify_theorem(&spec, max_m, degree_cap)?;
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => {
            println!("case: {}", report.case);
            println!(
                "vanishing index: {}",
                report.vanishing_index().expect("verified spec vanished")
            );
            if let Some(inv) = &report.phi_report.inverse {
                println!("inverse:");
                for c in inv.components() {
                    println!("  {}", render(c));
                }
            }
            let i0: Vec<String> = report.witnesses_i0.iter().map(render).collect();
            let i1: Vec<String> = report.witnesses_i1.iter().map(render).collect();
            println!("invariant witnesses: {}", i0.join(", "));
            println!("nearly invariant witnesses: {}", i1.join(", "));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_system1(matrix_path: &Path, format: Format) -> Result<u8, CliError> {
    let spec = load_spec(matrix_path)?;
    let (e1, e2, e3) = system1(&spec)?;
    let all_zero = e1.is_zero() && e2.is_zero() && e3.is_zero();
    match format {
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "E1": render(&e1),
                "E2": render(&e2),
                "E3": render(&e3),
                "all_zero": all_zero,
            })
        ),
        Format::Text => {
            println!("E1 = {}", render(&e1));
            println!("E2 = {}", render(&e2));
            println!("E3 = {}", render(&e3));
            println!("unit jacobian: {}", if all_zero { "yes" } else { "no" });
        }
    }
    Ok(EXIT_OK)
}

fn cmd_case22(drop_lambda_constraint: bool, format: Format) -> Result<u8, CliError> {
    let tree = if drop_lambda_constraint {
        case_2_2_sanity()?
    } else {
        case_2_2_emptiness()
    };
    match format {
        Format::Json => println!("{}", tree.to_json()),
        Format::Text => print!("{tree}"),
    }
    if drop_lambda_constraint {
        // Sanity mode must exhibit at least one satisfiable branch.
        if tree.sat_leaves() == 0 {
            return Err(CliError::internal(
                "sanity mode found no satisfiable branch",
            ));
        }
    } else if !tree.all_unsat() {
        return Err(CliError::internal(
            "emptiness tree contains a satisfiable branch",
        ));
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    strategy: Strategy,
    count: usize,
    seed: u64,
    n: usize,
    out: Option<&Path>,
    max_m: usize,
    degree_cap: Option<u64>,
    entry_range: (i64, i64),
    explore: bool,
    format: Format,
) -> Result<u8, CliError> {
    if n == 4 && !explore {
        return Err(CliError::input(
            "dimension 4 has no verified case analysis; pass --explore to proceed",
        ));
    }
    if entry_range.0 > entry_range.1 {
        return Err(CliError::input("--entry-min must not exceed --entry-max"));
    }
    let mut params = CampaignParams::new(n, strategy, count, seed);
    params.max_m = max_m;
    params.degree_cap = degree_cap;
    params.entry_range = entry_range;
    let campaign = run_campaign(&params, out).map_err(|e| CliError::input(e.to_string()))?;
    match format {
        Format::Json => println!("{}", campaign.summary.to_json()),
        Format::Text => println!("{}", campaign.summary),
    }
    if campaign.summary.anomalies > 0 && n <= 3 {
        return Err(CliError::internal(format!(
            "{} anomalies in dimension {n}; this contradicts the verified case analysis",
            campaign.summary.anomalies
        )));
    }
    Ok(EXIT_OK)
}
