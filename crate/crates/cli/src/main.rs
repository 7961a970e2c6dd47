use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use strainfem::config::{Problem, ProblemConfig};
use strainfem::constraints::patch_reports;
use strainfem::elasticity::{reconstruct_displacement, stresses, Material, P1Field};
use strainfem::harness::{
    convergence_study, csv_string, export_csv, export_vtk, l2_strain_error, make_case, CaseKind,
};
use strainfem::mesh::{euler_check, vertex_patch};
use strainfem::solvers::{compare_to_oracle, p1_strains, solve_classical, solve_direct, SolveReport};
use strainfem::strain_space::{tet_tensors, SymTensor3};
use strainfem::{generate_cube_mesh, Execution, TetMesh};

// stdout may be a closed pipe (e.g. `| head`); output is best effort
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Relative L2 gap accepted between the two solvers.
const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "strainfem", version, about = "Edge-element strain solver for pure-traction linear elasticity")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Kuhn mesh of the unit cube with n cells per side.
    MeshGen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print per-vertex Euler residuals, or constraint counts, as CSV.
    CheckTopology {
        #[arg(long)]
        mesh: PathBuf,
        /// Report the patch constraint counts against the computed null spaces.
        #[arg(long)]
        constraints: bool,
    },
    /// Solve on a mesh and write `<out>.vtk`.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Direct)]
        method: Method,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve with both methods and print the relative strain gap.
    Compare {
        #[arg(long)]
        mesh: PathBuf,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Run a manufactured case on a sequence of cube meshes and write `<out>.csv`.
    Convergence {
        #[arg(long)]
        case: String,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Direct,
    Classical,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, conflicts_with = "config")]
    lambda: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    mu: Option<f64>,
    /// Manufactured case: affine, poly2 or trig.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    case: Option<String>,
    /// TOML file with material and loads.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ProblemArgs {
    fn resolve(&self) -> strainfem::Result<Problem> {
        let cfg = match &self.config {
            Some(path) => ProblemConfig::read(path)?,
            None => ProblemConfig {
                lambda: self.lambda.unwrap_or(1.0),
                mu: self.mu.unwrap_or(1.0),
                case: self.case.clone(),
                body_force: None,
                traction: None,
                project: None,
                compat_tol: None,
            },
        };
        cfg.resolve()
    }
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn check(label: &str, passed: bool) -> bool {
    if !passed {
        eprintln!("check failed: {label}");
    }
    passed
}

fn mesh_gen(n: usize, out: &Path) -> strainfem::Result<bool> {
    if n == 0 {
        return Err(strainfem::Error::Config("n must be positive".into()));
    }
    let mesh = generate_cube_mesh(n);
    mesh.write(out)?;
    say!(
        "wrote {}: {} vertices, {} tets, {} edges",
        out.display(),
        mesh.n_vertices(),
        mesh.n_tets(),
        mesh.n_edges()
    );
    Ok(true)
}

fn check_topology(path: &Path, constraints: bool) -> strainfem::Result<bool> {
    let mesh = TetMesh::read(path)?;
    let mut ok = true;
    if constraints {
        say!("vertex,class,m,null_dim,pass");
        for r in patch_reports(&mesh, Execution::default())? {
            ok &= r.passed();
            say!("{},{},{},{},{}", r.vertex, r.class.as_str(), r.expected, r.null_dim, r.passed());
        }
    } else {
        say!("vertex,class,N,A,Nb,Nib,residual");
        for a in 0..mesh.n_vertices() {
            let p = vertex_patch(&mesh, a)?;
            let chk = euler_check(&p);
            ok &= chk.passed;
            let nib = p.n_interior_boundary.map(|x| x.to_string()).unwrap_or_default();
            say!(
                "{a},{},{},{},{},{nib},{}",
                p.class.as_str(),
                p.n_vertices,
                p.n_edges,
                p.n_boundary,
                chk.residual
            );
        }
    }
    Ok(check("topology", ok))
}

fn report_error(mesh: &TetMesh, problem: &Problem, strains: &[SymTensor3]) -> strainfem::Result<()> {
    if let Some(case) = &problem.case {
        say!("L2 strain error vs {}: {:.6e}", case.name(), l2_strain_error(mesh, strains, case)?);
    }
    Ok(())
}

fn print_report(r: &SolveReport) {
    say!(
        "direct: {} edge DOFs, KKT dimension {}, factor nnz {}, {} refinements, {:.3}s",
        r.dofs.len(),
        r.kkt_dim,
        r.factor_nnz,
        r.refinements,
        r.seconds
    );
    say!(
        "j = {:.12e}, |Cd| = {:.3e}, stationarity residual {:.3e}",
        r.objective, r.constraint_residual, r.stationarity_residual
    );
}

fn solve(mesh_path: &Path, method: Method, args: &ProblemArgs, out: &Path) -> strainfem::Result<bool> {
    let mesh = TetMesh::read(mesh_path)?;
    let problem = args.resolve()?;
    let mat = problem.material;
    let (strains, displacement, ok) = match method {
        Method::Direct => {
            let r = solve_direct(&mesh, &mat, &problem.loads)?;
            print_report(&r);
            let strains = tet_tensors(&mesh, &r.dofs)?;
            let (u, residual) = reconstruct_displacement(&mesh, &r.dofs)?;
            say!("reconstruction residual {residual:.3e}");
            let ok = check("compatible strain", residual <= 1e-10 * r.dofs.norm().max(1.0));
            (strains, u, ok)
        }
        Method::Classical => {
            let u = solve_classical(&mesh, &mat, &problem.loads)?;
            say!("classical: {} nodal DOFs", 3 * mesh.n_vertices());
            (p1_strains(&mesh, &u), u, true)
        }
    };
    report_error(&mesh, &problem, &strains)?;
    let path = with_extension(out, "vtk");
    export_vtk(&mesh, &strains, &stresses(&mat, &strains), &displacement, &path)?;
    say!("wrote {}", path.display());
    Ok(ok)
}

fn compare(mesh_path: &Path, args: &ProblemArgs) -> strainfem::Result<bool> {
    let mesh = TetMesh::read(mesh_path)?;
    let problem = args.resolve()?;
    let r = solve_direct(&mesh, &problem.material, &problem.loads)?;
    print_report(&r);
    let oracle: P1Field = solve_classical(&mesh, &problem.material, &problem.loads)?;
    let gap = compare_to_oracle(&mesh, &r, &oracle)?;
    say!("relative L2 strain gap to classical solution: {gap:.3e}");
    report_error(&mesh, &problem, &tet_tensors(&mesh, &r.dofs)?)?;
    Ok(check("solver agreement", gap < ORACLE_TOLERANCE))
}

fn convergence(case: &str, levels: &[usize], lambda: f64, mu: f64, out: &Path) -> strainfem::Result<bool> {
    let mat = Material::new(lambda, mu)?;
    let case = make_case(case, mat)?;
    let table = convergence_study(&case, levels, &mat)?;
    say!("{}", csv_string(&table).trim_end());
    if let Some(slope) = table.fitted_slope() {
        say!("least-squares slope {slope:.4}");
    }
    let path = with_extension(out, "csv");
    export_csv(&table, &path)?;
    say!("wrote {}", path.display());
    let mut ok = check("solver agreement", table.max_oracle_gap() < ORACLE_TOLERANCE);
    ok &= if case.kind == CaseKind::Affine {
        check("exact constant strain", table.rows.iter().all(|r| r.err < 1e-9))
    } else {
        check("decreasing errors", table.strictly_decreasing())
    };
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Ok(v) = std::env::var("STRAINFEM_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = strainfem::par::limit_threads(n) {
                    eprintln!("warning: could not limit threads: {e}");
                }
            }
            _ => {
                eprintln!("error: STRAINFEM_THREADS must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        }
    }

    let result = match &cli.command {
        Command::MeshGen { n, out } => mesh_gen(*n, out),
        Command::CheckTopology { mesh, constraints } => check_topology(mesh, *constraints),
        Command::Solve {
            mesh,
            method,
            problem,
            out,
        } => solve(mesh, *method, problem, out),
        Command::Compare { mesh, problem } => compare(mesh, problem),
        Command::Convergence {
            case,
            levels,
            lambda,
            mu,
            out,
        } => convergence(case, levels, *lambda, *mu, out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
