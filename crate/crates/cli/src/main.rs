//! `kirchhoff`: graphs, decompositions, boundary quadruples, evolutions and
//! the acceptance suite from the command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use kirchhoff_core::decomp::{check_domain, ibp_check, key_decompose};
use kirchhoff_core::generator::catalog::circles_theta;
use kirchhoff_core::generator::galerkin::{evolve_cn, CnOptions};
use kirchhoff_core::generator::scattering::{evolve_scattering, ScatteringOptions};
use kirchhoff_core::generator::{resolvent_solve, CatalogCase, Generator, Trajectory};
use kirchhoff_core::graph::{EdgeFunction, MetricGraph};
use kirchhoff_core::hodge::{check_field, cycle_basis, hodge_decompose, VelocityField};
use kirchhoff_core::quadruple::{
    build_quadruple, check_contraction, quadruple_identity_check, theta_from_csv, BoundaryVector, Side,
};
use kirchhoff_core::report::{fmt17, to_json};
use kirchhoff_core::sampling::random_domain_poly;
use kirchhoff_core::sierpinski::{convergence_experiment, cylindrical_solution, sg_graph, CylindricalCase};
use kirchhoff_core::{fixtures, verify, KirchhoffError};

const CHECK_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "kirchhoff", version, about = "Transport equations on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graph documents.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Velocity fields.
    Field {
        #[command(subcommand)]
        action: FieldAction,
    },
    /// Split a 1-form (or a field) into exact and cycle parts.
    Hodge(HodgeArgs),
    /// Key decomposition f = g + ★⁻¹∂u + w of a domain element.
    Decompose(DecomposeArgs),
    /// Integration-by-parts residuals.
    IbpCheck(PairArgs),
    /// Boundary quadruple.
    Quadruple {
        #[command(subcommand)]
        action: QuadrupleAction,
    },
    /// Evolve ∂_t v = A^Θ v, or apply the resolvent with --lambda.
    Evolve(EvolveArgs),
    /// Gasket graphs and cylindrical solutions.
    Sg {
        #[command(subcommand)]
        action: SgAction,
    },
    /// The acceptance suite.
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Graph document (JSON).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Built-in graph name.
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Args, Clone)]
struct GraphField {
    #[command(flatten)]
    source: GraphSource,
    /// Name of the velocity field in the graph document.
    #[arg(long, default_value = "b")]
    field: String,
}

#[derive(Subcommand)]
enum GraphAction {
    Validate {
        #[command(flatten)]
        source: GraphSource,
    },
}

#[derive(Subcommand)]
enum FieldAction {
    Check(GraphField),
}

#[derive(Args)]
struct HodgeArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Edge function (JSON) to split; the named field is used otherwise.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "b")]
    field: String,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    graph: GraphField,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    graph: GraphField,
    /// First function; random domain elements are used without it.
    #[arg(long, requires = "input2")]
    input: Option<PathBuf>,
    #[arg(long)]
    input2: Option<PathBuf>,
    /// Number of random pairs.
    #[arg(long, default_value_t = 20)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum QuadrupleAction {
    Check {
        #[command(flatten)]
        pair: PairArgs,
        /// Θ as CSV; reports whether it is a contraction.
        #[arg(long)]
        theta: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Cn,
    Scattering,
}

#[derive(Args)]
struct EvolveArgs {
    /// Catalogued case, e.g. `circles:-1`, `k1-id`, `sg-011:2`.
    #[arg(long, conflicts_with_all = ["graph", "builtin"])]
    case: Option<String>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, default_value = "b")]
    field: String,
    /// Θ as an ambient matrix in CSV.
    #[arg(long, conflicts_with = "theta_bar")]
    theta: Option<PathBuf>,
    /// Transmission parameter on two equal circles.
    #[arg(long, allow_hyphen_values = true)]
    theta_bar: Option<f64>,
    /// Scattering evolution with the vertex rules of a catalogued case.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Initial value (JSON edge function); a bump on the first edge otherwise.
    #[arg(long)]
    initial: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Keep a snapshot every this many steps.
    #[arg(long, default_value_t = 100)]
    snapshots: usize,
    /// Subintervals of the sampled snapshots.
    #[arg(long, default_value_t = 128)]
    samples: usize,
    /// Solve (λ − A^Θ) f = initial instead of evolving.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SgCase {
    #[value(name = "011")]
    Reduced011,
    #[value(name = "half01")]
    Half01,
}

impl From<SgCase> for CylindricalCase {
    fn from(c: SgCase) -> Self {
        match c {
            SgCase::Reduced011 => CylindricalCase::Reduced011,
            SgCase::Half01 => CylindricalCase::Half01,
        }
    }
}

#[derive(Subcommand)]
enum SgAction {
    /// Level-m graph document with the harmonic fields of both cases.
    Build {
        #[arg(long)]
        level: usize,
        #[arg(long)]
        reduced: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// `V(h − t)` with `V(y) = 1 + ½ sin 2πy`, sampled on every edge.
    Cylindrical {
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum)]
        case: SgCase,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sup-error table of the level-m approximations.
    Converge {
        #[arg(long, value_enum)]
        case: SgCase,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 11)]
        t_samples: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VerifyAction {
    All {
        /// Only the embedded fixtures are supported.
        #[arg(long, default_value = "builtin")]
        fixtures: String,
        /// Run a single criterion.
        #[arg(long)]
        only: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Check(String),
    Error(KirchhoffError),
}

impl From<KirchhoffError> for Failure {
    fn from(e: KirchhoffError) -> Self {
        match e {
            KirchhoffError::NotInCatalog(_) => Failure::Usage(e.to_string()),
            e => Failure::Error(e),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, KirchhoffError> {
    fs::read_to_string(path).map_err(|e| KirchhoffError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Writes `text` to `dir/name`, or to standard output without a directory.
fn emit(output: Option<&Path>, name: &str, text: &str) -> Outcome {
    match output {
        Some(dir) => {
            let path = dir.join(name);
            let io = |e: std::io::Error| KirchhoffError::Io { path: path.display().to_string(), message: e.to_string() };
            fs::create_dir_all(dir).map_err(io)?;
            fs::write(&path, text).map_err(io)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            let nl = if text.ends_with('\n') { "" } else { "\n" };
            match write!(out, "{text}{nl}").and_then(|()| out.flush()) {
                // a closed pipe (`| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(Failure::Error(KirchhoffError::Io { path: "<stdout>".into(), message: e.to_string() }));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn load_graph(graph: Option<&Path>, builtin: Option<&str>) -> Result<MetricGraph, Failure> {
    match (graph, builtin) {
        (Some(p), _) => Ok(MetricGraph::from_json(&read(p)?)?),
        (None, Some(name)) => fixtures::builtin(name).map_err(|_| {
            Failure::Usage(format!("unknown built-in graph {name} (known: {})", fixtures::BUILTIN_NAMES.join(", ")))
        }),
        (None, None) => Err(Failure::Usage("one of --graph, --builtin is required".into())),
    }
}

fn load_source(s: &GraphSource) -> Result<MetricGraph, Failure> {
    load_graph(s.graph.as_deref(), s.builtin.as_deref())
}

fn load_field(g: &MetricGraph, name: &str) -> Result<VelocityField, Failure> {
    Ok(check_field(g, &g.field(name)?)?)
}

fn load_function(path: &Path) -> Result<EdgeFunction, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Error(KirchhoffError::Parse(format!("{}: {e}", path.display()))))
}

fn by_vertex(g: &MetricGraph, xs: &[f64]) -> Value {
    Value::Object(g.vertices().iter().zip(xs).map(|(id, x)| (id.clone(), json!(x))).collect::<Map<_, _>>())
}

fn by_edge(g: &MetricGraph, xs: &[f64]) -> Value {
    Value::Object(g.edges().iter().zip(xs).map(|(e, x)| (e.id.clone(), json!(x))).collect::<Map<_, _>>())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Graph { action: GraphAction::Validate { source } } => {
            let g = load_source(&source)?;
            let report = json!({
                "vertices": g.vertex_count(),
                "edges": g.edge_count(),
                "cycle_rank": g.cycle_rank(),
                "boundary": g.boundary().iter().map(|&q| g.vertex_id(q)).collect::<Vec<_>>(),
                "root": g.vertex_id(g.root()),
                "fields": g.field_names(),
            });
            emit(None, "", &to_json(&report))
        }
        Command::Field { action: FieldAction::Check(args) } => {
            let g = load_source(&args.source)?;
            let b = load_field(&g, &args.field)?;
            let report = json!({
                "field": args.field,
                "divergence_free": b.divergence_free(),
                "solenoidal": b.solenoidal(),
                "minimal_energy_dominant": b.minimal_energy_dominant(),
                "vertex_balance": by_vertex(&g, b.vertex_balance()),
            });
            emit(None, "", &to_json(&report))?;
            b.require_valid(&g).map_err(|e| Failure::Check(e.to_string()))
        }
        Command::Hodge(args) => {
            let g = load_source(&args.source)?;
            let form = match &args.input {
                Some(p) => load_function(p)?,
                None => EdgeFunction::constants(&g.field(&args.field)?),
            };
            let split = hodge_decompose(&g, &cycle_basis(&g), &form)?;
            let report = json!({
                "potential": by_vertex(&g, split.g.vertex_values()),
                "cycle_part": by_edge(&g, &split.v),
            });
            emit(None, "", &to_json(&report))
        }
        Command::Decompose(args) => {
            let g = load_source(&args.graph.source)?;
            let b = load_field(&g, &args.graph.field)?;
            let f = load_function(&args.input)?;
            let dom = check_domain(&g, &b, &f)?;
            if !dom.in_domain {
                return Err(Failure::Check(format!("input violates the weighted Kirchhoff condition ({:e})", dom.max_residual)));
            }
            let k = key_decompose(&g, &b, &f)?;
            emit(args.output.as_deref(), "decomposition.json", &to_json(&k))
        }
        Command::IbpCheck(args) => {
            let g = load_source(&args.graph.source)?;
            let b = load_field(&g, &args.graph.field)?;
            let pairs = function_pairs(&g, &b, &args)?;
            let mut residuals = Vec::new();
            for (f1, f2) in &pairs {
                residuals.push(ibp_check(&g, &b, f1, f2)?.residual);
            }
            finish_residuals("integration by parts", residuals)
        }
        Command::Quadruple { action: QuadrupleAction::Check { pair, theta } } => {
            let g = load_source(&pair.graph.source)?;
            let b = load_field(&g, &pair.graph.field)?;
            let spaces = build_quadruple(&g, &b)?;
            let mut residuals = Vec::new();
            for (f1, f2) in &function_pairs(&g, &b, &pair)? {
                residuals.push(quadruple_identity_check(&spaces, f1, f2)?.residual);
            }
            let max = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
            let mut report = json!({
                "ambient_dim": spaces.ambient_dim(),
                "dim": spaces.dim(),
                "labels": spaces.labels(),
                "weights": spaces.weights().iter().copied().collect::<Vec<_>>(),
                "removed_minus": BoundaryVector::new(&spaces, spaces.removed_direction(Side::Minus)),
                "removed_plus": BoundaryVector::new(&spaces, spaces.removed_direction(Side::Plus)),
                "pairs": residuals.len(),
                "max_residual": max,
            });
            let mut contraction_ok = true;
            if let Some(path) = theta {
                let t = theta_from_csv(&read(&path)?)?;
                let c = check_contraction(&spaces, &t)?;
                contraction_ok = c.is_contraction;
                report["theta_norm"] = json!(c.norm);
                report["theta_is_contraction"] = json!(c.is_contraction);
            }
            emit(None, "", &to_json(&report))?;
            if max > CHECK_TOL {
                return Err(Failure::Check(format!("quadruple identity residual {max:e}")));
            }
            if !contraction_ok {
                return Err(Failure::Check("Θ is not a contraction".into()));
            }
            Ok(())
        }
        Command::Evolve(args) => evolve(args),
        Command::Sg { action } => sg(action),
        Command::Verify { action: VerifyAction::All { fixtures, only, output } } => {
            if fixtures != "builtin" {
                return Err(Failure::Usage(format!("unknown fixture set {fixtures} (only `builtin`)")));
            }
            let report = match only {
                Some(id) if verify::CRITERIA.iter().any(|c| c.0 == id) => {
                    let r = verify::run_criterion(id);
                    verify::VerifyReport { passed: r.passed, criteria: vec![r] }
                }
                Some(id) => return Err(Failure::Usage(format!("no criterion {id}"))),
                None => verify::run_all(),
            };
            for r in &report.criteria {
                eprintln!("{}", r.summary_line());
            }
            emit(output.as_deref(), "verify.json", &to_json(&report))?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<String> = report.criteria.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
                Err(Failure::Check(format!("criteria {} failed", failed.join(", "))))
            }
        }
    }
}

fn function_pairs(g: &MetricGraph, b: &VelocityField, args: &PairArgs) -> Result<Vec<(EdgeFunction, EdgeFunction)>, Failure> {
    if let (Some(p1), Some(p2)) = (&args.input, &args.input2) {
        return Ok(vec![(load_function(p1)?, load_function(p2)?)]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    (0..args.random)
        .map(|_| Ok((random_domain_poly(g, b, &mut rng, 3)?, random_domain_poly(g, b, &mut rng, 3)?)))
        .collect()
}

fn finish_residuals(what: &str, residuals: Vec<f64>) -> Outcome {
    let max = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    emit(None, "", &to_json(&json!({ "pairs": residuals.len(), "max_residual": max, "residuals": residuals })))?;
    if max > CHECK_TOL {
        return Err(Failure::Check(format!("{what} residual {max:e}")));
    }
    Ok(())
}

/// The generator and, for catalogued cases, the case itself.
fn evolve_setup(args: &EvolveArgs) -> Result<(Generator, Option<CatalogCase>), Failure> {
    let tag = match (&args.case, &args.rule) {
        (Some(c), Some(r)) if c != r => return Err(Failure::Usage("--case and --rule name different cases".into())),
        (c, r) => c.clone().or_else(|| r.clone()),
    };
    if let Some(tag) = tag {
        if args.theta.is_some() || args.theta_bar.is_some() {
            return Err(Failure::Usage("--theta/--theta-bar apply to --graph/--builtin only".into()));
        }
        let case = CatalogCase::parse(&tag)?;
        return Ok((case.generator()?, Some(case)));
    }
    let g = load_graph(args.graph.as_deref(), args.builtin.as_deref())?;
    let b = load_field(&g, &args.field)?;
    let spaces = build_quadruple(&g, &b)?;
    let n = spaces.ambient_dim();
    let theta = match (&args.theta, args.theta_bar) {
        (Some(p), _) => theta_from_csv(&read(p)?)?,
        (None, Some(tb)) => {
            let loops = g.edge_count() == 2 && g.edges().iter().all(|e| e.is_loop());
            if !loops || b.b(0) != b.b(1) || b.b(0) <= 0.0 {
                return Err(Failure::Usage("--theta-bar needs two loops with equal positive b".into()));
            }
            DMatrix::identity(n, n) * circles_theta(tb, b.b(0))
        }
        (None, None) => return Err(Failure::Usage("one of --theta, --theta-bar, --case, --rule is required".into())),
    };
    Ok((Generator::new(spaces, theta)?, None))
}

fn bump(e: usize, x: f64) -> f64 {
    if e == 0 {
        (4.0 * x * (1.0 - x)).powi(4)
    } else {
        0.0
    }
}

fn evolve(args: EvolveArgs) -> Outcome {
    let (gen, case) = evolve_setup(&args)?;
    let g = gen.graph().clone();
    let initial = args.initial.as_deref().map(load_function).transpose()?;
    if let Some(f) = &initial {
        g.check_len(f)?;
    }
    let v0 = |e: usize, x: f64| initial.as_ref().map_or_else(|| bump(e, x), |f| f.eval(e, x));

    if let Some(lambda) = args.lambda {
        let rhs = initial.clone().unwrap_or_else(|| EdgeFunction::from_fn(g.edge_count(), args.samples, bump));
        let f = resolvent_solve(&gen, lambda, &rhs)?;
        return emit(args.output.as_deref(), "resolvent.json", &to_json(&f));
    }

    let method = match (args.method, &args.rule) {
        (Some(Method::Cn), Some(_)) => return Err(Failure::Usage("--rule implies the scattering method".into())),
        (Some(m), _) => m,
        (None, Some(_)) => Method::Scattering,
        (None, None) => Method::Cn,
    };
    let traj: Trajectory = match method {
        Method::Cn => {
            let opts = CnOptions::new(args.dt, args.t_end).with_resolution(args.samples).snapshots_every(args.snapshots);
            evolve_cn(&gen, &v0, opts)?
        }
        Method::Scattering => {
            let rules = match &case {
                Some(c) => c.scattering_rules(&gen)?,
                None => return Err(Failure::Usage("scattering needs a catalogued case (--case or --rule)".into())),
            };
            let opts = ScatteringOptions { snapshot_every: args.snapshots, ..ScatteringOptions::new(args.dt, args.t_end, args.samples) };
            evolve_scattering(&g, gen.field(), &rules, &v0, opts)?
        }
    };
    match args.output.as_deref() {
        Some(dir) => {
            emit(Some(dir), "trajectory.csv", &traj.to_csv(&g))?;
            emit(Some(dir), "diagnostics.csv", &traj.diagnostics_csv(&g))?;
            let per_snapshot: Vec<_> = traj.diagnostics.iter().filter(|d| traj.times.contains(&d.t)).collect();
            let summary = json!({
                "boundary": g.boundary().iter().map(|&q| g.vertex_id(q)).collect::<Vec<_>>(),
                "snapshots": per_snapshot,
            });
            emit(Some(dir), "summary.json", &to_json(&summary))
        }
        None => emit(None, "", &traj.to_csv(&g)),
    }
}

/// `1 + ½ sin 2πy`.
fn profile(y: f64) -> f64 {
    1.0 + 0.5 * (2.0 * std::f64::consts::PI * y).sin()
}

fn sg(action: SgAction) -> Outcome {
    match action {
        SgAction::Build { level, reduced, output } => {
            let sg = sg_graph(level, reduced)?;
            let mut doc = sg.graph.to_document();
            for case in [CylindricalCase::Reduced011, CylindricalCase::Half01] {
                if case.reduced() != reduced {
                    continue;
                }
                let (_, _, b) = case.graph(level)?;
                let name = if case.reduced() { "b011" } else { "bhalf01" };
                doc.fields.insert(name.into(), g_edges(&sg.graph, b.coeffs()));
            }
            emit(output.as_deref(), "graph.json", &to_json(&doc))
        }
        SgAction::Cylindrical { level, case, t, samples, output } => {
            let (sg, h, _) = CylindricalCase::from(case).graph(level)?;
            let v = cylindrical_solution(&sg.graph, &h, &profile, t, samples, None)?;
            let mut out = String::from("edge,sample,value\n");
            for (e, vals) in v.components().iter().enumerate() {
                for (i, x) in vals.iter().enumerate() {
                    out.push_str(&format!("{},{},{}\n", sg.graph.edge(e).id, i, fmt17(*x)));
                }
            }
            emit(output.as_deref(), "cylindrical.csv", &out)
        }
        SgAction::Converge { case, levels, t_samples, output } => {
            let rows = convergence_experiment(&profile, std::f64::consts::PI, case.into(), &levels, t_samples)?;
            let mut out = String::from("level,sup_error,bound\n");
            for r in &rows {
                out.push_str(&format!("{},{},{}\n", r.level, fmt17(r.sup_error), fmt17(r.bound)));
            }
            emit(output.as_deref(), "convergence.csv", &out)?;
            if rows.windows(2).any(|w| w[1].sup_error >= w[0].sup_error) {
                return Err(Failure::Check("errors are not strictly decreasing".into()));
            }
            if rows.iter().any(|r| r.sup_error > r.bound) {
                return Err(Failure::Check("an error exceeds its oscillation bound".into()));
            }
            Ok(())
        }
    }
}

fn g_edges(g: &MetricGraph, xs: &[f64]) -> std::collections::BTreeMap<String, f64> {
    g.edges().iter().zip(xs).map(|(e, x)| (e.id.clone(), *x)).collect()
}
