//! Command-line front end: solve problems, run benchmark matrices, inspect
//! bases and sparsity patterns, export SDPA files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use symsos::bench::{
    build_ring_ising, build_robinson, build_symmetric_quartic, build_torus_grid, run_matrix, write_csv, Method,
    QuarticParams,
};
use symsos::groups::builtin_irreps;
use symsos::ipsolver::{SolveStatus, SolverConfig};
use symsos::polyring::{parse_rational, Polynomial};
use symsos::problem::ProblemInstance;
use symsos::relax::{Relaxation, RelaxationConfig, Sparsity};
use symsos::sabasis::{symmetry_adapted_basis, ComponentPolys};
use symsos::sdpbuild::tensor::CoefficientTensor;
use symsos::sdpbuild::{export_sdpa, sdp_coefficients, EqualityMode};
use symsos::tsp::{block_profile, ClosureMode, SupportSource, TspConfig, TspState};

const EXIT_NON_OPTIMAL: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "symsos", version, about = "Symmetry-adapted, term-sparse moment-SOS relaxations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and solve one relaxation.
    Solve(SolveArgs),
    /// Run a method comparison on a benchmark family and write CSV.
    Bench(BenchArgs),
    /// Print the symmetry-adapted basis.
    Basis(BasisArgs),
    /// Write the relaxation in sparse SDPA format.
    ExportSdpa(ExportArgs),
    /// Dump block profiles and support sets of the sparsity iteration.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Closure {
    Maximal,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum Support {
    PreClosure,
    Closure,
}

impl From<Support> for SupportSource {
    fn from(s: Support) -> Self {
        match s {
            Support::PreClosure => SupportSource::PreClosure,
            Support::Closure => SupportSource::Closure,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverChoice {
    Internal,
    ExportOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum Equalities {
    Pair,
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct RelaxArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Relaxation order; defaults to the minimum admissible order.
    #[arg(long)]
    order: Option<usize>,
    /// Sparsity order, `fix` for the fixpoint, or `dense`.
    #[arg(long, default_value = "dense")]
    sparsity: Sparsity,
    #[arg(long, value_enum, default_value = "maximal")]
    closure: Closure,
    #[arg(long, value_enum, default_value = "on")]
    diagonal_squares: Switch,
    /// Matrix the next sparsity supports are read from.
    #[arg(long, value_enum, default_value = "pre-closure")]
    support: Support,
    /// How equality constraints enter the relaxation.
    #[arg(long, value_enum, default_value = "pair")]
    equalities: Equalities,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    relax: RelaxArgs,
    #[arg(long, value_enum, default_value = "internal")]
    solver: SolverChoice,
    /// SDPA output for `--solver export-only` (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Ring,
    Torus,
    SymmetricQuartic,
    Robinson,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    family: Family,
    /// Number of variables (ring, symmetric quartic).
    #[arg(short, long)]
    n: Option<usize>,
    /// Grid rows (torus).
    #[arg(short, long, default_value_t = 2)]
    p: usize,
    /// Grid columns (torus).
    #[arg(short, long, default_value_t = 3)]
    q: usize,
    /// Quartic coefficients `a,b,c,d` (ring, torus).
    #[arg(long, default_value = "1,-1,1,-1")]
    params: String,
    /// Relaxation orders.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    orders: Vec<usize>,
    /// Sparsity orders for the sparse methods.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    sparsity_orders: Vec<usize>,
    /// Matrix the sparse methods read their next supports from.
    #[arg(long, value_enum, default_value = "pre-closure")]
    support: Support,
    /// Method tags to run (all when omitted).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// CSV output (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BasisArgs {
    problem: PathBuf,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    relax: RelaxArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    relax: RelaxArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
        Command::Basis(args) => basis(args),
        Command::ExportSdpa(args) => export(args),
        Command::Analyze(args) => analyze(args),
    }
}

fn load(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut problem = ProblemInstance::from_json(&text).with_context(|| format!("loading {}", path.display()))?;
    if problem.name.is_empty() {
        problem.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(problem)
}

fn minimum_order(problem: &ProblemInstance) -> usize {
    let constraints: Vec<Polynomial> = problem.constraints.iter().map(|c| c.poly.clone()).collect();
    symsos::sdpbuild::tensor::min_order(&problem.objective, &constraints)
}

impl RelaxArgs {
    fn config(&self, problem: &ProblemInstance) -> RelaxationConfig {
        let closure = match self.closure {
            Closure::Maximal => ClosureMode::Maximal,
            Closure::Md => ClosureMode::MinDegree,
        };
        if closure == ClosureMode::MinDegree && self.sparsity != Sparsity::Dense {
            eprintln!(
                "warning: chordal (md) closure does not guarantee convergence of the sparse bounds to the dense bound"
            );
        }
        RelaxationConfig {
            order: self.order.unwrap_or_else(|| minimum_order(problem)),
            sparsity: self.sparsity,
            tsp: TspConfig {
                diagonal_squares: matches!(self.diagonal_squares, Switch::On),
                closure,
                support: self.support.into(),
            },
            equality_mode: match self.equalities {
                Equalities::Pair => EqualityMode::Pair,
                Equalities::Free => EqualityMode::FreeMultiplier,
            },
        }
    }

    fn build(&self) -> Result<(ProblemInstance, RelaxationConfig, Relaxation)> {
        let problem = load(&self.problem)?;
        let cfg = self.config(&problem);
        let relax = Relaxation::build(&problem, &cfg)?;
        Ok((problem, cfg, relax))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let (problem, cfg, mut relax) = args.relax.build()?;
    if args.solver == SolverChoice::ExportOnly {
        write_output(args.output.as_deref(), &export_sdpa(&relax.sdp))?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut solver = SolverConfig::default();
    if let Some(it) = args.max_iterations {
        solver.max_iterations = it;
    }
    solver.validate()?;
    let sol = relax.solve(&solver);
    let t = relax.timings;
    let record = json!({
        "instance": problem.name,
        "r": cfg.order,
        "sparsity": cfg.sparsity.to_string(),
        "s": relax.s(),
        "closure": cfg.tsp.closure,
        "diagonal_squares": cfg.tsp.diagonal_squares,
        "blocks": relax.profile(),
        "max_block": relax.sdp.max_block(),
        "n_scalar_constraints": relax.sdp.n_scalar_constraints(),
        "n_matrix_constraints": relax.sdp.n_matrix_constraints(),
        "status": sol.status,
        "bound": finite_or_null(sol.bound),
        "moment_value": finite_or_null(sol.moment_value),
        "gap": finite_or_null(sol.gap),
        "iterations": sol.iterations,
        "primal_infeasibility": sol.primal_infeasibility,
        "dual_infeasibility": sol.dual_infeasibility,
        "seconds": {"basis": t.basis, "tsp": t.tsp, "assembly": t.assembly, "solve": t.solve, "total": t.total()},
    });
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&record)?),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["instance", "r", "s", "blocks", "status", "bound", "seconds"])?;
            w.write_record([
                problem.name.clone(),
                cfg.order.to_string(),
                relax.s().to_string(),
                relax.profile(),
                sol.status.to_string(),
                format!("{:.8}", sol.bound),
                format!("{:.3}", t.total()),
            ])?;
            w.flush()?;
        }
        Format::Text => {
            println!("instance  {}", problem.name);
            println!("order     r={} sparsity={} (reached s={})", cfg.order, cfg.sparsity, relax.s());
            println!("blocks    {}", relax.profile());
            println!(
                "sizes     max block {}, {} scalar constraints, {} matrix constraints",
                relax.sdp.max_block(),
                relax.sdp.n_scalar_constraints(),
                relax.sdp.n_matrix_constraints()
            );
            println!("status    {}", sol.status);
            println!("bound     {:.8}", sol.bound);
            println!("moments   {:.8}", sol.moment_value);
            println!(
                "residuals primal {:.2e}, dual {:.2e}, {} iterations",
                sol.primal_infeasibility, sol.dual_infeasibility, sol.iterations
            );
            println!(
                "time      {:.3}s (basis {:.3}, tsp {:.3}, assembly {:.3}, solve {:.3})",
                t.total(),
                t.basis,
                t.tsp,
                t.assembly,
                t.solve
            );
        }
    }
    Ok(if sol.status == SolveStatus::Optimal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NON_OPTIMAL)
    })
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn csv_writer() -> csv::Writer<std::io::Stdout> {
    csv::Writer::from_writer(std::io::stdout())
}

fn parse_params(text: &str) -> Result<QuarticParams> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b, c, d] = parts.as_slice() else {
        bail!("--params expects four comma-separated coefficients a,b,c,d");
    };
    Ok(QuarticParams {
        a: parse_rational(a)?,
        b: parse_rational(b)?,
        c: parse_rational(c)?,
        d: parse_rational(d)?,
    })
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let params = parse_params(&args.params)?;
    let problem = match args.family {
        Family::Ring => build_ring_ising(args.n.unwrap_or(6), &params)?,
        Family::Torus => build_torus_grid(args.p, args.q, &params)?,
        Family::SymmetricQuartic => build_symmetric_quartic(args.n.unwrap_or(6))?,
        Family::Robinson => build_robinson(),
    };
    let methods: Vec<Method> = if args.methods.is_empty() {
        Method::all()
    } else {
        let known = Method::all();
        for tag in &args.methods {
            if !known.iter().any(|m| m.tag() == tag) {
                bail!("unknown method `{tag}`");
            }
        }
        known.into_iter().filter(|m| args.methods.iter().any(|t| t == m.tag())).collect()
    };
    let methods: Vec<Method> = methods.into_iter().map(|m| m.with_support(args.support.into())).collect();
    if args.orders.is_empty() {
        bail!("--orders must list at least one relaxation order");
    }
    let records = run_matrix(
        &problem,
        &methods,
        &args.orders,
        &args.sparsity_orders,
        &SolverConfig::default(),
        args.workers,
    );
    match &args.output {
        Some(path) => write_csv(&records, fs::File::create(path).with_context(|| format!("creating {}", path.display()))?)?,
        None => write_csv(&records, std::io::stdout())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn float_poly(p: &Polynomial<f64>) -> String {
    let mut out = String::new();
    for (e, c) in p.terms() {
        let mono: Vec<String> = e
            .exponents()
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(i, &k)| if k == 1 { format!("x{}", i + 1) } else { format!("x{}^{k}", i + 1) })
            .collect();
        let sign = if c < &0.0 { " - " } else if out.is_empty() { "" } else { " + " };
        let sign = if out.is_empty() && c < &0.0 { "-" } else { sign };
        let body = if mono.is_empty() {
            format!("{}", c.abs())
        } else {
            format!("{}*{}", c.abs(), mono.join("*"))
        };
        out.push_str(sign);
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn basis(args: BasisArgs) -> Result<ExitCode> {
    let problem = load(&args.problem)?;
    let order = args.order.unwrap_or_else(|| minimum_order(&problem));
    let group = problem.group.group()?;
    let irreps = builtin_irreps(&problem.group, &group)?;
    let sab = symmetry_adapted_basis(&group, &irreps, order)?;
    let components: Vec<(String, usize, Vec<String>)> = sab
        .components
        .iter()
        .map(|c| {
            let polys = match &c.polys {
                ComponentPolys::Exact(ps) => ps.iter().map(|p| p.to_string()).collect(),
                ComponentPolys::Numeric(ps) => ps.iter().map(float_poly).collect(),
            };
            (c.name.clone(), c.irrep_dim, polys)
        })
        .collect();
    match args.format {
        Format::Json => {
            let comps: Vec<Value> = components
                .iter()
                .map(|(name, dim, polys)| json!({"name": name, "irrep_dim": dim, "size": polys.len(), "basis": polys}))
                .collect();
            let out = json!({"group_order": group.order(), "order": order, "sizes": sab.sizes(), "components": comps});
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["component", "irrep_dim", "index", "polynomial"])?;
            for (name, dim, polys) in &components {
                for (j, p) in polys.iter().enumerate() {
                    w.write_record([name.clone(), dim.to_string(), (j + 1).to_string(), p.clone()])?;
                }
            }
            w.flush()?;
        }
        Format::Text => {
            println!("group order {}, relaxation order {order}, sizes {:?}", group.order(), sab.sizes());
            for (name, dim, polys) in &components {
                println!("{name} (dimension {dim}, {} elements)", polys.len());
                for p in polys {
                    println!("  {p}");
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn export(args: ExportArgs) -> Result<ExitCode> {
    let (_, _, relax) = args.relax.build()?;
    write_output(Some(&args.output), &export_sdpa(&relax.sdp))?;
    Ok(ExitCode::SUCCESS)
}

/// One `(s, component, constraint)` row of the analysis.
struct PatternRow {
    s: usize,
    component: String,
    constraint: usize,
    blocks: Vec<usize>,
    support: Vec<String>,
}

fn pattern_rows(state: &TspState, tensor: &CoefficientTensor, names: &[String], label: &dyn Fn(usize) -> String) -> Vec<PatternRow> {
    let mut rows = Vec::new();
    for (i, comp) in state.patterns.iter().enumerate() {
        for (k, pat) in comp.iter().enumerate() {
            if tensor.block(i, k).size == 0 {
                continue;
            }
            rows.push(PatternRow {
                s: state.s,
                component: names[i].clone(),
                constraint: k,
                blocks: pat.cliques.iter().map(|c| c.len()).collect(),
                support: state.supports[i][k].iter().map(|&j| label(j)).collect(),
            });
        }
    }
    rows
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    let problem = load(&args.relax.problem)?;
    let cfg = args.relax.config(&problem);
    let group = problem.group.group()?;
    let irreps = builtin_irreps(&problem.group, &group)?;
    let sab = symmetry_adapted_basis(&group, &irreps, cfg.order)?;
    let tensor = sdp_coefficients(
        &problem.objective,
        &problem.inequalities(),
        &problem.equalities(),
        cfg.equality_mode,
        &sab,
    )?;
    let names: Vec<String> = sab.components.iter().map(|c| c.name.clone()).collect();
    let label = |j: usize| sab.invariant.pattern_label(j);

    let target = match cfg.sparsity {
        Sparsity::Dense | Sparsity::Order(0) => 1,
        Sparsity::Order(s) => s,
        Sparsity::Fixpoint => usize::MAX,
    };
    let mut state = TspState::new(&tensor, cfg.tsp);
    let initial: Vec<String> = state.initial.iter().map(|&j| label(j)).collect();
    let mut steps = Vec::new();
    let mut rows = Vec::new();
    let mut seen = vec![state.patterns.clone()];
    while state.s < target {
        let changed = state.step(&tensor);
        steps.push((state.s, block_profile(&state.block_sizes())));
        rows.extend(pattern_rows(&state, &tensor, &names, &label));
        if !changed || seen.contains(&state.patterns) {
            break;
        }
        seen.push(state.patterns.clone());
    }

    match args.format {
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["s", "component", "constraint", "blocks", "support"])?;
            for r in &rows {
                w.write_record([
                    r.s.to_string(),
                    r.component.clone(),
                    r.constraint.to_string(),
                    block_profile(&r.blocks),
                    r.support.join(" "),
                ])?;
            }
            w.flush()?;
        }
        Format::Json | Format::Text => {
            let out = json!({
                "instance": problem.name,
                "r": cfg.order,
                "closure": cfg.tsp.closure,
                "diagonal_squares": cfg.tsp.diagonal_squares,
                "dense_sizes": sab.sizes(),
                "initial_support": initial,
                "steps": steps.iter().map(|(s, p)| json!({"s": s, "blocks": p})).collect::<Vec<_>>(),
                "patterns": rows.iter().map(|r| json!({
                    "s": r.s,
                    "component": r.component,
                    "constraint": r.constraint,
                    "blocks": r.blocks,
                    "support": r.support,
                })).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
