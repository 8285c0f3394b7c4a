//! Command-line front end: weight tables, dispersion tables, error coefficients,
//! bound-state solves and convergence scans, written as CSV or JSON.
//!
//! Exit codes: 0 success, 2 usage error, 3 numeric or range error, 4 eigensolver
//! non-convergence.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::dispersion::{error_coefficients, wavevectors, Dispersion};
use crate::error::Error;
use crate::grid::{Boundary, GridSpec, PhysScale};
use crate::operator::PotentialGrid;
use crate::schrodinger::{
    exact_poschl_teller_levels, scan_vs_m, scan_vs_n, solve_hamiltonian, ConvergenceTable,
    PoschlTellerPotential, ScanAxis,
};
use crate::stencil::{
    infinite_order_kinetic_element, infinite_order_momentum_element, kinetic_weights,
    momentum_weights, StencilOrder,
};

/// Relative `--output` paths are resolved against this directory when it is set.
pub const OUTPUT_DIR_ENV: &str = "FDQM_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fdqm",
    version,
    about = "Closed-form finite-difference operators, dispersion and bound-state convergence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Momentum and kinetic stencil weights with their infinite-order limits.
    Weights(WeightsArgs),
    /// Periodic-grid momentum and energy dispersion against the continuum.
    Dispersion(DispersionArgs),
    /// Leading error coefficients Δ_p and Δ_ε over a range of orders.
    Delta(DeltaArgs),
    /// Lowest eigenstates of a hard-wall Hamiltonian.
    Solve(SolveArgs),
    /// Pöschl–Teller eigenvalues versus N or M.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// File to write; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScaleArgs {
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long = "hbar2-over-2mu", default_value_t = 1.0)]
    pub hbar2_over_2mu: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WeightsArgs {
    /// Stencil order M.
    #[arg(long = "M")]
    pub m: usize,
    /// Grid spacing.
    #[arg(long = "a", default_value_t = 1.0)]
    pub a: f64,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DispersionArgs {
    #[arg(long = "M")]
    pub m: usize,
    /// Number of periodic grid points.
    #[arg(long = "N")]
    pub n: usize,
    /// Grid spacing (exclusive with --L).
    #[arg(long = "a")]
    pub a: Option<f64>,
    /// Cell length (exclusive with --a).
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DeltaArgs {
    #[arg(long = "M-min", default_value_t = 1)]
    pub m_min: usize,
    #[arg(long = "M-max", default_value_t = 8)]
    pub m_max: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialKind {
    PoschlTeller,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct WellArgs {
    /// Well depth (positive is attractive).
    #[arg(long = "U0", default_value_t = 21.0)]
    pub u0: f64,
    #[arg(long, default_value_t = 1.4)]
    pub alpha: f64,
    /// Number of lowest states.
    #[arg(long, default_value_t = 3)]
    pub count: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long = "M", default_value_t = 8)]
    pub m: usize,
    #[arg(long = "N", default_value_t = 2000)]
    pub n: usize,
    /// Grid spacing (exclusive with --L).
    #[arg(long = "a")]
    pub a: Option<f64>,
    /// Box length; 20 when neither --a nor --L is given.
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub boundary: BoundaryArg,
    #[arg(long, value_enum, default_value_t = PotentialKind::PoschlTeller)]
    pub potential: PotentialKind,
    #[command(flatten)]
    pub well: WellArgs,
    /// Also write the eigenvectors (normalized so that Σ|ψ|²a = 1) to this file.
    #[arg(long)]
    pub wavefunctions: Option<PathBuf>,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    #[value(name = "N")]
    N,
    #[value(name = "M")]
    M,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Comma-separated, strictly increasing axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<usize>,
    /// Fixed order for an N scan.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Fixed grid size for an M scan.
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "L", default_value_t = 20.0)]
    pub l: f64,
    #[command(flatten)]
    pub well: WellArgs,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(Error::Convergence(_)) => EXIT_CONVERGENCE,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Numeric(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A table cell; floats print in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:?}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => json!(x),
        }
    }
}

/// Column-named rows plus the resolved configuration that produced them.
#[derive(Debug, Clone)]
pub struct Table {
    pub meta: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(meta: Value, columns: &[&str]) -> Self {
        let meta = match meta {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self {
            meta,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut meta = self.meta.clone();
        meta.insert("columns".into(), json!(self.columns));
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::json))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut doc = serde_json::to_string_pretty(&json!({ "meta": meta, "rows": rows }))
            .expect("table serializes");
        doc.push('\n');
        doc
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn float(x: f64) -> Cell {
    Cell::Float(x)
}

fn int(i: usize) -> Cell {
    Cell::Int(i as i64)
}

fn scale_of(args: &ScaleArgs) -> CliResult<PhysScale> {
    Ok(PhysScale::new(args.hbar, args.hbar2_over_2mu)?)
}

fn order_of(m: usize) -> CliResult<StencilOrder> {
    Ok(StencilOrder::new(m)?)
}

fn spacing_of(n: usize, a: Option<f64>, l: Option<f64>) -> CliResult<f64> {
    if n == 0 {
        return Err(CliError::Usage("--N must be at least 1".into()));
    }
    match (a, l) {
        (Some(a), None) => Ok(a),
        (None, Some(l)) => Ok(l / n as f64),
        (Some(_), Some(_)) => Err(CliError::Usage("give exactly one of --a and --L".into())),
        (None, None) => Err(CliError::Usage("one of --a or --L is required".into())),
    }
}

fn sign_alternating(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn cmd_weights(args: &WeightsArgs) -> CliResult<Table> {
    let order = order_of(args.m)?;
    let scale = scale_of(&args.scale)?;
    let w = momentum_weights(order, args.a)?;
    let c = kinetic_weights(order, args.a)?;
    let c0_inf = -infinite_order_kinetic_element(0, args.a, &scale)? / scale.hbar2_over_2mu();
    let mut table = Table::new(
        json!({
            "command": "weights",
            "M": args.m,
            "a": args.a,
            "hbar": scale.hbar(),
            "hbar2_over_2mu": scale.hbar2_over_2mu(),
            "c_0": c.diag(),
            "c_0_inf": c0_inf,
        }),
        &["m", "W_m", "c_m", "W_m_inf", "c_m_inf"],
    );
    for (i, (wm, cm)) in w.weights().iter().zip(c.offdiag()).enumerate() {
        let m = i + 1;
        // Same conventions as the finite weights: ⟨n|p|n+m⟩ = −iħW_m, ⟨n|T|n+m⟩ = −(ħ²/2μ)c_m.
        let w_inf = -infinite_order_momentum_element(m as i64, args.a)?;
        let c_inf = -2.0 * sign_alternating(m) / (args.a * args.a * (m * m) as f64);
        table.rows.push(vec![
            int(m),
            float(*wm),
            float(*cm),
            float(w_inf),
            float(c_inf),
        ]);
    }
    Ok(table)
}

fn relative_error(approx: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        if approx == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (approx - exact) / exact
    }
}

pub fn cmd_dispersion(args: &DispersionArgs) -> CliResult<Table> {
    let order = order_of(args.m)?;
    let scale = scale_of(&args.scale)?;
    let a = spacing_of(args.n, args.a, args.l)?;
    let relation = Dispersion::new(order, a, &scale)?;
    let mut table = Table::new(
        json!({
            "command": "dispersion",
            "M": args.m,
            "N": args.n,
            "a": a,
            "L": a * args.n as f64,
            "boundary": "periodic",
            "hbar": scale.hbar(),
            "hbar2_over_2mu": scale.hbar2_over_2mu(),
        }),
        &[
            "nu",
            "k",
            "p",
            "eps",
            "p_exact",
            "eps_exact",
            "p_rel_err",
            "eps_rel_err",
        ],
    );
    for wv in wavevectors(args.n, a)? {
        let (p, e) = (relation.momentum(wv.k), relation.energy(wv.k));
        let (px, ex) = (relation.exact_momentum(wv.k), relation.exact_energy(wv.k));
        table.rows.push(vec![
            int(wv.index),
            float(wv.k),
            float(p),
            float(e),
            float(px),
            float(ex),
            float(relative_error(p, px)),
            float(relative_error(e, ex)),
        ]);
    }
    Ok(table)
}

pub fn cmd_delta(args: &DeltaArgs) -> CliResult<Table> {
    if args.m_min == 0 || args.m_min > args.m_max {
        return Err(CliError::Usage("need 1 <= --M-min <= --M-max".into()));
    }
    let mut table = Table::new(
        json!({ "command": "delta", "M_min": args.m_min, "M_max": args.m_max }),
        &["M", "delta_p", "delta_eps", "ratio"],
    );
    for m in args.m_min..=args.m_max {
        let c = error_coefficients(order_of(m)?)?;
        table.rows.push(vec![
            int(m),
            float(c.delta_p),
            float(c.delta_eps),
            float(c.delta_p / c.delta_eps),
        ]);
    }
    Ok(table)
}

/// Energies table and, when requested, the wavefunction table.
pub fn cmd_solve(args: &SolveArgs) -> CliResult<(Table, Option<Table>)> {
    if args.well.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if args.boundary == BoundaryArg::Periodic {
        return Err(CliError::Usage(
            "bound-state solves need --boundary dirichlet".into(),
        ));
    }
    let order = order_of(args.m)?;
    let scale = scale_of(&args.scale)?;
    let l = match (args.a, args.l) {
        (None, None) => Some(20.0),
        _ => args.l,
    };
    let a = spacing_of(args.n, args.a, l)?;
    let grid = GridSpec::new(args.n, a, Boundary::Dirichlet)?;
    let (potential, exact, well_meta) = match args.potential {
        PotentialKind::PoschlTeller => {
            let pot = PoschlTellerPotential::new(args.well.u0, args.well.alpha)?;
            let exact = exact_poschl_teller_levels(&pot, &scale).energies().to_vec();
            (
                pot.sample(&grid)?,
                exact,
                json!({ "potential": "poschl-teller", "U0": pot.depth(), "alpha": pot.alpha() }),
            )
        }
        PotentialKind::None => (
            PotentialGrid::zeros(args.n),
            Vec::new(),
            json!({ "potential": "none" }),
        ),
    };
    let states = solve_hamiltonian(&grid, order, &potential, &scale, args.well.count)?;

    let mut meta = json!({
        "command": "solve",
        "M": args.m,
        "N": args.n,
        "a": a,
        "L": grid.length(),
        "boundary": "dirichlet",
        "count": args.well.count,
        "hbar": scale.hbar(),
        "hbar2_over_2mu": scale.hbar2_over_2mu(),
        "operator_norm": states.norm,
    });
    merge(&mut meta, well_meta);
    let mut table = Table::new(
        meta.clone(),
        &["level", "energy", "exact", "error", "residual"],
    );
    for (i, e) in states.energies().iter().enumerate() {
        // Levels without a bound-state counterpart carry NaN in the exact columns.
        let x = exact.get(i).copied().unwrap_or(f64::NAN);
        table.rows.push(vec![
            int(i),
            float(*e),
            float(x),
            float(e - x),
            float(states.residuals[i]),
        ]);
    }

    let dump = args.wavefunctions.as_ref().map(|_| {
        let mut names = vec!["n".to_string(), "x".to_string()];
        names.extend((0..args.well.count).map(|i| format!("psi_{i}")));
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut wf = Table::new(meta, &name_refs);
        for n in 0..args.n {
            let mut row = vec![int(n), float(grid.x(n))];
            row.extend(states.wavefunctions.iter().map(|v| float(v[n])));
            wf.rows.push(row);
        }
        wf
    });
    Ok((table, dump))
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

pub fn cmd_scan(args: &ScanArgs) -> CliResult<Table> {
    if args.well.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if args.values.is_empty() {
        return Err(CliError::Usage("--values must not be empty".into()));
    }
    if args.values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(
            "--values must be strictly increasing".into(),
        ));
    }
    let scale = scale_of(&args.scale)?;
    let pot = PoschlTellerPotential::new(args.well.u0, args.well.alpha)?;
    let table = match args.axis {
        AxisArg::N => {
            let m = args
                .m
                .ok_or_else(|| CliError::Usage("--axis N needs a fixed --M".into()))?;
            scan_vs_n(
                &args.values,
                order_of(m)?,
                &pot,
                &scale,
                args.l,
                args.well.count,
            )?
        }
        AxisArg::M => {
            let n = args
                .n
                .ok_or_else(|| CliError::Usage("--axis M needs a fixed --N".into()))?;
            scan_vs_m(&args.values, n, &pot, &scale, args.l, args.well.count)?
        }
    };
    Ok(convergence_table(&table, args, &scale, &pot))
}

fn convergence_table(
    t: &ConvergenceTable,
    args: &ScanArgs,
    scale: &PhysScale,
    pot: &PoschlTellerPotential,
) -> Table {
    let (axis, fixed_name) = match t.axis {
        ScanAxis::N => ("N", "M"),
        ScanAxis::M => ("M", "N"),
    };
    let count = t.exact.len();
    let mut names = vec![axis.to_string()];
    names.extend((0..count).map(|i| format!("E_{i}")));
    names.push("sum".into());
    names.extend((0..count).map(|i| format!("err_{i}")));
    names.push("sum_err".into());
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut meta = json!({
        "command": "scan",
        "axis": axis,
        "L": t.length,
        "potential": "poschl-teller",
        "U0": pot.depth(),
        "alpha": pot.alpha(),
        "count": args.well.count,
        "hbar": scale.hbar(),
        "hbar2_over_2mu": scale.hbar2_over_2mu(),
        "exact": t.exact,
        "monotonic_threshold": t.monotonic_threshold(),
    });
    merge(&mut meta, json!({ fixed_name: t.fixed }));
    let mut table = Table::new(meta, &name_refs);
    for r in &t.rows {
        let mut row = vec![int(r.value)];
        row.extend(r.energies.iter().copied().map(float));
        row.push(float(r.sum));
        row.extend(r.errors.iter().copied().map(float));
        row.push(float(r.sum_error));
        table.rows.push(row);
    }
    table
}

fn resolve(path: &PathBuf) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.clone(),
    }
}

fn emit(text: &str, path: Option<&PathBuf>) -> CliResult<()> {
    match path {
        Some(p) => {
            let p = resolve(p);
            std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Weights(a) => emit(&cmd_weights(a)?.render(a.out.format), a.out.output.as_ref()),
        Command::Dispersion(a) => emit(
            &cmd_dispersion(a)?.render(a.out.format),
            a.out.output.as_ref(),
        ),
        Command::Delta(a) => emit(&cmd_delta(a)?.render(a.out.format), a.out.output.as_ref()),
        Command::Solve(a) => {
            let (table, dump) = cmd_solve(a)?;
            if let (Some(wf), Some(path)) = (dump, a.wavefunctions.as_ref()) {
                emit(&wf.render(a.out.format), Some(path))?;
            }
            emit(&table.render(a.out.format), a.out.output.as_ref())
        }
        Command::Scan(a) => emit(&cmd_scan(a)?.render(a.out.format), a.out.output.as_ref()),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("fdqm: {e}");
            e.exit_code()
        }
    }
}
