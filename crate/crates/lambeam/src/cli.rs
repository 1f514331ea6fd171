//! Command-line front end: single analyses from JSON model files, the
//! built-in gated benchmark, and mesh convergence sweeps.
//!
//! Exit codes: 0 success, 1 usage or I/O, 2 model validation, 3 singular
//! system, 4 benchmark outside its published tolerances.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{self, BenchError};
use crate::bounds::structural_bounds;
use crate::model::{build_model, BeamModel, ModelConfig, ModelError};
use crate::postprocess::{
    deflection_at, element_fields, interface_tractions, max_tensile_fiber, nodal_average,
};
use crate::solver::{solve, Solution, SolveError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_BENCH: i32 = 4;

#[derive(Parser)]
#[command(
    name = "lambeam",
    about = "Finite-element analysis of laminated glass beams",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a model file and print a report or a CSV result table.
    Solve {
        /// JSON model description.
        #[arg(long)]
        model: PathBuf,
        /// Re-mesh to this element count; supports and loads must stay on
        /// nodes.
        #[arg(long)]
        elements: Option<usize>,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the built-in laminated glass benchmark against published
    /// reference data; fails if any value leaves its tolerance band.
    Bench {
        /// Element count (even, so a node carries the midspan load).
        #[arg(long, default_value_t = 60)]
        elements: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Midspan deflection for a series of mesh densities, as CSV.
    Converge {
        /// Model file; the built-in benchmark when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated element counts.
        #[arg(long, default_value = "10,20,30,40,60,120")]
        elements: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug)]
struct CmdError {
    code: i32,
    message: String,
}

impl CmdError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CmdError { code, message: message.into() }
    }
}

type CmdResult = Result<(), CmdError>;

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 on usage errors; this tool reserves 2 for model
            // validation, so usage problems map to 1.
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve { model, elements, out, format } => {
            cmd_solve(&model, elements, out.as_deref(), format)
        }
        Command::Bench { elements, out } => cmd_bench(elements, out.as_deref()),
        Command::Converge { model, elements, out } => {
            cmd_converge(model.as_deref(), &elements, out.as_deref())
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn model_error(e: ModelError) -> CmdError {
    CmdError::new(EXIT_VALIDATION, format!("invalid model: {e}"))
}

fn solve_error(e: SolveError) -> CmdError {
    match e {
        SolveError::Singular { .. } => CmdError::new(EXIT_SINGULAR, e.to_string()),
        SolveError::Assembly(a) => CmdError::new(EXIT_VALIDATION, a.to_string()),
    }
}

fn bench_error(e: BenchError) -> CmdError {
    match e {
        BenchError::Solve(s) => solve_error(s),
        other => CmdError::new(EXIT_VALIDATION, other.to_string()),
    }
}

fn load_config(path: &Path) -> Result<ModelConfig, CmdError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CmdError::new(EXIT_USAGE, format!("cannot read {}: {e}", path.display()))
    })?;
    ModelConfig::from_json(&text).map_err(|e| {
        CmdError::new(
            EXIT_USAGE,
            format!("{} is not a valid model document: {e}", path.display()),
        )
    })
}

/// Changes the element count while keeping every support and load at the
/// same physical position; positions that would fall between nodes of the
/// new mesh are rejected.
fn remap_elements(cfg: &ModelConfig, new: usize) -> Result<ModelConfig, CmdError> {
    let old = cfg.mesh.n_elements;
    if new == old {
        return Ok(cfg.clone());
    }
    let map_node = |node: usize| -> Result<usize, CmdError> {
        if old == 0 || !(node * new).is_multiple_of(old) {
            Err(CmdError::new(
                EXIT_VALIDATION,
                format!(
                    "an element count of {new} moves node {node} of the {old}-element mesh \
                     off the nodes; pick a count that keeps supports and loads on nodes"
                ),
            ))
        } else {
            Ok(node * new / old)
        }
    };
    let mut out = cfg.clone();
    out.mesh.n_elements = new;
    for s in &mut out.supports {
        s.node = map_node(s.node)?;
    }
    for p in &mut out.loads.point {
        p.node = map_node(p.node)?;
    }
    Ok(out)
}

fn emit(out: Option<&Path>, content: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| {
            CmdError::new(EXIT_USAGE, format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_solve(
    model_path: &Path,
    elements: Option<usize>,
    out: Option<&Path>,
    format: Format,
) -> CmdResult {
    let mut cfg = load_config(model_path)?;
    if let Some(n) = elements {
        cfg = remap_elements(&cfg, n)?;
    }
    let model = build_model(&cfg).map_err(model_error)?;
    let sol = solve(&model).map_err(solve_error)?;
    let content = match format {
        Format::Text => solve_report(&model_path.display().to_string(), &model, &sol),
        Format::Csv => results_csv(&model, &sol),
    };
    emit(out, &content)
}

fn cmd_bench(elements: usize, out: Option<&Path>) -> CmdResult {
    let outcome = bench::run(elements).map_err(bench_error)?;
    emit(out, &outcome.report)?;
    if outcome.passed() {
        Ok(())
    } else {
        Err(CmdError::new(
            EXIT_BENCH,
            format!(
                "benchmark left its published tolerance bands ({} check(s) failed)",
                outcome.violations.len()
            ),
        ))
    }
}

fn cmd_converge(model: Option<&Path>, elements: &str, out: Option<&Path>) -> CmdResult {
    let mut counts = Vec::new();
    for part in elements.split(',') {
        let part = part.trim();
        match part.parse::<usize>() {
            Ok(n) => counts.push(n),
            Err(_) => {
                return Err(CmdError::new(
                    EXIT_USAGE,
                    format!("--elements expects comma-separated integers, got {part:?}"),
                ));
            }
        }
    }
    if counts.is_empty() {
        return Err(CmdError::new(EXIT_USAGE, "--elements lists no counts"));
    }
    counts.sort_unstable();
    counts.dedup();

    let base = match model {
        Some(path) => Some(load_config(path)?),
        None => None,
    };
    let mut csv = String::from("n_elements,w_mid [mm]\n");
    for &n in &counts {
        let cfg = match &base {
            Some(cfg) => remap_elements(cfg, n)?,
            None => bench::benchmark_config_n(n, 50.0).map_err(bench_error)?,
        };
        let m = build_model(&cfg).map_err(model_error)?;
        let sol = solve(&m).map_err(solve_error)?;
        let w = deflection_at(&m, &sol, m.mesh.span / 2.0)
            .expect("midspan lies inside the span");
        csv.push_str(&format!("{n},{}\n", w * 1e3));
    }
    emit(out, &csv)
}

fn solve_report(label: &str, model: &BeamModel, sol: &Solution) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let sec = &model.section;
    let _ = writeln!(out, "Laminated beam analysis: {label}");
    let _ = writeln!(
        out,
        "  span {} m, {} elements, width {} m, shear correction {:.4}",
        model.mesh.span, model.mesh.n_elements, sec.width, sec.k_shear
    );
    for (i, layer) in sec.layers.iter().enumerate() {
        let _ = writeln!(
            out,
            "  layer {}: {}, h {} mm, E {} GPa, nu {}",
            i + 1,
            layer.material.name,
            layer.h * 1e3,
            layer.material.e / 1e9,
            layer.material.nu
        );
    }
    let fields = element_fields(model, sol);
    let peak = max_tensile_fiber(model, &fields);
    let w_mid = deflection_at(model, sol, model.mesh.span / 2.0)
        .expect("midspan lies inside the span");
    let _ = writeln!(out);
    let _ = writeln!(out, "Results");
    let _ = writeln!(out, "  midspan deflection  {:.2} mm", w_mid * 1e3);
    let _ = writeln!(
        out,
        "  maximum strain      {:.0} x 1e-6 (layer {}, node {})",
        peak.strain * 1e6,
        peak.layer + 1,
        peak.node
    );
    let _ = writeln!(out, "  maximum stress      {:.2} MPa", peak.stress / 1e6);
    let p_total: f64 = model.point_loads.iter().map(|p| p.p).sum();
    if p_total != 0.0 {
        if let Ok((mono, indep)) = structural_bounds(model, p_total) {
            let _ = writeln!(
                out,
                "  limiting cases      monolithic {:.2} mm, independent {:.2} mm",
                mono.deflection * 1e3,
                indep.deflection * 1e3
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Solver quality");
    let _ = writeln!(out, "  relative residual    {:.2e}", sol.relative_residual());
    let _ = writeln!(
        out,
        "  constraint residual  {:.2e} at displacement scale {:.2e}",
        sol.constraint_residual, sol.max_primal
    );
    out
}

/// Per-node result table. Element-constant fields are averaged to the nodes;
/// interface tractions are nodal by construction.
fn results_csv(model: &BeamModel, sol: &Solution) -> String {
    let n_layers = model.section.n_layers();
    let fields = element_fields(model, sol);
    let tractions = interface_tractions(model, sol);

    let mut header = String::from("x [m],w [mm]");
    for i in 1..=n_layers {
        header.push_str(&format!(
            ",N{i} [N],V{i} [N],M{i} [N m],sig_top{i} [MPa],sig_bot{i} [MPa]"
        ));
    }
    for k in 1..n_layers {
        header.push_str(&format!(",t{k} [kPa]"));
    }

    struct LayerCols {
        n: Vec<f64>,
        v: Vec<f64>,
        m: Vec<f64>,
        st: Vec<f64>,
        sb: Vec<f64>,
    }
    let cols: Vec<LayerCols> = fields
        .states
        .iter()
        .map(|layer| LayerCols {
            n: nodal_average(&layer.iter().map(|s| s.n).collect::<Vec<_>>()),
            v: nodal_average(&layer.iter().map(|s| s.v).collect::<Vec<_>>()),
            m: nodal_average(&layer.iter().map(|s| s.m).collect::<Vec<_>>()),
            st: nodal_average(&layer.iter().map(|s| s.sig_top).collect::<Vec<_>>()),
            sb: nodal_average(&layer.iter().map(|s| s.sig_bot).collect::<Vec<_>>()),
        })
        .collect();

    let mut out = header;
    out.push('\n');
    for j in 0..model.mesh.n_nodes() {
        out.push_str(&format!("{},{}", model.mesh.node_x(j), sol.w(j) * 1e3));
        for c in &cols {
            out.push_str(&format!(
                ",{},{},{},{},{}",
                c.n[j],
                c.v[j],
                c.m[j],
                c.st[j] / 1e6,
                c.sb[j] / 1e6
            ));
        }
        for t in &tractions {
            out.push_str(&format!(",{}", t.traction[j] / 1e3));
        }
        out.push('\n');
    }
    out
}
