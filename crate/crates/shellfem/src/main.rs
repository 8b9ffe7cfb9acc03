use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use shellfem::study::{
    self, MeshChoice, ProblemChoice, StudyError, StudyMode, StudySpec,
};

/// Solver driver for eps^4 u'''' + 4u = f with clamped ends on
/// layer-adapted meshes. Writes one CSV row per (N, eps) case; N-sweeps
/// append convergence-order summaries.
#[derive(Parser)]
#[command(name = "shellfem", version, about)]
struct Cli {
    /// Study layout: one case, a mesh refinement sweep, or an eps sweep
    #[arg(long, value_enum, default_value_t = ModeArg::Single)]
    mode: ModeArg,

    /// Mesh family
    #[arg(long, value_enum, default_value_t = MeshArg::Shishkin1)]
    mesh: MeshArg,

    /// Spline degree (>= 3)
    #[arg(long, default_value_t = 3)]
    p: usize,

    /// Mesh transition parameter
    #[arg(long, default_value_t = 4.0)]
    sigma: f64,

    /// Stabilization weight of the first residual term (>= 3)
    #[arg(long, default_value_t = 3.0)]
    lambda: f64,

    /// Perturbation parameter: comma list or log range e^a..e^b:k
    #[arg(long, default_value = "1e-2")]
    eps: String,

    /// Element count: comma list or dyadic range a..b
    #[arg(long, default_value = "16")]
    n: String,

    /// Problem: manufactured, constant:<c>, or custom:<c0,c1,...>[;exp:<c>]
    #[arg(long, default_value = "manufactured")]
    problem: String,

    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Extra Gauss points for the load term
    #[arg(long, default_value_t = 4)]
    quad_extra: usize,

    /// Directory for two-column plot data files, one per error column
    #[arg(long)]
    plot_data: Option<PathBuf>,

    /// Reserved for randomized diagnostics; has no effect on studies
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    #[value(name = "n_sweep")]
    NSweep,
    #[value(name = "eps_sweep")]
    EpsSweep,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshArg {
    Uniform,
    Shishkin1,
    Shishkin2,
}

fn build_spec(cli: &Cli) -> Result<StudySpec, StudyError> {
    Ok(StudySpec {
        mode: match cli.mode {
            ModeArg::Single => StudyMode::Single,
            ModeArg::NSweep => StudyMode::NSweep,
            ModeArg::EpsSweep => StudyMode::EpsSweep,
        },
        mesh: match cli.mesh {
            MeshArg::Uniform => MeshChoice::Uniform,
            MeshArg::Shishkin1 => MeshChoice::Shishkin1,
            MeshArg::Shishkin2 => MeshChoice::Shishkin2,
        },
        p: cli.p,
        sigma: cli.sigma,
        lambda: cli.lambda,
        eps_list: study::parse_eps_list(&cli.eps)?,
        n_list: study::parse_n_list(&cli.n)?,
        problem: ProblemChoice::parse(&cli.problem)?,
        quad_extra: cli.quad_extra,
        plot_data: cli.plot_data.clone(),
    })
}

fn run(cli: &Cli) -> Result<(), StudyError> {
    let spec = build_spec(cli)?;
    match &cli.out {
        Some(path) => {
            let file = File::create(path).map_err(StudyError::Io)?;
            let mut out = BufWriter::new(file);
            study::run_study(&spec, &mut out)?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            study::run_study(&spec, &mut out)?;
            out.flush().map_err(StudyError::Io)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shellfem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
