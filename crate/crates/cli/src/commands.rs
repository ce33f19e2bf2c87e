//! Implementations of the subcommands: file plumbing around the library.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use waveletspace::atoms::atom_decompose;
use waveletspace::decomp::product_decompose;
use waveletspace::field::CoefficientField;
use waveletspace::grid::GridFunction;
use waveletspace::io;
use waveletspace::qfunc::divergence_experiment;
use waveletspace::solver::{neumann_solve, spectral_radius_estimate};
use waveletspace::spaces::{
    bmo_r_seminorm, decay_envelope, log_morrey_norm, morrey_norm, multiplier_dictionary,
    multiplier_norm_lower_bound, sobolev_norm, NormReport,
};
use waveletspace::wavelet::{forward_dwt, inverse_dwt};

use crate::config::RunConfig;
use crate::{Cli, CliError, Command, NormKind};

/// Iteration count for the solve command's reported operator-norm probe.
const PROBE_ITERS: usize = 20;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = thread_cap()?;
    let config = match &cli.config {
        Some(path) => Some(RunConfig::from_json(&read_text(path)?)?),
        None => None,
    };
    let ctx = Ctx {
        config,
        seed_flag: cli.seed,
        out: cli.out,
        threads,
    };
    match cli.command {
        Command::Transform {
            input,
            output,
            inverse,
        } => cmd_transform(&ctx, &input, &output, inverse),
        Command::Norm { input, which } => cmd_norm(&ctx, &input, which),
        Command::Counterexample => cmd_counterexample(&ctx),
        Command::Solve {
            potential,
            rhs,
            t,
            r,
            tol,
            max_iter,
        } => cmd_solve(&ctx, &potential, &rhs, t, r, tol, max_iter),
        Command::Decompose { f, g, shift } => cmd_decompose(&ctx, &f, &g, shift),
        Command::Atoms { input, check } => cmd_atoms(&ctx, &input, check),
        Command::Report { inputs } => cmd_report(&ctx, &inputs),
    }
}

struct Ctx {
    config: Option<RunConfig>,
    seed_flag: Option<u64>,
    out: PathBuf,
    threads: Option<usize>,
}

impl Ctx {
    fn config(&self) -> Result<&RunConfig, CliError> {
        self.config.as_ref().ok_or_else(|| {
            CliError::Input("this command needs a run configuration (--config <json>)".into())
        })
    }

    /// Seed actually in effect: the flag wins over the configuration.
    fn seed(&self) -> Result<u64, CliError> {
        Ok(self.seed_flag.unwrap_or(self.config()?.seed))
    }

    /// Configuration echo with the effective seed substituted in.
    fn effective_config(&self) -> Result<RunConfig, CliError> {
        let mut config = self.config()?.clone();
        config.seed = self.seed()?;
        Ok(config)
    }
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("WAVELETSPACE_THREADS") {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(Some(v)),
            _ => Err(CliError::Input(format!(
                "WAVELETSPACE_THREADS must be a positive integer, got {text:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Input(format!("WAVELETSPACE_THREADS: {e}"))),
    }
}

// ---------------------------------------------------------------- file I/O

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_grid_file(path: &Path) -> Result<GridFunction, CliError> {
    io::grid_from_bytes(&read_bytes(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_field_file(path: &Path) -> Result<CoefficientField, CliError> {
    io::field_from_bytes(&read_bytes(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn check_shape(
    what: &str,
    n: usize,
    resolution: u32,
    config: &RunConfig,
) -> Result<(), CliError> {
    if n != config.params.n || resolution != config.resolution {
        return Err(CliError::Input(format!(
            "{what} is {n}-dimensional at resolution {resolution}, but the run configuration \
             says n = {} and J = {}",
            config.params.n, config.resolution
        )));
    }
    Ok(())
}

/// Output files staged to hidden temporaries, renamed into place only when
/// everything has been written; dropped temporaries are removed, so a
/// failed command leaves no partial outputs.
struct StagedWrites {
    pending: Vec<(PathBuf, PathBuf)>,
}

impl StagedWrites {
    fn new() -> Self {
        StagedWrites {
            pending: Vec::new(),
        }
    }

    fn stage(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        let context = |e: std::io::Error| CliError::Input(format!("{}: {e}", path.display()));
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(context)?;
            }
        }
        let name = path
            .file_name()
            .ok_or_else(|| CliError::Input(format!("{}: not a file path", path.display())))?;
        let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
        fs::write(&tmp, bytes).map_err(context)?;
        self.pending.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn commit(mut self) -> Result<(), CliError> {
        for (tmp, target) in self.pending.drain(..) {
            fs::rename(&tmp, &target)
                .map_err(|e| CliError::Input(format!("{}: {e}", target.display())))?;
        }
        Ok(())
    }
}

impl Drop for StagedWrites {
    fn drop(&mut self) {
        for (tmp, _) in &self.pending {
            let _ = fs::remove_file(tmp);
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string(value).expect("report serializes");
    text.push('\n');
    text
}

// --------------------------------------------------------------- transform

fn cmd_transform(
    ctx: &Ctx,
    input: &Path,
    output: &Path,
    inverse: bool,
) -> Result<(), CliError> {
    let config = ctx.config()?;
    let bytes = if inverse {
        let field = read_field_file(input)?;
        check_shape("input coefficient field", field.n(), field.levels(), config)?;
        io::grid_to_bytes(&inverse_dwt(&field, &config.wavelet)?)
    } else {
        let grid = read_grid_file(input)?;
        check_shape("input grid", grid.n(), grid.resolution(), config)?;
        io::field_to_bytes(&forward_dwt(&grid, &config.wavelet)?)
    };
    let mut writes = StagedWrites::new();
    writes.stage(output, &bytes)?;
    writes.commit()
}

// -------------------------------------------------------------------- norm

fn cmd_norm(ctx: &Ctx, input: &Path, which: NormKind) -> Result<(), CliError> {
    let config = ctx.config()?;
    let field = read_field_file(input)?;
    check_shape("input coefficient field", field.n(), field.levels(), config)?;
    let params = &config.params;
    let report = match which {
        NormKind::Sobolev => sobolev_norm(&field, params.r, params.p)?,
        NormKind::Morrey => morrey_norm(&field, params)?,
        NormKind::Logmorrey => log_morrey_norm(&field, params)?,
        NormKind::Bmo => bmo_r_seminorm(&field, params.r, params.p)?,
        NormKind::Envelope => NormReport {
            value: decay_envelope(&field, params.r, params.tau),
            witness: None,
            table: None,
        },
    };
    print!("{}", json_line(&report));
    Ok(())
}

// ---------------------------------------------------------- counterexample

#[derive(Serialize)]
struct CounterexampleProvenance<'a> {
    command: &'static str,
    config: &'a RunConfig,
    #[serde(rename = "J")]
    resolution: u32,
    v_floor: u32,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    taus: &'a [u32],
    vs: &'a [u32],
    sigmas: &'a [u32],
    us: &'a [u32],
}

fn cmd_counterexample(ctx: &Ctx) -> Result<(), CliError> {
    let config = ctx.effective_config()?;
    let fractal = config.fractal.as_ref().ok_or_else(|| {
        CliError::Input("the run configuration has no fractal block".into())
    })?;
    let table = divergence_experiment(
        &config.params,
        fractal.delta,
        fractal.depth,
        fractal.v_floor,
        config.resolution,
    )?;

    let mut csv = String::from("S,q_power_p,reference_sum,ratio\n");
    for row in &table.rows {
        use std::fmt::Write;
        writeln!(
            csv,
            "{},{},{},{}",
            row.depth,
            row.q_power_p,
            row.reference,
            row.ratio()
        )
        .unwrap();
    }
    let provenance = CounterexampleProvenance {
        command: "counterexample",
        config: &config,
        resolution: config.resolution,
        v_floor: fractal.v_floor,
        seed: config.seed,
        threads: ctx.threads,
        taus: &table.config.taus,
        vs: &table.config.vs,
        sigmas: &table.config.sigmas,
        us: &table.config.us,
    };

    let mut writes = StagedWrites::new();
    writes.stage(&ctx.out.join("divergence.csv"), csv.as_bytes())?;
    writes.stage(
        &ctx.out.join("provenance.json"),
        json_line(&provenance).as_bytes(),
    )?;
    writes.commit()
}

// ------------------------------------------------------------------- solve

#[derive(Serialize)]
struct SolveOutput<'a> {
    command: &'static str,
    iterations: usize,
    contraction_estimates: &'a [f64],
    residual: f64,
    converged: bool,
    spectral_estimate: f64,
    potential_log_morrey: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    potential_multiplier_bound: Option<f64>,
    t: f64,
    r: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    ctx: &Ctx,
    potential: &Path,
    rhs: &Path,
    t_flag: Option<f64>,
    r_flag: Option<f64>,
    tol_flag: Option<f64>,
    max_iter_flag: Option<usize>,
) -> Result<(), CliError> {
    let config = ctx.config()?;
    let seed = ctx.seed()?;
    let block = config.solver.as_ref();
    let t = t_flag
        .or(block.and_then(|b| b.t))
        .unwrap_or(config.params.t);
    let r = r_flag
        .or(block.and_then(|b| b.r))
        .unwrap_or(config.params.r);
    let tol = tol_flag.or(block.and_then(|b| b.tol)).unwrap_or(1e-9);
    let max_iter = max_iter_flag
        .or(block.and_then(|b| b.max_iter))
        .unwrap_or(200);

    let v = read_grid_file(potential)?;
    check_shape("potential", v.n(), v.resolution(), config)?;
    let g = read_grid_file(rhs)?;
    check_shape("right-hand side", g.n(), g.resolution(), config)?;

    let spectral_estimate = spectral_radius_estimate(&v, t, r, PROBE_ITERS, seed)?;
    let v_coeffs = forward_dwt(&v, &config.wavelet)?;
    let potential_log_morrey = log_morrey_norm(&v_coeffs, &config.params)?.value;
    let potential_multiplier_bound = match &config.dictionary {
        Some(block) => {
            let dictionary = multiplier_dictionary(
                config.params.n,
                config.resolution,
                block.seed.unwrap_or(seed),
            )?;
            Some(multiplier_norm_lower_bound(
                &v_coeffs,
                &dictionary,
                &config.params,
                &config.wavelet,
            )?)
        }
        None => None,
    };

    let report = neumann_solve(&v, &g, t, r, tol, max_iter)?;
    let output = SolveOutput {
        command: "solve",
        iterations: report.iterations,
        contraction_estimates: &report.contraction_estimates,
        residual: report.residual,
        converged: report.converged,
        spectral_estimate,
        potential_log_morrey,
        potential_multiplier_bound,
        t,
        r,
        tol,
        max_iter,
        seed,
        threads: ctx.threads,
    };
    let report_json = json_line(&output);

    let mut writes = StagedWrites::new();
    writes.stage(
        &ctx.out.join("solution.wgf1"),
        &io::grid_to_bytes(&report.solution),
    )?;
    writes.stage(&ctx.out.join("solve_report.json"), report_json.as_bytes())?;
    writes.commit()?;
    print!("{report_json}");

    if !report.converged {
        return Err(CliError::NumericalFailure(format!(
            "no convergence after {} iterations (residual {})",
            report.iterations, report.residual
        )));
    }
    Ok(())
}

// --------------------------------------------------------------- decompose

#[derive(Serialize)]
struct DecomposeManifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    shift: u32,
    files: BTreeMap<&'static str, &'static str>,
    reconstruction_sup_error: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

fn cmd_decompose(ctx: &Ctx, f_path: &Path, g_path: &Path, shift: u32) -> Result<(), CliError> {
    let config = ctx.effective_config()?;
    let f = read_grid_file(f_path)?;
    check_shape("first factor", f.n(), f.resolution(), &config)?;
    let g = read_grid_file(g_path)?;
    check_shape("second factor", g.n(), g.resolution(), &config)?;

    let terms = product_decompose(&f, &g, shift, &config.wavelet)?;
    let reconstruction_sup_error = terms.total().sub(&f.pointwise_mul(&g)).sup_norm();

    let named: [(&'static str, &'static str, &GridFunction); 4] = [
        ("diagonal", "product_diagonal.wcf1", &terms.diagonal),
        ("low_high", "product_low_high.wcf1", &terms.low_high),
        ("high_low", "product_high_low.wcf1", &terms.high_low),
        ("base", "product_base.wcf1", &terms.base),
    ];
    let manifest = DecomposeManifest {
        command: "decompose",
        config: &config,
        shift,
        files: named.iter().map(|(term, file, _)| (*term, *file)).collect(),
        reconstruction_sup_error,
        seed: config.seed,
        threads: ctx.threads,
    };

    let mut writes = StagedWrites::new();
    for (_, file, grid) in &named {
        let coeffs = forward_dwt(grid, &config.wavelet)?;
        writes.stage(&ctx.out.join(file), &io::field_to_bytes(&coeffs))?;
    }
    writes.stage(
        &ctx.out.join("manifest.json"),
        json_line(&manifest).as_bytes(),
    )?;
    writes.commit()
}

// ------------------------------------------------------------------- atoms

#[derive(Serialize)]
struct AtomRow {
    v: u32,
    lambda: f64,
    entries: usize,
    support_cells: usize,
    support_measure: f64,
    file: String,
}

#[derive(Serialize)]
struct AtomsManifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    num_atoms: usize,
    chebyshev_sum: f64,
    chebyshev_bound: f64,
    bound_holds: bool,
    atoms: Vec<AtomRow>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

fn cmd_atoms(ctx: &Ctx, input: &Path, check: bool) -> Result<(), CliError> {
    let config = ctx.effective_config()?;
    let field = read_field_file(input)?;
    check_shape("input coefficient field", field.n(), field.levels(), &config)?;

    let decomposition = atom_decompose(&field, config.params.r, config.params.p)?;
    let mut rows = Vec::new();
    let mut writes = StagedWrites::new();
    for atom in &decomposition.atoms {
        let file = format!("atom_v{:02}.wcf1", atom.v);
        writes.stage(&ctx.out.join(&file), &io::field_to_bytes(&atom.coeffs))?;
        rows.push(AtomRow {
            v: atom.v,
            lambda: atom.lambda(),
            entries: atom.coeffs.len(),
            support_cells: atom.support.len(),
            support_measure: atom.support_measure(),
            file,
        });
    }
    let manifest = AtomsManifest {
        command: "atoms",
        config: &config,
        num_atoms: decomposition.atoms.len(),
        chebyshev_sum: decomposition.chebyshev_sum,
        chebyshev_bound: decomposition.chebyshev_bound,
        bound_holds: decomposition.chebyshev_sum <= decomposition.chebyshev_bound,
        atoms: rows,
        seed: config.seed,
        threads: ctx.threads,
    };
    writes.stage(
        &ctx.out.join("atoms_manifest.json"),
        json_line(&manifest).as_bytes(),
    )?;
    writes.commit()?;

    if check {
        let mut merged = CoefficientField::empty(field.n(), field.levels())?;
        for atom in &decomposition.atoms {
            merged = merged.add(&atom.coeffs);
        }
        let exact = merged.len() == field.len()
            && field
                .iter()
                .all(|(idx, value)| merged.get(idx).to_bits() == value.to_bits());
        println!("reconstruction_ok={exact}");
        if !exact {
            return Err(CliError::NumericalFailure(
                "atoms do not reproduce the input exactly".into(),
            ));
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ report

fn cmd_report(ctx: &Ctx, inputs: &[PathBuf]) -> Result<(), CliError> {
    let mut merged: Option<String> = None;
    let mut shared_header: Option<String> = None;
    for path in inputs {
        let text = read_text(path)?;
        let mut lines = text.lines();
        let header = lines.next().filter(|h| !h.is_empty()).ok_or_else(|| {
            CliError::Input(format!("{}: empty table", path.display()))
        })?;
        match &shared_header {
            None => {
                shared_header = Some(header.to_string());
                merged = Some(format!("run_id,{header}\n"));
            }
            Some(expected) if expected != header => {
                return Err(CliError::Input(format!(
                    "{}: header {header:?} does not match the first input's {expected:?}",
                    path.display()
                )));
            }
            Some(_) => {}
        }
        let run_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let out = merged.as_mut().expect("header seen");
        for line in lines.filter(|l| !l.is_empty()) {
            use std::fmt::Write;
            writeln!(out, "{run_id},{line}").unwrap();
        }
    }
    let merged = merged.expect("at least one input is required");
    let mut writes = StagedWrites::new();
    writes.stage(&ctx.out.join("merged.csv"), merged.as_bytes())?;
    writes.commit()
}
