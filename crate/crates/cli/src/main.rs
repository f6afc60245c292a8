//! `tms`: batch front end for the time-modulated scatterer model.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use tms_core::io::{
    load_bundle, load_context, load_plan, parse_excitation, write_records, Bundle, RecordFormat, ResultRecord, FORMAT_VERSION,
};
use tms_core::io::excitation::ExcitationSpec;
use tms_core::model::{FrequencyGrid, Polarization, ScatterResult, ScattererBlocks};
use tms_core::modulation::{fourier_coefficient, fourier_spectrum_numeric, ModulationPlan};
use tms_core::oracle::{compare, quasi_static_for, OffsetSpectrum};
use tms_core::solver::{bcs, convergence_check, harmonic_spectrum, HarmonicSystem, Probe};
use tms_core::Error;

#[derive(Parser)]
#[command(name = "tms", version, about = "Multifrequency scattering from scatterers with time-modulated loads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier coefficients of one port's reflection waveform.
    Coeffs(CoeffsArgs),
    /// Full output spectrum for one incident tone.
    Solve(SolveArgs),
    /// Bistatic cross section at one intermodulation order, swept over directions.
    Bcs(BcsArgs),
    /// Compare the harmonic solver against the quasi-static oracle.
    Validate(ValidateArgs),
    /// Probe magnitudes for growing harmonic windows.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct Inputs {
    /// Scatterer bundle (JSON).
    #[arg(long)]
    bundle: PathBuf,
    /// Modulation plan (TOML).
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct CoeffsArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Load port, 1-based.
    #[arg(long)]
    port: usize,
    #[arg(long)]
    kmax: usize,
    /// Harmonic at which per-harmonic load states are read.
    #[arg(long, default_value_t = 1)]
    harmonic: usize,
    /// Add a column computed by direct quadrature.
    #[arg(long)]
    numeric: bool,
    #[arg(long, default_value_t = 1 << 20)]
    samples: usize,
    /// CSV copy of the table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Incident tone, e.g. "tau=1,pol=theta,amp=1+0j[,h=13]".
    #[arg(long)]
    excite: String,
    /// Report one direction only.
    #[arg(long)]
    rho: Option<usize>,
    /// Records file; format from the extension unless --format is given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<RecordFormat>,
}

#[derive(Args)]
struct BcsArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Measurement context (TOML): distances and antenna gains.
    #[arg(long)]
    ctx: PathBuf,
    #[arg(long)]
    tau: usize,
    #[arg(long, default_value = "theta")]
    pol: Polarization,
    /// Report every direction (the default); kept for explicit scripts.
    #[arg(long)]
    sweep_rho: bool,
    #[arg(long, allow_hyphen_values = true)]
    harmonic_offset: i64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<RecordFormat>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value = "tau=1,pol=theta")]
    excite: String,
    #[arg(long, default_value_t = 1 << 16)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Largest |k| compared.
    #[arg(long, default_value_t = 10)]
    kmax: usize,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 25)]
    hmax: usize,
    /// "rho=B,k=K", "rho=all,k=±K" (all of -K..=K); repeatable. Default: every direction, k=±3.
    #[arg(long)]
    probe: Vec<String>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value = "tau=1,pol=theta")]
    excite: String,
}

/// Failures mapped onto the documented exit codes.
enum Failure {
    Model(Error),
    Oracle(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Model(Error::Validation(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Coeffs(a) => coeffs(a),
        Command::Solve(a) => solve(a),
        Command::Bcs(a) => cross_section(a),
        Command::Validate(a) => validate(a),
        Command::Converge(a) => converge(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::SingularSystem { .. } => 3,
                _ => 2,
            })
        }
        Err(Failure::Oracle(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(4)
        }
    }
}

fn load(inputs: &Inputs) -> Result<(Bundle, ModulationPlan), Error> {
    let bundle = load_bundle(&inputs.bundle)?;
    let plan = load_plan(&inputs.plan)?;
    if let Some(w) = bundle.grid.center_warning() {
        eprintln!("warning: {w}");
    }
    Ok((bundle, plan))
}

fn regime_id(plan: &ModulationPlan, path: &Path) -> String {
    plan.name
        .clone()
        .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

fn excitation(text: &str, bundle: &Bundle) -> Result<(ExcitationSpec, tms_core::model::Excitation), Error> {
    let spec = parse_excitation(text)?;
    let ex = spec.to_excitation(bundle.grid.center())?;
    Ok((spec, ex))
}

fn emit(records: &[ResultRecord], out: Option<&Path>, format: Option<RecordFormat>) -> Result<(), Error> {
    if let Some(path) = out {
        write_records(records, path, format.unwrap_or_else(|| RecordFormat::from_path(path)))?;
    }
    Ok(())
}

fn coeffs(a: CoeffsArgs) -> Outcome {
    let plan = load_plan(&a.plan)?;
    let schedule = plan.port(a.port)?;
    // file plans hold constants or per-harmonic tables, never functions of frequency
    let gammas = schedule.reflections(a.harmonic, 0.0, tms_core::model::DEFAULT_Z_REF)?;
    let kmax = a.kmax as i64;
    let numeric = if a.numeric {
        if a.samples < 2 * a.kmax + 2 {
            return Err(invalid(format!("--samples {} too small for --kmax {}", a.samples, a.kmax)));
        }
        Some(fourier_spectrum_numeric(schedule, &gammas, a.kmax, a.samples))
    } else {
        None
    };

    let mut table = String::new();
    let mut csv = String::from(if a.numeric { "k,re,im,re_numeric,im_numeric\n" } else { "k,re,im\n" });
    let _ = writeln!(table, "{:>6}  {:>24}  {:>24}{}", "k", "re", "im", if a.numeric { "      |closed - numeric|" } else { "" });
    for (i, k) in (-kmax..=kmax).enumerate() {
        let g = fourier_coefficient(schedule, &gammas, k);
        let _ = write!(table, "{k:>6}  {:>24.15e}  {:>24.15e}", g.re, g.im);
        let _ = write!(csv, "{k},{:.16e},{:.16e}", g.re, g.im);
        if let Some(n) = &numeric {
            let _ = write!(table, "  {:>22.3e}", (g - n[i]).norm());
            let _ = write!(csv, ",{:.16e},{:.16e}", n[i].re, n[i].im);
        }
        table.push('\n');
        csv.push('\n');
    }
    print!("{table}");
    if let Some(path) = &a.out {
        fs::write(path, csv).map_err(|source| Error::Io { path: path.clone(), source })?;
    }
    Ok(())
}

fn record(id: &str, tau: usize, rho: usize, row: &tms_core::solver::SpectrumRow) -> ResultRecord {
    ResultRecord {
        regime_id: id.to_string(),
        tau,
        rho,
        h: row.h,
        k_offset: row.offset,
        f_hz: row.f_hz,
        re_b_phi: row.b_phi.re,
        im_b_phi: row.b_phi.im,
        re_b_theta: row.b_theta.re,
        im_b_theta: row.b_theta.im,
        power_w: row.power_w,
        bcs_m2: None,
        bcs_dbm2: None,
    }
}

fn solve(a: SolveArgs) -> Outcome {
    let (bundle, plan) = load(&a.inputs)?;
    let (spec, ex) = excitation(&a.excite, &bundle)?;
    let system = HarmonicSystem::build(&bundle.blocks, &plan, &bundle.grid)?;
    let result = system.scatter(&ex)?;
    let directions: Vec<usize> = match a.rho {
        Some(r) => vec![r],
        None => (1..=bundle.layout().directions).collect(),
    };
    let id = regime_id(&plan, &a.inputs.plan);
    let mut records = Vec::new();
    println!("# regime {id}, rcond {:.3e}", system.system().rcond());
    println!("{:>4} {:>4} {:>5} {:>16} {:>14}", "rho", "h", "k", "f_hz", "power_w");
    for rho in directions {
        for row in harmonic_spectrum(&result, rho)? {
            println!("{rho:>4} {:>4} {:>5} {:>16.6} {:>14.6e}", row.h, row.offset, row.f_hz, row.power_w);
            records.push(record(&id, spec.tau, rho, &row));
        }
    }
    emit(&records, a.out.as_deref(), a.format)?;
    Ok(())
}

fn cross_section(a: BcsArgs) -> Outcome {
    let (bundle, plan) = load(&a.inputs)?;
    let ctx = load_context(&a.ctx)?;
    let h_c = bundle.grid.center();
    let h = bundle
        .grid
        .harmonic_at_offset(a.harmonic_offset)
        .ok_or_else(|| invalid(format!("offset {} is outside the {}-harmonic window", a.harmonic_offset, bundle.grid.num_harmonics())))?;
    let ex = tms_core::model::Excitation::single(h_c, a.tau, a.pol, Complex64::new(1.0, 0.0))?;
    let result: ScatterResult = HarmonicSystem::build(&bundle.blocks, &plan, &bundle.grid)?.scatter(&ex)?;
    let id = regime_id(&plan, &a.inputs.plan);
    let mut records = Vec::new();
    println!("# regime {id}, tau {}, k {}", a.tau, a.harmonic_offset);
    println!("{:>4} {:>16} {:>12}", "rho", "bcs_m2", "bcs_dbm2");
    for rho in 1..=bundle.layout().directions {
        let sigma = bcs(&result, &ex, &ctx, h, rho, a.tau, h_c)?;
        println!("{rho:>4} {:>16.6e} {:>12.3}", sigma.m2, sigma.dbm2);
        let row = harmonic_spectrum(&result, rho)?.into_iter().find(|r| r.h == h).expect("h lies in the window");
        let mut rec = record(&id, a.tau, rho, &row);
        rec.bcs_m2 = Some(sigma.m2);
        rec.bcs_dbm2 = Some(sigma.dbm2);
        records.push(rec);
    }
    emit(&records, a.out.as_deref(), a.format)?;
    Ok(())
}

fn validate(a: ValidateArgs) -> Outcome {
    let (bundle, plan) = load(&a.inputs)?;
    let divergent = !bundle.blocks.is_frequency_flat();
    if divergent {
        eprintln!(
            "warning: bundle is not frequency-flat; the oracle uses the central harmonic's blocks and agreement is not expected"
        );
    }
    let h_c = bundle.grid.center();
    let kmax = a.kmax.min(h_c - 1).min(bundle.grid.num_harmonics() - h_c);
    let (spec, ex) = excitation(&a.excite, &bundle)?;
    if spec.harmonic_or(h_c) != h_c {
        return Err(invalid("validate excites the central harmonic; drop h= from --excite"));
    }
    let result = HarmonicSystem::build(&bundle.blocks, &plan, &bundle.grid)?.scatter(&ex)?;
    let model = OffsetSpectrum::from_result(&result, h_c, kmax)?;
    let width = 2 * bundle.layout().directions;
    let incident = ex.to_vector(&bundle.layout())?.rows((h_c - 1) * width, width).into_owned();
    let oracle = quasi_static_for(&bundle.blocks, &plan, &bundle.grid, &incident, a.samples)?;
    let report = compare(&model, &oracle, a.tol)?;

    println!("# format_version {FORMAT_VERSION}, samples {}, tol {:.1e}", a.samples, a.tol);
    println!("{:>5} {:>12} {:>12}  verdict", "k", "abs_err", "rel_err");
    for row in &report.rows {
        println!("{:>5} {:>12.3e} {:>12.3e}  {}", row.k, row.abs, row.rel, if row.pass { "pass" } else { "FAIL" });
    }
    let summary = format!("max relative error {:.3e} against tolerance {:.1e}", report.max_rel(), a.tol);
    match (report.pass(), divergent) {
        (true, _) => {
            println!("PASS: {summary}");
            Ok(())
        }
        (false, true) => {
            println!("EXPECTED DIVERGENCE: {summary}");
            Ok(())
        }
        (false, false) => {
            println!("FAIL: {summary}");
            Err(Failure::Oracle(format!("oracle comparison failed: {summary}")))
        }
    }
}

/// Parses "rho=B,k=K" where B may be "all" and K may be "±K" (or "+-K").
fn parse_probe(text: &str, directions: usize) -> Result<Vec<Probe>, Error> {
    let bad = |msg: &str| Error::Validation(format!("probe \"{text}\": {msg}"));
    let (mut rhos, mut ks) = (None, None);
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| bad("expected key=value pairs"))?;
        match key.trim() {
            "rho" if value.trim() == "all" => rhos = Some((1..=directions).collect::<Vec<_>>()),
            "rho" => rhos = Some(vec![value.trim().parse().map_err(|_| bad("rho must be an integer or all"))?]),
            "k" => {
                let v = value.trim();
                ks = Some(match v.strip_prefix('±').or_else(|| v.strip_prefix("+-")) {
                    Some(m) => {
                        let m: i64 = m.parse().map_err(|_| bad("k must be an integer or ±K"))?;
                        (-m..=m).collect::<Vec<_>>()
                    }
                    None => vec![v.parse().map_err(|_| bad("k must be an integer or ±K"))?],
                });
            }
            other => return Err(bad(&format!("unknown key {other}"))),
        }
    }
    let rhos = rhos.unwrap_or_else(|| (1..=directions).collect());
    let ks = ks.ok_or_else(|| bad("k is required"))?;
    if let Some(r) = rhos.iter().find(|&&r| r == 0 || r > directions) {
        return Err(bad(&format!("direction {r} outside 1..={directions}")));
    }
    Ok(rhos.iter().flat_map(|&rho| ks.iter().map(move |&k| Probe { rho, k })).collect())
}

fn converge(a: ConvergeArgs) -> Outcome {
    let (bundle, plan) = load(&a.inputs)?;
    if a.hmax.is_multiple_of(2) {
        return Err(invalid(format!("--hmax {} must be odd", a.hmax)));
    }
    let directions = bundle.layout().directions;
    let texts = if a.probe.is_empty() { vec!["rho=all,k=±3".to_string()] } else { a.probe.clone() };
    let mut probes = Vec::new();
    for t in &texts {
        for p in parse_probe(t, directions)? {
            if !probes.contains(&p) {
                probes.push(p);
            }
        }
    }
    let (spec, _) = excitation(&a.excite, &bundle)?;
    if spec.harmonic.is_some() {
        return Err(invalid("converge always excites the central harmonic; drop h= from --excite"));
    }
    let h_c = bundle.grid.center();
    let build = |hh: usize| {
        let layout = bundle.layout().with_harmonics(hh)?;
        let blocks = if bundle.blocks.is_frequency_flat() {
            ScattererBlocks::frequency_flat(layout, bundle.blocks.z_ref(), bundle.blocks.harmonic(1)?.clone())?
        } else {
            let half = (hh - 1) / 2;
            if half >= h_c || h_c + half > bundle.grid.num_harmonics() {
                return Err(Error::Validation(format!(
                    "dispersive bundle has no data for a {hh}-harmonic window around harmonic {h_c}"
                )));
            }
            bundle.blocks.window(h_c - half, hh)?
        };
        let grid = FrequencyGrid::centered(bundle.grid.f_in(), bundle.grid.f_m(), hh)?;
        let ex = spec.to_excitation(grid.center())?;
        HarmonicSystem::build(&blocks, &plan, &grid)?.scatter(&ex)
    };
    let sizes: Vec<usize> = (5.min(a.hmax)..=a.hmax).step_by(2).collect();
    let table = convergence_check(build, &sizes, &probes, a.tol)?;

    let mut head = format!("{:>4}", "H");
    for p in &probes {
        let _ = write!(head, " {:>14}", format!("rho{} k{:+}", p.rho, p.k));
    }
    println!("{head}");
    for row in &table.rows {
        let mut line = format!("{:>4}", row.harmonics);
        for v in &row.values {
            match v {
                Some(x) => {
                    let _ = write!(line, " {x:>14.6e}");
                }
                None => {
                    let _ = write!(line, " {:>14}", "-");
                }
            }
        }
        println!("{line}");
    }
    match table.settled_all() {
        Some(h) => println!("settled at H = {h} (tol {:.1e})", a.tol),
        None => {
            let open: Vec<String> = probes
                .iter()
                .zip(&table.settled)
                .filter(|(_, s)| s.is_none())
                .map(|(p, _)| format!("rho={},k={}", p.rho, p.k))
                .collect();
            println!("not settled by H = {} (tol {:.1e}): {}", a.hmax, a.tol, open.join(" "));
        }
    }
    Ok(())
}
