use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use mcflow_core::config::InitialGuess;
use mcflow_core::{
    assemble_global_n3, c_zero, eval_arc, eval_inf_planes, solve_cone, solve_dirichlet, verify, ArcPiece,
    ConeProfile, Error, FnField, GridField, Params, Rect, RunConfig, ScalarField, ShiftSample, SubSolution,
};

#[derive(Parser)]
#[command(name = "mcflow", version, about = "Travelling graphs of forced mean curvature motion")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (a directory for `figures`); standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `verify.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a field on the configured points and write CSV.
    Eval { field: FieldKind },
    /// Run a verification suite; exit status 1 if any check fails.
    Verify { suite: Suite },
    /// Arc surfaces for three sector widths, I_r curves and a gnuplot script.
    Figures,
    /// Newton solve of the Dirichlet problem with plane boundary data.
    Solve,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldKind {
    Eikonal,
    Sub,
    Super,
    Arc,
    Cone,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Subsolution,
    Cone,
    Laplace,
    Sandwich,
}

enum Failure {
    Checks,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Lib(e)) => {
            eprintln!("mcflow: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.verify.seed = s;
    }
    match cli.command {
        Command::Eval { field } => eval(&cfg, field, cli.out.as_deref()),
        Command::Verify { suite } => verify_suite(&cfg, suite, cli.out.as_deref()),
        Command::Figures => figures(&cfg, cli.out.as_deref().unwrap_or(Path::new("figures"))),
        Command::Solve => solve(&cfg, cli.out.as_deref()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_error(p: &Path, e: io::Error) -> Error {
    Error::Io(format!("{}: {e}", p.display()))
}

fn cone_for(cfg: &RunConfig, params: &Params) -> Result<ConeProfile, Error> {
    solve_cone(params, cfg.cone.r_max, cfg.cone.tol)
}

fn eval(cfg: &RunConfig, kind: FieldKind, out: Option<&Path>) -> Result<(), Failure> {
    let params = cfg.params()?;
    if let FieldKind::Cone = kind {
        return eval_cone(cfg, &params, out);
    }
    let field: Box<dyn ScalarField> = match kind {
        FieldKind::Eikonal => {
            let spec = cfg.plane_spec()?;
            Box::new(FnField(move |x: &[f64]| eval_inf_planes(&spec, x).0))
        }
        FieldKind::Sub => Box::new(SubSolution::new(cfg.measure()?, params)?),
        FieldKind::Super => {
            let profile = cfg.profile()?;
            let cone = Arc::new(cone_for(cfg, &params)?);
            let reach = cfg
                .sample_points()?
                .iter()
                .map(|x| x[0].hypot(x[1]))
                .fold(10.0, f64::max);
            Box::new(assemble_global_n3(cone, &profile, cfg.lambda0(), &ShiftSample::standard(reach))?)
        }
        FieldKind::Arc => {
            let a = cfg.arc()?;
            Box::new(ArcPiece::new(a.theta1, a.theta2, a.lambda, Arc::new(cone_for(cfg, &params)?))?)
        }
        FieldKind::Cone => unreachable!(),
    };
    let points = cfg.sample_points()?;
    let mut w = output(out)?;
    let d = params.base_dim();
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(w, "{},value", header.join(","))?;
    for x in &points {
        let v = field.value(x)?;
        let coords: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{v}", coords.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// `r,v,phi_c` on the sample radii (or the integration grid when none are
/// given), with asymptotic constant `cone.target_c`, default `C0`.
fn eval_cone(cfg: &RunConfig, params: &Params, out: Option<&Path>) -> Result<(), Failure> {
    let prof = cone_for(cfg, params)?;
    let target = match cfg.cone.target_c {
        Some(c) => c,
        None if params.is_planar() => prof.c_raw(),
        None => c_zero(params)?,
    };
    let radii: Vec<f64> = if cfg.sample.radii.is_empty() {
        prof.r_grid().to_vec()
    } else {
        cfg.sample.radii.clone()
    };
    let mut w = output(out)?;
    writeln!(w, "r,v,phi_c")?;
    for r in radii {
        writeln!(w, "{r},{},{}", prof.slope(r)?, prof.eval_phi_c(r, target)?)?;
    }
    w.flush()?;
    Ok(())
}

fn verify_suite(cfg: &RunConfig, suite: Suite, out: Option<&Path>) -> Result<(), Failure> {
    let report = match suite {
        Suite::Subsolution => verify::suite_subsolution(cfg)?,
        Suite::Cone => verify::suite_cone(cfg)?,
        Suite::Laplace => verify::suite_laplace(cfg)?,
        Suite::Sandwich => verify::suite_sandwich(cfg)?,
    };
    let mut w = output(out)?;
    report.write(&mut w)?;
    w.flush()?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn regime(width: f64) -> &'static str {
    if (width - PI).abs() < 1e-12 {
        "eq_pi"
    } else if width < PI {
        "lt_pi"
    } else {
        "gt_pi"
    }
}

fn figures(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let params = cfg.params()?;
    let f = &cfg.figures;
    if f.n < 2 || f.n_radii < 2 || !(f.r_min > 0.0 && f.r_min < f.r_max) {
        return Err(Error::Config("figures need n, n_radii >= 2 and 0 < r_min < r_max".into()).into());
    }
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let cone = Arc::new(cone_for(cfg, &params)?);
    let radii = verify::log_spaced(f.r_min, f.r_max, f.n_radii);
    let l = f.half_width;
    let points = mcflow_core::config::grid_points(-l, l, f.n, -l, l, f.n);
    let mut script = String::from(
        "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,700\n",
    );
    for (i, &width) in f.widths.iter().enumerate() {
        let tag = format!("{i}_{}", regime(width));
        let (t1, t2) = (-0.5 * width, 0.5 * width);
        let piece = ArcPiece::new(t1, t2, f.lambda, cone.clone())?;

        let surface = format!("arc_{tag}.csv");
        let mut w = output(Some(&dir.join(&surface)))?;
        writeln!(w, "x1,x2,value")?;
        for x in &points {
            writeln!(w, "{},{},{}", x[0], x[1], eval_arc(&piece, x)?)?;
        }
        w.flush()?;

        let curves = format!("ir_{tag}.csv");
        let mut w = output(Some(&dir.join(&curves)))?;
        writeln!(w, "r,theta_bar,lower,upper,nonempty")?;
        for &r in &radii {
            let tb = cone.theta_bar(r)?;
            let (lo, hi) = (t1 + tb, t2 - tb);
            writeln!(w, "{r},{tb},{lo},{hi},{}", u8::from(lo <= hi))?;
        }
        w.flush()?;

        script.push_str(&format!(
            "\nset output 'arc_{tag}.png'\nset title 'arc super-solution, theta2 - theta1 = {width:.4}'\n\
             set xlabel 'x1'\nset ylabel 'x2'\nset dgrid3d {n},{n}\nset hidden3d\nsplot '{surface}' using 1:2:3 with lines\n\
             \nset output 'ir_{tag}.png'\nset title 'I_r, theta2 - theta1 = {width:.4}'\nset xlabel 'r'\n\
             set ylabel 'theta'\nset logscale x\nplot '{curves}' using 1:3 with lines title 'theta1 + theta_bar', \
             '{curves}' using 1:4 with lines title 'theta2 - theta_bar'\nunset logscale x\nunset dgrid3d\n",
            n = f.n
        ));
    }
    fs::write(dir.join("figures.gp"), script).map_err(|e| io_error(dir, e))?;
    Ok(())
}

fn solve(cfg: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let params = cfg.params()?;
    let spec = cfg.plane_spec()?;
    let sub = SubSolution::new(spec.matched_measure()?, params)?;
    let s = &cfg.solve;
    let domain = Rect::square(s.half_width)?;
    let opts = s.newton_options();
    let sol = match s.initial {
        InitialGuess::Sub => solve_dirichlet(domain, s.h, &spec, &sub, &params, &opts)?,
        InitialGuess::Super => solve_dirichlet(domain, s.h, &spec, &spec, &params, &opts)?,
        InitialGuess::Average => {
            let avg = FnField(|x: &[f64]| 0.5 * (sub.value(x).unwrap_or(f64::NAN) + spec.value(x).unwrap_or(f64::NAN)));
            solve_dirichlet(domain, s.h, &spec, &avg, &params, &opts)?
        }
    };
    eprintln!(
        "converged in {} iterations, max residual {:e}",
        sol.iterations(),
        sol.residual_max
    );
    write_grid(&sol.field, out)
}

fn write_grid(field: &GridField, out: Option<&Path>) -> Result<(), Failure> {
    let binary = out.is_some_and(|p| p.extension().is_some_and(|e| e == "bin"));
    let mut w = output(out)?;
    if binary {
        field.write_binary(&mut w)?;
    } else {
        field.write_csv(&mut w)?;
    }
    w.flush()?;
    Ok(())
}
