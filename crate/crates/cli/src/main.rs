mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use slipcell::cell_solver::{
    fraction_matched_slip_matrix, refine_and_extrapolate, slip_matrix, SolverOptions,
};
use slipcell::channel::{channel_profile, reconstruct, WallLaw};
use slipcell::geometry::{Pattern, UnitCellGrid};
use slipcell::homogenize::{anisotropy_sweep, drag_matrix, fit_sweep, sweep, PatternFamily};
use slipcell::output::{Artifact, Cell, CsvTable, Header};
use slipcell::riblet::{
    exact_slip, extrapolate_riblet, riblet_limit_check, solve_riblet_1d, Orientation, RibletCase,
};
use slipcell::validate::{anisotropy_grid, determinism, run, Settings};
use slipcell::wall_operator::TopCondition;
use slipcell::Error;

#[derive(Parser, Debug)]
#[command(
    name = "slipcell",
    version,
    about = "Effective slip lengths of patterned walls"
)]
#[command(args_override_self = true)]
struct Cli {
    /// Defaults for the subcommand's options, one `key = value` per line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value = "halfspace", value_parser = parse_top)]
    top: TopCondition,
    #[arg(long, default_value_t = 1e-10, value_parser = parse_tol)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    #[arg(long)]
    preconditioner: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            preconditioner: self.preconditioner,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Resolution {
    /// Grid cells per side.
    #[arg(long, default_value_t = 256, value_parser = parse_n)]
    n: usize,
    /// Comma-separated grid sizes for Richardson extrapolation, e.g.
    /// 128,256,512.
    #[arg(long, value_parser = parse_levels)]
    refine: Option<Levels>,
}

impl Resolution {
    fn levels(&self) -> Vec<usize> {
        self.refine
            .as_ref()
            .map_or_else(|| vec![self.n], |l| l.0.clone())
    }
}

#[derive(Debug, Clone)]
struct Levels(Vec<usize>);

#[derive(Debug, Clone)]
struct Fractions(Vec<f64>);

#[derive(Subcommand, Debug)]
enum Command {
    /// Slip matrix of one pattern.
    Solve {
        #[arg(long, value_parser = parse_pattern)]
        pattern: Pattern,
        #[command(flatten)]
        res: Resolution,
        /// Raw raster solve without solid-fraction matching.
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Slip matrices over a family of patterns.
    Sweep {
        #[arg(long, value_parser = parse_family)]
        family: PatternFamily,
        /// `start:stop:count` or a comma-separated list.
        #[arg(long, value_parser = parse_phis)]
        phis: Fractions,
        #[command(flatten)]
        res: Resolution,
        #[command(flatten)]
        common: Common,
    },
    /// Affine fit of V11 against 1/sqrt(phi) over a sweep.
    Fit {
        #[arg(long, value_parser = parse_family)]
        family: PatternFamily,
        #[arg(long, value_parser = parse_phis)]
        phis: Fractions,
        #[command(flatten)]
        res: Resolution,
        #[command(flatten)]
        common: Common,
    },
    /// Riblet slip lengths against the closed form, or the critical limit.
    Riblet {
        #[arg(long, value_parser = parse_phis, default_value = "0.1:0.9:9")]
        phis: Fractions,
        #[command(flatten)]
        res: Resolution,
        /// Closed-form values only.
        #[arg(long)]
        exact_only: bool,
        /// Critical sequence a = exp(-C0/eps) instead of a table.
        #[arg(long)]
        limit_c0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Drag matrix of an isolated obstacle from periodic cells.
    Drag {
        /// Pattern in period units.
        #[arg(long, value_parser = parse_pattern)]
        pattern: Pattern,
        #[arg(long, value_parser = parse_list, default_value = "2,3,4")]
        periods: Fractions,
        #[arg(long, default_value_t = 256, value_parser = parse_n)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Velocity profile of the effective channel flow.
    Profile {
        /// `dirichlet`, `perfect`, `navier:m11,m12,m22`, or `pattern` to
        /// derive the law from --pattern at period --eps.
        #[arg(long, default_value = "dirichlet")]
        law: String,
        #[arg(long, value_parser = parse_pattern)]
        pattern: Option<Pattern>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 256, value_parser = parse_n)]
        n: usize,
        #[arg(long, value_parser = parse_list, default_value = "1,0")]
        direction: Fractions,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// V11 of rectangles of fixed area as the aspect ratio varies.
    Anisotropy {
        #[arg(long)]
        phi: f64,
        #[command(flatten)]
        res: Resolution,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the acceptance suite and writes its artifacts.
    Validate {
        #[arg(long, default_value = "validation")]
        out: PathBuf,
        /// Coarse grids; fast, but tolerances are not meaningful.
        #[arg(long)]
        quick: bool,
        /// Skip the second run that checks determinism.
        #[arg(long)]
        single: bool,
    },
}

fn parse_n(s: &str) -> Result<usize, String> {
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a positive integer"))?;
    if !n.is_power_of_two() || n < 8 {
        return Err(format!("n must be a power of two >= 8, got {n}"));
    }
    Ok(n)
}

fn parse_levels(s: &str) -> Result<Levels, String> {
    let ns = s.split(',').map(parse_n).collect::<Result<Vec<_>, _>>()?;
    if ns.len() < 3 {
        return Err("refinement needs at least 3 grid sizes".into());
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err("grid sizes must increase".into());
    }
    Ok(Levels(ns))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("'{s}' is not a number"))
}

fn parse_list(s: &str) -> Result<Fractions, String> {
    s.split(',')
        .map(parse_f64)
        .collect::<Result<Vec<_>, _>>()
        .map(Fractions)
}

fn parse_phis(s: &str) -> Result<Fractions, String> {
    let values = if let Some((start, rest)) = s.split_once(':') {
        let (stop, count) = rest.split_once(':').ok_or("expected start:stop:count")?;
        let (start, stop) = (parse_f64(start)?, parse_f64(stop)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("'{count}' is not a count"))?;
        match count {
            0 => return Err("count must be positive".into()),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        parse_list(s)?.0
    };
    if let Some(bad) = values.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(format!("solid fractions must lie in (0, 1), got {bad}"));
    }
    Ok(Fractions(values))
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t = parse_f64(s)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(format!("tolerance must lie in (0, 1), got {t}"));
    }
    Ok(t)
}

fn parse_top(s: &str) -> Result<TopCondition, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pattern(s: &str) -> Result<Pattern, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<PatternFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidPattern(_)
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_)
            | Error::Unsupported(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn config_text(args: &impl std::fmt::Debug) -> String {
    format!("{args:?}")
}

fn emit(out: &Option<PathBuf>, artifact: &Artifact) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, &artifact.contents)
            .map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(artifact.contents.as_bytes())
                .map_err(|e| Failure::Numerical(e.to_string()))
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, Failure> {
    let header = Header::for_config(&config_text(&command));
    match command {
        Command::Solve {
            pattern,
            res,
            raw,
            common,
        } => {
            let options = common.solver();
            options.validate()?;
            let doc = match &res.refine {
                Some(levels) => {
                    let study = refine_and_extrapolate(&pattern, &levels.0, common.top, options)?;
                    Artifact::json("solve.json", &header, &study)?
                }
                None => {
                    let grid = UnitCellGrid::new(res.n, common.top)?;
                    let m = if raw {
                        slip_matrix(&pattern, &grid, options)?
                    } else {
                        fraction_matched_slip_matrix(&pattern, &grid, options)?
                    };
                    if m.under_resolved {
                        eprintln!("warning: pattern spans fewer than 4 cells; refine the grid");
                    }
                    Artifact::json("solve.json", &header, &m)?
                }
            };
            emit(&common.out, &doc)?;
        }
        Command::Sweep {
            family,
            phis,
            res,
            common,
        } => {
            let rows = sweep(family, &phis.0, common.top, &res.levels(), common.solver());
            let mut t =
                CsvTable::new(["phi_s", "v11", "v22", "v12", "v21", "extrapolated", "error"]);
            for r in &rows {
                let m = r.matrix.as_ref();
                t.push(vec![
                    r.solid_fraction.into(),
                    m.map(|m| m.v[0][0]).into(),
                    m.map(|m| m.v[1][1]).into(),
                    m.map(|m| m.v[0][1]).into(),
                    m.map(|m| m.v[1][0]).into(),
                    m.map_or(Cell::Missing, |m| m.extrapolated.into()),
                    r.error.clone().map_or(Cell::Missing, Cell::Text),
                ])?;
            }
            emit(&common.out, &Artifact::csv("sweep.csv", &header, &t))?;
            if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
                eprintln!(
                    "error at phi = {}: {}",
                    r.solid_fraction,
                    r.error.as_deref().unwrap_or("")
                );
                return Ok(ExitCode::from(1));
            }
        }
        Command::Fit {
            family,
            phis,
            res,
            common,
        } => {
            let rows = sweep(family, &phis.0, common.top, &res.levels(), common.solver());
            let fit = fit_sweep(family, &rows)?;
            emit(&common.out, &Artifact::json("fit.json", &header, &fit)?)?;
        }
        Command::Riblet {
            phis,
            res,
            exact_only,
            limit_c0,
            common,
        } => {
            if let Some(c0) = limit_c0 {
                let lim = riblet_limit_check(c0, &[10, 20, 25, 50, 100])?;
                emit(
                    &common.out,
                    &Artifact::json("riblet_limit.json", &header, &lim)?,
                )?;
                return Ok(ExitCode::SUCCESS);
            }
            let mut t = CsvTable::new([
                "phi_s",
                "slip_parallel_exact",
                "slip_perp_exact",
                "slip_parallel_computed",
                "slip_perp_computed",
            ]);
            for &phi in &phis.0 {
                let mut row: Vec<Cell> = vec![
                    phi.into(),
                    exact_slip(phi, Orientation::Parallel)?.into(),
                    exact_slip(phi, Orientation::Perpendicular)?.into(),
                ];
                for o in [Orientation::Parallel, Orientation::Perpendicular] {
                    row.push(if exact_only {
                        Cell::Missing
                    } else if let Some(levels) = &res.refine {
                        extrapolate_riblet(phi, o, common.top, &levels.0, common.solver())?
                            .1
                            .value
                            .into()
                    } else {
                        solve_riblet_1d(
                            &RibletCase::new(o, phi, res.n, common.top)?,
                            common.solver(),
                        )?
                        .matched
                        .into()
                    });
                }
                t.push(row)?;
            }
            emit(&common.out, &Artifact::csv("riblets.csv", &header, &t))?;
        }
        Command::Drag {
            pattern,
            periods,
            n,
            common,
        } => {
            let d = drag_matrix(&pattern, &periods.0, n, common.solver())?;
            emit(&common.out, &Artifact::json("drag.json", &header, &d)?)?;
        }
        Command::Profile {
            law,
            pattern,
            eps,
            n,
            direction,
            points,
            common,
        } => {
            let e = match direction.0.as_slice() {
                [a, b] => [*a, *b],
                _ => return Err(Failure::Usage("--direction takes two components".into())),
            };
            let wall = match law.trim() {
                "dirichlet" => WallLaw::Dirichlet,
                "perfect" => WallLaw::PerfectSlip,
                "pattern" => {
                    let (Some(p), Some(eps)) = (pattern, eps) else {
                        return Err(Failure::Usage("--law pattern needs --pattern and --eps".into()));
                    };
                    let grid = UnitCellGrid::new(n, common.top)?;
                    let m = fraction_matched_slip_matrix(&p, &grid, common.solver())?;
                    reconstruct(&m, eps, e)?.wall_law()
                }
                other => match other.strip_prefix("navier:") {
                    Some(vals) => match parse_list(vals).map_err(Failure::Usage)?.0.as_slice() {
                        [a, b, c] => WallLaw::navier([[*a, *b], [*b, *c]])?,
                        _ => return Err(Failure::Usage("navier takes m11,m12,m22".into())),
                    },
                    None => {
                        return Err(Failure::Usage(format!(
                            "unknown wall law '{other}' (expected dirichlet|perfect|navier:m11,m12,m22|pattern)"
                        )))
                    }
                },
            };
            let profile = channel_profile(&wall, e)?;
            let mut t = CsvTable::new(["x3", "u1", "u2"]);
            for k in 0..points.max(2) {
                let x3 = k as f64 / (points.max(2) - 1) as f64;
                let u = profile.velocity(x3);
                t.push(vec![x3.into(), u[0].into(), u[1].into()])?;
            }
            emit(&common.out, &Artifact::csv("profile.csv", &header, &t))?;
        }
        Command::Anisotropy { phi, res, common } => {
            if !(phi > 0.0 && phi < 1.0) {
                return Err(Failure::Usage(format!(
                    "--phi must lie in (0, 1), got {phi}"
                )));
            }
            let rows = anisotropy_sweep(
                phi,
                &anisotropy_grid(phi),
                common.top,
                &res.levels(),
                common.solver(),
            )?;
            let mut t = CsvTable::new(["l1", "l2", "v11", "under_resolved"]);
            for r in &rows {
                t.push(vec![
                    r.len1.into(),
                    r.len2.into(),
                    r.v11.into(),
                    r.under_resolved.into(),
                ])?;
            }
            emit(&common.out, &Artifact::csv("anisotropy.csv", &header, &t))?;
        }
        Command::Validate { out, quick, single } => {
            let settings = if quick {
                Settings::quick()
            } else {
                Settings::default()
            };
            std::fs::create_dir_all(&out)
                .map_err(|e| Failure::Numerical(format!("cannot create {}: {e}", out.display())))?;
            let first = run(&settings, |r| eprintln!("{}", r.line()));
            let mut report = first.clone();
            if !single {
                let second = run(&settings, |_| {});
                let d = determinism(&first, &second);
                eprintln!("{}", d.line());
                report.criteria.push(d);
            }
            let summary = report.summary(&Header::for_config(&settings.canonical()));
            for a in report.artifacts.iter().chain(std::iter::once(&summary)) {
                a.write_to(&out)?;
            }
            print!("{}", summary.contents);
            if !report.all_passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cmd = Cli::command();
    let argv = match config::expand(std::env::args_os().collect(), &cmd) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match cmd
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
