use clap::{Args, Parser, Subcommand};
use loewner_core::ads::{
    arcs_of_curve, is_positive_curve, plane_boundary_check, pleat_from_circular, pleat_from_welding, welding_graph, AdSBoundaryPoint,
};
use loewner_core::energy::{arc_energy, loop_energy, loop_energy_driving, loop_energy_driving_default, LiouvilleResolution};
use loewner_core::io::{self, write_atomic, write_value};
use loewner_core::loewner::{extract_driving, trace};
use loewner_core::optcurve::{minimize_curve, CurveProblem};
use loewner_core::optweld::{minimize_welding, WeldProblem};
use loewner_core::weld::{c1_break_report, fit_mobius_pieces, welding_from_curve};
use loewner_core::{CurvePolyline, Error, MobiusReal, SpherePoint};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "loewner", version, about = "Loewner energy, conformal welding and energy minimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Loop energy of a closed curve by both methods, or the arc energy of an open one.
    Energy {
        #[arg(long)]
        curve: PathBuf,
        /// Root index for the driving method.
        #[arg(long, default_value_t = 0)]
        root: usize,
        /// Cut-off arclength ε for the driving method; a fiftieth of the length by default.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long, default_value_t = 64)]
        angular: usize,
        #[arg(long, default_value_t = 2048)]
        max_angular: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Driving function of a chord of the upper half-plane starting on ℝ.
    Drive {
        #[arg(long)]
        curve: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Loewner trace of a driving function.
    Trace {
        #[arg(long)]
        driving: PathBuf,
        #[arg(long, default_value_t = 1000)]
        steps_per_unit: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Welding of a closed curve with a Möbius fit on each marked piece.
    Weld {
        #[arg(long)]
        curve: PathBuf,
        /// Resample to about this many points first (0 keeps the curve).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Energy minimizer through marked points.
    OptCurve {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 20)]
        max_sweeps: usize,
        #[arg(long, default_value_t = 100)]
        arc_samples: usize,
        /// Directory for curve.json, trace.csv and report.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Energy minimizer among weldings with h(x_k) = y_k.
    OptWeld {
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 30)]
        max_sweeps: usize,
        #[arg(long, default_value_t = 80)]
        arc_samples: usize,
        /// Directory for welding.json, curve.json, trace.csv and report.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Positivity of a welding graph and distance of each piece to its plane.
    AdsCheck {
        #[arg(long)]
        welding: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Pleated plane of a piecewise Möbius welding (AdS³) or a piecewise circular curve (ℍ³).
    Pleat {
        #[arg(long, conflicts_with = "curve", required_unless_present = "curve")]
        welding: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// SVG polyline of a curve, or of the graph of a welding.
    Plot {
        #[arg(long, conflicts_with = "welding", required_unless_present = "welding")]
        curve: Option<PathBuf>,
        #[arg(long)]
        welding: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

type Result<T> = std::result::Result<T, Error>;

fn emit(out: &Output, v: &Value) -> Result<()> {
    match &out.out {
        Some(p) => write_value(p, v),
        None => {
            print!("{}", io::to_text(v));
            Ok(())
        }
    }
}

fn closed_curve(path: &Path) -> Result<CurvePolyline> {
    let c = io::read_curve(path)?;
    if !c.closed {
        return Err(Error::InvalidInput(format!("{}: expected a closed curve", path.display())));
    }
    Ok(c)
}

fn pieces_report(w: &loewner_core::weld::WeldingSamples) -> Result<Value> {
    if w.breakpoints.as_ref().is_none_or(|b| b.x.len() < 2) {
        return Ok(Value::Null);
    }
    let pieces = fit_mobius_pieces(w)?;
    let maps: Vec<MobiusReal> = pieces.iter().map(|p| p.0).collect();
    let jumps = c1_break_report(w, &maps)?;
    Ok(json!({
        "maps": io::to_value(&maps)?,
        "residuals": pieces.iter().map(|p| p.1).collect::<Vec<_>>(),
        "c1_jumps": jumps,
    }))
}

fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("sweep,energy\n");
    for (i, e) in trace.iter().enumerate() {
        s.push_str(&format!("{i},{e}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Energy { curve, root, epsilon, levels, angular, max_angular, out } => {
            let c = io::read_curve(&curve)?;
            let res = LiouvilleResolution { levels, angular, max_angular };
            let v = if c.closed {
                let driving = match epsilon {
                    Some(eps) => loop_energy_driving(&c, root, eps)?,
                    None => loop_energy_driving_default(&c, root)?,
                };
                json!({
                    "liouville": io::to_value(&loop_energy(&c, res)?)?,
                    "rooted_driving": io::to_value(&driving)?,
                })
            } else {
                json!({ "arc": io::to_value(&arc_energy(&c, res)?)? })
            };
            emit(&out, &v)
        }
        Command::Drive { curve, out } => {
            let w = extract_driving(&io::read_curve(&curve)?)?;
            emit(&out, &io::driving_to_value(&w))
        }
        Command::Trace { driving, steps_per_unit, out } => {
            let c = trace(&io::read_driving(&driving)?, steps_per_unit)?;
            emit(&out, &io::curve_to_value(&c))
        }
        Command::Weld { curve, samples, out } => {
            let c = closed_curve(&curve)?;
            let w = welding_from_curve(&c, samples)?;
            let mut v = io::welding_to_value(&w);
            v["pieces"] = pieces_report(&w)?;
            emit(&out, &v)
        }
        Command::OptCurve { points, init, tol, max_sweeps, arc_samples, out_dir } => {
            let pts = io::marked_points_from_value(&io::read_value(&points)?)?;
            let initial = closed_curve(&init)?;
            let problem = CurveProblem { points: pts, initial, tol, max_sweeps, arc_samples };
            problem.validate()?;
            let s = minimize_curve(&problem)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", out_dir.display())))?;
            write_value(&out_dir.join("curve.json"), &io::curve_to_value(&s.curve))?;
            write_atomic(&out_dir.join("trace.csv"), trace_csv(&s.energy_trace).as_bytes())?;
            let report = json!({
                "sweeps": s.sweeps,
                "converged": s.converged,
                "residuals": s.residuals,
                "energy": s.energy_trace.last(),
            });
            write_value(&out_dir.join("report.json"), &report)?;
            if !s.converged {
                return Err(Error::Numerical(format!("no convergence in {} sweeps; best iterate written", s.sweeps)));
            }
            Ok(())
        }
        Command::OptWeld { constraints, init, tol, max_sweeps, arc_samples, out_dir } => {
            let (x, y) = io::constraints_from_value(&io::read_value(&constraints)?)?;
            let initial_curve = init.as_deref().map(closed_curve).transpose()?;
            let problem = WeldProblem { x, y, initial_curve, tol, max_sweeps, arc_samples };
            problem.validate()?;
            let s = minimize_welding(&problem)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", out_dir.display())))?;
            write_value(&out_dir.join("welding.json"), &io::welding_to_value(&s.welding))?;
            write_value(&out_dir.join("curve.json"), &io::curve_to_value(&s.curve))?;
            write_atomic(&out_dir.join("trace.csv"), trace_csv(&s.energy_trace).as_bytes())?;
            let report = json!({
                "sweeps": s.sweeps,
                "polished": s.polished,
                "converged": s.converged,
                "fits": io::to_value(&s.fits)?,
                "constraint_residual": s.welding.constraint_residual(&problem.x, &problem.y),
                "energy": s.energy_trace.last(),
            });
            write_value(&out_dir.join("report.json"), &report)?;
            if !s.converged {
                return Err(Error::Numerical(format!("no convergence in {} sweeps; best iterate written", s.sweeps)));
            }
            Ok(())
        }
        Command::AdsCheck { welding, out } => {
            let w = io::read_welding(&welding)?;
            let pos = is_positive_curve(&welding_graph(&w))?;
            let mut planes = Vec::new();
            if let Some(b) = w.breakpoints.as_ref().filter(|b| b.x.len() >= 2) {
                let pieces = fit_mobius_pieces(&w)?;
                for (k, (m, _)) in pieces.iter().enumerate() {
                    let (a, z) = (b.x[k], b.x[(k + 1) % b.x.len()]);
                    let span = (z - a).rem_euclid(std::f64::consts::TAU);
                    let mut worst = 0.0f64;
                    for (&t, &h) in w.theta.iter().zip(&w.image) {
                        if (t - a).rem_euclid(std::f64::consts::TAU) <= span {
                            let p = AdSBoundaryPoint::new(t, h);
                            let plane = loewner_core::ads::SpacelikePlane::new(m.inverse());
                            worst = worst.max(plane.pairing(&p).abs());
                        }
                    }
                    planes.push(json!({"piece": k, "max_pairing": worst, "identity_check": plane_boundary_check(&m.inverse(), a)}));
                }
            }
            emit(&out, &json!({"positive": pos.positive, "witness": pos.witness, "planes": planes}))
        }
        Command::Pleat { welding, curve, out } => {
            let plane = if let Some(path) = welding {
                let w = io::read_welding(&path)?;
                let b = w
                    .breakpoints
                    .clone()
                    .filter(|b| b.x.len() >= 2)
                    .ok_or_else(|| Error::InvalidInput("welding needs at least 2 breakpoints".into()))?;
                let pieces: Vec<MobiusReal> = fit_mobius_pieces(&w)?.into_iter().map(|p| p.0).collect();
                let bp: Vec<AdSBoundaryPoint> = b.x.iter().zip(&b.y).map(|(&x, &y)| AdSBoundaryPoint::new(x, y)).collect();
                pleat_from_welding(&pieces, &bp)?
            } else {
                let c = closed_curve(curve.as_deref().expect("clap requires one input"))?;
                pleat_from_circular(&arcs_of_curve(&c)?)?
            };
            emit(&out, &io::to_value(&plane)?)
        }
        Command::Plot { curve, welding, out } => {
            let lines = if let Some(path) = curve {
                let c = io::read_curve(&path)?;
                let mut lines = vec![];
                let mut cur = vec![];
                for p in &c.points {
                    match p {
                        SpherePoint::Finite(z) => cur.push([z.re, z.im]),
                        SpherePoint::Infinity => lines.push((std::mem::take(&mut cur), false)),
                    }
                }
                let whole = lines.is_empty();
                lines.push((cur, c.closed && whole));
                lines
            } else {
                let w = io::read_welding(welding.as_deref().expect("clap requires one input"))?;
                vec![(w.theta.iter().zip(&w.image).map(|(&t, &h)| [t, h]).collect(), false)]
            };
            write_atomic(&out, io::svg_polylines(&lines).as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LOEWNER_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
