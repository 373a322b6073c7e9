//! `nhplan`: command-line front end for Hall bases, canonical systems,
//! lifting, privileged coordinates, exact steering, global planning and
//! simulation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use nhplan::canonical::CanonicalSystem;
use nhplan::desing::{desingularize, select_frame, FrameSelection};
use nhplan::hall::build_hall_basis;
use nhplan::law::ControlLaw;
use nhplan::planner::{global_plan, PlannerConfig, Status};
use nhplan::privcoord::{first_order_approx, pseudo_norm};
use nhplan::scalar::parse_decimal;
use nhplan::sim::{endpoint, integrate, Domain, SimConfig, Trajectory};
use nhplan::steer::{exact_steer, plan_all, SteerConfig};
use nhplan::sysfile::{builtin, parse_system_spec, SystemSpec};
use nhplan::system::ExprSystem;
use nhplan::{Error, Rational};

#[derive(Parser, Debug)]
#[command(
    name = "nhplan",
    version,
    about = "Nonholonomic motion planning by nilpotent approximation and lifting"
)]
struct Cli {
    /// Seed for randomized verification steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance: planner tolerance for `plan`, integrator tolerance otherwise.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the P. Hall basis of the free Lie algebra up to length R.
    Hall {
        /// Number of inputs.
        #[arg(long)]
        m: usize,
        /// Largest bracket length.
        #[arg(long)]
        r: usize,
    },
    /// Print the canonical free nilpotent system of step R on M inputs.
    Canonical {
        /// Number of inputs.
        #[arg(long)]
        m: usize,
        /// Largest bracket length.
        #[arg(long)]
        r: usize,
    },
    /// Desingularize a system at a point by lifting.
    Lift {
        /// System file, or `unicycle` / `martinet`.
        #[arg(long)]
        system: String,
        /// Anchor point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<String>,
        /// Step of the lifted system.
        #[arg(long)]
        r: usize,
        /// Frame labels, comma separated; chosen automatically when omitted.
        #[arg(long, value_delimiter = ',')]
        frame: Option<Vec<usize>>,
    },
    /// Privileged coordinates and canonical approximation of a free system.
    Approx {
        /// System file, or `unicycle` / `martinet`.
        #[arg(long)]
        system: String,
        /// Anchor point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<String>,
        /// Largest bracket length.
        #[arg(long)]
        r: usize,
    },
    /// Exact steering of the canonical system from a point to the origin.
    Steer {
        /// Number of inputs.
        #[arg(long)]
        m: usize,
        /// Largest bracket length.
        #[arg(long)]
        r: usize,
        /// Start point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        from: Vec<f64>,
        /// Smoothing order at period boundaries.
        #[arg(long, default_value_t = 0)]
        smooth: u32,
    },
    /// Global planning inside a box.
    Plan {
        /// System file, or `unicycle` / `martinet`.
        #[arg(long)]
        system: String,
        /// Start point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        from: Vec<f64>,
        /// Goal point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        to: Vec<f64>,
        /// `LO,HI` for a cube, or the n lower bounds followed by the n upper bounds.
        #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
        bounds: Vec<f64>,
        /// Use the bounded-iterate variant.
        #[arg(long)]
        modified: bool,
        /// Covering grid boxes per axis.
        #[arg(long, default_value_t = 8)]
        grid: usize,
        /// Write the planning report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the planned trajectory as CSV.
        #[arg(long)]
        traj: Option<PathBuf>,
        /// Write the concatenated control law.
        #[arg(long)]
        law: Option<PathBuf>,
    },
    /// Integrate a system under a stored control law.
    Simulate {
        /// System file, or `unicycle` / `martinet`.
        #[arg(long)]
        system: String,
        /// Initial state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        /// Control law written by `plan --law`.
        #[arg(long)]
        law: PathBuf,
        /// Write the trajectory as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_spec(name: &str) -> anyhow::Result<SystemSpec> {
    if Path::new(name).exists() {
        let text = fs::read_to_string(name).with_context(|| format!("reading {name}"))?;
        return Ok(parse_system_spec(&text)?);
    }
    builtin(name).ok_or_else(|| {
        Error::InvalidSpec(format!("no system file or bundled system named '{name}'")).into()
    })
}

fn load_system(name: &str) -> anyhow::Result<ExprSystem> {
    Ok(load_spec(name)?.to_system()?)
}

fn exact_point(values: &[String]) -> anyhow::Result<Vec<Rational>> {
    values
        .iter()
        .map(|v| {
            parse_decimal(v.trim()).ok_or_else(|| {
                anyhow::Error::from(Error::InvalidSpec(format!("invalid number '{v}'")))
            })
        })
        .collect()
}

fn check_dim(what: &str, got: usize, want: usize) -> anyhow::Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {got} components, expected {want}"
        ))
        .into());
    }
    Ok(())
}

fn write_csv(path: &Path, traj: &Trajectory<f64>) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let n = traj.states.first().map(Vec::len).unwrap_or(0);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![format!("{t:e}")];
        row.extend(x.iter().map(|v| format!("{v:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn emit(json_mode: bool, value: Value, text: String) {
    if json_mode {
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("values serialize")
        );
    } else {
        print!("{text}");
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let steer_config = SteerConfig {
        seed: cli.seed,
        ..SteerConfig::default()
    };
    match cli.command {
        Command::Hall { m, r } => {
            let basis = build_hall_basis(m, r);
            let rows: Vec<Value> = basis
                .elements
                .iter()
                .map(|e| {
                    json!({
                        "index": e.index,
                        "bracket": basis.bracket_string(e.index),
                        "length": e.length,
                        "delta": e.delta,
                        "class": e.class_id,
                    })
                })
                .collect();
            let mut text = format!(
                "P. Hall basis, m = {m}, r = {r}, level dimensions {:?}\n",
                basis.level_dims
            );
            for e in &basis.elements {
                text += &format!(
                    "{:>4}  {:<32} length {}  delta {:?}\n",
                    e.index,
                    basis.bracket_string(e.index),
                    e.length,
                    e.delta
                );
            }
            emit(
                cli.json,
                json!({ "m": m, "r": r, "level_dims": basis.level_dims, "elements": rows }),
                text,
            );
        }
        Command::Canonical { m, r } => {
            let sys = CanonicalSystem::<Rational>::new(m, r);
            let names: Vec<String> = (1..=sys.dim()).map(|i| format!("v{i}")).collect();
            let rows: Vec<Value> = (1..=sys.dim())
                .map(|j| {
                    let d = sys.dynamics(j);
                    json!({ "index": j, "weight": sys.weights()[j - 1], "channel": d.channel, "monomial": d.monomial.display_with(&names) })
                })
                .collect();
            let mut text = format!(
                "canonical system, m = {m}, r = {r}, dimension {}\n",
                sys.dim()
            );
            for j in 1..=sys.dim() {
                let d = sys.dynamics(j);
                text += &format!(
                    "v{j}' = {} * u{}\n",
                    d.monomial.display_with(&names),
                    d.channel
                );
            }
            emit(
                cli.json,
                json!({ "m": m, "r": r, "dimension": sys.dim(), "dynamics": rows }),
                text,
            );
        }
        Command::Lift {
            system,
            at,
            r,
            frame,
        } => {
            let sys = load_system(&system)?;
            let a = exact_point(&at)?;
            check_dim("anchor", a.len(), sys.names.len())?;
            let basis = build_hall_basis(sys.fields.len(), r);
            let selection = match frame {
                Some(labels) => FrameSelection {
                    labels,
                    anchor: a.clone(),
                    det_value: Rational::from_integer(0.into()),
                },
                None => select_frame(&sys, &basis, &a)?,
            };
            let lifted = desingularize(&sys, &selection, &basis)?;
            let lifted_expr = lifted.to_expr_system();
            let names = lifted.names();
            let fields: Vec<Vec<String>> = lifted_expr
                .fields
                .iter()
                .map(|f| f.iter().map(|e| e.display_with(&names)).collect())
                .collect();
            let value = json!({
                "frame": selection.labels,
                "dimension": lifted.dim(),
                "names": names,
                "fiber_labels": lifted.fiber_labels,
                "fiber_channels": lifted.fiber_channels,
                "fields": fields,
                "steps": lifted.steps,
            });
            let mut text = format!(
                "frame {:?}, lifted dimension {}\n",
                selection.labels,
                lifted.dim()
            );
            for (i, f) in fields.iter().enumerate() {
                text += &format!("xi_{} = ({})\n", i + 1, f.join(", "));
            }
            emit(cli.json, value, text);
        }
        Command::Approx { system, at, r } => {
            let sys = load_system(&system)?;
            let a = exact_point(&at)?;
            check_dim("anchor", a.len(), sys.names.len())?;
            let basis = build_hall_basis(sys.fields.len(), r);
            let approx = first_order_approx(&sys, &a, &basis)?;
            let centered: Vec<String> = sys.names.iter().map(|n| format!("d{n}")).collect();
            let z: Vec<String> = approx
                .chart
                .map
                .forward
                .iter()
                .map(|p| p.display_with(&centered))
                .collect();
            let value = json!({ "weights": approx.chart.weights, "chart": z });
            let mut text = format!("weights {:?}\n", approx.chart.weights);
            for (j, p) in z.iter().enumerate() {
                text += &format!("z{} = {}\n", j + 1, p);
            }
            emit(cli.json, value, text);
        }
        Command::Steer { m, r, from, smooth } => {
            let basis = build_hall_basis(m, r);
            check_dim("--from", from.len(), basis.len())?;
            let plan = plan_all(&basis, &steer_config)?;
            let law = exact_steer(&from, &plan).with_smoothing(smooth);
            let sys = CanonicalSystem::<f64>::from_basis(basis.clone());
            let end = endpoint(
                &sys,
                &from,
                &law,
                &SimConfig::with_tol(cli.tol.unwrap_or(1e-10)),
            )?;
            let residual = pseudo_norm(&end, &basis.free_weights);
            let text = format!(
                "{} periods, scale {:e}\nendpoint {:?}\npseudo-norm {:e}\n",
                law.periods.len(),
                law.scale,
                end,
                residual
            );
            emit(
                cli.json,
                json!({ "law": law, "endpoint": end, "pseudo_norm": residual }),
                text,
            );
        }
        Command::Plan {
            system,
            from,
            to,
            bounds,
            modified,
            grid,
            report,
            traj,
            law: law_path,
        } => {
            let sys = load_system(&system)?;
            let n = sys.names.len();
            check_dim("--from", from.len(), n)?;
            check_dim("--to", to.len(), n)?;
            let k = match bounds.len() {
                2 => Domain {
                    lower: vec![bounds[0]; n],
                    upper: vec![bounds[1]; n],
                },
                l if l == 2 * n => Domain {
                    lower: bounds[..n].to_vec(),
                    upper: bounds[n..].to_vec(),
                },
                l => bail!(Error::DimensionMismatch(format!(
                    "--box has {l} values, expected 2 or {}",
                    2 * n
                ))),
            };
            let config = PlannerConfig {
                tol: cli.tol.unwrap_or(1e-3),
                modified,
                grid,
                steer: steer_config,
                ..PlannerConfig::default()
            };
            let outcome = global_plan(&sys, &from, &to, &k, &config)?;
            let report_value = json!({ "report": outcome.report, "covering": outcome.atlas });
            if let Some(path) = &report {
                write_json(path, &report_value)?;
            }
            if let Some(path) = &law_path {
                write_json(path, &json!(outcome.law))?;
            }
            if let Some(path) = &traj {
                let t = integrate(&sys, &from, &outcome.law, &SimConfig::default())
                    .map_err(Error::from)?;
                write_csv(path, &t)?;
            }
            let r = &outcome.report;
            let text = format!(
                "status {:?}\npath {:?}\nendpoint {:?}\nresidual {:e}\niterations {}\ninput length {:e}\n",
                r.status,
                r.path,
                r.endpoint,
                r.residual,
                r.legs.iter().map(|l| l.free.records.len()).sum::<usize>(),
                r.total_length
            );
            emit(
                cli.json,
                json!({ "status": r.status, "path": r.path, "endpoint": r.endpoint, "residual": r.residual, "total_length": r.total_length }),
                text,
            );
            if r.status != Status::Converged {
                return Err(Error::IterationCapExceeded {
                    cap: config.max_iterations,
                }
                .into());
            }
        }
        Command::Simulate {
            system,
            x0,
            law,
            out,
        } => {
            let sys = load_system(&system)?;
            check_dim("--x0", x0.len(), sys.names.len())?;
            let text =
                fs::read_to_string(&law).with_context(|| format!("reading {}", law.display()))?;
            let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            let law_value = doc.get("law").cloned().unwrap_or(doc);
            let control: ControlLaw<f64> = serde_json::from_value(law_value)
                .map_err(|e| Error::InvalidSpec(format!("control law: {e}")))?;
            if control.m != sys.fields.len() {
                bail!(Error::DimensionMismatch(format!(
                    "law with {} inputs for a system with {}",
                    control.m,
                    sys.fields.len()
                )));
            }
            let t = integrate(
                &sys,
                &x0,
                &control,
                &SimConfig::with_tol(cli.tol.unwrap_or(1e-10)),
            )
            .map_err(Error::from)?;
            if let Some(path) = &out {
                write_csv(path, &t)?;
            }
            let end = t.endpoint().to_vec();
            emit(
                cli.json,
                json!({ "endpoint": end, "duration": control.duration(), "steps": t.meta.accepted_steps }),
                format!("endpoint {end:?}\n"),
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_mode = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let structured = match err.downcast_ref::<Error>() {
                Some(e) => serde_json::to_value(e).expect("errors serialize"),
                None => json!({ "code": "error" }),
            };
            let document = json!({ "error": structured, "message": err.to_string() });
            if json_mode {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&document).expect("values serialize")
                );
            }
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
