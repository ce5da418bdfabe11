//! Command-line frontend: validate, simulate and analyze machine files,
//! build the zoo constructions, convert between machine kinds, and run the
//! range-membership decision procedure.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qfst::decide::{range_member, DecisionConfig, InconclusiveReason, RangeVerdict};
use qfst::format::{
    machine_from_json, qfa_to_json, transducer_from_json, transducer_to_json, AnyMachine,
};
use qfst::machine::{validate_spec, Kind, TransducerSpec};
use qfst::oracle::{compare_distributions, path_sum_distribution};
use qfst::qfa::validate_qfa;
use qfst::relations::{check_isolated_cutpoint, check_with_probability, CheckReport, RelationSpec};
use qfst::semantics::{output_distribution, run, OutputDistribution, TotalState};
use qfst::transforms;
use qfst::zoo;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit status used by `range` for a negative verdict.
const EXIT_NO: u8 = 3;
/// Exit status used by `range` when the search cannot decide.
const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Parser)]
#[command(name = "qfst", version, about = "probabilistic and quantum transducer toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct MachineArg {
    /// Machine description file (JSON).
    #[arg(long)]
    machine: PathBuf,
    /// Skip the validation gate before simulating.
    #[arg(long, default_value_t = false)]
    no_validate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a machine file against the numeric invariants of its kind.
    Validate {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a machine on an input and print the final total state.
    Run {
        #[command(flatten)]
        machine: MachineArg,
        #[arg(long)]
        input: String,
    },
    /// Print the output distribution T(.|input).
    Dist {
        #[command(flatten)]
        machine: MachineArg,
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check relation computation over a bounded input set, or compare the
    /// simulator against the path-sum oracle (--oracle).
    Check {
        #[command(flatten)]
        machine: MachineArg,
        /// Relation name: R1..R5, or PCP together with --pcp-v/--pcp-w.
        #[arg(long, conflicts_with = "oracle")]
        relation: Option<String>,
        #[arg(long, value_parser = ["prob", "cutpoint"], default_value = "prob")]
        mode: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Cross-check the step semantics against explicit path sums.
        #[arg(long, default_value_t = false)]
        oracle: bool,
        #[arg(long, value_delimiter = ',')]
        pcp_v: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        pcp_w: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Build one of the machine families and emit its description.
    Zoo {
        /// R1..R5, PCP, parity, end0.
        #[arg(long)]
        family: String,
        #[arg(long, value_parser = ["dfst", "pfst", "qfst"])]
        kind: Option<String>,
        /// Family parameters as key=value (k, l, cap); repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        pcp_v: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        pcp_w: Vec<String>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Convert machines: automaton <-> transducer, squared moduli,
    /// end-transition normalization, cutpoint shifting.
    Convert {
        #[arg(long)]
        from: PathBuf,
        /// Target kind for automaton/transducer conversion.
        #[arg(long, value_parser = ["qfst", "qfa"])]
        to: Option<String>,
        /// Replace amplitudes by squared moduli (quantum -> probabilistic).
        #[arg(long, default_value_t = false)]
        squared_moduli: bool,
        /// Rewrite the end transition into a permutation.
        #[arg(long, default_value_t = false)]
        normalize: bool,
        /// Shift an isolated cutpoint to 1/2 by probabilistic mixing.
        #[arg(long)]
        shift_cutpoint: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Deterministic subprogram for shifting a cutpoint below 1/2.
        #[arg(long)]
        subprogram: Option<PathBuf>,
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Skip the validation gate on the source machine.
        #[arg(long, default_value_t = false)]
        no_validate: bool,
    },
    /// Decide whether an output word is ever produced above the cutpoint.
    Range {
        #[command(flatten)]
        machine: MachineArg,
        #[arg(long)]
        output: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 5.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1_000_000)]
        cap: usize,
    },
    /// Classify the Markov chain of one transition matrix.
    Classify {
        #[command(flatten)]
        machine: MachineArg,
        /// Input symbol whose matrix is classified.
        #[arg(long)]
        symbol: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn tolerance() -> f64 {
    std::env::var("QFST_TOL")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(qfst::DEFAULT_TOL)
}

/// Fixed-point rendering with 12 significant digits.
fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.000000000000".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

fn load_transducer(path: &Path, no_validate: bool, tol: f64) -> Result<TransducerSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let spec = transducer_from_json(&text)?;
    if !no_validate {
        let report = validate_spec(&spec, tol);
        if !report.is_empty() {
            bail!("machine fails validation (use --no-validate to override):\n{report}");
        }
    }
    Ok(spec)
}

fn dist_lines(spec: &TransducerSpec, dist: &OutputDistribution) -> Vec<String> {
    let mut entries: Vec<(String, f64)> = dist
        .accept
        .iter()
        .map(|(w, &p)| (spec.output_alphabet().render_output(w), p))
        .collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let mut lines: Vec<String> = entries
        .into_iter()
        .map(|(w, p)| format!("{w} {}", sig12(p)))
        .collect();
    lines.push(format!("REJ {}", sig12(dist.reject)));
    if dist.residual_nonhalting > 0.0 {
        lines.push(format!(
            "# residual non-halting mass {} folded into REJ",
            sig12(dist.residual_nonhalting)
        ));
    }
    lines
}

fn dist_json(spec: &TransducerSpec, dist: &OutputDistribution) -> serde_json::Value {
    let accept: BTreeMap<String, f64> = dist
        .accept
        .iter()
        .map(|(w, &p)| (spec.output_alphabet().render_output(w), p))
        .collect();
    serde_json::json!({
        "accept": accept,
        "reject": dist.reject,
        "residual_nonhalting": dist.residual_nonhalting,
    })
}

fn parse_params(params: &[String]) -> Result<zoo::Params> {
    let mut out = zoo::Params::default();
    for p in params {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| anyhow!("parameter {p:?} is not of the form key=value"))?;
        let value: usize = value.parse().with_context(|| format!("parameter {p:?}"))?;
        match key {
            "k" => out.k = value,
            "l" => out.l = value,
            "cap" => out.cap = Some(value),
            other => bail!("unknown parameter {other:?} (expected k, l or cap)"),
        }
    }
    Ok(out)
}

fn parse_kind(kind: Option<&str>) -> Result<Kind> {
    match kind {
        Some("dfst") => Ok(Kind::Deterministic),
        Some("pfst") => Ok(Kind::Probabilistic),
        Some("qfst") | None => Ok(Kind::Quantum),
        Some(other) => bail!("unknown kind {other:?}"),
    }
}

fn build_relation_by_name(
    name: &str,
    pcp_v: &[String],
    pcp_w: &[String],
) -> Result<RelationSpec> {
    if name.eq_ignore_ascii_case("pcp") {
        let instance = zoo::PcpInstance::new(pcp_v.to_vec(), pcp_w.to_vec())
            .map_err(|e| anyhow!("{e} (pass tiles via --pcp-v/--pcp-w)"))?;
        Ok(zoo::build_pcp_relation(&instance)?)
    } else {
        Ok(zoo::build_relation(zoo::Family::parse(name)?)?)
    }
}

fn emit(text: &str, target: Option<&Path>) -> Result<()> {
    match target {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn check_report_json(report: &CheckReport) -> serde_json::Value {
    serde_json::json!({
        "pass": report.pass,
        "mode": format!("{:?}", report.mode),
        "max_len": report.max_len,
        "checked_pairs": report.checked_pairs,
        "worst_margin": report.worst_margin,
        "failures": report
            .failures()
            .map(|v| serde_json::json!({
                "input": v.input,
                "output": v.output,
                "in_relation": v.in_relation,
                "measured": v.measured,
                "margin": v.margin,
            }))
            .collect::<Vec<_>>(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let tol = tolerance();
    match cli.command {
        Command::Validate { machine, format } => {
            let text = std::fs::read_to_string(&machine)
                .with_context(|| format!("reading {}", machine.display()))?;
            let report = match machine_from_json(&text)? {
                AnyMachine::Transducer(spec) => validate_spec(&spec, tol),
                AnyMachine::Qfa(qfa) => validate_qfa(&qfa, tol),
            };
            match format {
                Format::Text => print!("{report}"),
                Format::Json => {
                    let violations: Vec<_> = report
                        .violations
                        .iter()
                        .map(|v| {
                            serde_json::json!({
                                "rule": v.rule,
                                "location": v.location,
                                "deviation": v.deviation,
                            })
                        })
                        .collect();
                    println!(
                        "{}",
                        serde_json::json!({"ok": report.is_empty(), "violations": violations})
                    );
                }
            }
            Ok(if report.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Run { machine, input } => {
            let spec = load_transducer(&machine.machine, machine.no_validate, tol)?;
            let word = spec.input_alphabet().tokenize(&input)?;
            let state = run(&spec, &word)?;
            match &state {
                TotalState::Prob(s) => {
                    for ((q, w), p) in &s.p_non {
                        println!(
                            "non {} {} {}",
                            spec.state_name(*q),
                            spec.output_alphabet().render_output(w),
                            sig12(*p)
                        );
                    }
                }
                TotalState::Quantum(s) => {
                    for ((q, w), a) in &s.amp {
                        println!(
                            "non {} {} {}+{}i",
                            spec.state_name(*q),
                            spec.output_alphabet().render_output(w),
                            sig12(a.re),
                            sig12(a.im)
                        );
                    }
                }
            }
            for (w, p) in state.p_acc() {
                println!("acc {} {}", spec.output_alphabet().render_output(w), sig12(*p));
            }
            println!("rej {}", sig12(state.p_rej()));
            Ok(ExitCode::SUCCESS)
        }
        Command::Dist { machine, input, format } => {
            let spec = load_transducer(&machine.machine, machine.no_validate, tol)?;
            let word = spec.input_alphabet().tokenize(&input)?;
            let dist = output_distribution(&spec, &word)?;
            match format {
                Format::Text => {
                    for line in dist_lines(&spec, &dist) {
                        println!("{line}");
                    }
                }
                Format::Json => println!("{}", dist_json(&spec, &dist)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            machine,
            relation,
            mode,
            alpha,
            epsilon,
            max_len,
            oracle,
            pcp_v,
            pcp_w,
            format,
        } => {
            let spec = load_transducer(&machine.machine, machine.no_validate, tol)?;
            if oracle {
                let mut worst = 0.0f64;
                let mut checked = 0usize;
                for input in enumerate_inputs(spec.input_alphabet().len(), max_len.min(6)) {
                    let fast = output_distribution(&spec, &input)?;
                    let slow = path_sum_distribution(&spec, &input)?;
                    let diff = compare_distributions(&spec, &fast, &slow, tol);
                    if !diff.is_empty() {
                        println!(
                            "MISMATCH on {:?}: {:?}",
                            spec.input_alphabet().render(&input),
                            diff.mismatches
                        );
                        return Ok(ExitCode::from(1));
                    }
                    worst = worst.max(diff.max_deviation);
                    checked += 1;
                }
                println!("oracle agreement on {checked} inputs, max deviation {worst:.3e}");
                return Ok(ExitCode::SUCCESS);
            }
            let relation = relation.ok_or_else(|| anyhow!("--relation or --oracle required"))?;
            let rel = build_relation_by_name(&relation, &pcp_v, &pcp_w)?;
            let alpha = alpha.ok_or_else(|| anyhow!("--alpha required"))?;
            let report = match mode.as_str() {
                "prob" => check_with_probability(&spec, &rel, alpha, max_len, tol)?,
                _ => {
                    let eps = epsilon.ok_or_else(|| anyhow!("cutpoint mode needs --epsilon"))?;
                    check_isolated_cutpoint(&spec, &rel, alpha, eps, max_len, tol)?
                }
            };
            match format {
                Format::Text => print!("{report}"),
                Format::Json => println!("{}", check_report_json(&report)),
            }
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Zoo { family, kind, params, pcp_v, pcp_w, emit: target } => {
            let text = match family.to_ascii_lowercase().as_str() {
                "parity" | "end0" => {
                    let qfa = zoo::build_sample_qfa(zoo::SampleQfa::parse(&family)?)?;
                    qfa_to_json(&qfa)
                }
                "pcp" => {
                    let instance = zoo::PcpInstance::new(pcp_v, pcp_w)
                        .map_err(|e| anyhow!("{e} (pass tiles via --pcp-v/--pcp-w)"))?;
                    let kind = parse_kind(kind.as_deref())?;
                    transducer_to_json(&zoo::build_pcp_machine(&instance, kind)?)
                }
                _ => {
                    let fam = zoo::Family::parse(&family)?;
                    let kind = match (&kind, fam) {
                        (None, zoo::Family::R5) => Kind::Deterministic,
                        (k, _) => parse_kind(k.as_deref())?,
                    };
                    transducer_to_json(&zoo::build_machine(fam, kind, &parse_params(&params)?)?)
                }
            };
            emit(&text, target.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Convert {
            from,
            to,
            squared_moduli,
            normalize,
            shift_cutpoint,
            epsilon,
            subprogram,
            emit: target,
            no_validate,
        } => {
            let text = std::fs::read_to_string(&from)
                .with_context(|| format!("reading {}", from.display()))?;
            let source = machine_from_json(&text)?;
            if !no_validate {
                let report = match &source {
                    AnyMachine::Transducer(spec) => validate_spec(spec, tol),
                    AnyMachine::Qfa(qfa) => validate_qfa(qfa, tol),
                };
                if !report.is_empty() {
                    bail!("source machine fails validation (use --no-validate to override):\n{report}");
                }
            }
            let out = match (to.as_deref(), squared_moduli, normalize, shift_cutpoint) {
                (Some("qfst"), false, false, None) => match source {
                    AnyMachine::Qfa(qfa) => {
                        // normalize on the way if needed
                        let ready = if qfa
                            .matrix(qfst::machine::InputSymbol::End)
                            .as_permutation(tol)
                            .is_some()
                        {
                            qfa
                        } else {
                            transforms::normalize_end_transition(&qfa)?
                        };
                        transducer_to_json(&transforms::qfa_to_qfst(&ready)?)
                    }
                    AnyMachine::Transducer(_) => bail!("--to qfst expects an automaton file"),
                },
                (Some("qfa"), false, false, None) => match source {
                    AnyMachine::Transducer(spec) => qfa_to_json(&transforms::qfst_to_qfa(&spec)?),
                    AnyMachine::Qfa(_) => bail!("--to qfa expects a transducer file"),
                },
                (None, true, false, None) => match source {
                    AnyMachine::Transducer(spec) => {
                        transducer_to_json(&transforms::squared_moduli_pfst(&spec)?)
                    }
                    AnyMachine::Qfa(_) => bail!("--squared-moduli expects a transducer file"),
                },
                (None, false, true, None) => match source {
                    AnyMachine::Qfa(qfa) => {
                        qfa_to_json(&transforms::normalize_end_transition(&qfa)?)
                    }
                    AnyMachine::Transducer(_) => bail!("--normalize expects an automaton file"),
                },
                (None, false, false, Some(alpha)) => match source {
                    AnyMachine::Transducer(spec) => {
                        let sub = subprogram
                            .map(|p| load_transducer(&p, false, tol))
                            .transpose()?;
                        let shifted = transforms::shift_cutpoint(
                            &spec,
                            alpha,
                            epsilon.unwrap_or(0.05),
                            sub.as_ref(),
                        )?;
                        transducer_to_json(&shifted)
                    }
                    AnyMachine::Qfa(_) => bail!("--shift-cutpoint expects a transducer file"),
                },
                _ => bail!("pick exactly one of --to, --squared-moduli, --normalize, --shift-cutpoint"),
            };
            emit(&out, target.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Range { machine, output, alpha, delta, gamma, cap } => {
            let spec = load_transducer(&machine.machine, machine.no_validate, tol)?;
            let y = spec.output_alphabet().tokenize_output(&output)?;
            let cfg = DecisionConfig { alpha, delta, gamma, state_cap: cap };
            match range_member(&spec, &y, &cfg)? {
                RangeVerdict::Yes { witness } => {
                    println!("yes {}", spec.input_alphabet().render(&witness));
                    Ok(ExitCode::SUCCESS)
                }
                RangeVerdict::No => {
                    println!("no");
                    Ok(ExitCode::from(EXIT_NO))
                }
                RangeVerdict::Inconclusive(reason) => {
                    let label = match reason {
                        InconclusiveReason::CapHit => "cap-hit",
                        InconclusiveReason::IsolationViolated => "isolation-violated",
                    };
                    println!("inconclusive {label}");
                    Ok(ExitCode::from(EXIT_INCONCLUSIVE))
                }
            }
        }
        Command::Classify { machine, symbol, format } => {
            let spec = load_transducer(&machine.machine, machine.no_validate, tol)?;
            let sym = spec
                .input_alphabet()
                .lookup(&symbol)
                .map(qfst::machine::InputSymbol::Letter)
                .or(match symbol.as_str() {
                    "INIT" => Some(qfst::machine::InputSymbol::Init),
                    "END" => Some(qfst::machine::InputSymbol::End),
                    _ => None,
                })
                .ok_or_else(|| anyhow!("unknown symbol {symbol:?}"))?;
            let cls = qfst::analysis::classify_states(spec.matrix(sym))?;
            match format {
                Format::Text => {
                    println!(
                        "transient: {}",
                        if cls.transient.is_empty() {
                            "none".to_string()
                        } else {
                            cls.transient
                                .iter()
                                .map(|&q| spec.state_name(q))
                                .collect::<Vec<_>>()
                                .join(" ")
                        }
                    );
                    for (i, c) in cls.ergodic_classes.iter().enumerate() {
                        println!(
                            "class {i}: period {} states {}",
                            c.period,
                            c.states
                                .iter()
                                .map(|&q| spec.state_name(q))
                                .collect::<Vec<_>>()
                                .join(" ")
                        );
                        for (v, cyc) in c.cyclic_classes.iter().enumerate() {
                            println!(
                                "  cyclic {v}: {}",
                                cyc.iter()
                                    .map(|&q| spec.state_name(q))
                                    .collect::<Vec<_>>()
                                    .join(" ")
                            );
                        }
                        let pi = c
                            .stationary
                            .iter()
                            .zip(&c.states)
                            .map(|(p, &q)| format!("{}={}", spec.state_name(q), sig12(*p)))
                            .collect::<Vec<_>>()
                            .join(" ");
                        println!("  stationary: {pi}");
                    }
                }
                Format::Json => {
                    let classes: Vec<_> = cls
                        .ergodic_classes
                        .iter()
                        .map(|c| {
                            serde_json::json!({
                                "states": c.states.iter().map(|&q| spec.state_name(q)).collect::<Vec<_>>(),
                                "period": c.period,
                                "cyclic_classes": c.cyclic_classes.iter().map(|cyc| {
                                    cyc.iter().map(|&q| spec.state_name(q)).collect::<Vec<_>>()
                                }).collect::<Vec<_>>(),
                                "stationary": c.stationary,
                            })
                        })
                        .collect();
                    println!(
                        "{}",
                        serde_json::json!({
                            "transient": cls.transient.iter().map(|&q| spec.state_name(q)).collect::<Vec<_>>(),
                            "ergodic_classes": classes,
                        })
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn enumerate_inputs(alphabet: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut level = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(level.len() * alphabet);
        for w in &level {
            for s in 0..alphabet {
                let mut v = w.clone();
                v.push(s);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}
