use clap::parser::ValueSource;
use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use kpz_tails::harness::{
    find, read_config_file, run, schema_text, verify, write_rows, Experiment, ExperimentResult, Params, RunConfig,
    Suite, DEFAULT_SEED, EXPERIMENTS, SEED_ENV,
};
use kpz_tails::Error;
use serde_json::{Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn common_args(cmd: Command) -> Command {
    cmd.arg(
        Arg::new("seed")
            .long("seed")
            .env(SEED_ENV)
            .value_parser(value_parser!(u64))
            .help(format!("random seed [default: {DEFAULT_SEED}]")),
    )
    .arg(
        Arg::new("replicas")
            .long("replicas")
            .value_parser(value_parser!(usize))
            .help("worker threads [default: available cores]; never changes results"),
    )
    .arg(
        Arg::new("out_dir")
            .long("out-dir")
            .value_parser(value_parser!(PathBuf))
            .default_value("kpz-out")
            .help("directory for CSV, JSON and manifest files"),
    )
}

fn experiment_command(e: &Experiment) -> Command {
    let mut cmd = Command::new(e.name).about(e.doc).arg(
        Arg::new("config")
            .long("config")
            .value_parser(value_parser!(PathBuf))
            .help("JSON object of parameter values; flags override it"),
    );
    for p in e.params {
        cmd = cmd.arg(
            Arg::new(p.key)
                .long(p.key.replace('_', "-"))
                .allow_negative_numbers(true)
                .help(format!("{} [default: {}]", p.doc, p.default)),
        );
    }
    common_args(cmd)
}

fn cli() -> Command {
    let mut cmd = Command::new("kpz-tails")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Monte Carlo experiments on Brownian bridges and line ensembles above a parabola")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for e in EXPERIMENTS {
        cmd = cmd.subcommand(experiment_command(e));
    }
    cmd.subcommand(
        common_args(Command::new("verify").about("run a verification suite; exit 0 iff every row passes")).arg(
            Arg::new("suite")
                .long("suite")
                .value_parser(value_parser!(Suite))
                .default_value("quick"),
        ),
    )
    .subcommand(
        Command::new("list")
            .about("list experiments")
            .arg(Arg::new("json").long("json").action(ArgAction::SetTrue).help("print the registry with parameter schemas as JSON")),
    )
}

fn usage_failure(msg: &str, experiment: Option<&Experiment>) -> ExitCode {
    eprintln!("error: {msg}");
    if let Some(e) = experiment {
        eprint!("{}", schema_text(e.name, e.params));
    }
    ExitCode::from(EXIT_USAGE)
}

fn replicas(m: &ArgMatches) -> usize {
    m.get_one::<usize>("replicas")
        .copied()
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn from_command_line(m: &ArgMatches, id: &str) -> bool {
    m.value_source(id) == Some(ValueSource::CommandLine)
}

fn report(result: &ExperimentResult, outputs: &[String]) -> ExitCode {
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    for r in &result.rows {
        eprintln!(
            "{} {} {} estimate {:.6} +- {:.3e} (z={}) vs [{:.6}, {:.6}]",
            if r.pass_flag { "PASS" } else { "FAIL" },
            r.experiment,
            r.params,
            r.log_p,
            r.stderr_log,
            r.z,
            r.analytic_lo,
            r.analytic_hi
        );
    }
    match &result.json {
        Some(json) => println!("{}", serde_json::to_string_pretty(json).expect("serializable")),
        None => {
            let _ = write_rows(&result.rows, std::io::stdout().lock());
        }
    }
    for o in outputs {
        eprintln!("wrote {o}");
    }
    let failed = result.rows.iter().filter(|r| !r.pass_flag).count();
    eprintln!("{} rows, {failed} failed, {:.1} s", result.rows.len(), result.wall_time_s);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn run_experiment(e: &'static Experiment, m: &ArgMatches) -> ExitCode {
    let mut file = Map::new();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        match read_config_file(path) {
            Ok(f) => file = f,
            Err(err) => return usage_failure(&err.to_string(), Some(e)),
        }
    }
    // `seed` and `replicas` may also come from the file; flags still win.
    let file_seed = file.remove("seed");
    let file_replicas = file.remove("replicas");
    let seed = if from_command_line(m, "seed") {
        *m.get_one::<u64>("seed").expect("parsed")
    } else if let Some(v) = file_seed {
        match v.as_u64() {
            Some(s) => s,
            None => return usage_failure("config 'seed' must be a nonnegative integer", Some(e)),
        }
    } else {
        m.get_one::<u64>("seed").copied().unwrap_or(DEFAULT_SEED)
    };
    let replicas = match (m.get_one::<usize>("replicas"), file_replicas.as_ref().and_then(Value::as_u64)) {
        (None, Some(r)) => (r as usize).max(1),
        _ => replicas(m),
    };
    let flags: Vec<(String, String)> = e
        .params
        .iter()
        .filter_map(|p| m.get_one::<String>(p.key).map(|v| (p.key.to_string(), v.clone())))
        .collect();
    let params = match Params::resolve(e.params, &file, &flags) {
        Ok(p) => p,
        Err(err) => return usage_failure(&err.to_string(), Some(e)),
    };
    let cfg = RunConfig {
        experiment: e.name.to_string(),
        params,
        seed,
        replicas,
        out_dir: m.get_one::<PathBuf>("out_dir").expect("defaulted").clone(),
    };
    match run(&cfg) {
        Ok((result, manifest)) => report(&result, &manifest.outputs),
        Err(err @ (Error::Usage(_) | Error::Domain(_))) => usage_failure(&err.to_string(), Some(e)),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn list(json: bool) -> ExitCode {
    if json {
        println!("{}", serde_json::to_string_pretty(EXPERIMENTS).expect("serializable"));
    } else {
        for e in EXPERIMENTS {
            println!("{:<10} {}  [{}]", e.name, e.doc, e.anchor);
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let matches = match cli().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let _ = err.print();
            if err.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                return ExitCode::from(EXIT_USAGE);
            }
            if let Some(e) = args.get(1).and_then(|name| find(name)) {
                eprint!("{}", schema_text(e.name, e.params));
            }
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match matches.subcommand() {
        Some(("list", m)) => list(m.get_flag("json")),
        Some(("verify", m)) => {
            let suite = *m.get_one::<Suite>("suite").expect("defaulted");
            let seed = m.get_one::<u64>("seed").copied().unwrap_or(DEFAULT_SEED);
            let out_dir = m.get_one::<PathBuf>("out_dir").expect("defaulted");
            match verify(suite, seed, replicas(m), out_dir) {
                Ok((result, manifest)) => report(&result, &manifest.outputs),
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(EXIT_FAIL)
                }
            }
        }
        Some((name, m)) => run_experiment(find(name).expect("subcommands mirror the registry"), m),
        None => ExitCode::from(EXIT_USAGE),
    }
}
