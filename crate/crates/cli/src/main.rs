use std::fs;
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mask3pc::circuit::{aes128_circuit, aes_sbox_circuit, random_circuit, to_bristol, to_native, RandomCircuitParams};
use mask3pc::crypto::KeyMaterial;
use mask3pc::engine::{run_party, BucketMode, Net, PartyOutcome, Setup, TripleParams};
use mask3pc::harness::{
    cmd_run, deal, run_criterion, verify, CircuitSource, ConfigError, Job, RunConfig, Scale, VerifyOptions, Workload,
    CRITERIA,
};
use mask3pc::ml::{Mode, ModelKind};
use mask3pc::party::PartyId;
use mask3pc::ring::Width;
use mask3pc::transport::{tcp_links, MeterReport, TcpPlan};

const EXIT_ABORT: u8 = 2;
const EXIT_CONFIG: u8 = 3;

/// Three-party computation over rings with masked secret sharing.
#[derive(Parser)]
#[command(name = "mask3pc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a circuit or prediction workload and report meters and timings.
    Run(RunArgs),
    /// Run the acceptance criteria.
    Verify {
        /// Reduced sample counts.
        #[arg(long)]
        quick: bool,
        /// Run a single criterion.
        #[arg(long, value_name = "ID")]
        only: Option<u8>,
    },
    /// Write a circuit file.
    GenCircuit {
        #[arg(value_enum)]
        which: CircuitKind,
        #[arg(long, value_enum, default_value_t = Format::Bristol)]
        format: Format,
        #[arg(short, long)]
        output: PathBuf,
        /// Seed for random circuits.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Gate count for random circuits.
        #[arg(long, default_value_t = 120)]
        gates: usize,
        /// Ring width for random circuits.
        #[arg(long, default_value_t = 32)]
        width: u32,
    },
    /// Share a model and a query among the three parties and write the shares.
    DealShares {
        #[command(flatten)]
        predict: PredictArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CircuitKind {
    Aes128,
    Sbox,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Bristol,
    Native,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Semi,
    Mal,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Mem,
    Tcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum BucketArg {
    /// Consumers are matched to buckets by a second shuffle.
    Postponed,
    /// Consumer k uses bucket k.
    PerBucket,
}

#[derive(Args)]
struct PredictArgs {
    /// Model kind: linreg, svmr, logr or svmc.
    #[arg(long, default_value = "linreg")]
    kind: String,
    /// Dimension of a random model and query.
    #[arg(long, default_value_t = 784)]
    dim: usize,
    /// Model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Query file.
    #[arg(long)]
    query: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Semi)]
    mode: ModeArg,
    /// Fair output reconstruction (malicious circuits).
    #[arg(long)]
    fair: bool,
    #[arg(long, value_enum, default_value_t = TransportArg::Mem)]
    transport: TransportArg,
    /// Ring width in bits.
    #[arg(long)]
    width: Option<u32>,
    /// aes128, random or a circuit file.
    #[arg(long, conflicts_with = "shares")]
    circuit: Option<String>,
    /// Gate count for a random circuit.
    #[arg(long, default_value_t = 120)]
    gates: usize,
    /// Run secure prediction instead of a circuit.
    #[arg(long, conflicts_with_all = ["circuit", "shares"])]
    predict: bool,
    #[command(flatten)]
    predict_args: PredictArgs,
    /// Directory written by deal-shares.
    #[arg(long)]
    shares: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fault script (malicious mode).
    #[arg(long)]
    faults: Option<PathBuf>,
    /// Bucket size for triple generation.
    #[arg(long)]
    bucket: Option<usize>,
    /// Number of opened triples.
    #[arg(long)]
    opened: Option<usize>,
    /// Statistical security parameter in bits.
    #[arg(long, default_value_t = 40)]
    security: u32,
    /// How consumers are matched to buckets.
    #[arg(long, value_enum, default_value_t = BucketArg::Postponed)]
    bucketing: BucketArg,
    /// Per-message timeout in seconds.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    /// Run only this party in a separate process over TCP.
    #[arg(long, value_name = "0|1|2")]
    role: Option<usize>,
    /// Listening addresses of P0 and P1, comma separated (with --role).
    #[arg(long, value_delimiter = ',', requires = "role")]
    peers: Vec<SocketAddr>,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn build_config(a: &RunArgs) -> Result<RunConfig, ConfigError> {
    let width = a
        .width
        .map(|w| Width::new(w).map_err(|e| ConfigError::Invalid(e.to_string())))
        .transpose()?;
    let workload = if let Some(dir) = &a.shares {
        Workload::Dealt(dir.clone())
    } else if a.predict {
        let kind: ModelKind = a
            .predict_args
            .kind
            .parse()
            .map_err(|e| ConfigError::Invalid(format!("{e}")))?;
        Workload::Predict {
            kind,
            dim: a.predict_args.dim,
            model: a.predict_args.model.clone(),
            query: a.predict_args.query.clone(),
        }
    } else {
        let src = match a.circuit.as_deref() {
            None | Some("random") => CircuitSource::Random {
                seed: a.seed,
                gates: a.gates,
            },
            Some("aes128") => CircuitSource::Aes128,
            Some(path) => CircuitSource::File(path.into()),
        };
        Workload::Circuit(src)
    };
    let triples = TripleParams {
        security: a.security,
        bucket: a.bucket,
        opened: a.opened,
        mode: match a.bucketing {
            BucketArg::Postponed => BucketMode::Postponed,
            BucketArg::PerBucket => BucketMode::PerBucket,
        },
    };
    let cfg = RunConfig {
        mode: match a.mode {
            ModeArg::Semi => Mode::Semi,
            ModeArg::Mal => Mode::Mal,
        },
        fair: a.fair,
        net: match a.transport {
            TransportArg::Mem => Net::Memory,
            TransportArg::Tcp => Net::Tcp,
        },
        width,
        workload,
        repetitions: a.reps,
        seed: a.seed,
        fault_script: a.faults.clone(),
        triples,
        timeout: Duration::from_secs(a.timeout),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run_args(a: &RunArgs) -> ExitCode {
    let cfg = match build_config(a) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(role) = a.role {
        return run_role(&cfg, role, &a.peers);
    }
    match cmd_run(&cfg) {
        Ok(report) => {
            print!("{}", report.render());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => config_error(e),
    }
}

/// One party of a multi-process run. All three processes must be started with
/// the same workload, seed and peer addresses.
fn run_role(cfg: &RunConfig, role: usize, peers: &[SocketAddr]) -> ExitCode {
    let Some(me) = PartyId::from_index(role) else {
        return config_error("--role must be 0, 1 or 2");
    };
    if peers.len() != 2 {
        return config_error("--peers needs the addresses of P0 and P1");
    }
    if cfg.repetitions != 1 {
        return config_error("--role runs a single repetition");
    }
    let job = match Job::from_config(cfg) {
        Ok(j) => j,
        Err(e) => return config_error(e),
    };
    let faults = match cfg.load_faults() {
        Ok(f) => f,
        Err(e) => return config_error(e),
    };
    let listener = match me {
        PartyId::P2 => None,
        _ => match TcpListener::bind(peers[role]) {
            Ok(l) => Some(l),
            Err(e) => return config_error(format!("bind {}: {e}", peers[role])),
        },
    };
    let plan = TcpPlan {
        me,
        listener,
        peers: [peers[0], peers[1], peers[1]],
        connect_timeout: cfg.timeout,
    };
    let links = match tcp_links(plan) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: connecting: {e}");
            return ExitCode::FAILURE;
        }
    };
    let setup = Setup::seeded(cfg.seed).with_faults(faults).with_timeout(cfg.timeout);
    let keys = KeyMaterial::from_u64_seed(cfg.seed).view(me);
    let run = run_party(me, links, keys, &setup, |p| job.execute(p));
    println!("party        {me}");
    println!("workload     {}", job.description);
    print!("{}", MeterReport::from_meters([&run.meter]).render());
    for (name, t) in ["offline", "online", "output"].iter().zip(run.phase_times) {
        println!("latency {name:<8} {:>10.3} ms", t.as_secs_f64() * 1e3);
    }
    match run.outcome {
        PartyOutcome::Output(o) => {
            println!("output: {o}");
            match &job.expected {
                Some(e) if !e.accepts(&o) => {
                    println!("expected: {e} (MISMATCH)");
                    ExitCode::FAILURE
                }
                _ => ExitCode::SUCCESS,
            }
        }
        PartyOutcome::Aborted(check) => {
            println!("status: abort: {check}");
            ExitCode::from(EXIT_ABORT)
        }
        PartyOutcome::Failed(m) => {
            println!("status: failed: {m}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_verify(quick: bool, only: Option<u8>) -> ExitCode {
    let opts = VerifyOptions {
        scale: if quick { Scale::Quick } else { Scale::Full },
        ..Default::default()
    };
    let results = match only {
        Some(id) => match run_criterion(id, &opts) {
            Some(r) => vec![r],
            None => return config_error(format!("no criterion {id}; ids run 1 to {}", CRITERIA.len())),
        },
        None => verify(&opts),
    };
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_gen_circuit(which: CircuitKind, format: Format, output: &Path, seed: u64, gates: usize, width: u32) -> ExitCode {
    let c = match which {
        CircuitKind::Aes128 => aes128_circuit(),
        CircuitKind::Sbox => aes_sbox_circuit(),
        CircuitKind::Random => {
            let width = match Width::new(width) {
                Ok(w) => w,
                Err(e) => return config_error(e),
            };
            random_circuit(
                seed,
                &RandomCircuitParams {
                    width,
                    gates,
                    ..Default::default()
                },
            )
        }
    };
    let text = match format {
        Format::Bristol => to_bristol(&c),
        Format::Native => to_native(&c),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    if let Err(e) = fs::write(output, text) {
        return config_error(format!("{}: {e}", output.display()));
    }
    println!("wrote {} ({c})", output.display());
    ExitCode::SUCCESS
}

fn cmd_deal(p: &PredictArgs, seed: u64, output: &Path) -> ExitCode {
    let kind: ModelKind = match p.kind.parse() {
        Ok(k) => k,
        Err(e) => return config_error(e),
    };
    let cfg = RunConfig {
        workload: Workload::Predict {
            kind,
            dim: p.dim,
            model: p.model.clone(),
            query: p.query.clone(),
        },
        seed,
        ..Default::default()
    };
    let dealt = cfg
        .validate()
        .and_then(|_| cfg.load_prediction())
        .and_then(|(model, query)| deal(&model, &query, seed))
        .and_then(|d| mask3pc::harness::write_dealt(output, &d).map(|_| d));
    match dealt {
        Ok(d) => {
            println!(
                "wrote {} shares of d={} to {}",
                d.kind,
                d.query[0].len(),
                output.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => config_error(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run_args(&a),
        Command::Verify { quick, only } => cmd_verify(quick, only),
        Command::GenCircuit {
            which,
            format,
            output,
            seed,
            gates,
            width,
        } => cmd_gen_circuit(which, format, &output, seed, gates, width),
        Command::DealShares { predict, seed, output } => cmd_deal(&predict, seed, &output),
    }
}
