use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tsetlin_core::analysis::{report_csv, PayoffRow};
use tsetlin_core::datasets::{NoisyXor, Quantizer, RealTable};
use tsetlin_core::experiments::{Experiment, IrisExperiment, Summary, ThresholdExperiment, XorExperiment};
use tsetlin_core::machine::{read_machine, read_multiclass, write_machine, write_multiclass, EpochRecord};
use tsetlin_core::{BinaryDataset, LiteralVector, MachineConfig, MultiClassMachine, TsetlinMachine};

#[derive(Parser)]
#[command(name = "tsetlin", version, about = "Train, evaluate and inspect Tsetlin Machines")]
struct Cli {
    /// Worker threads (defaults to TSETLIN_THREADS, then the core count).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or binarize a dataset.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Train a model and write it to disk.
    Train(TrainArgs),
    /// Report accuracy of a model on a dataset.
    Eval(EvalArgs),
    /// Print the clauses of a model.
    Inspect(InspectArgs),
    /// Expected payoffs and equilibrium verdicts.
    Payoff(PayoffArgs),
    /// Run replications of a named experiment.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Noisy XOR with non-informative inputs.
    Xor {
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 12)]
        inputs: usize,
        #[arg(long, default_value_t = 0.4)]
        noise: f64,
        /// 1-based positions of the two informative inputs.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1, 2])]
        informative: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Binarize a real-valued CSV with `value > threshold`.
    Threshold {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        threshold: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Min-max quantize a real-valued CSV into binary level codes.
    Quantize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        bits: u32,
        /// Split first and fit the ranges on the training part only.
        #[arg(long, requires = "out_test")]
        train_fraction: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        out_test: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MachineFlags {
    /// Clauses per machine (per class when multi-class).
    #[arg(long, default_value_t = 20)]
    clauses: usize,
    #[arg(long = "T", visible_alias = "threshold", default_value_t = 15)]
    threshold: u32,
    #[arg(long, default_value_t = 3.9)]
    s: f64,
    /// Bits per automaton; each action gets 2^(b-1) states.
    #[arg(long, default_value_t = 7)]
    state_bits: u8,
    /// Reward true-positive includes deterministically.
    #[arg(long)]
    boost: bool,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    /// Optional held-out set scored after every epoch.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, short)]
    model: PathBuf,
    #[command(flatten)]
    machine: MachineFlags,
    /// Use one clause bank per class even for two classes.
    #[arg(long)]
    multiclass: bool,
    /// Write the per-epoch series as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Print `accuracy,correct,total` as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, short)]
    model: PathBuf,
}

#[derive(Args)]
struct PayoffArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.2])]
    theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    delta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [4.0])]
    s: Vec<f64>,
    /// Add Monte-Carlo estimates with this many trials per action.
    #[arg(long)]
    mc_trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Always emit CSV, one row per (theta, delta, s).
    #[arg(long)]
    grid: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Xor,
    Iris,
    Mnist,
}

#[derive(Args)]
struct BenchArgs {
    experiment: ExperimentName,
    #[arg(long, short = 'r', default_value_t = 10)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the experiment's epoch count.
    #[arg(long)]
    epochs: Option<usize>,
    /// MNIST training CSV (pixels in [0, 1], label last).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Also write the summary CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e
            .downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let is_usage = e.chain().any(|c| {
                c.downcast_ref::<Usage>().is_some()
                    || c.downcast_ref::<tsetlin_core::Error>().is_some_and(|e| e.is_usage())
            });
            ExitCode::from(if is_usage { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Gen(g) => gen(g),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Inspect(a) => inspect(a),
        Command::Payoff(a) => payoff(a),
        Command::Bench(a) => bench(a),
    }
}

fn configure_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("TSETLIN_THREADS") {
            Ok(v) => Some(
                v.parse()
                    .map_err(|_| usage(format!("TSETLIN_THREADS must be a number, got `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn gen(cmd: GenCommand) -> anyhow::Result<()> {
    match cmd {
        GenCommand::Xor {
            count,
            inputs,
            noise,
            informative,
            seed,
            out,
        } => {
            let (a, b) = (informative[0], informative[1]);
            if a == 0 || b == 0 {
                return Err(usage("informative positions are 1-based"));
            }
            let spec = NoisyXor {
                inputs,
                noise,
                informative: (a - 1, b - 1),
            };
            let d = spec.generate(count, seed)?;
            d.save(&out).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} rows of width {} to {}", d.len(), d.input_width(), out.display());
        }
        GenCommand::Threshold { input, threshold, out } => {
            let d = RealTable::read_csv(&input)?.threshold(threshold)?;
            d.save(&out)?;
            println!("wrote {} rows of width {} to {}", d.len(), d.input_width(), out.display());
        }
        GenCommand::Quantize {
            input,
            bits,
            train_fraction,
            seed,
            out,
            out_test,
        } => {
            let table = RealTable::read_csv(&input)?;
            let (train, test) = match train_fraction {
                Some(f) => {
                    let (a, b) = table.split(f, seed)?;
                    (a, Some(b))
                }
                None => (table, None),
            };
            let q = Quantizer::fit(&train.values, bits)?;
            let d = train.quantize(&q)?;
            d.save(&out)?;
            println!("wrote {} rows of width {} to {}", d.len(), d.input_width(), out.display());
            if let (Some(test), Some(path)) = (test, out_test) {
                let t = test.quantize(&q)?;
                t.save(&path)?;
                println!("wrote {} rows of width {} to {}", t.len(), t.input_width(), path.display());
            }
        }
    }
    Ok(())
}

fn machine_config(flags: &MachineFlags, inputs: usize) -> anyhow::Result<MachineConfig> {
    let cfg = MachineConfig {
        inputs,
        clauses: flags.clauses,
        threshold: flags.threshold,
        s: flags.s,
        state_bits: flags.state_bits,
        boost: flags.boost,
        epochs: flags.epochs,
        seed: flags.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

enum Model {
    Single(TsetlinMachine),
    Multi(MultiClassMachine),
}

impl Model {
    fn load(path: &Path) -> anyhow::Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .with_context(|| format!("opening {}", path.display()))?
            .read_to_end(&mut bytes)?;
        let mut r = BufReader::new(bytes.as_slice());
        if bytes.starts_with(b"TSMC") {
            Ok(Model::Multi(read_multiclass(&mut r)?))
        } else {
            Ok(Model::Single(read_machine(&mut r)?))
        }
    }

    fn save(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        match self {
            Model::Single(m) => write_machine(m, &mut w)?,
            Model::Multi(m) => write_multiclass(m, &mut w)?,
        }
        w.flush()?;
        Ok(())
    }

    fn config(&self) -> &MachineConfig {
        match self {
            Model::Single(m) => m.config(),
            Model::Multi(m) => m.config(),
        }
    }

    fn correct(&self, data: &BinaryDataset) -> anyhow::Result<usize> {
        let inputs = self.config().inputs;
        if data.input_width() != inputs {
            return Err(tsetlin_core::Error::WidthMismatch {
                expected: inputs,
                actual: data.input_width(),
            }
            .into());
        }
        let mut correct = 0;
        for (x, y) in data.rows() {
            let lv = LiteralVector::new(x);
            let pred = match self {
                Model::Single(m) => usize::from(m.predict(&lv)?),
                Model::Multi(m) => m.predict(&lv)?,
            };
            correct += usize::from(pred == y);
        }
        Ok(correct)
    }
}

fn load_dataset(path: &Path) -> anyhow::Result<BinaryDataset> {
    BinaryDataset::load(path).with_context(|| format!("reading {}", path.display()))
}

fn print_epoch(r: &EpochRecord, total: usize) {
    match r.test_accuracy {
        Some(t) => eprintln!(
            "epoch {}/{}  train {:.4}  test {:.4}",
            r.epoch, total, r.train_accuracy, t
        ),
        None => eprintln!("epoch {}/{}  train {:.4}", r.epoch, total, r.train_accuracy),
    }
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let train = load_dataset(&a.train)?;
    if train.is_empty() {
        bail!(tsetlin_core::Error::EmptyDataset);
    }
    let test = a.test.as_deref().map(load_dataset).transpose()?;
    let cfg = machine_config(&a.machine, train.input_width())?;
    let n = train.n_classes().max(test.as_ref().map_or(0, |t| t.n_classes()));
    let total = cfg.epochs;
    let progress = |r: &EpochRecord| {
        if !a.quiet {
            print_epoch(r, total);
        }
    };
    let (model, report) = if a.multiclass || n > 2 {
        let mut mc = MultiClassMachine::new(cfg, n.max(2))?;
        let report = mc.fit_with(
            &train,
            test.as_ref(),
            &mut tsetlin_core::rng::TrainRng::new(a.machine.seed, n.max(2), a.machine.clauses),
            progress,
        )?;
        (Model::Multi(mc), report)
    } else {
        let mut tm = TsetlinMachine::new(cfg)?;
        let report = tm.fit_with(
            &train,
            test.as_ref(),
            &mut tsetlin_core::rng::TrainRng::new(a.machine.seed, 1, a.machine.clauses),
            progress,
        )?;
        (Model::Single(tm), report)
    };
    model.save(&a.model)?;
    if let Some(path) = &a.report {
        std::fs::write(path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    match report.last() {
        Some(last) => {
            print!("trained {} epochs, train accuracy {:.4}", last.epoch, last.train_accuracy);
            if let Some(t) = last.test_accuracy {
                print!(", test accuracy {t:.4}");
            }
            println!();
        }
        None => println!("no epochs run; model holds its initial state"),
    }
    println!("model written to {}", a.model.display());
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let model = Model::load(&a.model)?;
    let data = load_dataset(&a.data)?;
    if data.is_empty() {
        bail!(tsetlin_core::Error::EmptyDataset);
    }
    let correct = model.correct(&data)?;
    let acc = correct as f64 / data.len() as f64;
    if a.csv {
        println!("accuracy,correct,total\n{acc:.6},{correct},{}", data.len());
    } else {
        println!("accuracy {acc:.4} ({correct}/{})", data.len());
    }
    Ok(())
}

fn print_bank(out: &mut impl Write, tm: &TsetlinMachine) -> std::io::Result<usize> {
    let inputs = tm.config().inputs;
    let clauses = tm.prune();
    for c in &clauses {
        let tag = if c.is_contradictory() { "  CONTRADICTION" } else { "" };
        writeln!(out, "  #{:<4} {:<40} [{}]{}", c.clause + 1, c.to_string(), c.mask(inputs), tag)?;
    }
    Ok(clauses.len())
}

fn inspect(a: InspectArgs) -> anyhow::Result<()> {
    let model = Model::load(&a.model)?;
    let c = model.config();
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "inputs {}  clauses {}  T {}  s {}  state bits {}  boost {}",
        c.inputs, c.clauses, c.threshold, c.s, c.state_bits, c.boost
    )?;
    let shown = match &model {
        Model::Single(tm) => print_bank(&mut out, tm)?,
        Model::Multi(mc) => {
            let mut total = 0;
            for (i, bank) in mc.banks().iter().enumerate() {
                writeln!(out, "class {i}:")?;
                total += print_bank(&mut out, bank)?;
            }
            total
        }
    };
    if shown == 0 {
        writeln!(out, "no clauses")?;
    }
    Ok(())
}

fn payoff(a: PayoffArgs) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for &theta in &a.theta {
        for &delta in &a.delta {
            for &s in &a.s {
                let mc = a.mc_trials.map(|t| (t, a.seed));
                rows.push(PayoffRow::compute(theta, delta, s, mc)?);
            }
        }
    }
    if a.grid || rows.len() > 1 {
        print!("{}", report_csv(&rows));
        return Ok(());
    }
    let r = &rows[0];
    println!("theta {}  delta {}  s {}", r.theta, r.delta, r.s);
    println!("exclude payoff {:.6}", r.exclude);
    println!("include payoff {:.6}", r.include);
    if let Some((e, i)) = r.monte_carlo {
        println!("monte carlo exclude {:.6} ± {:.6}", e.mean, e.stderr);
        println!("monte carlo include {:.6} ± {:.6}", i.mean, i.stderr);
    }
    println!("verdict {}", r.verdict.as_str());
    println!("exclude pays off for s < {}", r.s_critical);
    println!();
    print!("{}", report_csv(&rows));
    Ok(())
}

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    if a.replications == 0 {
        return Err(usage("need at least one replication"));
    }
    let exp = match a.experiment {
        ExperimentName::Xor => {
            let mut e = XorExperiment::default();
            if let Some(n) = a.epochs {
                e.machine.epochs = n;
            }
            Experiment::Xor(e)
        }
        ExperimentName::Iris => {
            let mut e = IrisExperiment::default();
            if let Some(n) = a.epochs {
                e.machine.epochs = n;
            }
            Experiment::Iris(e)
        }
        ExperimentName::Mnist => {
            let (Some(train), Some(test)) = (a.train.clone(), a.test.clone()) else {
                return Err(usage("mnist needs --train and --test CSV files"));
            };
            let mut e = ThresholdExperiment::mnist(train, test);
            if let Some(n) = a.epochs {
                e.machine.epochs = n;
            }
            Experiment::Threshold(e)
        }
    };
    let runs = exp.replicate(a.replications, a.seed)?;
    let s = Summary::from_values(&runs)?;
    println!("{} ({} replications): {s}", exp.name(), runs.len());
    let csv = format!("{}\n{}\n", Summary::CSV_HEADER, s.csv_row(exp.name()));
    print!("{csv}");
    if let Some(path) = &a.csv {
        std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

