use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crasp::compile::compile;
use crasp::corpus::{self, gen_task, manifest, stdlib, TaskId};
use crasp::dsl::{parse, Program};
use crasp::harness::{
    audit_expressiveness, check_equivalence, csv_summary, default_exhaustive_len, json_lines,
    run_suite, with_threads, EquivConfig, SampleSpec, SuiteConfig, DEFAULT_CAP,
};
use crasp::interp::{accepts, predicted_sets};
use crasp::runtime::{
    accepts_net, deserialize, predicted_sets_net, reg_infinity, serialize, FixedPrecision,
    LimitTransformer, DEFAULT_PRECISION,
};

/// `print!` that exits quietly when stdout is closed (e.g. piped into `head`).
macro_rules! put {
    ($($t:tt)*) => {{
        use std::io::Write;
        if let Err(e) = write!(std::io::stdout(), $($t)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    }};
}

macro_rules! say {
    () => { put!("\n") };
    ($fmt:literal $($t:tt)*) => { put!(concat!($fmt, "\n") $($t)*) };
}

#[derive(Parser)]
#[command(name = "crasp", version, about = "Check, run, compile and verify C-RASP programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a program.
    Check { file: PathBuf },
    /// Run the interpreter on a word.
    Run {
        file: PathBuf,
        /// Symbols, space-separated or concatenated.
        word: String,
        /// Print the full value table.
        #[arg(long)]
        trace: bool,
    },
    /// Compile a program to a network file.
    Compile {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
    },
    /// Run a network file on a word.
    Exec { net: PathBuf, word: String },
    /// Compare compiled networks against the interpreter.
    Verify {
        /// Library program name, or `all`.
        program: String,
        /// Exhaustive bound (default: 12 for two symbols, 10 for three, else what fits the cap).
        #[arg(long)]
        exhaustive: Option<usize>,
        /// `LENGTHS:COUNT`, e.g. `25,50,100,150:1000`.
        #[arg(long, default_value = "25,50,100,150:100")]
        samples: String,
        /// Oracle-sampled members per length, for programs that decide a language.
        #[arg(long, default_value_t = 20)]
        positives: usize,
        /// Sampled strings that also get a channel check.
        #[arg(long, default_value_t = 20)]
        channel_checks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Inspect the program library.
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
    /// Verification and bin-accuracy report for the whole library.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Complexity breakdown of a network file.
    Reg { net: PathBuf },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Programs and expressiveness flags.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Check flags against program constructs.
    Audit,
    /// Print a library program in source form.
    Show { program: String },
    /// Generate a task instance, one token per line.
    Task {
        task: String,
        len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Failure with its exit code.
enum Fail {
    Usage(String),
    Mismatch(String),
    Io(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Mismatch(_) => 1,
            Fail::Usage(_) => 2,
            Fail::Io(_) => 3,
        }
    }
}

type Out = Result<(), Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Fail> {
    let src = read(path)?;
    parse(&src).map_err(|e| Fail::Usage(format!("{}:{e}", path.display())))
}

fn load_net(path: &Path) -> Result<LimitTransformer, Fail> {
    deserialize(&read(path)?).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

/// Splits `word` on whitespace, or else greedily by longest matching symbol.
fn split_word(word: &str, symbols: &[String]) -> Result<Vec<String>, Fail> {
    if word.split_whitespace().count() > 1 {
        return Ok(word.split_whitespace().map(String::from).collect());
    }
    let mut rest = word.trim();
    let mut out = Vec::new();
    while !rest.is_empty() {
        let best = symbols
            .iter()
            .filter(|s| rest.starts_with(s.as_str()))
            .max_by_key(|s| s.len())
            .ok_or_else(|| Fail::Usage(format!("cannot read a symbol at {rest:?}")))?;
        out.push(best.clone());
        rest = &rest[best.len()..];
    }
    Ok(out)
}

fn fmt_sets(sets: &[Vec<String>]) -> String {
    sets.iter().map(|s| format!("{{{}}}", s.join(","))).collect::<Vec<_>>().join(" ")
}

fn check(file: &Path) -> Out {
    let p = load_program(file)?;
    say!(
        "ok: {} over {{{}}}, {} ops",
        p.name(),
        p.alphabet().symbols().join(", "),
        p.ops().len()
    );
    Ok(())
}

fn run(file: &Path, word: &str, trace: bool) -> Out {
    let p = load_program(file)?;
    let w = split_word(word, p.alphabet().symbols())?;
    let usage = |e: crasp::interp::InterpError| Fail::Usage(e.to_string());
    if trace && !w.is_empty() {
        put!("{}", crasp::interp::evaluate(&p, &w).map_err(usage)?.table());
    }
    let acc = accepts(&p, &w).map_err(usage)?;
    say!("{}", if acc { "accept" } else { "reject" });
    if p.predict().is_some() && !w.is_empty() {
        say!("predict {}", fmt_sets(&predicted_sets(&p, &w).map_err(usage)?));
    }
    Ok(())
}

fn compile_cmd(file: &Path, output: &Path, precision: u32) -> Out {
    let p = load_program(file)?;
    let fp = FixedPrecision::new(precision).map_err(|e| Fail::Usage(e.to_string()))?;
    let c = compile(&p, fp).map_err(|e| Fail::Usage(e.to_string()))?;
    fs::write(output, serialize(&c.net)).map_err(|e| Fail::Io(format!("{}: {e}", output.display())))?;
    let r = &c.report;
    say!(
        "{}: {} layers, {} heads, {} channels, p={}, tau={}, period={}, exact up to {} rows",
        r.program, r.layers, r.heads, r.channels, r.precision, r.tau, r.period, r.max_rows
    );
    Ok(())
}

fn exec(net: &Path, word: &str) -> Out {
    let t = load_net(net)?;
    let symbols: Vec<String> = t.symbols.iter().filter(|s| *s != crasp::dsl::SOS).cloned().collect();
    let w = split_word(word, &symbols)?;
    let acc = accepts_net(&t, &w).map_err(|e| Fail::Usage(e.to_string()))?;
    say!("{}", if acc { "accept" } else { "reject" });
    if t.out_dim() > 1 && !w.is_empty() {
        let sets = predicted_sets_net(&t, &w).map_err(|e| Fail::Usage(e.to_string()))?;
        say!("predict {}", fmt_sets(&sets));
    }
    Ok(())
}

fn parse_samples(spec: &str, positives: usize, seed: u64) -> Result<SampleSpec, Fail> {
    let bad = || Fail::Usage(format!("bad --samples {spec:?}; expected LENGTHS:COUNT"));
    let (lens, count) = spec.split_once(':').ok_or_else(bad)?;
    let lengths = lens
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect::<Result<Vec<usize>, _>>()?;
    let uniform = count.trim().parse().map_err(|_| bad())?;
    Ok(SampleSpec { lengths, uniform, positive: positives, seed })
}

fn verify(
    program: &str,
    exhaustive: Option<usize>,
    samples: SampleSpec,
    channel_checks: usize,
) -> Out {
    let lib = stdlib();
    let names: Vec<String> = if program == "all" {
        lib.keys().cloned().collect()
    } else if lib.contains_key(program) {
        vec![program.to_string()]
    } else {
        return Err(Fail::Usage(format!("unknown program `{program}`")));
    };
    let claims = corpus::language_claims();
    let mut failed = Vec::new();
    for name in names {
        let p = &lib[&name];
        let oracle = claims
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, l)| corpus::oracle(l).expect("manifest language"));
        let cfg = EquivConfig {
            exhaustive_len: exhaustive.unwrap_or_else(|| default_exhaustive_len(p.alphabet().len(), DEFAULT_CAP)),
            samples: samples.clone(),
            channel_checks,
            oracle,
            ..Default::default()
        };
        let mut r = with_threads(None, || check_equivalence(p, &cfg)).map_err(|e| Fail::Usage(e.to_string()))?;
        if let Some(ms) = r.runtime_ms.take() {
            eprintln!("{name}: {} mismatches in {ms} ms", r.mismatches);
        }
        say!("{}", serde_json::to_string(&r).expect("report serializes"));
        if !r.passed() || !r.channels_ok(cfg.precision) {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Fail::Mismatch(format!("verification failed: {}", failed.join(", "))))
    }
}

fn flag(f: corpus::Flag) -> &'static str {
    match f {
        corpus::Flag::Yes => "yes",
        corpus::Flag::No => "no",
        corpus::Flag::NoneFound => "none found",
        corpus::Flag::Unlisted => "-",
    }
}

fn corpus_cmd(cmd: CorpusCmd) -> Out {
    match cmd {
        CorpusCmd::List { json } => {
            if json {
                put!("{}", corpus::manifest_json());
                return Ok(());
            }
            say!("{:<28} {:<11} {:<11} {:<18} language", "row", "plain", "periodic", "program");
            for r in manifest() {
                say!(
                    "{:<28} {:<11} {:<11} {:<18} {}",
                    r.row,
                    flag(r.plain),
                    flag(r.periodic_local),
                    r.program.as_deref().unwrap_or("-"),
                    r.language.as_deref().unwrap_or("-"),
                );
            }
            Ok(())
        }
        CorpusCmd::Audit => {
            let rows = audit_expressiveness(&manifest(), &stdlib());
            for r in &rows {
                say!("{} {:<28} {}", if r.pass { "PASS" } else { "FAIL" }, r.row, r.detail);
            }
            match rows.iter().filter(|r| !r.pass).count() {
                0 => Ok(()),
                n => Err(Fail::Mismatch(format!("{n} audit rows failed"))),
            }
        }
        CorpusCmd::Show { program } => {
            let p = corpus::program(&program).map_err(|e| Fail::Usage(e.to_string()))?;
            put!("{}", crasp::dsl::print(&p));
            Ok(())
        }
        CorpusCmd::Task { task, len, seed } => {
            let id = TaskId::from_name(&task).ok_or_else(|| {
                let names: Vec<&str> = TaskId::ALL.iter().map(|t| t.name()).collect();
                Fail::Usage(format!("unknown task `{task}`; one of {}", names.join(", ")))
            })?;
            let inst = gen_task(id, len, seed).map_err(|e| Fail::Usage(e.to_string()))?;
            put!("{}", inst.to_text());
            Ok(())
        }
    }
}

fn report(format: Format, seed: u64) -> Out {
    let mut cfg = SuiteConfig::default();
    cfg.samples.seed = seed;
    if let Some(b) = cfg.bins.as_mut() {
        b.seed = seed;
    }
    let mut entries = with_threads(None, || run_suite(&cfg)).map_err(|e| Fail::Usage(e.to_string()))?;
    for e in &mut entries {
        e.equivalence.runtime_ms = None;
    }
    match format {
        Format::Json => put!("{}", json_lines(&entries)),
        Format::Csv => put!("{}", csv_summary(&entries)),
    }
    if entries.iter().all(|e| e.equivalence.passed()) {
        Ok(())
    } else {
        Err(Fail::Mismatch("mismatches found".into()))
    }
}

fn reg(net: &Path) -> Out {
    let t = load_net(net)?;
    say!("{}", serde_json::to_string_pretty(&reg_infinity(&t)).expect("breakdown serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Check { file } => check(&file),
        Cmd::Run { file, word, trace } => run(&file, &word, trace),
        Cmd::Compile { file, output, precision } => compile_cmd(&file, &output, precision),
        Cmd::Exec { net, word } => exec(&net, &word),
        Cmd::Verify { program, exhaustive, samples, positives, channel_checks, seed } => {
            parse_samples(&samples, positives, seed).and_then(|s| verify(&program, exhaustive, s, channel_checks))
        }
        Cmd::Corpus { cmd } => corpus_cmd(cmd),
        Cmd::Report { format, seed } => report(format, seed),
        Cmd::Reg { net } => reg(&net),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Fail::Usage(m) | Fail::Mismatch(m) | Fail::Io(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn words_split_by_space_or_longest_symbol() {
        let s = syms(&["1", "12", "SEP"]);
        assert_eq!(split_word("1 12 SEP", &s).ok().unwrap(), ["1", "12", "SEP"]);
        assert_eq!(split_word("121SEP", &s).ok().unwrap(), ["12", "1", "SEP"]);
        assert_eq!(split_word("", &s).ok().unwrap(), Vec::<String>::new());
        assert!(split_word("x", &s).is_err());
    }

    #[test]
    fn sample_specs() {
        let s = parse_samples("25,50:7", 3, 9).ok().unwrap();
        assert_eq!(s.lengths, [25, 50]);
        assert_eq!((s.uniform, s.positive, s.seed), (7, 3, 9));
        assert!(parse_samples("25", 0, 0).is_err());
        assert!(parse_samples("a:1", 0, 0).is_err());
    }
}
