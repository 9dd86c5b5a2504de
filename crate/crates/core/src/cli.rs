//! Command-line front end: `analyze` (default), `build-dict` and `bench`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::run_bench;
use crate::dict::{compile_dir, MetaOverrides};
use crate::tagger::{Tagger, TaggerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DICTIONARY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kotowari", version, about = "Japanese morphological analyzer")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    analyze: AnalyzeArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze text, one line at a time (the default)
    Analyze(AnalyzeArgs),
    /// Compile a dictionary source directory into a .ktd file
    BuildDict(BuildArgs),
    /// Time repeated word counts over a corpus
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    /// surfaces separated by spaces
    Wakati,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Dictionary file or directory holding sys.ktd
    #[arg(short = 'd', long = "dicdir")]
    dicdir: Option<PathBuf>,
    #[arg(short = 'O', long = "output-format-type")]
    output_mode: Option<OutputMode>,
    /// Per-token output template (%m, %f[n], %F-[i,j], %H)
    #[arg(short = 'F', long = "node-format", conflicts_with = "output_mode")]
    node_format: Option<String>,
    /// Write output here instead of stdout
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Print dictionary metadata and exit
    #[arg(short = 'D', long = "dictionary-info")]
    dictionary_info: bool,
    /// Input files; stdin when empty
    files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    source_dir: PathBuf,
    out_file: PathBuf,
    #[arg(long)]
    name: Option<String>,
    #[arg(long = "version")]
    dict_version: Option<String>,
    #[arg(long)]
    source_note: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(short = 'd', long = "dicdir")]
    dicdir: Option<PathBuf>,
}

/// Runs the program with explicit streams; returns the exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Some(Command::Analyze(a)) => analyze(a, stdin, stdout, stderr),
        None => analyze(cli.analyze, stdin, stdout, stderr),
        Some(Command::BuildDict(b)) => build_dict(b, stdout, stderr),
        Some(Command::Bench(b)) => bench(b, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}

type Exit = Result<(), i32>;

fn fail(stderr: &mut dyn Write, code: i32, message: impl std::fmt::Display) -> i32 {
    let _ = writeln!(stderr, "{message}");
    code
}

fn load_tagger(config: TaggerConfig, stderr: &mut dyn Write) -> Result<Tagger, i32> {
    Tagger::new(config).map_err(|d| fail(stderr, EXIT_DICTIONARY, d))
}

fn analyze(
    args: AnalyzeArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Exit {
    let wakati = args.output_mode == Some(OutputMode::Wakati);
    let tagger = load_tagger(
        TaggerConfig {
            dicdir: args.dicdir,
            format_template: args.node_format,
            emit_eos: !wakati,
        },
        stderr,
    )?;
    if args.dictionary_info {
        let meta = tagger.dictionary().meta();
        let _ = writeln!(stdout, "name={}", meta.name);
        let _ = writeln!(stdout, "version={}", meta.version);
        let _ = writeln!(stdout, "entries={}", meta.entry_count);
        let _ = writeln!(stdout, "format_version={}", meta.format_version);
        let _ = writeln!(stdout, "schema={}", tagger.dictionary().schema().name());
        if !meta.source_note.is_empty() {
            let _ = writeln!(stdout, "source_note={}", meta.source_note);
        }
        return Ok(());
    }

    let mut file_out;
    let out: &mut dyn Write = match &args.output {
        Some(path) => {
            file_out = fs::File::create(path)
                .map(io::BufWriter::new)
                .map_err(|e| fail(stderr, EXIT_INPUT, format!("{}: {e}", path.display())))?;
            &mut file_out
        }
        None => stdout,
    };

    let mut buf = String::new();
    let mut emit = |line: &str, out: &mut dyn Write| -> io::Result<()> {
        buf.clear();
        if wakati {
            buf.push_str(&tagger.wakati(line));
            buf.push('\n');
        } else {
            tagger.write_line(line, &mut buf);
        }
        out.write_all(buf.as_bytes())
    };
    let write_err =
        |e: io::Error, stderr: &mut dyn Write| fail(stderr, EXIT_INPUT, format!("output: {e}"));

    if args.files.is_empty() {
        for line in stdin.lines() {
            let line = line.map_err(|e| fail(stderr, EXIT_INPUT, format!("stdin: {e}")))?;
            emit(&line, out).map_err(|e| write_err(e, stderr))?;
        }
    } else {
        for path in &args.files {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(stderr, EXIT_INPUT, format!("{}: {e}", path.display())))?;
            for line in text.lines() {
                emit(line, out).map_err(|e| write_err(e, stderr))?;
            }
        }
    }
    out.flush().map_err(|e| write_err(e, stderr))
}

fn build_dict(args: BuildArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Exit {
    let overrides = MetaOverrides {
        name: args.name,
        version: args.dict_version,
        source_note: args.source_note,
    };
    let dict = compile_dir(&args.source_dir, &overrides)
        .map_err(|e| fail(stderr, EXIT_DICTIONARY, format!("error: {e}")))?;
    fs::write(&args.out_file, dict.save()).map_err(|e| {
        fail(
            stderr,
            EXIT_DICTIONARY,
            format!("error: {}: {e}", args.out_file.display()),
        )
    })?;
    let meta = dict.meta();
    let _ = writeln!(
        stdout,
        "entries={} version={}",
        meta.entry_count, meta.version
    );
    let _ = writeln!(
        stdout,
        "name={} format_version={} output={}",
        meta.name,
        meta.format_version,
        args.out_file.display()
    );
    Ok(())
}

fn bench(args: BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Exit {
    let corpus = fs::read_to_string(&args.corpus).map_err(|e| {
        fail(
            stderr,
            EXIT_INPUT,
            format!("{}: {e}", args.corpus.display()),
        )
    })?;
    let start = Instant::now();
    let tagger = load_tagger(
        TaggerConfig {
            dicdir: args.dicdir,
            ..TaggerConfig::default()
        },
        stderr,
    )?;
    let construction = start.elapsed();
    let mut report = run_bench(&tagger, &corpus, args.runs)
        .map_err(|e| fail(stderr, EXIT_DICTIONARY, format!("error: {e}")))?;
    report.construction = Some(construction);
    let _ = writeln!(stdout, "{report}");
    Ok(())
}
