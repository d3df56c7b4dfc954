use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qrscript::codec::{decode_payload, encode_program, measure, DialectId, Payload};
use qrscript::compile_source;
use qrscript::ir::{format_tac, parse_tac, Program};
use qrscript::qrio::{self, EcLevel, QrConfig, VersionChoice};
use qrscript::vm::{ReferenceTable, Session, SessionEvent, SessionState, OTHER};

/// Compile, inspect, carry and run decision-tree programs stored in QR codes.
#[derive(Debug, Parser)]
#[command(name = "qrscript", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile source (.dtd) or three-address code (.tac) to a payload.
    Compile {
        input: PathBuf,
        /// Payload file to write [default: input with .qrb extension]
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the three-address code next to the payload.
        #[arg(long)]
        tac: bool,
    },
    /// Print the three-address code of a payload (.qrb or .png).
    Decompile { input: PathBuf },
    /// Run a program interactively on the terminal.
    Run {
        input: PathBuf,
        /// Reference table, one `n=text` per line.
        #[arg(long)]
        refs: Option<PathBuf>,
    },
    /// Convert between payloads and QR images.
    Qr {
        #[command(subcommand)]
        command: QrCommand,
    },
    /// Print the size report of a program.
    Size { input: PathBuf },
}

#[derive(Debug, Subcommand)]
enum QrCommand {
    /// Render a payload (or a program) as a PNG QR code.
    Encode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Symbol version 1-40, or `auto` for the smallest that fits.
        #[arg(long, default_value = "auto")]
        version: VersionChoice,
        #[arg(long, default_value = "L")]
        ec: EcLevel,
    },
    /// Extract the payload bytes from a PNG QR code.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Compile(String),
    Codec(String),
    Runtime(String),
    Qr(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compile(_) => 2,
            CliError::Codec(_) => 3,
            CliError::Runtime(_) => 4,
            CliError::Qr(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Compile(m)
            | CliError::Codec(m)
            | CliError::Runtime(m)
            | CliError::Qr(m) => m,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?)
        .map_err(|_| CliError::Compile(format!("{}: not valid UTF-8", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn compile_file(path: &Path) -> Result<Program> {
    let text = read_text(path)?;
    if extension(path) == "tac" {
        return parse_tac(&text).map_err(|e| CliError::Compile(format!("{}:{e}", path.display())));
    }
    compile_source(&text).map_err(|e| CliError::Compile(format!("{}: {e}", path.display())))
}

fn read_payload(path: &Path) -> Result<Payload> {
    if extension(path) == "png" {
        return qrio::png_to_payload(&read(path)?).map_err(|e| CliError::Qr(e.to_string()));
    }
    Ok(Payload(read(path)?))
}

fn decode(payload: &Payload) -> Result<Program> {
    decode_payload(payload)
        .map(|(_, program)| program)
        .map_err(|e| CliError::Codec(e.to_string()))
}

/// Any supported input: source, three-address code, payload or QR image.
fn load_program(path: &Path) -> Result<Program> {
    match extension(path).as_str() {
        "dtd" | "tac" => compile_file(path),
        _ => decode(&read_payload(path)?),
    }
}

fn encode(program: &Program) -> Result<Payload> {
    encode_program(program, DialectId::DECISION_TREE).map_err(|e| CliError::Codec(e.to_string()))
}

fn compile(input: &Path, output: Option<PathBuf>, tac: bool) -> Result<()> {
    let program = compile_file(input)?;
    let payload = encode(&program)?;
    let output = output.unwrap_or_else(|| input.with_extension("qrb"));
    write(&output, payload.as_bytes())?;
    if tac {
        write(
            &output.with_extension("tac"),
            format_tac(&program).as_bytes(),
        )?;
    }
    print!("{}", measure(&program).to_text());
    Ok(())
}

fn decompile(input: &Path) -> Result<()> {
    let payload = read_payload(input)?;
    let (dialect, program) =
        decode_payload(&payload).map_err(|e| CliError::Codec(e.to_string()))?;
    eprintln!("dialect {} (decision tree)", dialect.0);
    print!("{}", format_tac(&program));
    Ok(())
}

fn size(input: &Path) -> Result<()> {
    print!("{}", measure(&load_program(input)?).to_text());
    Ok(())
}

fn read_line(stdin: &mut impl BufRead) -> Result<String> {
    let mut line = String::new();
    let n = stdin
        .read_line(&mut line)
        .map_err(|e| CliError::Usage(format!("reading answer: {e}")))?;
    if n == 0 {
        return Err(CliError::Usage(
            "input closed before the program finished".into(),
        ));
    }
    let trimmed = line.strip_suffix('\n').unwrap_or(&line);
    Ok(trimmed.strip_suffix('\r').unwrap_or(trimmed).to_string())
}

/// A numbered choice maps to its option (the last number is "Other"); any
/// other text is passed through unchanged.
fn choose(options: &[String], line: &str) -> String {
    match line.trim().parse::<usize>() {
        Ok(n) if (1..=options.len()).contains(&n) => options[n - 1].clone(),
        Ok(n) if n == options.len() + 1 => OTHER.to_string(),
        _ => line.to_string(),
    }
}

fn run(input: &Path, refs: Option<PathBuf>) -> Result<()> {
    let program = load_program(input)?;
    let refs = match refs {
        Some(path) => Some(
            ReferenceTable::parse(&read_text(&path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut session = Session::new(program, refs).map_err(|e| CliError::Codec(e.to_string()))?;
    let stdin = io::stdin();
    let mut stdin = stdin.lock();
    let mut out = io::stdout().lock();
    let mut event = session
        .advance()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    loop {
        let answer = match &event {
            SessionEvent::PromptChoice {
                message, options, ..
            } => {
                let _ = writeln!(out, "{message}");
                for (i, option) in options.iter().enumerate() {
                    let _ = writeln!(out, "  {}) {option}", i + 1);
                }
                let _ = writeln!(out, "  {}) {OTHER}", options.len() + 1);
                let _ = write!(out, "> ");
                let _ = out.flush();
                Some(choose(options, &read_line(&mut stdin)?))
            }
            SessionEvent::PromptText { message } => {
                let _ = write!(out, "{message}\n> ");
                let _ = out.flush();
                Some(read_line(&mut stdin)?)
            }
            SessionEvent::Output { message, .. } => {
                let _ = writeln!(out, "{message}");
                None
            }
            SessionEvent::Terminated => return Ok(()),
            SessionEvent::Failed { reason } => return Err(CliError::Runtime(reason.clone())),
        };
        let next = match answer {
            Some(a) => session.submit_answer(&a),
            None if session.state() == SessionState::Running => session.advance(),
            None => return Ok(()),
        };
        event = next.map_err(|e| CliError::Runtime(e.to_string()))?;
    }
}

fn qr_encode(input: &Path, output: &Path, version: VersionChoice, ec_level: EcLevel) -> Result<()> {
    let payload = match extension(input).as_str() {
        "dtd" | "tac" => encode(&compile_file(input)?)?,
        _ => read_payload(input)?,
    };
    let config = QrConfig { version, ec_level };
    let png = qrio::payload_to_png(&payload, &config).map_err(|e| CliError::Qr(e.to_string()))?;
    write(output, &png)?;
    let chosen =
        qrio::select_version(payload.len(), &config).map_err(|e| CliError::Qr(e.to_string()))?;
    println!(
        "{} bytes in a version {chosen}-{ec_level} symbol",
        payload.len()
    );
    Ok(())
}

fn qr_decode(input: &Path, output: &Path) -> Result<()> {
    let payload = qrio::png_to_payload(&read(input)?).map_err(|e| CliError::Qr(e.to_string()))?;
    write(output, payload.as_bytes())?;
    println!("{} bytes", payload.len());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile { input, output, tac } => compile(&input, output, tac),
        Command::Decompile { input } => decompile(&input),
        Command::Run { input, refs } => run(&input, refs),
        Command::Size { input } => size(&input),
        Command::Qr { command } => match command {
            QrCommand::Encode {
                input,
                output,
                version,
                ec,
            } => qr_encode(&input, &output, version, ec),
            QrCommand::Decode { input, output } => qr_decode(&input, &output),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
