use std::io::{BufRead, Read, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbac::act::SubjectId;
use fbac::adoc::{self, AtomicDocument};
use fbac::guarded::{Request, Settings};
use fbac::monitor::{
    self, http, AuditFilter, Identities, Monitor, MonitorConfig, MonitorError, Principal, ProjectionQuery, Role,
    POLICY_DIR_ENV,
};
use fbac::projections::ProjectionKind;

#[derive(Parser)]
#[command(name = "fbac", version, about = "Function-based access control for atomic documents")]
struct Cli {
    /// Directory with identities, settings.json, *.policy and *.adoc files.
    #[arg(long, global = true, env = POLICY_DIR_ENV, default_value = ".")]
    policy_dir: PathBuf,
    /// Subject to act as.
    #[arg(long = "as", global = true, value_name = "SUBJECT")]
    subject: Option<String>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Show a projection of the access control tensor.
    Project(ProjectArgs),
    /// Convert between plain text and .adoc.
    Convert(ConvertArgs),
    #[command(flatten)]
    Verb(Verb),
    /// Read verbs from standard input, one per line.
    Shell(ShellArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: ProjectionKind,
    #[arg(long)]
    subject: Option<String>,
    #[arg(long)]
    function: Option<String>,
    /// Object tuple: comma separated ids, `-` for the empty tuple.
    #[arg(long)]
    objects: Option<String>,
    #[arg(long)]
    prefix: Option<String>,
    /// Keep rows and columns with no grant.
    #[arg(long)]
    uncompressed: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Txt,
    Adoc,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    from: Format,
    #[arg(long)]
    to: Format,
    /// Document id for text input; defaults to the file stem.
    #[arg(long)]
    id: Option<String>,
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CopyVariantArg {
    Bytes,
    Chars,
    Exclude,
    Cite,
}

#[derive(Subcommand)]
enum Verb {
    /// Search a document or atom; without a target, search standard input.
    Search {
        target: Option<String>,
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        context: Option<u32>,
        #[arg(long)]
        quiet: bool,
        #[arg(long, value_delimiter = ',')]
        hide: Vec<String>,
    },
    /// Render a document with markers for withheld atoms.
    View { document: String },
    /// Copy an atom or an atom range into a document.
    Copy {
        /// First atom, as `doc/atom`.
        first: String,
        /// Last atom of the range, as `doc/atom`.
        last: Option<String>,
        #[arg(long, value_enum)]
        variant: CopyVariantArg,
        #[arg(long)]
        max_bytes: Option<u64>,
        #[arg(long)]
        max_chars: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        blocklist: Vec<String>,
        /// Destination document; created when it does not exist.
        #[arg(long)]
        dest: Option<String>,
    },
    /// Print a document with a watermark on every page.
    Print { document: String },
    /// Email documents or atoms.
    Email {
        #[arg(required = true)]
        targets: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        to: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        cc: Vec<String>,
    },
    /// Run any catalog function, composites included.
    Invoke {
        function: String,
        args: Vec<String>,
        /// `key=value`, repeatable.
        #[arg(short = 'o', long = "opt", value_parser = parse_kv)]
        options: Vec<(String, String)>,
        /// Text passed as standard input to the function.
        #[arg(long)]
        input: Option<String>,
    },
}

#[derive(Args)]
struct ShellArgs {
    /// Policy file; repeatable.
    #[arg(long, required = true)]
    policy: Vec<PathBuf>,
    /// .adoc document; repeatable.
    #[arg(long, required = true)]
    doc: Vec<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long)]
    audit_log: Option<PathBuf>,
    #[arg(long)]
    outbox: Option<PathBuf>,
}

#[derive(Parser)]
#[command(name = "", no_binary_name = true, disable_version_flag = true)]
struct ShellLine {
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: ShellCmd,
}

#[derive(Subcommand)]
enum ShellCmd {
    #[command(flatten)]
    Verb(Verb),
    /// Save a document, including copies made in this session.
    Save { document: String, path: PathBuf },
    /// Show this session's audit records.
    Audit,
    Quit,
}

fn parse_kind(s: &str) -> Result<ProjectionKind, String> {
    s.parse().map_err(|e: fbac::projections::ProjectionError| e.to_string())
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| format!("expected key=value, got `{s}`"))
}

type Failure = Box<dyn std::error::Error>;

impl Verb {
    fn request(self, stdin: impl FnOnce() -> std::io::Result<Vec<u8>>) -> Result<Request, Failure> {
        Ok(match self {
            Verb::Search { target, pattern, context, quiet, hide } => {
                let mut r = match target {
                    Some(t) => Request::new("search").arg(t),
                    None => Request::new("search_standard").stdin(stdin()?),
                };
                r = r.option("pattern", pattern).option("quiet", quiet.to_string());
                if let Some(c) = context {
                    r = r.option("context", c.to_string());
                }
                if !hide.is_empty() {
                    r = r.option("hide", hide.join(","));
                }
                r
            }
            Verb::View { document } => Request::new("read").arg(document),
            Verb::Copy { first, last, variant, max_bytes, max_chars, blocklist, dest } => {
                let name = match variant {
                    CopyVariantArg::Bytes => "copy_byte_restricted",
                    CopyVariantArg::Chars => "copy_character_limited",
                    CopyVariantArg::Exclude => "copy_sensitive_word_exclusion",
                    CopyVariantArg::Cite => "copy_with_citation",
                };
                let mut r = Request::new(name).arg(first);
                if let Some(l) = last {
                    r = r.arg(l);
                }
                if let Some(n) = max_bytes {
                    r = r.option("max_bytes", n.to_string());
                }
                if let Some(n) = max_chars {
                    r = r.option("max_chars", n.to_string());
                }
                if !blocklist.is_empty() {
                    r = r.option("blocklist", blocklist.join(","));
                }
                if let Some(d) = dest {
                    r = r.option("dest", d);
                }
                r
            }
            Verb::Print { document } => Request::new("print").arg(document),
            Verb::Email { targets, to, cc } => {
                let mut r = Request::new("email").option("to", to.join(","));
                if !cc.is_empty() {
                    r = r.option("cc", cc.join(","));
                }
                targets.into_iter().fold(r, Request::arg)
            }
            Verb::Invoke { function, args, options, input } => {
                let r = options.into_iter().fold(Request::new(function), |r, (k, v)| r.option(k, v));
                args.into_iter().fold(r, Request::arg).stdin(input.unwrap_or_default())
            }
        })
    }
}

/// Registers a one-off token for `subject` so local commands go through
/// the same authentication path as remote ones.
type Register = Box<dyn FnOnce(&mut Identities) -> Result<(), MonitorError>>;

fn local_principal(subject: Option<&str>) -> Result<(String, Register), Failure> {
    let subject = SubjectId::new(subject.ok_or("--as <SUBJECT> is required")?)?;
    let token = format!("local-{}", std::process::id());
    let t = token.clone();
    Ok((token, Box::new(move |ids: &mut Identities| ids.insert(&t, subject, Role::Viewer))))
}

fn run_verb(m: &Monitor, p: &Principal, verb: Verb, json: bool, out: &mut impl Write) -> Result<bool, Failure> {
    let req = verb.request(|| {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    })?;
    let r = m.invoke(p, &req)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
    } else if let Some(o) = &r.output {
        write!(out, "{}", o.to_text())?;
    } else if req.function == "read" {
        // Denied views still show the document's shape.
        let (_, v) = m.view(p, &req.args[0])?;
        write!(out, "{}", v.to_text())?;
    } else {
        eprintln!("denied: {}", r.refusal.unwrap_or_default());
    }
    Ok(r.allowed)
}

fn convert(a: &ConvertArgs) -> Result<(), Failure> {
    let text = match (a.from, a.to) {
        (Format::Txt, Format::Adoc) => {
            let id = match &a.id {
                Some(id) => id.clone(),
                None => a.input.file_stem().and_then(|s| s.to_str()).ok_or("cannot derive an id; pass --id")?.to_string(),
            };
            adoc::serialize(&AtomicDocument::from_plain_text(id, &std::fs::read_to_string(&a.input)?)?)?
        }
        (Format::Adoc, Format::Txt) => {
            let catalog = fbac::guarded::Catalog::standard();
            adoc::parse(&std::fs::read(&a.input)?, &catalog)?.to_plain_text()
        }
        _ => return Err("conversion must change the format".into()),
    };
    match &a.output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn shell(m: &Monitor, p: &Principal) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    for line in std::io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let words = shlex::split(&line).ok_or("unbalanced quotes")?;
        let parsed = match ShellLine::try_parse_from(words) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("{e}");
                continue;
            }
        };
        let mut out = stdout.lock();
        let res = match parsed.cmd {
            ShellCmd::Quit => break,
            ShellCmd::Audit => {
                for r in m.audit_query(&AuditFilter::default()) {
                    writeln!(out, "{}", serde_json::to_string(&r)?)?;
                }
                Ok(true)
            }
            ShellCmd::Save { document, path } => match m.snapshot().documents.get(&document) {
                Some(d) => std::fs::write(&path, adoc::serialize(d)?).map(|_| true).map_err(Into::into),
                None => Err(MonitorError::UnknownDocument(document).into()),
            },
            ShellCmd::Verb(Verb::Search { target: None, .. }) => Err("a shell search needs a target".into()),
            ShellCmd::Verb(v) => run_verb(m, p, v, parsed.json, &mut out),
        };
        if let Err(e) = res {
            writeln!(out, "error: {e}")?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let config = MonitorConfig::new(&cli.policy_dir);
    match cli.cmd {
        Cmd::Convert(a) => convert(&a).map(|_| true),
        Cmd::Project(a) => {
            let m = config.load()?;
            let q = ProjectionQuery {
                subject: a.subject,
                function: a.function,
                objects: a.objects,
                prefix: a.prefix,
                uncompressed: a.uncompressed,
            };
            let proj = m.projection(a.kind, &q)?;
            writeln!(std::io::stdout(), "{}", if cli.json { proj.to_json() } else { proj.to_text() })?;
            Ok(true)
        }
        Cmd::Verb(v) => {
            let (token, register) = local_principal(cli.subject.as_deref())?;
            let m = config.load_with(register)?;
            let p = m.authenticate(&token)?;
            run_verb(&m, &p, v, cli.json, &mut std::io::stdout())
        }
        Cmd::Shell(a) => {
            let (token, register) = local_principal(cli.subject.as_deref())?;
            let mut ids = Identities::default();
            register(&mut ids)?;
            let m = monitor::load_files(ids, Settings::default(), &a.policy, &a.doc)?;
            shell(&m, &m.authenticate(&token)?).map(|_| true)
        }
        Cmd::Serve(a) => {
            let config = MonitorConfig { audit_log: a.audit_log, outbox: a.outbox, ..config };
            let m = Arc::new(config.load()?);
            eprintln!("listening on http://{}", a.addr);
            tokio::runtime::Runtime::new()?.block_on(http::serve(m, a.addr))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
