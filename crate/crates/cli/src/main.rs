use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use score_core::{Config, Kb, DEFAULT_MARKER_PAIRS};
use score_kdef::{eval_form, needs_more_input, parse};

/// Load .kdef knowledge files, run queries, or talk to the knowledge base
/// interactively.
#[derive(Parser, Debug)]
#[command(name = "score", version)]
struct Cli {
    /// Load a .kdef file (repeatable, loaded in order)
    #[arg(long = "load", value_name = "PATH")]
    load: Vec<PathBuf>,
    /// Read forms from standard input after loading
    #[arg(long)]
    repl: bool,
    /// Evaluate FORM after loading and print its value
    #[arg(long, value_name = "FORM")]
    query: Option<String>,
    /// Print trigger, substitution and firing events
    #[arg(long)]
    trace: bool,
    /// Number of marker pairs available to scans and rule checking
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MARKER_PAIRS)]
    marker_pairs: usize,
    /// Maximum rule firings caused by a single assertion
    #[arg(long = "max-chain", value_name = "N", default_value_t = 1000)]
    max_chain: usize,
}

struct Session {
    kb: Kb,
    out: io::Stdout,
}

impl Session {
    fn flush_events(&mut self) {
        let trace = self.kb.take_trace();
        let mut out = self.out.lock();
        for line in trace {
            let _ = writeln!(out, "{line}");
        }
        let _ = out.flush();
        for d in self.kb.take_diagnostics() {
            eprintln!("warning: {d}");
        }
    }

    /// Evaluates every form in `text`; returns the rendered values.
    fn eval_text(&mut self, text: &str, file: &str) -> Result<Vec<String>, score_kdef::Error> {
        let forms = parse(text, file)?;
        let mut values = Vec::new();
        for f in &forms {
            let v = eval_form(&mut self.kb, f);
            self.flush_events();
            values.push(v?.render(&self.kb));
        }
        Ok(values)
    }

    fn print(&mut self, line: &str) {
        let mut out = self.out.lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }

    fn prompt(&mut self, p: &str) {
        let mut out = self.out.lock();
        let _ = write!(out, "{p}");
        let _ = out.flush();
    }

    fn repl(&mut self) {
        let stdin = io::stdin();
        let mut lines = stdin.lock().lines();
        let mut buffer = String::new();
        loop {
            self.prompt(if buffer.is_empty() { "score> " } else { "...> " });
            let Some(Ok(line)) = lines.next() else {
                if !buffer.is_empty() {
                    eprintln!("error: input ended inside a form");
                }
                self.print("");
                return;
            };
            if buffer.is_empty() {
                let cmd = line.trim();
                if cmd.is_empty() {
                    continue;
                }
                if cmd.starts_with(':') {
                    if !self.command(cmd) {
                        return;
                    }
                    continue;
                }
            }
            buffer.push_str(&line);
            buffer.push('\n');
            if needs_more_input(&buffer) {
                continue;
            }
            let text = std::mem::take(&mut buffer);
            match self.eval_text(&text, "<repl>") {
                Ok(values) => {
                    for v in values {
                        self.print(&v);
                    }
                }
                Err(e) => eprintln!("error: {e}"),
            }
        }
    }

    /// Handles a `:command`; returns false to leave the loop.
    fn command(&mut self, cmd: &str) -> bool {
        let mut words = cmd.split_whitespace();
        match (words.next(), words.next()) {
            (Some(":quit"), _) => return false,
            (Some(":trace"), Some("on")) => self.kb.set_trace(true),
            (Some(":trace"), Some("off")) => self.kb.set_trace(false),
            (Some(":stats"), _) => {
                let line = format!(
                    "elements: {} rules: {} firings: {}",
                    self.kb.len(),
                    self.kb.rule_count(),
                    self.kb.stats().firings
                );
                self.print(&line);
            }
            _ => eprintln!("error: unknown command {cmd} (try :quit, :trace on|off, :stats)"),
        }
        true
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n");
    eprintln!("{}", Cli::command().render_usage());
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.load.is_empty() && cli.query.is_none() && !cli.repl {
        let _ = Cli::command().print_help();
        return ExitCode::from(2);
    }
    let config = Config {
        marker_pairs: cli.marker_pairs,
        max_chain_depth: cli.max_chain,
        trace: cli.trace,
    };
    let kb = match Kb::with_config(config) {
        Ok(kb) => kb,
        Err(e) => return usage_error(&e.to_string()),
    };
    let mut session = Session { kb, out: io::stdout() };
    for path in &cli.load {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        };
        if let Err(e) = session.eval_text(&text, &path.display().to_string()) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(q) = &cli.query {
        match session.eval_text(q, "<query>") {
            Ok(values) => {
                for v in values {
                    session.print(&v);
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    if cli.repl {
        session.repl();
    }
    ExitCode::SUCCESS
}
