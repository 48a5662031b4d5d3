use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polespec::error::Error;
use polespec::exactla::RankMode;
use polespec_cli::{error_code, render, render_error, run, Command, Format, Settings, Stats};

/// Pole order spectral sequence of a homogeneous polynomial in 3 or 4 variables.
#[derive(Parser, Debug)]
#[command(name = "polespec", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    poly: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Last degree of the page tables (default nd - 1).
    #[arg(long)]
    kmax: Option<i64>,
    /// Last degree of the E1 table (default (n+1)d, or 4d+2 with the sf flag).
    #[arg(long)]
    kmax_e1: Option<i64>,
    #[arg(long)]
    rmax: Option<usize>,
    #[arg(long, value_parser = ["exact", "modular"])]
    mode: Option<String>,
    #[arg(long)]
    primes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Local Bernstein-Sato roots along Z, as "p/q,...".
    #[arg(long)]
    rz: Option<String>,
    #[arg(long)]
    alpha_z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    chi_u: Option<i64>,
    /// Total Milnor number of a plane curve.
    #[arg(long)]
    milnor: Option<i64>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    max_rf: Option<String>,
    #[arg(long)]
    ideal_e: Option<String>,
    /// Trusted geometric hypotheses: gh,at,arr,sf,lpwh.
    #[arg(long)]
    flags: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl Cli {
    fn settings(&self) -> Settings {
        Settings {
            poly: self.poly.clone(),
            n: self.n,
            k_max: self.kmax,
            k_max_e1: self.kmax_e1,
            r_max: self.rmax,
            mode: self.mode.as_deref().map(|m| if m == "exact" { RankMode::Exact } else { RankMode::Modular }),
            primes: self.primes,
            seed: self.seed,
            rz: self.rz.clone(),
            alpha_z: self.alpha_z.clone(),
            chi_u: self.chi_u,
            milnor: self.milnor,
            flags: self.flags.clone(),
            m: self.m,
            max_rf: self.max_rf.clone(),
            beta: self.beta.clone(),
            ideal_e: self.ideal_e.clone(),
            format: self.format,
            cache: self.cache.clone(),
            ..Default::default()
        }
    }
}

fn fail(e: &Error, format: Format) -> ExitCode {
    eprint!("{}", render_error(e.class(), &e.to_string(), Format::Table));
    if format == Format::Json {
        print!("{}", render_error(e.class(), &e.to_string(), format));
    }
    ExitCode::from(error_code(e) as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let fmt = cli.format.unwrap_or_default();
    let file = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => match Settings::parse_file(&t) {
                Ok(s) => s,
                Err(e) => return fail(&e, fmt),
            },
            Err(e) => return fail(&Error::Unsupported(format!("cannot read {}: {e}", p.display())), fmt),
        },
        None => Settings::default(),
    };
    let cfg = match file.overlay(cli.settings()).build() {
        Ok(c) => c,
        Err(e) => return fail(&e, fmt),
    };
    let stats = Stats::default();
    match run(cli.command, &cfg, &stats) {
        Ok(out) => {
            if out.cache_hit {
                eprintln!("cache: hit");
            }
            print!("{}", render(&out.document, cfg.format));
            ExitCode::from(out.document.exit_code() as u8)
        }
        Err(e) => fail(&e, cfg.format),
    }
}
