use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use modforms::config::{Config, OutputFormat};
use modforms::delta;
use modforms::dims;
use modforms::etaquot::{search_eta_units, EtaError, EtaQuotient};
use modforms::forms::{precision_policy, BasisBuilder, FormsError};

#[derive(Parser, Debug)]
#[command(
    name = "modforms",
    version,
    about = "Strong modular units, dimensions and triangular bases on Gamma_0(N)"
)]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for commands that fan out.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// The strong unit Delta_N with its weight and valuation.
    Delta {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        level: u64,
        /// Also print the q-expansion to this precision.
        #[arg(long, value_name = "PREC", value_parser = clap::value_parser!(u64).range(1..))]
        expand: Option<u64>,
    },
    /// Dimensions of M, S and E in weight 2k.
    Dim {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        level: u64,
        #[arg(value_parser = clap::value_parser!(i64).range(1..))]
        k: i64,
    },
    /// Dimensions for k = 1..kmax with the difference at stride rho/2.
    DimTable {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        level: u64,
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(i64).range(1..))]
        kmax: i64,
    },
    /// Unitary upper triangular basis of M_{2k}(Gamma_0(N)).
    Basis {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        level: u64,
        #[arg(value_parser = clap::value_parser!(i64).range(1..))]
        k: i64,
        /// Number of coefficients; defaults to the precision policy.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        prec: Option<u64>,
    },
    /// Check the strong unit conditions for an eta quotient given as m:a pairs.
    CheckUnit {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        level: u64,
        /// Exponents as divisor:exponent; defaults to Delta_N.
        #[arg(value_parser = parse_pair, allow_hyphen_values = true)]
        exponents: Vec<(u64, i64)>,
    },
    /// Exhaustive search for strong units with bounded exponents.
    SearchUnits {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        level: u64,
        /// Largest weight 2k to report.
        #[arg(long, default_value_t = 12)]
        max_weight: i64,
        /// Bound on |a_m|.
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(i64).range(0..))]
        bound: i64,
    },
}

fn parse_pair(s: &str) -> Result<(u64, i64), String> {
    let (m, a) = s.split_once(':').ok_or_else(|| format!("expected m:a, got {s:?}"))?;
    let m = m
        .trim()
        .parse::<u64>()
        .map_err(|e| format!("bad divisor in {s:?}: {e}"))?;
    let a = a
        .trim()
        .parse::<i64>()
        .map_err(|e| format!("bad exponent in {s:?}: {e}"))?;
    Ok((m, a))
}

enum Failure {
    /// Bad input; exit code 1.
    Usage(String),
    /// Rank deficiency or an internal contradiction; exit code 2.
    Compute(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(format!("write failed: {e}"))
    }
}

impl From<FormsError> for Failure {
    fn from(e: FormsError) -> Self {
        match e {
            FormsError::BadWeight(_) | FormsError::BadLevel { .. } => Failure::Usage(e.to_string()),
            other => Failure::Compute(other.to_string()),
        }
    }
}

impl From<EtaError> for Failure {
    fn from(e: EtaError) -> Self {
        match e {
            EtaError::NotADivisor { .. } | EtaError::OddExponentSum(_) | EtaError::Arith(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Compute(other.to_string()),
        }
    }
}

impl From<dims::DimError> for Failure {
    fn from(e: dims::DimError) -> Self {
        match e {
            dims::DimError::NonIntegralGenus(..) => Failure::Compute(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Out<'a> = BufWriter<io::StdoutLock<'a>>;

fn emit_json(out: &mut Out, v: &Value) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| Failure::Compute(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn cmd_delta(out: &mut Out, cfg: &Config, level: u64, expand: Option<u64>) -> Result<(), Failure> {
    let d = delta::delta_unit(level)?;
    let report = d.report(expand.map(|p| p as usize))?;
    if cfg.output_format == OutputFormat::Json {
        let v = serde_json::to_value(&report).map_err(|e| Failure::Compute(e.to_string()))?;
        return emit_json(out, &v);
    }
    writeln!(out, "Delta_{level} = {}", d.quotient)?;
    writeln!(out, "rho = {}", d.rho)?;
    writeln!(out, "nu = {}", d.nu)?;
    if d.dilation > 1 {
        writeln!(
            out,
            "core at level {}: {} (tau -> {} tau)",
            d.core.level(),
            d.core,
            d.dilation
        )?;
    }
    if let Some(s) = report.expansion {
        writeln!(out, "expansion: {s}")?;
    }
    Ok(())
}

fn cmd_dim(out: &mut Out, cfg: &Config, level: u64, k: i64) -> Result<(), Failure> {
    let r = dims::report(level, k)?;
    if cfg.output_format == OutputFormat::Json {
        let v = serde_json::to_value(&r).map_err(|e| Failure::Compute(e.to_string()))?;
        return emit_json(out, &v);
    }
    let p = r.profile;
    writeln!(
        out,
        "N = {level}, weight {}: M:{} S:{} E:{}",
        2 * k,
        r.dim_m,
        r.dim_s,
        r.dim_e
    )?;
    writeln!(
        out,
        "profile: mu0 = {}, mu0_2 = {}, mu0_3 = {}, c0 = {}, g0 = {}",
        p.mu0, p.mu0_2, p.mu0_3, p.c0, p.g0
    )?;
    Ok(())
}

fn cmd_dim_table(out: &mut Out, cfg: &Config, level: u64, kmax: i64) -> Result<(), Failure> {
    let rho = delta::rho(level).map_err(|e| Failure::Usage(e.to_string()))?;
    let nu = delta::nu(level).map_err(|e| Failure::Usage(e.to_string()))?;
    let profile = dims::profile(level)?;
    let rows: Vec<Result<(dims::DimensionReport, i64), dims::DimError>> = (1..=kmax)
        .into_par_iter()
        .map(|k| {
            let r = dims::report(level, k)?;
            let diff = profile.dim_m(k + rho / 2)? - r.dim_m;
            Ok((r, diff))
        })
        .collect();
    if cfg.output_format == OutputFormat::Json {
        let mut table = Vec::with_capacity(rows.len());
        for row in rows {
            let (r, diff) = row?;
            let mut v = serde_json::to_value(&r).map_err(|e| Failure::Compute(e.to_string()))?;
            v["diff"] = json!(diff);
            table.push(v);
        }
        return emit_json(
            out,
            &json!({"schema": 1, "N": level, "rho": rho, "nu": nu, "rows": table}),
        );
    }
    writeln!(out, "N = {level}, rho = {rho}, nu = {nu}")?;
    writeln!(
        out,
        "{:>4} {:>6} {:>8} {:>8} {:>8} {:>12}",
        "k", "weight", "dim_M", "dim_S", "dim_E", "diff"
    )?;
    for row in rows {
        let (r, diff) = row?;
        writeln!(
            out,
            "{:>4} {:>6} {:>8} {:>8} {:>8} {:>12}",
            r.k,
            2 * r.k,
            r.dim_m,
            r.dim_s,
            r.dim_e,
            diff
        )?;
    }
    writeln!(out, "diff = dim_M(k + rho/2) - dim_M(k)")?;
    Ok(())
}

fn cmd_basis(out: &mut Out, cfg: &Config, level: u64, k: i64, prec: Option<u64>) -> Result<(), Failure> {
    let prec = match prec {
        Some(p) => p as usize,
        None => precision_policy(level, k, cfg.precision_slack)?,
    };
    let b = BasisBuilder::new(level, prec)?.basis(k)?;
    if cfg.output_format == OutputFormat::Json {
        let v = serde_json::to_value(b.dump()).map_err(|e| Failure::Compute(e.to_string()))?;
        return emit_json(out, &v);
    }
    write!(out, "{b}")?;
    Ok(())
}

fn unit_json(f: &EtaQuotient) -> Result<Value, Failure> {
    let rep = f.strong_unit_report()?;
    let orders: serde_json::Map<String, Value> = rep
        .cusp_orders
        .iter()
        .map(|(c, o)| (c.to_string(), json!(o.to_string())))
        .collect();
    Ok(json!({
        "schema": 1,
        "level": f.level(),
        "exponents": f.exponents(),
        "weight": f.weight()?,
        "strong_unit": rep.holds(),
        "conditions": {
            "square": rep.square,
            "square_product": rep.square_product.to_string(),
            "positive_integral_valuation": rep.positive_integral_valuation,
            "valuation": rep.valuation.to_string(),
            "nonvanishing_at_finite_cusps": rep.nonvanishing_at_finite_cusps,
            "cusp_orders": orders,
            "vanishes_at_infinity": rep.vanishes_at_infinity,
            "order_at_infinity": rep.order_at_infinity.to_string(),
        }
    }))
}

fn cmd_check_unit(out: &mut Out, cfg: &Config, level: u64, exponents: Vec<(u64, i64)>) -> Result<(), Failure> {
    let f = if exponents.is_empty() {
        delta::delta_unit(level)?.quotient
    } else {
        EtaQuotient::new(level, exponents)?
    };
    if cfg.output_format == OutputFormat::Json {
        return emit_json(out, &unit_json(&f)?);
    }
    let rep = f.strong_unit_report()?;
    writeln!(out, "{}: {f}", if rep.holds() { "PASS" } else { "FAIL" })?;
    for line in rep.lines() {
        writeln!(out, "  {line}")?;
    }
    Ok(())
}

fn cmd_search(out: &mut Out, cfg: &Config, level: u64, max_weight: i64, bound: i64) -> Result<(), Failure> {
    let hits = search_eta_units(level, max_weight, bound)?;
    if cfg.output_format == OutputFormat::Json {
        let list: Vec<Value> = hits
            .iter()
            .map(|f| {
                Ok(json!({
                    "exponents": f.exponents(),
                    "weight": f.weight()?,
                    "valuation": f.valuation().to_string(),
                }))
            })
            .collect::<Result<_, Failure>>()?;
        let v = json!({"schema": 1, "level": level, "max_weight": max_weight, "bound": bound, "units": list});
        return emit_json(out, &v);
    }
    writeln!(
        out,
        "{} strong units at level {level} with weight <= {max_weight}, |a_m| <= {bound}",
        hits.len()
    )?;
    for f in &hits {
        writeln!(out, "  weight {:>3}  nu {:>5}  {f}", f.weight()?, f.valuation())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = Config::from_env()
        .and_then(|c| c.with_parallelism(cli.threads.into()))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if cli.json {
        cfg.output_format = OutputFormat::Json;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build_global()
        .map_err(|e| Failure::Compute(e.to_string()))?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Delta { level, expand } => cmd_delta(&mut out, &cfg, level, expand),
        Command::Dim { level, k } => cmd_dim(&mut out, &cfg, level, k),
        Command::DimTable { level, kmax } => cmd_dim_table(&mut out, &cfg, level, kmax),
        Command::Basis { level, k, prec } => cmd_basis(&mut out, &cfg, level, k, prec),
        Command::CheckUnit { level, exponents } => cmd_check_unit(&mut out, &cfg, level, exponents),
        Command::SearchUnits {
            level,
            max_weight,
            bound,
        } => cmd_search(&mut out, &cfg, level, max_weight, bound),
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
