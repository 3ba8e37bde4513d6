//! `svmom` — derive, render, evaluate, differentiate and validate exact
//! moment formulae for one-factor stochastic volatility models.
//!
//! ```text
//! svmom moment 1fsv 1                        # print E[y^1] as text
//! svmom cov 1fsv 2 1 --format json           # lag-1 covariance polynomial
//! svmom eval 1fsvj moment 2 --params p.json  # numeric value at parameters
//! svmom diff 1fsv cov 2 1 --wrt k            # exact partial derivative
//! svmom validate 1fsvj --params p.json ...   # derived-vs-simulated report
//! ```
//!
//! Exit status: 0 on success, 2 on usage errors (bad arguments, malformed
//! parameter files), 1 on computation errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use svmom_core::eval::{
    diff_poly, eval_poly, heston_params_from_map, parse_params_file, svj_params_from_map,
    SlotRegistry,
};
use svmom_core::mc::{build_report, ModelSpec, SimConfig};
use svmom_core::poly::GPoly;
use svmom_core::{heston, svj};

#[derive(Parser)]
#[command(
    name = "svmom",
    version,
    about = "Exact moments and covariances for stochastic volatility models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    /// One-factor stochastic volatility (pure diffusion).
    #[value(name = "1fsv")]
    Sv,
    /// One-factor stochastic volatility with jumps in returns.
    #[value(name = "1fsvj")]
    Svj,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Text,
    Latex,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum ReportFormat {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// Raw moment `E[y^l]`.
    Moment,
    /// Central moment `E[(y - E[y])^l]`.
    Cmom,
    /// Lag-1 covariance cov(y_n^{l1}, y_{n+1}^{l2}).
    Cov,
}

#[derive(Args)]
struct RenderOpts {
    /// Output representation.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Refuse derivations beyond this total order (cost grows combinatorially).
    #[arg(long, default_value_t = 8)]
    max_order: u32,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the raw-moment polynomial `E[y^L]`.
    Moment {
        model: Model,
        l: u32,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Print the central-moment polynomial `E[(y - E[y])^L]`.
    Cmom {
        model: Model,
        l: u32,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Print the lag-1 covariance polynomial of order (L1, L2).
    Cov {
        model: Model,
        l1: u32,
        l2: u32,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Evaluate a formula numerically at a parameter point.
    Eval {
        model: Model,
        kind: Kind,
        /// One order for moment/cmom, two for cov.
        orders: Vec<u32>,
        /// Parameter file (key=value lines or a JSON object).
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_order: u32,
    },
    /// Print the exact partial derivative of a formula.
    Diff {
        model: Model,
        kind: Kind,
        /// One order for moment/cmom, two for cov.
        orders: Vec<u32>,
        /// Parameter to differentiate with respect to.
        #[arg(long)]
        wrt: String,
        #[command(flatten)]
        opts: RenderOpts,
    },
    /// Simulate the model and compare sample statistics against the derived
    /// formulae.
    Validate {
        model: Model,
        /// Compare raw moments of orders 1..=N.
        #[arg(long, default_value_t = 5)]
        orders: u32,
        /// Covariance order pair "L1,L2"; repeat the flag for more rows.
        #[arg(long = "cov-orders", value_name = "L1,L2")]
        cov_orders: Vec<String>,
        /// Parameter file (key=value lines or a JSON object).
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 4_000_000)]
        n_obs: usize,
        #[arg(long, default_value_t = 10)]
        substeps: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        #[arg(long, default_value_t = 8)]
        max_order: u32,
    },
}

enum CliError {
    /// Bad invocation or unusable input files: exit 2.
    Usage(String),
    /// Derivation, evaluation or simulation failure: exit 1.
    Compute(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Compute(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Write to stdout, exiting quietly if the consumer closed the pipe
/// (e.g. `svmom cmom 1fsv 8 | head`).
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out
        .write_all(text.as_bytes())
        .and_then(|()| out.flush())
        .is_err()
    {
        std::process::exit(0);
    }
}

fn emit_line(text: &str) {
    emit(text);
    emit("\n");
}

fn check_order(total: u32, cap: u32) -> Result<(), CliError> {
    if total > cap {
        return Err(CliError::Usage(format!(
            "requested order {total} exceeds --max-order {cap}; derivation cost grows \
             combinatorially, raise the cap explicitly if you mean it"
        )));
    }
    Ok(())
}

fn formula(model: Model, kind: Kind, orders: &[u32], cap: u32) -> Result<GPoly, CliError> {
    let expect = if kind == Kind::Cov { 2 } else { 1 };
    if orders.len() != expect {
        return Err(CliError::Usage(format!(
            "expected {expect} order argument(s), got {}",
            orders.len()
        )));
    }
    if kind == Kind::Cov && orders.contains(&0) {
        return Err(CliError::Usage(
            "covariance orders must be at least 1".into(),
        ));
    }
    check_order(orders.iter().sum(), cap)?;
    let poly = match (model, kind) {
        (Model::Sv, Kind::Moment) => heston::moment_y(orders[0])?,
        (Model::Sv, Kind::Cmom) => heston::cmom_y(orders[0])?,
        (Model::Sv, Kind::Cov) => heston::cov_yy(orders[0], orders[1])?,
        (Model::Svj, Kind::Moment) => svj::svj_moment_y(orders[0])?,
        (Model::Svj, Kind::Cmom) => svj::svj_cmom_y(orders[0])?,
        (Model::Svj, Kind::Cov) => svj::svj_cov_yy(orders[0], orders[1])?,
    };
    Ok(poly)
}

fn render(poly: &GPoly, format: Format) -> String {
    match format {
        Format::Text => poly.to_string(),
        Format::Latex => latex(poly),
        Format::Json => String::from_utf8(poly.to_json()).expect("json is utf-8"),
    }
}

/// Map a slot name with exponent to a TeX factor.
fn latex_factor(name: &str, e: i32) -> String {
    let base = |sym: &str| {
        if e == 1 {
            sym.to_string()
        } else {
            format!("{sym}^{{{e}}}")
        }
    };
    match name {
        "e^{-kh}" => {
            if e == 1 {
                "e^{-kh}".to_string()
            } else {
                format!("e^{{-{e}kh}}")
            }
        }
        "k^{-}" => format!("k^{{-{e}}}"),
        "sqrt(1-rho^2)" => {
            if e % 2 == 0 {
                let half = e / 2;
                if half == 1 {
                    "\\left(1-\\rho^2\\right)".to_string()
                } else {
                    format!("\\left(1-\\rho^2\\right)^{{{half}}}")
                }
            } else {
                format!("\\left(1-\\rho^2\\right)^{{{e}/2}}")
            }
        }
        "h" => base("h"),
        "k" => base("k"),
        "mu" => base("\\mu"),
        "theta" => base("\\theta"),
        "sigma_v" => base("\\sigma_v"),
        "rho" => base("\\rho"),
        "lambda" => base("\\lambda"),
        "mu_j" => base("\\mu_j"),
        "sigma_j" => base("\\sigma_j"),
        other => base(&format!("\\mathrm{{{}}}", other.replace('_', "\\_"))),
    }
}

fn latex(poly: &GPoly) -> String {
    use num::Signed;
    if poly.is_zero() {
        return "0".to_string();
    }
    let names: Vec<&str> = poly.signature().names().collect();
    let mut out = String::new();
    for (i, (key, coeff)) in poly.terms().enumerate() {
        let mag = coeff.abs();
        if i == 0 {
            if coeff.is_negative() {
                out.push('-');
            }
        } else if coeff.is_negative() {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let has_factors = key.iter().any(|&e| e != 0);
        let is_unit = mag.denom() == &num::BigInt::from(1) && mag.numer() == &num::BigInt::from(1);
        let mut pieces: Vec<String> = Vec::new();
        if !(is_unit && has_factors) {
            if mag.denom() == &num::BigInt::from(1) {
                pieces.push(mag.numer().to_string());
            } else {
                pieces.push(format!("\\frac{{{}}}{{{}}}", mag.numer(), mag.denom()));
            }
        }
        for (slot, &e) in names.iter().zip(key) {
            if e != 0 {
                pieces.push(latex_factor(slot, e));
            }
        }
        out.push_str(&pieces.join(" \\, "));
    }
    out
}

fn usage_err(e: svmom_core::eval::EvalError) -> CliError {
    CliError::Usage(e.to_string())
}

fn load_model_spec(model: Model, path: &PathBuf) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let map = parse_params_file(&text).map_err(usage_err)?;
    match model {
        Model::Sv => Ok(ModelSpec::Heston(
            heston_params_from_map(&map).map_err(usage_err)?,
        )),
        Model::Svj => Ok(ModelSpec::Svj(
            svj_params_from_map(&map).map_err(usage_err)?,
        )),
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Moment { model, l, opts } => {
            check_order(l, opts.max_order)?;
            let poly = formula(model, Kind::Moment, &[l], opts.max_order)?;
            emit_line(&render(&poly, opts.format));
        }
        Cmd::Cmom { model, l, opts } => {
            check_order(l, opts.max_order)?;
            let poly = formula(model, Kind::Cmom, &[l], opts.max_order)?;
            emit_line(&render(&poly, opts.format));
        }
        Cmd::Cov {
            model,
            l1,
            l2,
            opts,
        } => {
            let poly = formula(model, Kind::Cov, &[l1, l2], opts.max_order)?;
            emit_line(&render(&poly, opts.format));
        }
        Cmd::Eval {
            model,
            kind,
            orders,
            params,
            max_order,
        } => {
            let spec = load_model_spec(model, &params)?;
            let (registry, feller_ok) = match &spec {
                ModelSpec::Heston(p) => (SlotRegistry::heston(p), p.feller_ok()),
                ModelSpec::Svj(p) => (SlotRegistry::svj(p), p.heston.feller_ok()),
            };
            if !feller_ok {
                eprintln!(
                    "warning: Feller condition 2*k*theta > sigma_v^2 violated; \
                     stationary-moment formulae may not apply"
                );
            }
            let poly = formula(model, kind, &orders, max_order)?;
            let value = eval_poly(&poly, &registry)?;
            emit_line(&value.to_string());
        }
        Cmd::Diff {
            model,
            kind,
            orders,
            wrt,
            opts,
        } => {
            let poly = formula(model, kind, &orders, opts.max_order)?;
            let grad = diff_poly(&poly, &wrt).map_err(|e| match e {
                svmom_core::eval::EvalError::UnknownParameter(_) => usage_err(e),
                other => CliError::Compute(other.to_string()),
            })?;
            emit_line(&render(&grad, opts.format));
        }
        Cmd::Validate {
            model,
            orders,
            cov_orders,
            params,
            n_obs,
            substeps,
            seed,
            format,
            max_order,
        } => {
            check_order(orders, max_order)?;
            let mut cov_pairs = Vec::with_capacity(cov_orders.len());
            for spec in &cov_orders {
                let (a, b) = spec.split_once(',').ok_or_else(|| {
                    CliError::Usage(format!("--cov-orders expects \"L1,L2\", got '{spec}'"))
                })?;
                let parse = |s: &str| -> Result<u32, CliError> {
                    s.trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("bad covariance order '{s}'")))
                };
                let pair = (parse(a)?, parse(b)?);
                if pair.0 == 0 || pair.1 == 0 {
                    return Err(CliError::Usage(
                        "covariance orders must be at least 1".into(),
                    ));
                }
                check_order(pair.0 + pair.1, max_order)?;
                cov_pairs.push(pair);
            }
            let spec = load_model_spec(model, &params)?;
            let h = match &spec {
                ModelSpec::Heston(p) => p.h,
                ModelSpec::Svj(p) => p.heston.h,
            };
            let cfg = SimConfig::new(n_obs, substeps, h, seed);
            let moment_orders: Vec<u32> = (1..=orders).collect();
            let report = build_report(&spec, &moment_orders, &cov_pairs, &cfg)?;
            match format {
                ReportFormat::Text => emit(&report.to_text()),
                ReportFormat::Json => emit_line(&report.to_json()),
                ReportFormat::Csv => emit(&report.to_csv()),
            }
        }
    }
    Ok(())
}
