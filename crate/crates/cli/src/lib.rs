//! The `qcdl` command line.
//!
//! Exit codes: 0 success, 1 verification failed, 2 usage error,
//! 3 mathematical degeneracy. Standard output carries only data; diagnostics
//! go to standard error.

pub mod config;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcdl_core::bounds::{
    c_n_constant, distortion_bound, equicontinuity_profile, BoundInputs, ClassParams, ConstantsConfig,
    RowFlag,
};
use qcdl_core::gallery::{
    dilatation_field, sample_points, verify_bound, ClassData, SmoothMapping, VerifyInputs,
};
use qcdl_core::geometry::norm;
use qcdl_core::report::{fmt_f64, json_f64, json_f64_opt, json_vec, SCHEMA};
use qcdl_core::{ConvexGauge, Domain, Error};
use serde_json::{json, Value};

use crate::config::{ConstantFlags, RunConfig};
use crate::spec::{parse_vec, FieldSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qcdl", version, about = "Distortion bounds for mappings quasiconformal in the mean")]
pub struct Cli {
    /// TOML run configuration; command-line flags win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chordal distortion bound for a single dilatation field.
    Bound(BoundArgs),
    /// Classify the divergence of the τ-integral of a gauge.
    PhiTest(PhiTestArgs),
    /// Tabulate the class-wide equicontinuity modulus.
    Profile(ProfileArgs),
    /// Compare empirical distortion of a gallery mapping with the bounds.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ConstantArgs {
    /// Capacity constant β (overrides the config).
    #[arg(long)]
    beta: Option<f64>,
    /// Continuum constant a_n (overrides the config).
    #[arg(long = "a-n")]
    a_n: Option<f64>,
    /// λ_n override.
    #[arg(long)]
    lambda: Option<f64>,
}

impl ConstantArgs {
    fn flags(&self) -> ConstantFlags {
        ConstantFlags {
            beta: self.beta,
            a_n: self.a_n,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    n: usize,
    /// Lower bound on c of the image complement.
    #[arg(long)]
    delta: f64,
    /// Center point, comma separated (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long)]
    eps0: f64,
    /// Distance |x − x0|; x is taken along the first axis.
    #[arg(long, required_unless_present = "x", conflicts_with = "x", allow_hyphen_values = true)]
    r: Option<f64>,
    /// Explicit point x, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Field: const:<c>, radial:s=<s>[,c=<c1>/<c2>/..], affine:a=<a>,b=<b>, grid:<path>.
    #[arg(long)]
    q: String,
    /// Field domain B(0, R); defaults to B(x0, eps0). Grid fields use their box.
    #[arg(long = "domain-radius")]
    domain_radius: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also report the bound with the bare integral in the denominator.
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Debug, Args)]
struct PhiTestArgs {
    /// Gauge: exp:alpha=<a>, power:p=<p>,c=<c>, linear:a=<a>,b=<b>, expsqrt, pwl:t,phi;...
    #[arg(long)]
    phi: String,
    #[arg(long)]
    n: usize,
    /// Lower limit of the τ-integral; must exceed Φ(0).
    #[arg(long, allow_hyphen_values = true)]
    delta0: f64,
    #[arg(long, default_value_t = qcdl_core::gauge::DEFAULT_PROBE_DECADES)]
    decades: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long)]
    phi: String,
    /// Bound M on the weighted Φ-mass of the class.
    #[arg(long = "bigM", alias = "big-m")]
    big_m: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long)]
    rho: f64,
    /// Radii, comma separated; may be empty.
    #[arg(long, allow_hyphen_values = true)]
    radii: String,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// identity, radial_stretch:alpha=<a>, linear_diag:<d1>,..,<dn>, moebius_unit:<a1>,..,<an>
    #[arg(long)]
    map: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Radius R of the domain ball B(0, R).
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Field spec, or a dilatation convention: inner, outer, outer_power.
    #[arg(long, default_value = "inner")]
    q: String,
    /// Gauge for the class-wide modulus column (needs --bigM).
    #[arg(long, requires = "big_m")]
    phi: Option<String>,
    #[arg(long = "bigM", alias = "big-m", requires = "phi")]
    big_m: Option<f64>,
    #[arg(long, conflicts_with = "delta_auto")]
    delta: Option<f64>,
    /// Derive Δ from the image complement (the default when --delta is absent).
    #[arg(long = "delta-auto")]
    delta_auto: bool,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Defaults to R − |x0|.
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Report file; printed to standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; defaults to the extension of --out, else json.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Core(e) if e.is_degenerate() => EXIT_DEGENERATE,
            Failure::Core(_) => EXIT_USAGE,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Bound(a) => cmd_bound(a, &config, out, err),
        Command::PhiTest(a) => cmd_phi_test(a, out),
        Command::Profile(a) => cmd_profile(a, &config, out),
        Command::Verify(a) => cmd_verify(a, &config, out, err),
    }
}

fn emit_json(out: &mut dyn Write, value: &Value) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Failure::Core(e.into()))
}

fn emit_text(out: &mut dyn Write, text: &str) -> std::result::Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::Core(e.into()))
}

fn point_or_origin(text: &Option<String>, n: usize, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    match text {
        None => Ok(vec![0.0; n]),
        Some(t) => {
            let v = parse_vec(t)?;
            if v.len() != n {
                return Err(Failure::Usage(format!("--{what} needs {n} coordinates, got {}", v.len())));
            }
            Ok(v)
        }
    }
}

fn parse_gauge(text: &str) -> std::result::Result<ConvexGauge, Failure> {
    text.parse::<ConvexGauge>().map_err(Failure::Core)
}

fn cmd_bound(a: &BoundArgs, run: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let n = a.n;
    let constants = run.constants(a.constants.flags())?;
    let x0 = point_or_origin(&a.x0, n, "x0")?;
    let x = match (&a.x, a.r) {
        (Some(_), _) => point_or_origin(&a.x, n, "x")?,
        (None, Some(r)) => {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Failure::Usage(format!("--r must be a nonnegative number, got {r}")));
            }
            let mut x = x0.clone();
            x[0] += r;
            x
        }
        (None, None) => return Err(Failure::Usage("one of --r or --x is required".into())),
    };
    let inputs = BoundInputs::new(n, a.delta, x0.clone(), a.eps0)?;
    let domain = match a.domain_radius {
        Some(radius) => Domain::ball(vec![0.0; n], radius)?,
        None => Domain::ball(x0.clone(), a.eps0)?,
    };
    let field = FieldSpec::parse(&a.q)?.build(domain)?;
    let spec = run.sphere_spec(n, 0)?;
    let b = distortion_bound(&field, &inputs, &x, &constants, &spec)?;
    if a.verbose && !constants.certified {
        let _ = writeln!(err, "note: capacity constants are non-certified ({})", constants.provenance);
    }
    match a.format {
        Format::Json => {
            let mut v = json!({
                "schema": SCHEMA,
                "command": "bound",
                "n": n,
                "delta": json_f64(a.delta),
                "x0": json_vec(&x0),
                "x": json_vec(&x),
                "r": json_f64(b.radius),
                "eps0": json_f64(a.eps0),
                "field": a.q,
                "radial_integral": json_f64(b.radial_integral),
                "bound": json_f64(b.bound),
            });
            if a.verbose {
                v["bound_unexponentiated"] = json_f64(b.bound_unexponentiated);
            }
            v["constants"] = constants.to_json(n)?;
            emit_json(out, &v)?;
        }
        Format::Csv => {
            let mut text = String::from("r,radial_integral,bound");
            if a.verbose {
                text.push_str(",bound_unexponentiated");
            }
            text.push_str(&format!("\n{},{},{}", fmt_f64(b.radius), fmt_f64(b.radial_integral), fmt_f64(b.bound)));
            if a.verbose {
                text.push_str(&format!(",{}", fmt_f64(b.bound_unexponentiated)));
            }
            text.push('\n');
            emit_text(out, &text)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_phi_test(a: &PhiTestArgs, out: &mut dyn Write) -> CmdResult {
    let gauge = parse_gauge(&a.phi)?;
    let v = gauge.divergence_test_with(a.n, a.delta0, a.decades)?;
    match a.format {
        Format::Json => {
            let probes: Vec<Value> = v
                .probe_values
                .iter()
                .map(|p| {
                    json!({
                        "upper_limit": json_f64(p.upper_limit),
                        "partial_integral": json_f64(p.partial_integral),
                    })
                })
                .collect();
            emit_json(
                out,
                &json!({
                    "schema": SCHEMA,
                    "command": "phi-test",
                    "gauge": gauge.to_string(),
                    "convex": gauge.is_convex(),
                    "n": a.n,
                    "delta0": json_f64(a.delta0),
                    "verdict": v.verdict.to_string(),
                    "method": serde_json::to_value(v.method).map_err(|e| Failure::Usage(e.to_string()))?,
                    "probe_verdict": v.probe_verdict.to_string(),
                    "tail_exponent": json_f64_opt(v.tail_exponent),
                    "probes": probes,
                }),
            )?;
        }
        Format::Csv => {
            let mut text = String::from("upper_limit,partial_integral,verdict\n");
            for p in &v.probe_values {
                text.push_str(&format!(
                    "{},{},{}\n",
                    fmt_f64(p.upper_limit),
                    fmt_f64(p.partial_integral),
                    v.verdict
                ));
            }
            emit_text(out, &text)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_profile(a: &ProfileArgs, run: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let n = a.n;
    let constants = run.constants(a.constants.flags())?;
    let gauge = parse_gauge(&a.phi)?;
    let x0 = point_or_origin(&a.x0, n, "x0")?;
    let radii = parse_vec(&a.radii)?;
    let params = ClassParams::new(gauge.clone(), a.big_m, a.delta, x0.clone(), a.rho, n)?;
    let rows = equicontinuity_profile(&params, &radii, &constants);
    if !rows.is_empty() && rows.iter().all(|r| r.flag == RowFlag::Invalid) {
        return Err(Failure::Usage("no valid radius in --radii".into()));
    }
    match a.format {
        Format::Csv => {
            let mut text = String::from("r,modulus,flag\n");
            for row in &rows {
                text.push_str(&format!(
                    "{},{},{}\n",
                    fmt_f64(row.r),
                    row.modulus.map(fmt_f64).unwrap_or_default(),
                    row.flag.as_str()
                ));
            }
            emit_text(out, &text)?;
        }
        Format::Json => {
            let rows: Vec<Value> = rows.iter().map(|r| r.to_json()).collect();
            emit_json(
                out,
                &json!({
                    "schema": SCHEMA,
                    "command": "profile",
                    "gauge": gauge.to_string(),
                    "n": n,
                    "big_m": json_f64(a.big_m),
                    "delta": json_f64(a.delta),
                    "x0": json_vec(&x0),
                    "rho": json_f64(a.rho),
                    "constants": constants.to_json(n)?,
                    "rows": rows,
                }),
            )?;
        }
    }
    Ok(EXIT_OK)
}

fn report_format(a: &VerifyArgs) -> Format {
    a.format.unwrap_or_else(|| match a.out.as_deref().and_then(Path::extension) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    })
}

fn cmd_verify(a: &VerifyArgs, run: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let n = a.n;
    let constants: ConstantsConfig = run.constants(a.constants.flags())?;
    let seed = run.seed(a.seed);
    let map = SmoothMapping::parse(&a.map, n, a.radius)?;
    let x0 = point_or_origin(&a.x0, n, "x0")?;
    let eps0 = a.eps0.unwrap_or(a.radius - norm(&x0));
    if eps0.is_nan() || eps0 <= 0.0 {
        return Err(Failure::Usage(format!("eps0 must be positive, got {eps0}")));
    }
    let field = match FieldSpec::parse(&a.q)? {
        FieldSpec::Convention(c) => dilatation_field(&map, c)?,
        other => other.build(Domain::ball(vec![0.0; n], a.radius)?)?,
    };
    let (delta, delta_source) = match a.delta {
        Some(d) => (d, "given".to_string()),
        None => (map.auto_delta(constants.a_n_for(n), seed)?, "auto".to_string()),
    };
    let class = match (&a.phi, a.big_m) {
        (Some(phi), Some(big_m)) => Some(ClassData {
            gauge: parse_gauge(phi)?,
            big_m,
        }),
        _ => None,
    };
    let inputs = VerifyInputs {
        map: &map,
        field: &field,
        field_label: a.q.clone(),
        class,
        delta,
        delta_source,
        x0: x0.clone(),
        eps0,
        config: &constants,
        spec: run.sphere_spec(n, seed)?,
        seed,
    };
    let samples = sample_points(&x0, eps0, a.samples, seed);
    let report = verify_bound(&inputs, &samples)?;

    let body = match report_format(a) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).map_err(|e| Failure::Usage(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => report.to_csv(),
    };
    match &a.out {
        Some(path) => {
            std::fs::write(path, &body).map_err(|e| Failure::Core(Error::Io(format!("{}: {e}", path.display()))))?;
            emit_json(
                out,
                &json!({
                    "schema": SCHEMA,
                    "command": "verify",
                    "mapping": map.to_string(),
                    "aggregate": if report.pass() { "pass" } else { "fail" },
                    "rows": report.rows.len(),
                    "failures": report.failures(),
                    "min_margin": json_f64_opt(report.min_margin()),
                    "delta": json_f64(delta),
                    "c_n": json_f64(c_n_constant(&constants, n)?),
                    "out": path.display().to_string(),
                }),
            )?;
        }
        None => emit_text(out, &body)?,
    }
    if report.pass() {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(
            err,
            "verification failed: {} of {} rows below the bound tolerance",
            report.failures(),
            report.rows.len()
        );
        Ok(EXIT_VERIFY_FAILED)
    }
}
