use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use reset_ldp::abs_law::AbsAreaLaw;
use reset_ldp::airy;
use reset_ldp::dist::WaitingTimeModel;
use reset_ldp::ext;
use reset_ldp::functionals::{FunctionalKind, FunctionalModel};
use reset_ldp::phi::ResetModel;
use reset_ldp::rate::{self, RateSolver};
use reset_ldp::sim;
use reset_ldp::verify::{self, VerifyConfig, CRITERION_COUNT, LAW_CRITERIA};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Serialize)]
#[command(name = "reset-ldp", version, about = "Typical statistics and large deviations of reset Brownian functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(flatten)]
    law: LawArgs,
}

/// The abs-area law is read from `$RESET_LDP_CACHE` (or a temp-dir file) and
/// simulated on first use with these parameters.
#[derive(Args, Serialize)]
struct LawArgs {
    /// Paths simulated when the abs-area quantile table is built.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    law_paths: u64,
    /// The table is built with path step 2^-E.
    #[arg(long, global = true, default_value_t = 12)]
    law_step_exponent: u32,
    #[arg(long, global = true, default_value_t = 0x5eed)]
    law_seed: u64,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Tabulate φ(k).
    Phi {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        k_grid: Grid,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        out: Format,
    },
    /// Tabulate the rate function I(w).
    Rate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        w_grid: Grid,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        out: Format,
    },
    /// Regime report: ℓ, λ, ξ, Λ, Ξ, w±, edges and classification (JSON).
    Diagnose {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo summary: moments, CLT shape, empirical CGF and rate bins.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 50.0)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true)]
        k_grid: Option<Grid>,
        /// Bin edges lo:hi:n for F_t/t, giving n−1 bins.
        #[arg(long, allow_hyphen_values = true)]
        bins: Option<Grid>,
        /// Also write per-trajectory outcomes as CSV to this file.
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        out: Format,
    },
    /// Analytic μ and v, optionally checked against simulation.
    Clt {
        #[command(flatten)]
        model: ModelArgs,
        /// Horizon for the mean and variance estimates.
        #[arg(long, default_value_t = 50.0)]
        t: f64,
        /// Horizon for the skewness and kurtosis estimates.
        #[arg(long, default_value_t = 200.0)]
        t_shape: f64,
        /// Trajectories per horizon; 0 skips simulation.
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        out: Format,
    },
    /// Zeros of Ai′ with the abs-area spectral constants ν_i, c_i.
    AiryTable {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        out: Format,
    },
    /// Tabulate ϖ(k) against φ(k) and check ϖ ≥ φ − tol.
    VarpiCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        k_grid: Grid,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        out: Format,
    },
    /// Check I_r(w) = r^{1/3} I_1(r^{1/6} w) under cubic resetting.
    ScalingCheck {
        #[arg(long, value_parser = parse_kind)]
        #[serde(serialize_with = "display")]
        functional: FunctionalKind,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 1.0, 4.0])]
        r_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        w_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
        small_w: Vec<f64>,
        /// Maximum tolerated relative deviation of the scaling law.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        out: Format,
    },
    /// Run the acceptance suite; exits 3 if any criterion fails.
    Verify {
        /// Criterion numbers to run (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
        #[arg(long, default_value_t = 20240917)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        mc_paths: usize,
        #[arg(long, default_value_t = 1.0 / 256.0)]
        abs_area_path_step: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        out: Format,
    },
}

#[derive(Args, Serialize, Clone)]
struct ModelArgs {
    /// occupation | area | abs-area
    #[arg(long, value_parser = parse_kind)]
    #[serde(serialize_with = "display")]
    functional: FunctionalKind,
    /// exp:R | cubic:R | exppoly:ALPHA | stretched:BETA
    #[arg(long, value_parser = parse_dist)]
    #[serde(serialize_with = "display")]
    dist: WaitingTimeModel,
    /// Brownian path step of the abs-area sampler.
    #[arg(long)]
    path_step: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    Text,
}

/// `lo:hi:n`, n equally spaced points including both ends.
#[derive(Clone, Copy, Debug)]
struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("grid {s:?} must look like lo:hi:n"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?} in grid {s:?}"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let n: usize = n.trim().parse().map_err(|_| format!("bad point count {n:?} in grid {s:?}"))?;
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || n == 0 || (n == 1 && hi != lo) {
            return Err(format!("grid {s:?} needs finite lo ≤ hi and n ≥ 2 (or n = 1 with lo = hi)"));
        }
        Ok(Grid { lo, hi, n })
    }
}

impl Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Grid {
    fn points(&self) -> Vec<f64> {
        verify::linspace(self.lo, self.hi, self.n)
    }
}

fn display<T: Display, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(x)
}

fn parse_kind(s: &str) -> Result<FunctionalKind, String> {
    s.parse().map_err(|e: reset_ldp::Error| e.to_string())
}

fn parse_dist(s: &str) -> Result<WaitingTimeModel, String> {
    s.parse().map_err(|e: reset_ldp::Error| e.to_string())
}

enum Failure {
    Usage(String),
    Numeric(String),
    Acceptance(String),
}

impl From<reset_ldp::Error> for Failure {
    fn from(e: reset_ldp::Error) -> Self {
        match e {
            reset_ldp::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("i/o: {e}"))
    }
}

type Run<T> = Result<T, Failure>;

/// Output text plus an optional failure raised after the text is complete.
struct Report {
    text: String,
    failure: Option<Failure>,
}

impl From<String> for Report {
    fn from(text: String) -> Self {
        Report { text, failure: None }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = run(&cli).and_then(|r| {
        match &cli.output {
            Some(p) => std::fs::write(p, &r.text)?,
            None => print!("{}", r.text),
        }
        r.failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numeric failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Acceptance(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Run<Report> {
    let config = serde_json::to_value(cli).expect("config serializes");
    let out = Out { config };
    Ok(match &cli.command {
        Command::Phi { model, k_grid, out: fmt } => {
            let ks = k_grid.points();
            let m = build_model(model, ks.iter().any(|&k| k > 0.0).then_some(&cli.law))?;
            let values = ks.iter().map(|&k| m.phi(k)).collect::<Result<Vec<_>, _>>()?;
            match fmt {
                Format::Json => out.json(json!({ "phi": values })),
                _ => out.csv(
                    &[],
                    &["k", "phi", "regime", "residual"],
                    values.iter().map(|p| {
                        vec![
                            ext::fmt(p.k),
                            ext::fmt(p.value),
                            p.regime.as_str().to_string(),
                            p.residual.map(ext::fmt).unwrap_or_default(),
                        ]
                    }),
                ),
            }
            .into()
        }
        Command::Rate { model, w_grid, out: fmt } => {
            let m = build_model(model, Some(&cli.law))?;
            let profile = RateSolver::new(&m)?.rate_profile(&w_grid.points())?;
            match fmt {
                Format::Json => out.json(json!({ "profile": profile })),
                _ => out.csv(
                    &[
                        format!("stretches: {}", serde_json::to_string(&profile.stretches).unwrap()),
                        format!("singular_points: {}", serde_json::to_string(&profile.singular_points).unwrap()),
                    ],
                    &["w", "I", "k_star", "regime"],
                    profile.points.iter().map(|p| {
                        vec![ext::fmt(p.w), ext::fmt(p.value), ext::fmt(p.k_star), p.regime.as_str().to_string()]
                    }),
                ),
            }
            .into()
        }
        Command::Diagnose { model } => {
            let m = build_model(model, Some(&cli.law))?;
            let report = m.diagnose()?;
            out.json(json!({ "report": report, "typical": m.typical_stats() })).into()
        }
        Command::Simulate { model, t, n, seed, k_grid, bins, trajectories, out: fmt } => {
            simulate(&out, model, *t, *n, *seed, k_grid.as_ref(), bins.as_ref(), trajectories.as_ref(), *fmt)?.into()
        }
        Command::Clt { model, t, t_shape, n, seed, out: fmt } => clt(&out, model, *t, *t_shape, *n, *seed, *fmt)?.into(),
        Command::AiryTable { count, out: fmt } => {
            if *count == 0 {
                return Err(Failure::Usage("--count must be positive".into()));
            }
            let table = airy::build_table(*count)?;
            match fmt {
                Format::Json => out.json(json!({ "rows": table.rows(), "max_form_gap": table.max_form_gap })),
                _ => out.csv(
                    &[],
                    &["i", "z_i", "nu_i", "c_i"],
                    table.rows().iter().map(|r| vec![r.i.to_string(), ext::fmt(r.z), ext::fmt(r.nu), ext::fmt(r.c)]),
                ),
            }
            .into()
        }
        Command::VarpiCheck { model, k_grid, tol, out: fmt } => {
            let ks = k_grid.points();
            let m = build_model(model, ks.iter().any(|&k| k > 0.0).then_some(&cli.law))?;
            let rows = verify::varpi_table(&m, &ks, *tol)?;
            let bad: Vec<String> = rows.iter().filter(|r| !r.ok).map(|r| ext::fmt(r.k)).collect();
            let text = match fmt {
                Format::Json => out.json(json!({ "rows": rows })),
                _ => out.csv(
                    &[],
                    &["k", "varpi", "phi", "boundary", "ok"],
                    rows.iter().map(|r| {
                        vec![ext::fmt(r.k), ext::fmt(r.varpi), ext::fmt(r.phi), r.boundary.to_string(), r.ok.to_string()]
                    }),
                ),
            };
            let failure = (!bad.is_empty()).then(|| Failure::Acceptance(format!("ϖ < φ − tol at k = {}", bad.join(", "))));
            Report { text, failure }
        }
        Command::ScalingCheck { functional, r_list, w_list, small_w, tol, out: fmt } => {
            let f = base_functional(*functional, None, Some(&cli.law))?;
            let report = rate::scaling_check(&f, r_list, w_list, small_w)?;
            let text = match fmt {
                Format::Json => out.json(json!({ "scaling": report })),
                _ => {
                    let mut s = out.csv(
                        &[format!("max_rel_dev: {}", ext::fmt(report.max_rel_dev))],
                        &["r", "w", "I_r", "predicted", "rel_dev"],
                        report.rows.iter().map(|r| {
                            vec![ext::fmt(r.r), ext::fmt(r.w), ext::fmt(r.i_r), ext::fmt(r.predicted), ext::fmt(r.rel_dev)]
                        }),
                    );
                    s.push_str("# small-w\n");
                    s.push_str(&csv_table(
                        &["w", "I_1", "leading", "statistic"],
                        report.small_w.iter().map(|r| {
                            vec![ext::fmt(r.w), ext::fmt(r.i_1), ext::fmt(r.leading), ext::fmt(r.statistic)]
                        }),
                    ));
                    s
                }
            };
            let failure = (report.max_rel_dev > *tol)
                .then(|| Failure::Acceptance(format!("scaling deviation {} exceeds {tol}", report.max_rel_dev)));
            Report { text, failure }
        }
        Command::Verify { criteria, seed, mc_paths, abs_area_path_step, out: fmt } => {
            verify_cmd(&out, criteria, *seed, *mc_paths, *abs_area_path_step, *fmt, &cli.law)?
        }
    })
}

struct Out {
    config: Value,
}

impl Out {
    fn header(&self) -> String {
        format!("# reset-ldp {VERSION}\n# config: {}\n", self.config)
    }

    fn csv<I: IntoIterator<Item = Vec<String>>>(&self, notes: &[String], columns: &[&str], rows: I) -> String {
        let mut s = self.header();
        for n in notes {
            s.push_str(&format!("# {n}\n"));
        }
        s.push_str(&csv_table(columns, rows));
        s
    }

    fn json(&self, body: Value) -> String {
        let mut doc = json!({ "version": VERSION, "config": self.config });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        serde_json::to_string_pretty(&doc).expect("json output") + "\n"
    }
}

fn csv_table<I: IntoIterator<Item = Vec<String>>>(columns: &[&str], rows: I) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn load_law(args: &LawArgs) -> Run<Arc<AbsAreaLaw>> {
    let path = AbsAreaLaw::default_cache_path();
    if !path.exists() {
        eprintln!(
            "building abs-area law: {} paths at step 2^-{} -> {}",
            args.law_paths,
            args.law_step_exponent,
            path.display()
        );
    }
    let law = AbsAreaLaw::load_or_build(&path, args.law_paths, args.law_step_exponent, args.law_seed)?;
    if law.step_exponent() != args.law_step_exponent || law.paths() != Some(args.law_paths) {
        eprintln!(
            "note: cached abs-area law at {} was built with {:?} paths at step 2^-{}",
            path.display(),
            law.paths(),
            law.step_exponent()
        );
    }
    Ok(Arc::new(law))
}

/// `law` is given when the command may evaluate abs-area tilts k > 0.
fn base_functional(kind: FunctionalKind, path_step: Option<f64>, law: Option<&LawArgs>) -> Run<FunctionalModel> {
    let mut f = FunctionalModel::new(kind);
    if let Some(h) = path_step {
        f = f.with_path_step(h)?;
    }
    if let (FunctionalKind::AbsArea, Some(args)) = (kind, law) {
        f = f.with_law(load_law(args)?);
    }
    Ok(f)
}

fn build_model(args: &ModelArgs, law: Option<&LawArgs>) -> Run<ResetModel> {
    let f = base_functional(args.functional, args.path_step, law)?;
    Ok(ResetModel::new(f, args.dist))
}

fn check_horizon(t: f64, n: usize) -> Run<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Failure::Usage(format!("--t must be positive, got {t}")));
    }
    if n < 100 {
        return Err(Failure::Usage(format!("--n must be at least 100, got {n}")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    out: &Out,
    model: &ModelArgs,
    t: f64,
    n: usize,
    seed: u64,
    k_grid: Option<&Grid>,
    bins: Option<&Grid>,
    trajectories: Option<&PathBuf>,
    fmt: Format,
) -> Run<String> {
    let m = build_model(model, None)?;
    let ks = k_grid.map(Grid::points).unwrap_or_default();
    check_horizon(t, n)?;
    let outcomes = sim::simulate_many(&m, t, n, seed);
    if let Some(path) = trajectories {
        let table = csv_table(
            &["f", "w", "n", "backlog", "age"],
            outcomes.iter().map(|o| {
                vec![ext::fmt(o.f), ext::fmt(o.w), o.n.to_string(), ext::fmt(o.backlog), ext::fmt(o.age)]
            }),
        );
        std::fs::write(path, out.header() + &table)?;
    }
    let summary = sim::summarize(&m, t, seed, &outcomes, &ks);
    let edges = bins.map(Grid::points).unwrap_or_default();
    let bin_pairs: Vec<(f64, f64)> = edges.windows(2).map(|e| (e[0], e[1])).collect();
    let rate_bins = if bin_pairs.is_empty() { Vec::new() } else { sim::empirical_rate(&m, t, n, &bin_pairs, seed)? };
    Ok(match fmt {
        Format::Csv => {
            let mut s = out.csv(
                &[],
                &["k", "g_hat", "ci_lo", "ci_hi", "ess", "reliable"],
                summary.cgf_grid.iter().map(|p| {
                    vec![
                        ext::fmt(p.k),
                        ext::fmt(p.g_hat),
                        ext::fmt(p.ci_lo),
                        ext::fmt(p.ci_hi),
                        ext::fmt(p.ess),
                        p.reliable.to_string(),
                    ]
                }),
            );
            if !rate_bins.is_empty() {
                s.push_str("# empirical rate\n");
                s.push_str(&csv_table(
                    &["lo", "hi", "count", "p_hat", "I_hat", "I_lo", "I_hi"],
                    rate_bins.iter().map(|b| {
                        vec![
                            ext::fmt(b.lo),
                            ext::fmt(b.hi),
                            b.count.to_string(),
                            ext::fmt(b.p_hat),
                            b.rate.map(ext::fmt).unwrap_or_default(),
                            ext::fmt(b.rate_lo),
                            ext::fmt(b.rate_hi),
                        ]
                    }),
                ));
            }
            s
        }
        _ => out.json(json!({ "summary": summary, "empirical_rate": rate_bins })),
    })
}

fn clt(out: &Out, model: &ModelArgs, t: f64, t_shape: f64, n: usize, seed: u64, fmt: Format) -> Run<String> {
    let m = build_model(model, None)?;
    let typical = m.typical_stats();
    let analytic = [("mu", typical.mu), ("v", typical.v), ("skewness", 0.0), ("excess_kurtosis", 0.0)];
    let estimates = if n == 0 {
        None
    } else {
        check_horizon(t, n)?;
        check_horizon(t_shape, n)?;
        let moments = sim::run_summary(&m, t, n, &[], seed)?;
        let shape = sim::run_summary(&m, t_shape, n, &[], seed.wrapping_add(1))?;
        Some([moments.mean_f_over_t, moments.var_scaled, shape.skewness, shape.excess_kurtosis])
    };
    Ok(match fmt {
        Format::Json => out.json(json!({
            "typical": typical,
            "estimates": estimates.map(|e| {
                analytic.iter().zip(e).map(|((q, a), est)| json!({
                    "quantity": q, "analytic": a, "estimate": est.value, "stderr": est.stderr,
                })).collect::<Vec<_>>()
            }),
        })),
        _ => out.csv(
            &[format!(
                "valid_lln={} valid_clt={} valid_good_ldp={}",
                typical.valid_lln, typical.valid_clt, typical.valid_good_ldp
            )],
            &["quantity", "analytic", "estimate", "stderr", "z"],
            analytic.iter().enumerate().map(|(i, &(q, a))| {
                let mut row = vec![q.to_string(), ext::fmt(a)];
                match &estimates {
                    Some(e) => {
                        let z = (e[i].value - a) / e[i].stderr;
                        row.extend([ext::fmt(e[i].value), ext::fmt(e[i].stderr), ext::fmt(z)]);
                    }
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
                row
            }),
        ),
    })
}

fn verify_cmd(
    out: &Out,
    criteria: &[u32],
    seed: u64,
    mc_paths: usize,
    abs_area_path_step: f64,
    fmt: Format,
    law: &LawArgs,
) -> Run<Report> {
    if let Some(bad) = criteria.iter().find(|&&id| id == 0 || id > CRITERION_COUNT) {
        return Err(Failure::Usage(format!("no criterion {bad}; valid ids are 1..={CRITERION_COUNT}")));
    }
    let ids: Vec<u32> = if criteria.is_empty() { (1..=CRITERION_COUNT).collect() } else { criteria.to_vec() };
    let law = if ids.iter().any(|id| LAW_CRITERIA.contains(id)) {
        load_law(law)?
    } else {
        // never read by the selected criteria
        Arc::new(AbsAreaLaw::from_quantiles(vec![0.0; reset_ldp::abs_law::QUANTILE_COUNT], 1, None)?)
    };
    let mut cfg = VerifyConfig::new(law);
    cfg.seed = seed;
    cfg.mc_paths = mc_paths;
    cfg.abs_area_path_step = abs_area_path_step;
    let mut reports = Vec::new();
    for id in ids {
        let r = verify::run_criterion(id, &cfg).expect("validated id");
        if fmt == Format::Text {
            eprintln!("{}", r.line());
        }
        reports.push(r);
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    let text = match fmt {
        Format::Json => out.json(json!({ "criteria": reports })),
        _ => {
            let mut s = out.header();
            for r in &reports {
                s.push_str(&r.line());
                s.push('\n');
                for d in &r.details {
                    s.push_str(&format!("       {d}\n"));
                }
            }
            s.push_str(&format!("acceptance: {} criteria failed\n", failed.len()));
            s
        }
    };
    let failure = (!failed.is_empty()).then(|| Failure::Acceptance(format!("criteria {}", failed.join(", "))));
    Ok(Report { text, failure })
}
