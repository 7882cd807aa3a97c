//! File-oriented CLI over the zraudit library.
//!
//! Exit codes: 0 success, 2 flag/domain errors, 3 input-schema errors,
//! 4 mode/field mismatches. Decisions are data, not status: an audit that
//! rejects still exits 0.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zraudit::audit::{
    self, empirical_eps, empirical_mu, tamper, AuditInput, AuditMode, AuditRecord,
    EPS_BRACKET, MU_BRACKET, SEARCH_TOL,
};
use zraudit::bootstrap::{bootstrap_bound, BootstrapAuditSpec, QuantileDirection};
use zraudit::error::Error;
use zraudit::harness::{self, ExperimentPlan, ExperimentResult};
use zraudit::mia::{default_threshold, make_guesses, make_guesses_balanced, AbstentionMode};
use zraudit::propensity;
use zraudit::records::{read_json, read_records, write_json, write_records};
use zraudit::synth::{generate, SynthConfig};
use zraudit::tradeoff::TradeoffCurve;

#[derive(Parser)]
#[command(name = "zraudit", version, about = "Post-hoc differential-privacy auditing")]
struct Cli {
    /// Worker threads for experiments and bootstraps (affects wall time only).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic noisy-sum benchmark.
    Synth(SynthArgs),
    /// Cross-fit propensity scores onto a record file.
    FitPropensity(FitArgs),
    /// Run one audit at a fixed hypothesis (optionally with a bound search).
    Audit(AuditArgs),
    /// Bootstrap the empirical privacy lower bound.
    Bootstrap(BootstrapArgs),
    /// Run a Monte Carlo experiment plan.
    Experiment(ExperimentArgs),
    /// Summarize a report/summary/result JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Total records (split evenly into members and non-members).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    d: usize,
    /// Member bias strength.
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Alignment decay ratio in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Noise scale; the mechanism is exactly (1/sigma)-GDP.
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output record CSV.
    #[arg(long, default_value = "records.csv")]
    out: PathBuf,
    /// Output released-vector JSON.
    #[arg(long, default_value = "theta.json")]
    theta_out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    l2: f64,
    /// Optional PCA dimension before fitting.
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record CSV with the pi_hat column filled.
    #[arg(long, default_value = "records_pi.csv")]
    out: PathBuf,
    /// Optional model-export JSON (full-data fit).
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    records: PathBuf,
    /// one_run_eps_delta | one_run_fdp | zr_comp_eps_delta |
    /// zr_comp_gdp_strict | zr_comp_gdp_relaxed | zr_cond_eps_delta |
    /// zr_cond_fdp | pure_dp_tampered | pure_dp_untampered |
    /// propensity_falsify
    #[arg(long)]
    mode: String,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// Max active guesses; defaults to all records.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overlap level for compositional modes (defaults to estimating it).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    delta_ds: f64,
    /// Score threshold when guesses must be derived (default: median).
    #[arg(long)]
    threshold: Option<f64>,
    /// plain | propensity_aware abstention when deriving guesses.
    #[arg(long, default_value = "plain")]
    adversary: String,
    /// Also search for the empirical lower bound (ε̂ or μ̂).
    #[arg(long, default_value_t = false)]
    search: bool,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct BootstrapArgs {
    /// Separate propensity-training record CSV (features + membership).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value = "zr_cond_fdp")]
    mode: String,
    #[arg(long, default_value_t = 600)]
    k: usize,
    #[arg(long, default_value_t = 0.025)]
    p: f64,
    #[arg(long, default_value_t = 0.025)]
    p_prime: f64,
    /// lower | upper quantile of the recentered replicates.
    #[arg(long, default_value = "lower")]
    direction: String,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    l2: f64,
    #[arg(long, default_value_t = MU_BRACKET.1)]
    bracket_hi: f64,
    #[arg(long, default_value = "summary.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Output directory for result JSON and flat CSV.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    /// Flat per-trial CSV for experiment results.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Thread count never changes results, only wall time.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) => 2,
        Error::Schema(_) | Error::Csv(_) | Error::Json(_) => 3,
        Error::Config(_) | Error::InvalidInput(_) | Error::SingleClass(_) => 4,
        _ => 1,
    }
}

fn env_seed(flag: u64) -> u64 {
    match std::env::var("ZRAUDIT_SEED") {
        Ok(v) => v.parse().unwrap_or(flag),
        Err(_) => flag,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::FitPropensity(args) => cmd_fit(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Bootstrap(args) => cmd_bootstrap(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let config = SynthConfig {
        n: args.n,
        d: args.d,
        gamma_base: args.gamma,
        rho: args.rho,
        sigma: args.sigma,
        seed: env_seed(args.seed),
    };
    let ds = generate(&config)?;
    let features = ds.all_features();
    let scores = zraudit::mia::score_inner_product(&ds.released, &features)?;
    let records: Vec<AuditRecord> = ds
        .memberships()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rec = AuditRecord::new(i.to_string(), s);
            rec.score = Some(scores[i]);
            rec.features = Some(features[i].clone());
            rec
        })
        .collect();
    write_records(&args.out, &records)?;
    write_json(&args.theta_out, &ds.released)?;
    println!(
        "wrote {} records to {} and theta to {} (mu_true = {:.6})",
        records.len(),
        args.out.display(),
        args.theta_out.display(),
        config.mu_true()
    );
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let mut records = read_records(&args.records)?;
    let features: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            r.features.clone().ok_or_else(|| {
                Error::Config(format!("record {}: fitting propensities needs features", r.id))
            })
        })
        .collect::<Result<_, _>>()?;
    let labels: Vec<i8> = records.iter().map(|r| r.membership).collect();
    let seed = env_seed(args.seed);

    let (fit_features, projection) = match args.pca {
        Some(k) => {
            let (t, p) = propensity::reduce_dims(&features, k)?;
            (t, Some(p))
        }
        None => (features.clone(), None),
    };
    let pi = propensity::crossfit(&fit_features, &labels, args.l2, seed)?;
    for (rec, &v) in records.iter_mut().zip(&pi) {
        rec.pi_hat = Some(v);
    }
    write_records(&args.out, &records)?;
    if let Some(model_path) = args.model_out {
        let mut model = propensity::fit(&fit_features, &labels, args.l2, seed)?;
        model.projection = projection;
        write_json(&model_path, &model)?;
    }
    println!("wrote cross-fitted propensities to {}", args.out.display());
    Ok(())
}

fn parse_mode(name: &str) -> Result<AuditMode, Error> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| Error::Config(format!("unknown audit mode: {name}")))
}

fn cmd_audit(args: AuditArgs) -> Result<(), Error> {
    let mode = parse_mode(&args.mode)?;
    let mut records = read_records(&args.records)?;
    let seed = env_seed(args.seed);
    let m = records.len();
    let r = args.r.unwrap_or(m);

    if mode.needs_propensity() && records.iter().any(|rec| rec.pi_hat.is_none()) {
        return Err(Error::Config(format!(
            "mode {} needs a pi_hat column on every record",
            args.mode
        )));
    }
    let comp_mode = matches!(
        mode,
        AuditMode::ZrCompEpsDelta | AuditMode::ZrCompGdpStrict | AuditMode::ZrCompGdpRelaxed
    );
    if comp_mode && args.eta.is_none() && records.iter().any(|rec| rec.pi_hat.is_none()) {
        return Err(Error::Config(format!(
            "mode {} needs either --eta or a pi_hat column to estimate the overlap",
            args.mode
        )));
    }

    // Derive guesses from scores when the file has none.
    if records.iter().all(|rec| rec.guess == 0) {
        let scores: Vec<f64> = records
            .iter()
            .map(|rec| {
                rec.score.ok_or_else(|| {
                    Error::Config(format!("record {}: no guesses and no scores", rec.id))
                })
            })
            .collect::<Result<_, _>>()?;
        let comp = matches!(
            mode,
            AuditMode::ZrCompEpsDelta | AuditMode::ZrCompGdpStrict | AuditMode::ZrCompGdpRelaxed
        );
        let guesses = if comp {
            make_guesses_balanced(&scores, r)?.guesses
        } else {
            let threshold = match args.threshold {
                Some(t) => t,
                None => default_threshold(&scores)?,
            };
            match args.adversary.as_str() {
                "plain" => {
                    make_guesses(&scores, threshold, r, AbstentionMode::Plain, None)?.guesses
                }
                "propensity_aware" => {
                    let b: Vec<f64> = records
                        .iter()
                        .map(|rec| {
                            rec.pi_hat.map(|pi| audit::tamper_b(pi, None)).ok_or_else(|| {
                                Error::Config(format!(
                                    "record {}: propensity-aware abstention needs pi_hat",
                                    rec.id
                                ))
                            })
                        })
                        .collect::<Result<_, _>>()?;
                    make_guesses(&scores, threshold, r, AbstentionMode::PropensityAware, Some(&b))?
                        .guesses
                }
                other => return Err(Error::Domain(format!("unknown adversary: {other}"))),
            }
        };
        for (rec, g) in records.iter_mut().zip(guesses) {
            rec.guess = g;
        }
    }

    let mut input = AuditInput { records, r, p: args.p, seed };
    input.validate()?;

    let need_eps = || {
        args.eps
            .ok_or_else(|| Error::Config(format!("mode {} needs --eps", args.mode)))
    };
    let need_mu = || {
        args.mu
            .ok_or_else(|| Error::Config(format!("mode {} needs --mu", args.mode)))
    };
    let shift = |input: &AuditInput| -> Result<(f64, f64), Error> {
        match args.eta {
            Some(eta) => Ok((eta, args.delta_ds)),
            None => {
                let pi: Vec<f64> =
                    input.records.iter().map(|rec| rec.pi_hat.unwrap_or(0.5)).collect();
                let labels: Vec<i8> = input.records.iter().map(|rec| rec.membership).collect();
                let est = propensity::estimate_overlap(&pi, &labels, args.delta_ds)?;
                Ok((est.eta, est.delta_ds))
            }
        }
    };

    let mut report = match mode {
        AuditMode::OneRunEpsDelta => audit::one_run_eps_delta(&input, need_eps()?, args.delta)?,
        AuditMode::OneRunFdp => {
            audit::one_run_fdp(&input, &TradeoffCurve::gaussian(need_mu()?)?)?
        }
        AuditMode::ZrCondEpsDelta => {
            let eps = need_eps()?;
            tamper(&mut input.records, Some(eps), seed)?;
            audit::audit_cond_eps_delta(&input, eps, args.delta)?
        }
        AuditMode::ZrCondFdp => {
            tamper(&mut input.records, None, seed)?;
            audit::audit_cond_fdp(&input, &TradeoffCurve::gaussian(need_mu()?)?)?
        }
        AuditMode::ZrCompEpsDelta => {
            let (eta, dds) = shift(&input)?;
            audit::audit_comp_eps_delta(&input, need_eps()?, args.delta, eta, dds)?
        }
        AuditMode::ZrCompGdpStrict => {
            let (eta, dds) = shift(&input)?;
            audit::audit_comp_gdp(&input, need_mu()?, eta, dds, audit::GdpVariant::Strict)?
        }
        AuditMode::ZrCompGdpRelaxed => {
            let (eta, dds) = shift(&input)?;
            audit::audit_comp_gdp(&input, need_mu()?, eta, dds, audit::GdpVariant::Relaxed)?
        }
        AuditMode::PureDpTampered | AuditMode::PropensityFalsify => {
            let eps = if mode == AuditMode::PropensityFalsify { 0.0 } else { need_eps()? };
            tamper(&mut input.records, Some(eps), seed)?;
            audit::audit_pure_tampered(&input, eps)?
        }
        AuditMode::PureDpUntampered => audit::audit_pure_untampered(&input, need_eps()?)?,
    };

    if args.search {
        report.empirical_bound = Some(match mode {
            AuditMode::OneRunFdp
            | AuditMode::ZrCondFdp
            | AuditMode::ZrCompGdpStrict
            | AuditMode::ZrCompGdpRelaxed => {
                let shift_params = match mode {
                    AuditMode::ZrCompGdpStrict | AuditMode::ZrCompGdpRelaxed => {
                        Some(shift(&input)?)
                    }
                    _ => None,
                };
                empirical_mu(&input, mode, shift_params, MU_BRACKET, SEARCH_TOL)?
            }
            AuditMode::OneRunEpsDelta
            | AuditMode::ZrCondEpsDelta
            | AuditMode::PureDpTampered
            | AuditMode::PureDpUntampered => {
                empirical_eps(&input, mode, args.delta, EPS_BRACKET, SEARCH_TOL)?
            }
            other => {
                return Err(Error::Config(format!("mode {other:?} has no bound search")))
            }
        });
    }

    write_json(&args.out, &report)?;
    println!(
        "{}: decision = {:?}, c = {}, threshold = {}",
        args.mode, report.decision, report.c, report.threshold
    );
    Ok(())
}

fn cmd_bootstrap(args: BootstrapArgs) -> Result<(), Error> {
    let mode = parse_mode(&args.mode)?;
    let records = read_records(&args.records)?;
    let audit_features: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            r.features.clone().ok_or_else(|| {
                Error::Config(format!("record {}: bootstrap needs features", r.id))
            })
        })
        .collect::<Result<_, _>>()?;
    if records.iter().all(|r| r.guess == 0) {
        return Err(Error::Config(
            "bootstrap needs records with guesses already made (run audit first or \
             provide a guess column)"
                .into(),
        ));
    }
    let direction = match args.direction.as_str() {
        "lower" => QuantileDirection::Lower,
        "upper" => QuantileDirection::Upper,
        other => return Err(Error::Domain(format!("unknown direction: {other}"))),
    };

    let train_data = match &args.train {
        Some(path) => {
            let train_records = read_records(path)?;
            let tx: Vec<Vec<f64>> = train_records
                .iter()
                .map(|r| {
                    r.features.clone().ok_or_else(|| {
                        Error::Config(format!("train record {}: needs features", r.id))
                    })
                })
                .collect::<Result<_, _>>()?;
            let ty: Vec<i8> = train_records.iter().map(|r| r.membership).collect();
            Some((tx, ty))
        }
        None => None,
    };

    let r = args.r.unwrap_or_else(|| records.iter().filter(|rec| rec.guess != 0).count());
    let spec = BootstrapAuditSpec {
        records,
        audit_features,
        r,
        p: args.p,
        mode,
        l2_lambda: args.l2,
        bracket: (MU_BRACKET.0, args.bracket_hi),
        tol: SEARCH_TOL,
        seed: env_seed(args.seed),
    };
    let summary = bootstrap_bound(
        train_data.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice())),
        &spec,
        args.k,
        args.p_prime,
        direction,
    )?;
    write_json(&args.out, &summary)?;
    println!(
        "bootstrap bound = {:.6} (K = {}, confidence = {:.3})",
        summary.result,
        summary.k,
        summary.confidence.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Error> {
    let plan: ExperimentPlan = read_json(&args.plan)?;
    plan.validate().map_err(|e| Error::Schema(format!("bad plan: {e}")))?;
    let result = harness::run(&plan)?;
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("result.json"), &result)?;
    write_result_csv(&args.out.join("bounds.csv"), &result)?;
    for mr in &result.mode_results {
        match &mr.rejection {
            Some(rate) => println!(
                "{:?}: rejection rate {:.4} [{:.4}, {:.4}] over {} trials",
                mr.mode, rate.rate, rate.wilson_low, rate.wilson_high, rate.trials
            ),
            None => {
                let med = median(&mr.best_bounds);
                println!("{:?}: median best bound {med:.4}", mr.mode);
            }
        }
    }
    println!("results written to {}", args.out.display());
    Ok(())
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn write_result_csv(path: &std::path::Path, result: &ExperimentResult) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "mode", "r", "trial", "bound"])?;
    for mr in &result.mode_results {
        let mode = serde_json::to_value(mr.mode)?;
        let mode = mode.as_str().unwrap_or("unknown").to_string();
        for sp in &mr.per_r {
            for (trial, bound) in sp.bounds.iter().enumerate() {
                w.write_record([
                    "grid",
                    &mode,
                    &sp.r.to_string(),
                    &trial.to_string(),
                    &bound.to_string(),
                ])?;
            }
        }
        for (trial, bound) in mr.best_bounds.iter().enumerate() {
            w.write_record(["best", &mode, "", &trial.to_string(), &bound.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Error> {
    let value: serde_json::Value = read_json(&args.input)?;
    if value.get("mode_results").is_some() {
        let result: ExperimentResult = serde_json::from_value(value)?;
        println!(
            "experiment: kind = {:?}, trials = {}, confidence = {:.3}",
            result.kind, result.trials, result.confidence
        );
        for mr in &result.mode_results {
            match &mr.rejection {
                Some(rate) => println!(
                    "  {:?}: rejections {}/{} rate {:.4} wilson [{:.4}, {:.4}]",
                    mr.mode, rate.rejections, rate.trials, rate.rate, rate.wilson_low,
                    rate.wilson_high
                ),
                None => println!(
                    "  {:?}: median best bound {:.4}",
                    mr.mode,
                    median(&mr.best_bounds)
                ),
            }
        }
        for pw in &result.pairwise_leq {
            println!(
                "  {:?} <= {:?} in {:.1}% of trials",
                pw.mode_a,
                pw.mode_b,
                100.0 * pw.fraction_a_leq_b
            );
        }
        if let Some(csv_path) = args.csv {
            write_result_csv(&csv_path, &result)?;
            println!("per-trial CSV written to {}", csv_path.display());
        }
    } else if value.get("values").is_some() {
        let k = value["k"].as_u64().unwrap_or(0);
        println!(
            "bootstrap summary: K = {k}, result = {}, center = {}, confidence = {}",
            value["result"], value["center"],
            value.get("confidence").cloned().unwrap_or_default()
        );
    } else if value.get("decision").is_some() {
        println!(
            "audit report: mode = {}, decision = {}, m = {}, r = {}, c = {}, threshold = {}, p = {}",
            value["mode"], value["decision"], value["m"], value["r"], value["c"],
            value["threshold"], value["p"]
        );
        if let Some(b) = value.get("empirical_bound") {
            println!("empirical bound: {b}");
        }
    } else {
        return Err(Error::Schema("unrecognized report JSON".into()));
    }
    Ok(())
}
