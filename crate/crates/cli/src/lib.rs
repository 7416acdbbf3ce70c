//! Command-line front end for the graphcode experiments.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! failures while running.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphcode::code412::ProbeState;
use graphcode::experiment::{
    resource_report, run_experiment, ExperimentConfig, ExperimentKind, Format, ReportBundle,
};
use graphcode::noise::ApplicationPoint;
use graphcode::sampling::{counts_from_csv, DEFAULT_TRIALS};
use graphcode::witness::{builtin_witness, witness_with_uncertainty, WitnessVariant};
use graphcode::Error;

#[derive(Parser, Debug)]
#[command(
    name = "graphcode",
    version,
    about = "Simulate and analyse the [[4,1,2]] box-cluster graph code"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the report bundle.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// What to print (and, with --out, what to write).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Calibrated,
    AsPrinted,
}

impl From<VariantArg> for WitnessVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Calibrated => WitnessVariant::Calibrated,
            VariantArg::AsPrinted => WitnessVariant::AsPrinted,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ApplyArg {
    PostResource,
    PostEncoding,
}

#[derive(Args, Debug, Clone, Default)]
struct NoiseArgs {
    /// Ignore any configured noise.
    #[arg(long)]
    ideal: bool,
    /// Global white-noise visibility.
    #[arg(long)]
    visibility: Option<f64>,
    /// Calibrate the visibility so the encoded |0> probe has this fidelity.
    #[arg(long)]
    calibrate: Option<f64>,
    #[arg(long, value_enum)]
    apply: Option<ApplyArg>,
}

#[derive(Args, Debug, Clone, Default)]
struct SamplingArgs {
    /// Expected counts per measurement setting.
    #[arg(long)]
    counts: Option<f64>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the five-qubit resource and report overlaps and stabilizers.
    BuildResource,
    /// Evaluate an entanglement witness with Monte Carlo error bars.
    Witness {
        #[arg(long)]
        witness: Option<String>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long)]
        s3: Option<u8>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Encode probes and report logical tomography, fidelities and witnesses.
    Encode {
        #[arg(long, value_parser = parse_probe)]
        probe: Vec<ProbeState>,
        #[arg(long)]
        s3: Option<u8>,
        #[arg(long)]
        no_correction: bool,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Process tomography of the encoding channel.
    Channel {
        #[arg(long)]
        s3: Option<u8>,
        #[arg(long)]
        no_correction: bool,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Encode, lose a qubit, recover, and report fidelities and chi.
    Loss {
        #[arg(long)]
        lost: Vec<u8>,
        #[arg(long, value_parser = parse_probe)]
        probe: Vec<ProbeState>,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Syndrome signs for injected single-qubit errors.
    Syndrome {
        /// e.g. Z@1, X@4 or none; all errors when omitted.
        #[arg(long)]
        error: Option<String>,
        #[arg(long, value_parser = parse_probe)]
        probe: Vec<ProbeState>,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Witnesses and fidelities over a list of visibilities.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        visibilities: Vec<f64>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Witness value and Monte Carlo error from a recorded count table.
    AnalyzeCounts {
        /// CSV with columns setting,outcome,count.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        witness: String,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn parse_probe(s: &str) -> Result<ProbeState, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn base_config(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid configuration {}: {e}", path.display())))?;
            if cfg.kind != kind {
                return Err(usage(format!(
                    "config kind {} does not match this command ({})",
                    cfg.kind.name(),
                    kind.name()
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(s) = common.seed {
        cfg.sampling.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = Some(o.clone());
    }
    Ok(cfg)
}

fn apply_noise_args(cfg: &mut ExperimentConfig, n: &NoiseArgs) {
    if n.ideal {
        cfg.noise = Default::default();
        cfg.calibrate_fidelity = None;
    }
    if let Some(v) = n.visibility {
        cfg.noise.visibility = v;
    }
    if let Some(f) = n.calibrate {
        cfg.calibrate_fidelity = Some(f);
    }
    if let Some(a) = n.apply {
        cfg.noise.application = match a {
            ApplyArg::PostResource => ApplicationPoint::PostResource,
            ApplyArg::PostEncoding => ApplicationPoint::PostEncoding,
        };
    }
}

fn apply_sampling_args(cfg: &mut ExperimentConfig, s: &SamplingArgs) {
    if let Some(n) = s.counts {
        cfg.sampling.counts_per_setting = n;
    }
    if let Some(t) = s.trials {
        cfg.sampling.trials = t;
    }
}

fn probes_arg(cfg: &mut ExperimentConfig, probes: &[ProbeState]) {
    if !probes.is_empty() {
        cfg.probes = Some(probes.to_vec());
    }
}

fn emit_bundle(
    bundle: &ReportBundle,
    cfg: &ExperimentConfig,
    format: Option<FormatArg>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    if let Some(dir) = &cfg.output.dir {
        let formats: Vec<Format> = match format {
            Some(f) => vec![f.into()],
            None => cfg.output.formats.clone(),
        };
        bundle.write_to(dir, &formats)?;
    }
    let text = match format.unwrap_or(FormatArg::Json) {
        FormatArg::Json => bundle.summary_json(),
        FormatArg::Csv => {
            if bundle.tables.is_empty() {
                return Err(usage("this command produces no CSV tables"));
            }
            bundle
                .tables
                .iter()
                .map(|(name, t)| format!("# {name}\n{t}"))
                .collect::<Vec<_>>()
                .join("\n")
        }
        FormatArg::Svg => match bundle.figures.values().next() {
            Some(svg) => svg.clone(),
            None => return Err(usage("this command produces no SVG figure")),
        },
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::from(Error::from(e)))
}

fn run(cli: Cli, common: Common, out: &mut dyn Write) -> Result<(), Failure> {
    let (kind, cfg) = match cli.command {
        Command::BuildResource => {
            let report = resource_report()?;
            let text = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir).map_err(Error::from)?;
                std::fs::write(dir.join("resource.json"), &text).map_err(Error::from)?;
            }
            out.write_all(text.as_bytes()).map_err(Error::from)?;
            return Ok(());
        }
        Command::AnalyzeCounts {
            input,
            witness,
            variant,
            trials,
        } => {
            return analyze_counts(&common, &input, &witness, variant, trials, out);
        }
        Command::Witness {
            witness,
            variant,
            s3,
            noise,
            sampling,
        } => {
            let mut cfg = base_config(&common, ExperimentKind::ResourceWitness)?;
            if witness.is_some() {
                cfg.witness = witness;
            }
            if let Some(v) = variant {
                cfg.witness_variant = v.into();
            }
            if let Some(s) = s3 {
                cfg.s3 = s;
            }
            apply_noise_args(&mut cfg, &noise);
            apply_sampling_args(&mut cfg, &sampling);
            (ExperimentKind::ResourceWitness, cfg)
        }
        Command::Encode {
            probe,
            s3,
            no_correction,
            noise,
            sampling,
        } => {
            let mut cfg = base_config(&common, ExperimentKind::EncodeTomography)?;
            probes_arg(&mut cfg, &probe);
            if let Some(s) = s3 {
                cfg.s3 = s;
            }
            if no_correction {
                cfg.byproduct_correction = false;
            }
            apply_noise_args(&mut cfg, &noise);
            apply_sampling_args(&mut cfg, &sampling);
            (ExperimentKind::EncodeTomography, cfg)
        }
        Command::Channel {
            s3,
            no_correction,
            noise,
        } => {
            let mut cfg = base_config(&common, ExperimentKind::EncodeChannel)?;
            if let Some(s) = s3 {
                cfg.s3 = s;
            }
            if no_correction {
                cfg.byproduct_correction = false;
            }
            apply_noise_args(&mut cfg, &noise);
            (ExperimentKind::EncodeChannel, cfg)
        }
        Command::Loss { lost, probe, noise } => {
            let mut cfg = base_config(&common, ExperimentKind::LossRecovery)?;
            if !lost.is_empty() {
                cfg.lost = Some(lost);
            }
            probes_arg(&mut cfg, &probe);
            apply_noise_args(&mut cfg, &noise);
            (ExperimentKind::LossRecovery, cfg)
        }
        Command::Syndrome {
            error,
            probe,
            noise,
        } => {
            let mut cfg = base_config(&common, ExperimentKind::SyndromeTable)?;
            if error.is_some() {
                cfg.error = error;
            }
            probes_arg(&mut cfg, &probe);
            apply_noise_args(&mut cfg, &noise);
            (ExperimentKind::SyndromeTable, cfg)
        }
        Command::Sweep {
            visibilities,
            variant,
            sampling,
        } => {
            let mut cfg = base_config(&common, ExperimentKind::NoiseSweep)?;
            if !visibilities.is_empty() {
                cfg.sweep = Some(visibilities);
            }
            if let Some(v) = variant {
                cfg.witness_variant = v.into();
            }
            apply_sampling_args(&mut cfg, &sampling);
            (ExperimentKind::NoiseSweep, cfg)
        }
    };
    debug_assert_eq!(kind, cfg.kind);
    cfg.validate()?;
    let bundle = run_experiment(&cfg)?;
    emit_bundle(&bundle, &cfg, common.format, out)
}

fn analyze_counts(
    common: &Common,
    input: &PathBuf,
    witness: &str,
    variant: Option<VariantArg>,
    trials: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    if common.config.is_some() {
        return Err(usage("analyze-counts takes no --config"));
    }
    let text = std::fs::read_to_string(input)
        .map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;
    let records = counts_from_csv(&text)?;
    let w = builtin_witness(witness, variant.map(Into::into).unwrap_or_default())?;
    let trials = trials.unwrap_or(DEFAULT_TRIALS);
    let seed = common.seed.unwrap_or(1);
    let (value, mc) = witness_with_uncertainty(&w, &records, trials, seed)?;
    let summary = serde_json::json!({
        "witness": w.name,
        "value": value.value,
        "std": mc.std,
        "monte_carlo": mc,
        "fidelity_lower_bound": graphcode::witness::fidelity_lower_bound(value.value),
        "terms": value.terms,
        "display": format!("{:.4} ± {:.4}", value.value, mc.std),
    });
    let json_text = serde_json::to_string_pretty(&summary).map_err(Error::from)? + "\n";
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        std::fs::write(dir.join("summary.json"), &json_text).map_err(Error::from)?;
        std::fs::write(dir.join(format!("{witness}_terms.csv")), value.to_csv())
            .map_err(Error::from)?;
        std::fs::write(dir.join(format!("{witness}_terms.svg")), value.to_svg())
            .map_err(Error::from)?;
    }
    let text = match common.format.unwrap_or(FormatArg::Json) {
        FormatArg::Json => json_text,
        FormatArg::Csv => value.to_csv(),
        FormatArg::Svg => value.to_svg(),
    };
    out.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let common = cli.common.clone();
    match run(cli, common, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
