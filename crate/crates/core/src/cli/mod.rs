//! Batch driver: campaign runs, the correlation table and attack sweeps,
//! written as JSON, JSONL and CSV.

mod spec;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{
    ancilla_residual_error, ancilla_rotation, intercept_resend_escape_per_check, measure_de_check_error,
    run_truncated_campaigns, theoretical_escape, AncillaTarget, AttackStrategy, BasisPolicy, DetectionStats,
};
use crate::postproc::{distill, BitString, KeyMaterial, PostProcessParams, SecretDelivery};
use crate::protocol::{
    correlation_table, run_campaign, ChannelErrorReport, CorrelationRow, Decision, ProtocolError, RoundRecord,
    Transcript,
};
use crate::qsim::{substream, AncillaState, Basis};

pub use spec::{Artifact, AttackSpec, CampaignSpec, PostprocessSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ALL_ABORTED: i32 = 2;

/// Substream reserved for the secret and post-processing randomness of a
/// campaign; round streams count up from 0.
const POSTPROC_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "mdiqss", version, about = "Three-party MDI quantum secret sharing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more campaigns and write the requested artifacts.
    Run {
        /// TOML campaign file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides protocol.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of transcript,stats,table1,keys.
        #[arg(long)]
        emit: Option<String>,
    },
    /// Print the X-basis correlation table as CSV.
    Table1 {
        /// Write table1.csv here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection statistics over a parameter grid, as CSV.
    AttackSweep {
        #[arg(long, value_enum)]
        family: SweepFamily,
        /// Comma-separated grid: checked-round counts, or epsilons for the
        /// ancilla family.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        campaigns: u64,
        /// Protocol parameters are taken from this file's [protocol] table.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write attack_sweep.csv here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepFamily {
    None,
    InterceptResend,
    MeasureDe,
    Ancilla,
}

impl SweepFamily {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        <SweepFamily as ValueEnum>::from_str(name, true)
            .map_err(|_| CliError::Config(format!("unknown strategy `{name}`")))
    }

    fn default_grid(self) -> &'static str {
        match self {
            SweepFamily::Ancilla => "0,0.1,0.2",
            _ => "1,2,3",
        }
    }
}

/// Caps rayon's global pool from `MDIQSS_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("MDIQSS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("MDIQSS_THREADS = `{value}` is not a positive integer")))?;
    // A second call in the same process finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses arguments, dispatches, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mdiqss: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            emit,
        } => {
            let mut spec = match config {
                Some(path) => CampaignSpec::load(&path)?,
                None => CampaignSpec::default(),
            };
            if let Some(seed) = seed {
                spec.protocol.seed = seed;
            }
            if let Some(out) = out {
                spec.output_dir = out;
            }
            if let Some(emit) = emit {
                spec.emit = Artifact::parse_list(&emit)?;
            }
            Ok(run(&spec)?.exit_code())
        }
        Command::Table1 { out } => {
            let csv = table1_csv(true);
            match out {
                Some(dir) => write_file(&dir, "table1.csv", csv.as_bytes())?,
                None => io::stdout()
                    .write_all(csv.as_bytes())
                    .map_err(io_err(Path::new("<stdout>")))?,
            }
            Ok(EXIT_OK)
        }
        Command::AttackSweep {
            family,
            grid,
            campaigns,
            config,
            seed,
            out,
        } => {
            let spec = match config {
                Some(path) => CampaignSpec::load(&path)?,
                None => CampaignSpec::default(),
            };
            let grid = parse_grid(grid.as_deref().unwrap_or(family.default_grid()))?;
            let seed = seed.unwrap_or(spec.protocol.seed);
            let rows = attack_sweep(&spec.protocol, family, &grid, campaigns, seed)?;
            let csv = sweep_csv(&rows);
            match out {
                Some(dir) => write_file(&dir, "attack_sweep.csv", csv.as_bytes())?,
                None => io::stdout()
                    .write_all(csv.as_bytes())
                    .map_err(io_err(Path::new("<stdout>")))?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io_err(&path))
}

fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        other => panic!("expected a unit variant, got {other:?}"),
    }
}

fn row_csv(out: &mut String, r: &CorrelationRow) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{:.12}",
        label(&r.bob),
        label(&r.charlie),
        label(&r.bsm_d),
        label(&r.bsm_e),
        label(&r.alice_state),
        r.probability
    );
}

/// Correlation table as CSV, optionally restricted to X-basis sharers.
pub fn table1_csv(x_only: bool) -> String {
    let mut out = String::from("bob,charlie,bsm_d,bsm_e,alice_state,probability\n");
    for r in correlation_table()
        .iter()
        .filter(|r| !x_only || (r.bob.basis() == Basis::X && r.charlie.basis() == Basis::X))
    {
        row_csv(&mut out, r);
    }
    out
}

/// `table1` subcommand: the X/X rows on standard output.
pub fn cmd_table1() -> i32 {
    print!("{}", table1_csv(true));
    EXIT_OK
}

#[derive(Serialize)]
struct TranscriptLine<'a> {
    campaign: u64,
    #[serde(flatten)]
    record: &'a RoundRecord,
}

#[derive(Clone, Debug, Serialize)]
pub struct QberStats {
    pub aggregate: ChannelErrorReport,
    pub per_campaign: Vec<ChannelErrorReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecisionStats {
    pub per_campaign: Vec<Decision>,
    pub proceeded: u64,
    pub aborted: u64,
    pub all_aborted: bool,
}

/// Key lengths and accounting for one proceeding campaign.
#[derive(Clone, Debug, Serialize)]
pub struct KeySummary {
    pub campaign: u64,
    pub sifted_bits: usize,
    pub z_estimation_rounds: usize,
    pub qber_z: Option<f64>,
    pub parity_bits_leaked: u64,
    pub verification_bits_leaked: u64,
    pub verification_ok: bool,
    pub achievable_key_bits: u64,
    pub final_key_bits: usize,
    pub secret_bits: usize,
    pub delivered: bool,
    pub recovered_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KeyStats {
    pub per_campaign: Vec<KeySummary>,
    pub delivered: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackStats {
    pub strategy: &'static str,
    pub detection: DetectionStats,
    pub abort_rate: f64,
    pub campaign_escape_rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStats {
    pub config: CampaignSpec,
    pub qber: QberStats,
    pub decision: DecisionStats,
    pub key: KeyStats,
    pub attack: AttackStats,
}

#[derive(Serialize)]
struct KeysEntry<'a> {
    campaign: u64,
    seed: u64,
    #[serde(flatten)]
    material: &'a KeyMaterial,
}

/// Result of `run`: the statistics plus the transcripts they came from.
pub struct RunOutcome {
    pub stats: RunStats,
    pub transcripts: Vec<Transcript>,
    pub keys: Vec<(u64, KeyMaterial)>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.stats.decision.all_aborted {
            EXIT_ALL_ABORTED
        } else {
            EXIT_OK
        }
    }
}

fn summarize(campaign: u64, km: &KeyMaterial, secret_bits: usize) -> KeySummary {
    let (delivered, recovered_ok) = match &km.delivery {
        SecretDelivery::Delivered { secret, recovered, .. } => (true, secret == recovered),
        SecretDelivery::InsufficientKey { .. } => (false, false),
    };
    KeySummary {
        campaign,
        sifted_bits: km.raw_key.len(),
        z_estimation_rounds: km.z_estimation_rounds,
        qber_z: km.qber_z,
        parity_bits_leaked: km.reconciliation.parity_bits_leaked,
        verification_bits_leaked: km.reconciliation.verification_bits_leaked,
        verification_ok: km.reconciliation.verification_ok,
        achievable_key_bits: km.achievable_key_bits,
        final_key_bits: km.final_key.len(),
        secret_bits,
        delivered,
        recovered_ok,
    }
}

/// Runs every repetition and post-processes the proceeding ones, without
/// touching the filesystem.
pub fn execute(spec: &CampaignSpec) -> Result<RunOutcome, CliError> {
    spec.validate()?;
    let attack = spec.attack.to_strategy()?;
    let params = PostProcessParams::from(spec.postprocess);

    let mut transcripts = Vec::with_capacity(spec.repetitions as usize);
    let mut keys = Vec::new();
    for rep in 0..spec.repetitions {
        let seed = spec.campaign_seed(rep);
        let config = crate::protocol::ProtocolConfig {
            seed,
            ..spec.protocol.clone()
        };
        let t = run_campaign(&config, &attack)?;
        if let Some(sifted) = &t.sifted {
            let mut rng = substream(seed, POSTPROC_STREAM);
            let secret = BitString::random(spec.secret_bits, &mut rng);
            let km = distill(sifted, &params, &secret, &mut rng).map_err(|e| CliError::Config(e.to_string()))?;
            keys.push((rep, km));
        }
        transcripts.push(t);
    }

    let per_campaign: Vec<ChannelErrorReport> = transcripts.iter().map(|t| t.report).collect();
    let aggregate = per_campaign
        .iter()
        .fold(ChannelErrorReport::default(), |acc, r| acc.merged(r));
    let decisions: Vec<Decision> = transcripts.iter().map(|t| t.decision).collect();
    let proceeded = decisions.iter().filter(|&&d| d == Decision::Proceed).count() as u64;
    let detection = DetectionStats::from_transcripts(&transcripts, &attack);
    let summaries: Vec<KeySummary> = keys
        .iter()
        .map(|(rep, km)| summarize(*rep, km, spec.secret_bits))
        .collect();
    let delivered = summaries.iter().filter(|s| s.delivered).count() as u64;

    let stats = RunStats {
        config: spec.clone(),
        qber: QberStats {
            aggregate,
            per_campaign,
        },
        decision: DecisionStats {
            proceeded,
            aborted: spec.repetitions - proceeded,
            all_aborted: proceeded == 0,
            per_campaign: decisions,
        },
        key: KeyStats {
            per_campaign: summaries,
            delivered,
        },
        attack: AttackStats {
            strategy: attack.name(),
            abort_rate: detection.abort_rate(),
            campaign_escape_rate: detection.campaign_escape_rate(),
            detection,
        },
    };
    Ok(RunOutcome {
        stats,
        transcripts,
        keys,
    })
}

/// Writes the artifacts listed in `spec.emit` for a finished run.
pub fn write_artifacts(spec: &CampaignSpec, outcome: &RunOutcome) -> Result<(), CliError> {
    let dir = &spec.output_dir;
    for artifact in &spec.emit {
        match artifact {
            Artifact::Transcript => {
                let mut buf = Vec::new();
                for (campaign, t) in (0u64..).zip(&outcome.transcripts) {
                    for record in &t.rounds {
                        serde_json::to_writer(&mut buf, &TranscriptLine { campaign, record })
                            .expect("records serialize");
                        buf.push(b'\n');
                    }
                }
                write_file(dir, "transcript.jsonl", &buf)?;
            }
            Artifact::Stats => {
                let mut buf = serde_json::to_vec_pretty(&outcome.stats).expect("stats serialize");
                buf.push(b'\n');
                write_file(dir, "stats.json", &buf)?;
            }
            Artifact::Table1 => write_file(dir, "table1.csv", table1_csv(false).as_bytes())?,
            Artifact::Keys => {
                let entries: Vec<KeysEntry> = outcome
                    .keys
                    .iter()
                    .map(|(rep, material)| KeysEntry {
                        campaign: *rep,
                        seed: spec.campaign_seed(*rep),
                        material,
                    })
                    .collect();
                let mut buf = serde_json::to_vec_pretty(&entries).expect("keys serialize");
                buf.push(b'\n');
                write_file(dir, "keys.json", &buf)?;
            }
        }
    }
    Ok(())
}

/// Runs the campaign set and writes its artifacts.
pub fn run(spec: &CampaignSpec) -> Result<RunOutcome, CliError> {
    let outcome = execute(spec)?;
    write_artifacts(spec, &outcome)?;
    Ok(outcome)
}

/// `run` subcommand as an exit code: 0 success, 1 config error, 2 when every
/// campaign aborted.
pub fn cmd_run(spec: &CampaignSpec) -> i32 {
    match run(spec) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("mdiqss: {e}");
            e.exit_code()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub strategy: &'static str,
    pub parameter: f64,
    pub checked_rounds: u64,
    pub escape_rate: f64,
    pub abort_rate: f64,
    pub theoretical_escape: f64,
    pub residual_error: f64,
}

pub fn parse_grid(grid: &str) -> Result<Vec<f64>, CliError> {
    let values = grid
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Config(format!("bad grid value `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config("grid is empty".into()));
    }
    Ok(values)
}

fn checked_count(v: f64) -> Result<u32, CliError> {
    if v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
        Ok(v as u32)
    } else {
        Err(CliError::Config(format!(
            "checked-round count {v} must be a positive integer"
        )))
    }
}

/// Truncated-campaign statistics for each grid point. Checked-round
/// families stop each campaign after `k` monitored checks; the ancilla
/// family stops after one and sweeps the coupling strength.
pub fn attack_sweep(
    config: &crate::protocol::ProtocolConfig,
    family: SweepFamily,
    grid: &[f64],
    campaigns: u64,
    seed: u64,
) -> Result<Vec<SweepRow>, CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("grid is empty".into()));
    }
    if campaigns == 0 {
        return Err(CliError::Config("campaigns must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &v) in (0u64..).zip(grid) {
        let point_seed = seed.wrapping_add(i);
        let (attack, num_checked, theory, residual) = match family {
            SweepFamily::None => (AttackStrategy::NoAttack, checked_count(v)?, 1.0, 0.0),
            SweepFamily::InterceptResend => {
                let k = checked_count(v)?;
                let policy = BasisPolicy::RandomPerRound;
                (
                    AttackStrategy::InterceptResendC { basis_policy: policy },
                    k,
                    theoretical_escape(k),
                    1.0 - intercept_resend_escape_per_check(policy),
                )
            }
            SweepFamily::MeasureDe => {
                let k = checked_count(v)?;
                (
                    AttackStrategy::MeasureDEInX,
                    k,
                    theoretical_escape(k),
                    measure_de_check_error(),
                )
            }
            SweepFamily::Ancilla => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::Config(format!("epsilon {v} must lie in [0, 1]")));
                }
                let u = ancilla_rotation(v).map_err(|e| CliError::Config(e.to_string()))?;
                let ancilla = AncillaState::zero();
                let residual = ancilla_residual_error(&u, &ancilla).map_err(|e| CliError::Config(e.to_string()))?;
                let attack = AttackStrategy::EntangleAncilla {
                    u,
                    ancilla,
                    target: AncillaTarget::CParticle,
                };
                (attack, 1, 1.0 - residual, residual)
            }
        };
        let stats = run_truncated_campaigns(config, &attack, num_checked, campaigns, point_seed)?;
        rows.push(SweepRow {
            strategy: attack.name(),
            parameter: v,
            checked_rounds: stats.checked_rounds,
            escape_rate: stats.campaign_escape_rate(),
            abort_rate: stats.abort_rate(),
            theoretical_escape: theory,
            residual_error: residual,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("strategy,parameter,checked_rounds,escape_rate,abort_rate,theoretical_escape,residual_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.strategy,
            r.parameter,
            r.checked_rounds,
            r.escape_rate,
            r.abort_rate,
            r.theoretical_escape,
            r.residual_error
        );
    }
    out
}

/// `attack-sweep` subcommand printing CSV to standard output.
pub fn cmd_attack_sweep(family: &str, grid: &[f64], campaigns: u64, seed: u64) -> i32 {
    let result = SweepFamily::parse(family)
        .and_then(|f| attack_sweep(&crate::protocol::ProtocolConfig::default(), f, grid, campaigns, seed));
    match result {
        Ok(rows) => {
            print!("{}", sweep_csv(&rows));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("mdiqss: {e}");
            e.exit_code()
        }
    }
}
