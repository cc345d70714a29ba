use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmwave_anm::harness::sweep::Runner;
use mmwave_anm::harness::{emit_results, sweep_frames, sweep_snr, Estimator, ExperimentConfig, Preset, SweepResult};
use mmwave_anm::Result;

#[derive(Parser)]
#[command(name = "mmwave-anm", version, about = "Monte-Carlo NMSE sweeps for gridless mmWave channel estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// NMSE versus SNR at a fixed number of training frames.
    SweepSnr(Common),
    /// NMSE versus number of training frames at a fixed SNR.
    SweepFrames(Common),
    /// One trial per estimator, printed to stdout.
    Demo(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Starting parameter set.
    #[arg(long, value_parser = parse_preset, default_value = "desk")]
    preset: Preset,
    /// File of `key = value` lines applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    nrf: Option<usize>,
    #[arg(long)]
    subcarriers: Option<usize>,
    #[arg(long)]
    taps: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    frames_list: Option<Vec<usize>>,
    /// Comma-separated SNR points in dB (`inf` for noiseless).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_list: Option<Vec<f64>>,
    /// SNR in dB for `sweep-frames` and `demo`.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_estimator)]
    estimators: Option<Vec<Estimator>>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    ram_iters: Option<usize>,
    #[arg(long)]
    zeta_scale: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// CSV path; the JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit `runtime_ms` as 0 so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: mmwave_anm::Error| e.to_string())
}

fn parse_estimator(s: &str) -> std::result::Result<Estimator, String> {
    s.parse().map_err(|e: mmwave_anm::Error| e.to_string())
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::preset(self.preset);
        if let Some(path) = &self.config {
            c = c.merge_file(path)?;
        }
        macro_rules! set {
            ($flag:ident => $field:ident) => {
                if let Some(v) = self.$flag.clone() {
                    c.$field = v;
                }
            };
        }
        set!(nt => n_tx);
        set!(nr => n_rx);
        set!(nrf => n_rf);
        set!(subcarriers => n_subcarriers);
        set!(taps => n_taps);
        set!(paths => n_paths);
        set!(frames => frames);
        set!(frames_list => frames_list);
        set!(snr_list => snr_list);
        set!(snr => frames_snr_db);
        set!(trials => trials);
        set!(seed => base_seed);
        set!(estimators => estimators);
        set!(grid => grid);
        set!(ram_iters => ram_iterations);
        set!(zeta_scale => zeta_scale);
        set!(max_iters => max_iters);
        set!(out => output);
        if self.no_timing {
            c.record_runtime = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_summary(result: &SweepResult) {
    println!("{:<5} {:>8} {:>6} {:>6} {:>12} {:>9} {:>8}", "est", "snr_db", "frames", "trials", "mean_nmse_db", "std_err", "failures");
    for a in &result.aggregates {
        println!(
            "{:<5} {:>8} {:>6} {:>6} {:>12.3} {:>9.3} {:>8}",
            a.estimator, a.snr_db, a.frames, a.trials, a.mean_nmse_db, a.std_error_db, a.failures
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepSnr(args) => {
            let config = args.resolve()?;
            let result = sweep_snr(&config)?;
            print_summary(&result);
            let (csv, json) = emit_results(&result, &config.output)?;
            println!("wrote {} and {}", csv.display(), json.display());
        }
        Command::SweepFrames(args) => {
            let config = args.resolve()?;
            let result = sweep_frames(&config)?;
            print_summary(&result);
            let (csv, json) = emit_results(&result, &config.output)?;
            println!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Demo(args) => {
            let config = args.resolve()?;
            let runner = Runner::new(&config)?;
            for &e in &config.estimators {
                let row = runner.run(e, config.frames_snr_db, config.frames, 0)?;
                println!(
                    "{:<4} nmse {:>8.3} dB  iterations {:>6}  {:>9.1} ms{}",
                    e,
                    row.nmse_db,
                    row.iterations,
                    row.runtime_ms,
                    row.failure.as_deref().map(|f| format!("  failed: {f}")).unwrap_or_default()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
