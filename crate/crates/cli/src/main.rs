//! Operator surface: FER sweeps, single HARQ sessions, complexity
//! reports and built-in constant self-checks.
//!
//! Exit codes: 0 ok, 1 usage/config error, 2 self-check failure,
//! 3 runtime failure.

use clap::{Parser, Subcommand};
use polarq_core::bits_to_ascii;
use polarq_core::gates::{
    gate_accumulator, gate_costs_node, gate_sorter, latency_node, mem_overhead,
    mem_overhead_ratio, mem_scl,
};
use polarq_core::harq::NodePartition;
use polarq_core::polar::CodeConfig;
use polarq_core::scl::{base_candidates, encode_pc_subtree, shift_candidates, NodeKind, QuantSpec};
use polarq_core::sim::{run_harq_session, SessionConfig, SessionResult};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable capping the simulation worker count.
const WORKER_CAP_ENV: &str = "POLARQ_MAX_WORKERS";
const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "polarq", version, about = "Polar-code IR-HARQ link simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify built-in constants and the REP-16 worked example.
    SelfCheck,
    /// Print the NAND-equivalent cost/latency and memory tables.
    ComplexityReport {
        #[arg(long, default_value_t = 1024)]
        n: u64,
        #[arg(long, default_value_t = 8)]
        l: u64,
        #[arg(long, default_value_t = 5)]
        qe: u64,
        #[arg(long, default_value_t = 6)]
        qi: u64,
        #[arg(long, default_value_t = 8)]
        qm: u64,
        /// Also write the table as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// FER vs Es/N0 sweep over the configured grid; writes CSV.
    FerSweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
    /// One HARQ session at a single operating point; prints a summary.
    SingleSession {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
}

/// Command-line overrides; any flag given here wins over the file value.
#[derive(clap::Args)]
struct Overrides {
    /// Replace the Es/N0 grid with a single point (dB).
    #[arg(long)]
    esn0: Option<f64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    list_size: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Flat key/value run configuration (TOML).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    schema_version: u32,
    mother_len: usize,
    code_len: usize,
    k: usize,
    crc_len: usize,
    design_snr_db: f64,
    schedule: Vec<usize>,
    esn0_grid: Vec<f64>,
    frames: usize,
    #[serde(default)]
    stop_errors: usize,
    seed: u64,
    qe: u32,
    qi: u32,
    qm: u32,
    list_size: usize,
    #[serde(default = "default_true")]
    crc_aided: bool,
    #[serde(default = "default_true")]
    fast: bool,
    #[serde(default = "default_min_node")]
    min_node_size: usize,
    #[serde(default)]
    workers: usize,
    #[serde(default)]
    output_path: Option<String>,
    #[serde(default)]
    mode: Option<String>,
}

fn default_true() -> bool {
    true
}

fn default_min_node() -> usize {
    1
}

struct Run {
    session: SessionConfig,
    esn0_grid: Vec<f64>,
    output: Option<PathBuf>,
    workers: usize,
}

fn load_run(path: &Path, over: &Overrides) -> Result<Run, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let file: FileConfig =
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "config {}: schema_version {} unsupported (expected {SCHEMA_VERSION})",
            path.display(),
            file.schema_version
        ));
    }
    let esn0_grid = match over.esn0 {
        Some(p) => vec![p],
        None => file.esn0_grid.clone(),
    };
    if esn0_grid.is_empty() {
        return Err("config: esn0_grid must not be empty".into());
    }
    let session = SessionConfig {
        base: CodeConfig {
            mother_len: file.mother_len,
            code_len: file.code_len,
            k: file.k,
            crc_len: file.crc_len,
            design_snr_db: file.design_snr_db,
        },
        schedule: file.schedule.clone(),
        esn0_db: esn0_grid[0],
        frames: over.frames.unwrap_or(file.frames),
        stop_errors: file.stop_errors,
        seed: over.seed.unwrap_or(file.seed),
        quant: QuantSpec { qe: file.qe, qi: file.qi, qm: file.qm },
        list_size: over.list_size.unwrap_or(file.list_size),
        partition: NodePartition { min_node_size: file.min_node_size, ..Default::default() },
        fast: file.fast,
        crc_aided: file.crc_aided,
    };
    session.validate().map_err(|e| format!("config {}: {e}", path.display()))?;
    let output = over
        .output
        .clone()
        .or_else(|| file.output_path.as_ref().map(PathBuf::from));
    let _ = &file.mode; // informational only; subcommand selects the mode
    Ok(Run { session, esn0_grid, output, workers: over.workers.unwrap_or(file.workers) })
}

/// Installs the global worker pool: config value (0 = all cores), capped
/// by the environment variable.
fn setup_workers(configured: usize) {
    let mut n = if configured == 0 {
        std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
    } else {
        configured
    };
    if let Ok(cap) = std::env::var(WORKER_CAP_ENV) {
        if let Ok(cap) = cap.parse::<usize>() {
            n = n.min(cap.max(1));
        }
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

const CSV_HEADER: &str = "esn0_db,tx_index,rate,frames,errors,fer,ci_halfwidth";

fn csv_rows(esn0_db: f64, r: &SessionResult) -> String {
    let mut out = String::new();
    for t in 0..r.errors_per_tx.len() {
        writeln!(
            out,
            "{},{},{:.6},{},{},{:.6e},{:.6e}",
            esn0_db,
            t + 1,
            r.rates_per_tx[t],
            r.frames,
            r.errors_per_tx[t],
            r.fer(t),
            r.ci_halfwidth(t)
        )
        .unwrap();
    }
    out
}

fn write_out(path: Option<&Path>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("write {}: {e}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn fer_sweep(run: &Run) -> ExitCode {
    setup_workers(run.workers);
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for &esn0 in &run.esn0_grid {
        let mut cfg = run.session.clone();
        cfg.esn0_db = esn0;
        match run_harq_session(&cfg) {
            Ok(r) => csv.push_str(&csv_rows(esn0, &r)),
            Err(e) => {
                // Flush what we have with a truncation marker.
                csv.push_str(&format!("# truncated: {e}\n"));
                let _ = write_out(run.output.as_deref(), &csv);
                eprintln!("error: sweep failed at {esn0} dB: {e}");
                return ExitCode::from(3);
            }
        }
    }
    match write_out(run.output.as_deref(), &csv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn single_session(run: &Run) -> ExitCode {
    setup_workers(run.workers);
    let cfg = run.session.clone();
    match run_harq_session(&cfg) {
        Ok(r) => {
            println!(
                "session: Es/N0 = {} dB, {} frames, L = {}, schedule {:?}",
                cfg.esn0_db, r.frames, cfg.list_size, cfg.schedule
            );
            println!("{:>3} {:>8} {:>8} {:>10} {:>12}", "tx", "rate", "errors", "fer", "ci_half");
            for t in 0..r.errors_per_tx.len() {
                println!(
                    "{:>3} {:>8.4} {:>8} {:>10.3e} {:>12.3e}",
                    t + 1,
                    r.rates_per_tx[t],
                    r.errors_per_tx[t],
                    r.fer(t),
                    r.ci_halfwidth(t)
                );
            }
            println!("avg transmissions per frame: {:.3}", r.avg_tx);
            if r.undetected > 0 {
                println!("undetected errors: {}", r.undetected);
            }
            if run.output.is_some() {
                let mut csv = String::from(CSV_HEADER);
                csv.push('\n');
                csv.push_str(&csv_rows(cfg.esn0_db, &r));
                if let Err(e) = write_out(run.output.as_deref(), &csv) {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn complexity_report(n: u64, l: u64, qe: u64, qi: u64, qm: u64, output: Option<&Path>) -> ExitCode {
    let mut rows: Vec<(String, String, u64, Option<u64>)> = Vec::new();
    rows.push(("mem_scl_bits".into(), format!("N={n} L={l} Qe={qe} Qi={qi} Qm={qm}"),
        mem_scl(n, l, qe, qi, qm), None));
    rows.push(("mem_overhead_bits".into(), format!("N={n} L={l}"), mem_overhead(n, l), None));
    let pct = (mem_overhead_ratio(n, l, qe, qi, qm) * 100.0).round() as u64;
    rows.push(("mem_overhead_pct".into(), format!("N={n} L={l}"), pct, None));
    for s in [1u32, 2, 4, 6] {
        let n_v = 1u64 << s;
        if n_v > n {
            break;
        }
        if let Ok(c) = gate_costs_node(n_v, l, 4, 1, s) {
            let lat = latency_node(n_v, n);
            let p = format!("N_v={n_v} L={l} L_a=4 sp=1");
            rows.push(("node_ascend".into(), p.clone(), c.ascend, Some(lat.ascend)));
            rows.push(("node_candidates".into(), p.clone(), c.candidates, Some(lat.candidates)));
            rows.push(("node_descend".into(), p.clone(), c.descend, Some(lat.descend)));
            rows.push(("node_routing".into(), p, c.routing, Some(lat.routing)));
        }
    }
    if let Ok(c) = gate_sorter(l, 4, qm) {
        rows.push(("path_sorter".into(), format!("L={l} L_a=4 Qm={qm}"), c, None));
    }
    if let Ok(c) = gate_accumulator(n) {
        rows.push(("mask_accumulator".into(), format!("n={n}"), c, None));
    }
    println!("{:<18} {:<28} {:>14} {:>8}", "operation", "parameters", "nand_cost", "latency");
    for (op, p, cost, lat) in &rows {
        let lat = lat.map_or(String::from("-"), |v| v.to_string());
        println!("{op:<18} {p:<28} {cost:>14} {lat:>8}");
    }
    if let Some(path) = output {
        let mut csv = String::from("operation,parameters,nand_cost,latency\n");
        for (op, p, cost, lat) in &rows {
            let lat = lat.map_or(String::new(), |v| v.to_string());
            writeln!(csv, "{op},{p},{cost},{lat}").unwrap();
        }
        if let Err(e) = write_out(Some(path), &csv) {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    ExitCode::SUCCESS
}

fn self_check() -> ExitCode {
    let mut failures = Vec::new();
    if mem_scl(1024, 8, 5, 6, 8) != 72_712 {
        failures.push("M_SCL(1024) != 72712".to_string());
    }
    if mem_overhead(1024, 8) != 19_456 {
        failures.push("overhead(1024) != 19456".to_string());
    }
    let pct1 = (mem_overhead_ratio(1024, 8, 5, 6, 8) * 100.0).round() as u64;
    let pct2 = (mem_overhead_ratio(8192, 8, 5, 8, 11) * 100.0).round() as u64;
    if pct1 != 27 {
        failures.push(format!("overhead pct at N=1024 is {pct1}, expected 27"));
    }
    if pct2 != 25 {
        failures.push(format!("overhead pct at N=8192 is {pct2}, expected 25"));
    }
    let mut pc = vec![0u8; 16];
    pc[1] = 1;
    match encode_pc_subtree(&pc, 0, 16) {
        Ok(pc_enc) => {
            if bits_to_ascii(&pc_enc) != "1100000000000000" {
                failures.push("REP-16 PC encoding mismatch".into());
            }
            let mut shifted: Vec<String> =
                shift_candidates(&base_candidates(NodeKind::Rep, &[0; 16], 2), &pc_enc)
                    .iter()
                    .map(|c| bits_to_ascii(c))
                    .collect();
            shifted.sort();
            if shifted != ["0011111111111111", "1100000000000000"] {
                failures.push("REP-16 shifted candidates mismatch".into());
            }
        }
        Err(e) => failures.push(format!("REP-16 encoding failed: {e}")),
    }
    if failures.is_empty() {
        println!("self_check: ok (memory constants 27%/25%, REP-16 example)");
        ExitCode::SUCCESS
    } else {
        for f in &failures {
            eprintln!("self_check FAILED: {f}");
        }
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help/version are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.cmd {
        Cmd::SelfCheck => self_check(),
        Cmd::ComplexityReport { n, l, qe, qi, qm, output } => {
            complexity_report(n, l, qe, qi, qm, output.as_deref())
        }
        Cmd::FerSweep { config, over } => match load_run(&config, &over) {
            Ok(run) => fer_sweep(&run),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Cmd::SingleSession { config, over } => match load_run(&config, &over) {
            Ok(run) => single_session(&run),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
