use std::path::Path;

use clap::Args;

use cb_core::simgen::featurize_sequence_with_k;

use crate::io::{atomic_write, write_labels_csv, write_matrix_csv};
use crate::CliError;

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Event log: comma-separated `timestamp_seconds,user,process` lines.
    #[arg(long)]
    pub events: String,
    /// Keep only this user's events (vocabulary still spans the file).
    #[arg(long)]
    pub user: Option<String>,
    /// Lookback window size in events.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Decay temperature in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub tau: f64,
    /// Output directory for X.csv, y.csv, vocab.txt.
    #[arg(long)]
    pub out: String,
}

pub fn run(args: &FeaturizeArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.events)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.events)))?;

    // process vocabulary spans the whole file, indices by first appearance
    let mut vocab: Vec<String> = Vec::new();
    let mut index_of = std::collections::HashMap::new();
    let mut events: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(CliError::Data(format!(
                "{}:{}: expected timestamp,user,process",
                args.events,
                lineno + 1
            )));
        }
        let timestamp: i64 = parts[0].trim().parse().map_err(|e| {
            CliError::Data(format!("{}:{}: bad timestamp: {e}", args.events, lineno + 1))
        })?;
        let user = parts[1].trim();
        let process = parts[2].trim().to_string();
        let pid = *index_of.entry(process.clone()).or_insert_with(|| {
            vocab.push(process);
            vocab.len()
        });
        if args.user.as_deref().is_none_or(|u| u == user) {
            events.push((pid, timestamp as f64));
        }
    }
    if events.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no events{}",
            args.events,
            args.user
                .as_deref()
                .map(|u| format!(" for user {u}"))
                .unwrap_or_default()
        )));
    }

    let data = featurize_sequence_with_k(&events, args.window, args.tau, vocab.len())?;

    let dir = Path::new(&args.out);
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {dir:?}: {e}")))?;
    write_matrix_csv(&dir.join("X.csv"), &data.x().to_owned())?;
    write_labels_csv(&dir.join("y.csv"), data.labels())?;
    let mut vocab_text = String::new();
    for name in &vocab {
        vocab_text.push_str(name);
        vocab_text.push('\n');
    }
    atomic_write(&dir.join("vocab.txt"), vocab_text.as_bytes())?;

    println!(
        "featurized {} events over {} processes (window {}, tau {}s) -> {}",
        data.n(),
        vocab.len(),
        args.window,
        args.tau,
        args.out
    );
    Ok(())
}
