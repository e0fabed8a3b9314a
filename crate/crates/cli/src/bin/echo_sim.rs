//! `atest-echo-sim` is a reference implementation of the external-simulator
//! protocol, useful for wiring tests and as a template for real adapters.
//!
//! Speaks line-delimited JSON on stdin/stdout: one handshake line, then
//! one response per request. In `mu` mode every declared predicate gets
//! the value 0.5 - mean(w); in `trajectory` mode the reply carries each
//! input coordinate as a constant channel `w0..w{D-1}` plus their mean
//! over two timestamps.

use std::io::{BufRead, Write};

use clap::Parser;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "atest-echo-sim", version)]
struct Cli {
    /// Handshake mode: "mu" or "trajectory".
    #[arg(long, default_value = "mu")]
    mode: String,
    /// Input dimension declared in the handshake.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Predicate names declared (and answered) in mu mode.
    #[arg(long, value_delimiter = ',', default_value = "mu1")]
    predicates: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let handshake = json!({
        "protocol": 1,
        "mode": cli.mode,
        "dim": cli.dim,
        "predicates": cli.predicates,
    });
    writeln!(out, "{handshake}").expect("stdout");
    out.flush().expect("stdout");

    let stdin = std::io::stdin();
    for line in stdin.lock().lines() {
        let line = line.expect("stdin");
        if line.trim().is_empty() {
            continue;
        }
        let request: Value = serde_json::from_str(&line).expect("request JSON");
        let id = request["id"].clone();
        let w: Vec<f64> = request["w"]
            .as_array()
            .expect("w array")
            .iter()
            .map(|v| v.as_f64().expect("finite w"))
            .collect();
        let mean = w.iter().sum::<f64>() / w.len().max(1) as f64;
        let response = match cli.mode.as_str() {
            "mu" => {
                let mu: serde_json::Map<String, Value> = cli
                    .predicates
                    .iter()
                    .map(|name| (name.clone(), json!(0.5 - mean)))
                    .collect();
                json!({ "id": id, "mu": mu })
            }
            _ => {
                let mut channels = serde_json::Map::new();
                for (d, &value) in w.iter().enumerate() {
                    channels.insert(format!("w{d}"), json!([value, value]));
                }
                channels.insert("mean".to_string(), json!([mean, mean]));
                json!({
                    "id": id,
                    "trajectory": { "t": [0.0, 1.0], "channels": channels }
                })
            }
        };
        writeln!(out, "{response}").expect("stdout");
        out.flush().expect("stdout");
    }
}
