use std::collections::BTreeMap;

use csi_forge::dataset::{Dataset, GenieEntry};
use serde_json::{json, Value};

use crate::CliError;

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn subset_metrics(entries: &[&GenieEntry]) -> Value {
    if entries.is_empty() {
        return json!({ "n_slots": 0 });
    }
    let bins = |e: &GenieEntry, x: f64| x / e.bin_seconds;
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, f64::max);
    let mu_err = |e: &&GenieEntry| bins(e, (e.mu_hat - e.mu_genie).abs());
    let len_err = |e: &&GenieEntry| bins(e, (e.len_hat - e.len_genie).abs());
    let gain = |e: &&GenieEntry| 10.0 * (e.mse_raw / e.mse_robust).log10();
    json!({
        "n_slots": entries.len(),
        "mu_hat": {
            "mean_abs_error_bins": mean(entries.iter().map(mu_err)),
            "max_abs_error_bins": max(&mut entries.iter().map(mu_err)),
            "mean_error_vs_construction_bins": mean(entries.iter().map(|e| bins(e, e.mu_hat - e.mu_star))),
        },
        "len_hat": {
            "mean_abs_error_bins": mean(entries.iter().map(len_err)),
            "max_abs_error_bins": max(&mut entries.iter().map(len_err)),
            "mean_error_vs_construction_bins": mean(entries.iter().map(|e| bins(e, e.len_hat - e.len_star))),
        },
        "w_hat": {
            "match_rate_vs_genie": mean(entries.iter().map(|e| f64::from(u8::from(e.w_hat == e.w_genie)))),
            "mean_abs_error_hz": mean(entries.iter().map(|e| (e.w_hat - e.w_genie).abs())),
            "mean_error_vs_construction_hz": mean(entries.iter().map(|e| e.w_hat - e.w_star)),
        },
        "denoising": {
            "mean_mse_raw": mean(entries.iter().map(|e| e.mse_raw)),
            "mean_mse_robust": mean(entries.iter().map(|e| e.mse_robust)),
            "mean_gain_db": mean(entries.iter().map(gain)),
            "fraction_improved": mean(entries.iter().map(|e| f64::from(u8::from(e.mse_robust < e.mse_raw)))),
        },
    })
}

/// Estimator errors against the genie sidecar, overall and on the high-SNR
/// subset, plus the distribution of selected ranks.
///
/// Delay errors are in delay bins of the slot's IDFT; the genie reference is
/// the same estimator run on the noiseless observation.
pub fn baseline_report(ds: &Dataset, genie: &[GenieEntry], high_snr_db: f64) -> Result<Value, CliError> {
    if genie.is_empty() || ds.sequences.is_empty() {
        return Err(CliError::Data(csi_forge::Error::Empty("dataset")));
    }
    let all: Vec<&GenieEntry> = genie.iter().collect();
    let high: Vec<&GenieEntry> = genie.iter().filter(|e| e.snr_db >= high_snr_db).collect();
    let mut ranks: BTreeMap<String, usize> = BTreeMap::new();
    for r in ds.sequences.iter().flat_map(|s| s.records()) {
        *ranks.entry(r.rank.to_string()).or_default() += 1;
    }
    Ok(json!({
        "all": subset_metrics(&all),
        "high_snr": { "threshold_db": high_snr_db, "metrics": subset_metrics(&high) },
        "rank_histogram": ranks,
    }))
}
