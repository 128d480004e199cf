use csi_forge::dataset::{
    compute_norm_stats, run_campaign, write_dataset, CampaignSettings, Dataset, NormStats, WriteSettings,
    SEQUENCE_LEN,
};
use csi_forge::tokenstream::{
    apply_mask_plan, build_token_sequences, check_stats, write_export, ExportMeta, FeatureId, FeatureSchema,
    MaskMode,
};
use serde_json::{json, Value};

use crate::{baseline_report, BaselineArgs, CliError, GenArgs, InspectArgs, ModeArg, Report, StatsArgs, TokenizeArgs};

fn parse_split(s: &str) -> Result<[u32; 3], CliError> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--split expects three integers, got {s:?}")))?;
    match parts[..] {
        [a, b, c] if a + b + c == 100 => Ok([a, b, c]),
        _ => Err(CliError::Usage(format!("--split must be three percentages summing to 100, got {s:?}"))),
    }
}

fn worker_note() -> Value {
    json!({
        "threads": rayon::current_num_threads(),
        "note": "thread count does not affect outputs",
    })
}

pub fn gen(a: &GenArgs) -> Result<Report, CliError> {
    if a.seq_len != SEQUENCE_LEN {
        return Err(CliError::Usage(format!("--seq-len must be {SEQUENCE_LEN}, got {}", a.seq_len)));
    }
    let split_ratios = parse_split(&a.split)?;
    let mut settings = CampaignSettings::new(a.seed, a.num_configs as usize);
    settings.snr_draws = a.snr_draws as usize;
    settings.slots_per_run = a.slots as usize;
    settings.keep_genie = !a.no_genie;
    let write = WriteSettings { shard_size: a.shard_size as usize, split_ratios };
    let effective_config = json!({
        "args": a,
        "campaign": &settings,
        "write": write,
        "config_universe_hash": settings.table.digest(),
        "workers": worker_note(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let campaign = run_campaign(&settings)?;
    let manifest = write_dataset(&a.out, &campaign, &write)?;
    Ok(Report {
        command: "gen",
        effective_config,
        result: json!({
            "out": a.out,
            "runs": campaign.runs.len(),
            "total_sequences": manifest.total_sequences,
            "counts": manifest.counts,
            "shards": manifest.shards.len(),
            "config_rejections": manifest.config_rejections,
            "manifest_digest": manifest.digest(),
            "norm_stats_digest": manifest.norm_stats_digest,
            "genie": manifest.genie_file,
        }),
    })
}

fn split_records(ds: &Dataset, split: &str) -> Result<Vec<usize>, CliError> {
    if split == "all" {
        return Ok((0..ds.sequences.len()).collect());
    }
    ds.manifest
        .splits
        .get(split)
        .map(<[usize]>::to_vec)
        .ok_or_else(|| CliError::Usage(format!("unknown split {split:?}; use train, val, test or all")))
}

pub fn stats(a: &StatsArgs) -> Result<Report, CliError> {
    let ds = Dataset::load(&a.dataset)?;
    let idx = split_records(&ds, &a.split)?;
    let stats = compute_norm_stats(idx.iter().flat_map(|&i| ds.sequences[i].records().iter()))?;
    if let Some(out) = &a.out {
        stats.save(out)?;
    }
    let digest = stats.digest();
    Ok(Report {
        command: "stats",
        effective_config: json!({ "args": a, "workers": worker_note() }),
        result: json!({
            "n_records": stats.n_records,
            "convention": stats.convention,
            "features": stats.features,
            "digest": digest,
            "matches_manifest": digest == ds.manifest.norm_stats_digest,
        }),
    })
}

fn mask_mode(a: &TokenizeArgs) -> Result<MaskMode, CliError> {
    let feature = || -> Result<FeatureId, CliError> {
        let name = a
            .feature
            .as_deref()
            .ok_or_else(|| CliError::Usage("--feature is required in interpolation and forecast modes".into()))?;
        let f = FeatureId::parse(name).map_err(|e| CliError::Usage(e.to_string()))?;
        if !f.is_target() {
            return Err(CliError::Usage(format!("{} is not a target feature", f.name())));
        }
        Ok(f)
    };
    match a.mode {
        ModeArg::Pretrain if a.feature.is_some() => {
            Err(CliError::Usage("--feature only applies to interpolation and forecast".into()))
        }
        ModeArg::Pretrain => Ok(MaskMode::Pretrain),
        ModeArg::Interpolation => Ok(MaskMode::Interpolation(feature()?)),
        ModeArg::Forecast => Ok(MaskMode::Forecast(feature()?)),
    }
}

pub fn tokenize(a: &TokenizeArgs) -> Result<Report, CliError> {
    let mode = mask_mode(a)?;
    let ds = Dataset::load(&a.dataset)?;
    let stats = match &a.stats {
        Some(path) => {
            let s = NormStats::load(path)?;
            if s.digest() != ds.manifest.norm_stats_digest {
                return Err(CliError::Data(csi_forge::Error::DigestMismatch {
                    expected: ds.manifest.norm_stats_digest.clone(),
                    found: s.digest(),
                }));
            }
            s
        }
        None => ds.norm_stats()?,
    };
    check_stats(&stats)?;
    let schema = FeatureSchema::default();
    let idx = split_records(&ds, &a.split)?;
    if idx.is_empty() {
        return Err(CliError::Data(csi_forge::Error::Empty("split")));
    }
    let seqs: Vec<_> = idx.iter().map(|&i| &ds.sequences[i]).collect();
    let ids: Vec<u64> = idx.iter().map(|&i| i as u64).collect();
    let mut tokens = build_token_sequences(&seqs, &ids, &schema, &stats)?;
    for t in &mut tokens {
        apply_mask_plan(t, mode, a.mask_seed, schema.n_slots)?;
    }
    let index = write_export(
        &a.out,
        &schema,
        &tokens,
        ExportMeta {
            split: Some(a.split.clone()),
            dataset_manifest_digest: Some(ds.manifest.digest()),
            norm_stats_digest: stats.digest(),
        },
    )?;
    let pairs: Vec<usize> = tokens.iter().map(|t| t.masked_pairs().len()).collect();
    let masked_tokens = index.tokens.masked.iter().filter(|&&m| m).count();
    let mut per_feature = serde_json::Map::new();
    for t in tokens.iter().flat_map(|s| s.masked_pairs()) {
        let e = per_feature.entry(t.1.name()).or_insert(json!(0));
        *e = json!(e.as_u64().unwrap_or(0) + 1);
    }
    Ok(Report {
        command: "tokenize",
        effective_config: json!({
            "args": a,
            "mode": mode,
            "schema_digest": index.schema_digest,
            "norm_stats_digest": stats.digest(),
            "workers": worker_note(),
        }),
        result: json!({
            "out": a.out,
            "n_sequences": index.n_sequences,
            "tokens_per_slot": schema.tokens_per_slot(),
            "tokens_per_sequence": schema.tokens_per_sequence(),
            "n_tokens": index.n_tokens,
            "masks_per_sequence": {
                "min": pairs.iter().min(),
                "max": pairs.iter().max(),
            },
            "masked_pairs_by_feature": per_feature,
            "masked_tokens": masked_tokens,
            "schema_digest": index.schema_digest,
        }),
    })
}

pub fn baseline(a: &BaselineArgs) -> Result<Report, CliError> {
    let ds = Dataset::load(&a.dataset)?;
    if ds.sequences.is_empty() {
        return Err(CliError::Data(csi_forge::Error::Empty("dataset")));
    }
    let genie = ds.genie()?;
    let result = baseline_report(&ds, &genie, a.high_snr_db)?;
    Ok(Report {
        command: "baseline",
        effective_config: json!({ "args": a, "manifest_digest": ds.manifest.digest() }),
        result,
    })
}

pub fn inspect(a: &InspectArgs) -> Result<Report, CliError> {
    let ds = Dataset::load(&a.dataset)?;
    let stats = ds.norm_stats()?;
    let mut result = json!({
        "manifest_digest": ds.manifest.digest(),
        "format_version": ds.manifest.format_version,
        "total_sequences": ds.manifest.total_sequences,
        "counts": ds.manifest.counts,
        "shards": ds.manifest.shards,
        "norm_stats": stats.features,
        "genie_entries": match &ds.manifest.genie_file {
            Some(_) => json!(ds.genie()?.len()),
            None => Value::Null,
        },
        "verified": true,
    });
    if let Some(i) = a.sequence {
        let seq = ds
            .sequences
            .get(i)
            .ok_or_else(|| CliError::Usage(format!("sequence {i} out of range (dataset has {})", ds.sequences.len())))?;
        result["sequence"] = json!({
            "index": i,
            "run_id": seq.run_id,
            "start_slot": seq.start_slot,
            "records": seq.records().iter().map(|r| json!({
                "slot": r.slot_index,
                "channel_type": r.channel_type,
                "K": r.n_subcarriers,
                "n_rx": r.n_rx(),
                "n_tx": r.n_tx(),
                "B": r.n_groups(),
                "pilot_symbols": r.n_pilot_symbols(),
                "mu_hat": r.delay_center,
                "len_hat": r.delay_length,
                "w_hat": r.doppler_width,
                "R_hat": r.rank,
                "G_hat": r.spectral_efficiency,
                "config_id": format!("{:016x}", r.config_id),
            })).collect::<Vec<_>>(),
        });
    }
    Ok(Report { command: "inspect", effective_config: json!({ "args": a }), result })
}
