//! `localmax`: the level-set energy comparison over seeded random small
//! rearrangements of a stored patch.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortexpatch::*;
// The crate exports its own 1-parameter Result alias; keep std's here.
use std::result::Result;

use super::{load_patch, CliError, Failures};
use crate::config::RunConfig;
use crate::reports::{f, fu, OutDir};

#[derive(serde::Serialize)]
struct LocalMaxSummary {
    trials: usize,
    applicable: usize,
    chain_holds: usize,
    rng_seed: u64,
    failures: Vec<String>,
}

pub fn run_localmax(cfg: &RunConfig, patch_dir: &Path, out: &OutDir) -> Result<Failures, CliError> {
    let (_, green, patch) = load_patch(patch_dir)?;
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let family = sample_rearrangement_perturbations(&patch, cfg.trials, &mut rng);

    let mut rows = Vec::new();
    let mut applicable = 0usize;
    let mut holds = 0usize;
    for (k, p) in family.iter().enumerate() {
        let label = p.label();
        let row = |status: &str, t: Option<&LocalMaxTest>| -> Vec<String> {
            vec![
                fu(k),
                label.clone(),
                status.to_string(),
                t.map(|t| f(t.e_candidate)).unwrap_or_default(),
                t.map(|t| f(t.e_bar)).unwrap_or_default(),
                t.map(|t| f(t.e_base)).unwrap_or_default(),
                t.map(|t| f(t.nu1)).unwrap_or_default(),
                t.map(|t| f(t.nu2)).unwrap_or_default(),
                t.map(|t| t.chain_holds.to_string()).unwrap_or_default(),
            ]
        };
        let cand = match perturb(&patch, p) {
            Ok(c) => c,
            Err(e) => {
                rows.push(row(&format!("unconstructible: {}", e.name()), None));
                continue;
            }
        };
        match local_max_test(&patch, &cand, &green) {
            Ok(t) => {
                applicable += 1;
                if t.chain_holds {
                    holds += 1;
                } else {
                    failures.push(format!("ChainViolated: trial {k} ({label})"));
                }
                rows.push(row("applicable", Some(&t)));
            }
            Err(Error::Inapplicable(msg)) => {
                rows.push(row(&format!("inapplicable: {msg}"), None));
            }
            Err(e) => {
                failures.push(format!("{}: {e}", e.name()));
                rows.push(row(&format!("error: {}", e.name()), None));
            }
        }
    }
    out.write_csv(
        "chain_table.csv",
        &[
            "trial",
            "perturbation",
            "status",
            "e_candidate",
            "e_bar",
            "e_base",
            "nu1",
            "nu2",
            "chain_holds",
        ],
        &rows,
    )?;

    let summary = LocalMaxSummary {
        trials: cfg.trials,
        applicable,
        chain_holds: holds,
        rng_seed: cfg.rng_seed,
        failures: failures.clone(),
    };
    out.write_json("localmax_summary.json", &summary)?;
    Ok(failures)
}
