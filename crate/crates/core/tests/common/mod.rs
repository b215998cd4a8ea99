#![allow(dead_code)]

use bold_core::config::{ScenarioConfig, StrategyKind, StrategyParams};

/// k-vectors covered by the matrix, up to (3,6,9).
pub const KS: [&[u32]; 9] = [&[1], &[2], &[3], &[1, 2], &[2, 4], &[3, 6], &[1, 2, 3], &[2, 4, 6], &[3, 6, 9]];
pub const DELTAS: [u64; 3] = [0, 1, 2];
pub const C_MAXES: [u64; 3] = [0, 5, 20];

/// Shipped strategies that accept `levels` levels.
pub fn shipped(levels: usize) -> Vec<StrategyKind> {
    StrategyKind::SHIPPED
        .into_iter()
        .filter(|k| levels >= 2 || *k != StrategyKind::Frenemy)
        .collect()
}

/// `C + (δ+1)(k_L+L+1) + (δ+1)(k_L+L) + 1`, computed here independently.
pub fn matrix_threshold(ks: &[u32], delta: u64, c_max: u64) -> u64 {
    let l = ks.len() as u64;
    let k = *ks.last().unwrap() as u64;
    c_max + (delta + 1) * (k + l + 1) + (delta + 1) * (k + l) + 1
}

pub fn scenario(ks: &[u32], delta: u64, c_max: u64, kind: StrategyKind, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(ks.to_vec());
    c.name = format!("{}-k{:?}-d{delta}-c{c_max}-s{seed}", kind.name(), ks);
    c.delta = delta;
    c.c_max = c_max;
    c.seed = seed;
    c.threshold = Some(matrix_threshold(ks, delta, c_max));
    let mut adv = StrategyParams::new(kind);
    match kind {
        StrategyKind::RootSpammer => {
            let n_a = 1 + (seed % 4) as u32;
            adv.n_a = Some(n_a);
            if seed % 2 == 1 {
                // Staggered roots on odd seeds.
                adv.root_rounds = Some((0..n_a as u64).map(|i| 1 + i * (seed % 7)).collect());
            }
        }
        StrategyKind::Frenemy => {
            adv.n_a = Some(1 + (seed % 2) as u32);
            adv.spam_counts = vec![1 + (seed % 3) as u32; ks.len() - 1];
        }
        StrategyKind::BudgetBurner | StrategyKind::PathFighter => adv.n_a = Some(1),
        _ => {}
    }
    c.adversary = adv;
    c
}

/// Every cell of the full matrix for `seeds` seeds.
pub fn matrix(seeds: u64) -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for ks in KS {
        for delta in DELTAS {
            for c_max in C_MAXES {
                for kind in shipped(ks.len()) {
                    for seed in 0..seeds {
                        out.push(scenario(ks, delta, c_max, kind, seed));
                    }
                }
            }
        }
    }
    out
}

pub fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub fn bundled(name: &str) -> ScenarioConfig {
    let text = std::fs::read_to_string(configs_dir().join(format!("{name}.json"))).unwrap();
    ScenarioConfig::from_json(&text).unwrap()
}
