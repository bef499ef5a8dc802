//! Pilot runs at the reference scale: captured-variance deviation from PCA
//! and detection rate per method and rank.
//!
//! cargo run --release --example calibrate -- [seeds] [trials]

use subspace_anomaly::eval::{sweep_rank, variance_compare, SweepConfig};
use subspace_anomaly::random::{EnsembleKind, SeedSpec};
use subspace_anomaly::traffic::{assemble_scenario, ScenarioConfig};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let seeds = args.first().copied().unwrap_or(10);
    let trials = args.get(1).copied().unwrap_or(20);

    let mut rbad = Vec::new();
    let mut ssp: Vec<Vec<f64>> = vec![Vec::new(); 4];
    for s in 0..seeds as u64 {
        let sc = assemble_scenario(&ScenarioConfig {
            seed: SeedSpec::new(s, 0),
            ..ScenarioConfig::default()
        })
        .unwrap();
        let table =
            variance_compare(&sc.y, 24, 2, &EnsembleKind::ALL, SeedSpec::new(s, 1)).unwrap();
        rbad.push(table.rbad_max_rel_dev);
        for (k, d) in table.sspbad_max_rel_dev.iter().enumerate() {
            ssp[k].push(*d);
        }
        if s == 0 {
            println!("index,pca,rbad,sspbad_gaussian");
            for i in 0..30 {
                println!(
                    "{i},{:.5},{:.5},{:.5}",
                    table.pca[i], table.rbad[i], table.sspbad[0].1[i]
                );
            }
        }
    }
    println!(
        "rbad q=2 top-24 max rel dev: median {:.4} all {:?}",
        median(rbad.clone()),
        rbad
    );
    for (k, kind) in EnsembleKind::ALL.iter().enumerate() {
        println!("sspbad {kind}: median {:.4}", median(ssp[k].clone()));
    }

    let out = sweep_rank(&SweepConfig {
        trials,
        ..SweepConfig::default()
    })
    .unwrap();
    for c in &out.curves {
        println!("{} {:?}", c.method, c.ranks);
        println!(
            "   mean {:?}",
            c.mean
                .iter()
                .map(|x| (x * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
        println!(
            "   sd   {:?}",
            c.std_dev
                .iter()
                .map(|x| (x * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
    }
    let mut flags = std::collections::BTreeMap::new();
    for r in &out.rows {
        let e = flags
            .entry((r.method.tag(), r.rank))
            .or_insert((0usize, 0usize, 0.0f64, 0.0f64));
        e.0 += r.flag_count;
        e.1 += r.counts.tp;
        e.2 += r.tpr.unwrap_or(0.0);
        e.3 += r.far.unwrap_or(0.0);
    }
    for ((m, r), (f, tp, tpr, far)) in flags {
        println!(
            "{m} r={r}: mean flags {:.1} tp {:.1} tpr {:.3} far {:.4}",
            f as f64 / trials as f64,
            tp as f64 / trials as f64,
            tpr / trials as f64,
            far / trials as f64
        );
    }
}
