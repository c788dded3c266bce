use std::sync::Arc;

use mfspec::app::{run, Command, RunConfig};
use mfspec::geometry::{carpet_catalog, gibbs_reparametrize, gibbs_reparametrize_inverse};
use mfspec::localized::{localized_dimension, LocalizedTarget};
use mfspec::metric::WeakGibbsMetric;
use mfspec::potential::Potential;
use mfspec::pressure::{equilibrium_markov, measure_functionals, pressure_exact};
use mfspec::sft::{cycle_mean_hull, BlockGraph, HullMethod, Sft};
use mfspec::spectrum::{count_from_classes, DualOptions, SpectrumModel};
use proptest::prelude::*;

fn sft_strategy() -> impl Strategy<Value = Sft> {
    (2usize..=3)
        .prop_flat_map(|m| prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.7), m), m))
        .prop_filter_map("not primitive", |rows| {
            let adj = rows.iter().map(|r| r.iter().map(|&b| u8::from(b)).collect()).collect();
            Sft::new(adj, 16).ok()
        })
}

/// A shift, a window `k` and a deterministic table of values in `[-1, 1)`.
fn table_strategy() -> impl Strategy<Value = (Sft, Potential)> {
    (sft_strategy(), 1usize..=3, prop::collection::vec(-1.0f64..1.0, 27)).prop_map(|(sft, k, vals)| {
        let m = sft.alphabet_size();
        let pot = Potential::locally_constant(&sft, k, 1, |w| {
            let code = w.iter().fold(0, |acc, &s| acc * m + s as usize);
            vec![vals[code % vals.len()]]
        })
        .unwrap();
        (sft, pot)
    })
}

fn cocycle_strategy() -> impl Strategy<Value = (Sft, Potential)> {
    sft_strategy().prop_flat_map(|sft| {
        let m = sft.alphabet_size();
        prop::collection::vec(prop::collection::vec(prop::collection::vec(0.2f64..2.0, 2), 2), m)
            .prop_map(move |mats| (sft.clone(), Potential::cocycle(&sft, mats).unwrap()))
    })
}

/// Admissible word of length `n` driven by `choices`.
fn steer(sft: &Sft, choices: &[usize], n: usize) -> Vec<u8> {
    let m = sft.alphabet_size();
    let mut w = vec![(choices[0] % m) as u8];
    let mut i = 1;
    while w.len() < n {
        let succ: Vec<u8> = sft.successors(*w.last().unwrap()).collect();
        w.push(succ[choices[i % choices.len()] % succ.len()]);
        i += 1;
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_matrix_powers(sft in sft_strategy(), n in 1usize..=9) {
        let words: Vec<_> = sft.words(n).collect();
        prop_assert_eq!(words.len() as u128, sft.word_count(n));
        for pair in words.windows(2) {
            prop_assert!(pair[0].symbols() < pair[1].symbols());
        }
        prop_assert!(words.iter().all(|w| sft.is_admissible(w.symbols())));
    }

    #[test]
    fn interval_hull_endpoints_are_replayed((sft, pot) in table_strategy()) {
        let table = pot.table().unwrap();
        let graph = BlockGraph::new(&sft, table.window().max(2)).unwrap();
        let vals = table.edge_values(&graph).unwrap();
        let hull = cycle_mean_hull(&graph, &vals, 1, HullMethod::SimpleCycles, 1_000_000).unwrap();
        let (lo, hi) = hull.region.interval_bounds().unwrap();
        for (w, mean) in hull.witnesses.iter().zip(&hull.witness_means) {
            // The periodic orbit of the witness word.
            let p = w.len();
            let k = table.window();
            let cyc: Vec<u8> = w.symbols().iter().cycle().take(p + k).copied().collect();
            let replay = table.birkhoff_sum(&cyc, p)[0] / p as f64;
            prop_assert!((replay - mean[0]).abs() < 1e-12);
        }
        // Every periodic word of period at most 6 averages inside the hull.
        for per in 1..=6 {
            for w in sft.words(per) {
                let s = w.symbols();
                if !sft.allowed(s[per - 1], s[0]) {
                    continue;
                }
                let cyc: Vec<u8> = s.iter().cycle().take(per + table.window()).copied().collect();
                let avg = table.birkhoff_sum(&cyc, per)[0] / per as f64;
                prop_assert!(avg >= lo - 1e-12 && avg <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn cylinder_ranges_respect_extremes((sft, pot) in table_strategy(), choices in prop::collection::vec(0usize..9, 12), n in 1usize..10) {
        let w = steer(&sft, &choices, n);
        let r = pot.eval_unchecked(&w);
        let nn = n as f64;
        prop_assert!(nn * pot.phi_min()[0] - 1e-12 <= r.lo[0]);
        prop_assert!(r.lo[0] <= r.hi[0]);
        prop_assert!(r.hi[0] <= nn * pot.phi_max()[0] + 1e-12);
    }

    #[test]
    fn cocycle_is_almost_additive((sft, pot) in cocycle_strategy(), choices in prop::collection::vec(0usize..9, 20), n in 1usize..8, p in 1usize..8) {
        let x = steer(&sft, &choices, n + p + 2);
        let whole = pot.value_at(&sft, &x, n + p)[0];
        let split = pot.value_at(&sft, &x, n)[0] + pot.value_at(&sft, &x[n..], p)[0];
        prop_assert!((whole - split).abs() <= pot.c()[0] + 1e-9);
    }

    #[test]
    fn cover_is_a_partition(sft in sft_strategy(), ratios in prop::collection::vec(0.2f64..0.7, 3), n in 1.0f64..4.0) {
        let metric = WeakGibbsMetric::per_symbol_ratios(&sft, &ratios[..sft.alphabet_size()]).unwrap();
        let cover = metric.ball_cover(n, 1 << 20).unwrap();
        let depth = cover.iter().map(|w| w.len()).max().unwrap();
        for w in sft.words(depth) {
            let hits = cover.iter().filter(|c| c.is_prefix_of(&w)).count();
            prop_assert_eq!(hits, 1);
        }
    }

    #[test]
    fn pressure_is_convex_in_q((sft, pot) in table_strategy()) {
        let table = pot.table().unwrap();
        let p = |q: f64| {
            let scaled = Potential::locally_constant(&sft, table.window(), 1, |w| vec![q * table.value(w)[0]]).unwrap();
            pressure_exact(&sft, &scaled).unwrap()
        };
        let qs: Vec<f64> = (-6..=6).map(|i| i as f64 * 0.5).collect();
        let vals: Vec<f64> = qs.iter().map(|&q| p(q)).collect();
        for t in vals.windows(3) {
            prop_assert!(t[0] + t[2] - 2.0 * t[1] >= -1e-9);
        }
    }

    #[test]
    fn equilibrium_attains_the_pressure((sft, pot) in table_strategy()) {
        let k = pot.table().unwrap().window();
        let mu = equilibrium_markov(&sft, &pot, k).unwrap();
        let f = measure_functionals(&mu, &[&pot]).unwrap();
        let p = pressure_exact(&sft, &pot).unwrap();
        prop_assert!((f.entropy + f.averages[0][0] - p).abs() < 1e-9);
    }

    #[test]
    fn ball_count_is_monotone_in_radius((sft, pot) in table_strategy(), alpha in -1.0f64..1.0, e1 in 0.0f64..0.6, e2 in 0.0f64..0.6, n in 1.0f64..5.0) {
        let metric = WeakGibbsMetric::standard(&sft);
        let classes = metric.cover_classes(Some(&pot), n, 1 << 20).unwrap();
        let (a, b) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(count_from_classes(&classes, &[alpha], a) <= count_from_classes(&classes, &[alpha], b));
    }

    #[test]
    fn reparametrization_round_trips(alpha in -5.0f64..-0.01, rho in 0.05f64..0.95) {
        let d = gibbs_reparametrize(alpha, rho);
        prop_assert!(d > 0.0);
        prop_assert!((gibbs_reparametrize_inverse(d, rho) - alpha).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_target_matches_the_spectrum(a in 0.05f64..0.95) {
        let sft = Sft::full(2).unwrap();
        let metric = WeakGibbsMetric::per_symbol_ratios(&sft, &[0.5, 0.25]).unwrap();
        let phi = Potential::digit(&sft, 1);
        let model = SpectrumModel::new(&sft, &metric, &phi, 1).unwrap();
        let opts = DualOptions::default();
        let direct = model.variational(&[a], &opts).unwrap().e_hat;
        let target = LocalizedTarget::constant(&sft, &[a]).unwrap();
        let localized = localized_dimension(&model, &target, &opts).unwrap().value;
        prop_assert!((direct - localized).abs() < 1e-12);
    }

    #[test]
    fn triadic_periodic_points_are_rational(digits in prop::collection::vec(0u8..3, 1..6)) {
        let ifs = carpet_catalog("times_m(3)").unwrap();
        let p = digits.len() as i32;
        // 0.(d_1 … d_p) in base 3, with symbol j mapping to digit j.
        let num: f64 = digits.iter().fold(0.0, |acc, &d| acc * 3.0 + f64::from(d));
        let x = num / (3f64.powi(p) - 1.0);
        let got = ifs.periodic_point(&digits)[0];
        prop_assert!((got - x).abs() < 1e-12, "{} vs {}", got, x);
    }
}

#[test]
fn equilibrium_graph_is_shared() {
    let sft = Sft::golden_mean();
    let mu = equilibrium_markov(&sft, &Potential::digit(&sft, 0), 3).unwrap();
    let g = mu.shared_graph();
    assert!(Arc::ptr_eq(&g, &mu.shared_graph()));
    assert_eq!(g.order(), 3);
}

fn output_of(command: Command, cfg: &RunConfig) -> Vec<u8> {
    let mut out = Vec::new();
    run(command, cfg, &mut out).unwrap();
    out
}

#[test]
fn commands_are_byte_reproducible() {
    let spectrum = RunConfig {
        model: Some("golden".into()),
        metric: Some("ratios:0.5,0.3".into()),
        alpha_grid: 9,
        n: 10,
        k: 2,
        ..RunConfig::default()
    };
    assert_eq!(output_of(Command::Spectrum, &spectrum), output_of(Command::Spectrum, &spectrum));

    let moran = RunConfig {
        target: Some("constant:0.4".into()),
        blocks: vec![300, 600, 1200],
        paths: 3,
        seed: 5,
        k: 2,
        ..RunConfig::default()
    };
    let first = output_of(Command::Moran, &moran);
    assert_eq!(first, output_of(Command::Moran, &moran));
    assert_ne!(first, output_of(Command::Moran, &RunConfig { seed: 6, ..moran.clone() }));

    let check = RunConfig { instances: 20, seed: 3, ..RunConfig::default() };
    assert_eq!(output_of(Command::Check, &check), output_of(Command::Check, &check));
}
