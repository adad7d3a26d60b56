use ipcw_additive::{km_censoring_survival, CensoredObservation, CensoredSample, SimulationModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(z: &[f64], delta: &[bool]) -> CensoredSample {
    let obs = z
        .iter()
        .zip(delta)
        .map(|(&z, &d)| CensoredObservation::new(z, d, vec![0.0, 0.0]).unwrap())
        .collect();
    CensoredSample::new(obs, 2).unwrap()
}

/// Direct product over order statistics, with δ = 1 placed first among ties.
fn brute_force(z: &[f64], delta: &[bool], t: f64) -> f64 {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(delta[b].cmp(&delta[a])));
    let n = z.len();
    let mut g = 1.0;
    for (pos, &i) in idx.iter().enumerate() {
        if z[i] <= t && !delta[i] {
            g *= 1.0 - 1.0 / (n - pos) as f64;
        }
    }
    g
}

#[test]
fn exhaustive_small_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=6usize {
        for pattern in 0..(1u32 << n) {
            let delta: Vec<bool> = (0..n).map(|k| pattern >> k & 1 == 1).collect();
            for _ in 0..20 {
                let z: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0).collect();
                let g = km_censoring_survival(&sample(&z, &delta));
                for (&t, &v) in g.jump_times().iter().zip(g.values()) {
                    assert_eq!(v, brute_force(&z, &delta, t), "n={n} pattern={pattern:b}");
                }
                for &t in &z {
                    assert_eq!(g.eval(t), brute_force(&z, &delta, t));
                }
            }
        }
    }
}

#[test]
fn uniform_censoring_converges() {
    let model = SimulationModel::reference(5);
    let sup_err = |n: usize| {
        let s = model.generate_replication(n, 0).unwrap();
        let g = km_censoring_survival(&s);
        (0..=900)
            .map(|k| {
                let t = k as f64 / 1000.0;
                (g.eval(t) - (1.0 - t)).abs()
            })
            .fold(0.0, f64::max)
    };
    let rate = |n: usize| {
        let n = n as f64;
        (n.ln().ln() / n).sqrt()
    };
    let ns = [1_000usize, 10_000, 100_000];
    let errs: Vec<f64> = ns.iter().map(|&n| sup_err(n)).collect();
    for w in 0..2 {
        let observed = errs[w + 1] / errs[w];
        let predicted = rate(ns[w + 1]) / rate(ns[w]);
        assert!(
            observed <= 3.0 * predicted && observed >= predicted / 3.0,
            "errors {errs:?}"
        );
    }
}

proptest! {
    #[test]
    fn monotone_right_continuous(
        data in proptest::collection::vec((0.0f64..5.0, any::<bool>()), 1..60),
    ) {
        let z: Vec<f64> = data.iter().map(|d| (d.0 * 4.0).round() / 4.0).collect();
        let delta: Vec<bool> = data.iter().map(|d| d.1).collect();
        let g = km_censoring_survival(&sample(&z, &delta));
        let mut prev = 1.0;
        for k in 0..=600 {
            let t = -0.5 + k as f64 / 100.0;
            let v = g.eval(t);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v <= prev);
            prev = v;
        }
        for (&t, &v) in g.jump_times().iter().zip(g.values()) {
            prop_assert_eq!(g.eval(t), v);
            prop_assert!(g.eval(t - 1e-9) >= v);
        }
    }
}
