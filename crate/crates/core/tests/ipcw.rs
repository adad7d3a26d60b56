use ipcw_additive::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn known_cfg(truth: &SimulationTruth, plan: BandwidthPlan, psi: PsiFunction) -> EstimatorConfig {
    let t = truth.clone();
    EstimatorConfig {
        plan,
        kernels: vec![Kernel::Epanechnikov; 2],
        psi,
        g: truth.g_model(),
        density: DensityModel::known(move |x| t.f(x)),
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn kde_recovers_uniform_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let obs = (0..100_000)
        .map(|_| {
            let x = vec![rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0];
            CensoredObservation::new(1.0, true, x).unwrap()
        })
        .collect();
    let s = CensoredSample::new(obs, 2).unwrap();
    let plan = BandwidthPlan::isotropic(2, 0.2).unwrap();
    let v = kde(&s, &[0.0, 0.0], &plan, Kernel::Epanechnikov).unwrap();
    assert!((v - 0.25).abs() < 0.02, "{v}");
}

#[test]
fn ipcw_weights_are_unbiased() {
    let model = SimulationModel::reference(8);
    let truth = model.truth();
    let s = model.generate_replication(100_000, 0).unwrap();
    let g = truth.g_model();
    let w: Vec<f64> = s.iter().map(|o| ipcw_weight(o, model.psi(), &g)).collect();
    let (m, se) = mean_se(&w);
    let target = truth.expected_psi(model.psi()).unwrap();
    assert!((m - target).abs() <= 4.0 * se, "{m} vs {target} (se {se})");
}

#[test]
fn known_everything_estimator_is_centered() {
    let model = SimulationModel::reference(21);
    let truth = model.truth();
    let plan = BandwidthPlan::isotropic(2, 0.1).unwrap();
    // one replication has sd ~0.25 here, so 50 would leave the 0.03 window below one SE
    let vals: Vec<f64> = (0..1000)
        .map(|rep| {
            let s = model.generate_replication(4000, rep).unwrap();
            m_tilde_star(&s, &[0.0, 0.0], &known_cfg(&truth, plan.clone(), model.psi().clone())).unwrap()
        })
        .collect();
    let (m, _) = mean_se(&vals);
    assert!((m - truth.m_psi(&[0.0, 0.0])).abs() < 0.03, "{m}");
}

#[test]
fn mu_hat_replication_mean() {
    let model = SimulationModel::reference(22);
    let q = IntegrationDensities::uniform_cube(2, -1.0, 1.0).unwrap();
    let plan = BandwidthPlan::isotropic(2, 0.1).unwrap();
    let vals: Vec<f64> = (0..50)
        .map(|rep| {
            let s = model.generate_replication(4000, rep).unwrap();
            let cfg = EstimatorConfig::standard(&s, plan.clone(), Kernel::Epanechnikov, model.psi().clone());
            mu_hat(&IpcwEstimator::new(&s, &cfg).unwrap(), &q).unwrap()
        })
        .collect();
    let (m, _) = mean_se(&vals);
    assert!((m - 0.5).abs() < 0.02, "{m}");
}

#[test]
fn internal_estimator_self_normalizes() {
    let model = SimulationModel::reference(23);
    let s = model.generate_replication(20_000, 0).unwrap();
    let plan = BandwidthPlan::isotropic(2, 0.15).unwrap();
    let cfg = EstimatorConfig {
        plan,
        kernels: vec![Kernel::Epanechnikov; 2],
        psi: PsiFunction::constant(1.0),
        g: GModel::one(),
        density: DensityModel::Estimated(Kernel::Epanechnikov),
    };
    // ψ ≡ 1 and G ≡ 1 give every observation weight 1, censored or not
    let cfg = EstimatorConfig {
        psi: PsiFunction::constant(1.0),
        ..cfg
    };
    let all_events = CensoredSample::new(
        s.iter()
            .map(|o| CensoredObservation::new(o.z, true, o.x.clone()).unwrap())
            .collect(),
        2,
    )
    .unwrap();
    let est = IpcwEstimator::new(&all_events, &cfg).unwrap();
    for (lo, hi) in [(-1.0, 1.0), (-0.5, 0.5), (-0.9, 0.2)] {
        let q = IntegrationDensities::new(vec![
            IntegrationDensity::uniform(lo, hi).unwrap(),
            IntegrationDensity::uniform(-0.7, 0.7).unwrap(),
        ])
        .unwrap();
        let v = est.full_integral(&q).unwrap();
        assert!((v - 1.0).abs() < 0.03, "q on [{lo}, {hi}]: {v}");
    }
}

#[test]
fn all_censored_gives_zero() {
    let obs = (0..10)
        .map(|k| CensoredObservation::new(k as f64 * 0.1, false, vec![0.0, 0.1 * k as f64 - 0.5]).unwrap())
        .collect();
    let s = CensoredSample::new(obs, 2).unwrap();
    let cfg = EstimatorConfig::standard(&s, BandwidthPlan::isotropic(2, 0.5).unwrap(), Kernel::Epanechnikov, PsiFunction::Identity);
    let est = IpcwEstimator::new(&s, &cfg).unwrap();
    for x in [[0.0, 0.0], [0.3, -0.2], [5.0, 5.0]] {
        assert_eq!(est.eval(&x).unwrap(), 0.0);
    }
}

/// `sup |m̃(A) − m̃(B)|` over an interior grid.
fn sup_gap(a: &IpcwEstimator, b: &IpcwEstimator) -> f64 {
    let mut sup = 0.0f64;
    for i in 0..9 {
        for j in 0..9 {
            let x = [-0.8 + 0.2 * i as f64, -0.8 + 0.2 * j as f64];
            sup = sup.max((a.eval(&x).unwrap() - b.eval(&x).unwrap()).abs());
        }
    }
    sup
}

#[test]
fn oracle_chain_shrinks_with_n() {
    let model = SimulationModel::reference(31);
    let truth = model.truth();
    let mut g_gaps = Vec::new();
    let mut f_gaps = Vec::new();
    for n in [500usize, 2000, 8000] {
        let s = model.generate_replication(n, 0).unwrap();
        let h = 0.8 * (n as f64).powf(-0.2);
        let plan = BandwidthPlan::isotropic(2, h).unwrap();
        let all_known = known_cfg(&truth, plan.clone(), model.psi().clone());
        let known_g = EstimatorConfig {
            density: DensityModel::Estimated(Kernel::Epanechnikov),
            ..all_known.clone()
        };
        let estimated = EstimatorConfig {
            g: GModel::kaplan_meier(&s),
            ..known_g.clone()
        };
        let e_all = IpcwEstimator::new(&s, &estimated).unwrap();
        let e_g = IpcwEstimator::new(&s, &known_g).unwrap();
        let e_known = IpcwEstimator::new(&s, &all_known).unwrap();
        g_gaps.push(sup_gap(&e_all, &e_g));
        f_gaps.push(sup_gap(&e_g, &e_known));
    }
    assert!(g_gaps.windows(2).all(|w| w[1] < w[0]), "G step: {g_gaps:?}");
    assert!(f_gaps.windows(2).all(|w| w[1] < w[0]), "f step: {f_gaps:?}");
}

#[test]
fn synthetic_responses_share_the_mean() {
    let model = SimulationModel::reference(40).with_censor_upper(2.0).unwrap();
    let truth = model.truth();
    let s = model.generate_replication(50_000, 0).unwrap();
    let g = truth.g_model();
    let target = truth.expected_psi(&PsiFunction::Identity).unwrap();
    for rho in [-1.0, 0.0, 1.0] {
        let y = synthetic_responses(&s, &g, rho).unwrap();
        let (m, se) = mean_se(&y);
        assert!((m - target).abs() <= 4.0 * se, "rho {rho}: {m} vs {target} (se {se})");
    }
}

