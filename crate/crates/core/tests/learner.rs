use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamtune::env::{EnvConfig, TransferEnv};
use streamtune::link::LinkScenario;
use streamtune::policy::{
    decode_policy, encode_policy, load_policy, ppo_loss, sample_action, save_policy, train, Adam, LossConfig,
    LossMode, PolicyDims, PolicyParams, TrainConfig, Trajectory,
};

/// Ten samples with stored log-probabilities shifted away from the current
/// policy, so that both branches of the clipped objective are exercised.
fn batch(params: &PolicyParams, rng: &mut ChaCha8Rng) -> (Trajectory, Vec<f64>) {
    let mut t = Trajectory::default();
    while t.len() < 10 {
        let s: Vec<f64> = (0..params.input_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (probs, v) = params.forward(&s).unwrap();
        let (a, lp) = sample_action(&probs, rng).unwrap();
        let shift: f64 = rng.random_range(-0.5..0.5);
        // ratios sitting on a clip boundary have no derivative
        let ratio = (-shift).exp();
        if (ratio - 0.8).abs() < 1e-2 || (ratio - 1.2).abs() < 1e-2 {
            continue;
        }
        t.push(s, a, rng.random_range(-1.0..1.0), lp + shift, v + rng.random_range(-0.3..0.3));
    }
    let returns: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
    (t, returns)
}

fn check_gradients(shared_trunk: bool, mode: LossMode, normalize: bool, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = PolicyParams::init(PolicyDims::new(3, vec![2, 2], shared_trunk), &mut rng).unwrap();
    let (traj, returns) = batch(&params, &mut rng);
    let idx: Vec<usize> = (0..traj.len()).collect();
    let cfg = LossConfig { mode, clip: 0.2, entropy_coef: 0.05, value_coef: 0.5, normalize_advantages: normalize };
    let analytic = ppo_loss(&params, &traj, &idx, &returns, &cfg).unwrap().grads;

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut p = params.clone();
        p.as_mut_slice()[i] += h;
        let up = ppo_loss(&p, &traj, &idx, &returns, &cfg).unwrap().loss;
        p.as_mut_slice()[i] -= 2.0 * h;
        let down = ppo_loss(&p, &traj, &idx, &returns, &cfg).unwrap().loss;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs());
        // both effectively zero: nothing to compare relatively
        if scale < 1e-7 {
            assert!((analytic[i] - numeric).abs() < 1e-9, "param {i}: {} vs {numeric}", analytic[i]);
            continue;
        }
        let rel = (analytic[i] - numeric).abs() / scale;
        worst = worst.max(rel);
        assert!(rel < 1e-4, "param {i}: analytic {} numeric {numeric} rel {rel:.2e}", analytic[i]);
    }
    assert!(worst < 1e-4);
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..5 {
        check_gradients(true, LossMode::PpoClip, true, seed);
        check_gradients(true, LossMode::PpoClip, false, seed);
        check_gradients(false, LossMode::PpoClip, true, seed);
        check_gradients(true, LossMode::A2c, false, seed);
        check_gradients(false, LossMode::A2c, true, seed);
    }
}

#[test]
fn fixed_batch_loss_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut params = PolicyParams::init(PolicyDims::new(4, vec![16, 16], true), &mut rng).unwrap();
    let (traj, returns) = batch(&params, &mut rng);
    let idx: Vec<usize> = (0..traj.len()).collect();
    let cfg = LossConfig::default();
    let before = ppo_loss(&params, &traj, &idx, &returns, &cfg).unwrap().loss;
    let mut adam = Adam::new(params.len());
    for _ in 0..50 {
        let g = ppo_loss(&params, &traj, &idx, &returns, &cfg).unwrap().grads;
        adam.update(&mut params, &g, 1e-2).unwrap();
    }
    let after = ppo_loss(&params, &traj, &idx, &returns, &cfg).unwrap().loss;
    assert!(after < before, "{before} -> {after}");
}

fn env() -> TransferEnv {
    TransferEnv::new(LinkScenario::throttled_1g(), EnvConfig::for_capacity(1000.0), 5).unwrap()
}

#[test]
fn zero_episodes_returns_initial_params() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = PolicyParams::init(PolicyDims::new(32, vec![64, 64], true), &mut rng).unwrap();
    let cfg = TrainConfig { episodes: 0, ..Default::default() };
    let out = train(|_| Ok(env()), &cfg, Some(p.clone())).unwrap();
    assert_eq!(out.params, p);
    assert!(out.log.is_empty());
}

#[test]
fn same_seed_same_training() {
    let cfg = TrainConfig { episodes: 40, rollouts_per_update: 2, seed: 9, ..Default::default() };
    let a = train(|_| Ok(env()), &cfg, None).unwrap();
    let b = train(|_| Ok(env()), &cfg, None).unwrap();
    assert_eq!(a.params.as_slice(), b.params.as_slice());
    let da: Vec<_> = a.log.iter().map(|e| e.deterministic_part()).collect();
    let db: Vec<_> = b.log.iter().map(|e| e.deterministic_part()).collect();
    assert_eq!(da, db);
    let c = train(|_| Ok(env()), &TrainConfig { seed: 10, ..cfg }, None).unwrap();
    assert_ne!(a.params.as_slice(), c.params.as_slice());
}

#[test]
fn saved_policy_reproduces_outputs_and_fine_tunes_from_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = PolicyParams::init(PolicyDims::new(32, vec![64, 64], true), &mut rng).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.bin");
    save_policy(&p, &path).unwrap();
    let q = load_policy(&path).unwrap();
    assert_eq!(encode_policy(&q), encode_policy(&p));
    assert_eq!(decode_policy(&encode_policy(&p)).unwrap(), p);
    for _ in 0..100 {
        let s: Vec<f64> = (0..32).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (pa, va) = p.forward(&s).unwrap();
        let (qa, vb) = q.forward(&s).unwrap();
        assert_eq!(pa.map(f64::to_bits), qa.map(f64::to_bits));
        assert_eq!(va.to_bits(), vb.to_bits());
    }
    let tuned = train(|_| Ok(env()), &TrainConfig { episodes: 0, ..Default::default() }, Some(q)).unwrap();
    assert_eq!(tuned.params, p);
}
