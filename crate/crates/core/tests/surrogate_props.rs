use nasmcts::rng::RunRng;
use nasmcts::space::{Space, State};
use nasmcts::surrogate::{Surrogate, TrainConfig, TrainSample, DEFAULT_BINS, DEFAULT_HIDDEN};
use rand::seq::SliceRandom;
use rand::Rng;

fn random_complete(space: &Space, rng: &mut RunRng) -> State {
    loop {
        let mut state = space.root();
        while let Some(action) = space.actions(&state).choose(rng).cloned() {
            state = space.apply(&state, &action).unwrap();
        }
        if space.is_complete(&state.arch) {
            return state;
        }
    }
}

fn dataset(space: &Space, seed: u64, n: usize) -> Vec<TrainSample> {
    let mut rng = RunRng::new(seed);
    (0..n)
        .map(|_| TrainSample {
            x: space.encode(&random_complete(space, &mut rng).arch),
            y: rng.gen_range(0.0..1.0),
        })
        .collect()
}

fn mean_squared_error(model: &Surrogate, data: &[TrainSample]) -> f64 {
    data.iter().map(|s| (model.predict(&s.x).unwrap() - s.y).powi(2)).sum::<f64>() / data.len() as f64
}

#[test]
fn default_training_lowers_the_loss_on_random_datasets() {
    let space = Space::dag(5, 3);
    let cfg = TrainConfig::default();
    for seed in 0..20 {
        let data = dataset(&space, seed, 64);
        let mut rng = RunRng::new(1000 + seed);
        let mut model = Surrogate::mlp(space.encoding_len(), &DEFAULT_HIDDEN, space.max_digit(), cfg.init_range, &mut rng).unwrap();
        let before = mean_squared_error(&model, &data);
        let history = model.train(&data, &cfg, &mut rng).unwrap();
        assert_eq!(history.len(), cfg.epochs);
        let (first, last) = (history[0], history[history.len() - 1]);
        assert!(last < first, "seed {seed}: history {first} -> {last}");
        let after = mean_squared_error(&model, &data);
        assert!(after < before, "seed {seed}: {before} -> {after}");
    }
}

#[test]
fn multi_stage_training_lowers_the_router_loss() {
    let space = Space::dag(5, 3);
    let cfg = TrainConfig::default();
    for seed in 0..20 {
        let data = dataset(&space, seed, 64);
        let scaled: Vec<_> = data.iter().map(|s| (s.x.scaled(space.max_digit()), s.y)).collect();
        let mut rng = RunRng::new(1000 + seed);
        let mut model = Surrogate::multi_stage(
            space.encoding_len(),
            &DEFAULT_HIDDEN,
            space.max_digit(),
            DEFAULT_BINS,
            cfg.init_range,
            &mut rng,
        )
        .unwrap();
        let router_loss = |m: &Surrogate| match m {
            Surrogate::MultiStage { model, .. } => model.router_loss(&scaled).unwrap(),
            Surrogate::Mlp { .. } => unreachable!(),
        };
        let before = router_loss(&model);
        model.train(&data, &cfg, &mut rng).unwrap();
        assert!(router_loss(&model) < before, "seed {seed}");
    }
}

#[test]
fn predictions_stay_in_the_unit_interval() {
    let space = Space::dag(5, 3);
    let mut rng = RunRng::new(3);
    let model = Surrogate::mlp(space.encoding_len(), &[16], space.max_digit(), 5.0, &mut rng).unwrap();
    for s in dataset(&space, 8, 200) {
        let p = model.predict(&s.x).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}
