use criterion::{black_box, criterion_group, criterion_main, Criterion};
use objnav::eval::{run_episode, EvalConfig, Pipeline};
use objnav::perception::{augment_map, extract_frontiers, AugmentConfig, DetectorModel, SemanticMap, EXPLORED, OBSTACLE};
use objnav::policy::{local_plan, GoalSource, LongTermGoal, PlannerConfig};
use objnav::world::{
    generate_scene, render_observation, sample_episode, AgentPose, DistanceField, GenerateParams, MotionParams,
    SamplerConfig, SensorConfig, Target,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 480x480 map with a random mix of explored, obstacle and unknown cells.
fn random_map(seed: u64) -> SemanticMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 480;
    let mut map = SemanticMap::new(2, m, 0.05, (0.0, 0.0));
    for r in 0..m {
        for c in 0..m {
            if rng.gen_bool(0.6) {
                map.set(EXPLORED, r, c);
                if rng.gen_bool(0.1) {
                    map.set(OBSTACLE, r, c);
                }
            }
        }
    }
    map
}

fn world(c: &mut Criterion) {
    let scene = generate_scene(&GenerateParams { rng_seed: 1, ..Default::default() }).unwrap();
    let spec = sample_episode(&scene, 0, 1, &SamplerConfig::default()).unwrap();
    let sensor = SensorConfig::default();
    c.bench_function("render_observation", |b| b.iter(|| render_observation(&scene, black_box(&spec.start), &sensor)));
    c.bench_function("distance_field", |b| b.iter(|| DistanceField::new(&scene, Target::Category(black_box(0)))));
}

fn perception(c: &mut Criterion) {
    let map = random_map(2);
    c.bench_function("extract_frontiers_480", |b| b.iter(|| extract_frontiers(black_box(&map), 3)));
    c.bench_function("augment_map_480", |b| b.iter(|| augment_map(black_box(&map), &AugmentConfig::default())));
}

fn planning(c: &mut Criterion) {
    let map = random_map(3);
    let pose = AgentPose::new(240.5 * 0.05, 240.5 * 0.05, 0.0, 0);
    let goal = LongTermGoal::new(40, 420, GoalSource::Frontier);
    let (motion, cfg) = (MotionParams::default(), PlannerConfig::default());
    c.bench_function("local_plan_480", |b| b.iter(|| local_plan(black_box(&map), &pose, &goal, &motion, &cfg)));
}

fn episode(c: &mut Criterion) {
    let scene = generate_scene(&GenerateParams { rng_seed: 4, ..Default::default() }).unwrap();
    let spec = sample_episode(&scene, 1, 4, &SamplerConfig::default()).unwrap();
    let pipe = Pipeline::with_detector(DetectorModel::preset("rednet", 6).unwrap());
    let eval = EvalConfig { max_steps_fixed: 100, ..Default::default() };
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    group.bench_function("run_episode_100_steps", |b| b.iter(|| run_episode(&scene, &spec, &pipe, &eval).unwrap()));
    group.finish();
}

criterion_group!(benches, world, perception, planning, episode);
criterion_main!(benches);
