//! Interactive session server for human operators.
//!
//! Newline-delimited JSON over TCP, one session per connection. Client
//! frames:
//!
//! ```text
//! {"t":"reset","episode":i}                  test episode i (after practice)
//! {"t":"reset","episode":i,"phase":"practice"}
//! {"t":"action","a":"forward"|"left"|"right"|"stop"}
//! ```
//!
//! Server frames: `obs` after every reset and non-final action, `result`
//! when an episode ends, `practice_complete` once enough practice
//! episodes are done, and `err` for anything the server refuses. An error
//! never ends the session.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use objnav::eval::{spl_term, Decision, EpisodeDriver, EpisodeJob, EvalConfig, Operator, Pipeline};
use objnav::perception::encode_runs;
use objnav::world::{Action, Scene};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{generate_scenes, sample_jobs, RunConfig};
use crate::run::seal;

const SUBSET_STREAM: u64 = 0x5EED_0001;
const PRACTICE_STREAM: u64 = 0x5EED_0002;
/// Practice scenes are generated from these seeds up.
const PRACTICE_SCENE_SEED: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub port: u16,
    /// Test episodes offered to the operator.
    pub subset: usize,
    /// Practice episodes to finish before test episodes unlock.
    pub practice_required: usize,
    pub practice_episodes: usize,
    pub out: PathBuf,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { port: 7878, subset: 50, practice_required: 1, practice_episodes: 10, out: PathBuf::from("runs/human") }
    }
}

/// Everything sessions share: scenes, episode lists and configuration.
pub struct Server {
    pub test_scenes: Vec<Scene>,
    pub test_jobs: Vec<EpisodeJob>,
    pub practice_scenes: Vec<Scene>,
    pub practice_jobs: Vec<EpisodeJob>,
    pub pipeline: Pipeline,
    pub eval: EvalConfig,
    pub digest: String,
    pub options: ServeOptions,
}

/// Seeded sample of up to `n` jobs, stratified by goal category: each
/// category's jobs are shuffled, then categories take turns. The chosen
/// jobs keep their original order.
pub fn stratified_subset(jobs: &[EpisodeJob], n: usize, seed: u64) -> Vec<EpisodeJob> {
    let mut by_cat: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, j) in jobs.iter().enumerate() {
        by_cat.entry(j.spec.goal_category).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SUBSET_STREAM);
    for v in by_cat.values_mut() {
        v.shuffle(&mut rng);
    }
    let mut queues: Vec<std::vec::IntoIter<usize>> = by_cat.into_values().map(Vec::into_iter).collect();
    let mut chosen = Vec::with_capacity(n.min(jobs.len()));
    while chosen.len() < n.min(jobs.len()) {
        for q in &mut queues {
            if chosen.len() < n {
                if let Some(i) = q.next() {
                    chosen.push(i);
                }
            }
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| jobs[i].clone()).collect()
}

impl Server {
    pub fn new(cfg: &RunConfig, options: ServeOptions) -> Result<Self> {
        let test_scenes = cfg.load_scenes()?;
        let all = cfg.episodes(&test_scenes)?;
        let test_jobs = stratified_subset(&all, options.subset, cfg.seed);
        let params = cfg.scenes.generate.as_ref().map(|g| g.params.clone()).unwrap_or_default();
        let practice_params = objnav::world::GenerateParams { rng_seed: PRACTICE_SCENE_SEED + params.rng_seed, ..params };
        let practice_scenes = generate_scenes(&practice_params, 2)?;
        let practice_jobs = sample_jobs(
            &practice_scenes,
            &cfg.categories()?,
            options.practice_episodes.max(1),
            cfg.seed ^ PRACTICE_STREAM,
            &cfg.episodes.sampler,
        )?;
        Ok(Self {
            test_scenes,
            test_jobs,
            practice_scenes,
            practice_jobs,
            pipeline: cfg.pipeline()?,
            eval: cfg.eval,
            digest: cfg.digest(),
            options,
        })
    }

    pub fn session(&self) -> Session<'_> {
        Session { server: self, active: None, practice_done: 0, unlocked: self.options.practice_required == 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Practice,
    Test,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Practice => "practice",
            Phase::Test => "test",
        }
    }
}

struct Active<'a> {
    phase: Phase,
    episode: usize,
    driver: EpisodeDriver<'a>,
}

/// One operator's connection state.
pub struct Session<'a> {
    server: &'a Server,
    active: Option<Active<'a>>,
    practice_done: usize,
    unlocked: bool,
}

fn err(msg: impl Into<String>) -> Value {
    json!({"t": "err", "msg": msg.into()})
}

impl<'a> Session<'a> {
    pub fn unlocked(&self) -> bool {
        self.unlocked
    }

    /// Answers one client line with zero or more frames.
    pub fn handle_line(&mut self, line: &str) -> Vec<Value> {
        let msg: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return vec![err(format!("malformed frame: {e}"))],
        };
        match msg.get("t").and_then(Value::as_str) {
            Some("reset") => self.reset(&msg),
            Some("action") => self.action(&msg),
            Some(t) => vec![err(format!("unknown frame type '{t}'"))],
            None => vec![err("frame has no string field 't'")],
        }
    }

    fn reset(&mut self, msg: &Value) -> Vec<Value> {
        let Some(episode) = msg.get("episode").and_then(Value::as_u64).map(|e| e as usize) else {
            return vec![err("reset needs a non-negative integer 'episode'")];
        };
        let phase = match msg.get("phase").map(|p| p.as_str()) {
            None | Some(Some("test")) => Phase::Test,
            Some(Some("practice")) => Phase::Practice,
            Some(_) => return vec![err("phase must be 'practice' or 'test'")],
        };
        if phase == Phase::Test && !self.unlocked {
            return vec![err("test episodes are locked until practice is complete")];
        }
        let s = self.server;
        let (scenes, jobs) = match phase {
            Phase::Practice => (&s.practice_scenes, &s.practice_jobs),
            Phase::Test => (&s.test_scenes, &s.test_jobs),
        };
        let Some(job) = jobs.get(episode) else {
            return vec![err(format!("{} episode {episode} out of range (0..{})", phase.name(), jobs.len()))];
        };
        match EpisodeDriver::new(&scenes[job.scene], &job.spec, &s.pipeline, &s.eval, Operator::Human) {
            Ok(driver) => {
                self.active = Some(Active { phase, episode, driver });
                vec![self.observation()]
            }
            Err(e) => vec![err(e.to_string())],
        }
    }

    fn observation(&mut self) -> Value {
        let active = self.active.as_mut().expect("active episode");
        let d = &mut active.driver;
        let (depth, labels) = match d.perceive() {
            Ok(p) => (p.obs.depth.clone(), p.labels.clone()),
            Err(e) => return err(e.to_string()),
        };
        let map = d.global_map();
        json!({
            "t": "obs",
            "depth": depth,
            "labels": labels,
            "map": {"size": map.size(), "runs": encode_runs(map)},
            "pose": d.pose(),
            "step": d.step_index(),
            "budget": d.fixed_cap(),
            "goal": d.spec().goal_category,
            "phase": active.phase.name(),
            "episode": active.episode,
        })
    }

    fn action(&mut self, msg: &Value) -> Vec<Value> {
        let Some(action) = msg.get("a").and_then(Value::as_str).and_then(Action::from_wire) else {
            return vec![err("action 'a' must be one of forward, left, right, stop")];
        };
        let Some(active) = self.active.as_mut() else {
            return vec![err("no active episode; send reset first")];
        };
        if let Err(e) = active.driver.apply(Decision::manual(action)) {
            return vec![err(e.to_string())];
        }
        if !active.driver.is_done() {
            return vec![self.observation()];
        }
        let Active { phase, episode, driver } = self.active.take().expect("active episode");
        let mut frames = match self.persist(phase, episode, driver) {
            Ok(result) => vec![result],
            Err(e) => vec![err(format!("episode finished but its log was not saved: {e:#}"))],
        };
        if phase == Phase::Practice {
            self.practice_done += 1;
            if !self.unlocked && self.practice_done >= self.server.options.practice_required {
                self.unlocked = true;
                frames.push(json!({"t": "practice_complete"}));
            }
        }
        frames
    }

    fn persist(&self, phase: Phase, episode: usize, driver: EpisodeDriver<'_>) -> Result<Value> {
        let mut run = driver.finish()?;
        let dir = match phase {
            Phase::Test => self.server.options.out.clone(),
            Phase::Practice => self.server.options.out.join("practice"),
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let stem = format!("human_{}_{episode:04}", phase.name());
        let name = (0..)
            .map(|k| if k == 0 { format!("{stem}.jsonl") } else { format!("{stem}_{k}.jsonl") })
            .find(|n| !dir.join(n).exists())
            .expect("unbounded");
        seal(&mut run, &self.server.digest, &name);
        let path = dir.join(&name);
        fs::write(&path, run.log.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
        let r = &run.fixed;
        Ok(json!({
            "t": "result",
            "success": r.success,
            "spl_term": spl_term(r),
            "dts": (r.final_distance - self.server.eval.success_radius).max(0.0),
            "steps": r.steps_used,
            "log": name,
        }))
    }
}

fn handle_connection(server: &Server, stream: TcpStream) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    let mut session = server.session();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for frame in session.handle_line(&line) {
            writeln!(writer, "{frame}")?;
        }
        writer.flush()?;
    }
    Ok(())
}

/// Binds the listener. A port of 0 picks a free one.
pub fn bind(port: u16) -> Result<TcpListener> {
    TcpListener::bind(("127.0.0.1", port)).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AddrInUse {
            anyhow::anyhow!("port {port} is already in use")
        } else {
            anyhow::Error::new(e).context(format!("binding port {port}"))
        }
    })
}

/// Serves sessions forever, one thread per connection.
pub fn serve(server: Arc<Server>, listener: TcpListener) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let server = Arc::clone(&server);
        std::thread::spawn(move || {
            let _ = handle_connection(&server, stream);
        });
    }
    Ok(())
}

pub fn local_addr(listener: &TcpListener) -> Result<SocketAddr> {
    Ok(listener.local_addr()?)
}
