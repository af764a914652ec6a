mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::sync::Arc;

use common::small_config;
use objnav::eval::EvalMode;
use objnav::perception::decode_runs;
use objnav_cli::evaluate::cmd_eval;
use objnav_cli::run::{cmd_run, read_log};
use objnav_cli::serve::{bind, serve, stratified_subset, ServeOptions, Server};
use serde_json::{json, Value};

struct Client {
    writer: TcpStream,
    reader: BufReader<TcpStream>,
}

impl Client {
    fn send(&mut self, frame: &str) {
        writeln!(self.writer, "{frame}").unwrap();
    }

    fn recv(&mut self) -> Value {
        let mut line = String::new();
        self.reader.read_line(&mut line).unwrap();
        serde_json::from_str(&line).unwrap_or_else(|e| panic!("bad frame {line:?}: {e}"))
    }

    fn call(&mut self, frame: Value) -> Value {
        self.send(&frame.to_string());
        self.recv()
    }
}

fn start(out: &Path, episodes: usize, practice_required: usize) -> Client {
    let cfg = small_config(out, episodes);
    let options = ServeOptions {
        port: 0,
        subset: episodes,
        practice_required,
        practice_episodes: 2,
        out: out.join("human"),
    };
    let listener = bind(0).unwrap();
    let addr = listener.local_addr().unwrap();
    let server = Arc::new(Server::new(&cfg, options).unwrap());
    std::thread::spawn(move || serve(server, listener));
    let stream = TcpStream::connect(addr).unwrap();
    Client { writer: stream.try_clone().unwrap(), reader: BufReader::new(stream) }
}

#[test]
fn reset_observe_act_until_result() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = start(dir.path(), 2, 0);
    let obs = c.call(json!({"t": "reset", "episode": 0}));
    assert_eq!(obs["t"], "obs");
    assert_eq!(obs["step"], 0);
    assert_eq!(obs["budget"], 200);
    assert_eq!(obs["depth"].as_array().unwrap().len(), obs["labels"].as_array().unwrap().len());
    let size = obs["map"]["size"].as_u64().unwrap() as usize;
    let runs: Vec<[u32; 2]> = serde_json::from_value(obs["map"]["runs"].clone()).unwrap();
    assert_eq!(decode_runs(&runs).len(), size * size);
    for k in ["x", "y", "heading", "floor"] {
        assert!(obs["pose"].get(k).is_some(), "pose lacks {k}");
    }
    let next = c.call(json!({"t": "action", "a": "left"}));
    assert_eq!(next["t"], "obs");
    assert_eq!(next["step"], 1);
    let result = c.call(json!({"t": "action", "a": "stop"}));
    assert_eq!(result["t"], "result");
    for k in ["success", "spl_term", "dts"] {
        assert!(result.get(k).is_some(), "result lacks {k}");
    }
    let log = read_log(&dir.path().join("human").join(result["log"].as_str().unwrap())).unwrap();
    assert_eq!(log.header.operator, objnav::eval::Operator::Human);
    assert_eq!(log.steps.len(), 2);
}

#[test]
fn malformed_frames_get_errors_and_the_session_survives() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = start(dir.path(), 2, 0);
    for bad in [
        "not json".to_string(),
        json!({"t": "fly"}).to_string(),
        json!({"no": "type"}).to_string(),
        json!({"t": "action", "a": "forward"}).to_string(),
        json!({"t": "reset"}).to_string(),
        json!({"t": "reset", "episode": 99}).to_string(),
        json!({"t": "reset", "episode": 0, "phase": "warmup"}).to_string(),
    ] {
        c.send(&bad);
        let reply = c.recv();
        assert_eq!(reply["t"], "err", "{bad} -> {reply}");
        assert!(reply["msg"].as_str().is_some_and(|m| !m.is_empty()));
    }
    assert_eq!(c.call(json!({"t": "reset", "episode": 1}))["t"], "obs");
    assert_eq!(c.call(json!({"t": "action", "a": "jump"}))["t"], "err");
    assert_eq!(c.call(json!({"t": "action", "a": "forward"}))["t"], "obs");
}

#[test]
fn test_episodes_unlock_after_practice() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = start(dir.path(), 2, 1);
    let locked = c.call(json!({"t": "reset", "episode": 0}));
    assert_eq!(locked["t"], "err");
    let obs = c.call(json!({"t": "reset", "episode": 1, "phase": "practice"}));
    assert_eq!(obs["phase"], "practice");
    assert_eq!(c.call(json!({"t": "action", "a": "stop"}))["t"], "result");
    assert_eq!(c.recv()["t"], "practice_complete");
    assert_eq!(c.call(json!({"t": "reset", "episode": 0}))["phase"], "test");
    // Practice stays available after unlocking.
    assert_eq!(c.call(json!({"t": "reset", "episode": 0, "phase": "practice"}))["t"], "obs");
    assert!(dir.path().join("human/practice/human_practice_0001.jsonl").exists());
}

#[test]
fn replaying_agent_actions_reproduces_its_results() {
    let dir = tempfile::tempdir().unwrap();
    let n = 6;
    let cfg = small_config(&dir.path().join("agent"), n);
    let runs = cmd_run(&cfg, &dir.path().join("agent"), 1, false).unwrap();
    let mut c = start(dir.path(), n, 0);
    for (i, run) in runs.iter().enumerate() {
        let mut frame = c.call(json!({"t": "reset", "episode": i}));
        for s in &run.log.steps {
            assert_eq!(frame["t"], "obs");
            frame = c.call(json!({"t": "action", "a": s.action.wire_name()}));
        }
        assert_eq!(frame["t"], "result", "episode {i}");
        assert_eq!(frame["success"], run.fixed.success);
        assert!((frame["spl_term"].as_f64().unwrap() - objnav::eval::spl_term(&run.fixed)).abs() == 0.0);

        let human = read_log(&dir.path().join("human").join(frame["log"].as_str().unwrap())).unwrap();
        let poses: Vec<_> = human.steps.iter().map(|s| s.pose).collect();
        assert_eq!(poses, run.log.steps.iter().map(|s| s.pose).collect::<Vec<_>>());
        for mode in [EvalMode::Fixed, EvalMode::Dynamic] {
            let mut h = human.result(mode).unwrap().clone();
            let mut a = run.log.result(mode).unwrap().clone();
            h.log = None;
            a.log = None;
            // Labels drawn from planner-side evidence are unavailable to a
            // human operator; everything else must agree.
            if !a.success {
                h.failure_label = None;
                a.failure_label = None;
            }
            assert_eq!(h, a, "episode {i} {mode:?}");
        }
    }
    let agent = cmd_eval(&dir.path().join("agent/*.jsonl").to_string_lossy(), 1.0).unwrap();
    let human = cmd_eval(&dir.path().join("human/*.jsonl").to_string_lossy(), 1.0).unwrap();
    assert_eq!((agent.report.sr, agent.report.spl, agent.report.dts), (human.report.sr, human.report.spl, human.report.dts));
    assert_eq!(agent.report.d_sr, human.report.d_sr);
}

#[test]
fn subset_is_stratified_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 30);
    let scenes = cfg.load_scenes().unwrap();
    let jobs = cfg.episodes(&scenes).unwrap();
    let a = stratified_subset(&jobs, 12, 5);
    let b = stratified_subset(&jobs, 12, 5);
    assert_eq!(a.len(), 12);
    assert!(a.iter().zip(&b).all(|(x, y)| x.spec == y.spec));
    let mut per_cat = [0usize; 6];
    for j in &a {
        per_cat[j.spec.goal_category] += 1;
    }
    assert_eq!(per_cat, [2; 6]);
    assert_eq!(stratified_subset(&jobs, 100, 5).len(), 30);
}

#[test]
fn busy_port_is_reported() {
    let first = bind(0).unwrap();
    let port = first.local_addr().unwrap().port();
    let err = bind(port).unwrap_err().to_string();
    assert!(err.contains("in use"), "{err}");
}
