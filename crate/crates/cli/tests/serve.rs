use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use gpc_cli::serve::{ServeOptions, Server};
use gpc_core::env::{EnvConstants, EnvKind};
use gpc_core::harness::{replay_session, Algorithm, ExperimentConfig};
use gpc_core::teach::{SessionConfig, PROTOCOL_VERSION};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

type Client = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(stream_dir: Option<&std::path::Path>, snapshot_dir: Option<&std::path::Path>) -> String {
    let mut session = SessionConfig::new("default", ExperimentConfig::defaults(Algorithm::GpcCs, EnvKind::Pendulum));
    session.start_paused = true;
    let opts = ServeOptions {
        session,
        constants: EnvConstants::default(),
        stream_dir: stream_dir.map(Into::into),
        snapshot_dir: snapshot_dir.map(Into::into),
    };
    let server = Server::bind("127.0.0.1:0", opts).await.unwrap();
    let addr = server.local_addr().unwrap();
    tokio::spawn(server.run());
    format!("ws://{addr}")
}

async fn connect(url: &str) -> Client {
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

async fn send(ws: &mut Client, v: Value) {
    ws.send(Message::text(v.to_string())).await.unwrap();
}

/// Next JSON message, or `None` once the server closes.
async fn recv(ws: &mut Client) -> Option<Value> {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next()).await.expect("server answers");
        match msg {
            Some(Ok(Message::Text(t))) => return Some(serde_json::from_str(t.as_str()).unwrap()),
            Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return None,
            Some(Ok(_)) => continue,
        }
    }
}

async fn expect(ws: &mut Client, kind: &str) -> Value {
    let v = recv(ws).await.expect("open connection");
    assert_eq!(v["type"], kind, "{v}");
    v
}

fn paused_config(id: &str, alg: Algorithm, env: EnvKind) -> Value {
    let mut cfg = SessionConfig::new(id, ExperimentConfig::defaults(alg, env));
    cfg.start_paused = true;
    serde_json::to_value(cfg).unwrap()
}

async fn open(url: &str, cfg: Value) -> Client {
    let mut ws = connect(url).await;
    send(&mut ws, json!({"type": "handshake", "protocol_version": PROTOCOL_VERSION, "session_config": cfg})).await;
    assert_eq!(expect(&mut ws, "ack").await["code"], "handshake");
    expect(&mut ws, "handshake").await;
    expect(&mut ws, "state_update").await;
    ws
}

#[tokio::test]
async fn handshake_is_required_and_versioned() {
    let url = start(None, None).await;
    let mut ws = connect(&url).await;
    send(&mut ws, json!({"type": "feedback", "dims": [1]})).await;
    assert_eq!(expect(&mut ws, "error").await["code"], "handshake_required");
    send(&mut ws, json!({"type": "handshake", "protocol_version": 99})).await;
    assert_eq!(expect(&mut ws, "error").await["code"], "protocol_version");
    send(&mut ws, json!({"type": "handshake", "protocol_version": PROTOCOL_VERSION})).await;
    expect(&mut ws, "ack").await;
    let hello = expect(&mut ws, "handshake").await;
    let cfg = &hello["session_config"];
    assert_eq!(cfg["session_id"], "default-0");
    assert_eq!(cfg["experiment"]["environment"], "pendulum");
    let first = expect(&mut ws, "state_update").await;
    assert_eq!(first["step"], 0);
    assert!(!first["shapes"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn bad_messages_get_typed_errors_and_keep_the_session() {
    let url = start(None, None).await;
    let mut ws = open(&url, paused_config("errors", Algorithm::GpcNs, EnvKind::Lander)).await;
    for (text, code) in [
        ("{", "malformed"),
        (r#"{"type":"wormhole"}"#, "unknown_type"),
        (r#"{"type":"state_update"}"#, "unexpected_type"),
        (r#"{"type":"feedback","dims":[1]}"#, "invalid_feedback"),
        (r#"{"type":"feedback","dims":[3,0]}"#, "invalid_feedback"),
        (r#"{"type":"control","command":"resume_later"}"#, "invalid_control"),
        (r#"{"type":"control","command":"set_rate","steps_per_second":0}"#, "invalid_control"),
    ] {
        ws.send(Message::text(text)).await.unwrap();
        assert_eq!(expect(&mut ws, "error").await["code"], code, "{text}");
    }
    send(&mut ws, json!({"type": "control", "command": "step"})).await;
    expect(&mut ws, "ack").await;
    let update = expect(&mut ws, "state_update").await;
    assert_eq!(update["step"], 1);
    assert_eq!(update["stats"]["rejected"], 2);
}

#[tokio::test]
async fn feedback_reaches_the_model_on_the_next_step() {
    let url = start(None, None).await;
    let mut ws = open(&url, paused_config("fb", Algorithm::GpcCs, EnvKind::Pendulum)).await;
    send(&mut ws, json!({"type": "feedback", "dims": [1]})).await;
    assert_eq!(expect(&mut ws, "ack").await["code"], "feedback_queued");
    send(&mut ws, json!({"type": "feedback", "dims": [-1]})).await;
    let ack = expect(&mut ws, "ack").await;
    assert_eq!(ack["detail"], "replaced older feedback");
    send(&mut ws, json!({"type": "control", "command": "step"})).await;
    expect(&mut ws, "ack").await;
    let update = expect(&mut ws, "state_update").await;
    let stats = &update["stats"];
    assert_eq!((stats["feedback_applied"].as_u64(), stats["dropped_superseded"].as_u64()), (Some(1), Some(1)));
    assert_eq!((stats["policy_size"].as_u64(), stats["mutations"].as_u64()), (Some(1), Some(1)));
    assert!(update["learning_rate"].is_array());
}

#[tokio::test]
async fn running_sessions_stream_at_their_rate() {
    let url = start(None, None).await;
    let mut cfg = paused_config("live", Algorithm::Coach, EnvKind::CartPole);
    cfg["steps_per_second"] = json!(60.0);
    let mut ws = open(&url, cfg).await;
    send(&mut ws, json!({"type": "control", "command": "resume"})).await;
    expect(&mut ws, "ack").await;
    assert_eq!(expect(&mut ws, "state_update").await["paused"], false);
    let mut steps = Vec::new();
    while steps.len() < 5 {
        let v = expect(&mut ws, "state_update").await;
        steps.push(v["stats"]["ticks"].as_u64().unwrap());
    }
    assert!(steps.windows(2).all(|w| w[1] == w[0] + 1), "{steps:?}");
}

#[tokio::test]
async fn ended_sessions_leave_replayable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (streams, snaps) = (dir.path().join("streams"), dir.path().join("snaps"));
    let url = start(Some(&streams), Some(&snaps)).await;
    let mut ws = open(&url, paused_config("artifacts", Algorithm::GpcNs, EnvKind::Pendulum)).await;
    for k in 0..30 {
        if k % 4 == 0 {
            send(&mut ws, json!({"type": "feedback", "dims": [if k % 8 == 0 { 1 } else { -1 }]})).await;
            expect(&mut ws, "ack").await;
        }
        send(&mut ws, json!({"type": "control", "command": "step"})).await;
        expect(&mut ws, "ack").await;
        expect(&mut ws, "state_update").await;
    }
    send(&mut ws, json!({"type": "control", "command": "end_session"})).await;
    expect(&mut ws, "ack").await;
    expect(&mut ws, "state_update").await;
    assert!(recv(&mut ws).await.is_none(), "server closes ended sessions");

    let snapshot = snaps.join("artifacts-final.snapshot");
    for _ in 0..100 {
        if snapshot.exists() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let stream = std::fs::read(streams.join("artifacts.steps.csv")).unwrap();
    let replay = replay_session(stream.as_slice()).unwrap();
    assert_eq!(replay.action_mismatches, 0);
    assert_eq!(replay.learner.snapshot_string().unwrap(), std::fs::read_to_string(&snapshot).unwrap());
}

#[tokio::test]
async fn sessions_are_independent() {
    let url = start(None, None).await;
    let mut a = open(&url, paused_config("a", Algorithm::GpcCs, EnvKind::Pendulum)).await;
    let mut b = open(&url, paused_config("b", Algorithm::GpcCs, EnvKind::Pendulum)).await;
    send(&mut a, json!({"type": "feedback", "dims": [1]})).await;
    expect(&mut a, "ack").await;
    for ws in [&mut a, &mut b] {
        send(ws, json!({"type": "control", "command": "step"})).await;
        expect(ws, "ack").await;
    }
    let (ua, ub) = (expect(&mut a, "state_update").await, expect(&mut b, "state_update").await);
    assert_eq!((ua["session"].as_str(), ub["session"].as_str()), (Some("a"), Some("b")));
    assert_eq!(ua["stats"]["policy_size"], 1);
    assert_eq!(ub["stats"]["policy_size"], 0);
    assert_eq!(ua["observation"], ub["observation"], "same seed, same dynamics before feedback matters");
}
