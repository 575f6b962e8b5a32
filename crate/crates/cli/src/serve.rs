//! WebSocket transport for live teaching sessions: one session per
//! connection, stepped at the session's rate.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use futures_util::stream::{SplitSink, SplitStream};
use futures_util::{SinkExt, StreamExt};
use gpc_core::env::EnvConstants;
use gpc_core::error::{Error, Result};
use gpc_core::harness::run::learner_config;
use gpc_core::harness::StepStreamWriter;
use gpc_core::teach::{
    parse_message, to_text, AckCode, ControlEffect, DropReason, ErrorCode, FeedbackOutcome, Session, SessionConfig,
    TickOutput, WireMessage, PROTOCOL_VERSION,
};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::time::{interval_at, Instant, Interval, MissedTickBehavior};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::WebSocketStream;

pub struct ServeOptions {
    /// Configuration of sessions whose handshake carries none.
    pub session: SessionConfig,
    pub constants: EnvConstants,
    pub stream_dir: Option<PathBuf>,
    pub snapshot_dir: Option<PathBuf>,
}

pub struct Server {
    listener: TcpListener,
    opts: Arc<ServeOptions>,
    sessions: Arc<AtomicU64>,
}

impl Server {
    pub async fn bind(addr: &str, opts: ServeOptions) -> Result<Server> {
        let listener = TcpListener::bind(addr).await.map_err(|e| Error::Usage(format!("cannot bind {addr}: {e}")))?;
        Ok(Server { listener, opts: Arc::new(opts), sessions: Arc::new(AtomicU64::new(0)) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections until the task is dropped.
    pub async fn run(self) -> Result<()> {
        loop {
            let (stream, peer) = self.listener.accept().await?;
            let opts = Arc::clone(&self.opts);
            let index = self.sessions.fetch_add(1, Ordering::Relaxed);
            tokio::spawn(async move {
                if let Err(e) = handle(stream, opts, index).await {
                    eprintln!("connection {peer}: {e}");
                }
            });
        }
    }
}

fn ws_error(e: tokio_tungstenite::tungstenite::Error) -> Error {
    Error::Io(io::Error::other(e))
}

/// Inbound frames buffered between the socket reader and the session loop.
const INBOX_CAPACITY: usize = 64;

type Inbound = std::result::Result<Message, tokio_tungstenite::tungstenite::Error>;

async fn handle(stream: TcpStream, opts: Arc<ServeOptions>, index: u64) -> Result<()> {
    let ws = tokio_tungstenite::accept_async(stream).await.map_err(ws_error)?;
    let (sink, source) = ws.split();
    let (tx, inbox) = mpsc::channel(INBOX_CAPACITY);
    let reader = tokio::spawn(read_frames(source, tx));
    let mut conn = Connection { sink, inbox, opts, writer: None };
    let result = match conn.handshake(index).await {
        Ok(Some(session)) => conn.drive(session).await,
        other => other.map(|_| ()),
    };
    reader.abort();
    result
}

/// Forwards socket frames to the session loop; a full inbox pauses reading.
async fn read_frames(mut source: SplitStream<WebSocketStream<TcpStream>>, tx: mpsc::Sender<Inbound>) {
    while let Some(frame) = source.next().await {
        let last = frame.is_err() || matches!(frame, Ok(Message::Close(_)));
        if tx.send(frame).await.is_err() || last {
            break;
        }
    }
}

struct Connection {
    sink: SplitSink<WebSocketStream<TcpStream>, Message>,
    inbox: mpsc::Receiver<Inbound>,
    opts: Arc<ServeOptions>,
    writer: Option<StepStreamWriter<BufWriter<File>>>,
}

impl Connection {
    async fn send(&mut self, msg: &WireMessage) -> Result<()> {
        self.sink.send(Message::text(to_text(msg))).await.map_err(ws_error)
    }

    async fn send_error(&mut self, code: ErrorCode, detail: impl Into<String>) -> Result<()> {
        self.send(&WireMessage::Error { code, detail: detail.into() }).await
    }

    async fn ack(&mut self, code: AckCode, detail: impl Into<String>) -> Result<()> {
        self.send(&WireMessage::Ack { code, detail: detail.into() }).await
    }

    /// Waits for a valid handshake; `None` if the client leaves first.
    async fn handshake(&mut self, index: u64) -> Result<Option<Session>> {
        while let Some(msg) = self.inbox.recv().await {
            let text = match msg.map_err(ws_error)? {
                Message::Text(t) => t,
                Message::Close(_) => return Ok(None),
                Message::Binary(_) => {
                    self.send_error(ErrorCode::Malformed, "binary frames are not supported").await?;
                    continue;
                }
                _ => continue,
            };
            let (version, requested) = match parse_message(text.as_str()) {
                Ok(WireMessage::Handshake { protocol_version, session_config }) => (protocol_version, session_config),
                Ok(_) => {
                    self.send_error(ErrorCode::HandshakeRequired, "send a handshake first").await?;
                    continue;
                }
                Err((code, detail)) => {
                    self.send_error(code, detail).await?;
                    continue;
                }
            };
            if version != PROTOCOL_VERSION {
                let detail = format!("server speaks protocol version {PROTOCOL_VERSION}, client sent {version}");
                self.send_error(ErrorCode::ProtocolVersion, detail).await?;
                continue;
            }
            let mut cfg = requested.unwrap_or_else(|| {
                let mut cfg = self.opts.session.clone();
                cfg.session_id = format!("{}-{index}", cfg.session_id);
                cfg
            });
            // Artifact locations are the server's choice.
            cfg.snapshot_dir = self.opts.snapshot_dir.clone();
            match self.open(cfg.clone()) {
                Ok(session) => {
                    self.ack(AckCode::Handshake, format!("session {}", cfg.session_id)).await?;
                    self.send(&WireMessage::Handshake {
                        protocol_version: PROTOCOL_VERSION,
                        session_config: Some(cfg),
                    })
                    .await?;
                    self.send(&WireMessage::StateUpdate(session.current_update())).await?;
                    return Ok(Some(session));
                }
                Err(e) => self.send_error(ErrorCode::InvalidConfig, e.to_string()).await?,
            }
        }
        Ok(None)
    }

    fn open(&mut self, cfg: SessionConfig) -> Result<Session> {
        let session = Session::new(cfg, &self.opts.constants)?;
        if let Some(dir) = &self.opts.stream_dir {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.steps.csv", session.config().session_id));
            let learner = learner_config(&session.config().experiment, &self.opts.constants)?;
            self.writer = Some(StepStreamWriter::new(BufWriter::new(File::create(path)?), &learner)?);
        }
        Ok(session)
    }

    async fn drive(&mut self, mut session: Session) -> Result<()> {
        let mut rate = session.steps_per_second();
        let mut clock = ticker(rate);
        let outcome = loop {
            if session.is_ended() {
                break Ok(true);
            }
            let step = tokio::select! {
                msg = self.inbox.recv() => match msg {
                    None | Some(Ok(Message::Close(_))) => break Ok(false),
                    Some(Err(e)) => break Err(ws_error(e)),
                    Some(Ok(msg)) => self.on_message(&mut session, msg).await,
                },
                _ = clock.tick() => match session.tick() {
                    Ok(Some(out)) => self.on_tick(&session, out).await,
                    Ok(None) => Ok(()),
                    Err(e) => Err(e),
                },
            };
            if let Err(e) = step {
                let _ = self.send_error(ErrorCode::Internal, e.to_string()).await;
                break Err(e);
            }
            if session.steps_per_second() != rate {
                rate = session.steps_per_second();
                clock = ticker(rate);
            }
        };
        self.finish(&session)?;
        if let Ok(true) = outcome {
            let _ = self.sink.close().await;
        }
        outcome.map(|_| ())
    }

    async fn on_message(&mut self, session: &mut Session, msg: Message) -> Result<()> {
        let text = match msg {
            Message::Text(t) => t,
            Message::Binary(_) => {
                return self.send_error(ErrorCode::Malformed, "binary frames are not supported").await
            }
            _ => return Ok(()),
        };
        match parse_message(text.as_str()) {
            Err((code, detail)) => self.send_error(code, detail).await,
            Ok(WireMessage::Handshake { .. }) => self.send_error(ErrorCode::Malformed, "session already open").await,
            Ok(WireMessage::Feedback { dims }) => match session.submit_feedback(&dims) {
                Ok(FeedbackOutcome::Queued { superseded }) => {
                    let detail = if superseded { "replaced older feedback" } else { "" };
                    self.ack(AckCode::FeedbackQueued, detail).await
                }
                Ok(FeedbackOutcome::Dropped(DropReason::DoneInterlude)) => {
                    self.ack(AckCode::FeedbackDropped, "episode finished; awaiting reset").await
                }
                Ok(FeedbackOutcome::Dropped(DropReason::SessionEnded)) => {
                    self.send_error(ErrorCode::SessionEnded, "session has ended").await
                }
                Err(e) => self.send_error(ErrorCode::InvalidFeedback, e.to_string()).await,
            },
            Ok(WireMessage::Control(c)) => match session.control(&c) {
                Ok(effect) => {
                    self.ack(AckCode::Control, "").await?;
                    match effect {
                        ControlEffect::Frame(update) => self.send(&WireMessage::StateUpdate(update)).await,
                        ControlEffect::Stepped(Some(out)) => self.on_tick(session, out).await,
                        ControlEffect::Stepped(None) => Ok(()),
                    }
                }
                Err(e) if session.is_ended() => self.send_error(ErrorCode::SessionEnded, e.to_string()).await,
                Err(e) => self.send_error(ErrorCode::InvalidControl, e.to_string()).await,
            },
            // Server-only types are refused by the parser.
            Ok(_) => self.send_error(ErrorCode::UnexpectedType, "server-only message type").await,
        }
    }

    async fn on_tick(&mut self, session: &Session, out: TickOutput) -> Result<()> {
        if let (Some(writer), Some(row)) = (&mut self.writer, &out.row) {
            writer.write(row)?;
        }
        self.send(&WireMessage::StateUpdate(out.update)).await?;
        if let Some(episode) = out.finished_episode {
            if let Some(writer) = &mut self.writer {
                writer.flush()?;
            }
            if session.wants_snapshot_after(episode) {
                write_snapshot(session, &format!("ep{episode:04}"))?;
            }
        }
        Ok(())
    }

    fn finish(&mut self, session: &Session) -> Result<()> {
        if let Some(writer) = &mut self.writer {
            writer.flush()?;
        }
        write_snapshot(session, "final")
    }
}

fn write_snapshot(session: &Session, label: &str) -> Result<()> {
    if let Some(path) = session.snapshot_path(label) {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        session.learner().write_snapshot(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn ticker(steps_per_second: f64) -> Interval {
    let period = Duration::from_secs_f64(1.0 / steps_per_second);
    let mut clock = interval_at(Instant::now() + period, period);
    clock.set_missed_tick_behavior(MissedTickBehavior::Delay);
    clock
}
