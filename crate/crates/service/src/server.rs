//! WebSocket transport. Each connection gets its own session and two
//! threads: the optimizer thread owns the session, the connection thread
//! owns the socket. Requests reach the optimizer through a mailbox; replies
//! come back on an unbounded channel and frames on a bounded queue that
//! drops its oldest entry when full, so a slow client never stalls the
//! optimizer.

use std::io;
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use crossbeam_queue::ArrayQueue;
use tungstenite::{Message, WebSocket};

use crate::protocol::ServerMessage;
use crate::session::{Cadence, Session, SessionError};

#[derive(Clone, Copy, Debug)]
pub struct ServiceOptions {
    pub cadence: Cadence,
    /// Frames buffered per connection before the oldest is dropped.
    pub queue_capacity: usize,
    /// Heartbeat period while the session is paused or converged.
    pub heartbeat: Duration,
    /// How long the connection thread waits for client input before
    /// flushing pending output.
    pub poll: Duration,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            cadence: Cadence::default(),
            queue_capacity: 64,
            heartbeat: Duration::from_millis(500),
            poll: Duration::from_millis(5),
        }
    }
}

/// Bounded frame buffer that overwrites its oldest entry when full.
pub struct FrameQueue {
    queue: ArrayQueue<ServerMessage>,
    dropped: AtomicU64,
}

impl FrameQueue {
    pub fn new(capacity: usize) -> FrameQueue {
        FrameQueue {
            queue: ArrayQueue::new(capacity.max(1)),
            dropped: AtomicU64::new(0),
        }
    }

    /// Never blocks.
    pub fn push(&self, msg: ServerMessage) {
        if self.queue.force_push(msg).is_some() {
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn pop(&self) -> Option<ServerMessage> {
        self.queue.pop()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

/// Accepts connections until `shutdown` is set. Every connection is served
/// on its own thread with a fresh session from `factory`.
pub fn serve<F>(listener: TcpListener, factory: F, opts: ServiceOptions, shutdown: Arc<AtomicBool>) -> io::Result<()>
where
    F: Fn() -> Result<Session, SessionError> + Send + Sync + 'static,
{
    let factory = Arc::new(factory);
    listener.set_nonblocking(true)?;
    let mut workers = Vec::new();
    while !shutdown.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::info!("connection from {peer}");
                let factory = Arc::clone(&factory);
                let shutdown = Arc::clone(&shutdown);
                workers.push(thread::spawn(move || {
                    if let Err(e) = connection(stream, factory.as_ref(), opts, &shutdown) {
                        log::warn!("connection from {peer} ended: {e}");
                    }
                }));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(20)),
            Err(e) => return Err(e),
        }
        workers.retain(|w| !w.is_finished());
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ConnectionError {
    #[error("websocket: {0}")]
    WebSocket(#[from] tungstenite::Error),
    #[error("handshake: {0}")]
    Handshake(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("session: {0}")]
    Session(#[from] SessionError),
}

fn connection<F>(
    stream: TcpStream,
    factory: &F,
    opts: ServiceOptions,
    shutdown: &AtomicBool,
) -> Result<(), ConnectionError>
where
    F: Fn() -> Result<Session, SessionError>,
{
    stream.set_nonblocking(false)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| ConnectionError::Handshake(e.to_string()))?;
    let session = match factory() {
        Ok(s) => s,
        Err(e) => {
            let msg = ServerMessage::Error(crate::protocol::ErrorReply {
                seq: None,
                request: None,
                message: format!("could not start session: {e}"),
            });
            ws.send(Message::text(msg.to_json()))?;
            let _ = ws.close(None);
            return Err(e.into());
        }
    };
    ws.send(Message::text(session.hello().to_json()))?;
    ws.get_ref().set_read_timeout(Some(opts.poll))?;

    let (mailbox, inbox) = mpsc::channel::<String>();
    let (reply_tx, replies) = mpsc::channel::<ServerMessage>();
    let frames = Arc::new(FrameQueue::new(opts.queue_capacity));
    let optimizer = {
        let frames = Arc::clone(&frames);
        thread::spawn(move || optimizer_loop(session, inbox, reply_tx, &frames, opts))
    };
    let result = io_loop(&mut ws, &mailbox, &replies, &frames, shutdown);
    drop(mailbox);
    let _ = optimizer.join();
    if frames.dropped() > 0 {
        log::debug!("dropped {} frames for a slow client", frames.dropped());
    }
    result
}

fn optimizer_loop(
    mut session: Session,
    inbox: Receiver<String>,
    replies: Sender<ServerMessage>,
    frames: &FrameQueue,
    opts: ServiceOptions,
) {
    loop {
        loop {
            match inbox.try_recv() {
                Ok(text) => {
                    if replies.send(session.handle_message(&text)).is_err() {
                        return;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return,
            }
        }
        if let Some(msg) = session.tick() {
            match msg {
                ServerMessage::Frame(_) => frames.push(msg),
                other => {
                    if replies.send(other).is_err() {
                        return;
                    }
                }
            }
            continue;
        }
        if session.status() == crate::protocol::Status::Running {
            continue;
        }
        match inbox.recv_timeout(opts.heartbeat) {
            Ok(text) => {
                if replies.send(session.handle_message(&text)).is_err() {
                    return;
                }
            }
            Err(RecvTimeoutError::Timeout) => frames.push(session.heartbeat()),
            Err(RecvTimeoutError::Disconnected) => return,
        }
    }
}

fn io_loop(
    ws: &mut WebSocket<TcpStream>,
    mailbox: &Sender<String>,
    replies: &Receiver<ServerMessage>,
    frames: &FrameQueue,
    shutdown: &AtomicBool,
) -> Result<(), ConnectionError> {
    loop {
        if shutdown.load(Ordering::Relaxed) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                if mailbox.send(text.as_str().to_owned()).is_err() {
                    return Ok(());
                }
            }
            Ok(Message::Binary(_)) => {
                let msg = ServerMessage::Error(crate::protocol::ErrorReply {
                    seq: None,
                    request: None,
                    message: "binary messages are not supported; send JSON text".into(),
                });
                ws.write(Message::text(msg.to_json()))?;
            }
            Ok(Message::Close(_)) => {
                let _ = ws.flush();
                return Ok(());
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.into()),
        }
        // Replies go out before frames so a client sees the ack ahead of
        // the first frame that reflects it.
        while let Ok(reply) = replies.try_recv() {
            ws.write(Message::text(reply.to_json()))?;
        }
        while let Some(frame) = frames.pop() {
            ws.write(Message::text(frame.to_json()))?;
        }
        match ws.flush() {
            Ok(()) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(e) => return Err(e.into()),
        }
    }
}
