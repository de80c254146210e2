use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

use sgdraw::criteria::Kind;
use sgdraw::optimizer::{initial_layout, CriterionConfig, OptimizerConfig};
use sgdraw::Graph;
use sgdraw_service::protocol::{Frame, ServerMessage, Status};
use sgdraw_service::{serve, ServiceOptions, Session};

type Client = WebSocket<MaybeTlsStream<TcpStream>>;

struct Server {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl Drop for Server {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
    }
}

fn start(graph: Graph, opts: ServiceOptions) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let shutdown = Arc::new(AtomicBool::new(false));
    let graph = Arc::new(graph);
    let factory = move || {
        let opt = OptimizerConfig {
            max_iter: 10_000_000,
            patience: Some(10_000_000),
            ..Default::default()
        };
        Session::new(
            graph.clone(),
            &[CriterionConfig::constant(Kind::Stress, 1.0).unwrap()],
            opt,
            initial_layout(graph.n(), 3),
            opts.cadence,
        )
    };
    let flag = Arc::clone(&shutdown);
    let handle = thread::spawn(move || serve(listener, factory, opts, flag).unwrap());
    Server {
        addr,
        shutdown,
        handle: Some(handle),
    }
}

fn connect(server: &Server) -> Client {
    let (ws, _) = tungstenite::connect(format!("ws://{}", server.addr)).unwrap();
    if let MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    }
    ws
}

fn recv(ws: &mut Client) -> ServerMessage {
    loop {
        match ws.read().unwrap() {
            Message::Text(t) => return ServerMessage::from_json(t.as_str()).unwrap(),
            Message::Close(_) => panic!("server closed the connection"),
            _ => {}
        }
    }
}

fn send(ws: &mut Client, text: &str) {
    ws.send(Message::text(text)).unwrap();
}

/// Reads until a reply arrives, returning it and the messages before it.
fn reply(ws: &mut Client) -> (ServerMessage, Vec<ServerMessage>) {
    let mut before = Vec::new();
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        assert!(Instant::now() < deadline, "no reply within 10 s");
        match recv(ws) {
            m @ (ServerMessage::Ack(_) | ServerMessage::Error(_)) => return (m, before),
            m => before.push(m),
        }
    }
}

fn next_frame(ws: &mut Client) -> Frame {
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        assert!(Instant::now() < deadline, "no frame within 10 s");
        if let ServerMessage::Frame(f) = recv(ws) {
            return f;
        }
    }
}

fn ack_iter(m: &ServerMessage, seq: u64) -> usize {
    match m {
        ServerMessage::Ack(a) => {
            assert_eq!(a.seq, Some(seq));
            a.iter
        }
        other => panic!("expected ack {seq}, got {other:?}"),
    }
}

#[test]
fn streams_frames_and_applies_steering() {
    let server = start(Graph::grid(4, 5), ServiceOptions::default());
    let mut ws = connect(&server);
    let ServerMessage::Hello(hello) = recv(&mut ws) else {
        panic!("hello expected first")
    };
    assert_eq!(hello.graph.nodes, 20);
    assert_eq!(hello.every_k, 1);
    assert_eq!(hello.status, Status::Running);

    let frames: Vec<Frame> = (0..10).map(|_| next_frame(&mut ws)).collect();
    assert!(frames.windows(2).all(|w| w[0].iter < w[1].iter));
    assert!(frames.iter().all(|f| f.positions.len() == 20));

    send(&mut ws, r#"{"type":"set_weight","criterion":"IL","value":0.5,"seq":1}"#);
    let (ack, _) = reply(&mut ws);
    let at = ack_iter(&ack, 1);
    assert!(next_frame(&mut ws).iter > at || next_frame(&mut ws).iter > at);

    send(&mut ws, r#"{"type":"set_weight","criterion":"ZZ","value":1,"seq":2}"#);
    match reply(&mut ws).0 {
        ServerMessage::Error(e) => {
            assert_eq!(e.seq, Some(2));
            assert!(e.message.contains("ZZ"));
        }
        other => panic!("{other:?}"),
    }
    send(&mut ws, r#"{"type":"fly","seq":3}"#);
    assert!(matches!(reply(&mut ws).0, ServerMessage::Error(_)));
    // Still running after the rejected requests.
    let f = next_frame(&mut ws);
    let g = next_frame(&mut ws);
    assert!(g.iter > f.iter);
}

#[test]
fn pause_sends_heartbeats_and_drag_applies_while_paused() {
    let opts = ServiceOptions {
        heartbeat: Duration::from_millis(50),
        ..Default::default()
    };
    let server = start(Graph::grid(4, 5), opts);
    let mut ws = connect(&server);
    recv(&mut ws);
    next_frame(&mut ws);

    send(&mut ws, r#"{"type":"pause","seq":1}"#);
    let paused_at = ack_iter(&reply(&mut ws).0, 1);
    let deadline = Instant::now() + Duration::from_millis(600);
    let mut beats = 0;
    while Instant::now() < deadline {
        match recv(&mut ws) {
            ServerMessage::Frame(f) => assert!(f.iter <= paused_at, "frame {} after pause at {paused_at}", f.iter),
            ServerMessage::Heartbeat(h) => {
                assert_eq!(h.status, Status::Paused);
                assert_eq!(h.iter, paused_at);
                beats += 1;
            }
            other => panic!("{other:?}"),
        }
    }
    assert!(beats >= 3, "only {beats} heartbeats");

    // Drag node 7 while paused: pin, move, release.
    send(&mut ws, r#"{"type":"pin_node","id":7,"x":5.0,"y":5.0,"seq":2}"#);
    assert_eq!(ack_iter(&reply(&mut ws).0, 2), paused_at);
    send(&mut ws, r#"{"type":"pin_node","id":7,"x":6.0,"y":6.5,"seq":3}"#);
    assert_eq!(ack_iter(&reply(&mut ws).0, 3), paused_at);
    send(&mut ws, r#"{"type":"resume","seq":4}"#);
    ack_iter(&reply(&mut ws).0, 4);
    let f = next_frame(&mut ws);
    assert!(f.iter > paused_at);
    assert_eq!(f.positions[7], [6.0, 6.5]);

    send(&mut ws, r#"{"type":"unpin_node","id":7,"seq":5}"#);
    let released = ack_iter(&reply(&mut ws).0, 5);
    let moved = loop {
        let f = next_frame(&mut ws);
        if f.iter > released + 5 {
            break f;
        }
    };
    assert_ne!(moved.positions[7], [6.0, 6.5]);
}

#[test]
fn slow_client_loses_old_frames_without_stalling_the_optimizer() {
    let opts = ServiceOptions {
        queue_capacity: 4,
        ..Default::default()
    };
    // Large frames fill the socket buffers quickly.
    let server = start(Graph::grid(20, 20), opts);
    let mut ws = connect(&server);
    recv(&mut ws);
    let first = next_frame(&mut ws).iter;
    thread::sleep(Duration::from_millis(1500));

    let mut received = 0usize;
    let mut gaps = 0usize;
    let mut last = first;
    let deadline = Instant::now() + Duration::from_secs(3);
    while Instant::now() < deadline {
        let f = next_frame(&mut ws);
        received += 1;
        if f.iter > last + 1 {
            gaps += 1;
        }
        assert!(f.iter > last);
        last = f.iter;
    }
    assert!(gaps > 0, "no frames were dropped");
    assert!(
        last - first > received,
        "optimizer advanced {} iterations for {received} delivered frames",
        last - first
    );
}

#[test]
fn each_connection_gets_its_own_session() {
    let server = start(Graph::path(6), ServiceOptions::default());
    let mut a = connect(&server);
    let mut b = connect(&server);
    recv(&mut a);
    recv(&mut b);
    send(&mut a, r#"{"type":"pause","seq":1}"#);
    ack_iter(&reply(&mut a).0, 1);
    let f1 = next_frame(&mut b);
    let f2 = next_frame(&mut b);
    assert!(f2.iter > f1.iter);
    a.close(None).unwrap();
    drop(a);
    let f3 = next_frame(&mut b);
    assert!(f3.iter > f2.iter);
}
