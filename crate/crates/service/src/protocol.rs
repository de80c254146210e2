//! Wire format of the steering protocol. Every WebSocket text message is one
//! JSON object with a `type` field; see `docs/protocol.md` for the schemas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const PROTOCOL_VERSION: u32 = 1;

/// Client requests. Each may carry an optional integer `seq` that is echoed
/// in the reply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    SetWeight { criterion: String, value: f64 },
    PinNode { id: usize, x: f64, y: f64 },
    UnpinNode { id: usize },
    Pause {},
    Resume {},
    Reset { seed: u64 },
    SetLr { value: f64 },
}

impl Request {
    pub const TYPES: [&'static str; 7] = [
        "set_weight",
        "pin_node",
        "unpin_node",
        "pause",
        "resume",
        "reset",
        "set_lr",
    ];

    pub fn type_name(&self) -> &'static str {
        match self {
            Request::SetWeight { .. } => "set_weight",
            Request::PinNode { .. } => "pin_node",
            Request::UnpinNode { .. } => "unpin_node",
            Request::Pause {} => "pause",
            Request::Resume {} => "resume",
            Request::Reset { .. } => "reset",
            Request::SetLr { .. } => "set_lr",
        }
    }
}

/// A request together with its correlation number.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub seq: Option<u64>,
    pub request: Request,
}

impl Envelope {
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(&self.request).expect("requests serialize");
        if let (Some(seq), Value::Object(map)) = (self.seq, &mut value) {
            map.insert("seq".into(), seq.into());
        }
        value.to_string()
    }
}

/// Why a client message could not be turned into a request. Keeps what
/// could be recovered for the error reply.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectedMessage {
    pub seq: Option<u64>,
    pub request: Option<String>,
    pub message: String,
}

pub fn parse_request(text: &str) -> Result<Envelope, RejectedMessage> {
    let reject = |seq, request, message: String| RejectedMessage { seq, request, message };
    let value: Value = serde_json::from_str(text).map_err(|e| reject(None, None, format!("malformed JSON: {e}")))?;
    let Value::Object(mut map) = value else {
        return Err(reject(None, None, "message must be a JSON object".into()));
    };
    let seq = match map.remove("seq") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| reject(None, None, "seq must be a non-negative integer".into()))?,
        ),
    };
    let kind = match map.get("type") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(reject(seq, None, "type must be a string".into())),
        None => return Err(reject(seq, None, "missing type".into())),
    };
    if !Request::TYPES.contains(&kind.as_str()) {
        return Err(reject(
            seq,
            Some(kind.clone()),
            format!(
                "unknown message type {kind:?}; expected one of {}",
                Request::TYPES.join(", ")
            ),
        ));
    }
    let request: Request = serde_json::from_value(Value::Object(map))
        .map_err(|e| reject(seq, Some(kind.clone()), format!("invalid {kind}: {e}")))?;
    Ok(Envelope { seq, request })
}

/// Optimizer state as seen by a client.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Paused,
    /// The optimizer stopped on its own (learning-rate floor or iteration
    /// limit); steering messages other than pause may restart it.
    Converged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphInfo {
    pub name: String,
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub version: u32,
    pub graph: GraphInfo,
    pub criteria: Vec<String>,
    pub weights: BTreeMap<String, f64>,
    pub lr: f64,
    pub every_k: usize,
    pub quality_every: usize,
    pub status: Status,
    pub iter: usize,
    pub positions: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ack {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub request: String,
    /// Completed iterations when the request took effect; frames with a
    /// larger `iter` reflect it.
    pub iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub iter: usize,
    pub positions: Vec<[f64; 2]>,
    pub ema_loss: Option<f64>,
    /// All nine measures in the lower-is-better convention, keyed by
    /// criterion code; present on every `quality_every`-th frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualities: Option<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heartbeat {
    pub iter: usize,
    pub status: Status,
}

/// Everything the service sends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello(Hello),
    Ack(Ack),
    Error(ErrorReply),
    Frame(Frame),
    Heartbeat(Heartbeat),
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<ServerMessage> {
        serde_json::from_str(text)
    }
}

impl From<RejectedMessage> for ServerMessage {
    fn from(r: RejectedMessage) -> Self {
        ServerMessage::Error(ErrorReply {
            seq: r.seq,
            request: r.request,
            message: r.message,
        })
    }
}

/// Drops keys whose value is `null`, for comparing documents that differ
/// only in how absent optional fields are spelled.
pub fn without_nulls(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k.clone(), without_nulls(v)))
                .collect::<Map<String, Value>>(),
        ),
        Value::Array(a) => Value::Array(a.iter().map(without_nulls).collect()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_parse_with_and_without_seq() {
        let e = parse_request(r#"{"type":"set_weight","criterion":"ST","value":0.5,"seq":4}"#).unwrap();
        assert_eq!(e.seq, Some(4));
        assert_eq!(
            e.request,
            Request::SetWeight {
                criterion: "ST".into(),
                value: 0.5
            }
        );
        assert_eq!(parse_request(r#"{"type":"pause"}"#).unwrap().request, Request::Pause {});
        let round = parse_request(&e.to_json()).unwrap();
        assert_eq!(round, e);
    }

    #[test]
    fn rejects_keep_what_they_can() {
        let r = parse_request(r#"{"type":"teleport","seq":9}"#).unwrap_err();
        assert_eq!(r.seq, Some(9));
        assert_eq!(r.request.as_deref(), Some("teleport"));
        assert!(r.message.contains("set_weight"));
        let r = parse_request(r#"{"type":"pin_node","id":1,"x":0}"#).unwrap_err();
        assert_eq!(r.request.as_deref(), Some("pin_node"));
        assert!(parse_request("[1,2]").is_err());
        assert!(parse_request("{").is_err());
        assert!(parse_request(r#"{"type":"pause","extra":1}"#).is_err());
        assert!(parse_request(r#"{"type":"pause","seq":-1}"#).is_err());
    }

    #[test]
    fn server_messages_round_trip() {
        let msgs = [
            ServerMessage::Ack(Ack {
                seq: None,
                request: "pause".into(),
                iter: 3,
            }),
            ServerMessage::Frame(Frame {
                iter: 10,
                positions: vec![[0.0, 1.5], [-2.0, 0.1]],
                ema_loss: Some(0.25),
                qualities: Some(BTreeMap::from([("ST".to_string(), 0.1)])),
            }),
            ServerMessage::Heartbeat(Heartbeat {
                iter: 10,
                status: Status::Paused,
            }),
        ];
        for m in msgs {
            assert_eq!(ServerMessage::from_json(&m.to_json()).unwrap(), m);
        }
    }
}
