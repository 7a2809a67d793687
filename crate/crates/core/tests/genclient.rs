mod common;

use std::net::TcpListener;
use std::sync::atomic::Ordering;
use std::time::Duration;

use common::MockServer;

use proptest::prelude::*;

use zoosynth::genclient::{
    generate_image, BackendConfig, ChatClient, ChatMessage, ChatRequest, ContentPart, ControlImage, ControlKind,
    GenerationRequest, HttpChatClient, HttpService,
};
use zoosynth::Error;

fn config(url: &str) -> BackendConfig {
    let mut c = BackendConfig::new(url);
    c.backoff_base_secs = 0.0;
    c.timeout_secs = 10.0;
    c
}

fn request() -> GenerationRequest {
    GenerationRequest {
        prompt: "A photo of a lynx in forest clearing, shot on DSLR, 85mm.".into(),
        seed: 1234567890123,
        width: 64,
        height: 64,
        controls: vec![
            ControlImage { kind: ControlKind::Depth, image: vec![0, 1, 2, 250], strength: 0.55 },
            ControlImage { kind: ControlKind::Canny, image: vec![9; 7], strength: 0.55 },
        ],
    }
}

const OK_IMAGE: &str = r#"{"image": "iVBORw0KGgo=", "model_id": "mock-1"}"#;

#[test]
fn request_schema_on_the_wire() {
    let server = MockServer::start(vec![(200, OK_IMAGE.into())], Duration::ZERO);
    let svc = HttpService::new(config(&server.url)).unwrap();
    let out = generate_image(&svc, &request()).unwrap();
    assert_eq!(out.model_id, "mock-1");
    assert_eq!(out.png, b"\x89PNG\r\n\x1a\n");
    assert_eq!(out.attempts, 1);
    let seen = server.seen();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].path, "/v1/generate");
    let wire: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    let keys: Vec<&str> = wire.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["controls", "height", "prompt", "seed", "width"]);
    assert_eq!(wire["controls"][0]["kind"], "depth");
    assert_eq!(wire["controls"][0]["image"], "AAEC+g==");
    let decoded: GenerationRequest = serde_json::from_value(wire.clone()).unwrap();
    assert_eq!(decoded, request());
    assert_eq!(serde_json::to_value(&decoded).unwrap(), wire);
}

#[test]
fn server_errors_are_retried() {
    let server = MockServer::start(
        vec![(503, "{}".into()), (500, "{}".into()), (200, OK_IMAGE.into())],
        Duration::ZERO,
    );
    let svc = HttpService::new(config(&server.url)).unwrap();
    let out = generate_image(&svc, &request()).unwrap();
    assert_eq!(out.attempts, 3);
    let seen = server.seen();
    assert_eq!(seen.len(), 3);
    assert!(seen.windows(2).all(|w| w[0].body == w[1].body));
}

#[test]
fn exhausted_retries_report_every_attempt() {
    let server = MockServer::start(vec![(500, "{}".into()); 4], Duration::ZERO);
    let mut c = config(&server.url);
    c.max_retries = 2;
    let svc = HttpService::new(c).unwrap();
    match generate_image(&svc, &request()) {
        Err(Error::Backend { attempts, .. }) => {
            assert_eq!(attempts.len(), 3);
            assert_eq!(attempts.iter().map(|a| a.attempt).collect::<Vec<_>>(), [1, 2, 3]);
        }
        other => panic!("expected backend error, got {other:?}"),
    }
    assert_eq!(server.seen().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(vec![(422, r#"{"error":"bad prompt"}"#.into()), (200, OK_IMAGE.into())], Duration::ZERO);
    let svc = HttpService::new(config(&server.url)).unwrap();
    match generate_image(&svc, &request()) {
        Err(Error::Request { status, body }) => {
            assert_eq!(status, 422);
            assert!(body.contains("bad prompt"));
        }
        other => panic!("expected request error, got {other:?}"),
    }
    std::thread::sleep(Duration::from_millis(100));
    assert_eq!(server.seen().len(), 1);
}

#[test]
fn malformed_success_is_a_protocol_error() {
    let server = MockServer::start(vec![(200, "not json".into())], Duration::ZERO);
    let svc = HttpService::new(config(&server.url)).unwrap();
    assert!(matches!(generate_image(&svc, &request()), Err(Error::Protocol(_))));
    assert_eq!(server.seen().len(), 1);
}

#[test]
fn in_flight_requests_are_capped() {
    let server = MockServer::start(vec![(200, OK_IMAGE.into()); 12], Duration::from_millis(60));
    let mut c = config(&server.url);
    c.max_in_flight = 2;
    let svc = HttpService::new(c).unwrap();
    std::thread::scope(|s| {
        for _ in 0..12 {
            s.spawn(|| generate_image(&svc, &request()).unwrap());
        }
    });
    assert_eq!(server.seen().len(), 12);
    assert!(svc.limiter().peak() <= 2);
    assert!(server.peak.load(Ordering::SeqCst) <= 2);
    assert_eq!(svc.limiter().current(), 0);
}

#[test]
fn chat_round_trip() {
    let server = MockServer::start(vec![(200, r#"{"text": "The animal is facing left."}"#.into())], Duration::ZERO);
    let client = HttpChatClient::new(config(&server.url)).unwrap();
    let req = ChatRequest {
        messages: vec![ChatMessage::user(vec![
            ContentPart::Text { text: "Which way?".into() },
            ContentPart::Image { image: vec![1, 2, 3] },
        ])],
        tag: Some("42".into()),
    };
    assert_eq!(client.chat(&req).unwrap(), "The animal is facing left.");
    let seen = server.seen();
    assert_eq!(seen[0].path, "/v1/chat");
    let back: ChatRequest = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(back, req);
}

#[test]
fn unreachable_endpoint_is_retried_then_fails() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let mut c = config(&url);
    c.max_retries = 1;
    let svc = HttpService::new(c).unwrap();
    assert!(matches!(generate_image(&svc, &request()), Err(Error::Backend { attempts, .. }) if attempts.len() == 2));
}

fn control() -> impl Strategy<Value = ControlImage> {
    (any::<bool>(), prop::collection::vec(any::<u8>(), 0..64), 0.01..=1.0f64).prop_map(|(d, image, strength)| ControlImage {
        kind: if d { ControlKind::Depth } else { ControlKind::Canny },
        image,
        strength,
    })
}

proptest! {
    #[test]
    fn generation_request_json_round_trip(
        prompt in "\\PC{1,80}",
        seed in any::<u64>(),
        size in 1u32..4096,
        controls in prop::collection::vec(control(), 0..3),
    ) {
        let req = GenerationRequest { prompt, seed, width: size, height: size, controls };
        let text = serde_json::to_string(&req).unwrap();
        let back: GenerationRequest = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &req);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
