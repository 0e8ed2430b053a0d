//! The live client against a scripted local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use backprobe::translate::{DeeplClient, LanguageCode, RateLimiter, RetryPolicy, TranslateError, TranslationRequest, Translator};

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    auth: Option<String>,
    body: serde_json::Value,
}

/// Serves one scripted `(status, body)` per connection, recording requests.
fn serve(script: Vec<(u16, &'static str)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v2/translate", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, reply) in script {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let path = request_line.split_whitespace().nth(1).unwrap_or_default().to_string();
            let (mut auth, mut length) = (None, 0usize);
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "authorization" => auth = Some(value.trim().to_string()),
                    "content-length" => length = value.trim().parse().unwrap(),
                    _ => {}
                }
            }
            let mut raw = vec![0; length];
            reader.read_exact(&mut raw).unwrap();
            let body = serde_json::from_slice(&raw).unwrap_or(serde_json::Value::Null);
            log.lock().unwrap().push(Seen { path, auth, body });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn client(url: &str) -> DeeplClient {
    DeeplClient::new(url, "secret-key")
        .with_rate_limiter(RateLimiter::unlimited())
        .with_retry(RetryPolicy { delays: vec![Duration::from_millis(5); 3] })
}

fn request(target: &str) -> TranslationRequest {
    let en = LanguageCode::new("EN-GB").unwrap();
    TranslationRequest::new("she writes code.", en, LanguageCode::new(target).unwrap()).unwrap()
}

const OK: &str = r#"{"translations":[{"detected_source_language":"EN","text":"hän kirjoittaa koodia."}]}"#;

#[test]
fn wire_format() {
    let (url, seen) = serve(vec![(200, OK)]);
    assert_eq!(client(&url).translate(&request("FI")).unwrap(), "hän kirjoittaa koodia.");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].path, "/v2/translate");
    assert_eq!(seen[0].auth.as_deref(), Some("DeepL-Auth-Key secret-key"));
    assert_eq!(
        seen[0].body,
        serde_json::json!({"text": ["she writes code."], "source_lang": "EN", "target_lang": "FI"})
    );
}

#[test]
fn transient_statuses_are_retried() {
    let (url, seen) = serve(vec![(429, "{}"), (503, "busy"), (500, ""), (200, OK)]);
    assert_eq!(client(&url).translate(&request("HU")).unwrap(), "hän kirjoittaa koodia.");
    assert_eq!(seen.lock().unwrap().len(), 4);
}

#[test]
fn retries_run_out() {
    let (url, seen) = serve(vec![(429, "{}"); 4]);
    let err = client(&url).translate(&request("HU")).unwrap_err();
    assert!(matches!(err, TranslateError::Status { status: 429, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 4);
}

#[test]
fn permanent_failures_are_not_retried() {
    let (url, seen) = serve(vec![(403, "{}")]);
    assert!(matches!(client(&url).translate(&request("TR")), Err(TranslateError::Auth(403))));
    assert_eq!(seen.lock().unwrap().len(), 1);

    let (url, _) = serve(vec![(456, "{}")]);
    assert!(matches!(client(&url).translate(&request("TR")), Err(TranslateError::QuotaExhausted(456))));
}

#[test]
fn malformed_bodies() {
    let (url, _) = serve(vec![(200, "not json")]);
    assert!(matches!(client(&url).translate(&request("ET")), Err(TranslateError::BadResponse(_))));
    let (url, _) = serve(vec![(200, r#"{"translations":[]}"#)]);
    assert!(matches!(client(&url).translate(&request("ET")), Err(TranslateError::BadResponse(_))));
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/v2/translate");
    let err = client(&url).with_retry(RetryPolicy::none()).translate(&request("FI")).unwrap_err();
    assert!(matches!(err, TranslateError::Transport(_)), "{err:?}");
}
