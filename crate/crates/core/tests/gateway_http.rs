//! Exercises the HTTP backend against a local single-threaded test
//! server: success, retry-then-success, fatal 4xx, retry exhaustion, and
//! auth header propagation.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;

use retrocorpus::corpus::{Document, DomainTag, Variety};
use retrocorpus::translate::{
    BackendKind, BackendSpec, Direction, Gateway, HttpBackend, TranslateOptions,
};

struct Exchange {
    status: u16,
    body: String,
}

/// Serves one canned response per expected request and returns the raw
/// requests it saw.
fn serve(exchanges: Vec<Exchange>) -> (String, JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
    let url = format!("http://{}/translate", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for exchange in exchanges {
            let (stream, _) = listener.accept().expect("accept");
            let mut reader = BufReader::new(stream);
            let mut request = String::new();
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).expect("read header");
                if let Some(value) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = value.trim().parse().unwrap_or(0);
                }
                let done = line == "\r\n" || line == "\n";
                request.push_str(&line);
                if done {
                    break;
                }
            }
            let mut body = vec![0u8; content_length];
            reader.read_exact(&mut body).expect("read body");
            request.push_str(&String::from_utf8_lossy(&body));
            seen.push(request);

            let response = format!(
                "HTTP/1.1 {} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                exchange.status,
                exchange.body.len(),
                exchange.body
            );
            reader
                .into_inner()
                .write_all(response.as_bytes())
                .expect("write response");
        }
        seen
    });
    (url, handle)
}

fn http_spec(url: &str) -> BackendSpec {
    BackendSpec {
        backend_id: "svc".to_string(),
        kind: BackendKind::HttpService,
        url: Some(url.to_string()),
        auth_header: None,
        auth_token_env: None,
        table_path: None,
        rate_limit_rps: 1000.0,
        max_retries: 2,
        backoff_base_ms: 1,
        timeout_ms: 5000,
    }
}

fn doc(id: &str, text: &str) -> Document {
    Document {
        id: id.to_string(),
        text: text.to_string(),
        variety: Variety::TargetVariety,
        domain: DomainTag::Web,
        source: "test".to_string(),
        meta: Default::default(),
    }
}

fn options() -> TranslateOptions {
    TranslateOptions {
        direction: Direction::parse("pt-PT:en").unwrap(),
        workers: 1,
        created_at: Some(TranslateOptions::fixed_epoch()),
    }
}

#[test]
fn successful_request_carries_text_and_languages() {
    let (url, server) = serve(vec![Exchange {
        status: 200,
        body: r#"{"translation":"hello"}"#.to_string(),
    }]);
    let spec = http_spec(&url);
    let backend = HttpBackend::from_spec(&spec).unwrap();
    let gateway = Gateway::new(&backend, None, &spec);
    let outcome = gateway.translate_batch(vec![doc("d1", "olá")], &options());
    assert_eq!(outcome.pairs.len(), 1);
    assert_eq!(outcome.pairs[0].source_text, "hello");
    assert_eq!(outcome.pairs[0].backend_id, "svc");

    let requests = server.join().unwrap();
    assert_eq!(requests.len(), 1);
    assert!(requests[0].contains(r#""text":"olá""#));
    assert!(requests[0].contains(r#""source_lang":"pt-PT""#));
    assert!(requests[0].contains(r#""target_lang":"en""#));
}

#[test]
fn server_errors_are_retried_until_success() {
    let (url, server) = serve(vec![
        Exchange {
            status: 500,
            body: "oops".to_string(),
        },
        Exchange {
            status: 429,
            body: "slow down".to_string(),
        },
        Exchange {
            status: 200,
            body: r#"{"translation":"done"}"#.to_string(),
        },
    ]);
    let spec = http_spec(&url);
    let backend = HttpBackend::from_spec(&spec).unwrap();
    let gateway = Gateway::new(&backend, None, &spec);
    let outcome = gateway.translate_batch(vec![doc("d1", "texto")], &options());
    assert_eq!(outcome.pairs.len(), 1);
    assert_eq!(outcome.pairs[0].source_text, "done");
    assert_eq!(server.join().unwrap().len(), 3);
}

#[test]
fn client_errors_dead_letter_without_retry() {
    let (url, server) = serve(vec![Exchange {
        status: 400,
        body: "bad".to_string(),
    }]);
    let spec = http_spec(&url);
    let backend = HttpBackend::from_spec(&spec).unwrap();
    let gateway = Gateway::new(&backend, None, &spec);
    let outcome = gateway.translate_batch(vec![doc("d1", "texto")], &options());
    assert!(outcome.pairs.is_empty());
    assert_eq!(outcome.dead.len(), 1);
    assert!(outcome.dead[0].error.contains("400"));
    assert_eq!(server.join().unwrap().len(), 1);
}

#[test]
fn exhausted_retries_dead_letter_with_the_last_error() {
    let (url, server) = serve(vec![
        Exchange {
            status: 503,
            body: String::new(),
        },
        Exchange {
            status: 503,
            body: String::new(),
        },
        Exchange {
            status: 503,
            body: String::new(),
        },
    ]);
    let spec = http_spec(&url); // max_retries = 2 -> 3 attempts total
    let backend = HttpBackend::from_spec(&spec).unwrap();
    let gateway = Gateway::new(&backend, None, &spec);
    let outcome = gateway.translate_batch(vec![doc("d1", "texto")], &options());
    assert_eq!(outcome.dead.len(), 1);
    assert!(outcome.dead[0].error.contains("exhausted 2 retries"));
    assert_eq!(server.join().unwrap().len(), 3);
}

#[test]
fn auth_header_is_attached_from_the_environment() {
    let (url, server) = serve(vec![Exchange {
        status: 200,
        body: r#"{"translation":"ok"}"#.to_string(),
    }]);
    let mut spec = http_spec(&url);
    spec.auth_header = Some("x-api-key".to_string());
    spec.auth_token_env = Some("GATEWAY_HTTP_TEST_TOKEN".to_string());
    std::env::set_var("GATEWAY_HTTP_TEST_TOKEN", "sekret-123");
    let backend = HttpBackend::from_spec(&spec).unwrap();
    let gateway = Gateway::new(&backend, None, &spec);
    let outcome = gateway.translate_batch(vec![doc("d1", "texto")], &options());
    assert_eq!(outcome.pairs.len(), 1);

    let requests = server.join().unwrap();
    assert!(requests[0].to_ascii_lowercase().contains("x-api-key: sekret-123"));
}

#[test]
fn missing_auth_env_is_a_config_error() {
    let mut spec = http_spec("http://127.0.0.1:9/translate");
    spec.auth_header = Some("x-api-key".to_string());
    spec.auth_token_env = Some("GATEWAY_HTTP_TEST_TOKEN_UNSET".to_string());
    assert!(HttpBackend::from_spec(&spec).is_err());
}
