use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use chartens::sampler::{vlm_sample, SamplerConfig, VlmSampler};
use chartens::{Sampler, SamplerError};

const KEY_VAR: &str = "CHARTENS_TEST_API_KEY";
const PNG: &[u8] = b"\x89PNG\r\n\x1a\nfake image body";

struct Request {
    headers: Vec<String>,
    body: String,
}

/// Serves the scripted `(status, body)` replies in order, one per connection.
fn mock_server(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Request>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (status, body) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let line = line.trim_end().to_string();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
                headers.push(line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Request {
                headers,
                body: String::from_utf8_lossy(&buf).into_owned(),
            });
            let mut stream = stream;
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (url, seen)
}

fn completion(text: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 120, "completion_tokens": 30},
    })
    .to_string()
}

fn config(url: &str) -> SamplerConfig {
    std::env::set_var(KEY_VAR, "secret-token");
    SamplerConfig {
        endpoint_url: url.to_string(),
        model_id: "test-model".to_string(),
        temperature: 0.7,
        api_key_env: KEY_VAR.to_string(),
        request_timeout_secs: 5.0,
        max_retries: 3,
        backoff_base_secs: 0.001,
        ..Default::default()
    }
}

#[test]
fn happy_path_sends_prompt_image_and_token() {
    let (url, seen) = mock_server(vec![(200, completion("```tsv\n\tA\n2020\t1\n```"))]);
    let text = vlm_sample(PNG, &config(&url)).unwrap();
    assert_eq!(text, "```tsv\n\tA\n2020\t1\n```");

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert!(seen[0]
        .headers
        .iter()
        .any(|h| h.eq_ignore_ascii_case("authorization: bearer secret-token")));
    let body: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.7);
    let content = &body["messages"][0]["content"];
    assert_eq!(content[0]["text"], chartens::sampler::DEFAULT_PROMPT);
    assert!(content[1]["image_url"]["url"].as_str().unwrap().starts_with("data:image/png;base64,"));
}

#[test]
fn rate_limits_are_retried() {
    let (url, seen) = mock_server(vec![
        (429, "{}".to_string()),
        (429, "{}".to_string()),
        (200, completion("ok")),
    ]);
    let sampler = VlmSampler::new(PNG, config(&url)).unwrap();
    assert_eq!(sampler.sample(0).unwrap(), "ok");
    assert_eq!(seen.lock().unwrap().len(), 3);
    let usage = sampler.usage();
    assert_eq!((usage.requests, usage.prompt_tokens, usage.completion_tokens), (3, 120, 30));
}

#[test]
fn retries_are_bounded() {
    let replies = (0..3).map(|_| (429, "{}".to_string())).collect();
    let (url, seen) = mock_server(replies);
    let cfg = SamplerConfig { max_retries: 2, ..config(&url) };
    assert_eq!(vlm_sample(PNG, &cfg), Err(SamplerError::RateLimited(3)));
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn auth_failure_is_not_retried() {
    let (url, seen) = mock_server(vec![(401, "{}".to_string()), (200, completion("unused"))]);
    assert_eq!(vlm_sample(PNG, &config(&url)), Err(SamplerError::Auth(401)));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn server_errors_are_retried() {
    let (url, _) = mock_server(vec![(503, "busy".to_string()), (200, completion("recovered"))]);
    assert_eq!(vlm_sample(PNG, &config(&url)).unwrap(), "recovered");
}

#[test]
fn malformed_replies_are_reported() {
    let (url, _) = mock_server(vec![(200, "not json".to_string())]);
    assert!(matches!(vlm_sample(PNG, &config(&url)), Err(SamplerError::MalformedResponse(_))));

    let (url, _) = mock_server(vec![(200, r#"{"choices": []}"#.to_string())]);
    assert!(matches!(vlm_sample(PNG, &config(&url)), Err(SamplerError::MalformedResponse(_))));
}

#[test]
fn content_parts_are_concatenated() {
    let body = serde_json::json!({
        "choices": [{"message": {"content": [
            {"type": "text", "text": "```tsv\n"},
            {"type": "text", "text": "\tA\n```"},
        ]}}],
    });
    let (url, _) = mock_server(vec![(200, body.to_string())]);
    assert_eq!(vlm_sample(PNG, &config(&url)).unwrap(), "```tsv\n\tA\n```");
}

#[test]
fn missing_key_and_bad_image_fail_before_any_request() {
    let cfg = SamplerConfig {
        api_key_env: "CHARTENS_TEST_UNSET_KEY".to_string(),
        ..config("http://127.0.0.1:9/")
    };
    assert!(matches!(vlm_sample(PNG, &cfg), Err(SamplerError::MissingCredentials(_))));
    let cfg = config("http://127.0.0.1:9/");
    assert!(matches!(vlm_sample(b"plain text", &cfg), Err(SamplerError::Image(_))));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let cfg = SamplerConfig { max_retries: 0, ..config("http://127.0.0.1:9/") };
    assert!(matches!(vlm_sample(PNG, &cfg), Err(SamplerError::Transport(_))));
}
