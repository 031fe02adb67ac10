//! The external text-service client against a local mock server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::Command;
use std::sync::{Arc, Mutex};

use darkbanner::cli::{Artifact, CentroidFile};
use darkbanner::text::{score_sentiment, translate, ExternalConfig, Lexicon, TextProvider};
use darkbanner::Error;

#[derive(Clone, Copy)]
enum Mode {
    /// translate: "en:" + text; sentiment: (0.5, 1.25)
    Normal,
    /// sentiment score out of range
    BadScore,
    /// a body that is not JSON
    Garbage,
}

struct Mock {
    url: String,
    seen: Arc<Mutex<Vec<(Option<String>, serde_json::Value)>>>,
}

fn read_request(stream: &mut BufReader<TcpStream>) -> Option<(Option<String>, serde_json::Value)> {
    let mut len = 0;
    let mut auth = None;
    let mut first = String::new();
    if stream.read_line(&mut first).ok()? == 0 {
        return None;
    }
    loop {
        let mut line = String::new();
        stream.read_line(&mut line).ok()?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let (k, v) = line.split_once(':')?;
        match k.to_ascii_lowercase().as_str() {
            "content-length" => len = v.trim().parse().ok()?,
            "authorization" => auth = Some(v.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0; len];
    stream.read_exact(&mut body).ok()?;
    Some((auth, serde_json::from_slice(&body).ok()?))
}

fn serve(stream: TcpStream, mode: Mode, seen: Arc<Mutex<Vec<(Option<String>, serde_json::Value)>>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    while let Some((auth, req)) = read_request(&mut reader) {
        seen.lock().unwrap().push((auth, req.clone()));
        let text = req["text"].as_str().unwrap_or("");
        let body = match (mode, req["op"].as_str()) {
            (Mode::Garbage, _) => "not json".to_string(),
            (_, Some("translate")) => serde_json::json!({ "text": format!("en:{text}") }).to_string(),
            (Mode::BadScore, _) => r#"{"score": 3.0, "magnitude": 1.0}"#.to_string(),
            _ => r#"{"score": 0.5, "magnitude": 1.25}"#.to_string(),
        };
        let resp = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        );
        if out.write_all(resp.as_bytes()).is_err() {
            return;
        }
    }
}

fn mock(mode: Mode) -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/text", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let s = seen.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let s = s.clone();
            std::thread::spawn(move || serve(stream, mode, s));
        }
    });
    Mock { url, seen }
}

fn provider(url: &str, key: Option<&str>) -> TextProvider {
    let mut cfg = ExternalConfig::new(url);
    cfg.key = key.map(str::to_string);
    cfg.retries = 0;
    cfg.timeout_ms = 2000;
    TextProvider::External(cfg)
}

#[test]
fn translation_goes_through_the_service_with_the_key() {
    let m = mock(Mode::Normal);
    let p = provider(&m.url, Some("k123"));
    assert_eq!(translate("Læs mere", &p).unwrap(), "en:Læs mere");
    let seen = m.seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].0.as_deref(), Some("Bearer k123"));
    assert_eq!(seen[0].1, serde_json::json!({"op": "translate", "text": "Læs mere"}));
}

#[test]
fn empty_text_never_reaches_the_service() {
    let m = mock(Mode::Normal);
    let p = provider(&m.url, None);
    assert_eq!(translate("", &p).unwrap(), "");
    let s = score_sentiment("  ", &Lexicon::shipped(), &p).unwrap();
    assert_eq!((s.score, s.magnitude), (0.0, 0.0));
    assert!(m.seen.lock().unwrap().is_empty());
}

#[test]
fn sentiment_comes_from_the_service() {
    let m = mock(Mode::Normal);
    let s = score_sentiment("terrible", &Lexicon::shipped(), &provider(&m.url, None)).unwrap();
    assert_eq!((s.score, s.magnitude), (0.5, 1.25));
    assert_eq!(m.seen.lock().unwrap()[0].0, None);
}

#[test]
fn out_of_range_sentiment_is_rejected() {
    let m = mock(Mode::BadScore);
    let r = score_sentiment("ok", &Lexicon::shipped(), &provider(&m.url, None));
    assert!(matches!(r, Err(Error::ProviderUnavailable(_))));
}

#[test]
fn malformed_response_is_unavailable_after_retries() {
    let m = mock(Mode::Garbage);
    let mut cfg = ExternalConfig::new(&m.url);
    cfg.retries = 2;
    let r = translate("hello", &TextProvider::External(cfg));
    assert!(matches!(r, Err(Error::ProviderUnavailable(_))));
    assert_eq!(m.seen.lock().unwrap().len(), 3);
}

const BIN: &str = env!("CARGO_BIN_EXE_darkbanner");

fn centroids(dir: &std::path::Path) -> CentroidFile {
    let text = std::fs::read_to_string(dir.join("o/centroids.json")).unwrap();
    serde_json::from_str::<Artifact<CentroidFile>>(&text).unwrap().content
}

#[test]
fn cli_reads_endpoint_and_key_from_the_environment() {
    let m = mock(Mode::Normal);
    let w = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        Command::new(BIN)
            .current_dir(w.path())
            .args(args)
            .env("DARKBANNER_TEXT_ENDPOINT", &m.url)
            .env("DARKBANNER_TEXT_KEY", "envkey")
            .output()
            .unwrap()
    };
    assert!(run(&["synth", "--out", "raw.csv", "--size", "40"]).status.success());
    assert!(run(&["clean", "--input", "raw.csv", "--out", "o"]).status.success());
    let o = run(&["cluster", "--out", "o", "--provider", "external"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!centroids(w.path()).provider_fallback_used);
    let clusters = std::fs::read_to_string(w.path().join("o/clusters.csv")).unwrap();
    assert!(clusters.lines().skip(2).all(|l| l.contains("en:")), "{clusters}");
    let seen = m.seen.lock().unwrap();
    assert_eq!(seen.len(), 40);
    assert!(seen.iter().all(|(auth, _)| auth.as_deref() == Some("Bearer envkey")));
}

#[test]
fn cli_falls_back_to_offline_only_when_asked() {
    let w = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        Command::new(BIN)
            .current_dir(w.path())
            .args(args)
            .env("DARKBANNER_TEXT_ENDPOINT", "http://127.0.0.1:9/text")
            .env_remove("DARKBANNER_TEXT_KEY")
            .output()
            .unwrap()
    };
    assert!(run(&["synth", "--out", "raw.csv", "--size", "40"]).status.success());
    assert!(run(&["clean", "--input", "raw.csv", "--out", "o"]).status.success());
    let o = run(&["cluster", "--out", "o", "--provider", "external"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unavailable"));
    let o = run(&["cluster", "--out", "o", "--provider", "external", "--provider-fallback"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(centroids(w.path()).provider_fallback_used);
}
