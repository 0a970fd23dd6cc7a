//! Starts the HTTP service on a free local port, exercises every endpoint
//! with a plain HTTP client, then shuts down.
//!
//! ```bash
//! cargo run -p kwame --example serve
//! ```

use std::time::Duration;

use kwame::corpus::{ingest_lesson, AnswerBank};
use kwame::qa_engine::{Engine, EngineHandle};
use kwame::retrieval::{Backend, BuildOptions};
use kwame::service::{read_interaction_log, Service};
use kwame::Lang;
use serde_json::{json, Value};

const EN: &str = include_str!("../data/lesson1_en.md");
const FR: &str = include_str!("../data/lesson1_fr.md");

fn call(agent: &ureq::Agent, method: &str, url: &str, body: Option<Value>) -> anyhow::Result<(u16, Value)> {
    let mut resp = match body {
        Some(b) => agent.post(url).send_json(b)?,
        None if method == "GET" => agent.get(url).call()?,
        None => anyhow::bail!("unsupported call"),
    };
    Ok((resp.status().as_u16(), resp.body_mut().read_json()?))
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let mut paragraphs = ingest_lesson(EN.as_bytes(), Lang::En, 1)?;
    paragraphs.extend(ingest_lesson(FR.as_bytes(), Lang::Fr, 1)?);
    let engine = Engine::builder(AnswerBank::new(paragraphs)?)
        .build_all(Backend::Tfidf, &BuildOptions::default())?
        .default_threshold(Some(0.1))
        .build();

    let log_path = std::env::temp_dir().join(format!("kwame-serve-{}.jsonl", std::process::id()));
    let service = Service::bind(EngineHandle::new(engine), ([127, 0, 0, 1], 0).into(), Some(&log_path), 1000).await?;
    let base = format!("http://{}", service.local_addr()?);
    println!("listening on {base}");
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(service.run(async {
        let _ = stopped.await;
    }));

    let client = tokio::task::spawn_blocking(move || -> anyhow::Result<()> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(10)))
            .build()
            .into();
        let (s, health) = call(&agent, "GET", &format!("{base}/v1/health"), None)?;
        println!("GET /v1/health -> {s} {health}");

        let (s, answer) = call(&agent, "POST", &format!("{base}/v1/ask"), Some(json!({"question": "Que fait la fonction fill() ?", "top_k": 2})))?;
        println!("POST /v1/ask -> {s} lang={} top={}", answer["lang_detected"], answer["answers"][0]["id"]);

        let id = answer["interaction_id"].clone();
        let (s, ack) = call(&agent, "POST", &format!("{base}/v1/feedback"), Some(json!({"interaction_id": id, "vote": "up"})))?;
        println!("POST /v1/feedback -> {s} {ack}");

        let (s, err) = call(&agent, "POST", &format!("{base}/v1/ask"), Some(json!({"question": "hello", "lang": "de"})))?;
        println!("POST /v1/ask lang=de -> {s} {err}");
        Ok(())
    });
    client.await??;

    let _ = stop.send(());
    server.await??;
    for rec in read_interaction_log(&log_path)? {
        println!("logged {:?} answered={} latency={:.2}ms feedback={:?}", rec.question, rec.answered, rec.latency_ms, rec.feedback);
    }
    std::fs::remove_file(&log_path)?;
    Ok(())
}
