//! Optional text-generation gateway for recommendation enrichment.
//!
//! The gateway is any HTTPS endpoint that accepts `{"prompt": ...}` and
//! answers with `{"text": ...}` (a bare JSON string or plain text body is
//! also accepted). Failures never propagate: callers get the deterministic
//! template with `generated = false`.

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use super::{KnowledgeChunk, Recommendation};

pub const GATEWAY_URL_ENV: &str = "GATEWAY_URL";
pub const GATEWAY_KEY_ENV: &str = "GATEWAY_KEY";

#[derive(Debug, Error, PartialEq)]
pub enum GatewayError {
    #[error("gateway request failed: {0}")]
    Transport(String),
    #[error("gateway returned HTTP {0}")]
    Status(u16),
    #[error("gateway returned an empty response")]
    Empty,
}

pub trait TextGenerator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone)]
pub struct HttpGateway {
    pub url: String,
    pub key: Option<String>,
    pub timeout: Duration,
}

impl HttpGateway {
    pub fn new(url: impl Into<String>, key: Option<String>) -> Self {
        Self {
            url: url.into(),
            key,
            timeout: Duration::from_secs(10),
        }
    }

    /// Configured from `GATEWAY_URL` / `GATEWAY_KEY`; `None` when no URL is set.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(GATEWAY_URL_ENV).ok().filter(|u| !u.trim().is_empty())?;
        let key = std::env::var(GATEWAY_KEY_ENV).ok().filter(|k| !k.is_empty());
        Some(Self::new(url, key))
    }
}

fn extract_text(body: &str) -> Option<String> {
    let text = match serde_json::from_str::<serde_json::Value>(body) {
        Ok(serde_json::Value::Object(map)) => map.get("text").and_then(|t| t.as_str()).map(str::to_string),
        Ok(serde_json::Value::String(s)) => Some(s),
        _ => Some(body.to_string()),
    }?;
    let trimmed = text.trim();
    (!trimmed.is_empty()).then(|| trimmed.to_string())
}

impl TextGenerator for HttpGateway {
    fn generate(&self, prompt: &str) -> Result<String, GatewayError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let mut req = agent.post(&self.url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(serde_json::json!({ "prompt": prompt }))
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) => GatewayError::Status(code),
                other => GatewayError::Transport(other.to_string()),
            })?;
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        extract_text(&body).ok_or(GatewayError::Empty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnrichedText {
    pub text: String,
    pub generated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Prompt sent to the gateway: the retrieved reference text followed by the
/// deterministic recommendation.
pub fn build_prompt(rec: &Recommendation, chunk: &KnowledgeChunk) -> String {
    format!(
        "Reference document:\n{}\n\nSite conditions: humidity {} mm, soil {}.\n\n\
         Draft recommendation:\n{}\n\
         Rewrite the draft as planting guidance for the site. Recommend only the listed species.",
        chunk.body, rec.key.humidity_mm, rec.key.soil_type, rec.rendered_text
    )
}

/// Enrich a recommendation through `gateway`, falling back to the template.
pub fn generate_via_gateway(
    rec: &Recommendation,
    chunk: &KnowledgeChunk,
    gateway: Option<&dyn TextGenerator>,
) -> EnrichedText {
    let Some(gw) = gateway else {
        return EnrichedText {
            text: rec.rendered_text.clone(),
            generated: false,
            warning: None,
        };
    };
    match gw.generate(&build_prompt(rec, chunk)) {
        Ok(text) => EnrichedText {
            text,
            generated: true,
            warning: None,
        },
        Err(e) => {
            log::warn!("falling back to template recommendation: {e}");
            EnrichedText {
                text: rec.rendered_text.clone(),
                generated: false,
                warning: Some(e.to_string()),
            }
        }
    }
}
