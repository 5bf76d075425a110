//! Blocking JSON client for the v1 API.

use burst_api::ErrorBody;
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::de::DeserializeOwned;
use serde_json::Value;
use ureq::Agent;

/// Everything but RFC 3986 unreserved characters.
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

/// Percent-encodes one path segment or query value.
pub fn enc(s: &str) -> String {
    utf8_percent_encode(s, SEGMENT).to_string()
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ClientError {
    /// The server answered with an error body.
    #[error("{status} {code}: {message}")]
    Api {
        status: u16,
        code: String,
        message: String,
    },
    /// No usable answer: connection failure, timeout, or unparseable body.
    #[error("transport error: {0}")]
    Transport(String),
}

impl ClientError {
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            ClientError::Transport(_) => None,
        }
    }
}

#[derive(Clone)]
pub struct Client {
    agent: Agent,
    base: String,
}

impl Client {
    pub fn new(base: &str) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(30)))
            .build()
            .into();
        Client {
            agent,
            base: base.trim_end_matches('/').to_string(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// Sends a request and decodes a 2xx body as `T`. Empty bodies decode
    /// from `null`, so `()` works for 204 responses.
    pub fn send<T: DeserializeOwned>(
        &self,
        method: &str,
        path: &str,
        token: Option<&str>,
        body: Option<&Value>,
    ) -> Result<T, ClientError> {
        let url = format!("{}{}", self.base, path);
        let mut req = ureq::http::Request::builder().method(method).uri(&url);
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let built = match body {
            Some(b) => req
                .header("Content-Type", "application/json")
                .body(b.to_string().into_bytes()),
            None => req.body(Vec::new()),
        }
        .map_err(|e| ClientError::Transport(format!("{method} {url}: {e}")))?;
        let resp = self
            .agent
            .run(built)
            .map_err(|e| ClientError::Transport(format!("{method} {url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .into_body()
            .read_to_string()
            .map_err(|e| ClientError::Transport(format!("{method} {url}: reading body: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(match serde_json::from_str::<ErrorBody>(&text) {
                Ok(e) => ClientError::Api {
                    status,
                    code: e.code,
                    message: e.message,
                },
                Err(_) if status >= 500 => {
                    ClientError::Transport(format!("{method} {url}: status {status}: {text}"))
                }
                Err(_) => ClientError::Api {
                    status,
                    code: format!("Http{status}"),
                    message: text,
                },
            });
        }
        let value = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text)
                .map_err(|e| ClientError::Transport(format!("{method} {url}: bad JSON: {e}")))?
        };
        serde_json::from_value(value)
            .map_err(|e| ClientError::Transport(format!("{method} {url}: unexpected body: {e}")))
    }

    /// Logs in and returns the session token.
    pub fn login(&self, handle: &str, password: &str) -> Result<String, ClientError> {
        let created: burst_api::dto::SessionCreated = self.send(
            "POST",
            "/v1/sessions",
            None,
            Some(&serde_json::json!({ "handle": handle, "password": password })),
        )?;
        Ok(created.token)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_channel_names_and_emoji() {
        assert_eq!(enc("#stanford-hci"), "%23stanford-hci");
        assert_eq!(enc("👍"), "%F0%9F%91%8D");
        assert_eq!(enc("a b/c"), "a%20b%2Fc");
    }
}
