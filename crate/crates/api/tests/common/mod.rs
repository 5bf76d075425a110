#![allow(dead_code)]

use std::path::Path;

use burst_api::{spawn, Config, ServerHandle};
use serde_json::{json, Value};
use ureq::Agent;

pub fn config(dir: &Path, onboarding: bool) -> Config {
    let mut cfg = Config {
        listen_addr: "127.0.0.1:0".into(),
        data_dir: dir.to_path_buf(),
        clock: burst_api::config::ClockConfig::Logical,
        ..Config::default()
    };
    cfg.onboarding.enabled = onboarding;
    cfg
}

pub fn start(dir: &Path, onboarding: bool) -> ServerHandle {
    spawn(config(dir, onboarding)).expect("server starts")
}

#[derive(Clone)]
pub struct Client {
    agent: Agent,
    base: String,
    pub token: Option<String>,
}

impl Client {
    pub fn new(base: &str) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Client {
            agent,
            base: base.to_string(),
            token: None,
        }
    }

    pub fn call(&self, method: &str, path: &str, body: Option<Value>) -> (u16, Value) {
        self.call_with(method, path, body, &[])
    }

    pub fn call_with(
        &self,
        method: &str,
        path: &str,
        body: Option<Value>,
        headers: &[(&str, &str)],
    ) -> (u16, Value) {
        let (status, text) = self.raw(method, path, body, headers);
        let v = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        };
        (status, v)
    }

    pub fn raw(
        &self,
        method: &str,
        path: &str,
        body: Option<Value>,
        headers: &[(&str, &str)],
    ) -> (u16, String) {
        let url = format!("{}{}", self.base, path);
        let mut req = ureq::http::Request::builder().method(method).uri(&url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let resp = match body {
            Some(b) => self.agent.run(
                req.header("Content-Type", "application/json")
                    .body(b.to_string())
                    .unwrap(),
            ),
            None => self.agent.run(req.body(()).unwrap()),
        }
        .expect("transport");
        let status = resp.status().as_u16();
        let text = resp.into_body().read_to_string().unwrap();
        (status, text)
    }

    pub fn login(&self, handle: &str) -> Client {
        let (status, v) = self.call(
            "POST",
            "/v1/sessions",
            Some(json!({"handle": handle, "password": "pw"})),
        );
        assert_eq!(status, 201, "{v}");
        Client {
            token: Some(v["token"].as_str().unwrap().to_string()),
            ..self.clone()
        }
    }

    pub fn signup(&self, handle: &str) -> Client {
        let (status, v) = self.call(
            "POST",
            "/v1/users",
            Some(json!({"handle": handle, "password": "pw"})),
        );
        assert_eq!(status, 201, "{v}");
        self.login(handle)
    }

    pub fn ok(&self, method: &str, path: &str, body: Option<Value>) -> Value {
        let (status, v) = self.call(method, path, body);
        assert!(
            (200..300).contains(&status),
            "{method} {path} -> {status} {v}"
        );
        v
    }
}

pub fn enc(s: &str) -> String {
    s.replace('#', "%23")
}
