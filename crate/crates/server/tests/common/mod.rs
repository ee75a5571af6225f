#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use serde_json::{json, Value};

pub fn seed(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(file)
}

pub struct Reference {
    pub factors: PathBuf,
    pub catalog: PathBuf,
    pub tariffs: PathBuf,
    pub menus: PathBuf,
    pub tips: PathBuf,
}

impl Reference {
    pub fn seed() -> Self {
        Reference {
            factors: seed("factors.csv"),
            catalog: seed("catalog.csv"),
            tariffs: seed("tariffs.csv"),
            menus: seed("menus.json"),
            tips: seed("tips.json"),
        }
    }
}

pub struct Server {
    child: Child,
    pub base: String,
    pub data_dir: PathBuf,
    agent: ureq::Agent,
}

pub struct Resp {
    pub status: u16,
    pub body: String,
}

impl Resp {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("not json ({e}): {}", self.body))
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_string()
    }
}

impl Server {
    pub fn start(data_dir: &Path) -> Server {
        Self::start_with(data_dir, &Reference::seed())
    }

    pub fn start_with(data_dir: &Path, r: &Reference) -> Server {
        let mut child = Command::new(env!("CARGO_BIN_EXE_footprint"))
            .arg("--port")
            .arg("0")
            .arg("--data-dir")
            .arg(data_dir)
            .arg("--factors")
            .arg(&r.factors)
            .arg("--catalog")
            .arg(&r.catalog)
            .arg("--tariffs")
            .arg(&r.tariffs)
            .arg("--menus")
            .arg(&r.menus)
            .arg("--tips-config")
            .arg(&r.tips)
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn footprint");
        let stdout = child.stdout.take().unwrap();
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).unwrap();
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Server {
            child,
            base,
            data_dir: data_dir.to_path_buf(),
            agent,
        }
    }

    /// SIGKILL, no graceful shutdown.
    pub fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    fn finish(r: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Resp {
        let mut r = r.expect("request");
        Resp {
            status: r.status().as_u16(),
            body: r.body_mut().read_to_string().unwrap(),
        }
    }

    pub fn get(&self, path: &str, token: Option<&str>) -> Resp {
        let mut req = self.agent.get(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        Self::finish(req.call())
    }

    pub fn post(&self, path: &str, token: Option<&str>, body: &Value) -> Resp {
        let mut req = self.agent.post(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        Self::finish(req.send_json(body))
    }

    pub fn post_empty(&self, path: &str, token: Option<&str>) -> Resp {
        let mut req = self.agent.post(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        Self::finish(req.send_empty())
    }

    pub fn patch(&self, path: &str, token: Option<&str>, body: &Value) -> Resp {
        let mut req = self.agent.patch(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        Self::finish(req.send_json(body))
    }

    pub fn delete(&self, path: &str, token: Option<&str>) -> Resp {
        let mut req = self.agent.delete(format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        Self::finish(req.call())
    }

    pub fn signup(&self, user: &str, region: &str) -> String {
        let r = self.post(
            "/v1/users",
            None,
            &json!({"user_id": user, "display_name": user.to_uppercase(), "region": region, "password": "password-123"}),
        );
        assert_eq!(r.status, 201, "{}", r.body);
        r.json()["token"].as_str().unwrap().to_string()
    }

    pub fn log_path(&self, file: &str) -> PathBuf {
        self.data_dir.join(file)
    }

    pub fn log_lines(&self, file: &str) -> usize {
        std::fs::read_to_string(self.log_path(file))
            .map(|s| s.lines().count())
            .unwrap_or(0)
    }

    pub fn events(&self) -> usize {
        self.log_lines("events.jsonl")
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// GS1 mod-10 check digit computed right to left: the digit next to the
/// check position is weighted 3.
pub fn oracle_check_digit(first12: &str) -> u32 {
    let sum: u32 = first12
        .chars()
        .rev()
        .enumerate()
        .map(|(i, c)| c.to_digit(10).unwrap() * if i % 2 == 0 { 3 } else { 1 })
        .sum();
    (10 - sum % 10) % 10
}

pub fn with_check(first12: &str) -> String {
    format!("{first12}{}", oracle_check_digit(first12))
}
