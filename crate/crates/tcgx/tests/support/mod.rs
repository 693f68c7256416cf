//! Helpers shared by the CLI, service and acceptance suites.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use sha2::{Digest, Sha256};
use tcgx::config::ProfileConfig;
use tcgx::service::{router, AppState};
use tower::ServiceExt;

pub struct Output {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl Output {
    pub fn stdout_str(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }
}

/// Runs the `tcgx` binary with a clean TCGX_* environment in `cwd`.
pub fn tcgx(cwd: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tcgx"));
    cmd.current_dir(cwd).args(args);
    for var in ["TCGX_KEYRING", "TCGX_PROFILE", "TCGX_PROFILES", "TCGX_LIBRARY"] {
        cmd.env_remove(var);
    }
    let out = cmd.output().expect("run tcgx");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// SHA-256 over every file path and content below `dir`, in sorted order.
pub fn tree_hash(dir: &Path) -> String {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out);
            } else {
                out.push(p);
            }
        }
    }
    let mut files = Vec::new();
    walk(dir, &mut files);
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(dir).unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        h.update(std::fs::read(&f).unwrap());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

pub struct Service {
    pub state: AppState,
    pub store: PathBuf,
    pub library: PathBuf,
    pub keyring: PathBuf,
}

impl Service {
    /// A service over `root/drawings`, `root/prototypes`, `root/keys`.
    pub fn new(root: &Path, profile: Option<&str>, with_keyring: bool) -> Self {
        let store = root.join("drawings");
        let library = root.join("prototypes");
        let keyring = root.join("keys");
        std::fs::create_dir_all(&library).unwrap();
        std::fs::create_dir_all(&keyring).unwrap();
        let state = AppState::new(
            store.clone(),
            library.clone(),
            with_keyring.then(|| keyring.clone()),
            ProfileConfig::builtin(),
            profile.map(str::to_string),
        )
        .unwrap();
        Self {
            state,
            store,
            library,
            keyring,
        }
    }

    pub async fn call(
        &self,
        method: &str,
        uri: &str,
        body: Option<serde_json::Value>,
        profile: Option<&str>,
    ) -> (StatusCode, Vec<u8>, String) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(p) = profile {
            req = req.header("x-profile", p.as_bytes());
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(serde_json::to_vec(&b).unwrap())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = router(self.state.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let ctype = resp
            .headers()
            .get("content-type")
            .map(|v| v.to_str().unwrap_or("").to_string())
            .unwrap_or_default();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes, ctype)
    }

    pub async fn json(
        &self,
        method: &str,
        uri: &str,
        body: Option<serde_json::Value>,
        profile: Option<&str>,
    ) -> (StatusCode, serde_json::Value) {
        let (status, bytes, _) = self.call(method, uri, body, profile).await;
        let value = serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null);
        (status, value)
    }
}
