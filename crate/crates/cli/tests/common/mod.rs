#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn kgcl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgcl"))
        .current_dir(dir)
        .env_remove("KGCL_OUT_DIR")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("spawn kgcl")
}

/// Runs and insists on success.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = kgcl(dir, args);
    assert!(
        out.status.success(),
        "kgcl {args:?} failed with {:?}:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(String::from)
        .collect()
}

/// A small planted dataset with a fast config; returns the config path.
pub fn planted(dir: &Path, users: usize) -> PathBuf {
    let users = users.to_string();
    ok(dir, &["synth", "--dir", "data", "--users", &users]);
    let conf = dir.join("data/synth.conf");
    let mut text = fs::read_to_string(&conf).unwrap();
    text.push_str("epochs = 3\nbatch_size = 128\n");
    fs::write(&conf, text).unwrap();
    conf
}

/// Runs prepare, sample-pairs, train and evaluate with `extra` flags.
pub fn pipeline(dir: &Path, conf: &Path, extra: &[&str]) {
    let conf = conf.to_str().unwrap();
    for cmd in ["prepare", "sample-pairs", "train", "evaluate"] {
        let mut args = vec!["-c", conf];
        args.extend_from_slice(extra);
        args.push(cmd);
        ok(dir, &args);
    }
}

/// Every regular file under `dir`, relative path and bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
