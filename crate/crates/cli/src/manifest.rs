//! Run manifest: config echo, versions, timing, diagnostics and a SHA-256
//! checksum for every file in the output directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Format identifiers recorded in every manifest.
pub fn formats() -> Value {
    json!({
        "manifest": MANIFEST_VERSION,
        "config": "toml, one table per module",
        "snapshot": format!("NFPE binary v{}", levy_fpe::solver::io::FORMAT_VERSION),
        "snapshot_csv": "i,j,v,w,k,s,P",
        "path_csv": "t,k,s,density",
        "sweep_csv": levy_fpe::analysis::SWEEP_CSV_HEADER,
        "trajectories_csv": "path_id,t,k,s,absorbed",
    })
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Files under `root`, relative and sorted, excluding the manifest itself.
pub fn list_files(root: &Path) -> io::Result<Vec<PathBuf>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("walk stays under root").to_path_buf();
                if rel != Path::new(MANIFEST_NAME) {
                    out.push(rel);
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

/// Checksums of every artifact under `root`.
pub fn file_entries(root: &Path) -> io::Result<Vec<Value>> {
    list_files(root)?
        .into_iter()
        .map(|rel| {
            let full = root.join(&rel);
            Ok(json!({
                "path": rel.to_string_lossy().replace('\\', "/"),
                "bytes": fs::metadata(&full)?.len(),
                "sha256": sha256_file(&full)?,
            }))
        })
        .collect()
}

/// Writes `manifest.json`, filling in `files` and `formats`.
pub fn write_manifest(root: &Path, mut body: Value) -> io::Result<()> {
    body["manifest_version"] = json!(MANIFEST_VERSION);
    body["formats"] = formats();
    body["files"] = Value::Array(file_entries(root)?);
    let text = serde_json::to_string_pretty(&body).map_err(io::Error::other)?;
    fs::write(root.join(MANIFEST_NAME), text + "\n")
}

/// Files whose checksum no longer matches, or that are missing from the
/// manifest or from disk.
pub fn verify_manifest(root: &Path) -> io::Result<Vec<String>> {
    let text = fs::read_to_string(root.join(MANIFEST_NAME))?;
    let manifest: Value = serde_json::from_str(&text).map_err(io::Error::other)?;
    let listed: Vec<(String, String)> = manifest["files"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|f| Some((f["path"].as_str()?.to_string(), f["sha256"].as_str()?.to_string())))
                .collect()
        })
        .unwrap_or_default();
    let mut problems = Vec::new();
    for (path, sum) in &listed {
        match sha256_file(&root.join(path)) {
            Ok(s) if &s == sum => {}
            Ok(_) => problems.push(format!("checksum mismatch: {path}")),
            Err(_) => problems.push(format!("missing on disk: {path}")),
        }
    }
    for rel in list_files(root)? {
        let rel = rel.to_string_lossy().replace('\\', "/");
        if !listed.iter().any(|(p, _)| *p == rel) {
            problems.push(format!("not in manifest: {rel}"));
        }
    }
    Ok(problems)
}
