//! Text file formats: traces, function manifests, order files, caller
//! hints, curve CSVs, and the flat key-value config file.

use fnlayout_core::startup::EvaluationCurve;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate function name `{0}`")]
    DuplicateName(String),
}

/// One manifest row: `name<TAB>size<TAB>hot|cold<TAB>hex-hash,hex-hash,...`
/// The hash field may be empty or absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub name: String,
    pub size: u64,
    pub hot: bool,
    pub hashes: Vec<u64>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>, FormatError> {
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() < 3 {
            return Err(FormatError::Malformed {
                line,
                message: format!("expected name<TAB>size<TAB>hot|cold, got {} fields", fields.len()),
            });
        }
        let name = fields[0].trim().to_string();
        if name.is_empty() {
            return Err(FormatError::Malformed {
                line,
                message: "empty function name".into(),
            });
        }
        if !seen.insert(name.clone()) {
            return Err(FormatError::DuplicateName(name));
        }
        let size: u64 = fields[1].trim().parse().map_err(|_| FormatError::Malformed {
            line,
            message: format!("invalid size `{}`", fields[1]),
        })?;
        let hot = match fields[2].trim() {
            "hot" => true,
            "cold" => false,
            other => {
                return Err(FormatError::Malformed {
                    line,
                    message: format!("expected hot|cold, got `{other}`"),
                })
            }
        };
        let mut hashes = Vec::new();
        if let Some(field) = fields.get(3) {
            for part in field.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let h = u64::from_str_radix(part.trim_start_matches("0x"), 16).map_err(|_| {
                    FormatError::Malformed {
                        line,
                        message: format!("invalid hex hash `{part}`"),
                    }
                })?;
                hashes.push(h);
            }
        }
        records.push(ManifestRecord {
            name,
            size,
            hot,
            hashes,
        });
    }
    Ok(records)
}

pub fn render_manifest(records: &[ManifestRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let hashes: Vec<String> = r.hashes.iter().map(|h| format!("{h:x}")).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.name,
            r.size,
            if r.hot { "hot" } else { "cold" },
            hashes.join(",")
        ));
    }
    out
}

/// One trace per line, whitespace-separated function names; blank lines and
/// `#` comments ignored. A name may not repeat within one trace.
pub fn parse_traces(text: &str) -> Result<Vec<Vec<String>>, FormatError> {
    let mut traces = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut seen = std::collections::HashSet::new();
        let names: Vec<String> = trimmed.split_whitespace().map(str::to_string).collect();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(FormatError::Malformed {
                    line,
                    message: format!("function `{n}` appears twice in one trace"),
                });
            }
        }
        traces.push(names);
    }
    Ok(traces)
}

pub fn render_traces(traces: &[Vec<String>]) -> String {
    let mut out = String::new();
    for t in traces {
        out.push_str(&t.join(" "));
        out.push('\n');
    }
    out
}

/// Order file: names in output order, newline-terminated, no annotations.
pub fn render_order_file(names: &[String]) -> String {
    let mut out = String::with_capacity(names.iter().map(|n| n.len() + 1).sum());
    for n in names {
        out.push_str(n);
        out.push('\n');
    }
    out
}

pub fn parse_order_file(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Caller hints: `callee<whitespace>first_caller`, one per line.
pub fn parse_hints(text: &str) -> Result<Vec<(String, String)>, FormatError> {
    let mut hints = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(FormatError::Malformed {
                line: idx + 1,
                message: format!("expected `callee caller`, got {} fields", parts.len()),
            });
        }
        hints.push((parts[0].to_string(), parts[1].to_string()));
    }
    Ok(hints)
}

/// Evaluation curve as CSV `t,p_t` rows.
pub fn render_curve_csv(curve: &EvaluationCurve) -> String {
    let mut out = String::from("t,p_t\n");
    for (i, v) in curve.values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    out
}

/// Flat `key = value` config file mirroring the CLI flags; `#` comments and
/// blank lines ignored. Later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, FormatError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| FormatError::Malformed {
            line: idx + 1,
            message: "expected `key = value`".into(),
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}
