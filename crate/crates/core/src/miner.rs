//! Main-branch history extraction from a local git repository.
//!
//! History is read with a single pinned `git log` invocation ([`GIT_LOG_ARGS`]):
//! first-parent traversal (merges contribute their diff against the first
//! parent only), rename detection disabled so a rename surfaces as a delete
//! plus an add, oldest commit first, and one `#<hash>|<author time>|<author>`
//! header per commit followed by its name-status lines.

use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use glob::{MatchOptions, Pattern};
use log::warn;

use crate::error::{Error, Result};
use crate::eventlog::EventRecord;
use crate::model::ChangeKind;

/// Arguments passed to `git` (after `-C <repo>`), followed by the branch name.
pub const GIT_LOG_ARGS: &[&str] = &[
    "-c",
    "core.quotePath=false",
    "log",
    "--first-parent",
    "--diff-merges=first-parent",
    "--no-renames",
    "--reverse",
    "--name-status",
    "--format=#%H|%at|%an",
];

#[derive(Debug, Clone)]
pub struct MineOptions {
    pub repo_path: PathBuf,
    /// Branch or revision to walk; `None` means the checked-out `HEAD`.
    pub branch: Option<String>,
    /// Only paths matching this glob are emitted.
    pub path_glob: Option<String>,
    /// Prepended as `<prefix>:` to every path (multi-repository datasets).
    pub path_prefix: Option<String>,
}

impl MineOptions {
    pub fn new(repo_path: impl Into<PathBuf>) -> Self {
        MineOptions {
            repo_path: repo_path.into(),
            branch: None,
            path_glob: None,
            path_prefix: None,
        }
    }

    /// Renames are never followed.
    pub fn follow_renames(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLog {
    pub events: Vec<EventRecord>,
    /// File lines skipped because they could not be parsed.
    pub skipped_lines: usize,
}

struct CommitHeader {
    hash: String,
    ts: i64,
    author: String,
}

fn parse_header(line: &str, line_no: usize) -> Result<CommitHeader> {
    let bad = |reason: &str| Error::LogFormat {
        line: line_no,
        reason: reason.to_owned(),
    };
    let body = line.strip_prefix('#').ok_or_else(|| bad("missing `#`"))?;
    let mut parts = body.splitn(3, '|');
    let hash = parts.next().unwrap_or_default();
    if hash.len() != 40 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(bad("commit id is not 40 hex characters"));
    }
    let ts = parts
        .next()
        .and_then(|t| t.parse::<i64>().ok())
        .ok_or_else(|| bad("missing or non-integer timestamp"))?;
    let author = parts.next().ok_or_else(|| bad("missing author"))?;
    Ok(CommitHeader {
        hash: hash.to_ascii_lowercase(),
        ts,
        author: author.to_owned(),
    })
}

/// Undoes git's C-style quoting of unusual path names.
fn unquote_path(raw: &str) -> Option<String> {
    let Some(inner) = raw.strip_prefix('"').and_then(|s| s.strip_suffix('"')) else {
        return Some(raw.to_owned());
    };
    let mut bytes = Vec::with_capacity(inner.len());
    let mut it = inner.bytes().peekable();
    while let Some(b) = it.next() {
        if b != b'\\' {
            bytes.push(b);
            continue;
        }
        let esc = it.next()?;
        let v = match esc {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'a' => 0x07,
            b'b' => 0x08,
            b'f' => 0x0c,
            b'v' => 0x0b,
            b'"' => b'"',
            b'\\' => b'\\',
            b'0'..=b'7' => {
                let mut v = u32::from(esc - b'0');
                for _ in 0..2 {
                    let d = it.next()?;
                    if !(b'0'..=b'7').contains(&d) {
                        return None;
                    }
                    v = v * 8 + u32::from(d - b'0');
                }
                u8::try_from(v).ok()?
            }
            _ => return None,
        };
        bytes.push(v);
    }
    String::from_utf8(bytes).ok()
}

/// Parses the pinned `git log` output format into events.
///
/// A malformed commit header aborts with its line number; a malformed file line is
/// skipped and counted. Rename or copy status lines cannot occur under the pinned
/// flags, so they are reported as format errors.
pub fn parse_log_stream<R: BufRead>(reader: R) -> Result<ParsedLog> {
    let mut out = ParsedLog::default();
    let mut current: Option<CommitHeader> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            current = Some(parse_header(line, line_no)?);
            continue;
        }
        let Some(commit) = current.as_ref() else {
            return Err(Error::LogFormat {
                line: line_no,
                reason: "file line before any commit header".into(),
            });
        };
        let mut fields = line.split('\t');
        let status = fields.next().unwrap_or_default();
        if status.starts_with('R') || status.starts_with('C') {
            return Err(Error::LogFormat {
                line: line_no,
                reason: format!("unexpected `{status}` status; rename detection must be disabled"),
            });
        }
        let path = match (fields.next(), fields.next()) {
            (Some(p), None) if !status.is_empty() && status.bytes().all(|b| b.is_ascii_alphanumeric()) => {
                unquote_path(p).filter(|p| !p.is_empty())
            }
            _ => None,
        };
        let Some(path) = path else {
            warn!("skipping malformed log line {line_no}: {line:?}");
            out.skipped_lines += 1;
            continue;
        };
        out.events.push(EventRecord {
            path,
            ts: commit.ts,
            commit: commit.hash.clone(),
            author: commit.author.clone(),
            kind: ChangeKind::from_status(status),
            metrics: Default::default(),
        });
    }
    Ok(out)
}

/// Orders events by `(ts, commit, path)`, the canonical event-log order.
pub fn sort_events(events: &mut [EventRecord]) {
    events.sort_by(|a, b| {
        a.ts.cmp(&b.ts)
            .then_with(|| a.commit.cmp(&b.commit))
            .then_with(|| a.path.cmp(&b.path))
    });
}

fn git_output_error(what: &str, stderr: &[u8]) -> Error {
    Error::Git(format!("{what}: {}", String::from_utf8_lossy(stderr).trim()))
}

/// Runs the pinned log invocation and returns the repository's event log.
pub fn mine_repository(opts: &MineOptions) -> Result<ParsedLog> {
    if !opts.repo_path.is_dir() {
        return Err(Error::Git(format!("{} is not a directory", opts.repo_path.display())));
    }
    let probe = Command::new("git")
        .arg("-C")
        .arg(&opts.repo_path)
        .args(["rev-parse", "--git-dir"])
        .output()?;
    if !probe.status.success() {
        return Err(git_output_error("not a git repository", &probe.stderr));
    }

    let pattern = opts
        .path_glob
        .as_deref()
        .map(Pattern::new)
        .transpose()
        .map_err(|e| Error::InvalidParam {
            key: "glob".into(),
            value: e.to_string(),
        })?;
    let match_opts = MatchOptions {
        case_sensitive: true,
        require_literal_separator: true,
        require_literal_leading_dot: false,
    };

    let branch = opts.branch.as_deref().unwrap_or("HEAD");
    let mut child = Command::new("git")
        .arg("-C")
        .arg(&opts.repo_path)
        .args(GIT_LOG_ARGS)
        .arg(branch)
        .arg("--")
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let stdout = child.stdout.take().expect("stdout is piped");
    let parsed = parse_log_stream(BufReader::new(stdout));
    let output = child.wait_with_output()?;
    if !output.status.success() {
        return Err(git_output_error("git log failed", &output.stderr));
    }
    let mut parsed = parsed?;

    if let Some(pattern) = &pattern {
        parsed.events.retain(|e| pattern.matches_with(&e.path, match_opts));
    }
    if let Some(prefix) = &opts.path_prefix {
        for e in &mut parsed.events {
            e.path = format!("{prefix}:{}", e.path);
        }
    }
    sort_events(&mut parsed.events);
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    const H1: &str = "0123456789abcdef0123456789abcdef01234567";

    #[test]
    fn header_and_add_line() {
        let text = format!("#{H1}|1399530161|Alice\n\nA\ta.txt\n");
        let log = parse_log_stream(text.as_bytes()).unwrap();
        assert_eq!(log.events.len(), 1);
        let e = &log.events[0];
        assert_eq!(
            (e.path.as_str(), e.ts, e.author.as_str(), e.kind),
            ("a.txt", 1_399_530_161, "Alice", ChangeKind::Added)
        );
        assert_eq!(e.commit, H1);
    }

    #[test]
    fn empty_stream() {
        assert_eq!(parse_log_stream(&b""[..]).unwrap(), ParsedLog::default());
    }

    #[test]
    fn rename_line_is_format_error() {
        let text = format!("#{H1}|1|A\nR100\told\tnew\n");
        match parse_log_stream(text.as_bytes()) {
            Err(Error::LogFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header_aborts_with_line() {
        let text = format!("#{H1}|1|A\nM\tx\n#nothex|1|B\n");
        match parse_log_stream(text.as_bytes()) {
            Err(Error::LogFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = format!("#{H1}|soon|A\n");
        assert!(parse_log_stream(text.as_bytes()).is_err());
    }

    #[test]
    fn malformed_file_lines_are_skipped() {
        let text = format!("#{H1}|5|Bob|Builder\nM\ta\nno-tab-here\nM\t\nT\tlink\n");
        let log = parse_log_stream(text.as_bytes()).unwrap();
        assert_eq!(log.skipped_lines, 2);
        assert_eq!(log.events.len(), 2);
        assert_eq!(log.events[0].author, "Bob|Builder");
        assert_eq!(log.events[1].kind, ChangeKind::Modified);
    }

    #[test]
    fn quoted_paths() {
        assert_eq!(unquote_path("\"a\\tb\"").as_deref(), Some("a\tb"));
        assert_eq!(unquote_path("\"\\303\\251.txt\"").as_deref(), Some("é.txt"));
        assert_eq!(unquote_path("plain").as_deref(), Some("plain"));
        assert_eq!(unquote_path("\"bad\\q\""), None);
    }

    #[test]
    fn file_line_without_header() {
        assert!(matches!(
            parse_log_stream(&b"A\tx\n"[..]),
            Err(Error::LogFormat { line: 1, .. })
        ));
    }
}
