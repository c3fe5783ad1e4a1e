//! Fixtures shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::Command;

use evoscat::eventlog::EventRecord;
use evoscat::model::ChangeKind;

pub const T0: i64 = 1_600_000_000;
pub const ADA: &str = "Ada Lovelace";
pub const GRACE: &str = "Grace Hopper";

fn git(dir: &Path, args: &[&str], ts: i64, author: &str) -> String {
    let date = format!("@{ts} +0000");
    let out = Command::new("git")
        .current_dir(dir)
        .args(["-c", "commit.gpgsign=false", "-c", "init.defaultBranch=main"])
        .args(args)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_AUTHOR_NAME", author)
        .env("GIT_AUTHOR_EMAIL", "dev@example.org")
        .env("GIT_COMMITTER_NAME", author)
        .env("GIT_COMMITTER_EMAIL", "dev@example.org")
        .env("GIT_AUTHOR_DATE", &date)
        .env("GIT_COMMITTER_DATE", &date)
        .output()
        .expect("git is installed");
    assert!(
        out.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap().trim().to_owned()
}

fn commit(dir: &Path, msg: &str, ts: i64, author: &str) -> String {
    git(dir, &["add", "-A"], ts, author);
    git(dir, &["commit", "-q", "-m", msg], ts, author);
    git(dir, &["rev-parse", "HEAD"], ts, author)
}

fn write(dir: &Path, path: &str, content: &str) {
    let p = dir.join(path);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, content).unwrap();
}

/// Scripted history on `main`:
///
/// 1. Ada adds `a.txt`, `b.txt`, `dir with space/ü.md`
/// 2. Grace modifies `a.txt`
/// 3. Ada renames `b.txt` to `c.txt`
/// 4. Grace adds `d.txt` on branch `side`
/// 5. Ada deletes `a.txt` on `main`
/// 6. Grace merges `side` into `main`
/// 7. Ada re-adds `a.txt`
///
/// Returns the expected mined event log.
pub fn scripted_repo(dir: &Path) -> Vec<EventRecord> {
    git(dir, &["init", "-q"], T0, ADA);
    write(dir, "a.txt", "one\n");
    write(dir, "b.txt", "bee\n");
    write(dir, "dir with space/ü.md", "# title\n");
    let c1 = commit(dir, "initial", T0, ADA);
    write(dir, "a.txt", "one\ntwo\n");
    let c2 = commit(dir, "edit", T0 + 1000, GRACE);
    git(dir, &["mv", "b.txt", "c.txt"], T0 + 2000, ADA);
    let c3 = commit(dir, "rename", T0 + 2000, ADA);
    git(dir, &["checkout", "-q", "-b", "side"], T0 + 3000, GRACE);
    write(dir, "d.txt", "side\n");
    let _c4 = commit(dir, "side work", T0 + 3000, GRACE);
    git(dir, &["checkout", "-q", "main"], T0 + 4000, ADA);
    fs::remove_file(dir.join("a.txt")).unwrap();
    let c5 = commit(dir, "delete", T0 + 4000, ADA);
    git(
        dir,
        &["merge", "-q", "--no-ff", "-m", "merge side", "side"],
        T0 + 5000,
        GRACE,
    );
    let c6 = git(dir, &["rev-parse", "HEAD"], T0 + 5000, GRACE);
    write(dir, "a.txt", "back\n");
    let c7 = commit(dir, "restore", T0 + 6000, ADA);

    let ev = |path: &str, ts: i64, commit: &str, author: &str, kind: ChangeKind| EventRecord {
        path: path.into(),
        ts,
        commit: commit.into(),
        author: author.into(),
        kind,
        metrics: Default::default(),
    };
    use ChangeKind::*;
    vec![
        ev("a.txt", T0, &c1, ADA, Added),
        ev("b.txt", T0, &c1, ADA, Added),
        ev("dir with space/ü.md", T0, &c1, ADA, Added),
        ev("a.txt", T0 + 1000, &c2, GRACE, Modified),
        ev("b.txt", T0 + 2000, &c3, ADA, Deleted),
        ev("c.txt", T0 + 2000, &c3, ADA, Added),
        ev("a.txt", T0 + 4000, &c5, ADA, Deleted),
        ev("d.txt", T0 + 5000, &c6, GRACE, Added),
        ev("a.txt", T0 + 6000, &c7, ADA, Added),
    ]
}
