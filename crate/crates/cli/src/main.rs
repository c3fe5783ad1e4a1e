mod manifest;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::DateTime;
use clap::{Args, Parser, Subcommand};
use evoscat::bundle::load_bundle;
use evoscat::eventlog::write_events;
use evoscat::miner::{mine_repository, MineOptions};
use evoscat::view::{url_pairs, view_from_pairs, ViewDefaults};
use evoscat::LayoutBundle;
use evoscat_server::{Catalog, DATA_DIR_ENV};
use rayon::prelude::*;

use manifest::{Job, Manifest};

/// Dense scatterplots of software evolution histories.
#[derive(Parser, Debug)]
#[command(name = "evoscat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract the main-branch event log of a git repository as NDJSON.
    Mine(MineArgs),
    /// Validate, filter and precompute layouts into `.evb` bundles.
    Preprocess(PreprocessArgs),
    /// Render a view of a bundle to PNG.
    Render(RenderArgs),
    /// Serve every bundle of a directory over HTTP.
    Serve(ServeArgs),
    /// Print dataset size and time range of a bundle.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Repository working tree or git directory.
    repo: PathBuf,
    /// Branch to walk instead of the checked-out HEAD.
    #[arg(long)]
    branch: Option<String>,
    /// Keep only paths matching this glob (`*` does not cross `/`).
    #[arg(long)]
    glob: Option<String>,
    /// Prefix every path with `<PREFIX>:`.
    #[arg(long)]
    prefix: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// JSON manifest describing one or more datasets.
    #[arg(long, conflicts_with_all = ["events", "id"])]
    manifest: Option<PathBuf>,
    /// Event logs (NDJSON) of a single dataset.
    events: Vec<PathBuf>,
    /// Dataset id; defaults to the first event log's file stem.
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    title: Option<String>,
    /// Metric side files keyed by commit and path.
    #[arg(long = "metrics")]
    metrics: Vec<PathBuf>,
    /// Drop artifacts with fewer events.
    #[arg(long, default_value_t = 0)]
    min_events: usize,
    /// Sort criteria, `;`-separated, each `keys` or `name=keys` (e.g. `first;ext,last;-count`).
    #[arg(long, value_delimiter = ';')]
    criteria: Vec<String>,
    /// Color modes to precompute histograms for, comma-separated.
    #[arg(long, value_delimiter = ',')]
    color_modes: Vec<String>,
    /// Accepted timestamp range `LO..HI` (epoch seconds, YYYY-MM-DD or RFC 3339).
    #[arg(long)]
    window: Option<String>,
    /// Histogram bins of the similarity ordering.
    #[arg(long)]
    bins: Option<usize>,
    /// Time domain of the similarity ordering: absolute, relstart or normalized.
    #[arg(long)]
    similarity_domain: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RenderArgs {
    bundle: PathBuf,
    /// Shareable view URL (`?dataset=…#time=…&artifact=…&color=…`); the flags below override it.
    #[arg(long)]
    view: Option<String>,
    #[arg(long)]
    time: Option<String>,
    /// Sort criterion name.
    #[arg(long)]
    artifact: Option<String>,
    #[arg(long)]
    color: Option<String>,
    /// Image size `WxH`.
    #[arg(long)]
    size: Option<String>,
    /// Dot opacity used when density is on.
    #[arg(long)]
    alpha: Option<f64>,
    /// Composite dots with partial opacity.
    #[arg(long)]
    density: bool,
    /// Dot radius in pixels.
    #[arg(long)]
    dot: Option<u32>,
    /// Viewport `x0,x1,y0,y1` in unit layout space.
    #[arg(long)]
    vp: Option<String>,
    /// Class color override `label:rrggbb`, repeatable.
    #[arg(long = "palette")]
    palette: Vec<String>,
    /// Output PNG; `<dataset>.png` when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Directory of `.evb` files.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
}

#[derive(Args, Debug)]
struct StatsArgs {
    bundles: Vec<PathBuf>,
}

/// Finished, with or without something worth a warning.
enum Status {
    Done,
    Empty,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // 2 is reserved for empty results
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Mine(a) => mine(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Render(a) => render(a),
        Command::Serve(a) => serve(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Empty) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn mine(a: MineArgs) -> Result<Status, String> {
    let opts = MineOptions {
        repo_path: a.repo,
        branch: a.branch,
        path_glob: a.glob,
        path_prefix: a.prefix,
    };
    let log = mine_repository(&opts).map_err(|e| e.to_string())?;
    let write = |w: &mut dyn Write| -> io::Result<()> {
        write_events(&mut *w, &log.events).map_err(io::Error::other)?;
        w.flush()
    };
    match &a.out {
        Some(p) => {
            let file = File::create(p).map_err(|e| format!("{}: {e}", p.display()))?;
            write(&mut BufWriter::new(file)).map_err(|e| format!("{}: {e}", p.display()))?;
        }
        None => write(&mut BufWriter::new(io::stdout().lock())).map_err(|e| e.to_string())?,
    }
    if log.skipped_lines > 0 {
        eprintln!("warning: {} unparseable log lines skipped", log.skipped_lines);
    }
    eprintln!("{} events mined", log.events.len());
    if log.events.is_empty() {
        eprintln!("warning: no events");
        return Ok(Status::Empty);
    }
    Ok(Status::Done)
}

fn preprocess(a: PreprocessArgs) -> Result<Status, String> {
    let jobs: Vec<Job> = match &a.manifest {
        Some(path) => Manifest::load(path)?
            .datasets
            .iter()
            .map(Job::from_entry)
            .collect::<Result<_, _>>()?,
        None => {
            let id = match (&a.id, a.events.first()) {
                (Some(id), _) => id.clone(),
                (None, Some(p)) => p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| format!("cannot derive an id from {}", p.display()))?
                    .to_owned(),
                (None, None) => return Err("give event logs or --manifest".into()),
            };
            vec![Job::build(
                &id,
                a.title.clone(),
                a.events.clone(),
                a.metrics.clone(),
                vec![],
                a.min_events,
                &a.criteria,
                &a.color_modes,
                a.window.as_deref(),
                a.bins,
                a.similarity_domain.as_deref(),
            )?]
        }
    };
    let outcomes: Vec<_> = jobs.par_iter().map(|job| manifest::run(job, &a.out)).collect();
    let mut status = Status::Done;
    let mut failed = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                println!("{}", o.summary());
                if o.kept == 0 {
                    eprintln!("warning: {}: no artifact left", o.id);
                    status = Status::Empty;
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                failed = Some(e);
            }
        }
    }
    match failed {
        Some(e) => Err(e),
        None => Ok(status),
    }
}

fn read_bundle(path: &Path) -> Result<LayoutBundle, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load_bundle(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn render(a: RenderArgs) -> Result<Status, String> {
    let bundle = read_bundle(&a.bundle)?;
    let mut pairs = a.view.as_deref().map(url_pairs).unwrap_or_default();
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_owned(), v));
        }
    };
    set("time", a.time);
    set("artifact", a.artifact);
    set("color", a.color);
    set("size", a.size);
    set("alpha", a.alpha.map(|v| v.to_string()));
    set("density", a.density.then(|| "1".to_owned()));
    set("dot", a.dot.map(|v| v.to_string()));
    set("vp", a.vp);
    for p in a.palette {
        pairs.push(("pal".into(), p));
    }
    let defaults = ViewDefaults::from_bundle(&bundle);
    let view = view_from_pairs(&pairs, Some(bundle.id()), |_| Some(defaults)).map_err(|e| e.to_string())?;
    let png = evoscat::render(&bundle, &view).map_err(|e| e.to_string())?;
    let out = a.out.unwrap_or_else(|| PathBuf::from(format!("{}.png", bundle.id())));
    fs::write(&out, png).map_err(|e| format!("{}: {e}", out.display()))?;
    eprintln!(
        "wrote {} ({}x{}, {})",
        out.display(),
        view.width,
        view.height,
        view.to_url()
    );
    Ok(Status::Done)
}

fn serve(a: ServeArgs) -> Result<Status, String> {
    let catalog = Catalog::load_dir(&a.data_dir).map_err(|e| e.to_string())?;
    let empty = catalog.is_empty();
    if empty {
        eprintln!("warning: no .evb files in {}", a.data_dir.display());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime
        .block_on(evoscat_server::serve(catalog, SocketAddr::new(a.host, a.port)))
        .map_err(|e| e.to_string())?;
    Ok(if empty { Status::Empty } else { Status::Done })
}

fn utc(ts: i64) -> String {
    DateTime::from_timestamp(ts, 0).map_or_else(|| ts.to_string(), |t| t.format("%Y-%m-%d %H:%M:%S UTC").to_string())
}

fn stats_table(b: &LayoutBundle) -> String {
    let h = &b.header;
    let mut rows: Vec<(&str, String)> = vec![
        ("dataset", h.dataset_id.clone()),
        ("title", h.title.clone()),
        ("artifacts", h.artifact_count.to_string()),
        ("commits", h.commit_count.to_string()),
        ("events", h.event_count.to_string()),
        ("authors", h.author_count.to_string()),
        (
            "time range",
            format!(
                "{} .. {} ({} .. {})",
                utc(h.time.t_min),
                utc(h.time.t_max),
                h.time.t_min,
                h.time.t_max
            ),
        ),
    ];
    let metrics: Vec<&str> = h.metrics.iter().map(|m| m.name.as_str()).collect();
    rows.push((
        "metrics",
        if metrics.is_empty() {
            "-".into()
        } else {
            metrics.join(", ")
        },
    ));
    for c in &h.criteria {
        let mut note = if c.name == c.keys {
            String::new()
        } else {
            format!(" ({})", c.keys)
        };
        if c.keys == "similarity" && h.similarity_fallback {
            note.push_str(" [median-time fallback]");
        }
        rows.push(("criterion", format!("{}{note}", c.name)));
    }
    for m in &h.histograms {
        rows.push(("color mode", format!("{} ({} classes)", m.mode, m.classes.len())));
    }
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<12} {v}\n"));
    }
    out
}

fn stats(a: StatsArgs) -> Result<Status, String> {
    if a.bundles.is_empty() {
        return Err("no bundle given".into());
    }
    let mut status = Status::Done;
    for (i, p) in a.bundles.iter().enumerate() {
        let b = read_bundle(p)?;
        if i > 0 {
            println!();
        }
        print!("{}", stats_table(&b));
        if b.artifact_count() == 0 {
            status = Status::Empty;
        }
    }
    Ok(status)
}
