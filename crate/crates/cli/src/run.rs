//! Command implementations. Each returns `Ok` or a `CliError` that main maps
//! onto the exit-code contract: 2 input, 3 config, 4 mismatched data.

use crate::manifest::Manifest;
use crate::scene_cfg;
use crate::{BenchArgs, DetectEvalArgs, EvalArgs, SimulateArgs, TrackArgs, TrackerKind};
use rowtrack::formats::{self, ClassId, DetectionRecord, GtRecord, TrackRecord, TrackStatus};
use rowtrack::geometry::BBox;
use rowtrack::ibta::IbtaTracker;
use rowtrack::metrics;
use rowtrack::simulator;
use rowtrack::trackers::{CtaTracker, SortTracker, Tracker, TrackerConfig};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub enum CliError {
    /// Missing or malformed input files. Exit 2.
    Input(String),
    /// Invalid configuration, on the command line or in a config file. Exit 3.
    Config(String),
    /// Inputs that parse but cannot be evaluated against each other. Exit 4.
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Config(m) | CliError::Mismatch(m) => write!(f, "{m}"),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    name.push_str(".manifest");
    out.with_file_name(name)
}

fn load_detections(path: &Path) -> Result<Vec<DetectionRecord>, CliError> {
    let text = read_file(path)?;
    formats::parse_detections(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_gt(path: &Path) -> Result<Vec<GtRecord>, CliError> {
    formats::load_ground_truth(path).map_err(|e| CliError::Input(e.to_string()))
}

fn load_tracker_config(path: &Option<PathBuf>) -> Result<TrackerConfig, CliError> {
    match path {
        None => Ok(TrackerConfig::default()),
        Some(p) => {
            let text = read_file(p)?;
            TrackerConfig::from_text(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn make_tracker(kind: TrackerKind, class_id: ClassId, cfg: &TrackerConfig) -> Box<dyn Tracker> {
    match kind {
        TrackerKind::Cta => Box::new(CtaTracker::new(class_id, cfg.clone())),
        TrackerKind::Sort => Box::new(SortTracker::new(class_id, cfg.clone())),
        TrackerKind::Ibta => Box::new(IbtaTracker::new(class_id, cfg.clone())),
    }
}

/// Runs one tracker instance per class over frames 1..=max_frame and returns
/// the merged records plus per-frame step durations in seconds. Durations
/// wrap only the step calls, not parsing, grouping, or output.
fn run_trackers(
    kind: TrackerKind,
    cfg: &TrackerConfig,
    dets: &[DetectionRecord],
) -> (Vec<TrackRecord>, Vec<f64>) {
    let max_frame = dets.iter().map(|d| d.frame).max().unwrap_or(0) as usize;
    let mut by_frame: Vec<[Vec<BBox>; 3]> = vec![Default::default(); max_frame];
    for d in dets {
        by_frame[(d.frame - 1) as usize][d.class_id.as_u8() as usize].push(d.bbox);
    }
    let mut trackers: Vec<Box<dyn Tracker>> =
        ClassId::ALL.iter().map(|&c| make_tracker(kind, c, cfg)).collect();
    let mut records = Vec::new();
    let mut durations = Vec::with_capacity(max_frame);
    for frame in &by_frame {
        let mut spent = 0.0;
        for (ci, tracker) in trackers.iter_mut().enumerate() {
            let t0 = Instant::now();
            let out = tracker.step(&frame[ci]);
            spent += t0.elapsed().as_secs_f64();
            records.extend(out);
        }
        durations.push(spent);
    }
    (records, durations)
}

pub fn cmd_track(args: &TrackArgs) -> Result<(), CliError> {
    let mut manifest = Manifest::new("track");
    let dets = load_detections(&args.dets)?;
    let cfg = load_tracker_config(&args.config)?;
    let (records, _) = run_trackers(args.tracker, &cfg, &dets);

    let mut text = format!("# tracker = {}\n", args.tracker.name());
    for line in cfg.to_text().lines() {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(&formats::write_tracks(&records));
    write_file(&args.out, &text)?;

    manifest.push("tracker", args.tracker.name());
    manifest.push("input.dets", args.dets.display());
    if let Some(c) = &args.config {
        manifest.push("input.config", c.display());
    }
    manifest.push_block("config", &cfg.to_text());
    manifest.push("output.tracks", args.out.display());
    manifest.push("records.dets", dets.len());
    manifest.push("records.tracks", records.len());
    write_file(&manifest_path(&args.out), &manifest.render())?;
    println!(
        "{} detections -> {} track records -> {}",
        dets.len(),
        records.len(),
        args.out.display()
    );
    Ok(())
}

struct EvalRow {
    label: String,
    mota: f64,
    motp: Option<f64>,
    idf1: f64,
    idr: f64,
    idp: f64,
    mt: u64,
    idsw: u64,
}

fn check_match_iou(match_iou: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&match_iou) {
        Ok(())
    } else {
        Err(CliError::Config(format!("match-iou must be in [0, 1], got {match_iou}")))
    }
}

fn fmt_motp(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    check_match_iou(args.match_iou)?;
    let gt = load_gt(&args.gt)?;
    let text = read_file(&args.tracks)?;
    let mut hyp = formats::parse_tracks(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.tracks.display())))?;
    if args.exclude_inferred {
        hyp.retain(|r| r.status != TrackStatus::Inferred);
    }
    if gt.is_empty() && !hyp.is_empty() {
        return Err(CliError::Mismatch(
            "track records present but ground truth is empty".into(),
        ));
    }

    let mut rows = Vec::new();
    for class in ClassId::ALL {
        let gt_c: Vec<GtRecord> = gt.iter().filter(|g| g.class_id == class).cloned().collect();
        let hyp_c: Vec<TrackRecord> =
            hyp.iter().filter(|t| t.class_id == class).cloned().collect();
        if gt_c.is_empty() && hyp_c.is_empty() {
            continue;
        }
        if gt_c.is_empty() {
            eprintln!(
                "warning: class {} has {} track records but no ground truth; skipped",
                class.label(),
                hyp_c.len()
            );
            continue;
        }
        let mismatch = |e: metrics::MetricsError| CliError::Mismatch(e.to_string());
        let counts = metrics::clear_match(&gt_c, &hyp_c, args.match_iou).map_err(mismatch)?;
        let (idc, ids) = metrics::id_metrics(&gt_c, &hyp_c, args.match_iou).map_err(mismatch)?;
        let mt = metrics::mostly_tracked(&gt_c, &hyp_c, args.match_iou).map_err(mismatch)?;
        let mota = if args.mota_id {
            1.0 - (idc.idfn + idc.idfp + counts.idsw_total) as f64 / counts.gt_total as f64
        } else {
            metrics::mota(&counts).map_err(mismatch)?
        };
        rows.push(EvalRow {
            label: class.label().to_string(),
            mota,
            motp: metrics::motp(&counts).ok(),
            idf1: ids.idf1,
            idr: ids.idr,
            idp: ids.idp,
            mt,
            idsw: counts.idsw_total,
        });
    }
    if rows.is_empty() {
        println!("nothing to evaluate: no records in either file");
        return Ok(());
    }

    // The All row averages rates over classes (unweighted) and sums counts.
    let n = rows.len() as f64;
    let motp_defined: Vec<f64> = rows.iter().filter_map(|r| r.motp).collect();
    let all = EvalRow {
        label: "All".into(),
        mota: rows.iter().map(|r| r.mota).sum::<f64>() / n,
        motp: (!motp_defined.is_empty())
            .then(|| motp_defined.iter().sum::<f64>() / motp_defined.len() as f64),
        idf1: rows.iter().map(|r| r.idf1).sum::<f64>() / n,
        idr: rows.iter().map(|r| r.idr).sum::<f64>() / n,
        idp: rows.iter().map(|r| r.idp).sum::<f64>() / n,
        mt: rows.iter().map(|r| r.mt).sum(),
        idsw: rows.iter().map(|r| r.idsw).sum(),
    };

    let mota_head = if args.mota_id { "MOTA_ID" } else { "MOTA" };
    println!(
        "{:<16}{:>8}{:>8}{:>8}{:>8}{:>8}{:>6}{:>6}",
        "class", mota_head, "MOTP", "IDF1", "IDR", "IDP", "MT", "IDs"
    );
    for r in rows.iter().chain(std::iter::once(&all)) {
        println!(
            "{:<16}{:>8.3}{:>8}{:>8.3}{:>8.3}{:>8.3}{:>6}{:>6}",
            r.label,
            r.mota,
            fmt_motp(r.motp),
            r.idf1,
            r.idr,
            r.idp,
            r.mt,
            r.idsw
        );
    }

    if let Some(out) = &args.out {
        let mut csv = String::from("class,mota,motp,idf1,idr,idp,mt,idsw\n");
        for r in rows.iter().chain(std::iter::once(&all)) {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.label,
                r.mota,
                r.motp.map(|v| v.to_string()).unwrap_or_else(|| "nan".into()),
                r.idf1,
                r.idr,
                r.idp,
                r.mt,
                r.idsw
            ));
        }
        write_file(out, &csv)?;
        let mut manifest = Manifest::new("eval");
        manifest.push("input.gt", args.gt.display());
        manifest.push("input.tracks", args.tracks.display());
        manifest.push("match_iou", args.match_iou);
        manifest.push("mota_id", args.mota_id);
        manifest.push("exclude_inferred", args.exclude_inferred);
        manifest.push("output.csv", out.display());
        write_file(&manifest_path(out), &manifest.render())?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        None => simulator::SceneConfig::default(),
        Some(p) => scene_cfg::parse_scene_config(&read_file(p)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let data = simulator::simulate(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    write_file(&args.out.join("gt.txt"), &formats::write_ground_truth(&data.gt))?;
    write_file(&args.out.join("dets.txt"), &formats::write_detections(&data.detections))?;

    let mut manifest = Manifest::new("simulate");
    if let Some(p) = &args.config {
        manifest.push("input.config", p.display());
    }
    manifest.push_block("config", &scene_cfg::scene_config_text(&cfg));
    manifest.push("objects", data.objects.len());
    manifest.push("records.gt", data.gt.len());
    manifest.push("records.dets", data.detections.len());
    write_file(&args.out.join("manifest.txt"), &manifest.render())?;
    println!(
        "wrote {} gt and {} detection records to {}",
        data.gt.len(),
        data.detections.len(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_detect_eval(args: &DetectEvalArgs) -> Result<(), CliError> {
    check_match_iou(args.match_iou)?;
    let gt = load_gt(&args.gt)?;
    let dets = load_detections(&args.dets)?;
    if gt.is_empty() {
        return Err(CliError::Mismatch("cannot score detections without ground truth".into()));
    }
    let eval = metrics::average_precision(&dets, &gt, args.match_iou);
    for c in &eval.per_class {
        match c.ap {
            Some(ap) => println!(
                "{:<16} AP@{:.2} = {:.4}   ({} gt, {} det)",
                c.class_id.label(),
                args.match_iou,
                ap,
                c.gt_count,
                c.det_count
            ),
            None => println!(
                "{:<16} skipped: no ground truth ({} detections)",
                c.class_id.label(),
                c.det_count
            ),
        }
    }
    let map = eval.map50.expect("ground truth is nonempty");
    println!("mAP@{:.2} = {:.4}", args.match_iou, map);

    if let Some(out) = &args.out {
        let mut csv = String::from("class,ap,gt_count,det_count\n");
        for c in &eval.per_class {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                c.class_id.label(),
                c.ap.map(|v| v.to_string()).unwrap_or_else(|| "nan".into()),
                c.gt_count,
                c.det_count
            ));
        }
        csv.push_str(&format!("mAP,{map},,\n"));
        write_file(out, &csv)?;
        let mut manifest = Manifest::new("detect-eval");
        manifest.push("input.gt", args.gt.display());
        manifest.push("input.dets", args.dets.display());
        manifest.push("match_iou", args.match_iou);
        manifest.push("output.csv", out.display());
        write_file(&manifest_path(out), &manifest.render())?;
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.repeats == 0 {
        return Err(CliError::Config("repeats must be >= 1".into()));
    }
    let dets = load_detections(&args.dets)?;
    if dets.is_empty() {
        return Err(CliError::Input(format!("{}: no detections to measure", args.dets.display())));
    }
    let cfg = load_tracker_config(&args.config)?;

    let mut report = String::new();
    let mut fps_all = Vec::new();
    for repeat in 1..=args.repeats {
        let (records, durations) = run_trackers(args.tracker, &cfg, &dets);
        let fps = metrics::fps(&durations).expect("at least one frame");
        let mean_ms = durations.iter().sum::<f64>() / durations.len() as f64 * 1e3;
        let max_ms = durations.iter().fold(0.0f64, |a, &b| a.max(b)) * 1e3;
        let line = format!(
            "repeat {repeat}: {} frames, {} records, step mean {:.4} ms (max {:.4} ms), fps {:.1}",
            durations.len(),
            records.len(),
            mean_ms,
            max_ms,
            fps
        );
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
        fps_all.push(fps);
    }
    let mean_fps = fps_all.iter().sum::<f64>() / fps_all.len() as f64;
    let line = format!("mean fps over {} repeats = {mean_fps:.1}", args.repeats);
    println!("{line}");
    report.push_str(&line);
    report.push('\n');

    if let Some(out) = &args.out {
        write_file(out, &report)?;
        let mut manifest = Manifest::new("bench");
        manifest.push("tracker", args.tracker.name());
        manifest.push("input.dets", args.dets.display());
        manifest.push("repeats", args.repeats);
        manifest.push("output.report", out.display());
        write_file(&manifest_path(out), &manifest.render())?;
    }
    Ok(())
}
