use std::fs;
use std::io::Write;
use std::path::Path;

use bilts::datasets::{self, SynConfig, TrajectoryRecord};
use bilts::descriptor::{descriptor_sequence, DescriptorParams};
use bilts::recognition::{self, MeasureParams, ProgressKind, RecognitionConfig};
use bilts::reparam::{preprocess, GeometricTrajectory, ReparamConfig};
use bilts::segmentation::{detect_breakpoints, SegmentationParams};
use bilts::similarity::{aligned_matrix_distance, dtw_align, matrix_distance, PreparedSequence};
use bilts::BiltsError;

use crate::args::{
    Command, CompareArgs, DescriptorArgs, PreprocessArgs, RecognizeArgs, ReparamArgs, SegmentArgs, SynGenArgs,
};
use crate::CliError;

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::SynGen(a) => syn_gen(a),
        Command::Reparam(a) => reparam(a),
        Command::Descriptors(a) => descriptors(a),
        Command::Compare(a) => compare(a),
        Command::Recognize(a) => recognize(a),
        Command::Segment(a) => segment(a),
    }
}

/// Writes through a sibling temporary file renamed into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.partial-{}", std::process::id()));
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(BiltsError::io(path, e).into());
    }
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes()).map_err(|e| BiltsError::io("<stdout>", e))?;
            Ok(())
        }
    }
}

fn load_config(path: &Path) -> Result<SynConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn syn_gen(a: SynGenArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => SynConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let records = datasets::generate_syn(&cfg)?;
    let json = serde_json::to_value(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let manifest = datasets::write_dataset(&a.out, &records, cfg.seed, &json)?;
    println!(
        "wrote {} trajectories to {} (seed {}, schema {})",
        manifest.records.len(),
        a.out.display(),
        manifest.seed,
        manifest.schema_version
    );
    Ok(())
}

fn load_geometric(path: &Path, pre: &PreprocessArgs, l: f64) -> Result<(TrajectoryRecord, GeometricTrajectory), CliError> {
    let record = datasets::read_record(path)?;
    let progress = ProgressKind::from(pre.progress).with_scale(l);
    let cfg = ReparamConfig { progress, n_out: pre.n_out, sigma: pre.sigma };
    let geo = preprocess(&record.temporal()?, &cfg)?;
    Ok((record, geo))
}

fn reparam(a: ReparamArgs) -> Result<(), CliError> {
    let (record, geo) = load_geometric(&a.file, &a.pre, a.l)?;
    let out = TrajectoryRecord { dt: geo.ds, poses: geo.poses, ..record };
    datasets::write_record(&out, &a.out)?;
    println!("{} samples, ds = {:e}", out.poses.len(), out.dt);
    Ok(())
}

fn descriptors(a: DescriptorArgs) -> Result<(), CliError> {
    let (_, geo) = load_geometric(&a.file, &a.pre, a.l)?;
    let seq = descriptor_sequence(&geo, &DescriptorParams { l: a.l, xi: a.xi, regularize: a.plus })?;
    let mut out = String::from("k,s");
    for c in 0..3 {
        for r in 0..6 {
            out.push_str(&format!(",y{r}{c}"));
        }
    }
    out.push('\n');
    for (d, (&k, s)) in seq.descriptors.iter().zip(seq.indices.iter().zip(seq.progress())) {
        out.push_str(&format!("{k},{s:e}"));
        for v in d.y.iter() {
            out.push_str(&format!(",{v:e}"));
        }
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let (_, ga) = load_geometric(&a.a, &a.pre, a.l)?;
    let (_, gb) = load_geometric(&a.b, &a.pre, a.l)?;
    let dp = DescriptorParams { l: a.l, xi: a.xi, regularize: a.plus };
    let pa = PreparedSequence::from_trajectory(&ga, &dp)?;
    let pb = PreparedSequence::from_trajectory(&gb, &dp)?;
    let distance = bilts::similarity::prepared_distance(&pa, &pb, a.l, a.plus, a.band)?;
    if let Some(path) = &a.dump {
        let path_ab = dtw_align(&pa.summaries, &pb.summaries, a.l, a.band)?;
        let (sa, sb) = (pa.sequence.progress(), pb.sequence.progress());
        let mut out = String::from("i,j,s_a,s_b,d\n");
        for &(i, j) in &path_ab.pairs {
            let (ya, yb) = (&pa.sequence.descriptors[i].y, &pb.sequence.descriptors[j].y);
            let d = if a.plus { aligned_matrix_distance(ya, yb, a.l).0 } else { matrix_distance(ya, yb, a.l) };
            out.push_str(&format!("{i},{j},{:e},{:e},{d:e}\n", sa[i], sb[j]));
        }
        write_atomic(path, &out)?;
    }
    println!("{distance:?}");
    Ok(())
}

fn recognize(a: RecognizeArgs) -> Result<(), CliError> {
    let records = datasets::load_dataset(&a.dataset)?;
    let mut cfg = RecognitionConfig::new(a.measure.into(), a.progress.into(), a.reference_context.clone());
    cfg.n_out = a.n_out;
    cfg.sigma = a.sigma;
    cfg.band = a.band;
    if let Some(xi) = a.xi {
        cfg.isa_xi = xi;
    }
    let params = if a.l.is_some() || a.xi.is_some() || a.lambda.is_some() {
        let d = cfg.default_params();
        Some(MeasureParams { l: a.l.unwrap_or(d.l), xi: a.xi.unwrap_or(d.xi), lambda: a.lambda.unwrap_or(d.lambda) })
    } else {
        None
    };
    let report = recognition::run(&records, &cfg, a.tune, params)?;
    let json = report.to_json();
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| BiltsError::io(dir, e))?;
            write_atomic(&dir.join("report.json"), &json)?;
            write_atomic(&dir.join("confusion.csv"), &report.confusion_csv())?;
        }
        None => println!("{json}"),
    }
    eprintln!(
        "{} recognition rate {:.4} (L = {}, xi = {}, lambda = {})",
        report.measure.name(),
        report.rate,
        report.params.l,
        report.params.xi,
        report.params.lambda
    );
    Ok(())
}

fn segment(a: SegmentArgs) -> Result<(), CliError> {
    let (_, geo) = load_geometric(&a.file, &a.pre, a.l)?;
    let params = SegmentationParams { l: a.l, xi: a.xi, plus: !a.plain };
    let (signal, breakpoints) = detect_breakpoints(&geo, &params, a.threshold, a.min_gap)?;
    if let Some(p) = &a.out {
        write_atomic(p, &signal.to_csv())?;
    }
    let listed: Vec<String> = breakpoints.iter().map(|&i| format!("{i}:{:e}", signal.s[i])).collect();
    println!("breakpoints: [{}]", listed.join(", "));
    Ok(())
}
