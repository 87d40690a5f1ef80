use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use dlfh::bench::{doubling_ratios, run_ladder, write_bench_csv, LadderSpec};
use dlfh::data::{
    center, load_features, load_labels, make_split, save_features, save_labels, synth_crossmodal,
    synth_xor, FeatureFormat, SplitSpec,
};
use dlfh::model::log_likelihood;
use dlfh::oos::{fit_kernel, fit_linear, load_model, save_model, HashFunction, HashModel, Modality};
use dlfh::params::{DEFAULT_ANCHORS, DEFAULT_CODE_LEN, DEFAULT_GAMMA, DEFAULT_KERNEL_REG, DEFAULT_LAMBDA, DEFAULT_MAX_ITER};
use dlfh::retrieval::{write_eval_report, EvalRow};
use dlfh::train::write_trace_csv;
use dlfh::{
    load_codes, mean_average_precision, save_codes, similarity_from_labels, train, Bandwidth,
    GroundTruth, Hyperparams, KernelParams, TrainConfig, TrainMode,
};
use log::info;

use crate::args::*;
use crate::config::Resolver;
use crate::error::CliError;

type CmdResult = Result<(), CliError>;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

fn features(path: &Path) -> Result<dlfh::FeatureMatrix, CliError> {
    Ok(load_features(path, FeatureFormat::from_path(path))?)
}

pub fn synth(a: SynthArgs, r: &mut Resolver) -> CmdResult {
    let out = r.path("out-dir", a.out_dir)?;
    let kind = r.value("kind", a.kind, SynthKind::Blobs)?;
    let n = r.value("n", a.n, 1000)?;
    let dim_x = r.value("dim-x", a.dim_x, 32)?;
    let dim_y = match kind {
        SynthKind::Blobs => r.value("dim-y", a.dim_y, 16)?,
        SynthKind::Xor => dim_x,
    };
    let classes = match kind {
        SynthKind::Blobs => r.value("classes", a.classes, 5)?,
        SynthKind::Xor => 2,
    };
    let noise = r.value("noise", a.noise, 0.5)?;
    let query_count = r.value("query-count", a.query_count, n / 5)?;
    let seed = r.value("seed", a.seed, 0)?;

    let data = match kind {
        SynthKind::Blobs => synth_crossmodal(n, dim_x, dim_y, classes, noise, seed)?,
        SynthKind::Xor => synth_xor(n, dim_x, noise, seed)?,
    };
    let split = make_split(n, &SplitSpec { query_count, seed })?;
    ensure_dir(&out)?;
    for (prefix, rows) in [("train", &split.retrieval), ("query", &split.query)] {
        if rows.is_empty() {
            continue;
        }
        save_features(out.join(format!("{prefix}_x.csv")), &data.x.select_rows(rows)?, FeatureFormat::Csv)?;
        save_features(out.join(format!("{prefix}_y.csv")), &data.y.select_rows(rows)?, FeatureFormat::Csv)?;
        save_labels(out.join(format!("{prefix}_labels.csv")), &data.labels.select_rows(rows)?)?;
    }
    let mut w = create(&out.join("synth.txt"))?;
    for (k, v) in r.header() {
        writeln!(w, "# {k} = {v}")?;
    }
    w.flush()?;
    println!(
        "wrote {} training and {} query rows to {}",
        split.retrieval.len(),
        split.query.len(),
        out.display()
    );
    Ok(())
}

pub fn train_cmd(a: TrainArgs, r: &mut Resolver) -> CmdResult {
    let labels_path = r.path("labels", a.labels)?;
    let out = r.path("out-dir", a.out_dir)?;
    let trace_path = r.optional_path("trace", a.trace)?;
    let mode: TrainMode = r.value("mode", a.mode, ModeArg::Stochastic)?.into();
    let code_len = r.value("bits", a.bits, DEFAULT_CODE_LEN)?;
    let hyper = Hyperparams {
        code_len,
        max_iter: r.value("iters", a.iters, DEFAULT_MAX_ITER)?,
        lambda: r.value("lambda", a.lambda, DEFAULT_LAMBDA)?,
        sample_size: Some(r.value("sample-size", a.sample_size, code_len)?),
        seed: r.value("seed", a.seed, 0)?,
        ..Hyperparams::default()
    };
    let stride = r.optional("trace-stride", a.trace_stride)?;
    let early_stop = r.optional("early-stop", a.early_stop)?;

    let labels = load_labels(&labels_path)?;
    let s = similarity_from_labels(&labels, &labels)?;
    let mut config = TrainConfig::new(hyper.clone(), mode);
    config.trace = trace_path.is_some();
    config.objective_eval_stride = stride;
    config.early_stop = early_stop;

    info!("training on {} items, {:?} mode", labels.rows(), mode);
    let start = Instant::now();
    let state = train(&s, &config)?;
    let seconds = start.elapsed().as_secs_f64();
    let objective = log_likelihood(&state.u, &state.v, &s, hyper.lambda)?;

    ensure_dir(&out)?;
    save_codes(out.join("u.dlfc"), &state.u)?;
    save_codes(out.join("v.dlfc"), &state.v)?;
    if let Some(path) = trace_path {
        let mut w = create(&path)?;
        for (k, v) in r.header() {
            writeln!(w, "# {k} = {v}")?;
        }
        write_trace_csv(&mut w, &state.objective_trace)?;
        w.flush()?;
    }
    println!("iterations = {}", state.iteration);
    println!("objective = {objective}");
    println!("train_seconds = {seconds:.3}");
    Ok(())
}

pub fn fit_oos(a: FitOosArgs, r: &mut Resolver) -> CmdResult {
    let features_path = r.path("features", a.features)?;
    let codes_path = r.path("codes", a.codes)?;
    let out = r.path("out", a.out)?;
    let modality = match r.required("modality", a.modality)? {
        ModalityArg::X => Modality::X,
        ModalityArg::Y => Modality::Y,
    };
    let oos = r.value("oos", a.oos, OosArg::Linear)?;

    let x = center(&features(&features_path)?);
    let codes = load_codes(&codes_path)?;
    let model = match oos {
        OosArg::Linear => {
            let gamma = r.value("gamma", a.gamma, DEFAULT_GAMMA)?;
            HashModel::Linear(fit_linear(&x, &codes, gamma)?)
        }
        OosArg::Kernel => {
            let params = KernelParams {
                anchors: r.value("anchors", a.anchors, DEFAULT_ANCHORS)?,
                bandwidth: r.value("bandwidth", a.bandwidth, BandwidthArg(Bandwidth::Auto))?.0,
                regularization: r.value("kernel-reg", a.kernel_reg, DEFAULT_KERNEL_REG)?,
                max_newton_iter: r.value("newton-iters", a.newton_iters, KernelParams::default().max_newton_iter)?,
            };
            // same per-modality seed as the library pipeline
            let salt = match modality {
                Modality::X => 0,
                Modality::Y => 1,
            };
            let seed = r.value("seed", a.seed, 0u64)?;
            HashModel::Kernel(fit_kernel(&x, &codes, &params, seed.wrapping_add(salt))?)
        }
    };
    save_model(&out, modality, &model)?;
    println!("wrote {} model ({} -> {} bits) to {}", oos, model.dim(), model.bits(), out.display());
    Ok(())
}

pub fn encode(a: EncodeArgs, r: &mut Resolver) -> CmdResult {
    let model_path = r.path("model", a.model)?;
    let features_path = r.path("features", a.features)?;
    let out = r.path("out", a.out)?;
    let (_, model) = load_model(&model_path)?;
    let codes = model.encode(&features(&features_path)?)?;
    save_codes(&out, &codes)?;
    println!("hashed {} rows to {} bits in {}", codes.rows(), codes.bits(), out.display());
    Ok(())
}

pub fn eval(a: EvalArgs, r: &mut Resolver) -> CmdResult {
    let qi = r.path("query-image", a.query_image)?;
    let qt = r.path("query-text", a.query_text)?;
    let di = r.path("db-image", a.db_image)?;
    let dt = r.path("db-text", a.db_text)?;
    let ql = r.path("query-labels", a.query_labels)?;
    let dl = r.path("db-labels", a.db_labels)?;
    let cutoff = r.optional("map-at", a.map_at)?;
    let out = r.optional_path("out", a.out)?;

    let query_labels = load_labels(&ql)?;
    let db_labels = load_labels(&dl)?;
    let truth = GroundTruth::from_labels(&query_labels, &db_labels)?;
    let mut rows = Vec::new();
    for (task, q, db) in [("image_to_text", &qi, &dt), ("text_to_image", &qt, &di)] {
        let queries = load_codes(q)?;
        let database = load_codes(db)?;
        let report = mean_average_precision(&queries, &database, &truth, cutoff)?;
        if report.skipped > 0 {
            log::warn!("{task}: {} queries without relevant items were skipped", report.skipped);
        }
        rows.push(EvalRow {
            task: task.into(),
            code_len: queries.bits(),
            report,
        });
    }
    let mut text = Vec::new();
    write_eval_report(&mut text, r.header(), &rows)?;
    if let Some(path) = out {
        let mut w = create(&path)?;
        w.write_all(&text)?;
        w.flush()?;
    }
    std::io::stdout().write_all(&text)?;
    Ok(())
}

pub fn bench(a: BenchArgs, r: &mut Resolver) -> CmdResult {
    let sizes = r.value("sizes", a.sizes, SizeList(vec![1000, 2000, 4000]))?;
    let modes = r.value("modes", a.modes, ModeList(vec![ModeArg::Full, ModeArg::Stochastic]))?;
    let code_len = r.value("bits", a.bits, DEFAULT_CODE_LEN)?;
    let hyper = Hyperparams {
        code_len,
        max_iter: r.value("iters", a.iters, 5)?,
        lambda: r.value("lambda", a.lambda, DEFAULT_LAMBDA)?,
        sample_size: Some(r.value("sample-size", a.sample_size, code_len)?),
        seed: r.value("seed", a.seed, 0)?,
        ..Hyperparams::default()
    };
    let spec = LadderSpec {
        sizes: sizes.0,
        classes: r.value("classes", a.classes, 10)?,
        repeats: r.value("repeats", a.repeats, 3)?,
        data_seed: hyper.seed,
    };
    let out = r.optional_path("out", a.out)?;

    let mut points = Vec::new();
    for mode in modes.0 {
        let ladder = run_ladder(&spec, &TrainConfig::new(hyper.clone(), mode.into()))?;
        let ratios: Vec<String> = doubling_ratios(&ladder).iter().map(|x| format!("{x:.2}")).collect();
        info!("{mode}: per-step time ratios [{}]", ratios.join(", "));
        points.extend(ladder);
    }
    let mut text = Vec::new();
    write_bench_csv(&mut text, r.header(), &points)?;
    if let Some(path) = out {
        let mut w = create(&path)?;
        w.write_all(&text)?;
        w.flush()?;
    }
    std::io::stdout().write_all(&text)?;
    Ok(())
}
