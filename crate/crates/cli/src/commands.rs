use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use log::info;

use rknn_tsvm::affinity::class_affinity;
use rknn_tsvm::data::{
    gen_checkerboard, gen_two_gaussian_mixture, load_csv, normalize_minmax, stratified_folds, write_csv,
    write_fold_csv, CsvOptions, LabelColumn, LabelMap,
};
use rknn_tsvm::eval::{
    accuracy, cross_validate, format_sig, grid_search_report, scaling_params, timed_speedup, timed_train,
    write_accuracy_table, write_timing_table, AccuracyRow, ClassifierKind, ClassifierSpec, GridSpec, TimingRow,
};
use rknn_tsvm::neighbors::knn_search;
use rknn_tsvm::tsvm::{decision_values, label_from_distances, load_model, save_model};
use rknn_tsvm::{
    Dataset, Execution, HyperParams, KernelSpec, KnnAlgorithm, Label, SearchSpace, SolverOptions, WeightScheme,
};

use crate::args::*;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a),
        Command::Gridsearch(a) => gridsearch(a),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => gen(a),
        Command::Diag(a) => diag(a),
    }
}

fn knn_algorithm(k: Knn) -> KnnAlgorithm {
    match k {
        Knn::Fsa => KnnAlgorithm::Fsa,
        Knn::Ldmdba => KnnAlgorithm::Ldmdba,
    }
}

fn kernel_spec(kind: Kernel, sigma: Option<f64>, gamma: Option<f64>, unsquared: bool) -> Result<KernelSpec> {
    let mut spec = match kind {
        Kernel::Linear => {
            ensure!(sigma.is_none() && gamma.is_none(), "--sigma/--gamma need --kernel gaussian");
            return Ok(KernelSpec::linear());
        }
        Kernel::Gaussian => match (sigma, gamma) {
            (_, Some(g)) => {
                ensure!(g > 0.0 && g.is_finite(), "--gamma must be positive, got {g}");
                KernelSpec::gaussian_gamma(g)
            }
            (s, None) => KernelSpec::gaussian(s.unwrap_or(1.0)),
        },
    };
    spec.squared_exponent = !unsquared;
    spec.validate()?;
    Ok(spec)
}

/// Flags to a validated classifier; nothing is read from disk here.
fn classifier(m: &ModelArgs, seed: u64) -> Result<ClassifierSpec> {
    let kernel = kernel_spec(m.kernel, m.sigma, m.gamma, m.unsquared)?;
    let kind = match (m.algo, m.kernel) {
        (Algo::Tsvm, _) => ClassifierKind::Tsvm,
        (Algo::Wltsvm, _) => ClassifierKind::Wltsvm,
        (Algo::Rknn, Kernel::Linear) => ClassifierKind::RknnLinear,
        (Algo::Rknn, Kernel::Gaussian) => ClassifierKind::RknnKernel,
    };
    if kind == ClassifierKind::Wltsvm && (m.c2.is_some() || m.c3.is_some()) {
        bail!("wltsvm takes a single penalty (--c); --c2/--c3 do not apply");
    }
    let c2 = m.c2.unwrap_or(1.0);
    let params = HyperParams {
        c1: m.c.or(m.c1).unwrap_or(1.0),
        c2,
        c3: m.c3.unwrap_or(c2),
        k: m.k,
        kernel,
        knn_algorithm: knn_algorithm(m.knn),
        rect_ratio: m.rect_ratio,
        weight_scheme: WeightScheme::Distance,
        filter_margins: !m.no_filter,
        seed,
        execution: Execution::Sequential,
        solver: SolverOptions::with_tol(m.tol),
    };
    params.validate()?;
    Ok(ClassifierSpec::new(kind, params))
}

fn csv_options(d: &DataArgs) -> Result<CsvOptions> {
    Ok(CsvOptions {
        label_column: LabelColumn::parse(&d.label_col),
        label_map: match &d.label_map {
            Some(spec) => LabelMap::parse(spec)?,
            None => LabelMap::numeric(),
        },
        has_header: None,
    })
}

fn load(d: &DataArgs) -> Result<Dataset> {
    let opts = csv_options(d)?;
    let data = load_csv(&d.data, &opts).with_context(|| format!("loading {}", d.data.display()))?;
    ensure!(!data.is_empty(), "{} holds no samples", d.data.display());
    info!("loaded {} samples with {} features from {}", data.len(), data.dim(), d.data.display());
    Ok(data)
}

fn check_folds(folds: usize) -> Result<()> {
    ensure!(folds >= 2, "--folds must be at least 2, got {folds}");
    Ok(())
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned())
}

fn train(a: TrainArgs) -> Result<()> {
    let spec = classifier(&a.model, a.seed)?;
    let data = load(&a.data)?;
    let (model, secs) = timed_train(&spec, &data)?;
    save_model(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let diag = model.diagnostics.as_ref();
    let margins = diag.map_or([0, 0], |d| d.margin_counts);
    let iters = diag.map_or([0, 0], |d| d.iterations);
    println!(
        "trained {} ({spec}) in {}s; margin points +1:{} -1:{}; solver iterations {}/{}; model -> {}",
        spec.kind.name(),
        format_sig(secs),
        margins[0],
        margins[1],
        iters[0],
        iters[1],
        a.out.display()
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let data = load(&a.data)?;
    let dv = decision_values(&model, &data.samples)?;
    let labels: Vec<Label> = dv.iter().map(|&(p, n)| label_from_distances(p, n)).collect();
    println!(
        "accuracy {}% on {} samples",
        format_sig(accuracy(&labels, &data.labels)),
        data.len()
    );
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        writeln!(w, "index,predicted,distance_pos,distance_neg")?;
        for (i, (l, (p, n))) in labels.iter().zip(&dv).enumerate() {
            writeln!(w, "{i},{},{},{}", l.sign(), format_sig(*p), format_sig(*n))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cv(a: CvArgs) -> Result<()> {
    let spec = classifier(&a.model, a.seed)?;
    check_folds(a.folds)?;
    let data = load(&a.data)?;
    let folds = stratified_folds(&data, a.folds, a.seed)?;
    let r = cross_validate(&spec, &data, &folds)?;
    for (i, f) in r.per_fold.iter().enumerate() {
        println!("fold {i}: accuracy {}% train {}s", format_sig(f.accuracy), format_sig(f.train_seconds));
    }
    println!(
        "{}: {}% ± {} (train {}s/fold) {spec}",
        spec.kind.name(),
        format_sig(r.mean_accuracy),
        format_sig(r.std_accuracy),
        format_sig(r.mean_train_time)
    );
    if let Some(out) = &a.out {
        let row = AccuracyRow {
            dataset: dataset_name(&a.data.data),
            algorithm: spec.kind.name().into(),
            result: r,
        };
        write_accuracy_table(&[row], out)?;
    }
    Ok(())
}

fn exp_range(flag: &str, s: &str) -> Result<(i32, i32)> {
    let parsed = s
        .split_once(':')
        .and_then(|(lo, hi)| Some((lo.trim().parse::<i32>().ok()?, hi.trim().parse::<i32>().ok()?)));
    match parsed {
        Some((lo, hi)) if lo <= hi => Ok((lo, hi)),
        _ => bail!("{flag} expects LO:HI with LO <= HI, got {s:?}"),
    }
}

fn powers(range: (i32, i32)) -> Vec<f64> {
    (range.0..=range.1).map(|e| 2f64.powi(e)).collect()
}

fn gridsearch(a: GridArgs) -> Result<()> {
    let base = classifier(&a.model, a.seed)?;
    check_folds(a.folds)?;
    ensure!(a.jobs >= 1, "--jobs must be at least 1");
    let widths = match &a.sigma_exp {
        Some(s) => powers(exp_range("--sigma-exp", s)?),
        // coefficient γ ↔ width 1/sqrt(2γ)
        None => powers(exp_range("--gamma-exp", &a.gamma_exp)?)
            .into_iter()
            .map(|g| KernelSpec::gaussian_gamma(g).sigma)
            .collect(),
    };
    let (klo, khi) = exp_range("--k-range", &a.k_range)?;
    ensure!(klo >= 1, "--k-range must start at 1 or more");
    let grid = GridSpec {
        penalty_range: powers(exp_range("--penalty-exp", &a.penalty_exp)?),
        sigma_range: widths,
        k_range: (klo as usize..=khi as usize).collect(),
        tie_c2_c3: !a.untie_c2_c3,
    };
    let data = load(&a.data)?;
    let folds = stratified_folds(&data, a.folds, a.seed)?;
    let size = rknn_tsvm::eval::grid_size(&base, &grid);
    info!("evaluating {size} grid points with {} job(s)", a.jobs);

    let exec = if a.jobs > 1 { Execution::Parallel } else { Execution::Sequential };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let report = pool.install(|| grid_search_report(&data, &grid, &folds, &base, exec))?;
    let best = &report.best;
    println!(
        "best of {size}: {}% ± {} (train {}s/fold) {}",
        format_sig(best.mean_accuracy),
        format_sig(best.std_accuracy),
        format_sig(best.mean_train_time),
        best.best_params
    );
    if let Some(out) = &a.out {
        let row = AccuracyRow {
            dataset: a.name.clone().unwrap_or_else(|| dataset_name(&a.data.data)),
            algorithm: base.kind.name().into(),
            result: best.clone(),
        };
        write_accuracy_table(&[row], out)?;
    }
    if let Some(out) = &a.points_out {
        let mut w = create(out)?;
        writeln!(w, "c1,c2,c3,k,sigma,mean_accuracy")?;
        for (p, acc) in &report.points {
            let hp = &p.spec.params;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                format_sig(hp.c1),
                format_sig(hp.c2),
                format_sig(hp.c3),
                hp.k,
                format_sig(hp.kernel.sigma),
                format_sig(*acc)
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    ensure!(!a.sizes.is_empty(), "--sizes is empty");
    ensure!(a.dims >= 1, "--dims must be at least 1");
    ensure!(
        a.rect_ratio > 0.0 && a.rect_ratio <= 1.0,
        "--rect-ratio must lie in (0, 1], got {}",
        a.rect_ratio
    );
    for &n in &a.sizes {
        // LDMDBA needs n ≥ 4; the graphs need k = 5 < n
        ensure!(n >= 12, "bench sizes must be at least 12, got {n}");
    }
    let mut rows = Vec::new();
    for &n in &a.sizes {
        let (data, _) = gen_two_gaussian_mixture(n, 0, a.dims, a.separation, a.seed);
        let mut times = Vec::new();
        let runs: [(&str, ClassifierKind, KnnAlgorithm); 4] = [
            ("tsvm", ClassifierKind::Tsvm, KnnAlgorithm::Fsa),
            ("wltsvm", ClassifierKind::Wltsvm, KnnAlgorithm::Fsa),
            ("rknn-fsa", rknn_kind(a.kernel), KnnAlgorithm::Fsa),
            ("rknn-ldmdba", rknn_kind(a.kernel), KnnAlgorithm::Ldmdba),
        ];
        for (name, kind, knn) in runs {
            let mut hp = scaling_params(knn);
            hp.seed = a.seed;
            if a.kernel == Kernel::Linear {
                hp.kernel = KernelSpec::linear();
            } else {
                hp.rect_ratio = a.rect_ratio;
            }
            let spec = ClassifierSpec::new(kind, hp);
            let (_, secs) = timed_train(&spec, &data).with_context(|| format!("{name} at n={n}"))?;
            info!("n={n} {name}: {secs:.3}s");
            times.push((name.to_string(), secs));
        }
        let speedup = timed_speedup(times[2].1, times[3].1)?;
        println!(
            "n={n}: {} | speedup {}",
            times
                .iter()
                .map(|(k, t)| format!("{k} {}s", format_sig(*t)))
                .collect::<Vec<_>>()
                .join(", "),
            format_sig(speedup)
        );
        rows.push(TimingRow {
            dataset: format!("mixture-{}d", a.dims),
            samples: n,
            times,
            speedup: Some(speedup),
        });
    }
    if let Some(out) = &a.out {
        write_timing_table(&rows, out)?;
    }
    Ok(())
}

fn rknn_kind(k: Kernel) -> ClassifierKind {
    match k {
        Kernel::Linear => ClassifierKind::RknnLinear,
        Kernel::Gaussian => ClassifierKind::RknnKernel,
    }
}

fn gen(a: GenArgs) -> Result<()> {
    ensure!(a.n >= 1, "--n must be at least 1");
    match a.generator {
        Generator::Checkerboard => {
            ensure!(a.cells >= 1, "--cells must be at least 1");
            ensure!(a.n_test == 0, "--n-test applies to the mixture generator only");
            write_csv(&gen_checkerboard(a.n, a.cells, a.seed), &a.out)?;
        }
        Generator::Mixture => {
            ensure!(a.dims >= 1, "--dims must be at least 1");
            ensure!(a.separation.is_finite(), "--separation must be finite");
            let (train, test) = gen_two_gaussian_mixture(a.n, a.n_test, a.dims, a.separation, a.seed);
            write_csv(&train, &a.out)?;
            match (&a.test_out, a.n_test) {
                (Some(p), n) if n > 0 => write_csv(&test, p)?,
                (None, 0) => {}
                _ => bail!("--n-test and --test-out go together"),
            }
        }
    }
    println!("wrote {} samples to {}", a.n, a.out.display());
    Ok(())
}

fn diag(a: DiagArgs) -> Result<()> {
    ensure!(a.k >= 1, "--k must be at least 1");
    check_folds(a.folds)?;
    let kernel = kernel_spec(a.kernel, a.sigma, a.gamma, false)?;
    let data = normalize_minmax(&load(&a.data)?);
    let space = match a.kernel {
        Kernel::Linear => SearchSpace::Input,
        Kernel::Gaussian => SearchSpace::Kernel(kernel),
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let index = knn_search(&data.samples, a.k, space, knn_algorithm(a.knn), Execution::Sequential)?;
    index.write_csv(a.out.join("neighbors.csv"))?;
    for (label, file) in [(Label::Positive, "affinity_pos.csv"), (Label::Negative, "affinity_neg.csv")] {
        let aff = class_affinity(&index, &data.labels, label, WeightScheme::Distance)?;
        aff.write_csv(a.out.join(file))?;
        println!(
            "class {:+}: {} margin points in the opposite class",
            label.sign(),
            aff.margin_count
        );
    }
    let folds = stratified_folds(&data, a.folds, a.seed)?;
    write_fold_csv(&folds, a.out.join("folds.csv"))?;
    println!("diagnostics -> {}", a.out.display());
    Ok(())
}
