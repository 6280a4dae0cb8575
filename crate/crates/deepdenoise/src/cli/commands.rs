use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use deepdenoise_core::pipeline::{inject_noise, psnr, wiener_prefilter};
use deepdenoise_core::rng::{mix, stream_rng};
use deepdenoise_core::{ImageBuffer, NoiseKind, NoiseSpec};
use serde::Serialize;

use super::{BenchArgs, DenoiseArgs, SampleArgs, TrainArgs};
use crate::arch::{train_architecture, Architecture};
use crate::bench::{aggregate, canonical_levels, run_bench, BenchConfig, BenchImage, BenchModel, BenchReport, BenchRow};
use crate::denoise::denoise_image_parallel;
use crate::error::{Error, Result};
use crate::io::{list_images, load_image, manifest_path, sample_patch_corpus, save_image, ModelFile, PatchCorpus, TrainingMeta};

const DENOISE_NOISE_STREAM: u64 = 0xDE_4015E;

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> Result<()> {
    if !a.dir.is_dir() {
        return Err(Error::Data(format!("{} is not a directory", a.dir.display())));
    }
    let (corpus, manifest) = sample_patch_corpus(&a.dir, a.n, a.patch_size, a.per_image, a.seed)?;
    corpus.save(&a.out)?;
    let mpath = manifest_path(&a.out);
    manifest.save(&mpath)?;
    say(
        out,
        format_args!(
            "sampled {} patches of {}x{} from {} images into {} (manifest {})",
            a.n,
            a.patch_size,
            a.patch_size,
            manifest.files.len(),
            a.out.display(),
            mpath.display()
        ),
    )
}

pub fn cmd_train(a: &TrainArgs, threads: usize, out: &mut dyn Write) -> Result<()> {
    let arch: Architecture = a.model.parse()?;
    let corpus = PatchCorpus::load(&a.corpus)?;
    let mut cfg = arch.recipe();
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    if let Some(m) = a.minibatch {
        cfg.minibatch = m;
    }
    cfg.validate()?;
    let p = corpus.patch_size;
    say(
        out,
        format_args!(
            "training {arch} on {} patches of {p}x{p}: hidden {:?}, epochs {}, seed {}, threads {threads}",
            corpus.patches.rows(),
            arch.layer_sizes(p, a.hidden_factor),
            cfg.epochs,
            cfg.seed
        ),
    )?;
    let mut log_err = None;
    let mut log = |r: &deepdenoise_core::EpochRecord| {
        if log_err.is_none() {
            log_err = writeln!(out, "{r}").err();
        }
    };
    let file = train_architecture(arch, &corpus.patches, p, a.hidden_factor, &cfg, &mut log)?;
    if let Some(e) = log_err {
        return Err(Error::io("<stdout>", e));
    }
    file.save(&a.out)?;
    say(out, format_args!("wrote {}", a.out.display()))
}

/// Noisy, Wiener-only and model PSNR against a clean reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrTriple {
    pub noisy: f64,
    pub wiener: f64,
    pub model: f64,
}

pub fn cmd_denoise(a: &DenoiseArgs, out: &mut dyn Write) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let input = load_image(&a.input)?;
    let noisy = match a.noise.kind() {
        Some(kind) => {
            let spec = NoiseSpec::new(kind, a.level).map_err(|e| Error::Usage(e.to_string()))?;
            inject_noise(&input, spec, &mut stream_rng(a.seed, mix(&[DENOISE_NOISE_STREAM])))
        }
        None => input.clone(),
    };
    if noisy.width() < file.patch_size || noisy.height() < file.patch_size {
        return Err(Error::Usage(format!(
            "image {}x{} is smaller than the model's {}x{} patches",
            noisy.width(),
            noisy.height(),
            file.patch_size,
            file.patch_size
        )));
    }
    if a.stride == 0 || a.stride > file.patch_size {
        return Err(Error::Usage(format!("stride must lie in 1..={}", file.patch_size)));
    }
    let denoised = denoise_image_parallel(&noisy, &file.model, file.patch_size, a.stride)?;
    save_image(&denoised, &a.out)?;
    if let Some(path) = &a.noisy_out {
        save_image(&noisy, path)?;
    }
    let reference: Option<ImageBuffer> = match (&a.clean, a.noise.kind()) {
        (Some(path), _) => Some(load_image(path)?),
        (None, Some(_)) => Some(input),
        (None, None) => None,
    };
    say(out, format_args!("wrote {}", a.out.display()))?;
    let Some(clean) = reference else {
        if a.report.is_some() {
            return Err(Error::Usage("--report needs --clean or --noise".into()));
        }
        return Ok(());
    };
    let t = PsnrTriple {
        noisy: psnr(&clean, &noisy)?,
        wiener: psnr(&clean, &wiener_prefilter(&noisy)?)?,
        model: psnr(&clean, &denoised)?,
    };
    say(
        out,
        format_args!("psnr_noisy={:.4} psnr_wiener={:.4} psnr_model={:.4}", t.noisy, t.wiener, t.model),
    )?;
    if let Some(path) = &a.report {
        let rows = vec![BenchRow {
            image_id: file_name(&a.input),
            model: file_stem(&a.model),
            noise_kind: a.noise.kind().unwrap_or(NoiseKind::WhiteGaussian),
            noise_level: if a.noise.kind().is_some() { a.level } else { 0.0 },
            psnr_noisy: Ok(t.noisy),
            psnr_wiener: Ok(t.wiener),
            psnr_model: Ok(t.model),
        }];
        let report = BenchReport {
            aggregates: aggregate(&rows, "single"),
            rows,
        };
        write_file(path, report.to_csv())?;
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct BenchModelMeta {
    name: String,
    file: PathBuf,
    kind: &'static str,
    layer_sizes: Vec<usize>,
    patch_size: usize,
    training: TrainingMeta,
}

#[derive(Serialize)]
struct BenchMeta {
    seed: u64,
    stride: usize,
    kinds: Vec<String>,
    levels: Vec<f64>,
    image_set: String,
    images: Vec<String>,
    models: Vec<BenchModelMeta>,
    threads: usize,
}

/// `<dir>/<stem>.<kind>.dat` next to the report.
pub fn plot_data_path(report: &Path, kind: NoiseKind) -> PathBuf {
    report.with_file_name(format!("{}.{}.dat", file_stem(report), kind.name()))
}

/// `<report>.meta.json`.
pub fn bench_meta_path(report: &Path) -> PathBuf {
    let mut s = report.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn cmd_bench(a: &BenchArgs, threads: usize, out: &mut dyn Write) -> Result<()> {
    let files: Vec<ModelFile> = a.models.iter().map(|p| ModelFile::load(p)).collect::<Result<_>>()?;
    let names: Vec<String> = a.models.iter().map(|p| file_stem(p)).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Usage(format!("two models are named {n:?}; rename one file")));
        }
    }
    let mut kinds: Vec<NoiseKind> = a
        .kinds
        .iter()
        .map(|k| k.parse::<NoiseKind>().map_err(|e| Error::Usage(e.to_string())))
        .collect::<Result<_>>()?;
    kinds.sort();
    kinds.dedup();
    let levels = canonical_levels(&a.levels);
    let paths = list_images(&a.images)?;
    let images: Vec<BenchImage> = paths
        .iter()
        .map(|p| BenchImage {
            id: file_name(p),
            image: load_image(p).map_err(|e| e.code()),
        })
        .collect();
    let cfg = BenchConfig {
        kinds: kinds.clone(),
        levels: levels.clone(),
        seed: a.seed,
        stride: a.stride,
        image_set: file_name(&a.images),
    };
    let models: Vec<BenchModel<'_, deepdenoise_core::Model>> = files
        .iter()
        .zip(&names)
        .map(|(f, n)| BenchModel {
            name: n.clone(),
            model: &f.model,
            patch_size: f.patch_size,
        })
        .collect();
    let report = run_bench(&images, &models, &cfg)?;
    write_file(&a.out, report.to_csv())?;
    for &k in &kinds {
        write_file(&plot_data_path(&a.out, k), report.plot_data(k))?;
    }
    let meta = BenchMeta {
        seed: a.seed,
        stride: a.stride,
        kinds: kinds.iter().map(|k| k.name().to_string()).collect(),
        levels,
        image_set: cfg.image_set.clone(),
        images: images.iter().map(|i| i.id.clone()).collect(),
        models: files
            .iter()
            .zip(&names)
            .zip(&a.models)
            .map(|((f, n), p)| BenchModelMeta {
                name: n.clone(),
                file: p.clone(),
                kind: f.kind().name(),
                layer_sizes: f.model.layer_sizes(),
                patch_size: f.patch_size,
                training: f.meta,
            })
            .collect(),
        threads,
    };
    write_file(
        &bench_meta_path(&a.out),
        serde_json::to_vec_pretty(&meta).expect("metadata serializes"),
    )?;
    let failed = report.rows.iter().filter(|r| r.psnr_model.is_err()).count();
    say(
        out,
        format_args!(
            "evaluated {} rows ({failed} failed) into {}",
            report.rows.len(),
            a.out.display()
        ),
    )?;
    for g in &report.aggregates {
        say(
            out,
            format_args!(
                "{:<8} {:<10} {:.2}  noisy {:.2}  wiener {:.2}  model {:.2} ({:.2})",
                g.model, g.noise_kind, g.noise_level, g.noisy.0, g.wiener.0, g.model_psnr.0, g.model_psnr.1
            ),
        )?;
    }
    Ok(())
}
