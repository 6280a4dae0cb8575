//! Benchmark grid over images, models and noise settings, with a CSV
//! report, per-noise plot data and a JSON metadata sidecar.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use deepdenoise_core::pipeline::{inject_noise, psnr, wiener_prefilter};
use deepdenoise_core::rng::{mix, stream_rng};
use deepdenoise_core::{ImageBuffer, NoiseKind, NoiseSpec, PatchDenoiser};
use rayon::prelude::*;

use crate::denoise::denoise_image_parallel;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "image_id,model,noise_kind,noise_level,psnr_noisy,psnr_wiener,psnr_model";
pub const AGGREGATE_HEADER: &str = "model,noise_kind,noise_level,image_set,count,\
median_psnr_noisy,std_psnr_noisy,median_psnr_wiener,std_psnr_wiener,median_psnr_model,std_psnr_model";

/// Noise levels evaluated by default for each kind.
pub const DEFAULT_LEVELS: [f64; 3] = [0.1, 0.2, 0.4];

const NOISE_STREAM: u64 = 0x0B_E4C4;

pub struct BenchModel<'a, M: ?Sized> {
    pub name: String,
    pub model: &'a M,
    pub patch_size: usize,
}

/// A test image, or the error code that prevented loading it.
pub struct BenchImage {
    pub id: String,
    pub image: std::result::Result<ImageBuffer, &'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub kinds: Vec<NoiseKind>,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub stride: usize,
    /// Label of the image collection, used in the aggregate block.
    pub image_set: String,
}

/// One `(image, model, noise)` cell. Failed stages hold an error code.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image_id: String,
    pub model: String,
    pub noise_kind: NoiseKind,
    pub noise_level: f64,
    pub psnr_noisy: Cell,
    pub psnr_wiener: Cell,
    pub psnr_model: Cell,
}

pub type Cell = std::result::Result<f64, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub model: String,
    pub noise_kind: NoiseKind,
    pub noise_level: f64,
    pub image_set: String,
    pub count: usize,
    /// `(median, sample standard deviation)` of noisy, Wiener and model PSNR.
    pub noisy: (f64, f64),
    pub wiener: (f64, f64),
    pub model_psnr: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Seed for the noise of one cell; independent of evaluation order and of
/// which other images are present.
fn cell_seed_stream(image_id: &str, kind: NoiseKind, level: f64) -> u64 {
    mix(&[NOISE_STREAM, crc32fast::hash(image_id.as_bytes()) as u64, kind as u64, level.to_bits()])
}

fn fail(e: Error) -> Cell {
    Err(e.code().to_string())
}

/// Evaluates every `(image, kind, level)` cell; each model sees the same
/// noisy image and is never told the noise settings.
pub fn run_bench<M: PatchDenoiser + ?Sized>(
    images: &[BenchImage],
    models: &[BenchModel<'_, M>],
    cfg: &BenchConfig,
) -> Result<BenchReport> {
    for w in models.windows(2) {
        if w[0].patch_size != w[1].patch_size {
            return Err(Error::Usage("all benchmark models must share one patch size".into()));
        }
    }
    for l in &cfg.levels {
        NoiseSpec::new(NoiseKind::WhiteGaussian, *l)?;
    }
    let cells: Vec<(&BenchImage, NoiseKind, f64)> = images
        .iter()
        .flat_map(|img| cfg.kinds.iter().flat_map(move |&k| cfg.levels.iter().map(move |&l| (img, k, l))))
        .collect();
    let mut rows: Vec<BenchRow> = cells
        .par_iter()
        .flat_map_iter(|&(img, kind, level)| evaluate_cell(img, kind, level, models, cfg))
        .collect();
    sort_rows(&mut rows);
    let aggregates = aggregate(&rows, &cfg.image_set);
    Ok(BenchReport { rows, aggregates })
}

fn evaluate_cell<M: PatchDenoiser + ?Sized>(
    img: &BenchImage,
    kind: NoiseKind,
    level: f64,
    models: &[BenchModel<'_, M>],
    cfg: &BenchConfig,
) -> Vec<BenchRow> {
    let row = |model: &str, noisy: Cell, wiener: Cell, out: Cell| BenchRow {
        image_id: img.id.clone(),
        model: model.to_string(),
        noise_kind: kind,
        noise_level: level,
        psnr_noisy: noisy,
        psnr_wiener: wiener,
        psnr_model: out,
    };
    let clean = match &img.image {
        Ok(c) => c,
        Err(code) => {
            let e = || Err(code.to_string());
            return models.iter().map(|m| row(&m.name, e(), e(), e())).collect();
        }
    };
    let spec = NoiseSpec { kind, level };
    let mut rng = stream_rng(cfg.seed, cell_seed_stream(&img.id, kind, level));
    let noisy = inject_noise(clean, spec, &mut rng);
    let p_noisy = psnr(clean, &noisy).map_err(Error::from).or_else(fail);
    let p_wiener = wiener_prefilter(&noisy)
        .and_then(|w| psnr(clean, &w))
        .map_err(Error::from)
        .or_else(fail);
    models
        .iter()
        .map(|m| {
            let out = denoise_image_parallel(&noisy, m.model, m.patch_size, cfg.stride)
                .and_then(|d| psnr(clean, &d).map_err(Error::from))
                .or_else(fail);
            row(&m.name, p_noisy.clone(), p_wiener.clone(), out)
        })
        .collect()
}

fn sort_rows(rows: &mut [BenchRow]) {
    rows.sort_by(|a, b| {
        (&a.image_id, &a.model, a.noise_kind)
            .cmp(&(&b.image_id, &b.model, b.noise_kind))
            .then(a.noise_level.total_cmp(&b.noise_level))
    });
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample standard deviation (`n - 1` denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Median and standard deviation per `(model, kind, level)` over rows whose
/// three PSNR values are all present.
pub fn aggregate(rows: &[BenchRow], image_set: &str) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, NoiseKind, u64), Vec<[f64; 3]>> = BTreeMap::new();
    for r in rows {
        let entry = groups
            .entry((r.model.clone(), r.noise_kind, r.noise_level.to_bits()))
            .or_default();
        if let (Ok(a), Ok(b), Ok(c)) = (&r.psnr_noisy, &r.psnr_wiener, &r.psnr_model) {
            entry.push([*a, *b, *c]);
        }
    }
    let mut out: Vec<Aggregate> = groups
        .into_iter()
        .map(|((model, kind, bits), vals)| {
            let col = |k: usize| {
                let xs: Vec<f64> = vals.iter().map(|v| v[k]).collect();
                (median(&xs), sample_std(&xs))
            };
            Aggregate {
                model,
                noise_kind: kind,
                noise_level: f64::from_bits(bits),
                image_set: image_set.to_string(),
                count: vals.len(),
                noisy: col(0),
                wiener: col(1),
                model_psnr: col(2),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (&a.model, a.noise_kind)
            .cmp(&(&b.model, b.noise_kind))
            .then(a.noise_level.total_cmp(&b.noise_level))
    });
    out
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

fn fmt_cell(c: &Cell) -> String {
    match c {
        Ok(x) => fmt_num(*x),
        Err(code) => format!("error:{code}"),
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Persistence(format!("bad number {s:?} in report")))
}

fn parse_cell(s: &str) -> Result<Cell> {
    match s.strip_prefix("error:") {
        Some(code) => Ok(Err(code.to_string())),
        None => parse_num(s).map(Ok),
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

impl BenchReport {
    /// Row block, a blank line, then the aggregate block.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.image_id.clone(),
                r.model.clone(),
                r.noise_kind.to_string(),
                r.noise_level.to_string(),
                fmt_cell(&r.psnr_noisy),
                fmt_cell(&r.psnr_wiener),
                fmt_cell(&r.psnr_model),
            ])
            .expect("in-memory write");
        }
        let mut out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
        out.push('\n');
        let mut w = csv_writer();
        w.write_record(AGGREGATE_HEADER.split(',')).expect("in-memory write");
        for a in &self.aggregates {
            w.write_record([
                a.model.clone(),
                a.noise_kind.to_string(),
                a.noise_level.to_string(),
                a.image_set.clone(),
                a.count.to_string(),
                fmt_num(a.noisy.0),
                fmt_num(a.noisy.1),
                fmt_num(a.wiener.0),
                fmt_num(a.wiener.1),
                fmt_num(a.model_psnr.0),
                fmt_num(a.model_psnr.1),
            ])
            .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
        out
    }

    /// Parses a report and checks that the aggregate block matches the
    /// rows to within 1e-9.
    pub fn parse(text: &str) -> Result<Self> {
        let (rows_txt, agg_txt) = text
            .split_once("\n\n")
            .ok_or_else(|| Error::Persistence("report lacks an aggregate block".into()))?;
        let read = |t: &str, header: &str| -> Result<Vec<csv::StringRecord>> {
            let mut r = csv::ReaderBuilder::new().from_reader(t.as_bytes());
            let h = r.headers().map_err(|e| Error::Persistence(e.to_string()))?;
            if h.iter().collect::<Vec<_>>().join(",") != header {
                return Err(Error::Persistence("unexpected report header".into()));
            }
            r.records()
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Persistence(e.to_string()))
        };
        let kind = |s: &str| s.parse::<NoiseKind>().map_err(|e| Error::Persistence(e.to_string()));
        let rows = read(rows_txt, CSV_HEADER)?
            .iter()
            .map(|r| {
                Ok(BenchRow {
                    image_id: r[0].to_string(),
                    model: r[1].to_string(),
                    noise_kind: kind(&r[2])?,
                    noise_level: parse_num(&r[3])?,
                    psnr_noisy: parse_cell(&r[4])?,
                    psnr_wiener: parse_cell(&r[5])?,
                    psnr_model: parse_cell(&r[6])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let aggregates = read(agg_txt, AGGREGATE_HEADER)?
            .iter()
            .map(|r| {
                Ok(Aggregate {
                    model: r[0].to_string(),
                    noise_kind: kind(&r[1])?,
                    noise_level: parse_num(&r[2])?,
                    image_set: r[3].to_string(),
                    count: r[4].parse().map_err(|_| Error::Persistence("bad count".into()))?,
                    noisy: (parse_num(&r[5])?, parse_num(&r[6])?),
                    wiener: (parse_num(&r[7])?, parse_num(&r[8])?),
                    model_psnr: (parse_num(&r[9])?, parse_num(&r[10])?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let report = Self { rows, aggregates };
        report.verify_aggregates()?;
        Ok(report)
    }

    /// Recomputes the aggregates from the rows and compares them.
    pub fn verify_aggregates(&self) -> Result<()> {
        let set = self.aggregates.first().map(|a| a.image_set.as_str()).unwrap_or("");
        let expected = aggregate(&self.rows, set);
        let close = |a: f64, b: f64| {
            a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-9
        };
        let same = |x: &Aggregate, y: &Aggregate| {
            x.model == y.model
                && x.noise_kind == y.noise_kind
                && x.noise_level == y.noise_level
                && x.count == y.count
                && [(x.noisy, y.noisy), (x.wiener, y.wiener), (x.model_psnr, y.model_psnr)]
                    .iter()
                    .all(|(p, q)| close(p.0, q.0) && close(p.1, q.1))
        };
        if expected.len() != self.aggregates.len()
            || !expected.iter().zip(&self.aggregates).all(|(x, y)| same(x, y))
        {
            return Err(Error::Persistence("aggregate block does not match the rows".into()));
        }
        Ok(())
    }

    /// CSV of median PSNR against noise level for one noise kind: one
    /// column for the noisy input, one for Wiener and one per model.
    pub fn plot_data(&self, kind: NoiseKind) -> String {
        let aggs: Vec<&Aggregate> = self.aggregates.iter().filter(|a| a.noise_kind == kind).collect();
        let mut models: Vec<&str> = aggs.iter().map(|a| a.model.as_str()).collect();
        models.dedup();
        let mut levels: Vec<f64> = aggs.iter().map(|a| a.noise_level).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut out = String::from("level,noisy,wiener");
        for m in &models {
            let _ = write!(out, ",{m}");
        }
        out.push('\n');
        for l in levels {
            let at = |m: &str| aggs.iter().find(|a| a.model == m && a.noise_level == l);
            let first = aggs.iter().find(|a| a.noise_level == l).expect("level came from aggregates");
            let _ = write!(out, "{l},{},{}", fmt_num(first.noisy.0), fmt_num(first.wiener.0));
            for m in &models {
                let _ = write!(out, ",{}", at(m).map_or("nan".into(), |a| fmt_num(a.model_psnr.0)));
            }
            out.push('\n');
        }
        out
    }
}

/// Orders levels ascending and drops duplicates.
pub fn canonical_levels(levels: &[f64]) -> Vec<f64> {
    let mut v = levels.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_std() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((sample_std(&[1.0, 2.0, 3.0, 4.0]) - 1.2909944487358056).abs() < 1e-15);
        assert_eq!(sample_std(&[5.0]), 0.0);
    }

    #[test]
    fn tampered_aggregates_are_detected() {
        let row = |id: &str, v: f64| BenchRow {
            image_id: id.into(),
            model: "dae1".into(),
            noise_kind: NoiseKind::SaltPepper,
            noise_level: 0.2,
            psnr_noisy: Ok(10.0),
            psnr_wiener: Ok(15.0),
            psnr_model: Ok(v),
        };
        let rows = vec![row("a", 18.0), row("b", 19.0), row("c", 21.0)];
        let report = BenchReport {
            aggregates: aggregate(&rows, "set"),
            rows,
        };
        let text = report.to_csv();
        assert_eq!(BenchReport::parse(&text).unwrap().aggregates[0].model_psnr.0, 19.0);
        let bad = text.replace(",19,", ",19.1,");
        assert!(BenchReport::parse(&bad).is_err());
    }

    #[test]
    fn error_cells_round_trip_and_are_skipped() {
        let rows = vec![BenchRow {
            image_id: "x".into(),
            model: "grbm".into(),
            noise_kind: NoiseKind::WhiteGaussian,
            noise_level: 0.4,
            psnr_noisy: Err("codec".into()),
            psnr_wiener: Err("codec".into()),
            psnr_model: Err("codec".into()),
        }];
        let report = BenchReport {
            aggregates: aggregate(&rows, "set"),
            rows,
        };
        let back = BenchReport::parse(&report.to_csv()).unwrap();
        assert_eq!(back.rows, report.rows);
        assert_eq!(back.aggregates[0].count, 0);
    }
}
