//! Tool-on, tool-off and package experiments.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::bdrate::{bd_rate, BdError, RdCurve};
use super::corpus::CorpusItem;
use crate::codec::{decode_frame, encode_frame, CodecError, Tool, ToolConfig, DEFAULT_LAMBDA_SCALE, DEFAULT_SHARED_DEPTH};
use crate::frame::QualityScore;

/// QP ladder of the evaluation protocol.
pub const EXPERIMENT_QPS: [u8; 6] = [23, 31, 39, 47, 55, 63];
/// Tolerance, in percentage points, of the additivity test.
pub const ADDITIVE_TOLERANCE: f64 = 0.1;
/// SSIM-dB value reported for a perfect SSIM.
const SSIM_DB_CAP: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Anchor all tools off, test enables one tool.
    ToolOn,
    /// Anchor all tools on, test disables one tool.
    ToolOff,
    /// Anchor all tools off, test all tools on.
    Package,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ToolOn => "tool-on",
            ExperimentKind::ToolOff => "tool-off",
            ExperimentKind::Package => "package",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tool-on" => Ok(ExperimentKind::ToolOn),
            "tool-off" => Ok(ExperimentKind::ToolOff),
            "package" => Ok(ExperimentKind::Package),
            _ => Err(format!("unknown experiment kind '{s}'")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("encoding {file} at qp {qp} with tools {tools:#04x}: {source}")]
    Encode { file: String, qp: u8, tools: u8, source: CodecError },
    #[error("decoding {file} at qp {qp} with tools {tools:#04x}: {source}")]
    Decode { file: String, qp: u8, tools: u8, source: CodecError },
    #[error("decoder output differs from encoder reconstruction for {file} at qp {qp} with tools {tools:#04x}")]
    Mismatch { file: String, qp: u8, tools: u8 },
    #[error("BD-rate of {file} for {label}: {source}")]
    BdRate { file: String, label: String, source: BdError },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("at least 4 QPs are needed, got {0}")]
    TooFewQps(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOptions {
    pub qps: Vec<u8>,
    pub lambda_scale: f64,
    pub shared_depth: u8,
    /// Run encodes one at a time so that time ratios are meaningful.
    pub timing_serial: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            qps: EXPERIMENT_QPS.to_vec(),
            lambda_scale: DEFAULT_LAMBDA_SCALE,
            shared_depth: DEFAULT_SHARED_DEPTH,
            timing_serial: false,
        }
    }
}

/// One anchor/test pair, as tool bitmaps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub label: String,
    pub anchor: u8,
    pub test: u8,
}

/// The comparisons of an experiment kind.
pub fn comparisons(kind: ExperimentKind) -> Vec<Comparison> {
    let all = ToolConfig::all_on(0).bitmap();
    match kind {
        ExperimentKind::ToolOn => Tool::ALL
            .iter()
            .map(|t| Comparison { label: t.name().to_uppercase(), anchor: 0, test: t.bit() })
            .collect(),
        ExperimentKind::ToolOff => Tool::ALL
            .iter()
            .map(|t| Comparison { label: t.name().to_uppercase(), anchor: all, test: all & !t.bit() })
            .collect(),
        ExperimentKind::Package => vec![Comparison { label: "ALL".into(), anchor: 0, test: all }],
    }
}

/// Result of one encode and decode.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub bits: usize,
    pub pixels: usize,
    pub quality: QualityScore,
    pub enc_secs: f64,
    pub dec_secs: f64,
}

impl Measurement {
    pub fn bpp(&self) -> f64 {
        self.bits as f64 / self.pixels as f64
    }
}

/// `-10 log10(1 - ssim)`, capped.
pub fn ssim_db(ssim: f64) -> f64 {
    if ssim >= 1.0 {
        SSIM_DB_CAP
    } else {
        (-10.0 * (1.0 - ssim).log10()).min(SSIM_DB_CAP)
    }
}

/// `test / anchor`.
pub fn time_ratio(anchor: f64, test: f64) -> f64 {
    test / anchor
}

/// BD-rates of one anchor/test pair, in percent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BdRates {
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub yuv_psnr: f64,
    pub yuv_ssim: f64,
}

impl BdRates {
    fn mean(rows: &[BdRates]) -> BdRates {
        let n = rows.len().max(1) as f64;
        let s = |f: fn(&BdRates) -> f64| rows.iter().map(f).sum::<f64>() / n;
        BdRates { y: s(|r| r.y), u: s(|r| r.u), v: s(|r| r.v), yuv_psnr: s(|r| r.yuv_psnr), yuv_ssim: s(|r| r.yuv_ssim) }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub class: String,
    pub tool: String,
    pub bd: BdRates,
    pub enc_ratio: f64,
    pub dec_ratio: f64,
}

/// Label of the row averaging every frame.
pub const AVERAGE_CLASS: &str = "Average";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn row(&self, class: &str, tool: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.class == class && r.tool.eq_ignore_ascii_case(tool))
    }

    pub fn average(&self, tool: &str) -> Option<&ReportRow> {
        self.row(AVERAGE_CLASS, tool)
    }

    /// Writes the report; time ratios are percentages.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "class", "tool", "BDR-Y", "BDR-U", "BDR-V", "BDR-YUV(PSNR)", "BDR-YUV(SSIM)", "enc-ratio", "dec-ratio",
        ])?;
        let pct = |v: f64| format!("{v:.2}%");
        for r in &self.rows {
            out.write_record([
                r.class.clone(),
                r.tool.clone(),
                pct(r.bd.y),
                pct(r.bd.u),
                pct(r.bd.v),
                pct(r.bd.yuv_psnr),
                pct(r.bd.yuv_ssim),
                format!("{:.0}%", r.enc_ratio * 100.0),
                format!("{:.0}%", r.dec_ratio * 100.0),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Encodes and decodes one frame, checking decoder agreement.
pub fn measure(item: &CorpusItem, cfg: &ToolConfig) -> Result<Measurement, HarnessError> {
    let (file, qp, tools) = (item.name.clone(), cfg.qp, cfg.bitmap());
    let t0 = Instant::now();
    let out = encode_frame(&item.frame, cfg)
        .map_err(|source| HarnessError::Encode { file: file.clone(), qp, tools, source })?;
    let enc_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let dec = decode_frame(&out.bitstream)
        .map_err(|source| HarnessError::Decode { file: file.clone(), qp, tools, source })?;
    let dec_secs = t1.elapsed().as_secs_f64();
    if dec != out.recon {
        return Err(HarnessError::Mismatch { file, qp, tools });
    }
    Ok(Measurement {
        bits: out.stats.bits,
        pixels: item.frame.width() * item.frame.height(),
        quality: out.stats.quality,
        enc_secs,
        dec_secs,
    })
}

fn config(bits: u8, qp: u8, opts: &ExperimentOptions) -> ToolConfig {
    let mut c = ToolConfig::from_bitmap(bits, qp);
    c.lambda_scale = opts.lambda_scale;
    c.shared_depth = opts.shared_depth;
    c
}

type Key = (u8, usize, u8);

/// Measures every `(tool bitmap, frame, qp)` once.
pub fn measure_all(
    bitmaps: &[u8],
    corpus: &[CorpusItem],
    opts: &ExperimentOptions,
) -> Result<HashMap<Key, Measurement>, HarnessError> {
    let mut keys: Vec<Key> = Vec::new();
    for &b in bitmaps {
        for f in 0..corpus.len() {
            for &qp in &opts.qps {
                if !keys.contains(&(b, f, qp)) {
                    keys.push((b, f, qp));
                }
            }
        }
    }
    let run = |&(b, f, qp): &Key| measure(&corpus[f], &config(b, qp, opts)).map(|m| ((b, f, qp), m));
    let results: Result<Vec<_>, _> = if opts.timing_serial {
        keys.iter().map(run).collect()
    } else {
        keys.par_iter().map(run).collect()
    };
    Ok(results?.into_iter().collect())
}

fn curve(points: Vec<(f64, f64)>) -> Result<RdCurve, BdError> {
    RdCurve::new(points)
}

fn frame_bd(anchor: &[&Measurement], test: &[&Measurement]) -> Result<BdRates, BdError> {
    let bd = |q: &dyn Fn(&QualityScore) -> f64| -> Result<f64, BdError> {
        let a = curve(anchor.iter().map(|m| (m.bpp(), q(&m.quality))).collect())?;
        let t = curve(test.iter().map(|m| (m.bpp(), q(&m.quality))).collect())?;
        bd_rate(&a, &t)
    };
    Ok(BdRates {
        y: bd(&|q| q.psnr[0])?,
        u: bd(&|q| q.psnr[1])?,
        v: bd(&|q| q.psnr[2])?,
        yuv_psnr: bd(&|q| q.overall_psnr)?,
        yuv_ssim: bd(&|q| ssim_db(q.overall_ssim))?,
    })
}

/// Runs explicit comparisons over a corpus.
pub fn run_comparisons(
    comps: &[Comparison],
    corpus: &[CorpusItem],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport, HarnessError> {
    if corpus.is_empty() {
        return Err(HarnessError::EmptyCorpus);
    }
    if opts.qps.len() < 4 {
        return Err(HarnessError::TooFewQps(opts.qps.len()));
    }
    let bitmaps: Vec<u8> = comps.iter().flat_map(|c| [c.anchor, c.test]).collect();
    let meas = measure_all(&bitmaps, corpus, opts)?;
    let series = |b: u8, f: usize| -> Vec<&Measurement> { opts.qps.iter().map(|&qp| &meas[&(b, f, qp)]).collect() };
    let mut rows = Vec::new();
    for c in comps {
        // Per class: BD-rates and total times of every frame.
        let mut by_class: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (f, item) in corpus.iter().enumerate() {
            by_class.entry(item.class()).or_default().push(f);
        }
        let mut per_frame = Vec::with_capacity(corpus.len());
        for (f, item) in corpus.iter().enumerate() {
            let bd = frame_bd(&series(c.anchor, f), &series(c.test, f))
                .map_err(|source| HarnessError::BdRate { file: item.name.clone(), label: c.label.clone(), source })?;
            per_frame.push(bd);
        }
        let row = |class: String, frames: &[usize]| {
            let bds: Vec<BdRates> = frames.iter().map(|&f| per_frame[f]).collect();
            let time = |b: u8, dec: bool| -> f64 {
                frames
                    .iter()
                    .flat_map(|&f| series(b, f))
                    .map(|m| if dec { m.dec_secs } else { m.enc_secs })
                    .sum()
            };
            ReportRow {
                class,
                tool: c.label.clone(),
                bd: BdRates::mean(&bds),
                enc_ratio: time_ratio(time(c.anchor, false), time(c.test, false)),
                dec_ratio: time_ratio(time(c.anchor, true), time(c.test, true)),
            }
        };
        for (class, frames) in &by_class {
            rows.push(row(class.clone(), frames));
        }
        let all: Vec<usize> = (0..corpus.len()).collect();
        rows.push(row(AVERAGE_CLASS.to_string(), &all));
    }
    Ok(ExperimentReport { rows })
}

/// Runs a tool-on, tool-off or package experiment.
pub fn run_experiment(
    kind: ExperimentKind,
    corpus: &[CorpusItem],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport, HarnessError> {
    run_comparisons(&comparisons(kind), corpus, opts)
}

/// Tool-on gain against tool-off loss for one tool.
#[derive(Clone, Debug, PartialEq)]
pub struct Additivity {
    pub tool: String,
    /// `-BDR` of the tool-on test.
    pub on_gain: f64,
    /// `+BDR` of the tool-off test.
    pub off_loss: f64,
    /// The tool-on gain does not exceed the tool-off loss (within
    /// [`ADDITIVE_TOLERANCE`]).
    pub additive: bool,
}

/// Compares average overall-PSNR BD-rates of matching tool rows.
pub fn additivity(tool_on: &ExperimentReport, tool_off: &ExperimentReport) -> Vec<Additivity> {
    tool_on
        .rows
        .iter()
        .filter(|r| r.class == AVERAGE_CLASS)
        .filter_map(|on| {
            let off = tool_off.average(&on.tool)?;
            let (on_gain, off_loss) = (-on.bd.yuv_psnr, off.bd.yuv_psnr);
            Some(Additivity { tool: on.tool.clone(), on_gain, off_loss, additive: on_gain <= off_loss + ADDITIVE_TOLERANCE })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_sets() {
        let on = comparisons(ExperimentKind::ToolOn);
        assert_eq!(on.len(), 6);
        assert!(on.iter().all(|c| c.anchor == 0 && c.test.count_ones() == 1));
        let off = comparisons(ExperimentKind::ToolOff);
        assert!(off.iter().all(|c| c.anchor == 0x3f && c.test.count_ones() == 5));
        assert_eq!(comparisons(ExperimentKind::Package)[0].test, 0x3f);
        assert_eq!("tool-off".parse::<ExperimentKind>(), Ok(ExperimentKind::ToolOff));
    }

    #[test]
    fn ratios_and_ssim_axis() {
        assert_eq!(time_ratio(3.0, 3.0), 1.0);
        assert_eq!(time_ratio(1.5, 3.0), 2.0);
        assert_eq!(ssim_db(1.0), SSIM_DB_CAP);
        assert!((ssim_db(0.9) - 10.0).abs() < 1e-12);
    }

    fn row(tool: &str, v: f64) -> ReportRow {
        ReportRow {
            class: AVERAGE_CLASS.into(),
            tool: tool.into(),
            bd: BdRates { yuv_psnr: v, ..Default::default() },
            enc_ratio: 3.85,
            dec_ratio: 1.0,
        }
    }

    #[test]
    fn additivity_rule() {
        let on = ExperimentReport { rows: vec![row("SDP", -2.0), row("MRL", -1.0)] };
        let off = ExperimentReport { rows: vec![row("SDP", 2.05), row("MRL", 0.5)] };
        let a = additivity(&on, &off);
        assert!(a[0].additive);
        assert!(!a[1].additive);
    }

    #[test]
    fn csv_layout() {
        let rep = ExperimentReport { rows: vec![row("CCSO", -1.234)] };
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "class,tool,BDR-Y,BDR-U,BDR-V,BDR-YUV(PSNR),BDR-YUV(SSIM),enc-ratio,dec-ratio"
        );
        assert_eq!(lines.next().unwrap(), "Average,CCSO,0.00%,0.00%,0.00%,-1.23%,0.00%,385%,100%");
    }
}
