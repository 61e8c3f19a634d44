//! Property suites, one per module invariant. Each takes the number of
//! cases and reports the first minimal failure.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bav1::bitio::{empirical_entropy_bits, Cdf, RangeDecoder, RangeEncoder};
use bav1::ccso::{apply_ccso, derive_lut, optimize_lut, read_section, write_section, CENTER_BIN};
use bav1::codec::{
    decode_frame_with, encode_frame, luma_tus, CodecError, DecoderCaps, Tool, ToolConfig,
};
use bav1::frame::metrics::ssim_contrast_structure;
use bav1::frame::{overall_score, psnr, ssim, Plane};
use bav1::harness::corpus::CorpusItem;
use bav1::harness::{bd_rate, run_comparisons, time_ratio, Comparison, ExperimentOptions, RdCurve};
use bav1::intra::{
    allowed_ipm_set, dr_derivative, predict, IntraMode, RefSamples, BASE_MODES, DCT_IF_4TAP,
    MAX_REF_LINE,
};
use bav1::partition::{
    parse_tree, serialize_tree, PartitionCdfs, PartitionNode, SdpTree, FULLY_SHARED, SB_SIZE,
};
use bav1::quant::{QuantParams, MAX_DEQUANT, MAX_QP};
use bav1::transform::kernels::{dst4_matrix, dst7_matrix};
use bav1::transform::nsdt::{nsdt_apply_forward, nsdt_forward_float, NSDT_CONTEXTS, NSDT_K};
use bav1::transform::{
    forward_tx2d_float, lgt_decomposition, lgt_kernel, scan_order, GglSpec, KernelSet, NsdtKernelSet,
};

use super::fuzz_frame;

pub type SuiteFn = fn(u32) -> Result<(), String>;

/// Every suite as `(module, invariant, runner)`.
pub const SUITES: &[(&str, &str, SuiteFn)] = &[
    ("bitio", "round trip", bitio_round_trip),
    ("bitio", "efficiency", bitio_efficiency),
    ("bitio", "cdf monotone and normalized", bitio_cdf_valid),
    ("frame", "psnr and ssim symmetric", frame_symmetry),
    ("frame", "shift invariance", frame_shift_invariance),
    ("frame", "overall score linear", frame_overall_linear),
    ("partition", "tiling and sdp constraint", partition_tiling),
    ("partition", "serialize then parse", partition_round_trip),
    ("intra", "line 0 matches legacy predictor", intra_legacy),
    ("intra", "constant reference", intra_constant),
    ("intra", "filter unity gain", intra_filter_gain),
    ("intra", "allowed mode set", intra_allowed_set),
    ("transform", "lgt spectrum", transform_lgt_spectrum),
    ("transform", "closed-form oracles", transform_oracles),
    ("transform", "lgt scale invariance", transform_scale_invariance),
    ("transform", "separable rank one", transform_rank_one),
    ("transform", "nsdt energy and support", transform_nsdt),
    ("quant", "odd symmetry", quant_odd),
    ("quant", "error bound", quant_error_bound),
    ("ccso", "never increases sse", ccso_sse),
    ("ccso", "flat idempotence", ccso_flat),
    ("ccso", "decoder reproduces filter", ccso_decoder),
    ("codec", "bit-exact round trip", codec_round_trip),
    ("codec", "tool gating", codec_tool_gating),
    ("codec", "baseline equivalence", codec_baseline),
    ("codec", "nsdt only at depth 0", codec_nsdt_depth),
    ("harness", "bd-rate identity", harness_bd_identity),
    ("harness", "bd-rate order invariance", harness_bd_order),
    ("harness", "report determinism", harness_report_determinism),
    ("harness", "time ratio", harness_time_ratio),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// bitio

#[derive(Clone, Debug)]
enum Op {
    Symbol { alphabet: usize, ctx: usize, value: usize },
    Bit(bool),
    Literal { value: u32, bits: u32 },
    Golomb(u32),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (2usize..=16, 0usize..3, any::<usize>())
            .prop_map(|(alphabet, ctx, v)| Op::Symbol { alphabet, ctx, value: v % alphabet }),
        1 => any::<bool>().prop_map(Op::Bit),
        1 => (1u32..=24, any::<u32>()).prop_map(|(bits, v)| Op::Literal { value: v & ((1 << bits) - 1), bits }),
        1 => (0u32..100_000).prop_map(Op::Golomb),
    ]
}

pub fn bitio_round_trip(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(op(), 0..400), |ops| {
        let mut cdfs: BTreeMap<(usize, usize), Cdf> = BTreeMap::new();
        let mut enc = RangeEncoder::new();
        for o in &ops {
            match *o {
                Op::Symbol { alphabet, ctx, value } => {
                    let cdf = cdfs.entry((alphabet, ctx)).or_insert_with(|| Cdf::uniform(alphabet));
                    enc.encode_symbol(cdf, value);
                }
                Op::Bit(b) => enc.encode_bit(b),
                Op::Literal { value, bits } => enc.encode_literal(value, bits),
                Op::Golomb(v) => enc.encode_golomb(v),
            }
        }
        let bytes = enc.finish();
        let mut cdfs: BTreeMap<(usize, usize), Cdf> = BTreeMap::new();
        let mut dec = RangeDecoder::new(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for o in &ops {
            let fail = |e: bav1::bitio::BitioError| TestCaseError::fail(e.to_string());
            match *o {
                Op::Symbol { alphabet, ctx, value } => {
                    let cdf = cdfs.entry((alphabet, ctx)).or_insert_with(|| Cdf::uniform(alphabet));
                    prop_assert_eq!(dec.decode_symbol(cdf).map_err(fail)?, value);
                }
                Op::Bit(b) => prop_assert_eq!(dec.decode_bit().map_err(fail)?, b),
                Op::Literal { value, bits } => prop_assert_eq!(dec.decode_literal(bits).map_err(fail)?, value),
                Op::Golomb(v) => prop_assert_eq!(dec.decode_golomb(32).map_err(fail)?, v),
            }
        }
        Ok(())
    })
}

/// Coded size of an i.i.d. sequence against its empirical entropy.
pub fn coded_vs_entropy(symbols: &[usize], alphabet: usize) -> (f64, f64) {
    let mut cdf = Cdf::uniform(alphabet);
    let mut enc = RangeEncoder::new();
    for &s in symbols {
        enc.encode_symbol(&mut cdf, s);
    }
    ((enc.finish().len() * 8) as f64, empirical_entropy_bits(symbols, alphabet))
}

/// Draws `n` symbols from random weights over the alphabet.
pub fn iid_source(seed: u64, alphabet: usize, n: usize) -> Vec<usize> {
    let mut r = rng(seed);
    let weights: Vec<u32> = (0..alphabet).map(|_| r.gen_range(1..=100)).collect();
    let dist = rand::distributions::WeightedIndex::new(&weights).expect("positive weights");
    (0..n).map(|_| r.sample(&dist)).collect()
}

pub fn bitio_efficiency(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 2usize..=16, 10_000usize..=12_000), |(seed, alphabet, n)| {
        let symbols = iid_source(seed, alphabet, n);
        let (coded, entropy) = coded_vs_entropy(&symbols, alphabet);
        prop_assert!(coded <= entropy * 1.01 + 64.0, "coded {coded} bits, entropy {entropy}");
        Ok(())
    })
}

pub fn bitio_cdf_valid(cases: u32) -> Result<(), String> {
    run(cases, (2usize..=16, prop::collection::vec(any::<usize>(), 0..600)), |(n, updates)| {
        let mut cdf = Cdf::uniform(n);
        for u in updates {
            cdf.update(u % n);
            let v = cdf.values();
            prop_assert!(v.windows(2).all(|w| w[0] < w[1]) && v[0] > 0);
            prop_assert_eq!(*v.last().unwrap(), 32768);
            prop_assert!(cdf.is_valid());
        }
        Ok(())
    })
}

// frame

fn plane_pair() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 8usize..40, 8usize..40)
}

pub fn frame_symmetry(cases: u32) -> Result<(), String> {
    run(cases, plane_pair(), |(seed, w, h)| {
        let mut r = rng(seed);
        let a = super::random_plane(&mut r, w, h, 0, 255);
        let b = super::random_plane(&mut r, w, h, 0, 255);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        Ok(())
    })
}

pub fn frame_shift_invariance(cases: u32) -> Result<(), String> {
    run(cases, (plane_pair(), 1u8..100), |((seed, w, h), c)| {
        let mut r = rng(seed);
        let a = super::random_plane(&mut r, w, h, 0, 255 - c);
        let b = super::random_plane(&mut r, w, h, 0, 255 - c);
        let shift = |p: &Plane| Plane::from_vec(w, h, p.samples().map(|v| v + c).collect());
        let (sa, sb) = (shift(&a), shift(&b));
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&sa, &sb).unwrap());
        let (cs0, cs1) = (ssim_contrast_structure(&a, &b).unwrap(), ssim_contrast_structure(&sa, &sb).unwrap());
        prop_assert!((cs0 - cs1).abs() <= 1e-9, "{cs0} vs {cs1}");
        Ok(())
    })
}

pub fn frame_overall_linear(cases: u32) -> Result<(), String> {
    let v = || -1e3f64..1e3;
    run(cases, ((v(), v(), v()), (v(), v(), v()), v()), |(a, b, k)| {
        let lhs = overall_score(a.0 + k * b.0, a.1 + k * b.1, a.2 + k * b.2);
        let rhs = overall_score(a.0, a.1, a.2) + k * overall_score(b.0, b.1, b.2);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        prop_assert_eq!(overall_score(1.0, 0.0, 0.0), 0.75);
        prop_assert_eq!(overall_score(0.0, 1.0, 0.0), 0.125);
        prop_assert_eq!(overall_score(0.0, 0.0, 1.0), 0.125);
        Ok(())
    })
}

// partition

fn shared_depth() -> impl Strategy<Value = u8> {
    prop_oneof![0u8..5, Just(FULLY_SHARED)]
}

fn random_tree(seed: u64, origin: (usize, usize), shared: u8, frame: (usize, usize)) -> SdpTree {
    let mut r = rng(seed);
    SdpTree::build::<()>(origin, shared, frame, &mut |_, _, _, legal| Ok(*legal.choose(&mut r).unwrap()))
        .expect("infallible chooser")
}

fn coverage(root: &PartitionNode, frame: (usize, usize)) -> Vec<u8> {
    let mut hits = vec![0u8; SB_SIZE * SB_SIZE];
    for leaf in root.leaves() {
        for y in leaf.y..leaf.y + leaf.h {
            for x in leaf.x..leaf.x + leaf.w {
                if x < frame.0 && y < frame.1 {
                    hits[(y - root.rect.y) * SB_SIZE + (x - root.rect.x)] += 1;
                }
            }
        }
    }
    hits
}

fn tree_case() -> impl Strategy<Value = (u64, (usize, usize), u8, (usize, usize))> {
    (any::<u64>(), (1usize..=24, 1usize..=24), shared_depth(), (0usize..3, 0usize..3)).prop_map(
        |(seed, (fw8, fh8), shared, (ox, oy))| {
            let frame = (fw8 * 8, fh8 * 8);
            let origin = ((ox * SB_SIZE).min((frame.0 - 1) / SB_SIZE * SB_SIZE), (oy * SB_SIZE).min((frame.1 - 1) / SB_SIZE * SB_SIZE));
            (seed, origin, shared, frame)
        },
    )
}

pub fn partition_tiling(cases: u32) -> Result<(), String> {
    run(cases, tree_case(), |(seed, origin, shared, frame)| {
        let tree = random_tree(seed, origin, shared, frame);
        prop_assert!(tree.is_valid(frame.0, frame.1));
        for root in [&tree.luma, &tree.chroma] {
            let hits = coverage(root, frame);
            for y in 0..SB_SIZE {
                for x in 0..SB_SIZE {
                    let inside = origin.0 + x < frame.0 && origin.1 + y < frame.1;
                    prop_assert_eq!(hits[y * SB_SIZE + x], u8::from(inside));
                }
            }
        }
        Ok(())
    })
}

pub fn partition_round_trip(cases: u32) -> Result<(), String> {
    run(cases, tree_case(), |(seed, origin, shared, frame)| {
        let tree = random_tree(seed, origin, shared, frame);
        let mut enc = RangeEncoder::new();
        serialize_tree(&mut enc, &mut PartitionCdfs::default(), &tree, frame);
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        let back = parse_tree(&mut dec, &mut PartitionCdfs::default(), origin, shared, frame)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back, tree);
        Ok(())
    })
}

// intra

fn refs(above: Vec<u8>, mut left: Vec<u8>, w: usize, h: usize, line: usize) -> RefSamples {
    left[0] = above[0];
    RefSamples { line, w, h, above, left, have_above: true, have_left: true }
}

fn edge_len(w: usize, h: usize) -> usize {
    2 * (w + h) + 2 * MAX_REF_LINE as usize + 8
}

/// Classic nominal-angle predictor on edges indexed from the first sample
/// past the corner.
fn legacy_predict(angle: i32, above: &[u8], left: &[u8], w: usize, h: usize) -> Vec<u8> {
    let top = |i: i32| -> i32 {
        if i < -1 {
            above[0] as i32
        } else {
            above[((i + 1) as usize).min(above.len() - 1)] as i32
        }
    };
    let lft = |i: i32| -> i32 { left[((i + 1).max(0) as usize).min(left.len() - 1)] as i32 };
    let interp = |f: &dyn Fn(i32) -> i32, pos: i32| {
        let (b, s) = (pos >> 6, (pos & 63) >> 1);
        (f(b) * (32 - s) + f(b + 1) * s + 16) >> 5
    };
    let mut out = vec![0u8; w * h];
    for r in 0..h as i32 {
        for c in 0..w as i32 {
            let v = if angle == 90 {
                top(c)
            } else if angle == 180 {
                lft(r)
            } else if angle < 90 {
                interp(&top, (c << 6) + (r + 1) * dr_derivative(angle))
            } else if angle < 180 {
                let x = (c << 6) - (r + 1) * dr_derivative(180 - angle);
                if x >> 6 >= -1 {
                    interp(&top, x)
                } else {
                    interp(&lft, ((r << 6) - (c + 1) * dr_derivative(angle - 90)).max(-64))
                }
            } else {
                interp(&lft, (r << 6) + (c + 1) * dr_derivative(270 - angle))
            };
            out[r as usize * w + c as usize] = v as u8;
        }
    }
    out
}

fn block_size() -> impl Strategy<Value = (usize, usize)> {
    let side = || prop::sample::select(vec![4usize, 8, 16, 32]);
    (side(), side())
}

pub fn intra_legacy(cases: u32) -> Result<(), String> {
    run(cases, (block_size(), 0u8..8, any::<u64>()), |((w, h), nominal, seed)| {
        let mut r = rng(seed);
        let n = edge_len(w, h);
        let above: Vec<u8> = (0..n).map(|_| r.gen()).collect();
        let left: Vec<u8> = (0..n).map(|_| r.gen()).collect();
        let rs = refs(above, left, w, h, 0);
        let mode = IntraMode::Directional { nominal, delta: 0 };
        let mut out = vec![0u8; w * h];
        predict(mode, &rs, &mut out);
        prop_assert_eq!(out, legacy_predict(mode.angle().unwrap(), &rs.above, &rs.left, w, h));
        Ok(())
    })
}

fn any_mode() -> impl Strategy<Value = IntraMode> {
    prop_oneof![
        Just(IntraMode::Dc),
        Just(IntraMode::Paeth),
        (0u8..8, -3i8..=3).prop_map(|(nominal, delta)| IntraMode::Directional { nominal, delta }),
    ]
}

pub fn intra_constant(cases: u32) -> Result<(), String> {
    run(cases, (block_size(), any_mode(), 0usize..=2, any::<u8>()), |((w, h), mode, line, v)| {
        let n = edge_len(w, h);
        let rs = refs(vec![v; n], vec![v; n], w, h, line);
        let mut out = vec![0u8; w * h];
        predict(mode, &rs, &mut out);
        prop_assert!(out.iter().all(|&s| s == v));
        Ok(())
    })
}

pub fn intra_filter_gain(cases: u32) -> Result<(), String> {
    run(cases, 0usize..DCT_IF_4TAP.len(), |phase| {
        prop_assert_eq!(DCT_IF_4TAP[phase].iter().sum::<i32>(), 128);
        Ok(())
    })
}

pub fn intra_allowed_set(cases: u32) -> Result<(), String> {
    let nb = || prop::option::of(any_mode());
    run(cases, (nb(), nb(), block_size()), |(above, left, (w, h))| {
        let set = allowed_ipm_set(above, left, w, h);
        for i in 0..BASE_MODES {
            prop_assert!(set.contains(&IntraMode::from_base_index(i).unwrap()));
        }
        prop_assert!(set.len() <= 56 + 2);
        Ok(())
    })
}

// transform

fn ggl_spec() -> impl Strategy<Value = GglSpec> {
    (2usize..=32, 0.01f64..100.0, 0.0f64..4.0, 0.0f64..4.0)
        .prop_map(|(n, w, a, b)| GglSpec::relative(n, w, a, b).unwrap())
}

pub fn transform_lgt_spectrum(cases: u32) -> Result<(), String> {
    run(cases, ggl_spec(), |spec| {
        let (values, basis) = lgt_decomposition(&spec).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(basis.orthonormality_error() < 1e-9);
        let tol = 1e-9 * spec.w_e;
        prop_assert!(values[0] >= -tol);
        prop_assert!(values.windows(2).all(|v| v[1] > v[0]), "{values:?}");
        Ok(())
    })
}

pub fn transform_oracles(cases: u32) -> Result<(), String> {
    run(cases, 0.01f64..100.0, |w_e| {
        let k4 = lgt_kernel(&GglSpec::new(4, w_e, 2.0 * w_e, 0.0).unwrap()).unwrap();
        let k16 = lgt_kernel(&GglSpec::new(16, w_e, w_e, 0.0).unwrap()).unwrap();
        prop_assert!(k4.max_abs_diff(&dst4_matrix(4)) <= 1e-6);
        prop_assert!(k16.max_abs_diff(&dst7_matrix(16)) <= 1e-6);
        Ok(())
    })
}

pub fn transform_scale_invariance(cases: u32) -> Result<(), String> {
    run(cases, (ggl_spec(), 0.01f64..100.0), |(spec, c)| {
        let scaled = GglSpec::new(spec.n, c * spec.w_e, c * spec.v_e1, c * spec.v_e2).unwrap();
        let (a, b) = (lgt_kernel(&spec).unwrap(), lgt_kernel(&scaled).unwrap());
        prop_assert!(a.max_abs_diff(&b) <= 1e-6, "{}", a.max_abs_diff(&b));
        Ok(())
    })
}

pub fn transform_rank_one(cases: u32) -> Result<(), String> {
    let kernels: Vec<_> = KernelSet::global().all().collect();
    let count = kernels.len();
    run(cases, (0..count, 0..count, any::<u64>()), |(hi, vi, seed)| {
        let (hk, vk) = (kernels[hi], kernels[vi]);
        let (w, h) = (hk.n, vk.n);
        let mut r = rng(seed);
        let u: Vec<f64> = (0..h).map(|_| r.gen_range(-100.0..100.0)).collect();
        let v: Vec<f64> = (0..w).map(|_| r.gen_range(-100.0..100.0)).collect();
        let x: Vec<f64> = (0..w * h).map(|i| u[i / w] * v[i % w]).collect();
        let out = forward_tx2d_float(&x, hk, vk);
        let (tu, tv) = (vk.float.mul_vec(&u), hk.float.mul_vec(&v));
        for k in 0..h {
            for l in 0..w {
                prop_assert!((out[k * w + l] - tu[k] * tv[l]).abs() <= 1e-9 * 1e4);
            }
        }
        Ok(())
    })
}

pub fn transform_nsdt(cases: u32) -> Result<(), String> {
    run(cases, (block_size(), 0..NSDT_CONTEXTS, 1u8..=2, any::<u64>()), |((w, h), ctx, idx, seed)| {
        let kernel = NsdtKernelSet::global().kernel(ctx, idx);
        let mut r = rng(seed);
        let x: Vec<f64> = (0..w * h).map(|_| r.gen_range(-500.0..500.0)).collect();
        let mut y = x.clone();
        nsdt_forward_float(&mut y, w, h, kernel);
        let scan = scan_order(w, h);
        let touched: Vec<usize> = scan.iter().take(NSDT_K).map(|&p| p as usize).collect();
        let energy = |v: &[f64]| touched.iter().map(|&p| v[p] * v[p]).sum::<f64>();
        prop_assert!((energy(&x) - energy(&y)).abs() <= 1e-6 * energy(&x).max(1.0));
        for p in 0..w * h {
            if !touched.contains(&p) {
                prop_assert_eq!(x[p], y[p]);
            }
        }
        let xi: Vec<i32> = x.iter().map(|&v| v as i32).collect();
        let mut yi = xi.clone();
        nsdt_apply_forward(&mut yi, w, h, kernel);
        for p in 0..w * h {
            if !touched.contains(&p) {
                prop_assert_eq!(xi[p], yi[p]);
            }
        }
        Ok(())
    })
}

// quant

pub fn quant_odd(cases: u32) -> Result<(), String> {
    run(cases, (0u8..=MAX_QP, -MAX_DEQUANT..=MAX_DEQUANT, -5000i32..=5000), |(qp, c, l)| {
        let q = QuantParams::new(qp);
        prop_assert_eq!(q.quantize(-c), -q.quantize(c));
        prop_assert_eq!(q.dequantize(-l), -q.dequantize(l));
        Ok(())
    })
}

pub fn quant_error_bound(cases: u32) -> Result<(), String> {
    run(cases, (0u8..=MAX_QP, -(MAX_DEQUANT / 2)..=MAX_DEQUANT / 2), |(qp, c)| {
        let q = QuantParams::new(qp);
        let err = (q.dequantize(q.quantize(c)) - c).abs();
        prop_assert!(2 * err <= q.step, "qp {qp} coeff {c} err {err}");
        Ok(())
    })
}

// ccso

fn ccso_planes(seed: u64, cw: usize, ch: usize) -> (Plane, Plane, Plane) {
    let mut r = rng(seed);
    let luma = super::random_plane(&mut r, 2 * cw, 2 * ch, 0, 255);
    let source = super::random_plane(&mut r, cw, ch, 0, 255);
    let amp: i32 = r.gen_range(0..12);
    let recon = Plane::from_vec(
        cw,
        ch,
        source.samples().map(|s| (s as i32 + r.gen_range(-amp..=amp)).clamp(0, 255) as u8).collect(),
    );
    (source, recon, luma)
}

fn chroma_dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..80, 1usize..80)
}

pub fn ccso_sse(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), chroma_dims(), 0u8..4, 0.0f64..2000.0), |(seed, (cw, ch), t, lambda)| {
        let (source, recon, luma) = ccso_planes(seed, cw, ch);
        let before = source.sse(&recon);
        for lut in [derive_lut(&source, &recon, &luma, t), optimize_lut(&source, &recon, &luma, lambda)] {
            prop_assert!(source.sse(&apply_ccso(&recon, &luma, &lut)) <= before);
        }
        Ok(())
    })
}

pub fn ccso_flat(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), chroma_dims(), any::<u8>(), 0u8..4), |(seed, (cw, ch), level, t)| {
        let (source, recon, _) = ccso_planes(seed, cw, ch);
        let flat = Plane::new(2 * cw, 2 * ch, level);
        let mut lut = derive_lut(&source, &recon, &super::random_plane(&mut rng(seed ^ 1), 2 * cw, 2 * ch, 0, 255), t);
        lut.offsets[CENTER_BIN] = 0;
        lut.enabled = true;
        lut.block_flags.iter_mut().for_each(|f| *f = true);
        let once = apply_ccso(&recon, &flat, &lut);
        prop_assert_eq!(&once, &recon);
        prop_assert_eq!(apply_ccso(&once, &flat, &lut), once);
        Ok(())
    })
}

pub fn ccso_decoder(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), chroma_dims(), 0.0f64..500.0), |(seed, (cw, ch), lambda)| {
        let (source, recon, luma) = ccso_planes(seed, cw, ch);
        let lut = optimize_lut(&source, &recon, &luma, lambda);
        let mut bw = bav1::bitio::BitWriter::new();
        write_section(&mut bw, &lut);
        let bytes = bw.into_bytes();
        let mut parsed = read_section(&mut bav1::bitio::BitReader::new(&bytes), cw, ch)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        parsed.block_flags = lut.block_flags.clone();
        prop_assert_eq!(apply_ccso(&recon, &luma, &parsed), apply_ccso(&recon, &luma, &lut));
        Ok(())
    })
}

// codec

fn codec_case() -> impl Strategy<Value = (u64, usize, usize, u8, u8)> {
    (any::<u64>(), 1usize..=24, 1usize..=24, 0u8..64, 0u8..=MAX_QP)
}

fn encode_case(seed: u64, w: usize, h: usize, tools: u8, qp: u8) -> Result<bav1::codec::EncodeOutput, TestCaseError> {
    encode_frame(&fuzz_frame(seed, w, h), &ToolConfig::from_bitmap(tools, qp))
        .map_err(|e| TestCaseError::fail(e.to_string()))
}

pub fn codec_round_trip(cases: u32) -> Result<(), String> {
    run(cases, codec_case(), |(seed, w, h, tools, qp)| {
        let out = encode_case(seed, w, h, tools, qp)?;
        let dec = decode_frame_with(&out.bitstream, DecoderCaps::all()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(dec.frame, out.recon);
        prop_assert_eq!(dec.counts, out.stats.counts);
        Ok(())
    })
}

pub fn codec_tool_gating(cases: u32) -> Result<(), String> {
    run(cases, codec_case(), |(seed, w, h, tools, qp)| {
        let out = encode_case(seed, w, h, tools, qp)?;
        let dec = decode_frame_with(&out.bitstream, DecoderCaps::all()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let hits = out.stats.hits;
        for t in Tool::ALL {
            if tools & t.bit() == 0 {
                prop_assert_eq!(dec.counts.tool_elements(t), 0, "{:?}", t);
                prop_assert_eq!(out.stats.counts.tool_elements(t), 0, "{:?}", t);
                let used = match t {
                    Tool::Sdp => hits.sdp_chroma_leaves,
                    Tool::Mrl => hits.mrl_blocks,
                    Tool::Imc => hits.imc_delta_blocks,
                    Tool::Ept => hits.ept_units,
                    Tool::Nsdt => hits.nsdt_blocks,
                    Tool::Ccso => hits.ccso_blocks,
                };
                prop_assert_eq!(used, 0, "{:?}", t);
            }
        }
        Ok(())
    })
}

pub fn codec_baseline(cases: u32) -> Result<(), String> {
    run(cases, codec_case(), |(seed, w, h, tools, qp)| {
        let base = encode_case(seed, w, h, 0, qp)?;
        let dec = decode_frame_with(&base.bitstream, DecoderCaps::baseline())
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(dec.frame, base.recon);
        if tools != 0 {
            let tooled = encode_case(seed, w, h, tools, qp)?;
            let rejected = matches!(
                decode_frame_with(&tooled.bitstream, DecoderCaps::baseline()),
                Err(CodecError::Unsupported { .. })
            );
            prop_assert!(rejected);
        }
        Ok(())
    })
}

pub fn codec_nsdt_depth(cases: u32) -> Result<(), String> {
    run(cases, codec_case(), |(seed, w, h, tools, qp)| {
        let out = encode_case(seed, w, h, tools | Tool::Nsdt.bit(), qp)?;
        let dec = decode_frame_with(&out.bitstream, DecoderCaps::all()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (rect, info) in &dec.luma_leaves {
            if info.nsdt > 0 {
                prop_assert!(!info.skip);
                prop_assert!(!info.tx_split);
                prop_assert_eq!(luma_tus(*rect, info.tx_split).len(), 1);
            }
        }
        Ok(())
    })
}

// harness

fn rd_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (4usize..=8, any::<u64>()).prop_map(|(n, seed)| {
        let mut r = rng(seed);
        let mut rate = r.gen_range(0.01..1.0);
        let mut q = r.gen_range(20.0..40.0);
        (0..n)
            .map(|_| {
                rate *= r.gen_range(1.05..2.0);
                q += r.gen_range(0.1..3.0);
                (rate, q)
            })
            .collect()
    })
}

pub fn harness_bd_identity(cases: u32) -> Result<(), String> {
    run(cases, rd_points(), |pts| {
        let a = RdCurve::new(pts).unwrap();
        prop_assert_eq!(bd_rate(&a, &a).unwrap(), 0.0);
        Ok(())
    })
}

pub fn harness_bd_order(cases: u32) -> Result<(), String> {
    run(cases, (rd_points(), rd_points(), any::<u64>()), |(a, b, seed)| {
        let reference = bd_rate(&RdCurve::new(a.clone()).unwrap(), &RdCurve::new(b.clone()).unwrap());
        let mut r = rng(seed);
        let (mut sa, mut sb) = (a, b);
        sa.shuffle(&mut r);
        sb.shuffle(&mut r);
        let shuffled = bd_rate(&RdCurve::new(sa).unwrap(), &RdCurve::new(sb).unwrap());
        prop_assert_eq!(reference, shuffled);
        Ok(())
    })
}

pub fn harness_report_determinism(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 8usize..=24, 0u8..64), |(seed, size, tools)| {
        let corpus = vec![CorpusItem { name: "a1_fuzz".into(), frame: fuzz_frame(seed, size, size) }];
        let comps = [Comparison { label: "T".into(), anchor: 0, test: tools }];
        let opts = ExperimentOptions { qps: vec![20, 32, 44, 56], ..ExperimentOptions::default() };
        let strip = |r: Result<bav1::harness::ExperimentReport, bav1::harness::HarnessError>| {
            r.map(|rep| rep.rows.into_iter().map(|row| (row.class, row.tool, row.bd)).collect::<Vec<_>>())
                .map_err(|e| e.to_string())
        };
        let first = strip(run_comparisons(&comps, &corpus, &opts));
        let second = strip(run_comparisons(&comps, &corpus, &opts));
        prop_assert_eq!(first, second);
        Ok(())
    })
}

pub fn harness_time_ratio(cases: u32) -> Result<(), String> {
    run(cases, (1e-6f64..1e4, 1e-3f64..1e3), |(t, k)| {
        prop_assert_eq!(time_ratio(t, t), 1.0);
        prop_assert!((time_ratio(t, k * t) - k).abs() <= 1e-12 * k);
        Ok(())
    })
}
