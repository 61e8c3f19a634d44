//! Generated mini-corpus of 256x256 test frames.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{load_frame, write_y4m, FileFormat, Frame, FrameError, Plane};

pub const CORPUS_SIZE: usize = 256;
pub const CORPUS_NAMES: [&str; 6] =
    ["a1_gradient", "a2_texture", "a3_edges", "a4_noise", "a5_flat", "b1_screen"];

/// One named test frame.
#[derive(Clone, Debug)]
pub struct CorpusItem {
    pub name: String,
    pub frame: Frame,
}

impl CorpusItem {
    /// Class label: the name up to the first underscore, upper-cased.
    pub fn class(&self) -> String {
        class_of(&self.name)
    }
}

pub fn class_of(name: &str) -> String {
    name.split('_').next().unwrap_or(name).to_ascii_uppercase()
}

/// Renders `f(x, y) -> (Y, Cb, Cr)` at full resolution; chroma is the 2x2
/// mean.
fn render(w: usize, h: usize, f: impl Fn(f64, f64) -> [f64; 3]) -> Frame {
    let full: Vec<[f64; 3]> = (0..w * h).map(|i| f((i % w) as f64, (i / w) as f64)).collect();
    let clip = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    let y = Plane::from_vec(w, h, full.iter().map(|p| clip(p[0])).collect());
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let chroma = |k: usize| {
        let mut v = Vec::with_capacity(cw * ch);
        for cy in 0..ch {
            for cx in 0..cw {
                let mut s = 0.0;
                let mut n = 0.0;
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let (x, y) = (2 * cx + dx, 2 * cy + dy);
                    if x < w && y < h {
                        s += full[y * w + x][k];
                        n += 1.0;
                    }
                }
                v.push(clip(s / n));
            }
        }
        Plane::from_vec(cw, ch, v)
    };
    Frame::from_planes(y, chroma(1), chroma(2)).expect("4:2:0 geometry")
}

fn gradient(w: usize, h: usize) -> Frame {
    let (fw, fh) = (w as f64, h as f64);
    render(w, h, |x, y| {
        let wave = (2.0 * PI * x / 97.0).sin() * (2.0 * PI * y / 131.0).cos();
        [
            40.0 + 90.0 * x / fw + 60.0 * y / fh + 12.0 * wave,
            128.0 + 40.0 * (x / fw - 0.5) + 6.0 * wave,
            128.0 + 30.0 * (y / fh - 0.5) - 8.0 * wave,
        ]
    })
}

fn texture(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Frame {
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let theta = rng.gen_range(0.0..PI);
            let f = rng.gen_range(0.03..0.25);
            (f * theta.cos(), f * theta.sin(), rng.gen_range(0.0..2.0 * PI), rng.gen_range(6.0..16.0))
        })
        .collect();
    let noise: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-4.0..4.0)).collect();
    render(w, h, |x, y| {
        let t: f64 = waves.iter().map(|&(fx, fy, ph, a)| a * (2.0 * PI * (fx * x + fy * y) + ph).sin()).sum();
        let n = noise[y as usize * w + x as usize];
        [128.0 + t + n, 128.0 + 0.3 * t + 10.0, 128.0 - 0.25 * t - 6.0]
    })
}

/// Convex polygon given by half-planes `a x + b y <= c`.
struct Shape {
    planes: Vec<(f64, f64, f64)>,
    color: [f64; 3],
}

fn edges(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Frame {
    let (fw, fh) = (w as f64, h as f64);
    let shapes: Vec<Shape> = (0..14)
        .map(|_| {
            let (cx, cy) = (rng.gen_range(0.0..fw), rng.gen_range(0.0..fh));
            let r = rng.gen_range(12.0..60.0);
            let sides = rng.gen_range(3..7);
            let rot = rng.gen_range(0.0..2.0 * PI);
            let planes = (0..sides)
                .map(|k| {
                    let a = rot + 2.0 * PI * k as f64 / sides as f64;
                    let (nx, ny) = (a.cos(), a.sin());
                    (nx, ny, nx * cx + ny * cy + r)
                })
                .collect();
            let color = [rng.gen_range(20.0..235.0), rng.gen_range(60.0..196.0), rng.gen_range(60.0..196.0)];
            Shape { planes, color }
        })
        .collect();
    let noise: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-2.0..2.0)).collect();
    render(w, h, |x, y| {
        let mut c = [70.0 + 80.0 * y / fh, 120.0 + 16.0 * x / fw, 136.0 - 16.0 * y / fh];
        for s in &shapes {
            if s.planes.iter().all(|&(a, b, d)| a * x + b * y <= d) {
                c = s.color;
            }
        }
        c[0] += noise[y as usize * w + x as usize];
        c
    })
}

/// Bilinear interpolation of a `g x g` grid stretched over the frame.
fn smooth_field(g: usize, w: usize, h: usize, rng: &mut ChaCha8Rng, amp: f64) -> impl Fn(f64, f64) -> f64 {
    let grid: Vec<f64> = (0..(g + 1) * (g + 1)).map(|_| rng.gen_range(-amp..amp)).collect();
    let (sx, sy) = (g as f64 / w as f64, g as f64 / h as f64);
    move |x, y| {
        let (u, v) = (x * sx, y * sy);
        let (i, j) = ((u as usize).min(g - 1), (v as usize).min(g - 1));
        let (fu, fv) = (u - i as f64, v - j as f64);
        let at = |a: usize, b: usize| grid[b * (g + 1) + a];
        (1.0 - fv) * ((1.0 - fu) * at(i, j) + fu * at(i + 1, j)) + fv * ((1.0 - fu) * at(i, j + 1) + fu * at(i + 1, j + 1))
    }
}

fn noise(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Frame {
    let coarse = smooth_field(16, w, h, rng, 50.0);
    let cb = smooth_field(8, w, h, rng, 25.0);
    let cr = smooth_field(8, w, h, rng, 25.0);
    let fine: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-10.0..10.0)).collect();
    render(w, h, |x, y| {
        [128.0 + coarse(x, y) + fine[y as usize * w + x as usize], 128.0 + cb(x, y), 128.0 + cr(x, y)]
    })
}

fn flat(w: usize, h: usize) -> Frame {
    let (fw, fh) = (w as f64, h as f64);
    render(w, h, |x, y| {
        let (dx, dy) = (x / fw - 0.5, y / fh - 0.5);
        let blob = |cx: f64, cy: f64, s: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp();
        [
            104.0 - 20.0 * (dx * dx + dy * dy) + 18.0 * blob(0.3 * fw, 0.6 * fh, 20.0),
            126.0 + 8.0 * blob(0.7 * fw, 0.3 * fh, 30.0),
            130.0 - 6.0 * blob(0.3 * fw, 0.6 * fh, 20.0),
        ]
    })
}

fn screen(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Frame {
    let mut y = vec![235u8; w * h];
    let (cw, ch) = (w / 2, h / 2);
    let mut cb = vec![128u8; cw * ch];
    let mut cr = vec![128u8; cw * ch];
    let mut fill = |x0: usize, y0: usize, x1: usize, y1: usize, c: [u8; 3], y: &mut Vec<u8>| {
        for py in y0..y1.min(h) {
            for px in x0..x1.min(w) {
                y[py * w + px] = c[0];
                cb[(py / 2) * cw + px / 2] = c[1];
                cr[(py / 2) * cw + px / 2] = c[2];
            }
        }
    };
    // Title bar and buttons.
    fill(0, 0, w, 18, [60, 170, 110], &mut y);
    for k in 0..4 {
        let c = [rng.gen_range(80..200), rng.gen_range(60..200), rng.gen_range(60..200)];
        fill(12 + 60 * k, h.saturating_sub(30), 60 + 60 * k, h.saturating_sub(12), c, &mut y);
    }
    fill(w.saturating_sub(80), 30, w.saturating_sub(8), h.saturating_sub(40), [200, 140, 120], &mut y);
    // Rows of 5x7 glyphs.
    let glyphs: Vec<[u8; 7]> = (0..40).map(|_| std::array::from_fn(|_| rng.gen_range(0..32u8))).collect();
    let mut ty = 28;
    while ty + 8 < h.saturating_sub(40) {
        let mut tx = 8;
        let line_len = rng.gen_range(20..28);
        for _ in 0..line_len {
            if tx + 6 >= w.saturating_sub(88) {
                break;
            }
            if rng.gen_bool(0.15) {
                tx += 6;
                continue;
            }
            let g = &glyphs[rng.gen_range(0..glyphs.len())];
            for (r, bits) in g.iter().enumerate() {
                for c in 0..5 {
                    if bits >> c & 1 == 1 {
                        y[(ty + r) * w + tx + c] = 16;
                    }
                }
            }
            tx += 6;
        }
        ty += 11;
    }
    let planes = (Plane::from_vec(w, h, y), Plane::from_vec(cw, ch, cb), Plane::from_vec(cw, ch, cr));
    Frame::from_planes(planes.0, planes.1, planes.2).expect("4:2:0 geometry")
}

/// Generates the frame called `name` (one of [`CORPUS_NAMES`]).
pub fn generate(name: &str, size: usize) -> Option<Frame> {
    generate_variant(name, size, 0)
}

/// Like [`generate`] with another random draw; variant 0 is the evaluation
/// corpus. The gradient and flat frames have no random parameters.
pub fn generate_variant(name: &str, size: usize, variant: u64) -> Option<Frame> {
    let seed = CORPUS_NAMES.iter().position(|&n| n == name)? as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6261_7631 + seed + 0x100 * variant);
    Some(match name {
        "a1_gradient" => gradient(size, size),
        "a2_texture" => texture(size, size, &mut rng),
        "a3_edges" => edges(size, size, &mut rng),
        "a4_noise" => noise(size, size, &mut rng),
        "a5_flat" => flat(size, size),
        _ => screen(size, size, &mut rng),
    })
}

/// The six generated 256x256 frames.
pub fn mini_corpus() -> Vec<CorpusItem> {
    sized_corpus(CORPUS_SIZE)
}

/// The generated corpus at another frame size.
pub fn sized_corpus(size: usize) -> Vec<CorpusItem> {
    CORPUS_NAMES
        .iter()
        .map(|&n| CorpusItem { name: n.to_string(), frame: generate(n, size).expect("known name") })
        .collect()
}

/// Writes the mini-corpus as `<name>.y4m` files.
pub fn write_corpus(dir: &Path) -> Result<(), FrameError> {
    std::fs::create_dir_all(dir).map_err(|source| FrameError::Io { path: dir.to_path_buf(), source })?;
    for item in mini_corpus() {
        write_y4m(dir.join(format!("{}.y4m", item.name)), &item.frame)?;
    }
    Ok(())
}

/// Loads every `.y4m` file of a directory, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusItem>, FrameError> {
    let io = |source| FrameError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(CorpusItem { name, frame: load_frame(&p, FileFormat::Y4m)? })
        })
        .collect()
}
