//! Acceptance suite. Each test checks one criterion and prints a single
//! `[PASS]` / `[FAIL]` line before asserting.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use quantevo::cli::{cmd_evaluate, cmd_extract, RunConfig};
use quantevo::dataset::write_dataset;
use quantevo::descriptors::{bic_counts, classify_pixels, dlog_encode, PixelClass};
use quantevo::experiment::{default_limit_sweep, kfold_split, run_experiment, ExperimentConfig, Method, Metric};
use quantevo::ga::{evolve, fitness, random_genome, GaConfig, GaRng, OVER_LIMIT_FITNESS};
use quantevo::retrieval::{ffp4_score, Ffp4Config, Ranking};
use quantevo::stats::{paired_t_test, DEFAULT_ALPHA};
use quantevo::synth;
use quantevo::{
    extract_bic, extract_gch, Descriptor, FeatureVector, LabeledDataset, QuantizationGenome, RasterImage,
};
use rand::{Rng, SeedableRng};

fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "[{}] criterion {id}: {name} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

fn random_image(rng: &mut GaRng, w: usize, h: usize) -> RasterImage {
    // mostly blocky so BIC sees interior pixels, with per-pixel noise mixed in
    let palette: Vec<[u8; 3]> = (0..6).map(|_| rng.gen()).collect();
    RasterImage::from_fn(w, h, |_, _| {
        if rng.gen_bool(0.2) {
            rng.gen()
        } else {
            palette[rng.gen_range(0..palette.len())]
        }
    })
    .unwrap()
}

/// Straightforward 4x4x4 reference extractors with the quantization hardcoded.
mod reference {
    use quantevo::RasterImage;

    fn bin(p: [u8; 3]) -> usize {
        (p[0] as usize / 64) * 16 + (p[1] as usize / 64) * 4 + p[2] as usize / 64
    }

    pub fn gch(img: &RasterImage) -> Vec<f64> {
        let mut h = [0u32; 64];
        for &p in img.pixels() {
            h[bin(p)] += 1;
        }
        let max = *h.iter().max().unwrap() as f64;
        h.iter().map(|&c| c as f64 / max).collect()
    }

    fn dlog(count: u32, max: u32) -> f64 {
        // code k covers 255·count/max in (T[k-1], T[k]]
        const T: [u64; 10] = [0, 1, 2, 4, 8, 16, 32, 64, 128, 255];
        let s = 255 * count as u64;
        let m = max as u64;
        (0..10).find(|&k| s <= T[k] * m).unwrap() as f64
    }

    pub fn bic(img: &RasterImage) -> Vec<f64> {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut border = [0u32; 64];
        let mut interior = [0u32; 64];
        for y in 0..h {
            for x in 0..w {
                let c = bin(img.pixel(x as usize, y as usize));
                let mut same = true;
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < w && ny < h && bin(img.pixel(nx as usize, ny as usize)) != c {
                        same = false;
                    }
                }
                if same {
                    interior[c] += 1;
                } else {
                    border[c] += 1;
                }
            }
        }
        let max = *border.iter().chain(&interior).max().unwrap();
        border.iter().chain(&interior).map(|&c| dlog(c, max)).collect()
    }
}

#[test]
fn criterion_1_baseline_equivalence() {
    let mut rng = GaRng::seed_from_u64(2024);
    let images: Vec<RasterImage> = (0..60).map(|_| random_image(&mut rng, 16, 16)).collect();
    let map = QuantizationGenome::baseline(4, 8).unwrap().decode();

    let start = Instant::now();
    let mut mismatches = 0;
    for img in &images {
        let bic = extract_bic(img, &map).unwrap();
        let gch = extract_gch(img, &map).unwrap();
        if bic.dimension() != 128 || gch.dimension() != 64 {
            mismatches += 1;
        }
        if bic.values() != reference::bic(img).as_slice() || gch.values() != reference::gch(img).as_slice() {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();

    // the same comparison through `extract --baseline 4`
    let dir = tempfile::tempdir().unwrap();
    let dataset = LabeledDataset::new(
        images
            .iter()
            .enumerate()
            .map(|(i, img)| (format!("img{i:03}"), img.clone(), "all".to_string())),
    )
    .unwrap();
    write_dataset(&dataset, dir.path().join("data")).unwrap();
    for (descriptor, dim) in [("bic", 128), ("gch", 64)] {
        let out = dir.path().join(format!("{descriptor}.txt"));
        let mut cfg = RunConfig::default();
        for (k, v) in [
            ("dataset", dir.path().join("data").to_str().unwrap()),
            ("descriptor", descriptor),
            ("baseline", "4"),
            ("out", out.to_str().unwrap()),
        ] {
            cfg.set(k, v).unwrap();
        }
        let summary = cmd_extract(&cfg).unwrap();
        assert_eq!(summary.dimension, dim);
        let text = fs::read_to_string(&out).unwrap();
        let rows: Vec<FeatureVector> = text.lines().map(|l| FeatureVector::parse_line(l).unwrap()).collect();
        assert_eq!(rows.len(), images.len());
        for (row, img) in rows.iter().zip(&images) {
            let expected = if descriptor == "bic" { reference::bic(img) } else { reference::gch(img) };
            if row.dimension() != dim || row.values() != expected.as_slice() {
                mismatches += 1;
            }
        }
    }

    let ok = mismatches == 0 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "baseline BIC/GCH bit-identical to hardcoded 4x4x4 reference",
        ok,
        &format!("{} images, {mismatches} mismatches, {elapsed:?}", images.len()),
    );
}

#[test]
fn criterion_2_genome_oracle() {
    let start = Instant::now();
    let data = synth::random_palettes(3, 8, 8, 77);
    assert_eq!(data.len(), 24);
    let cfg = GaConfig { intervals: 4, ..GaConfig::default() };

    // exhaustive enumeration of every raw 12-bit string, repaired
    let mut genomes = BTreeSet::new();
    for raw in 0u32..(1 << 12) {
        let bits = (0..12).map(|i| raw >> i & 1 == 1).collect();
        genomes.insert(QuantizationGenome::repair(bits).unwrap());
    }
    assert_eq!(genomes.len(), 512);
    let optimum = genomes
        .iter()
        .map(|g| fitness(g, &data, Descriptor::Bic, &cfg).unwrap())
        .fold(f64::MIN, f64::max);

    let mut reached = Vec::new();
    for seed in 0..5 {
        let rec = evolve(&data, Descriptor::Bic, &GaConfig { seed, ..cfg.clone() }).unwrap();
        reached.push(rec.best_fitness);
    }
    let elapsed = start.elapsed();
    let ok = reached.iter().all(|&f| f == optimum) && elapsed < Duration::from_secs(120);
    verdict(
        2,
        "evolve reaches the exhaustive-search optimum (N=4)",
        ok,
        &format!("optimum {optimum}, seeds reached {reached:?}, {elapsed:?}"),
    );
}

#[test]
fn criterion_3_ffp4_hand_values() {
    let cfg = Ffp4Config::default();
    let order = |query: usize, items: &[usize]| {
        Ranking::from_distances(query, items.iter().enumerate().map(|(r, &i)| (i, r as f64)).collect()).unwrap()
    };
    let one = ffp4_score(&order(0, &[1, 2]), &['q', 'q', 'x'], &cfg);
    let two = ffp4_score(&order(0, &[1, 2, 3]), &['q', 'q', 'x', 'q'], &cfg);
    // independent arithmetic
    let k9 = 0.982f64;
    let expected_two = 7.0 * (k9 + k9 * k9 * k9);
    let ok = one == 7.0 * 0.982 && (one - 6.874).abs() < 1e-12 && (two - expected_two).abs() < 1e-12;
    verdict(
        3,
        "FFP4 hand values",
        ok,
        &format!("rank1 = {one}, ranks 1+3 = {two} vs {expected_two}"),
    );
}

#[test]
fn criterion_4_limited_approach() {
    let start = Instant::now();
    let data = synth::random_palettes(3, 3, 8, 4);
    let mut rng = GaRng::seed_from_u64(404);
    let mut problems = Vec::new();
    for limit in default_limit_sweep(Descriptor::Bic) {
        let cfg = GaConfig { dimension_limit: Some(limit), seed: limit as u64, ..GaConfig::default() };
        for _ in 0..1000 {
            let g = random_genome(8, &mut rng);
            let f = fitness(&g, &data, Descriptor::Bic, &cfg).unwrap();
            let over = g.dimension(Descriptor::Bic) > limit;
            if over != (f == OVER_LIMIT_FITNESS) || (!over && f < 0.0) {
                problems.push(format!("limit {limit}: genome {g} fitness {f}"));
            }
        }
        let rec = evolve(&data, Descriptor::Bic, &cfg).unwrap();
        if rec.best_dimension() > limit {
            problems.push(format!("limit {limit}: q* dimension {}", rec.best_dimension()));
        }
        for (g, f) in &rec.evaluations {
            if g.dimension(Descriptor::Bic) > limit && *f != OVER_LIMIT_FITNESS {
                problems.push(format!("limit {limit}: evaluated over-limit {g} scored {f}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = problems.is_empty() && elapsed < Duration::from_secs(30);
    verdict(
        4,
        "LA: q* within limit, over-limit fitness exactly -1",
        ok,
        &format!("{} problems {:?}, {elapsed:?}", problems.len(), problems.iter().take(3).collect::<Vec<_>>()),
    );
}

#[test]
fn criterion_5_monotone_elitism() {
    let data = synth::random_palettes(3, 5, 8, 5);
    let mut violations = 0;
    for seed in 0..20 {
        let cfg = GaConfig { population_size: 40, generations: 25, seed, ..GaConfig::default() };
        let rec = evolve(&data, Descriptor::Gch, &cfg).unwrap();
        violations += rec
            .generations
            .windows(2)
            .filter(|w| w[1].best_fitness < w[0].best_fitness)
            .count();
    }
    verdict(
        5,
        "per-generation best fitness non-decreasing",
        violations == 0,
        &format!("20 runs, {violations} violations"),
    );
}

#[test]
fn criterion_6_separable_dataset_improvement() {
    let start = Instant::now();
    let data = synth::fine_separable(16, 12, 6);
    // the two colliding classes really are indistinguishable per bin at 4 per axis
    let coarse = QuantizationGenome::baseline(4, 8).unwrap().decode();
    let fine = QuantizationGenome::all_ones(8).unwrap().decode();
    let red_bins = |map: &quantevo::ColorMap, class: &str| -> BTreeSet<u16> {
        data.items()
            .iter()
            .enumerate()
            .filter(|(i, _)| data.class_name(*i) == class)
            .flat_map(|(_, it)| {
                it.image
                    .pixels()
                    .iter()
                    .filter(|p| p[0] < 64 && (64..96).contains(&p[1]))
                    .map(|p| map.table(0)[p[0] as usize])
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    assert_eq!(red_bins(&coarse, "dark"), red_bins(&coarse, "light"));
    assert!(red_bins(&fine, "dark").is_disjoint(&red_bins(&fine, "light")));

    let plan = kfold_split(data.len(), 5, 17).unwrap();
    let ga = GaConfig { generations: 50, seed: 5, ..GaConfig::default() };
    let cfg = ExperimentConfig::new(Descriptor::Bic, ga, vec![Method::Nla]);
    let out = run_experiment(&data, &cfg, &plan).unwrap();
    let base = out.report.method(Method::Baseline).unwrap().values(Metric::Map);
    let nla = out.report.method(Method::Nla).unwrap().values(Metric::Map);
    let elapsed = start.elapsed();
    let ok = nla.iter().zip(&base).all(|(n, b)| n > b) && elapsed < Duration::from_secs(300);
    verdict(
        6,
        "5-fold NLA MAP strictly above baseline on every fold",
        ok,
        &format!("NLA {nla:.4?} vs baseline {base:.4?}, {elapsed:?}"),
    );
}

#[test]
fn criterion_7_t_test_oracle() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let a = [30.0, 31.0, 29.0, 32.0, 30.0];
    let b = [28.0, 29.0, 28.0, 30.0, 29.0];
    let r = paired_t_test(&a, &b, DEFAULT_ALPHA).unwrap();
    let t = r.t.unwrap();
    let oracle_p = 2.0 * StudentsT::new(0.0, 1.0, 4.0).unwrap().sf(6.532);
    let t_ok = format!("{t:.3}") == "6.532";
    let p_ok = (r.p_value - oracle_p).abs() < 5e-4 && format!("{:.3}", r.p_value) == format!("{oracle_p:.3}");

    let mut rng = GaRng::seed_from_u64(7);
    let mut antisymmetric = true;
    for _ in 0..200 {
        let n = rng.gen_range(2..10);
        let x: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let xy = paired_t_test(&x, &y, DEFAULT_ALPHA).unwrap();
        let yx = paired_t_test(&y, &x, DEFAULT_ALPHA).unwrap();
        antisymmetric &= xy.t.map(|v| -v) == yx.t && xy.p_value == yx.p_value;
    }
    verdict(
        7,
        "paired t-test matches oracle, antisymmetric",
        t_ok && p_ok && antisymmetric && r.df == 4,
        &format!("t = {t:.4}, p = {:.6} vs oracle {oracle_p:.6}, antisymmetric = {antisymmetric}", r.p_value),
    );
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn read_tree(root: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read_to_string(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data_root = dir.path().join("data");
    write_dataset(&synth::random_palettes(3, 6, 8, 8), &data_root).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let overrides: Vec<(String, String)> = [
            ("dataset", data_root.to_str().unwrap()),
            ("out", out.to_str().unwrap()),
            ("descriptor", "bic"),
            ("folds", "3"),
            ("seed", "123"),
            ("population", "24"),
            ("generations", "6"),
            ("limit", "64"),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        cmd_evaluate(&RunConfig::load(None, &overrides).unwrap()).unwrap();
        read_tree(&out)
    };
    let first = run("run1");
    let second = run("run2");
    let mut differing = Vec::new();
    for ((name_a, a), (name_b, b)) in first.iter().zip(&second) {
        let (a, b) = if name_a == "report.json" {
            (strip_timestamp(a), strip_timestamp(b))
        } else {
            (a.clone(), b.clone())
        };
        if name_a != name_b || a != b {
            differing.push(name_a.clone());
        }
    }
    let ok = first.len() == second.len() && differing.is_empty() && first.len() > 2;
    verdict(
        8,
        "evaluate is byte-identical across runs",
        ok,
        &format!("{} files compared, differing {differing:?}", first.len()),
    );
}

#[test]
fn criterion_9_descriptor_properties() {
    let mut rng = GaRng::seed_from_u64(9);

    let mut samples: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
    samples.extend([0.0, 1.0, 1.0 / 255.0, 2.0 / 255.0]);
    samples.sort_by(f64::total_cmp);
    let codes: Vec<u8> = samples.iter().map(|&v| dlog_encode(v).unwrap()).collect();
    let monotone = codes.windows(2).all(|w| w[0] <= w[1]);
    let range: BTreeSet<u8> = codes.iter().copied().collect();
    let range_ok = range == (0..=9).collect();

    let map = QuantizationGenome::baseline(4, 8).unwrap().decode();
    let mut count_mismatch = 0;
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(1..20), rng.gen_range(1..20));
        let img = random_image(&mut rng, w, h);
        if bic_counts(&img, &map).total() != (w * h) as u64 {
            count_mismatch += 1;
        }
    }

    let mut uniform_bad = 0;
    let mut checker_bad = 0;
    for _ in 0..50 {
        let (w, h) = (rng.gen_range(1..12), rng.gen_range(1..12));
        let uniform = RasterImage::filled(w, h, rng.gen()).unwrap();
        if !classify_pixels(&uniform, &map).iter().all(|&c| c == PixelClass::Interior) {
            uniform_bad += 1;
        }
        let (w, h) = (rng.gen_range(2..12), rng.gen_range(2..12));
        let a: [u8; 3] = rng.gen();
        let b = loop {
            let b: [u8; 3] = rng.gen();
            if map.quantize(a[0], a[1], a[2]) != map.quantize(b[0], b[1], b[2]) {
                break b;
            }
        };
        let board = RasterImage::from_fn(w, h, |x, y| if (x + y) % 2 == 0 { a } else { b }).unwrap();
        if !classify_pixels(&board, &map).iter().all(|&c| c == PixelClass::Border) {
            checker_bad += 1;
        }
    }

    let ok = monotone && range_ok && count_mismatch == 0 && uniform_bad == 0 && checker_bad == 0;
    verdict(
        9,
        "descriptor properties",
        ok,
        &format!(
            "dlog monotone={monotone} range={range:?}; count mismatches {count_mismatch}; uniform failures {uniform_bad}; checkerboard failures {checker_bad}"
        ),
    );
}
