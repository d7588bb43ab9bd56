//! Acceptance suite: one test per criterion, each printing a pass line.
//! Oracles here are independent of the implementation paths they check.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use fragile_core::corpus::FramingDimension;
use fragile_core::elicit::DecisionDistribution;
use fragile_core::error::Error;
use fragile_core::layersel::select_layer;
use fragile_core::lens::{delta_dir, gap_curves, LensCondition, LensRecord};
use fragile_core::metrics::{
    classify_quadrant, flip_rate, l1_shift, CellStats, FramingOutcome, Quadrant, TiePolicy,
    DEFAULT_TAU,
};
use fragile_core::modelio::{generate, resolve, InterventionHook};
use fragile_core::numerics::{dot, norm, pca_fit, project_out, unit_normalize, Matrix};
use fragile_core::qc::{
    apply_thresholds, run_qc_loop, select_best, JudgeVerdict, QcLoopConfig, ScriptedClient,
    SelectionOrder,
};
use fragile_core::valign::valign_transform;

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

fn orthonormal_basis(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < k {
        let v = rand_vec(rng, dim);
        let w = project_out(&v, &basis).expect("partial basis is orthonormal");
        if let Ok(u) = unit_normalize(&w) {
            basis.push(u);
        }
    }
    basis
}

fn dist(pa: f64, pb: f64, pt: f64, modal: &str) -> DecisionDistribution {
    DecisionDistribution {
        probs: BTreeMap::from([
            ("A".to_string(), pa),
            ("B".to_string(), pb),
            ("tie".to_string(), pt),
        ]),
        modal_label: modal.to_string(),
        modal_tied: false,
        valid_samples: 10,
        discarded_samples: 0,
        first_step_confidence: BTreeMap::new(),
    }
}

// ---------------------------------------------------------------------------
// 1. Metric oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_metric_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);

    let mut outcomes = Vec::with_capacity(1000);
    for i in 0..1000usize {
        let draw = |rng: &mut ChaCha8Rng| -> (f64, f64, f64, String) {
            let a: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(0.0..(1.0 - a).max(1e-9));
            let t = (1.0 - a - b).max(0.0);
            let modal = if a >= b && a >= t {
                "A"
            } else if b >= a && b >= t {
                "B"
            } else {
                "tie"
            };
            (a, b, t, modal.to_string())
        };
        let (pa, pb, pt, ma) = draw(&mut rng);
        let (qa, qb, qt, mb) = draw(&mut rng);
        let base = dist(pa, pb, pt, &ma);
        let framed = dist(qa, qb, qt, &mb);
        outcomes.push(FramingOutcome::new(
            format!("i{i}"),
            FramingDimension::Temporal,
            base,
            framed,
            DEFAULT_TAU,
        ));
    }

    // Independent brute-force recomputation of all three metrics.
    let mut flips = 0usize;
    let mut quad_counts = [0usize; 4];
    for o in &outcomes {
        let l1_oracle: f64 = ["A", "B", "tie"]
            .iter()
            .map(|l| (o.base.prob(l) - o.framed.prob(l)).abs())
            .sum();
        assert!((o.l1 - l1_oracle).abs() <= 1e-12, "l1 mismatch");
        assert_eq!(l1_shift(&o.base, &o.framed), o.l1);

        let flip_oracle = o.base.modal_label != o.framed.modal_label;
        assert_eq!(o.flipped, flip_oracle);
        if flip_oracle {
            flips += 1;
        }

        let quad_oracle = match (flip_oracle, l1_oracle >= DEFAULT_TAU) {
            (true, true) => Quadrant::FH,
            (true, false) => Quadrant::FL,
            (false, true) => Quadrant::NH,
            (false, false) => Quadrant::NL,
        };
        assert_eq!(o.quadrant, quad_oracle);
        assert_eq!(classify_quadrant(o.flipped, o.l1, DEFAULT_TAU), quad_oracle);
        quad_counts[match quad_oracle {
            Quadrant::FH => 0,
            Quadrant::FL => 1,
            Quadrant::NH => 2,
            Quadrant::NL => 3,
        }] += 1;
    }

    let fr = flip_rate(&outcomes, TiePolicy::IncludeTieModal).expect("non-empty");
    assert!((fr - flips as f64 / outcomes.len() as f64).abs() <= 1e-15);

    let refs: Vec<&FramingOutcome> = outcomes.iter().collect();
    let cell = CellStats::from_outcomes(&refs).expect("non-empty");
    let total = cell.fh_pct + cell.fl_pct + cell.nh_pct + cell.nl_pct;
    assert!((total - 100.0).abs() <= 0.01, "quadrants sum to {total}");
    for (pct, count) in [cell.fh_pct, cell.fl_pct, cell.nh_pct, cell.nl_pct]
        .iter()
        .zip(quad_counts)
    {
        assert!((pct - 100.0 * count as f64 / 1000.0).abs() <= 1e-9);
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("acceptance 01 metric-oracle-equivalence: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// 2. Projection suite
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_projection_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    for trial in 0..10_000usize {
        let dim = rng.random_range(4..=256);
        let k = rng.random_range(1..=4.min(dim / 2));
        let basis = orthonormal_basis(&mut rng, dim, k);
        let h: Vec<f64> = rand_vec(&mut rng, dim).iter().map(|x| 10.0 * x).collect();

        let once = project_out(&h, &basis).expect("projection succeeds");
        let bound = 1e-6 * norm(&once).max(f64::MIN_POSITIVE);
        for v in &basis {
            let d = dot(&once, v).abs();
            assert!(d <= bound.max(1e-6 * norm(&h)), "trial {trial}: residual {d}");
        }
        let twice = project_out(&once, &basis).expect("projection succeeds");
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() <= 1e-9, "trial {trial}: not idempotent");
        }
        assert!(norm(&once) <= norm(&h) + 1e-12, "trial {trial}: expanded");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("acceptance 02 projection-suite: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// 3. PCA oracle
// ---------------------------------------------------------------------------

fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / (n - 1) as f64;
            }
        }
    }
    cov
}

/// Power iteration with deflation: an eigensolver sharing no code with the
/// implementation under test.
fn power_eig(mut cov: Vec<Vec<f64>>, k: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
    let d = cov.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..k {
        let mut v = unit_normalize(&rand_vec(&mut rng, d)).expect("random vector");
        let mut lambda = 0.0;
        for _ in 0..50_000 {
            let mut w = vec![0.0; d];
            for a in 0..d {
                for b in 0..d {
                    w[a] += cov[a][b] * v[b];
                }
            }
            let nw = norm(&w);
            if nw < 1e-300 {
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
            let drift: f64 = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs().min((a + b).abs()))
                .sum();
            v = next;
            lambda = nw;
            if drift < 1e-15 {
                break;
            }
        }
        for a in 0..d {
            for b in 0..d {
                cov[a][b] -= lambda * v[a] * v[b];
            }
        }
        out.push((lambda, v));
    }
    out
}

fn principal_angle(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, b).abs() / (norm(a) * norm(b))).min(1.0).acos()
}

#[test]
fn acceptance_03_pca_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);

    for trial in 0..50usize {
        let d = rng.random_range(3..=10);
        let n = 150 + rng.random_range(0..50usize);
        // Distinct axis scales guarantee well-separated sample eigenvalues.
        let scales: Vec<f64> = (0..d).map(|i| 2.0f64.powi(i as i32)).collect();
        // Random rotation via composed Householder reflections.
        let u1 = unit_normalize(&rand_vec(&mut rng, d)).expect("unit");
        let u2 = unit_normalize(&rand_vec(&mut rng, d)).expect("unit");
        let reflect = |v: &[f64], u: &[f64]| -> Vec<f64> {
            let c = dot(v, u);
            v.iter().zip(u).map(|(x, ui)| x - 2.0 * c * ui).collect()
        };
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let z: Vec<f64> = scales
                    .iter()
                    .map(|s| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect();
                reflect(&reflect(&z, &u1), &u2)
            })
            .collect();
        let k = d.min(rows.len() - 1);
        let fit = pca_fit(&Matrix::from_rows(&rows).expect("matrix"), k).expect("pca");
        let oracle = power_eig(covariance(&rows), k, 1000 + trial as u64);
        for (mine, (lambda, vec)) in fit.components.iter().zip(&oracle) {
            let angle = principal_angle(mine, vec);
            assert!(angle < 1e-6, "trial {trial}: angle {angle}");
            let lam_mine = fit.explained_variance
                [fit.components.iter().position(|c| c == mine).expect("present")];
            assert!((lam_mine - lambda).abs() / lambda.max(1e-12) < 1e-8);
        }
    }

    // Planted-2-plane recovery: deltas on a known plane, k = 2.
    let dim = 16;
    let plane = orthonormal_basis(&mut rng, dim, 2);
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|_| {
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = rng.random_range(-2.0..2.0);
            (0..dim).map(|j| a * plane[0][j] + b * plane[1][j]).collect()
        })
        .collect();
    let fit = pca_fit(&Matrix::from_rows(&rows).expect("matrix"), 2).expect("pca");
    for comp in &fit.components {
        let residual = project_out(comp, &plane).expect("projection");
        assert!(norm(&residual) < 1e-6, "component escapes the plane");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("acceptance 03 pca-oracle: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// 4. Steer-then-project decomposition
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_transform_decomposition() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC4);
    for trial in 0..10_000usize {
        let dim = rng.random_range(4..=64);
        let k = rng.random_range(0..=3.min(dim / 2));
        let basis = orthonormal_basis(&mut rng, dim, k);
        let h = rand_vec(&mut rng, dim);
        let w = unit_normalize(&rand_vec(&mut rng, dim)).expect("unit");
        let alpha: f64 = rng.random_range(-4.0..4.0);

        let fused = valign_transform(&h, &w, &basis, alpha).expect("transform");
        // Independent composition of the two steps.
        let steered: Vec<f64> = h.iter().zip(&w).map(|(x, wi)| x + alpha * wi).collect();
        let mut composed = steered.clone();
        for v in &basis {
            let c = dot(&composed, v);
            for (o, vi) in composed.iter_mut().zip(v) {
                *o -= c * vi;
            }
        }
        for (a, b) in fused.iter().zip(&composed) {
            assert!((a - b).abs() <= 1e-12, "trial {trial}");
        }
    }

    // alpha = 0 with an empty basis is the bitwise identity.
    for _ in 0..100 {
        let h = rand_vec(&mut rng, 16);
        let w = unit_normalize(&rand_vec(&mut rng, 16)).expect("unit");
        let out = valign_transform(&h, &w, &[], 0.0).expect("transform");
        for (a, b) in h.iter().zip(&out) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    let elapsed = start.elapsed();
    println!("acceptance 04 transform-decomposition: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// 5. Hook contract on the reference model
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_hook_contract() {
    let start = Instant::now();
    let handle = resolve("reference").expect("reference model");
    let prompt = handle.tokenize("you must save one of the five");

    // Identity hooks leave the trace bit-identical.
    let plain = handle.prefill(&prompt, &[]).expect("prefill");
    for layer in 0..handle.num_layers() {
        let hooked = handle
            .prefill(&prompt, &[InterventionHook::identity(layer)])
            .expect("prefill");
        for (a, b) in plain.hidden.iter().zip(&hooked.hidden) {
            let lhs: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
            let rhs: Vec<u64> = b.iter().map(|v| v.to_bits()).collect();
            assert_eq!(lhs, rhs);
        }
        let lhs: Vec<u64> = plain.logits.iter().map(|v| v.to_bits()).collect();
        let rhs: Vec<u64> = hooked.logits.iter().map(|v| v.to_bits()).collect();
        assert_eq!(lhs, rhs);
    }

    // A planted additive hook changes the layer-L capture by exactly alpha*w.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC5);
    let w = unit_normalize(&rand_vec(&mut rng, handle.hidden_dim())).expect("unit");
    let alpha = 1.25;
    let layer = 2;
    let w_hook = w.clone();
    let hook = InterventionHook::new(layer, "steer", move |h| {
        Ok(h.iter().zip(&w_hook).map(|(x, wi)| x + alpha * wi).collect())
    });
    let hooked = handle.prefill(&prompt, &[hook]).expect("prefill");
    let expect: Vec<f64> = plain
        .state(layer + 1)
        .iter()
        .zip(&w)
        .map(|(x, wi)| x + alpha * wi)
        .collect();
    assert_eq!(hooked.state(layer + 1), expect.as_slice());
    for l in 0..=layer {
        assert_eq!(hooked.state(l), plain.state(l));
    }

    // Decode-phase hook calls are zero: the counter sees one prefill only.
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    let count = Arc::new(AtomicUsize::new(0));
    let c = count.clone();
    let counting = InterventionHook::new(1, "count", move |h| {
        c.fetch_add(1, Ordering::SeqCst);
        Ok(h.to_vec())
    });
    let (toks, _) = generate(&handle, &prompt, &[counting], 6, 0.7, 0.95, 99).expect("generate");
    let prefill_calls = 1;
    let decode_calls = count.load(Ordering::SeqCst) - prefill_calls;
    assert!(!toks.is_empty());
    assert_eq!(decode_calls, 0, "hooks fired during decode");

    let elapsed = start.elapsed();
    println!("acceptance 05 hook-contract: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// 6. End-to-end rigged-corpus mitigation through the CLI
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_rigged_corpus_mitigation() {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_fragile");
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .expect("crates dir")
        .parent()
        .expect("workspace root")
        .to_path_buf();
    let demo = root.join("data/demo-corpus.jsonl");
    let stage2 = root.join("data/stage2-corpus.jsonl");
    assert!(demo.exists() && stage2.exists(), "demo data present");

    let tmp = tempfile::tempdir().expect("tempdir");
    let art = tmp.path().join("artifacts");
    let run = |args: &[&str]| {
        let out = std::process::Command::new(bin)
            .args(args)
            .output()
            .expect("command runs");
        assert!(
            out.status.success(),
            "command {:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
    };

    run(&[
        "valign-build",
        "--corpus",
        stage2.to_str().expect("utf8"),
        "--model",
        "reference-planted-v1",
        "--layer",
        "2",
        "--out",
        art.to_str().expect("utf8"),
    ]);

    let mitigate = |out_dir: &std::path::Path| {
        run(&[
            "mitigate",
            "--corpus",
            demo.to_str().expect("utf8"),
            "--model",
            "reference-planted-v1",
            "--conditions",
            "valign-projection",
            "--steering",
            art.join("steering.json").to_str().expect("utf8"),
            "--subspace",
            art.join("subspace.json").to_str().expect("utf8"),
            "--out",
            out_dir.to_str().expect("utf8"),
        ]);
    };
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    mitigate(&out1);
    mitigate(&out2);

    // Projecting out the planted direction changes the flip rate.
    let load = |p: &std::path::Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(p).expect("read")).expect("json")
    };
    let base = load(&out1.join("results-base.json"));
    let proj = load(&out1.join("results-valign-projection.json"));
    let flip_of = |v: &serde_json::Value| -> f64 {
        let rows = v["aggregate"]["rows"].as_array().expect("rows");
        let temporal = rows
            .iter()
            .find(|r| r["dimension"] == "temporal")
            .expect("temporal row");
        temporal["framing"]["flip_pct"].as_f64().expect("flip")
    };
    let delta = flip_of(&proj) - flip_of(&base);
    assert!(
        delta.abs() > 1e-9,
        "projection left the flip rate unchanged ({delta})"
    );

    // Re-running the manifest reproduces every output bitwise.
    for name in ["results-base.json", "results-valign-projection.json", "report.txt"] {
        let a = std::fs::read(out1.join(name)).expect("read run1");
        let b = std::fs::read(out2.join(name)).expect("read run2");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // Same manifest hash across runs.
    assert_eq!(
        load(&out1.join("results-base.json"))["manifest_hash"],
        load(&out2.join("results-base.json"))["manifest_hash"]
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "acceptance 06 rigged-corpus-mitigation: PASS (flip delta {delta:+.1} pp, {elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// 7. Layer selection
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_layer_selection() {
    let start = Instant::now();

    // Hand-ranked toy table: layer 1 wins two criteria, layer 2 one.
    let table = select_layer(&[0.1, 0.9, 0.5], &[0.2, 0.8, 0.4], &[0.0, 0.7, 0.9]).expect("table");
    assert_eq!(table.selected_layer, 1);
    assert_eq!(table.rows[1].rank_sum, 4.0);
    assert_eq!(table.rows[2].rank_sum, 5.0);
    assert_eq!(table.rows[0].rank_sum, 9.0);

    // Unanimous winner.
    let table = select_layer(&[0.1, 0.9], &[0.1, 0.9], &[0.1, 0.9]).expect("table");
    assert_eq!(table.selected_layer, 1);
    assert_eq!(table.rows[1].rank_sum, 3.0);

    // Ties share mean ranks and resolve to the lowest index.
    let table = select_layer(&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]).expect("table");
    assert_eq!(table.selected_layer, 0);
    assert!(table.tie_broken);
    assert_eq!(table.rows[0].gap_rank, 1.5);

    // Invariance under strictly monotone rescaling of one criterion.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC7);
    for trial in 0..100usize {
        let n = rng.random_range(3..10usize);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
        };
        let (gap, sep, circ) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let base = select_layer(&gap, &sep, &circ).expect("table");
        let which = rng.random_range(0..3usize);
        let a: f64 = rng.random_range(0.5..3.0);
        let b: f64 = rng.random_range(0.1..2.0);
        let c: f64 = rng.random_range(-1.0..1.0);
        let rescale = |xs: &[f64]| -> Vec<f64> {
            xs.iter().map(|x| a * (b * x).exp() + c).collect()
        };
        let (g2, s2, c2) = match which {
            0 => (rescale(&gap), sep.clone(), circ.clone()),
            1 => (gap.clone(), rescale(&sep), circ.clone()),
            _ => (gap.clone(), sep.clone(), rescale(&circ)),
        };
        let after = select_layer(&g2, &s2, &c2).expect("table");
        assert_eq!(base.selected_layer, after.selected_layer, "trial {trial}");
    }

    let elapsed = start.elapsed();
    println!("acceptance 07 layer-selection: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// 8. Direction-shift properties
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_direction_shift_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC8);

    let record = |id: &str, cond: LensCondition, a: Vec<f64>, b: Vec<f64>| LensRecord {
        instance_id: id.into(),
        condition: cond,
        option_logits: BTreeMap::from([("A".to_string(), a), ("B".to_string(), b)]),
        top_tokens: Vec::new(),
    };

    for _ in 0..500 {
        let layers = rng.random_range(2..8usize);
        let series = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..layers).map(|_| rng.random_range(-5.0..5.0)).collect()
        };
        let base = record("x", LensCondition::Base, series(&mut rng), series(&mut rng));
        let framed = record("x", LensCondition::Framed, series(&mut rng), series(&mut rng));

        // Antisymmetry under label swap, exact.
        let d = delta_dir(&base, &framed, "A", "B").expect("delta");
        let swapped = delta_dir(&base, &framed, "B", "A").expect("delta");
        for (x, y) in d.iter().zip(&swapped) {
            assert_eq!(*x, -*y);
        }

        // Invariance under a uniform per-layer logit shift.
        let shift: f64 = rng.random_range(-100.0..100.0);
        let bump = |rec: &LensRecord| -> LensRecord {
            let mut out = rec.clone();
            for series in out.option_logits.values_mut() {
                for v in series.iter_mut() {
                    *v += shift;
                }
            }
            out
        };
        let d2 = delta_dir(&bump(&base), &bump(&framed), "A", "B").expect("delta");
        for (x, y) in d.iter().zip(&d2) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    // gap_curves against a hand-averaged toy set.
    let records = vec![
        (Quadrant::FH, vec![2.0, 6.0]),
        (Quadrant::FL, vec![0.0, 2.0]),
        (Quadrant::NH, vec![1.0, 1.0]),
        (Quadrant::NL, vec![-1.0, 3.0]),
    ];
    let curves = gap_curves(&records).expect("curves");
    assert_eq!(curves.per_quadrant[&Quadrant::FH], vec![2.0, 6.0]);
    // Flip mean (1, 4), noflip mean (0, 2) -> gap (1, 2).
    assert_eq!(curves.flip_noflip_gap, vec![1.0, 2.0]);

    let elapsed = start.elapsed();
    println!("acceptance 08 direction-shift-properties: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// 9. QC determinism
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_qc_determinism() {
    let start = Instant::now();

    // Truth table over the 3^4 grid around each threshold.
    let around = |t: u8| -> [u8; 3] { [t - 1, t, t + 1] };
    for si in around(3) {
        for pu in around(3) {
            for sa in around(2) {
                for na in around(2) {
                    let scores =
                        fragile_core::corpus::QcScores::new(si, sa, pu, na).expect("valid scores");
                    let (pass, failed) = apply_thresholds(&scores);
                    let expect = si >= 3 && pu >= 3 && sa >= 2 && na >= 2;
                    assert_eq!(pass, expect, "({si},{sa},{pu},{na})");
                    assert_eq!(failed.is_empty(), expect);
                }
            }
        }
    }

    // select_best stable under permutation.
    let variant = demo_variant();
    let mk = |id: &str, si: u8, sa: u8, pu: u8, na: u8| {
        let mut v = variant.clone();
        v.id = Some(id.into());
        let verdict = JudgeVerdict::new(
            id,
            fragile_core::corpus::QcScores::new(si, sa, pu, na).expect("valid"),
            "judge",
        );
        (v, verdict)
    };
    let cands = vec![
        mk("w", 5, 4, 5, 5),
        mk("x", 3, 5, 3, 3),
        mk("y", 2, 2, 2, 2),
        mk("z", 4, 5, 4, 4),
    ];
    let mut perms = vec![cands.clone()];
    perms.push(cands.iter().rev().cloned().collect());
    perms.push(vec![
        cands[2].clone(),
        cands[0].clone(),
        cands[3].clone(),
        cands[1].clone(),
    ]);
    for perm in &perms {
        let (best, _, _) = select_best(perm, SelectionOrder::default()).expect("best");
        // z passes with salience 5 and higher total than x.
        assert_eq!(best.id.as_deref(), Some("z"));
    }

    // run_qc_loop attempt counts, exact, against scripted stubs.
    let fail = fragile_core::corpus::QcScores::new(2, 5, 5, 5).expect("valid");
    let pass = fragile_core::corpus::QcScores::new(5, 5, 5, 5).expect("valid");
    for (verdicts, gens, max_regens, expect_attempts, expect_accept) in [
        (vec![pass], vec![], 2usize, 1usize, true),
        (vec![fail, pass], vec!["r1".to_string()], 1, 2, true),
        (
            vec![fail, fail, fail],
            vec!["r1".to_string(), "r2".to_string()],
            2,
            3,
            false,
        ),
    ] {
        let client = ScriptedClient::new("stub", gens, verdicts);
        let cfg = QcLoopConfig {
            max_regens,
            ..Default::default()
        };
        match run_qc_loop(&variant, &client, &cfg).expect("loop") {
            fragile_core::qc::QcOutcome::Accepted { attempts, .. } => {
                assert!(expect_accept);
                assert_eq!(attempts, expect_attempts);
            }
            fragile_core::qc::QcOutcome::Rejected { attempts, verdicts } => {
                assert!(!expect_accept);
                assert_eq!(attempts, expect_attempts);
                assert_eq!(verdicts.len(), expect_attempts);
            }
        }
    }

    let elapsed = start.elapsed();
    println!("acceptance 09 qc-determinism: PASS ({elapsed:?})");
}

fn demo_variant() -> fragile_core::corpus::FramedVariant {
    use fragile_core::corpus::*;
    FramedVariant {
        id: Some("v".into()),
        instance_id: "i".into(),
        dimension: FramingDimension::Temporal,
        target: FramingTarget::OptionText,
        pole_assignment: BTreeMap::from([
            ("A".to_string(), Pole::LongTerm),
            ("B".to_string(), Pole::ShortTerm),
        ]),
        scenario_text: "scenario".into(),
        options: vec![
            DecisionOption {
                label: "A".into(),
                text: "keep the plan".into(),
                resource_constraint: None,
            },
            DecisionOption {
                label: "B".into(),
                text: "change the plan".into(),
                resource_constraint: None,
            },
        ],
        qc: None,
    }
}

// ---------------------------------------------------------------------------
// 10. Pinned constants in manifests
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_pinned_constants_in_manifests() {
    let start = Instant::now();
    use fragile_core::artifact::{InterventionDescriptor, RunManifest};
    use fragile_core::elicit::{PromptStyle, SamplingConfig};

    let manifest = RunManifest::new(
        "evaluate",
        "reference",
        "corpus.jsonl",
        "0".repeat(64),
        SamplingConfig::default(),
        PromptStyle::Base,
        None,
        InterventionDescriptor::none(),
        DEFAULT_TAU,
    );
    let json = serde_json::to_value(&manifest).expect("manifest json");

    assert_eq!(json["tau"], 0.3);
    assert_eq!(json["defaults"]["tau"], 0.3);
    assert_eq!(json["defaults"]["sampling"]["temperature"], 0.7);
    assert_eq!(json["defaults"]["sampling"]["top_p"], 0.95);
    assert_eq!(json["defaults"]["sampling"]["num_samples"], 10);
    assert_eq!(json["defaults"]["sampling"]["max_new_tokens"], 1);
    assert_eq!(json["defaults"]["k"], 4);
    assert_eq!(json["defaults"]["layer_table"]["llama-3.1-8b-instruct"], 22);
    assert_eq!(
        json["defaults"]["layer_table"]["mistral-7b-instruct-v0.3"],
        22
    );
    assert_eq!(json["defaults"]["layer_table"]["qwen2.5-7b-instruct"], 18);
    assert_eq!(json["defaults"]["layer_table"]["llama-3.1-70b-instruct"], 55);

    // The live sampling block matches the defaults when unmodified.
    assert_eq!(json["sampling"], json["defaults"]["sampling"]);

    // And the pinned table drives the default-layer lookup.
    assert_eq!(
        fragile_core::valign::default_layer_for("meta-llama/Llama-3.1-8B-Instruct"),
        Some(22)
    );
    assert_eq!(
        fragile_core::valign::default_layer_for("Qwen2.5-7B-Instruct"),
        Some(18)
    );

    let elapsed = start.elapsed();
    println!("acceptance 10 pinned-constants: PASS ({elapsed:?})");
}

// Keep the unused-import lint honest across rustc updates.
#[allow(dead_code)]
fn _error_type_is_exported(_: Error) {}
