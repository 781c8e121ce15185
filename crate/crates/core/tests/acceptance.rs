//! Acceptance suite. One test per criterion; each prints as its own
//! pass/fail line in the test output.

mod common;

use std::time::Instant;

use gaze_ssl::eval::{pearson, ttest_ind};
use gaze_ssl::events::{detect_saccades, EventKind, GazeTrace};
use gaze_ssl::geometry::{CameraIntrinsics, GazePoint};
use gaze_ssl::nn::kernels::Conv2dSpec;
use gaze_ssl::nn::{Tape, Tensor};
use gaze_ssl::ssl::{byol_tt_loss, simclr_tt_loss};
use rand::Rng;

use common::*;

const GRAD_H: f64 = 1e-3;
const GRAD_TOL: f64 = 1e-3;
const INSTANCES: usize = 20;

/// Criterion 1: analytic gradients of every network op and both losses match
/// central finite differences (h = 1e-3, elementwise relative error < 1e-3)
/// on 20 random instances each, in under 2 minutes.
#[test]
fn criterion_01_gradient_correctness() {
    let start = Instant::now();
    let mut rng = seeded(0xacce_0001);

    for i in 0..INSTANCES {
        let seed_rng = &mut rng;

        // conv2d over a few geometry variants
        {
            let (c, o) = (1 + i % 3, 1 + (i / 3) % 4);
            let (k, stride, pad) = match i % 4 {
                0 => (3, 1, 1),
                1 => (3, 2, 1),
                2 => (1, 1, 0),
                _ => (3, 1, 0),
            };
            let (h, w) = (4 + (i % 2) * 2, 4 + ((i / 2) % 2) * 2);
            let bs = 1 + i % 2;
            let spec =
                Conv2dSpec { in_channels: c, out_channels: o, kernel: k, stride, pad };
            let x = rand_tensor(&[bs, c, h, w], -1.0, 1.0, seed_rng);
            let wt = rand_tensor(&[o, c, k, k], -0.7, 0.7, seed_rng);
            let b = rand_tensor(&[o], -0.3, 0.3, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("conv2d[{i}]"),
                    inputs: vec![x, wt, b],
                    build: Box::new(move |t, v| t.conv2d(v[0], v[1], v[2], spec)),
                    naive: Box::new(move |ins| {
                        naive_conv2d(&ins[0], &ins[1], &ins[2], bs, c, h, w, &spec)
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // relu (inputs kept away from the kink)
        {
            let x = rand_tensor_nonzero(&[3, 7], seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("relu[{i}]"),
                    inputs: vec![x],
                    build: Box::new(|t, v| t.relu(v[0])),
                    naive: Box::new(|ins| naive_relu(&ins[0])),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // max_pool (window maxima separated)
        {
            let (bs, c, h, w) = (1 + i % 2, 1 + i % 3, 4, 6);
            let x = rand_tensor_pool_safe(bs, c, h, w, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("max_pool2[{i}]"),
                    inputs: vec![x],
                    build: Box::new(|t, v| t.max_pool2(v[0])),
                    naive: Box::new(move |ins| naive_max_pool2(&ins[0], bs, c, h, w)),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // global_avg_pool
        {
            let (bs, c, h, w) = (2, 1 + i % 4, 3, 5);
            let x = rand_tensor(&[bs, c, h, w], -1.0, 1.0, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("global_avg_pool[{i}]"),
                    inputs: vec![x],
                    build: Box::new(|t, v| t.global_avg_pool(v[0])),
                    naive: Box::new(move |ins| naive_gap(&ins[0], bs, c, h, w)),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // linear
        {
            let (bs, f, o) = (2 + i % 3, 3 + i % 5, 2 + i % 4);
            let x = rand_tensor(&[bs, f], -1.0, 1.0, seed_rng);
            let w = rand_tensor(&[o, f], -0.8, 0.8, seed_rng);
            let b = rand_tensor(&[o], -0.4, 0.4, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("linear[{i}]"),
                    inputs: vec![x, w, b],
                    build: Box::new(|t, v| t.linear(v[0], v[1], v[2])),
                    naive: Box::new(move |ins| naive_linear(&ins[0], &ins[1], &ins[2], bs, f, o)),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // group_norm
        {
            let (bs, c, h, w, groups) = (1 + i % 2, 4, 3, 3, if i % 2 == 0 { 2 } else { 4 });
            let x = rand_tensor(&[bs, c, h, w], -1.5, 1.5, seed_rng);
            let gamma = rand_tensor(&[c], 0.5, 1.5, seed_rng);
            let beta = rand_tensor(&[c], -0.5, 0.5, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("group_norm[{i}]"),
                    inputs: vec![x, gamma, beta],
                    build: Box::new(move |t, v| t.group_norm(v[0], v[1], v[2], groups)),
                    naive: Box::new(move |ins| {
                        naive_group_norm(
                            &ins[0],
                            &ins[1],
                            &ins[2],
                            bs,
                            c,
                            h,
                            w,
                            groups,
                            gaze_ssl::nn::kernels::GROUP_NORM_EPS as f64,
                        )
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // l2_normalize_rows
        {
            let (r, d) = (3 + i % 3, 4 + i % 4);
            let x = rand_tensor_nonzero(&[r, d], seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("l2_normalize[{i}]"),
                    inputs: vec![x],
                    build: Box::new(|t, v| t.l2_normalize_rows(v[0]).expect("nonzero rows")),
                    naive: Box::new(move |ins| naive_l2_normalize_rows(&ins[0], r, d)),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // matmul_nt
        {
            let (m, k, n) = (2 + i % 3, 3 + i % 4, 2 + i % 5);
            let a = rand_tensor(&[m, k], -1.0, 1.0, seed_rng);
            let b = rand_tensor(&[n, k], -1.0, 1.0, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("matmul_nt[{i}]"),
                    inputs: vec![a, b],
                    build: Box::new(|t, v| t.matmul_nt(v[0], v[1])),
                    naive: Box::new(move |ins| naive_matmul_nt(&ins[0], &ins[1], m, k, n)),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // elementwise family: scale, add_scalar, add, sub, mul
        {
            let shape = [2 + i % 3, 3 + i % 2];
            let a = rand_tensor(&shape, -1.0, 1.0, seed_rng);
            let b = rand_tensor(&shape, -1.0, 1.0, seed_rng);
            let s = 0.3 + (i as f32) * 0.11;
            gradcheck(
                &OpCheck {
                    name: format!("scale[{i}]"),
                    inputs: vec![a.clone()],
                    build: Box::new(move |t, v| t.scale(v[0], s)),
                    naive: Box::new(move |ins| ins[0].iter().map(|&v| v * s as f64).collect()),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            gradcheck(
                &OpCheck {
                    name: format!("add_scalar[{i}]"),
                    inputs: vec![a.clone()],
                    build: Box::new(move |t, v| t.add_scalar(v[0], s)),
                    naive: Box::new(move |ins| ins[0].iter().map(|&v| v + s as f64).collect()),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            gradcheck(
                &OpCheck {
                    name: format!("add[{i}]"),
                    inputs: vec![a.clone(), b.clone()],
                    build: Box::new(|t, v| t.add(v[0], v[1])),
                    naive: Box::new(|ins| ins[0].iter().zip(&ins[1]).map(|(x, y)| x + y).collect()),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            gradcheck(
                &OpCheck {
                    name: format!("sub[{i}]"),
                    inputs: vec![a.clone(), b.clone()],
                    build: Box::new(|t, v| t.sub(v[0], v[1])),
                    naive: Box::new(|ins| ins[0].iter().zip(&ins[1]).map(|(x, y)| x - y).collect()),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            gradcheck(
                &OpCheck {
                    name: format!("mul[{i}]"),
                    inputs: vec![a, b],
                    build: Box::new(|t, v| t.mul(v[0], v[1])),
                    naive: Box::new(|ins| ins[0].iter().zip(&ins[1]).map(|(x, y)| x * y).collect()),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // constant-tensor ops
        {
            let shape = [2 + i % 2, 4];
            let a = rand_tensor(&shape, -1.0, 1.0, seed_rng);
            let c = rand_tensor(&shape, -1.0, 1.0, seed_rng);
            let c64 = to_f64(&c);
            let cc = c.clone();
            gradcheck(
                &OpCheck {
                    name: format!("add_const[{i}]"),
                    inputs: vec![a.clone()],
                    build: Box::new(move |t, v| t.add_const(v[0], &cc)),
                    naive: Box::new(move |ins| {
                        ins[0].iter().zip(&c64).map(|(x, y)| x + y).collect()
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            let c64 = to_f64(&c);
            gradcheck(
                &OpCheck {
                    name: format!("mul_const[{i}]"),
                    inputs: vec![a],
                    build: Box::new(move |t, v| t.mul_const(v[0], &c)),
                    naive: Box::new(move |ins| {
                        ins[0].iter().zip(&c64).map(|(x, y)| x * y).collect()
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // row reductions
        {
            let (r, c) = (2 + i % 3, 3 + i % 4);
            let x = rand_tensor(&[r, c], -2.0, 2.0, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("logsumexp_rows[{i}]"),
                    inputs: vec![x.clone()],
                    build: Box::new(|t, v| t.logsumexp_rows(v[0])),
                    naive: Box::new(move |ins| naive_logsumexp_rows(&ins[0], r, c)),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            gradcheck(
                &OpCheck {
                    name: format!("sum_rows[{i}]"),
                    inputs: vec![x.clone()],
                    build: Box::new(|t, v| t.sum_rows(v[0])),
                    naive: Box::new(move |ins| {
                        (0..r).map(|ri| ins[0][ri * c..(ri + 1) * c].iter().sum()).collect()
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            gradcheck(
                &OpCheck {
                    name: format!("mean_all[{i}]"),
                    inputs: vec![x.clone()],
                    build: Box::new(|t, v| t.mean_all(v[0])),
                    naive: Box::new(move |ins| {
                        vec![ins[0].iter().sum::<f64>() / (r * c) as f64]
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            let b2 = rand_tensor(&[r, c], -1.0, 1.0, seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("dot_rows[{i}]"),
                    inputs: vec![x.clone(), b2],
                    build: Box::new(|t, v| t.dot_rows(v[0], v[1])),
                    naive: Box::new(move |ins| {
                        (0..r)
                            .map(|ri| {
                                (0..c).map(|ci| ins[0][ri * c + ci] * ins[1][ri * c + ci]).sum()
                            })
                            .collect()
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
            gradcheck(
                &OpCheck {
                    name: format!("reshape[{i}]"),
                    inputs: vec![x],
                    build: Box::new(move |t, v| t.reshape(v[0], vec![c, r])),
                    naive: Box::new(|ins| ins[0].clone()),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // softmax cross-entropy
        {
            let (b, k) = (3 + i % 3, 2 + i % 4);
            let logits = rand_tensor(&[b, k], -2.0, 2.0, seed_rng);
            let labels: Vec<usize> = (0..b).map(|_| seed_rng.gen_range(0..k)).collect();
            let labels2 = labels.clone();
            gradcheck(
                &OpCheck {
                    name: format!("softmax_xent[{i}]"),
                    inputs: vec![logits],
                    build: Box::new(move |t, v| t.softmax_xent(v[0], labels.clone())),
                    naive: Box::new(move |ins| vec![naive_softmax_xent(&ins[0], &labels2, b, k)]),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // SimCLR-TT loss through row normalization (its training-time input)
        {
            let pairs = 2 + i % 3;
            let rows = 2 * pairs;
            let d = 3 + i % 3;
            let tau = [0.08f32, 0.5, 1.0][i % 3];
            let z = rand_tensor_nonzero(&[rows, d], seed_rng);
            gradcheck(
                &OpCheck {
                    name: format!("simclr_tt[{i}]"),
                    inputs: vec![z],
                    build: Box::new(move |t, v| {
                        let zn = t.l2_normalize_rows(v[0]).expect("nonzero rows");
                        simclr_tt_loss(t, zn, tau).expect("valid batch")
                    }),
                    naive: Box::new(move |ins| {
                        vec![naive_simclr_tt(&ins[0], rows, d, tau as f64)]
                    }),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }

        // BYOL-TT loss (target constant)
        {
            let (rows, d) = (2 + i % 4, 3 + i % 3);
            let q = rand_tensor_nonzero(&[rows, d], seed_rng);
            let target = rand_tensor_nonzero(&[rows, d], seed_rng);
            let t64 = to_f64(&target);
            gradcheck(
                &OpCheck {
                    name: format!("byol_tt[{i}]"),
                    inputs: vec![q],
                    build: Box::new(move |t, v| {
                        byol_tt_loss(t, v[0], &target).expect("valid shapes")
                    }),
                    naive: Box::new(move |ins| vec![naive_byol_tt(&ins[0], &t64, rows, d)]),
                },
                GRAD_H,
                GRAD_TOL,
                seed_rng,
            );
        }
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "gradient checks took {:.1}s, budget is 120s",
        elapsed.as_secs_f64()
    );
}

/// Criterion 2: loss values match brute-force double-loop implementations
/// within 1e-6 on random batches up to size 64, and the closed-form examples
/// hold to 1e-4.
#[test]
fn criterion_02_loss_value_oracles() {
    let mut rng = seeded(0xacce_0002);

    // random batches, both losses
    for &pairs in &[2usize, 3, 8, 17, 32] {
        let rows = 2 * pairs; // up to 64 embeddings
        let d = 8;
        for rep in 0..4 {
            let tau = [0.08f32, 0.2, 0.7, 1.3][rep];
            let z = rand_tensor_nonzero(&[rows, d], &mut rng);
            let mut tape = Tape::new();
            let zv = tape.leaf(z.clone());
            let zn = tape.l2_normalize_rows(zv).unwrap();
            let loss = simclr_tt_loss(&mut tape, zn, tau).unwrap();
            let oracle = naive_simclr_tt(&to_f64(&z), rows, d, tau as f64);
            let got = tape.value(loss).item() as f64;
            assert!(
                (got - oracle).abs() < 1e-6,
                "simclr rows={rows} tau={tau}: impl {got} vs brute force {oracle}"
            );

            let q = rand_tensor_nonzero(&[rows, d], &mut rng);
            let t = rand_tensor_nonzero(&[rows, d], &mut rng);
            let mut tape = Tape::new();
            let qv = tape.leaf(q.clone());
            let loss = byol_tt_loss(&mut tape, qv, &t).unwrap();
            let oracle = naive_byol_tt(&to_f64(&q), &to_f64(&t), rows, d);
            let got = tape.value(loss).item() as f64;
            assert!(
                (got - oracle).abs() < 1e-6,
                "byol rows={rows}: impl {got} vs brute force {oracle}"
            );
        }
    }

    // closed-form: two identical pairs on orthogonal axes at tau = 1
    {
        let z = Tensor::new(
            vec![4, 2],
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let mut tape = Tape::new();
        let zv = tape.leaf(z);
        let loss = simclr_tt_loss(&mut tape, zv, 1.0).unwrap();
        let expect = -(1f64.exp() / (1f64.exp() + 2.0)).ln(); // 0.5514
        assert!((tape.value(loss).item() as f64 - expect).abs() < 1e-4);
        assert!((expect - 0.5514).abs() < 1e-4);
    }

    // closed-form: all embeddings identical -> log(B - 1)
    for &b in &[4usize, 10, 64] {
        let z = Tensor::new(vec![b, 3], [0.6f32, 0.8, 0.0].repeat(b)).unwrap();
        let mut tape = Tape::new();
        let zv = tape.leaf(z);
        let loss = simclr_tt_loss(&mut tape, zv, 0.4).unwrap();
        let expect = ((b - 1) as f64).ln();
        assert!(
            (tape.value(loss).item() as f64 - expect).abs() < 1e-4,
            "uniform batch B={b}"
        );
    }

    // closed-form: BYOL parallel / orthogonal / antiparallel
    for (q, t, expect) in [
        ([1.0f32, 0.0], [2.0f32, 0.0], 0.0f64),
        ([1.0, 0.0], [0.0, 3.0], 2.0),
        ([1.0, 0.0], [-4.0, 0.0], 4.0),
    ] {
        let mut tape = Tape::new();
        let qv = tape.leaf(Tensor::new(vec![1, 2], q.to_vec()).unwrap());
        let loss = byol_tt_loss(&mut tape, qv, &Tensor::new(vec![1, 2], t.to_vec()).unwrap()).unwrap();
        assert!((tape.value(loss).item() as f64 - expect).abs() < 1e-4);
    }
}

/// Criterion 3: on 100 synthetic traces with planted saccades, detection
/// precision and recall are both 1.0 at the default thresholds, and the
/// segmentation partitions every trace.
#[test]
fn criterion_03_saccade_detector_oracle() {
    let intr = CameraIntrinsics::new(640, 480, 72.0, 30.0).unwrap();
    let px_per_deg = 640.0 / 72.0;
    let mut rng = seeded(0xacce_0003);

    let mut checked_saccades = 0usize;
    for trace_idx in 0..100 {
        // plant 3..8 jumps of >= 3 deg separated by >= 10 stationary frames
        let n_jumps = 3 + trace_idx % 6;
        let mut pts: Vec<GazePoint> = Vec::new();
        let mut pos = (
            rng.gen_range(100.0..540.0),
            rng.gen_range(100.0..380.0),
        );
        let mut planted = Vec::new();
        for _ in 0..n_jumps {
            let hold = 10 + rng.gen_range(0..8);
            for _ in 0..hold {
                pts.push(GazePoint::new(pos.0, pos.1));
            }
            // a one-frame jump of 3..6 degrees in a random direction that
            // stays inside the frame
            let amp_deg = rng.gen_range(3.0..6.0);
            let amp = amp_deg * px_per_deg;
            let mut next = pos;
            for _ in 0..32 {
                let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                let cand = (pos.0 + amp * ang.cos(), pos.1 + amp * ang.sin());
                if cand.0 > 10.0 && cand.0 < 630.0 && cand.1 > 10.0 && cand.1 < 470.0 {
                    next = cand;
                    break;
                }
            }
            planted.push(pts.len() - 1); // sample whose outgoing motion jumps
            pos = next;
        }
        for _ in 0..12 {
            pts.push(GazePoint::new(pos.0, pos.1));
        }

        let n = pts.len();
        let trace = GazeTrace::from_points(pts, intr);
        let seg = detect_saccades(&trace, 25.0, 10.0, 45.0).unwrap();

        // partition
        let total: usize = seg.events.iter().map(|e| e.len()).sum();
        assert_eq!(total, n, "segmentation must partition trace {trace_idx}");
        for w in seg.events.windows(2) {
            assert_ne!(w[0].kind, w[1].kind);
        }

        // precision & recall: each detected saccade event must contain
        // exactly one planted jump, and every planted jump must be detected
        let detected: Vec<_> =
            seg.events.iter().filter(|e| e.kind == EventKind::Saccade).collect();
        assert_eq!(
            detected.len(),
            planted.len(),
            "trace {trace_idx}: {} detected vs {} planted",
            detected.len(),
            planted.len()
        );
        for (d, &p) in detected.iter().zip(&planted) {
            assert!(
                d.start_idx <= p && p <= d.end_idx,
                "trace {trace_idx}: planted jump at {p} not inside detected [{}, {}]",
                d.start_idx,
                d.end_idx
            );
        }
        checked_saccades += planted.len();
    }
    assert!(checked_saccades >= 300, "oracle exercised {checked_saccades} saccades");
}

/// Criterion 4: pearson and ttest_ind agree with independent high-precision
/// oracles within 1e-10 on 1000 random inputs; worked examples hold to 1e-4.
#[test]
fn criterion_04_statistics_oracles() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let mut rng = seeded(0xacce_0004);

    // independent textbook oracle: raw-moment sums in f64
    let oracle_pearson = |x: &[f64], y: &[f64]| -> (f64, f64) {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let syy: f64 = y.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        let df = n - 2.0;
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        let p = 2.0 * (1.0 - dist.cdf(t.abs()));
        (r, p)
    };
    let oracle_ttest = |a: &[f64], b: &[f64]| -> (f64, f64) {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let ma = a.iter().sum::<f64>() / na;
        let mb = b.iter().sum::<f64>() / nb;
        let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / (na - 1.0);
        let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / (nb - 1.0);
        let df = na + nb - 2.0;
        let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        let t = (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        let p = 2.0 * (1.0 - dist.cdf(t.abs()));
        (t, p)
    };

    for case in 0..1000 {
        let n = 3 + case % 40;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 0.3 * v + rng.gen_range(-2.0..2.0_f64))
            .collect();
        let got = pearson(&x, &y).unwrap();
        let (r_expect, p_expect) = oracle_pearson(&x, &y);
        assert!(
            (got.statistic - r_expect).abs() < 1e-10,
            "case {case}: r {} vs {r_expect}",
            got.statistic
        );
        assert!(
            (got.p_value - p_expect).abs() < 1e-10,
            "case {case}: p {} vs {p_expect}",
            got.p_value
        );

        let na = 2 + case % 30;
        let nb = 2 + (case / 2) % 30;
        let a: Vec<f64> = (0..na).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.gen_range(-2.5..3.5)).collect();
        let got = ttest_ind(&a, &b).unwrap();
        let (t_expect, p_expect) = oracle_ttest(&a, &b);
        assert!(
            (got.statistic - t_expect).abs() < 1e-10,
            "case {case}: t {} vs {t_expect}",
            got.statistic
        );
        assert!(
            (got.p_value - p_expect).abs() < 1e-10,
            "case {case}: p {} vs {p_expect}",
            got.p_value
        );
    }

    // worked examples
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((r.statistic - 0.8).abs() < 1e-4);
    let t = ttest_ind(&[0.0, 1.0], &[1.0, 2.0]).unwrap();
    assert!((t.statistic - (-1.4142)).abs() < 1e-4);
    assert_eq!(t.df, 2.0);
}
