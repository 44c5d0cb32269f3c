use msef_core::gradcheck::{finite_diff_check, DEFAULT_STEP};
use msef_core::rng::stream;
use msef_core::tensor::Result;
use msef_core::{Graph64, Tensor64, Var};
use proptest::prelude::*;
use rand::Rng;

type Loss = fn(&mut Graph64, Var, &[Tensor64]) -> Result<Var>;

/// Reduces any output to a scalar with fixed random weights so every
/// coordinate of the op's Jacobian contributes.
fn weighted(g: &mut Graph64, y: Var, w: &Tensor64) -> Result<Var> {
    let wv = g.constant(w.clone())?;
    let p = g.mul(y, wv)?;
    g.sum(p)
}

fn check_op(name: &str, loss: Loss, extras: impl Fn(&mut msef_core::rng::Rng, usize, usize) -> Vec<Tensor64>) {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = stream(seed, msef_core::rng::key_stream(name));
        let r = rng.random_range(1..=8);
        let c = rng.random_range(2..=8);
        let x = Tensor64::randn(&[r, c], 1.0, &mut rng);
        let extra = extras(&mut rng, r, c);
        let err = finite_diff_check(|g, v| loss(g, v, &extra), &x, DEFAULT_STEP).unwrap();
        worst = worst.max(err);
    }
    assert!(worst <= 1e-4, "{name}: {worst}");
}

fn out_weights(rng: &mut msef_core::rng::Rng, r: usize, c: usize) -> Vec<Tensor64> {
    vec![Tensor64::randn(&[r, c], 1.0, rng)]
}

#[test]
fn elementwise_ops() {
    check_op("gelu", |g, x, e| { let y = g.gelu(x)?; weighted(g, y, &e[0]) }, out_weights);
    check_op("sigmoid", |g, x, e| { let y = g.sigmoid(x)?; weighted(g, y, &e[0]) }, out_weights);
    check_op("scale", |g, x, e| { let y = g.scale(x, -1.7)?; weighted(g, y, &e[0]) }, out_weights);
    check_op("add_scalar", |g, x, e| { let y = g.add_scalar(x, 0.3)?; let y = g.mul(y, y)?; weighted(g, y, &e[0]) }, out_weights);
    check_op("mul_self", |g, x, e| { let y = g.mul(x, x)?; weighted(g, y, &e[0]) }, out_weights);
    check_op(
        "add_sub",
        |g, x, e| {
            let k = g.constant(e[1].clone())?;
            let a = g.add(x, k)?;
            let s = g.sub(a, x)?;
            let s = g.mul(s, x)?;
            weighted(g, s, &e[0])
        },
        |rng, r, c| vec![Tensor64::randn(&[r, c], 1.0, rng), Tensor64::randn(&[r, c], 1.0, rng)],
    );
}

#[test]
fn relu_away_from_kink() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = stream(seed, 3);
        let x = Tensor64::randn(&[3, 4], 1.0, &mut rng).map(|v| if v.abs() < 0.01 { 0.5 } else { v });
        let w = Tensor64::randn(&[3, 4], 1.0, &mut rng);
        let err = finite_diff_check(|g, v| { let y = g.relu(v)?; weighted(g, y, &w) }, &x, DEFAULT_STEP).unwrap();
        worst = worst.max(err);
    }
    assert!(worst <= 1e-4, "{worst}");
}

#[test]
fn matrix_ops() {
    check_op(
        "matmul_left",
        |g, x, e| {
            let b = g.constant(e[0].clone())?;
            let y = g.matmul(x, b)?;
            weighted(g, y, &e[1])
        },
        |rng, r, c| vec![Tensor64::randn(&[c, 3], 1.0, rng), Tensor64::randn(&[r, 3], 1.0, rng)],
    );
    check_op(
        "matmul_right",
        |g, x, e| {
            let a = g.constant(e[0].clone())?;
            let y = g.matmul(a, x)?;
            weighted(g, y, &e[1])
        },
        |rng, r, c| vec![Tensor64::randn(&[2, r], 1.0, rng), Tensor64::randn(&[2, c], 1.0, rng)],
    );
    check_op("transpose", |g, x, e| { let y = g.transpose(x)?; weighted(g, y, &e[0]) }, |rng, r, c| {
        vec![Tensor64::randn(&[c, r], 1.0, rng)]
    });
    check_op(
        "add_row",
        |g, x, e| {
            let b = g.constant(e[1].clone())?;
            let y = g.add_row(x, b)?;
            let y = g.mul(y, y)?;
            weighted(g, y, &e[0])
        },
        |rng, r, c| vec![Tensor64::randn(&[r, c], 1.0, rng), Tensor64::randn(&[c], 1.0, rng)],
    );
    check_op(
        "add_row_bias",
        |g, x, e| {
            let row = g.slice_rows(x, 0, 1)?;
            let base = g.constant(e[1].clone())?;
            let y = g.add_row(base, row)?;
            let y = g.mul(y, y)?;
            weighted(g, y, &e[0])
        },
        |rng, _r, c| vec![Tensor64::randn(&[3, c], 1.0, rng), Tensor64::randn(&[3, c], 1.0, rng)],
    );
}

#[test]
fn normalizing_ops() {
    check_op("softmax", |g, x, e| { let y = g.softmax_rows(x)?; weighted(g, y, &e[0]) }, out_weights);
    check_op(
        "layer_norm",
        |g, x, e| {
            let gain = g.constant(e[1].clone())?;
            let bias = g.constant(e[2].clone())?;
            let y = g.layer_norm(x, gain, bias)?;
            weighted(g, y, &e[0])
        },
        |rng, r, c| {
            vec![Tensor64::randn(&[r, c], 1.0, rng), Tensor64::randn(&[c], 1.0, rng), Tensor64::randn(&[c], 1.0, rng)]
        },
    );
    check_op(
        "cross_entropy",
        |g, x, e| {
            let targets: Vec<usize> = e[0].data().iter().map(|v| *v as usize).collect();
            g.cross_entropy(x, &targets)
        },
        |rng, r, c| vec![Tensor64::vector((0..r).map(|_| rng.random_range(0..c) as f64).collect()).unwrap()],
    );
}

#[test]
fn structural_ops() {
    check_op(
        "slice_concat_cols",
        |g, x, e| {
            let c = g.dims(x).1;
            let a = g.slice_cols(x, 0, 1)?;
            let b = g.slice_cols(x, 1, c - 1)?;
            let y = g.concat_cols(&[b, a])?;
            let y = g.mul(y, y)?;
            weighted(g, y, &e[0])
        },
        out_weights,
    );
    check_op(
        "slice_concat_rows",
        |g, x, e| {
            let top = g.slice_rows(x, 0, 1)?;
            let y = g.concat_rows(&[x, top])?;
            let y = g.mul(y, y)?;
            weighted(g, y, &e[0])
        },
        |rng, r, c| vec![Tensor64::randn(&[r + 1, c], 1.0, rng)],
    );
    check_op("mean_rows", |g, x, e| { let y = g.mean_rows(x)?; let y = g.mul(y, y)?; weighted(g, y, &e[0]) }, |rng, _r, c| {
        vec![Tensor64::randn(&[1, c], 1.0, rng)]
    });
    check_op("mean", |g, x, _| { let y = g.mul(x, x)?; g.mean(y) }, |_, _, _| vec![]);
    check_op(
        "gather_rows",
        |g, x, e| {
            let r = g.dims(x).0;
            let ids: Vec<usize> = (0..5).map(|i| (i * 3) % r).collect();
            let y = g.gather_rows(x, &ids)?;
            let y = g.mul(y, y)?;
            weighted(g, y, &e[0])
        },
        |rng, _r, c| vec![Tensor64::randn(&[5, c], 1.0, rng)],
    );
}

#[test]
fn fan_out_accumulates() {
    let mut g = Graph64::new();
    let x = g.leaf(Tensor64::randn(&[2, 3], 1.0, &mut stream(0, 0)).with_grad()).unwrap();
    let a = g.sum(x).unwrap();
    let b = g.sum(x).unwrap();
    let l = g.add(a, b).unwrap();
    g.backward(l).unwrap();
    assert_eq!(g.grad(x).unwrap(), &[2.0; 6]);
}

#[test]
fn ops_are_deterministic() {
    let run = || {
        let mut rng = stream(42, 1);
        let mut g = Graph64::new();
        let x = g.leaf(Tensor64::randn(&[4, 6], 1.0, &mut rng).with_grad()).unwrap();
        let w = g.leaf(Tensor64::randn(&[6, 6], 1.0, &mut rng).with_grad()).unwrap();
        let y = g.matmul(x, w).unwrap();
        let y = g.softmax_rows(y).unwrap();
        let y = g.gelu(y).unwrap();
        let l = g.mean(y).unwrap();
        g.backward(l).unwrap();
        (g.value(l).data().to_vec(), g.grad(w).unwrap().to_vec())
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.1.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

fn small_matrix(max: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-5.0f64..5.0, r * c)))
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one_and_ignore_shifts((r, c, data) in small_matrix(8), shift in -50.0f64..50.0) {
        let x = Tensor64::matrix(r, c, data).unwrap();
        let mut g = Graph64::new();
        let xv = g.leaf(x.clone()).unwrap();
        let s = g.softmax_rows(xv).unwrap();
        let shifted = g.leaf(x.map(|v| v + shift)).unwrap();
        let s2 = g.softmax_rows(shifted).unwrap();
        for i in 0..r {
            let total: f64 = g.value(s).row(i).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        prop_assert!(g.value(s).max_abs_diff(g.value(s2)) < 1e-12);
    }

    #[test]
    fn matmul_is_associative(m in 1usize..6, k in 1usize..6, l in 1usize..6, n in 1usize..6, seed in 0u64..1000) {
        let mut rng = stream(seed, 5);
        let a = Tensor64::randn(&[m, k], 1.0, &mut rng);
        let b = Tensor64::randn(&[k, l], 1.0, &mut rng);
        let c = Tensor64::randn(&[l, n], 1.0, &mut rng);
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-9);
    }
}
