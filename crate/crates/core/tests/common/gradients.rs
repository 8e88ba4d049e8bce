//! Finite-difference checks of the softmax loss derivatives.

use rand::Rng;
use uavids_core::ensembles::softmax_loss_grad;
use uavids_core::rng::stream;
use uavids_core::Matrix;

/// Weighted loss of one row, `w · ℓ(z, y)`.
fn row_loss(z: &[f64], y: usize, w: f64) -> f64 {
    let m = Matrix::from_vec(1, z.len(), z.to_vec());
    w * softmax_loss_grad(&m, &[y], &[w]).0
}

/// Central difference refined by one Richardson step.
fn derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3;
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Worst relative errors of the gradient and hessian on one random case.
pub fn fd_case(seed: u64) -> (f64, f64) {
    let mut r = stream(seed, 0);
    let n = r.random_range(1..=6);
    let k = r.random_range(2..=6);
    let z: Vec<f64> = (0..n * k).map(|_| r.random_range(-3.0..3.0)).collect();
    let y: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    let w: Vec<f64> = (0..n).map(|_| r.random_range(0.2..3.0)).collect();
    let (_, g, h) = softmax_loss_grad(&Matrix::from_vec(n, k, z.clone()), &y, &w);
    let (mut eg, mut eh): (f64, f64) = (0.0, 0.0);
    for i in 0..n {
        let zi = &z[i * k..(i + 1) * k];
        for c in 0..k {
            let at = |v: f64| {
                let mut zz = zi.to_vec();
                zz[c] = v;
                zz
            };
            let fd_g = derivative(|v| row_loss(&at(v), y[i], w[i]), zi[c]);
            let grad_c = |v: f64| {
                let zz = at(v);
                let m = Matrix::from_vec(1, k, zz);
                softmax_loss_grad(&m, &[y[i]], &[w[i]]).1.get(0, c)
            };
            let fd_h = derivative(grad_c, zi[c]);
            eg = eg.max(rel(g.get(i, c), fd_g));
            eh = eh.max(rel(h.get(i, c), fd_h));
        }
    }
    (eg, eh)
}
