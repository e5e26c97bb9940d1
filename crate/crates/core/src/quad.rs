//! Adaptive Gauss-Kronrod (7, 15) quadrature for scalar and vector integrands.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule for the adaptive integrators.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_panels: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for (i, &x) in XGK.iter().enumerate() {
        let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in nodes {
            f(c + s * h * x, buf);
            for j in 0..dim {
                kron[j] += WGK[i] * buf[j];
                if i % 2 == 1 {
                    gauss[j] += WG[i / 2] * buf[j];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for j in 0..dim {
        kron[j] *= h;
        gauss[j] *= h;
        err = err.max((kron[j] - gauss[j]).abs());
    }
    Panel {
        a,
        b,
        value: kron,
        err,
    }
}

/// Integrates a vector-valued function over `[points[0], points[last]]`,
/// starting from the panels delimited by `points`.
///
/// Returns the integral and the sup-norm error estimate. Refinement stops
/// once the summed error is below `max(abs_tol, rel_tol * |I|_inf)`.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    points: &[f64],
    opts: QuadOptions,
) -> Result<(Vec<f64>, f64)> {
    assert!(points.len() >= 2, "need at least one interval");
    let mut buf = vec![0.0; dim];
    let mut panels: Vec<Panel> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&mut f, w[0], w[1], dim, &mut buf))
        .collect();
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            for j in 0..dim {
                total[j] += p.value[j];
            }
            err += p.err;
            if p.err > panels[worst].err {
                worst = i;
            }
        }
        let norm = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= opts.abs_tol.max(opts.rel_tol * norm) || panels.is_empty() {
            return Ok((total, err));
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                iterations: panels.len(),
            });
        }
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval can no longer be split; accept what we have.
            panels.push(p);
            let total: Vec<f64> = (0..dim)
                .map(|j| panels.iter().map(|q| q.value[j]).sum())
                .collect();
            let err = panels.iter().map(|q| q.err).sum();
            return Ok((total, err));
        }
        panels.push(gk15(&mut f, p.a, mid, dim, &mut buf));
        panels.push(gk15(&mut f, mid, p.b, dim, &mut buf));
    }
}

/// Scalar version of [`integrate_vec`] on `[a, b]` with optional interior breakpoints.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<(f64, f64)> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    let (v, e) = integrate_vec(|x, out: &mut [f64]| out[0] = f(x), 1, &pts, opts)?;
    Ok((v[0], e))
}
