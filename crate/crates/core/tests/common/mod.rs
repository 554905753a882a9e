//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use xxz_core::basis::SectorBasis;
use xxz_core::hamiltonian::ChainSpec;
use xxz_core::noise::Collision;

pub type C64 = Complex<f64>;

/// Dense 2^N Hamiltonian assembled from Kronecker products of Pauli matrices.
/// Bit `i` of the full-space index is site `i`; `|1>` is occupied (z = +1).
pub fn full_hamiltonian(spec: &ChainSpec) -> DMatrix<C64> {
    let n = spec.n_sites;
    let d = 1usize << n;
    let c = |re: f64, im: f64| C64::new(re, im);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(-1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
    let mut h = DMatrix::<C64>::zeros(d, d);
    for i in 0..n.saturating_sub(1) {
        h += site_op(n, &[(i, &sx), (i + 1, &sx)]) * c(spec.coupling, 0.0);
        h += site_op(n, &[(i, &sy), (i + 1, &sy)]) * c(spec.coupling, 0.0);
        h += site_op(n, &[(i, &sz), (i + 1, &sz)]) * c(spec.coupling * spec.delta, 0.0);
    }
    for i in 0..n {
        h += site_op(n, &[(i, &sz)]) * c(spec.fields[i], 0.0);
    }
    h
}

fn site_op(n: usize, ops: &[(usize, &DMatrix<C64>)]) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(2, 2);
    let mut acc = DMatrix::<C64>::identity(1, 1);
    for site in (0..n).rev() {
        let m = ops.iter().find(|(s, _)| *s == site).map(|(_, m)| *m).unwrap_or(&id);
        acc = acc.kronecker(m);
    }
    acc
}

/// Full-space σz on `site`, as a diagonal.
pub fn full_sz_diag(n: usize, site: usize) -> Vec<f64> {
    (0..1usize << n).map(|s| if s >> site & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

pub fn embed(basis: &SectorBasis, psi: &[C64]) -> Vec<C64> {
    let mut full = vec![C64::new(0.0, 0.0); 1 << basis.n_sites()];
    for (j, &a) in psi.iter().enumerate() {
        full[basis.unrank(j) as usize] = a;
    }
    full
}

/// Trajectory-averaged density matrices on `times`, obtained by evolving the
/// full-space density matrix with `exp(-iHt)` (Padé) and conjugating by σz
/// at every recorded collision. Returned in the sector basis.
pub fn averaged_density(
    spec: &ChainSpec,
    basis: &SectorBasis,
    psi0: &[C64],
    trajectories: &[Vec<Collision>],
    times: &[f64],
) -> Vec<DMatrix<C64>> {
    let n = spec.n_sites;
    let h = full_hamiltonian(spec);
    let unitary = |tau: f64| (&h * C64::new(0.0, -tau)).exp();
    let full0 = embed(basis, psi0);
    let d = full0.len();
    let rho0 = DMatrix::from_fn(d, d, |a, b| full0[a] * full0[b].conj());
    let dim = basis.dim();
    let mut acc = vec![DMatrix::<C64>::zeros(dim, dim); times.len()];

    for events in trajectories {
        let mut rho = rho0.clone();
        let mut now = 0.0;
        let mut ev = events.iter().peekable();
        for (k, &t) in times.iter().enumerate() {
            while let Some(e) = ev.next_if(|e| e.time <= t) {
                let u = unitary(e.time - now);
                rho = &u * rho * u.adjoint();
                now = e.time;
                let z = full_sz_diag(n, e.site);
                rho = DMatrix::from_fn(d, d, |a, b| rho[(a, b)] * z[a] * z[b]);
            }
            let u = unitary(t - now);
            rho = &u * rho * u.adjoint();
            now = t;
            for a in 0..dim {
                for b in 0..dim {
                    acc[k][(a, b)] += rho[(basis.unrank(a) as usize, basis.unrank(b) as usize)];
                }
            }
        }
    }
    let w = C64::new(1.0 / trajectories.len() as f64, 0.0);
    acc.into_iter().map(|m| m * w).collect()
}

/// Lanczos approximation of Γ(x) for x > 0.5.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + G + 0.5;
    let series: f64 = C[0] + (1..9).map(|i| C[i] / (x + i as f64)).sum::<f64>();
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * series
}

/// Weibull CDF with unit-rate mean `1 / rc`.
pub fn weibull_cdf(t: f64, nu: f64, rc: f64) -> f64 {
    let scale = 1.0 / (rc * gamma(1.0 + 1.0 / nu));
    1.0 - (-(t / scale).powf(nu)).exp()
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 1e-3.
pub fn ks_critical(n: usize) -> f64 {
    (-(1e-3f64 / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn mean_over(times: &[f64], values: &[f64], lo: f64, hi: f64) -> f64 {
    let sel: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo - 1e-9 && **t <= hi + 1e-9)
        .map(|(_, v)| *v)
        .collect();
    sel.iter().sum::<f64>() / sel.len() as f64
}

/// Linear interpolation of the series `(xs, ys)` at `x`; `xs` ascending.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v < x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] * (1.0 - w) + ys[k] * w
}
