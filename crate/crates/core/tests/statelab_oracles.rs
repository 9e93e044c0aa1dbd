use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use refnet::gravity::{fit_gravity, GravityObservation};
use refnet::statelab::{
    classical_mds, correlation_matrix, euclidean_distances, factor_analysis, fit_mixed_model, kmeans, ModelSpec, Panel,
};
use refnet::stats::ols;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Intercept, year dummies (first year as reference), then the listed predictors.
fn fixed_design(panel: &Panel, main: &[usize]) -> DMatrix<f64> {
    let years = panel.years();
    let cols = 1 + years.len() - 1 + main.len();
    DMatrix::from_fn(panel.len(), cols, |r, c| {
        if c == 0 {
            1.0
        } else if c < years.len() {
            f64::from(panel.year[r] == years[c])
        } else {
            panel.predictors[main[c - years.len()]].values[r]
        }
    })
}

/// Profile log-likelihood of the random-intercept model at `γ = τ²/σ²`,
/// with each group's covariance `I + γ·11ᵀ` inverted explicitly.
fn profile(panel: &Panel, x: &DMatrix<f64>, gamma: f64) -> (f64, DVector<f64>, f64) {
    let n = panel.len();
    let p = x.ncols();
    let groups = panel.group_labels.len();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (r, &g) in panel.group.iter().enumerate() {
        rows[g].push(r);
    }
    let mut xtvx = DMatrix::zeros(p, p);
    let mut xtvy = DVector::zeros(p);
    let mut logdet = 0.0;
    let mut parts = Vec::new();
    for idx in rows.iter().filter(|r| !r.is_empty()) {
        let m = idx.len();
        let v = DMatrix::from_fn(m, m, |a, b| f64::from(a == b) + gamma);
        let vinv = v.clone().try_inverse().unwrap();
        logdet += v.determinant().ln();
        let xi = DMatrix::from_fn(m, p, |a, c| x[(idx[a], c)]);
        let yi = DVector::from_iterator(m, idx.iter().map(|&r| panel.y[r]));
        xtvx += xi.transpose() * &vinv * &xi;
        xtvy += xi.transpose() * &vinv * &yi;
        parts.push((xi, yi, vinv));
    }
    let beta = xtvx.try_inverse().unwrap() * xtvy;
    let q: f64 = parts
        .iter()
        .map(|(xi, yi, vinv)| {
            let r = yi - xi * &beta;
            (r.transpose() * vinv * &r)[(0, 0)]
        })
        .sum();
    let sigma2 = q / n as f64;
    let ll = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0) - 0.5 * logdet;
    (ll, beta, sigma2)
}

fn simulate(seed: u64, tau: f64, sigma: f64, beta: &[f64]) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (states, years) = (40usize, [2010u16, 2011, 2012, 2013]);
    let mut y = Vec::new();
    let mut g = Vec::new();
    let mut t = Vec::new();
    let mut xs: Vec<Vec<f64>> = vec![Vec::new(); beta.len()];
    for s in 0..states {
        let u = tau * normal(&mut rng);
        for (k, &yr) in years.iter().enumerate() {
            let mut v = u + 0.3 * k as f64 + sigma * normal(&mut rng);
            for (j, b) in beta.iter().enumerate() {
                let x = normal(&mut rng);
                xs[j].push(x);
                v += b * x;
            }
            y.push(v);
            g.push(format!("S{s:02}"));
            t.push(yr);
        }
    }
    let preds = xs.into_iter().enumerate().map(|(j, v)| (format!("x{j}"), v)).collect();
    Panel::new(y, g, t, preds).unwrap()
}

#[test]
fn mixed_model_matches_brute_likelihood() {
    let panel = simulate(3, 1.0, 0.5, &[0.8, -0.4]);
    let spec = ModelSpec { main: vec![0, 1], interactions: vec![], per_year_interactions: false };
    let fit = fit_mixed_model(&panel, &spec).unwrap();
    let x = fixed_design(&panel, &[0, 1]);
    // coarse-to-fine grid on ln γ
    let (mut lo, mut hi) = (-10.0f64, 8.0f64);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for _ in 0..6 {
        for i in 0..=60 {
            let lg = lo + (hi - lo) * i as f64 / 60.0;
            let ll = profile(&panel, &x, lg.exp()).0;
            if ll > best.0 {
                best = (ll, lg);
            }
        }
        let w = (hi - lo) / 30.0;
        lo = best.1 - w;
        hi = best.1 + w;
    }
    let (ll, beta, sigma2) = profile(&panel, &x, best.1.exp());
    assert!((fit.loglik - ll).abs() < 1e-6, "fit {} oracle {}", fit.loglik, ll);
    assert!((fit.sigma2 - sigma2).abs() / sigma2 < 1e-4);
    assert!((fit.tau2 - best.1.exp() * sigma2).abs() / fit.tau2 < 1e-3);
    let k = beta.len();
    assert!((fit.beta1[0].estimate - beta[k - 2]).abs() < 1e-5);
    assert!((fit.beta1[1].estimate - beta[k - 1]).abs() < 1e-5);
    assert!((fit.beta0.estimate - beta[0]).abs() < 1e-5);
}

#[test]
fn mixed_model_recovers_simulated_effects() {
    let mut hits = 0;
    for seed in 0..20 {
        let panel = simulate(100 + seed, 1.0, 0.5, &[0.6]);
        let spec = ModelSpec { main: vec![0], interactions: vec![], per_year_interactions: false };
        let fit = fit_mixed_model(&panel, &spec).unwrap();
        let c = &fit.beta1[0];
        assert!(refnet::stats::mean(&panel.predictors[0].values).abs() < 1e-12);
        if c.p_value < 0.001 {
            hits += 1;
        }
        assert!(fit.tau2 > 0.2 && fit.tau2 < 3.0, "seed {seed}: tau2 {}", fit.tau2);
        assert!((fit.sigma2 - 0.25).abs() < 0.12, "seed {seed}: sigma2 {}", fit.sigma2);
    }
    assert_eq!(hits, 20);
}

#[test]
fn zero_variance_component_reduces_to_ols() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (states, years) = (30usize, [2010u16, 2011, 2012]);
    let mut y = Vec::new();
    let (mut g, mut t, mut x) = (Vec::new(), Vec::new(), Vec::new());
    for s in 0..states {
        // within-state errors summing to zero leave no between-state variance
        let e: Vec<f64> = (0..3).map(|_| normal(&mut rng)).collect();
        let m = e.iter().sum::<f64>() / 3.0;
        for (k, &yr) in years.iter().enumerate() {
            let xv = normal(&mut rng);
            x.push(xv);
            y.push(1.0 + 0.5 * xv + 0.2 * k as f64 + e[k] - m);
            g.push(format!("S{s}"));
            t.push(yr);
        }
    }
    let panel = Panel::new(y, g, t, vec![("x".into(), x)]).unwrap();
    let fit = fit_mixed_model(&panel, &ModelSpec { main: vec![0], interactions: vec![], per_year_interactions: false })
        .unwrap();
    assert_eq!(fit.tau2, 0.0);
    let xd = fixed_design(&panel, &[0]);
    let o = ols(&xd, &DVector::from_vec(panel.y.clone())).unwrap();
    assert!((fit.beta0.estimate - o.coef[0]).abs() < 1e-9);
    assert!((fit.beta1[0].estimate - o.coef[3]).abs() < 1e-9);
    assert!((fit.sigma2 - o.rss / panel.len() as f64).abs() < 1e-9);
}

#[test]
fn gravity_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let obs: Vec<GravityObservation> = (0..400)
        .map(|_| {
            let mi = rng.gen_range(100.0..50_000.0f64);
            let mj = rng.gen_range(100.0..50_000.0f64);
            let d = rng.gen_range(50.0..4000.0f64);
            let lf = -3.0 + 0.9 * mi.ln() + 0.7 * mj.ln() - 1.1 * d.ln() + 0.3 * normal(&mut rng);
            GravityObservation { flow: lf.exp(), mass_from: mi, mass_to: mj, distance_km: d }
        })
        .collect();
    let fit = fit_gravity(&obs).unwrap();
    let x = DMatrix::from_fn(obs.len(), 4, |r, c| match c {
        0 => 1.0,
        1 => obs[r].mass_from.ln(),
        2 => obs[r].mass_to.ln(),
        _ => obs[r].distance_km.ln(),
    });
    let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| o.flow.ln()));
    let xtx = x.transpose() * &x;
    let chol = xtx.clone().cholesky().unwrap();
    let b = chol.solve(&(x.transpose() * &y));
    let resid = &y - &x * &b;
    let s2 = resid.norm_squared() / (obs.len() - 4) as f64;
    let inv = chol.inverse();
    let want = [b[0], b[1], b[2], -b[3]];
    let got = [fit.g_log, fit.beta_i, fit.beta_j, fit.beta_d];
    for k in 0..4 {
        assert!((got[k] - want[k]).abs() < 1e-9, "coef {k}");
        assert!((fit.std_errors[k] - (s2 * inv[(k, k)]).sqrt()).abs() < 1e-9, "se {k}");
    }
    let ybar = y.mean();
    let r2 = 1.0 - resid.norm_squared() / y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>();
    assert!((fit.r_squared - r2).abs() < 1e-12);
}

#[test]
fn mds_recovers_planar_configuration_up_to_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]).collect();
    let res = classical_mds(&euclidean_distances(&pts), 2).unwrap();
    let centre = |p: &[Vec<f64>]| {
        let n = p.len() as f64;
        let (mx, my) = (p.iter().map(|v| v[0]).sum::<f64>() / n, p.iter().map(|v| v[1]).sum::<f64>() / n);
        DMatrix::from_fn(p.len(), 2, |r, c| p[r][c] - if c == 0 { mx } else { my })
    };
    let a = centre(&pts);
    let b = centre(&res.coords);
    // orthogonal Procrustes: R = U Vᵀ from svd(Bᵀ A)
    let svd = (b.transpose() * &a).svd(true, true);
    let r = svd.u.unwrap() * svd.v_t.unwrap();
    let err = (&b * r - &a).abs().max();
    assert!(err < 1e-8, "procrustes residual {err}");
    assert!(!res.reduced);
}

#[test]
fn kmeans_finds_separated_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for (k, c) in centres.iter().enumerate() {
        for _ in 0..30 {
            pts.push(vec![c[0] + normal(&mut rng), c[1] + normal(&mut rng)]);
            truth.push(k);
        }
    }
    let res = kmeans(&pts, 3, 4, 10).unwrap();
    let mut map = [usize::MAX; 3];
    for (i, &a) in res.assignments.iter().enumerate() {
        if map[truth[i]] == usize::MAX {
            map[truth[i]] = a;
        }
        assert_eq!(map[truth[i]], a);
    }
    let sse: f64 = pts
        .iter()
        .zip(&res.assignments)
        .map(|(p, &a)| p.iter().zip(&res.centroids[a]).map(|(x, c)| (x - c).powi(2)).sum::<f64>())
        .sum();
    assert!((sse - res.sse).abs() < 1e-9);
    assert_eq!(kmeans(&pts, 3, 4, 10).unwrap(), res);
}

#[test]
fn single_factor_loadings_are_recovered() {
    let lambda = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];
    let r = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else { lambda[i] * lambda[j] });
    let fa = factor_analysis(&r, 1).unwrap();
    let sign = fa.loadings[0][0].signum();
    for (i, l) in lambda.iter().enumerate() {
        assert!((sign * fa.loadings[i][0] - l).abs() < 1e-3, "var {i}: {}", fa.loadings[i][0]);
    }
    let cols: Vec<Vec<f64>> = vec![vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 4.0, 6.0, 8.5], vec![4.0, 3.0, 2.0, 1.0]];
    let c = correlation_matrix(&cols);
    assert!((c[(0, 2)] + 1.0).abs() < 1e-12);
    assert_eq!(c[(1, 1)], 1.0);
}
