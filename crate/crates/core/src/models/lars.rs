//! Least angle regression and its lasso variant, driven by the Gram matrix.

use nalgebra::{DMatrix, DVector};

use super::linear::{Centered, LinearFit};

pub(crate) enum Stop {
    /// Plain LARS: take this many steps (one variable enters per step).
    Steps(usize),
    /// Lasso path: stop where the maximal correlation `|xⱼᵀr|/n` falls to `alpha`.
    Alpha(f64),
}

pub(crate) fn fit(x: &DMatrix<f64>, y: &[f64], stop: Stop) -> LinearFit {
    let c = Centered::new(x, y);
    let (coef, iterations) = path(&c.x, &c.y, &stop);
    LinearFit {
        intercept: c.intercept(&coef),
        coef,
        iterations,
        converged: true,
        singular: false,
    }
}

fn path(x: &DMatrix<f64>, y: &DVector<f64>, stop: &Stop) -> (Vec<f64>, usize) {
    let (n, p) = (x.nrows(), x.ncols());
    let gram = x.tr_mul(x);
    let xty = x.tr_mul(y);
    let mut beta = DVector::zeros(p);
    let (lasso, alpha_n) = match *stop {
        Stop::Alpha(a) => (true, a * n as f64),
        Stop::Steps(_) => (false, 0.0),
    };
    let max_active = p.min(n.saturating_sub(1).max(1));

    let scale = xty.amax();
    if scale == 0.0 {
        return (vec![0.0; p], 0);
    }
    let tiny = 1e-12 * scale;

    let mut active: Vec<usize> = Vec::new();
    let mut excluded = vec![false; p];
    let mut add_next = true;
    let mut steps = 0;
    loop {
        let corr = &xty - &gram * &beta;
        let c_max = (0..p)
            .filter(|&j| !excluded[j])
            .map(|j| corr[j].abs())
            .fold(0.0, f64::max);
        if c_max <= tiny || (lasso && c_max <= alpha_n) {
            break;
        }
        if add_next {
            if let Stop::Steps(k) = *stop {
                if steps >= k {
                    break;
                }
            }
            if active.len() >= max_active {
                break;
            }
            let mut best: Option<usize> = None;
            for j in (0..p).filter(|j| !excluded[*j] && !active.contains(j)) {
                if best.is_none_or(|b| corr[j].abs() > corr[b].abs()) {
                    best = Some(j);
                }
            }
            match best {
                Some(j) => active.push(j),
                None => break,
            }
        }

        let signs = DVector::from_iterator(active.len(), active.iter().map(|&j| corr[j].signum()));
        let g_aa = DMatrix::from_fn(active.len(), active.len(), |a, b| gram[(active[a], active[b])]);
        let Some(chol) = g_aa.cholesky() else {
            // The newest variable is collinear with the active set.
            let j = active.pop().expect("non-empty active set");
            excluded[j] = true;
            add_next = true;
            continue;
        };
        let d = chol.solve(&signs);

        let mut gamma = c_max;
        for j in (0..p).filter(|j| !excluded[*j] && !active.contains(j)) {
            let a_j: f64 = active.iter().enumerate().map(|(t, &k)| gram[(j, k)] * d[t]).sum();
            for (num, den) in [(c_max - corr[j], 1.0 - a_j), (c_max + corr[j], 1.0 + a_j)] {
                if den > 0.0 {
                    let g = num / den;
                    if g > 0.0 && g < gamma {
                        gamma = g;
                    }
                }
            }
        }
        let mut drop = None;
        if lasso {
            for (t, &j) in active.iter().enumerate() {
                if beta[j] != 0.0 && d[t] != 0.0 {
                    let z = -beta[j] / d[t];
                    if z > 0.0 && z < gamma {
                        gamma = z;
                        drop = Some(t);
                    }
                }
            }
        }
        let mut finished = false;
        if lasso && c_max - gamma < alpha_n {
            gamma = c_max - alpha_n;
            drop = None;
            finished = true;
        }
        for (t, &j) in active.iter().enumerate() {
            beta[j] += gamma * d[t];
        }
        steps += 1;
        if finished {
            break;
        }
        match drop {
            Some(t) => {
                beta[active[t]] = 0.0;
                active.remove(t);
                add_next = false;
            }
            None => add_next = true,
        }
    }
    (beta.iter().copied().collect(), steps)
}
