use num_complex::Complex64;
use rayon::prelude::*;

use super::fiber::StackSpace;
use super::ipow;
use super::kernel::ChaosKernel;
use super::ops::{aminus_block, aplus_block, LazyAplus};
use crate::{Error, ModelParams, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Restarted GMRES settings.
#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-8,
            restart: 40,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual estimated from the Arnoldi recurrence.
    pub residual: f64,
    pub converged: bool,
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
}

/// Restarted GMRES for `A x = b` in the inner product `dot`.
pub fn gmres<A, Dt>(apply: A, dot: Dt, b: &[Complex64], x0: Option<&[Complex64]>, cfg: &GmresConfig) -> GmresOutcome
where
    A: Fn(&[Complex64]) -> Vec<Complex64>,
    Dt: Fn(&[Complex64], &[Complex64]) -> Complex64,
{
    let n = b.len();
    let norm = |v: &[Complex64]| dot(v, v).re.max(0.0).sqrt();
    let bnorm = norm(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![ZERO; n]);
    if bnorm == 0.0 {
        return GmresOutcome {
            x: vec![ZERO; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let m = cfg.restart.max(1);
    let mut iters = 0;
    let mut rel;
    loop {
        let ax = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= cfg.tol || iters >= cfg.max_iter {
            break;
        }
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = apply(&v[j]);
            iters += 1;
            for i in 0..=j {
                let hij = dot(&v[i], &w);
                h[i][j] = hij;
                axpy(&mut w, -hij, &v[i]);
            }
            let hn = norm(&w);
            h[j + 1][j] = Complex64::new(hn, 0.0);
            for i in 0..j {
                let a = h[i][j];
                let bb = h[i + 1][j];
                h[i][j] = a * cs[i] + sn[i] * bb;
                h[i + 1][j] = -sn[i].conj() * a + bb * cs[i];
            }
            let a = h[j][j];
            let bb = h[j + 1][j];
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = Complex64::new(1.0, 0.0);
            } else {
                let ph = a / a.norm();
                cs[j] = a.norm() / den;
                sn[j] = ph * bb.conj() / den;
            }
            h[j][j] = a * cs[j] + sn[j] * bb;
            h[j + 1][j] = ZERO;
            let gj = g[j];
            g[j] = gj * cs[j];
            g[j + 1] = -sn[j].conj() * gj;
            used = j + 1;
            rel = g[j + 1].norm() / bnorm;
            if rel <= cfg.tol || iters >= cfg.max_iter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut x, *yi, &v[i]);
        }
        if iters >= cfg.max_iter {
            let ax = apply(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = norm(&r) / bnorm;
            break;
        }
    }
    GmresOutcome {
        x,
        iterations: iters,
        residual: rel,
        converged: rel <= cfg.tol,
    }
}

/// Solution of the truncated resolvent equation, one kernel per degree.
#[derive(Debug, Clone)]
pub struct ResolventSolution<const D: usize> {
    pub components: Vec<ChaosKernel<D>>,
    pub iterations: usize,
    /// ‖−𝔏ᴺ v − rhs‖/‖rhs‖ of the solved system.
    pub residual: f64,
}

impl<const D: usize> ResolventSolution<D> {
    pub fn component(&self, degree: usize) -> Option<&ChaosKernel<D>> {
        self.components.iter().find(|k| k.degree() == degree)
    }
}

/// P_{lo,hi}(𝒜ᴺ₊ + 𝒜ᴺ₋) on dense stack vectors, plus optionally −𝒜ᴺ₋(−𝔏₀)⁻¹𝒜ᴺ₊
/// on the top degree when the next degree has been eliminated.
fn apply_stack<const D: usize>(
    space: &StackSpace<D>,
    p: &ModelParams,
    ball: &[[i32; D]],
    v: &[Complex64],
    eliminated_top: bool,
) -> Vec<Complex64> {
    let comps = space.from_dense(v);
    let mut out = vec![ZERO; space.dim()];
    for m in space.lo()..=space.hi() {
        let seg = space.segment(m);
        let bs = ipow(D, m);
        let keys = space.keys(m);
        let below = (m > space.lo()).then(|| &comps[m - 1 - space.lo()]);
        let above = (m < space.hi()).then(|| &comps[m + 1 - space.lo()]);
        let lazy = (eliminated_top && m == space.hi()).then(|| LazyAplus::new(&comps[m - space.lo()], p, -1.0));
        out[seg].par_chunks_mut(bs).zip(keys.par_iter()).for_each(|(o, k)| {
            let mut tmp = vec![ZERO; bs];
            if let Some(f) = below {
                if aplus_block(f, k, p, &mut tmp) {
                    o.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
                }
            }
            if let Some(f) = above {
                if aminus_block(f, k, p, ball, &mut tmp) {
                    o.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
                }
            }
            if let Some(src) = &lazy {
                // eliminated block enters as −𝒜₋ S⁻¹ 𝒜₊ and the stack applies S − A
                if aminus_block(src, k, p, ball, &mut tmp) {
                    o.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
                }
            }
        });
    }
    out
}

fn solve_stack<const D: usize>(
    space: &StackSpace<D>,
    p: &ModelParams,
    rhs: &[Complex64],
    eliminated_top: bool,
    cfg: &GmresConfig,
) -> Result<(Vec<Complex64>, usize, f64)> {
    let ball = p.ball_points::<D>();
    let n = space.dim();
    let sq: Vec<f64> = (0..n).map(|i| space.l0_entry(i).sqrt()).collect();
    let b: Vec<Complex64> = rhs.iter().zip(&sq).map(|(z, s)| z / s).collect();
    // (I − S^{-1/2} A S^{-1/2}) w = S^{-1/2} rhs
    let op = |w: &[Complex64]| {
        let v: Vec<Complex64> = w.iter().zip(&sq).map(|(z, s)| z / s).collect();
        let av = apply_stack(space, p, &ball, &v, eliminated_top);
        w.iter()
            .zip(av.iter().zip(&sq))
            .map(|(wi, (ai, s))| wi - ai / s)
            .collect::<Vec<_>>()
    };
    let dot = |x: &[Complex64], y: &[Complex64]| space.dot(x, y);
    let rnorm = space.norm(rhs);
    let mut inner = *cfg;
    inner.tol = cfg.tol / 10.0;
    let mut x0: Option<Vec<Complex64>> = None;
    let mut iterations = 0;
    loop {
        let out = gmres(op, dot, &b, x0.as_deref(), &inner);
        iterations += out.iterations;
        let v: Vec<Complex64> = out.x.iter().zip(&sq).map(|(z, s)| z / s).collect();
        let av = apply_stack(space, p, &ball, &v, eliminated_top);
        let res: Vec<Complex64> = (0..n)
            .map(|i| v[i] * space.l0_entry(i) - av[i] - rhs[i])
            .collect();
        let rel = if rnorm == 0.0 { 0.0 } else { space.norm(&res) / rnorm };
        if rel <= cfg.tol {
            return Ok((v, iterations, rel));
        }
        if iterations >= cfg.max_iter || inner.tol < 1e-15 {
            return Err(Error::NoConvergence {
                iterations,
                residual: rel,
            });
        }
        inner.tol /= 10.0;
        inner.max_iter = cfg.max_iter - iterations;
        x0 = Some(out.x);
    }
}

fn fiber_total<const D: usize>(rhs: &[&ChaosKernel<D>]) -> Result<[i32; D]> {
    rhs.iter()
        .find_map(|k| k.total())
        .ok_or_else(|| Error::InvalidParam("right-hand side must declare its total momentum".into()))
}

/// Solves −(𝔏₀ + 𝒜ᴺ_{lo,hi}) v = rhs on ⊕_{j=lo}^{hi} ΓL²ⱼ over the fiber of `rhs`.
///
/// The system is preconditioned symmetrically by (−𝔏₀)^{½}, which turns it into
/// identity minus a skew-adjoint operator, and solved with restarted GMRES.
pub fn resolvent_solve<const D: usize>(
    rhs: &[&ChaosKernel<D>],
    p: &ModelParams,
    lo: usize,
    hi: usize,
    cfg: &GmresConfig,
) -> Result<ResolventSolution<D>> {
    if rhs.iter().any(|k| k.degree() < lo || k.degree() > hi) {
        return Err(Error::InvalidParam(format!("right-hand side degrees must lie in {lo}..={hi}")));
    }
    let total = fiber_total(rhs)?;
    let space = StackSpace::new(p, lo, hi, total);
    let b = space.to_dense(rhs);
    let (v, iterations, residual) = solve_stack(&space, p, &b, false, cfg)?;
    Ok(ResolventSolution {
        components: space.from_dense(&v),
        iterations,
        residual,
    })
}

/// Solves the same system as [`resolvent_solve`] with degrees `lo..=hi` after
/// eliminating degree `hi` exactly (its diagonal block is −𝔏₀), so only degrees
/// `lo..hi` are stored. Returns the solution on those degrees.
///
/// Requires `hi > lo` and `rhs` supported below `hi`.
pub fn resolvent_solve_schur<const D: usize>(
    rhs: &[&ChaosKernel<D>],
    p: &ModelParams,
    lo: usize,
    hi: usize,
    cfg: &GmresConfig,
) -> Result<ResolventSolution<D>> {
    if hi <= lo {
        return Err(Error::InvalidParam("top-degree elimination needs hi > lo".into()));
    }
    if rhs.iter().any(|k| k.degree() < lo || k.degree() >= hi) {
        return Err(Error::InvalidParam(format!("right-hand side degrees must lie in {lo}..{hi}")));
    }
    let total = fiber_total(rhs)?;
    let space = StackSpace::new(p, lo, hi - 1, total);
    let b = space.to_dense(rhs);
    let (v, iterations, residual) = solve_stack(&space, p, &b, true, cfg)?;
    Ok(ResolventSolution {
        components: space.from_dense(&v),
        iterations,
        residual,
    })
}
