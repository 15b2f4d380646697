//! Matrix exponentials: dense scaling-and-squaring with a degree-13 Padé
//! approximant, and the Krylov (Arnoldi) action `exp(tA) v` for sparse `A`.

use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

type C = Complex64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn norm_one(a: &Array2<C>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense `exp(A)`.
pub fn expm(a: &Array2<C>) -> Result<Array2<C>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm_one(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|v| v / 2f64.powi(s));
    let ident = Array2::<C>::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = |k: usize| C::new(PADE13[k], 0.0);

    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = a.dot(&(a6.dot(&inner_u) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &ident * b(1)));
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&inner_v) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &ident * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.inv()?.dot(&p);
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Tuning of [`expmv`].
#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    pub subspace: usize,
    /// Error tolerance per unit time, relative to the vector norm.
    pub tol: f64,
    pub max_rejections: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            subspace: 30,
            tol: 1e-12,
            max_rejections: 20,
        }
    }
}

fn round2(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() - 1.0;
    let p = 10f64.powf(e);
    (x / p).ceil() * p
}

fn vnorm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(t A) v` by adaptive Arnoldi steps with the local error estimate of
/// the augmented Krylov matrix.
pub fn expmv(a: &CsrMatrix, t: f64, v: &[C], opts: KrylovOptions) -> Result<Vec<C>> {
    let n = v.len();
    if t < 0.0 {
        return Err(Error::InvalidArgument("evolution time must be non-negative".into()));
    }
    if t == 0.0 || n == 0 {
        return Ok(v.to_vec());
    }
    let mut w = v.to_vec();
    let mut beta = vnorm(&w);
    if beta == 0.0 {
        return Ok(w);
    }
    let anorm = a.norm_one().max(f64::MIN_POSITIVE);
    let m = opts.subspace.min(n);
    let tol = opts.tol;
    let (gamma, delta) = (0.9, 1.2);
    let xm = 1.0 / m as f64;
    let mp1 = (m + 1) as f64;
    let fact = (mp1 / std::f64::consts::E).powf(mp1) * (2.0 * std::f64::consts::PI * mp1).sqrt();
    let mut t_new = round2((1.0 / anorm) * ((fact * tol) / (4.0 * beta * anorm)).powf(xm));
    let mut t_now = 0.0;

    while t_now < t {
        let mut t_step = (t - t_now).min(t_new);
        let mut basis: Vec<Vec<C>> = Vec::with_capacity(m + 1);
        let mut h = Array2::<C>::zeros((m + 2, m + 2));
        basis.push(w.iter().map(|x| x / beta).collect());
        let mut k1 = 2usize;
        let mut mb = m;
        for j in 0..m {
            let mut p = a.matvec(&basis[j]);
            for (i, q) in basis.iter().enumerate() {
                let hij: C = q.iter().zip(&p).map(|(x, y)| x.conj() * y).sum();
                h[[i, j]] = hij;
                p.iter_mut().zip(q).for_each(|(y, x)| *y -= hij * x);
            }
            let s = vnorm(&p);
            if s < 1e-12 * anorm {
                // happy breakdown: the Krylov space is invariant
                k1 = 0;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            h[[j + 1, j]] = C::new(s, 0.0);
            basis.push(p.iter().map(|x| x / s).collect());
        }
        let mut avnorm = 0.0;
        if k1 != 0 {
            h[[m + 1, m]] = C::new(1.0, 0.0);
            avnorm = vnorm(&a.matvec(&basis[m]));
        }

        let mut rejections = 0;
        let (f, err_loc) = loop {
            let mx = mb + k1;
            let sub = h.slice(ndarray::s![..mx, ..mx]).mapv(|x| x * t_step);
            let f = expm(&sub)?;
            if k1 == 0 {
                break (f, 0.0);
            }
            let phi1 = (beta * f[[m, 0]]).norm();
            let phi2 = (beta * f[[m + 1, 0]] * avnorm).norm();
            let err = if phi1 > 10.0 * phi2 {
                phi2
            } else if phi1 > phi2 {
                phi1 * phi2 / (phi1 - phi2)
            } else {
                phi1
            };
            if err <= delta * t_step * tol * beta {
                break (f, err);
            }
            t_step = gamma * t_step * (t_step * tol * beta / err).powf(xm);
            t_step = round2(t_step);
            rejections += 1;
            if rejections > opts.max_rejections || t_step < 1e-14 * t {
                return Err(Error::StepUnderflow { t: t_now });
            }
        };

        let mx = mb + if k1 > 0 { k1 - 1 } else { 0 };
        let coeffs: Array1<C> = f.column(0).slice(ndarray::s![..mx]).to_owned();
        w = vec![C::new(0.0, 0.0); n];
        for (c, q) in coeffs.iter().zip(&basis) {
            let s = c * beta;
            w.iter_mut().zip(q).for_each(|(y, x)| *y += s * x);
        }
        beta = vnorm(&w);
        t_now += t_step;
        if beta == 0.0 {
            break;
        }
        let err_ratio = if err_loc > 0.0 { t_step * tol * beta / err_loc } else { 1e6 };
        t_new = round2(gamma * t_step * err_ratio.powf(xm));
        if !(t_new > 0.0) || !t_new.is_finite() {
            t_new = t_step;
        }
    }
    Ok(w)
}
