//! Linear Kalman filter and unscented Kalman filter steps.
//!
//! Every step is a pure function of a [`GaussianBelief`]; nothing here knows
//! about hydraulics. Returned covariances are symmetrised.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// State mean and error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief<T: Scalar> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

impl<T: Scalar> GaussianBelief<T> {
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::Dimension(format!(
                "covariance {}x{} for a state of length {}",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            )));
        }
        Ok(GaussianBelief { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Which constant enters the zeroth covariance weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceWeightForm {
    /// `λ/(n+λ) + (1 − α² + β²)`
    #[default]
    BetaSquared,
    /// `λ/(n+λ) + (1 − α² + β)`, the usual scaled-UT form.
    Beta,
}

/// Scaled unscented-transform weights for a state of dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtWeights<T: Scalar> {
    pub alpha: T,
    pub beta: T,
    pub lambda: T,
    pub eta: T,
    pub mean: DVector<T>,
    pub cov: DVector<T>,
}

impl<T: Scalar> UtWeights<T> {
    pub fn state_dim(&self) -> usize {
        (self.mean.len() - 1) / 2
    }
}

pub fn ut_weights<T: Scalar>(n: usize, alpha: T, beta: T) -> Result<UtWeights<T>> {
    ut_weights_with(n, alpha, beta, CovarianceWeightForm::BetaSquared)
}

pub fn ut_weights_with<T: Scalar>(
    n: usize,
    alpha: T,
    beta: T,
    form: CovarianceWeightForm,
) -> Result<UtWeights<T>> {
    if n == 0 {
        return Err(Error::Dimension("unscented transform of an empty state".into()));
    }
    if alpha == T::zero() {
        return Err(Error::InvalidScaling(0.0));
    }
    let nf = lit::<T>(n as f64);
    let lambda = nf * (alpha * alpha - T::one());
    let spread = nf + lambda;
    if !(spread > T::zero()) {
        return Err(Error::InvalidScaling(to_f64(spread)));
    }
    let w0 = lambda / spread;
    let wi = T::one() / (lit::<T>(2.0) * spread);
    let extra = match form {
        CovarianceWeightForm::BetaSquared => beta * beta,
        CovarianceWeightForm::Beta => beta,
    };
    let mut mean = DVector::from_element(2 * n + 1, wi);
    let mut cov = mean.clone();
    mean[0] = w0;
    cov[0] = w0 + (T::one() - alpha * alpha + extra);
    Ok(UtWeights {
        alpha,
        beta,
        lambda,
        eta: spread.sqrt(),
        mean,
        cov,
    })
}

/// Escalating diagonal jitter used when a covariance fails to factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub start: f64,
    pub factor: f64,
    pub max: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy {
            start: 1e-12,
            factor: 10.0,
            max: 1e-6,
        }
    }
}

/// Cholesky factor of a positive semidefinite matrix. Zero pivots produce
/// zero columns; a negative pivot beyond roundoff returns `Err(pivot)`.
fn semidefinite_cholesky<T: Scalar>(p: &DMatrix<T>, scale: T) -> std::result::Result<DMatrix<T>, T> {
    let n = p.nrows();
    let tol = lit::<T>(8.0 * (n.max(1) as f64)) * T::default_epsilon() * scale;
    let off_tol = (tol * scale).sqrt();
    let mut l = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut v: DVector<T> = p.view((j, j), (n - j, 1)).column(0).into_owned();
        if j > 0 {
            let row = l.row(j).columns(0, j).transpose();
            v.gemv(-T::one(), &l.view((j, 0), (n - j, j)), &row, T::one());
        }
        let d = v[0];
        if d > tol {
            let s = d.sqrt();
            l[(j, j)] = s;
            for i in 1..n - j {
                l[(j + i, j)] = v[i] / s;
            }
        } else if d >= -tol {
            if n - j > 1 && v.rows(1, n - j - 1).amax() > off_tol {
                return Err(d);
            }
        } else {
            return Err(d);
        }
    }
    Ok(l)
}

/// Lower-triangular square root `S` with `S Sᵀ = P + jitter·I`, plus the
/// jitter that was needed (relative to the largest diagonal entry).
pub fn psd_sqrt<T: Scalar>(p: &DMatrix<T>, policy: &JitterPolicy) -> Result<(DMatrix<T>, T)> {
    if p.nrows() != p.ncols() {
        return Err(Error::Dimension("square root of a non-square matrix".into()));
    }
    let scale = p.diagonal().amax().max(T::min_value().unwrap_or(T::default_epsilon()));
    let mut last = match semidefinite_cholesky(p, scale) {
        Ok(l) => return Ok((l, T::zero())),
        Err(pivot) => pivot,
    };
    let mut level = policy.start;
    while level <= policy.max * (1.0 + 1e-9) {
        let jitter = lit::<T>(level) * scale;
        let mut shifted = p.clone();
        for i in 0..p.nrows() {
            shifted[(i, i)] += jitter;
        }
        match semidefinite_cholesky(&shifted, scale) {
            Ok(l) => return Ok((l, jitter)),
            Err(pivot) => last = pivot,
        }
        level *= policy.factor;
    }
    Err(Error::NotPsd {
        pivot: to_f64(last),
        jitter: policy.max * to_f64(scale),
    })
}

/// `P ← (P + Pᵀ)/2`
pub fn symmetrize<T: Scalar>(p: &mut DMatrix<T>) {
    let half = lit::<T>(0.5);
    let n = p.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = (p[(i, j)] + p[(j, i)]) * half;
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
}

/// Sigma points as columns: `[x̂, x̂ + η√P, x̂ − η√P]`.
pub fn sigma_points<T: Scalar>(belief: &GaussianBelief<T>, eta: T) -> Result<DMatrix<T>> {
    sigma_points_with(belief, eta, &JitterPolicy::default())
}

pub fn sigma_points_with<T: Scalar>(
    belief: &GaussianBelief<T>,
    eta: T,
    policy: &JitterPolicy,
) -> Result<DMatrix<T>> {
    let n = belief.dim();
    let (root, _) = psd_sqrt(&belief.cov, policy)?;
    let mut points = DMatrix::zeros(n, 2 * n + 1);
    points.set_column(0, &belief.mean);
    for j in 0..n {
        let offset = root.column(j) * eta;
        points.set_column(1 + j, &(&belief.mean + &offset));
        points.set_column(1 + n + j, &(&belief.mean - &offset));
    }
    Ok(points)
}

/// `x̂₋ = F x̂`, `P₋ = F P Fᵀ + Q`.
pub fn kf_predict<T: Scalar>(
    belief: &GaussianBelief<T>,
    f: &DMatrix<T>,
    q: &DMatrix<T>,
) -> Result<GaussianBelief<T>> {
    let n = belief.dim();
    if f.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "predict: F {:?}, Q {:?} for state {n}",
            f.shape(),
            q.shape()
        )));
    }
    let mean = f * &belief.mean;
    let mut cov = f * &belief.cov * f.transpose() + q;
    symmetrize(&mut cov);
    Ok(GaussianBelief { mean, cov })
}

/// Solves `S X = B` for a symmetric innovation covariance `S`: Cholesky when
/// it is positive definite, LU otherwise.
fn solve_innovation<T: Scalar>(s: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    if let Some(chol) = s.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let diag = s.diagonal();
    let condition = to_f64(diag.amax()) / to_f64(diag.amin()).max(f64::MIN_POSITIVE);
    s.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularInnovation { condition })
}

/// Linear measurement update with gain `K = P₋Gᵀ(GP₋Gᵀ + R)⁻¹`.
pub fn kf_update<T: Scalar>(
    belief: &GaussianBelief<T>,
    g: &DMatrix<T>,
    r: &DMatrix<T>,
    z: &DVector<T>,
) -> Result<GaussianBelief<T>> {
    let n = belief.dim();
    let m = z.len();
    if g.shape() != (m, n) || r.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "update: G {:?}, R {:?}, z {m}, state {n}",
            g.shape(),
            r.shape()
        )));
    }
    let gp = g * &belief.cov;
    let innovation_cov = &gp * g.transpose() + r;
    let gain_t = solve_innovation(&innovation_cov, &gp)?;
    let gain = gain_t.transpose();
    let mean = &belief.mean + &gain * (z - g * &belief.mean);
    let mut cov = &belief.cov - &gain * gp;
    symmetrize(&mut cov);
    Ok(GaussianBelief { mean, cov })
}

/// Propagates sigma points through `f` and recombines them.
pub fn ukf_predict<T: Scalar, F>(
    belief: &GaussianBelief<T>,
    f: F,
    q: &DMatrix<T>,
    weights: &UtWeights<T>,
) -> Result<GaussianBelief<T>>
where
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let n = belief.dim();
    check_weights(weights, n)?;
    if q.shape() != (n, n) {
        return Err(Error::Dimension(format!("predict: Q {:?} for state {n}", q.shape())));
    }
    let points = sigma_points(belief, weights.eta)?;
    let propagated = map_columns(&points, &f);
    let mean = &propagated * &weights.mean;
    let dev = deviations(&propagated, &mean);
    let mut cov = weighted_outer(&dev, &dev, &weights.cov) + q;
    symmetrize(&mut cov);
    Ok(GaussianBelief { mean, cov })
}

/// Unscented measurement statistics of a predicted belief.
#[derive(Debug, Clone)]
pub struct MeasurementStats<T: Scalar> {
    pub predicted: DVector<T>,
    /// Innovation covariance, including `R`.
    pub p_yy: DMatrix<T>,
    pub p_xy: DMatrix<T>,
}

/// Regenerates sigma points from the predicted belief and pushes them
/// through the measurement function.
pub fn ukf_measurement_stats<T: Scalar, G>(
    predicted: &GaussianBelief<T>,
    g: G,
    r: &DMatrix<T>,
    weights: &UtWeights<T>,
) -> Result<MeasurementStats<T>>
where
    G: Fn(&DVector<T>) -> DVector<T>,
{
    let n = predicted.dim();
    check_weights(weights, n)?;
    let points = sigma_points(predicted, weights.eta)?;
    let images = map_columns(&points, &g);
    if r.shape() != (images.nrows(), images.nrows()) {
        return Err(Error::Dimension(format!(
            "update: R {:?} for {} measurements",
            r.shape(),
            images.nrows()
        )));
    }
    let y_hat = &images * &weights.mean;
    let y_dev = deviations(&images, &y_hat);
    let x_dev = deviations(&points, &predicted.mean);
    let mut p_yy = weighted_outer(&y_dev, &y_dev, &weights.cov) + r;
    symmetrize(&mut p_yy);
    let p_xy = weighted_outer(&x_dev, &y_dev, &weights.cov);
    Ok(MeasurementStats {
        predicted: y_hat,
        p_yy,
        p_xy,
    })
}

/// Gain `K = P_xy P_yy⁻¹`, mean and covariance correction.
pub fn ukf_correct<T: Scalar>(
    predicted: &GaussianBelief<T>,
    stats: &MeasurementStats<T>,
    z: &DVector<T>,
) -> Result<GaussianBelief<T>> {
    if z.len() != stats.predicted.len() {
        return Err(Error::Dimension(format!(
            "measurement vector of length {} for {} predicted measurements",
            z.len(),
            stats.predicted.len()
        )));
    }
    let gain = solve_innovation(&stats.p_yy, &stats.p_xy.transpose())?.transpose();
    let mean = &predicted.mean + &gain * (z - &stats.predicted);
    let mut cov = &predicted.cov - &gain * stats.p_xy.transpose();
    symmetrize(&mut cov);
    Ok(GaussianBelief { mean, cov })
}

pub fn ukf_update<T: Scalar, G>(
    predicted: &GaussianBelief<T>,
    g: G,
    r: &DMatrix<T>,
    z: &DVector<T>,
    weights: &UtWeights<T>,
) -> Result<GaussianBelief<T>>
where
    G: Fn(&DVector<T>) -> DVector<T>,
{
    let stats = ukf_measurement_stats(predicted, g, r, weights)?;
    ukf_correct(predicted, &stats, z)
}

fn check_weights<T: Scalar>(weights: &UtWeights<T>, n: usize) -> Result<()> {
    if weights.mean.len() != 2 * n + 1 {
        return Err(Error::Dimension(format!(
            "weights for state {} used on state {n}",
            weights.state_dim()
        )));
    }
    Ok(())
}

fn map_columns<T: Scalar, F>(points: &DMatrix<T>, f: &F) -> DMatrix<T>
where
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let columns: Vec<DVector<T>> = points.column_iter().map(|c| f(&c.into_owned())).collect();
    DMatrix::from_columns(&columns)
}

fn deviations<T: Scalar>(points: &DMatrix<T>, center: &DVector<T>) -> DMatrix<T> {
    let mut dev = points.clone();
    for mut c in dev.column_iter_mut() {
        c -= center;
    }
    dev
}

/// `Σ wᵢ aᵢ bᵢᵀ` over matching columns.
fn weighted_outer<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, w: &DVector<T>) -> DMatrix<T> {
    let mut scaled = a.clone();
    for (mut c, &wi) in scaled.column_iter_mut().zip(w.iter()) {
        c *= wi;
    }
    scaled * b.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dm(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn random_spd(seed: &[f64], n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_row_slice(n, n, &seed[..n * n]);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn weight_examples() {
        let w = ut_weights::<f64>(2, 1.0, 2.0).unwrap();
        assert_eq!(w.lambda, 0.0);
        assert_eq!(w.mean[0], 0.0);
        assert_eq!(w.cov[0], 4.0);
        for i in 1..5 {
            assert_eq!(w.mean[i], 0.25);
            assert_eq!(w.cov[i], 0.25);
        }
        let conventional = ut_weights_with::<f64>(2, 1.0, 2.0, CovarianceWeightForm::Beta).unwrap();
        assert_eq!(conventional.cov[0], 2.0);

        // n = 657, α = 1e-3, values from direct evaluation in python
        let w = ut_weights::<f64>(657, 1e-3, 2.0).unwrap();
        assert_relative_eq!(w.lambda, -656.999343, max_relative = 1e-12);
        assert_relative_eq!(w.mean[0], -999998.9999291674, max_relative = 1e-9);
        assert_relative_eq!(w.mean[1], 761.0350075564439, max_relative = 1e-9);
        assert_relative_eq!(w.mean.sum(), 1.0, epsilon = 1e-6);

        assert!(matches!(ut_weights::<f64>(3, 0.0, 2.0), Err(Error::InvalidScaling(_))));
        assert!(ut_weights::<f64>(0, 1.0, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn mean_weights_sum_to_one(n in 1usize..200, alpha in 0.01f64..2.0) {
            let w = ut_weights::<f64>(n, alpha, 2.0).unwrap();
            prop_assert!((w.mean.sum() - 1.0).abs() < 1e-9 * (1.0 + w.mean[0].abs()));
            prop_assert!((w.eta * w.eta - (n as f64 + w.lambda)).abs() < 1e-9);
        }

        #[test]
        fn sigma_points_reconstruct_moments(seed in prop::collection::vec(-1.0f64..1.0, 30), alpha in 0.001f64..1.5) {
            let n = 5;
            let p = random_spd(&seed, n);
            let x = DVector::from_row_slice(&seed[25..30]);
            let w = ut_weights::<f64>(n, alpha, 2.0).unwrap();
            let b = GaussianBelief::new(x.clone(), p.clone()).unwrap();
            let pts = sigma_points(&b, w.eta).unwrap();
            let mean = &pts * &w.mean;
            let dev = deviations(&pts, &x);
            let cov = weighted_outer(&dev, &dev, &w.cov);
            prop_assert!((mean - &x).amax() < 1e-10 * (1.0 + w.mean[0].abs()));
            prop_assert!((cov - &p).amax() < 1e-10);
        }
    }

    #[test]
    fn sigma_point_examples() {
        let b = GaussianBelief::new(dv(&[2.0]), dm(1, 1, &[4.0])).unwrap();
        let w = ut_weights::<f64>(1, 1.0, 2.0).unwrap();
        assert_eq!(w.eta, 1.0);
        let pts = sigma_points(&b, w.eta).unwrap();
        assert_eq!(pts, dm(1, 3, &[2.0, 4.0, 0.0]));

        let b = GaussianBelief::new(dv(&[1.0, -3.0, 0.5]), DMatrix::zeros(3, 3)).unwrap();
        let pts = sigma_points(&b, 0.7).unwrap();
        for c in pts.column_iter() {
            assert_eq!(c, b.mean);
        }
    }

    #[test]
    fn psd_sqrt_handles_rank_deficiency_and_rejects_indefinite() {
        let v = dv(&[1.0, 2.0, -1.0]);
        let p = &v * v.transpose();
        let (l, jitter) = psd_sqrt(&p, &JitterPolicy::default()).unwrap();
        assert_eq!(jitter, 0.0);
        assert!((&l * l.transpose() - &p).amax() < 1e-12);

        let bad = dm(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(psd_sqrt(&bad, &JitterPolicy::default()), Err(Error::NotPsd { .. })));

        let slightly = dm(2, 2, &[1.0, 1.0, 1.0, 1.0 - 1e-10]);
        let (l, jitter) = psd_sqrt(&slightly, &JitterPolicy::default()).unwrap();
        assert!(jitter > 0.0 && jitter <= 1e-6);
        assert!((&l * l.transpose() - &slightly).amax() < 1e-5);
    }

    #[test]
    fn kf_predict_examples() {
        let b = GaussianBelief::new(dv(&[1.0, 2.0]), dm(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let same = kf_predict(&b, &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(same, b);

        let unit = GaussianBelief::new(dv(&[1.0, 2.0]), DMatrix::identity(2, 2)).unwrap();
        let doubled = kf_predict(&unit, &(DMatrix::identity(2, 2) * 2.0), &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(doubled.cov, DMatrix::identity(2, 2) * 4.0);
        assert_eq!(doubled.mean, dv(&[2.0, 4.0]));
    }

    #[test]
    fn kf_update_examples() {
        let b = GaussianBelief::new(dv(&[1.0, 2.0]), dm(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let z = dv(&[3.0, -1.0]);
        let exact = kf_update(&b, &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2), &z).unwrap();
        assert!((exact.mean - &z).amax() < 1e-12);
        assert!(exact.cov.amax() < 1e-12);

        let vague = kf_update(&b, &DMatrix::identity(2, 2), &(DMatrix::identity(2, 2) * 1e12), &z).unwrap();
        assert!((vague.mean - &b.mean).amax() < 1e-9);

        // hand algebra: K = 1/(1+1) = 0.5
        let s = GaussianBelief::new(dv(&[0.0]), dm(1, 1, &[1.0])).unwrap();
        let u = kf_update(&s, &dm(1, 1, &[1.0]), &dm(1, 1, &[1.0]), &dv(&[2.0])).unwrap();
        assert_relative_eq!(u.mean[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(u.cov[(0, 0)], 0.5, epsilon = 1e-15);

        let singular = GaussianBelief::new(dv(&[0.0]), dm(1, 1, &[0.0])).unwrap();
        assert!(matches!(
            kf_update(&singular, &dm(1, 1, &[1.0]), &dm(1, 1, &[0.0]), &dv(&[1.0])),
            Err(Error::SingularInnovation { .. })
        ));
    }

    #[test]
    fn ukf_predict_examples() {
        let b = GaussianBelief::new(dv(&[1.0, 2.0]), dm(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let w = ut_weights::<f64>(2, 1e-3, 2.0).unwrap();
        let same = ukf_predict(&b, |x| x.clone(), &DMatrix::zeros(2, 2), &w).unwrap();
        assert!((same.mean - &b.mean).amax() < 1e-9);
        assert!((same.cov - &b.cov).amax() < 1e-9);

        // f(x) = x², x̂ = 0, P = 1, α = 1: points {0, 1, -1}, weights {0, ½, ½}
        let s = GaussianBelief::new(dv(&[0.0]), dm(1, 1, &[1.0])).unwrap();
        let w = ut_weights::<f64>(1, 1.0, 2.0).unwrap();
        let sq = ukf_predict(&s, |x| x.map(|v| v * v), &dm(1, 1, &[0.0]), &w).unwrap();
        assert_relative_eq!(sq.mean[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ukf_update_examples() {
        let b = GaussianBelief::new(dv(&[1.0, 2.0]), dm(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let w = ut_weights::<f64>(2, 0.5, 2.0).unwrap();
        let g = dm(2, 2, &[1.0, 1.0, 0.0, 2.0]);
        let r = dm(2, 2, &[0.3, 0.0, 0.0, 0.2]);

        // zero innovation leaves the mean
        let y = &g * &b.mean;
        let u = ukf_update(&b, |x| &g * x, &r, &y, &w).unwrap();
        assert!((u.mean - &b.mean).amax() < 1e-12);

        let vague = ukf_update(&b, |x| &g * x, &(r.clone() * 1e12), &dv(&[10.0, 10.0]), &w).unwrap();
        assert!((vague.mean - &b.mean).amax() < 1e-9);

        let z = dv(&[0.0, 1.0]);
        let ukf = ukf_update(&b, |x| &g * x, &r, &z, &w).unwrap();
        let kf = kf_update(&b, &g, &r, &z).unwrap();
        assert!((ukf.mean - kf.mean).amax() < 1e-8);
        assert!((ukf.cov - kf.cov).amax() < 1e-8);
    }

    #[test]
    fn generic_over_f32() {
        let b = GaussianBelief::<f32>::new(DVector::from_element(2, 1.0), DMatrix::identity(2, 2)).unwrap();
        let w = ut_weights::<f32>(2, 1.0, 2.0).unwrap();
        let p = ukf_predict(&b, |x| x * 2.0f32, &DMatrix::zeros(2, 2), &w).unwrap();
        assert!((p.cov - DMatrix::identity(2, 2) * 4.0f32).amax() < 1e-5);
    }
}
