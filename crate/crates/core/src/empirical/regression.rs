//! Maximum-likelihood logistic regression (IRLS) and ordinary least squares.

use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const LOGISTIC_MAX_ITERATIONS: usize = 100;
pub const LOGISTIC_STEP_TOLERANCE: f64 = 1e-10;
/// Coefficients beyond this magnitude are taken as a sign of separation.
pub const SEPARATION_LIMIT: f64 = 30.0;
const RANK_TOLERANCE: f64 = 1e-10;

/// Design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    names: Vec<String>,
    x: DMatrix<f64>,
}

impl Design {
    pub fn new(names: Vec<String>, x: DMatrix<f64>) -> Result<Self> {
        if names.len() != x.ncols() {
            return Err(Error::ParameterDomain(format!(
                "{} column names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterDomain(
                "design matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { names, x })
    }

    /// Builds a design from rows of predictor values.
    pub fn from_rows(names: &[&str], rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::ParameterDomain(
                "design rows have the wrong length".into(),
            ));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(names.iter().map(|s| s.to_string()).collect(), x)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_coef(&self) -> usize {
        self.x.ncols()
    }

    fn check_shape(&self, n_y: usize) -> Result<()> {
        if n_y != self.n_obs() {
            return Err(Error::ParameterDomain(format!(
                "{} responses for {} design rows",
                n_y,
                self.n_obs()
            )));
        }
        if self.n_coef() == 0 {
            return Err(Error::InsufficientDesign("design has no columns".into()));
        }
        if self.n_obs() <= self.n_coef() {
            return Err(Error::InsufficientDesign(format!(
                "{} observations for {} coefficients",
                self.n_obs(),
                self.n_coef()
            )));
        }
        Ok(())
    }

    fn check_rank(&self) -> Result<()> {
        let r = self.x.clone().qr().r();
        let diag: Vec<f64> = r.diagonal().iter().map(|d| d.abs()).collect();
        let top = diag.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 || diag.iter().any(|&d| d <= RANK_TOLERANCE * top) {
            return Err(Error::Collinearity);
        }
        Ok(())
    }
}

/// Values keyed by coefficient name; serializes as an ordered JSON object.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl NamedVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(names.len(), values.len());
        Self { names, values }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.values[k])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }
}

impl std::ops::Index<&str> for NamedVector {
    type Output = f64;

    fn index(&self, name: &str) -> &f64 {
        let k = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no coefficient named {name}"));
        &self.values[k]
    }
}

impl Serialize for NamedVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.names.len()))?;
        for (k, v) in self.iter() {
            map.serialize_entry(k, &v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    /// Wald z with a standard normal reference.
    Z,
    /// t with `n - p` degrees of freedom.
    T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub coefficients: NamedVector,
    pub std_errors: NamedVector,
    pub wald_stats: NamedVector,
    pub p_values: NamedVector,
    pub statistic: StatisticKind,
    pub n_obs: usize,
    /// Residual degrees of freedom for OLS.
    pub df: Option<usize>,
    pub converged: bool,
    pub iterations: usize,
    #[serde(serialize_with = "serialize_matrix")]
    pub covariance: DMatrix<f64>,
}

fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

impl RegressionResult {
    fn assemble(
        names: &[String],
        beta: &DVector<f64>,
        covariance: DMatrix<f64>,
        statistic: StatisticKind,
        n_obs: usize,
        df: Option<usize>,
        converged: bool,
        iterations: usize,
    ) -> Self {
        let se: Vec<f64> = covariance
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        let wald: Vec<f64> = beta
            .iter()
            .zip(&se)
            .map(|(b, s)| match (*s, *b) {
                (s, _) if s > 0.0 => b / s,
                (_, 0.0) => 0.0,
                (_, b) => b.signum() * f64::INFINITY,
            })
            .collect();
        let p: Vec<f64> = wald
            .iter()
            .map(|&w| match statistic {
                StatisticKind::Z => normal_two_sided(w),
                StatisticKind::T => {
                    student_two_sided(w, df.expect("t statistic needs degrees of freedom"))
                }
            })
            .collect();
        let named = |v: Vec<f64>| NamedVector::new(names.to_vec(), v);
        Self {
            coefficients: named(beta.iter().copied().collect()),
            std_errors: named(se),
            wald_stats: named(wald),
            p_values: named(p),
            statistic,
            n_obs,
            df,
            converged,
            iterations,
            covariance,
        }
    }
}

pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

pub fn student_two_sided(t: f64, df: usize) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Score vector `X'(y - p)` of the logistic log-likelihood at `beta`.
pub fn logistic_score(y: &[bool], design: &Design, beta: &DVector<f64>) -> DVector<f64> {
    let x = design.matrix();
    let eta = x * beta;
    let resid = DVector::from_iterator(
        y.len(),
        y.iter()
            .zip(eta.iter())
            .map(|(&yi, &e)| yi as u8 as f64 - logistic(e)),
    );
    x.transpose() * resid
}

fn logistic_information(design: &Design, beta: &DVector<f64>) -> DMatrix<f64> {
    let x = design.matrix();
    let eta = x * beta;
    let mut weighted = x.clone();
    for (i, e) in eta.iter().enumerate() {
        let p = logistic(*e);
        let w = p * (1.0 - p);
        weighted.row_mut(i).scale_mut(w);
    }
    x.transpose() * weighted
}

/// Logistic regression `P(y) = 1 / (1 + exp(-x'beta))` by iteratively
/// reweighted least squares.
///
/// Iterates Newton steps until the largest coefficient change drops below
/// [`LOGISTIC_STEP_TOLERANCE`] or [`LOGISTIC_MAX_ITERATIONS`] is reached.
/// Standard errors come from the inverse observed information at the
/// returned coefficients.
pub fn fit_logistic(y: &[bool], design: &Design) -> Result<RegressionResult> {
    design.check_shape(y.len())?;
    design.check_rank()?;

    let mut beta = DVector::<f64>::zeros(design.n_coef());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < LOGISTIC_MAX_ITERATIONS {
        iterations += 1;
        let info = logistic_information(design, &beta);
        let score = logistic_score(y, design, &beta);
        let step = info.cholesky().ok_or(Error::Collinearity)?.solve(&score);
        beta += &step;
        if let Some((k, _)) = beta
            .iter()
            .enumerate()
            .find(|(_, b)| b.abs() > SEPARATION_LIMIT)
        {
            return Err(Error::Separation {
                name: design.names()[k].clone(),
                limit: SEPARATION_LIMIT,
            });
        }
        if step.amax() < LOGISTIC_STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    let covariance = logistic_information(design, &beta)
        .try_inverse()
        .ok_or(Error::Collinearity)?;
    Ok(RegressionResult::assemble(
        design.names(),
        &beta,
        covariance,
        StatisticKind::Z,
        y.len(),
        None,
        converged,
        iterations,
    ))
}

/// Ordinary least squares through a Householder QR factorization, with
/// t statistics on `n - p` degrees of freedom.
pub fn fit_ols(y: &[f64], design: &Design) -> Result<RegressionResult> {
    design.check_shape(y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::ParameterDomain(
            "response has non-finite values".into(),
        ));
    }
    design.check_rank()?;

    let x = design.matrix();
    let (n, p) = (design.n_obs(), design.n_coef());
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * &yv;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::Collinearity)?;

    let resid = &yv - x * &beta;
    let df = n - p;
    let sigma2 = resid.norm_squared() / df as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::Collinearity)?;
    let covariance = (&r_inv * r_inv.transpose()) * sigma2;
    Ok(RegressionResult::assemble(
        design.names(),
        &beta,
        covariance,
        StatisticKind::T,
        n,
        Some(df),
        true,
        1,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn intercept_only(n: usize) -> Design {
        Design::from_rows(&["intercept"], &vec![vec![1.0]; n]).unwrap()
    }

    #[test]
    fn balanced_outcome_has_zero_intercept() {
        let y: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let fit = fit_logistic(&y, &intercept_only(20)).unwrap();
        assert_abs_diff_eq!(fit.coefficients["intercept"], 0.0, epsilon = 1e-8);
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.p_values["intercept"], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn intercept_recovers_logit_of_rate() {
        let y: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect();
        let fit = fit_logistic(&y, &intercept_only(40)).unwrap();
        assert_abs_diff_eq!(
            fit.coefficients["intercept"],
            (0.25f64 / 0.75).ln(),
            epsilon = 1e-10
        );
        // Var(beta0) = 1 / (n p (1-p))
        assert_abs_diff_eq!(
            fit.std_errors["intercept"],
            (1.0f64 / (40.0 * 0.25 * 0.75)).sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn all_true_is_separated() {
        let y = vec![true; 12];
        assert!(matches!(
            fit_logistic(&y, &intercept_only(12)),
            Err(Error::Separation { .. })
        ));
    }

    #[test]
    fn perfectly_split_predictor_is_separated() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let design = Design::from_rows(&["intercept", "x"], &rows).unwrap();
        assert!(matches!(
            fit_logistic(&y, &design),
            Err(Error::Separation { .. })
        ));
    }

    #[test]
    fn collinear_design_is_rejected() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![1.0, i as f64, 2.0 * i as f64])
            .collect();
        let design = Design::from_rows(&["intercept", "x", "x2"], &rows).unwrap();
        let y: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
        assert!(matches!(
            fit_logistic(&y, &design),
            Err(Error::Collinearity)
        ));
        let yf: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(fit_ols(&yf, &design), Err(Error::Collinearity)));
    }

    #[test]
    fn too_few_observations() {
        let design =
            Design::from_rows(&["intercept", "x"], &[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            fit_ols(&[1.0, 2.0], &design),
            Err(Error::InsufficientDesign(_))
        ));
        assert!(fit_ols(&[1.0], &design).is_err());
    }

    #[test]
    fn ols_exact_line() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 2.0 + 3.0 * i as f64).collect();
        let design = Design::from_rows(&["intercept", "x"], &rows).unwrap();
        let fit = fit_ols(&y, &design).unwrap();
        assert_abs_diff_eq!(fit.coefficients["intercept"], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients["x"], 3.0, epsilon = 1e-12);
        assert!(fit.std_errors.values().iter().all(|s| *s < 1e-12));
        assert!(fit
            .p_values
            .values()
            .iter()
            .all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn ols_constant_response() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, (i * i) as f64]).collect();
        let design = Design::from_rows(&["intercept", "x"], &rows).unwrap();
        let fit = fit_ols(&[4.5; 8], &design).unwrap();
        assert_abs_diff_eq!(fit.coefficients["intercept"], 4.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients["x"], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ols_t_statistics_and_p_values() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y = [0.3, 1.1, 1.9, 3.4, 3.8, 5.2, 5.9, 7.3, 7.7, 9.1];
        let design = Design::from_rows(&["intercept", "x"], &rows).unwrap();
        let fit = fit_ols(&y, &design).unwrap();
        assert_eq!(fit.df, Some(8));
        for (name, b) in fit.coefficients.iter() {
            assert_abs_diff_eq!(
                fit.wald_stats[name],
                b / fit.std_errors[name],
                epsilon = 1e-9
            );
        }
        // slope is overwhelmingly significant, intercept is not
        assert!(fit.p_values["x"] < 1e-8);
        assert!(fit.p_values["intercept"] > 0.05);
    }

    #[test]
    fn named_vector_serializes_in_order() {
        let v = NamedVector::new(vec!["b".into(), "a".into()], vec![1.0, 2.5]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"b":1.0,"a":2.5}"#);
        assert_eq!(v.get("a"), Some(2.5));
        assert_eq!(v.get("c"), None);
    }

    #[test]
    fn two_sided_p_values() {
        assert_abs_diff_eq!(normal_two_sided(1.959963984540054), 0.05, epsilon = 1e-10);
        assert_abs_diff_eq!(normal_two_sided(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            student_two_sided(2.228138851986274, 10),
            0.05,
            epsilon = 1e-9
        );
    }
}
