//! Continuous LTI representations and exact complex frequency-response evaluation.
//!
//! Everything here is SISO on the frequency-response side: a [`StateSpaceModel`]
//! may carry several inputs/outputs, but responses are always taken along one
//! input/output pair. The constant additive term `d_affine` of a state-space model
//! is a disturbance (gravity in the case-study rig) and never enters a transfer path.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex value of a frequency response, `re + j·im`.
pub type ComplexValue = Complex64;

const POLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,
    #[error("pole on the imaginary axis at omega = {omega} (|den(jw)| = {magnitude:e})")]
    PoleOnAxis { omega: f64, magnitude: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("resolvent (jwI - A) is singular at omega = {omega} (condition estimate {condition:e})")]
    SingularResolvent { omega: f64, condition: f64 },
    #[error("argument of zero is undefined")]
    ZeroArgument,
    #[error("double-integrator factorization is undefined at omega = 0")]
    ZeroFrequency,
    #[error("transfer function must be strictly proper to be realized without feedthrough")]
    NotStrictlyProper,
}

/// Real polynomial in `s`, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial, trimming zero high-order coefficients (a single zero is kept).
    pub fn new(coeffs: Vec<f64>) -> Result<Self, LtiError> {
        if coeffs.is_empty() {
            return Err(LtiError::EmptyPolynomial);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LtiError::NonFinite("polynomial"));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// Sum of `|a_k| |s|^k`, the natural magnitude scale for evaluation at `s`.
    fn magnitude_scale(&self, s_abs: f64) -> f64 {
        let mut pow = 1.0;
        let mut total = 0.0;
        for &c in &self.coeffs {
            total += c.abs() * pow;
            pow *= s_abs;
        }
        total
    }
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = LtiError;

    fn try_from(value: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

/// Rational transfer function `num(s) / den(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransferFunction", into = "RawTransferFunction")]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TryFrom<RawTransferFunction> for TransferFunction {
    type Error = LtiError;

    fn try_from(raw: RawTransferFunction) -> Result<Self, Self::Error> {
        Self::new(raw.num, raw.den)
    }
}

impl From<TransferFunction> for RawTransferFunction {
    fn from(tf: TransferFunction) -> Self {
        Self {
            num: tf.num,
            den: tf.den,
        }
    }
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, LtiError> {
        if den.is_zero() {
            return Err(LtiError::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    /// Convenience constructor from ascending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self, LtiError> {
        Self::new(Polynomial::new(num.to_vec())?, Polynomial::new(den.to_vec())?)
    }

    /// `gain / (tau s + 1)`
    pub fn first_order_lag(gain: f64, tau: f64) -> Result<Self, LtiError> {
        Self::from_coeffs(&[gain], &[1.0, tau])
    }

    pub fn unity() -> Self {
        Self {
            num: Polynomial::constant(1.0),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    /// Value at `s = 0`.
    pub fn dc_gain(&self) -> Result<f64, LtiError> {
        tf_freq_response(self, 0.0).map(|c| c.re)
    }

    /// Controllable canonical realization of a strictly proper transfer function.
    pub fn realize(&self) -> Result<StateSpaceModel, LtiError> {
        let n = self.den.degree();
        if self.num.degree() >= n && !(self.num.is_zero() && n > 0) {
            return Err(LtiError::NotStrictlyProper);
        }
        let lead = self.den.coeffs()[n];
        let den: Vec<f64> = self.den.coeffs().iter().map(|c| c / lead).collect();
        let mut num: Vec<f64> = self.num.coeffs().iter().map(|c| c / lead).collect();
        num.resize(n, 0.0);

        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate().take(n - 1) {
            row[i + 1] = 1.0;
        }
        for j in 0..n {
            a[n - 1][j] = -den[j];
        }
        let mut b = vec![vec![0.0]; n];
        b[n - 1][0] = 1.0;
        StateSpaceModel::new(a, b, vec![num], vec![0.0; n])
    }
}

/// Continuous LTI plant `x' = A x + B u + d_affine`, `y = C x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStateSpace", into = "RawStateSpace")]
pub struct StateSpaceModel {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    d_affine: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStateSpace {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    d_affine: Vec<f64>,
}

impl TryFrom<RawStateSpace> for StateSpaceModel {
    type Error = LtiError;

    fn try_from(raw: RawStateSpace) -> Result<Self, Self::Error> {
        Self::new(raw.a, raw.b, raw.c, raw.d_affine)
    }
}

impl From<StateSpaceModel> for RawStateSpace {
    fn from(ss: StateSpaceModel) -> Self {
        Self {
            a: ss.a,
            b: ss.b,
            c: ss.c,
            d_affine: ss.d_affine,
        }
    }
}

impl StateSpaceModel {
    pub fn new(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d_affine: Vec<f64>,
    ) -> Result<Self, LtiError> {
        let n = a.len();
        if n == 0 {
            return Err(LtiError::Dimension("A must have at least one state".into()));
        }
        if a.iter().any(|row| row.len() != n) {
            return Err(LtiError::Dimension(format!("A must be {n}x{n}")));
        }
        if b.len() != n {
            return Err(LtiError::Dimension(format!("B must have {n} rows, got {}", b.len())));
        }
        let m = b[0].len();
        if m == 0 || b.iter().any(|row| row.len() != m) {
            return Err(LtiError::Dimension("B rows must share a nonzero width".into()));
        }
        if c.is_empty() || c.iter().any(|row| row.len() != n) {
            return Err(LtiError::Dimension(format!("C must have {n} columns")));
        }
        if d_affine.len() != n {
            return Err(LtiError::Dimension(format!(
                "d_affine must have length {n}, got {}",
                d_affine.len()
            )));
        }
        let finite = a
            .iter()
            .chain(b.iter())
            .chain(c.iter())
            .flatten()
            .chain(d_affine.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(LtiError::NonFinite("state-space matrices"));
        }
        Ok(Self { a, b, c, d_affine })
    }

    pub fn states(&self) -> usize {
        self.a.len()
    }

    pub fn inputs(&self) -> usize {
        self.b[0].len()
    }

    pub fn outputs(&self) -> usize {
        self.c.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }

    pub fn d_affine(&self) -> &[f64] {
        &self.d_affine
    }

    /// Output `output` for state `x`.
    pub fn output(&self, x: &[f64], output: usize) -> f64 {
        self.c[output].iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// `dx = A x + B[:, 0] u + d_affine` for a scalar input on channel 0.
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        for (i, out) in dx.iter_mut().enumerate() {
            let ax: f64 = self.a[i].iter().zip(x).map(|(a, x)| a * x).sum();
            *out = ax + self.b[i][0] * u + self.d_affine[i];
        }
    }

    /// `first` drives `second`: `second`'s input 0 is `first`'s output 0.
    ///
    /// The cascade keeps `second`'s states first so its state indices are preserved,
    /// followed by `first`'s states. Output is `second`'s output.
    pub fn cascade(first: &StateSpaceModel, second: &StateSpaceModel) -> StateSpaceModel {
        let n2 = second.states();
        let n1 = first.states();
        let n = n1 + n2;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n2 {
            a[i][..n2].copy_from_slice(&second.a[i]);
            for j in 0..n1 {
                a[i][n2 + j] = second.b[i][0] * first.c[0][j];
            }
        }
        for i in 0..n1 {
            a[n2 + i][n2..].copy_from_slice(&first.a[i]);
        }
        let mut b = vec![vec![0.0]; n];
        for i in 0..n1 {
            b[n2 + i][0] = first.b[i][0];
        }
        let mut c = vec![vec![0.0; n]; 1];
        c[0][..n2].copy_from_slice(&second.c[0]);
        let mut d_affine = second.d_affine.clone();
        d_affine.extend_from_slice(&first.d_affine);
        StateSpaceModel { a, b, c, d_affine }
    }

    /// `C[output] (jwI - A)^-1 B[:, input]`.
    pub fn freq_response_path(
        &self,
        input: usize,
        output: usize,
        omega: f64,
    ) -> Result<Complex64, LtiError> {
        if input >= self.inputs() || output >= self.outputs() {
            return Err(LtiError::Dimension(format!(
                "path ({input} -> {output}) outside {}x{} system",
                self.inputs(),
                self.outputs()
            )));
        }
        let n = self.states();
        let jw = Complex64::new(0.0, omega);
        let mut m: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let diag = if i == j { jw } else { Complex64::new(0.0, 0.0) };
                        diag - self.a[i][j]
                    })
                    .collect()
            })
            .collect();
        let mut rhs: Vec<Complex64> = (0..n).map(|i| Complex64::new(self.b[i][input], 0.0)).collect();
        let x = complex_solve(&mut m, &mut rhs).map_err(|condition| LtiError::SingularResolvent {
            omega,
            condition,
        })?;
        Ok(self.c[output].iter().zip(&x).map(|(c, x)| x * *c).sum())
    }
}

impl StateSpaceModel {
    /// Eigenvalues of `A`.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let n = self.states();
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| self.a[i][j]);
        a.complex_eigenvalues().iter().copied().collect()
    }

    /// Least-damped eigenvalue with positive imaginary part, if any.
    pub fn dominant_oscillatory_mode(&self) -> Option<Complex64> {
        self.eigenvalues()
            .into_iter()
            .filter(|l| l.im > 1e-9 * l.norm().max(1.0))
            .max_by(|x, y| x.re.total_cmp(&y.re))
    }
}

/// Solves the dense real system `m x = rhs`.
pub fn solve_real(m: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>, LtiError> {
    let n = rhs.len();
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(LtiError::Dimension(format!("expected a {n}x{n} system")));
    }
    let mut cm: Vec<Vec<Complex64>> = m
        .iter()
        .map(|row| row.iter().map(|&v| Complex64::new(v, 0.0)).collect())
        .collect();
    let mut crhs: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    complex_solve(&mut cm, &mut crhs)
        .map(|x| x.into_iter().map(|c| c.re).collect())
        .map_err(|condition| LtiError::SingularResolvent { omega: 0.0, condition })
}

/// Gaussian elimination with partial pivoting. On a (numerically) singular matrix,
/// returns the pivot-ratio condition estimate as the error.
fn complex_solve(m: &mut [Vec<Complex64>], rhs: &mut [Complex64]) -> Result<Vec<Complex64>, f64> {
    let n = rhs.len();
    let norm = m
        .iter()
        .map(|row| row.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut max_pivot: f64 = 0.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (p, pivot_abs) = (k..n)
            .map(|r| (r, m[r][k].norm()))
            .fold((k, -1.0), |best, cand| if cand.1 > best.1 { cand } else { best });
        max_pivot = max_pivot.max(pivot_abs);
        min_pivot = min_pivot.min(pivot_abs);
        if pivot_abs <= f64::EPSILON * norm.max(f64::MIN_POSITIVE) * n as f64 {
            let condition = if pivot_abs > 0.0 { max_pivot / pivot_abs } else { f64::INFINITY };
            return Err(condition);
        }
        m.swap(k, p);
        rhs.swap(k, p);
        for r in k + 1..n {
            let factor = m[r][k] / m[k][k];
            if factor.norm() == 0.0 {
                continue;
            }
            for c in k..n {
                let v = m[k][c];
                m[r][c] -= factor * v;
            }
            let v = rhs[k];
            rhs[r] -= factor * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for c in k + 1..n {
            acc -= m[k][c] * x[c];
        }
        x[k] = acc / m[k][k];
    }
    Ok(x)
}

/// Anything that can be evaluated on the imaginary axis.
pub trait FrequencyResponse {
    fn response(&self, omega: f64) -> Result<Complex64, LtiError>;
}

impl<T: FrequencyResponse + ?Sized> FrequencyResponse for &T {
    fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        (**self).response(omega)
    }
}

impl<T: FrequencyResponse + ?Sized> FrequencyResponse for Box<T> {
    fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        (**self).response(omega)
    }
}

impl FrequencyResponse for TransferFunction {
    fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        tf_freq_response(self, omega)
    }
}

/// Constant 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unity;

impl FrequencyResponse for Unity {
    fn response(&self, _omega: f64) -> Result<Complex64, LtiError> {
        Ok(Complex64::new(1.0, 0.0))
    }
}

/// Wraps a closure as a frequency response.
pub struct FnResponse<F>(pub F);

impl<F> FrequencyResponse for FnResponse<F>
where
    F: Fn(f64) -> Result<Complex64, LtiError>,
{
    fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        (self.0)(omega)
    }
}

/// Single input/output path through a state-space model.
#[derive(Debug, Clone)]
pub struct SsPath<'a> {
    pub model: &'a StateSpaceModel,
    pub input: usize,
    pub output: usize,
}

impl<'a> SsPath<'a> {
    pub fn siso(model: &'a StateSpaceModel) -> Self {
        Self {
            model,
            input: 0,
            output: 0,
        }
    }
}

impl FrequencyResponse for SsPath<'_> {
    fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        self.model.freq_response_path(self.input, self.output, omega)
    }
}

/// Pointwise product of two responses.
#[derive(Debug, Clone)]
pub struct Series<A, B> {
    pub first: A,
    pub second: B,
}

pub fn series<A: FrequencyResponse, B: FrequencyResponse>(first: A, second: B) -> Series<A, B> {
    Series { first, second }
}

impl<A: FrequencyResponse, B: FrequencyResponse> FrequencyResponse for Series<A, B> {
    fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        Ok(self.first.response(omega)? * self.second.response(omega)?)
    }
}

/// `G(jw) = (jw)^2 H(jw)`: the forward path in front of the terminal double integrator.
#[derive(Debug, Clone)]
pub struct ImpliedForwardGain<H>(pub H);

impl<H: FrequencyResponse> FrequencyResponse for ImpliedForwardGain<H> {
    fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        implied_forward_gain(&self.0, omega)
    }
}

/// `num(jw) / den(jw)`; fails when `jw` sits on a pole.
pub fn tf_freq_response(tf: &TransferFunction, omega: f64) -> Result<Complex64, LtiError> {
    let s = Complex64::new(0.0, omega);
    let den = tf.den.eval(s);
    let scale = tf.den.magnitude_scale(omega.abs());
    if den.norm() <= POLE_TOLERANCE * scale {
        return Err(LtiError::PoleOnAxis {
            omega,
            magnitude: den.norm(),
        });
    }
    Ok(tf.num.eval(s) / den)
}

/// SISO response of input 0 to output 0.
pub fn ss_freq_response(ss: &StateSpaceModel, omega: f64) -> Result<Complex64, LtiError> {
    ss.freq_response_path(0, 0, omega)
}

pub fn implied_forward_gain<H: FrequencyResponse + ?Sized>(
    plant_v_to_y: &H,
    omega: f64,
) -> Result<Complex64, LtiError> {
    if omega == 0.0 {
        return Err(LtiError::ZeroFrequency);
    }
    let jw = Complex64::new(0.0, omega);
    Ok(jw * jw * plant_v_to_y.response(omega)?)
}

/// Principal argument in `(-pi, pi]`; the negative real axis maps to `+pi`.
pub fn phase_principal(c: Complex64) -> Result<f64, LtiError> {
    if c.re == 0.0 && c.im == 0.0 {
        return Err(LtiError::ZeroArgument);
    }
    let phase = c.im.atan2(c.re);
    Ok(if phase <= -std::f64::consts::PI { std::f64::consts::PI } else { phase })
}
