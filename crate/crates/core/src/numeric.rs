//! Small numerical building blocks shared across modules: Gauss-Legendre
//! rules, Hermitian spectra, pairwise reduction and 17-digit float output.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the three-term recurrence, seeded with the
/// Tricomi asymptotic guess. Accurate to machine precision for n up to a
/// few thousand.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over `[a, b]` with an n-point Gauss-Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Trace norm (sum of singular values) of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|e| e.abs()).sum()
}

/// Trace distance ½‖a − b‖₁ between two density matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm_hermitian(&(a - b))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Fixed-shape pairwise (tree) reduction. The association order depends
/// only on `items.len()`, so results are bit-reproducible regardless of how
/// the items were produced.
pub fn pairwise_reduce<T: Clone>(items: &[T], add: &impl Fn(&T, &T) -> T) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (l, r) = items.split_at(n / 2);
            let a = pairwise_reduce(l, add)?;
            let b = pairwise_reduce(r, add)?;
            Some(add(&a, &b))
        }
    }
}

/// Decimal with 17 significant digits; round-trips every finite f64.
pub fn fmt_f17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Serde adapters writing floats with 17 significant digits.
pub mod f17 {
    use serde::ser::Error as _;
    use serde::Serializer;
    use serde_json::value::RawValue;

    fn raw(x: f64) -> Result<Box<RawValue>, String> {
        if !x.is_finite() {
            return Err(format!("non-finite float {x} is not representable in JSON"));
        }
        RawValue::from_string(super::fmt_f17(x)).map_err(|e| e.to_string())
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&raw(*x).map_err(S::Error::custom)?, s)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        struct One(f64);
        impl serde::Serialize for One {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::serialize(&self.0, s)
            }
        }

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&One(*x))?;
            }
            seq.end()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(7);
        // degree 13 is exact for 7 nodes
        let v = integrate_gl(|x| x.powi(12) + x.powi(13), -1.0, 1.0, &rule);
        assert!((v - 2.0 / 13.0).abs() < 1e-14);
        let s: f64 = rule.1.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_large_rule_is_accurate() {
        let rule = gauss_legendre(1500);
        let v = integrate_gl(f64::exp, 0.0, 1.0, &rule);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        assert!(rule.0.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn f17_serializes_with_seventeen_digits() {
        #[derive(serde::Serialize)]
        struct T {
            #[serde(with = "f17")]
            x: f64,
            #[serde(serialize_with = "f17::vec::serialize")]
            v: Vec<f64>,
        }
        let s = serde_json::to_string(&T {
            x: 0.1,
            v: vec![1.0, -2.5e-300],
        })
        .unwrap();
        assert_eq!(
            s,
            r#"{"x":1.0000000000000001e-1,"v":[1.0000000000000000e0,-2.5000000000000000e-300]}"#
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn pairwise_reduce_is_shape_determined() {
        let xs: Vec<f64> = (0..37).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let a = pairwise_reduce(&xs, &|a, b| a + b).unwrap();
        let b = pairwise_reduce(&xs, &|a, b| a + b).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(pairwise_reduce::<f64>(&[], &|a, b| a + b).is_none());
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let mut a = CMatrix::zeros(2, 2);
        let mut b = CMatrix::zeros(2, 2);
        a[(0, 0)] = C_ONE;
        b[(1, 1)] = C_ONE;
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    }
}
