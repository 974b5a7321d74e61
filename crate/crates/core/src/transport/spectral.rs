use super::TransportError;
use crate::numerics::Real;

/// Input photon amplitude `F(omega)` with `omega` measured from the cavity
/// resonance.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralDensity<T> {
    /// `F = (2 / pi d^2)^(1/4) exp[-(omega - omega0)^2 / d^2]`.
    Gaussian { omega0: T, d: T },
    /// Samples of `F` on an ascending grid. `|F|^2` is interpolated linearly
    /// between samples and vanishes outside the grid.
    Tabulated { omega: Vec<T>, amplitude: Vec<T> },
}

impl<T: Real> SpectralDensity<T> {
    pub fn gaussian(omega0: T, d: T) -> Result<Self, TransportError> {
        if !(d > T::zero()) || !d.is_finite() || !omega0.is_finite() {
            return Err(TransportError::InvalidInput(format!(
                "Gaussian width must be positive and finite, got d = {}",
                d.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(Self::Gaussian { omega0, d })
    }

    pub fn tabulated(omega: Vec<T>, amplitude: Vec<T>) -> Result<Self, TransportError> {
        if omega.len() != amplitude.len() || omega.len() < 2 {
            return Err(TransportError::InvalidInput(
                "tabulated density needs at least two (omega, F) pairs of equal length".into(),
            ));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(TransportError::InvalidInput("tabulated frequencies must be strictly ascending".into()));
        }
        if amplitude.iter().chain(&omega).any(|x| !x.is_finite()) {
            return Err(TransportError::InvalidInput("tabulated density has non-finite entries".into()));
        }
        Ok(Self::Tabulated { omega, amplitude })
    }

    /// `|F(omega)|^2`.
    pub fn intensity(&self, w: T) -> T {
        match self {
            Self::Gaussian { omega0, d } => {
                let x = (w - *omega0) / *d;
                T::lit(2.0 / std::f64::consts::PI).sqrt() / *d * (-T::lit(2.0) * x * x).exp()
            }
            Self::Tabulated { omega, amplitude } => {
                let n = omega.len();
                if w < omega[0] || w > omega[n - 1] {
                    return T::zero();
                }
                let j = omega.partition_point(|&x| x <= w).clamp(1, n - 1);
                let (x0, x1) = (omega[j - 1], omega[j]);
                let (i0, i1) = (amplitude[j - 1].powi(2), amplitude[j].powi(2));
                i0 + (i1 - i0) * (w - x0) / (x1 - x0)
            }
        }
    }

    /// Interval outside which `|F|^2` is negligible (below `1e-16` of its peak
    /// for the Gaussian, exactly zero for tables).
    pub fn support(&self) -> (T, T) {
        match self {
            Self::Gaussian { omega0, d } => {
                let r = T::lit(4.3) * *d;
                (*omega0 - r, *omega0 + r)
            }
            Self::Tabulated { omega, .. } => (omega[0], omega[omega.len() - 1]),
        }
    }

    /// Sample frequencies where the density has kinks.
    pub fn nodes(&self) -> Vec<T> {
        match self {
            Self::Gaussian { omega0, .. } => vec![*omega0],
            Self::Tabulated { omega, .. } => omega.clone(),
        }
    }

    /// `int |F|^2 domega`.
    pub fn norm(&self) -> T {
        match self {
            Self::Gaussian { .. } => T::one(),
            Self::Tabulated { omega, amplitude } => omega
                .windows(2)
                .zip(amplitude.windows(2))
                .fold(T::zero(), |acc, (w, a)| acc + (w[1] - w[0]) * (a[0] * a[0] + a[1] * a[1]) * T::lit(0.5)),
        }
    }

    /// Rescales a table to unit norm; Gaussians are returned unchanged.
    pub fn normalized(self) -> Result<Self, TransportError> {
        match self {
            Self::Gaussian { .. } => Ok(self),
            Self::Tabulated { omega, amplitude } => {
                let n = Self::Tabulated { omega: omega.clone(), amplitude: amplitude.clone() }.norm();
                if !(n > T::zero()) {
                    return Err(TransportError::InvalidInput("tabulated density has zero norm".into()));
                }
                let s = n.sqrt();
                Ok(Self::Tabulated { omega, amplitude: amplitude.into_iter().map(|a| a / s).collect() })
            }
        }
    }

    pub fn check_normalized(&self) -> Result<(), TransportError> {
        let n = self.norm();
        if (n - T::one()).abs() > T::lit(1e-6) {
            return Err(TransportError::InvalidInput(format!(
                "input spectral density has norm {} (expected 1)",
                n.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::{integrate_adaptive, QuadratureOptions};

    #[test]
    fn gaussian_is_normalized() {
        let f = SpectralDensity::gaussian(-0.36f64, 0.2).unwrap();
        let (a, b) = f.support();
        let opts = QuadratureOptions { rel_tol: 1e-12, ..Default::default() };
        let n = integrate_adaptive(|w| f.intensity(w), &[a, -0.36, b], &opts).unwrap();
        assert!((n - 1.0).abs() < 1e-12, "{n}");
        assert!(f.intensity(a) < 1e-15 * f.intensity(-0.36));
    }

    #[test]
    fn table_interpolates_intensity() {
        let f = SpectralDensity::tabulated(vec![0.0f64, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(f.intensity(0.5), 2.0);
        assert_eq!(f.intensity(1.0), 4.0);
        assert_eq!(f.intensity(-0.1), 0.0);
        assert_eq!(f.norm(), 4.0);
        let f = f.normalized().unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-15);
        f.check_normalized().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SpectralDensity::gaussian(0.0f64, 0.0).is_err());
        assert!(SpectralDensity::tabulated(vec![0.0f64, 0.0], vec![1.0, 1.0]).is_err());
        assert!(SpectralDensity::tabulated(vec![0.0f64], vec![1.0]).is_err());
        let f = SpectralDensity::tabulated(vec![0.0f64, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(f.check_normalized().is_ok());
        let f = SpectralDensity::tabulated(vec![0.0f64, 2.0], vec![1.0, 1.0]).unwrap();
        assert!(f.check_normalized().is_err());
    }
}
