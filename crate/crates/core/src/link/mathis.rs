//! Mathis single-stream bound and its multi-stream aggregate.

use serde::{Deserialize, Serialize};

use super::LinkError;

/// Above this loss rate the square-root law is no longer a good fit.
pub const MATHIS_VALID_LOSS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathisParams {
    /// Maximum segment size in bytes.
    pub mss: f64,
    /// Round-trip time in seconds.
    pub rtt: f64,
    /// Dimensionless constant `C`.
    pub c_const: f64,
}

impl MathisParams {
    pub fn new(mss: f64, rtt: f64, c_const: f64) -> Result<Self, LinkError> {
        let p = MathisParams { mss, rtt, c_const };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.mss > 0.0 && self.rtt > 0.0 && self.c_const > 0.0) {
            return Err(LinkError::InvalidParameter(format!(
                "mathis parameters must be positive (mss={}, rtt={}, C={})",
                self.mss, self.rtt, self.c_const
            )));
        }
        Ok(())
    }
}

/// Single-stream TCP throughput bound in Mbps: `(MSS·8 / RTT) · C / sqrt(p)`.
pub fn mathis_throughput(p: &MathisParams, loss: f64) -> Result<f64, LinkError> {
    p.validate()?;
    if !(loss > 0.0 && loss < 1.0) {
        return Err(LinkError::Domain { loss });
    }
    if loss >= MATHIS_VALID_LOSS {
        log::warn!("loss rate {loss} is outside the range where the Mathis model holds");
    }
    let bits_per_sec = p.mss * 8.0 / p.rtt * p.c_const / loss.sqrt();
    Ok(bits_per_sec / 1e6)
}

/// Sum of per-stream Mathis bounds sharing MSS, RTT and `C`.
///
/// An empty loss list means no streams and yields zero.
pub fn aggregate_throughput(p: &MathisParams, losses: &[f64]) -> Result<f64, LinkError> {
    losses
        .iter()
        .try_fold(0.0, |acc, &l| Ok(acc + mathis_throughput(p, l)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> MathisParams {
        MathisParams::new(1460.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn single_stream_reference_value() {
        let t = mathis_throughput(&reference(), 1e-4).unwrap();
        assert_relative_eq!(t, 11.68, max_relative = 1e-12);
    }

    #[test]
    fn linear_in_mss() {
        let p = reference();
        let double = MathisParams { mss: 2.0 * p.mss, ..p };
        let a = mathis_throughput(&p, 3e-5).unwrap();
        let b = mathis_throughput(&double, 3e-5).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn zero_and_unit_loss_are_domain_errors() {
        let p = reference();
        assert!(matches!(mathis_throughput(&p, 0.0), Err(LinkError::Domain { .. })));
        assert!(matches!(mathis_throughput(&p, 1.0), Err(LinkError::Domain { .. })));
        assert!(matches!(mathis_throughput(&p, -0.1), Err(LinkError::Domain { .. })));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(MathisParams::new(0.0, 0.1, 1.0).is_err());
        assert!(MathisParams::new(1460.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn aggregate_cases() {
        let p = reference();
        let one = mathis_throughput(&p, 1e-4).unwrap();
        assert_eq!(aggregate_throughput(&p, &[]).unwrap(), 0.0);
        let mixed = aggregate_throughput(&p, &[1e-4, 4e-4]).unwrap();
        assert_relative_eq!(mixed, 1.5 * one, max_relative = 1e-12);
        assert_relative_eq!(mixed, 17.52, max_relative = 1e-12);
        assert!(aggregate_throughput(&p, &[1e-4, 0.0]).is_err());
    }

    #[test]
    fn aggregate_equal_losses_is_n_times_single() {
        let p = reference();
        let single = mathis_throughput(&p, 2.5e-4).unwrap();
        for n in 1..=64usize {
            let agg = aggregate_throughput(&p, &vec![2.5e-4; n]).unwrap();
            assert_relative_eq!(agg, n as f64 * single, max_relative = 1e-12);
        }
    }
}
