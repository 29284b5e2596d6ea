use serde::Serialize;

use super::{check_alpha, Side};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum VarianceLaw {
    /// Success probability `p`; studied through its upper CVaR.
    Bernoulli { p: f64 },
    /// Standard normal; studied through its lower CVaR.
    Gaussian,
    /// Density `β x^{−1−β}` on `x ≥ 1`; studied through its upper CVaR.
    PowerLaw { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticCvar {
    pub side: Side,
    /// Limit of the estimator.
    pub cvar: f64,
    /// Closed-form `CVaRv`. Gaussian: tail variance over α. Power law: tail
    /// variance, so `Var[E_n] ≈ CVaRv / ⌊αn⌋`. Neither carries the
    /// quantile-fluctuation term, which matters only at moderate α.
    pub cvarv: f64,
    /// `E[X²] / α²`
    pub crude_bound: f64,
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(x)`, via `erfc` so both tails keep full relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

fn poly(c: &[f64; 8], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * r + k)
}

/// Wichura's AS241 rational approximation, good to about 1e-16.
#[allow(clippy::excessive_precision)]
fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        133.141_667_891_784_38,
        1_971.590_950_306_551_4,
        13_731.693_765_509_461,
        45_921.953_931_549_87,
        67_265.770_927_008_7,
        33_430.575_583_588_13,
        2_509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_91,
        687.187_007_492_057_9,
        5_394.196_021_424_751,
        21_213.794_301_586_596,
        39_307.895_800_092_71,
        28_729.085_735_721_943,
        5_226.495_278_852_546,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_6,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        0.689_767_334_985_1,
        0.148_103_976_427_480_07,
        0.015_198_666_563_616_457,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_104,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_9,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_9,
        0.136_929_880_922_735_8,
        0.014_875_361_290_850_615,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        poly(&C, r - 1.6) / poly(&D, r - 1.6)
    } else {
        poly(&E, r - 5.0) / poly(&F, r - 5.0)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Standard-normal quantile, polished with one Newton step on the CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(
            "probability",
            format!("quantile needs p in (0, 1), got {p}"),
        ));
    }
    let x = ppnd16(p);
    // residual taken in the tail that p lives in, so 1 − p never cancels
    let residual = if p < 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_cdf(-x)
    };
    Ok(x - residual / normal_pdf(x))
}

pub fn analytic_variance(law: VarianceLaw, alpha: f64) -> Result<AnalyticCvar> {
    check_alpha(alpha)?;
    match law {
        VarianceLaw::Bernoulli { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
            }
            let cvarv = if (alpha - p).abs() <= 1e-12 * alpha {
                (1.0 - p) / p * (0.5 - 1.0 / (2.0 * std::f64::consts::PI))
            } else if alpha > p {
                p * (1.0 - p) / (alpha * alpha)
            } else {
                0.0
            };
            Ok(AnalyticCvar {
                side: Side::Upper,
                cvar: (p / alpha).min(1.0),
                cvarv,
                crude_bound: p / (alpha * alpha),
            })
        }
        VarianceLaw::Gaussian => {
            if alpha == 1.0 {
                return Ok(AnalyticCvar {
                    side: Side::Lower,
                    cvar: 0.0,
                    cvarv: 1.0,
                    crude_bound: 1.0,
                });
            }
            let x = normal_quantile(alpha)?;
            let f = normal_pdf(x);
            Ok(AnalyticCvar {
                side: Side::Lower,
                cvar: -f / alpha,
                cvarv: (1.0 - x * f / alpha - f * f / (alpha * alpha)) / alpha,
                crude_bound: 1.0 / (alpha * alpha),
            })
        }
        VarianceLaw::PowerLaw { beta } => {
            if beta.is_nan() || beta <= 2.0 {
                return Err(Error::invalid(
                    "beta",
                    format!("variance needs beta > 2, got {beta}"),
                ));
            }
            Ok(AnalyticCvar {
                side: Side::Upper,
                cvar: beta / (beta - 1.0) * alpha.powf(-1.0 / beta),
                cvarv: beta / ((beta - 1.0).powi(2) * (beta - 2.0)) * alpha.powf(-2.0 / beta),
                crude_bound: beta / (beta - 2.0) / (alpha * alpha),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-6, 0.01, 0.1, 0.5, 0.9, 0.999] {
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() < 1e-14);
        }
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!(normal_quantile(0.0).is_err());
    }

    #[test]
    fn gaussian_median_tail() {
        let r = analytic_variance(VarianceLaw::Gaussian, 0.5).unwrap();
        assert!((r.cvar + (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_limit() {
        let r = analytic_variance(VarianceLaw::Bernoulli { p: 0.1 }, 0.2).unwrap();
        assert!((r.cvar - 0.5).abs() < 1e-15);
        assert!((r.cvarv - 0.09 / 0.04).abs() < 1e-12);
        let sat = analytic_variance(VarianceLaw::Bernoulli { p: 0.3 }, 0.2).unwrap();
        assert_eq!((sat.cvar, sat.cvarv), (1.0, 0.0));
    }

    #[test]
    fn power_law_needs_finite_variance() {
        assert!(analytic_variance(VarianceLaw::PowerLaw { beta: 2.0 }, 0.1).is_err());
        let r = analytic_variance(VarianceLaw::PowerLaw { beta: 3.0 }, 1.0).unwrap();
        assert!((r.cvar - 1.5).abs() < 1e-12);
        assert!((r.cvarv - 0.75).abs() < 1e-12);
    }
}
