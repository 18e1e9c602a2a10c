//! Acoustic metric estimators (T60, EDT, DRR) and paired comparison
//! reports between generated and reference BIRs.

use serde::{Deserialize, Serialize};

use crate::bir::ed::{ed_relief, edc, edc_db, ED_LOG_FLOOR};
use crate::bir::Bir;
use crate::dsp::stft::StftConfig;
use crate::{Error, Result};

/// Center frequencies (Hz) for the per-band ED comparison.
pub const ED_CENTER_FREQS: [f64; 5] = [125.0, 500.0, 1000.0, 2000.0, 4000.0];

/// Half-width of the direct-sound window for DRR, in seconds.
pub const DRR_DIRECT_HALF_WINDOW_S: f64 = 2.5e-3;

/// Least-squares line fit over (x, y); returns (slope, intercept).
fn line_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    Some((slope, (sy - slope * sx) / n))
}

/// Decay time extrapolated from a line fit on the Schroeder curve between
/// `hi_db` and `lo_db` (both negative, hi > lo): returns -60 / slope.
fn decay_time(channel: &[f64], sample_rate: u32, hi_db: f64, lo_db: f64) -> Result<f64> {
    let curve = edc_db(channel)?;
    let start = curve
        .iter()
        .position(|&v| v <= hi_db)
        .ok_or_else(|| Error::numerical("insufficient decay: upper bound never reached"))?;
    let end = curve
        .iter()
        .position(|&v| v <= lo_db)
        .ok_or_else(|| Error::numerical("insufficient decay: lower bound never reached"))?;
    if end <= start {
        return Err(Error::numerical("insufficient decay: degenerate fit span"));
    }
    let pts: Vec<(f64, f64)> = (start..=end)
        .map(|i| (i as f64 / sample_rate as f64, curve[i]))
        .collect();
    let (slope, _) =
        line_fit(&pts).ok_or_else(|| Error::numerical("insufficient decay: fit failed"))?;
    if slope >= 0.0 {
        return Err(Error::numerical("insufficient decay: non-decaying curve"));
    }
    Ok(-60.0 / slope)
}

/// Reverberation time via T30 extrapolation (-5 dB to -35 dB line fit).
pub fn t60(channel: &[f64], sample_rate: u32) -> Result<f64> {
    decay_time(channel, sample_rate, -5.0, -35.0)
}

/// Early decay time: line fit from 0 dB to -10 dB, extrapolated to 60 dB.
pub fn edt(channel: &[f64], sample_rate: u32) -> Result<f64> {
    decay_time(channel, sample_rate, 0.0, -10.0)
}

/// Direct-to-reverberant ratio in dB. Direct window: peak +- 2.5 ms.
/// Returns +inf when there is no late energy.
pub fn drr(channel: &[f64], sample_rate: u32) -> Result<f64> {
    if channel.iter().all(|&v| v == 0.0) {
        return Err(Error::numerical("drr of silent signal is undefined"));
    }
    let peak = channel
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap()
        .0;
    let half = (DRR_DIRECT_HALF_WINDOW_S * sample_rate as f64).round() as usize;
    let lo = peak.saturating_sub(half);
    let hi = (peak + half).min(channel.len() - 1);
    let direct: f64 = channel[lo..=hi].iter().map(|x| x * x).sum();
    let total: f64 = channel.iter().map(|x| x * x).sum();
    let late = total - direct;
    if late <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (direct / late).log10())
}

fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn unit_peak(x: &[f64]) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        x.to_vec()
    } else {
        x.iter().map(|v| v / peak).collect()
    }
}

/// Per-pair, per-channel metric errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairMetrics {
    pub t60_err: [Option<f64>; 2],
    pub drr_err: [Option<f64>; 2],
    pub edt_err: [Option<f64>; 2],
    /// MSE of normalized log-ED curves per center frequency, averaged over
    /// channels
    pub ed_mse_per_freq: Vec<f64>,
    /// same quantity on linear normalized ED curves
    pub ed_mse_per_freq_linear: Vec<f64>,
    /// MAE of unit-peak-normalized BIR samples, per channel
    pub bir_mae: [f64; 2],
    /// MAE of broadband EDC curves, per channel
    pub edc_mae: [Option<f64>; 2],
}

/// Aggregate report over paired BIR sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub pairs: Vec<PairMetrics>,
    pub mean_t60_err: Option<f64>,
    pub mean_drr_err: Option<f64>,
    pub mean_edt_err: Option<f64>,
    pub mean_ed_mse: f64,
    pub mean_bir_mae: f64,
    pub mean_edc_mae: Option<f64>,
    /// left-minus-right EDC difference curves: generated then reference,
    /// one pair of curves per BIR pair
    pub ed_channel_difference: Vec<(Vec<f64>, Vec<f64>)>,
}

fn metric_delta(
    f: impl Fn(&[f64], u32) -> Result<f64>,
    gen: &Bir,
    reference: &Bir,
    channel: usize,
) -> Option<f64> {
    let a = f(gen.channel(channel), gen.sample_rate).ok()?;
    let b = f(reference.channel(channel), reference.sample_rate).ok()?;
    if a.is_finite() && b.is_finite() {
        Some((a - b).abs())
    } else if a == b {
        Some(0.0)
    } else {
        None
    }
}

/// Compare paired generated and reference BIR sets.
pub fn metric_report(generated: &[Bir], reference: &[Bir]) -> Result<MetricReport> {
    if generated.len() != reference.len() || generated.is_empty() {
        return Err(Error::contract("metric_report requires non-empty paired sets"));
    }
    let cfg = StftConfig::default();
    let mut pairs = Vec::new();
    let mut ed_channel_difference = Vec::new();

    for (g, r) in generated.iter().zip(reference) {
        if g.sample_rate != r.sample_rate {
            return Err(Error::contract("paired BIRs must share a sample rate"));
        }
        if g.len() != r.len() {
            return Err(Error::contract("paired BIRs must have matching lengths"));
        }
        let sr = g.sample_rate as f64;

        let mut ed_mse_per_freq = vec![0.0; ED_CENTER_FREQS.len()];
        let mut ed_mse_per_freq_linear = vec![0.0; ED_CENTER_FREQS.len()];
        let mut bir_mae = [0.0; 2];
        let mut edc_mae = [None, None];
        for c in 0..2 {
            let ed_g = ed_relief(g.channel(c), cfg)?;
            let ed_r = ed_relief(r.channel(c), cfg)?;
            for (fi, &freq) in ED_CENTER_FREQS.iter().enumerate() {
                let bin = cfg.bin_for_freq(freq, sr);
                let cg = ed_g.normalized_bin(bin);
                let cr = ed_r.normalized_bin(bin);
                let n = cg.len().min(cr.len()) as f64;
                let mut mse_log = 0.0;
                let mut mse_lin = 0.0;
                for (a, b) in cg.iter().zip(&cr) {
                    let dl = (a + ED_LOG_FLOOR).ln() - (b + ED_LOG_FLOOR).ln();
                    mse_log += dl * dl;
                    mse_lin += (a - b) * (a - b);
                }
                // average over the two channels
                ed_mse_per_freq[fi] += mse_log / n / 2.0;
                ed_mse_per_freq_linear[fi] += mse_lin / n / 2.0;
            }
            bir_mae[c] = mae(&unit_peak(g.channel(c)), &unit_peak(r.channel(c)));
            if let (Ok(eg), Ok(er)) = (edc(g.channel(c)), edc(r.channel(c))) {
                edc_mae[c] = Some(mae(&eg, &er));
            }
        }

        let ed_diff = |b: &Bir| -> Vec<f64> {
            match (edc(&b.left), edc(&b.right)) {
                (Ok(l), Ok(rr)) => l.iter().zip(&rr).map(|(x, y)| x - y).collect(),
                _ => Vec::new(),
            }
        };
        ed_channel_difference.push((ed_diff(g), ed_diff(r)));

        pairs.push(PairMetrics {
            t60_err: [metric_delta(t60, g, r, 0), metric_delta(t60, g, r, 1)],
            drr_err: [metric_delta(drr, g, r, 0), metric_delta(drr, g, r, 1)],
            edt_err: [metric_delta(edt, g, r, 0), metric_delta(edt, g, r, 1)],
            ed_mse_per_freq,
            ed_mse_per_freq_linear,
            bir_mae,
            edc_mae,
        });
    }

    let mean_opt = |vals: Vec<f64>| {
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let collect = |sel: fn(&PairMetrics) -> [Option<f64>; 2]| {
        mean_opt(pairs.iter().flat_map(sel).flatten().collect())
    };
    let mean_ed_mse = pairs
        .iter()
        .flat_map(|p| &p.ed_mse_per_freq)
        .sum::<f64>()
        / (pairs.len() * ED_CENTER_FREQS.len()) as f64;
    let mean_bir_mae =
        pairs.iter().flat_map(|p| p.bir_mae).sum::<f64>() / (2 * pairs.len()) as f64;

    Ok(MetricReport {
        mean_t60_err: collect(|p| p.t60_err),
        mean_drr_err: collect(|p| p.drr_err),
        mean_edt_err: collect(|p| p.edt_err),
        mean_ed_mse,
        mean_bir_mae,
        mean_edc_mae: mean_opt(pairs.iter().flat_map(|p| p.edc_mae).flatten().collect()),
        pairs,
        ed_channel_difference,
    })
}

/// Aligned-column text rendering of a report.
pub fn format_report(report: &MetricReport) -> String {
    let fmt = |v: Option<f64>| match v {
        Some(x) => format!("{x:.6}"),
        None => "n/a".to_string(),
    };
    let mut out = String::new();
    out.push_str(&format!("{:<22} {}\n", "mean |dT60| (s)", fmt(report.mean_t60_err)));
    out.push_str(&format!("{:<22} {}\n", "mean |dEDT| (s)", fmt(report.mean_edt_err)));
    out.push_str(&format!("{:<22} {}\n", "mean |dDRR| (dB)", fmt(report.mean_drr_err)));
    out.push_str(&format!("{:<22} {:.6}\n", "mean ED log-MSE", report.mean_ed_mse));
    out.push_str(&format!("{:<22} {:.6}\n", "mean BIR MAE", report.mean_bir_mae));
    out.push_str(&format!("{:<22} {}\n", "mean EDC MAE", fmt(report.mean_edc_mae)));
    out
}

/// Synthetic exponential-decay IR used by tests and calibration:
/// deterministic noise shaped by `e^{-t/tau}`, where
/// `tau = t60_target / (3 ln 10)`.
pub fn exponential_ir(t60_target: f64, sample_rate: u32, len: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let tau = t60_target / (3.0 * std::f64::consts::LN_10);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|n| {
            let t = n as f64 / sample_rate as f64;
            rng.gen_range(-1.0..1.0f64) * (-t / tau).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t60_on_exact_exponential() {
        for target in [0.1, 0.3, 0.5, 1.0, 2.0] {
            let sr = 16_000;
            let len = (sr as f64 * (target * 1.5 + 0.1)) as usize;
            let x = exponential_ir(target, sr, len, 7);
            let est = t60(&x, sr).unwrap();
            assert!(
                (est - target).abs() / target < 0.05,
                "target {target}: estimate {est}"
            );
        }
    }

    #[test]
    fn edt_on_exact_exponential() {
        let sr = 16_000;
        let target = 0.6;
        let x = exponential_ir(target, sr, sr as usize, 3);
        let est = edt(&x, sr).unwrap();
        assert!((est - target).abs() / target < 0.05, "estimate {est}");
    }

    #[test]
    fn drr_infinite_for_pure_impulse() {
        let sr = 16_000;
        let mut x = vec![0.0; 1000];
        x[100] = 1.0;
        assert_eq!(drr(&x, sr).unwrap(), f64::INFINITY);
    }

    #[test]
    fn drr_zero_for_equal_split() {
        let sr = 16_000;
        let half = (DRR_DIRECT_HALF_WINDOW_S * sr as f64).round() as usize; // 40
        let mut x = vec![0.0; 2000];
        x[0] = 2.0; // peak; window [0, 40]
        x[1000] = 2.0; // equal energy outside the window
        let v = drr(&x, sr).unwrap();
        assert!(v.abs() < 1e-9, "drr {v}, half window {half}");
    }

    #[test]
    fn insufficient_decay_is_an_error() {
        let x = vec![1.0; 512]; // no decay
        assert!(t60(&x, 16_000).is_err());
    }

    #[test]
    fn identical_sets_give_zero_errors() {
        let sr = 16_000;
        let l = exponential_ir(0.4, sr, 8000, 1);
        let r = exponential_ir(0.4, sr, 8000, 2);
        let b = Bir::new(sr, l, r).unwrap();
        let report = metric_report(&[b.clone()], &[b]).unwrap();
        assert_eq!(report.mean_t60_err, Some(0.0));
        assert_eq!(report.mean_edt_err, Some(0.0));
        assert_eq!(report.mean_drr_err, Some(0.0));
        assert_eq!(report.mean_ed_mse, 0.0);
        assert_eq!(report.mean_bir_mae, 0.0);
        assert_eq!(report.mean_edc_mae, Some(0.0));
    }

    #[test]
    fn scaling_is_invisible_after_normalization() {
        let sr = 16_000;
        let l = exponential_ir(0.3, sr, 6000, 5);
        let r = exponential_ir(0.3, sr, 6000, 6);
        let a = Bir::new(sr, l.clone(), r.clone()).unwrap();
        let b = Bir::new(
            sr,
            l.iter().map(|v| v * 2.0).collect(),
            r.iter().map(|v| v * 2.0).collect(),
        )
        .unwrap();
        let report = metric_report(&[b], &[a]).unwrap();
        assert!(report.mean_bir_mae < 1e-12);
    }

    #[test]
    fn t60_difference_of_two_exponentials() {
        // closed form: T60 = 3 ln(10) tau, so |dT60| = 3 ln(10) |dtau|
        let sr = 16_000;
        let (t1, t2) = (0.4, 0.7);
        let g = Bir::new(
            sr,
            exponential_ir(t1, sr, 16_000, 11),
            exponential_ir(t1, sr, 16_000, 12),
        )
        .unwrap();
        let r = Bir::new(
            sr,
            exponential_ir(t2, sr, 16_000, 13),
            exponential_ir(t2, sr, 16_000, 14),
        )
        .unwrap();
        let report = metric_report(&[g], &[r]).unwrap();
        let want = (t1 - t2).abs();
        let got = report.mean_t60_err.unwrap();
        assert!((got - want).abs() / want < 0.05, "got {got} want {want}");
    }
}
