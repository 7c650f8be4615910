use crate::rng::{derive_seed, Rng};
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyOptions {
    pub samples: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Real unit direction of the exceptional set at the nominal point; the
    /// intrinsic coordinate is the projection of `p* - p_nominal` onto it.
    pub tangent: Option<Vec<f64>>,
    /// Codimension of the exceptional set, the expected mean of the statistic.
    pub codim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyRow {
    pub sample: usize,
    pub status: String,
    pub p_hat: Vec<f64>,
    pub p_star: Option<Vec<C64>>,
    pub distance: Option<f64>,
    /// `|p_hat - p*|^2 / sigma^2`.
    pub chi2stat: Option<f64>,
    pub intrinsic: Option<f64>,
}

impl StudyRow {
    pub fn csv_header(m: usize) -> String {
        let mut h = vec!["sample".to_string(), "status".to_string()];
        h.extend((1..=m).map(|i| format!("p_hat{i}")));
        h.extend((1..=m).map(|i| format!("p_star{i}")));
        h.extend(["distance", "chi2stat", "intrinsic"].map(String::from));
        h.join(",")
    }

    pub fn csv_line(&self) -> String {
        let mut f = vec![self.sample.to_string(), self.status.clone()];
        f.extend(self.p_hat.iter().map(|v| format!("{v:.17e}")));
        match &self.p_star {
            Some(p) => f.extend(p.iter().map(|v| format!("{:.17e}", v.re))),
            None => f.extend(self.p_hat.iter().map(|_| String::new())),
        }
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        f.push(opt(self.distance));
        f.push(opt(self.chi2stat));
        f.push(opt(self.intrinsic));
        f.join(",")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Histogram {
    pub label: String,
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
    pub underflow: usize,
    pub overflow: usize,
}

/// Bins of width `width` starting at `lo`.
pub fn histogram(label: &str, values: &[f64], lo: f64, width: f64, bins: usize) -> Histogram {
    let mut h = Histogram { label: label.into(), lo, width, counts: vec![0; bins], underflow: 0, overflow: 0 };
    for &v in values {
        let k = ((v - lo) / width).floor();
        if k < 0.0 {
            h.underflow += 1;
        } else if k >= bins as f64 {
            h.overflow += 1;
        } else {
            h.counts[k as usize] += 1;
        }
    }
    h
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudySummary {
    pub samples: usize,
    pub recovered: usize,
    pub sigma: f64,
    pub codim: usize,
    pub mean_chi2: Option<f64>,
    pub intrinsic_std: Option<f64>,
    pub histograms: Vec<Histogram>,
    pub rows: Vec<StudyRow>,
}

fn mean_std(v: &[f64]) -> Option<(f64, f64)> {
    if v.len() < 2 {
        return None;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    Some((m, var.sqrt()))
}

/// Perturb `p_nominal` by `N(0, sigma^2 I)` per sample and run `recover` on each.
///
/// Samples run in parallel; sample `i` uses seed `derive_seed(opts.seed, i)` for
/// both its perturbation and its recovery.
pub fn sample_study<F>(p_nominal: &[f64], opts: &StudyOptions, recover: F) -> StudySummary
where
    F: Fn(&[C64], u64) -> Result<Vec<C64>, String> + Sync,
{
    let m = p_nominal.len();
    let sigma = opts.sigma;
    let rows: Vec<StudyRow> = (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(opts.seed, i as u64);
            let mut rng = Rng::new(seed);
            let p_hat: Vec<f64> = p_nominal.iter().map(|&p| p + sigma * rng.gaussian()).collect();
            let pc: Vec<C64> = p_hat.iter().map(|&v| C64::new(v, 0.0)).collect();
            match recover(&pc, derive_seed(seed, 7)) {
                Ok(p_star) => {
                    let d2: f64 = pc.iter().zip(&p_star).map(|(a, b)| (a - b).norm_sqr()).sum();
                    let intrinsic = opts.tangent.as_ref().map(|t| {
                        t.iter().zip(&p_star).zip(p_nominal).map(|((ti, ps), pn)| ti * (ps.re - pn)).sum()
                    });
                    StudyRow {
                        sample: i,
                        status: "recovered".into(),
                        p_hat,
                        p_star: Some(p_star),
                        distance: Some(d2.sqrt()),
                        chi2stat: Some(d2 / (sigma * sigma)),
                        intrinsic,
                    }
                }
                Err(e) => StudyRow {
                    sample: i,
                    status: format!("failed: {}", e.replace(',', ";")),
                    p_hat,
                    p_star: None,
                    distance: None,
                    chi2stat: None,
                    intrinsic: None,
                },
            }
        })
        .collect();
    let ok: Vec<&StudyRow> = rows.iter().filter(|r| r.p_star.is_some()).collect();
    let chi: Vec<f64> = ok.iter().filter_map(|r| r.chi2stat).collect();
    let mean_chi2 = if chi.is_empty() { None } else { Some(chi.iter().sum::<f64>() / chi.len() as f64) };
    let intr: Vec<f64> = ok.iter().filter_map(|r| r.intrinsic).collect();
    let bins = 40;
    let width = sigma / 5.0;
    let lo = -4.0 * sigma;
    let mut histograms = Vec::new();
    for k in 0..m {
        let vals: Vec<f64> = ok.iter().map(|r| r.p_star.as_ref().unwrap()[k].re - p_nominal[k]).collect();
        histograms.push(histogram(&format!("p_star{} - nominal", k + 1), &vals, lo, width, bins));
    }
    if !intr.is_empty() {
        histograms.push(histogram("intrinsic", &intr, lo, width, bins));
    }
    StudySummary {
        samples: opts.samples,
        recovered: ok.len(),
        sigma,
        codim: opts.codim,
        mean_chi2,
        intrinsic_std: mean_std(&intr).map(|(_, s)| s),
        histograms,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_edges() {
        let h = histogram("x", &[-1.0, -0.5, 0.0, 0.49, 0.5, 2.0], -0.5, 0.5, 2);
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.underflow, 1);
        assert_eq!(h.overflow, 2);
    }

    #[test]
    fn projection_onto_a_line() {
        // exceptional set p1 = p2; nearest point is the midpoint
        let opts = StudyOptions { samples: 400, sigma: 0.1, seed: 3, tangent: Some(vec![0.5f64.sqrt(); 2]), codim: 1 };
        let s = sample_study(&[1.0, 1.0], &opts, |p, _| {
            let m = (p[0] + p[1]) / 2.0;
            Ok(vec![m, m])
        });
        assert_eq!(s.recovered, 400);
        let c = s.mean_chi2.unwrap();
        assert!((0.8..1.2).contains(&c), "{c}");
        let sd = s.intrinsic_std.unwrap();
        assert!((sd / 0.1 - 1.0).abs() < 0.15, "{sd}");
        assert_eq!(StudyRow::csv_header(2).split(',').count(), s.rows[0].csv_line().split(',').count());
    }
}
