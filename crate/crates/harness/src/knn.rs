//! k-nearest-neighbour baseline on time-averaged indicator vectors.

use nr_cba_core::adaptation::CodebookChoice;
use nr_cba_core::features::LabeledSample;

pub struct Knn {
    k: usize,
    points: Vec<(Vec<f64>, CodebookChoice)>,
}

impl Knn {
    pub fn fit(k: usize, data: &[LabeledSample<f64>]) -> Self {
        Knn {
            k: k.max(1),
            points: data.iter().map(|s| (s.time_average(), s.label)).collect(),
        }
    }

    /// Majority of the `k` nearest points (distance ties by insertion
    /// order); a split vote goes to Type I.
    pub fn predict(&self, sample: &LabeledSample<f64>) -> CodebookChoice {
        let x = sample.time_average();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let votes = dist
            .iter()
            .take(self.k)
            .filter(|(_, i)| self.points[*i].1 == CodebookChoice::ETypeII)
            .count();
        let n = self.k.min(dist.len());
        if 2 * votes > n {
            CodebookChoice::ETypeII
        } else {
            CodebookChoice::TypeI
        }
    }

    pub fn accuracy(&self, data: &[LabeledSample<f64>]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data.iter().filter(|s| self.predict(s) == s.label).count();
        hits as f64 / data.len() as f64
    }
}
