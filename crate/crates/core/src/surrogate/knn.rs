use crate::matrix::Matrix;

/// K-nearest-neighbour regression on min-max normalized features.
#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    mins: Vec<f64>,
    ranges: Vec<f64>,
    points: Matrix,
    targets: Vec<f64>,
}

impl KnnModel {
    pub(crate) fn fit(x: &Matrix, y: &[f64], k: usize) -> Self {
        let d = x.n_cols();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        let ranges: Vec<f64> = mins.iter().zip(&maxs).map(|(lo, hi)| hi - lo).collect();
        let mut points = Matrix::zeros(x.n_rows(), d);
        for i in 0..x.n_rows() {
            for j in 0..d {
                points.set(i, j, normalize(x.get(i, j), mins[j], ranges[j]));
            }
        }
        Self {
            k: k.clamp(1, y.len()),
            mins,
            ranges,
            points,
            targets: y.to_vec(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let q: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(j, &v)| normalize(v, self.mins[j], self.ranges[j]))
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .rows()
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        // nearer first, then lower training index
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist[..self.k]
            .iter()
            .map(|&(_, i)| self.targets[i])
            .sum::<f64>()
            / self.k as f64
    }
}

fn normalize(v: f64, min: f64, range: f64) -> f64 {
    if range > 0.0 {
        (v - min) / range
    } else {
        0.0
    }
}
