//! Brute-force k-nearest-neighbour regression (Euclidean distance, uniform weights).

use nalgebra::DMatrix;

/// Mean target of the `k` nearest stored points; equal distances go to the lower index.
pub(crate) fn predict(k: usize, points: &[Vec<f64>], targets: &[f64], x: &DMatrix<f64>) -> Vec<f64> {
    let k = k.min(points.len());
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(points.len());
    (0..x.nrows())
        .map(|i| {
            order.clear();
            order.extend(points.iter().enumerate().map(|(t, pt)| {
                let d: f64 = pt.iter().enumerate().map(|(j, v)| (v - x[(i, j)]).powi(2)).sum();
                (d, t)
            }));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < order.len() {
                order.select_nth_unstable_by(k - 1, cmp);
            }
            order[..k].iter().map(|&(_, t)| targets[t]).sum::<f64>() / k as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> (Vec<Vec<f64>>, Vec<f64>) {
        (vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![10.0, 20.0, 30.0, 40.0])
    }

    #[test]
    fn one_neighbour_at_training_point() {
        let (pts, ys) = store();
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(predict(1, &pts, &ys, &x), ys);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let (pts, ys) = store();
        // 0.5 is equidistant from points 0 and 1.
        let x = DMatrix::from_row_slice(1, 1, &[0.5]);
        assert_eq!(predict(1, &pts, &ys, &x), vec![10.0]);
        assert_eq!(predict(2, &pts, &ys, &x), vec![15.0]);
    }

    #[test]
    fn k_larger_than_store_averages_everything() {
        let (pts, ys) = store();
        let x = DMatrix::from_row_slice(1, 1, &[100.0]);
        assert_eq!(predict(25, &pts, &ys, &x), vec![25.0]);
    }
}
