use super::ConservativeError;

/// Symmetric sparse matrix in compressed row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpd {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSpd {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets. Duplicates are summed in
    /// the order they appear, so the result depends only on the triplet sequence.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SparseSpd {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: equal keys keep insertion order
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseSpd { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(move |(&j, &a)| (a - self.get(j, i)).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// Outcome of a converged solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - M x|| / ||b||` of the returned iterate.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients. Stops once the relative residual falls to
/// `rel_tol`; `max_iter` defaults to ten times the dimension.
pub fn solve_spd(m: &SparseSpd, b: &[f64], rel_tol: f64, max_iter: Option<usize>) -> Result<Solution, ConservativeError> {
    assert_eq!(b.len(), m.n());
    let n = m.n();
    let max_iter = max_iter.unwrap_or(10 * n.max(1));
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(Solution { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let inv_diag: Vec<f64> = m
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut it = 0;
    loop {
        // restart from the true residual whenever the recurrence claims convergence
        m.mul_into(&x, &mut q);
        let mut r: Vec<f64> = b.iter().zip(&q).map(|(a, c)| a - c).collect();
        let residual = dot(&r, &r).sqrt() / bnorm;
        if residual <= rel_tol {
            return Ok(Solution { x, iterations: it, residual });
        }
        if it >= max_iter {
            return Err(ConservativeError::NotConverged { iterations: it, residual });
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let start = it;
        while it < max_iter {
            m.mul_into(&p, &mut q);
            let pq = dot(&p, &q);
            if pq <= 0.0 {
                break;
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            it += 1;
            if dot(&r, &r).sqrt() / bnorm <= rel_tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if it == start {
            m.mul_into(&x, &mut q);
            let residual = b.iter().zip(&q).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt() / bnorm;
            return Err(ConservativeError::NotConverged { iterations: it, residual });
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn duplicates_sum_in_order() {
        let m = SparseSpd::from_triplets(2, &[(1, 1, 1.0), (0, 0, 2.0), (1, 1, 3.0), (0, 1, 0.5), (1, 0, 0.5)]);
        assert_eq!(m.to_dense(), vec![vec![2.0, 0.5], vec![0.5, 4.0]]);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.asymmetry(), 0.0);
        assert_eq!(m.row_sums(), vec![2.5, 4.5]);
    }

    #[test]
    fn diagonal_solve_is_exact() {
        let m = SparseSpd::from_triplets(3, &[(0, 0, 2.0), (1, 1, 4.0), (2, 2, 8.0)]);
        let s = solve_spd(&m, &[1.0, 1.0, 1.0], 1e-12, None).unwrap();
        assert_eq!(s.x, vec![0.5, 0.25, 0.125]);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn recovers_random_solution() {
        // 1D Laplacian plus a shift: SPD and banded
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let m = SparseSpd::from_triplets(n, &t);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = m.mul(&x);
        let s = solve_spd(&m, &b, 1e-14, None).unwrap();
        assert!(s.x.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn reports_non_convergence() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let m = SparseSpd::from_triplets(n, &t);
        let b = vec![1.0; n];
        let err = solve_spd(&m, &b, 1e-14, Some(3)).unwrap_err();
        assert!(matches!(err, ConservativeError::NotConverged { iterations: 3, .. }));
    }
}
