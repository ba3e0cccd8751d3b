use serde::Serialize;

/// Dense row-major container over the `(d_i, t_j)` parameter grid.
///
/// The first index runs over scales, the second over times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid<T> {
    n_d: usize,
    n_t: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_fn(n_d: usize, n_t: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n_d * n_t);
        for i in 0..n_d {
            for j in 0..n_t {
                data.push(f(i, j));
            }
        }
        Grid { n_d, n_t, data }
    }

    /// Builds a grid from values listed in row-major `(i, j)` order.
    pub fn from_vec(n_d: usize, n_t: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n_d * n_t, "grid data length");
        Grid { n_d, n_t, data }
    }

    pub fn n_d(&self) -> usize {
        self.n_d
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n_t + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.n_t + j]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let n_t = self.n_t;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, v)| ((k / n_t, k % n_t), v))
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            n_d: self.n_d,
            n_t: self.n_t,
            data: self.data.iter().map(&mut f).collect(),
        }
    }
}
