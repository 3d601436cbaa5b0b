use serde::{Deserialize, Serialize};

use crate::graph::GridPoint;

/// Values on the triangular truncation `{(h,t) : h + t ≤ horizon}`, stored
/// level by level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangle<T> {
    horizon: usize,
    values: Vec<T>,
}

fn offset(p: GridPoint) -> usize {
    let n = p.level();
    n * (n + 1) / 2 + p.h
}

impl<T: Clone> Triangle<T> {
    pub fn filled(horizon: usize, value: T) -> Self {
        let len = (horizon + 1) * (horizon + 2) / 2;
        Triangle {
            horizon,
            values: vec![value; len],
        }
    }
}

impl<T> Triangle<T> {
    pub fn from_fn(horizon: usize, mut f: impl FnMut(GridPoint) -> T) -> Self {
        let values = points(horizon).map(&mut f).collect();
        Triangle { horizon, values }
    }

    pub fn try_from_fn<E>(
        horizon: usize,
        mut f: impl FnMut(GridPoint) -> Result<T, E>,
    ) -> Result<Self, E> {
        let values = points(horizon).map(&mut f).collect::<Result<_, _>>()?;
        Ok(Triangle { horizon, values })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.level() <= self.horizon
    }

    pub fn get(&self, p: GridPoint) -> Option<&T> {
        if self.contains(p) {
            self.values.get(offset(p))
        } else {
            None
        }
    }

    /// Panics outside the truncation.
    pub fn at(&self, p: GridPoint) -> &T {
        self.get(p)
            .unwrap_or_else(|| panic!("{p} lies outside horizon {}", self.horizon))
    }

    pub fn set(&mut self, p: GridPoint, value: T) {
        assert!(self.contains(p), "{p} lies outside horizon {}", self.horizon);
        let i = offset(p);
        self.values[i] = value;
    }

    /// Level `n` as `[v(0,n), v(1,n-1), …, v(n,0)]`.
    pub fn level(&self, n: usize) -> &[T] {
        let start = n * (n + 1) / 2;
        &self.values[start..start + n + 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (GridPoint, &T)> {
        points(self.horizon).zip(self.values.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(GridPoint, &T) -> U) -> Triangle<U> {
        Triangle {
            horizon: self.horizon,
            values: self.iter().map(|(p, v)| f(p, v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Grid points with `h + t ≤ horizon` in level order, `h` ascending.
pub fn points(horizon: usize) -> impl Iterator<Item = GridPoint> {
    (0..=horizon).flat_map(|n| (0..=n).map(move |h| GridPoint::new(h, n - h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let tri = Triangle::from_fn(3, |p| p.h * 10 + p.t);
        assert_eq!(tri.len(), 10);
        assert_eq!(*tri.at(GridPoint::new(2, 1)), 21);
        assert_eq!(tri.level(2), &[2, 11, 20]);
        assert!(tri.get(GridPoint::new(2, 2)).is_none());
    }
}
