//! Row-major image grids.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: u32, height: u32, value: T) -> Self {
        Self { width, height, data: vec![value; width as usize * height as usize] }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: u32, height: u32, data: Vec<T>) -> Option<Self> {
        (data.len() == width as usize * height as usize).then_some(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn index(&self, u: u32, v: u32) -> usize {
        v as usize * self.width as usize + u as usize
    }

    pub fn get(&self, u: u32, v: u32) -> Option<&T> {
        (u < self.width && v < self.height).then(|| &self.data[self.index(u, v)])
    }

    pub fn get_mut(&mut self, u: u32, v: u32) -> Option<&mut T> {
        if u < self.width && v < self.height {
            let i = self.index(u, v);
            Some(&mut self.data[i])
        } else {
            None
        }
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// `(u, v, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, &T)> {
        let w = self.width;
        self.data.iter().enumerate().map(move |(i, x)| ((i as u32) % w, (i as u32) / w, x))
    }
}

/// Camera-frame depth `z` in meters per pixel; 0 marks an invalid reading.
pub type DepthImage = Grid<f64>;

impl DepthImage {
    pub fn empty(width: u32, height: u32) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn depth(&self, u: u32, v: u32) -> Option<f64> {
        self.get(u, v).copied().filter(|d| *d > 0.0 && d.is_finite())
    }
}
