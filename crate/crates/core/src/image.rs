use crate::error::{Error, Result};

/// A single-channel image of unsigned gray values with 8 or 16 significant bits.
///
/// Samples are stored row-major as `u16` regardless of depth; every sample is
/// strictly below `2^bit_depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    data: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, bit_depth: u8) -> Result<Self> {
        check_dims(width, height, bit_depth)?;
        Ok(Self {
            width,
            height,
            bit_depth,
            data: vec![0; width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, bit_depth: u8, data: Vec<u16>) -> Result<Self> {
        check_dims(width, height, bit_depth)?;
        if data.len() != width * height {
            return Err(Error::input(format!(
                "expected {} samples for a {}x{} image, got {}",
                width * height,
                width,
                height,
                data.len()
            )));
        }
        let limit = 1u32 << bit_depth;
        if let Some(pos) = data.iter().position(|&v| u32::from(v) >= limit) {
            return Err(Error::input(format!(
                "sample {} at index {} exceeds {}-bit range",
                data[pos], pos, bit_depth
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            data,
        })
    }

    pub fn from_fn<F>(width: usize, height: usize, bit_depth: u8, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> u16,
    {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, bit_depth, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// Number of representable gray levels, `2^bit_depth`.
    pub fn levels(&self) -> usize {
        1 << self.bit_depth
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u16> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    /// Sample at `(x, y)` with coordinates clamped to the image rectangle.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u16 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        debug_assert!(u32::from(v) < (1u32 << self.bit_depth));
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[u16] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Global histogram with `2^bit_depth` bins.
    pub fn histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; self.levels()];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }
}

fn check_dims(width: usize, height: usize, bit_depth: u8) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::input(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if bit_depth != 8 && bit_depth != 16 {
        return Err(Error::input(format!(
            "unsupported bit depth {bit_depth}; expected 8 or 16"
        )));
    }
    Ok(())
}
