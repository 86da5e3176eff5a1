//! Sliding-window grid planning.

use super::PatchError;

/// Window offsets tiling an image: along each axis the offsets step by
/// `stride` from 0, with a final flush offset at `dim − patch` whenever
/// the stride does not land there exactly. Every pixel of the image is
/// covered by at least one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    patch: u32,
    stride: u32,
    offsets: Vec<(u32, u32)>,
}

impl PatchGrid {
    pub fn patch(&self) -> u32 {
        self.patch
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    /// Window origins in row-major order.
    pub fn offsets(&self) -> &[(u32, u32)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

fn axis_offsets(dim: u32, patch: u32, stride: u32) -> Vec<u32> {
    let last = dim - patch;
    let mut offsets = Vec::with_capacity((last / stride + 2) as usize);
    let mut at = 0;
    loop {
        if at >= last {
            offsets.push(last);
            break;
        }
        offsets.push(at);
        at += stride;
    }
    offsets
}

/// Plans the window grid for a `width`×`height` image.
pub fn plan_grid(width: u32, height: u32, patch: u32, stride: u32) -> Result<PatchGrid, PatchError> {
    if stride == 0 || stride > patch {
        return Err(PatchError::InvalidStride { stride, patch });
    }
    if patch > width || patch > height {
        return Err(PatchError::PatchLargerThanImage {
            patch,
            width,
            height,
        });
    }
    let xs = axis_offsets(width, patch, stride);
    let ys = axis_offsets(height, patch, stride);
    let mut offsets = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            offsets.push((x, y));
        }
    }
    Ok(PatchGrid {
        patch,
        stride,
        offsets,
    })
}
