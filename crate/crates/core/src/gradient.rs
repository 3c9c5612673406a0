//! 3x3 Sobel gradients with replicated borders.

/// Per-pixel horizontal and vertical Sobel responses of a row-major channel.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl Gradients {
    #[inline]
    pub fn at(&self, x: u32, y: u32) -> (f64, f64) {
        let i = y as usize * self.width as usize + x as usize;
        (self.gx[i], self.gy[i])
    }
}

pub fn sobel(channel: &[f64], width: u32, height: u32) -> Gradients {
    let (w, h) = (width as i64, height as i64);
    assert_eq!(channel.len() as i64, w * h);
    let px = |x: i64, y: i64| -> f64 {
        let x = x.clamp(0, w - 1);
        let y = y.clamp(0, h - 1);
        channel[(y * w + x) as usize]
    };
    let n = channel.len();
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    for y in 0..h {
        for x in 0..w {
            let dx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            let dy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            gx.push(dx);
            gy.push(dy);
        }
    }
    Gradients {
        width,
        height,
        gx,
        gy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_step_edge() {
        // columns 0..3 dark, 3..6 bright
        let (w, h) = (6u32, 4u32);
        let ch: Vec<f64> = (0..w * h).map(|i| if i % w < 3 { 0.0 } else { 10.0 }).collect();
        let g = sobel(&ch, w, h);
        for y in 0..h {
            assert_eq!(g.at(2, y), (40.0, 0.0));
            assert_eq!(g.at(3, y), (40.0, 0.0));
            assert_eq!(g.at(0, y), (0.0, 0.0));
            assert_eq!(g.at(5, y), (0.0, 0.0));
        }
    }
}
