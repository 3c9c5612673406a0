//! SLIC clustering in (L, a, b, x/m', y/m') with m' = target_size / compactness,
//! followed by a connectivity pass that folds orphaned fragments into the
//! largest adjacent superpixel.

use std::collections::VecDeque;

use super::{compute_stats, SuperpixelFrame};
use crate::error::{Error, Result};
use crate::seqdata::LabImage;

pub const SLIC_ITERATIONS: usize = 10;

const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Center {
    lab: [f64; 3],
    x: f64,
    y: f64,
}

pub fn segment_frame(image: &LabImage, target_size: u32, compactness: f64) -> Result<SuperpixelFrame> {
    let labels = segment_labels(image, target_size, compactness)?;
    let stats = compute_stats(image, &labels);
    Ok(SuperpixelFrame::new(image.width(), image.height(), labels, stats))
}

/// Contiguous, 4-connected label map (ids numbered in raster order of first
/// appearance).
pub fn segment_labels(image: &LabImage, target_size: u32, compactness: f64) -> Result<Vec<u32>> {
    let (w, h) = (image.width(), image.height());
    if w == 0 || h == 0 {
        return Err(Error::InvalidInput("cannot segment an empty image".into()));
    }
    if target_size < 4 {
        return Err(Error::InvalidInput(format!("superpixel size {target_size} is below 4 px")));
    }
    if target_size > w.min(h) {
        return Err(Error::InvalidInput(format!(
            "superpixel size {target_size} exceeds image extent {w}x{h}"
        )));
    }
    if !(compactness > 0.0 && compactness.is_finite()) {
        return Err(Error::InvalidInput(format!("compactness must be positive, got {compactness}")));
    }

    let mut centers = seed_centers(image, target_size);
    let labels = assign(image, &mut centers, target_size, compactness);
    Ok(enforce_connectivity(&labels, w, h))
}

fn color_gradient(image: &LabImage, x: u32, y: u32) -> f64 {
    let (w, h) = (image.width(), image.height());
    let dist2 = |a: [f64; 3], b: [f64; 3]| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
    let gx = dist2(image.get((x + 1).min(w - 1), y), image.get(x.saturating_sub(1), y));
    let gy = dist2(image.get(x, (y + 1).min(h - 1)), image.get(x, y.saturating_sub(1)));
    gx + gy
}

/// Regular grid of spacing `target_size`, each seed moved to the lowest-gradient
/// pixel of its 3x3 neighbourhood when that is strictly lower than the
/// gradient at the seed itself.
fn seed_centers(image: &LabImage, target_size: u32) -> Vec<Center> {
    let (w, h) = (image.width(), image.height());
    let nx = ((w as f64 / target_size as f64).round() as u32).max(1);
    let ny = ((h as f64 / target_size as f64).round() as u32).max(1);
    let (sx, sy) = (w as f64 / nx as f64, h as f64 / ny as f64);

    let mut centers = Vec::with_capacity((nx * ny) as usize);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (i as f64 + 0.5) * sx - 0.5;
            let cy = (j as f64 + 0.5) * sy - 0.5;
            let rx = (cx.round() as u32).min(w - 1);
            let ry = (cy.round() as u32).min(h - 1);
            let mut best = color_gradient(image, rx, ry);
            let mut moved: Option<(u32, u32)> = None;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (px, py) = (rx as i64 + dx, ry as i64 + dy);
                    if px < 0 || py < 0 || px >= w as i64 || py >= h as i64 || (dx == 0 && dy == 0) {
                        continue;
                    }
                    let g = color_gradient(image, px as u32, py as u32);
                    if g < best {
                        best = g;
                        moved = Some((px as u32, py as u32));
                    }
                }
            }
            let (x, y, lab) = match moved {
                Some((px, py)) => (px as f64, py as f64, image.get(px, py)),
                None => (cx, cy, image.get(rx, ry)),
            };
            centers.push(Center { lab, x, y });
        }
    }
    centers
}

fn assign(image: &LabImage, centers: &mut [Center], target_size: u32, compactness: f64) -> Vec<u32> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let s = target_size as f64;
    let m_prime = s / compactness;
    let spatial = 1.0 / (m_prime * m_prime);
    let pixels = image.pixels();

    let mut labels = vec![UNASSIGNED; w * h];
    let mut dist = vec![f64::INFINITY; w * h];

    for _ in 0..SLIC_ITERATIONS {
        labels.fill(UNASSIGNED);
        dist.fill(f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let x0 = (c.x - s).floor().max(0.0) as usize;
            let x1 = ((c.x + s).ceil() as usize).min(w - 1);
            let y0 = (c.y - s).floor().max(0.0) as usize;
            let y1 = ((c.y + s).ceil() as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = y * w + x;
                    let p = pixels[i];
                    let dc = (p[0] - c.lab[0]).powi(2) + (p[1] - c.lab[1]).powi(2) + (p[2] - c.lab[2]).powi(2);
                    let ds = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                    let d = dc + ds * spatial;
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = k as u32;
                    }
                }
            }
        }

        // pixels no window reached go to the nearest center overall
        for i in 0..w * h {
            if labels[i] != UNASSIGNED {
                continue;
            }
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let p = pixels[i];
            let mut best = f64::INFINITY;
            for (k, c) in centers.iter().enumerate() {
                let dc = (p[0] - c.lab[0]).powi(2) + (p[1] - c.lab[1]).powi(2) + (p[2] - c.lab[2]).powi(2);
                let d = dc + ((x - c.x).powi(2) + (y - c.y).powi(2)) * spatial;
                if d < best {
                    best = d;
                    labels[i] = k as u32;
                }
            }
        }

        let mut acc = vec![[0.0f64; 6]; centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            let a = &mut acc[l as usize];
            let p = pixels[i];
            a[0] += p[0];
            a[1] += p[1];
            a[2] += p[2];
            a[3] += (i % w) as f64;
            a[4] += (i / w) as f64;
            a[5] += 1.0;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a[5] > 0.0 {
                c.lab = [a[0] / a[5], a[1] / a[5], a[2] / a[5]];
                c.x = a[3] / a[5];
                c.y = a[4] / a[5];
            }
        }
    }
    labels
}

/// Keeps the largest 4-connected fragment of every label, merges the other
/// fragments into the adjacent superpixel with the most pixels, and renumbers
/// labels contiguously in raster order.
fn enforce_connectivity(labels: &[u32], width: u32, height: u32) -> Vec<u32> {
    let (w, h) = (width as usize, height as usize);
    let mut comp = vec![usize::MAX; w * h];
    let mut comp_label: Vec<u32> = Vec::new();
    let mut comp_size: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comp_label.len();
        let label = labels[start];
        comp[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == usize::MAX && labels[j] == label {
                    comp[j] = id;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        comp_label.push(label);
        comp_size.push(size);
    }

    let n_comp = comp_label.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for y in 0..h {
        for x in 0..w {
            let a = comp[y * w + x];
            for b in [
                (x + 1 < w).then(|| comp[y * w + x + 1]),
                (y + 1 < h).then(|| comp[(y + 1) * w + x]),
            ]
            .into_iter()
            .flatten()
            {
                if a != b {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
        adj.dedup();
    }

    // main fragment per label: largest, earliest in raster order on ties
    let max_label = comp_label.iter().copied().max().unwrap_or(0) as usize;
    let mut main: Vec<Option<usize>> = vec![None; max_label + 1];
    for c in 0..n_comp {
        let l = comp_label[c] as usize;
        match main[l] {
            Some(m) if comp_size[m] >= comp_size[c] => {}
            _ => main[l] = Some(c),
        }
    }

    let mut resolved: Vec<Option<u32>> = vec![None; n_comp];
    let mut label_size = vec![0usize; max_label + 1];
    for (l, m) in main.iter().enumerate() {
        if let Some(m) = *m {
            resolved[m] = Some(l as u32);
            label_size[l] = comp_size[m];
        }
    }

    let mut pending: Vec<usize> = (0..n_comp).filter(|&c| resolved[c].is_none()).collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&c| {
            let target = adjacency[c]
                .iter()
                .filter_map(|&n| resolved[n])
                .max_by(|&a, &b| {
                    label_size[a as usize]
                        .cmp(&label_size[b as usize])
                        .then(b.cmp(&a))
                });
            match target {
                Some(l) => {
                    resolved[c] = Some(l);
                    label_size[l as usize] += comp_size[c];
                    false
                }
                None => true,
            }
        });
        assert!(pending.len() < before, "connectivity pass made no progress");
    }

    let mut remap = vec![UNASSIGNED; max_label + 1];
    let mut next = 0u32;
    comp.iter()
        .map(|&c| {
            let l = resolved[c].expect("all fragments resolved") as usize;
            if remap[l] == UNASSIGNED {
                remap[l] = next;
                next += 1;
            }
            remap[l]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn is_four_connected(labels: &[u32], w: usize, h: usize) -> bool {
        let n = labels.iter().map(|&l| l as usize + 1).max().unwrap();
        let mut seen = vec![false; w * h];
        let mut comps = vec![0; n];
        for s in 0..w * h {
            if seen[s] {
                continue;
            }
            comps[labels[s] as usize] += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                let (x, y) = (i % w, i / w);
                let mut nb = vec![];
                if x > 0 { nb.push(i - 1) }
                if x + 1 < w { nb.push(i + 1) }
                if y > 0 { nb.push(i - w) }
                if y + 1 < h { nb.push(i + w) }
                for j in nb {
                    if !seen[j] && labels[j] == labels[i] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        comps.iter().all(|&c| c == 1)
    }

    #[test]
    fn uniform_image_gives_regular_grid() {
        let img = LabImage::from_fn(64, 64, |_, _| [50.0, 0.0, 0.0]);
        let f = segment_frame(&img, 16, 10.0).unwrap();
        assert_eq!(f.len(), 16);
        for s in &f.stats {
            assert!((255..=289).contains(&s.pixel_count), "{}", s.pixel_count);
        }
        // block layout: label of (x, y) depends only on (x / 16, y / 16)
        for y in 0..64 {
            for x in 0..64 {
                assert_eq!(f.label_at(x, y), (y / 16) * 4 + x / 16);
            }
        }
    }

    #[test]
    fn image_equal_to_target_size_is_one_superpixel() {
        let img = LabImage::from_fn(8, 8, |x, y| [(x * y) as f64, 0.0, 0.0]);
        let f = segment_frame(&img, 8, 10.0).unwrap();
        assert_eq!(f.len(), 1);
        assert!(f.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn boundary_adherence_on_step_image() {
        let edge = 30;
        let img = LabImage::from_fn(64, 64, |x, _| if x < edge { [0.0, 0.0, 0.0] } else { [100.0, 0.0, 0.0] });
        let f = segment_frame(&img, 16, 10.0).unwrap();
        let mut extent: HashMap<u32, (u32, u32)> = HashMap::new();
        for y in 0..64 {
            for x in 0..64 {
                let e = extent.entry(f.label_at(x, y)).or_insert((u32::MAX, 0));
                e.0 = e.0.min(x);
                e.1 = e.1.max(x);
            }
        }
        for (l, (lo, hi)) in extent {
            let straddles = lo + 1 < edge && hi > edge;
            assert!(!straddles, "superpixel {l} spans x={lo}..={hi} across edge {edge}");
        }
    }

    #[test]
    fn textured_image_is_contiguous_and_connected() {
        let img = LabImage::from_fn(57, 41, |x, y| {
            let v = ((x * 7 + y * 13) % 23) as f64 * 4.0;
            [v, (x as f64).sin() * 20.0, (y as f64).cos() * 20.0]
        });
        let labels = segment_labels(&img, 9, 10.0).unwrap();
        let n = labels.iter().map(|&l| l as usize + 1).max().unwrap();
        let mut present = vec![false; n];
        for &l in &labels {
            present[l as usize] = true;
        }
        assert!(present.iter().all(|&p| p));
        assert!(is_four_connected(&labels, 57, 41));
        assert_eq!(labels, segment_labels(&img, 9, 10.0).unwrap());
    }

    #[test]
    fn rejects_bad_sizes() {
        let img = LabImage::from_fn(10, 20, |_, _| [0.0; 3]);
        assert!(segment_labels(&img, 11, 10.0).is_err());
        assert!(segment_labels(&img, 3, 10.0).is_err());
        assert!(segment_labels(&img, 10, 0.0).is_err());
    }

    #[test]
    fn orphan_fragments_are_merged() {
        // label 0 split into two fragments; the small one must join a neighbour
        let labels = vec![
            0, 0, 1, 0, //
            0, 0, 1, 1, //
            2, 2, 2, 2, //
        ];
        let out = enforce_connectivity(&labels, 4, 3);
        assert!(is_four_connected(&out, 4, 3));
        assert_eq!(out[3], out[2]);
        assert_eq!(out.iter().copied().max().unwrap(), 2);
    }
}
