use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Box, GrayImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MserParams {
    pub delta: u8,
    pub min_area: usize,
    /// Upper area bound as a fraction of the image.
    pub max_area: f64,
    pub max_variation: f64,
}

impl Default for MserParams {
    fn default() -> Self {
        MserParams {
            delta: 5,
            min_area: 30,
            max_area: 0.01,
            max_variation: 0.25,
        }
    }
}

impl MserParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta == 0 {
            return Err(Error::Parameter("MSER delta must be at least 1".into()));
        }
        if self.min_area == 0 || !(self.max_area > 0.0 && self.max_area <= 1.0) {
            return Err(Error::Parameter("MSER area bounds".into()));
        }
        Ok(())
    }
}

const NONE: u32 = u32::MAX;

/// One extremal region: the connected set of pixels `<= level` that it
/// covers stays the same from `level` up to its parent's level.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub level: u8,
    pub area: u32,
    pub bbox: Box,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    head: u32,
}

/// Component tree of the lower level sets `{p : I(p) <= l}` under
/// 8-connectivity, built by union-find in increasing gray order.
#[derive(Debug, Clone)]
pub struct ComponentTree {
    width: usize,
    nodes: Vec<TreeNode>,
    // Pixel lists: every node's pixels are `area` consecutive links from `head`.
    next: Vec<u32>,
}

struct Sets {
    parent: Vec<u32>,
    size: Vec<u32>,
    tail: Vec<u32>,
    head: Vec<u32>,
    bbox: Vec<[i32; 4]>,
}

impl Sets {
    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let up = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = up;
        }
        root
    }
}

impl ComponentTree {
    pub fn build(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let n = w * h;
        let raw = img.as_raw();

        let mut counts = [0usize; 257];
        for &v in raw {
            counts[v as usize + 1] += 1;
        }
        for i in 1..257 {
            counts[i] += counts[i - 1];
        }
        let starts = counts;
        let mut order = vec![0u32; n];
        let mut fill = counts;
        for (i, &v) in raw.iter().enumerate() {
            order[fill[v as usize]] = i as u32;
            fill[v as usize] += 1;
        }

        let mut sets = Sets {
            parent: vec![NONE; n],
            size: vec![0; n],
            tail: vec![NONE; n],
            head: vec![NONE; n],
            bbox: vec![[0; 4]; n],
        };
        let mut next = vec![NONE; n];
        let mut cur_node = vec![NONE; n];
        let mut stamp = vec![u16::MAX; n];
        let mut pending: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut changed: Vec<u32> = Vec::new();

        for level in 0..256usize {
            changed.clear();
            for &p in &order[starts[level]..starts[level + 1]] {
                let pu = p as usize;
                let (x, y) = ((pu % w) as i32, (pu / w) as i32);
                sets.parent[pu] = p;
                sets.size[pu] = 1;
                sets.head[pu] = p;
                sets.tail[pu] = p;
                sets.bbox[pu] = [x, y, x, y];
                stamp[pu] = level as u16;
                changed.push(p);
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if (dx, dy) == (0, 0)
                            || nx < 0
                            || ny < 0
                            || nx >= w as i32
                            || ny >= h as i32
                        {
                            continue;
                        }
                        let q = (ny as usize * w + nx as usize) as u32;
                        if sets.parent[q as usize] == NONE {
                            continue;
                        }
                        let (a, b) = (sets.find(p), sets.find(q));
                        if a == b {
                            continue;
                        }
                        for r in [a, b] {
                            let ru = r as usize;
                            if stamp[ru] != level as u16 {
                                stamp[ru] = level as u16;
                                pending[ru].clear();
                                if cur_node[ru] != NONE {
                                    pending[ru].push(cur_node[ru]);
                                }
                                changed.push(r);
                            }
                        }
                        let (win, lose) = if sets.size[a as usize] >= sets.size[b as usize] {
                            (a, b)
                        } else {
                            (b, a)
                        };
                        let (wu, lu) = (win as usize, lose as usize);
                        sets.parent[lu] = win;
                        sets.size[wu] += sets.size[lu];
                        next[sets.tail[wu] as usize] = sets.head[lu];
                        sets.tail[wu] = sets.tail[lu];
                        let (bw, bl) = (sets.bbox[wu], sets.bbox[lu]);
                        sets.bbox[wu] = [
                            bw[0].min(bl[0]),
                            bw[1].min(bl[1]),
                            bw[2].max(bl[2]),
                            bw[3].max(bl[3]),
                        ];
                        let moved = std::mem::take(&mut pending[lu]);
                        pending[wu].extend(moved);
                    }
                }
            }
            for i in 0..changed.len() {
                let r = changed[i];
                let ru = r as usize;
                if sets.parent[ru] != r
                    || stamp[ru] != level as u16
                    || (cur_node[ru] != NONE
                        && nodes[cur_node[ru] as usize].level as usize == level)
                {
                    continue;
                }
                let id = nodes.len() as u32;
                let children = std::mem::take(&mut pending[ru]);
                for &c in &children {
                    nodes[c as usize].parent = Some(id);
                }
                let b = sets.bbox[ru];
                nodes.push(TreeNode {
                    level: level as u8,
                    area: sets.size[ru],
                    bbox: Box::from_corners(b[0], b[1], b[2], b[3]),
                    parent: None,
                    children,
                    head: sets.head[ru],
                });
                cur_node[ru] = id;
            }
        }
        ComponentTree {
            width: w,
            nodes,
            next,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Pixel indices (row-major) of a node.
    pub fn pixels(&self, node: usize) -> Vec<usize> {
        let n = &self.nodes[node];
        let mut out = Vec::with_capacity(n.area as usize);
        let mut p = n.head;
        for _ in 0..n.area {
            out.push(p as usize);
            p = self.next[p as usize];
        }
        out
    }

    /// The connected components of `{p : I(p) <= level}`, each as sorted
    /// pixel indices, ordered by their first pixel.
    pub fn regions_at(&self, level: u8) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (0..self.nodes.len())
            .filter(|&i| {
                let n = &self.nodes[i];
                n.level <= level
                    && n.parent
                        .is_none_or(|p| self.nodes[p as usize].level > level)
            })
            .map(|i| {
                let mut px = self.pixels(i);
                px.sort_unstable();
                px
            })
            .collect();
        out.sort();
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn largest_child(&self, i: usize) -> Option<usize> {
        self.nodes[i]
            .children
            .iter()
            .max_by_key(|&&c| (self.nodes[c as usize].area, std::cmp::Reverse(c)))
            .map(|&c| c as usize)
    }

    /// Area of the region containing node `i` at gray level `l` (above it).
    fn area_above(&self, i: usize, l: i32) -> u32 {
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            if self.nodes[p as usize].level as i32 > l {
                break;
            }
            cur = p as usize;
        }
        self.nodes[cur].area
    }

    /// Area at level `l` below node `i`, following the largest-child chain.
    fn area_below(&self, i: usize, l: i32) -> u32 {
        let mut cur = i;
        loop {
            if self.nodes[cur].level as i32 <= l {
                return self.nodes[cur].area;
            }
            match self.largest_child(cur) {
                Some(c) => cur = c,
                None => return 0,
            }
        }
    }

    /// Smallest stability value `(|R(l+d)| - |R(l-d)|) / |R(l)|` over the
    /// levels for which node `i` is the extremal region.
    pub fn variation(&self, i: usize, delta: u8) -> f64 {
        let n = &self.nodes[i];
        let d = delta as i32;
        let lo = n.level as i32;
        let hi = n
            .parent
            .map_or(255, |p| self.nodes[p as usize].level as i32 - 1);
        let mut candidates = vec![lo];
        if lo + d <= hi {
            candidates.push(lo + d);
        }
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            let pl = self.nodes[p as usize].level as i32;
            if pl - d > hi {
                break;
            }
            if pl - d >= lo {
                candidates.push(pl - d);
            }
            cur = p as usize;
        }
        let mut cur = i;
        while let Some(c) = self.largest_child(cur) {
            let cl = self.nodes[c].level as i32;
            if cl + d < lo {
                break;
            }
            if cl + d <= hi {
                candidates.push(cl + d);
            }
            cur = c;
        }
        candidates
            .into_iter()
            .map(|l| (self.area_above(i, l + d) - self.area_below(i, l - d)) as f64 / n.area as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

/// One-polarity MSER: dark regions on a lighter surround.
pub(crate) fn dark_regions(img: &GrayImage, p: &MserParams) -> Vec<(Box, Vec<(u32, u32)>)> {
    let tree = ComponentTree::build(img);
    let nodes = tree.nodes();
    let var: Vec<f64> = (0..nodes.len())
        .map(|i| tree.variation(i, p.delta))
        .collect();
    let max_area = p.max_area * (img.width() * img.height()) as f64;
    let w = tree.width();
    let mut out = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        let v = var[i];
        if v > p.max_variation || (n.area as usize) < p.min_area || n.area as f64 > max_area {
            continue;
        }
        // Ties go to the smaller region.
        if n.parent.is_some_and(|q| var[q as usize] < v) {
            continue;
        }
        if n.children.iter().any(|&c| var[c as usize] <= v) {
            continue;
        }
        let px = tree
            .pixels(i)
            .into_iter()
            .map(|q| ((q % w) as u32, (q / w) as u32))
            .collect();
        out.push((n.bbox, px));
    }
    out
}
