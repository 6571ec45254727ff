use super::{BinaryImage, Box};

/// Outer border of one 8-connected white component, with its place in the
/// containment hierarchy.
///
/// Level 1 contours are components not enclosed by any other component.
/// A level 2 contour sits inside a hole of its level 1 parent, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourNode {
    /// Border pixels in clockwise (screen) order, starting at the component's
    /// first pixel in raster order.
    pub polygon: Vec<(i32, i32)>,
    /// Pixels enclosed by the outer border, holes and their contents included.
    pub area: usize,
    /// Pixels belonging to the component itself.
    pub pixel_count: usize,
    pub bbox: Box,
    /// Bounding boxes of the component's holes.
    pub holes: Vec<Box>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub level: usize,
}

const N8: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const N4: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

struct Labels {
    labels: Vec<u32>,
    count: usize,
}

fn label(img: &BinaryImage, white: bool, nbrs: &[(isize, isize)]) -> Labels {
    let (w, h) = (img.width(), img.height());
    let raw = img.as_raw();
    let mut labels = vec![0u32; w * h];
    let mut count = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if (raw[start] != 0) != white || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for &(dx, dy) in nbrs {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if (raw[j] != 0) == white && labels[j] == 0 {
                    labels[j] = count;
                    stack.push(j);
                }
            }
        }
    }
    Labels {
        labels,
        count: count as usize,
    }
}

/// Labels 8-connected white components, 1-based; 0 marks black pixels.
/// Labels are assigned in raster order of each component's first pixel.
pub fn label_components(img: &BinaryImage) -> (Vec<u32>, usize) {
    let l = label(img, true, &N8);
    (l.labels, l.count)
}

#[derive(Clone)]
struct Stats {
    first: usize,
    count: usize,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

fn stats(labels: &[u32], count: usize, w: usize) -> Vec<Stats> {
    let mut s: Vec<Option<Stats>> = vec![None; count];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = (i % w, i / w);
        match &mut s[l as usize - 1] {
            slot @ None => {
                *slot = Some(Stats {
                    first: i,
                    count: 1,
                    x0: x,
                    y0: y,
                    x1: x,
                    y1: y,
                })
            }
            Some(st) => {
                st.count += 1;
                st.x0 = st.x0.min(x);
                st.x1 = st.x1.max(x);
                st.y1 = st.y1.max(y);
            }
        }
    }
    s.into_iter()
        .map(|o| o.expect("every label has pixels"))
        .collect()
}

/// Border following over 8-connected white components (black regions are
/// 4-connected), with containment hierarchy, hole boxes and enclosed areas.
/// Output is ordered by bounding-box (top, left).
pub fn find_contours(img: &BinaryImage) -> Vec<ContourNode> {
    let (w, h) = (img.width(), img.height());
    let white = label(img, true, &N8);
    if white.count == 0 {
        return Vec::new();
    }
    let black = label(img, false, &N4);
    let wstats = stats(&white.labels, white.count, w);
    let bstats = stats(&black.labels, black.count, w);

    // Black components touching the frame are background, the rest holes.
    let mut is_hole = vec![true; black.count];
    for x in 0..w {
        for y in [0, h - 1] {
            let l = black.labels[y * w + x];
            if l != 0 {
                is_hole[l as usize - 1] = false;
            }
        }
    }
    for y in 0..h {
        for x in [0, w - 1] {
            let l = black.labels[y * w + x];
            if l != 0 {
                is_hole[l as usize - 1] = false;
            }
        }
    }

    // A hole's owner is the white component just above its first pixel.
    let mut hole_owner = vec![usize::MAX; black.count];
    let mut holes_of: Vec<Vec<usize>> = vec![Vec::new(); white.count];
    for (b, st) in bstats.iter().enumerate() {
        if is_hole[b] {
            let above = white.labels[st.first - w] as usize;
            debug_assert!(above != 0);
            hole_owner[b] = above - 1;
            holes_of[above - 1].push(b);
        }
    }

    // A component's parent owns the black region just above its first pixel.
    let mut parent: Vec<Option<usize>> = vec![None; white.count];
    let mut inside_hole: Vec<Vec<usize>> = vec![Vec::new(); black.count];
    for (c, st) in wstats.iter().enumerate() {
        if st.first >= w {
            let b = black.labels[st.first - w] as usize;
            debug_assert!(b != 0);
            if is_hole[b - 1] {
                parent[c] = Some(hole_owner[b - 1]);
                inside_hole[b - 1].push(c);
            }
        }
    }

    let mut level = vec![0usize; white.count];
    for c in 0..white.count {
        let mut depth = 1;
        let mut p = parent[c];
        while let Some(q) = p {
            depth += 1;
            p = parent[q];
        }
        level[c] = depth;
    }

    // Enclosed area, deepest components first.
    let mut order: Vec<usize> = (0..white.count).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(level[c]));
    let mut area = vec![0usize; white.count];
    for &c in &order {
        let mut a = wstats[c].count;
        for &b in &holes_of[c] {
            a += bstats[b].count;
            a += inside_hole[b].iter().map(|&d| area[d]).sum::<usize>();
        }
        area[c] = a;
    }

    let mut idx: Vec<usize> = (0..white.count).collect();
    idx.sort_by_key(|&c| (wstats[c].y0, wstats[c].x0, wstats[c].first));
    let mut pos = vec![0usize; white.count];
    for (p, &c) in idx.iter().enumerate() {
        pos[c] = p;
    }

    let to_box = |s: &Stats| Box::from_corners(s.x0 as i32, s.y0 as i32, s.x1 as i32, s.y1 as i32);
    let mut nodes: Vec<ContourNode> = idx
        .iter()
        .map(|&c| ContourNode {
            polygon: trace_border(&white.labels, w, h, wstats[c].first),
            area: area[c],
            pixel_count: wstats[c].count,
            bbox: to_box(&wstats[c]),
            holes: holes_of[c].iter().map(|&b| to_box(&bstats[b])).collect(),
            parent: parent[c].map(|p| pos[p]),
            children: Vec::new(),
            level: level[c],
        })
        .collect();
    for i in 0..nodes.len() {
        if let Some(p) = nodes[i].parent {
            nodes[p].children.push(i);
        }
    }
    nodes
}

/// Moore-neighbour tracing of the outer border starting at the component's
/// first raster pixel. Stops when the walk is back at the start pixel and
/// about to repeat its first move.
fn trace_border(labels: &[u32], w: usize, h: usize, first: usize) -> Vec<(i32, i32)> {
    let lab = labels[first];
    let inside = |x: isize, y: isize| {
        x >= 0
            && y >= 0
            && x < w as isize
            && y < h as isize
            && labels[y as usize * w + x as usize] == lab
    };
    let dir_of = |dx: isize, dy: isize| N8.iter().position(|&d| d == (dx, dy)).unwrap();

    let s = ((first % w) as isize, (first / w) as isize);
    let mut poly = vec![(s.0 as i32, s.1 as i32)];
    // Entered from the west: that neighbour is outside by raster order.
    let (mut p, mut back) = (s, 4usize);
    let mut first_move = None;
    let limit = 4 * w * h + 8;
    for _ in 0..limit {
        let Some(d) = (1..=8)
            .map(|i| (back + i) % 8)
            .find(|&d| inside(p.0 + N8[d].0, p.1 + N8[d].1))
        else {
            break;
        };
        let q = (p.0 + N8[d].0, p.1 + N8[d].1);
        if p == s {
            match first_move {
                None => first_move = Some(q),
                Some(f) if f == q => break,
                Some(_) => {}
            }
        }
        let prev = (p.0 + N8[(d + 7) % 8].0, p.1 + N8[(d + 7) % 8].1);
        back = dir_of(prev.0 - q.0, prev.1 - q.1);
        p = q;
        if p != s {
            poly.push((p.0 as i32, p.1 as i32));
        }
    }
    poly
}
