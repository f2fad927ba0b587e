use pacer::plan::CostField;

/// Dense Dijkstra without a heap: scan for the closest unsettled cell.
/// Returns the optimal path's move costs summed in ascending order.
pub fn dijkstra(field: &CostField, start: [usize; 2], goal: [usize; 2], lambda: f64) -> f64 {
    let (w, h) = (field.width, field.height);
    let mut dist = vec![f64::INFINITY; w * h];
    let mut step = vec![0.0f64; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut done = vec![false; w * h];
    dist[start[1] * w + start[0]] = 0.0;
    loop {
        let mut u = usize::MAX;
        for i in 0..w * h {
            if !done[i] && dist[i].is_finite() && (u == usize::MAX || dist[i] < dist[u]) {
                u = i;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        let (x, y) = ((u % w) as i64, (u / w) as i64);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let v = ny as usize * w + nx as usize;
                let len = if dx != 0 && dy != 0 { 2f64.sqrt() } else { 1.0 };
                let c = len * (1.0 + lambda * field.values[v] as f64);
                if dist[u] + c < dist[v] {
                    dist[v] = dist[u] + c;
                    step[v] = c;
                    parent[v] = u;
                }
            }
        }
    }
    let (s, mut v) = (start[1] * w + start[0], goal[1] * w + goal[0]);
    let mut moves = vec![];
    while v != s {
        moves.push(step[v]);
        v = parent[v];
    }
    moves.sort_by(f64::total_cmp);
    moves.iter().sum()
}
