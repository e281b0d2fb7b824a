use adhoc_kitchen::world::{parse_layout_with, PathError, Position, World};
use proptest::prelude::*;

// 5x5 room split by a wall in column 3 with a single gap at row 5.
const BISECTED: &str = "\
#######
#A.#..#
#..#..#
#..#..#
#..#..#
#.....#
#######
";

/// Distances to `target` by repeated relaxation until nothing changes.
fn relaxed_distances(world: &World, target: Position) -> Vec<Option<usize>> {
    let (w, h) = (world.width, world.height);
    let idx = |p: Position| p.y * w + p.x;
    let mut dist = vec![None; w * h];
    dist[idx(target)] = Some(0);
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let p = Position::new(x, y);
                if !world.is_floor(p) {
                    continue;
                }
                let mut best = dist[idx(p)];
                for (dx, dy) in [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let n = Position::new(nx as usize, ny as usize);
                    if let Some(d) = dist[idx(n)] {
                        if best.is_none_or(|b| d + 1 < b) {
                            best = Some(d + 1);
                        }
                    }
                }
                if best != dist[idx(p)] {
                    dist[idx(p)] = best;
                    changed = true;
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

fn assert_valid_path(world: &World, from: Position, to: Position, path: &[Position]) {
    let mut cur = from;
    for &p in path {
        assert!(cur.is_adjacent(p), "{cur:?} -> {p:?} is not a single step");
        assert!(world.is_floor(p));
        cur = p;
    }
    assert_eq!(cur, to);
}

#[test]
fn bisected_room_matches_relaxation_oracle() {
    let world = parse_layout_with(BISECTED, &[]).unwrap();
    let floors: Vec<Position> = (0..world.height)
        .flat_map(|y| (0..world.width).map(move |x| Position::new(x, y)))
        .filter(|&p| world.is_floor(p))
        .collect();
    for &a in &floors {
        let oracle = relaxed_distances(&world, a);
        for &b in &floors {
            let path = world.shortest_path(b, a).unwrap();
            assert_eq!(Some(path.len()), oracle[b.y * world.width + b.x], "{b:?} -> {a:?}");
            assert_valid_path(&world, b, a, &path);
            assert_eq!(world.floor_distance(b, a) as usize, path.len());
        }
    }
    // crossing the wall detours through the gap
    let path = world.shortest_path(Position::new(2, 1), Position::new(4, 1)).unwrap();
    assert_eq!(path.len(), 10);
    assert!(path.contains(&Position::new(3, 5)));
}

#[test]
fn path_examples() {
    let world = parse_layout_with(BISECTED, &[]).unwrap();
    assert_eq!(world.shortest_path(Position::new(1, 1), Position::new(1, 2)).unwrap().len(), 1);
    // a wall cell adjacent to the start needs no movement
    assert!(world.shortest_path(Position::new(2, 1), Position::new(3, 1)).unwrap().is_empty());
    assert!(matches!(
        world.shortest_path(Position::new(0, 0), Position::new(1, 1)),
        Err(PathError::NotFloor(_))
    ));
    let sealed = parse_layout_with("#####\n#A#.#\n#####\n", &[]).unwrap();
    assert!(matches!(
        sealed.shortest_path(Position::new(1, 1), Position::new(3, 1)),
        Err(PathError::NoPath { .. })
    ));
}

fn random_room() -> impl Strategy<Value = String> {
    (3usize..8, 3usize..8).prop_flat_map(|(w, h)| {
        proptest::collection::vec(proptest::bool::weighted(0.25), w * h).prop_map(move |walls| {
            let mut s = String::new();
            for y in 0..h + 2 {
                for x in 0..w + 2 {
                    let inner = x > 0 && y > 0 && x <= w && y <= h;
                    let c = if !inner {
                        '#'
                    } else if (x, y) == (1, 1) {
                        'A'
                    } else if walls[(y - 1) * w + (x - 1)] {
                        '#'
                    } else {
                        '.'
                    };
                    s.push(c);
                }
                s.push('\n');
            }
            s
        })
    })
}

proptest! {
    #[test]
    fn shortest_paths_agree_with_oracle(text in random_room()) {
        let world = parse_layout_with(&text, &[]).unwrap();
        let start = Position::new(1, 1);
        let oracle = relaxed_distances(&world, start);
        for y in 0..world.height {
            for x in 0..world.width {
                let p = Position::new(x, y);
                if !world.is_floor(p) {
                    continue;
                }
                match (world.shortest_path(p, start), oracle[y * world.width + x]) {
                    (Ok(path), Some(d)) => {
                        prop_assert_eq!(path.len(), d);
                        assert_valid_path(&world, p, start, &path);
                    }
                    (Err(PathError::NoPath { .. }), None) => {}
                    (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
                }
            }
        }
    }
}
