use overbook_core::buffer::channel::{buffet_scan_traffic, tailor_scan_traffic};
use overbook_core::buffer::{Buffet, Mode, Op, Tailor};
use overbook_core::generate::{generate, GeneratorSpec};
use overbook_core::sim::{simulate, simulate_with_shapes, Idiom, SimConfig, Strategy as Tiling};
use overbook_core::tiling::{self, Operand, TileShape};
use overbook_core::SparseMatrix;
use proptest::prelude::*;

fn arb_matrix(max_dim: usize) -> impl Strategy<Value = SparseMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        proptest::collection::btree_set((0..r, 0..c), 0..(r * c).min(200)).prop_map(move |set| {
            let coords: Vec<_> = set.into_iter().collect();
            SparseMatrix::from_coords(r, c, &coords).unwrap()
        })
    })
}

fn dense_of(m: &SparseMatrix) -> Vec<Vec<bool>> {
    let mut d = vec![vec![false; m.cols()]; m.rows()];
    for (r, c) in m.coords() {
        d[r][c] = true;
    }
    d
}

fn brute_max_occupancy(d: &[Vec<bool>], tr: usize, tc: usize) -> usize {
    let (rows, cols) = (d.len(), d[0].len());
    let mut best = 0;
    for r0 in (0..rows).step_by(tr) {
        for c0 in (0..cols).step_by(tc) {
            let mut n = 0;
            for row in d.iter().take((r0 + tr).min(rows)).skip(r0) {
                n += row[c0..(c0 + tc).min(cols)].iter().filter(|&&x| x).count();
            }
            best = best.max(n);
        }
    }
    best
}

fn brute_multiplies(a: &SparseMatrix, b: &SparseMatrix) -> u64 {
    let (da, db) = (dense_of(a), dense_of(b));
    let mut n = 0;
    for row in &da {
        for j in 0..b.cols() {
            for (k, &x) in row.iter().enumerate() {
                if x && db[k][j] {
                    n += 1;
                }
            }
        }
    }
    n
}

#[derive(Debug, Clone)]
enum BufOp {
    Fill(u32),
    Read(usize),
    Update(usize, u32),
    Shrink(usize),
}

fn arb_ops() -> impl Strategy<Value = Vec<BufOp>> {
    let op = prop_oneof![
        3 => any::<u32>().prop_map(BufOp::Fill),
        3 => (0..10usize).prop_map(BufOp::Read),
        1 => (0..10usize, any::<u32>()).prop_map(|(i, v)| BufOp::Update(i, v)),
        1 => (0..6usize).prop_map(BufOp::Shrink),
    ];
    proptest::collection::vec(op, 0..60)
}

proptest! {
    #[test]
    fn transpose_is_an_involution(m in arb_matrix(20)) {
        prop_assert_eq!(m.transpose().transpose(), m.clone());
        prop_assert_eq!(m.transpose().nnz(), m.nnz());
    }

    #[test]
    fn tile_occupancies_partition_the_nonzeros(m in arb_matrix(24), tr in 1..9usize, tc in 1..9usize) {
        let shape = TileShape::new(tr, tc).unwrap();
        let grid = tiling::partition(&m, shape);
        prop_assert_eq!(grid.len(), m.rows().div_ceil(tr) * m.cols().div_ceil(tc));
        prop_assert_eq!(tiling::all_occupancies(&m, &grid).iter().sum::<usize>(), m.nnz());
    }

    #[test]
    fn overbooking_rate_never_rises_with_capacity(m in arb_matrix(24), tr in 1..9usize, tc in 1..9usize) {
        let shape = TileShape::new(tr, tc).unwrap();
        let rates: Vec<f64> = (1..12).map(|c| tiling::overbooking_rate(&m, shape, c).unwrap()).collect();
        prop_assert!(rates.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tailor_without_owfill_traces_like_a_buffet(cap in 1..7usize, f_frac in 0.0..1.0f64, ops in arb_ops()) {
        let f = 1 + ((cap as f64 * f_frac) as usize).min(cap - 1);
        let mut t = Tailor::with_trace(cap, f).unwrap();
        let mut b = Buffet::with_trace(cap).unwrap();
        for op in &ops {
            match *op {
                BufOp::Fill(v) => prop_assert_eq!(t.fill(v), b.fill(v)),
                BufOp::Read(i) => prop_assert_eq!(t.read(i), b.read(i)),
                BufOp::Update(i, v) => prop_assert_eq!(t.update(i, v), b.update(i, v)),
                BufOp::Shrink(n) => prop_assert_eq!(t.shrink(n), b.shrink(n)),
            }
        }
        prop_assert_eq!(t.mode(), Mode::Buffet);
        prop_assert_eq!(t.trace(), b.trace());
    }

    #[test]
    fn owfill_stays_above_fifo_head(cap in 2..8usize, f_frac in 0.0..1.0f64, extra in 1..20usize) {
        let f = 1 + ((cap as f64 * f_frac) as usize).min(cap - 1);
        let mut t = Tailor::with_trace(cap, f).unwrap();
        for i in 0..cap {
            t.fill(i).unwrap();
        }
        for i in cap..cap + extra {
            t.owfill(i, i).unwrap();
            prop_assert!(t.fifo_indices().count() <= f);
        }
        // the buffet-managed region still holds the tile prefix
        for i in 0..cap - f {
            prop_assert_eq!(t.read(i), Ok(i));
        }
        let head = t.fifo_head();
        prop_assert!(t.trace().iter().filter(|e| e.op == Op::OwFill).all(|e| e.offset.unwrap() >= head));
    }

    #[test]
    fn repeated_scan_traffic_matches_closed_form(
        cap in 1..40usize, f_frac in 0.0..1.0f64, extra in 0..60usize, scans in 1..8usize,
    ) {
        let f = 1 + ((cap as f64 * f_frac) as usize).min(cap - 1);
        // occupancy somewhere above cap - f
        let o = cap - f + 1 + extra;
        let t = tailor_scan_traffic(o, cap, f, scans).parent_traffic() as usize;
        let b = buffet_scan_traffic(o, cap, scans).parent_traffic() as usize;
        if o > cap {
            prop_assert_eq!(t, o + (scans - 1) * (o - (cap - f)));
            prop_assert_eq!(b, scans * o);
        } else {
            prop_assert_eq!(t, o);
            prop_assert_eq!(b, o);
        }
    }

    #[test]
    fn prescient_matches_brute_force(m in arb_matrix(16), cap in 1..12usize) {
        prop_assume!(m.nnz() > 0);
        let ladder = tiling::default_ladder(cap, m.size());
        let d = dense_of(&m);
        let expected = ladder.iter().rev().find_map(|&size| {
            let k = size.min(m.cols());
            let free = (size / k).clamp(1, m.rows());
            (brute_max_occupancy(&d, free, k) <= cap).then_some((free, k))
        });
        let got = tiling::prescient_tile_size(&m, cap, &ladder, Operand::A).ok().map(|s| (s.rows, s.cols));
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn simulator_accounting_matches_brute_force() {
    for seed in 0..20u64 {
        let dim = 16 + (seed as usize * 7) % 49;
        let a = generate(&GeneratorSpec::uniform(dim, dim, 0.05 + 0.01 * (seed % 5) as f64, seed)).unwrap();
        let b = a.transpose();
        let expected = brute_multiplies(&a, &b);
        for strategy in Tiling::ALL {
            for idiom in [Idiom::Tailor, Idiom::Buffet] {
                let cfg = SimConfig::new(16).with_strategy(strategy).with_idiom(idiom).with_seed(seed);
                let r = simulate(&a, &b, &cfg).unwrap();
                assert_eq!(r.effectual_multiplies, expected, "seed {seed} {strategy:?} {idiom:?}");
                assert_eq!(r.parent_traffic, r.first_fetches + r.refetches);
                assert_eq!(r.first_fetches, r.a.tile_elements + r.b.tile_elements);
            }
        }
    }
}

#[test]
fn tailor_traffic_never_exceeds_buffet() {
    for seed in 0..10u64 {
        let a = generate(&GeneratorSpec::banded(60, 50, 4, 0.6, 0.02, seed)).unwrap();
        let b = a.transpose();
        for (tr, tc) in [(4, 10), (8, 25), (2, 50), (16, 16)] {
            let sa = TileShape::new(tr, tc).unwrap();
            let sb = TileShape::new(tc, tr).unwrap();
            let run = |idiom| simulate_with_shapes(&a, &b, sa, sb, &SimConfig::new(12).with_idiom(idiom)).unwrap();
            let (t, bf) = (run(Idiom::Tailor), run(Idiom::Buffet));
            assert!(t.parent_traffic <= bf.parent_traffic);
            assert_eq!(t.first_fetches, bf.first_fetches);
            assert_eq!(t.effectual_multiplies, bf.effectual_multiplies);
        }
    }
}

#[test]
fn prescient_never_overbooks_in_the_simulator() {
    for seed in 0..20u64 {
        let a = generate(&GeneratorSpec::power_law(64, 64, 0.08, 0.8, seed)).unwrap();
        let r = simulate(&a, &a.transpose(), &SimConfig::new(24).with_strategy(Tiling::Prescient)).unwrap();
        assert_eq!(r.overbooking_rate, 0.0);
        assert_eq!(r.refetches, 0);
    }
}

#[test]
fn smaller_y_means_smaller_tiles() {
    let a = generate(&GeneratorSpec::power_law(400, 300, 0.02, 0.9, 5)).unwrap();
    let size = |y| {
        let cfg = SimConfig::new(64).with_y(y).with_seed(1);
        overbook_core::swiftiles::estimate_tile_size(&a, &cfg.swiftiles(64), Operand::A).unwrap().target_size
    };
    let sizes: Vec<usize> = [0.0, 0.05, 0.2, 0.5, 1.0].into_iter().map(size).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
}
