use eie_core::compress::{Codebook, QuantizedSparseMatrix};
use eie_core::csc::{encode_interleaved, BlockedCsc};
use eie_core::engine::ActivationVector;
use eie_core::sim::{load_efficiency, simulate, theoretical_cycles, SimConfig, SimStats};
use eie_core::FixedPointFormat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn codebook() -> Codebook {
    let mut e = [0i16; 16];
    for (k, v) in e.iter_mut().enumerate().skip(1) {
        *v = k as i16 * 8;
    }
    Codebook::new(FixedPointFormat::default(), e).unwrap()
}

fn layer(rows: usize, columns: Vec<Vec<u32>>) -> QuantizedSparseMatrix {
    let cols: Vec<Vec<(u32, u8)>> = columns
        .into_iter()
        .map(|c| c.into_iter().map(|r| (r, (r % 15 + 1) as u8)).collect())
        .collect();
    QuantizedSparseMatrix::from_columns(rows, codebook(), &cols).unwrap()
}

fn input(values: Vec<i16>) -> ActivationVector {
    ActivationVector::new(FixedPointFormat::default(), values)
}

fn random_layer(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    density: f64,
) -> QuantizedSparseMatrix {
    layer(
        rows,
        (0..cols)
            .map(|_| {
                (0..rows as u32)
                    .filter(|_| rng.random_bool(density))
                    .collect()
            })
            .collect(),
    )
}

fn run(q: &QuantizedSparseMatrix, a: &ActivationVector, cfg: &SimConfig) -> SimStats {
    let e = encode_interleaved(q, cfg.n_pe).unwrap();
    simulate(&e, q.codebook(), a, cfg, false).unwrap().1
}

#[test]
fn single_column_timing() {
    // Broadcast latency, one pointer-read cycle, three entry cycles, then
    // the last entry's three remaining pipeline stages.
    let q = layer(3, vec![vec![0, 1, 2]]);
    for latency in [1, 2, 5] {
        let cfg = SimConfig {
            n_pe: 1,
            broadcast_latency: latency,
            ..SimConfig::default()
        };
        let s = run(&q, &input(vec![256]), &cfg);
        assert_eq!(s.total_cycles, latency + 7);
        assert_eq!(s.busy_cycles, vec![3]);
        assert_eq!(s.bubble_cycles, vec![latency + 4]);
        assert_eq!(s.ptr_sram_reads, 1);
        assert_eq!(s.mac_count, 3);
        // Rows 0, 1, 2 follow each other, never the same accumulator.
        assert_eq!(s.bypass_count, 0);
    }
}

#[test]
fn zero_input_takes_no_cycles() {
    let q = layer(8, vec![vec![0, 5], vec![3]]);
    let s = run(&q, &input(vec![0, 0]), &SimConfig::with_pes(2));
    assert_eq!((s.total_cycles, s.mac_count), (0, 0));
    assert_eq!(load_efficiency(&s).aggregate, 1.0);
}

#[test]
fn empty_matrix_reports_unit_efficiency() {
    let q = layer(8, vec![vec![], vec![]]);
    let s = run(&q, &input(vec![256, 256]), &SimConfig::with_pes(2));
    assert_eq!(s.mac_count, 0);
    assert_eq!(s.ptr_sram_reads, 4);
    assert_eq!(load_efficiency(&s).aggregate, 1.0);
}

#[test]
fn single_pe_only_loses_fill_and_drain() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = layer(
        50,
        (0..200)
            .map(|_| {
                let mut c: Vec<u32> = (0..50).filter(|_| rng.random_bool(0.3)).collect();
                if c.is_empty() {
                    c.push(7);
                }
                c
            })
            .collect(),
    );
    let cfg = SimConfig::with_pes(1);
    let s = run(&q, &input(vec![100; 200]), &cfg);
    assert_eq!(s.bubble_cycles[0], cfg.broadcast_latency + 1 + 3);
    assert!(load_efficiency(&s).aggregate > 0.99);
}

#[test]
fn same_row_back_to_back_uses_bypass() {
    // Two consecutive columns each holding only row 0.
    let q = layer(1, vec![vec![0], vec![0], vec![0]]);
    let s = run(&q, &input(vec![1, 2, 3]), &SimConfig::with_pes(1));
    assert_eq!(s.bypass_count, 2);
    assert_eq!(
        s.act_regfile_reads + s.bypass_count,
        s.mac_count + s.input_nonzeros_broadcast
    );
}

#[test]
fn dense_column_row_reads() {
    let cfg = SimConfig::with_pes(1);
    for entries in [1usize, 8, 9, 64, 100, 1000] {
        let q = layer(entries, vec![(0..entries as u32).collect()]);
        let s = run(&q, &input(vec![256]), &cfg);
        assert_eq!(
            s.spmat_sram_row_reads as usize,
            entries.div_ceil(8),
            "{entries}"
        );
    }
    let wide = SimConfig {
        sram_width_bits: 128,
        ..cfg
    };
    let q = layer(100, vec![(0..100).collect()]);
    assert_eq!(run(&q, &input(vec![256]), &wide).spmat_sram_row_reads, 7);
}

#[test]
fn busy_plus_bubble_is_total() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let q = random_layer(&mut rng, 200, 150, 0.1);
    let a = input((0..150).map(|j| if j % 3 == 0 { 0 } else { 77 }).collect());
    let s = run(&q, &a, &SimConfig::with_pes(8));
    for (b, u) in s.busy_cycles.iter().zip(&s.bubble_cycles) {
        assert_eq!(b + u, s.total_cycles);
    }
    assert_eq!(s.busy_cycles.iter().sum::<u64>(), s.mac_count);
}

#[test]
fn macs_minus_padding_is_support_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let q = random_layer(&mut rng, 300, 80, 0.05);
    let a = input(
        (0..80)
            .map(|_| if rng.random_bool(0.4) { 50 } else { 0 })
            .collect(),
    );
    let s = run(&q, &a, &SimConfig::with_pes(4));
    let support: usize = a.nonzeros().map(|(j, _)| q.column_len(j)).sum();
    assert_eq!((s.mac_count - s.padding_mac_count) as usize, support);
    assert!(s.padding_mac_count > 0);
}

#[test]
fn theoretical_cycles_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // 32 rows keep every slice at 16 local rows or fewer: no padding.
    let q = random_layer(&mut rng, 32, 40, 0.3);
    let a = input(vec![9; 40]);
    let t = |n: usize| {
        let e = BlockedCsc::from(encode_interleaved(&q, n).unwrap());
        theoretical_cycles(&e, &a, &SimConfig::with_pes(n)).unwrap()
    };
    assert_eq!(t(1).cycles, q.nnz() as f64);
    assert_eq!(t(2).cycles, q.nnz() as f64 / 2.0);
    assert_eq!(t(4).cycles * 2.0, t(2).cycles);
    assert_eq!(t(1).seconds, q.nnz() as f64 / 800e6);
}

#[test]
fn load_efficiency_definition() {
    let s = SimStats {
        total_cycles: 10,
        mac_count: 1,
        bubble_cycles: vec![0, 5],
        ..SimStats::default()
    };
    let e = load_efficiency(&s);
    assert_eq!(e.per_pe, vec![1.0, 0.5]);
    assert_eq!(e.aggregate, 0.75);
}

#[test]
fn bad_configs_rejected() {
    let q = layer(4, vec![vec![0]]);
    let e = encode_interleaved(&q, 2).unwrap();
    let a = input(vec![1]);
    for cfg in [
        SimConfig::with_pes(3),
        SimConfig {
            fifo_depth: 0,
            ..SimConfig::with_pes(2)
        },
        SimConfig {
            sram_width_bits: 12,
            ..SimConfig::with_pes(2)
        },
    ] {
        assert!(simulate(&e, q.codebook(), &a, &cfg, false).is_err());
    }
    assert!(simulate(
        &e,
        q.codebook(),
        &input(vec![1, 2]),
        &SimConfig::with_pes(2),
        false
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deeper_fifo_never_hurts(seed in any::<u64>(), rows in 16usize..300, cols in 1usize..100, n_pe in 1usize..17) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_layer(&mut rng, rows, cols, 0.1);
        let a = input((0..cols).map(|_| if rng.random_bool(0.5) { 30 } else { 0 }).collect());
        let mut last: Option<(u64, f64)> = None;
        for depth in [1, 2, 3, 4, 8, 16, 64] {
            let cfg = SimConfig { n_pe, fifo_depth: depth, ..SimConfig::default() };
            let s = run(&q, &a, &cfg);
            let eff = load_efficiency(&s).aggregate;
            if let Some((cycles, prev)) = last {
                prop_assert!(s.total_cycles <= cycles, "depth {}: {} > {}", depth, s.total_cycles, cycles);
                prop_assert!(eff >= prev, "depth {}: {} < {}", depth, eff, prev);
            }
            last = Some((s.total_cycles, eff));
        }
    }

    #[test]
    fn actual_at_least_theoretical(seed in any::<u64>(), rows in 1usize..300, cols in 1usize..100, n_pe in 1usize..33) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_layer(&mut rng, rows, cols, 0.2);
        let a = input((0..cols).map(|_| if rng.random_bool(0.6) { 30 } else { 0 }).collect());
        let cfg = SimConfig::with_pes(n_pe);
        let e = encode_interleaved(&q, n_pe).unwrap();
        let s = simulate(&e, q.codebook(), &a, &cfg, false).unwrap().1;
        let t = theoretical_cycles(&BlockedCsc::from(e), &a, &cfg).unwrap();
        prop_assert!(s.total_cycles as f64 >= t.cycles);
    }

    #[test]
    fn repeated_runs_identical(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_layer(&mut rng, 120, 60, 0.15);
        let a = input((0..60).map(|_| rng.random_range(-5..5)).collect());
        let cfg = SimConfig { reg_file_entries: 4, ..SimConfig::with_pes(8) };
        prop_assert_eq!(run(&q, &a, &cfg), run(&q, &a, &cfg));
    }
}
