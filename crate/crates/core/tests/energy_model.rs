use eie_core::energy::{estimate_energy, savings_decomposition, EnergyTable};
use eie_core::sim::{SimConfig, SimStats};
use proptest::prelude::*;

fn stats(c: [u64; 7]) -> SimStats {
    SimStats {
        ptr_sram_reads: c[0],
        spmat_sram_row_reads: c[1],
        act_regfile_reads: c[2],
        act_regfile_writes: c[3],
        act_sram_reads: c[4],
        act_sram_writes: c[5],
        mac_count: c[6],
        ..SimStats::default()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-30)
}

#[test]
fn table_defaults() {
    let t = EnergyTable::default();
    assert_eq!(
        (t.int_add, t.float_add, t.int_mult, t.float_mult),
        (0.1, 0.9, 3.1, 3.7)
    );
    assert_eq!((t.sram_read_32b, t.dram_read_32b), (5.0, 640.0));
    assert_eq!(t.dram_read_32b / t.sram_read_32b, 128.0);
    assert_eq!(t.sram_read_pj(64).unwrap(), 10.0);
}

#[test]
fn decomposition_product_has_no_hidden_terms() {
    for (wd, ad, bits) in [
        (0.1, 1.0 / 3.0, 4),
        (0.09, 0.351, 4),
        (0.04, 0.183, 5),
        (1.0, 1.0, 32),
    ] {
        let d = savings_decomposition(wd, ad, bits).unwrap();
        assert_eq!(
            d.product,
            d.sram_vs_dram * d.pruning * d.weight_width * d.act_sparsity
        );
        assert_eq!(d.sram_vs_dram, 120.0);
    }
}

proptest! {
    #[test]
    fn linear_in_every_count(c in prop::array::uniform7(0u64..1_000_000), k in 1u64..1000, width_pow in 3u32..11) {
        let cfg = SimConfig { sram_width_bits: 1 << width_pow, ..SimConfig::default() };
        let t = EnergyTable::default();
        let one = estimate_energy(&stats(c), &cfg, &t).unwrap();
        let many = estimate_energy(&stats(c.map(|x| x * k)), &cfg, &t).unwrap();
        let k = k as f64;
        prop_assert!(close(many.weight_fetch, k * one.weight_fetch));
        prop_assert!(close(many.pointer_fetch, k * one.pointer_fetch));
        prop_assert!(close(many.activation, k * one.activation));
        prop_assert!(close(many.arithmetic, k * one.arithmetic));
        prop_assert!(close(many.total, k * one.total));
        prop_assert!(close(one.total, one.weight_fetch + one.pointer_fetch + one.activation + one.arithmetic));
    }
}
