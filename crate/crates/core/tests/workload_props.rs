use proptest::prelude::*;

use xbar_core::workload::*;
use xbar_core::ChipConfig;

fn layer_strategy() -> impl Strategy<Value = LayerSpec> {
    (
        1usize..6,
        1usize..6,
        1usize..3,
        1usize..40,
        1usize..200,
        1usize..3,
    )
        .prop_flat_map(|(fh, fw, stride, c, f, extra)| {
            let lo = fh.max(fw);
            (lo..lo + 20, Just((fh, fw, stride, c, f, extra)))
        })
        .prop_map(
            |(ifmap, (fh, fw, stride, channels, num_filters, extra))| LayerSpec {
                name: "p".into(),
                ifmap_h: ifmap,
                ifmap_w: ifmap + extra - 1,
                channels,
                filter_h: fh,
                filter_w: fw,
                num_filters,
                stride,
            },
        )
}

fn cfg_strategy() -> impl Strategy<Value = ChipConfig> {
    (
        prop::sample::select(vec![1usize, 3, 8, 32, 128]),
        prop::sample::select(vec![1usize, 5, 16, 64, 256]),
        1usize..9,
        prop::sample::select(vec![0.01, 0.1, 1.0, 8.0]),
    )
        .prop_map(|(rows, cols, batch, sram)| ChipConfig {
            rows,
            cols,
            batch,
            sram_input_mb: sram,
            ..ChipConfig::default()
        })
}

/// Walks the im2col weight matrix block by block.
fn enumerate_tiles(l: &LayerSpec, cfg: &ChipConfig) -> (u64, u64) {
    let (k, f) = (l.filter_h * l.filter_w * l.channels, l.num_filters);
    let positions =
        ((l.ifmap_h - l.filter_h) / l.stride + 1) * ((l.ifmap_w - l.filter_w) / l.stride + 1);
    let mut tiles = 0;
    let mut cycles = 0;
    let mut r = 0;
    while r < k {
        let mut c = 0;
        while c < f {
            tiles += 1;
            cycles += (positions * cfg.batch) as u64;
            c += cfg.cols;
        }
        r += cfg.rows;
    }
    (tiles, cycles)
}

proptest! {
    #[test]
    fn tiling_matches_enumeration(l in layer_strategy(), cfg in cfg_strategy()) {
        let s = layer_runtime(&l, &cfg);
        let (tiles, cycles) = enumerate_tiles(&l, &cfg);
        prop_assert_eq!(s.programming_events, tiles);
        prop_assert_eq!(s.compute_cycles, cycles);
        prop_assert_eq!(s.cells_programmed, tiles * (cfg.rows * cfg.cols) as u64);
    }

    #[test]
    fn cycles_scale_with_batch(l in layer_strategy(), cfg in cfg_strategy(), k in 1usize..5) {
        let a = layer_runtime(&l, &cfg);
        let b = layer_runtime(&l, &ChipConfig { batch: cfg.batch * k, ..cfg.clone() });
        prop_assert_eq!(b.compute_cycles, a.compute_cycles * k as u64);
        prop_assert_eq!(b.programming_events, a.programming_events);
    }

    #[test]
    fn bit_counts_divide_by_width(l in layer_strategy(), cfg in cfg_strategy()) {
        let cfg = ChipConfig { b_in: 5, b_w: 7, b_out: 3, b_acc: 11, ..cfg };
        let t = layer_runtime(&l, &cfg).traffic;
        prop_assert_eq!(t.sram_input_read % 5, 0);
        prop_assert_eq!(t.dram_ifmap_read % 5, 0);
        prop_assert_eq!(t.dram_weight_read % 7, 0);
        prop_assert_eq!(t.sram_filter_read % 7, 0);
        prop_assert_eq!(t.dram_output_write % 3, 0);
        prop_assert_eq!(t.sram_output_write % 3, 0);
        prop_assert_eq!(t.sram_acc_read % 11, 0);
    }

    #[test]
    fn accumulator_only_when_rows_split(l in layer_strategy(), cfg in cfg_strategy()) {
        let s = layer_runtime(&l, &cfg);
        prop_assert_eq!(s.traffic.sram_acc_read > 0, s.tiles.row_tiles > 1);
    }

    #[test]
    fn dram_traffic_monotone_in_sram(
        layers in prop::collection::vec(layer_strategy(), 1..6),
        cfg in cfg_strategy(),
        a in 0.001f64..4.0,
        b in 0.001f64..4.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let d = |mb| network_runtime(&layers, &ChipConfig { sram_input_mb: mb, ..cfg.clone() })
            .unwrap().total.traffic.dram_bits();
        prop_assert!(d(hi) <= d(lo));
    }

    #[test]
    fn forwarding_is_consistent(layers in prop::collection::vec(layer_strategy(), 1..6), cfg in cfg_strategy()) {
        let s = network_runtime(&layers, &cfg).unwrap();
        prop_assert!(!s.layers[0].input_forwarded);
        prop_assert!(s.layers.last().unwrap().output_to_dram);
        for w in s.layers.windows(2) {
            prop_assert_eq!(w[1].input_forwarded, !w[0].output_to_dram);
        }
        for l in &s.layers {
            if l.input_forwarded {
                prop_assert_eq!(l.traffic.dram_ifmap_read, 0);
            }
        }
    }
}

#[test]
fn resnet_fixture_shape() {
    let net = resnet50();
    assert_eq!(net.len(), 53);
    assert_eq!(net[0].name, "conv1");
    assert_eq!((net[0].out_h(), net[0].out_w()), (112, 112));
    let macs: u64 = net
        .iter()
        .map(|l| (l.out_h() * l.out_w()) as u64 * l.weight_count())
        .sum();
    // ~4.1 GMAC for the convolution layers of ResNet-50 v1.5.
    assert!((3.8e9..4.3e9).contains(&(macs as f64)), "{macs}");
}

#[test]
fn topology_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, TOY_CSV).unwrap();
    assert_eq!(parse_topology_file(&path).unwrap(), toy_network());
    let err = parse_topology_file(&dir.path().join("missing.csv")).unwrap_err();
    assert!(err.to_string().contains("missing.csv"));
}
