mod common;

use proptest::prelude::*;

use common::replay::replay;
use xbar_core::chip::BITS_PER_MB;
use xbar_core::dse::*;
use xbar_core::perf::{area_model, evaluate, tile_stream};
use xbar_core::workload::{network_runtime, resnet50, toy_network};
use xbar_core::{apply_profile, CalibrationProfile, ChipConfig, LayerSpec, TechParams};

fn calibrated() -> TechParams {
    apply_profile(&TechParams::default(), &CalibrationProfile::calibrated()).unwrap()
}

#[test]
fn one_point_sweep_is_evaluate() {
    let cfg = ChipConfig {
        rows: 32,
        cols: 16,
        batch: 4,
        ..ChipConfig::default()
    };
    let tech = calibrated();
    let pts = sweep(&SweepGrid::single(cfg.clone()), &toy_network(), &tech).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].config, cfg);
    assert_eq!(
        pts[0].report,
        evaluate(&toy_network(), &cfg, &tech).unwrap()
    );
}

#[test]
fn more_rows_more_ips() {
    let tech = calibrated();
    let grid = SweepGrid {
        rows: vec![32, 64],
        ..SweepGrid::single(ChipConfig::default())
    };
    let pts = sweep(&grid, &resnet50(), &tech).unwrap();
    assert_eq!(pts.len(), 2);
    let direct = |rows| {
        evaluate(
            &resnet50(),
            &ChipConfig {
                rows,
                ..ChipConfig::default()
            },
            &tech,
        )
        .unwrap()
    };
    assert_eq!(pts[0].report, direct(32));
    assert_eq!(pts[1].report, direct(64));
    assert!(pts[1].report.ips > pts[0].report.ips);
}

#[test]
fn sweep_is_order_independent() {
    let tech = calibrated();
    let grid = SweepGrid {
        rows: vec![16, 64, 32],
        cols: vec![8, 32],
        batch: vec![1, 8],
        sram_input_mb: vec![0.1, 4.0],
        cores: vec![1, 2],
        template: ChipConfig::default(),
    };
    let forward = sweep(&grid, &toy_network(), &tech).unwrap();
    let mut rev = grid.clone();
    rev.rows.reverse();
    rev.cols.reverse();
    rev.batch.reverse();
    rev.sram_input_mb.reverse();
    rev.cores.reverse();
    let mut backward = sweep(&rev, &toy_network(), &tech).unwrap();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn sweep_error_names_config() {
    let mut grid = SweepGrid::single(ChipConfig::default());
    grid.template.sram_input_mb = 1.0;
    let tech = TechParams {
        laser_wallplug_eff: 0.0,
        ..TechParams::default()
    };
    assert!(sweep(&grid, &toy_network(), &tech).is_err());
    let err = sweep(&grid, &[], &TechParams::default()).unwrap_err();
    assert!(err.to_string().contains("128x128"), "{err}");
}

#[test]
fn sweep_csv_columns_line_up() {
    let cfg = ChipConfig::default();
    let r = evaluate(&toy_network(), &cfg, &calibrated()).unwrap();
    assert_eq!(sweep_csv_header().len(), sweep_csv_row(&cfg, &r).len());
}

/// 100 row tiles of 500·batch cycles each (50 ns per batch element at 10 GHz).
fn fifty_ns_layer() -> Vec<LayerSpec> {
    vec![LayerSpec {
        name: "wide".into(),
        ifmap_h: 25,
        ifmap_w: 20,
        channels: 12800,
        filter_h: 1,
        filter_w: 1,
        num_filters: 128,
        stride: 1,
    }]
}

#[test]
fn hiding_batch_against_replay() {
    let tech = calibrated();
    let template = ChipConfig::default();
    let candidates = [1, 2, 4, 8];
    let got =
        find_min_hiding_batch(&fifty_ns_layer(), &template, &tech, &candidates, 0.01).unwrap();
    // Independent check: replay each candidate in whole cycles.
    let prog_cycles = (tech.t_pcm_program * template.clock_hz).round() as u64;
    let want = candidates
        .iter()
        .copied()
        .find(|&b| {
            let cfg = ChipConfig {
                batch: b,
                ..template.clone()
            };
            let tiles: Vec<(u64, bool)> =
                tile_stream(&network_runtime(&fifty_ns_layer(), &cfg).unwrap())
                    .iter()
                    .map(|t| (t.compute_cycles, t.program))
                    .collect();
            let r = replay(&tiles, 2, prog_cycles);
            r.exposed() as f64 <= 0.01 * r.total as f64
        })
        .unwrap();
    assert_eq!(got.batch, want);
    assert_eq!(got.batch, 2);
    assert!(got.hidden);
    assert_eq!(got.candidates.len(), candidates.len());
}

#[test]
fn hiding_batch_trivial_and_fallback() {
    let tech = TechParams {
        t_pcm_program: 0.0,
        ..calibrated()
    };
    let r = find_min_hiding_batch(&toy_network(), &ChipConfig::default(), &tech, &[1, 2], 0.01)
        .unwrap();
    assert_eq!(r.batch, 1);
    let r = find_min_hiding_batch(
        &toy_network(),
        &ChipConfig::default(),
        &calibrated(),
        &[1, 2],
        0.0,
    )
    .unwrap();
    assert_eq!(r.batch, 2);
    assert!(!r.hidden);
}

#[test]
fn resnet_hiding_batch_is_monotone() {
    let tech = calibrated();
    let batches = powers_of_two(1, 256);
    let template = ChipConfig::default();
    let r = find_min_hiding_batch(&resnet50(), &template, &tech, &batches, 0.01).unwrap();
    assert!(r.batch <= 32, "{}", r.batch);
    for entry in &r.candidates {
        let m = entry.metrics.as_ref().unwrap();
        let hides = m.t_program_exposed_s <= 0.01 * m.t_total_s;
        assert_eq!(
            hides,
            entry.config.batch >= r.batch,
            "batch {}",
            entry.config.batch
        );
    }
}

#[test]
fn critical_sram_matches_grid_scan() {
    let step = 0.25;
    for (net, batch) in [(resnet50(), 32), (resnet50(), 8), (toy_network(), 64)] {
        let template = ChipConfig {
            batch,
            ..ChipConfig::default()
        };
        let dram = |mb: f64| {
            network_runtime(
                &net,
                &ChipConfig {
                    sram_input_mb: mb,
                    ..template.clone()
                },
            )
            .unwrap()
            .total
            .traffic
            .dram_bits()
        };
        let floor = dram(1e6);
        let mut k = 1;
        while dram(k as f64 * step) != floor {
            assert!(dram((k + 1) as f64 * step) <= dram(k as f64 * step));
            k += 1;
        }
        let exact = critical_input_sram_mb(&net, &template).unwrap();
        assert_eq!(
            round_up_to_step(exact, step),
            k as f64 * step,
            "batch {batch}"
        );
        assert!(dram(exact) == floor);
        assert!(dram(exact * (1.0 - 1e-9)) > floor);
    }
}

#[test]
fn calibrated_sram_sizing_at_the_cap() {
    let tech = calibrated();
    let template = ChipConfig::default();
    let r = size_sram(&resnet50(), &template, &tech, 100.0, 0.25).unwrap();
    assert!(
        (25.0..=27.0).contains(&r.input_sram_mb),
        "{}",
        r.input_sram_mb
    );
    assert!(r.area_mm2 <= 100.0);
    assert!(r.input_sram_mb >= r.critical_input_sram_mb);
    let bits = r.critical_input_sram_mb * BITS_PER_MB;
    assert_eq!(bits.fract(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sram_sizing_respects_cap(cap in 15.0f64..150.0, rows in 16usize..256, cols in 16usize..256) {
        let tech = calibrated();
        let template = ChipConfig { rows, cols, ..ChipConfig::default() };
        match size_sram(&toy_network(), &template, &tech, cap, 0.25) {
            Ok(r) => {
                let area = |mb| area_model(&ChipConfig { sram_input_mb: mb, ..template.clone() }, &tech).total();
                prop_assert!(area(r.input_sram_mb) <= cap * (1.0 + AREA_SLACK));
                prop_assert!(area(r.input_sram_mb + 0.25) > cap);
                prop_assert_eq!(r.candidates.len() as f64, r.input_sram_mb / 0.25 + 1.0);
            }
            Err(e) => {
                let fixed = area_model(&ChipConfig { sram_input_mb: 0.25, ..template.clone() }, &tech).total();
                prop_assert!(fixed > cap, "{e}");
            }
        }
    }
}

#[test]
fn calibrated_array_pick() {
    let tech = calibrated();
    let sizes: Vec<(usize, usize)> = powers_of_two(32, 512)
        .into_iter()
        .flat_map(|r| powers_of_two(32, 512).into_iter().map(move |c| (r, c)))
        .collect();
    let r = pick_array_size(
        &resnet50(),
        &ChipConfig::default(),
        &tech,
        &sizes,
        DEFAULT_TIE_TOL,
    )
    .unwrap();
    assert_eq!((r.rows, r.cols), (128, 128));
    let one = pick_array_size(
        &resnet50(),
        &ChipConfig::default(),
        &tech,
        &[(64, 32)],
        0.02,
    )
    .unwrap();
    assert_eq!((one.rows, one.cols), (64, 32));
    assert!(pick_array_size(&resnet50(), &ChipConfig::default(), &tech, &[], 0.02).is_err());
}

#[test]
fn degenerate_optimize_is_direct_evaluation() {
    let tech = calibrated();
    let layers = &toy_network()[..1];
    let template = ChipConfig {
        rows: 32,
        cols: 16,
        batch: 4,
        ..ChipConfig::default()
    };
    let fixed = area_model(
        &ChipConfig {
            sram_input_mb: 0.0,
            ..template.clone()
        },
        &tech,
    )
    .total();
    let c = Constraints {
        template: template.clone(),
        area_cap_mm2: fixed + 2.0 * tech.a_sram_per_mb,
        batch_candidates: vec![4],
        rows_candidates: vec![32],
        cols_candidates: vec![16],
        ..Constraints::default()
    };
    let r = optimize(layers, &tech, &c).unwrap();
    let want = ChipConfig {
        sram_input_mb: 2.0,
        cores: 2,
        ..template
    };
    assert_eq!(r.chosen, want);
    assert_eq!(r.report, evaluate(layers, &want, &tech).unwrap());
}

#[test]
fn calibrated_optimize_flow() {
    let tech = calibrated();
    let c = Constraints::default();
    let r = optimize(&resnet50(), &tech, &c).unwrap();
    assert_eq!(
        (r.chosen.rows, r.chosen.cols, r.chosen.cores),
        (128, 128, 2)
    );
    assert_eq!(r.chosen.batch, 32);
    assert!((25.0..=27.0).contains(&r.chosen.sram_input_mb));
    assert!(r.report.area_mm2 <= c.area_cap_mm2);
    assert_eq!(r.iterations, 1);

    let steps: Vec<Step> = r.audit.iter().map(|s| s.step).collect();
    assert_eq!(steps, [Step::Batch, Step::Sram, Step::Array, Step::Recheck]);

    // One entry per candidate: batches, SRAM steps up to the first over the
    // cap, array sizes, and the recheck.
    let sram_template = ChipConfig {
        batch: 32,
        ..c.template.clone()
    };
    let fixed = area_model(
        &ChipConfig {
            sram_input_mb: 0.0,
            ..sram_template
        },
        &tech,
    )
    .total();
    let k = ((c.area_cap_mm2 - fixed) / (c.sram_step_mb * tech.a_sram_per_mb)).floor() as usize;
    let expected = c.batch_candidates.len() + (k + 1) + c.array_candidates().len() + 1;
    assert_eq!(r.audit_len(), expected);

    let array = &r.audit[2];
    assert_eq!(array.candidates[array.chosen.unwrap()].config, r.chosen);
    assert!(array.candidates.iter().any(|e| !e.feasible));
}

#[test]
fn optimize_is_reproducible() {
    let tech = calibrated();
    let c = Constraints::default();
    let a = serde_json::to_string(&optimize(&resnet50(), &tech, &c).unwrap()).unwrap();
    let b = serde_json::to_string(&optimize(&resnet50(), &tech, &c).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn optimize_names_failing_step() {
    let c = Constraints {
        area_cap_mm2: 5.0,
        ..Constraints::default()
    };
    let err = optimize(&toy_network(), &calibrated(), &c).unwrap_err();
    assert!(
        matches!(err, xbar_core::Error::Infeasible { step: "sram", .. }),
        "{err}"
    );
}
