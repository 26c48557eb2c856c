use microring_rc::experiment::{Axis, CellRecord, CellStatus, Metric, Provenance, ResultMap};
use microring_rc::mrr::{MrrParams, Preset, Stability, StabilityMap};
use microring_rc::reservoir::{ridge_fit, RidgeReadout, StateMatrix};
use microring_rc::signal::{nrz_modulate, prbs, SampledSignal};
use microring_rc::tasks::Dataset;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn binary_waveform_has_magic_and_roundtrips() {
    let s = nrz_modulate(&prbs(5, 3).unwrap().with_bitrate(1e9).unwrap(), 4, 2e-3, 1e-4).unwrap();
    let mut bin = Vec::new();
    s.write_binary(&mut bin).unwrap();
    assert_eq!(&bin[..8], b"RRSIG\0\0\x01");
    assert_eq!(SampledSignal::read_binary(bin.as_slice()).unwrap(), s);
    let mut csv = Vec::new();
    s.write_csv(&mut csv).unwrap();
    assert!(csv.starts_with(b"t,re,im\n"));
    // The CSV carries time stamps only, so the rate comes back to rounding.
    let back = SampledSignal::read_csv(csv.as_slice()).unwrap();
    assert_eq!(back.samples(), s.samples());
    assert!((back.sample_rate() / s.sample_rate() - 1.0).abs() < 1e-12);
}

#[test]
fn stability_csv_roundtrips() {
    let map = StabilityMap {
        powers: vec![1e-3, 2e-3],
        detunings: vec![-1e10, 0.0],
        cells: vec![
            Stability::Stable,
            Stability::SelfPulsing { frequency: 7.5e5 },
            Stability::Stable,
            Stability::SelfPulsing { frequency: 1.25e6 },
        ],
    };
    let mut out = Vec::new();
    map.write_csv(&mut out).unwrap();
    assert!(out.starts_with(b"P,delta_nu,class,sp_freq_hz\n"));
    assert_eq!(StabilityMap::read_csv(out.as_slice()).unwrap(), map);
}

#[test]
fn ring_config_accepts_unit_suffixes() {
    let p = MrrParams::from_toml_str("tau_fc = \"45ns\"\ntau_th = \"0.27us\"\nradius = \"7um\"\n").unwrap();
    assert_eq!(p.tau_fc, 45e-9);
    assert_eq!(p.tau_th, 0.27e-6);
    assert!(MrrParams::from_toml_str("tau_fc = \"45pm\"\n").is_err());
    assert!(MrrParams::from_toml_str("tau_fcc = 1\n").is_err());
    assert_eq!(MrrParams::from_toml_str("").unwrap(), Preset::SelfPulsing.params());
}

#[test]
fn state_readout_and_dataset_roundtrip() {
    let st = StateMatrix::new(
        DMatrix::from_fn(2, 5, |r, c| (r as f64 + 0.1) * (c as f64 - 2.3)),
        vec!["b0:v0".into(), "b-1:v0".into()],
    )
    .unwrap();
    let mut csv = Vec::new();
    st.write_csv(&mut csv).unwrap();
    assert!(csv.starts_with(b"b0:v0,b-1:v0\n"));
    assert_eq!(StateMatrix::read_csv(csv.as_slice()).unwrap(), st);

    let y = DMatrix::from_fn(1, 5, |_, c| c as f64 / 3.0);
    let ro = ridge_fit(st.features(), &y, 0.1, true).unwrap();
    assert_eq!(RidgeReadout::from_json(&ro.to_json().unwrap()).unwrap(), ro);

    let d = Dataset::narma10(50, 9).unwrap();
    let mut out = Vec::new();
    d.write_csv(&mut out).unwrap();
    assert_eq!(Dataset::read_csv(out.as_slice()).unwrap(), d);
}

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![
        (-1e6f64..1e6).prop_map(Metric::plain),
        (1usize..10_000).prop_map(|n| Metric::ber(0, n)),
        (1usize..100, 100usize..1000).prop_map(|(e, n)| Metric::ber(e, n)),
    ]
}

proptest! {
    #[test]
    fn result_maps_roundtrip(
        p in prop::collection::vec(1e-4f64..1.0, 1..4),
        d in prop::collection::vec(-1e11f64..1e11, 1..4),
        seed in any::<u64>(),
        values in prop::collection::vec(metric(), 32),
        diverged in prop::collection::vec(any::<bool>(), 16),
    ) {
        let (mut p, mut d) = (p, d);
        p.sort_by(f64::total_cmp);
        p.dedup();
        d.sort_by(f64::total_cmp);
        d.dedup();
        let axes = vec![Axis::new("power", p).unwrap(), Axis::new("detuning", d).unwrap()];
        let n = axes[0].values.len() * axes[1].values.len();
        let cells: Vec<CellRecord> = (0..n)
            .map(|i| {
                let bad = diverged[i];
                CellRecord {
                    index: i,
                    seed: seed.wrapping_add(i as u64),
                    status: if bad { CellStatus::Diverged } else { CellStatus::Ok },
                    metrics: if bad {
                        vec![Metric::plain(f64::NAN); 2]
                    } else {
                        vec![values[2 * i], values[2 * i + 1]]
                    },
                }
            })
            .collect();
        let map = ResultMap::new(axes, vec!["ber".into(), "nmse".into()], cells, Provenance::new("logic_task", "ab", seed)).unwrap();
        let text = map.to_csv_string().unwrap();
        let back = ResultMap::read_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(back.to_csv_string().unwrap(), text);
        prop_assert_eq!(&back.axes, &map.axes);
        for (a, b) in back.cells.iter().zip(&map.cells) {
            prop_assert_eq!(a.seed, b.seed);
            prop_assert_eq!(a.status, b.status);
            for (x, y) in a.metrics.iter().zip(&b.metrics) {
                prop_assert!(x.floor == y.floor);
                prop_assert!(x.value == y.value || (x.value.is_nan() && y.value.is_nan()));
            }
        }
    }
}
