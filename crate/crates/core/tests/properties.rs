//! Randomized invariants across the pipeline stages.

mod common;

use proptest::prelude::*;

use rram_drift::disturb::{
    accumulate_stress, calibrate_hrs, inference_lifetime, transition_time, CellState, DEFAULT_HRS_ANCHORS,
};
use rram_drift::model::{argmax_lowest, generate_synthetic, SyntheticSpec};
use rram_drift::partition::partition_model;
use rram_drift::profile::profile_spikes;

fn layers() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..7, 2..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inference_is_pure(layers in layers(), seed in 0u64..1000, inputs in prop::collection::vec(0u32..20, 6)) {
        let (model, _) = generate_synthetic(&SyntheticSpec::new(layers.clone(), seed)).unwrap();
        let input = &inputs[..model.inputs().len().min(inputs.len())];
        prop_assume!(input.len() == model.inputs().len());
        let before = model.clone();
        let a = model.run_inference(input).unwrap();
        let b = model.run_inference(input).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&model, &before);
        prop_assert_eq!(a, model.run_with_levels(input, &model.levels()).unwrap());
    }

    #[test]
    fn argmax_picks_lowest_maximum(values in prop::collection::vec(0u32..5, 1..12), shift in 0u32..1000) {
        let k = argmax_lowest(&values);
        let max = *values.iter().max().unwrap();
        prop_assert_eq!(values[k], max);
        prop_assert!(values[..k].iter().all(|&v| v < max));
        let shifted: Vec<u32> = values.iter().map(|v| v + shift).collect();
        prop_assert_eq!(argmax_lowest(&shifted), k);
    }

    #[test]
    fn transition_times_fall_with_voltage(v1 in 0.2f64..0.8, dv in 0.001f64..0.3) {
        let p = calibrate_hrs(DEFAULT_HRS_ANCHORS[0], DEFAULT_HRS_ANCHORS[1]).unwrap();
        let v2 = v1 + dv;
        for level in 0..3u8 {
            let (t1, t2) = (transition_time(level, v1, &p).unwrap(), transition_time(level, v2, &p).unwrap());
            prop_assert!(t1 > t2, "level {} t({}) = {} <= t({}) = {}", level, v1, t1, v2, t2);
        }
    }

    #[test]
    fn lifetime_is_linear(t in 1e-3f64..1e3, eta in 1e-3f64..1e2, pw in 1e-6f64..1e-2, a in 0.1f64..10.0) {
        let base = inference_lifetime(t, eta, pw).unwrap();
        prop_assert!((inference_lifetime(a * t, eta, pw).unwrap() / base - a).abs() <= 1e-12 * a);
        prop_assert!((inference_lifetime(t, a * eta, pw).unwrap() * a / base - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn eta_scaling_divides_lifetimes(seed in 0u64..500, c in 0.1f64..10.0) {
        let inst = common::random_instance(3, 4, 5, seed);
        let scaled = inst.with_eta(|id| c * inst.synapses[id as usize].eta).unwrap();
        let rows = vec![4, 0, 2];
        let cols = vec![1, 3, 0, 2];
        let (a, b) = (inst.evaluate(&rows, &cols), scaled.evaluate(&rows, &cols));
        prop_assert!((b * c / a - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn partition_is_an_exact_cover(layers in layers(), seed in 0u64..1000, n in 6usize..16) {
        let (model, data) = generate_synthetic(&SyntheticSpec::new(layers, seed)).unwrap();
        let profile = profile_spikes(&model, &data).unwrap();
        let clustering = partition_model(&model, &profile, n, seed).unwrap();
        clustering.validate(&model).unwrap();
        let mut owner = vec![0usize; model.num_synapses()];
        let mut computed = vec![0usize; model.num_neurons()];
        for c in &clustering.clusters {
            prop_assert!(c.pre.len() <= n && c.post.len() <= n);
            for &s in &c.synapses {
                owner[s as usize] += 1;
            }
            for &p in &c.post {
                computed[p as usize] += 1;
            }
        }
        prop_assert!(owner.iter().all(|&k| k == 1));
        prop_assert!(computed.iter().all(|&k| k <= 1));
    }

    #[test]
    fn perturbation_composes_and_saturates(layers in layers(), seed in 0u64..1000, pick in 0usize..1000, d in -2i64..=2) {
        let (model, _) = generate_synthetic(&SyntheticSpec::new(layers, seed)).unwrap();
        let s = (pick % model.num_synapses()) as u32;
        prop_assert_eq!(&model.perturb(s, 0).unwrap(), &model);
        for sat in [-2i64, 2] {
            let once = model.perturb(s, sat).unwrap();
            prop_assert_eq!(&once.perturb(s, sat).unwrap(), &once);
        }
        let level = i64::from(model.synapse(s).unwrap().level);
        if (0..=2).contains(&(level + d)) {
            prop_assert_eq!(&model.perturb(s, d).unwrap().perturb(s, -d).unwrap(), &model);
        }
    }

    #[test]
    fn levels_never_decrease(start in 0u8..3, bursts in prop::collection::vec(0u64..5000, 1..20), v in 0.3f64..0.6) {
        let p = calibrate_hrs(DEFAULT_HRS_ANCHORS[0], DEFAULT_HRS_ANCHORS[1]).unwrap();
        let mut state = CellState::programmed(start);
        for spikes in bursts {
            let (next, events) = accumulate_stress(&state, spikes, v, &p, 2).unwrap();
            prop_assert!(next.level >= state.level && next.level <= 2);
            prop_assert_eq!(usize::from(next.level - state.level), events.len());
            prop_assert!(events.iter().all(|e| e.to == e.from + 1));
            prop_assert!(next.accumulated_stress >= 0.0);
            state = next;
        }
    }
}
