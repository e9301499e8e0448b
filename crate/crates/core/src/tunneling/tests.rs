use super::*;
use crate::numerics::Tolerances;
use crate::quantile::{time_grid, trace_set, TraceMethod};
use crate::wavepacket::presets;

fn spectral() -> SpectralFunction {
    SpectralFunction::from_packet(&presets::packet(), 6.0, 256).unwrap()
}

fn fig2() -> TunnelScenario {
    TunnelScenario::new(spectral(), presets::barrier()).unwrap()
}

#[test]
fn decomposition_matches_frozen_values() {
    // independent evaluation of the three terms at (x, t) = (1, 6)
    let s = fig2();
    let d = delta_p_decomposition(&s.tunneling, 1.0, 6.0, 32).unwrap();
    assert!((d.term1 - 9.3555e-3).abs() < 1e-6, "{}", d.term1);
    assert!((d.term2 - 1.0542e-4).abs() < 1e-8, "{}", d.term2);
    assert!((d.term3 - 2.1908e-3).abs() < 1e-7, "{}", d.term3);
    let direct = delta_p_direct(&s.free, &s.tunneling, 1.0, 6.0).unwrap();
    assert!((direct - 0.62582).abs() < 1e-5, "{direct}");
    assert!((d.total - direct).abs() < 1e-3 * direct);
}

#[test]
fn free_limit_vanishes() {
    let s = TunnelScenario::new(spectral(), BarrierSpec::new(0.0, 0.3).unwrap()).unwrap();
    for &(x, t) in &[(0.5, 0.0), (1.0, 6.0), (4.0, 9.0)] {
        assert!(delta_p_direct(&s.free, &s.tunneling, x, t).unwrap().abs() < 1e-8);
        assert_eq!(delta_p_decomposition(&s.tunneling, x, t, 32).unwrap().total, 0.0);
    }
    assert!(
        (packet_transmission_probability(&spectral(), &BarrierSpec::new(0.0, 0.3).unwrap()).unwrap() - 1.0).abs()
            < 1e-13
    );
}

#[test]
fn far_field_is_zero_at_start() {
    let s = fig2();
    assert!(delta_p_direct(&s.free, &s.tunneling, 40.0, 0.0).unwrap().abs() < 1e-10);
}

#[test]
fn opaque_barrier_blocks() {
    let b = BarrierSpec::new(0.5 * 100.0 * 4.0, 0.3).unwrap();
    assert!(packet_transmission_probability(&spectral(), &b).unwrap() < 1e-6);
}

#[test]
fn rejects_points_inside_barrier() {
    let s = fig2();
    assert!(delta_p_decomposition(&s.tunneling, 0.1, 1.0, 32).is_err());
    assert!(delta_p_decomposition(&s.tunneling, 1.0, 1.0, 8).is_err());
    assert!(delta_p_report(&s, &[0.2], &[1.0], 32).is_err());
}

#[test]
fn retardation_for_several_heights() {
    let grid = time_grid(0.0, 12.0, 0.5).unwrap();
    let ps = [0.005, 0.01, 0.1, 0.3];
    for v in [1.0, 5.0, 10.0] {
        let s = TunnelScenario::new(spectral(), BarrierSpec::new(v, 0.3).unwrap()).unwrap();
        let tol = Tolerances::default();
        let free = trace_set(&s.free, &ps, &grid, TraceMethod::Cdf, &tol).unwrap();
        let tun = trace_set(&s.tunneling, &ps, &grid, TraceMethod::Cdf, &tol).unwrap();
        let verdicts = retardation_scan(&free, &tun, &s.barrier(), 1e-5).unwrap();
        for verdict in &verdicts {
            assert!(verdict.holds_transmitted, "V={v}: {verdict:?}");
        }
        // the smallest P always makes it through
        assert!(verdicts[0].transmitted > 0, "V={v}");
    }
}
