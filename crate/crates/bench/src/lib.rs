//! Fixtures shared by the kernel benchmarks.

use toda_core::asymptotics::{divisor_gap, ChiSource, TwoBandModel};
use toda_core::lattice::{evolve, make_step_initial};
use toda_core::riemann::TwoBandSurface;
use toda_core::{Background, LatticeState};

/// The shock step (0.4, −2) | (1/2, 0) evolved to `t` on [−half, half].
pub fn shock_state(half: i64, t: f64) -> LatticeState {
    let left = Background::new(0.4, -2.0).expect("valid background");
    let s = make_step_initial(left, Background::unit(), (-half, half)).expect("window");
    if t > 0.0 {
        evolve(&s, t, 1e-10, 1e-10).expect("evolve")
    } else {
        s
    }
}

/// Gap-zone theta solution of the same shock.
pub fn gap_model() -> TwoBandModel {
    let left = Background::new(0.4, -2.0).expect("valid background");
    let s = TwoBandSurface::new(left.inf(), left.sup(), -1.0, 1.0).expect("surface");
    let w = divisor_gap(&s, &ChiSource::pure_step(left, Background::unit())).expect("divisor");
    TwoBandModel::new(s, w).expect("model")
}
