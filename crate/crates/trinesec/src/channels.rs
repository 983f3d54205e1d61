//! Channel and detector simulations that generate the observed statistics.
//!
//! Two levels of modeling:
//!
//! * single-photon: a qubit depolarizing channel, evaluated by exact Born-rule
//!   enumeration over Alice's `(r, b)` choices and Bob's outcomes;
//! * detector-level: phase-randomized coherent pulses into three threshold
//!   detectors with loss and dark counts, with multi-click events
//!   redistributed uniformly by the post-processing map.
//!
//! Everything here is closed-form probability arithmetic; no sampling.

use crate::error::{Error, Result};
use crate::matcore::{tensor_product, C64, CMat, ChannelKind, DensityOperator, KrausChannel};
use crate::protocol::{build_signal_set, entangled_source, source_marginal, ProtocolTables, Verdict};

// ---------------------------------------------------------------------------
// Single-photon depolarizing model
// ---------------------------------------------------------------------------

/// Exact statistics of the depolarizing channel at noise parameter `p`.
#[derive(Clone, Debug)]
pub struct DepolarizingStats {
    pub p: f64,
    /// Simulated joint state `(I (x) E_p)(source)`, dimension 12.
    pub rho: DensityOperator,
    /// Joint outcome probabilities `o_{j,k}` including Alice's 1/3 prior.
    pub outcomes: [[f64; 3]; 3],
    /// Probability a round survives sifting.
    pub p_pass: f64,
    /// Error rate among sifted rounds.
    pub e_bit: f64,
}

/// Simulates the depolarizing channel `E_p(x) = (1-p) x + p Tr(x) I/2` by
/// enumerating every `(r, b, outcome)` combination with exact Born-rule
/// probabilities. No closed-form shortcuts: the published summary formulas
/// are *checked against* this enumeration in tests, not used by it.
pub fn simulate_depolarizing(p: f64) -> Result<DepolarizingStats> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            detail: format!("depolarizing weight must be in [0, 1], got {p}"),
        });
    }
    let sig = build_signal_set();
    let tab = ProtocolTables::new();

    let mut outcomes = [[0.0f64; 3]; 3];
    let mut pass = 0.0f64;
    let mut err = 0.0f64;
    for r in 0..3 {
        for b in 0..2 {
            let j = tab.f(r, b);
            // Bob's received state for this branch.
            let pure = crate::matcore::outer(&sig.signals[j], &sig.signals[j]);
            let bob = pure.scale(1.0 - p).add(&CMat::identity(2).scale(p / 2.0));
            for k in 0..3 {
                let prob = sig.povm[k].inner_re(&bob).max(0.0);
                let weight = prob / 6.0; // uniform prior over (r, b)
                outcomes[j][k] += weight;
                match tab.g(k, r) {
                    Verdict::Inconclusive => {}
                    Verdict::Bit(guess) => {
                        pass += weight;
                        if guess as usize != b {
                            err += weight;
                        }
                    }
                }
            }
        }
    }
    if pass <= 0.0 {
        return Err(Error::DegenerateStatistics {
            context: "depolarizing pass probability is zero",
        });
    }

    let source = entangled_source()?;
    let rho_a = source_marginal()?;
    let mixed = tensor_product(&rho_a, &CMat::identity(2).scale(0.5));
    let rho = source.mat().scale(1.0 - p).add(&mixed.scale(p));
    Ok(DepolarizingStats {
        p,
        rho: DensityOperator::from_mat(rho)?,
        outcomes,
        p_pass: pass,
        e_bit: err / pass,
    })
}

// ---------------------------------------------------------------------------
// Fiber loss
// ---------------------------------------------------------------------------

/// Channel transmittance after `distance_km` of fiber at the given loss rate.
pub fn eta_from_distance(distance_km: f64, loss_db_per_km: f64) -> f64 {
    10f64.powf(-loss_db_per_km * distance_km / 10.0)
}

/// Single-photon loss channel from the bare qubit into the vacuum-flag space
/// (vacuum at index 0): the photon survives with amplitude `sqrt(eta)` or is
/// replaced by vacuum.
pub fn single_photon_loss_channel(eta: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter {
            name: "eta",
            detail: format!("transmittance must be in [0, 1], got {eta}"),
        });
    }
    let mut keep = CMat::zeros(3, 2);
    keep[(1, 0)] = C64::new(eta.sqrt(), 0.0);
    keep[(2, 1)] = C64::new(eta.sqrt(), 0.0);
    let mut lose0 = CMat::zeros(3, 2);
    lose0[(0, 0)] = C64::new((1.0 - eta).sqrt(), 0.0);
    let mut lose1 = CMat::zeros(3, 2);
    lose1[(0, 1)] = C64::new((1.0 - eta).sqrt(), 0.0);
    KrausChannel::new(vec![keep, lose0, lose1], ChannelKind::TracePreserving)
}

// ---------------------------------------------------------------------------
// Detector-level model
// ---------------------------------------------------------------------------

/// One detector configuration: pulse intensity, transmittance, dark-count
/// probability per detector per gate.
#[derive(Clone, Copy, Debug)]
pub struct CoherentScenario {
    pub mu: f64,
    pub eta: f64,
    pub dark_rate: f64,
}

impl CoherentScenario {
    fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                detail: format!("intensity must be nonnegative, got {}", self.mu),
            });
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter {
                name: "eta",
                detail: format!("transmittance must be in [0, 1], got {}", self.eta),
            });
        }
        if !(0.0..1.0).contains(&self.dark_rate) {
            return Err(Error::InvalidParameter {
                name: "dark_rate",
                detail: format!("dark rate must be in [0, 1), got {}", self.dark_rate),
            });
        }
        Ok(())
    }
}

/// Per-photon routing probability `q_{j,k} = Tr(P_k |psi_j><psi_j|)`:
/// 1/2 to each non-matching detector, 0 to the matching one.
fn routing_probability(j: usize, k: usize) -> f64 {
    let sig = build_signal_set();
    let pure = crate::matcore::outer(&sig.signals[j], &sig.signals[j]);
    sig.povm[k].inner_re(&pure).max(0.0)
}

/// Mean photon number reaching detector `k` when signal `j` is sent:
/// `mu_{j,k} = eta * mu * Tr(P_k |psi_j><psi_j|)`.
pub fn detector_intensity(scn: &CoherentScenario, j: usize, k: usize) -> f64 {
    scn.eta * scn.mu * routing_probability(j, k)
}

/// Bit of detector `k` in pattern value `v = 4 b_1 + 2 b_2 + b_3`, where
/// detector `k+1` guards POVM outcome `k`.
#[inline]
pub fn pattern_bit(v: usize, k: usize) -> bool {
    (v >> (2 - k)) & 1 == 1
}

/// Probabilities of the eight click patterns for signal `j` under a
/// phase-randomized coherent pulse. Detectors fire independently with
/// `p_k = 1 - exp(-mu_{j,k}) (1 - dark_rate)`.
pub fn click_pattern_stats(scn: &CoherentScenario, j: usize) -> Result<[f64; 8]> {
    scn.validate()?;
    if j >= 3 {
        return Err(Error::InvalidParameter {
            name: "j",
            detail: format!("signal index must be 0..3, got {j}"),
        });
    }
    let p: Vec<f64> = (0..3)
        .map(|k| 1.0 - (-detector_intensity(scn, j, k)).exp() * (1.0 - scn.dark_rate))
        .collect();
    let mut out = [0.0f64; 8];
    for (v, slot) in out.iter_mut().enumerate() {
        let mut prob = 1.0;
        for (k, pk) in p.iter().enumerate() {
            prob *= if pattern_bit(v, k) { *pk } else { 1.0 - pk };
        }
        *slot = prob;
    }
    Ok(out)
}

/// Click-pattern probabilities for exactly `n` photons in signal state `j`.
///
/// Each photon independently survives with probability `eta` and routes with
/// `q_{j,k}`; dark counts OR into the photon-generated pattern. Computed by
/// Mobius inversion of `P(clicks subset of T)`, which factorizes exactly.
pub fn nphoton_click_pattern_stats(
    n: usize,
    j: usize,
    eta: f64,
    dark_rate: f64,
) -> Result<[f64; 8]> {
    let scn = CoherentScenario {
        mu: 0.0,
        eta,
        dark_rate,
    };
    scn.validate()?;
    if j >= 3 {
        return Err(Error::InvalidParameter {
            name: "j",
            detail: format!("signal index must be 0..3, got {j}"),
        });
    }
    let q: Vec<f64> = (0..3).map(|k| routing_probability(j, k)).collect();
    let mut out = [0.0f64; 8];
    for (v, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        // Subsets T of the clicked set v.
        for t in 0..8usize {
            if t & !v != 0 {
                continue;
            }
            let q_t: f64 = (0..3).filter(|&k| pattern_bit(t, k)).map(|k| q[k]).sum();
            let size_t = (0..3).filter(|&k| pattern_bit(t, k)).count();
            let sign = if (v.count_ones() as usize - size_t) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += sign
                * (1.0 - eta + eta * q_t).powi(n as i32)
                * (1.0 - dark_rate).powi(3 - size_t as i32);
        }
        *slot = acc.max(0.0);
    }
    Ok(out)
}

/// Post-processing map from the seven click classes to announced outcomes.
/// Column order: single clicks 1, 2, 3, then doubles 12, 13, 23, then 123.
/// Single clicks announce their detector; every multi-click class announces
/// each outcome with probability 1/3.
fn post_processing_matrix() -> [[f64; 7]; 3] {
    let third = 1.0 / 3.0;
    [
        [1.0, 0.0, 0.0, third, third, third, third],
        [0.0, 1.0, 0.0, third, third, third, third],
        [0.0, 0.0, 1.0, third, third, third, third],
    ]
}

/// Pattern value carried by each post-processing column.
const CLASS_PATTERNS: [usize; 7] = [4, 2, 1, 6, 5, 3, 7];

/// Announced-outcome statistics conditional on each signal: `o[j][k]` for
/// outcomes `k = 0..3` and `o[j][3]` for no click. Rows sum to one.
#[derive(Clone, Copy, Debug)]
pub struct OutcomeStats {
    pub o: [[f64; 4]; 3],
}

fn apply_post_processing(patterns: &[[f64; 8]; 3]) -> Result<OutcomeStats> {
    let pp = post_processing_matrix();
    for col in 0..7 {
        let s: f64 = (0..3).map(|row| pp[row][col]).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "post_processing",
                detail: format!("column {col} sums to {s}, not 1"),
            });
        }
    }
    let mut o = [[0.0f64; 4]; 3];
    for j in 0..3 {
        for (col, &v) in CLASS_PATTERNS.iter().enumerate() {
            for k in 0..3 {
                o[j][k] += pp[k][col] * patterns[j][v];
            }
        }
        o[j][3] = patterns[j][0];
    }
    Ok(OutcomeStats { o })
}

/// Announced-outcome statistics for a coherent-pulse scenario.
pub fn full_outcome_stats(scn: &CoherentScenario) -> Result<OutcomeStats> {
    let patterns = [
        click_pattern_stats(scn, 0)?,
        click_pattern_stats(scn, 1)?,
        click_pattern_stats(scn, 2)?,
    ];
    apply_post_processing(&patterns)
}

/// Announced-outcome statistics when exactly `n` photons are sent.
pub fn nphoton_outcome_stats(n: usize, eta: f64, dark_rate: f64) -> Result<OutcomeStats> {
    let patterns = [
        nphoton_click_pattern_stats(n, 0, eta, dark_rate)?,
        nphoton_click_pattern_stats(n, 1, eta, dark_rate)?,
        nphoton_click_pattern_stats(n, 2, eta, dark_rate)?,
    ];
    apply_post_processing(&patterns)
}

// ---------------------------------------------------------------------------
// Sifting statistics
// ---------------------------------------------------------------------------

/// Exact sifted-pass probability from announced-outcome statistics: outcome
/// `j` always passes (both announcement branches keep it), outcomes adjacent
/// to `j` pass in one branch of two.
pub fn pass_fraction_exact(stats: &OutcomeStats) -> f64 {
    let mut acc = 0.0;
    for j in 0..3 {
        acc += stats.o[j][j] + 0.5 * stats.o[j][(j + 1) % 3] + 0.5 * stats.o[j][(j + 2) % 3];
    }
    acc / 3.0
}

/// Upper estimate of the pass probability: counts every click as passing.
pub fn pass_fraction_upper(stats: &OutcomeStats) -> f64 {
    let mut acc = 0.0;
    for j in 0..3 {
        for k in 0..3 {
            acc += stats.o[j][k];
        }
    }
    acc / 3.0
}

/// Certified sifting bounds used by the detector-level key rate.
#[derive(Clone, Copy, Debug)]
pub struct SiftBounds {
    /// Lower bound on the pass probability (single-click events only).
    pub p_pass_lower: f64,
    /// Upper estimate of the sifted error rate.
    pub e_bit_upper: f64,
}

/// Sifting bounds from single-click pattern statistics.
///
/// The pass lower bound keeps only unambiguous single-click events, each
/// weighted by its surviving announcement branches; the error estimate counts
/// every pattern in which the error-indicating detector fired, normalized by
/// that same lower bound.
pub fn sift_bounds_coherent(scn: &CoherentScenario) -> Result<SiftBounds> {
    let mut pass_lower = 0.0f64;
    let mut err_mass = 0.0f64;
    for j in 0..3 {
        let patterns = click_pattern_stats(scn, j)?;
        // Single-click probabilities s_{j,k}: pattern with only detector k.
        let s = |k: usize| patterns[1usize << (2 - k)];
        pass_lower += 2.0 * s(j) + s((j + 1) % 3) + s((j + 2) % 3);
        for (v, &prob) in patterns.iter().enumerate() {
            if pattern_bit(v, j) {
                err_mass += prob;
            }
        }
    }
    let p_pass_lower = pass_lower / 6.0;
    let e_num = err_mass / 3.0;
    if p_pass_lower <= 0.0 {
        return Err(Error::DegenerateStatistics {
            context: "pass-probability lower bound is zero; error rate undefined",
        });
    }
    Ok(SiftBounds {
        p_pass_lower,
        e_bit_upper: e_num / p_pass_lower,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoy::poisson_weight;
    use crate::matcore::test_support::assert_close;
    use crate::protocol::{build_observables, BobSpace};

    #[test]
    fn depolarizing_matches_closed_forms_on_grid() {
        // p_pass = 1/2 + p/6 and e_bit = 2p/(3+p), derived independently by
        // hand from the enumeration; the simulation must reproduce them.
        let mut p = 0.0;
        while p <= 0.3 + 1e-12 {
            let stats = simulate_depolarizing(p).unwrap();
            assert_close(stats.p_pass, 0.5 + p / 6.0, 1e-12);
            assert_close(stats.e_bit, 2.0 * p / (3.0 + p), 1e-12);
            p += 0.01;
        }
    }

    #[test]
    fn depolarizing_error_rate_at_published_noise_level() {
        let stats = simulate_depolarizing(0.18).unwrap();
        assert_close(stats.e_bit, 0.113207547170, 1e-12);
    }

    #[test]
    fn noiseless_outcomes_never_hit_matching_detector() {
        let stats = simulate_depolarizing(0.0).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let want = if j == k { 0.0 } else { 1.0 / 6.0 };
                assert_close(stats.outcomes[j][k], want, 1e-12);
            }
        }
    }

    #[test]
    fn enumerated_outcomes_match_state_level_born_rule() {
        let obs = build_observables(BobSpace::Qubit).unwrap();
        for &p in &[0.0, 0.07, 0.18, 0.29] {
            let stats = simulate_depolarizing(p).unwrap();
            for o in &obs.outcomes {
                let born = o.op.inner_re(stats.rho.mat());
                assert_close(stats.outcomes[o.j][o.k], born, 1e-12);
            }
        }
    }

    #[test]
    fn simulated_state_satisfies_source_constraints() {
        let obs = build_observables(BobSpace::Qubit).unwrap();
        for &p in &[0.0, 0.1, 0.25] {
            let stats = simulate_depolarizing(p).unwrap();
            for t in &obs.thetas {
                let got = t.op.inner_re(stats.rho.mat());
                assert_close(got, t.value, 1e-12);
            }
        }
    }

    #[test]
    fn transmittance_from_distance() {
        assert_close(eta_from_distance(0.0, 0.2), 1.0, 1e-15);
        assert_close(eta_from_distance(50.0, 0.2), 0.1, 1e-12);
        assert_close(eta_from_distance(100.0, 0.2), 0.01, 1e-12);
    }

    #[test]
    fn loss_channel_is_trace_preserving_and_routes_vacuum() {
        let ch = single_photon_loss_channel(0.3).unwrap();
        let sig = build_signal_set();
        let pure = crate::matcore::outer(&sig.signals[0], &sig.signals[0]);
        let out = ch.apply(&pure).unwrap();
        assert_close(out[(0, 0)].re, 0.7, 1e-12);
        assert_close(out.trace().re, 1.0, 1e-12);
    }

    #[test]
    fn detector_intensities_follow_routing() {
        let scn = CoherentScenario {
            mu: 0.8,
            eta: 0.25,
            dark_rate: 0.0,
        };
        for j in 0..3 {
            for k in 0..3 {
                let want = if j == k { 0.0 } else { 0.5 * 0.8 * 0.25 };
                assert_close(detector_intensity(&scn, j, k), want, 1e-12);
            }
        }
    }

    #[test]
    fn click_patterns_are_a_distribution() {
        let scn = CoherentScenario {
            mu: 0.6,
            eta: 0.4,
            dark_rate: 1e-5,
        };
        for j in 0..3 {
            let p = click_pattern_stats(&scn, j).unwrap();
            let total: f64 = p.iter().sum();
            assert_close(total, 1.0, 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn outcome_rows_sum_to_one() {
        let scn = CoherentScenario {
            mu: 0.5,
            eta: 0.2,
            dark_rate: 1e-6,
        };
        let stats = full_outcome_stats(&scn).unwrap();
        for j in 0..3 {
            let total: f64 = stats.o[j].iter().sum();
            assert_close(total, 1.0, 1e-12);
        }
    }

    #[test]
    fn nphoton_patterns_are_distributions() {
        for n in 0..6 {
            for j in 0..3 {
                let p = nphoton_click_pattern_stats(n, j, 0.35, 1e-4).unwrap();
                let total: f64 = p.iter().sum();
                assert_close(total, 1.0, 1e-11);
                assert!(p.iter().all(|&x| x >= -1e-15));
            }
        }
    }

    #[test]
    fn zero_photons_click_only_on_darks() {
        let p = nphoton_click_pattern_stats(0, 1, 0.5, 0.0).unwrap();
        assert_close(p[0], 1.0, 1e-14);
        let pd = 0.01;
        let p = nphoton_click_pattern_stats(0, 1, 0.5, pd).unwrap();
        assert_close(p[0], (1.0 - pd).powi(3), 1e-14);
        // Alternating-sum cancellation limits accuracy to ~1e-16 absolute.
        assert_close(p[7], pd.powi(3), 1e-15);
    }

    #[test]
    fn one_photon_without_darks_matches_state_level_born_rule() {
        let eta = 0.37;
        let stats = nphoton_outcome_stats(1, eta, 0.0).unwrap();
        let obs = build_observables(BobSpace::VacuumQubit).unwrap();
        let source = crate::protocol::entangled_source().unwrap();
        let loss = single_photon_loss_channel(eta).unwrap();
        // (I (x) loss) applied to the 12-dim source.
        let mut kraus18 = Vec::new();
        for k in loss.ops() {
            kraus18.push(crate::matcore::tensor_product(&CMat::identity(6), k));
        }
        let ch = KrausChannel::new(kraus18, ChannelKind::TracePreserving).unwrap();
        let rho1 = ch.apply(source.mat()).unwrap();
        for o in &obs.outcomes {
            let born = 3.0 * o.op.inner_re(&rho1); // strip the 1/3 prior
            assert_close(stats.o[o.j][o.k], born, 1e-12);
        }
    }

    #[test]
    fn poisson_mixture_of_photon_numbers_matches_coherent_stats() {
        let scn = CoherentScenario {
            mu: 0.5,
            eta: 0.3,
            dark_rate: 1e-6,
        };
        let coherent = full_outcome_stats(&scn).unwrap();
        let mut mixed = [[0.0f64; 4]; 3];
        for n in 0..=40 {
            let w = poisson_weight(scn.mu, n);
            let per_n = nphoton_outcome_stats(n, scn.eta, scn.dark_rate).unwrap();
            for j in 0..3 {
                for k in 0..4 {
                    mixed[j][k] += w * per_n.o[j][k];
                }
            }
        }
        for j in 0..3 {
            for k in 0..4 {
                assert_close(mixed[j][k], coherent.o[j][k], 1e-8);
            }
        }
    }

    #[test]
    fn pass_lower_bound_never_exceeds_exact_pass_probability() {
        let mus = [0.05, 0.2, 0.5, 1.0];
        let etas = [1.0, 0.3, 0.05, 0.005];
        let darks = [0.0, 1e-6, 1e-3];
        for &mu in &mus {
            for &eta in &etas {
                for &dark_rate in &darks {
                    let scn = CoherentScenario {
                        mu,
                        eta,
                        dark_rate,
                    };
                    let bounds = sift_bounds_coherent(&scn).unwrap();
                    let exact = pass_fraction_exact(&full_outcome_stats(&scn).unwrap());
                    assert!(
                        bounds.p_pass_lower <= exact + 1e-12,
                        "lower bound {} above exact {} at mu={mu} eta={eta} pd={dark_rate}",
                        bounds.p_pass_lower,
                        exact
                    );
                    assert!(bounds.p_pass_lower >= 0.0);
                    assert!(bounds.e_bit_upper.is_finite());
                }
            }
        }
    }

    #[test]
    fn sift_bounds_error_estimate_dominated_by_darks_at_zero_noise() {
        // Without darks and with the matching detector dead, the only
        // error-indicating patterns involve detector j firing, which cannot
        // happen for single photons of signal j.
        let scn = CoherentScenario {
            mu: 0.1,
            eta: 0.5,
            dark_rate: 0.0,
        };
        let bounds = sift_bounds_coherent(&scn).unwrap();
        assert_close(bounds.e_bit_upper, 0.0, 1e-12);
        let scn_dark = CoherentScenario {
            mu: 0.1,
            eta: 0.5,
            dark_rate: 1e-4,
        };
        let with_darks = sift_bounds_coherent(&scn_dark).unwrap();
        assert!(with_darks.e_bit_upper > 0.0);
    }

    #[test]
    fn degenerate_scenario_is_reported() {
        // eta = 0 and no darks: nothing ever clicks, pass bound is zero.
        let scn = CoherentScenario {
            mu: 0.5,
            eta: 0.0,
            dark_rate: 0.0,
        };
        match sift_bounds_coherent(&scn) {
            Err(Error::DegenerateStatistics { .. }) => {}
            other => panic!("expected DegenerateStatistics, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(simulate_depolarizing(-0.1).is_err());
        assert!(simulate_depolarizing(1.1).is_err());
        let scn = CoherentScenario {
            mu: -1.0,
            eta: 0.5,
            dark_rate: 0.0,
        };
        assert!(click_pattern_stats(&scn, 0).is_err());
        let scn = CoherentScenario {
            mu: 1.0,
            eta: 1.5,
            dark_rate: 0.0,
        };
        assert!(full_outcome_stats(&scn).is_err());
    }
}
