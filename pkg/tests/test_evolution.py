"""Schrodinger-propagation tests against an independent dense-exponential oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ionramp.evolution import (
    afm_ground_probability,
    apply_decoherence,
    check_monotone_prevalence,
    evolve,
    instantaneous_state,
    outcome_distribution,
    sweep_ramp_families,
    time_to_match,
)
from ionramp.exceptions import ConfigError
from ionramp.ramps import exponential_ramp, linear_ramp, local_adiabatic_ramp
from ionramp.spectrum import gap_curve
from ionramp.spin_model import neel_indices
from ionramp.trap import calibrate_trap

from helpers import basis_change, expm_midpoint_evolve, minus_y_product_state

B0 = 3.85


@pytest.fixture(scope="module")
def chain4():
    _, couplings, _ = calibrate_trap(4)
    return couplings, gap_curve(couplings, B0)


@pytest.fixture(scope="module")
def chain6():
    _, couplings, _ = calibrate_trap(6)
    return couplings, gap_curve(couplings, B0)


@pytest.fixture(scope="module")
def result6(chain6):
    couplings, gap = chain6
    profile = local_adiabatic_ramp(gap, 1.2)
    return evolve(couplings, profile, snapshots_ms=np.linspace(0.0, 1.2, 7))


def _oracle_fidelity(couplings, profile, final_pkg: np.ndarray, n_steps: int) -> float:
    """|<oracle|final>|^2 with the oracle run in the z basis.

    The oracle halves its own step once and must agree with itself to
    1e-9 before the comparison counts.
    """
    n = couplings.n
    j = couplings.j_khz
    psi0 = minus_y_product_state(n)
    ref = expm_midpoint_evolve(j, profile.b_of, profile.tf_ms, n_steps, psi0)
    ref_half = expm_midpoint_evolve(j, profile.b_of, profile.tf_ms, 2 * n_steps, psi0)
    self_fid = abs(np.vdot(ref, ref_half)) ** 2
    assert 1.0 - self_fid < 1e-9, "oracle step size not converged"
    return float(abs(np.vdot(ref_half, basis_change(n) @ final_pkg)) ** 2)


def test_zero_time_distribution_exactly_uniform() -> None:
    for n in (2, 4, 6):
        dist = outcome_distribution(instantaneous_state(n))
        assert np.max(np.abs(dist.probabilities - 2.0**-n)) < 1e-10
        assert dist.probabilities.size == 2**n


def test_sweep_zero_time_column_is_two_over_dimension(chain4) -> None:
    couplings, gap = chain4
    sweep = sweep_ramp_families(couplings, gap, [0.0, 0.4])
    assert np.allclose(sweep.p_pop[:, 0], 2.0 * 2.0**-4, atol=1e-12)
    assert np.allclose(sweep.p_overlap[:, 0], 2.0 * 2.0**-4, atol=1e-12)


def test_evolve_matches_oracle_linear_ramp(chain4) -> None:
    couplings, _ = chain4
    profile = linear_ramp(B0, 0.8)
    result = evolve(couplings, profile)
    fid = _oracle_fidelity(couplings, profile, result.final_state, 4000)
    assert fid > 1.0 - 1e-8


def test_evolve_matches_oracle_local_adiabatic_ramp(result6, chain6) -> None:
    couplings, gap = chain6
    profile = local_adiabatic_ramp(gap, 1.2)
    fid = _oracle_fidelity(couplings, profile, result6.final_state, 6000)
    assert fid > 1.0 - 1e-8


def test_norm_drift_recorded_and_within_tolerance(result6) -> None:
    assert result6.meta["norm_drift"] < 1e-9
    assert result6.meta["halvings"] == 0
    assert result6.meta["n_steps"] >= 1


def test_overlap_bounded_by_population(result6) -> None:
    assert np.all(result6.p_overlap <= result6.p_pop + 1e-12)


def test_decoherence_is_exponential_multiplier(result6) -> None:
    damp = np.exp(-result6.t_ms / result6.t_d_ms)
    assert np.allclose(result6.p_pop_decohered, result6.p_pop * damp, atol=1e-15)
    assert np.allclose(
        result6.p_overlap_decohered, result6.p_overlap * damp, atol=1e-15
    )
    assert apply_decoherence(0.5, 33.0, 33.0) == pytest.approx(0.5 * math.exp(-1.0))
    with pytest.raises(ConfigError):
        apply_decoherence(0.5, -1.0, 33.0)
    with pytest.raises(ConfigError):
        apply_decoherence(0.5, 1.0, 0.0)


def test_snapshots_land_on_integrator_steps(result6) -> None:
    dt = result6.meta["dt_ms"]
    assert np.all(np.abs(result6.t_ms - result6.requested_t_ms) <= dt)
    assert result6.t_ms[0] == 0.0
    assert result6.t_ms[-1] == pytest.approx(1.2, abs=1e-12)


def test_verify_dt_confirms_step_choice(chain4) -> None:
    couplings, _ = chain4
    profile = linear_ramp(B0, 0.4)
    checked = evolve(couplings, profile, verify_dt=True)
    plain = evolve(couplings, profile)
    assert checked.meta["verified"] is True
    assert checked.meta["n_steps"] == plain.meta["n_steps"]
    assert checked.p_pop[-1] == plain.p_pop[-1]


def test_ultrafast_ramp_still_meets_drift_target(chain6) -> None:
    couplings, _ = chain6
    result = evolve(couplings, exponential_ramp(B0, 0.02))
    assert result.meta["norm_drift"] <= 1e-9


def test_sweep_shapes_and_family_rows(chain4) -> None:
    couplings, gap = chain4
    grid = [0.0, 0.6, 1.2]
    sweep = sweep_ramp_families(couplings, gap, grid)
    assert sweep.families == ("linear", "exponential", "local-adiabatic")
    assert sweep.p_pop.shape == (3, len(grid))
    assert sweep.p_overlap.shape == (3, len(grid))
    assert sweep.p_pop_decohered.shape == (3, len(grid))
    for i, family in enumerate(sweep.families):
        assert sweep.row(family) == i
    assert sweep.meta["n"] == 4


def test_schedule_families_ordered_by_design_quality(chain4) -> None:
    couplings, gap = chain4
    sweep = sweep_ramp_families(couplings, gap, [0.6, 1.2, 1.8])
    lin = sweep.p_pop[sweep.row("linear")]
    exp = sweep.p_pop[sweep.row("exponential")]
    la = sweep.p_pop[sweep.row("local-adiabatic")]
    assert np.all(la > exp)
    assert np.all(exp > lin)


def test_prevalence_monotone_in_ramp_time(chain4) -> None:
    couplings, gap = chain4
    sweep = sweep_ramp_families(couplings, gap, [0.4, 0.8, 1.2, 1.6])
    violations = check_monotone_prevalence(sweep, "local-adiabatic")
    assert violations == []


def test_time_to_match_hits_target_probability(chain4) -> None:
    couplings, gap = chain4
    target = evolve(couplings, local_adiabatic_ramp(gap, 0.6)).p_pop[-1]
    tf = time_to_match(
        couplings, gap, "exponential", target, tf_lo_ms=0.1, tf_hi_ms=30.0
    )
    achieved = evolve(couplings, exponential_ramp(B0, tf)).p_pop[-1]
    assert achieved == pytest.approx(target, rel=0.01)
    assert tf > 0.6  # a worse schedule needs longer to match


def test_final_state_population_matches_distribution(result6) -> None:
    state = result6.final_state
    dist = outcome_distribution(state)
    a, b = neel_indices(6)
    overlap, population = afm_ground_probability(state)
    assert population == pytest.approx(dist.probabilities[a] + dist.probabilities[b])
    assert overlap <= population + 1e-12
    assert result6.p_pop[-1] == pytest.approx(population)


def test_evolve_rejects_bad_inputs(chain4) -> None:
    couplings, _ = chain4
    profile = linear_ramp(B0, 0.8)
    with pytest.raises(ConfigError):
        evolve(couplings, profile, snapshots_ms=[0.0, 0.9])  # beyond tf
    with pytest.raises(ConfigError):
        evolve(couplings, profile, snapshots_ms=[-0.1])
    with pytest.raises(ConfigError):
        evolve(couplings, profile, t_d_ms=0.0)
    with pytest.raises(ConfigError):
        linear_ramp(B0, 0.0)  # zero-duration schedules have no profile
