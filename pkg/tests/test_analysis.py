"""Statistics-layer tests: sampling, prevalence ranking, repetition budgets, half-LZ."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from ionramp.analysis import (
    half_landau_zener,
    imparted_energy_khz,
    most_prevalent,
    required_repetitions,
    sample_counts,
)
from ionramp.evolution import (
    OutcomeDistribution,
    evolve,
    instantaneous_state,
    outcome_distribution,
)
from ionramp.exceptions import ConfigError
from ionramp.ramps import local_adiabatic_ramp
from ionramp.spectrum import gap_curve
from ionramp.spin_model import neel_indices
from ionramp.trap import calibrate_trap

from helpers import brute_classical_energies, lz_transition_ode


def _dist(p: np.ndarray) -> OutcomeDistribution:
    return OutcomeDistribution(probabilities=np.asarray(p, dtype=float), basis="x")


def _fraction_oracle(p_g: Fraction, p_e: Fraction) -> int:
    ratio = (p_g * p_g + p_e * p_e) / ((p_g - p_e) * (p_g - p_e))
    return int(ratio) + 1 if ratio == int(ratio) else int(ratio) + 1


def test_required_repetitions_hand_values() -> None:
    assert required_repetitions(1.0, 0.0) == 2
    assert required_repetitions(0.6, 0.4) == 14
    assert required_repetitions(0.9, 0.1) == 2


def test_required_repetitions_matches_exact_rational_oracle() -> None:
    rng = np.random.default_rng(20260819)
    done = 0
    while done < 10:
        num_g = int(rng.integers(2, 1000))
        num_e = int(rng.integers(1, num_g))
        if num_g == num_e:
            continue
        p_g = Fraction(num_g, 1000)
        p_e = Fraction(num_e, 1000)
        expected = _fraction_oracle(p_g, p_e)
        got = required_repetitions(num_g / 1000.0, num_e / 1000.0)
        # float rounding can land exactly on an integer ratio boundary;
        # the rational oracle is authoritative there
        assert got == expected, (num_g, num_e)
        done += 1


def test_required_repetitions_rejects_non_identifiable() -> None:
    with pytest.raises(ConfigError):
        required_repetitions(0.3, 0.3)
    with pytest.raises(ConfigError):
        required_repetitions(0.2, 0.5)
    with pytest.raises(ConfigError):
        required_repetitions(1.2, 0.1)
    with pytest.raises(ConfigError):
        required_repetitions(0.5, -0.1)


def test_sampling_is_deterministic_and_conserves_shots() -> None:
    dist = outcome_distribution(instantaneous_state(4))
    a = sample_counts(dist, 4000, 1234)
    b = sample_counts(dist, 4000, 1234)
    c = sample_counts(dist, 4000, 4321)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)
    assert a.counts.sum() == 4000
    assert a.counts.min() >= 0
    assert a.n_rep == 4000 and a.seed == 1234


def test_sample_counts_validation() -> None:
    dist = outcome_distribution(instantaneous_state(2))
    with pytest.raises(ConfigError):
        sample_counts(dist, 0, 1)
    with pytest.raises(ConfigError):
        sample_counts(dist, 10, -1)
    bad = _dist([0.5, 0.7])  # does not sum to one
    with pytest.raises(ConfigError):
        sample_counts(bad, 10, 1)


def test_counts_csv_header(tmp_path) -> None:
    dist = outcome_distribution(instantaneous_state(2))
    counts = sample_counts(dist, 100, 7)
    path = tmp_path / "counts.csv"
    counts.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bitstring_index,count"
    assert len(lines) == 5


def test_most_prevalent_exact_ranking() -> None:
    p = np.full(16, 0.46 / 14)
    p[0], p[1] = 0.3, 0.24
    report = most_prevalent(_dist(p), k=2)
    assert list(report.indices) == [0, 1]
    assert report.margin == pytest.approx(0.06)
    assert report.required_repetitions == 42
    assert report.top_set == frozenset({0, 1})
    assert report.bitstrings() == ["0000", "0001"]
    assert report.n_rep is None and report.seed is None


def test_most_prevalent_breaks_ties_by_ascending_index() -> None:
    p = np.full(12, (1.0 - 0.4) / 10)
    p[3] = p[9] = 0.2
    report = most_prevalent(_dist(p), k=2)
    assert list(report.indices) == [3, 9]
    assert report.margin == 0.0
    assert report.required_repetitions is None


def test_most_prevalent_uniform_margin_zero() -> None:
    report = most_prevalent(outcome_distribution(instantaneous_state(3)))
    assert report.indices[0] == 0
    assert report.margin == 0.0
    assert report.required_repetitions is None


def test_most_prevalent_on_sampled_counts() -> None:
    p = np.full(16, 0.46 / 14)
    p[0], p[1] = 0.3, 0.24
    counts = sample_counts(_dist(p), 20000, 99)
    report = most_prevalent(counts, k=2)
    assert report.indices[0] == 0
    assert report.n_rep == 20000 and report.seed == 99
    freqs = counts.frequencies()
    assert report.probabilities[0] == pytest.approx(freqs[0])


def test_ranking_stability_at_recommended_budget() -> None:
    # with n_rep = 25x the two-state budget the sampled leader should
    # almost always agree with the exact one
    p = np.full(16, 0.46 / 14)
    p[0], p[1] = 0.3, 0.24
    dist = _dist(p)
    budget = 25 * required_repetitions(0.3, 0.24)
    hits = 0
    for seed in range(100):
        counts = sample_counts(dist, budget, seed)
        if most_prevalent(counts).indices[0] == 0:
            hits += 1
    assert hits >= 95


def test_neel_pair_beats_uniform_at_any_ramp_time() -> None:
    _, couplings, _ = calibrate_trap(4)
    gap = gap_curve(couplings, 3.85)
    a, b = neel_indices(4)
    floor = 2.0 * 2.0**-4
    for tf in np.linspace(0.24, 2.4, 10):
        profile = local_adiabatic_ramp(gap, float(tf))
        state = evolve(couplings, profile).final_state
        probs = outcome_distribution(state).probabilities
        assert probs[a] + probs[b] > floor, tf


def test_half_lz_sudden_limit() -> None:
    assert half_landau_zener(0.2654, 0.0) == pytest.approx(0.5, abs=1e-3)


def test_half_lz_matches_adaptive_ode_oracle() -> None:
    gap = 0.2654
    b0 = 20.0 * gap
    for tf in (0.5, 5.0, 20.0):
        ours = half_landau_zener(gap, tf, b0)
        ref = lz_transition_ode(b0, gap / 2.0, tf)
        assert ours == pytest.approx(ref, abs=1e-4)


def test_half_lz_strictly_decreasing() -> None:
    gap = 0.2654
    b0 = 20.0 * gap
    grid = np.linspace(0.0, 150.0, 20)
    values = [half_landau_zener(gap, float(tf), b0) for tf in grid]
    assert all(x > y for x, y in zip(values, values[1:]))


def test_half_lz_adiabatic_limit_small() -> None:
    gap = 0.2654
    b0 = 20.0 * gap
    t_star = b0 / gap**2  # unit-adiabaticity sweep time
    assert half_landau_zener(gap, 100.0 * t_star, b0) < 0.01


def test_imparted_energy_zero_for_classical_ground() -> None:
    _, couplings, _ = calibrate_trap(4)
    energies = brute_classical_energies(couplings.j_khz)
    ground = int(np.argmin(energies))
    state = np.zeros(16, dtype=np.complex128)
    state[ground] = 1.0
    assert imparted_energy_khz(state, couplings) == pytest.approx(0.0, abs=1e-12)


def test_imparted_energy_of_uniform_state() -> None:
    _, couplings, _ = calibrate_trap(4)
    energies = brute_classical_energies(couplings.j_khz)
    expected = energies.mean() - energies.min()
    state = instantaneous_state(4)
    assert imparted_energy_khz(state, couplings) == pytest.approx(expected, rel=1e-10)
