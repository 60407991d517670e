"""Statistics on measured bitstrings and small diagnostic models.

The ground state of the classical coupling Hamiltonian is identified
from finite measurement records by majority: sample the outcome
distribution, count each bitstring, and take the most prevalent one.
This file provides the seeded sampler, the prevalence report (with the
shot-budget estimate for a statistically safe identification), a
two-level half-crossing model that calibrates how much diabatic loss a
finite-speed sweep into a critical point costs, and the mean imparted
energy diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend
from .evolution import OutcomeDistribution
from .exceptions import ConfigError
from .spin_model import CouplingMatrix, classical_energies

# Default ratio of the starting field to the two-level crossing gap.
# Large enough that the initial ground state is indistinguishable from
# the bare spin-down state (admixture (gap/2B0)^2 ~ 6e-8), so the
# sudden-sweep transition probability reads 0.5 to much better than
# the 1e-3 the calibration cares about.
LZ_FIELD_TO_GAP = 1000.0

# Largest rotation angle (radians) a single two-level step may apply.
LZ_THETA = 0.5

# Floor on the step count of the two-level integrator.
LZ_MIN_STEPS = 1024


@dataclass(frozen=True)
class SampledCounts:
    """Multinomial measurement record over the 2^n bitstrings."""

    counts: np.ndarray
    n_rep: int
    seed: int
    basis: str = "x"

    @property
    def n(self) -> int:
        return int(round(math.log2(self.counts.size)))

    def frequencies(self) -> np.ndarray:
        return self.counts / float(self.n_rep)

    def to_csv(self, path: str | Path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bitstring_index", "count"])
            for idx, c in enumerate(self.counts):
                writer.writerow([idx, int(c)])


def sample_counts(
    dist: OutcomeDistribution, n_rep: int, seed: int
) -> SampledCounts:
    """Draw a seeded multinomial measurement record from a distribution.

    The same (distribution, n_rep, seed) triple always returns the same
    counts, on any platform numpy supports.
    """
    if n_rep < 1:
        raise ConfigError(f"repetition count must be positive, got {n_rep}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    p = np.asarray(dist.probabilities, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ConfigError("distribution must be a 1-d vector over >= 2 outcomes")
    if np.any(p < -1e-12):
        raise ConfigError("distribution has negative entries")
    total = float(p.sum())
    if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise ConfigError(f"distribution sums to {total!r}, not 1")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_rep, p).astype(np.int64)
    return SampledCounts(counts=counts, n_rep=n_rep, seed=seed, basis=dist.basis)


@dataclass(frozen=True)
class PrevalenceReport:
    """Ranked bitstrings by observed frequency, ties broken by index.

    ``margin`` is the frequency separation between the most prevalent
    state and the runner-up; ``required_repetitions`` estimates the
    shot budget that makes that separation statistically safe, and is
    None when the top two frequencies tie (no budget can split them).
    """

    n: int
    indices: np.ndarray
    probabilities: np.ndarray
    margin: float
    required_repetitions: int | None
    n_rep: int | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def top_set(self) -> frozenset[int]:
        return frozenset(int(i) for i in self.indices)

    def bitstrings(self) -> list[str]:
        return [format(int(i), f"0{self.n}b") for i in self.indices]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "ranked_indices": [int(i) for i in self.indices],
            "ranked_bitstrings": self.bitstrings(),
            "ranked_probabilities": [float(p) for p in self.probabilities],
            "top_set": sorted(int(i) for i in self.indices),
            "margin": float(self.margin),
            "required_repetitions": self.required_repetitions,
            "n_rep": self.n_rep,
            "seed": self.seed,
        }


def most_prevalent(
    source: SampledCounts | OutcomeDistribution, k: int = 1
) -> PrevalenceReport:
    """Rank bitstrings by prevalence and report the top k.

    Accepts either a sampled record (frequencies = counts / n_rep) or
    an exact distribution (the infinite-repetition limit).  Equal
    frequencies rank in ascending bitstring order, so the report is a
    pure function of its input.
    """
    if isinstance(source, SampledCounts):
        freqs = source.frequencies()
        n_rep: int | None = source.n_rep
        seed: int | None = source.seed
    elif isinstance(source, OutcomeDistribution):
        freqs = np.asarray(source.probabilities, dtype=np.float64)
        n_rep = None
        seed = None
    else:
        raise ConfigError(
            "source must be SampledCounts or OutcomeDistribution, "
            f"got {type(source).__name__}"
        )
    dim = freqs.size
    if not 1 <= k <= dim:
        raise ConfigError(f"k must lie in [1, {dim}], got {k}")
    n = int(round(math.log2(dim)))
    # lexsort's last key is primary: descending frequency, then index.
    order = np.lexsort((np.arange(dim), -freqs))
    p_g = float(freqs[order[0]])
    p_e = float(freqs[order[1]])
    margin = p_g - p_e
    required = required_repetitions(p_g, p_e) if p_g > p_e else None
    return PrevalenceReport(
        n=n,
        indices=order[:k].copy(),
        probabilities=freqs[order[:k]].astype(np.float64),
        margin=margin,
        required_repetitions=required,
        n_rep=n_rep,
        seed=seed,
    )


def required_repetitions(p_g: float, p_e: float) -> int:
    """Shots needed before the top state reliably out-counts the runner-up.

    The count difference after n shots has mean n * (p_g - p_e) and
    variance at most n * (p_g + p_e - (p_g - p_e)^2) <= n * (p_g^2 +
    p_e^2 + 2 p_g p_e ...); the working criterion is mean^2 exceeding
    the summed variances of the two counters, n > (p_g^2 + p_e^2) /
    (p_g - p_e)^2, rounded up to the next integer strictly above the
    bound.
    """
    if not 0.0 <= p_e < p_g <= 1.0:
        raise ConfigError(
            "most-prevalent identification needs p_g > p_e >= 0, got "
            f"p_g={p_g!r}, p_e={p_e!r} (non-identifiable)"
        )
    ratio = (p_g * p_g + p_e * p_e) / (p_g - p_e) ** 2
    return int(math.floor(ratio)) + 1


def half_landau_zener(
    gap_khz: float,
    tf_ms: float,
    b0_khz: float | None = None,
    *,
    theta: float = LZ_THETA,
) -> float:
    """Transition probability of a linear sweep stopped at its crossing.

    Two-level model H(B) = [[B, g], [g, -B]] with g = gap/2, so the
    avoided crossing at B = 0 has total gap ``gap_khz``.  The sweep
    takes B linearly from b0 (default 1000x the gap) to 0 over tf_ms,
    starting in the instantaneous ground state, and the result is the
    population left outside the final ground state.  Stopping at the
    crossing caps the sudden-limit value at 0.5: the initial state
    splits evenly over the two crossing eigenstates.
    """
    if gap_khz <= 0.0:
        raise ConfigError(f"gap must be positive, got {gap_khz}")
    if tf_ms < 0.0:
        raise ConfigError(f"ramp time must be non-negative, got {tf_ms}")
    if b0_khz is None:
        b0_khz = LZ_FIELD_TO_GAP * gap_khz
    if b0_khz <= 0.0:
        raise ConfigError(f"starting field must be positive, got {b0_khz}")
    g = 0.5 * gap_khz
    start = np.array([[b0_khz, g], [g, -b0_khz]])
    _, vecs = np.linalg.eigh(start)
    psi0 = vecs[:, 0].astype(np.complex128)
    if tf_ms == 0.0:
        psi = psi0
    else:
        e_max = math.hypot(b0_khz, g)
        n_steps = max(LZ_MIN_STEPS, math.ceil(tf_ms * 2.0 * math.pi * e_max / theta))
        psi = backend.lz_propagate(b0_khz, 0.0, g, tf_ms, n_steps, psi0)
    # Ground state at the crossing for g > 0: (|0> - |1>) / sqrt(2).
    ground_final = np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2.0)
    stay = abs(np.vdot(ground_final, psi)) ** 2
    return float(1.0 - stay)


def imparted_energy_khz(state: np.ndarray, couplings: CouplingMatrix) -> float:
    """Mean energy above the classical ground state after a ramp.

    <psi|H(B=0)|psi> - E_ground, a scalar figure of how much the ramp
    heated the register; zero exactly when the state reached the
    classical ground manifold.
    """
    energies = classical_energies(couplings)
    if state.size != energies.size:
        raise ConfigError(
            f"state dimension {state.size} does not match the register "
            f"dimension {energies.size}"
        )
    pops = np.abs(state) ** 2
    total = float(pops.sum())
    if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-6):
        raise ConfigError(f"state norm^2 is {total!r}, not 1")
    return float(pops @ energies - energies.min())
