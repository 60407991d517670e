"""Transverse-field ramp schedules and adiabaticity diagnostics.

Three schedule families take the field from B0 to 0 over tf
milliseconds: a straight line, an exponential with time constant
tf / 6, and a locally adiabatic profile that slows down exactly where
the coupled gap is small so the pointwise adiabaticity

    gamma = Delta(B)^2 / |dB/dt|

stays constant.  The locally adiabatic schedule is built by quadrature:
the time to reach field B is proportional to the integral of
1 / Delta^2 from B up to B0, and inverting that monotone map gives
B(t).  The same integral over the whole window converts between gamma
and total ramp time, and evaluated from the critical field up it gives
the time the schedule takes to reach the critical point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from .exceptions import ConfigError
from .spectrum import GapCurve, critical_point

# Canonical length of the serialized schedule table.
SCHEDULE_SAMPLES = 1000

# Dense node count for the schedule-design quadratures; matches the
# GapCurve integral's grid so gamma <-> tf conversions agree exactly.
QUADRATURE_POINTS = 4001

LINEAR = "linear"
EXPONENTIAL = "exponential"
LOCAL_ADIABATIC = "local-adiabatic"
PIECEWISE_APPROXIMATE = "piecewise-approximate"

FAMILIES = (LINEAR, EXPONENTIAL, LOCAL_ADIABATIC)


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ConfigError(f"{name} must be positive and finite, got {value}")
    return value


@dataclass(frozen=True)
class RampProfile:
    """One field schedule B(t): family tag, endpoints, sampled table.

    The table is the canonical serialized form; evaluation uses the
    closed form for the linear and exponential families (so their
    stated identities hold exactly) and monotone-cubic interpolation of
    the table for quadrature-built profiles.  B(0) = B0 and B(tf) = 0
    exactly for every family; the exponential's residual B0 e^-6 is
    clamped to zero at tf and the jump size recorded in meta.
    """

    family: str
    b0_khz: float
    tf_ms: float
    t_ms: np.ndarray
    b_khz: np.ndarray
    tau_ms: float | None = None
    gamma: float | None = None
    slope_table: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.t_ms.shape != self.b_khz.shape or self.t_ms.ndim != 1:
            raise ConfigError("schedule table must be two equal-length 1-d arrays")
        if self.slope_table is not None and self.slope_table.shape != self.t_ms.shape:
            raise ConfigError("slope table must match the schedule table length")
        if self.b_khz[0] != self.b0_khz or self.b_khz[-1] != 0.0:
            raise ConfigError("schedule must start at B0 and end at exactly 0")
        if np.any(np.diff(self.b_khz) > 0.0):
            raise ConfigError("schedule must be non-increasing")

    @cached_property
    def _table_interp(self) -> PchipInterpolator:
        # monotone-cubic keeps the interpolated schedule non-increasing
        return PchipInterpolator(self.t_ms, self.b_khz)

    @cached_property
    def _table_slope(self) -> PchipInterpolator:
        # quadrature-built families carry the slope their design rule
        # dictates; differentiating the sampled B(t) is the fallback
        if self.slope_table is not None:
            return PchipInterpolator(self.t_ms, self.slope_table)
        return self._table_interp.derivative()

    def b_of(self, t: np.ndarray | float) -> np.ndarray | float:
        """Field at time t; t is clamped to [0, tf] outside the ramp."""
        t = np.clip(t, 0.0, self.tf_ms)
        if self.family == LINEAR:
            return self.b0_khz * (1.0 - t / self.tf_ms)
        if self.family == EXPONENTIAL:
            raw = self.b0_khz * np.exp(-t / self.tau_ms)
            return np.where(np.asarray(t) >= self.tf_ms, 0.0, raw)[()]
        return np.clip(self._table_interp(t), 0.0, self.b0_khz)

    def slope_of(self, t: np.ndarray | float) -> np.ndarray | float:
        """dB/dt in kHz per ms; non-positive everywhere.

        The exponential reports its left-limit slope at tf (the clamp
        discontinuity lives in b_of, not here).
        """
        t = np.clip(t, 0.0, self.tf_ms)
        if self.family == LINEAR:
            slope = -self.b0_khz / self.tf_ms
            return np.full(np.shape(t), slope)[()] if np.ndim(t) else slope
        if self.family == EXPONENTIAL:
            return -self.b0_khz / self.tau_ms * np.exp(-t / self.tau_ms)
        return np.minimum(self._table_slope(t), 0.0)

    def time_at_field(self, b_khz: float) -> float:
        """Inverse schedule: the time at which B(t) first equals b_khz."""
        if not 0.0 <= b_khz <= self.b0_khz:
            raise ConfigError(
                f"field {b_khz} outside the schedule range [0, {self.b0_khz}]"
            )
        if self.family == LINEAR:
            return self.tf_ms * (1.0 - b_khz / self.b0_khz)
        if self.family == EXPONENTIAL:
            if b_khz <= self.b0_khz * math.exp(-self.tf_ms / self.tau_ms):
                return self.tf_ms
            return self.tau_ms * math.log(self.b0_khz / b_khz)
        # table families: walk the sampled schedule, refine by bisection
        # on the monotone interpolant within the bracketing sample pair
        idx = int(np.searchsorted(-self.b_khz, -b_khz))
        if idx == 0:
            return 0.0
        if idx >= self.t_ms.size:
            return self.tf_ms
        lo, hi = self.t_ms[idx - 1], self.t_ms[idx]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self._table_interp(mid) > b_khz:
                lo = mid
            else:
                hi = mid
        return float(0.5 * (lo + hi))

    def to_csv(self, path: str | Path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_ms", "B_kHz"])
            for t, b in zip(self.t_ms, self.b_khz):
                writer.writerow([repr(float(t)), repr(float(b))])


def _time_grid(tf_ms: float, samples: int) -> np.ndarray:
    return np.linspace(0.0, tf_ms, samples)


def linear_ramp(b0_khz: float, tf_ms: float, samples: int = SCHEDULE_SAMPLES) -> RampProfile:
    """Straight-line schedule from B0 to 0 with constant slope -B0/tf."""
    b0_khz = _check_positive("B0", b0_khz)
    tf_ms = _check_positive("tf", tf_ms)
    t = _time_grid(tf_ms, samples)
    b = b0_khz * (1.0 - t / tf_ms)
    b[0], b[-1] = b0_khz, 0.0
    return RampProfile(LINEAR, b0_khz, tf_ms, t, b)


def exponential_ramp(
    b0_khz: float, tf_ms: float, samples: int = SCHEDULE_SAMPLES
) -> RampProfile:
    """Exponential decay with time constant tf/6, clamped to 0 at tf."""
    b0_khz = _check_positive("B0", b0_khz)
    tf_ms = _check_positive("tf", tf_ms)
    tau = tf_ms / 6.0
    t = _time_grid(tf_ms, samples)
    b = b0_khz * np.exp(-t / tau)
    residual = float(b[-1])
    b[0], b[-1] = b0_khz, 0.0
    return RampProfile(
        EXPONENTIAL,
        b0_khz,
        tf_ms,
        t,
        b,
        tau_ms=tau,
        meta={"clamp_discontinuity_khz": residual},
    )


def _cumulative_inverse_gap_sq(gap: GapCurve) -> tuple[np.ndarray, np.ndarray]:
    """Dense field grid and I(B) = integral from B to B0 of dB'/Delta^2."""
    bs = np.linspace(0.0, gap.b0_khz, QUADRATURE_POINTS)
    integrand = np.asarray(gap.delta_at(bs), dtype=float) ** -2.0
    if not np.all(np.isfinite(integrand)) or np.any(integrand <= 0.0):
        raise ConfigError("gap curve must be positive over the full field window")
    # cumulative from the top: I[k] = integral from bs[k] to B0
    upward = cumulative_trapezoid(integrand, bs, initial=0.0)
    return bs, upward[-1] - upward


def local_adiabatic_ramp(
    gap: GapCurve, tf_ms: float, samples: int = SCHEDULE_SAMPLES
) -> RampProfile:
    """Schedule with gamma = Delta^2/|dB/dt| held constant, total time tf.

    Built by inverting T(B) = gamma * integral_B^B0 dB'/Delta^2 with
    gamma chosen so T(0) = tf.  Profiles built on a piecewise model
    curve are tagged as approximate so downstream reports can flag
    them.
    """
    tf_ms = _check_positive("tf", tf_ms)
    bs, cum = _cumulative_inverse_gap_sq(gap)
    total = float(cum[0])
    gamma = tf_ms / total
    times = gamma * cum  # descending from tf at B=0 ... 0 at B=B0
    t = _time_grid(tf_ms, samples)
    # times reversed is ascending; interpolate B(t) monotonically
    b = np.maximum(PchipInterpolator(times[::-1], bs[::-1])(t), 0.0)
    b[0], b[-1] = gap.b0_khz, 0.0
    # the design rule fixes the slope: dB/dt = -Delta^2(B(t)) / gamma
    slope = -np.asarray(gap.delta_at(b), dtype=float) ** 2 / gamma
    family = (
        PIECEWISE_APPROXIMATE
        if gap.meta.get("model") == "piecewise"
        else LOCAL_ADIABATIC
    )
    return RampProfile(
        family,
        gap.b0_khz,
        tf_ms,
        t,
        b,
        gamma=gamma,
        slope_table=slope,
        meta={"gap_model": gap.meta.get("model", "exact")},
    )


def total_time_for_gamma(gap: GapCurve, gamma: float) -> float:
    """Total ramp time of the locally adiabatic schedule at this gamma."""
    gamma = _check_positive("gamma", gamma)
    return gamma * gap.integral_inv_delta_sq(0.0, gap.b0_khz, QUADRATURE_POINTS)


def gamma_for_total_time(gap: GapCurve, tf_ms: float) -> float:
    """Adiabaticity parameter reached when the schedule takes tf_ms."""
    tf_ms = _check_positive("tf", tf_ms)
    return tf_ms / gap.integral_inv_delta_sq(0.0, gap.b0_khz, QUADRATURE_POINTS)


def adiabatic_threshold_ms(gap: GapCurve, family: str) -> float:
    """Ramp time at which the schedule family reaches unit adiabaticity.

    The linear and exponential families are scored by their slope at
    the critical point against the critical gap squared; the locally
    adiabatic family by its defining quadrature.  For the exponential
    schedule |dB/dt| at the crossing equals 6 Bc/tf, so the threshold
    is 6 Bc / Delta_c^2; the linear slope is B0/tf everywhere, giving
    B0 / Delta_c^2.
    """
    cp = critical_point(gap)
    if family == LINEAR:
        return gap.b0_khz / cp.delta_c_khz**2
    if family == EXPONENTIAL:
        return 6.0 * cp.b_c_khz / cp.delta_c_khz**2
    if family in (LOCAL_ADIABATIC, PIECEWISE_APPROXIMATE):
        return total_time_for_gamma(gap, 1.0)
    raise ConfigError(f"unknown ramp family {family!r}")


def critical_time(profile: RampProfile, gap: GapCurve) -> float:
    """Time at which the schedule crosses the critical field.

    Quadrature-built families use their defining integral from Bc to
    B0; closed-form families invert the schedule directly.
    """
    if not math.isclose(profile.b0_khz, gap.b0_khz, rel_tol=1e-9):
        raise ConfigError(
            f"profile and gap disagree on B0: {profile.b0_khz} vs {gap.b0_khz}"
        )
    cp = critical_point(gap)
    if cp.b_c_khz > profile.b0_khz:
        raise ConfigError("critical field outside the schedule range")
    if profile.family in (LOCAL_ADIABATIC, PIECEWISE_APPROXIMATE):
        if profile.gamma is None:
            raise ConfigError("quadrature-built profile is missing gamma")
        return profile.gamma * gap.integral_inv_delta_sq(
            cp.b_c_khz, gap.b0_khz, QUADRATURE_POINTS
        )
    return profile.time_at_field(cp.b_c_khz)


@dataclass(frozen=True)
class AdiabaticityTrace:
    """Pointwise inverse adiabaticity 1/gamma(t) along a schedule."""

    t_ms: np.ndarray
    inv_gamma: np.ndarray
    slope_khz_per_ms: np.ndarray

    def to_csv(self, path: str | Path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_ms", "inv_gamma", "slope_kHz_per_ms"])
            for t, g, s in zip(self.t_ms, self.inv_gamma, self.slope_khz_per_ms):
                writer.writerow([repr(float(t)), repr(float(g)), repr(float(s))])


def adiabaticity_trace(
    profile: RampProfile, gap: GapCurve, grid: int = 401
) -> AdiabaticityTrace:
    """Sample 1/gamma(t) = |dB/dt| / Delta^2(B(t)) along the schedule."""
    if grid < 2:
        raise ConfigError(f"trace grid needs at least 2 points, got {grid}")
    t = np.linspace(0.0, profile.tf_ms, grid)
    slope = np.asarray(profile.slope_of(t), dtype=float)
    delta = np.asarray(gap.delta_at(profile.b_of(t)), dtype=float)
    return AdiabaticityTrace(t, np.abs(slope) / delta**2, slope)
