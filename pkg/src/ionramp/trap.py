"""Ion-chain mechanics and Ising coupling synthesis.

A linear chain in a harmonic trap sets the geometry; its transverse
normal modes, driven by a pair of off-resonant Raman beams detuned by
mu above the highest mode, generate the long-range spin-spin couplings

    2 pi J_ij = Omega_i Omega_j R sum_m b_im b_jm / (mu**2 - omega_m**2)

with R the recoil constant (h-bar dk^2 / 2M expressed in kHz), b the
normal-mode matrix, omega_m the transverse mode frequencies, and
mu = omega_max + delta.  A uniform beam (Omega_i = Omega) is assumed.
The result is well approximated by a power law J ~ J_max / |i-j|^alpha
with alpha tunable between 0 and 3 through delta.

Lengths are dimensionless (units of the axial Coulomb length scale),
trap frequencies are entered in MHz, and mode frequencies and couplings
come out in kHz.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .exceptions import ChainInstabilityError, ConfigError, ConvergenceError, NumericalError
from .spin_model import CouplingMatrix, check_spin_count

DEFAULT_FZ_MHZ = 0.7
DEFAULT_FX_MHZ = 4.8
# Recoil constant for counter-propagating 355 nm Raman beams on a
# 171-amu ion, h-bar dk^2 / (2 M), in ordinary-frequency kHz.
DEFAULT_RECOIL_KHZ = 18.5
# Reject beat notes closer than this to any normal mode.
GUARD_BAND_KHZ = 3.0

DEFAULT_JMAX_KHZ = 0.77
DEFAULT_ALPHA = 1.0


@dataclass(frozen=True)
class TrapConfig:
    """Everything needed to synthesize a coupling matrix."""

    n: int
    fz_mhz: float = DEFAULT_FZ_MHZ
    fx_mhz: float = DEFAULT_FX_MHZ
    rabi_khz: float = 500.0
    recoil_khz: float = DEFAULT_RECOIL_KHZ
    detuning_khz: float = 100.0

    def __post_init__(self) -> None:
        check_spin_count(self.n)
        for name in ("fz_mhz", "fx_mhz", "rabi_khz", "recoil_khz", "detuning_khz"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0.0):
                raise ConfigError(f"{name} must be positive and finite, got {val!r}")
        if self.fx_mhz <= self.fz_mhz:
            raise ConfigError(
                f"transverse confinement must exceed axial: fx={self.fx_mhz} <= fz={self.fz_mhz}"
            )

    def with_ions(self, n: int) -> "TrapConfig":
        """Same trap voltages and beams, different chain length."""
        return replace(self, n=n)


@dataclass(frozen=True)
class NormalModes:
    """Transverse normal modes: frequencies descending, columns = vectors."""

    freqs_khz: np.ndarray
    vectors: np.ndarray  # (n, n), column m pairs with freqs_khz[m]


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares power law J(d) = j_max / d**alpha on log-log axes."""

    j_max_khz: float
    alpha: float
    rms_log_residual: float
    n_pairs: int


def _chain_gradient(u: np.ndarray) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def _chain_hessian(u: np.ndarray) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    off = -2.0 / np.abs(d) ** 3
    h = off.copy()
    np.fill_diagonal(h, 1.0 - np.sum(off, axis=1))
    return h


def equilibrium_positions(n: int, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Dimensionless equilibrium positions of n ions, ascending.

    Minimizes sum(u^2)/2 + sum_{i<j} 1/|u_i - u_j| by damped Newton
    iteration (one exact linear solve per step, step halved until the
    gradient norm decreases) to gradient tolerance 1e-12.
    """
    check_spin_count(n)
    if n == 1:
        return np.zeros(1)
    # empirical minimum-spacing law gives a guess well inside the basin
    spacing = 2.018 / n**0.559
    u = spacing * (np.arange(n) - (n - 1) / 2.0)
    g = _chain_gradient(u)
    for _ in range(max_iter):
        gnorm = np.max(np.abs(g))
        if gnorm <= tol:
            return u
        step = np.linalg.solve(_chain_hessian(u), -g)
        scale = 1.0
        for _ in range(60):
            trial = u + scale * step
            if np.all(np.diff(trial) > 0.0):
                g_trial = _chain_gradient(trial)
                if np.max(np.abs(g_trial)) < gnorm:
                    u, g = trial, g_trial
                    break
            scale *= 0.5
        else:
            raise ConvergenceError(f"equilibrium position search stalled at n={n}")
    if np.max(np.abs(g)) <= tol:
        return u
    raise ConvergenceError(
        f"equilibrium positions did not reach gradient tolerance {tol} in {max_iter} steps"
    )


def transverse_modes(
    positions: np.ndarray,
    fz_mhz: float = DEFAULT_FZ_MHZ,
    fx_mhz: float = DEFAULT_FX_MHZ,
) -> NormalModes:
    """Transverse normal modes of a linear chain.

    The stiffness matrix in units of the axial frequency squared is
    A_ii = (fx/fz)^2 - sum_k 1/d_ik^3 and A_ij = 1/d_ij^3, whose
    eigenvalues lambda give mode frequencies fz*sqrt(lambda).  The
    center-of-mass mode sits exactly at fx with a uniform eigenvector
    and is the highest transverse mode; a non-positive eigenvalue means
    the linear chain is unstable against zigzag buckling.
    """
    u = np.asarray(positions, dtype=np.float64)
    n = u.size
    if n == 1:
        return NormalModes(np.array([fx_mhz * 1e3]), np.ones((1, 1)))
    beta_sq = (fx_mhz / fz_mhz) ** 2
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    inv_d3 = 1.0 / np.abs(d) ** 3
    a = inv_d3.copy()
    np.fill_diagonal(a, beta_sq - np.sum(inv_d3, axis=1))
    lam, vec = np.linalg.eigh(a)
    if lam[0] <= 0.0:
        raise ChainInstabilityError(
            f"zigzag instability: transverse mode {n - 1} (lowest) has "
            f"lambda={lam[0]:.6g} <= 0 at n={n}, fx/fz={np.sqrt(beta_sq):.3f}"
        )
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vec = vec[:, order]
    # fix eigenvector sign: largest-magnitude component positive
    for m in range(n):
        col = vec[:, m]
        lead = col[np.argmax(np.abs(col))]
        if lead < 0.0:
            vec[:, m] = -col
    freqs_khz = fz_mhz * 1e3 * np.sqrt(lam)
    return NormalModes(freqs_khz, vec)


def _mode_weights(modes: NormalModes, mu_khz: float) -> np.ndarray:
    """S_ij = sum_m b_im b_jm / (mu^2 - omega_m^2), zero diagonal."""
    gaps = np.abs(mu_khz - modes.freqs_khz)
    if np.min(gaps) < GUARD_BAND_KHZ:
        nearest = int(np.argmin(gaps))
        raise ConfigError(
            f"beat note {mu_khz:.3f} kHz is within the {GUARD_BAND_KHZ} kHz guard "
            f"band of mode {nearest} at {modes.freqs_khz[nearest]:.3f} kHz"
        )
    denom = mu_khz**2 - modes.freqs_khz**2
    s = (modes.vectors / denom) @ modes.vectors.T
    np.fill_diagonal(s, 0.0)
    return s


def ising_couplings(
    cfg: TrapConfig,
    positions: np.ndarray | None = None,
    modes: NormalModes | None = None,
) -> CouplingMatrix:
    """Synthesize the Ising coupling matrix for a trap configuration."""
    if positions is None:
        positions = equilibrium_positions(cfg.n)
    if modes is None:
        modes = transverse_modes(positions, cfg.fz_mhz, cfg.fx_mhz)
    mu = float(np.max(modes.freqs_khz)) + cfg.detuning_khz
    s = _mode_weights(modes, mu)
    j = (cfg.rabi_khz**2 * cfg.recoil_khz / (2.0 * np.pi)) * s
    return CouplingMatrix(0.5 * (j + j.T))


def fit_alpha(couplings: CouplingMatrix) -> PowerLawFit:
    """Fit J(d) = j_max / d**alpha to all pairs by log-log least squares."""
    n = couplings.n
    if n < 3:
        raise ConfigError(f"power-law fit needs at least 3 ions, got {n}")
    ii, jj = np.triu_indices(n, k=1)
    jvals = couplings.j_khz[ii, jj]
    if np.any(jvals <= 0.0):
        raise NumericalError("power-law fit undefined: nonpositive couplings present")
    dist = (jj - ii).astype(np.float64)
    slope, intercept = np.polyfit(np.log(dist), np.log(jvals), 1)
    resid = np.log(jvals) - (slope * np.log(dist) + intercept)
    return PowerLawFit(
        j_max_khz=float(np.exp(intercept)),
        alpha=float(-slope),
        rms_log_residual=float(np.sqrt(np.mean(resid**2))),
        n_pairs=int(dist.size),
    )


def calibrate_trap(
    n: int = 6,
    j_max_khz: float = DEFAULT_JMAX_KHZ,
    alpha: float = DEFAULT_ALPHA,
    fz_mhz: float = DEFAULT_FZ_MHZ,
    fx_mhz: float = DEFAULT_FX_MHZ,
    recoil_khz: float = DEFAULT_RECOIL_KHZ,
    detuning_bounds_khz: tuple[float, float] = (GUARD_BAND_KHZ + 0.5, 4000.0),
) -> tuple[TrapConfig, CouplingMatrix, PowerLawFit]:
    """Choose beam detuning and power to hit a coupling target.

    The detuning sets the power-law exponent (close to the top mode the
    uniform center-of-mass contribution dominates and alpha -> 0; far
    above the spectrum the couplings approach the dipolar 1/d^3 limit),
    so alpha is solved for by 1-d root finding in delta, then the Rabi
    frequency is scaled so the largest coupling equals j_max_khz.
    """
    check_spin_count(n)
    if n < 3:
        raise ConfigError("calibration needs at least 3 ions to define alpha")
    positions = equilibrium_positions(n)
    modes = transverse_modes(positions, fz_mhz, fx_mhz)
    omega_max = float(np.max(modes.freqs_khz))

    def alpha_of(delta: float) -> float:
        s = _mode_weights(modes, omega_max + delta)
        if np.any(s[np.triu_indices(n, k=1)] <= 0.0):
            # shape matrix not yet uniformly positive: effectively alpha
            # far from target on the near side
            return -10.0
        scaled = CouplingMatrix(s / np.max(np.abs(s)))
        return fit_alpha(scaled).alpha

    lo, hi = detuning_bounds_khz
    f_lo, f_hi = alpha_of(lo) - alpha, alpha_of(hi) - alpha
    if f_lo * f_hi > 0.0:
        raise NumericalError(
            f"alpha target {alpha} not bracketed by detunings {lo}..{hi} kHz "
            f"(alpha range {f_lo + alpha:.3f}..{f_hi + alpha:.3f})"
        )
    delta = float(brentq(lambda d: alpha_of(d) - alpha, lo, hi, xtol=1e-10, rtol=1e-14))

    s = _mode_weights(modes, omega_max + delta)
    s_max = float(np.max(np.abs(s)))
    rabi = float(np.sqrt(2.0 * np.pi * j_max_khz / (recoil_khz * s_max)))
    cfg = TrapConfig(
        n=n,
        fz_mhz=fz_mhz,
        fx_mhz=fx_mhz,
        rabi_khz=rabi,
        recoil_khz=recoil_khz,
        detuning_khz=delta,
    )
    couplings = ising_couplings(cfg, positions, modes)
    return cfg, couplings, fit_alpha(couplings)
