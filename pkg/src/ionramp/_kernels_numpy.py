"""Pure-numpy reference implementations of the hot kernels.

These are the fallback path selected by IONRAMP_BACKEND=numpy (or
automatically when numba is unavailable).  Semantics must match
_kernels_numba exactly; the equivalence is pinned by tests and the
benchmark script compares their throughput.

Conventions shared by both backends:

* A register of n spins is stored as 2**n complex (or real) amplitudes.
* The Hamiltonian acts as H = diag + B * F where diag holds the Ising
  energies of every bitstring and F flips one bit at a time, i.e.
  (F psi)[b] = sum_p psi[b ^ (1 << p)].  F is the transverse-field term
  written in the measurement basis; see ionramp.spin_model for the
  convention that makes it real.
* Energies are in kHz and times in ms, so phases evolve as
  exp(-i 2 pi E t).
"""

from __future__ import annotations

import numpy as np

_TWO_PI = 2.0 * np.pi

# flip-index tables, keyed by register width; ~n * 2**n int64 each
_FLIP_CACHE: dict[int, np.ndarray] = {}


def _flip_table(n_bits: int) -> np.ndarray:
    table = _FLIP_CACHE.get(n_bits)
    if table is None:
        idx = np.arange(1 << n_bits)
        table = np.stack([idx ^ (1 << p) for p in range(n_bits)])
        _FLIP_CACHE[n_bits] = table
    return table


def apply_h(diag: np.ndarray, bfield: float, n_bits: int, psi: np.ndarray) -> np.ndarray:
    """Return H @ psi without materializing the dense matrix."""
    out = diag * psi
    if bfield != 0.0:
        flips = _flip_table(n_bits)
        acc = psi[flips[0]].copy()
        for p in range(1, n_bits):
            acc += psi[flips[p]]
        out += bfield * acc
    return out


def _deriv(diag: np.ndarray, bfield: float, n_bits: int, psi: np.ndarray) -> np.ndarray:
    return (-1j * _TWO_PI) * apply_h(diag, bfield, n_bits, psi)


def rk4_chunk(
    diag: np.ndarray,
    n_bits: int,
    b_edges: np.ndarray,
    b_mids: np.ndarray,
    dt: float,
    psi: np.ndarray,
) -> np.ndarray:
    """Advance psi in place through len(b_mids) fixed RK4 steps.

    b_edges holds the field at the step boundaries (len(b_mids) + 1
    entries), b_mids at the step midpoints.  The equation of motion is
    d(psi)/dt = -i 2 pi H(t) psi with H in kHz and t in ms.
    """
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(b_mids.shape[0]):
        k1 = _deriv(diag, b_edges[k], n_bits, psi)
        k2 = _deriv(diag, b_mids[k], n_bits, psi + half * k1)
        k3 = _deriv(diag, b_mids[k], n_bits, psi + half * k2)
        k4 = _deriv(diag, b_edges[k + 1], n_bits, psi + dt * k3)
        psi += sixth * (k1 + 2.0 * (k2 + k3) + k4)
    return psi


def lz_propagate(
    b_start: float,
    b_end: float,
    coupling: float,
    t_total: float,
    n_steps: int,
    psi0: np.ndarray,
) -> np.ndarray:
    """Propagate a two-level state through a linear diagonal sweep.

    H(t) = [[B(t), c], [c, -B(t)]] with B running linearly from b_start
    to b_end over t_total.  Each step applies the exact rotation
    generated by the midpoint Hamiltonian, so very coarse steps remain
    unitary; accuracy is set by how much B moves per step.
    """
    dt = t_total / n_steps
    a = complex(psi0[0])
    b = complex(psi0[1])
    slope = (b_end - b_start) / t_total
    for k in range(n_steps):
        bm = b_start + slope * (k + 0.5) * dt
        omega = np.hypot(bm, coupling)
        phi = _TWO_PI * omega * dt
        if omega == 0.0:
            continue
        cos_p = np.cos(phi)
        sin_p = np.sin(phi)
        nz = bm / omega
        nx = coupling / omega
        a_new = (cos_p - 1j * sin_p * nz) * a + (-1j * sin_p * nx) * b
        b_new = (-1j * sin_p * nx) * a + (cos_p + 1j * sin_p * nz) * b
        a, b = a_new, b_new
    return np.array([a, b], dtype=np.complex128)
