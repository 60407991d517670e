"""Numba-compiled hot kernels.

Same contracts as _kernels_numpy (the authoritative docstrings live
there); this module only changes how the loops are executed.  Kernels
are nopython + nogil so thread pools can run them concurrently.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_TWO_PI = 2.0 * np.pi


@njit(cache=True, nogil=True)
def apply_h(diag, bfield, n_bits, psi):
    dim = psi.shape[0]
    out = np.empty_like(psi)
    if bfield == 0.0:
        for b in range(dim):
            out[b] = diag[b] * psi[b]
        return out
    for b in range(dim):
        acc = psi[b ^ 1]
        for p in range(1, n_bits):
            acc = acc + psi[b ^ (1 << p)]
        out[b] = diag[b] * psi[b] + bfield * acc
    return out


@njit(cache=True, nogil=True)
def _deriv_into(diag, bfield, n_bits, psi, out):
    # out = -i 2 pi H psi
    c = -1j * _TWO_PI
    dim = psi.shape[0]
    for b in range(dim):
        acc = psi[b ^ 1]
        for p in range(1, n_bits):
            acc = acc + psi[b ^ (1 << p)]
        out[b] = c * (diag[b] * psi[b] + bfield * acc)


@njit(cache=True, nogil=True)
def rk4_chunk(diag, n_bits, b_edges, b_mids, dt, psi):
    dim = psi.shape[0]
    k1 = np.empty(dim, np.complex128)
    k2 = np.empty(dim, np.complex128)
    k3 = np.empty(dim, np.complex128)
    k4 = np.empty(dim, np.complex128)
    work = np.empty(dim, np.complex128)
    half = 0.5 * dt
    sixth = dt / 6.0
    n_steps = b_mids.shape[0]
    for k in range(n_steps):
        _deriv_into(diag, b_edges[k], n_bits, psi, k1)
        for b in range(dim):
            work[b] = psi[b] + half * k1[b]
        _deriv_into(diag, b_mids[k], n_bits, work, k2)
        for b in range(dim):
            work[b] = psi[b] + half * k2[b]
        _deriv_into(diag, b_mids[k], n_bits, work, k3)
        for b in range(dim):
            work[b] = psi[b] + dt * k3[b]
        _deriv_into(diag, b_edges[k + 1], n_bits, work, k4)
        for b in range(dim):
            psi[b] = psi[b] + sixth * (k1[b] + 2.0 * (k2[b] + k3[b]) + k4[b])
    return psi


@njit(cache=True, nogil=True)
def lz_propagate(b_start, b_end, coupling, t_total, n_steps, psi0):
    dt = t_total / n_steps
    a = psi0[0]
    b = psi0[1]
    slope = (b_end - b_start) / t_total
    for k in range(n_steps):
        bm = b_start + slope * (k + 0.5) * dt
        omega = np.hypot(bm, coupling)
        if omega == 0.0:
            continue
        phi = _TWO_PI * omega * dt
        cos_p = np.cos(phi)
        sin_p = np.sin(phi)
        nz = bm / omega
        nx = coupling / omega
        a_new = (cos_p - 1j * sin_p * nz) * a + (-1j * sin_p * nx) * b
        b_new = (-1j * sin_p * nx) * a + (cos_p + 1j * sin_p * nz) * b
        a = a_new
        b = b_new
    out = np.empty(2, np.complex128)
    out[0] = a
    out[1] = b
    return out
