"""Independent oracles the test suite checks the package against.

Everything here is written from the physics definitions with none of
the package's internal conventions: the Hamiltonian is assembled from
explicit Pauli kron products in the standard z computational basis,
evolution uses midpoint exponentials from dense eigendecompositions,
and the two-level sweep goes through scipy's adaptive ODE integrator.
The only package artifacts the oracles accept are plain numbers
(coupling matrices, schedule samples), never package code paths.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
IDENT = np.eye(2, dtype=np.complex128)

# Per-spin change of basis from the package's x-product basis (with
# phases chosen so Y flips bits with no factor) to the z basis:
# column 0 is the X=+1 state, column 1 is -i times the X=-1 state.
U_SPIN = np.array([[1.0, -1.0j], [1.0, 1.0j]], dtype=np.complex128) / np.sqrt(2.0)


def kron_chain(ops: list[np.ndarray]) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def one_site(n: int, i: int, op: np.ndarray) -> np.ndarray:
    return kron_chain([op if k == i else IDENT for k in range(n)])


def two_site(n: int, i: int, j: int, op: np.ndarray) -> np.ndarray:
    return kron_chain(
        [op if k in (i, j) else IDENT for k in range(n)]
    )


def dense_hamiltonian_z(j_khz: np.ndarray, b_khz: float) -> np.ndarray:
    """H = sum_{i<j} J_ij X_i X_j + B sum_i Y_i in the z basis.

    Spin 0 is the leftmost kron factor (most significant bit), matching
    the ion-chain reading order.
    """
    n = j_khz.shape[0]
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(n):
        for j in range(i + 1, n):
            if j_khz[i, j] != 0.0:
                h += j_khz[i, j] * two_site(n, i, j, PAULI_X)
        h += b_khz * one_site(n, i, PAULI_Y)
    return h


def basis_change(n: int) -> np.ndarray:
    """Unitary sending package-basis amplitude vectors to the z basis."""
    return kron_chain([U_SPIN] * n)


def dense_hamiltonian_package_basis(j_khz: np.ndarray, b_khz: float) -> np.ndarray:
    """The same operator expressed in the package's basis: U^dag H U."""
    u = basis_change(j_khz.shape[0])
    h = dense_hamiltonian_z(j_khz, b_khz)
    return u.conj().T @ h @ u


def minus_y_product_state(n: int) -> np.ndarray:
    """Ground state of +B sum Y_i (B > 0) in the z basis."""
    spinor = np.array([1.0, -1.0j], dtype=np.complex128) / np.sqrt(2.0)
    psi = spinor
    for _ in range(n - 1):
        psi = np.kron(psi, spinor)
    return psi


def expm_midpoint_evolve(
    j_khz: np.ndarray,
    b_of,
    tf_ms: float,
    n_steps: int,
    psi0_z: np.ndarray,
) -> np.ndarray:
    """Evolve in the z basis by exact exponentials of midpoint-frozen H.

    Each step applies exp(-i 2 pi H(B(t_mid)) dt) from a fresh dense
    eigendecomposition; the per-step error is set only by how much B
    moves within the step, so halving dt quarters the error.
    """
    dt = tf_ms / n_steps
    psi = psi0_z.astype(np.complex128).copy()
    # H(b) = H_coupling + b * H_field; assemble the two kron sums once
    h_coupling = dense_hamiltonian_z(j_khz, 0.0)
    h_field = dense_hamiltonian_z(np.zeros_like(j_khz), 1.0)
    for k in range(n_steps):
        b_mid = float(b_of((k + 0.5) * dt))
        h = h_coupling + b_mid * h_field
        evals, evecs = np.linalg.eigh(h)
        phases = np.exp(-2.0j * np.pi * evals * dt)
        psi = evecs @ (phases * (evecs.conj().T @ psi))
    return psi


def lz_transition_ode(
    b0_khz: float, coupling_khz: float, tf_ms: float
) -> float:
    """Two-level half-sweep through scipy's adaptive RK integrator.

    H(t) = [[B(t), g], [g, -B(t)]], B linear from b0 to 0; returns the
    probability of ending outside the instantaneous ground state at the
    crossing.
    """
    g = coupling_khz
    start = np.array([[b0_khz, g], [g, -b0_khz]])
    _, vecs = np.linalg.eigh(start)
    psi0 = vecs[:, 0].astype(np.complex128)
    if tf_ms > 0.0:

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            b = b0_khz * (1.0 - t / tf_ms)
            psi = y[:2] + 1.0j * y[2:]
            dpsi = -2.0j * np.pi * np.array(
                [b * psi[0] + g * psi[1], g * psi[0] - b * psi[1]]
            )
            return np.concatenate([dpsi.real, dpsi.imag])

        y0 = np.concatenate([psi0.real, psi0.imag])
        sol = solve_ivp(
            rhs, (0.0, tf_ms), y0, method="DOP853", rtol=1e-11, atol=1e-13
        )
        psi = sol.y[:2, -1] + 1.0j * sol.y[2:, -1]
    else:
        psi = psi0
    ground = np.array([1.0, -1.0], dtype=np.complex128) / np.sqrt(2.0)
    return float(1.0 - abs(np.vdot(ground, psi)) ** 2)


def brute_classical_energies(j_khz: np.ndarray) -> np.ndarray:
    """Ising energies per bitstring, signs read off the string directly."""
    n = j_khz.shape[0]
    energies = np.zeros(1 << n)
    for idx in range(1 << n):
        bits = format(idx, f"0{n}b")
        spins = [1.0 if c == "0" else -1.0 for c in bits]
        e = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                e += j_khz[i, j] * spins[i] * spins[j]
        energies[idx] = e
    return energies


def chain_potential(u: np.ndarray) -> float:
    """Dimensionless axial energy: harmonic wells plus Coulomb repulsion."""
    v = 0.5 * float(np.sum(u**2))
    n = u.size
    for i in range(n):
        for j in range(i + 1, n):
            v += 1.0 / abs(u[i] - u[j])
    return v


def numeric_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x)
    for k in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        g[k] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def transverse_hessian_fd(
    u: np.ndarray, fz_mhz: float, fx_mhz: float, h: float = 1e-5
) -> np.ndarray:
    """Numeric Hessian of the transverse potential at a chain layout.

    Transverse energy per ion pair in the same dimensionless units as
    the axial problem: (fx/fz)^2 sum x_i^2 / 2 - sum x-projected
    Coulomb terms expanded to second order; evaluated by central
    differences of the full 3D-restricted potential
    V(x) = 0.5 (fx/fz)^2 sum x_i^2 + sum 1/sqrt((u_i-u_j)^2+(x_i-x_j)^2)
    at x = 0.
    """
    beta2 = (fx_mhz / fz_mhz) ** 2
    n = u.size

    def pot(x: np.ndarray) -> float:
        v = 0.5 * beta2 * float(np.sum(x**2))
        for i in range(n):
            for j in range(i + 1, n):
                v += 1.0 / np.hypot(u[i] - u[j], x[i] - x[j])
        return v

    hess = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            xpp = np.zeros(n)
            xpp[a] += h
            xpp[b] += h
            xpm = np.zeros(n)
            xpm[a] += h
            xpm[b] -= h
            xmp = np.zeros(n)
            xmp[a] -= h
            xmp[b] += h
            xmm = np.zeros(n)
            xmm[a] -= h
            xmm[b] -= h
            hess[a, b] = (pot(xpp) - pot(xpm) - pot(xmp) + pot(xmm)) / (4.0 * h * h)
    return hess


def mode_frequencies_fd(
    u: np.ndarray, fz_mhz: float, fx_mhz: float
) -> np.ndarray:
    """Transverse mode frequencies in kHz from the numeric Hessian."""
    hess = transverse_hessian_fd(u, fz_mhz, fx_mhz)
    lam = np.linalg.eigvalsh(hess)
    return np.sort(fz_mhz * 1e3 * np.sqrt(lam))[::-1]
