"""Long-range transverse-field Ising model on a spin register.

The Hamiltonian is

    H(t) = sum_{i<j} J_ij X_i X_j  +  B(t) sum_i Y_i

with couplings J_ij in kHz, the field B in kHz, and h = 1, so a state
with energy E acquires phase exp(-i 2 pi E t) with t in ms.  All
couplings here are antiferromagnetic (J_ij > 0).

Basis convention
----------------
The computational basis is the product eigenbasis of the X_i, with bit
value 0 for eigenvalue +1 and bit value 1 for eigenvalue -1.  Spin i
occupies bit position n - 1 - i, so reading a bitstring left to right
follows the ion chain: for n = 6 the string '010101' is index 21 and
'101010' is index 42.

The phase of each basis state is fixed so that every Y_i acts as the
real single-bit flip: (Y_i psi)[b] = psi[b ^ bit_i].  With that choice
H is a real symmetric matrix whose diagonal carries the classical Ising
energies; bitstring probabilities and all spectra are unchanged by the
phase choice.  Under this convention the single-spin ground state of
+B Y (B > 0) has amplitudes (1, -1)/sqrt(2), which is the same physical
state as the familiar y-aligned spinor (1, -i)/sqrt(2) written with
unadjusted basis phases.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend
from .exceptions import ConfigError

# Memory bound: a state vector at n = 24 is 256 MB of complex128.
MAX_SPINS = 24

# Largest register for which we allow a dense 2**n x 2**n matrix
# (2**12 doubles = 128 MB; 2**14 would already exceed 2 GB).
DENSE_CAP_DEFAULT = 12


def check_spin_count(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ConfigError(f"spin count must be an integer, got {n!r}")
    if not 1 <= n <= MAX_SPINS:
        raise ConfigError(f"spin count must be in 1..{MAX_SPINS}, got {n}")
    return int(n)


def bit_position(n: int, spin: int) -> int:
    """Bit position of a spin index (spin 0 is the most significant bit)."""
    return n - 1 - spin


def bitstring(index: int, n: int) -> str:
    """Printable basis label for a state index, leftmost char = spin 0."""
    return format(index, f"0{n}b")


def neel_indices(n: int) -> tuple[int, int]:
    """Indices of the two alternating (Neel-ordered) bitstrings."""
    check_spin_count(n)
    a = int(("01" * n)[:n], 2)
    return a, a ^ ((1 << n) - 1)


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric Ising coupling table in kHz, zero diagonal."""

    j_khz: np.ndarray

    def __post_init__(self) -> None:
        j = np.asarray(self.j_khz, dtype=np.float64)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ConfigError(f"coupling matrix must be square, got shape {j.shape}")
        check_spin_count(j.shape[0])
        if not np.all(np.isfinite(j)):
            raise ConfigError("coupling matrix contains non-finite entries")
        if not np.allclose(j, j.T, rtol=0.0, atol=1e-12):
            raise ConfigError("coupling matrix must be symmetric to 1e-12")
        if np.any(np.abs(np.diag(j)) > 0.0):
            raise ConfigError("coupling matrix diagonal must be exactly zero")
        j = 0.5 * (j + j.T)  # exact symmetry for downstream linear algebra
        j.setflags(write=False)
        object.__setattr__(self, "j_khz", j)

    @property
    def n(self) -> int:
        return self.j_khz.shape[0]

    @property
    def j_max_khz(self) -> float:
        """Largest coupling magnitude in the table."""
        return float(np.max(np.abs(self.j_khz))) if self.n > 1 else 0.0

    def abs_sum_khz(self) -> float:
        """Sum of |J_ij| over pairs i < j (an energy scale bound)."""
        return float(np.sum(np.abs(np.triu(self.j_khz, k=1))))

    @classmethod
    def from_pairs(cls, n: int, pairs: dict[tuple[int, int], float]) -> "CouplingMatrix":
        """Build from {(i, j): J} with 0-based spin indices."""
        check_spin_count(n)
        j = np.zeros((n, n))
        for (a, b), val in pairs.items():
            if not (0 <= a < n and 0 <= b < n and a != b):
                raise ConfigError(f"bad pair ({a}, {b}) for n={n}")
            j[a, b] = val
            j[b, a] = val
        return cls(j)

    def to_csv(self, path: str | Path) -> None:
        """Write pairs i < j as ``i,j,J_kHz`` with 1-based indices."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "J_kHz"])
            for a in range(self.n):
                for b in range(a + 1, self.n):
                    writer.writerow([a + 1, b + 1, repr(float(self.j_khz[a, b]))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "CouplingMatrix":
        pairs: dict[tuple[int, int], float] = {}
        n = 0
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["i", "j", "J_kHz"]:
                raise ConfigError(f"{path}: expected header 'i,j,J_kHz', got {header}")
            for row in reader:
                if not row:
                    continue
                try:
                    a, b, val = int(row[0]), int(row[1]), float(row[2])
                except (ValueError, IndexError) as exc:
                    raise ConfigError(f"{path}: bad row {row}") from exc
                if a < 1 or b < 1 or a == b:
                    raise ConfigError(f"{path}: bad index pair {a},{b}")
                pairs[(a - 1, b - 1)] = val
                n = max(n, a, b)
        if n < 1:
            raise ConfigError(f"{path}: no coupling rows found")
        return cls.from_pairs(n, pairs)


def classical_energies(couplings: CouplingMatrix) -> np.ndarray:
    """Ising energy of every bitstring: E(b) = sum_{i<j} J_ij s_i s_j.

    s_i = +1 for bit 0 and -1 for bit 1.  This is the B = 0 diagonal of
    the Hamiltonian.
    """
    n = couplings.n
    idx = np.arange(1 << n)
    # spin i lives at bit position n-1-i
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    s = 1.0 - 2.0 * bits
    return 0.5 * np.einsum("bi,ij,bj->b", s, couplings.j_khz, s)


@dataclass(eq=False)
class Hamiltonian:
    """H = Ising diagonal + B * (sum of single-bit flips); real symmetric.

    The class attribute ``basis`` marks the measurement-basis convention
    documented in the module docstring.
    """

    basis = "x"

    couplings: CouplingMatrix
    field_khz: float
    diag: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        self.field_khz = float(self.field_khz)
        if not np.isfinite(self.field_khz):
            raise ConfigError("field must be finite")
        if self.diag is None:
            self.diag = classical_energies(self.couplings)

    @property
    def n(self) -> int:
        return self.couplings.n

    @property
    def dim(self) -> int:
        return 1 << self.n

    def energy_bound_khz(self) -> float:
        """Upper bound on the spectral radius: n|B| + sum |J_ij|."""
        return self.n * abs(self.field_khz) + self.couplings.abs_sum_khz()

    def apply(self, v: np.ndarray) -> np.ndarray:
        """H @ v without materializing the matrix (hot path)."""
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ConfigError(f"state must have shape ({self.dim},), got {v.shape}")
        if v.dtype == np.float64 or v.dtype == np.complex128:
            vv = np.ascontiguousarray(v)
        elif np.issubdtype(v.dtype, np.complexfloating):
            vv = np.ascontiguousarray(v, dtype=np.complex128)
        else:
            vv = np.ascontiguousarray(v, dtype=np.float64)
        return backend.apply_h(self.diag, self.field_khz, self.n, vv)

    def dense(self, max_spins: int = DENSE_CAP_DEFAULT) -> np.ndarray:
        """Dense real symmetric matrix; refuses registers above max_spins."""
        if self.n > max_spins:
            raise ConfigError(
                f"dense matrix refused for n={self.n} > {max_spins} "
                f"(2**{self.n} squared doubles)"
            )
        dim = self.dim
        mat = np.zeros((dim, dim))
        idx = np.arange(dim)
        mat[idx, idx] = self.diag
        for p in range(self.n):
            mat[idx, idx ^ (1 << p)] += self.field_khz
        return mat


def build_hamiltonian(couplings: CouplingMatrix, field_khz: float) -> Hamiltonian:
    """Assemble H for one field value, caching the Ising diagonal."""
    return Hamiltonian(couplings, field_khz)


def field_aligned_state(n: int) -> np.ndarray:
    """Product ground state of the bare field term +B sum_i Y_i (B > 0).

    Every amplitude has modulus 2**(-n/2); under the real-Y convention
    the amplitudes are (-1)**popcount(b) * 2**(-n/2).
    """
    check_spin_count(n)
    idx = np.arange(1 << n, dtype=np.uint64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx).astype(np.int64) & 1)
    return (signs * 2.0 ** (-n / 2.0)).astype(np.complex128)


def afm_target_state(n: int) -> np.ndarray:
    """Symmetric superposition of the two Neel bitstrings."""
    a, b = neel_indices(n)
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[a] = psi[b] = 1.0 / np.sqrt(2.0)
    return psi
