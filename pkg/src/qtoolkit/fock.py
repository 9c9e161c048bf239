"""Truncated bosonic and exact fermionic Fock spaces.

The bosonic space over m modes with per-mode occupation cutoffs c_k has
dimension prod(c_k + 1); creation/annihilation act as exact ladder matrices
with the top level annihilated by a^+.  The fermionic space is exact, of
dimension 2^m, with the Jordan-Wigner sign convention over lower mode
indices.  Basis order is colexicographic: mode 1 varies fastest, so the
occupation of mode k at basis index i is (i // stride_k) % (c_k + 1) with
stride_1 = 1 and stride_k = prod_{j<k}(c_j + 1).

Commutation relations carry an explicit hbar:

    [a_k, a^+_l] = hbar delta_kl   (bose, exact below the cutoff)
    {a_k, a^+_l} = delta_kl        (fermi, exact)

Quantities that are only asymptotically exact under truncation (Poisson
vectors, truncated thermal traces) report an analytic tail bound next to
their value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "FockSpec",
    "FockVector",
    "DensityMatrix",
    "creation_matrix",
    "annihilation_matrix",
    "number_operator",
    "quadratic_hamiltonian",
    "quadratic_hamiltonian_diagonal",
    "ccr_defect",
    "car_defect",
    "CommutationDefect",
    "poisson_vector",
    "poisson_overlap",
    "poisson_eigen_defect",
    "PoissonDefect",
    "norm_divergence_demo",
]


@dataclass(frozen=True)
class FockSpec:
    """Defining data of a truncated Fock space.

    statistics: "bose" or "fermi".  cutoffs: per-mode maximal occupation
    (fermi fixes every cutoff to 1).  hbar: the constant appearing in the
    canonical commutation relations, default 1.
    """

    statistics: str
    cutoffs: tuple[int, ...]
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if self.statistics not in ("bose", "fermi"):
            raise ValidationError(f"unknown statistics {self.statistics!r}")
        object.__setattr__(self, "cutoffs", tuple(int(c) for c in self.cutoffs))
        if not self.cutoffs:
            raise ValidationError("at least one mode required")
        if any(c < 1 for c in self.cutoffs):
            raise ValidationError("every cutoff must be >= 1")
        if self.statistics == "fermi" and any(c != 1 for c in self.cutoffs):
            raise ValidationError("fermionic cutoffs are fixed to 1")
        if not (self.hbar > 0):
            raise ValidationError("hbar must be positive")

    @classmethod
    def bose(cls, cutoffs: Sequence[int], hbar: float = 1.0) -> "FockSpec":
        return cls("bose", tuple(cutoffs), hbar)

    @classmethod
    def fermi(cls, modes: int, hbar: float = 1.0) -> "FockSpec":
        return cls("fermi", (1,) * modes, hbar)

    @property
    def modes(self) -> int:
        return len(self.cutoffs)

    @property
    def dim(self) -> int:
        return math.prod(c + 1 for c in self.cutoffs)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        strides = []
        s = 1
        for c in self.cutoffs:
            strides.append(s)
            s *= c + 1
        return tuple(strides)

    @cached_property
    def occupations(self) -> np.ndarray:
        """(dim, modes) int array; row i is the occupation tuple of basis i."""
        idx = np.arange(self.dim)
        occ = np.empty((self.dim, self.modes), dtype=np.int64)
        for k in range(self.modes):
            occ[:, k] = (idx // self.strides[k]) % (self.cutoffs[k] + 1)
        return occ

    def index_of(self, occupation: Sequence[int]) -> int:
        occupation = tuple(int(n) for n in occupation)
        if len(occupation) != self.modes:
            raise ValidationError("occupation length mismatch")
        for n, c in zip(occupation, self.cutoffs):
            if not 0 <= n <= c:
                raise ValidationError(f"occupation {occupation} outside cutoffs")
        return sum(n * s for n, s in zip(occupation, self.strides))

    def safe_indices(self, margin: int = 1) -> np.ndarray:
        """Basis indices with n_k <= c_k - margin for every mode."""
        occ = self.occupations
        cut = np.array(self.cutoffs)
        mask = np.all(occ <= cut - margin, axis=1)
        return np.nonzero(mask)[0]

    def to_json(self) -> dict:
        return {
            "statistics": self.statistics,
            "modes": self.modes,
            "cutoffs": list(self.cutoffs),
            "hbar": self.hbar,
            "dim": self.dim,
        }


def _check_mode(spec: FockSpec, k: int) -> int:
    if not 1 <= k <= spec.modes:
        raise ValidationError(f"mode index {k} out of range 1..{spec.modes}")
    return k - 1


def creation_matrix(spec: FockSpec, k: int) -> np.ndarray:
    """Matrix of a^+_k in the occupation basis.

    Bosonic entries <n+e_k| a^+_k |n> = sqrt(hbar (n_k+1)) for n_k < c_k and
    zero at the cutoff top; fermionic entries carry the Jordan-Wigner sign
    (-1)^(sum_{j<k} n_j).
    """
    km = _check_mode(spec, k)
    dim = spec.dim
    occ = spec.occupations
    stride = spec.strides[km]
    a_dag = np.zeros((dim, dim), dtype=complex)
    if spec.statistics == "bose":
        src = np.nonzero(occ[:, km] < spec.cutoffs[km])[0]
        vals = np.sqrt(spec.hbar * (occ[src, km] + 1.0))
        a_dag[src + stride, src] = vals
    else:
        src = np.nonzero(occ[:, km] == 0)[0]
        signs = 1.0 - 2.0 * (occ[src, :km].sum(axis=1) % 2)
        a_dag[src + stride, src] = signs
    return a_dag


def annihilation_matrix(spec: FockSpec, k: int) -> np.ndarray:
    return creation_matrix(spec, k).conj().T


def number_operator(spec: FockSpec) -> np.ndarray:
    """Total number operator N = sum_k a^+_k a_k / hbar; integer spectrum."""
    occ = spec.occupations
    return np.diag(occ.sum(axis=1).astype(float)).astype(complex)


def quadratic_hamiltonian(spec: FockSpec, eps: Sequence[float]) -> np.ndarray:
    """H = sum_k eps_k a^+_k a_k / hbar, assembled from the ladder matrices.

    The normal-ordered product a^+_k a_k is diagonal with entries
    hbar * n_k, so H carries eigenvalue sum_k n_k eps_k on |n>.  The product
    is evaluated by floating matrix multiplication; see
    quadratic_hamiltonian_diagonal for the exact-arithmetic equivalent.
    """
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (spec.modes,):
        raise ValidationError("eps length must equal mode count")
    dim = spec.dim
    h = np.zeros((dim, dim), dtype=complex)
    for k in range(spec.modes):
        a_dag = creation_matrix(spec, k + 1)
        h += (eps[k] / spec.hbar) * (a_dag @ a_dag.conj().T)
    return h


def quadratic_hamiltonian_diagonal(spec: FockSpec, eps: Sequence[float]) -> np.ndarray:
    """Exact evaluation of quadratic_hamiltonian.

    a^+_k a_k equals hbar n_k on |n> identically, so the operator is the
    diagonal matrix of sum_k n_k eps_k; building it this way keeps integer
    energies exactly representable instead of round-tripping sqrt factors.
    """
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (spec.modes,):
        raise ValidationError("eps length must equal mode count")
    energies = spec.occupations @ eps
    return np.diag(energies).astype(complex)


@dataclass(frozen=True)
class CommutationDefect:
    safe: float
    unrestricted: float


def ccr_defect(spec: FockSpec) -> CommutationDefect:
    """Max-entry defect of [a_k, a^+_l] - hbar delta_kl.

    `safe` restricts the commutator matrix to the subspace with every
    n_k <= c_k - 1, where the ladder identity is exact; `unrestricted` is the
    full-space defect, which localizes at the cutoff top with magnitude
    hbar*(c+1) on the diagonal k = l.
    """
    if spec.statistics != "bose":
        raise ValidationError("ccr_defect requires a bosonic spec")
    safe_idx = spec.safe_indices(margin=1)
    eye = np.eye(spec.dim)
    a = [annihilation_matrix(spec, k + 1) for k in range(spec.modes)]
    safe = 0.0
    unrestricted = 0.0
    for k in range(spec.modes):
        for l in range(spec.modes):
            comm = a[k] @ a[l].conj().T - a[l].conj().T @ a[k]
            if k == l:
                comm = comm - spec.hbar * eye
            unrestricted = max(unrestricted, float(np.abs(comm).max()))
            block = comm[np.ix_(safe_idx, safe_idx)]
            if block.size:
                safe = max(safe, float(np.abs(block).max()))
    return CommutationDefect(safe=safe, unrestricted=unrestricted)


def car_defect(spec: FockSpec) -> CommutationDefect:
    """Max-entry defect of {a_k,a^+_l} - delta_kl and {a_k,a_l}; exact 0."""
    if spec.statistics != "fermi":
        raise ValidationError("car_defect requires a fermionic spec")
    eye = np.eye(spec.dim)
    a = [annihilation_matrix(spec, k + 1) for k in range(spec.modes)]
    worst = 0.0
    for k in range(spec.modes):
        for l in range(spec.modes):
            anti = a[k] @ a[l].conj().T + a[l].conj().T @ a[k]
            if k == l:
                anti = anti - eye
            worst = max(worst, float(np.abs(anti).max()))
            anti2 = a[k] @ a[l] + a[l] @ a[k]
            worst = max(worst, float(np.abs(anti2).max()))
    return CommutationDefect(safe=worst, unrestricted=worst)


@dataclass(frozen=True)
class FockVector:
    spec: FockSpec
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.spec.dim,):
            raise ValidationError("amplitude length does not match dimension")
        if not np.all(np.isfinite(amps.view(float))):
            raise ValidationError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "FockVector") -> complex:
        """Inner product, linear in the first slot: <u,v> = sum u_n conj(v_n)."""
        if other.spec != self.spec:
            raise ValidationError("inner product across different specs")
        return complex(np.sum(self.amplitudes * np.conj(other.amplitudes)))


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix: hermitian, positive, unit trace."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("density matrix must be square")
        scale = max(float(np.linalg.norm(m)), 1e-300)
        if float(np.linalg.norm(m - m.conj().T)) > 1e-12 * scale:
            raise ValidationError("density matrix is not hermitian")
        herm = 0.5 * (m + m.conj().T)
        eigs = np.linalg.eigvalsh(herm)
        if eigs.min() < -1e-12:
            raise ValidationError(f"density matrix has eigenvalue {eigs.min():.3e} < -1e-12")
        tr = float(np.trace(herm).real)
        if abs(tr - 1.0) > 1e-12:
            raise ValidationError(f"density matrix trace {tr!r} != 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def poisson_vector(spec: FockSpec, f: Sequence[complex]) -> FockVector:
    """Theta = exp(f . a^+) |0>, truncated; NOT normalized.

    Amplitudes are prod_k f_k^{n_k} / sqrt(hbar^{n_k} n_k!), the unique
    choice with a_k Theta = f_k Theta below the cutoff (norm^2 converges to
    exp(sum |f_k|^2 / hbar) as the cutoffs grow).
    """
    if spec.statistics != "bose":
        raise ValidationError("poisson vectors require a bosonic spec")
    f = np.asarray(f, dtype=complex)
    if f.shape != (spec.modes,):
        raise ValidationError("f length must equal mode count")
    amps = np.ones(spec.dim, dtype=complex)
    occ = spec.occupations
    for k in range(spec.modes):
        n = occ[:, k]
        # f^n / sqrt(hbar^n n!) accumulated per mode
        coeff = np.array(
            [f[k] ** int(j) / math.sqrt(spec.hbar ** int(j) * math.factorial(int(j)))
             for j in range(spec.cutoffs[k] + 1)]
        )
        amps = amps * coeff[n]
    return FockVector(spec, amps)


def poisson_overlap(spec: FockSpec, f: Sequence[complex], g: Sequence[complex]) -> complex:
    """Closed form <Theta_f, Theta_g> = exp(sum f_k conj(g_k) / hbar)."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    return complex(np.exp(np.sum(f * np.conj(g)) / spec.hbar))


@dataclass(frozen=True)
class PoissonDefect:
    defect: float
    tail_bound: float


def poisson_eigen_defect(spec: FockSpec, f: Sequence[complex], k: int) -> PoissonDefect:
    """|| (a_k - f_k) Theta_f || and its analytic value.

    Truncation leaves exactly one uncancelled component at the cutoff top of
    mode k, so the defect equals
        |f_k|^{c_k+1} / sqrt(hbar^{c_k} c_k!) * prod_{j != k} s_j,
    where s_j^2 = sum_{n<=c_j} |f_j|^{2n} / (hbar^n n!) is the truncated
    single-mode norm.  The returned tail_bound is that closed form; `defect`
    is the matrix-route evaluation.
    """
    km = _check_mode(spec, k)
    f = np.asarray(f, dtype=complex)
    theta = poisson_vector(spec, f)
    a_k = annihilation_matrix(spec, k)
    resid = a_k @ theta.amplitudes - f[km] * theta.amplitudes
    defect = float(np.linalg.norm(resid))

    c = spec.cutoffs[km]
    bound = abs(f[km]) ** (c + 1) / math.sqrt(spec.hbar ** c * math.factorial(c))
    for j in range(spec.modes):
        if j == km:
            continue
        s2 = sum(abs(f[j]) ** (2 * n) / (spec.hbar ** n * math.factorial(n))
                 for n in range(spec.cutoffs[j] + 1))
        bound *= math.sqrt(s2)
    return PoissonDefect(defect=defect, tail_bound=float(bound))


def norm_divergence_demo(f_values: Sequence[complex], m_list: Sequence[int],
                         hbar: float = 1.0) -> list[dict]:
    """||Theta||^2 = exp(sum_{k<=m} |f_k|^2 / hbar) for growing mode count m.

    Demonstrates the normalizability criterion: the norm converges iff
    sum |f_k|^2 does.  Returns one row per m with the partial sum and the
    norm squared.
    """
    f = np.asarray(f_values, dtype=complex)
    rows = []
    for m in m_list:
        m = int(m)
        if m < 0 or m > len(f):
            raise ValidationError(f"m={m} outside supplied f range")
        s = float(np.sum(np.abs(f[:m]) ** 2)) / hbar
        rows.append({"m": m, "sum_sq": s, "norm_sq": math.exp(s)})
    return rows
