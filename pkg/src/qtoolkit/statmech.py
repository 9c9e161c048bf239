"""Equilibrium statistical mechanics on finite-dimensional spaces.

Gibbs states are computed with a spectral shift (log Z is reported with the
shift re-applied, so overflow in exp(-beta*H) is impossible).  Free boson and
fermion gases come with closed forms plus genuinely independent trace routes:
the fermionic pair (product over modes vs sum over all 2^m occupation masks)
is evaluated in exact rational arithmetic so that both routes produce the
same double bit-for-bit; the bosonic truncated trace is compared against the
closed form within an analytic geometric tail bound.

The KMS identity <A(t) B> = <B A(t+i beta)> is evaluated spectrally; the
shift cancels inside the conjugation, so complex time is safe at any finite
dimension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .fock import DensityMatrix

__all__ = [
    "GibbsResult",
    "gibbs_state",
    "entropy",
    "mean_energy",
    "free_energy",
    "energy_from_log_z",
    "FreeGasResult",
    "free_gas",
    "fermi_gas_dual_route",
    "bose_gas_truncated_trace",
    "kms_check",
    "truncated_correlations",
    "set_partitions",
]


def _hermitian(h: np.ndarray, what: str) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"{what} must be square")
    scale = max(float(np.abs(h).max()), 1e-300)
    if float(np.abs(h - h.conj().T).max()) > 1e-12 * scale:
        raise ValidationError(f"{what} must be hermitian")
    return 0.5 * (h + h.conj().T)


@dataclass(frozen=True)
class GibbsResult:
    state: DensityMatrix
    log_z: float
    z: float
    shift: float


def gibbs_state(h: np.ndarray, beta: float) -> GibbsResult:
    """K = exp(-beta H)/Z with the ground energy subtracted before exp.

    log Z is exact (shift re-applied); Z itself may overflow to inf for
    extreme parameters and is secondary to log_z.
    """
    if not beta > 0:
        raise ValidationError("beta must be positive")
    h = _hermitian(h, "hamiltonian")
    vals, vecs = np.linalg.eigh(h)
    shift = float(vals.min())
    weights = np.exp(-beta * (vals - shift))
    z_shifted = float(weights.sum())
    k = (vecs * (weights / z_shifted)) @ vecs.conj().T
    k = 0.5 * (k + k.conj().T)
    log_z = math.log(z_shifted) - beta * shift
    with np.errstate(over="ignore"):
        z = float(np.exp(log_z))
    return GibbsResult(state=DensityMatrix(k), log_z=log_z, z=z, shift=shift)


def entropy(k: DensityMatrix | np.ndarray) -> float:
    """Von Neumann entropy -Tr K log K; eigenvalues below 1e-15 contribute 0."""
    m = k.matrix if isinstance(k, DensityMatrix) else _hermitian(k, "state")
    vals = np.linalg.eigvalsh(m)
    vals = vals[vals > 1e-15]
    return float(-(vals * np.log(vals)).sum())


def mean_energy(k: DensityMatrix | np.ndarray, h: np.ndarray) -> float:
    m = k.matrix if isinstance(k, DensityMatrix) else np.asarray(k)
    return float(np.trace(m @ h).real)


def free_energy(h: np.ndarray, beta: float) -> float:
    """F = -T log Z = E - T S on the Gibbs state."""
    return -gibbs_state(h, beta).log_z / beta


def energy_from_log_z(h: np.ndarray, beta: float, dbeta: float = 1e-6) -> float:
    """E = -d(log Z)/d(beta) by central finite differences (verification aid)."""
    up = gibbs_state(h, beta + dbeta).log_z
    down = gibbs_state(h, beta - dbeta).log_z
    return -(up - down) / (2 * dbeta)


# ---------------------------------------------------------------------------
# free gases


@dataclass(frozen=True)
class FreeGasResult:
    statistics: str
    z: float
    log_z: float
    energy: float
    occupations: tuple[float, ...]

    @property
    def entropy(self) -> float:
        # S = beta E + log Z holds for Gibbs states; beta is recoverable
        # from the stored fields only by the caller, so expose the identity
        # pieces instead of guessing.
        raise AttributeError("use beta*energy + log_z at the caller's beta")


def free_gas(eps: Sequence[float], beta: float, statistics: str) -> FreeGasResult:
    """Closed-form Z, E, and occupations for a free gas.

    bose:  Z = prod (1 - e^{-beta eps})^-1,  n_k = (e^{beta eps} - 1)^-1
    fermi: Z = prod (1 + e^{-beta eps}),     n_k = (e^{beta eps} + 1)^-1
    """
    eps = np.asarray(eps, dtype=float)
    if not beta > 0:
        raise ValidationError("beta must be positive")
    if statistics == "bose":
        if np.any(beta * eps <= 0):
            raise ValidationError("bosonic modes need beta*eps > 0 to converge")
        log_z = float(-np.log1p(-np.exp(-beta * eps)).sum())
        occ = 1.0 / np.expm1(beta * eps)
    elif statistics == "fermi":
        log_z = float(np.log1p(np.exp(-beta * eps)).sum())
        occ = 1.0 / (np.exp(beta * eps) + 1.0)
    else:
        raise ValidationError(f"unknown statistics {statistics!r}")
    energy = float((eps * occ).sum())
    return FreeGasResult(statistics=statistics, z=float(np.exp(log_z)),
                         log_z=log_z, energy=energy,
                         occupations=tuple(float(x) for x in occ))


@dataclass(frozen=True)
class FermiDualRoute:
    z_product: float
    z_trace: float
    energy_product: float
    energy_trace: float
    occupations_product: tuple[float, ...]
    occupations_trace: tuple[float, ...]


def fermi_gas_dual_route(eps: Sequence[float], beta: float) -> FermiDualRoute:
    """Fermionic Z, E, n_k by two independent algorithms, bit-exactly equal.

    Both routes start from the same dyadic Boltzmann factors
    f_k = double(e^{-beta eps_k}) and then run in exact rational arithmetic:

    * product route: Z = prod_k (1 + f_k), n_k = f_k/(1+f_k), one rounding
      to double at the end;
    * trace route: the literal 2^m-term sum over occupation bitmasks of the
      diagonal of e^{-beta H} on the fermionic Fock space, with E and n_k as
      weighted mask sums.

    The two rationals coincide by the distributive law, so the doubles agree
    bit-for-bit; the routes still exercise different code paths and
    different combinatorics.
    """
    eps = [float(e) for e in eps]
    m = len(eps)
    if m > 16:
        raise ValidationError("trace route is exponential; m <= 16 required")
    f = [Fraction(math.exp(-beta * e)) for e in eps]
    eps_frac = [Fraction(e) for e in eps]

    z_prod = Fraction(1)
    for fk in f:
        z_prod *= 1 + fk
    occ_prod = [fk / (1 + fk) for fk in f]
    e_prod = sum((ef * nk for ef, nk in zip(eps_frac, occ_prod)), Fraction(0))

    z_trace = Fraction(0)
    e_weighted = Fraction(0)
    occ_weighted = [Fraction(0)] * m
    for mask in range(1 << m):
        w = Fraction(1)
        e_mask = Fraction(0)
        for k in range(m):
            if mask >> k & 1:
                w *= f[k]
                e_mask += eps_frac[k]
        z_trace += w
        e_weighted += e_mask * w
        for k in range(m):
            if mask >> k & 1:
                occ_weighted[k] += w
    occ_trace = [x / z_trace for x in occ_weighted]
    e_trace = e_weighted / z_trace

    return FermiDualRoute(
        z_product=float(z_prod),
        z_trace=float(z_trace),
        energy_product=float(e_prod),
        energy_trace=float(e_trace),
        occupations_product=tuple(float(x) for x in occ_prod),
        occupations_trace=tuple(float(x) for x in occ_trace),
    )


@dataclass(frozen=True)
class BoseTruncatedTrace:
    z_truncated: float
    z_closed: float
    tail_bound: float


def bose_gas_truncated_trace(eps: Sequence[float], beta: float,
                             cutoffs: Sequence[int]) -> BoseTruncatedTrace:
    """Truncated bosonic trace vs the closed form, with an analytic bound.

    The truncated partition sum runs over the occupation box prod(c_k+1)
    directly (sum of products route); the closed form is the geometric
    product.  Their gap is exactly Z * (1 - prod(1 - r^{c+1})) <=
    Z * sum_k r_k^{c_k+1}, which is the returned tail bound.
    """
    eps = np.asarray(eps, dtype=float)
    cutoffs = [int(c) for c in cutoffs]
    if len(cutoffs) != len(eps):
        raise ValidationError("need one cutoff per mode")
    closed = free_gas(eps, beta, "bose")
    r = np.exp(-beta * eps)
    z_trunc = 0.0
    for occ in itertools.product(*[range(c + 1) for c in cutoffs]):
        z_trunc += float(np.prod(r ** np.asarray(occ)))
    bound = closed.z * float((r ** (np.asarray(cutoffs) + 1)).sum())
    return BoseTruncatedTrace(z_truncated=z_trunc, z_closed=closed.z,
                              tail_bound=bound)


# ---------------------------------------------------------------------------
# KMS


def kms_check(h: np.ndarray, a: np.ndarray, b: np.ndarray, beta: float,
              t: float) -> float:
    """|<A(t) B>_beta - <B A(t+i beta)>_beta| with spectral evaluation.

    A(z) = e^{izH} A e^{-izH}; in the eigenbasis the conjugation depends only
    on eigenvalue differences, so the spectral shift used for the Gibbs
    weights cancels and complex time never overflows at moderate beta*spread.
    """
    h = _hermitian(h, "hamiltonian")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != h.shape or b.shape != h.shape:
        raise ValidationError("operator dimensions must match the hamiltonian")
    vals, vecs = np.linalg.eigh(h)
    shift = vals.min()
    w = np.exp(-beta * (vals - shift))
    w /= w.sum()
    a_e = vecs.conj().T @ a @ vecs
    b_e = vecs.conj().T @ b @ vecs
    diff = vals[:, None] - vals[None, :]
    a_t = a_e * np.exp(1j * t * diff)
    # LHS: sum_m w_m [A(t) B]_{mm}
    lhs = complex(np.sum(w[:, None] * a_t * b_e.T))
    # RHS: A(t+i beta) picks up e^{-beta diff}
    a_ct = a_t * np.exp(-beta * diff)
    rhs = complex(np.sum(w[:, None] * b_e * a_ct.T))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# truncated correlation functions


def set_partitions(items: Sequence[int]):
    """All partitions of `items` into nonempty blocks (order-preserving)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        # first joins an existing block
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        # first forms its own block
        yield [[first]] + part


def _moment(k: np.ndarray, ops: Sequence[np.ndarray], block: Sequence[int]
            ) -> complex:
    prod = np.eye(k.shape[0], dtype=complex)
    for i in sorted(block):
        prod = prod @ ops[i]
    return complex(np.trace(k @ prod))


def truncated_correlations(k: DensityMatrix | np.ndarray,
                           ops: Sequence[np.ndarray]) -> dict:
    """Truncated (cumulant) correlations of the given operator list.

    Returns a map from index tuples (in increasing order, respecting the
    operator order inside each block) to w^T values, for every nonempty
    subset of the operators.  Defined recursively by
        w(S) = sum over partitions of S of prod_blocks w^T(block),
    so w^T(S) = w(S) - (all partitions with more than one block).
    Exposed for n <= 3 operators.
    """
    m = k.matrix if isinstance(k, DensityMatrix) else np.asarray(k)
    n = len(ops)
    if n > 3:
        raise ValidationError("truncated correlations are exposed up to n = 3")
    truncated: dict[tuple, complex] = {}
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            total = _moment(m, ops, subset)
            for part in set_partitions(list(subset)):
                if len(part) == 1:
                    continue
                prod = 1.0 + 0j
                for block in part:
                    prod *= truncated[tuple(sorted(block))]
                total -= prod
            truncated[subset] = total
    return truncated
