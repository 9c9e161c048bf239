"""Time evolution engines.

Exact propagators for hermitian generators, Trotter time-slicing with a
measured convergence order, adiabatic propagation with a per-level phase
ledger, and a discrete qp-symbol calculus on periodic (q, p) grids whose
star product reproduces operator multiplication exactly at the grid level.

Grid conventions.  A SymbolGrid holds n points q_j = (j - n/2) dq and
p_l = (l - n/2) dp with dp dq = 2 pi hbar / n.  With the phase matrix
E[j, l] = exp(-i p_l q_j / hbar) the symbol of a kernel matrix M is

    a = E * (M @ conj(E))          (elementwise product)

and the inverse transform M = (1/n) (a * conj(E)) @ E.T is exact on the
grid, as is the star product

    a ? b = (1/n) E * ((a * conj(E)) @ E.T @ (b * conj(E)))

which equals the symbol of the product of the two reconstructed kernels.
The normalization is fixed so the symbol of the identity matrix is the
constant 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError

__all__ = [
    "EvolutionProblem",
    "expm",
    "evolve_density",
    "heisenberg",
    "trotter_slices",
    "TrotterReport",
    "trotter_order",
    "SymbolGrid",
    "symbol_of_matrix",
    "matrix_of_symbol",
    "position_matrix",
    "momentum_matrix",
    "boundary_mass",
    "qp_star_product",
    "hermite_transfer",
    "mehler_kernel",
    "rk4_fixed",
    "propagate_linear_ode",
    "AdiabaticResult",
    "adiabatic_evolve",
]


def _require_finite(m: np.ndarray, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m.view(float))):
        raise ValidationError(f"{what} has non-finite entries")
    return m


def _require_hermitian(m: np.ndarray, what: str) -> np.ndarray:
    m = _require_finite(m, what)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{what} must be square")
    scale = max(float(np.abs(m).max()), 1e-300)
    if float(np.abs(m - m.conj().T).max()) > 1e-12 * scale:
        raise ValidationError(f"{what} must be hermitian within 1e-12")
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class EvolutionProblem:
    """A time-evolution job: generator, duration, and what is evolved.

    mode 'vector' propagates states by U(t); mode 'density' conjugates
    density matrices by U(t).  Both demand a hermitian generator.
    """

    generator: np.ndarray
    t: float
    mode: str = "density"
    hbar: float = 1.0

    def __post_init__(self):
        if self.mode not in ("vector", "density"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "generator",
                           _require_hermitian(self.generator, "generator"))


def expm(h: np.ndarray, t: float, hbar: float = 1.0) -> np.ndarray:
    """U(t) = exp(-i t H / hbar) for hermitian H, by eigendecomposition."""
    h = _require_hermitian(h, "generator")
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * t * vals / hbar)) @ vecs.conj().T


def evolve_density(k: np.ndarray, h: np.ndarray, t: float,
                   hbar: float = 1.0) -> np.ndarray:
    u = expm(h, t, hbar)
    return u @ np.asarray(k, dtype=complex) @ u.conj().T


def heisenberg(a: np.ndarray, h: np.ndarray, t: float,
               hbar: float = 1.0) -> np.ndarray:
    """A(t) = U(t)^dag A U(t), so that <A(t)>_K = <A>_{K(t)}."""
    u = expm(h, t, hbar)
    return u.conj().T @ np.asarray(a, dtype=complex) @ u


# ---------------------------------------------------------------------------
# Trotter slicing


def trotter_slices(factors: Sequence[np.ndarray], t: float, n: int
                   ) -> np.ndarray:
    """I_N(t) = (prod_j e^{(t/N) H_j})^N for general square factors.

    Factors are applied left to right inside each slice; the limit
    N -> infinity is e^{t sum_j H_j} and the error is O(1/N).
    """
    if n < 1:
        raise ValidationError("slice count must be >= 1")
    mats = [_require_finite(f, "factor") for f in factors]
    if not mats:
        raise ValidationError("need at least one factor")
    dim = mats[0].shape[0]
    for m in mats:
        if m.shape != (dim, dim):
            raise ValidationError("factors must share one square dimension")
    step = np.eye(dim, dtype=complex)
    for m in mats:
        step = step @ scipy.linalg.expm((t / n) * m)
    return np.linalg.matrix_power(step, n)


@dataclass(frozen=True)
class TrotterReport:
    errors: Mapping[int, float]
    order: float


def trotter_order(factors: Sequence[np.ndarray], t: float,
                  n_values: Sequence[int]) -> TrotterReport:
    """Frobenius error of I_N against e^{t sum H_j} with a fitted order.

    The order is the negated slope of log error versus log N; for a
    nontrivial splitting it sits near 1.
    """
    total = sum(np.asarray(f, dtype=complex) for f in factors)
    exact = scipy.linalg.expm(t * total)
    errors = {}
    for n in n_values:
        approx = trotter_slices(factors, t, n)
        errors[int(n)] = float(np.linalg.norm(approx - exact))
    ns = np.asarray(sorted(errors), dtype=float)
    es = np.asarray([errors[int(n)] for n in ns])
    if np.any(es <= 0):
        order = float("inf")
    else:
        order = -float(np.polyfit(np.log(ns), np.log(es), 1)[0])
    return TrotterReport(errors=errors, order=order)


# ---------------------------------------------------------------------------
# discrete qp symbols


@dataclass(frozen=True)
class SymbolGrid:
    """Centered periodic (q, p) grid with dp dq = 2 pi hbar / n.

    The defining kernels of the calculus are c(q, p) = r(q, p) = -i q p,
    entering through the phase matrix E = exp(c(q_j, p_l) / hbar).
    """

    n: int
    dq: float
    hbar: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("grid needs at least two points")
        if not (self.dq > 0 and self.hbar > 0):
            raise ValidationError("dq and hbar must be positive")

    @property
    def dp(self) -> float:
        return 2.0 * math.pi * self.hbar / (self.n * self.dq)

    @cached_property
    def q(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dq

    @cached_property
    def p(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dp

    def kernel_c(self, q: np.ndarray, p: np.ndarray) -> np.ndarray:
        return -1j * np.asarray(q) * np.asarray(p)

    kernel_r = kernel_c

    @cached_property
    def phase(self) -> np.ndarray:
        return np.exp(self.kernel_c(self.q[:, None], self.p[None, :])
                      / self.hbar)

    def window(self, q_max: float, p_max: float) -> tuple:
        """Index mask pair selecting |q| <= q_max, |p| <= p_max."""
        return np.ix_(np.abs(self.q) <= q_max, np.abs(self.p) <= p_max)


def symbol_of_matrix(m: np.ndarray, grid: SymbolGrid) -> np.ndarray:
    m = _require_finite(m, "kernel matrix")
    if m.shape != (grid.n, grid.n):
        raise ValidationError("kernel matrix must match the grid")
    e = grid.phase
    return e * (m @ e.conj())


def matrix_of_symbol(a: np.ndarray, grid: SymbolGrid) -> np.ndarray:
    a = _require_finite(a, "symbol")
    if a.shape != (grid.n, grid.n):
        raise ValidationError("symbol must match the grid")
    e = grid.phase
    return (a * e.conj()) @ e.T / grid.n


def position_matrix(grid: SymbolGrid) -> np.ndarray:
    return np.diag(grid.q).astype(complex)


def momentum_matrix(grid: SymbolGrid) -> np.ndarray:
    """Spectral momentum operator; its symbol is exactly p on the grid."""
    e = grid.phase
    return (e.conj() * grid.p) @ e.T / grid.n


def boundary_mass(m: np.ndarray) -> float:
    """Fraction of L1 mass on the outer frame, identity component removed.

    The identity wraps around the periodic grid without error, so the
    multiple of the identity matching the corner diagonal entries is
    subtracted before measuring; what must decay toward the frame is
    everything else.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    c = 0.5 * (m[0, 0] + m[-1, -1])
    r = m - c * np.eye(n)
    total = float(np.abs(r).sum())
    if total <= 1e-12 * n * float(np.abs(m).max()):
        # residual at roundoff level: the kernel is a multiple of the
        # identity, which wraps without error
        return 0.0
    edge = float(np.abs(r[0, :]).sum() + np.abs(r[-1, :]).sum()
                 + np.abs(r[1:-1, 0]).sum() + np.abs(r[1:-1, -1]).sum())
    return edge / total


def qp_star_product(a: np.ndarray, b: np.ndarray, grid: SymbolGrid,
                    boundary_tol: float | None = 1e-6) -> np.ndarray:
    """Star product of two discrete symbols.

    Equals the symbol of the product of the reconstructed kernel matrices
    exactly; the boundary-mass check rejects symbols whose kernels do not
    decay inside the grid (aliasing would otherwise be silent).  Pass
    boundary_tol=None to skip the check.
    """
    a = _require_finite(a, "symbol a")
    b = _require_finite(b, "symbol b")
    if a.shape != (grid.n, grid.n) or b.shape != (grid.n, grid.n):
        raise ValidationError("symbols must match the grid")
    if boundary_tol is not None:
        for name, s in (("left", a), ("right", b)):
            mass = boundary_mass(matrix_of_symbol(s, grid))
            if mass > boundary_tol:
                raise NumericalError(
                    f"{name} symbol has boundary mass {mass:.3e} > "
                    f"{boundary_tol:.1e}; enlarge the grid")
    e = grid.phase
    return e * ((a * e.conj()) @ (e.T @ (b * e.conj()))) / grid.n


def hermite_transfer(grid: SymbolGrid, n_modes: int) -> np.ndarray:
    """Transfer matrix T[j, n] = phi_n(q_j) sqrt(dq) to the grid.

    phi_n are oscillator eigenfunctions at the grid's hbar, generated by
    the stable two-term recurrence.  Columns are grid-orthonormal once the
    grid covers the classically allowed region of the highest mode.
    """
    if n_modes < 1:
        raise ValidationError("need at least one mode")
    x = grid.q / math.sqrt(grid.hbar)
    t = np.zeros((grid.n, n_modes))
    t[:, 0] = math.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    if n_modes > 1:
        t[:, 1] = math.sqrt(2.0) * x * t[:, 0]
    for n in range(1, n_modes - 1):
        t[:, n + 1] = (math.sqrt(2.0 / (n + 1)) * x * t[:, n]
                       - math.sqrt(n / (n + 1)) * t[:, n - 1])
    return t * math.sqrt(grid.dq) * grid.hbar ** -0.25


def mehler_kernel(grid: SymbolGrid, beta: float) -> np.ndarray:
    """Kernel matrix of exp(-beta (N + 1/2)) on the position grid.

    Closed Gaussian form; rows/columns carry the quadrature weight dq, so
    matrix products realize the semigroup K_a K_b = K_{a+b} to quadrature
    accuracy.
    """
    if not beta > 0:
        raise ValidationError("beta must be positive")
    hb = grid.hbar
    x = grid.q[:, None] / math.sqrt(hb)
    y = grid.q[None, :] / math.sqrt(hb)
    sh = math.sinh(beta)
    ch = math.cosh(beta)
    k = np.exp(-((x * x + y * y) * ch - 2.0 * x * y) / (2.0 * sh))
    return k / math.sqrt(2.0 * math.pi * sh * hb) * grid.dq


# ---------------------------------------------------------------------------
# ODE stepping


def rk4_fixed(f: Callable, y0: np.ndarray, t0: float, t1: float,
              steps: int) -> np.ndarray:
    """Classical fixed-step 4th-order integration of y' = f(t, y)."""
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    h = (t1 - t0) / steps
    y = np.asarray(y0, dtype=complex).copy()
    t = t0
    for _ in range(steps):
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def _tree_product(steps: np.ndarray) -> np.ndarray:
    """Ordered product steps[-1] @ ... @ steps[0] by pairwise reduction.

    The reduction order is a fixed balanced tree, so results are
    reproducible regardless of how the batch was produced.
    """
    while steps.shape[0] > 1:
        m = steps.shape[0] // 2
        paired = np.matmul(steps[1:2 * m:2], steps[0:2 * m:2])
        if steps.shape[0] % 2:
            paired = np.concatenate([paired, steps[-1:]])
        steps = paired
    return steps[0]


def _sample_matrices(fn: Callable, xs: np.ndarray, dim: int) -> np.ndarray:
    """Evaluate a matrix-valued callable on many points, batched if it can."""
    try:
        out = np.asarray(fn(xs), dtype=complex)
        if out.shape == (len(xs), dim, dim):
            return out
    except Exception:
        pass
    return np.stack([np.asarray(fn(x), dtype=complex) for x in xs])


def propagate_linear_ode(a_of_s: Callable, dim: int, s0: float, s1: float,
                         tol: float = 1e-8, start_steps: int = 1024,
                         max_steps: int = 1 << 20) -> tuple[np.ndarray, int]:
    """Solve U' = A(s) U, U(s0) = 1, by fixed-step 4th-order slices.

    Each step is the classical 4-stage update written as a matrix acting on
    U, assembled for all steps at once and combined by a balanced product
    tree.  The step count doubles (Richardson halving of h) until two
    consecutive resolutions agree to tol in max norm.
    """
    eye = np.eye(dim, dtype=complex)

    def run(steps: int) -> np.ndarray:
        h = (s1 - s0) / steps
        nodes = s0 + h * np.arange(2 * steps + 1) / 2.0
        a = _sample_matrices(a_of_s, nodes, dim)
        a0, am, a1 = a[0:-1:2], a[1::2], a[2::2]
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = a0
            k2 = np.matmul(am, eye + 0.5 * h * k1)
            k3 = np.matmul(am, eye + 0.5 * h * k2)
            k4 = np.matmul(a1, eye + h * k3)
            slices = eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            return _tree_product(slices)

    steps = start_steps
    prev = run(steps)
    while True:
        steps *= 2
        if steps > max_steps:
            raise NumericalError(
                f"step-size underflow: no convergence to {tol:.1e} "
                f"within {max_steps} steps")
        cur = run(steps)
        if float(np.abs(cur - prev).max()) <= tol:
            return cur, steps
        prev = cur


# ---------------------------------------------------------------------------
# adiabatic evolution


def _simpson_eigen_traces(h_of_s: Callable, dim: int, tol: float = 1e-12,
                          max_level: int = 14) -> tuple[np.ndarray, float]:
    """Integrals of the sorted eigenvalue curves over s in [0, 1].

    Composite quadrature with interval doubling until the per-level result
    is stable; returns the integral vector and the minimum spectral gap
    seen at the finest sampling.
    """
    level = 6
    prev = None
    while True:
        m = 1 << level
        s = np.linspace(0.0, 1.0, m + 1)
        hs = _sample_matrices(h_of_s, s, dim)
        vals = np.linalg.eigvalsh(hs)
        gaps = np.diff(vals, axis=1)
        min_gap = float(gaps.min()) if dim > 1 else math.inf
        w = np.ones(m + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        integ = (w[:, None] * vals).sum(axis=0) / (3.0 * m)
        if prev is not None:
            scale = max(1.0, float(np.abs(integ).max()))
            if float(np.abs(integ - prev).max()) <= tol * scale:
                return integ, min_gap
        if level == max_level:
            return integ, min_gap
        prev = integ
        level += 1


def _continued_basis(h_of_s: Callable, dim: int, points: int = 1025
                     ) -> tuple[np.ndarray, np.ndarray, float]:
    """Eigenbases at s=0 and s=1 with phases continued along the path.

    Sorted eigenvectors are phase-aligned step to step by making the
    overlap with the previous frame real positive; an overlap magnitude
    below 0.7 means the sampling cannot track the branch.
    """
    s = np.linspace(0.0, 1.0, points)
    hs = _sample_matrices(h_of_s, s, dim)
    vals, vecs = np.linalg.eigh(hs)
    start = vecs[0].copy()
    prev = start.copy()
    worst = 1.0
    for k in range(1, points):
        cur = vecs[k]
        ov = np.sum(prev.conj() * cur, axis=0)
        mags = np.abs(ov)
        worst = min(worst, float(mags.min()))
        if worst < 0.7:
            raise NumericalError(
                "eigenpath continuation lost track of a branch; "
                "the spectrum may cross along the path")
        cur = cur * (ov.conj() / np.where(mags == 0, 1.0, mags))
        prev = cur
    return start, prev, worst


@dataclass(frozen=True)
class AdiabaticResult:
    """Propagator over the scaled path plus the per-level phase ledger.

    phases[m, n] is the accumulated relative phase
    (1/(alpha hbar)) * integral of (E_m - E_n) ds; the diagonal is exactly
    zero.  leakage[n] is |U phi_n(0) - e^{-i dynamical_phases[n]} phi_n(1)|,
    the adiabatic-theorem defect, expected O(alpha) for smooth gapped
    families.
    """

    u: np.ndarray
    dynamical_phases: np.ndarray
    phases: np.ndarray
    min_gap: float
    leakage: np.ndarray
    start_basis: np.ndarray
    end_basis: np.ndarray
    steps: int
    alpha: float


def adiabatic_evolve(family: Callable, path: Callable, alpha: float,
                     hbar: float = 1.0, tol: float = 1e-8,
                     gap_threshold: float = 1e-8,
                     max_steps: int = 1 << 20) -> AdiabaticResult:
    """Integrate dU/ds = -(i/(alpha hbar)) H(g(s)) U over s in [0, 1].

    family maps a parameter value g to a hermitian matrix, path maps
    s in [0, 1] to g; alpha > 0 scales physical time as T = 1/alpha.
    Callables may accept arrays (batched evaluation) or scalars.
    """
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    probe = np.asarray(family(path(0.0)), dtype=complex)
    if probe.ndim != 2 or probe.shape[0] != probe.shape[1]:
        raise ValidationError("family must produce square matrices")
    dim = probe.shape[0]
    _require_hermitian(probe, "family value")

    def h_of_s(s):
        return family(path(s))

    def a_of_s(s):
        return (-1j / (alpha * hbar)) * np.asarray(h_of_s(s), dtype=complex)

    integrals, min_gap = _simpson_eigen_traces(h_of_s, dim)
    if dim > 1 and min_gap < gap_threshold:
        raise NumericalError(
            f"spectral gap {min_gap:.3e} fell below {gap_threshold:.1e} "
            "along the path")
    dyn = integrals / (alpha * hbar)
    phases = dyn[:, None] - dyn[None, :]

    u, steps = propagate_linear_ode(a_of_s, dim, 0.0, 1.0, tol=tol,
                                    max_steps=max_steps)

    start, end, _ = _continued_basis(h_of_s, dim)
    propagated = u @ start
    expected = end * np.exp(-1j * dyn)[None, :]
    leakage = np.linalg.norm(propagated - expected, axis=0)

    return AdiabaticResult(u=u, dynamical_phases=dyn, phases=phases,
                           min_gap=min_gap, leakage=leakage,
                           start_basis=start, end_basis=end, steps=steps,
                           alpha=alpha)
