"""Exact symbolic Weyl and Clifford algebras in normal form.

A polynomial in creation/annihilation symbols is stored in normal form: every
creation factor precedes every annihilation factor.  Products are computed by
word reduction: moving an annihilator through a creator produces the swapped
word plus a contraction term (hbar per bosonic pairing, a parity-signed unit
contraction for fermions).  Coefficient arithmetic is plain complex
arithmetic with no truncation or pruning threshold: only exact zeros are
removed, so with dyadic-rational inputs (integers, halves, quarters...)
every algebraic identity, associativity included, holds bit-exactly.

Bosonic term keys are pairs of per-mode degree tuples (alpha, beta) for
a*^alpha a^beta; fermionic keys are pairs of bitmasks (cmask, amask), each
block written in increasing mode order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from . import fock

__all__ = [
    "NormalOrderedPolynomial",
    "SigmaForm",
    "WickSymbol",
    "WeylCheckResult",
    "poly",
    "unit",
    "zero",
    "creator",
    "annihilator",
    "product",
    "involution",
    "commutator",
    "wick_symbol",
    "represent",
    "canonical_quadratures",
    "weyl_exponential_check",
    "format_poly",
    "parse_poly",
    "DEGREE_CAP",
]

DEGREE_CAP = 8


# ---------------------------------------------------------------------------
# polynomial container


@dataclass(frozen=True)
class NormalOrderedPolynomial:
    statistics: str
    modes: int
    hbar: float
    terms: dict

    def __post_init__(self) -> None:
        if self.statistics not in ("bose", "fermi"):
            raise ValidationError(f"unknown statistics {self.statistics!r}")
        if self.modes < 1:
            raise ValidationError("modes must be >= 1")
        if not (self.hbar > 0):
            raise ValidationError("hbar must be positive")
        clean = {}
        for key, coeff in self.terms.items():
            coeff = complex(coeff)
            if coeff == 0:
                continue
            self._check_key(key)
            clean[key] = coeff
        object.__setattr__(self, "terms", clean)

    def _check_key(self, key) -> None:
        alpha, beta = key
        if self.statistics == "bose":
            if (len(alpha) != self.modes or len(beta) != self.modes
                    or any(d < 0 for d in alpha) or any(d < 0 for d in beta)):
                raise ValidationError(f"bad bosonic term key {key!r}")
        else:
            top = 1 << self.modes
            if not (0 <= alpha < top and 0 <= beta < top):
                raise ValidationError(f"bad fermionic term key {key!r}")

    def _like(self, terms: dict) -> "NormalOrderedPolynomial":
        return NormalOrderedPolynomial(self.statistics, self.modes, self.hbar, terms)

    def _compatible(self, other: "NormalOrderedPolynomial") -> None:
        if (self.statistics, self.modes, self.hbar) != (
                other.statistics, other.modes, other.hbar):
            raise ValidationError("polynomials live in different algebras")

    def __add__(self, other: "NormalOrderedPolynomial") -> "NormalOrderedPolynomial":
        self._compatible(other)
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            terms[key] = terms.get(key, 0j) + coeff
        return self._like(terms)

    def __sub__(self, other: "NormalOrderedPolynomial") -> "NormalOrderedPolynomial":
        return self + other.scale(-1)

    def scale(self, factor: complex) -> "NormalOrderedPolynomial":
        return self._like({k: factor * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, NormalOrderedPolynomial):
            return product(self, other)
        return self.scale(other)

    __rmul__ = scale

    def degree(self) -> tuple[int, int]:
        """Maximal (creation, annihilation) side degrees over all terms."""
        dc = da = 0
        for alpha, beta in self.terms:
            if self.statistics == "bose":
                dc = max(dc, sum(alpha))
                da = max(da, sum(beta))
            else:
                dc = max(dc, int(alpha).bit_count())
                da = max(da, int(beta).bit_count())
        return dc, da

    def is_zero(self) -> bool:
        return not self.terms


def poly(statistics: str, modes: int, terms: Mapping, hbar: float = 1.0
         ) -> NormalOrderedPolynomial:
    return NormalOrderedPolynomial(statistics, modes, hbar, dict(terms))


def zero(statistics: str, modes: int, hbar: float = 1.0) -> NormalOrderedPolynomial:
    return poly(statistics, modes, {}, hbar)


def _unit_key(statistics: str, modes: int):
    if statistics == "bose":
        z = (0,) * modes
        return (z, z)
    return (0, 0)


def unit(statistics: str, modes: int, hbar: float = 1.0) -> NormalOrderedPolynomial:
    return poly(statistics, modes, {_unit_key(statistics, modes): 1.0 + 0j}, hbar)


def _single_key(statistics: str, modes: int, k: int, creation: bool):
    if not 1 <= k <= modes:
        raise ValidationError(f"mode index {k} out of range 1..{modes}")
    if statistics == "bose":
        z = [0] * modes
        z[k - 1] = 1
        z = tuple(z)
        e = (0,) * modes
        return (z, e) if creation else (e, z)
    mask = 1 << (k - 1)
    return (mask, 0) if creation else (0, mask)


def creator(statistics: str, modes: int, k: int, hbar: float = 1.0
            ) -> NormalOrderedPolynomial:
    return poly(statistics, modes, {_single_key(statistics, modes, k, True): 1.0 + 0j}, hbar)


def annihilator(statistics: str, modes: int, k: int, hbar: float = 1.0
                ) -> NormalOrderedPolynomial:
    return poly(statistics, modes, {_single_key(statistics, modes, k, False): 1.0 + 0j}, hbar)


# ---------------------------------------------------------------------------
# word reduction


def _sort_parity(indices: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Sort generator indices, returning the permutation parity sign."""
    items = list(indices)
    sign = 1
    # insertion sort; each adjacent swap is one transposition
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    return tuple(items), sign


def _accumulate_bose(result: dict, modes: int, creations: list, annihilations: list,
                     coeff: complex) -> None:
    alpha = [0] * modes
    beta = [0] * modes
    for k in creations:
        alpha[k] += 1
    for k in annihilations:
        beta[k] += 1
    key = (tuple(alpha), tuple(beta))
    result[key] = result.get(key, 0j) + coeff


def _accumulate_fermi(result: dict, creations: list, annihilations: list,
                      coeff: complex) -> None:
    c_sorted, sc = _sort_parity(creations)
    a_sorted, sa = _sort_parity(annihilations)
    if len(set(c_sorted)) != len(c_sorted) or len(set(a_sorted)) != len(a_sorted):
        return  # repeated fermionic generator: term vanishes
    cmask = 0
    for k in c_sorted:
        cmask |= 1 << k
    amask = 0
    for k in a_sorted:
        amask |= 1 << k
    key = (cmask, amask)
    result[key] = result.get(key, 0j) + coeff * sc * sa


def _normal_order_word(word: tuple, statistics: str, modes: int, hbar: float) -> dict:
    """Reduce a word of (is_creation, mode) factors to normal form.

    Returns a term map.  Bosonic swaps commute with contraction hbar;
    fermionic swaps anticommute with unit contraction.
    """
    result: dict = {}
    fermi = statistics == "fermi"
    stack = [(word, 1.0 + 0j)]
    while stack:
        w, coeff = stack.pop()
        swap_at = -1
        for t in range(len(w) - 1):
            if (not w[t][0]) and w[t + 1][0]:
                swap_at = t
                break
        if swap_at < 0:
            creations = [m for is_c, m in w if is_c]
            annihilations = [m for is_c, m in w if not is_c]
            if fermi:
                _accumulate_fermi(result, creations, annihilations, coeff)
            else:
                _accumulate_bose(result, modes, creations, annihilations, coeff)
            continue
        t = swap_at
        swapped = w[:t] + (w[t + 1], w[t]) + w[t + 2:]
        stack.append((swapped, -coeff if fermi else coeff))
        if w[t][1] == w[t + 1][1]:
            contracted = w[:t] + w[t + 2:]
            stack.append((contracted, coeff * (1.0 if fermi else hbar)))
    return result


def _key_to_word(statistics: str, modes: int, key) -> tuple:
    alpha, beta = key
    word = []
    if statistics == "bose":
        for k in range(modes):
            word.extend([(True, k)] * alpha[k])
        for k in range(modes):
            word.extend([(False, k)] * beta[k])
    else:
        for k in range(modes):
            if alpha >> k & 1:
                word.append((True, k))
        for k in range(modes):
            if beta >> k & 1:
                word.append((False, k))
    return tuple(word)


def product(a: NormalOrderedPolynomial, b: NormalOrderedPolynomial,
            degree_cap: int = DEGREE_CAP) -> NormalOrderedPolynomial:
    """Exact normal-ordered product a*b."""
    a._compatible(b)
    dc = a.degree()
    db = b.degree()
    if max(dc[0] + db[0], dc[1] + db[1]) > degree_cap:
        raise ValidationError(
            f"product degree would exceed the cap {degree_cap}; "
            "raise degree_cap explicitly if this is intended")
    out: dict = {}
    for key_a, ca in a.terms.items():
        word_a = _key_to_word(a.statistics, a.modes, key_a)
        for key_b, cb in b.terms.items():
            word = word_a + _key_to_word(b.statistics, b.modes, key_b)
            reduced = _normal_order_word(word, a.statistics, a.modes, a.hbar)
            c = ca * cb
            for key, r in reduced.items():
                out[key] = out.get(key, 0j) + c * r
    return NormalOrderedPolynomial(a.statistics, a.modes, a.hbar, out)


def involution(a: NormalOrderedPolynomial) -> NormalOrderedPolynomial:
    """Conjugate-linear, order-reversing star operation; (AB)* = B*A*."""
    out: dict = {}
    if a.statistics == "bose":
        for (alpha, beta), coeff in a.terms.items():
            key = (beta, alpha)
            out[key] = out.get(key, 0j) + coeff.conjugate()
    else:
        for (cmask, amask), coeff in a.terms.items():
            # (a*^C a^A)* = a*^{rev A} a^{rev C}; re-sorting each reversed
            # block to increasing order costs parity (-1)^{n(n-1)/2}
            nc = int(cmask).bit_count()
            na = int(amask).bit_count()
            sign = (-1) ** (nc * (nc - 1) // 2 + na * (na - 1) // 2)
            key = (amask, cmask)
            out[key] = out.get(key, 0j) + sign * coeff.conjugate()
    return NormalOrderedPolynomial(a.statistics, a.modes, a.hbar, out)


def commutator(a: NormalOrderedPolynomial, b: NormalOrderedPolynomial,
               degree_cap: int = DEGREE_CAP) -> NormalOrderedPolynomial:
    return product(a, b, degree_cap) - product(b, a, degree_cap)


# ---------------------------------------------------------------------------
# Wick symbols


@dataclass(frozen=True)
class WickSymbol:
    """Normal-form coefficients with operator hats removed.

    Bosonic symbols are ordinary polynomials in conjugate pairs (a*, a);
    fermionic symbols are Grassmann polynomials keyed by the same masks.
    """

    statistics: str
    modes: int
    terms: dict

    def conjugate(self) -> "WickSymbol":
        out: dict = {}
        if self.statistics == "bose":
            for (alpha, beta), coeff in self.terms.items():
                key = (beta, alpha)
                out[key] = out.get(key, 0j) + coeff.conjugate()
        else:
            for (cmask, amask), coeff in self.terms.items():
                nc = int(cmask).bit_count()
                na = int(amask).bit_count()
                sign = (-1) ** (nc * (nc - 1) // 2 + na * (na - 1) // 2)
                key = (amask, cmask)
                out[key] = out.get(key, 0j) + sign * coeff.conjugate()
        return WickSymbol(self.statistics, self.modes, out)

    def evaluate(self, astar: Sequence[complex], a: Sequence[complex]) -> complex:
        if self.statistics != "bose":
            raise ValidationError("numeric evaluation is bosonic-only")
        astar = np.asarray(astar, dtype=complex)
        a = np.asarray(a, dtype=complex)
        total = 0j
        for (alpha, beta), coeff in self.terms.items():
            val = coeff
            for k in range(self.modes):
                val *= astar[k] ** alpha[k] * a[k] ** beta[k]
            total += val
        return complex(total)


def wick_symbol(a: NormalOrderedPolynomial) -> WickSymbol:
    return WickSymbol(a.statistics, a.modes, dict(a.terms))


# ---------------------------------------------------------------------------
# Fock representation


def represent(a: NormalOrderedPolynomial, spec: fock.FockSpec) -> np.ndarray:
    """Matrix of the polynomial on a Fock space.

    The map is a *-homomorphism exactly on the fermionic space and on the
    bosonic safe subspace.  Bosonic cutoffs must reach the polynomial's
    per-mode degree: c_k >= alpha_k + beta_k for every term.
    """
    if spec.statistics != a.statistics or spec.modes != a.modes:
        raise ValidationError("spec does not match polynomial statistics/modes")
    if abs(spec.hbar - a.hbar) != 0:
        raise ValidationError("spec hbar differs from polynomial hbar")
    if a.statistics == "bose":
        needed = [0] * a.modes
        for alpha, beta in a.terms:
            for k in range(a.modes):
                needed[k] = max(needed[k], alpha[k] + beta[k])
        bad = [k + 1 for k in range(a.modes) if spec.cutoffs[k] < needed[k]]
        if bad:
            raise ValidationError(
                f"cutoffs too small for polynomial degree; need at least "
                f"{needed} per mode (modes {bad} deficient)")
    dim = spec.dim
    a_dag = [fock.creation_matrix(spec, k + 1) for k in range(a.modes)]
    a_ann = [m.conj().T for m in a_dag]
    out = np.zeros((dim, dim), dtype=complex)
    for key, coeff in a.terms.items():
        m = np.eye(dim, dtype=complex)
        word = _key_to_word(a.statistics, a.modes, key)
        for is_c, k in word:
            m = m @ (a_dag[k] if is_c else a_ann[k])
        out += coeff * m
    return out


# ---------------------------------------------------------------------------
# exponential Weyl relation


@dataclass(frozen=True)
class SigmaForm:
    """Antisymmetric form sigma^{kl} for self-adjoint generators u^k."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("sigma must be square")
        if not np.array_equal(m, -m.T):
            raise ValidationError("sigma must be antisymmetric")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def canonical(cls, modes: int) -> "SigmaForm":
        block = np.array([[0.0, 1.0], [-1.0, 0.0]])
        m = np.zeros((2 * modes, 2 * modes))
        for k in range(modes):
            m[2 * k:2 * k + 2, 2 * k:2 * k + 2] = block
        return cls(m)


def canonical_quadratures(spec: fock.FockSpec) -> list[np.ndarray]:
    """Self-adjoint u = (q_1, p_1, ..., q_m, p_m) with [q_k, p_k] = i hbar."""
    us = []
    for k in range(1, spec.modes + 1):
        ad = fock.creation_matrix(spec, k)
        an = ad.conj().T
        q = (an + ad) / math.sqrt(2.0)
        p = (an - ad) / (1j * math.sqrt(2.0))
        us.extend([q, p])
    return us


def _exp_i_hermitian(h: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


@dataclass(frozen=True)
class WeylCheckResult:
    defect: float
    phase: complex
    cutoff: int
    subspace_dim: int


def weyl_exponential_check(spec: fock.FockSpec, alpha: Sequence[float],
                           beta: Sequence[float], sigma: SigmaForm | None = None,
                           max_level: int = 2, tol: float | None = None
                           ) -> WeylCheckResult:
    """Defect of V_alpha V_beta = exp(-i (hbar/2) alpha.sigma.beta) V_{alpha+beta}.

    V_alpha = exp(i sum_k alpha_k u^k) with the canonical quadratures on a
    truncated space; the defect is measured column-wise on the subspace of
    total occupation <= max_level, where truncation tails are smallest.
    Only the canonical symplectic pairing is supported.
    """
    if spec.statistics != "bose":
        raise ValidationError("exponential Weyl check requires bosons")
    canonical = SigmaForm.canonical(spec.modes)
    if sigma is not None and not np.array_equal(sigma.matrix, canonical.matrix):
        raise ValidationError(
            "only the canonical per-mode [[0,1],[-1,0]] pairing is supported; "
            "block-diagonalize general sigma before calling")
    sigma = canonical
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if alpha.shape != (2 * spec.modes,) or beta.shape != (2 * spec.modes,):
        raise ValidationError("alpha/beta must have length 2*modes")
    us = canonical_quadratures(spec)

    def v_op(coeffs: np.ndarray) -> np.ndarray:
        h = sum(c * u for c, u in zip(coeffs, us))
        return _exp_i_hermitian(h)

    phase = np.exp(-0.5j * spec.hbar * float(alpha @ sigma.matrix @ beta))
    diff = v_op(alpha) @ v_op(beta) - phase * v_op(alpha + beta)
    sub = np.nonzero(spec.occupations.sum(axis=1) <= max_level)[0]
    defect = float(np.abs(np.linalg.norm(diff[:, sub], axis=0)).max())
    result = WeylCheckResult(defect=defect, phase=complex(phase),
                             cutoff=min(spec.cutoffs), subspace_dim=len(sub))
    if tol is not None and defect > tol:
        raise NumericalError(
            f"Weyl relation defect {defect:.3e} exceeds tolerance {tol:.1e}; "
            f"try cutoffs around {2 * max(spec.cutoffs)}")
    return result


# ---------------------------------------------------------------------------
# text form


def _format_complex(z: complex) -> str:
    re_s = repr(float(z.real))
    im = float(z.imag)
    sign = "+" if im >= 0 else "-"
    return f"({re_s}{sign}{repr(abs(im))}i)"


def _parse_complex(text: str) -> complex:
    return complex(text.replace("i", "j").replace(" ", ""))


def _monomial_str(statistics: str, modes: int, key) -> str:
    parts = []
    alpha, beta = key
    if statistics == "bose":
        for k in range(modes):
            if alpha[k]:
                parts.append(f"a*[{k + 1}]" + (f"^{alpha[k]}" if alpha[k] > 1 else ""))
        for k in range(modes):
            if beta[k]:
                parts.append(f"a[{k + 1}]" + (f"^{beta[k]}" if beta[k] > 1 else ""))
    else:
        for k in range(modes):
            if alpha >> k & 1:
                parts.append(f"a*[{k + 1}]")
        for k in range(modes):
            if beta >> k & 1:
                parts.append(f"a[{k + 1}]")
    return " ".join(parts)


def _term_sort_key(statistics: str, key):
    alpha, beta = key
    if statistics == "bose":
        return (sum(alpha) + sum(beta), alpha, beta)
    return (int(alpha).bit_count() + int(beta).bit_count(), alpha, beta)


def format_poly(a: NormalOrderedPolynomial) -> str:
    """Render as a sum of terms like `(1.5-0.5i) a*[1]^2 a[3]`."""
    if not a.terms:
        return "(0.0+0.0i)"
    chunks = []
    for key in sorted(a.terms, key=lambda k: _term_sort_key(a.statistics, k)):
        mono = _monomial_str(a.statistics, a.modes, key)
        coeff = _format_complex(a.terms[key])
        chunks.append(f"{coeff} {mono}".strip())
    return " + ".join(chunks)


_FACTOR_RE = re.compile(r"a(\*)?\[(\d+)\](?:\^(\d+))?$")


def parse_poly(text: str, statistics: str, modes: int, hbar: float = 1.0
               ) -> NormalOrderedPolynomial:
    """Inverse of format_poly; accepts exactly the emitted normal form."""
    terms: dict = {}
    for chunk in text.split(" + "):
        chunk = chunk.strip()
        if not chunk:
            continue
        if not chunk.startswith("("):
            raise ValidationError(f"term must start with a coefficient: {chunk!r}")
        close = chunk.index(")")
        coeff = _parse_complex(chunk[1:close])
        factors = chunk[close + 1:].split()
        if statistics == "bose":
            alpha = [0] * modes
            beta = [0] * modes
            seen_annihilator = False
            for f in factors:
                m = _FACTOR_RE.match(f)
                if not m:
                    raise ValidationError(f"cannot parse factor {f!r}")
                is_c = m.group(1) is not None
                k = int(m.group(2))
                e = int(m.group(3) or 1)
                if not 1 <= k <= modes:
                    raise ValidationError(f"mode {k} out of range")
                if is_c:
                    if seen_annihilator:
                        raise ValidationError("term is not in normal form")
                    alpha[k - 1] += e
                else:
                    seen_annihilator = True
                    beta[k - 1] += e
            key = (tuple(alpha), tuple(beta))
        else:
            cmask = amask = 0
            seen_annihilator = False
            for f in factors:
                m = _FACTOR_RE.match(f)
                if not m or m.group(3):
                    raise ValidationError(f"cannot parse fermionic factor {f!r}")
                is_c = m.group(1) is not None
                k = int(m.group(2))
                bit = 1 << (k - 1)
                if is_c:
                    if seen_annihilator or cmask & bit:
                        raise ValidationError("term is not in canonical form")
                    cmask |= bit
                else:
                    if amask & bit:
                        raise ValidationError("repeated fermionic factor")
                    seen_annihilator = True
                    amask |= bit
            key = (cmask, amask)
        terms[key] = terms.get(key, 0j) + coeff
    return poly(statistics, modes, terms, hbar)
