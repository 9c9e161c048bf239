"""Exact Grassmann algebra, Berezin calculus, and Gaussian integrals.

Elements of Lambda_n are stored as maps from generator bitmasks to complex
coefficients; monomials are written in canonical increasing-index order and
products carry the parity sign of the merge.  The Gaussian integral of
exp(1/2 sum a_ij e_i e_j) is the Pfaffian of a, computed by recursive
first-row expansion (the polynomial branch of det^{1/2}: block-diagonal
blocks lambda_1..lambda_k integrate to lambda_1*...*lambda_k).

A small mixed algebra (commuting variables x_i tensor Grassmann xi_i) backs
the differentials d = sum xi_i d/dx_i and Delta = sum d/dx_i d/dxi_i, both
squaring to zero exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "GrassmannElement",
    "element",
    "scalar",
    "generator",
    "multiply",
    "left_derivative",
    "berezin_integral",
    "compose_even",
    "exp_element",
    "cos_element",
    "sin_element",
    "gaussian_integral",
    "gaussian_integral_series",
    "pfaffian",
    "linear_change_of_variables",
    "MixedElement",
    "mixed",
    "d_operator",
    "delta_operator",
    "parse_expression",
    "format_element",
]


def _merge_sign(mask_a: int, mask_b: int) -> int:
    """Parity sign for concatenating canonical monomials a then b.

    Counts crossings: each generator of b must pass the generators of a that
    have larger index.
    """
    sign = 1
    b = mask_b
    while b:
        low = b & -b
        # generators of a strictly above this one
        above = mask_a & ~(low | (low - 1))
        if above.bit_count() & 1:
            sign = -sign
        b ^= low
    return sign


@dataclass(frozen=True)
class GrassmannElement:
    n: int
    terms: dict

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValidationError("generator count must be >= 0")
        top = 1 << self.n
        clean = {}
        for mask, coeff in self.terms.items():
            mask = int(mask)
            coeff = complex(coeff)
            if not 0 <= mask < top:
                raise ValidationError(f"mask {mask} outside Lambda_{self.n}")
            if coeff != 0:
                clean[mask] = coeff
        object.__setattr__(self, "terms", clean)

    def _compatible(self, other: "GrassmannElement") -> None:
        if self.n != other.n:
            raise ValidationError("elements live in different algebras")

    def __add__(self, other: "GrassmannElement") -> "GrassmannElement":
        self._compatible(other)
        terms = dict(self.terms)
        for mask, coeff in other.terms.items():
            terms[mask] = terms.get(mask, 0j) + coeff
        return GrassmannElement(self.n, terms)

    def __sub__(self, other: "GrassmannElement") -> "GrassmannElement":
        return self + other.scale(-1)

    def scale(self, factor: complex) -> "GrassmannElement":
        return GrassmannElement(self.n, {m: factor * c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, GrassmannElement):
            return multiply(self, other)
        return self.scale(other)

    __rmul__ = scale

    def body(self) -> complex:
        """Scalar part (coefficient of the empty monomial)."""
        return self.terms.get(0, 0j)

    def is_even(self) -> bool:
        return all(m.bit_count() % 2 == 0 for m in self.terms)

    def is_odd(self) -> bool:
        return all(m.bit_count() % 2 == 1 for m in self.terms)

    def is_zero(self) -> bool:
        return not self.terms


def element(n: int, terms: Mapping) -> GrassmannElement:
    return GrassmannElement(n, dict(terms))


def scalar(n: int, value: complex) -> GrassmannElement:
    return GrassmannElement(n, {0: complex(value)})


def generator(n: int, i: int) -> GrassmannElement:
    if not 1 <= i <= n:
        raise ValidationError(f"generator index {i} out of range 1..{n}")
    return GrassmannElement(n, {1 << (i - 1): 1.0 + 0j})


def multiply(x: GrassmannElement, y: GrassmannElement) -> GrassmannElement:
    x._compatible(y)
    out: dict = {}
    for ma, ca in x.terms.items():
        for mb, cb in y.terms.items():
            if ma & mb:
                continue
            sign = _merge_sign(ma, mb)
            key = ma | mb
            out[key] = out.get(key, 0j) + sign * ca * cb
    return GrassmannElement(x.n, out)


def left_derivative(i: int, x: GrassmannElement) -> GrassmannElement:
    """d/d e_i acting from the left: move e_i to the front, then strip it."""
    if not 1 <= i <= x.n:
        raise ValidationError(f"generator index {i} out of range 1..{x.n}")
    bit = 1 << (i - 1)
    out: dict = {}
    for mask, coeff in x.terms.items():
        if not mask & bit:
            continue
        below = mask & (bit - 1)
        sign = -1 if below.bit_count() & 1 else 1
        out[mask ^ bit] = out.get(mask ^ bit, 0j) + sign * coeff
    return GrassmannElement(x.n, out)


def berezin_integral(x: GrassmannElement) -> complex:
    """Coefficient of the top monomial e_1...e_n; lower degrees integrate to 0."""
    top = (1 << x.n) - 1
    return x.terms.get(top, 0j)


def compose_even(derivatives: Sequence[complex], omega: GrassmannElement
                 ) -> GrassmannElement:
    """f(omega) for even omega via the finite Taylor series around the body.

    `derivatives[l]` must hold f^(l)(a) at the body a = omega.body(); the
    nilpotent part nu = omega - a satisfies nu^(floor(n/2)+1) = 0, so
    derivatives up to order floor(n/2) suffice and the series is exact.
    """
    if not omega.is_even():
        raise ValidationError("compose_even requires an even element")
    need = omega.n // 2
    if len(derivatives) < need + 1:
        raise ValidationError(
            f"need {need + 1} derivative values (orders 0..{need}), "
            f"got {len(derivatives)}")
    a = omega.body()
    nu = omega - scalar(omega.n, a)
    out = scalar(omega.n, derivatives[0])
    power = scalar(omega.n, 1.0)
    for l in range(1, need + 1):
        power = multiply(power, nu)
        if power.is_zero():
            break
        out = out + power.scale(derivatives[l] / math.factorial(l))
    return out


def exp_element(omega: GrassmannElement) -> GrassmannElement:
    a = omega.body()
    e = np.exp(complex(a))
    return compose_even([e] * (omega.n // 2 + 1), omega)


def cos_element(omega: GrassmannElement) -> GrassmannElement:
    a = complex(omega.body())
    cycle = [np.cos(a), -np.sin(a), -np.cos(a), np.sin(a)]
    derivs = [cycle[l % 4] for l in range(omega.n // 2 + 1)]
    return compose_even(derivs, omega)


def sin_element(omega: GrassmannElement) -> GrassmannElement:
    a = complex(omega.body())
    cycle = [np.sin(a), np.cos(a), -np.sin(a), -np.cos(a)]
    derivs = [cycle[l % 4] for l in range(omega.n // 2 + 1)]
    return compose_even(derivs, omega)


# ---------------------------------------------------------------------------
# Gaussian integrals / Pfaffian


def _check_antisymmetric(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(float(np.abs(a).max()), 1e-300)
    if float(np.abs(a + a.T).max()) > 1e-12 * scale:
        raise ValidationError("matrix is not antisymmetric")
    return a


def pfaffian(a: np.ndarray) -> complex:
    """Pfaffian by recursive first-row expansion (exact polynomial branch)."""
    a = _check_antisymmetric(a)
    n = a.shape[0]
    if n % 2 == 1:
        return 0j
    if n == 0:
        return 1.0 + 0j

    entries = a

    @lru_cache(maxsize=None)
    def pf(indices: tuple) -> complex:
        if not indices:
            return 1.0 + 0j
        i0 = indices[0]
        rest = indices[1:]
        total = 0j
        for pos, j in enumerate(rest):
            sub = rest[:pos] + rest[pos + 1:]
            sign = -1 if pos % 2 else 1
            total += sign * entries[i0, j] * pf(sub)
        return total

    return complex(pf(tuple(range(n))))


def gaussian_integral(a: np.ndarray) -> complex:
    """int exp(1/2 sum_ij a_ij e_i e_j) d^n e = Pf(a); 0 for odd n."""
    return pfaffian(a)


def gaussian_integral_series(a: np.ndarray) -> complex:
    """Independent route: expand exp of the quadratic element and take the
    Berezin integral.  Exponential cost; intended for n <= 10 cross-checks."""
    a = _check_antisymmetric(a)
    n = a.shape[0]
    omega = GrassmannElement(n, {
        (1 << i) | (1 << j): a[i, j]
        for i in range(n) for j in range(i + 1, n)
        if a[i, j] != 0
    })
    return berezin_integral(exp_element(omega))


def linear_change_of_variables(a_matrix: np.ndarray, x: GrassmannElement
                               ) -> GrassmannElement:
    """Substitute e_i -> sum_j A[i,j] e_j.

    The top coefficient picks up det(A); comparing Berezin integrals between
    old and new variables therefore carries the factor det(A)^{-1}.
    """
    a_matrix = np.asarray(a_matrix, dtype=complex)
    n = x.n
    if a_matrix.shape != (n, n):
        raise ValidationError("matrix size must match generator count")
    if abs(np.linalg.det(a_matrix)) < 1e-300:
        raise ValidationError("change of variables must be invertible")
    images = [
        GrassmannElement(n, {1 << j: a_matrix[i, j]
                             for j in range(n) if a_matrix[i, j] != 0})
        for i in range(n)
    ]
    out = GrassmannElement(n, {})
    for mask, coeff in x.terms.items():
        term = scalar(n, coeff)
        for i in range(n):
            if mask >> i & 1:
                term = multiply(term, images[i])
        out = out + term
    return out


# ---------------------------------------------------------------------------
# mixed commuting/anticommuting algebra


@dataclass(frozen=True)
class MixedElement:
    """Polynomial in commuting x_1..x_r tensor Grassmann xi_1..xi_n.

    Terms map (x-multidegree tuple, xi-bitmask) to coefficients; the xi part
    follows the same canonical order and sign rules as GrassmannElement.
    """

    r: int
    n: int
    terms: dict

    def __post_init__(self) -> None:
        top = 1 << self.n
        clean = {}
        for (deg, mask), coeff in self.terms.items():
            deg = tuple(int(d) for d in deg)
            mask = int(mask)
            coeff = complex(coeff)
            if len(deg) != self.r or any(d < 0 for d in deg):
                raise ValidationError(f"bad x-degree {deg!r}")
            if not 0 <= mask < top:
                raise ValidationError(f"bad xi-mask {mask!r}")
            if coeff != 0:
                clean[(deg, mask)] = coeff
        object.__setattr__(self, "terms", clean)

    def __add__(self, other: "MixedElement") -> "MixedElement":
        if (self.r, self.n) != (other.r, other.n):
            raise ValidationError("mixed elements live in different algebras")
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            terms[key] = terms.get(key, 0j) + coeff
        return MixedElement(self.r, self.n, terms)

    def scale(self, factor: complex) -> "MixedElement":
        return MixedElement(self.r, self.n,
                            {k: factor * c for k, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms


def mixed(r: int, n: int, terms: Mapping) -> MixedElement:
    return MixedElement(r, n, dict(terms))


def _partial_x(i: int, x: MixedElement) -> MixedElement:
    out: dict = {}
    for (deg, mask), coeff in x.terms.items():
        if deg[i] == 0:
            continue
        new_deg = deg[:i] + (deg[i] - 1,) + deg[i + 1:]
        key = (new_deg, mask)
        out[key] = out.get(key, 0j) + coeff * deg[i]
    return MixedElement(x.r, x.n, out)


def _xi_left_multiply(i: int, x: MixedElement) -> MixedElement:
    bit = 1 << i
    out: dict = {}
    for (deg, mask), coeff in x.terms.items():
        if mask & bit:
            continue
        below = mask & (bit - 1)
        sign = -1 if below.bit_count() & 1 else 1
        key = (deg, mask | bit)
        out[key] = out.get(key, 0j) + sign * coeff
    return MixedElement(x.r, x.n, out)


def _xi_left_derivative(i: int, x: MixedElement) -> MixedElement:
    bit = 1 << i
    out: dict = {}
    for (deg, mask), coeff in x.terms.items():
        if not mask & bit:
            continue
        below = mask & (bit - 1)
        sign = -1 if below.bit_count() & 1 else 1
        key = (deg, mask ^ bit)
        out[key] = out.get(key, 0j) + sign * coeff
    return MixedElement(x.r, x.n, out)


def d_operator(x: MixedElement) -> MixedElement:
    """d = sum_i xi_i d/dx_i (requires r == n pairing); d^2 = 0."""
    if x.r != x.n:
        raise ValidationError("d pairs x_i with xi_i; need r == n")
    out = MixedElement(x.r, x.n, {})
    for i in range(x.r):
        out = out + _xi_left_multiply(i, _partial_x(i, x))
    return out


def delta_operator(x: MixedElement) -> MixedElement:
    """Delta = sum_i d/dx_i d/dxi_i; Delta^2 = 0."""
    if x.r != x.n:
        raise ValidationError("Delta pairs x_i with xi_i; need r == n")
    out = MixedElement(x.r, x.n, {})
    for i in range(x.r):
        out = out + _partial_x(i, _xi_left_derivative(i, x))
    return out


# ---------------------------------------------------------------------------
# expression language (CLI-facing)
#
# Grammar:
#   expr   := term (('+'|'-') term)*
#   term   := factor (factor | '*' factor)*         juxtaposition multiplies
#   factor := NUMBER | 'e'INT | FUNC '(' expr ')' | '(' expr ')'
#             | '-' factor | factor '^' INT
#   FUNC   := cos | sin | exp
# Numbers may carry a trailing 'i' for imaginary literals.


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        if self.pos >= len(self.text):
            return ""
        return self.text[self.pos]

    def take_while(self, pred: Callable[[str], bool]) -> str:
        start = self.pos
        while self.pos < len(self.text) and pred(self.text[self.pos]):
            self.pos += 1
        return self.text[start:self.pos]


def parse_expression(text: str, n: int | None = None) -> GrassmannElement:
    """Parse expressions like "cos(e1 e2 + e3 e4)" into Lambda_n.

    When n is omitted it is inferred as the largest generator index used.
    """
    indices: list[int] = []
    probe = _Tokenizer(text)
    while True:
        ch = probe.peek()
        if not ch:
            break
        if ch == "e" and probe.pos + 1 < len(text) and text[probe.pos + 1].isdigit():
            probe.pos += 1
            indices.append(int(probe.take_while(str.isdigit)))
        else:
            probe.pos += 1
    size = n if n is not None else (max(indices) if indices else 0)
    if indices and max(indices) > size:
        raise ValidationError(
            f"generator e{max(indices)} exceeds algebra size {size}")

    tok = _Tokenizer(text)

    def parse_expr() -> GrassmannElement:
        value = parse_term()
        while True:
            ch = tok.peek()
            if ch == "+":
                tok.pos += 1
                value = value + parse_term()
            elif ch == "-":
                tok.pos += 1
                value = value - parse_term()
            else:
                return value

    def parse_term() -> GrassmannElement:
        value = parse_factor()
        while True:
            ch = tok.peek()
            if ch == "*":
                tok.pos += 1
                value = multiply(value, parse_factor())
            elif ch and (ch.isalnum() or ch == "(" or ch == "."):
                value = multiply(value, parse_factor())
            else:
                return value

    def parse_factor() -> GrassmannElement:
        value = parse_atom()
        while tok.peek() == "^":
            tok.pos += 1
            digits = tok.take_while(str.isdigit)
            if not digits:
                raise ValidationError("missing exponent after '^'")
            power = scalar(size, 1.0)
            for _ in range(int(digits)):
                power = multiply(power, value)
            value = power
        return value

    def parse_atom() -> GrassmannElement:
        ch = tok.peek()
        if ch == "-":
            tok.pos += 1
            return parse_atom().scale(-1)
        if ch == "(":
            tok.pos += 1
            inner = parse_expr()
            if tok.peek() != ")":
                raise ValidationError("unbalanced parenthesis")
            tok.pos += 1
            return inner
        if ch.isdigit() or ch == ".":
            number = tok.take_while(lambda c: c.isdigit() or c == ".")
            imag = False
            if tok.peek() == "i":
                tok.pos += 1
                imag = True
            val = float(number)
            return scalar(size, 1j * val if imag else val)
        if ch == "e" and tok.pos + 1 < len(tok.text) and tok.text[tok.pos + 1].isdigit():
            tok.pos += 1
            idx = int(tok.take_while(str.isdigit))
            return generator(size, idx)
        name = tok.take_while(str.isalpha)
        if name in ("cos", "sin", "exp"):
            if tok.peek() != "(":
                raise ValidationError(f"{name} needs parentheses")
            tok.pos += 1
            arg = parse_expr()
            if tok.peek() != ")":
                raise ValidationError("unbalanced parenthesis")
            tok.pos += 1
            fn = {"cos": cos_element, "sin": sin_element, "exp": exp_element}[name]
            return fn(arg)
        raise ValidationError(f"unexpected input at position {tok.pos}: {text[tok.pos:]!r}")

    result = parse_expr()
    if tok.peek():
        raise ValidationError(f"trailing input: {text[tok.pos:]!r}")
    return result


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def format_element(x: GrassmannElement) -> str:
    """Canonical rendering, e.g. `1 - e1 e2 e3 e4`."""
    if not x.terms:
        return "0"
    parts: list[str] = []
    for mask in sorted(x.terms, key=lambda m: (m.bit_count(), m)):
        coeff = x.terms[mask]
        mono = " ".join(f"e{i + 1}" for i in range(x.n) if mask >> i & 1)
        if coeff.imag == 0:
            value = coeff.real
            sign = "-" if value < 0 else "+"
            mag = abs(value)
            body = _format_number(mag)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{body} {mono}"
        else:
            sign = "+"
            im_sign = "+" if coeff.imag >= 0 else "-"
            body = (f"({_format_number(coeff.real)}{im_sign}"
                    f"{_format_number(abs(coeff.imag))}i)")
            if mono:
                body = f"{body} {mono}"
        if not parts:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)
