import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtoolkit.errors import ValidationError
from qtoolkit.grassmann import (
    GrassmannElement,
    berezin_integral,
    compose_even,
    cos_element,
    d_operator,
    delta_operator,
    element,
    exp_element,
    format_element,
    gaussian_integral,
    gaussian_integral_series,
    generator,
    left_derivative,
    linear_change_of_variables,
    mixed,
    multiply,
    parse_expression,
    pfaffian,
    scalar,
    sin_element,
)


def eps(n, *indices):
    out = scalar(n, 1.0)
    for i in indices:
        out = multiply(out, generator(n, i))
    return out


def rand_element(rng, n, nterms=4, odd=None):
    terms = {}
    for _ in range(nterms):
        mask = int(rng.integers(0, 1 << n))
        if odd is True and mask.bit_count() % 2 == 0:
            continue
        if odd is False and mask.bit_count() % 2 == 1:
            continue
        terms[mask] = complex(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
    return GrassmannElement(n, terms)


class TestMultiplication:
    def test_product_of_binomials(self):
        # (e1+e2)(e2+e3)(e3+e4) = e1e2e3 + e1e2e4 + e1e3e4 + e2e3e4
        n = 4
        x = (generator(n, 1) + generator(n, 2)) \
            * (generator(n, 2) + generator(n, 3)) \
            * (generator(n, 3) + generator(n, 4))
        want = eps(n, 1, 2, 3) + eps(n, 1, 2, 4) + eps(n, 1, 3, 4) + eps(n, 2, 3, 4)
        assert x.terms == want.terms

    def test_anticommutation(self):
        n = 2
        assert multiply(generator(n, 1), generator(n, 2)).terms == {0b11: 1.0 + 0j}
        assert multiply(generator(n, 2), generator(n, 1)).terms == {0b11: -1.0 + 0j}

    def test_square_vanishes(self):
        g = generator(3, 2)
        assert multiply(g, g).is_zero()

    def test_unit_law(self):
        rng = np.random.default_rng(0)
        x = rand_element(rng, 5)
        one = scalar(5, 1.0)
        assert multiply(x, one).terms == x.terms
        assert multiply(one, x).terms == x.terms

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_odd_elements_anticommute(self, data):
        seed = data.draw(st.integers(min_value=0, max_value=2 ** 31))
        rng = np.random.default_rng(seed)
        n = 6
        x = rand_element(rng, n, odd=True)
        y = rand_element(rng, n, odd=True)
        lhs = multiply(x, y)
        rhs = multiply(y, x).scale(-1)
        assert lhs.terms == rhs.terms

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_even_elements_central(self, data):
        seed = data.draw(st.integers(min_value=0, max_value=2 ** 31))
        rng = np.random.default_rng(seed)
        n = 6
        x = rand_element(rng, n, odd=False)
        y = rand_element(rng, n)
        assert multiply(x, y).terms == multiply(y, x).terms

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_associativity(self, data):
        seed = data.draw(st.integers(min_value=0, max_value=2 ** 31))
        rng = np.random.default_rng(seed)
        n = 6
        x, y, z = (rand_element(rng, n) for _ in range(3))
        assert multiply(multiply(x, y), z).terms == multiply(x, multiply(y, z)).terms


class TestDerivatives:
    def test_single_transposition_sign(self):
        # d/de2 (e1 e2 e3) = -e1 e3
        got = left_derivative(2, eps(3, 1, 2, 3))
        assert got.terms == {0b101: -1.0 + 0j}

    def test_derivative_of_constant(self):
        assert left_derivative(1, scalar(3, 1.0)).is_zero()

    def test_derivatives_anticommute(self):
        rng = np.random.default_rng(5)
        x = rand_element(rng, 6, nterms=8)
        d12 = left_derivative(1, left_derivative(2, x))
        d21 = left_derivative(2, left_derivative(1, x))
        assert d12.terms == d21.scale(-1).terms
        assert left_derivative(3, left_derivative(3, x)).is_zero()

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_graded_leibniz(self, data):
        seed = data.draw(st.integers(min_value=0, max_value=2 ** 31))
        odd = data.draw(st.booleans())
        rng = np.random.default_rng(seed)
        n = 5
        w = rand_element(rng, n, odd=odd)
        rho = rand_element(rng, n)
        i = int(rng.integers(1, n + 1))
        lhs = left_derivative(i, multiply(w, rho))
        sign = -1 if odd else 1
        rhs = multiply(left_derivative(i, w), rho) \
            + multiply(w, left_derivative(i, rho)).scale(sign)
        assert lhs.terms == rhs.terms

    def test_integral_of_derivative_vanishes(self):
        rng = np.random.default_rng(9)
        x = rand_element(rng, 5, nterms=10)
        for i in range(1, 6):
            assert berezin_integral(left_derivative(i, x)) == 0

    def test_integration_by_parts(self):
        rng = np.random.default_rng(11)
        n = 5
        for odd in (True, False):
            w = rand_element(rng, n, odd=odd)
            rho = rand_element(rng, n)
            i = 3
            lhs = berezin_integral(multiply(left_derivative(i, w), rho))
            sign = -1 if odd else 1
            rhs = -sign * berezin_integral(multiply(w, left_derivative(i, rho)))
            assert lhs == rhs


class TestBerezinIntegral:
    def test_top_monomial(self):
        assert berezin_integral(eps(2, 1, 2)) == 1.0

    def test_submaximal_degree(self):
        assert berezin_integral(scalar(1, 1.0)) == 0

    def test_cyclic_product_integrates_to_zero(self):
        # (e1+e2)(e2+e3)(e3+e4)(e4+e1): the two top contributions cancel
        n = 4
        x = (generator(n, 1) + generator(n, 2)) \
            * (generator(n, 2) + generator(n, 3)) \
            * (generator(n, 3) + generator(n, 4)) \
            * (generator(n, 4) + generator(n, 1))
        assert berezin_integral(x) == 0


class TestCompose:
    def test_cos_of_quadratic(self):
        # cos(e1 e2 + e3 e4) = 1 - e1 e2 e3 e4
        n = 4
        omega = eps(n, 1, 2) + eps(n, 3, 4)
        got = cos_element(omega)
        assert got.terms == {0: 1.0 + 0j, 0b1111: -1.0 + 0j}

    def test_exp_zero(self):
        got = exp_element(GrassmannElement(4, {}))
        assert got.terms == {0: 1.0 + 0j}

    def test_exp_factorizes(self):
        n = 4
        l1, l2 = 0.75, -1.5
        omega = eps(n, 1, 2).scale(l1) + eps(n, 3, 4).scale(l2)
        got = exp_element(omega)
        want = multiply(scalar(n, 1.0) + eps(n, 1, 2).scale(l1),
                        scalar(n, 1.0) + eps(n, 3, 4).scale(l2))
        assert got.terms == pytest.approx(want.terms)

    def test_sin_cos_identity_nilpotent(self):
        n = 4
        omega = eps(n, 1, 2) + eps(n, 3, 4).scale(2.0)
        s, c = sin_element(omega), cos_element(omega)
        total = multiply(s, s) + multiply(c, c)
        assert total.terms == pytest.approx({0: 1.0 + 0j})

    def test_requires_even(self):
        with pytest.raises(ValidationError):
            exp_element(generator(2, 1))

    def test_insufficient_derivatives(self):
        omega = eps(4, 1, 2)
        with pytest.raises(ValidationError):
            compose_even([1.0], omega)

    def test_body_offset(self):
        # f(a + nu) with nonzero body a
        n = 2
        omega = scalar(n, 0.3) + eps(n, 1, 2).scale(0.5)
        got = exp_element(omega)
        assert got.terms[0] == pytest.approx(math.exp(0.3))
        assert got.terms[0b11] == pytest.approx(0.5 * math.exp(0.3))


class TestGaussianIntegral:
    def test_block_diagonal(self):
        lam1, lam2 = 2.0, -0.75
        a = np.zeros((4, 4))
        a[0, 1], a[1, 0] = lam1, -lam1
        a[2, 3], a[3, 2] = lam2, -lam2
        assert gaussian_integral(a) == pytest.approx(lam1 * lam2)

    def test_zero_matrix(self):
        assert gaussian_integral(np.zeros((2, 2))) == 0

    def test_odd_dimension_returns_zero(self):
        assert gaussian_integral(np.zeros((3, 3))) == 0

    def test_rejects_nonantisymmetric(self):
        with pytest.raises(ValidationError):
            gaussian_integral(np.eye(2))

    def test_pfaffian_squared_is_determinant(self):
        rng = np.random.default_rng(123)
        for _ in range(10):
            m = rng.normal(size=(6, 6))
            a = m - m.T
            pf = pfaffian(a)
            det = np.linalg.det(a)
            assert abs(pf ** 2 - det) <= 1e-12 * max(abs(det), 1.0)

    def test_matches_series_expansion(self):
        rng = np.random.default_rng(17)
        for n in (2, 4, 6, 8):
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            a = m - m.T
            direct = gaussian_integral(a)
            series = gaussian_integral_series(a)
            assert abs(direct - series) <= 1e-10 * max(abs(direct), 1.0)

    def test_transformation_law(self):
        rng = np.random.default_rng(29)
        m = rng.normal(size=(6, 6))
        a = m - m.T
        t = rng.normal(size=(6, 6))
        lhs = gaussian_integral(t.T @ a @ t)
        rhs = np.linalg.det(t) * gaussian_integral(a)
        assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1.0)


class TestChangeOfVariables:
    def test_identity(self):
        rng = np.random.default_rng(31)
        x = rand_element(rng, 4)
        got = linear_change_of_variables(np.eye(4), x)
        assert got.terms == x.terms

    def test_diagonal_scaling_of_top(self):
        a = np.diag([2.0, 1.0, 1.0])
        x = eps(3, 1, 2, 3)
        got = linear_change_of_variables(a, x)
        assert got.terms == {0b111: 2.0 + 0j}

    def test_top_coefficient_scales_by_det(self):
        rng = np.random.default_rng(37)
        t = rng.normal(size=(4, 4))
        x = eps(4, 1, 2, 3, 4)
        got = linear_change_of_variables(t, x)
        assert berezin_integral(got) == pytest.approx(np.linalg.det(t))

    def test_rejects_singular(self):
        with pytest.raises(ValidationError):
            linear_change_of_variables(np.zeros((2, 2)), scalar(2, 1.0))


class TestMixedDifferentials:
    def rand_mixed(self, rng, r, max_deg=3, nterms=6):
        terms = {}
        for _ in range(nterms):
            deg = tuple(int(x) for x in rng.integers(0, max_deg + 1, size=r))
            mask = int(rng.integers(0, 1 << r))
            terms[(deg, mask)] = complex(int(rng.integers(-3, 4)),
                                         int(rng.integers(-3, 4)))
        return mixed(r, r, terms)

    def test_d_squared_zero(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            x = self.rand_mixed(rng, 4)
            assert d_operator(d_operator(x)).is_zero()

    def test_delta_squared_zero(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            x = self.rand_mixed(rng, 4)
            assert delta_operator(delta_operator(x)).is_zero()

    def test_d_example(self):
        # d(x1) = xi1, d(x1 x2) = xi1 x2 + x1 xi2
        x1 = mixed(2, 2, {((1, 0), 0): 1.0})
        got = d_operator(x1)
        assert got.terms == {((0, 0), 0b01): 1.0 + 0j}
        x1x2 = mixed(2, 2, {((1, 1), 0): 1.0})
        got = d_operator(x1x2)
        assert got.terms == {((0, 1), 0b01): 1.0 + 0j, ((1, 0), 0b10): 1.0 + 0j}

    def test_delta_example(self):
        # Delta(x1 xi1) = 1
        x = mixed(1, 1, {((1,), 0b1): 1.0})
        assert delta_operator(x).terms == {((0,), 0): 1.0 + 0j}


class TestExpressionLanguage:
    def test_cos_expression(self):
        got = parse_expression("cos(e1 e2 + e3 e4)")
        assert format_element(got) == "1 - e1 e2 e3 e4"

    def test_problem_product(self):
        got = parse_expression("(e1+e2)(e2+e3)(e3+e4)")
        assert format_element(got) == "e1 e2 e3 + e1 e2 e4 + e1 e3 e4 + e2 e3 e4"

    def test_numbers_and_powers(self):
        got = parse_expression("2 e1 e2 + (e1 e2)^2", n=4)
        assert got.terms == {0b0011: 2.0 + 0j}

    def test_imaginary_literal(self):
        got = parse_expression("1i e1 e2", n=2)
        assert got.terms == {0b11: 1j}

    def test_round_trip_through_format(self):
        expr = "exp(e1 e2) - 1"
        got = parse_expression(expr, n=2)
        assert format_element(got) == "e1 e2"

    def test_unknown_function_rejected(self):
        with pytest.raises(ValidationError):
            parse_expression("tan(e1 e2)")

    def test_unbalanced_paren_rejected(self):
        with pytest.raises(ValidationError):
            parse_expression("cos(e1 e2")
