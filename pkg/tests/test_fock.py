import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtoolkit.errors import ValidationError
from qtoolkit.fock import (
    DensityMatrix,
    FockSpec,
    annihilation_matrix,
    car_defect,
    ccr_defect,
    creation_matrix,
    norm_divergence_demo,
    number_operator,
    poisson_eigen_defect,
    poisson_overlap,
    poisson_vector,
    quadratic_hamiltonian,
    quadratic_hamiltonian_diagonal,
)


class TestBasisOrder:
    def test_colexicographic_mode_one_fastest(self):
        spec = FockSpec.bose([2, 1])
        occ = [tuple(row) for row in spec.occupations]
        assert occ == [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)]

    def test_index_round_trip(self):
        spec = FockSpec.bose([3, 2, 4])
        for i in range(spec.dim):
            assert spec.index_of(spec.occupations[i]) == i

    def test_dimensions(self):
        assert FockSpec.bose([2, 3]).dim == 12
        assert FockSpec.fermi(5).dim == 32


class TestLadders:
    def test_single_mode_creation_matrix_frozen(self):
        # c = 2: a^+ = [[0,0,0],[1,0,0],[0,sqrt2,0]]
        spec = FockSpec.bose([2])
        a_dag = creation_matrix(spec, 1)
        expected = np.array(
            [[0, 0, 0], [1, 0, 0], [0, math.sqrt(2), 0]], dtype=complex
        )
        assert np.array_equal(a_dag, expected)

    def test_hbar_scaling(self):
        spec = FockSpec.bose([2], hbar=0.25)
        a_dag = creation_matrix(spec, 1)
        assert a_dag[1, 0] == 0.5

    def test_fermionic_creation_and_pauli(self):
        spec = FockSpec.fermi(1)
        a_dag = creation_matrix(spec, 1)
        assert np.array_equal(a_dag, np.array([[0, 0], [1, 0]], dtype=complex))
        assert np.array_equal(a_dag @ a_dag, np.zeros((2, 2)))

    def test_jordan_wigner_sign(self):
        spec = FockSpec.fermi(2)
        a2_dag = creation_matrix(spec, 2)
        # |n1=1, n2=0> -> sign (-1)^{n1} = -1
        i_src = spec.index_of((1, 0))
        i_dst = spec.index_of((1, 1))
        assert a2_dag[i_dst, i_src] == -1.0

    def test_vacuum_annihilated(self):
        for spec in (FockSpec.bose([3, 2]), FockSpec.fermi(3)):
            vac = np.zeros(spec.dim)
            vac[0] = 1.0
            for k in range(1, spec.modes + 1):
                assert np.all(annihilation_matrix(spec, k) @ vac == 0)

    def test_mode_out_of_range(self):
        spec = FockSpec.bose([2])
        with pytest.raises(ValidationError):
            creation_matrix(spec, 2)


class TestCommutationRelations:
    def test_ccr_safe_and_top_defect(self):
        spec = FockSpec.bose([5])
        d = ccr_defect(spec)
        # sqrt(n)^2 re-rounds, so "exact" means one ulp here, far below 1e-12
        assert d.safe <= 1e-12
        # unrestricted defect localizes at the cutoff with value hbar*(c+1)
        assert d.unrestricted == pytest.approx(6.0, abs=1e-12)

    def test_ccr_hbar(self):
        spec = FockSpec.bose([4, 3], hbar=0.5)
        d = ccr_defect(spec)
        assert d.safe <= 1e-12
        assert d.unrestricted == pytest.approx(0.5 * 5, abs=1e-12)

    def test_car_exact_everywhere(self):
        d = car_defect(FockSpec.fermi(2))
        assert d.safe == 0.0
        assert d.unrestricted == 0.0

    @given(
        cutoffs=st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=3)
    )
    @settings(max_examples=25, deadline=None)
    def test_ccr_safe_subspace_property(self, cutoffs):
        d = ccr_defect(FockSpec.bose(cutoffs))
        assert d.safe <= 1e-12

    @given(modes=st.integers(min_value=1, max_value=4))
    @settings(max_examples=10, deadline=None)
    def test_car_property(self, modes):
        d = car_defect(FockSpec.fermi(modes))
        assert d.unrestricted == 0.0


class TestNumberAndHamiltonian:
    def test_number_operator_integer_spectrum(self):
        spec = FockSpec.bose([3, 2], hbar=0.7)
        n_direct = number_operator(spec)
        n_ladder = sum(
            creation_matrix(spec, k) @ annihilation_matrix(spec, k)
            for k in range(1, spec.modes + 1)
        ) / spec.hbar
        assert np.allclose(n_ladder, n_direct, atol=1e-13)

    def test_occupation_eigenvalue_example(self):
        # eps = (1, 3), |n1=2, n2=1> has energy 5
        spec = FockSpec.bose([3, 2])
        h = quadratic_hamiltonian_diagonal(spec, [1.0, 3.0])
        i = spec.index_of((2, 1))
        assert h[i, i] == 5.0

    def test_ladder_route_matches_diagonal_route(self):
        spec = FockSpec.bose([3, 2, 2])
        eps = [1.0, 3.0, 2.0]
        h1 = quadratic_hamiltonian(spec, eps)
        h2 = quadratic_hamiltonian_diagonal(spec, eps)
        assert np.allclose(h1, h2, atol=1e-12)

    def test_fermi_two_mode_spectrum(self):
        spec = FockSpec.fermi(2)
        h = quadratic_hamiltonian_diagonal(spec, [1.0, 2.0])
        assert sorted(np.diag(h).real) == [0.0, 1.0, 2.0, 3.0]

    def test_creation_raises_number_by_one(self):
        spec = FockSpec.bose([4, 4])
        n_op = number_operator(spec)
        for k in (1, 2):
            a_dag = creation_matrix(spec, k)
            comm = n_op @ a_dag - a_dag @ n_op
            safe = spec.safe_indices(margin=1)
            assert np.allclose(
                comm[:, safe], a_dag[:, safe], atol=1e-13
            )


class TestPoissonVectors:
    def test_zero_drift_gives_vacuum(self):
        spec = FockSpec.bose([4])
        theta = poisson_vector(spec, [0.0])
        vac = np.zeros(spec.dim, dtype=complex)
        vac[0] = 1.0
        assert np.array_equal(theta.amplitudes, vac)

    def test_overlap_matches_exponential(self):
        spec = FockSpec.bose([40])
        for lam, mu in [(2.0, 2.0), (1.5 + 0.5j, -0.7 + 1.2j), (2j, -2j)]:
            t1 = poisson_vector(spec, [lam])
            t2 = poisson_vector(spec, [mu])
            got = t1.inner(t2)
            want = poisson_overlap(spec, [lam], [mu])
            assert abs(got - want) <= 1e-12 * abs(want)

    def test_overlap_hbar(self):
        spec = FockSpec.bose([60], hbar=0.5)
        t1 = poisson_vector(spec, [0.8])
        t2 = poisson_vector(spec, [0.5 + 0.3j])
        want = np.exp(0.8 * np.conj(0.5 + 0.3j) / 0.5)
        assert abs(t1.inner(t2) - want) <= 1e-12 * abs(want)

    def test_eigen_defect_matches_analytic_tail(self):
        spec = FockSpec.bose([12])
        lam = 1.3 - 0.4j
        rep = poisson_eigen_defect(spec, [lam], 1)
        c = 12
        analytic = abs(lam) ** (c + 1) / math.sqrt(math.factorial(c))
        assert rep.tail_bound == pytest.approx(analytic, rel=1e-13)
        assert rep.defect <= rep.tail_bound * (1 + 1e-10)
        assert rep.defect == pytest.approx(rep.tail_bound, rel=1e-9)

    def test_eigen_defect_multimode(self):
        spec = FockSpec.bose([6, 8])
        f = [0.9, 1.1j]
        for k in (1, 2):
            rep = poisson_eigen_defect(spec, f, k)
            assert rep.defect <= rep.tail_bound * (1 + 1e-10)

    def test_eigenvector_property_on_safe_subspace(self):
        spec = FockSpec.bose([10])
        lam = 0.6 + 0.2j
        theta = poisson_vector(spec, [lam])
        a = annihilation_matrix(spec, 1)
        resid = a @ theta.amplitudes - lam * theta.amplitudes
        # the residual is supported on the top level up to rounding
        assert np.all(np.abs(resid[:-1]) <= 1e-14)
        assert abs(resid[-1]) > 0

    def test_fermionic_rejected(self):
        with pytest.raises(ValidationError):
            poisson_vector(FockSpec.fermi(2), [0.1, 0.2])

    def test_norm_divergence_rows(self):
        f = [1.0] * 8
        rows = norm_divergence_demo(f, [1, 2, 4, 8])
        assert [r["norm_sq"] for r in rows] == pytest.approx(
            [math.e, math.e ** 2, math.e ** 4, math.e ** 8]
        )

    def test_norm_divergence_zeta_limit(self):
        f = [1.0 / k for k in range(1, 4001)]
        rows = norm_divergence_demo(f, [4000])
        assert rows[0]["norm_sq"] == pytest.approx(
            math.exp(math.pi ** 2 / 6), rel=1e-3
        )

    def test_truncated_norm_matches_partial_product(self):
        spec = FockSpec.bose([30, 30])
        f = [0.7, 0.4]
        theta = poisson_vector(spec, f)
        assert theta.norm() ** 2 == pytest.approx(
            math.exp(sum(abs(x) ** 2 for x in f)), rel=1e-12
        )


class TestDensityMatrixValidation:
    def test_accepts_valid(self):
        k = DensityMatrix(np.diag([0.25, 0.75]).astype(complex))
        assert k.dim == 2

    def test_rejects_nonhermitian(self):
        m = np.array([[0.5, 0.2], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValidationError):
            DensityMatrix(m)

    def test_rejects_negative_eigenvalue(self):
        m = np.diag([1.2, -0.2]).astype(complex)
        with pytest.raises(ValidationError):
            DensityMatrix(m)

    def test_rejects_bad_trace(self):
        m = np.diag([0.6, 0.6]).astype(complex)
        with pytest.raises(ValidationError):
            DensityMatrix(m)
