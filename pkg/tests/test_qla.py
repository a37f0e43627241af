import numpy as np
import pytest

from helpers import qubits_layout, random_density, random_hermitian
from spinbattery.errors import DimensionLimitError, LayoutError
from spinbattery.model import SIGMA_X, SIGMA_Z
from spinbattery.qla import (
    Operator,
    SystemLayout,
    eig_hermitian,
    embed_site_operator,
    func_of_hermitian,
    partial_trace,
    site_product,
    tensor_product,
    trace_product,
)


def op(names, entries):
    return Operator(qubits_layout(*names), entries)


class TestTensorProduct:
    def test_identity_times_identity(self):
        a = op("a", np.eye(2))
        b = op("b", np.eye(2))
        assert np.array_equal(tensor_product(a, b).entries, np.eye(4))

    def test_sigma_z_pair_diagonal(self):
        zz = tensor_product(op("a", SIGMA_Z), op("b", SIGMA_Z))
        assert np.allclose(np.diag(zz.entries), [1, -1, -1, 1])

    def test_index_formula_oracle(self, rng):
        # entry (i*3 + k, j*3 + l) must equal A[i, j] * B[k, l]
        a_mat = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        b_mat = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        out = tensor_product(
            Operator(SystemLayout.of(("a", 2)), a_mat),
            Operator(SystemLayout.of(("b", 3)), b_mat),
        ).entries
        for i in range(2):
            for j in range(2):
                for k in range(3):
                    for l in range(3):
                        assert out[i * 3 + k, j * 3 + l] == pytest.approx(a_mat[i, j] * b_mat[k, l])

    def test_trace_multiplies(self, rng):
        a = op("a", random_hermitian(rng, 2))
        b = op("b", random_hermitian(rng, 2))
        assert tensor_product(a, b).trace() == pytest.approx(a.trace() * b.trace())

    def test_associative_up_to_flattening(self, rng):
        a, b, c = (op(n, random_hermitian(rng, 2)) for n in "abc")
        left = tensor_product(tensor_product(a, b), c)
        right = tensor_product(a, tensor_product(b, c))
        assert np.allclose(left.entries, right.entries)
        assert left.layout == right.layout

    def test_dimension_limit(self):
        big = Operator(SystemLayout.of(("x", 2**12)), np.eye(2**12))
        other = Operator(SystemLayout.of(("y", 4)), np.eye(4))
        with pytest.raises(DimensionLimitError):
            tensor_product(big, other)


class TestEmbed:
    def test_sigma_x_at_memory(self):
        layout = qubits_layout("b", "c1", "m")
        embedded = embed_site_operator(SIGMA_X, layout, "m")
        assert np.allclose(embedded.entries, np.kron(np.eye(4), SIGMA_X))

    def test_identity_anywhere(self):
        layout = qubits_layout("b", "c1", "c2")
        for site in layout.names:
            assert np.allclose(embed_site_operator(np.eye(2), layout, site).entries, np.eye(8))

    def test_two_site_pauli_string_traceless(self):
        layout = qubits_layout("b", "c1", "c2", "m")
        zz = np.kron(SIGMA_Z, SIGMA_Z)
        for pair in (("b", "c1"), ("c1", "c2"), ("c2", "m")):
            assert embed_site_operator(zz, layout, pair).trace() == pytest.approx(0.0)

    def test_unknown_site(self):
        with pytest.raises(LayoutError):
            embed_site_operator(SIGMA_X, qubits_layout("b", "c1"), "c9")

    def test_dim_mismatch(self):
        with pytest.raises(LayoutError):
            embed_site_operator(np.eye(3), qubits_layout("b", "c1"), "b")

    def test_site_product_matches_embeds(self, rng):
        layout = qubits_layout("b", "c1", "c2")
        direct = site_product(layout, {"b": SIGMA_X, "c2": SIGMA_Z})
        via_embed = embed_site_operator(SIGMA_X, layout, "b") @ embed_site_operator(
            SIGMA_Z, layout, "c2"
        )
        assert np.allclose(direct.entries, via_embed.entries)


class TestPartialTrace:
    def test_product_state_factorizes(self, rng):
        rho_a = random_density(rng, 2)
        rho_b = random_density(rng, 4)
        layout = SystemLayout.of(("a", 2), ("b", 4))
        rho = Operator(layout, np.kron(rho_a, rho_b))
        assert np.allclose(partial_trace(rho, "a").entries, rho_a, atol=1e-13)
        assert np.allclose(partial_trace(rho, "b").entries, rho_b, atol=1e-13)

    def test_bell_state_marginals(self):
        psi = np.zeros(4)
        psi[0] = psi[3] = 1 / np.sqrt(2)
        rho = op("ab", np.outer(psi, psi))
        for keep in "ab":
            assert np.allclose(partial_trace(rho, keep).entries, np.eye(2) / 2, atol=1e-14)

    def test_against_index_summation_oracle(self, rng):
        # reduced[(a,b),(a',b')] = sum_c rho[(a,b,c),(a',b',c)], written as loops
        rho = random_density(rng, 8)
        layout = qubits_layout("q0", "q1", "q2")
        got = partial_trace(Operator(layout, rho), ("q0", "q1")).entries
        expected = np.zeros((4, 4), dtype=complex)
        for a in range(2):
            for b in range(2):
                for ap in range(2):
                    for bp in range(2):
                        acc = 0.0
                        for c in range(2):
                            acc += rho[(a * 2 + b) * 2 + c, (ap * 2 + bp) * 2 + c]
                        expected[a * 2 + b, ap * 2 + bp] = acc
        assert np.abs(got - expected).max() < 1e-12

    def test_keep_all_is_identity(self, rng):
        layout = qubits_layout("x", "y")
        rho = Operator(layout, random_density(rng, 4))
        assert np.array_equal(partial_trace(rho, ("x", "y")).entries, rho.entries)

    def test_trace_preserved(self, rng):
        layout = qubits_layout("x", "y", "z")
        rho = Operator(layout, random_density(rng, 8))
        assert partial_trace(rho, "y").trace() == pytest.approx(1.0, abs=1e-12)

    def test_composes(self, rng):
        layout = qubits_layout("b", "c", "m")
        rho = Operator(layout, random_density(rng, 8))
        two_step = partial_trace(partial_trace(rho, ("b", "m")), "b")
        one_step = partial_trace(rho, "b")
        assert np.abs(two_step.entries - one_step.entries).max() < 1e-12

    def test_empty_keep_rejected(self, rng):
        rho = Operator(qubits_layout("x", "y"), random_density(rng, 4))
        with pytest.raises(LayoutError):
            partial_trace(rho, ())

    def test_unknown_keep_rejected(self, rng):
        rho = Operator(qubits_layout("x", "y"), random_density(rng, 4))
        with pytest.raises(LayoutError):
            partial_trace(rho, "nope")


def _characteristic_polynomial(a: np.ndarray) -> np.ndarray:
    """Faddeev-LeVerrier coefficients of det(xI - A); no eigensolver involved."""
    n = a.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


class TestEigHermitian:
    def test_sigma_z(self):
        spec = eig_hermitian(op("q", SIGMA_Z))
        assert np.allclose(spec.eigenvalues, [-1, 1])

    def test_sigma_x_eigenvectors(self):
        spec = eig_hermitian(op("q", SIGMA_X))
        assert np.allclose(spec.eigenvalues, [-1, 1])
        for k, val in enumerate(spec.eigenvalues):
            v = spec.eigenvectors[:, k]
            assert np.abs(SIGMA_X @ v - val * v).max() < 1e-12

    def test_companion_matrix_oracle(self, rng):
        h = random_hermitian(rng, 8)
        spec = eig_hermitian(Operator(SystemLayout.of(("x", 8)), h))
        roots = np.sort(np.roots(_characteristic_polynomial(h)).real)
        assert np.abs(spec.eigenvalues - roots).max() < 1e-8

    def test_reconstruction_and_unitarity(self, rng):
        h = random_hermitian(rng, 16)
        spec = eig_hermitian(Operator(SystemLayout.of(("x", 16)), h))
        v = spec.eigenvectors
        assert np.abs(v @ v.conj().T - np.eye(16)).max() < 1e-10
        recon = (v * spec.eigenvalues) @ v.conj().T
        assert np.abs(recon - h).max() < 1e-10 * max(1.0, np.abs(h).max())

    def test_ascending(self, rng):
        h = random_hermitian(rng, 12)
        spec = eig_hermitian(Operator(SystemLayout.of(("x", 12)), h))
        assert np.all(np.diff(spec.eigenvalues) >= 0)

    def test_rejects_non_hermitian(self, rng):
        a = rng.standard_normal((4, 4))
        a[0, 1] += 1.0  # break symmetry
        with pytest.raises(ValueError):
            eig_hermitian(Operator(SystemLayout.of(("x", 4)), a))


class TestFuncOfHermitian:
    def test_identity_function(self, rng):
        h = op("q", random_hermitian(rng, 2))
        assert np.abs(func_of_hermitian(h, lambda w: w).entries - h.entries).max() < 1e-12

    def test_exp_at_beta_zero(self):
        h = op("q", SIGMA_Z)
        out = func_of_hermitian(h, lambda w: np.exp(-0.0 * w))
        assert np.allclose(out.entries, np.eye(2))

    def test_exp_against_taylor_oracle(self):
        h = op("q", -SIGMA_X)
        got = func_of_hermitian(h, np.exp).entries
        taylor = np.zeros((2, 2))
        term = np.eye(2)
        for k in range(1, 21):
            taylor = taylor + term
            term = term @ (-SIGMA_X) / k
        assert np.abs(got - taylor).max() < 1e-10

    def test_exp_commutes_with_argument(self, rng):
        h = op("xy", random_hermitian(rng, 4))
        e = func_of_hermitian(h, np.exp)
        comm = e.entries @ h.entries - h.entries @ e.entries
        assert np.abs(comm).max() < 1e-10 * np.abs(e.entries).max()

    def test_overflow_rejected(self):
        h = op("q", 1e5 * SIGMA_Z)
        with pytest.raises(ValueError):
            func_of_hermitian(h, lambda w: np.exp(1e5 * w))


class TestOperatorBasics:
    def test_hermitian_unitary_density_predicates(self, rng):
        rho = op("ab", random_density(rng, 4))
        assert rho.is_hermitian() and rho.is_density()
        assert not rho.is_unitary()
        had = op("q", np.array([[1, 1], [1, -1]]) / np.sqrt(2))
        assert had.is_unitary()
        assert not op("q", SIGMA_X + 0.1j * np.eye(2)).is_hermitian()

    def test_trace_product_matches_matmul(self, rng):
        layout = qubits_layout("x", "y")
        a = Operator(layout, random_hermitian(rng, 4))
        b = Operator(layout, random_hermitian(rng, 4))
        assert trace_product(a, b) == pytest.approx((a @ b).trace())

    def test_layout_mismatch_rejected(self, rng):
        a = op("ab", random_hermitian(rng, 4))
        b = Operator(qubits_layout("x", "y"), random_hermitian(rng, 4))
        with pytest.raises(LayoutError):
            _ = a + b

    def test_entries_frozen(self, rng):
        a = op("q", SIGMA_Z)
        with pytest.raises(ValueError):
            a.entries[0, 0] = 5.0
