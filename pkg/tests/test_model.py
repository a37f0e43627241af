import numpy as np
import pytest

from spinbattery.model import (
    PAPER_DEFAULT,
    SIGMA_X,
    SIGMA_Z,
    ModelParams,
    battery_charger_layout,
    build_battery_h,
    build_charger_h,
    build_interaction,
    build_memory_h,
    build_total_h,
    full_layout,
)


def kron(*mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


I2 = np.eye(2)


class TestParams:
    def test_paper_default_values(self):
        p = PAPER_DEFAULT
        assert (p.h_b, p.h_c, p.h_m, p.kappa_c, p.n_charger) == (4.0, 2.0, 0.2, 0.2, 10)

    def test_validation(self):
        with pytest.raises(ValueError):
            ModelParams(n_charger=0)
        with pytest.raises(ValueError):
            ModelParams(h_m=-0.1)
        with pytest.raises(ValueError):
            ModelParams(h_b=float("inf"))


class TestBatteryH:
    def test_matrix(self):
        assert np.allclose(build_battery_h(ModelParams(h_b=4.0)).entries, np.diag([-4.0, 4.0]))

    def test_zero_field(self):
        assert np.allclose(build_battery_h(ModelParams(h_b=0.0)).entries, np.zeros((2, 2)))

    def test_ground_state_is_level_zero(self):
        h = build_battery_h(ModelParams(h_b=4.0)).entries
        assert h[0, 0] < h[1, 1]


class TestMemoryH:
    def test_matrix(self):
        assert np.allclose(build_memory_h(ModelParams(h_m=0.2)).entries, np.diag([-0.2, 0.2]))

    def test_degenerate(self):
        assert np.allclose(build_memory_h(ModelParams(h_m=0.0)).entries, np.zeros((2, 2)))

    def test_gap(self):
        h = build_memory_h(ModelParams(h_m=0.2)).entries
        assert h[1, 1] - h[0, 0] == pytest.approx(0.4)


class TestChargerH:
    def test_single_site_eigenvalues(self):
        p = ModelParams(h_c=2.0, n_charger=1)
        evals = np.linalg.eigvalsh(build_charger_h(p).entries)
        # battery factor doubles each charger eigenvalue +-h_c sqrt(2)
        assert np.allclose(np.unique(np.round(evals, 12)), [-2 * np.sqrt(2), 2 * np.sqrt(2)])

    def test_uncoupled_ground_energy(self):
        p = ModelParams(h_c=2.0, kappa_c=0.0, n_charger=4)
        evals = np.linalg.eigvalsh(build_charger_h(p).entries)
        assert evals[0] == pytest.approx(-4 * 2.0 * np.sqrt(2))

    def test_against_hand_built_n3(self):
        # independent construction of the N=3 charger on the b:c layout
        p = ModelParams(h_c=2.0, kappa_c=0.2, n_charger=3)
        field = SIGMA_Z + SIGMA_X
        expected = (
            -2.0 * (kron(I2, field, I2, I2) + kron(I2, I2, field, I2) + kron(I2, I2, I2, field))
            - 0.2 * (kron(I2, SIGMA_X, SIGMA_X, I2) + kron(I2, I2, SIGMA_X, SIGMA_X))
        )
        got = build_charger_h(p).entries
        assert np.abs(got - expected).max() < 1e-14
        assert np.allclose(
            np.linalg.eigvalsh(got), np.linalg.eigvalsh(expected), atol=1e-12
        )


class TestInteraction:
    def test_traceless(self):
        assert build_interaction(PAPER_DEFAULT).trace() == pytest.approx(0.0)

    def test_eigenvalues_pm_kappa(self):
        p = ModelParams(kappa_b=4.0, n_charger=2)
        evals = np.linalg.eigvalsh(build_interaction(p).entries)
        dim = 2**3
        assert np.allclose(np.sort(evals), [-4.0] * (dim // 2) + [4.0] * (dim // 2))

    def test_structure(self):
        p = ModelParams(kappa_b=4.0, n_charger=2)
        expected = -4.0 * kron(SIGMA_X, SIGMA_X, I2)
        assert np.abs(build_interaction(p).entries - expected).max() == 0.0


class TestTotalH:
    def test_interaction_toggle(self):
        p = ModelParams(n_charger=2)
        diff = build_total_h(p, True) - build_total_h(p, False)
        expected = build_interaction(p, full_layout(2))
        assert np.abs(diff.entries - expected.entries).max() < 1e-14

    def test_all_parts_hermitian(self):
        p = ModelParams(n_charger=2)
        layout = full_layout(2)
        for part in (
            build_battery_h(p, layout),
            build_charger_h(p, layout),
            build_memory_h(p, layout),
            build_interaction(p, layout),
            build_total_h(p),
        ):
            assert part.is_hermitian(1e-12)

    def test_against_hand_built_n2(self):
        # full 16x16 assembly, independent kron order: [b, c1, c2, m]
        p = ModelParams(h_b=4.0, h_c=2.0, h_m=0.2, kappa_b=4.0, kappa_c=0.2, n_charger=2)
        field = SIGMA_Z + SIGMA_X
        expected = (
            -4.0 * kron(SIGMA_Z, I2, I2, I2)
            - 2.0 * (kron(I2, field, I2, I2) + kron(I2, I2, field, I2))
            - 0.2 * kron(I2, SIGMA_X, SIGMA_X, I2)
            - 4.0 * kron(SIGMA_X, SIGMA_X, I2, I2)
            - 0.2 * kron(I2, I2, I2, SIGMA_Z)
        )
        got = build_total_h(p).entries
        assert np.abs(got - expected).max() < 1e-14
        assert np.allclose(np.linalg.eigvalsh(got), np.linalg.eigvalsh(expected))


class TestCommutationInvariants:
    def test_memory_commutes_with_chain(self):
        p = ModelParams(n_charger=2)
        layout = full_layout(2)
        chain = build_battery_h(p, layout) + build_charger_h(p, layout)
        mem = build_memory_h(p, layout)
        comm = chain @ mem - mem @ chain
        assert np.abs(comm.entries).max() == 0.0

    def test_uncoupled_charger_terms_commute(self):
        from spinbattery.qla import site_product

        p = ModelParams(kappa_c=0.0, n_charger=3)
        layout = battery_charger_layout(3)
        h = build_charger_h(p, layout)
        for n in (1, 2, 3):
            term = -p.h_c * site_product(layout, {f"c{n}": SIGMA_Z + SIGMA_X})
            comm = h @ term - term @ h
            assert np.abs(comm.entries).max() < 1e-12
