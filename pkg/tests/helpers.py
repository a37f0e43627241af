"""Shared random-state generators for the test suite."""

import numpy as np

from spinbattery.qla import Operator, SystemLayout


def qubits_layout(*names: str) -> SystemLayout:
    return SystemLayout.of(*((n, 2) for n in names))


def random_hermitian(rng: np.random.Generator, dim: int, complex_valued: bool = True) -> np.ndarray:
    a = rng.standard_normal((dim, dim))
    if complex_valued:
        a = a + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_density(rng: np.random.Generator, dim: int, complex_valued: bool = True) -> np.ndarray:
    a = rng.standard_normal((dim, dim))
    if complex_valued:
        a = a + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_density_op(rng: np.random.Generator, layout: SystemLayout) -> Operator:
    return Operator(layout, random_density(rng, layout.total_dim))
