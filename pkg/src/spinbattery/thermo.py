"""Thermodynamic-state kernel: Gibbs states, entropies, non-equilibrium free
energy, and ergotropy with its extraction unitary."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LayoutError
from .qla import Operator, Spectrum, eig_hermitian, trace_product

# Eigenvalues of a density matrix may round off slightly negative after
# partial traces; anything below this is treated as an invalid state.
NEGATIVE_EIGENVALUE_TOL = 1e-8


@dataclass(frozen=True)
class ErgotropyResult:
    """Maximal unitarily extractable energy, with one extraction unitary and
    the passive state it leaves behind."""

    value: float
    extraction_unitary: Operator
    passive_state: Operator


def gibbs_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    """Normalized Boltzmann weights exp(-beta E_k)/Z, computed with the
    ground-energy shift so that beta up to ~1e3 cannot overflow."""
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    w = np.exp(-beta * (energies - energies.min()))
    return w / w.sum()


def gibbs_state(h: Operator, beta: float) -> Operator:
    """Thermal state exp(-beta h)/Z via spectral calculus."""
    spec = eig_hermitian(h)
    w = gibbs_weights(spec.eigenvalues, beta)
    v = spec.eigenvectors
    rho = (v * w) @ v.conj().T
    rho = (rho + rho.conj().T) / 2
    return Operator(h.layout, rho)


def _clean_populations(evals: np.ndarray) -> np.ndarray:
    if float(evals.min()) < -NEGATIVE_EIGENVALUE_TOL:
        raise ValueError(
            f"state has eigenvalue {evals.min():.3e} below -{NEGATIVE_EIGENVALUE_TOL}"
        )
    return np.clip(evals, 0.0, 1.0)


def entropy_of_weights(weights: np.ndarray) -> float:
    """-sum w ln w over a normalized weight vector, with 0 ln 0 = 0."""
    w = np.asarray(weights, dtype=float)
    nz = w[w > 0.0]
    return float(-(nz * np.log(nz)).sum())


def von_neumann_entropy(rho: Operator) -> float:
    """S(rho) = -Tr[rho ln rho] in nats."""
    evals = _clean_populations(np.linalg.eigvalsh(rho.entries))
    return entropy_of_weights(evals)


def shannon_entropy(probs: Sequence[float]) -> float:
    """Shannon entropy in nats of a probability list summing to 1."""
    p = np.asarray(probs, dtype=float)
    if p.size and float(p.min()) < -1e-12:
        raise ValueError(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    if abs(p.sum() - 1.0) > 1e-8:
        raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
    return entropy_of_weights(p)


def free_energy(rho: Operator, h: Operator, temperature: float) -> float:
    """Non-equilibrium free energy F(rho; h) = Tr[h rho] - T S(rho)."""
    if rho.layout != h.layout:
        raise LayoutError("state and Hamiltonian live on different layouts")
    return trace_product(h, rho).real - temperature * von_neumann_entropy(rho)


def _descending_spectrum(rho: Operator) -> tuple[np.ndarray, np.ndarray]:
    spec = eig_hermitian(rho)
    evals = _clean_populations(spec.eigenvalues)
    # Stable descending order: ties keep the solver's ascending-index order.
    order = np.argsort(-evals, kind="stable")
    return evals[order], spec.eigenvectors[:, order]


def ergotropy(rho: Operator, h: Operator, phases: Sequence[float] | None = None) -> ErgotropyResult:
    """Maximal energy unitarily extractable from ``rho`` under ``h``.

    The extraction unitary maps the k-th most populated eigenvector of rho
    onto the k-th lowest energy eigenvector of h, up to one free phase per
    level; the extracted value does not depend on the phases.
    """
    if rho.layout != h.layout:
        raise LayoutError("state and Hamiltonian live on different layouts")
    dim = rho.dim
    p_desc, v_rho = _descending_spectrum(rho)
    h_spec = eig_hermitian(h)
    if phases is not None and len(phases) not in (0, dim):
        raise ValueError(f"need {dim} phases, got {len(phases)}")
    if phases is None or not np.any(np.asarray(phases)):
        u = h_spec.eigenvectors @ v_rho.conj().T  # all-zero phases keep u real
    else:
        factors = np.exp(1j * np.asarray(phases, dtype=float))
        u = (h_spec.eigenvectors * factors) @ v_rho.conj().T
    passive_entries = (h_spec.eigenvectors * p_desc) @ h_spec.eigenvectors.conj().T
    passive = Operator(h.layout, (passive_entries + passive_entries.conj().T) / 2)
    value = trace_product(h, rho).real - float(p_desc @ h_spec.eigenvalues)
    return ErgotropyResult(value, Operator(h.layout, u), passive)


def is_passive(rho: Operator, h: Operator, tol: float = 1e-8) -> bool:
    """True iff rho commutes with h and its populations do not increase with
    energy (ties between degenerate levels allowed)."""
    if rho.layout != h.layout:
        raise LayoutError("state and Hamiltonian live on different layouts")
    comm = rho.entries @ h.entries - h.entries @ rho.entries
    scale = max(1.0, float(np.abs(h.entries).max()))
    if float(np.abs(comm).max()) > tol * scale:
        return False
    spec = eig_hermitian(h)
    basis_rho = spec.eigenvectors.conj().T @ rho.entries @ spec.eigenvectors
    # Within a degenerate energy block the basis is free, so compare block
    # spectra rather than raw diagonal entries.
    energies = spec.eigenvalues
    blocks: list[np.ndarray] = []
    start = 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[start] > tol * scale:
            block = basis_rho[start:i, start:i]
            blocks.append(np.sort(np.linalg.eigvalsh((block + block.conj().T) / 2))[::-1])
            start = i
    lowest_so_far = np.inf
    for pops in blocks:
        if pops.max() > lowest_so_far + tol:
            return False
        lowest_so_far = float(pops.min())
    return True
