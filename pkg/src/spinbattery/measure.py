"""Generalized measurement of one charger spin via a rotated CNOT coupling to
the memory spin.

The memory is never materialized in the battery:charger Hilbert space: the
coupling followed by a projective memory readout is exactly equivalent to the
two rank-1 Kraus operators M_j = R(phi)|j><j|R(phi)^dag acting on the measured
charger site, with the memory ending in the basis state |j>. Conditional
states of a single-site projection have half the rank of the full space, and
their entropies are computed on that compressed block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LayoutError, TheoremViolationError
from .model import MEMORY, SIGMA_X, charger_site
from .qla import Operator, SystemLayout, partial_trace, site_product
from .thermo import entropy_of_weights, shannon_entropy, von_neumann_entropy, _clean_populations

# Outcomes with probability below this floor contribute nothing to averages
# and get no conditional state (avoids 0/0 in M rho M / p).
P_FLOOR = 1e-12


@dataclass(frozen=True)
class MeasurementScheme:
    """Which charger spin to measure, and in which rotated basis.

    ``phi`` is the y-rotation angle of the CNOT control basis, stored reduced
    mod 2pi. ``label_order`` maps Kraus index to the memory level written.
    """

    site: int
    phi: float
    label_order: tuple[int, int] = (0, 1)

    def __post_init__(self):
        if self.site < 1:
            raise ValueError(f"site index must be >= 1, got {self.site}")
        if sorted(self.label_order) != [0, 1]:
            raise ValueError(f"label_order must be a permutation of (0, 1), got {self.label_order}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    @property
    def site_name(self) -> str:
        return charger_site(self.site)


def conjugate_scheme(scheme: MeasurementScheme) -> MeasurementScheme:
    """Same site, phi + pi: permutes the two measurement operators."""
    return MeasurementScheme(scheme.site, scheme.phi + math.pi, scheme.label_order)


def rotation_about_y(phi: float) -> np.ndarray:
    """exp(-i sigma^y phi / 2); real because sigma^y is purely imaginary."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -s], [s, c]])


def _kraus_vectors(scheme: MeasurementScheme) -> list[tuple[int, np.ndarray]]:
    """(memory level, projected single-site vector) for each outcome."""
    r = rotation_about_y(scheme.phi)
    return [(scheme.label_order[a], r[:, a].copy()) for a in range(2)]


def measurement_operators(scheme: MeasurementScheme) -> tuple[Operator, Operator]:
    """The two rank-1 single-site projectors, indexed by memory level."""
    layout = SystemLayout.of((scheme.site_name, 2))
    ops: dict[int, Operator] = {}
    for level, v in _kraus_vectors(scheme):
        ops[level] = Operator(layout, np.outer(v, v.conj()))
    return ops[0], ops[1]


def cnot_gate(scheme: MeasurementScheme, layout: SystemLayout) -> Operator:
    """Rotated-control CNOT between the measured charger spin and the memory."""
    if MEMORY not in layout.names:
        raise LayoutError("cnot_gate needs a layout containing the memory spin")
    if scheme.site_name not in layout.names:
        raise LayoutError(f"layout has no charger site {scheme.site_name!r}")
    r = rotation_about_y(scheme.phi)
    p0 = np.outer(r[:, 0], r[:, 0].conj())
    p1 = np.outer(r[:, 1], r[:, 1].conj())
    return site_product(layout, {scheme.site_name: p0}) + site_product(
        layout, {scheme.site_name: p1, MEMORY: SIGMA_X}
    )


@dataclass(frozen=True)
class MeasurementOutcome:
    probability: float
    post_state_bc: Operator
    memory_level: int


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Post-measurement ensemble on the battery:charger space, with the memory
    tracked classically as (level, probability)."""

    outcomes: tuple[MeasurementOutcome, ...]
    shannon: float
    info_gain: float

    def probabilities_by_level(self, n_levels: int = 2) -> tuple[float, ...]:
        p = [0.0] * n_levels
        for o in self.outcomes:
            p[o.memory_level] += o.probability
        return tuple(p)


def _site_split(layout: SystemLayout, name: str) -> tuple[int, int, int]:
    pos = layout.position(name)
    dims = layout.dims
    left = int(np.prod(dims[:pos], dtype=np.int64))
    right = int(np.prod(dims[pos + 1 :], dtype=np.int64))
    return left, dims[pos], right


def _project_site(entries: np.ndarray, split: tuple[int, int, int], v: np.ndarray) -> np.ndarray:
    """<v| rho |v> contracted on one site: the compressed block of M rho M^dag."""
    left, ds, right = split
    t = entries.reshape(left, ds, right, left, ds, right)
    block = np.einsum("s,t,asbctd->abcd", v.conj(), v, t)
    return block.reshape(left * right, left * right)


def _embed_projected(block: np.ndarray, split: tuple[int, int, int], v: np.ndarray) -> np.ndarray:
    """Place |v><v| back at the measured site around a compressed block."""
    left, ds, right = split
    t = block.reshape(left, right, left, right)
    full = np.einsum("s,t,abcd->asbctd", v, v.conj(), t)
    d = left * ds * right
    return full.reshape(d, d)


def apply_measurement(
    rho_bc: Operator,
    scheme: MeasurementScheme,
    rho_entropy: float | None = None,
) -> MeasurementEnsemble:
    """Measure one charger spin of ``rho_bc``.

    ``rho_entropy`` lets callers that already know S(rho_bc) (e.g. from the
    Boltzmann weights of a Gibbs state) skip a full eigendecomposition.
    """
    layout = rho_bc.layout
    split = _site_split(layout, scheme.site_name)
    probs: list[float] = []
    kept: list[MeasurementOutcome] = []
    cond_entropy = 0.0
    for level, v in _kraus_vectors(scheme):
        block = _project_site(rho_bc.entries, split, v)
        p = float(np.trace(block).real)
        probs.append(max(p, 0.0))
        if p < P_FLOOR:
            continue
        evals = _clean_populations(np.linalg.eigvalsh(block) / p)
        cond_entropy += p * entropy_of_weights(evals)
        post = Operator(layout, _embed_projected(block / p, split, v))
        kept.append(MeasurementOutcome(p, post, level))
    if not kept:
        raise ValueError("all measurement outcomes fell below the probability floor")
    shannon = shannon_entropy(probs)
    s_rho = von_neumann_entropy(rho_bc) if rho_entropy is None else rho_entropy
    info = s_rho - cond_entropy
    if info > shannon + 1e-8:
        raise TheoremViolationError("info_gain_vs_shannon", info - shannon)
    return MeasurementEnsemble(tuple(kept), shannon, info)


def trivial_ensemble(rho_bc: Operator, rho_entropy: float | None = None) -> MeasurementEnsemble:
    """Identity measurement (single Kraus operator M = I); test hook."""
    return MeasurementEnsemble(
        (MeasurementOutcome(1.0, rho_bc, 0),),
        shannon=0.0,
        info_gain=0.0,
    )


def unconditional_state(ensemble: MeasurementEnsemble) -> Operator:
    """sum_j p_j rho^(j): the post-measurement state with the outcome forgotten."""
    layout = ensemble.outcomes[0].post_state_bc.layout
    total = sum(o.probability * o.post_state_bc.entries for o in ensemble.outcomes)
    return Operator(layout, total)


def information_gain(rho_bc: Operator, ensemble: MeasurementEnsemble) -> float:
    """S(rho) - sum_j p_j S(rho^(j)), recomputed densely from the ensemble."""
    s = von_neumann_entropy(rho_bc)
    for o in ensemble.outcomes:
        s -= o.probability * von_neumann_entropy(o.post_state_bc)
    return s
