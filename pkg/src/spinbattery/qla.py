"""Dense linear algebra on tensor products of small quantum subsystems.

Everything here is plain dense numpy. The key objects are :class:`SystemLayout`
(an ordered list of named subsystems, first subsystem = slowest-varying
Kronecker factor) and :class:`Operator` (a square matrix tagged with the
layout it lives on). Real inputs stay real: LAPACK on float64 is several
times faster than on complex128, and the spin-chain Hamiltonians used in
this package are all real symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionLimitError, LayoutError

# Largest total dimension this package agrees to materialize as a dense matrix.
MAX_TOTAL_DIM = 2**13

# Relative tolerance for structural checks (hermiticity, unitarity, trace).
STRUCTURAL_TOL = 1e-10


def _as_matrix(entries) -> np.ndarray:
    a = np.asarray(entries)
    if np.iscomplexobj(a):
        a = a.astype(np.complex128, copy=False)
    else:
        a = a.astype(np.float64, copy=False)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Subsystem:
    """A named tensor factor with a fixed local dimension."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"subsystem {self.name!r} has non-positive dim {self.dim}")


@dataclass(frozen=True)
class SystemLayout:
    """Ordered subsystems defining the tensor-index convention of a Hilbert space."""

    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        names = [s.name for s in self.subsystems]
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate subsystem names in layout: {names}")
        if not self.subsystems:
            raise LayoutError("layout must contain at least one subsystem")

    @classmethod
    def of(cls, *spec: tuple[str, int]) -> "SystemLayout":
        return cls(tuple(Subsystem(name, dim) for name, dim in spec))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def position(self, name: str) -> int:
        for i, s in enumerate(self.subsystems):
            if s.name == name:
                return i
        raise LayoutError(f"no subsystem named {name!r} in layout {self.names}")

    def dim_of(self, name: str) -> int:
        return self.subsystems[self.position(name)].dim

    def restrict(self, names: Iterable[str]) -> "SystemLayout":
        """Sub-layout with the given subsystems, preserving the original order."""
        wanted = set(names)
        unknown = wanted - set(self.names)
        if unknown:
            raise LayoutError(f"unknown subsystem names {sorted(unknown)}")
        return SystemLayout(tuple(s for s in self.subsystems if s.name in wanted))

    def concat(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.subsystems + other.subsystems)


@dataclass(frozen=True)
class Operator:
    """Dense square matrix on the Hilbert space described by ``layout``."""

    layout: SystemLayout
    entries: np.ndarray

    def __post_init__(self):
        entries = _as_matrix(self.entries)
        if entries.shape[0] != self.layout.total_dim:
            raise LayoutError(
                f"matrix side {entries.shape[0]} does not match layout dim {self.layout.total_dim}"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.layout, self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def _scale(self) -> float:
        return max(1.0, float(np.abs(self.entries).max()))

    def is_hermitian(self, tol: float = STRUCTURAL_TOL) -> bool:
        return float(np.abs(self.entries - self.entries.conj().T).max()) <= tol * self._scale()

    def is_unitary(self, tol: float = STRUCTURAL_TOL) -> bool:
        eye = np.eye(self.dim)
        return float(np.abs(self.entries @ self.entries.conj().T - eye).max()) <= tol * max(
            1.0, self._scale() ** 2
        )

    def is_density(self, tol: float = STRUCTURAL_TOL) -> bool:
        """Hermitian, PSD within tol, and unit trace within tol."""
        if not self.is_hermitian(tol):
            return False
        if abs(self.trace() - 1.0) > tol * self._scale() * self.dim:
            return False
        evals = np.linalg.eigvalsh(self.entries)
        return float(evals.min()) >= -tol * max(1.0, float(evals.max()))

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.entries - other.entries)

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.entries)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.layout, self.entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.entries @ other.entries)


def _check_same_layout(a: Operator, b: Operator) -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout.names} vs {b.layout.names}")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (real, ascending) and matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)


def trace_product(a: Operator, b: Operator) -> complex:
    """Tr[a b] without forming the product matrix."""
    _check_same_layout(a, b)
    return complex(np.einsum("ij,ji->", a.entries, b.entries))


def tensor_product(a: Operator, b: Operator) -> Operator:
    """Kronecker product; the left operand is the slowest-varying factor."""
    layout = a.layout.concat(b.layout)
    if layout.total_dim > MAX_TOTAL_DIM:
        raise DimensionLimitError(
            f"tensor product dim {layout.total_dim} exceeds limit {MAX_TOTAL_DIM}"
        )
    return Operator(layout, np.kron(a.entries, b.entries))


def _kron_chain(blocks: Sequence[np.ndarray]) -> np.ndarray:
    out = blocks[0]
    for b in blocks[1:]:
        out = np.kron(out, b)
    return out


def embed_site_operator(op, layout: SystemLayout, site) -> Operator:
    """Lift an operator acting on one subsystem (or a contiguous run of
    subsystems) to the full layout: I ⊗ ... ⊗ op ⊗ ... ⊗ I.

    ``op`` may be an Operator or a bare matrix; ``site`` a subsystem name or a
    sequence of adjacent names.
    """
    entries = op.entries if isinstance(op, Operator) else _as_matrix(op)
    names = (site,) if isinstance(site, str) else tuple(site)
    positions = [layout.position(n) for n in names]
    if positions != list(range(positions[0], positions[0] + len(positions))):
        raise LayoutError(f"sites {names} are not contiguous in layout {layout.names}")
    block_dim = int(np.prod([layout.dims[p] for p in positions]))
    if entries.shape[0] != block_dim:
        raise LayoutError(
            f"operator dim {entries.shape[0]} does not match site block dim {block_dim}"
        )
    left = int(np.prod(layout.dims[: positions[0]], dtype=np.int64))
    right = int(np.prod(layout.dims[positions[-1] + 1 :], dtype=np.int64))
    blocks = []
    if left > 1:
        blocks.append(np.eye(left))
    blocks.append(entries)
    if right > 1:
        blocks.append(np.eye(right))
    return Operator(layout, _kron_chain(blocks))


def site_product(layout: SystemLayout, factors: Mapping[str, np.ndarray]) -> Operator:
    """Embedded product of single-site operators, identity on unspecified sites.

    Handles non-adjacent factors (e.g. a Pauli string on sites 1 and 4).
    """
    blocks = []
    for sub in layout.subsystems:
        if sub.name in factors:
            f = factors[sub.name]
            f = f.entries if isinstance(f, Operator) else _as_matrix(f)
            if f.shape[0] != sub.dim:
                raise LayoutError(f"factor on {sub.name!r} has dim {f.shape[0]}, expected {sub.dim}")
            blocks.append(f)
        else:
            blocks.append(np.eye(sub.dim))
    unknown = set(factors) - set(layout.names)
    if unknown:
        raise LayoutError(f"unknown subsystem names {sorted(unknown)}")
    return Operator(layout, _kron_chain(blocks))


def identity(layout: SystemLayout) -> Operator:
    return Operator(layout, np.eye(layout.total_dim))


def partial_trace(rho: Operator, keep) -> Operator:
    """Trace out every subsystem not in ``keep``; kept order follows the layout."""
    keep_names = (keep,) if isinstance(keep, str) else tuple(keep)
    if not keep_names:
        raise LayoutError("keep set must not be empty")
    reduced = rho.layout.restrict(keep_names)
    if reduced.names == rho.layout.names:
        return rho
    dims = rho.layout.dims
    n = len(dims)
    tensor = rho.entries.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    keep_set = set(keep_names)
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    out = []
    for i, sub in enumerate(rho.layout.subsystems):
        if sub.name in keep_set:
            out.append((row[i], col[i]))
        else:
            col[i] = row[i]  # contract bra against ket
    subscript = "".join(row + col) + "->" + "".join(r for r, _ in out) + "".join(c for _, c in out)
    d = reduced.total_dim
    return Operator(reduced, np.einsum(subscript, tensor).reshape(d, d))


def eig_hermitian(h: Operator, tol: float = STRUCTURAL_TOL) -> Spectrum:
    """Spectral decomposition of a Hermitian operator, eigenvalues ascending."""
    if not h.is_hermitian(tol):
        raise ValueError("eig_hermitian requires a Hermitian operator")
    evals, evecs = np.linalg.eigh(h.entries)
    return Spectrum(evals, evecs)


def func_of_hermitian(h: Operator, f: Callable[[np.ndarray], np.ndarray]) -> Operator:
    """Spectral function U f(Λ) U† of a Hermitian operator.

    ``f`` is applied to the eigenvalue array and must return finite values.
    """
    spec = eig_hermitian(h)
    with np.errstate(over="ignore", invalid="ignore"):
        fw = np.asarray(f(spec.eigenvalues), dtype=float)
    if not np.all(np.isfinite(fw)):
        raise ValueError("function of eigenvalues produced non-finite values")
    v = spec.eigenvectors
    return Operator(h.layout, (v * fw) @ v.conj().T)
