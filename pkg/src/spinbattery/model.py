"""Spin-chain builders: one battery spin, an open transverse-Ising charger
chain, and a single memory spin.

Sign conventions: sigma^z |0> = +|0>, so |0> is the ground state of a field
term -h sigma^z with h > 0. Layouts are ordered [battery, charger 1..N,
memory]; the memory factor is only appended where a measurement needs it,
so thermal states live on the 2^(N+1)-dimensional battery:charger space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qla import Operator, SystemLayout, embed_site_operator, site_product

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
ID2 = np.eye(2)

BATTERY = "b"
MEMORY = "m"


def charger_site(n: int) -> str:
    return f"c{n}"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the chain (units: hbar = k_B = 1, beta = 1/T)."""

    h_b: float = 4.0
    h_c: float = 2.0
    h_m: float = 0.2
    kappa_b: float = 4.0
    kappa_c: float = 0.2
    n_charger: int = 10

    def __post_init__(self):
        for name in ("h_b", "h_c", "h_m", "kappa_b", "kappa_c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.n_charger < 1:
            raise ValueError(f"n_charger must be >= 1, got {self.n_charger}")
        if self.h_m < 0:
            raise ValueError(f"h_m must be >= 0, got {self.h_m}")


# Default parameter set used for all shipped sweeps; kappa_b is the control
# knob and is overridden per study.
PAPER_DEFAULT = ModelParams()

PRESETS = {"paper-default": PAPER_DEFAULT}


def battery_layout() -> SystemLayout:
    return SystemLayout.of((BATTERY, 2))


def memory_layout() -> SystemLayout:
    return SystemLayout.of((MEMORY, 2))


def battery_charger_layout(n_charger: int) -> SystemLayout:
    return SystemLayout.of((BATTERY, 2), *((charger_site(n), 2) for n in range(1, n_charger + 1)))


def full_layout(n_charger: int) -> SystemLayout:
    return SystemLayout.of(
        (BATTERY, 2),
        *((charger_site(n), 2) for n in range(1, n_charger + 1)),
        (MEMORY, 2),
    )


def build_battery_h(p: ModelParams, layout: SystemLayout | None = None) -> Operator:
    """-h_b sigma^z on the battery; bare 2x2 when no layout is given."""
    local = -p.h_b * SIGMA_Z
    if layout is None:
        return Operator(battery_layout(), local)
    return embed_site_operator(local, layout, BATTERY)


def build_memory_h(p: ModelParams, layout: SystemLayout | None = None) -> Operator:
    """-h_m sigma^z on the memory; h_m = 0 gives the fully degenerate memory."""
    local = -p.h_m * SIGMA_Z
    if layout is None:
        return Operator(memory_layout(), local)
    return embed_site_operator(local, layout, MEMORY)


def build_charger_h(p: ModelParams, layout: SystemLayout | None = None) -> Operator:
    """Open-chain charger: field -h_c (sigma^z + sigma^x) on every site and
    coupling -kappa_c sigma^x_n sigma^x_{n+1} on the N-1 bonds."""
    if layout is None:
        layout = battery_charger_layout(p.n_charger)
    field = SIGMA_Z + SIGMA_X
    total = None
    for n in range(1, p.n_charger + 1):
        term = -p.h_c * site_product(layout, {charger_site(n): field})
        total = term if total is None else total + term
    for n in range(1, p.n_charger):
        term = -p.kappa_c * site_product(
            layout, {charger_site(n): SIGMA_X, charger_site(n + 1): SIGMA_X}
        )
        total = total + term
    return total


def build_interaction(p: ModelParams, layout: SystemLayout | None = None) -> Operator:
    """Battery-charger coupling -kappa_b sigma^x_b sigma^x_1."""
    if layout is None:
        layout = battery_charger_layout(p.n_charger)
    return -p.kappa_b * site_product(layout, {BATTERY: SIGMA_X, charger_site(1): SIGMA_X})


def build_total_h(
    p: ModelParams,
    include_interaction: bool = True,
    layout: SystemLayout | None = None,
) -> Operator:
    """H_b + H_c (+ V) + H_m on the full battery:charger:memory layout."""
    if layout is None:
        layout = full_layout(p.n_charger)
    h = build_battery_h(p, layout) + build_charger_h(p, layout) + build_memory_h(p, layout)
    if include_interaction:
        h = h + build_interaction(p, layout)
    return h
