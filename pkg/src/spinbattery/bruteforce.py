"""Brute-force reference ledgers for small chains.

Everything here is deliberately written from first principles with raw numpy
and shares no code with the rest of the package: the full
battery:charger:memory product state is materialized, the measurement is the
explicit rotated-CNOT unitary followed by a projective readout of the memory
factor, and every ledger entry is an explicit trace on the dilated space.
Exponentially expensive; intended for N <= 4. Used by the `oracle` CLI verb
and the equivalence tests.
"""

from __future__ import annotations

import math

import numpy as np

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


def _place(dims: list[int], factors: dict[int, np.ndarray]) -> np.ndarray:
    out = np.array([[1.0]])
    for i, d in enumerate(dims):
        out = np.kron(out, factors.get(i, np.eye(d)))
    return out


def _ptrace(rho: np.ndarray, dims: list[int], keep: list[int]) -> np.ndarray:
    n = len(dims)
    t = rho.reshape(tuple(dims) + tuple(dims))
    remaining = list(range(n))
    for i in sorted((j for j in range(n) if j not in keep), reverse=True):
        k = len(remaining)
        ax = remaining.index(i)
        t = np.trace(t, axis1=ax, axis2=ax + k)
        remaining.remove(i)
    d = int(np.prod([dims[i] for i in remaining]))
    return t.reshape(d, d)


def _gibbs(h: np.ndarray, beta: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(h)
    w = np.exp(-beta * (evals - evals.min()))
    w /= w.sum()
    return (evecs * w) @ evecs.conj().T


def _entropy(rho: np.ndarray) -> float:
    evals = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    nz = evals[evals > 0.0]
    return float(-(nz * np.log(nz)).sum())


def _free_energy(rho: np.ndarray, h: np.ndarray, temperature: float) -> float:
    return float(np.trace(h @ rho).real) - temperature * _entropy(rho)


def _ergotropy(rho: np.ndarray, h: np.ndarray, phases: tuple[float, ...] | None = None):
    """Value, extraction unitary, passive state: populations sorted descending
    against energies sorted ascending."""
    p_vals, p_vecs = np.linalg.eigh(rho)
    order = np.argsort(-p_vals, kind="stable")
    p_vals, p_vecs = p_vals[order], p_vecs[:, order]
    e_vals, e_vecs = np.linalg.eigh(h)
    dim = h.shape[0]
    if phases is None:
        phases = (0.0,) * dim
    u = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        u += np.exp(1j * phases[k]) * np.outer(e_vecs[:, k], p_vecs[:, k].conj())
    passive = u @ rho.astype(complex) @ u.conj().T
    value = float(np.trace(h @ rho).real - np.trace(h @ passive).real)
    return value, u, passive


def _chain_parts(h_b, h_c, kappa_b, kappa_c, n_charger):
    dims = [2] * (n_charger + 1)  # battery then charger sites
    hb = _place(dims, {0: -h_b * _SZ})
    hc = np.zeros_like(hb)
    for i in range(1, n_charger + 1):
        hc = hc - h_c * _place(dims, {i: _SZ + _SX})
    for i in range(1, n_charger):
        hc = hc - kappa_c * _place(dims, {i: _SX, i + 1: _SX})
    v = -kappa_b * _place(dims, {0: _SX, 1: _SX})
    return dims, hb, hc, v


def unmeasured_ledger(
    *, h_b, h_c, kappa_b, kappa_c, n_charger, theta, temperature
) -> dict[str, float]:
    dims, hb, hc, v = _chain_parts(h_b, h_c, kappa_b, kappa_c, n_charger)
    beta = 1.0 / temperature
    rho = _gibbs(hb + hc + v, beta)
    w_d = -float(np.trace(v @ rho).real)
    rho_b = _ptrace(rho, dims, [0])
    e_plain, u, _ = _ergotropy(rho_b, -h_b * _SZ, (0.0, theta))
    u_full = _place(dims, {0: u})
    rotated = u_full @ rho.astype(complex) @ u_full.conj().T
    w_r = float(np.trace(v @ rotated).real)
    return _assemble(
        w_d=w_d, w_r=w_r, w_meas=0.0, w_reset=0.0,
        e_plain=e_plain, e_b=e_plain, e_m=0.0,
        shannon=0.0, info_gain=0.0, d_e_m=0.0, d_e_c=0.0,
        probs=(1.0, 0.0), temperature=temperature,
    )


def measured_ledger(
    *, h_b, h_c, h_m, kappa_b, kappa_c, n_charger, site, phi, theta, temperature,
    measure_first=True,
) -> dict[str, float]:
    dims_bc, hb, hc, v = _chain_parts(h_b, h_c, kappa_b, kappa_c, n_charger)
    beta = 1.0 / temperature
    rho_bc = _gibbs(hb + hc + v, beta)

    mem = n_charger + 1  # memory index in the dilated space
    dims = dims_bc + [2]
    h_m_local = -h_m * _SZ
    h_bc_conn = hb + hc + v
    h_tot = np.kron(h_bc_conn, np.eye(2)) + _place(dims, {mem: h_m_local})
    h0_plus_hm = np.kron(hb + hc, np.eye(2)) + _place(dims, {mem: h_m_local})

    m0 = np.array([[1.0, 0.0], [0.0, 0.0]])
    rho_tot = np.kron(rho_bc, m0)

    c, s = math.cos(phi / 2), math.sin(phi / 2)
    r = np.array([[c, -s], [s, c]])
    p0r = np.outer(r[:, 0], r[:, 0])
    p1r = np.outer(r[:, 1], r[:, 1])
    u_cnot = _place(dims, {site: p0r}) + _place(dims, {site: p1r, mem: _SX})
    rho_after = u_cnot @ rho_tot @ u_cnot.conj().T

    h_meas = h_tot if measure_first else h0_plus_hm
    e_before = float(np.trace(h_meas @ rho_tot).real)

    probs, cond_tot, cond_bc = [], [], []
    for j in range(2):
        pi = _place(dims, {mem: np.diag([1.0 - j, float(j)])})
        unnorm = pi @ rho_after @ pi
        p = float(np.trace(unnorm).real)
        probs.append(p)
        if p < 1e-12:
            cond_tot.append(None)
            cond_bc.append(None)
            continue
        cond_tot.append(unnorm / p)
        cond_bc.append(_ptrace(unnorm / p, dims, list(range(n_charger + 1))))

    w_meas = sum(
        p * (float(np.trace(h_meas @ rt).real) - e_before)
        for p, rt in zip(probs, cond_tot)
        if rt is not None
    )
    if measure_first:
        avg_bc = sum(p * rc for p, rc in zip(probs, cond_bc) if rc is not None)
        w_d = -float(np.trace(v @ avg_bc).real)
    else:
        w_d = -float(np.trace(v @ rho_bc).real)

    e_b = 0.0
    w_r = 0.0
    for p, rc in zip(probs, cond_bc):
        if rc is None:
            continue
        rho_b_j = _ptrace(rc, dims_bc, [0])
        e_j, u_j, _ = _ergotropy(rho_b_j, -h_b * _SZ, (0.0, theta))
        e_b += p * e_j
        u_full = _place(dims_bc, {0: u_j})
        sigma = u_full @ rc.astype(complex) @ u_full.conj().T
        w_r += p * float(np.trace(v @ sigma).real)

    rho_m_prime = _ptrace(
        sum(p * rt for p, rt in zip(probs, cond_tot) if rt is not None), dims, [mem]
    )
    e_m, _, passive_m = _ergotropy(rho_m_prime, h_m_local)
    w_reset = _free_energy(m0, h_m_local, temperature) - _free_energy(
        passive_m, h_m_local, temperature
    )
    d_e_m = float(np.trace(h_m_local @ passive_m).real - np.trace(h_m_local @ m0).real)

    dims_c = [2] * n_charger
    hc_local = np.zeros((2**n_charger, 2**n_charger))
    for i in range(n_charger):
        hc_local = hc_local - h_c * _place(dims_c, {i: _SZ + _SX})
    for i in range(n_charger - 1):
        hc_local = hc_local - kappa_c * _place(dims_c, {i: _SX, i + 1: _SX})
    charger_ids = list(range(1, n_charger + 1))
    rho_c = _ptrace(rho_bc, dims_bc, charger_ids)
    d_e_c = sum(
        p * float(np.trace(hc_local @ _ptrace(rc, dims_bc, charger_ids)).real
                  - np.trace(hc_local @ rho_c).real)
        for p, rc in zip(probs, cond_bc)
        if rc is not None
    )

    shannon = float(-sum(p * math.log(p) for p in probs if p > 0.0))
    info = _entropy(rho_bc) - sum(
        p * _entropy(rc) for p, rc in zip(probs, cond_bc) if rc is not None
    )

    rho_b = _ptrace(rho_bc, dims_bc, [0])
    e_plain, _, _ = _ergotropy(rho_b, -h_b * _SZ, (0.0, theta))

    return _assemble(
        w_d=w_d, w_r=w_r, w_meas=w_meas, w_reset=w_reset,
        e_plain=e_plain, e_b=e_b, e_m=e_m,
        shannon=shannon, info_gain=info, d_e_m=d_e_m, d_e_c=d_e_c,
        probs=tuple(probs), temperature=temperature,
    )


def _assemble(
    *, w_d, w_r, w_meas, w_reset, e_plain, e_b, e_m, shannon, info_gain,
    d_e_m, d_e_c, probs, temperature,
) -> dict[str, float]:
    w_tot = w_d + w_r + w_meas + w_reset
    e_tot = e_b + e_m
    w_diss = w_tot - e_tot
    flagged = w_tot <= 0.0 or e_tot <= 0.0
    return {
        "W_d": w_d,
        "W_r": w_r,
        "W_meas": w_meas,
        "W_reset": w_reset,
        "W_tot": w_tot,
        "E_plain": e_plain,
        "E_b": e_b,
        "dE_b": e_b - e_plain,
        "E_m": e_m,
        "E_tot": e_tot,
        "eta": 0.0 if flagged else e_tot / w_tot,
        "W_diss": w_diss,
        "shannon": shannon,
        "info_gain": info_gain,
        "dE_m": d_e_m,
        "dE_c": d_e_c,
        "p0": probs[0],
        "p1": probs[1],
        "slack_second_law": w_diss,
        "slack_info_bound": w_diss - temperature * (shannon - info_gain),
    }
