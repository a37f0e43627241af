"""Sweep front-end: grid specifications, parallel execution, CSV ledgers, and
the verification suite driving every theorem check over a grid."""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import bruteforce
from .cycle import (
    CycleConfig,
    CycleReport,
    SECOND_LAW_TOL,
    compare_conjugate_pair,
    run_measured_cycle,
    run_unmeasured_cycle,
    verify_cycle,
    _engine_for,
)
from .errors import ConfigError, TheoremViolationError
from .measure import MeasurementScheme
from .model import PAPER_DEFAULT, PRESETS, ModelParams

# Standard five-phase grid for the unmeasured protocol.
UNMEASURED_THETAS = (0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2)

ORDERINGS = ("measure-first", "disconnect-first")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_THEOREM = 3
EXIT_IO = 4


@dataclass(frozen=True)
class SweepSpec:
    """A fully validated sweep grid: one CSV row per (T, theta-or-scheme) tuple."""

    params: ModelParams = PAPER_DEFAULT
    t_min: float = 1e-2
    t_max: float = 1e3
    t_points: int = 60
    thetas: tuple[float, ...] = UNMEASURED_THETAS
    theta_measured: float = 0.0
    schemes: tuple[MeasurementScheme, ...] = ()
    orderings: tuple[str, ...] = ("measure-first",)
    include_unmeasured: bool = True
    out_dir: str = "out"
    jobs: int = 1
    identity_tol: float = 1e-8

    def __post_init__(self):
        if not (self.t_min > 0 and math.isfinite(self.t_min)):
            raise ConfigError(f"t_min must be positive, got {self.t_min}")
        if self.t_max < self.t_min:
            raise ConfigError(f"t_max {self.t_max} below t_min {self.t_min}")
        if self.t_points < 1:
            raise ConfigError(f"t_points must be >= 1, got {self.t_points}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        for o in self.orderings:
            if o not in ORDERINGS:
                raise ConfigError(f"unknown ordering {o!r}; choose from {ORDERINGS}")
        for s in self.schemes:
            if not (1 <= s.site <= self.params.n_charger):
                raise ConfigError(
                    f"measurement site {s.site} outside charger 1..{self.params.n_charger}"
                )

    def temperatures(self) -> np.ndarray:
        if self.t_points == 1:
            return np.array([self.t_min])
        return np.logspace(math.log10(self.t_min), math.log10(self.t_max), self.t_points)


_ANGLE_RE = re.compile(r"^([+-]?\d*\.?\d*)\s*pi\s*(?:/\s*(\d+\.?\d*))?$")


def parse_angle(text: str) -> float:
    """Parse '0.5', 'pi', '5pi/4', '-pi/2' style angle strings."""
    text = text.strip()
    m = _ANGLE_RE.match(text)
    if m:
        coeff = m.group(1)
        num = float(coeff) if coeff not in ("", "+", "-") else float(coeff + "1")
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


_PARAM_KEYS = {"h_b", "h_c", "h_m", "kappa_b", "kappa_c"}
_SCALAR_KEYS = {
    "preset", "t_min", "t_max", "t_points", "n_charger", "theta_measured",
    "out", "jobs", "unmeasured",
}
_LIST_KEYS = {"theta", "phi", "site", "order"}
_ALL_KEYS = _PARAM_KEYS | _SCALAR_KEYS | _LIST_KEYS


def _read_config_file(path: str) -> dict[str, list[str]]:
    values: dict[str, list[str]] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values.setdefault(key, []).append(value)
    return values


def parse_config(
    path: str | None = None, overrides: Mapping[str, object] | None = None
) -> SweepSpec:
    """Build a SweepSpec from a flat key=value file plus CLI overrides.

    Unknown keys are rejected; repeated keys form lists (theta, phi, site,
    order). Defaults are the paper-default preset with the five-phase
    unmeasured grid and no measurements.
    """
    values = _read_config_file(path) if path else {}
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        values[key] = [str(v) for v in val] if isinstance(val, (list, tuple)) else [str(val)]

    unknown = set(values) - _ALL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _SCALAR_KEYS | _PARAM_KEYS:
        if key in values and len(values[key]) > 1:
            raise ConfigError(f"key {key!r} given {len(values[key])} times, expected once")

    def scalar(key: str, default=None) -> str | None:
        return values[key][0] if key in values else default

    preset_name = scalar("preset", "paper-default")
    if preset_name not in PRESETS:
        raise ConfigError(f"unknown preset {preset_name!r}; available: {sorted(PRESETS)}")
    params = PRESETS[preset_name]
    try:
        param_updates = {k: float(values[k][0]) for k in _PARAM_KEYS if k in values}
        if "n_charger" in values:
            param_updates["n_charger"] = int(values["n_charger"][0])
        params = replace(params, **param_updates)

        thetas = tuple(parse_angle(t) for t in values["theta"]) if "theta" in values \
            else UNMEASURED_THETAS
        phis = [parse_angle(p) for p in values.get("phi", [])]
        sites = [int(s) for s in values.get("site", [])]
        if phis and not sites:
            sites = [1]
        if sites and not phis:
            raise ConfigError("site given without phi")
        schemes = tuple(MeasurementScheme(site, phi) for site in sites for phi in phis)

        spec = SweepSpec(
            params=params,
            t_min=float(scalar("t_min", 1e-2)),
            t_max=float(scalar("t_max", 1e3)),
            t_points=int(scalar("t_points", 60)),
            thetas=thetas,
            theta_measured=parse_angle(scalar("theta_measured", "0")),
            schemes=schemes,
            orderings=tuple(values.get("order", ["measure-first"])),
            include_unmeasured=scalar("unmeasured", "yes").lower()
            in ("1", "true", "yes", "on"),
            out_dir=scalar("out", "out"),
            jobs=int(scalar("jobs", 1)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return spec


# --- result rows ---------------------------------------------------------------

COLUMNS = (
    "mode", "T", "theta", "site", "phi", "ordering",
    "h_b", "h_c", "h_m", "kappa_b", "kappa_c", "n_charger",
    "W_d", "W_r", "W_meas", "W_reset", "W_tot",
    "E_plain", "E_b", "dE_b", "E_m", "E_tot",
    "eta", "eta_flagged", "W_diss", "H", "I",
    "dE_m", "dE_c", "p0", "p1",
    "slack_second_law", "slack_info_bound",
)


@dataclass(frozen=True)
class ResultRow:
    """One sweep tuple: configuration echo plus the flattened cycle ledger."""

    mode: str
    temperature: float
    theta: float
    site: int | None
    phi: float | None
    ordering: str
    params: ModelParams
    report: CycleReport

    def as_dict(self) -> dict[str, object]:
        p, r = self.params, self.report
        return {
            "mode": self.mode,
            "T": self.temperature,
            "theta": self.theta,
            "site": self.site,
            "phi": self.phi,
            "ordering": self.ordering,
            "h_b": p.h_b, "h_c": p.h_c, "h_m": p.h_m,
            "kappa_b": p.kappa_b, "kappa_c": p.kappa_c, "n_charger": p.n_charger,
            "W_d": r.W_d, "W_r": r.W_r, "W_meas": r.W_meas, "W_reset": r.W_reset,
            "W_tot": r.W_tot, "E_plain": r.E_plain, "E_b": r.E_b, "dE_b": r.dE_b,
            "E_m": r.E_m, "E_tot": r.E_tot, "eta": r.eta,
            "eta_flagged": int(r.eta_flagged), "W_diss": r.W_diss,
            "H": r.shannon, "I": r.info_gain, "dE_m": r.dE_m, "dE_c": r.dE_c,
            "p0": r.outcome_probs[0], "p1": r.outcome_probs[1],
            "slack_second_law": r.slack_second_law,
            "slack_info_bound": r.slack_info_bound,
        }


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _rows_for_temperature(spec: SweepSpec, temperature: float) -> list[ResultRow]:
    rows: list[ResultRow] = []
    if spec.include_unmeasured:
        for theta in spec.thetas:
            report = run_unmeasured_cycle(
                CycleConfig(spec.params, temperature, theta=theta)
            )
            rows.append(
                ResultRow("unmeasured", temperature, theta, None, None, "", spec.params, report)
            )
    for scheme in spec.schemes:
        for ordering in spec.orderings:
            cfg = CycleConfig(
                spec.params,
                temperature,
                theta=spec.theta_measured,
                scheme=scheme,
                measure_before_disconnect=(ordering == "measure-first"),
            )
            report = run_measured_cycle(cfg)
            rows.append(
                ResultRow(
                    "measured", temperature, spec.theta_measured,
                    scheme.site, scheme.phi, ordering, spec.params, report,
                )
            )
    return rows


def run_sweep(spec: SweepSpec) -> list[ResultRow]:
    """One row per tuple, ordered T-major then theta then scheme; execution may
    be parallel but the output order is fixed."""
    temps = [float(t) for t in spec.temperatures()]
    _engine_for(spec.params)  # diagonalize once before fanning out

    def work(t: float) -> list[ResultRow]:
        try:
            return _rows_for_temperature(spec, t)
        except TheoremViolationError as exc:
            raise TheoremViolationError(
                exc.name, exc.value, f"at T={t:.6g} in sweep"
            ) from exc

    if spec.jobs == 1:
        chunks = [work(t) for t in temps]
    else:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            chunks = list(pool.map(work, temps))
    return [row for chunk in chunks for row in chunk]


def write_csv(rows: Sequence[ResultRow], path: str | Path) -> Path:
    """Fixed column order, 17 significant digits, newline-terminated UTF-8."""
    if not rows:
        raise ValueError("refusing to write an empty CSV")
    path = Path(path)
    lines = [",".join(COLUMNS)]
    for row in rows:
        data = row.as_dict()
        lines.append(",".join(_format_cell(data[c]) for c in COLUMNS))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_rows(path: str | Path) -> list[dict[str, object]]:
    """Parse a results CSV back into row dictionaries with numeric fields."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    header = lines[0].split(",")
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected CSV header in {path}")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        row: dict[str, object] = {}
        for key, cell in zip(header, cells):
            if key in ("mode", "ordering"):
                row[key] = cell
            elif cell == "":
                row[key] = None
            elif key in ("site", "n_charger", "eta_flagged"):
                row[key] = int(cell)
            else:
                row[key] = float(cell)
        out.append(row)
    return out


# --- verification ----------------------------------------------------------------

#: Checks whose value is a slack (must be >= -tol); everything else is a
#: discrepancy (|value| must be <= tol).
_SLACK_CHECKS = (
    "slack_second_law",
    "slack_info_bound",
    "slack_shannon_minus_info",
    "slack_daemonic_gain",
    "slack_eta_plus_minus",
)


@dataclass
class VerificationReport:
    worst: dict[str, float] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)
    n_runs: int = 0
    oracle_max: float | None = None

    def record(self, name: str, value: float, tol: float, context: str) -> None:
        if name in _SLACK_CHECKS:
            current = self.worst.get(name, math.inf)
            self.worst[name] = min(current, value)
            if value < -tol:
                self.violations.append(f"{name}={value:.3e} ({context})")
        else:
            current = self.worst.get(name, 0.0)
            self.worst[name] = max(current, abs(value))
            if abs(value) > tol:
                self.violations.append(f"{name}={value:.3e} ({context})")

    def summary_lines(self) -> list[str]:
        lines = [f"runs checked: {self.n_runs}"]
        for name in sorted(self.worst):
            kind = "min slack" if name in _SLACK_CHECKS else "max |discrepancy|"
            lines.append(f"{name}: {kind} = {self.worst[name]:.6e}")
        if self.oracle_max is not None:
            lines.append(f"small-chain oracle: max |discrepancy| = {self.oracle_max:.6e}")
        if self.violations:
            lines.append("VIOLATIONS:")
            lines.extend(f"  {v}" for v in self.violations)
        else:
            lines.append("all checks passed")
        return lines


def _corrupted_report(report: CycleReport, fld: str) -> CycleReport:
    """Damage one base ledger field and recompute the derived ones; the
    validation step must then name the broken bound (fault-injection hook)."""
    changed = replace(report, **{fld: getattr(report, fld) - 10.0 * (abs(report.W_tot) + 1.0)})
    w_tot = changed.W_d + changed.W_r + changed.W_meas + changed.W_reset
    w_diss = w_tot - changed.E_tot
    return replace(
        changed,
        W_tot=w_tot,
        W_diss=w_diss,
        slack_second_law=w_diss,
        # shift by the same delta: slack_info = W_diss - T(H - I)
        slack_info_bound=report.slack_info_bound + (w_diss - report.W_diss),
    )


def run_verification(
    spec: SweepSpec,
    include_oracle: bool = True,
    corrupt_field: str | None = None,
) -> VerificationReport:
    """Drive every theorem check over the sweep grid.

    Covers the bound slacks, both appendix identities, the Landauer equality
    for degenerate memories, the conjugate-pair theorem for every scheme, and
    (optionally) the small-chain brute-force oracle. Violations are collected,
    not raised, so one bad tuple does not hide others.
    """
    tol = spec.identity_tol
    out = VerificationReport()
    temps = [float(t) for t in spec.temperatures()]
    _engine_for(spec.params)

    def verify_tuple(t: float) -> list[tuple[str, float, str]]:
        records: list[tuple[str, float, str]] = []
        if spec.include_unmeasured:
            for theta in spec.thetas:
                context = f"unmeasured T={t:.4g} theta={theta:.4g}"
                try:
                    ver = verify_cycle(CycleConfig(spec.params, t, theta=theta), tol)
                    records.extend((k, v, context) for k, v in ver.checks.items())
                except TheoremViolationError as exc:
                    records.append((exc.name, exc.value, context))
        for scheme in spec.schemes:
            for ordering in spec.orderings:
                cfg = CycleConfig(
                    spec.params, t, theta=spec.theta_measured, scheme=scheme,
                    measure_before_disconnect=(ordering == "measure-first"),
                )
                context = f"T={t:.4g} site={scheme.site} phi={scheme.phi:.4g} {ordering}"
                try:
                    ver = verify_cycle(cfg, tol)
                    records.extend((k, v, context) for k, v in ver.checks.items())
                except TheoremViolationError as exc:
                    records.append((exc.name, exc.value, context))
            if spec.params.h_m > 0:
                cfg = CycleConfig(
                    spec.params, t, theta=spec.theta_measured, scheme=scheme
                )
                plus, minus, dg = compare_conjugate_pair(cfg)
                context = f"conjugate pair T={t:.4g} site={scheme.site} phi={scheme.phi:.4g}"
                records.append(("conjugate_w_diss", plus.W_diss - minus.W_diss, context))
                records.append(("conjugate_e_b", plus.E_b - minus.E_b, context))
                records.append((
                    "conjugate_populations",
                    max(abs(plus.outcome_probs[0] - minus.outcome_probs[1]),
                        abs(plus.outcome_probs[1] - minus.outcome_probs[0])),
                    context,
                ))
                records.append(("slack_eta_plus_minus", plus.eta - minus.eta, context))
                records.append(("conjugate_eta_degenerate", minus.eta - dg.eta, context))
        return records

    if spec.jobs == 1:
        all_records = [verify_tuple(t) for t in temps]
    else:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            all_records = list(pool.map(verify_tuple, temps))
    for chunk in all_records:
        for name, value, context in chunk:
            out.record(name, value, tol, context)
        out.n_runs += 1

    if corrupt_field is not None and spec.schemes:
        cfg = CycleConfig(
            spec.params, temps[0], theta=spec.theta_measured, scheme=spec.schemes[0]
        )
        bad = _corrupted_report(run_measured_cycle(cfg), corrupt_field)
        try:
            bad.validate()
        except TheoremViolationError as exc:
            out.record(exc.name, exc.value, tol, f"fault injection on {corrupt_field}")

    if include_oracle:
        oracle = run_oracle()
        out.oracle_max = max(oracle.values())
        if out.oracle_max > tol:
            out.violations.append(f"oracle max discrepancy {out.oracle_max:.3e}")
    return out


def write_verification(report: VerificationReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text("\n".join(report.summary_lines()) + "\n", encoding="utf-8")
    return path


# --- brute-force oracle comparisons ------------------------------------------------

ORACLE_TEMPERATURES = (0.5, 1.0, 2.0, 10.0, 100.0)

_COMPARED_FIELDS = (
    "W_d", "W_r", "W_meas", "W_reset", "W_tot", "E_plain", "E_b", "dE_b",
    "E_m", "E_tot", "eta", "W_diss", "shannon", "info_gain", "dE_m", "dE_c",
    "slack_second_law", "slack_info_bound",
)


def _report_as_oracle_dict(report: CycleReport) -> dict[str, float]:
    d = {f: getattr(report, f) for f in _COMPARED_FIELDS}
    d["p0"], d["p1"] = report.outcome_probs
    return d


def run_oracle(
    n_charger: int = 2,
    temperatures: Sequence[float] = ORACLE_TEMPERATURES,
    phis: Sequence[float] = (math.pi, 5 * math.pi / 4),
    site: int = 1,
    theta: float = 0.0,
) -> dict[str, float]:
    """Compare the full pipeline against the dilated brute-force ledger on a
    shrunken chain; returns the max |discrepancy| per ledger field."""
    params = replace(PAPER_DEFAULT, n_charger=n_charger)
    worst: dict[str, float] = {f: 0.0 for f in _COMPARED_FIELDS + ("p0", "p1")}

    def compare(mine: dict[str, float], ref: dict[str, float]) -> None:
        for key in worst:
            worst[key] = max(worst[key], abs(mine[key] - ref[key]))

    for t in temperatures:
        mine = _report_as_oracle_dict(
            run_unmeasured_cycle(CycleConfig(params, t, theta=theta))
        )
        ref = bruteforce.unmeasured_ledger(
            h_b=params.h_b, h_c=params.h_c, kappa_b=params.kappa_b,
            kappa_c=params.kappa_c, n_charger=n_charger, theta=theta, temperature=t,
        )
        compare(mine, ref)
        for phi in phis:
            for measure_first in (True, False):
                cfg = CycleConfig(
                    params, t, theta=theta, scheme=MeasurementScheme(site, phi),
                    measure_before_disconnect=measure_first,
                )
                mine = _report_as_oracle_dict(run_measured_cycle(cfg))
                ref = bruteforce.measured_ledger(
                    h_b=params.h_b, h_c=params.h_c, h_m=params.h_m,
                    kappa_b=params.kappa_b, kappa_c=params.kappa_c,
                    n_charger=n_charger, site=site, phi=phi, theta=theta,
                    temperature=t, measure_first=measure_first,
                )
                compare(mine, ref)
    return worst
