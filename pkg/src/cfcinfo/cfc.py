"""Counterfactual-violation measures and parameter sweeps over chained devices."""

from __future__ import annotations

import csv
import io
import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .circuit import PolarizedState, evolve
from .devices import build_chained_nmzi, build_cmzi
from .errors import DomainError
from .info import fisher, outcome_probs

SCHEMA_VERSION = 1
CMZI_ALICE = ("D1",)
CHAINED_ALICE = ("D1", "D2")
DEFAULT_CMZI_THETAS = (1e-6, 1e-4, 1e-3, 1e-2)


def free_fisher(theta_w: float) -> float:
    """Fisher information of a bare rotator, the normalization for violation strengths."""
    if not abs(theta_w) < 1.0:
        raise DomainError(f"|theta_w| must be < 1, got {theta_w}")
    return 4.0 / (1.0 - theta_w * theta_w)


@dataclass(frozen=True)
class ViolationReport:
    kind: str                  # "type1", "type1_restricted" or "type2"
    value: float
    fisher_component: float
    f_free: float
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {**self.config, "kind": self.kind, "value": self.value,
                "fisher": self.fisher_component, "f_free": self.f_free, **self.extra}


def violation_type1(fisher_value: float, theta_w: float, restricted: bool = False,
                    config: dict | None = None) -> ViolationReport:
    """Fisher information reaching Alice relative to the free-space value."""
    if fisher_value < 0:
        raise DomainError(f"Fisher information must be >= 0, got {fisher_value}")
    f_free = free_fisher(theta_w)
    return ViolationReport("type1_restricted" if restricted else "type1", fisher_value / f_free,
                           fisher_value, f_free, dict(config or {}, theta_w=theta_w))


def violation_type2(family, theta_w: float, alice_outcomes=CMZI_ALICE, input_state=None,
                    config: dict | None = None) -> ViolationReport:
    """Probability of the photon ending in Alice's laboratory, plus the restricted Fisher information."""
    dist = outcome_probs(family, input_state, theta_w)
    p_a = 0.0
    for (path, _pol), p in dist.probabilities.items():
        if path in alice_outcomes:
            p_a += p
    f_a = fisher(family, theta_w, input_state, outcome_subset=alice_outcomes).value
    return ViolationReport("type2", min(1.0, max(0.0, p_a)), f_a, free_fisher(theta_w),
                           dict(config or {}, theta_w=theta_w))


def chained_detection_probs(N: int, M: int, blocked: bool) -> tuple[float, float, float]:
    """(P_D1, P_D2, absorbed) for the untagged chained device."""
    c = build_chained_nmzi(N, M, bob_blocked=blocked)
    out = evolve(c, PolarizedState.single(c.n_paths))
    p = out.probabilities()
    n = c.n_paths
    return float(p[0] + p[n]), float(p[1] + p[n + 1]), float(out.absorbed)


@dataclass
class SweepGrid:
    axes: dict
    cells: list
    runtime: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [c.row() for c in self.cells]

    def to_json(self, timestamp: bool = True) -> str:
        doc = {"schema_version": SCHEMA_VERSION, "axes": self.axes,
               "cells": [asdict(c) for c in self.cells],
               "runtime": {k: v for k, v in self.runtime.items() if k != "seconds"}}
        if timestamp:
            doc["runtime"]["seconds"] = self.runtime.get("seconds")
            doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        return json.dumps(doc, indent=1, sort_keys=True)

    def to_csv(self, columns) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in self.rows():
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()


CHAINED_COLUMNS = ("N", "M", "theta_w", "P_D1", "P_D2", "absorbed", "D_A", "D", "F_A")
CMZI_COLUMNS = ("N", "theta_w", "P_A", "F_A", "P_return_blocked")


def _chained_cell(args) -> ViolationReport:
    N, M, theta_w, tag_mode, with_probs = args
    c = build_chained_nmzi(N, M, tag_inner=True, theta=theta_w, tag_mode=tag_mode)
    f_a = fisher(c, theta_w, outcome_subset=CHAINED_ALICE).value
    f_all = fisher(c, theta_w).value
    f_free = free_fisher(theta_w)
    extra = {"D_A": f_a / f_free, "D": f_all / f_free, "F_A": f_a}
    if with_probs:
        p_d1, _, _ = chained_detection_probs(N, M, blocked=False)
        _, p_d2, absorbed = chained_detection_probs(N, M, blocked=True)
        extra.update(P_D1=p_d1, P_D2=p_d2, absorbed=absorbed)
    return ViolationReport("type1_restricted", f_a / f_free, f_a, f_free,
                           {"N": N, "M": M, "theta_w": theta_w, "blocked": False}, extra)


def _cmzi_cell(args) -> ViolationReport:
    N, theta_w = args
    rep = violation_type2(build_cmzi(N, tag_bob=True), theta_w,
                          config={"N": N, "blocked": False})
    blocked = evolve(build_cmzi(N, bob_blocked=True), PolarizedState.single(2)).probabilities()
    extra = {"P_A": rep.value, "F_A": rep.fisher_component,
             "P_return_blocked": float(blocked[0] + blocked[2])}
    return ViolationReport(rep.kind, rep.value, rep.fisher_component, rep.f_free, rep.config, extra)


def _run_cells(fn, specs, workers: int) -> list:
    if workers <= 1 or len(specs) <= 1:
        return [fn(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, specs))      # map preserves submission order


def sweep_chained_nmzi(N_list, M_list, theta_w: float = 1e-6, workers: int = 1,
                       tag_mode: str = "inner_mzi", with_probs: bool = True) -> SweepGrid:
    """Restricted violation strength on the open, tagged chained device for every (N, M)."""
    notes = []
    if theta_w >= 1.0 / max(M_list):
        msg = f"theta_w={theta_w} is not small against 1/max(M)={1.0 / max(M_list):.3g}"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    specs = [(int(N), int(M), float(theta_w), tag_mode, with_probs) for N in N_list for M in M_list]
    t0 = time.perf_counter()
    cells = _run_cells(_chained_cell, specs, workers)
    axes = {"N": [int(n) for n in N_list], "M": [int(m) for m in M_list], "theta_w": [float(theta_w)]}
    return SweepGrid(axes, cells, {"seconds": time.perf_counter() - t0, "warnings": notes,
                                   "tag_mode": tag_mode})


def sweep_cmzi(N_list, theta_w_list=DEFAULT_CMZI_THETAS, workers: int = 1) -> SweepGrid:
    """(P_A, F_A) on the open, tagged chain for every (N, theta_w)."""
    specs = [(int(N), float(t)) for N in N_list for t in theta_w_list]
    t0 = time.perf_counter()
    cells = _run_cells(_cmzi_cell, specs, workers)
    axes = {"N": [int(n) for n in N_list], "theta_w": [float(t) for t in theta_w_list]}
    return SweepGrid(axes, cells, {"seconds": time.perf_counter() - t0, "warnings": []})
