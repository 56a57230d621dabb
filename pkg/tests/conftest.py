"""Independent oracles shared by the test modules.

The dense oracle builds every element as a full ``2n x 2n`` matrix and
multiplies them, without touching the sparse propagation code.
"""

import math

import numpy as np
import pytest

from cfcinfo.circuit import Absorber, BeamSplitter, Circuit, Mirror, Rotator


def element_matrix(el, n, theta):
    m = np.eye(2 * n)
    if isinstance(el, BeamSplitter):
        for off in (0, n):
            a, b = el.path_a + off, el.path_b + off
            m[np.ix_([a, b], [a, b])] = [[el.r, el.t], [el.t, -el.r]]
    elif isinstance(el, Rotator):
        s = theta
        c = math.sqrt(1 - s * s)
        k = el.path
        m[np.ix_([k, k + n], [k, k + n])] = [[c, s], [-s, c]]
    elif isinstance(el, Absorber):
        m[el.path, el.path] = m[el.path + n, el.path + n] = 0.0
    elif isinstance(el, Mirror):
        m[el.path, el.path] = m[el.path + n, el.path + n] = -1.0
    return m


def dense_matrix(circuit: Circuit, theta=None):
    """Product of per-element matrices; absorbers are projections."""
    theta = circuit.theta if theta is None else theta
    n = circuit.n_paths
    slots = set(circuit.rotator_slots)
    total = np.eye(2 * n)
    for i, el in enumerate(circuit.elements):
        angle = theta if i in slots else getattr(el, "theta", 0.0)
        total = element_matrix(el, n, angle) @ total
    return total


def dense_probs(circuit: Circuit, theta=None, column=0):
    """Detector probabilities and absorbed probability from the dense oracle."""
    out = dense_matrix(circuit, theta)[:, column]
    p = out ** 2
    return p, 1.0 - p.sum()


def fd_fisher(circuit: Circuit, theta, subset_idx=None, h=1e-5, column=0):
    """Fisher information by central differences of the dense oracle.

    ``subset_idx`` lists indices into [probabilities..., absorbed]; the rest
    is merged into a single complementary event.
    """
    def vec(x):
        p, a = dense_probs(circuit, x, column)
        return np.append(p, a)

    P, dP = vec(theta), (vec(theta + h) - vec(theta - h)) / (2 * h)
    universe = range(P.size)
    sel = list(universe) if subset_idx is None else list(subset_idx)
    rest = [i for i in universe if i not in sel]
    total = sum(dP[i] ** 2 / P[i] for i in sel if P[i] > 1e-300)
    if rest:
        q = sum(P[i] for i in rest)
        if q > 1e-300:
            total += sum(dP[i] for i in rest) ** 2 / q
    return total


def random_real_circuit(rng, n_paths, n_elements, bound_rotators=1, mirrors=True):
    """Random polarization-neutral circuit with ``bound_rotators`` tagged rotators."""
    elements, slots = [], []
    kinds = ["bs", "bs", "mir"] if mirrors and n_paths > 0 else ["bs"]
    rot_at = set(rng.choice(n_elements, size=bound_rotators, replace=False).tolist())
    for i in range(n_elements):
        if i in rot_at:
            slots.append(len(elements))
            elements.append(Rotator(int(rng.integers(n_paths))))
            continue
        kind = kinds[int(rng.integers(len(kinds)))] if n_paths > 1 else "mir"
        if kind == "bs":
            a, b = rng.choice(n_paths, size=2, replace=False)
            phi = rng.uniform(0, 2 * math.pi)
            elements.append(BeamSplitter(int(a), int(b), math.cos(phi), math.sin(phi)))
        else:
            elements.append(Mirror(int(rng.integers(n_paths))))
    return Circuit(n_paths, elements, slots)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary -----------------------------------------------------------
# Checks in test_acceptance.py record (criterion, check, ok, detail); the terminal
# summary then prints one PASS/FAIL line per criterion.

ACCEPTANCE: dict = {}


@pytest.fixture
def record_check():
    def record(criterion: int, check: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE.setdefault(criterion, []).append((check, bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        failed = [f"{name} ({detail})" for name, ok, detail in checks if not ok]
        status = "FAIL" if failed else "PASS"
        note = "failing: " + "; ".join(failed) if failed else f"{len(checks)} checks"
        terminalreporter.write_line(f"criterion {crit}: {status} ({note})")
