"""Fisher information, Shannon mutual information and closed forms.

Outcomes are detector clicks ``(path_name, "H" | "V")`` plus, unless the
distribution is post-selected, a single ``"absorbed"`` outcome collecting
everything removed by absorbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .circuit import (Absorber, Circuit, PolarizedState, Rotator, evolve,
                      evolve_with_derivative, presence_amplitude)
from .errors import (ConfigurationError, DegeneratePostSelectionError, DomainError,
                     UnsupportedConfigurationError)

TINY = 1e-30
ABSORBED = "absorbed"
LN2 = math.log(2.0)
LN3 = math.log(3.0)

# Rational approximant of the inner-arm mutual information in powers of t1^2.
# These constants reproduce the series of the closed form through t1^10.
PADE_A2 = (-3.0 + LN2 + 3.0 * LN3) / (3.0 * LN2)
PADE_A4 = (25.0 - 6.0 * LN2 - 24.0 * LN3) / (18.0 * LN2)
PADE_A6 = (254.0 - 3.0 * LN2 - 429.0 * LN3 + 180.0 * LN3 ** 2) / (90.0 * (-7.0 + 6.0 * LN3) * LN2)
PADE_B2 = -1.0
PADE_B4 = -1.0 / (10.0 * (-7.0 + 6.0 * LN3))


@dataclass(frozen=True)
class OutcomeDistribution:
    probabilities: dict
    absorbed: float
    postselected: bool = False

    def total(self) -> float:
        return sum(self.probabilities.values()) + (0.0 if self.postselected else self.absorbed)

    def __getitem__(self, key):
        return self.probabilities[key]


@dataclass(frozen=True)
class PriorSpec:
    theta_min: float = -1.0
    theta_max: float = 1.0
    density: Callable[[float], float] | None = None

    def __post_init__(self):
        if not self.theta_max > self.theta_min:
            raise ConfigurationError("prior needs theta_max > theta_min")

    def pdf(self, x: np.ndarray) -> np.ndarray:
        if self.density is None:
            return np.full_like(x, 1.0 / (self.theta_max - self.theta_min), dtype=float)
        return np.array([self.density(float(v)) for v in x], dtype=float)


@dataclass
class InfoResult:
    value: float
    method: str
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"value": self.value, "method": self.method, "detail": self.detail},
                          default=_json_default, sort_keys=True)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(type(obj))


# --- outcome bookkeeping -------------------------------------------------------

def outcome_labels(circuit: Circuit) -> list:
    names = circuit.path_names
    return [(p, "H") for p in names] + [(p, "V") for p in names]


def _resolve(circuit: Circuit, spec) -> list[int]:
    """Outcome selector -> indices into the 2n amplitude vector (plus 2n for absorbed).

    Items may be a path name or index (both polarizations), a
    ``(path, "H"|"V")`` pair, or ``"absorbed"``.
    """
    n = circuit.n_paths
    out: list[int] = []
    for item in spec:
        if isinstance(item, str) and item == ABSORBED:
            out.append(2 * n)
        elif isinstance(item, tuple):
            path, pol = item
            k = circuit.path_index(path)
            if pol not in ("H", "V"):
                raise ConfigurationError(f"polarization must be 'H' or 'V', got {pol!r}")
            out.append(k + (n if pol == "V" else 0))
        else:
            k = circuit.path_index(item)
            out += [k, k + n]
    return sorted(set(out))


def _default_state(circuit: Circuit, state):
    return PolarizedState.single(circuit.n_paths) if state is None else state


def outcome_probs(circuit: Circuit, input_state: PolarizedState | None = None, theta: float | None = None,
                  postselect: Iterable | None = None) -> OutcomeDistribution:
    """Detector probabilities; with ``postselect`` only those outcomes survive, renormalized."""
    state = _default_state(circuit, input_state)
    out = evolve(circuit, state, theta)
    p = out.probabilities()
    labels = outcome_labels(circuit)
    if postselect is None:
        return OutcomeDistribution({lab: float(v) for lab, v in zip(labels, p)}, out.absorbed, False)
    keep = [i for i in _resolve(circuit, postselect) if i < len(labels)]
    survival = float(sum(p[i] for i in keep))
    if survival < 1e-15:
        raise DegeneratePostSelectionError(f"survival probability {survival:.3g} under post-selection")
    return OutcomeDistribution({labels[i]: float(p[i] / survival) for i in keep}, out.absorbed, True)


# --- Fisher information --------------------------------------------------------

def _fisher_from_vectors(P, dP, lim, universe, subset):
    """Per-outcome Fisher terms and the negative-measurement term.

    ``lim[i]`` is the small-probability limit used when ``P[i] < TINY``.
    """
    per = {}
    for i in universe:
        per[i] = dP[i] ** 2 / P[i] if P[i] >= TINY else lim[i]
    if subset is None:
        return per, 0.0
    rest = [i for i in universe if i not in subset]
    if not rest:
        return {i: per[i] for i in subset}, 0.0
    q = sum(P[i] for i in rest)
    if q >= TINY:
        neg = sum(dP[i] for i in rest) ** 2 / q
    else:
        neg = sum(lim[i] for i in rest)
    return {i: per[i] for i in subset}, neg


def _vectors_exact(circuit, state, theta):
    b, db, absorbed, dabs = evolve_with_derivative(circuit, state, theta)
    P = np.append(np.abs(b) ** 2, absorbed)
    dP = np.append(2.0 * (b.conj() * db).real, dabs)
    lim = np.append(4.0 * np.abs(db) ** 2, 0.0)
    return P, dP, lim


def _vectors_fd(family, state, theta, h):
    lo, hi = max(-1.0, theta - h), min(1.0, theta + h)
    outs = [evolve(family(x), state, None) for x in (lo, theta, hi)]
    vec = [np.append(o.probabilities(), o.absorbed) for o in outs]
    dP = (vec[2] - vec[0]) / (hi - lo)
    # Second difference stands in for the small-probability limit: P ~ beta^2 x^2.
    lim = 2.0 * np.maximum((vec[2] - 2 * vec[1] + vec[0]) / ((hi - lo) / 2) ** 2, 0.0)
    return vec[1], dP, lim


def fisher(family, theta: float, input_state: PolarizedState | None = None, outcome_subset=None,
           postselect=None, fd_step: float = 1e-5) -> InfoResult:
    """Classical Fisher information about the tagging angle.

    ``family`` is a :class:`Circuit` (exact derivative propagation through its
    bound rotators) or any callable ``theta -> Circuit`` (central differences).
    With ``outcome_subset`` the result is the restricted information: the
    listed outcomes individually plus the single event "none of them".
    ``postselect`` keeps only the listed outcomes and renormalizes.
    """
    if not abs(theta) < 1.0:
        raise DomainError(f"Fisher information needs |theta| < 1, got {theta}")
    if isinstance(family, Circuit):
        circuit = family
        state = _default_state(circuit, input_state)
        P, dP, lim = _vectors_exact(circuit, state, theta)
        method = "derivative_propagation"
    else:
        circuit = family(theta)
        state = _default_state(circuit, input_state)
        P, dP, lim = _vectors_fd(family, state, theta, fd_step)
        method = "finite_difference"
    n2 = 2 * circuit.n_paths
    labels = outcome_labels(circuit) + [ABSORBED]
    universe = list(range(n2 + 1))
    if postselect is not None:
        universe = [i for i in _resolve(circuit, postselect) if i < n2]
        S = float(sum(P[i] for i in universe))
        if S < 1e-15:
            raise DegeneratePostSelectionError(f"survival probability {S:.3g} under post-selection")
        dS = float(sum(dP[i] for i in universe))
        P, dP, lim = P / S, (dP * S - P * dS) / S ** 2, lim / S
    subset = None
    if outcome_subset is not None:
        subset = [i for i in _resolve(circuit, outcome_subset) if i in universe]
    per, neg = _fisher_from_vectors(P, dP, lim, universe, subset)
    value = float(sum(per[i] for i in sorted(per)) + neg)
    detail = {"per_outcome": {"/".join(labels[i]) if isinstance(labels[i], tuple) else labels[i]: float(v)
                              for i, v in sorted(per.items())},
              "negative_term": float(neg)}
    return InfoResult(value, method, detail)


def fisher_closed_single_rotator(circuit: Circuit, slot: int | None = None, theta: float | None = None,
                                 input_state: PolarizedState | None = None) -> InfoResult:
    """``4 |c|^2 / (1 - theta^2)`` with ``c`` the amplitude reaching the single rotator.

    Valid when the rotator is the only polarization element, nothing is
    absorbed and the input is H-polarized with a common phase.
    """
    theta = circuit.theta if theta is None else float(theta)
    if not abs(theta) < 1.0:
        raise DomainError(f"closed form needs |theta| < 1, got {theta}")
    if len(circuit.rotator_slots) != 1:
        raise UnsupportedConfigurationError("closed form needs exactly one bound rotator")
    if slot is None:
        slot = circuit.rotator_slots[0]
    if slot != circuit.rotator_slots[0]:
        raise UnsupportedConfigurationError(f"element {slot} is not the bound rotator")
    for i, el in enumerate(circuit.elements):
        if isinstance(el, Absorber):
            raise UnsupportedConfigurationError("closed form does not cover absorbers")
        if isinstance(el, Rotator) and i != slot and el.theta != 0.0:
            raise UnsupportedConfigurationError("closed form needs a single polarization element")
    state = _default_state(circuit, input_state)
    a = state.amplitudes
    n = circuit.n_paths
    if np.any(np.abs(a[n:]) > 0):
        raise UnsupportedConfigurationError("closed form needs an H-polarized input")
    nz = a[:n][np.abs(a[:n]) > 0]
    if nz.size and np.max(np.abs((nz / nz[0]).imag)) > 1e-12:
        raise UnsupportedConfigurationError("closed form needs a common input phase")
    c = presence_amplitude(circuit, slot, state, theta)
    return InfoResult(4.0 * abs(c) ** 2 / (1.0 - theta * theta), "closed_form", {"presence": abs(c) ** 2})


# --- Shannon mutual information ------------------------------------------------

def quadrature_rule(prior: PriorSpec, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and prior-weighted weights.

    When the interval straddles 0 it is split there, since typical integrands
    have a ``theta^2 log theta^2`` kink at the origin.  Inside [-1, 1] the
    rule is laid out in ``phi = asin(theta)``: rotator entries carry
    ``sqrt(1 - theta^2)``, whose endpoint singularity would otherwise stall
    convergence.
    """
    edges = [prior.theta_min, prior.theta_max]
    if prior.theta_min < 0.0 < prior.theta_max:
        edges.insert(1, 0.0)
    per_panel = max(1, nodes // (len(edges) - 1))
    gx, gw = np.polynomial.legendre.leggauss(per_panel)
    angular = -1.0 <= prior.theta_min and prior.theta_max <= 1.0
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if angular:
            pa, pb = math.asin(a), math.asin(b)
            phi = 0.5 * (pb - pa) * gx + 0.5 * (pb + pa)
            xs.append(np.sin(phi))
            ws.append(0.5 * (pb - pa) * gw * np.cos(phi))
        else:
            xs.append(0.5 * (b - a) * gx + 0.5 * (b + a))
            ws.append(0.5 * (b - a) * gw)
    x = np.concatenate(xs)
    w = np.concatenate(ws) * prior.pdf(np.concatenate(xs))
    return x, w


def _distribution_matrix(family, state, xs, outcome_subset, postselect) -> np.ndarray:
    rows = []
    for x in xs:
        if isinstance(family, Circuit):
            circuit, theta = family, x
        else:
            circuit, theta = family(x), None
        st = _default_state(circuit, state)
        out = evolve(circuit, st, theta)
        p = np.append(out.probabilities(), out.absorbed)
        if postselect is not None:
            keep = [i for i in _resolve(circuit, postselect) if i < p.size - 1]
            s = p[keep].sum()
            if s < 1e-15:
                raise DegeneratePostSelectionError(f"survival probability {s:.3g} at theta={x}")
            p = np.where(np.isin(np.arange(p.size), keep), p / s, 0.0)
        if outcome_subset is not None:
            sel = _resolve(circuit, outcome_subset)
            mask = np.isin(np.arange(p.size), sel)
            p = np.append(p[mask], p[~mask].sum())
        rows.append(p)
    return np.array(rows)


def _mi_from_matrix(P: np.ndarray, w: np.ndarray) -> float:
    pbar = w @ P
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log2(P / pbar), 0.0)
    return float(max(0.0, w @ terms.sum(axis=1)))


def shannon_mi(family, input_state: PolarizedState | None = None, prior: PriorSpec | None = None,
               nodes: int = 256, outcome_subset=None, postselect=None, check: bool = True) -> InfoResult:
    """Mutual information (bits) between the tagging angle and the detector outcome.

    ``family`` is a Circuit evaluated at each quadrature node, or a callable
    ``x -> Circuit``.  With ``check`` the rule is repeated at twice the node
    count and a warning is stored if the two differ by more than 1e-8.
    """
    prior = prior or PriorSpec()
    x, w = quadrature_rule(prior, nodes)
    value = _mi_from_matrix(_distribution_matrix(family, input_state, x, outcome_subset, postselect), w)
    detail: dict = {"nodes": int(x.size)}
    if check:
        x2, w2 = quadrature_rule(prior, 2 * nodes)
        value2 = _mi_from_matrix(_distribution_matrix(family, input_state, x2, outcome_subset, postselect), w2)
        detail["refined_delta"] = abs(value2 - value)
        if abs(value2 - value) > 1e-8:
            detail["warning"] = f"quadrature not converged: |delta| = {abs(value2 - value):.3g}"
    return InfoResult(value, "quadrature", detail)


FREE_ROTATOR_MI = (math.log(108.0) - 4.0) / (3.0 * LN2)


def shannon_closed_nmzi_inner(t1: float) -> float:
    """Mutual information for an inner-arm rotator with r4 = t1, t4 = r1.

    The prior is uniform in the rotator's diagonal entry over [-1, 1]; this
    is the prior under which the expression holds (see the accompanying tests).
    """
    t1 = float(t1)
    if not 0.0 <= t1 <= 1.0:
        raise DomainError(f"t1 must lie in [0, 1], got {t1}")
    if t1 == 0.0:
        return 0.0
    t2 = t1 * t1
    r2 = 1.0 - t2
    first = -2.0 * r2 ** 3 * math.log1p(-t2) if r2 > 0.0 else 0.0
    u = 3.0 * r2 + t2 * t2
    bracket = first + t2 * (3.0 * LN3 + t2 * (LN2 - 1.0) - 2.0 - u * math.log(u))
    return bracket / (3.0 * LN2 * t2)


def shannon_taylor(t1: float) -> float:
    return PADE_A2 * t1 * t1


def shannon_pade(t1: float) -> float:
    s = t1 * t1
    return (PADE_A2 * s + PADE_A4 * s ** 2 + PADE_A6 * s ** 3) / (1.0 + PADE_B2 * s + PADE_B4 * s ** 2)


def approximation_mse(approx: Callable[[float], float], t_max: float, points: int = 401) -> float:
    """Mean squared error against the closed form on a uniform grid, t1 = 0 excluded."""
    grid = np.linspace(0.0, t_max, points)[1:]
    return float(np.mean([(approx(t) - shannon_closed_nmzi_inner(t)) ** 2 for t in grid]))


def shannon_curve_rows(t_values: Iterable[float]) -> list[tuple]:
    """Rows ``(t1, H_exact, H_taylor, H_pade)`` for the CSV emitter."""
    return [(float(t), shannon_closed_nmzi_inner(t), shannon_taylor(t), shannon_pade(t)) for t in t_values]
