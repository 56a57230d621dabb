"""Polarized single-photon circuits and their evolution.

A state on ``n`` spatial paths is a complex vector of length ``2n``: entry
``k`` is path ``k`` with horizontal polarization, entry ``k + n`` the same
path with vertical polarization.  Paths are 0-based.

Elements are applied one after another as sparse 2x2 updates, so the cost
of an evaluation is linear in the number of elements and a chain with
hundreds of thousands of splitters is cheap.  Dense matrices are built only
on request (:func:`scattering_matrix`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import ConfigurationError, DomainError, UnsupportedConfigurationError

SCHEMA_VERSION = 1
_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class BeamSplitter:
    """Real splitter with block ``[[r, t], [t, -r]]`` on ``(path_a, path_b)``."""

    path_a: int
    path_b: int
    r: float
    t: float

    def __post_init__(self):
        if self.path_a == self.path_b:
            raise ConfigurationError("beam splitter needs two distinct paths")
        if abs(self.r * self.r + self.t * self.t - 1.0) > _UNIT_TOL:
            raise ConfigurationError(f"r^2 + t^2 != 1 (r={self.r}, t={self.t})")

    @classmethod
    def from_t(cls, path_a: int, path_b: int, t: float) -> "BeamSplitter":
        return cls(path_a, path_b, math.sqrt(max(0.0, 1.0 - t * t)), t)


@dataclass(frozen=True)
class Rotator:
    """Polarization rotation on one path.

    ``theta`` is the off-diagonal entry itself: (H, V) -> ``[[c, theta], [-theta, c]]``
    with ``c = sqrt(1 - theta**2)``.  When the element index is listed in
    ``Circuit.rotator_slots`` this value is ignored and the shared tagging
    angle is used instead.
    """

    path: int
    theta: float = 0.0

    def __post_init__(self):
        if abs(self.theta) > 1.0:
            raise DomainError(f"|theta| > 1: {self.theta}")


@dataclass(frozen=True)
class Absorber:
    """Removes everything on ``path`` and books it as absorbed."""

    path: int


@dataclass(frozen=True)
class Mirror:
    """Sign flip on one path, both polarizations (a pi phase)."""

    path: int


Element = Union[BeamSplitter, Rotator, Absorber, Mirror]

_BS, _ROT, _ABS, _MIR = range(4)


@dataclass(frozen=True)
class Circuit:
    """Ordered list of elements acting on ``n_paths`` paths.

    Rotators whose element index appears in ``rotator_slots`` all share the
    tagging angle passed to :func:`evolve` (``theta`` is the default).
    """

    n_paths: int
    elements: tuple
    rotator_slots: tuple = ()
    theta: float = 0.0
    path_names: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "rotator_slots", tuple(int(s) for s in self.rotator_slots))
        if self.n_paths < 1:
            raise ConfigurationError("a circuit needs at least one path")
        for i, el in enumerate(self.elements):
            paths = (el.path_a, el.path_b) if isinstance(el, BeamSplitter) else (el.path,)
            for p in paths:
                if not 0 <= p < self.n_paths:
                    raise ConfigurationError(f"element {i}: path {p} out of range [0, {self.n_paths})")
        for s in self.rotator_slots:
            if not 0 <= s < len(self.elements) or not isinstance(self.elements[s], Rotator):
                raise ConfigurationError(f"rotator slot {s} does not index a Rotator")
        if self.path_names is None:
            object.__setattr__(self, "path_names", tuple(str(i) for i in range(self.n_paths)))
        else:
            object.__setattr__(self, "path_names", tuple(self.path_names))
            if len(self.path_names) != self.n_paths or len(set(self.path_names)) != self.n_paths:
                raise ConfigurationError("path_names must be unique, one per path")
        _check_theta(self.theta)

    @cached_property
    def _ops(self) -> tuple:
        # Flattened opcodes for the inner loop; the boolean marks bound rotators.
        slots = set(self.rotator_slots)
        ops = []
        for i, el in enumerate(self.elements):
            if isinstance(el, BeamSplitter):
                ops.append((_BS, el.path_a, el.path_b, el.r, el.t))
            elif isinstance(el, Rotator):
                ops.append((_ROT, el.path, i in slots, el.theta, 0.0))
            elif isinstance(el, Absorber):
                ops.append((_ABS, el.path, 0, 0.0, 0.0))
            else:
                ops.append((_MIR, el.path, 0, 0.0, 0.0))
        return tuple(ops)

    @property
    def has_absorber(self) -> bool:
        return any(isinstance(e, Absorber) for e in self.elements)

    def path_index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.n_paths:
                raise ConfigurationError(f"path {name} out of range")
            return int(name)
        try:
            return self.path_names.index(str(name))
        except ValueError:
            raise ConfigurationError(f"unknown path name {name!r}") from None

    def with_theta(self, theta: float) -> "Circuit":
        return Circuit(self.n_paths, self.elements, self.rotator_slots, theta, self.path_names)


@dataclass(frozen=True)
class PolarizedState:
    """Amplitudes over ``n_paths`` x {H, V} plus the absorbed probability."""

    n_paths: int
    amplitudes: np.ndarray
    absorbed: float = 0.0

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).ravel()
        if a.shape != (2 * self.n_paths,):
            raise ConfigurationError(f"expected {2 * self.n_paths} amplitudes, got {a.size}")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def single(cls, n_paths: int, path: int = 0, pol: str = "H") -> "PolarizedState":
        """Photon on one path with a definite polarization."""
        if not 0 <= path < n_paths:
            raise ConfigurationError(f"path {path} out of range")
        a = np.zeros(2 * n_paths, dtype=complex)
        a[path + (n_paths if pol.upper() == "V" else 0)] = 1.0
        return cls(n_paths, a)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _check_theta(theta: float) -> None:
    if not abs(theta) <= 1.0:
        raise DomainError(f"|theta| must be <= 1, got {theta}")


def _check_input(circuit: Circuit, state: PolarizedState) -> None:
    if state.n_paths != circuit.n_paths:
        raise ConfigurationError(f"state has {state.n_paths} paths, circuit {circuit.n_paths}")
    if abs(state.norm2 + state.absorbed - 1.0) > 1e-10:
        raise ConfigurationError("input state is not normalized")


def _propagate(circuit: Circuit, amps, theta: float, derivative: bool, stop: int | None = None):
    """Core loop.  Returns (b, db, absorbed, d_absorbed); db is None unless requested."""
    n = circuit.n_paths
    a = [complex(x) for x in amps]
    da = [0j] * (2 * n) if derivative else None
    absorbed = 0.0
    dabsorbed = 0.0
    c_bound = math.sqrt(1.0 - theta * theta)
    if derivative and c_bound == 0.0 and circuit.rotator_slots:
        raise DomainError("derivative is infinite at |theta| = 1")
    dc_bound = -theta / c_bound if c_bound else 0.0
    ops = circuit._ops if stop is None else circuit._ops[:stop]
    for code, i, j, x, y in ops:
        if code == _BS:
            r, t = x, y
            hi, hj = a[i], a[j]
            a[i] = r * hi + t * hj
            a[j] = t * hi - r * hj
            vi, vj = a[i + n], a[j + n]
            a[i + n] = r * vi + t * vj
            a[j + n] = t * vi - r * vj
            if derivative:
                hi, hj = da[i], da[j]
                da[i] = r * hi + t * hj
                da[j] = t * hi - r * hj
                vi, vj = da[i + n], da[j + n]
                da[i + n] = r * vi + t * vj
                da[j + n] = t * vi - r * vj
        elif code == _ROT:
            if j:
                s, c = theta, c_bound
            else:
                s = x
                c = math.sqrt(1.0 - s * s)
            h, v = a[i], a[i + n]
            a[i] = c * h + s * v
            a[i + n] = -s * h + c * v
            if derivative:
                dh, dv = da[i], da[i + n]
                da[i] = c * dh + s * dv
                da[i + n] = -s * dh + c * dv
                if j:
                    # Product rule: the rotator's own theta-derivative acting on the amplitude.
                    da[i] += dc_bound * h + v
                    da[i + n] += -h + dc_bound * v
        elif code == _MIR:
            a[i] = -a[i]
            a[i + n] = -a[i + n]
            if derivative:
                da[i] = -da[i]
                da[i + n] = -da[i + n]
        else:
            h, v = a[i], a[i + n]
            absorbed += (h * h.conjugate()).real + (v * v.conjugate()).real
            a[i] = a[i + n] = 0j
            if derivative:
                dabsorbed += 2.0 * ((h.conjugate() * da[i]).real + (v.conjugate() * da[i + n]).real)
                da[i] = da[i + n] = 0j
    return a, da, absorbed, dabsorbed


def evolve(circuit: Circuit, state: PolarizedState, theta: float | None = None) -> PolarizedState:
    """Push ``state`` through ``circuit`` with the tagging angle ``theta``."""
    theta = circuit.theta if theta is None else float(theta)
    _check_theta(theta)
    _check_input(circuit, state)
    b, _, absorbed, _ = _propagate(circuit, state.amplitudes, theta, False)
    return PolarizedState(circuit.n_paths, np.array(b), state.absorbed + absorbed)


def derivative_state(circuit: Circuit, state: PolarizedState, theta: float | None = None) -> np.ndarray:
    """Exact d(output amplitudes)/d(theta) by forward-mode propagation.

    Circuits without bound rotators give the zero vector.
    """
    theta = circuit.theta if theta is None else float(theta)
    _check_theta(theta)
    _check_input(circuit, state)
    _, db, _, _ = _propagate(circuit, state.amplitudes, theta, True)
    return np.array(db)


def evolve_with_derivative(circuit: Circuit, state: PolarizedState, theta: float | None = None):
    """Return ``(b, db, absorbed, d_absorbed)`` from a single pass."""
    theta = circuit.theta if theta is None else float(theta)
    _check_theta(theta)
    _check_input(circuit, state)
    b, db, absorbed, dabs = _propagate(circuit, state.amplitudes, theta, True)
    return np.array(b), np.array(db), state.absorbed + absorbed, dabs


def scattering_matrix(circuit: Circuit, theta: float | None = None) -> np.ndarray:
    """Dense ``2n x 2n`` matrix; column ``k`` is the image of basis state ``k``."""
    if circuit.has_absorber:
        raise UnsupportedConfigurationError("scattering matrix is only defined without absorbers")
    theta = circuit.theta if theta is None else float(theta)
    _check_theta(theta)
    dim = 2 * circuit.n_paths
    out = np.empty((dim, dim), dtype=complex)
    for k in range(dim):
        e = [0j] * dim
        e[k] = 1.0 + 0j
        out[:, k] = _propagate(circuit, e, theta, False)[0]
    return out


def presence_amplitude(circuit: Circuit, slot: int, state: PolarizedState, theta: float | None = None) -> complex:
    """Amplitude on the rotator's path just before element ``slot`` acts.

    Only the H component is returned, which is the relevant one when every
    earlier element is polarization-neutral and the input is H-polarized.
    """
    if not 0 <= slot < len(circuit.elements) or not isinstance(circuit.elements[slot], Rotator):
        raise ConfigurationError(f"element {slot} is not a Rotator")
    theta = circuit.theta if theta is None else float(theta)
    _check_theta(theta)
    _check_input(circuit, state)
    a = _propagate(circuit, state.amplitudes, theta, False, stop=slot)[0]
    return a[circuit.elements[slot].path]


# --- serialization -----------------------------------------------------------

def _element_to_dict(el: Element) -> dict:
    if isinstance(el, BeamSplitter):
        return {"type": "beam_splitter", "path_a": el.path_a, "path_b": el.path_b, "r": el.r, "t": el.t}
    if isinstance(el, Rotator):
        return {"type": "rotator", "path": el.path, "theta": el.theta}
    if isinstance(el, Absorber):
        return {"type": "absorber", "path": el.path}
    return {"type": "mirror", "path": el.path}


_ELEMENT_TYPES = {
    "beam_splitter": lambda d: BeamSplitter(d["path_a"], d["path_b"], d["r"], d["t"]),
    "rotator": lambda d: Rotator(d["path"], d.get("theta", 0.0)),
    "absorber": lambda d: Absorber(d["path"]),
    "mirror": lambda d: Mirror(d["path"]),
}


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n_paths": circuit.n_paths,
        "path_names": list(circuit.path_names),
        "theta": circuit.theta,
        "rotator_slots": list(circuit.rotator_slots),
        "elements": [_element_to_dict(e) for e in circuit.elements],
    }


def circuit_from_dict(doc: dict) -> Circuit:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported circuit schema_version {doc.get('schema_version')!r}")
    try:
        elements = [_ELEMENT_TYPES[d["type"]](d) for d in doc["elements"]]
    except KeyError as exc:
        raise ConfigurationError(f"malformed element record: missing {exc}") from None
    return Circuit(doc["n_paths"], elements, doc.get("rotator_slots", ()), doc.get("theta", 0.0),
                   doc.get("path_names"))


def dumps(circuit: Circuit) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=1)


def loads(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))
