"""Builders for the interferometers studied here.

Wiring is documented in ``docs/wiring.md``.  Chained devices compose each
splitter as a sign flip on its second path followed by the splitter block,
so that every stage is a proper rotation by the splitter angle and the
amplitudes of successive stages add up coherently.
"""

from __future__ import annotations

import math

from .circuit import Absorber, BeamSplitter, Circuit, Mirror, Rotator
from .errors import ConfigurationError

INNER = 1.0 / math.sqrt(2.0)
NMZI_POSITIONS = (1, 2, 3, 4, 5)


def build_free_rotator(theta: float = 0.0) -> Circuit:
    """A lone rotator on a single path."""
    return Circuit(1, [Rotator(0)], rotator_slots=(0,), theta=theta, path_names=("D",))


def _nmzi_slot_path(position) -> tuple[int, int]:
    # (insertion point in the splitter sequence, path); insertion point i means
    # "after the i-th splitter".
    table = {1: (1, 0), 2: (1, 1), 4: (2, 1), 5: (2, 2), 3: (3, 1)}
    try:
        return table[int(position)]
    except (KeyError, ValueError, TypeError):
        raise ConfigurationError(f"rotator position must be one of {NMZI_POSITIONS}, got {position!r}") from None


def build_nmzi(r1: float, t1: float, r4: float, t4: float, rotator_position=None,
               theta: float = 0.0, absorber_position=None) -> Circuit:
    """Nested Mach-Zehnder interferometer on paths D1, D2, D3.

    Positions: 1 and 2 are the outer arms right after the first splitter
    (1 is the arm that bypasses the inner interferometer), 4 and 5 are the
    two inner arms, 3 is the inner output arm feeding the last splitter.
    ``absorber_position`` blocks one of those arms; if it coincides with
    the rotator, the rotator acts first.
    """
    splitters = [
        BeamSplitter(0, 1, r1, t1),
        BeamSplitter(1, 2, INNER, INNER),
        BeamSplitter(2, 1, INNER, INNER),
        BeamSplitter(1, 0, r4, t4),
    ]
    inserts: dict[int, list] = {1: [], 2: [], 3: []}
    slot_marker = object()
    if rotator_position not in (None, "none"):
        where, path = _nmzi_slot_path(rotator_position)
        inserts[where].append(slot_marker)
        rot_path = path
    if absorber_position not in (None, "none"):
        where, path = _nmzi_slot_path(absorber_position)
        inserts[where].append(Absorber(path))
    elements, slots = [], []
    for i, bs in enumerate(splitters):
        elements.append(bs)
        for item in inserts.get(i + 1, []):
            if item is slot_marker:
                slots.append(len(elements))
                elements.append(Rotator(rot_path))
            else:
                elements.append(item)
    # Output sign convention: both outer output ports carry a pi phase.
    elements += [Mirror(0), Mirror(1)]
    return Circuit(3, elements, slots, theta, ("D1", "D2", "D3"))


def build_protocol_nmzi(t1: float, bit: int, theta: float = 0.0) -> Circuit:
    """Single-device communication set-up: r4 = t1, t4 = r1, Bob's arm is position 4.

    Bit 0 leaves Bob's arm open with the weak rotator in it.  Bit 1 blocks the
    arm right after the rotator, so nothing that met the rotator reaches Alice.
    """
    if bit not in (0, 1):
        raise ConfigurationError(f"bit must be 0 or 1, got {bit!r}")
    if not 0.0 <= t1 <= 1.0:
        raise ConfigurationError(f"t1 must lie in [0, 1], got {t1}")
    r1 = math.sqrt(1.0 - t1 * t1)
    return build_nmzi(r1, t1, t1, r1, rotator_position=4, theta=theta,
                      absorber_position=4 if bit == 1 else None)


def nmzi_cosine_family(r1: float, t1: float, r4: float, t4: float, rotator_position):
    """Map ``v`` in [-1, 1] to the NMZI whose rotator has diagonal entry ``v``.

    The rotator's off-diagonal entry is ``sqrt(1 - v**2)``; negative ``v``
    is realized as a rotator by ``-sqrt(1 - v**2)`` followed by a sign flip.
    Used to integrate over a prior that is uniform in the diagonal entry.
    """
    base = build_nmzi(r1, t1, r4, t4, rotator_position)
    (slot,) = base.rotator_slots
    path = base.elements[slot].path

    def family(v: float) -> Circuit:
        off = math.sqrt(max(0.0, 1.0 - v * v))
        patch = [Rotator(path, off)] if v >= 0 else [Rotator(path, -off), Mirror(path)]
        elements = list(base.elements[:slot]) + patch + list(base.elements[slot + 1:])
        return Circuit(base.n_paths, elements, (), 0.0, base.path_names)

    return family


def _chain_t(n: int) -> float:
    if n < 1:
        raise ConfigurationError(f"chain length must be >= 1, got {n}")
    return math.sin(math.pi / (2 * n))


def _rotation(a: int, b: int, t: float) -> list:
    # Mirror then splitter: (x, y) -> (r x - t y, t x + r y).
    return [Mirror(b), BeamSplitter.from_t(a, b, t)]


def build_cmzi(N: int, bob_blocked: bool = False, tag_bob: bool = False, theta: float = 0.0) -> Circuit:
    """Chain of ``N`` splitters between Alice's path A (-> D1) and Bob's path B (-> D2).

    Blocked: an absorber on B after every splitter.  Tagged: a bound rotator
    on B in each of the ``N - 1`` segments between consecutive splitters.
    """
    t = _chain_t(N)
    elements, slots = [], []
    for n in range(1, N + 1):
        elements += _rotation(0, 1, t)
        if bob_blocked:
            elements.append(Absorber(1))
        if tag_bob and n < N:
            slots.append(len(elements))
            elements.append(Rotator(1))
    return Circuit(2, elements, slots, theta, ("D1", "D2"))


def build_chained_nmzi(N: int, M: int, bob_blocked: bool = False, tag_inner: bool = False,
                       theta: float = 0.0, tag_mode: str = "inner_mzi") -> Circuit:
    """Chained nested interferometer.

    Alice's outer chain of ``N`` splitters acts on paths A (-> D1) and
    T (-> D2).  Between consecutive outer splitters, path T runs through an
    inner chain of ``M`` splitters coupling it to a fresh Bob path ``B<n>``;
    the ``N - 1`` Bob paths exit to their own detectors.

    Blocked: an absorber on the Bob path after every inner splitter.
    Tagged: with ``tag_mode="inner_mzi"`` one bound rotator in each of the
    ``M - 1`` Bob segments between inner splitters; ``"segment"`` also tags
    the exit segment after the last inner splitter.
    """
    if tag_mode not in ("inner_mzi", "segment"):
        raise ConfigurationError(f"unknown tag_mode {tag_mode!r}")
    tn, tm = _chain_t(N), _chain_t(M)
    n_paths = 2 + (N - 1)
    elements, slots = [], []
    for n in range(1, N + 1):
        elements += _rotation(0, 1, tn)
        if n == N:
            break
        b = 1 + n
        for m in range(1, M + 1):
            elements += _rotation(1, b, tm)
            if bob_blocked:
                elements.append(Absorber(b))
            if tag_inner and (m < M or tag_mode == "segment"):
                slots.append(len(elements))
                elements.append(Rotator(b))
    names = ("D1", "D2") + tuple(f"B{n}" for n in range(1, N))
    return Circuit(n_paths, elements, slots, theta, names)
