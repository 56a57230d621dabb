"""Single-photon polarized interferometer simulation with information measures."""

from .circuit import (Absorber, BeamSplitter, Circuit, Mirror, PolarizedState, Rotator,
                      derivative_state, evolve, presence_amplitude, scattering_matrix)
from .devices import build_chained_nmzi, build_cmzi, build_free_rotator, build_nmzi
from .info import InfoResult, OutcomeDistribution, PriorSpec, fisher, outcome_probs, shannon_mi

__all__ = [
    "Absorber", "BeamSplitter", "Circuit", "Mirror", "PolarizedState", "Rotator",
    "derivative_state", "evolve", "presence_amplitude", "scattering_matrix",
    "build_chained_nmzi", "build_cmzi", "build_free_rotator", "build_nmzi",
    "InfoResult", "OutcomeDistribution", "PriorSpec", "fisher", "outcome_probs", "shannon_mi",
]
