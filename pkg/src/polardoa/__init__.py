"""Robust 2-D DOA estimation for one polarized source on a 4-dipole circular array."""

__version__ = "0.1.0"

from .detection import (EventDecision, PowerReport, ThresholdConfig, classify, decide,
                        measured_power, measured_powers, noncentrality, prob_h0_given_omega1,
                        prob_identify_event1, prob_identify_event2, threshold)
from .errors import ConvergenceError, DegenerateDataError, DoaError, UnsupportedCombinationError
from .estimators import (DoaEstimate, MusicGrid, PhasePair, baseline_music, cf_estimate,
                         cmusic_method1, cmusic_method2, estimate, f_matrix, phases_event1,
                         phases_event2)
from .model import (ArrayConfig, FieldComponents, SnapshotSet, SourceParams, SteeringVector,
                    canonical_alignment, element_voltage, field_components, steering_vector,
                    synthesize, validate_alignment)

__all__ = [
    "ArrayConfig",
    "ConvergenceError",
    "DegenerateDataError",
    "DoaError",
    "DoaEstimate",
    "EventDecision",
    "FieldComponents",
    "MusicGrid",
    "PhasePair",
    "PowerReport",
    "SnapshotSet",
    "SourceParams",
    "SteeringVector",
    "ThresholdConfig",
    "UnsupportedCombinationError",
    "baseline_music",
    "canonical_alignment",
    "cf_estimate",
    "classify",
    "cmusic_method1",
    "cmusic_method2",
    "decide",
    "element_voltage",
    "estimate",
    "f_matrix",
    "field_components",
    "measured_power",
    "measured_powers",
    "noncentrality",
    "phases_event1",
    "phases_event2",
    "prob_h0_given_omega1",
    "prob_identify_event1",
    "prob_identify_event2",
    "steering_vector",
    "synthesize",
    "threshold",
    "validate_alignment",
]
