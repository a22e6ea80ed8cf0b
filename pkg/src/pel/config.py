"""Numerical tolerances shared across the library.

All tolerance constants live in one record so that code and tests agree on
a single source of truth.  Operations accept an optional ``Tolerances``
instance; the module-level ``DEFAULT`` is used when none is given.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    #: absolute entrywise Hermiticity slack (scaled by the matrix magnitude)
    hermiticity: float = 1e-12
    #: minimum-eigenvalue slack for state validity checks, as a fraction of trace
    psd: float = 1e-10
    #: truncation tail weight above which state construction refuses
    tail: float = 1e-10
    #: heralding outcomes rarer than this are treated as impossible
    herald_floor: float = 1e-12
    #: allowed deviation of the trace from one for normalized states
    unit_trace: float = 1e-10
    #: occupation weight below which a photon-number level counts as empty
    support: float = 1e-13
    #: maximum back-substitution amplification allowed when inverting loss
    conditioning: float = 1e12
    #: minimum-eigenvalue slack used by the loss-feasibility test
    #: (deliberately looser than ``psd`` so verdicts do not flap)
    feasibility: float = 1e-9

    def with_tail(self, tail: float) -> "Tolerances":
        return replace(self, tail=tail)


DEFAULT = Tolerances()
