"""Photon-number-resolving detection and heralded conditional states.

Detection is modeled by ideal number projectors on a subset of modes; a mode
may instead be marked traced-out (count ``None``), which discards it without
reading a result, the standard stand-in for unmonitored loss or imperfect
mode matching.  Detector imperfections are not modeled here: compose a loss
channel in front of an ideal detector instead, which is equivalent.
"""

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import ContractViolation, HeraldImpossibleError
from .fock import DensityMatrix, FockBasis


class MeasurementPattern:
    """Outcome specification: photon count per detected mode.

    ``outcomes`` maps mode index -> photon count, or ``None`` for a mode that
    is discarded unmeasured.  At least one mode must be left untouched.
    """

    def __init__(self, outcomes: dict):
        items = []
        for mode, count in outcomes.items():
            mode = int(mode)
            if count is not None:
                count = int(count)
                if count < 0:
                    raise ContractViolation(f"negative photon count {count} on mode {mode}")
            items.append((mode, count))
        items.sort()
        modes = [m for m, _ in items]
        if len(set(modes)) != len(modes):
            raise ContractViolation(f"duplicate modes in pattern {outcomes!r}")
        self.outcomes = tuple(items)

    @property
    def modes(self) -> tuple:
        return tuple(m for m, _ in self.outcomes)

    @property
    def counted(self) -> tuple:
        return tuple((m, c) for m, c in self.outcomes if c is not None)

    @property
    def wildcards(self) -> tuple:
        return tuple(m for m, c in self.outcomes if c is None)

    def validate(self, basis: FockBasis) -> None:
        if any(m < 0 or m >= basis.modes for m in self.modes):
            raise ContractViolation(
                f"pattern modes {self.modes} outside range 0..{basis.modes - 1}"
            )
        if len(self.modes) >= basis.modes:
            raise ContractViolation(
                "pattern must leave at least one surviving mode"
            )

    def __repr__(self):
        return f"MeasurementPattern({dict(self.outcomes)!r})"


def _selection(rho: DensityMatrix, pattern: MeasurementPattern) -> np.ndarray:
    occ = rho.basis.occupations
    mask = np.ones(rho.basis.dimension, dtype=bool)
    for mode, count in pattern.counted:
        mask &= occ[:, mode] == count
    return mask


def outcome_probability(
    rho: DensityMatrix, pattern: MeasurementPattern, *, tol: Tolerances = DEFAULT
) -> float:
    """Probability of reading the pattern's counts (wildcards unrestricted)."""
    pattern.validate(rho.basis)
    return float(rho.diagonal()[_selection(rho, pattern)].sum())


def condition(
    rho: DensityMatrix, pattern: MeasurementPattern, *, tol: Tolerances = DEFAULT
):
    """Normalized state of the surviving modes given the outcome, plus its
    heralding probability.

    Projects the counted modes onto their photon numbers, traces out counted
    and wildcard modes, renormalizes by the outcome probability.  Outcomes
    below the herald floor raise rather than divide by almost-zero.
    """
    pattern.validate(rho.basis)
    prob = outcome_probability(rho, pattern, tol=tol)
    if prob < tol.herald_floor:
        raise HeraldImpossibleError(
            f"outcome probability {prob:.3e} is below the herald floor "
            f"{tol.herald_floor:.1e}"
        )
    sel = np.flatnonzero(_selection(rho, pattern))
    survivors = tuple(m for m in range(rho.basis.modes) if m not in pattern.modes)
    reduced = FockBasis(len(survivors), rho.basis.cutoff)
    occ = rho.basis.occupations
    keep_idx = np.array(
        [reduced.index_of(row) for row in occ[sel][:, survivors]], dtype=np.int64
    )
    wild = pattern.wildcards
    if wild:
        _, group = np.unique(occ[sel][:, wild], axis=0, return_inverse=True)
    else:
        group = np.zeros(sel.size, dtype=np.int64)
    elements = np.zeros((reduced.dimension, reduced.dimension), dtype=complex)
    for g in range(int(group.max()) + 1 if sel.size else 0):
        part = sel[group == g]
        ridx = keep_idx[group == g]
        elements[np.ix_(ridx, ridx)] += rho.elements[np.ix_(part, part)]
    elements /= prob
    out = DensityMatrix(
        reduced,
        elements,
        normalized=True,
        tail=rho.tail / prob if rho.tail else 0.0,
        tol=tol,
    )
    return out, prob


def single_photon_probability(rho: DensityMatrix) -> float:
    """Diagonal weight of the one-photon level of a single-mode state."""
    if rho.basis.modes != 1:
        raise ContractViolation("single_photon_probability requires a single-mode state")
    if rho.basis.cutoff < 1:
        return 0.0
    return float(rho.elements[1, 1].real)


def multiphoton_weight(rho: DensityMatrix) -> float:
    """Total diagonal weight on photon numbers >= 2 of a single-mode state."""
    if rho.basis.modes != 1:
        raise ContractViolation("multiphoton_weight requires a single-mode state")
    return float(rho.diagonal()[2:].sum())
