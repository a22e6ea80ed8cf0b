"""Truncated multimode Fock-space state algebra.

The basis enumerates photon-number occupation vectors ``(n_1, ..., n_M)``
with total ``sum(n) <= cutoff``, graded by total photon number and ordered
lexicographically inside each grade.  Grading matters: lossless
interferometers conserve total photon number, so on this ordering their
matrix representation is block diagonal and truncation introduces no error
for them at all.

States are dense Hermitian matrices over such a basis.  Every value here is
immutable after construction and every operation is a pure function, so the
whole module is safe for concurrent use.
"""

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    CapacityError,
    ContractViolation,
    PositivityError,
    TruncationError,
)

#: refuse to build bases larger than this unless the caller raises the limit
MAX_DIMENSION = 20_000


def _compositions(total, modes):
    """Occupation vectors of `modes` nonnegative ints summing to `total`.

    Yields tuples in ascending lexicographic order.
    """
    if modes == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, modes - 1):
            yield (head,) + rest


class FockBasis:
    """Graded occupation-number basis for ``modes`` modes, total photons <= ``cutoff``.

    Attributes:
        modes: number of optical modes M (>= 1)
        cutoff: maximum total photon number N (>= 0)
        occupations: int array of shape (dimension, modes); row i is the
            occupation vector of basis index i
        totals: int array, total photon number of each basis index
        block_slices: tuple of slices, one per total photon number; indices
            inside a block are contiguous
    """

    def __init__(self, modes: int, cutoff: int, max_dimension: int = MAX_DIMENSION):
        if modes < 1:
            raise ValueError(f"modes must be >= 1, got {modes}")
        if cutoff < 0:
            raise ValueError(f"cutoff must be >= 0, got {cutoff}")
        dim = math.comb(cutoff + modes, modes)
        if dim > max_dimension:
            raise CapacityError(
                f"basis dimension {dim} for {modes} modes at cutoff {cutoff} "
                f"exceeds the configured maximum {max_dimension}"
            )
        occs = []
        block_slices = []
        start = 0
        for n in range(cutoff + 1):
            block = list(_compositions(n, modes))
            occs.extend(block)
            block_slices.append(slice(start, start + len(block)))
            start += len(block)
        self.modes = modes
        self.cutoff = cutoff
        self.occupations = np.array(occs, dtype=np.int64).reshape(dim, modes)
        self.occupations.setflags(write=False)
        self.totals = self.occupations.sum(axis=1)
        self.totals.setflags(write=False)
        self.block_slices = tuple(block_slices)
        self._index = {occ: i for i, occ in enumerate(occs)}

    @property
    def dimension(self) -> int:
        return self.occupations.shape[0]

    def index_of(self, occupation) -> int:
        """Dense index of an occupation vector; raises if out of range."""
        key = tuple(int(n) for n in occupation)
        try:
            return self._index[key]
        except KeyError:
            raise CapacityError(
                f"occupation {key} not representable in basis "
                f"(modes={self.modes}, cutoff={self.cutoff})"
            ) from None

    def occupation_of(self, index: int) -> tuple:
        return tuple(int(n) for n in self.occupations[index])

    def block(self, total: int) -> slice:
        """Contiguous index range of the given total photon number."""
        return self.block_slices[total]

    def __eq__(self, other):
        return (
            isinstance(other, FockBasis)
            and self.modes == other.modes
            and self.cutoff == other.cutoff
        )

    def __hash__(self):
        return hash((self.modes, self.cutoff))

    def __repr__(self):
        return f"FockBasis(modes={self.modes}, cutoff={self.cutoff}, dim={self.dimension})"


def make_basis(modes: int, cutoff: int, max_dimension: int = MAX_DIMENSION) -> FockBasis:
    """Construct a graded FockBasis (see class docstring)."""
    return FockBasis(modes, cutoff, max_dimension=max_dimension)


class DensityMatrix:
    """Hermitian operator over a FockBasis.

    ``tail`` records the probability weight discarded by truncation while the
    state was built (coherent-state tails, tensor-product truncation, and the
    amplification of those by heralding).  It rides along through channels and
    measurements so that downstream feasibility checks can budget for it; a
    state assembled purely from finite-photon ingredients carries ``tail = 0``
    and is exact.

    ``normalized`` distinguishes unit-trace states from conditional
    intermediates whose trace equals an outcome probability.
    """

    def __init__(
        self,
        basis: FockBasis,
        elements,
        *,
        normalized: bool = True,
        tail: float = 0.0,
        tol: Tolerances = DEFAULT,
    ):
        elements = np.asarray(elements, dtype=complex)
        dim = basis.dimension
        if elements.shape != (dim, dim):
            raise ContractViolation(
                f"elements shape {elements.shape} does not match basis dimension {dim}"
            )
        scale = max(1.0, float(np.abs(elements).max())) if dim else 1.0
        herm_defect = float(np.abs(elements - elements.conj().T).max())
        if herm_defect > tol.hermiticity * scale:
            raise ContractViolation(
                f"matrix is not Hermitian: max |E - E^dag| = {herm_defect:.3e}"
            )
        elements = (elements + elements.conj().T) / 2.0
        trace = float(elements.trace().real)
        # recorded truncation weight is exactly the trace that may be missing
        if normalized and abs(trace - 1.0) > tol.unit_trace + tail:
            raise ContractViolation(
                f"normalized state must have unit trace, got {trace!r}"
            )
        elements.setflags(write=False)
        self.basis = basis
        self.elements = elements
        self.normalized = bool(normalized)
        self.tail = float(tail)

    @property
    def trace(self) -> float:
        return float(self.elements.trace().real)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def diagonal(self) -> np.ndarray:
        """Real diagonal (photon-number probabilities for a single mode)."""
        return self.elements.diagonal().real.copy()

    def total_photon_distribution(self) -> np.ndarray:
        """Probability of each total photon number 0..cutoff."""
        diag = self.diagonal()
        return np.array(
            [diag[sl].sum() for sl in self.basis.block_slices]
        )

    def numerical_support(self, tol: Tolerances = DEFAULT) -> int:
        """Largest total photon number carrying non-negligible weight.

        An index counts as occupied when any element in its row exceeds
        ``tol.support`` relative to the largest element of the matrix.
        """
        absval = np.abs(self.elements)
        if absval.size == 0:
            return 0
        thresh = tol.support * max(1.0, float(absval.max()))
        row_max = absval.max(axis=1)
        occupied = self.basis.totals[row_max > thresh]
        return int(occupied.max()) if occupied.size else 0

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.elements)[0])

    def is_positive(self, tol: Tolerances = DEFAULT) -> bool:
        return self.min_eigenvalue() >= -tol.psd * max(abs(self.trace), 1e-300)

    def __repr__(self):
        return (
            f"DensityMatrix({self.basis!r}, trace={self.trace:.6g}, "
            f"normalized={self.normalized}, tail={self.tail:.3g})"
        )


# --- source specifications -------------------------------------------------

@dataclass(frozen=True)
class Isps:
    """Single-photon source with vacuum admixture: (1-p)|0><0| + p|1><1|."""
    p: float


@dataclass(frozen=True)
class Coherent:
    """Coherent state of complex amplitude alpha."""
    alpha: complex


@dataclass(frozen=True)
class Fock:
    """Photon-number eigenstate |n><n|."""
    n: int


@dataclass(frozen=True)
class PartialQubit:
    """Zero/one-photon state with vacuum weight 1-p, photon weight p, coherence q."""
    p: float
    q: complex


SourceSpec = Isps | Coherent | Fock | PartialQubit


def coherent_tail_weight(alpha: complex, cutoff: int) -> float:
    """Probability weight of a coherent state beyond the cutoff.

    Summed termwise rather than as 1 - cdf so that tiny tails keep full
    relative precision.
    """
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 0.0
    # first omitted term, then the (rapidly convergent) remainder
    log_term = -lam + (cutoff + 1) * math.log(lam) - math.lgamma(cutoff + 2)
    term = math.exp(log_term)
    total = 0.0
    n = cutoff + 1
    while term > total * 1e-18 + 1e-300:
        total += term
        n += 1
        term *= lam / n
        if n > cutoff + 500:
            break
    return total


def make_state(
    spec: SourceSpec,
    basis: FockBasis,
    *,
    tail_tol: float | None = None,
    tol: Tolerances = DEFAULT,
) -> DensityMatrix:
    """Build a normalized single-mode state from a source specification.

    Coherent states are truncated at the basis cutoff, renormalized, and the
    discarded tail weight is recorded on the result; construction refuses when
    that tail exceeds ``tail_tol`` (default: ``tol.tail``).
    """
    if basis.modes != 1:
        raise ContractViolation(
            f"make_state requires a single-mode basis, got {basis.modes} modes"
        )
    if tail_tol is None:
        tail_tol = tol.tail
    dim = basis.dimension
    elements = np.zeros((dim, dim), dtype=complex)

    if isinstance(spec, Isps):
        if not 0.0 <= spec.p <= 1.0:
            raise PositivityError(f"source efficiency p={spec.p} outside [0, 1]")
        if spec.p > 0 and basis.cutoff < 1:
            raise CapacityError("cutoff 0 cannot hold a one-photon component")
        elements[0, 0] = 1.0 - spec.p
        if basis.cutoff >= 1:
            elements[1, 1] = spec.p
        return DensityMatrix(basis, elements, tol=tol)

    if isinstance(spec, Fock):
        if spec.n < 0:
            raise PositivityError(f"photon number n={spec.n} negative")
        if spec.n > basis.cutoff:
            raise CapacityError(
                f"Fock state n={spec.n} exceeds basis cutoff {basis.cutoff}"
            )
        elements[spec.n, spec.n] = 1.0
        return DensityMatrix(basis, elements, tol=tol)

    if isinstance(spec, PartialQubit):
        if not 0.0 <= spec.p <= 1.0:
            raise PositivityError(f"photon weight p={spec.p} outside [0, 1]")
        if abs(spec.q) ** 2 > spec.p * (1.0 - spec.p) + 1e-12:
            raise PositivityError(
                f"coherence |q|^2={abs(spec.q)**2:.6g} exceeds p(1-p)="
                f"{spec.p * (1 - spec.p):.6g}"
            )
        if spec.p > 0 and basis.cutoff < 1:
            raise CapacityError("cutoff 0 cannot hold a one-photon component")
        elements[0, 0] = 1.0 - spec.p
        if basis.cutoff >= 1:
            elements[1, 1] = spec.p
            elements[0, 1] = spec.q
            elements[1, 0] = np.conj(spec.q)
        return DensityMatrix(basis, elements, tol=tol)

    if isinstance(spec, Coherent):
        alpha = complex(spec.alpha)
        tail = coherent_tail_weight(alpha, basis.cutoff)
        if tail > tail_tol:
            raise TruncationError(
                f"coherent amplitude |alpha|={abs(alpha):.4g} leaves tail weight "
                f"{tail:.3e} beyond cutoff {basis.cutoff} (tolerance {tail_tol:.1e}); "
                f"raise the cutoff or loosen tail_tol"
            )
        amps = coherent_amplitudes(alpha, basis.cutoff)
        kept = float(np.vdot(amps, amps).real)
        elements = np.outer(amps, amps.conj()) / kept
        return DensityMatrix(basis, elements, tail=tail, tol=tol)

    raise ContractViolation(f"unknown source specification {spec!r}")


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Fock amplitudes exp(-|a|^2/2) a^n / sqrt(n!) for n = 0..cutoff."""
    n = np.arange(cutoff + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    mag = np.exp(-abs(alpha) ** 2 / 2.0 + n * np.log(abs(alpha) + 1e-300) - log_fact / 2.0)
    if abs(alpha) == 0.0:
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    phase = np.exp(1j * np.angle(alpha) * n)
    return mag * phase


# --- composite-state operations --------------------------------------------

def tensor(
    a: DensityMatrix,
    b: DensityMatrix,
    joint: FockBasis,
    *,
    tail_tol: float | None = None,
    tol: Tolerances = DEFAULT,
) -> DensityMatrix:
    """Tensor product embedded into a graded joint basis.

    Occupation pairs whose combined total exceeds the joint cutoff are
    truncated away.  The discarded weight is recorded on the result; if it
    exceeds ``tail_tol`` the operation refuses rather than silently
    renormalizing, because conditional-probability accounting downstream
    would be corrupted.
    """
    if joint.modes != a.basis.modes + b.basis.modes:
        raise ContractViolation(
            f"joint basis has {joint.modes} modes, factors have "
            f"{a.basis.modes}+{b.basis.modes}"
        )
    if joint.cutoff < max(a.basis.cutoff, b.basis.cutoff):
        raise ContractViolation(
            f"joint cutoff {joint.cutoff} below factor cutoffs "
            f"({a.basis.cutoff}, {b.basis.cutoff})"
        )
    if tail_tol is None:
        tail_tol = tol.tail
    da, db = a.basis.dimension, b.basis.dimension
    ia = np.repeat(np.arange(da), db)
    ib = np.tile(np.arange(db), da)
    totals = a.basis.totals[ia] + b.basis.totals[ib]
    kept = totals <= joint.cutoff
    discarded = float(
        (a.diagonal()[ia] * b.diagonal()[ib])[~kept].sum()
    )
    if discarded > tail_tol:
        raise TruncationError(
            f"tensor product would truncate weight {discarded:.6g} above joint "
            f"cutoff {joint.cutoff} (tolerance {tail_tol:.1e}); raise the cutoff"
        )
    occ = np.hstack([a.basis.occupations[ia][kept], b.basis.occupations[ib][kept]])
    jidx = np.array([joint.index_of(row) for row in occ], dtype=np.int64)
    kron = np.kron(a.elements, b.elements)
    flat_kept = np.flatnonzero(kept)
    elements = np.zeros((joint.dimension, joint.dimension), dtype=complex)
    elements[np.ix_(jidx, jidx)] = kron[np.ix_(flat_kept, flat_kept)]
    return DensityMatrix(
        joint,
        elements,
        normalized=a.normalized and b.normalized,
        tail=a.tail + b.tail + discarded,
        tol=tol,
    )


def tensor_all(
    states,
    joint: FockBasis,
    *,
    tail_tol: float | None = None,
    tol: Tolerances = DEFAULT,
) -> DensityMatrix:
    """Left-fold of ``tensor`` over a sequence of states."""
    states = list(states)
    if not states:
        raise ContractViolation("tensor_all needs at least one state")
    acc = states[0]
    modes = acc.basis.modes
    for nxt in states[1:]:
        modes += nxt.basis.modes
        target = joint if modes == joint.modes else FockBasis(modes, joint.cutoff)
        acc = tensor(acc, nxt, target, tail_tol=tail_tol, tol=tol)
    if acc.basis.modes != joint.modes:
        raise ContractViolation(
            f"states supply {acc.basis.modes} modes, joint basis expects {joint.modes}"
        )
    return acc


def partial_trace(rho: DensityMatrix, keep, *, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """Reduced state on the ``keep`` modes (0-based indices); trace preserved.

    Keeping every mode returns the input unchanged.
    """
    modes = rho.basis.modes
    keep = tuple(sorted(set(int(k) for k in keep)))
    if not keep:
        raise ContractViolation("keep must name at least one mode")
    if any(k < 0 or k >= modes for k in keep):
        raise ContractViolation(f"keep={keep} outside mode range 0..{modes - 1}")
    if len(keep) == modes:
        return rho
    traced = tuple(m for m in range(modes) if m not in keep)
    reduced = FockBasis(len(keep), rho.basis.cutoff)
    occ = rho.basis.occupations
    keep_idx = np.array(
        [reduced.index_of(row) for row in occ[:, keep]], dtype=np.int64
    )
    _, group = np.unique(occ[:, traced], axis=0, return_inverse=True)
    elements = np.zeros((reduced.dimension, reduced.dimension), dtype=complex)
    for g in range(group.max() + 1):
        sel = np.flatnonzero(group == g)
        elements[np.ix_(keep_idx[sel], keep_idx[sel])] += rho.elements[np.ix_(sel, sel)]
    return DensityMatrix(
        reduced, elements, normalized=rho.normalized, tail=rho.tail, tol=tol
    )


def min_eigenvalue(h, *, tol: Tolerances = DEFAULT) -> float:
    """Smallest eigenvalue of a Hermitian matrix.

    Accuracy follows the LAPACK Hermitian eigensolver: better than 1e-10
    relative to the largest absolute eigenvalue at the dimensions used here.
    """
    if isinstance(h, DensityMatrix):
        h = h.elements
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.abs(h).max())) if h.size else 1.0
    defect = float(np.abs(h - h.conj().T).max())
    if defect > tol.hermiticity * scale:
        raise ContractViolation(
            f"matrix is not Hermitian: max |H - H^dag| = {defect:.3e}"
        )
    return float(np.linalg.eigvalsh(h)[0])


def trace_distance(a, b) -> float:
    """Trace distance (1/2)*||a - b||_1 between Hermitian matrices or states."""
    if isinstance(a, DensityMatrix):
        a = a.elements
    if isinstance(b, DensityMatrix):
        b = b.elements
    delta = np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)
    return float(0.5 * np.abs(np.linalg.eigvalsh(delta)).sum())
