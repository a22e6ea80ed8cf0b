"""Photon-loss channels in four interchangeable representations.

The transmissivity-p loss channel acts independently per mode.  It is
available as

* a Kraus map (``apply_loss``), the workhorse;
* a Bernoulli redistribution of the photon-number diagonal
  (``bernoulli_diagonal``), a direct-summation cross-check;
* a fixed-step integration of the damping master equation
  (``apply_loss_lindblad``), kept permanently as an independent oracle for
  the Kraus implementation;
* a restricted inverse (``invert_loss``), exact back-substitution from the
  top photon-number grade downward.

The inverse is exact for states supported inside the cutoff: a loss channel
with p > 0 cannot map weight from above photon number n to below it without
leaving a trace in between (each Kraus term lowers the photon number by
exactly its loss count, and the zero-loss term keeps the top grade with
positive weight p^n), so the truncated preimage coincides with the
infinite-dimensional one.  The preimage is generally *not* positive
semidefinite; that indefiniteness is precisely the infeasibility signal used
by the efficiency module.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import ConditioningError, ContractViolation
from .fock import DensityMatrix, FockBasis


@dataclass(frozen=True)
class LossChannel:
    """Equal transmissivity ``p`` applied to ``modes`` (None = every mode)."""

    p: float
    modes: tuple | None = None

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ContractViolation(f"transmissivity p={self.p} outside (0, 1]")
        if self.modes is not None:
            object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))

    def acted_modes(self, total_modes: int) -> tuple:
        if self.modes is None:
            return tuple(range(total_modes))
        if any(m < 0 or m >= total_modes for m in self.modes):
            raise ContractViolation(
                f"channel modes {self.modes} outside range 0..{total_modes - 1}"
            )
        return self.modes


@dataclass(frozen=True)
class LindbladParams:
    """Damping-evolution parameters: rate ``kappa`` over duration ``t0``.

    The reached transmissivity is exp(-kappa * t0).  ``steps`` counts the
    fixed integrator steps.
    """

    kappa: float
    t0: float
    steps: int

    @classmethod
    def for_transmissivity(cls, p: float, cutoff: int, steps: int | None = None):
        """Choose kappa*t0 = -ln(p) and a step count meeting the error target.

        The step rule keeps (kappa*t0*(cutoff+1)/steps)^4 * kappa*t0 below
        1e-9; the cutoff factor accounts for the fastest decaying level.
        """
        if not 0.0 < p <= 1.0:
            raise ContractViolation(f"transmissivity p={p} outside (0, 1]")
        kt = -math.log(p)
        if steps is None:
            base = ((kt * (cutoff + 1)) ** 5 / 1e-9) ** 0.25 if kt > 0 else 0.0
            steps = max(64, int(math.ceil(1.3 * base)))
        return cls(kappa=1.0, t0=kt, steps=steps)


@lru_cache(maxsize=256)
def _lowering_map(basis: FockBasis, mode: int) -> np.ndarray:
    """index -> index of (occupation - e_mode), or -1 where empty."""
    occ = basis.occupations
    out = np.full(basis.dimension, -1, dtype=np.int64)
    for i in range(basis.dimension):
        if occ[i, mode] > 0:
            row = occ[i].copy()
            row[mode] -= 1
            out[i] = basis.index_of(row)
    return out


def kraus_operators(p: float, levels: int) -> list:
    """Single-mode Kraus family {K_l} for transmissivity p on ``levels`` levels.

    <n-l| K_l |n> = sqrt(C(n, l)) * p^((n-l)/2) * (1-p)^(l/2).
    """
    if not 0.0 < p <= 1.0:
        raise ContractViolation(f"transmissivity p={p} outside (0, 1]")
    ops = []
    for l in range(levels):
        K = np.zeros((levels, levels), dtype=complex)
        for n in range(l, levels):
            K[n - l, n] = math.sqrt(math.comb(n, l)) * p ** ((n - l) / 2.0) * (
                (1.0 - p) ** (l / 2.0)
            )
        ops.append(K)
    return ops


def _apply_loss_mode(elements: np.ndarray, basis: FockBasis, mode: int, p: float) -> np.ndarray:
    occ_k = basis.occupations[:, mode]
    lower = _lowering_map(basis, mode)
    out = np.zeros_like(elements)
    sel = np.arange(basis.dimension)
    tgt = sel.copy()
    for l in range(basis.cutoff + 1):
        if l > 0:
            keep = occ_k[sel] >= l
            sel = sel[keep]
            tgt = lower[tgt[keep]]
            if sel.size == 0:
                break
        n = occ_k[sel]
        amp = np.sqrt([math.comb(int(v), l) for v in n]) * p ** ((n - l) / 2.0) * (
            (1.0 - p) ** (l / 2.0)
        )
        out[np.ix_(tgt, tgt)] += np.outer(amp, amp.conj()) * elements[np.ix_(sel, sel)]
    return out


def apply_loss(rho: DensityMatrix, ch: LossChannel, *, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """Apply the loss channel mode by mode (single-mode channels on distinct
    modes commute, so the order is irrelevant)."""
    elements = rho.elements
    for mode in ch.acted_modes(rho.basis.modes):
        elements = _apply_loss_mode(elements, rho.basis, mode, ch.p)
    return DensityMatrix(
        rho.basis, elements, normalized=rho.normalized, tail=rho.tail, tol=tol
    )


def bernoulli_diagonal(diag: np.ndarray, p: float) -> np.ndarray:
    """Single-mode diagonal action: out[n] = sum_m p^n (1-p)^(m-n) C(m,n) diag[m]."""
    diag = np.asarray(diag, dtype=float)
    levels = diag.shape[0]
    out = np.zeros(levels)
    for n in range(levels):
        for m in range(n, levels):
            out[n] += p**n * (1.0 - p) ** (m - n) * math.comb(m, n) * diag[m]
    return out


def _lindblad_rhs(rho: np.ndarray, basis: FockBasis, modes: tuple, kappa: float) -> np.ndarray:
    out = np.zeros_like(rho)
    nvec = np.zeros(basis.dimension)
    for mode in modes:
        occ_k = basis.occupations[:, mode]
        lower = _lowering_map(basis, mode)
        sel = np.flatnonzero(occ_k > 0)
        tgt = lower[sel]
        amp = np.sqrt(occ_k[sel].astype(float))
        # a rho a^dag term
        out[np.ix_(tgt, tgt)] += np.outer(amp, amp) * rho[np.ix_(sel, sel)]
        nvec += occ_k
    # -(N rho + rho N)/2 with N the summed number operator over acted modes
    out -= 0.5 * (nvec[:, None] + nvec[None, :]) * rho
    return kappa * out


def apply_loss_lindblad(
    rho: DensityMatrix,
    params: LindbladParams,
    modes: tuple | None = None,
    *,
    tol: Tolerances = DEFAULT,
) -> DensityMatrix:
    """Integrate the damping master equation with classical fixed-step RK4.

    Exists as the independent oracle for ``apply_loss``; at
    p = exp(-kappa*t0) the two must agree to 1e-7 entrywise.  A step count too
    small for the 1e-8 error target triggers a warning rather than an error.
    """
    basis = rho.basis
    acted = tuple(range(basis.modes)) if modes is None else tuple(modes)
    kt = params.kappa * params.t0
    if kt == 0.0:
        return rho
    est = (kt * (basis.cutoff + 1) / params.steps) ** 4 * kt
    if est > 1e-8:
        warnings.warn(
            f"Lindblad step count {params.steps} gives error estimate {est:.2e} "
            f"above 1e-8; increase steps",
            stacklevel=2,
        )
    h = params.t0 / params.steps
    state = rho.elements.astype(complex)
    for _ in range(params.steps):
        k1 = _lindblad_rhs(state, basis, acted, params.kappa)
        k2 = _lindblad_rhs(state + 0.5 * h * k1, basis, acted, params.kappa)
        k3 = _lindblad_rhs(state + 0.5 * h * k2, basis, acted, params.kappa)
        k4 = _lindblad_rhs(state + h * k3, basis, acted, params.kappa)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    state = (state + state.conj().T) / 2.0
    return DensityMatrix(
        basis, state, normalized=rho.normalized, tail=rho.tail, tol=tol
    )


@lru_cache(maxsize=256)
def _raising_map(basis: FockBasis, mode: int) -> np.ndarray:
    """index -> index of (occupation + e_mode), or -1 beyond the cutoff."""
    occ = basis.occupations
    out = np.full(basis.dimension, -1, dtype=np.int64)
    for i in range(basis.dimension):
        row = occ[i].copy()
        row[mode] += 1
        if row.sum() <= basis.cutoff:
            out[i] = basis.index_of(row)
    return out


def _invert_loss_mode(elements: np.ndarray, basis: FockBasis, mode: int, p: float) -> np.ndarray:
    occ_k = basis.occupations[:, mode]
    raise_map = _raising_map(basis, mode)
    dim = basis.dimension
    out = np.zeros_like(elements)
    order = np.argsort(occ_k[:, None] + occ_k[None, :], axis=None)[::-1]
    rows, cols = np.unravel_index(order, (dim, dim))
    for i, j in zip(rows, cols):
        m, n = int(occ_k[i]), int(occ_k[j])
        acc = elements[i, j]
        ii, jj = i, j
        for l in range(1, basis.cutoff + 1):
            ii = raise_map[ii] if ii >= 0 else -1
            jj = raise_map[jj] if jj >= 0 else -1
            if ii < 0 or jj < 0:
                break
            coeff = (
                math.sqrt(math.comb(m + l, l) * math.comb(n + l, l))
                * p ** ((m + n) / 2.0)
                * (1.0 - p) ** l
            )
            acc -= coeff * out[ii, jj]
        out[i, j] = acc / p ** ((m + n) / 2.0)
    return out


def invert_loss(
    rho: DensityMatrix, ch: LossChannel, *, tol: Tolerances = DEFAULT
) -> np.ndarray:
    """Unique trace-preserving Hermitian preimage of ``rho`` under the channel.

    Solved by back-substitution from the top photon-number grade downward;
    the result is exact for states supported inside the cutoff but NOT
    guaranteed positive semidefinite.  Elements above the state's numerical
    support are treated as exact zeros so float dust is not amplified.

    Raises ConditioningError when p^(-support) exceeds the configured
    amplification bound: beyond it the back-substituted values carry no
    trustworthy sign information.
    """
    p = ch.p
    support = rho.numerical_support(tol)
    if support > 0 and p ** (-support) > tol.conditioning * (1.0 + 1e-9):
        raise ConditioningError(
            f"inverting loss p={p:.6g} on a support-{support} state amplifies by "
            f"p^-{support} = {p**-support:.3e}, beyond the trusted bound "
            f"{tol.conditioning:.1e}"
        )
    elements = rho.elements.copy()
    junk = rho.basis.totals > support
    elements[junk, :] = 0.0
    elements[:, junk] = 0.0
    for mode in ch.acted_modes(rho.basis.modes):
        elements = _invert_loss_mode(elements, rho.basis, mode, p)
    return (elements + elements.conj().T) / 2.0
