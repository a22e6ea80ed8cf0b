"""Stress tests of the no-go bounds on heralded single-photon enhancement.

``maximize_X`` searches over interferometer settings, coherent-ancilla
amplitudes and heralding outcomes for the largest single-photon probability X
in the surviving mode.  The relevant ceiling is the best source efficiency
p_max when multiphoton output components are forbidden, and max(p_max, 1/2)
when they are allowed; a search result above the ceiling (plus float slack)
sets the ``violated`` flag, which should never happen.  The optimizer
(random restarts refined by coordinate-wise golden sections) is a probe, not
a proof: it can only ever demonstrate tightness, never validity.

``verify_commutation`` checks the enabling lemma directly: equal loss on all
modes commutes with any interferometer.  With unequal loss it does not, and
``unequal_loss_counterexample`` shows the test has the power to notice.

Scheme evaluation walks the 2^S mixture branches of the source states as
pure vectors through the mesh, which keeps a single evaluation cheap enough
for tens of thousands of them per search cell.  Heralded quantities for an
outcome with total detected count d are exact whenever d plus the surviving
photon number fits under the cutoff; the only truncation effect is a missing
high-photon contribution to the herald probability, bounded by the recorded
input tail and reported with each result.
"""

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channels import LossChannel, apply_loss
from .config import DEFAULT, Tolerances
from .errors import ArityError, ContractViolation, HeraldImpossibleError
from .fock import (
    Coherent,
    DensityMatrix,
    FockBasis,
    Isps,
    coherent_amplitudes,
    make_basis,
    make_state,
    tensor_all,
    trace_distance,
)
from .interferometer import (
    apply_interferometer,
    apply_mesh_to_vectors,
    haar_random,
    mesh_param_count,
)

#: float slack separating genuine bound violations from rounding noise
BOUND_SLACK = 1e-6


def _poisson_tail(lam: float, above: int) -> float:
    """P(Poisson(lam) > above)."""
    if lam <= 0.0:
        return 0.0
    total = 0.0
    log_term = -lam + (above + 1) * math.log(lam) - math.lgamma(above + 2)
    term = math.exp(log_term)
    n = above + 1
    while term > total * 1e-18 + 1e-300:
        total += term
        n += 1
        term *= lam / n
        if n > above + 500:
            break
    return total


def default_cutoff(num_sources: int, num_coherent: int, amplitude_cap: float) -> int:
    """Smallest cutoff keeping the worst-case coherent tail below 1e-12."""
    if num_coherent == 0:
        return max(num_sources, 1)
    lam = num_coherent * amplitude_cap**2
    extra = 1
    while _poisson_tail(lam, extra) > 1e-12:
        extra += 1
    return num_sources + extra


@dataclass(frozen=True)
class SearchSpace:
    """Scheme family searched over: ISPS sources, coherent ancillas, a full
    rectangular mesh, and photon-count heralding on all modes but mode 0."""

    source_efficiencies: tuple
    num_coherent: int = 1
    #: None picks default_cutoff()
    cutoff: int | None = None
    #: coherent amplitudes are confined to |alpha| <= amplitude_cap
    amplitude_cap: float = 1.0
    #: multiphoton-weight threshold for the constrained regime; None = unconstrained
    constraint: float | None = None
    #: heralding outcomes below this probability are not ranked
    min_herald: float = 1e-5
    #: per-evaluation cap on ranked heralding outcomes
    max_patterns: int = 200
    #: explicit outcomes to scan (counts per detected mode); None = all
    patterns: tuple | None = None

    def __post_init__(self):
        eff = tuple(float(p) for p in self.source_efficiencies)
        if not eff:
            raise ContractViolation("at least one source is required")
        if any(p < 0.0 or p > 1.0 for p in eff):
            raise ContractViolation(f"source efficiencies {eff} outside [0, 1]")
        object.__setattr__(self, "source_efficiencies", eff)
        if self.num_coherent < 0:
            raise ContractViolation("num_coherent must be >= 0")
        if self.modes < 2:
            raise ContractViolation(
                "the scheme needs at least two modes (one surviving, one detected)"
            )
        if self.amplitude_cap <= 0.0:
            raise ContractViolation("amplitude_cap must be positive")
        if self.patterns is not None:
            cleaned = tuple(
                tuple(int(v) for v in pattern) for pattern in self.patterns
            )
            if not cleaned:
                raise ContractViolation("patterns, when given, must be nonempty")
            if any(len(p) != self.modes - 1 or min(p) < 0 for p in cleaned):
                raise ContractViolation(
                    f"each pattern needs {self.modes - 1} nonnegative counts"
                )
            object.__setattr__(self, "patterns", cleaned)

    @property
    def num_sources(self) -> int:
        return len(self.source_efficiencies)

    @property
    def modes(self) -> int:
        return self.num_sources + self.num_coherent

    @property
    def p_max(self) -> float:
        return max(self.source_efficiencies)

    @property
    def cutoff_used(self) -> int:
        if self.cutoff is not None:
            return self.cutoff
        return default_cutoff(self.num_sources, self.num_coherent, self.amplitude_cap)

    @property
    def bound(self) -> float:
        """The applicable theoretical ceiling on X."""
        if self.constraint is not None:
            return self.p_max
        return max(self.p_max, 0.5)

    def parameter_count(self) -> int:
        return mesh_param_count(self.modes) + 2 * self.num_coherent


@dataclass(frozen=True)
class SearchReport:
    best_X: float
    best_params: tuple
    best_pattern: tuple
    herald_probability: float
    multiphoton_weight: float
    bound: float
    violated: bool
    evaluations: int
    cutoff_used: int
    truncation_weight: float


class _SchemeEngine:
    """Precomputed index machinery for one SearchSpace."""

    def __init__(self, space: SearchSpace):
        self.space = space
        self.basis = make_basis(space.modes, space.cutoff_used)
        occ = self.basis.occupations
        S = space.num_sources
        branch_weights = []
        branch_indices = []
        src = occ[:, :S]
        for fired in itertools.product((0, 1), repeat=S):
            w = 1.0
            for bit, p in zip(fired, space.source_efficiencies):
                w *= p if bit else 1.0 - p
            branch_weights.append(w)
            branch_indices.append(np.flatnonzero((src == fired).all(axis=1)))
        self.branch_weights = np.array(branch_weights)
        self.branch_indices = branch_indices
        detected = occ[:, 1:]
        self.patterns, inverse = np.unique(detected, axis=0, return_inverse=True)
        self.pattern_index = {tuple(int(v) for v in row): i
                              for i, row in enumerate(self.patterns)}
        if space.patterns is None:
            self.scan_mask = None
        else:
            self.scan_mask = np.zeros(self.patterns.shape[0], dtype=bool)
            for pattern in space.patterns:
                index = self.pattern_index.get(pattern)
                if index is not None:
                    self.scan_mask[index] = True
            if not self.scan_mask.any():
                raise ContractViolation(
                    "none of the requested heralding patterns fits under the cutoff"
                )
        self.levels = self.basis.cutoff + 1
        self.flat_bins = inverse * self.levels + occ[:, 0]
        self.num_patterns = self.patterns.shape[0]
        self.coherent_columns = [occ[:, S + j] for j in range(space.num_coherent)]
        self.mesh_len = mesh_param_count(space.modes)
        worst_tail = _poisson_tail(
            space.num_coherent * space.amplitude_cap**2,
            space.cutoff_used - space.num_sources,
        )
        if worst_tail > BOUND_SLACK * space.min_herald:
            warnings.warn(
                f"cutoff {space.cutoff_used} allows truncation weight "
                f"{worst_tail:.2e}, which heralding at min_herald="
                f"{space.min_herald:.1e} can amplify past the bound slack; "
                f"raise the cutoff",
                stacklevel=3,
            )

    def split_params(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape[0] != self.space.parameter_count():
            raise ArityError(
                f"scheme expects {self.space.parameter_count()} parameters "
                f"({self.mesh_len} mesh + {2 * self.space.num_coherent} amplitude), "
                f"got {params.shape[0]}"
            )
        mesh = params[: self.mesh_len]
        amp = params[self.mesh_len:]
        alphas = [complex(amp[2 * j], amp[2 * j + 1])
                  for j in range(self.space.num_coherent)]
        return mesh, alphas

    def input_vectors(self, alphas):
        """Branch vectors (dimension, branches) and exact truncation weight."""
        dim = self.basis.dimension
        coherent_part = np.ones(dim, dtype=complex)
        for column, alpha in zip(self.coherent_columns, alphas):
            coherent_part = coherent_part * coherent_amplitudes(alpha, self.basis.cutoff)[column]
        vectors = np.zeros((dim, len(self.branch_indices)), dtype=complex)
        for b, idx in enumerate(self.branch_indices):
            vectors[idx, b] = coherent_part[idx]
        kept = (np.abs(vectors) ** 2).sum(axis=0) @ self.branch_weights
        return vectors, max(0.0, 1.0 - float(kept))

    def outcome_table(self, params):
        """Per-pattern herald probability, one-photon weight, multiphoton
        weight (unnormalized), and the input truncation weight."""
        mesh, alphas = self.split_params(params)
        for alpha in alphas:
            if abs(alpha) > self.space.amplitude_cap * (1.0 + 1e-9):
                raise ContractViolation(
                    f"|alpha| = {abs(alpha):.4g} exceeds the amplitude cap "
                    f"{self.space.amplitude_cap}"
                )
        vectors, tail = self.input_vectors(alphas)
        apply_mesh_to_vectors(vectors, mesh, self.space.modes, self.basis)
        weights = (np.abs(vectors) ** 2) @ self.branch_weights
        table = np.bincount(
            self.flat_bins, weights=weights, minlength=self.num_patterns * self.levels
        ).reshape(self.num_patterns, self.levels)
        herald = table.sum(axis=1)
        one = table[:, 1] if self.levels > 1 else np.zeros(self.num_patterns)
        multi = table[:, 2:].sum(axis=1) if self.levels > 2 else np.zeros(self.num_patterns)
        return herald, one, multi, tail


@lru_cache(maxsize=32)
def _engine(space: SearchSpace) -> _SchemeEngine:
    return _SchemeEngine(space)


def evaluate_scheme(space: SearchSpace, params, pattern):
    """Single-photon probability X, herald probability, and multiphoton weight
    of the surviving mode for one parameter vector and heralding outcome."""
    engine = _engine(space)
    pattern = tuple(int(v) for v in pattern)
    if len(pattern) != space.modes - 1:
        raise ContractViolation(
            f"pattern must give counts for the {space.modes - 1} detected modes"
        )
    herald, one, multi, _ = engine.outcome_table(params)
    index = engine.pattern_index.get(pattern)
    prob = float(herald[index]) if index is not None else 0.0
    if prob < DEFAULT.herald_floor:
        raise HeraldImpossibleError(
            f"outcome {pattern}: probability {prob:.3e} below the herald floor"
        )
    return float(one[index]) / prob, prob, float(multi[index]) / prob


def _golden_max(fun, lo, hi, evals):
    """Deterministic golden-section maximization; returns the best sampled x."""
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - ratio * (hi - lo)
    x2 = lo + ratio * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for _ in range(evals - 2):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + ratio * (hi - lo)
            f2 = fun(x2)
            if f2 > best_f:
                best_x, best_f = x2, f2
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - ratio * (hi - lo)
            f1 = fun(x1)
            if f1 > best_f:
                best_x, best_f = x1, f1
    return best_x, best_f


_GOLDEN_EVALS = 12
_REFINE_PASSES = 2


def _restart_cost(space: SearchSpace) -> int:
    n_rot = space.modes * (space.modes - 1) // 2
    refine = 2 * n_rot + 2 * space.num_coherent
    return 1 + _REFINE_PASSES * refine * _GOLDEN_EVALS


def _run_restart(space: SearchSpace, seed: int, restart: int):
    """One random start plus coordinate refinement; deterministic in
    (space, seed, restart)."""
    engine = _engine(space)
    rng = np.random.default_rng((seed, restart))
    n_rot = space.modes * (space.modes - 1) // 2
    amp_box = space.amplitude_cap / math.sqrt(2.0)
    params = np.zeros(space.parameter_count())
    params[: 2 * n_rot] = rng.uniform(-math.pi, math.pi, size=2 * n_rot)
    amp_lo = engine.mesh_len
    params[amp_lo:] = rng.uniform(-amp_box, amp_box, size=2 * space.num_coherent)

    def objective(vec):
        herald, one, multi, _ = engine.outcome_table(vec)
        eligible = herald >= space.min_herald
        if engine.scan_mask is not None:
            eligible &= engine.scan_mask
        if eligible.sum() > space.max_patterns:
            order = np.argsort(herald)[::-1]
            keep = order[: space.max_patterns]
            mask = np.zeros_like(eligible)
            mask[keep] = True
            eligible &= mask
        if not eligible.any():
            return -2.0, None
        x_ratio = np.where(eligible, one / np.maximum(herald, 1e-300), -1.0)
        if space.constraint is not None:
            multi_ratio = np.where(
                eligible, multi / np.maximum(herald, 1e-300), np.inf
            )
            valid = eligible & (multi_ratio <= space.constraint)
            if not valid.any():
                # no feasible outcome: drive the least multiphoton weight down
                return -1.0 - float(multi_ratio[eligible].min()), None
            x_ratio = np.where(valid, x_ratio, -1.0)
        best = int(np.argmax(x_ratio))
        return float(x_ratio[best]), best

    evals = 0

    def score(vec):
        nonlocal evals
        evals += 1
        return objective(vec)[0]

    best_score = score(params)
    refine_coords = list(range(2 * n_rot)) + list(
        range(amp_lo, amp_lo + 2 * space.num_coherent)
    )
    spans = {0: math.pi / 2.0, 1: math.pi / 8.0}
    for pass_no in range(_REFINE_PASSES):
        for coord in refine_coords:
            center = params[coord]
            if coord >= amp_lo:
                span = amp_box * (0.6 if pass_no == 0 else 0.15)
                lo = max(-amp_box, center - span)
                hi = min(amp_box, center + span)
            else:
                span = spans[pass_no]
                lo, hi = center - span, center + span

            def line(x, coord=coord):
                trial = params.copy()
                trial[coord] = x
                return score(trial)

            x_best, f_best = _golden_max(line, lo, hi, _GOLDEN_EVALS)
            if f_best > best_score:
                best_score = f_best
                params[coord] = x_best
    final_score, final_pattern = objective(params)
    return final_score, final_pattern, params, evals


def maximize_X(
    space: SearchSpace, budget: int, seed: int, *, threads: int = 1
) -> SearchReport:
    """Random-restart derivative-free search for the largest heralded X.

    Deterministic for fixed (space, budget, seed): every restart draws from
    its own (seed, restart)-keyed stream and the merge is an associative
    best-of, so the thread count never changes the result.
    """
    if budget < 1:
        raise ContractViolation("budget must be >= 1")
    engine = _engine(space)
    per_restart = _restart_cost(space)
    n_restarts = max(1, budget // per_restart)
    indices = list(range(n_restarts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda r: _run_restart(space, seed, r), indices)
            )
    else:
        results = [_run_restart(space, seed, r) for r in indices]
    best_score, best_pattern, best_params, _ = results[0]
    total_evals = 0
    for score_r, pattern_r, params_r, evals_r in results:
        total_evals += evals_r
        if score_r > best_score or (score_r == best_score and best_pattern is None):
            best_score, best_pattern, best_params = score_r, pattern_r, params_r
    if best_pattern is None:
        return SearchReport(
            best_X=0.0,
            best_params=tuple(best_params),
            best_pattern=(),
            herald_probability=0.0,
            multiphoton_weight=0.0,
            bound=space.bound,
            violated=False,
            evaluations=total_evals,
            cutoff_used=space.cutoff_used,
            truncation_weight=0.0,
        )
    herald, one, multi, tail = engine.outcome_table(best_params)
    prob = float(herald[best_pattern])
    best_x = float(one[best_pattern]) / prob
    return SearchReport(
        best_X=best_x,
        best_params=tuple(float(v) for v in best_params),
        best_pattern=tuple(int(v) for v in engine.patterns[best_pattern]),
        herald_probability=prob,
        multiphoton_weight=float(multi[best_pattern]) / prob,
        bound=space.bound,
        violated=bool(best_x > space.bound + BOUND_SLACK),
        evaluations=total_evals,
        cutoff_used=space.cutoff_used,
        truncation_weight=tail,
    )


# --- direct verification of the enabling lemmas ------------------------------

def verify_commutation(
    seed: int,
    trials: int,
    *,
    cutoff: int = 6,
    tol: Tolerances = DEFAULT,
) -> float:
    """Max trace distance between loss-then-interferometer and
    interferometer-then-loss over random product inputs, random unitaries on
    2..4 modes and uniform p in [0.3, 0.95].  Equal loss on every mode
    commutes exactly, so anything above float scale is a failure."""
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    rng = np.random.default_rng(seed)
    single = FockBasis(1, cutoff)
    worst = 0.0
    for _ in range(trials):
        modes = int(rng.integers(2, 5))
        states = []
        for _ in range(modes):
            if rng.random() < 0.5:
                states.append(make_state(Isps(float(rng.uniform(0.0, 1.0))), single))
            else:
                alpha = rng.uniform(0.1, 0.7) * np.exp(2j * math.pi * rng.random())
                states.append(make_state(Coherent(alpha), single, tail_tol=1.0))
        joint = FockBasis(modes, cutoff)
        rho = tensor_all(states, joint, tail_tol=1.0)
        u = haar_random(modes, rng)
        channel = LossChannel(float(rng.uniform(0.3, 0.95)))
        after = apply_loss(apply_interferometer(rho, u, tol=tol), channel, tol=tol)
        before = apply_interferometer(apply_loss(rho, channel, tol=tol), u, tol=tol)
        worst = max(worst, trace_distance(after, before))
    return worst


def unequal_loss_counterexample(p1: float = 0.4, p2: float = 0.9) -> float:
    """Trace distance between the two orderings when the two modes are
    attenuated differently; a generic beamsplitter makes it macroscopic,
    which shows the commutation test has power."""
    from .interferometer import from_mesh

    basis = FockBasis(2, 2)
    single = FockBasis(1, 2)
    rho = tensor_all(
        [make_state(Isps(1.0), single), make_state(Isps(0.0), single)], basis
    )
    u = from_mesh([math.pi / 4, 0.0, 0.0, 0.0], 2)
    channels = [LossChannel(p1, modes=(0,)), LossChannel(p2, modes=(1,))]

    def lossy(state):
        for ch in channels:
            state = apply_loss(state, ch)
        return state

    return trace_distance(
        lossy(apply_interferometer(rho, u)),
        apply_interferometer(lossy(rho), u),
    )


def verify_bernoulli_consequence(seed: int, trials: int) -> bool:
    """Two diagonal-action consequences of the loss channel, on random states:

    * with no multiphoton components, X after loss p is exactly
      p * (one-photon weight before), checked to 1e-10;
    * with multiphoton components and p >= 1/2, X never exceeds p.
    """
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    rng = np.random.default_rng(seed)
    basis = FockBasis(1, 4)
    ok = True
    for _ in range(trials):
        # multiphoton-free heralded state (a zero/one-photon mixture with coherence)
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        qubit = a @ a.conj().T
        qubit /= qubit.trace().real
        elements = np.zeros((basis.dimension, basis.dimension), dtype=complex)
        elements[:2, :2] = qubit
        rho = DensityMatrix(basis, elements)
        p = float(rng.uniform(0.05, 0.95))
        out = apply_loss(rho, LossChannel(p))
        ok &= abs(out.elements[1, 1].real - p * rho.elements[1, 1].real) <= 1e-10

        # state with multiphoton weight, attenuated by p >= 1/2
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        full = a @ a.conj().T
        full /= full.trace().real
        rho = DensityMatrix(basis, full)
        p = float(rng.uniform(0.5, 1.0))
        out = apply_loss(rho, LossChannel(p))
        ok &= out.elements[1, 1].real <= p + 1e-12
    return bool(ok)
