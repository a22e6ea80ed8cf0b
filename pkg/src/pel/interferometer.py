"""M-mode interferometers and their photon-number-conserving Fock representation.

Conventions (fixed once, everything else follows from them):

* A mode unitary U transforms creation operators as
  ``a_k^dag -> sum_j U[j, k] a_j^dag``; equivalently, coherent amplitude
  vectors transform as ``alpha -> U @ alpha``.  The one-photon sector of the
  Fock representation therefore equals U itself.
* The elementary two-mode rotation on adjacent modes (m, m+1) is
  ``R(theta, phi) = [[cos t, -e^{i phi} sin t], [e^{-i phi} sin t, cos t]]``.
* A rectangular mesh is the rotation sequence returned by ``mesh_layout``;
  ``from_mesh`` consumes parameters as (theta, phi) per rotation in that
  order followed by one output phase per mode, ``decompose`` produces them.

Two independent Fock-lift constructions are kept permanently: composition of
two-mode rotation blocks along the mesh (fast, the default) and the
permanent-based matrix-element formula (slow, the oracle).  Tests hold them
to 1e-9 agreement.
"""

import math
from functools import lru_cache

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import ArityError, ContractViolation
from .fock import DensityMatrix, FockBasis


class ModeUnitary:
    """An M x M unitary over mode operators, optionally with mesh parameters."""

    def __init__(self, matrix, params=None, *, tol: Tolerances = DEFAULT):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ContractViolation(f"unitary must be square, got shape {matrix.shape}")
        defect = float(
            np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])).max()
        )
        if defect > 1e-12 * max(1.0, matrix.shape[0]):
            raise ContractViolation(
                f"matrix is not unitary: max |U^dag U - I| = {defect:.3e}"
            )
        matrix.setflags(write=False)
        self.matrix = matrix
        self.params = None if params is None else tuple(float(x) for x in params)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"ModeUnitary(modes={self.modes}, parametrized={self.params is not None})"


def haar_random(modes: int, seed) -> ModeUnitary:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    diagonal of R normalized to positive reals."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = (rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes)))
    z /= math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return ModeUnitary(q)


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [[c, -np.exp(1j * phi) * s], [np.exp(-1j * phi) * s, c]], dtype=complex
    )


@lru_cache(maxsize=128)
def mesh_layout(modes: int) -> tuple:
    """Pair indices (m meaning modes (m, m+1)) of the rectangular mesh, in
    application order.  Length is modes*(modes-1)/2."""
    right, left = [], []
    for i in range(1, modes):
        if i % 2 == 1:
            for j in range(i):
                right.append(i - 1 - j)
        else:
            for j in range(1, i + 1):
                left.append(modes + j - i - 2)
    return tuple(right + left[::-1])


def mesh_param_count(modes: int) -> int:
    return modes * (modes - 1) + modes


def _embed(modes: int, pair: int, block: np.ndarray) -> np.ndarray:
    t = np.eye(modes, dtype=complex)
    t[pair : pair + 2, pair : pair + 2] = block
    return t


def from_mesh(params, modes: int, *, tol: Tolerances = DEFAULT) -> ModeUnitary:
    """Unitary from rectangular-mesh parameters.

    ``params`` holds (theta, phi) for each rotation in ``mesh_layout`` order,
    followed by one output phase per mode; all zeros gives the identity.
    """
    params = [float(x) for x in params]
    expected = mesh_param_count(modes)
    if len(params) != expected:
        raise ArityError(
            f"mesh for {modes} modes needs {expected} parameters "
            f"({modes * (modes - 1) // 2} rotations + {modes} phases), got {len(params)}"
        )
    layout = mesh_layout(modes)
    u = np.eye(modes, dtype=complex)
    for slot, pair in enumerate(layout):
        theta, phi = params[2 * slot], params[2 * slot + 1]
        u = _embed(modes, pair, rotation_matrix(theta, phi)) @ u
    phases = np.exp(1j * np.array(params[2 * len(layout) :]))
    u = phases[:, None] * u
    return ModeUnitary(u, params=params, tol=tol)


def _factor_two_by_two(a: np.ndarray):
    """Write a 2x2 unitary as diag(e^{i d1}, e^{i d2}) @ R(theta, phi)."""
    theta = math.atan2(abs(a[1, 0]), abs(a[0, 0]))
    c, s = math.cos(theta), math.sin(theta)
    if s < 1e-14:
        return float(np.angle(a[0, 0])), float(np.angle(a[1, 1])), theta, 0.0
    if c < 1e-14:
        return float(np.angle(-a[0, 1])), float(np.angle(a[1, 0])), theta, 0.0
    d1 = float(np.angle(a[0, 0]))
    d2 = float(np.angle(a[1, 1]))
    phi = float(np.angle(-a[0, 1]) - d1)
    return d1, d2, theta, phi


def decompose(u, *, tol: Tolerances = DEFAULT) -> list:
    """Rectangular-mesh parameters reproducing the given unitary.

    Standard nulling: anti-diagonals of the lower triangle are zeroed
    alternately by column rotations (multiplied from the right) and row
    rotations (from the left); the residual diagonal is then commuted through
    the row rotations, which turns them into mesh rotations in place.
    """
    if isinstance(u, ModeUnitary):
        u = u.matrix
    u = np.asarray(u, dtype=complex)
    modes = u.shape[0]
    if modes == 1:
        return [float(np.angle(u[0, 0]))]
    work = u.copy()
    right_ops, left_ops = [], []
    for i in range(1, modes):
        if i % 2 == 1:
            for j in range(i):
                row, pair = modes - 1 - j, i - 1 - j
                if abs(work[row, pair + 1]) < 1e-300:
                    theta, phi = math.pi / 2.0, 0.0
                else:
                    z = work[row, pair] / work[row, pair + 1]
                    theta, phi = math.atan(abs(z)), -float(np.angle(z))
                block = rotation_matrix(theta, phi).conj().T
                work[:, pair : pair + 2] = work[:, pair : pair + 2] @ block
                work[row, pair] = 0.0
                right_ops.append((pair, theta, phi))
        else:
            for j in range(1, i + 1):
                row, pair = modes + j - i - 1, modes + j - i - 2
                if abs(work[pair, j - 1]) < 1e-300:
                    theta, phi = math.pi / 2.0, 0.0
                else:
                    z = -work[row, j - 1] / work[pair, j - 1]
                    theta, phi = math.atan(abs(z)), -float(np.angle(z))
                block = rotation_matrix(theta, phi)
                work[pair : pair + 2, :] = block @ work[pair : pair + 2, :]
                work[row, j - 1] = 0.0
                left_ops.append((pair, theta, phi))
    diag = np.diagonal(work).copy()
    off = float(np.abs(work - np.diag(diag)).max())
    if off > 1e-9:
        raise ContractViolation(f"nulling left residual off-diagonal {off:.3e}")
    # U = L^dag D R'; commuting each left rotation through D keeps theta and
    # shifts phases, filling the remaining mesh slots from the inside out.
    commuted = []
    for pair, theta, phi in reversed(left_ops):
        block = rotation_matrix(theta, phi).conj().T @ np.diag(diag[pair : pair + 2])
        d1, d2, theta2, phi2 = _factor_two_by_two(block)
        diag[pair] = np.exp(1j * d1)
        diag[pair + 1] = np.exp(1j * d2)
        commuted.append((pair, theta2, phi2))
    sequence = right_ops + commuted
    layout = mesh_layout(modes)
    if tuple(op[0] for op in sequence) != layout:
        raise ContractViolation("nulling order does not match the mesh layout")
    params = []
    for _, theta, phi in sequence:
        params.extend([theta, phi])
    params.extend(float(a) for a in np.angle(diag))
    return params


# --- Fock-space representation ----------------------------------------------

@lru_cache(maxsize=512)
def _pair_block_tensors(s: int):
    """Combinatorial tensors for the total-photon-number-s block of a two-mode
    rotation: coefficient J and the cos/sin exponent tables, indexed
    [k_out, k_in, j]."""
    size = s + 1
    J = np.zeros((size, size, size))
    CE = np.zeros((size, size, size), dtype=np.int64)
    QE = np.zeros((size, size, size), dtype=np.int64)
    for ko in range(size):
        norm_o = math.lgamma(ko + 1) + math.lgamma(s - ko + 1)
        for ki in range(size):
            norm_i = math.lgamma(ki + 1) + math.lgamma(s - ki + 1)
            scale = math.exp((norm_o - norm_i) / 2.0)
            for j in range(max(0, ko + ki - s), min(ko, ki) + 1):
                J[ko, ki, j] = (
                    (-1) ** (ko - j)
                    * math.comb(ki, j)
                    * math.comb(s - ki, ko - j)
                    * scale
                )
                CE[ko, ki, j] = s - ki - ko + 2 * j
                QE[ko, ki, j] = ki + ko - 2 * j
    return J, CE, QE


@lru_cache(maxsize=512)
def _pair_power_matrix(s: int) -> np.ndarray:
    """Matrix mapping the vector (cos^(s-t) sin^t)_t to the flattened real part
    of the s-block; exploits that every term carries total power s."""
    J, _, QE = _pair_block_tensors(s)
    size = s + 1
    out = np.zeros((size * size, size))
    for ko in range(size):
        for ki in range(size):
            for j in range(size):
                if J[ko, ki, j]:
                    out[ko * size + ki, QE[ko, ki, j]] += J[ko, ki, j]
    return out


def _pair_rotation_blocks(theta: float, phi: float, cutoff: int) -> list:
    """Matrices of R(theta, phi) on the (k, s-k) occupation ladder, s = 0..cutoff."""
    c, q = math.cos(theta), math.sin(theta)
    steps = np.arange(cutoff + 1)
    cpow = c ** steps
    qpow = q ** steps
    phase_step = np.exp(1j * phi * steps)
    blocks = [np.ones((1, 1), dtype=complex)]
    for s in range(1, cutoff + 1):
        powers = cpow[s::-1] * qpow[: s + 1]
        real = (_pair_power_matrix(s) @ powers).reshape(s + 1, s + 1)
        e = phase_step[: s + 1]
        blocks.append(real * (e[:, None] * e[None, :].conj()))
    return blocks


@lru_cache(maxsize=256)
def _pair_perm(basis: FockBasis, pair: int):
    """Permutation bringing basis indices into (s, k, orbit) order for modes
    (pair, pair+1), where s = combined pair occupation and k = occupation of
    mode ``pair``.  In that layout the s-segment is a contiguous
    (s+1, n_orbits) block, so the rotation becomes one GEMM per s.

    Returns (perm, inverse_perm, segments) with segments a tuple of
    (s, start_row, n_orbits)."""
    occ = basis.occupations
    x, y = pair, pair + 1
    s_val = occ[:, x] + occ[:, y]
    k_val = occ[:, x]
    rest = occ.copy()
    rest[:, x] = 0
    rest[:, y] = 0
    _, orbit_id = np.unique(
        np.column_stack([s_val, rest]), axis=0, return_inverse=True
    )
    order = np.lexsort((orbit_id, k_val, s_val))
    perm = order.astype(np.int64)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(basis.dimension)
    segments = []
    start = 0
    for s in range(basis.cutoff + 1):
        count = int((s_val == s).sum())
        n_orbits = count // (s + 1)
        if s >= 1 and n_orbits:
            segments.append((s, start, n_orbits))
        start += count
    return perm, inverse, tuple(segments)


def apply_pair_rotation(vectors: np.ndarray, pair: int, theta: float, phi: float,
                        basis: FockBasis) -> None:
    """In-place action of R(theta, phi) on modes (pair, pair+1) for a batch of
    state vectors of shape (dimension, batch)."""
    blocks = _pair_rotation_blocks(theta, phi, basis.cutoff)
    perm, inverse, segments = _pair_perm(basis, pair)
    batch = vectors.shape[1]
    work = vectors.take(perm, axis=0)
    for s, start, n_orbits in segments:
        stop = start + (s + 1) * n_orbits
        segment = work[start:stop].reshape(s + 1, n_orbits * batch)
        work[start:stop] = (blocks[s] @ segment).reshape((s + 1) * n_orbits, batch)
    vectors[:] = work.take(inverse, axis=0)


@lru_cache(maxsize=64)
def _mesh_chain(basis: FockBasis, modes: int):
    """Permutation chain for the whole mesh: the inverse permutation of each
    rotation composed with the next rotation's permutation, so the batch is
    re-sorted once per rotation instead of twice."""
    layout = mesh_layout(modes)
    perms = [_pair_perm(basis, pair) for pair in layout]
    hops = [perms[i][1].take(perms[i + 1][0]) for i in range(len(layout) - 1)]
    segments = tuple(p[2] for p in perms)
    return perms[0][0], tuple(hops), perms[-1][1], segments


def apply_mesh_to_vectors(vectors: np.ndarray, params, modes: int,
                          basis: FockBasis) -> None:
    """In-place mesh action (rotations in layout order, then output phases)
    on a (dimension, batch) array of state vectors."""
    params = np.asarray(params, dtype=float)
    expected = mesh_param_count(modes)
    if params.shape[0] != expected:
        raise ArityError(
            f"mesh for {modes} modes needs {expected} parameters, got {params.shape[0]}"
        )
    layout = mesh_layout(modes)
    if layout:
        first, hops, last_inverse, segments = _mesh_chain(basis, modes)
        batch = vectors.shape[1]
        work = vectors.take(first, axis=0)
        for slot in range(len(layout)):
            blocks = _pair_rotation_blocks(
                params[2 * slot], params[2 * slot + 1], basis.cutoff
            )
            for s, start, n_orbits in segments[slot]:
                stop = start + (s + 1) * n_orbits
                segment = work[start:stop].reshape(s + 1, n_orbits * batch)
                work[start:stop] = (blocks[s] @ segment).reshape(
                    (s + 1) * n_orbits, batch
                )
            if slot + 1 < len(layout):
                work = work.take(hops[slot], axis=0)
        vectors[:] = work.take(last_inverse, axis=0)
    phases = params[2 * len(layout):]
    if np.any(phases):
        factor = np.exp(1j * (basis.occupations @ phases))
        vectors *= factor[:, None]


class FockLift:
    """Block-diagonal Fock representation of a mode unitary: one unitary per
    total photon number."""

    def __init__(self, basis: FockBasis, blocks):
        self.basis = basis
        self.blocks = tuple(blocks)

    def matrix(self) -> np.ndarray:
        full = np.zeros((self.basis.dimension,) * 2, dtype=complex)
        for n, block in enumerate(self.blocks):
            sl = self.basis.block(n)
            full[sl, sl] = block
        return full

    def apply(self, rho: DensityMatrix, *, tol: Tolerances = DEFAULT) -> DensityMatrix:
        slices = self.basis.block_slices
        out = np.empty_like(rho.elements)
        for a, va in enumerate(self.blocks):
            for b, vb in enumerate(self.blocks):
                out[slices[a], slices[b]] = va @ rho.elements[slices[a], slices[b]] @ vb.conj().T
        return DensityMatrix(
            self.basis, out, normalized=rho.normalized, tail=rho.tail, tol=tol
        )


def _permanent(mat: np.ndarray) -> complex:
    """Ryser's formula; fine at the few-photon sizes used by the oracle lift."""
    n = mat.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0j
    for subset in range(1, 1 << n):
        cols = [c for c in range(n) if subset >> c & 1]
        prod = 1.0 + 0.0j
        for r in range(n):
            prod *= mat[r, cols].sum()
        total += (-1) ** (n - len(cols)) * prod
    return total


def lift(u: ModeUnitary, basis: FockBasis, method: str = "mesh") -> FockLift:
    """Fock representation of ``u`` on the given basis.

    method="mesh" composes two-mode rotation blocks along the mesh
    decomposition; method="permanent" evaluates matrix elements
    <m|V|n> = perm(U[m, n]) / sqrt(prod m! prod n!) directly.  The two must
    agree to 1e-9 and serve as each other's oracle.
    """
    if u.modes != basis.modes:
        raise ContractViolation(
            f"unitary has {u.modes} modes, basis has {basis.modes}"
        )
    if method == "mesh":
        params = u.params if u.params is not None else decompose(u.matrix)
        full = np.eye(basis.dimension, dtype=complex)
        apply_mesh_to_vectors(full, params, basis.modes, basis)
        return FockLift(basis, [full[sl, sl] for sl in basis.block_slices])
    if method == "permanent":
        blocks = []
        occ = basis.occupations
        lgamma = math.lgamma
        for n in range(basis.cutoff + 1):
            sl = basis.block(n)
            occs = occ[sl]
            size = occs.shape[0]
            block = np.empty((size, size), dtype=complex)
            reps = [np.repeat(np.arange(basis.modes), o) for o in occs]
            norms = [
                math.exp(-0.5 * sum(lgamma(int(k) + 1) for k in o)) for o in occs
            ]
            for a in range(size):
                for b in range(size):
                    sub = u.matrix[np.ix_(reps[a], reps[b])]
                    block[a, b] = _permanent(sub) * norms[a] * norms[b]
            blocks.append(block)
        return FockLift(basis, blocks)
    raise ContractViolation(f"unknown lift method {method!r}")


@lru_cache(maxsize=128)
def _cached_lift(modes: int, cutoff: int, key: bytes) -> FockLift:
    matrix = np.frombuffer(key, dtype=complex).reshape(modes, modes)
    return lift(ModeUnitary(matrix), FockBasis(modes, cutoff))


def apply_interferometer(rho: DensityMatrix, u: ModeUnitary,
                         *, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """Blockwise V rho V^dag with V the Fock lift of ``u``.  Trace and the
    total-photon-number distribution are preserved exactly."""
    if u.modes != rho.basis.modes:
        raise ContractViolation(
            f"unitary has {u.modes} modes, state has {rho.basis.modes}"
        )
    lifted = _cached_lift(rho.basis.modes, rho.basis.cutoff, u.matrix.tobytes())
    return lifted.apply(rho, tol=tol)
