"""Dense complex linear algebra over small labeled tensor-product Hilbert spaces.

States and operators carry a :class:`HilbertSpace` that names each tensor
factor, so partial traces and subsystem operators can be addressed by label
instead of by index bookkeeping.  Everything is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

MAX_DIM = 4096

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
UNITARY_TOL = 1e-9


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered list of labeled tensor factors."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(lbl), int(d)) for lbl, d in self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [lbl for lbl, _ in factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels: {labels}")
        for lbl, d in factors:
            if d < 1:
                raise ValueError(f"factor {lbl!r} has non-positive dimension {d}")
        if self.dim > MAX_DIM:
            raise ValueError(f"total dimension {self.dim} exceeds {MAX_DIM}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        out = 1
        for _, d in self.factors:
            out *= d
        return out

    def position(self, label: str) -> int:
        for i, (lbl, _) in enumerate(self.factors):
            if lbl == label:
                return i
        raise KeyError(f"no factor labeled {label!r} in {self.labels}")

    def factor_dim(self, label: str) -> int:
        return self.factors[self.position(label)][1]

    def index_of(self, occupations: dict[str, int]) -> int:
        """Flat (row-major) index of a basis state given per-factor indices."""
        idx = 0
        for lbl, d in self.factors:
            k = occupations[lbl]
            if not 0 <= k < d:
                raise ValueError(f"index {k} out of range for factor {lbl!r} (dim {d})")
            idx = idx * d + k
        return idx

    def subspace(self, labels: Iterable[str]) -> "HilbertSpace":
        keep = set(labels)
        unknown = keep - set(self.labels)
        if unknown:
            raise KeyError(f"unknown labels {sorted(unknown)}")
        return HilbertSpace(tuple(f for f in self.factors if f[0] in keep))


class PureState:
    """State vector on a labeled space.  Amplitudes need not be normalized."""

    def __init__(self, space: HilbertSpace, amplitudes: Sequence[complex]):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (space.dim,):
            raise ValueError(f"amplitude length {amps.shape[0]} != dim {space.dim}")
        self.space = space
        self.amplitudes = amps
        self.amplitudes.setflags(write=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "PureState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.space, self.amplitudes / n)

    def overlap(self, other: "PureState") -> complex:
        _require_same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        psi = self.normalize().amplitudes
        return DensityMatrix(self.space, np.outer(psi, psi.conj()))

    def __repr__(self):
        return f"PureState(labels={self.space.labels}, dim={self.space.dim})"


class DensityMatrix:
    """Hermitian PSD trace-one matrix on a labeled space."""

    def __init__(self, space: HilbertSpace, entries, validate: bool = True):
        mat = np.asarray(entries, dtype=complex)
        if mat.shape != (space.dim, space.dim):
            raise ValueError(f"matrix shape {mat.shape} != ({space.dim}, {space.dim})")
        self.space = space
        self.entries = mat
        self.entries.setflags(write=False)
        if validate:
            self.validate()

    def validate(self, herm_tol: float = HERM_TOL, trace_tol: float = 1e-8,
                 psd_tol: float = PSD_TOL) -> None:
        if np.max(np.abs(self.entries - self.entries.conj().T)) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(self.entries)
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr} is not 1")
        if self.space.dim <= 64:
            w = np.linalg.eigvalsh(self.entries)
            if w.min() < -psd_tol:
                raise ValueError(f"negative eigenvalue {w.min()}")

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min())

    def __repr__(self):
        return f"DensityMatrix(labels={self.space.labels}, dim={self.space.dim})"


class LinearOperator:
    """Square operator on a labeled space, optionally declared unitary."""

    def __init__(self, space: HilbertSpace, entries, unitary: bool = False):
        mat = np.asarray(entries, dtype=complex)
        if mat.shape != (space.dim, space.dim):
            raise ValueError(f"operator shape {mat.shape} != ({space.dim}, {space.dim})")
        self.space = space
        self.entries = mat
        self.entries.setflags(write=False)
        self.unitary = unitary
        if unitary:
            dev = np.max(np.abs(mat.conj().T @ mat - np.eye(space.dim)))
            if dev > UNITARY_TOL:
                raise ValueError(f"operator declared unitary but O†O deviates by {dev}")

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.space, self.entries.conj().T, unitary=self.unitary)

    def __repr__(self):
        return f"LinearOperator(labels={self.space.labels}, dim={self.space.dim})"


State = Union[PureState, DensityMatrix]
Tensorable = Union[PureState, DensityMatrix, LinearOperator]


def _require_same_space(a: HilbertSpace, b: HilbertSpace) -> None:
    if a.factors != b.factors:
        raise ValueError(f"space mismatch: {a.factors} vs {b.factors}")


def _joint_space(a: HilbertSpace, b: HilbertSpace) -> HilbertSpace:
    collision = set(a.labels) & set(b.labels)
    if collision:
        raise ValueError(f"label collision in tensor product: {sorted(collision)}")
    return HilbertSpace(a.factors + b.factors)


def tensor(a: Tensorable, b: Tensorable) -> Tensorable:
    """Kronecker product of two states or operators on disjoint label sets."""
    space = _joint_space(a.space, b.space)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(space, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(space, np.kron(a.entries, b.entries), validate=False)
    if isinstance(a, LinearOperator) and isinstance(b, LinearOperator):
        return LinearOperator(space, np.kron(a.entries, b.entries),
                              unitary=a.unitary and b.unitary)
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def basis_state(space: HilbertSpace, occupations: dict[str, int]) -> PureState:
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.index_of(occupations)] = 1.0
    return PureState(space, amps)


def identity(space: HilbertSpace) -> LinearOperator:
    return LinearOperator(space, np.eye(space.dim), unitary=True)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Trace out every factor not named in ``keep``; kept order is preserved."""
    space = rho.space
    keep_set = set(keep)
    unknown = keep_set - set(space.labels)
    if unknown:
        raise KeyError(f"unknown labels {sorted(unknown)}")
    dims = space.dims
    n = len(dims)
    t = rho.entries.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = []
    col = []
    out = []
    next_letter = 0
    for i, (lbl, _) in enumerate(space.factors):
        r = letters[next_letter]
        next_letter += 1
        row.append(r)
        if lbl in keep_set:
            c = letters[next_letter]
            next_letter += 1
            col.append(c)
            out.append((r, c))
        else:
            col.append(r)
    subscript = "".join(row) + "".join(col) + "->" + \
        "".join(r for r, _ in out) + "".join(c for _, c in out)
    reduced = np.einsum(subscript, t)
    sub = space.subspace(keep_set)
    return DensityMatrix(sub, reduced.reshape(sub.dim, sub.dim), validate=False)


def embed_operator(op: LinearOperator, space: HilbertSpace) -> np.ndarray:
    """Matrix of ``op`` extended by identity onto the factors of ``space``."""
    if op.space.factors == space.factors:
        return op.entries
    positions = []
    for lbl, d in op.space.factors:
        p = space.position(lbl)
        if space.dims[p] != d:
            raise ValueError(f"factor {lbl!r} dimension mismatch: {space.dims[p]} vs {d}")
        positions.append(p)
    n = len(space.factors)
    rest = [i for i in range(n) if i not in positions]
    op_dims = op.space.dims
    rest_dims = tuple(space.dims[i] for i in rest)
    rest_dim = int(np.prod(rest_dims)) if rest_dims else 1
    op_t = op.entries.reshape(op_dims + op_dims)
    eye_t = np.eye(rest_dim).reshape(rest_dims + rest_dims)
    # outer product axes: op_out, op_in, rest_out, rest_in
    full = np.tensordot(op_t, eye_t, axes=0)
    k = len(positions)
    out_axis = {}
    in_axis = {}
    for j, p in enumerate(positions):
        out_axis[p] = j
        in_axis[p] = k + j
    for j, p in enumerate(rest):
        out_axis[p] = 2 * k + j
        in_axis[p] = 2 * k + len(rest) + j
    perm = [out_axis[i] for i in range(n)] + [in_axis[i] for i in range(n)]
    full = full.transpose(perm)
    return full.reshape(space.dim, space.dim)


def apply(op: LinearOperator, state: State, renormalize: bool = False) -> State:
    """Apply an operator (identity-padded onto the state's space)."""
    mat = embed_operator(op, state.space)
    if isinstance(state, PureState):
        amps = mat @ state.amplitudes
        out = PureState(state.space, amps)
        return out.normalize() if renormalize else out
    if isinstance(state, DensityMatrix):
        rho = mat @ state.entries @ mat.conj().T
        if renormalize:
            rho = rho / np.trace(rho)
        return DensityMatrix(state.space, rho, validate=False)
    raise TypeError(f"cannot apply to {type(state).__name__}")


def fidelity(rho: State, psi: PureState) -> float:
    """⟨ψ|ρ|ψ⟩ for a density matrix, |⟨ψ|φ⟩|² for a pure state."""
    _require_same_space(rho.space, psi.space)
    ket = psi.normalize().amplitudes
    if isinstance(rho, PureState):
        phi = rho.normalize().amplitudes
        return float(abs(np.vdot(ket, phi)) ** 2)
    val = np.vdot(ket, rho.entries @ ket)
    if abs(val.imag) > 1e-9:
        raise ValueError(f"fidelity has non-negligible imaginary part {val.imag}")
    return float(val.real)


def same_state_up_to_phase(a: PureState, b: PureState, tol: float = 1e-10) -> bool:
    ov = abs(a.normalize().overlap(b.normalize()))
    return abs(ov - 1.0) <= tol


def contract(state: PureState, label: str, bra: Sequence[complex]) -> PureState:
    """⟨bra| applied to one factor; returns the (unnormalized) residual state."""
    space = state.space
    p = space.position(label)
    vec = np.asarray(bra, dtype=complex)
    if vec.shape != (space.dims[p],):
        raise ValueError("bra vector dimension mismatch")
    t = state.amplitudes.reshape(space.dims)
    reduced = np.tensordot(vec.conj(), t, axes=([0], [p]))
    sub = HilbertSpace(tuple(f for i, f in enumerate(space.factors) if i != p))
    return PureState(sub, reduced.reshape(-1))


def _check_projectors(space: HilbertSpace, projectors: Sequence[LinearOperator]) -> list[np.ndarray]:
    mats = []
    for proj in projectors:
        mats.append(embed_operator(proj, space))
    total = sum(mats)
    if np.max(np.abs(total - np.eye(space.dim))) > UNITARY_TOL:
        raise ValueError("projector set is not complete")
    for i, a in enumerate(mats):
        for b in mats[i + 1:]:
            if np.max(np.abs(a @ b)) > UNITARY_TOL:
                raise ValueError("projectors are not mutually orthogonal")
    return mats


def enumerate_outcomes(state: State, projectors: Sequence[LinearOperator]) -> list[tuple[float, State]]:
    """All (probability, renormalized post-state) pairs of a projective measurement."""
    mats = _check_projectors(state.space, projectors)
    outcomes: list[tuple[float, State]] = []
    for mat in mats:
        if isinstance(state, PureState):
            psi = state.normalize().amplitudes
            post = mat @ psi
            p = float(np.vdot(post, post).real)
            post_state = PureState(state.space, post / np.sqrt(p)) if p > 1e-15 else None
        else:
            p = float(np.trace(mat @ state.entries).real)
            post_state = None
            if p > 1e-15:
                post_state = DensityMatrix(state.space, mat @ state.entries @ mat / p,
                                           validate=False)
        outcomes.append((p, post_state))
    return outcomes


def measure_projective(state: State, projectors: Sequence[LinearOperator],
                       rng: np.random.Generator) -> tuple[int, State, float]:
    """Sample one Born-rule outcome; returns (index, post-state, probability)."""
    outcomes = enumerate_outcomes(state, projectors)
    probs = np.array([max(p, 0.0) for p, _ in outcomes])
    probs = probs / probs.sum()
    idx = int(rng.choice(len(outcomes), p=probs))
    p, post = outcomes[idx]
    return idx, post, p
