"""Truncated Fock-space and qutrit operator algebra.

Everything in the package lives on a fixed tensor ordering

    qutrit (g, e, f) = (0, 1, 2)  ⊗  cavity A  ⊗  cavity B

with the flat basis index ``q * N_A * N_B + n * N_B + m``.  Layouts are
immutable; operators and states carry exactly one layout and refuse to mix
with objects on a different one.  Matrices are dense complex128 throughout
(the total dimension at the default truncation is 192).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidDimensionError,
    LayoutMismatchError,
    PositivityError,
    TruncationError,
)

QUTRIT = "qutrit"
CAVITY_A = "cavity_a"
CAVITY_B = "cavity_b"

QUTRIT_LEVELS = ("g", "e", "f")

DEFAULT_TAIL_TOL = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=complex)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor-product factors.

    The standard layout is the full three-factor space; single-factor
    layouts describe pre-embedding operators and single-mode states, and
    reduced layouts come out of :func:`partial_trace`.

    Attributes
    ----------
    dims : tuple of int
        Dimension of each factor, in order.
    slots : tuple of str
        Name of each factor, in order.
    """

    dims: tuple[int, ...]
    slots: tuple[str, ...]

    def __post_init__(self):
        if len(self.dims) != len(self.slots):
            raise InvalidDimensionError("dims and slots must have equal length")
        if any(d < 1 for d in self.dims):
            raise InvalidDimensionError(f"factor dimensions must be >= 1, got {self.dims}")
        if len(set(self.slots)) != len(self.slots):
            raise InvalidDimensionError(f"duplicate slot names in {self.slots}")

    @classmethod
    def standard(cls, fock_a: int, fock_b: int) -> "SpaceLayout":
        """Full qutrit ⊗ cavity-A ⊗ cavity-B layout with the fixed ordering."""
        if fock_a < 1 or fock_b < 1:
            raise InvalidDimensionError("Fock truncations must be >= 1")
        return cls(dims=(3, fock_a, fock_b), slots=(QUTRIT, CAVITY_A, CAVITY_B))

    @classmethod
    def single_mode(cls, dim: int, slot: str = "mode") -> "SpaceLayout":
        if dim < 1:
            raise InvalidDimensionError("mode dimension must be >= 1")
        return cls(dims=(dim,), slots=(slot,))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def qutrit_dim(self) -> int:
        return self.dim_of(QUTRIT)

    @property
    def fock_a(self) -> int:
        return self.dim_of(CAVITY_A)

    @property
    def fock_b(self) -> int:
        return self.dim_of(CAVITY_B)

    def axis(self, slot: str) -> int:
        try:
            return self.slots.index(slot)
        except ValueError:
            raise LayoutMismatchError(f"layout {self.slots} has no slot {slot!r}") from None

    def dim_of(self, slot: str) -> int:
        return self.dims[self.axis(slot)]

    def index(self, *occupations: int) -> int:
        """Flat basis index of a product basis state, e.g. ``index(q, n, m)``."""
        if len(occupations) != len(self.dims):
            raise InvalidDimensionError("need one occupation per factor")
        idx = 0
        for occ, d in zip(occupations, self.dims):
            if not 0 <= occ < d:
                raise InvalidDimensionError(f"occupation {occ} outside factor of dim {d}")
            idx = idx * d + occ
        return idx

    def occupation_grids(self) -> tuple[np.ndarray, ...]:
        """Per-factor occupation number of every flat basis index."""
        grids = np.meshgrid(*[np.arange(d) for d in self.dims], indexing="ij")
        return tuple(g.ravel() for g in grids)

    def reduced(self, keep: Sequence[str]) -> "SpaceLayout":
        kept = [s for s in self.slots if s in set(keep)]
        if not kept:
            raise InvalidDimensionError("keep-set must name at least one slot")
        return SpaceLayout(
            dims=tuple(self.dim_of(s) for s in kept),
            slots=tuple(kept),
        )


def total_excitation(layout: SpaceLayout) -> np.ndarray:
    """Level index plus photon numbers for every basis state of a standard layout.

    The interaction terms of the model conserve this quantity, which the
    dynamics module uses to restrict evolutions to an invariant sector.
    """
    grids = layout.occupation_grids()
    return np.sum(grids, axis=0)


def _check_same_layout(a: SpaceLayout, b: SpaceLayout) -> None:
    if a != b:
        raise LayoutMismatchError(f"layout mismatch: {a.slots}/{a.dims} vs {b.slots}/{b.dims}")


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix tagged with its layout.

    The matrix buffer is read-only; arithmetic returns new operators and
    rejects operands on a different layout.
    """

    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.shape != (self.layout.dim, self.layout.dim):
            raise InvalidDimensionError(
                f"matrix shape {m.shape} does not match layout dimension {self.layout.dim}"
            )
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T)

    def hermiticity_deficit(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_deficit() < tol

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_layout(self.layout, other.layout)
        return Operator(self.layout, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_layout(self.layout, other.layout)
        return Operator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_layout(self.layout, other.layout)
        return Operator(self.layout, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.layout, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.matrix)


@dataclass(frozen=True)
class QuantumState:
    """Pure vector or density matrix on a layout.

    Use :meth:`pure` / :meth:`density` to construct; ``data`` is read-only.
    """

    layout: SpaceLayout
    data: np.ndarray
    kind: str = field(default="pure")  # "pure" | "density"

    def __post_init__(self):
        d = _readonly(self.data)
        if self.kind == "pure":
            if d.shape != (self.layout.dim,):
                raise InvalidDimensionError(
                    f"pure state shape {d.shape} does not match layout dim {self.layout.dim}"
                )
        elif self.kind == "density":
            if d.shape != (self.layout.dim, self.layout.dim):
                raise InvalidDimensionError(
                    f"density shape {d.shape} does not match layout dim {self.layout.dim}"
                )
        else:
            raise InvalidDimensionError(f"unknown state kind {self.kind!r}")
        object.__setattr__(self, "data", d)

    @classmethod
    def pure(cls, layout: SpaceLayout, vector: np.ndarray) -> "QuantumState":
        return cls(layout, np.asarray(vector, dtype=complex), "pure")

    @classmethod
    def density(cls, layout: SpaceLayout, matrix: np.ndarray) -> "QuantumState":
        return cls(layout, np.asarray(matrix, dtype=complex), "density")

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def norm(self) -> float:
        if self.is_pure:
            return float(np.linalg.norm(self.data))
        return float(np.real(np.trace(self.data)))

    def normalized(self) -> "QuantumState":
        n = self.norm()
        if n <= 0:
            raise PositivityError("cannot normalize a state with vanishing norm")
        return QuantumState(self.layout, self.data / n, self.kind)

    def to_density(self) -> "QuantumState":
        if self.is_pure:
            return QuantumState.density(self.layout, np.outer(self.data, self.data.conj()))
        return self

    def diagnostics(self) -> dict[str, float]:
        """Trace deficit, hermiticity deficit, and minimum eigenvalue.

        For pure states the trace deficit is the norm deficit and the other
        two entries are trivially zero.  Nothing is ever repaired here; the
        caller decides what to do with a bad number.
        """
        if self.is_pure:
            return {
                "trace_deficit": abs(self.norm() - 1.0),
                "herm_deficit": 0.0,
                "min_eig": 0.0,
            }
        rho = self.data
        herm = float(np.abs(rho - rho.conj().T).max())
        eigs = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
        return {
            "trace_deficit": abs(float(np.real(np.trace(rho))) - 1.0),
            "herm_deficit": herm,
            "min_eig": float(eigs.min()),
        }


# ---------------------------------------------------------------------------
# operator constructors
# ---------------------------------------------------------------------------

def annihilation(dim: int) -> Operator:
    """Single-mode annihilation operator on a ``dim``-level truncation.

    Entries ``a[n-1, n] = sqrt(n)``; the commutator ``[a, a†]`` equals the
    identity except for the ``-(dim-1)`` truncation artifact in the corner.
    """
    if dim < 1:
        raise InvalidDimensionError("annihilation requires dim >= 1")
    mat = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return Operator(SpaceLayout.single_mode(dim), mat)


def number_operator(dim: int) -> Operator:
    a = annihilation(dim)
    return a.dag() @ a

def _level_index(level: str) -> int:
    try:
        return QUTRIT_LEVELS.index(level)
    except ValueError:
        raise InvalidDimensionError(
            f"qutrit level must be one of {QUTRIT_LEVELS}, got {level!r}"
        ) from None


def qutrit_transition(from_level: str, to_level: str) -> Operator:
    """``|to><from|`` on the qutrit, in basis order (g, e, f).

    ``from_level == to_level`` gives the level projector.
    """
    i, j = _level_index(to_level), _level_index(from_level)
    mat = np.zeros((3, 3))
    mat[i, j] = 1.0
    return Operator(SpaceLayout.single_mode(3, QUTRIT), mat)


def qutrit_projector(level: str) -> Operator:
    return qutrit_transition(level, level)


def embed(op: Operator | np.ndarray, slot: str, layout: SpaceLayout) -> Operator:
    """Embed a single-factor operator into the full layout.

    Produces ``identity ⊗ ... ⊗ op ⊗ ... ⊗ identity`` in the layout's fixed
    ordering.
    """
    mat = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    d = layout.dim_of(slot)
    if mat.shape != (d, d):
        raise InvalidDimensionError(
            f"operator shape {mat.shape} does not fit slot {slot!r} of dim {d}"
        )
    axis = layout.axis(slot)
    factors = [np.eye(dd, dtype=complex) for dd in layout.dims]
    factors[axis] = mat
    full = reduce(np.kron, factors)
    return Operator(layout, full)


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------

def coherent_tail(amplitude: complex, dim: int) -> float:
    """Probability weight of a coherent state beyond the first ``dim`` levels."""
    nbar = abs(amplitude) ** 2
    # survival of the Poisson head, summed in increasing order for accuracy
    head = 0.0
    term = math.exp(-nbar)
    for n in range(dim):
        head += term
        term *= nbar / (n + 1)
    return max(0.0, 1.0 - head)


def minimal_coherent_dim(amplitude: complex, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    dim = 1
    while coherent_tail(amplitude, dim) >= tail_tol:
        dim += 1
        if dim > 10_000:
            raise TruncationError("coherent tail does not converge", minimal_dim=None)
    return dim


def coherent_state(
    amplitude: complex, dim: int, tail_tol: float = DEFAULT_TAIL_TOL
) -> QuantumState:
    """Truncated coherent state, renormalized after truncation.

    Raises
    ------
    TruncationError
        If the discarded tail weight is not below ``tail_tol``; the error
        names the minimal adequate truncation.
    """
    if dim < 1:
        raise InvalidDimensionError("coherent_state requires dim >= 1")
    tail = coherent_tail(amplitude, dim)
    if tail >= tail_tol:
        needed = minimal_coherent_dim(amplitude, tail_tol)
        raise TruncationError(
            f"coherent tail {tail:.3e} exceeds tolerance {tail_tol:.1e}; "
            f"need dim >= {needed}",
            minimal_dim=needed,
        )
    n = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    vec = np.exp(-abs(amplitude) ** 2 / 2) * amplitude ** n / np.exp(log_fact / 2)
    vec = vec / np.linalg.norm(vec)
    return QuantumState.pure(SpaceLayout.single_mode(dim), vec)


def fock_state(n: int, dim: int) -> QuantumState:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"Fock index {n} outside truncation {dim}")
    vec = np.zeros(dim)
    vec[n] = 1.0
    return QuantumState.pure(SpaceLayout.single_mode(dim), vec)


def product_state(layout: SpaceLayout, *factors: np.ndarray | QuantumState) -> QuantumState:
    """Tensor product of per-factor pure vectors on the given layout."""
    vecs = []
    for f, d in zip(factors, layout.dims):
        v = f.data if isinstance(f, QuantumState) else np.asarray(f, dtype=complex)
        if v.shape != (d,):
            raise InvalidDimensionError(f"factor shape {v.shape} does not match dim {d}")
        vecs.append(v)
    if len(vecs) != len(layout.dims):
        raise InvalidDimensionError("need one factor per layout slot")
    return QuantumState.pure(layout, reduce(np.kron, vecs))


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def overlap(a: QuantumState, b: QuantumState) -> complex:
    """⟨a|b⟩ for two pure states on the same layout."""
    _check_same_layout(a.layout, b.layout)
    if not (a.is_pure and b.is_pure):
        raise PositivityError("overlap is defined for pure states; use fidelity")
    return complex(np.vdot(a.data, b.data))


def fidelity(target: QuantumState, rho: QuantumState) -> float:
    """sqrt(⟨ψ_id| ρ |ψ_id⟩) of a pure target against a density matrix.

    The scalar is clamped into [0, 1] only when it is within 1e-8 of the
    boundary; anything further out raises, because it signals an integrator
    or construction failure that should not be hidden.
    """
    _check_same_layout(target.layout, rho.layout)
    if not target.is_pure:
        raise PositivityError("fidelity target must be a pure state")
    if rho.is_pure:
        val = abs(np.vdot(target.data, rho.data)) ** 2
    else:
        val = float(np.real(np.vdot(target.data, rho.data @ target.data)))
    if val < -1e-8:
        raise PositivityError(f"⟨ψ|ρ|ψ⟩ = {val:.3e} is negative beyond tolerance")
    if val > 1.0 + 1e-8:
        raise PositivityError(f"⟨ψ|ρ|ψ⟩ = {val:.3e} exceeds 1 beyond tolerance")
    return math.sqrt(min(max(val, 0.0), 1.0))


def expectation(op: Operator, state: QuantumState) -> complex:
    _check_same_layout(op.layout, state.layout)
    if state.is_pure:
        return complex(np.vdot(state.data, op.matrix @ state.data))
    return complex(np.trace(op.matrix @ state.data))


def partial_trace(state: QuantumState, keep: Iterable[str]) -> QuantumState:
    """Reduced density matrix over the kept slots.

    Always returns a density-matrix state, also for pure inputs.
    """
    keep_set = set(keep)
    layout = state.layout
    if not keep_set:
        raise InvalidDimensionError("keep-set must not be empty")
    for s in keep_set:
        layout.axis(s)  # raises on unknown slot

    rho = state.to_density().data
    nfac = len(layout.dims)
    tensor = rho.reshape(layout.dims + layout.dims)
    # trace out slots not kept, from the highest axis down so indices stay valid
    for ax in reversed(range(nfac)):
        if layout.slots[ax] not in keep_set:
            tensor = np.trace(tensor, axis1=ax, axis2=ax + (tensor.ndim // 2))
    reduced_layout = layout.reduced(keep_set)
    d = reduced_layout.dim
    return QuantumState.density(reduced_layout, tensor.reshape(d, d))
