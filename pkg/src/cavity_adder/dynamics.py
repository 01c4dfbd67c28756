"""Time evolution engines: unitary propagation and the Lindblad master equation.

Two propagation routes exist.  ``propagate_exact`` diagonalizes a constant
Hamiltonian (also the constant form of an interaction-picture Hamiltonian)
and is the closed-system reference.  ``evolve_unitary`` / ``evolve_master``
integrate with an explicit adaptive Runge-Kutta method (DOP853 by default,
RK45 selectable), which is the only route for open dynamics and for
explicitly time-dependent Hamiltonians.

The master equation RHS is compiled once into a sparse generator acting on
the vectorized density matrix.  When the Hamiltonian and every collapse
operator conserve (or lower) the total excitation number, the evolution is
restricted, exactly, to the excitation sector that carries the initial
state's weight; the restriction is structural, verified per operator, and
switched off automatically whenever the check fails.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import IntegrationError, LayoutMismatchError, PositivityError
from .model import InteractionPictureHamiltonian, ModelParams
from .spaces import (
    CAVITY_A,
    CAVITY_B,
    QUTRIT,
    Operator,
    QuantumState,
    SpaceLayout,
    annihilation,
    embed,
    qutrit_projector,
    qutrit_transition,
    total_excitation,
)

HamiltonianLike = Operator | InteractionPictureHamiltonian | Callable[[float], Operator]


@dataclass(frozen=True)
class NoiseSpec:
    """Rates of the seven collapse channels; a zero rate disables a channel.

    Channels: cavity decay ``a`` and ``b``, qutrit relaxation e->g, f->e,
    f->g, and pure dephasing of levels e and f.
    """

    kappa_a: float = 0.0
    kappa_b: float = 0.0
    gamma_eg: float = 0.0
    gamma_fe: float = 0.0
    gamma_fg: float = 0.0
    gamma_phi_e: float = 0.0
    gamma_phi_f: float = 0.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0:
                raise PositivityError(f"noise rate {name} must be >= 0")

    @classmethod
    def from_params(cls, params: ModelParams) -> "NoiseSpec":
        return cls(
            kappa_a=params.kappa_a,
            kappa_b=params.kappa_b,
            gamma_eg=params.gamma_eg,
            gamma_fe=params.gamma_fe,
            gamma_fg=params.gamma_fg,
            gamma_phi_e=params.gamma_phi_e,
            gamma_phi_f=params.gamma_phi_f,
        )

    @property
    def is_trivial(self) -> bool:
        return all(getattr(self, n) == 0.0 for n in self.__dataclass_fields__)

    def collapse_operators(self, layout: SpaceLayout) -> list[tuple[float, Operator]]:
        """(rate, operator) pairs for the enabled channels on a layout."""
        ops = [
            (self.kappa_a, embed(annihilation(layout.fock_a), CAVITY_A, layout)),
            (self.kappa_b, embed(annihilation(layout.fock_b), CAVITY_B, layout)),
            (self.gamma_eg, embed(qutrit_transition("e", "g"), QUTRIT, layout)),
            (self.gamma_fe, embed(qutrit_transition("f", "e"), QUTRIT, layout)),
            (self.gamma_fg, embed(qutrit_transition("f", "g"), QUTRIT, layout)),
            (self.gamma_phi_e, embed(qutrit_projector("e"), QUTRIT, layout)),
            (self.gamma_phi_f, embed(qutrit_projector("f"), QUTRIT, layout)),
        ]
        return [(rate, op) for rate, op in ops if rate > 0.0]


@dataclass(frozen=True)
class IntegratorSpec:
    """Adaptive Runge-Kutta configuration.

    ``max_step_fraction`` bounds the step to that fraction of the fastest
    oscillation period when the Hamiltonian is explicitly time dependent.
    ``sector_restrict`` enables the exact excitation-sector restriction;
    ``restrict_tail_tol`` is the largest initial-state weight allowed outside
    the kept sector.
    """

    method: str = "dop853"  # "dop853" | "rk45"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step_fraction: float = 0.25
    max_step: float | None = None
    sector_restrict: bool = True
    restrict_tail_tol: float = 1e-12

    def scipy_method(self) -> str:
        name = self.method.lower()
        if name in ("dop853", "dopri853"):
            return "DOP853"
        if name in ("rk45", "dopri5"):
            return "RK45"
        raise ValueError(f"unsupported integrator method {self.method!r}")


DEFAULT_INTEGRATOR = IntegratorSpec()


# ---------------------------------------------------------------------------
# Lindblad algebra
# ---------------------------------------------------------------------------

def dissipator(op: Operator, rho: QuantumState | np.ndarray) -> np.ndarray:
    """D[O] rho = (2 O rho O† - O†O rho - rho O†O) / 2; traceless for any rho."""
    if isinstance(rho, QuantumState):
        if op.layout != rho.layout:
            raise LayoutMismatchError("dissipator: operator and state layouts differ")
        mat = rho.to_density().data
    else:
        mat = np.asarray(rho, dtype=complex)
        if mat.shape != op.matrix.shape:
            raise LayoutMismatchError("dissipator: matrix shape does not match operator")
    o = op.matrix
    odo = o.conj().T @ o
    return o @ mat @ o.conj().T - 0.5 * (odo @ mat + mat @ odo)


def lindblad_rhs(
    hamiltonian: HamiltonianLike,
    noise: NoiseSpec | None,
    rho: QuantumState | np.ndarray,
    t: float = 0.0,
) -> np.ndarray:
    """dρ/dt = -i[H(t), ρ] + sum of the enabled dissipators.

    Reference implementation used directly for small problems and tests; the
    integrators use a sparse-compiled equivalent.
    """
    if isinstance(rho, QuantumState):
        layout = rho.layout
        mat = rho.to_density().data
    else:
        mat = np.asarray(rho, dtype=complex)
        layout = _layout_of(hamiltonian)
    h = _hamiltonian_at(hamiltonian, t)
    out = -1j * (h @ mat - mat @ h)
    if noise is not None:
        for rate, op in noise.collapse_operators(layout):
            out += rate * dissipator(op, mat)
    return out


def _layout_of(hamiltonian: HamiltonianLike) -> SpaceLayout:
    if isinstance(hamiltonian, (Operator, InteractionPictureHamiltonian)):
        return hamiltonian.layout
    probe = hamiltonian(0.0)
    return probe.layout


def _hamiltonian_at(hamiltonian: HamiltonianLike, t: float) -> np.ndarray:
    if isinstance(hamiltonian, Operator):
        return hamiltonian.matrix
    h = hamiltonian(t)
    return h.matrix if isinstance(h, Operator) else np.asarray(h, dtype=complex)


# ---------------------------------------------------------------------------
# sector restriction
# ---------------------------------------------------------------------------

def _conserving_structure(matrix: sp.spmatrix, excitation: np.ndarray) -> bool:
    """True if every nonzero entry stays on one excitation diagonal <= 0.

    Hamiltonians must conserve the excitation number exactly; collapse
    operators may lower it by a fixed amount.  Raising entries break the
    invariant and disable the restriction.
    """
    coo = matrix.tocoo()
    if coo.nnz == 0:
        return True
    jumps = excitation[coo.row] - excitation[coo.col]
    return bool(np.all(jumps <= 0))


def _sector_mask(
    matrices: Sequence[np.ndarray],
    excitation: np.ndarray,
    tail_tol: float,
) -> np.ndarray | None:
    """Smallest K-sector mask carrying all but ``tail_tol`` of the weight."""
    weight = np.zeros(excitation.size)
    for m in matrices:
        weight += np.abs(m).sum(axis=1) + np.abs(m).sum(axis=0)
    total = weight.sum()
    if total == 0.0:
        return None
    order = np.argsort(excitation, kind="stable")
    sorted_weight = weight[order]
    cum_from_top = np.cumsum(sorted_weight[::-1])[::-1]
    # walk K upward until the discarded weight is small enough
    ks = excitation[order]
    for kmax in range(int(excitation.max()) + 1):
        first_above = np.searchsorted(ks, kmax + 1, side="left")
        discarded = cum_from_top[first_above] if first_above < ks.size else 0.0
        if discarded <= tail_tol * total:
            if kmax >= excitation.max():
                return None  # nothing to gain
            return excitation <= kmax
    return None


class _CompiledLindblad:
    """Sparse generator L acting on vectorized density matrices."""

    def __init__(
        self,
        h_const: np.ndarray,
        collapses: list[tuple[float, np.ndarray]],
        keep: np.ndarray | None,
    ):
        self.keep = keep

        def cut(m: np.ndarray) -> sp.csr_matrix:
            s = sp.csr_matrix(m)
            if keep is not None:
                s = s[keep][:, keep]
            return s

        h = cut(h_const)
        n = h.shape[0]
        eye = sp.identity(n, format="csr")
        gen = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
        for rate, c in collapses:
            cs = cut(c)
            cdc = (cs.conj().T @ cs).tocsr()
            gen = gen + rate * (
                sp.kron(cs, cs.conj())
                - 0.5 * sp.kron(cdc, eye)
                - 0.5 * sp.kron(eye, cdc.T)
            )
        self.generator = gen.tocsr()
        self.n = n

    def restrict(self, mat: np.ndarray) -> np.ndarray:
        if self.keep is None:
            return mat
        return mat[np.ix_(self.keep, self.keep)]

    def embed_back(self, mat: np.ndarray, dim: int) -> np.ndarray:
        if self.keep is None:
            return mat
        out = np.zeros((dim, dim), dtype=complex)
        out[np.ix_(self.keep, self.keep)] = mat
        return out


def _prepare_constant_frame(
    hamiltonian: HamiltonianLike,
) -> tuple[np.ndarray, np.ndarray | None, SpaceLayout]:
    """Constant Hamiltonian matrix plus (optional) frame diagonal."""
    if isinstance(hamiltonian, InteractionPictureHamiltonian):
        return hamiltonian.constant_form().matrix, hamiltonian.frame_diag, hamiltonian.layout
    if isinstance(hamiltonian, Operator):
        return hamiltonian.matrix, None, hamiltonian.layout
    raise TypeError("time-dependent callable has no constant form")


def _frame_rotate(mat: np.ndarray, frame_diag: np.ndarray | None, t: float) -> np.ndarray:
    if frame_diag is None:
        return mat
    ph = np.exp(1j * frame_diag * t)
    return (ph[:, None] * mat) * ph.conj()[None, :]


def lindblad_blocks(
    blocks: Sequence[np.ndarray],
    hamiltonian: Operator | InteractionPictureHamiltonian,
    noise: NoiseSpec | None,
    t_final: float,
    spec: IntegratorSpec = DEFAULT_INTEGRATOR,
    block_shifts: Sequence[float] | None = None,
) -> list[np.ndarray]:
    """Propagate arbitrary operator blocks through the Lindblad map.

    The master equation is linear on matrices, so evolving the operator
    blocks of a parametrized family of density matrices once is exact for
    every member of the family.  Blocks need not be hermitian.  Results are
    reported in the same picture as ``hamiltonian`` (interaction picture
    when it carries oscillating phases).

    ``block_shifts`` factors a known dominant rotation ``exp(i w t)`` out of
    each block before integrating (the generator becomes ``L - i w``), which
    keeps qutrit-coherence blocks slowly varying in the constant frame; the
    returned blocks are unaffected by the choice, only the step count is.
    """
    if t_final == 0.0:
        return [np.asarray(b, dtype=complex) for b in blocks]

    h_const, frame_diag, layout = _prepare_constant_frame(hamiltonian)
    dim = layout.dim
    collapses = []
    if noise is not None:
        collapses = [(rate, op.matrix) for rate, op in noise.collapse_operators(layout)]

    keep = None
    if spec.sector_restrict:
        excitation = _try_excitation(layout)
        if excitation is not None and _restriction_applies(h_const, collapses, excitation):
            keep = _sector_mask(list(blocks), excitation, spec.restrict_tail_tol)

    compiled = _CompiledLindblad(h_const, collapses, keep)
    n = compiled.n
    shifts = list(block_shifts) if block_shifts is not None else [0.0] * len(blocks)
    if len(shifts) != len(blocks):
        raise IntegrationError("need one block shift per block")

    out: list[np.ndarray | None] = [None] * len(blocks)
    eye = sp.identity(n * n, format="csr")
    for shift in sorted(set(shifts)):
        idx = [i for i, s in enumerate(shifts) if s == shift]
        gen = compiled.generator if shift == 0.0 else (
            compiled.generator - 1j * shift * eye
        ).tocsr()
        y0 = np.concatenate([
            compiled.restrict(np.asarray(blocks[i], dtype=complex)).ravel() for i in idx
        ]).astype(complex)
        nb = len(idx)

        def rhs(t, y, gen=gen, nb=nb):
            ym = y.reshape(nb, n * n)
            return (gen @ ym.T).T.reshape(-1)

        sol = solve_ivp(
            rhs,
            (0.0, t_final),
            y0,
            t_eval=[t_final],
            method=spec.scipy_method(),
            rtol=spec.rel_tol,
            atol=spec.abs_tol,
        )
        if not sol.success:
            raise IntegrationError(
                f"master-equation integration failed: {sol.message}",
                last_time=float(sol.t[-1]) if sol.t.size else 0.0,
            )
        rewind = np.exp(1j * shift * t_final)
        for j, i in enumerate(idx):
            m = sol.y[j * n * n:(j + 1) * n * n, -1].reshape(n, n)
            m = compiled.embed_back(m, dim) * rewind
            out[i] = _frame_rotate(m, frame_diag, t_final)
    return [m for m in out]


def _try_excitation(layout: SpaceLayout) -> np.ndarray | None:
    try:
        return total_excitation(layout)
    except Exception:
        return None


def _restriction_applies(
    h_const: np.ndarray,
    collapses: list[tuple[float, np.ndarray]],
    excitation: np.ndarray,
) -> bool:
    h = sp.csr_matrix(h_const)
    coo = h.tocoo()
    if coo.nnz and np.any(excitation[coo.row] != excitation[coo.col]):
        return False
    return all(_conserving_structure(sp.csr_matrix(c), excitation) for _, c in collapses)


@dataclass(frozen=True)
class Evolution:
    """Sampled trajectory of an evolution run.

    ``diagnostics`` holds one dict per sample (trace deficit, hermiticity
    deficit, minimum eigenvalue for density matrices; norm deficit for pure
    states).  Numbers are recorded, never repaired.
    """

    times: tuple[float, ...]
    states: tuple[QuantumState, ...]
    diagnostics: tuple[dict, ...]
    spec: IntegratorSpec
    wall_time: float

    @property
    def final(self) -> QuantumState:
        return self.states[-1]


def evolve_master(
    rho0: QuantumState,
    hamiltonian: HamiltonianLike,
    noise: NoiseSpec | None,
    t_final: float,
    spec: IntegratorSpec = DEFAULT_INTEGRATOR,
    sample_times: Sequence[float] | None = None,
    use_constant_frame: bool = True,
) -> Evolution:
    """Integrate the master equation from a density (or pure) initial state.

    Constant and interaction-picture Hamiltonians take the sparse-compiled
    route; arbitrary time-dependent callables are integrated directly with
    the step bound resolving the fastest oscillation.  Passing
    ``use_constant_frame=False`` forces an interaction-picture Hamiltonian
    through the literal time-dependent route (the two are equivalent; the
    literal route exists as a cross-check).
    """
    layout = rho0.layout
    rho_mat = rho0.to_density().data
    times = _sample_times(t_final, sample_times)
    started = _time.perf_counter()

    if isinstance(hamiltonian, InteractionPictureHamiltonian) and not use_constant_frame:
        states = _master_timedep_route(rho_mat, hamiltonian, noise, times, spec, layout)
    elif isinstance(hamiltonian, (Operator, InteractionPictureHamiltonian)):
        if hamiltonian.layout != layout:
            raise LayoutMismatchError("evolve_master: Hamiltonian/state layout mismatch")
        states = _master_constant_route(rho_mat, hamiltonian, noise, times, spec, layout)
    else:
        states = _master_timedep_route(rho_mat, hamiltonian, noise, times, spec, layout)

    wall = _time.perf_counter() - started
    qstates = tuple(QuantumState.density(layout, m) for m in states)
    diags = tuple(s.diagnostics() for s in qstates)
    return Evolution(tuple(times), qstates, diags, spec, wall)


def _sample_times(t_final: float, sample_times: Sequence[float] | None) -> list[float]:
    if sample_times is None:
        return [0.0, t_final] if t_final != 0.0 else [0.0]
    ts = sorted(float(t) for t in sample_times)
    if any(t < 0 or t > t_final for t in ts):
        raise IntegrationError("sample times must lie within [0, t_final]")
    return ts


def _master_constant_route(rho_mat, hamiltonian, noise, times, spec, layout):
    h_const, frame_diag, _ = _prepare_constant_frame(hamiltonian)
    collapses = []
    if noise is not None:
        collapses = [(rate, op.matrix) for rate, op in noise.collapse_operators(layout)]
    keep = None
    if spec.sector_restrict:
        excitation = _try_excitation(layout)
        if excitation is not None and _restriction_applies(h_const, collapses, excitation):
            keep = _sector_mask([rho_mat], excitation, spec.restrict_tail_tol)
    compiled = _CompiledLindblad(h_const, collapses, keep)
    gen = compiled.generator
    n = compiled.n
    y0 = compiled.restrict(rho_mat).ravel().astype(complex)

    positive = [t for t in times if t > 0.0]
    results: dict[float, np.ndarray] = {}
    if 0.0 in times or not positive:
        results[0.0] = rho_mat
    if positive:
        sol = solve_ivp(
            lambda t, y: gen @ y,
            (0.0, positive[-1]),
            y0,
            t_eval=positive,
            method=spec.scipy_method(),
            rtol=spec.rel_tol,
            atol=spec.abs_tol,
        )
        if not sol.success:
            raise IntegrationError(
                f"master-equation integration failed: {sol.message}",
                last_time=float(sol.t[-1]) if sol.t.size else 0.0,
            )
        for idx, t in enumerate(positive):
            m = compiled.embed_back(sol.y[:, idx].reshape(n, n), layout.dim)
            results[t] = _frame_rotate(m, frame_diag, t)
    return [results[t] if t > 0.0 else _frame_rotate(rho_mat, frame_diag, 0.0) for t in times]


def _master_timedep_route(rho_mat, hamiltonian, noise, times, spec, layout):
    dim = layout.dim
    collapses = []
    if noise is not None:
        collapses = [(rate, sp.csr_matrix(op.matrix)) for rate, op in noise.collapse_operators(layout)]
    cdc = [(rate, (c.conj().T @ c).toarray()) for rate, c in collapses]

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        h = _hamiltonian_at(hamiltonian, t)
        out = -1j * (h @ rho - rho @ h)
        for (rate, c), (_, dd) in zip(collapses, cdc):
            out += rate * (c @ rho @ c.conj().T.toarray() - 0.5 * (dd @ rho + rho @ dd))
        return out.ravel()

    max_step = _resolve_max_step(hamiltonian, spec)
    positive = [t for t in times if t > 0.0]
    results = {0.0: rho_mat}
    if positive:
        sol = solve_ivp(
            rhs,
            (0.0, positive[-1]),
            rho_mat.ravel().astype(complex),
            t_eval=positive,
            method=spec.scipy_method(),
            rtol=spec.rel_tol,
            atol=spec.abs_tol,
            max_step=max_step,
        )
        if not sol.success:
            raise IntegrationError(
                f"master-equation integration failed: {sol.message}",
                last_time=float(sol.t[-1]) if sol.t.size else 0.0,
            )
        for idx, t in enumerate(positive):
            results[t] = sol.y[:, idx].reshape(dim, dim)
    return [results[t] for t in times]


def _resolve_max_step(hamiltonian, spec: IntegratorSpec) -> float:
    if spec.max_step is not None:
        return spec.max_step
    fmax = getattr(hamiltonian, "max_frequency", 0.0)
    if callable(fmax):  # property on a wrapper object
        fmax = 0.0
    if fmax and fmax > 0.0:
        return spec.max_step_fraction * 2.0 * math.pi / fmax
    return np.inf


def evolve_unitary(
    psi0: QuantumState,
    hamiltonian: HamiltonianLike,
    t_final: float,
    spec: IntegratorSpec = DEFAULT_INTEGRATOR,
    sample_times: Sequence[float] | None = None,
) -> Evolution:
    """Integrate the Schroedinger equation with the adaptive RK engine.

    For a closed-form reference (or bulk noiseless work) use
    :func:`propagate_exact` instead.
    """
    if not psi0.is_pure:
        raise PositivityError("evolve_unitary requires a pure state")
    layout = psi0.layout
    times = _sample_times(t_final, sample_times)
    started = _time.perf_counter()

    frame_diag = None
    if isinstance(hamiltonian, InteractionPictureHamiltonian):
        if hamiltonian.layout != layout:
            raise LayoutMismatchError("evolve_unitary: Hamiltonian/state layout mismatch")
        h_sparse = sp.csr_matrix(hamiltonian.constant_form().matrix)
        frame_diag = hamiltonian.frame_diag
        rhs = lambda t, y: -1j * (h_sparse @ y)
        max_step = np.inf
    elif isinstance(hamiltonian, Operator):
        if hamiltonian.layout != layout:
            raise LayoutMismatchError("evolve_unitary: Hamiltonian/state layout mismatch")
        h_sparse = sp.csr_matrix(hamiltonian.matrix)
        rhs = lambda t, y: -1j * (h_sparse @ y)
        max_step = np.inf
    else:
        rhs = lambda t, y: -1j * (_hamiltonian_at(hamiltonian, t) @ y)
        max_step = _resolve_max_step(hamiltonian, spec)

    positive = [t for t in times if t > 0.0]
    results = {0.0: np.array(psi0.data)}
    if positive:
        sol = solve_ivp(
            rhs,
            (0.0, positive[-1]),
            psi0.data.astype(complex),
            t_eval=positive,
            method=spec.scipy_method(),
            rtol=spec.rel_tol,
            atol=spec.abs_tol,
            max_step=max_step,
        )
        if not sol.success:
            raise IntegrationError(
                f"unitary integration failed: {sol.message}",
                last_time=float(sol.t[-1]) if sol.t.size else 0.0,
            )
        for idx, t in enumerate(positive):
            vec = sol.y[:, idx]
            if frame_diag is not None:
                vec = np.exp(1j * frame_diag * t) * vec
            results[t] = vec

    wall = _time.perf_counter() - started
    states = tuple(QuantumState.pure(layout, results[t]) for t in times)
    diags = tuple(s.diagnostics() for s in states)
    return Evolution(tuple(times), states, diags, spec, wall)


def propagate_exact(state: QuantumState, hamiltonian: HamiltonianLike, t: float) -> QuantumState:
    """Closed-system propagation by dense eigendecomposition.

    Exact up to the diagonalization; supports constant Hamiltonians and
    interaction-picture Hamiltonians (via their constant form plus frame
    phases).  Works on pure states and density matrices.
    """
    if isinstance(hamiltonian, InteractionPictureHamiltonian):
        h = hamiltonian.constant_form().matrix
        frame_diag = hamiltonian.frame_diag
        layout = hamiltonian.layout
    elif isinstance(hamiltonian, Operator):
        h = hamiltonian.matrix
        frame_diag = None
        layout = hamiltonian.layout
    else:
        raise TypeError("propagate_exact needs a constant-form Hamiltonian")
    if layout != state.layout:
        raise LayoutMismatchError("propagate_exact: Hamiltonian/state layout mismatch")

    herm_dev = np.abs(h - h.conj().T).max()
    if herm_dev > 1e-10:
        raise PositivityError(f"Hamiltonian is not hermitian (deficit {herm_dev:.2e})")
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * t)
    if state.is_pure:
        vec = evecs @ (phases * (evecs.conj().T @ state.data))
        if frame_diag is not None:
            vec = np.exp(1j * frame_diag * t) * vec
        return QuantumState.pure(layout, vec)
    u = (evecs * phases) @ evecs.conj().T
    mat = u @ state.data @ u.conj().T
    mat = _frame_rotate(mat, frame_diag, t)
    return QuantumState.density(layout, mat)
