"""Closed-form ground truths, independent of the integrators.

Contains the abstract post-selection algebra of the adder, the Heisenberg
beam-splitter solutions for two-mode mixing, and exact rational-pi
bookkeeping of the conditional phases each cavity Fock component acquires at
the scheduled protocol time.

The phase accounting is honest rather than aspirational: at a scheduled swap
time the exchanged branch picks up ``(-1)^(n+m)`` on the Fock component
``|n, m>`` on top of the branch's constant sign, because the photon-number
shift of the active level doubles the beam-splitter's ``i^(n+m)`` instead of
cancelling it.  On product states this parity acts as a per-mode amplitude
flip (a coherent state swaps with its amplitude negated).  All downstream
"exact" targets and adder outputs include it; the widely used "published"
forms, which drop the parity factor, are available alongside for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DestructiveInterferenceError, PositivityError
from .model import Scheme, rate_fractions, schedule_ratio, verify_schedule
from .spaces import QuantumState, SpaceLayout, overlap

PUBLISHED = "published"
EXACT = "exact"

PLUS_I = "plus_i"
MINUS_I = "minus_i"


# ---------------------------------------------------------------------------
# exact phases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactPhase:
    """A phase exp(i pi q) with rational q, reduced modulo 2.

    Supports exact addition and integer scaling; ``as_complex`` leaves the
    exact world only at the boundary.
    """

    half_turns: Fraction

    def __post_init__(self):
        object.__setattr__(self, "half_turns", Fraction(self.half_turns) % 2)

    @classmethod
    def zero(cls) -> "ExactPhase":
        return cls(Fraction(0))

    @classmethod
    def pi(cls) -> "ExactPhase":
        return cls(Fraction(1))

    def __add__(self, other: "ExactPhase") -> "ExactPhase":
        return ExactPhase(self.half_turns + other.half_turns)

    def __mul__(self, k: int) -> "ExactPhase":
        return ExactPhase(self.half_turns * k)

    __rmul__ = __mul__

    @property
    def is_real_sign(self) -> bool:
        return self.half_turns in (Fraction(0), Fraction(1))

    def as_sign(self) -> int:
        if self.half_turns == 0:
            return 1
        if self.half_turns == 1:
            return -1
        raise PositivityError(f"phase {self.half_turns}·pi is not ±1")

    def as_complex(self) -> complex:
        if self.half_turns == 0:
            return 1.0 + 0.0j
        if self.half_turns == 1:
            return -1.0 + 0.0j
        arg = math.pi * float(self.half_turns)
        return complex(math.cos(arg), math.sin(arg))


# ---------------------------------------------------------------------------
# two-mode beam-splitter solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeMixMatrix:
    """2x2 unitary acting on the creation-operator pair (a†, b†)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise PositivityError("mode-mix matrix must be 2x2")
        object.__setattr__(self, "matrix", m)

    def unitarity_deficit(self) -> float:
        m = self.matrix
        return float(np.abs(m @ m.conj().T - np.eye(2)).max())

    def is_unitary(self, tol: float = 1e-12) -> bool:
        return self.unitarity_deficit() < tol

    def compose(self, other: "ModeMixMatrix") -> "ModeMixMatrix":
        return ModeMixMatrix(self.matrix @ other.matrix)


def beam_splitter_mix(rate: float, t: float, sign_convention: str = PLUS_I) -> ModeMixMatrix:
    """Heisenberg solution of a two-mode exchange coupling.

    ``plus_i`` gives ``a†(t) = cos(rt) a† + i sin(rt) b†`` (the solution for
    a coupling entering with a negative sign, as on the ground-level block);
    ``minus_i`` the conjugate convention (positive coupling, as on the upper
    blocks).
    """
    c = math.cos(rate * t)
    s = math.sin(rate * t)
    if sign_convention == PLUS_I:
        off = 1j * s
    elif sign_convention == MINUS_I:
        off = -1j * s
    else:
        raise ValueError(f"unknown sign convention {sign_convention!r}")
    return ModeMixMatrix(np.array([[c, off], [off, c]]))


def coherent_bs_evolve(alpha: complex, beta: complex, mix: ModeMixMatrix) -> tuple[complex, complex]:
    """Coherent amplitudes after the mode mixing encoded by ``mix``.

    Amplitudes transform by the transpose of the creation-operator matrix,
    so the output is again a product of coherent states.
    """
    if not mix.is_unitary(1e-10):
        raise PositivityError(
            f"mode-mix matrix is not unitary (deficit {mix.unitarity_deficit():.2e})"
        )
    vec = mix.matrix.T @ np.array([alpha, beta], dtype=complex)
    return complex(vec[0]), complex(vec[1])


def crosstalk_rotation(g_ab: float, t: float) -> ModeMixMatrix:
    """Mode mixing produced by the static inter-cavity exchange coupling."""
    return beam_splitter_mix(g_ab, t, MINUS_I)


# ---------------------------------------------------------------------------
# conditional-phase bookkeeping
# ---------------------------------------------------------------------------

def _scheduled_time_fraction(scheme: Scheme, ratio: Fraction) -> Fraction:
    """Protocol time in units (pi * anharm / g^2), exact."""
    rates = rate_fractions(ratio)
    r_swap = rates[scheme.swap_rate_name]
    return scheme.swap_multiple() / abs(r_swap)


_BLOCK_CONSTANT = {"g": Fraction(0), "e": None, "f": None}  # filled per ratio


def _block_constant_fraction(level: str, ratio: Fraction) -> Fraction:
    """Constant block offset in units g^2/anharm: 0, 2*chi, 2*lam."""
    rates = rate_fractions(ratio)
    if level == "g":
        return Fraction(0)
    if level == "e":
        return 2 * rates["chi"]
    if level == "f":
        return 2 * rates["lam"]
    raise PositivityError(f"unknown level {level!r}")


def conditional_phase(scheme: Scheme, n: int, m: int) -> dict[str, ExactPhase]:
    """Exact phase of the Fock component |n, m> on each qutrit branch at t*.

    Returns a mapping from the two participating qutrit levels to the phase
    the component ``|n>_A |m>_B`` carries after the scheduled evolution,
    relative to the bare exchanged/idle content.  Every phase reduces to 0
    or pi exactly.  The exchanged branch's phase carries the per-photon
    parity term ``(1 + 2 k1)(n + m)``; the idle branch's phase is a constant.
    """
    if n < 0 or m < 0:
        raise PositivityError("Fock indices must be non-negative")
    ratio = schedule_ratio(scheme)
    verify_schedule(scheme, ratio)
    tau = _scheduled_time_fraction(scheme, ratio)  # in pi * anharm / g^2
    rates = rate_fractions(ratio)

    sign_swap = 1 if rates[scheme.swap_rate_name] > 0 else -1
    # exchange factor (-i*sigma)^(n+m) plus Stark phase exp(-i r_swap t (n+m))
    per_photon = Fraction(-sign_swap, 2) - rates[scheme.swap_rate_name] * tau
    swap_phase = ExactPhase(per_photon * (n + m)) + ExactPhase(
        -_block_constant_fraction(scheme.control_level, ratio) * tau
    )

    # idle branch: mixing returns to identity; only Stark and constant offsets
    idle_photon = -rates[scheme.idle_rate_name] * tau
    idle_phase = ExactPhase(idle_photon * (n + m)) + ExactPhase(
        -_block_constant_fraction(scheme.idle_level, ratio) * tau
    )
    return {scheme.control_level: swap_phase, scheme.idle_level: idle_phase}


def branch_phase_constants(scheme: Scheme) -> dict[str, ExactPhase]:
    """Constant (photon-independent) part of each branch phase."""
    return conditional_phase(scheme, 0, 0)


def published_branch_signs(scheme: Scheme) -> dict[str, int]:
    """±1 branch signs of the circulated closed forms.

    These coincide with the exact constants; the circulated forms differ
    from the exact bookkeeping only by dropping the exchanged branch's
    per-photon parity factor.
    """
    return {lvl: ph.as_sign() for lvl, ph in branch_phase_constants(scheme).items()}


# ---------------------------------------------------------------------------
# branch contents and the abstract adder
# ---------------------------------------------------------------------------

def parity_flip(vec: np.ndarray) -> np.ndarray:
    """Per-photon sign flip diag((-1)^n) — coherent amplitudes negate."""
    v = np.asarray(vec, dtype=complex)
    signs = (-1.0) ** np.arange(v.size)
    return signs * v


def branch_products(
    scheme: Scheme,
    psi_a: np.ndarray,
    phi_b: np.ndarray,
    phases: str = EXACT,
) -> dict[str, tuple[np.ndarray, np.ndarray, complex]]:
    """Cavity contents (vec_A, vec_B, scalar) of each branch at t*.

    The exchanged branch holds the swapped inputs — with per-mode parity
    flips under ``phases="exact"`` — and the idle branch the original
    inputs; the scalar carries the branch's constant sign.
    """
    psi = np.asarray(psi_a, dtype=complex)
    phi = np.asarray(phi_b, dtype=complex)
    consts = branch_phase_constants(scheme)
    out: dict[str, tuple[np.ndarray, np.ndarray, complex]] = {}
    swap_scalar = consts[scheme.control_level].as_complex()
    idle_scalar = consts[scheme.idle_level].as_complex()
    if phases == EXACT:
        out[scheme.control_level] = (parity_flip(phi), parity_flip(psi), swap_scalar)
    elif phases == PUBLISHED:
        out[scheme.control_level] = (phi, psi, swap_scalar)
    else:
        raise ValueError(f"unknown phase convention {phases!r}")
    out[scheme.idle_level] = (psi, phi, idle_scalar)
    return out


def _superpose(
    vec1: np.ndarray, c1: complex, vec2: np.ndarray, c2: complex
) -> tuple[np.ndarray, float]:
    raw = c1 * vec1 + c2 * vec2
    nsq = 0.5 * float(np.real(np.vdot(raw, raw)))
    if nsq < 1e-14:
        raise DestructiveInterferenceError(
            "adder output cancels destructively; the branch is undefined"
        )
    return raw / math.sqrt(2.0 * nsq), nsq


def abstract_adder(
    psi: QuantumState,
    phi: QuantumState,
    theta: float,
    ref: QuantumState,
    sign: int,
) -> tuple[QuantumState, float]:
    """Post-selected superposition of the controlled-exchange adder.

    Output ``(gamma |phi> ± eta |psi>)/N`` with ``gamma = sin(theta) <ref|psi>``
    and ``eta = cos(theta) <ref|phi>``; the returned ``N^2`` is the overall
    success probability
    ``(1/2)[|gamma|^2 + |eta|^2 ± 2 Re(gamma eta* <psi|phi>)]``.

    Raises
    ------
    DestructiveInterferenceError
        When ``N^2`` vanishes and the output is undefined.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    gamma = math.sin(theta) * overlap(ref, psi)
    eta = math.cos(theta) * overlap(ref, phi)
    vec, nsq = _superpose(phi.data, gamma, psi.data, sign * eta)
    return QuantumState.pure(psi.layout, vec), nsq


def adder_output(
    scheme: Scheme,
    psi: QuantumState,
    phi: QuantumState,
    theta: float,
    ref: QuantumState,
    branch: str,
    phases: str = EXACT,
) -> tuple[QuantumState, float]:
    """Scheme-resolved conditional output of cavity A and its probability.

    ``branch`` is "plus" or "minus".  The probability is the joint
    probability of the qutrit branch and the reference projection, i.e. the
    squared norm of the post-selected (unnormalized) amplitude including the
    1/sqrt(2) of the qutrit measurement.
    """
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    contents = branch_products(scheme, psi.data, phi.data, phases=phases)
    a_idle, b_idle, s_idle = contents[scheme.idle_level]
    a_swap, b_swap, s_swap = contents[scheme.control_level]
    # ancilla weights: sin(theta) on g, cos(theta) on the excited level
    w = {"g": math.sin(theta), scheme.ancilla_excited_level: math.cos(theta)}
    branch_sign = 1 if branch == "plus" else -1
    # the minus branch flips the excited-level component
    sgn = {"g": 1, scheme.ancilla_excited_level: branch_sign}

    lvl_idle, lvl_swap = scheme.idle_level, scheme.control_level
    ref_vec = ref.data
    c_idle = w[lvl_idle] * sgn[lvl_idle] * s_idle * complex(np.vdot(ref_vec, b_idle))
    c_swap = w[lvl_swap] * sgn[lvl_swap] * s_swap * complex(np.vdot(ref_vec, b_swap))
    vec, nsq = _superpose(a_idle, c_idle, a_swap, c_swap)
    return QuantumState.pure(psi.layout, vec), nsq
