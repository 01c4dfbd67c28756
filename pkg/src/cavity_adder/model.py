"""Physical parameters, timing schedules, and Hamiltonian factories.

Internally every frequency is angular (rad/us) and every rate is 1/us; the
``unit_convention`` flag records how quoted MHz values were interpreted when
building parameters (``cyclic`` multiplies them by 2*pi, ``angular`` takes
them verbatim).  Schedule algebra is exact: detuning/anharmonicity ratios and
timing conditions are ``fractions.Fraction`` identities, converted to float
only at the boundary.

The interaction-picture Hamiltonian with oscillating phases is represented by
:class:`InteractionPictureHamiltonian`, which also exposes an equivalent
constant-Hamiltonian form (a diagonal frame on the qutrit plus the bare
couplings).  Both forms generate identical reduced dynamics because every
collapse channel in the noise model is invariant under the frame rotation.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import (
    InvalidScheduleError,
    LayoutMismatchError,
    RegimeViolationError,
    ResonanceError,
    ScheduleInconsistencyError,
)
from .spaces import (
    CAVITY_A,
    CAVITY_B,
    QUTRIT,
    Operator,
    SpaceLayout,
    annihilation,
    embed,
    qutrit_projector,
    qutrit_transition,
)

TWO_PI = 2.0 * math.pi

CYCLIC = "cyclic"
ANGULAR = "angular"


def quoted_to_angular(value: float, unit_convention: str) -> float:
    """Convert a quoted frequency (e.g. "1 MHz") to rad/us."""
    if unit_convention == CYCLIC:
        return TWO_PI * value
    if unit_convention == ANGULAR:
        return float(value)
    raise ValueError(f"unknown unit convention {unit_convention!r}")


@dataclass(frozen=True)
class ModelParams:
    """All physical rates of the transmon-qutrit/two-cavity system.

    Attributes
    ----------
    g : float
        Transmon-cavity coupling (angular, rad/us); cavity A couples with
        ``g`` and cavity B with ``coupling_asymmetry * g``.
    coupling_asymmetry : float
        Dimensionless factor c in ``g_B = c * g``.
    delta : float
        Detuning of the g-e transition from the (common) cavity frequency,
        sign-carrying (rad/us).
    anharm : float
        Transmon anharmonicity, positive (rad/us).
    g_ab : float
        Direct inter-cavity crosstalk coupling (rad/us).
    kappa_a, kappa_b : float
        Cavity decay rates (1/us).
    gamma_eg, gamma_fe, gamma_fg : float
        Qutrit relaxation rates e->g, f->e, f->g (1/us).
    gamma_phi_e, gamma_phi_f : float
        Pure dephasing rates of levels e and f (1/us).
    unit_convention : str
        How quoted values were read when this object was built.
    """

    g: float
    delta: float
    anharm: float
    coupling_asymmetry: float = 1.0
    g_ab: float = 0.0
    kappa_a: float = 0.0
    kappa_b: float = 0.0
    gamma_eg: float = 0.0
    gamma_fe: float = 0.0
    gamma_fg: float = 0.0
    gamma_phi_e: float = 0.0
    gamma_phi_f: float = 0.0
    unit_convention: str = CYCLIC

    def __post_init__(self):
        if self.anharm <= 0:
            raise RegimeViolationError(f"anharmonicity must be positive, got {self.anharm}")
        if abs(self.delta) <= self.anharm:
            raise RegimeViolationError(
                f"|delta| = {abs(self.delta):.4g} must exceed the anharmonicity "
                f"{self.anharm:.4g}"
            )
        for name in ("kappa_a", "kappa_b", "gamma_eg", "gamma_fe", "gamma_fg",
                     "gamma_phi_e", "gamma_phi_f"):
            if getattr(self, name) < 0:
                raise RegimeViolationError(f"rate {name} must be >= 0")
        if self.g_ab < 0:
            raise RegimeViolationError("g_ab must be >= 0")
        g_max = max(abs(self.g), abs(self.coupling_asymmetry * self.g))
        if g_max > 0:
            delta_ef = abs(self.delta - self.anharm)
            if abs(self.delta) < 10.0 * g_max or delta_ef < 10.0 * math.sqrt(2) * g_max:
                warnings.warn(
                    "large-detuning regime is marginal: "
                    f"|delta|/g = {abs(self.delta) / g_max:.2f}, "
                    f"|delta - anharm|/(sqrt(2) g) = {delta_ef / (math.sqrt(2) * g_max):.2f}",
                    stacklevel=3,
                )

    @property
    def g_a(self) -> float:
        return self.g

    @property
    def g_b(self) -> float:
        return self.coupling_asymmetry * self.g

    def with_updates(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)

    @classmethod
    def from_dispersive(
        cls,
        chi_quoted: float,
        delta_quoted: float,
        anharm_quoted: float,
        unit_convention: str = CYCLIC,
        **rates,
    ) -> "ModelParams":
        """Build parameters from a quoted dispersive shift instead of g.

        The coupling is derived as ``g = sqrt(|chi * delta|)``; the sign of
        chi then follows the sign of the detuning.
        """
        chi = quoted_to_angular(chi_quoted, unit_convention)
        delta = quoted_to_angular(delta_quoted, unit_convention)
        anharm = quoted_to_angular(anharm_quoted, unit_convention)
        g = math.sqrt(abs(chi * delta))
        return cls(g=g, delta=delta, anharm=anharm,
                   unit_convention=unit_convention, **rates)


@dataclass(frozen=True)
class DispersiveShifts:
    """The three photon-number shifts of the dispersive model.

    ``chi = g^2/Delta`` (g level), ``lam = 2 g^2/(Delta - anharm)`` (f
    level), ``Lam = chi - lam`` (e level).  For ``Delta > anharm > 0``:
    chi > 0, lam > 0, Lam < 0; all three flip sign with the detuning.
    """

    chi: float
    lam: float
    Lam: float


def dispersive_shifts(params: ModelParams, on_asymmetric: str = "reject") -> DispersiveShifts:
    """Dispersive shifts for the symmetric-coupling model.

    Parameters
    ----------
    on_asymmetric : {"reject", "mean"}
        What to do when ``coupling_asymmetry != 1``: refuse (default) or
        approximate with the mean coupling.
    """
    if params.coupling_asymmetry != 1.0:
        if on_asymmetric == "mean":
            g = 0.5 * (params.g_a + params.g_b)
        elif on_asymmetric == "reject":
            raise LayoutMismatchError(
                "dispersive shifts assume symmetric couplings; "
                "got coupling_asymmetry != 1 (pass on_asymmetric='mean' to average)"
            )
        else:
            raise ValueError(f"unknown asymmetry policy {on_asymmetric!r}")
    else:
        g = params.g
    if params.delta == 0.0:
        raise ResonanceError("Delta = 0: dispersive shift chi diverges")
    if params.delta == params.anharm:
        raise ResonanceError("Delta = anharmonicity: dispersive shift lam diverges")
    chi = g * g / params.delta
    lam = 2.0 * g * g / (params.delta - params.anharm)
    return DispersiveShifts(chi=chi, lam=lam, Lam=chi - lam)


# ---------------------------------------------------------------------------
# schemes and schedules
# ---------------------------------------------------------------------------

class SchemeVariant(enum.Enum):
    """The four protocol branches: auxiliary (unused) level x control level."""

    E_AUX_G_CONTROL = "EAuxGControl"
    E_AUX_F_CONTROL = "EAuxFControl"
    F_AUX_G_CONTROL = "FAuxGControl"
    F_AUX_E_CONTROL = "FAuxEControl"


# (ancilla excited level, control/swapped level, idle level) per variant
_SCHEME_LEVELS = {
    SchemeVariant.E_AUX_G_CONTROL: ("f", "g", "f"),
    SchemeVariant.E_AUX_F_CONTROL: ("f", "f", "g"),
    SchemeVariant.F_AUX_G_CONTROL: ("e", "g", "e"),
    SchemeVariant.F_AUX_E_CONTROL: ("e", "e", "g"),
}

_RATE_OF_LEVEL = {"g": "chi", "f": "lam", "e": "Lam"}

CONSISTENT = "consistent"
PUBLISHED = "published"


@dataclass(frozen=True)
class Scheme:
    """Protocol variant plus its integer timing schedule (k1, k2)."""

    variant: SchemeVariant
    k1: int = 0
    k2: int = 0

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0:
            raise InvalidScheduleError("k1 and k2 must be non-negative integers")

    @property
    def ancilla_excited_level(self) -> str:
        return _SCHEME_LEVELS[self.variant][0]

    @property
    def control_level(self) -> str:
        """Qutrit level on which the cavity contents are exchanged."""
        return _SCHEME_LEVELS[self.variant][1]

    @property
    def idle_level(self) -> str:
        """Participating level whose cavity contents return to themselves."""
        return _SCHEME_LEVELS[self.variant][2]

    @property
    def swap_rate_name(self) -> str:
        return _RATE_OF_LEVEL[self.control_level]

    @property
    def idle_rate_name(self) -> str:
        return _RATE_OF_LEVEL[self.idle_level]

    def swap_multiple(self) -> Fraction:
        """|swap rate| * t at the protocol time, in units of pi."""
        return Fraction(1, 2) + 2 * self.k1

    def idle_multiple(self) -> Fraction:
        """|idle rate| * t at the protocol time, in units of pi."""
        return Fraction(2) + 2 * self.k2


def rate_fractions(ratio: Fraction) -> dict[str, Fraction]:
    """chi, lam, Lam as exact multiples of g^2/anharm for Delta = ratio*anharm."""
    if ratio == 0:
        raise ResonanceError("Delta = 0")
    if ratio == 1:
        raise ResonanceError("Delta = anharmonicity")
    chi = 1 / ratio
    lam = 2 / (ratio - 1)
    return {"chi": chi, "lam": lam, "Lam": chi - lam}


def schedule_ratio(scheme: Scheme, branch: str = CONSISTENT) -> Fraction:
    """Exact Delta/anharmonicity ratio required by the scheme's (k1, k2).

    For the fourth variant (e as control) the widely circulated closed form
    has its denominator sign flipped relative to what the two timing
    conditions actually demand; ``branch="consistent"`` (default) returns the
    value that satisfies both conditions exactly, ``branch="published"``
    returns the circulated form (which reproduces the -9*anharm figure for
    k1=1, k2=0 but breaks the idle condition).
    """
    k1, k2 = scheme.k1, scheme.k2
    v = scheme.variant
    if v is SchemeVariant.E_AUX_G_CONTROL:
        num, den = 2 * (k2 + 1), 2 * k2 - 4 * k1 + 1
    elif v is SchemeVariant.E_AUX_F_CONTROL:
        num, den = 4 * k1 + 1, 4 * k1 - 8 * k2 - 7
    elif v is SchemeVariant.F_AUX_G_CONTROL:
        num, den = 4 * k1 + 4 * k2 + 5, 4 * k2 - 4 * k1 + 3
    elif v is SchemeVariant.F_AUX_E_CONTROL:
        if branch == CONSISTENT:
            num, den = 4 * k1 + 4 * k2 + 5, 4 * k1 - 4 * k2 - 3
        elif branch == PUBLISHED:
            num, den = 4 * k1 + 4 * k2 + 5, 4 * k2 - 4 * k1 + 3
        else:
            raise InvalidScheduleError(f"unknown schedule branch {branch!r}")
    else:  # pragma: no cover
        raise InvalidScheduleError(f"unknown variant {v}")
    if den == 0:
        raise InvalidScheduleError(
            f"{v.value} with k1={k1}, k2={k2} has a vanishing schedule denominator"
        )
    return Fraction(num, den)


def verify_schedule(scheme: Scheme, ratio: Fraction) -> None:
    """Check, in exact arithmetic, that both timing conditions hold at the ratio.

    The swap condition fixes ``t = (pi/2 + 2 k1 pi)/|swap rate|``; the idle
    condition requires ``|idle rate| * t = 2 pi + 2 k2 pi`` at the same time.

    Raises
    ------
    ScheduleInconsistencyError
        If the two conditions are incompatible at this detuning ratio.
    """
    rates = rate_fractions(ratio)
    r_swap = rates[scheme.swap_rate_name]
    r_idle = rates[scheme.idle_rate_name]
    if r_swap == 0:
        raise ScheduleInconsistencyError("swap rate vanishes at this detuning")
    lhs = abs(r_idle / r_swap)
    rhs = scheme.idle_multiple() / scheme.swap_multiple()
    if lhs != rhs:
        raise ScheduleInconsistencyError(
            f"idle/swap rate ratio {lhs} != required {rhs} for "
            f"{scheme.variant.value} (k1={scheme.k1}, k2={scheme.k2}) at "
            f"Delta = {ratio} * anharm"
        )


def detuning_from_schedule(scheme: Scheme, anharm: float, branch: str = CONSISTENT) -> float:
    """Detuning (same units as ``anharm``) satisfying the scheme's schedule.

    Raises
    ------
    InvalidScheduleError
        On a vanishing schedule denominator.
    RegimeViolationError
        If the resulting |Delta| does not exceed the anharmonicity.
    """
    ratio = schedule_ratio(scheme, branch=branch)
    if abs(ratio) <= 1:
        raise RegimeViolationError(
            f"schedule gives Delta = {ratio} * anharm, violating |Delta| > anharm"
        )
    if branch == CONSISTENT:
        verify_schedule(scheme, ratio)
    return float(ratio) * anharm


def protocol_time(scheme: Scheme, shifts: DispersiveShifts, rel_tol: float = 1e-12) -> float:
    """Evolution time at which the swap and idle conditions hold together.

    ``t = (pi/2 + 2 k1 pi) / |swap rate|``, with the idle condition
    ``|idle rate| * t = 2 pi + 2 k2 pi`` asserted to relative ``rel_tol``.

    Raises
    ------
    ScheduleInconsistencyError
        If the idle condition fails at that time, i.e. the (Delta, k1, k2)
        triple is not an exact schedule.
    """
    rates = {"chi": shifts.chi, "lam": shifts.lam, "Lam": shifts.Lam}
    r_swap = rates[scheme.swap_rate_name]
    r_idle = rates[scheme.idle_rate_name]
    if r_swap == 0.0:
        raise ScheduleInconsistencyError("swap rate vanishes; no finite protocol time")
    t = float(scheme.swap_multiple()) * math.pi / abs(r_swap)
    target = float(scheme.idle_multiple()) * math.pi
    achieved = abs(r_idle) * t
    if abs(achieved - target) > rel_tol * target:
        raise ScheduleInconsistencyError(
            f"idle condition off by {achieved - target:.3e} rad for "
            f"{scheme.variant.value} (k1={scheme.k1}, k2={scheme.k2}); "
            "the detuning does not match the schedule"
        )
    return t


def swap_only_time(scheme: Scheme, shifts: DispersiveShifts) -> float:
    """Evolution time from the swap condition alone, without consistency checks.

    Exists for reproducing runs whose quoted detuning breaks the idle
    condition; :func:`protocol_time` is the checked variant.
    """
    rates = {"chi": shifts.chi, "lam": shifts.lam, "Lam": shifts.Lam}
    r_swap = rates[scheme.swap_rate_name]
    if r_swap == 0.0:
        raise ScheduleInconsistencyError("swap rate vanishes; no finite protocol time")
    return float(scheme.swap_multiple()) * math.pi / abs(r_swap)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def _two_mode_ops(layout: SpaceLayout) -> tuple[np.ndarray, np.ndarray]:
    a = embed(annihilation(layout.fock_a), CAVITY_A, layout).matrix
    b = embed(annihilation(layout.fock_b), CAVITY_B, layout).matrix
    return a, b


def effective_hamiltonian(shifts: DispersiveShifts, layout: SpaceLayout) -> Operator:
    """Time-independent dispersive Hamiltonian (symmetric couplings).

    Per qutrit level: Stark shifts ``lam*(n_A + n_B + 2)`` on f,
    ``Lam*(n_A + n_B) + 2*chi`` on e, ``-chi*(n_A + n_B)`` on g, plus the
    conditional beam-splitter ``(a†b + ab†)`` with coefficient lam, Lam, -chi
    on f, e, g respectively.
    """
    a, b = _two_mode_ops(layout)
    num = a.conj().T @ a + b.conj().T @ b
    bs = a.conj().T @ b + a @ b.conj().T
    eye = np.eye(layout.dim)
    pg = embed(qutrit_projector("g"), QUTRIT, layout).matrix
    pe = embed(qutrit_projector("e"), QUTRIT, layout).matrix
    pf = embed(qutrit_projector("f"), QUTRIT, layout).matrix
    chi, lam, Lam = shifts.chi, shifts.lam, shifts.Lam
    h = (lam * (num + 2 * eye) @ pf + lam * bs @ pf
         + (Lam * num + 2 * chi * eye) @ pe + Lam * bs @ pe
         - chi * num @ pg - chi * bs @ pg)
    return Operator(layout, h)


def block_hamiltonian(level: str, shifts: DispersiveShifts, layout: SpaceLayout) -> Operator:
    """Two-cavity block of the dispersive Hamiltonian for one qutrit level.

    Returned on the cavity-only layout (A ⊗ B); used by closed-form
    cross-checks.
    """
    cav = SpaceLayout(dims=(layout.fock_a, layout.fock_b), slots=(CAVITY_A, CAVITY_B))
    a = embed(annihilation(layout.fock_a), CAVITY_A, cav).matrix
    b = embed(annihilation(layout.fock_b), CAVITY_B, cav).matrix
    num = a.conj().T @ a + b.conj().T @ b
    bs = a.conj().T @ b + a @ b.conj().T
    eye = np.eye(cav.dim)
    chi, lam, Lam = shifts.chi, shifts.lam, shifts.Lam
    if level == "g":
        h = -chi * num - chi * bs
    elif level == "e":
        h = Lam * num + 2 * chi * eye + Lam * bs
    elif level == "f":
        h = lam * (num + 2 * eye) + lam * bs
    else:
        raise ResonanceError(f"unknown qutrit level {level!r}")
    return Operator(cav, h)


def crosstalk_hamiltonian(g_ab: float, layout: SpaceLayout) -> Operator:
    """Direct inter-cavity beam-splitter coupling ``g_ab (a†b + ab†)``."""
    if g_ab < 0:
        raise RegimeViolationError("g_ab must be >= 0")
    a, b = _two_mode_ops(layout)
    return Operator(layout, g_ab * (a.conj().T @ b + a @ b.conj().T))


@dataclass(frozen=True)
class InteractionPictureHamiltonian:
    """Interaction-picture Hamiltonian with oscillating phase factors.

    ``H(t) = sum_k exp(i f_k t) T_k + h.c. + static`` where the frequencies
    are the g-e and e-f detunings.  The equivalent constant form is
    ``frame_diag + sum_k (T_k + T_k†) + static``: conjugating its propagator
    by ``exp(i diag(frame_diag) t)`` reproduces the interaction-picture
    evolution, and all collapse channels of the noise model commute with
    that rotation up to a pure phase, so Lindblad dynamics may be integrated
    in either form.
    """

    layout: SpaceLayout
    frequencies: tuple[float, ...]
    terms: tuple[np.ndarray, ...]
    static: np.ndarray
    frame_diag: np.ndarray

    def __call__(self, t: float) -> Operator:
        h = np.array(self.static, dtype=complex)
        for f, term in zip(self.frequencies, self.terms):
            ph = np.exp(1j * f * t)
            h += ph * term + np.conj(ph) * term.conj().T
        return Operator(self.layout, h)

    @property
    def max_frequency(self) -> float:
        return max((abs(f) for f in self.frequencies), default=0.0)

    def constant_form(self) -> Operator:
        h = np.diag(self.frame_diag).astype(complex) + self.static
        for term in self.terms:
            h += term + term.conj().T
        return Operator(self.layout, h)

    def frame_phases(self, t: float) -> np.ndarray:
        """Diagonal of exp(i F t), mapping constant-form output back."""
        return np.exp(1j * self.frame_diag * t)


def full_hamiltonian(params: ModelParams, layout: SpaceLayout) -> InteractionPictureHamiltonian:
    """Interaction-picture coupling Hamiltonian (all four off-resonant terms).

    Includes the sqrt(2) enhancement on the e-f transition couplings, the
    coupling asymmetry ``g_B = c g``, and, when ``params.g_ab > 0``, the
    static inter-cavity crosstalk term.  Both cavities share the detuning
    (the asymmetric-detuning case is out of scope).
    """
    a, b = _two_mode_ops(layout)
    seg_p = embed(qutrit_transition("g", "e"), QUTRIT, layout).matrix  # |e><g|
    sfe_p = embed(qutrit_transition("e", "f"), QUTRIT, layout).matrix  # |f><e|
    delta_ge = params.delta
    delta_ef = params.delta - params.anharm

    terms = (
        params.g_a * (a @ seg_p) + params.g_b * (b @ seg_p),
        math.sqrt(2) * params.g_a * (a @ sfe_p) + math.sqrt(2) * params.g_b * (b @ sfe_p),
    )
    frequencies = (delta_ge, delta_ef)

    static = np.zeros((layout.dim, layout.dim), dtype=complex)
    if params.g_ab > 0:
        static = crosstalk_hamiltonian(params.g_ab, layout).matrix

    # qutrit-only frame making the constant form exactly equivalent:
    # E_e - E_g = delta_ge and E_f - E_e = delta_ef with cavity terms absent
    frame = np.zeros(layout.dim)
    level = layout.occupation_grids()[layout.axis(QUTRIT)]
    frame[level == 1] = delta_ge
    frame[level == 2] = delta_ge + delta_ef
    return InteractionPictureHamiltonian(
        layout=layout,
        frequencies=frequencies,
        terms=tuple(np.asarray(t, dtype=complex) for t in terms),
        static=static,
        frame_diag=frame,
    )
