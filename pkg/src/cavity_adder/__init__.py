"""Probabilistic quantum adder on two cavities coupled to a transmon qutrit.

Subpackages
-----------
- :mod:`cavity_adder.spaces` — truncated Fock/qutrit operator algebra
- :mod:`cavity_adder.model` — parameters, schedules, Hamiltonians
- :mod:`cavity_adder.dynamics` — unitary and Lindblad evolution engines
- :mod:`cavity_adder.oracle` — closed-form ground truths and exact phases
- :mod:`cavity_adder.protocol` — the adder pipeline
- :mod:`cavity_adder.harness` — scenario registry, sweeps, CSV/JSON output
- :mod:`cavity_adder.cli` — the ``cavity-adder`` command
"""

__version__ = "0.1.0"

from .spaces import (  # noqa: F401
    CAVITY_A,
    CAVITY_B,
    QUTRIT,
    Operator,
    QuantumState,
    SpaceLayout,
    annihilation,
    coherent_state,
    embed,
    expectation,
    fidelity,
    fock_state,
    overlap,
    partial_trace,
    product_state,
    qutrit_projector,
    qutrit_transition,
)
from .model import (  # noqa: F401
    ANGULAR,
    CYCLIC,
    DispersiveShifts,
    InteractionPictureHamiltonian,
    ModelParams,
    Scheme,
    SchemeVariant,
    crosstalk_hamiltonian,
    detuning_from_schedule,
    dispersive_shifts,
    effective_hamiltonian,
    full_hamiltonian,
    protocol_time,
    schedule_ratio,
)
from .dynamics import (  # noqa: F401
    IntegratorSpec,
    NoiseSpec,
    dissipator,
    evolve_master,
    evolve_unitary,
    lindblad_rhs,
    propagate_exact,
)
from .oracle import (  # noqa: F401
    ExactPhase,
    ModeMixMatrix,
    abstract_adder,
    adder_output,
    beam_splitter_mix,
    coherent_bs_evolve,
    conditional_phase,
    published_branch_signs,
)
from .protocol import (  # noqa: F401
    ProtocolConfig,
    ProtocolResult,
    ideal_target_state,
    measure_cavity_reference,
    measure_qutrit,
    prepare_initial_state,
    qutrit_rotation,
    run_adder,
    run_controlled_swap,
)
from .harness import (  # noqa: F401
    Scenario,
    SweepResult,
    average_fidelity,
    builtin_scenarios,
    run_crosstalk_sweep,
    run_inhomogeneity_sweep,
    run_theta_sweep,
)
