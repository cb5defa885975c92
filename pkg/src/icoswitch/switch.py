"""Qubit-level model of the measurement inside the switch.

Labels: c = control (path) qubit, s = system (polarization) qubit,
a = probe ancilla qubit.  The control branch |0>_c applies Alice's unitary
before the measurement interaction; |1>_c applies it after.  Bob's
interaction couples the system to the ancilla through a CNOT sandwiched
between a measurement-basis rotation (before) and a repreparation rotation
(after).  Which-path information carried by the environment is modeled as
a dephasing channel on the control with knob D: off-diagonal control
blocks shrink by sqrt(1 - D^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmath import LabeledOperator, LabeledVector, partial_trace, tensor
from .settings import ExperimentSetting, alice_unitary, jones, prep_state

UNITARY_TOL = 1e-10

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def _as_qubit(state) -> np.ndarray:
    if isinstance(state, LabeledVector):
        state = state.amplitudes
    state = np.asarray(state, dtype=complex).reshape(2)
    n = np.linalg.norm(state)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"qubit state norm {n:.3e} != 1")
    return state


def _check_unitary(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex).reshape(2, 2)
    if np.abs(u @ u.conj().T - np.eye(2)).max() > UNITARY_TOL:
        raise ValueError("basis must be unitary to 1e-10")
    return u


def _cnot_sa() -> LabeledOperator:
    # system controls, ancilla flips
    p0 = LabeledOperator(["s"], [2], np.diag([1.0, 0.0]))
    p1 = LabeledOperator(["s"], [2], np.diag([0.0, 1.0]))
    eye = LabeledOperator(["a"], [2], np.eye(2))
    x = LabeledOperator(["a"], [2], np.array([[0, 1], [1, 0]]))
    return tensor([p0, eye]) + tensor([p1, x])


def _vn_operator(meas, reprep) -> LabeledOperator:
    """(reprep (x) 1) CNOT (meas (x) 1) on labels {s, a}."""
    eye = LabeledOperator(["a"], [2], np.eye(2))
    m = tensor([LabeledOperator(["s"], [2], meas), eye])
    r = tensor([LabeledOperator(["s"], [2], reprep), eye])
    return r @ _cnot_sa() @ m


def von_neumann(system, basis) -> LabeledVector:
    """Probe-coupled measurement of the system along ``basis``.

    Applies (basis^dag (x) 1) CNOT (basis (x) 1) to |psi>_s |0>_a, so the
    ancilla's sigma_z expectation equals the system expectation of
    basis^dag sigma_z basis.
    """
    psi = _as_qubit(system)
    u = _check_unitary(basis)
    op = _vn_operator(u, u.conj().T)
    joint = tensor([
        LabeledVector(["s"], [2], psi),
        LabeledVector(["a"], [2], KET0),
    ])
    return op @ joint


def switch_evolve(u_alice, bob_basis, system, control=PLUS,
                  bob_reprep=None) -> LabeledVector:
    """Joint {c, s, a} state after the coherently ordered interactions.

    Branch |0>_c applies Alice's unitary first, then Bob's probe coupling;
    branch |1>_c applies them in the opposite order.  ``bob_reprep``
    defaults to the adjoint of ``bob_basis`` (measure and reprepare in the
    same basis).
    """
    ua = _check_unitary(u_alice)
    meas = _check_unitary(bob_basis)
    reprep = meas.conj().T if bob_reprep is None else _check_unitary(bob_reprep)
    psi = _as_qubit(system)
    ctrl = _as_qubit(control)

    eye_a = LabeledOperator(["a"], [2], np.eye(2))
    alice = tensor([LabeledOperator(["s"], [2], ua), eye_a])
    vn = _vn_operator(meas, reprep)
    joint = tensor([
        LabeledVector(["s"], [2], psi),
        LabeledVector(["a"], [2], KET0),
    ])
    branch = {0: (vn @ alice) @ joint, 1: (alice @ vn) @ joint}

    amps = {}
    for k in (0, 1):
        ket_c = LabeledVector(["c"], [2], np.eye(2)[k])
        amps[k] = tensor([ket_c, branch[k]])
    total = ctrl[0] * amps[0].amplitudes + ctrl[1] * amps[1].amplitudes
    return LabeledVector(amps[0].labels, amps[0].dims, total)


def dephase_control(state: LabeledOperator, d_value: float) -> LabeledOperator:
    """Shrink off-diagonal control blocks by sqrt(1 - D^2)."""
    if not 0.0 <= d_value <= 1.0:
        raise ValueError(f"distinguishability must be in [0, 1], got {d_value}")
    if "c" not in state.labels:
        raise ValueError("state has no control subsystem 'c'")
    f = np.sqrt(1.0 - d_value**2)
    n = len(state.labels)
    ci = state.labels.index("c")
    arr = state.entries.reshape(state.dims * 2).copy()
    factor = np.ones((2, 2)) * f
    factor[0, 0] = factor[1, 1] = 1.0
    shape = [1] * (2 * n)
    shape[ci] = shape[n + ci] = 2
    arr *= factor.reshape([2 if i in (ci, n + ci) else 1 for i in range(2 * n)])
    side = state.entries.shape[0]
    return LabeledOperator(state.labels, state.dims, arr.reshape(side, side))


@dataclass(frozen=True)
class DualityReport:
    """Fringe visibility, saturating distinguishability, purity bound."""

    visibility: float
    distinguishability: float
    coherence_bound: float


def duality(state: LabeledOperator) -> DualityReport:
    """Visibility of the control coherence and its duality partners.

    V = 2 |<0| Tr_rest(rho) |1>|; D is reported as the pure-state
    saturating value sqrt(1 - V^2); the coherence bound is the largest
    visibility compatible with the control purity.
    """
    rho_c = partial_trace(state, {"c"}).entries
    v = float(2.0 * abs(rho_c[0, 1]))
    v = min(v, 1.0)
    d = float(np.sqrt(max(0.0, 1.0 - v * v)))
    purity = float(np.real(np.trace(rho_c @ rho_c)))
    bound = float(np.sqrt(max(0.0, 2.0 * purity - 1.0)))
    return DualityReport(v, d, bound)


def control_schmidt_values(state: LabeledVector) -> np.ndarray:
    """Singular values of the control-vs-rest bipartition."""
    n = len(state.labels)
    ci = state.labels.index("c")
    arr = state.amplitudes.reshape(state.dims)
    arr = np.moveaxis(arr, ci, 0).reshape(2, -1)
    return np.linalg.svd(arr, compute_uv=False)


# -- the measurement campaign in the qubit model -----------------------------

def setting_probabilities(setting: ExperimentSetting, d_value: float) -> dict:
    """p[(b, d)] for one waveplate setting at distinguishability d_value.

    b is the ancilla readout in the computational basis and d the control
    readout in the +/- basis (0 maps to '+').
    """
    meas = jones("hwp", np.deg2rad(setting.meas_hwp))
    reprep = jones("hwp", np.deg2rad(setting.reprep_hwp))
    state = switch_evolve(
        alice_unitary(setting.x), meas, prep_state(setting.z),
        bob_reprep=reprep,
    )
    rho = dephase_control(state.outer(), d_value)
    probs = {}
    plus_minus = [PLUS, np.array([1.0, -1.0]) / np.sqrt(2.0)]
    for b in (0, 1):
        proj_b = np.zeros((2, 2)); proj_b[b, b] = 1.0
        for d in (0, 1):
            ket = plus_minus[d]
            eff = tensor([
                LabeledOperator(["c"], [2], np.outer(ket, ket.conj())),
                LabeledOperator(["s"], [2], np.eye(2)),
                LabeledOperator(["a"], [2], proj_b),
            ])
            probs[(b, d)] = float(np.real(eff.expectation(rho)))
    return probs


def control_coherence(setting: ExperimentSetting, d_value: float) -> float:
    """|<0| rho_c |1>| of the dephased output for one setting."""
    state = switch_evolve(
        alice_unitary(setting.x),
        jones("hwp", np.deg2rad(setting.meas_hwp)),
        prep_state(setting.z),
        bob_reprep=jones("hwp", np.deg2rad(setting.reprep_hwp)),
    )
    rho = dephase_control(state.outer(), d_value)
    return float(abs(partial_trace(rho, {"c"}).entries[0, 1]))
