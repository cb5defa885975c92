"""Process-matrix description of the switch experiment.

The process space carries seven qubit labels: the global past P (target
preparation), Alice's input/output A_I / A_O, Bob's B_I / B_O, and the
final detection F_t (target, unmeasured) and F_c (order/control qubit,
read out in the +/- basis).  The coherently ordered switch process is the
rank-1 operator built from identity-channel link vectors,

    |w> = ( |I>>^{P A_I} |I>>^{A_O B_I} |I>>^{B_O F_t} |0>^{F_c}
          + |I>>^{P B_I} |I>>^{B_O A_I} |I>>^{A_O F_t} |1>^{F_c} ) / sqrt(2),

with trace d_P * d_AO * d_BO = 8.  Probabilities follow the fixed
contraction convention (validated against the circuit-level oracle):
channel Chois enter untransposed as (1 (x) M)(|I>><<I|), the prepared
state enters untransposed, and the final POVM element enters transposed.

Causally ordered subspaces are characterized by forbidden Pauli-product
patterns (the trace-and-replace comb conditions); projectors onto them are
diagonal in the Pauli-product basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import settings as catalog
from .paulialg import PauliContext, coeffs_to_matrix, pauli_coeffs
from .qmath import LabeledOperator, LabeledVector, link_vector, tensor

LABELS = ("P", "A_I", "A_O", "B_I", "B_O", "F_t", "F_c")
CANONICAL = tuple(sorted(LABELS))  # A_I A_O B_I B_O F_c F_t P
DIMS = (2,) * 7
NQUBITS = 7
SIDE = 2**NQUBITS
TRACE_NORM = 8.0  # d_P * d_AO * d_BO, pinned by the sum-to-one invariant

_IDX = {l: i for i, l in enumerate(CANONICAL)}
_PLUSMINUS = [np.array([1.0, 1.0]) / np.sqrt(2), np.array([1.0, -1.0]) / np.sqrt(2)]
_YBASIS = [np.array([1.0, 1.0j]) / np.sqrt(2), np.array([1.0, -1.0j]) / np.sqrt(2)]
_ZBASIS = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
DETECT_BASES = {"x": _PLUSMINUS, "y": _YBASIS, "z": _ZBASIS}


class CatalogError(ValueError):
    """Setting or outcome index outside the waveplate catalog."""


@dataclass(frozen=True)
class ProcessMatrix:
    """PSD operator over the seven-label process space."""

    operator: LabeledOperator
    kind: str = "custom"

    def __post_init__(self):
        if self.operator.labels != CANONICAL:
            raise ValueError(f"process labels must be {CANONICAL}")

    @property
    def entries(self):
        return self.operator.entries

    def is_psd(self, tol=1e-10):
        return self.operator.is_psd(tol)


@dataclass(frozen=True)
class InstrumentElement:
    """Choi operator of one party's operation for one setting/outcome."""

    party: str   # prep | alice | bob | detect
    setting: tuple
    outcome: int
    choi: LabeledOperator


def _ket(label, amplitudes):
    return LabeledVector([label], [2], amplitudes)


def _choi_vector(kraus: np.ndarray, label_in: str, label_out: str) -> LabeledVector:
    """|K>> = sum_i |i>_in (K|i>)_out."""
    amp = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        amp[i] = kraus @ np.eye(2)[i]
    vec = LabeledVector([label_in, label_out], [2, 2], amp.reshape(4))
    return vec


def w_switch() -> ProcessMatrix:
    """Rank-1 process matrix of the coherently ordered switch."""
    branches = []
    for fc, wiring in (
        (0, [("P", "A_I"), ("A_O", "B_I"), ("B_O", "F_t")]),
        (1, [("P", "B_I"), ("B_O", "A_I"), ("A_O", "F_t")]),
    ):
        parts = [link_vector(2, a, b) for a, b in wiring]
        parts.append(_ket("F_c", np.eye(2)[fc]))
        branches.append(tensor(parts))
    amp = (branches[0].amplitudes + branches[1].amplitudes) / np.sqrt(2.0)
    vec = LabeledVector(branches[0].labels, branches[0].dims, amp)
    return ProcessMatrix(vec.outer(), kind="pure-switch")


def w_ordered(order: str) -> ProcessMatrix:
    """Definite-order reduction of the switch (one branch of |w>)."""
    if order == "A->B":
        wiring = [("P", "A_I"), ("A_O", "B_I"), ("B_O", "F_t")]
        fc = 0
    elif order == "B->A":
        wiring = [("P", "B_I"), ("B_O", "A_I"), ("A_O", "F_t")]
        fc = 1
    else:
        raise ValueError(f"unknown order {order!r}")
    parts = [link_vector(2, a, b) for a, b in wiring]
    parts.append(_ket("F_c", np.eye(2)[fc]))
    vec = tensor(parts)
    return ProcessMatrix(vec.outer(), kind=f"ordered-{order}")


def dephase_order_coherence(w: ProcessMatrix, d_value: float) -> ProcessMatrix:
    """Shrink the off-diagonal F_c blocks by sqrt(1 - D^2)."""
    if not 0.0 <= d_value <= 1.0:
        raise ValueError(f"distinguishability must be in [0, 1], got {d_value}")
    if d_value == 0.0:
        return w
    f = np.sqrt(1.0 - d_value**2)
    k = _IDX["F_c"]
    arr = w.entries.reshape(DIMS * 2).copy()
    shape = [1] * 14
    shape[k] = shape[7 + k] = 2
    factor = np.full((2, 2), f)
    factor[0, 0] = factor[1, 1] = 1.0
    arr *= factor.reshape(shape)
    op = LabeledOperator(CANONICAL, DIMS, arr.reshape(SIDE, SIDE))
    kind = "mixture" if d_value == 1.0 else "custom"
    return ProcessMatrix(op, kind=kind)


# -- instruments ---------------------------------------------------------------

def instrument(party: str, setting, outcome=None) -> InstrumentElement:
    """Catalog Choi operator for one party.

    prep:   setting z in 1..3, no outcome; density on P.
    alice:  setting x in 1..10, no outcome; unitary Choi on (A_I, A_O).
    bob:    setting (y, r) with y in 1..2, r in 1..3; outcome b in {0, 1};
            measure-and-reprepare Choi on (B_I, B_O).
    detect: setting basis name ('x' default); outcome d in {0, 1};
            identity on F_t times a rank-1 projector on F_c.
    """
    if party == "prep":
        z = int(setting)
        if not 1 <= z <= 3:
            raise CatalogError(f"input-state index z={z} outside 1..3")
        psi = catalog.prep_state(z)
        choi = LabeledOperator(["P"], [2], np.outer(psi, psi.conj()))
        return InstrumentElement("prep", (z,), 0, choi)
    if party == "alice":
        x = int(setting)
        if not 1 <= x <= 10:
            raise CatalogError(f"unitary index x={x} outside 1..10")
        vec = _choi_vector(catalog.alice_unitary(x), "A_I", "A_O")
        return InstrumentElement("alice", (x,), 0, vec.outer())
    if party == "bob":
        y, r = (int(v) for v in setting)
        if not (1 <= y <= 2 and 1 <= r <= 3):
            raise CatalogError(f"bob setting (y={y}, r={r}) outside catalog")
        if outcome not in (0, 1):
            raise CatalogError(f"bob outcome must be 0 or 1, got {outcome}")
        vec = _choi_vector(catalog.bob_kraus(y, r, outcome), "B_I", "B_O")
        return InstrumentElement("bob", (y, r), outcome, vec.outer())
    if party == "detect":
        basis = DETECT_BASES.get(str(setting))
        if basis is None:
            raise CatalogError(f"unknown detection basis {setting!r}")
        if outcome not in (0, 1):
            raise CatalogError(f"detect outcome must be 0 or 1, got {outcome}")
        ket = basis[outcome]
        povm = tensor([
            LabeledOperator(["F_t"], [2], np.eye(2)),
            LabeledOperator(["F_c"], [2], np.outer(ket, ket.conj())),
        ])
        return InstrumentElement("detect", (str(setting),), outcome, povm)
    raise CatalogError(f"unknown party {party!r}")


def probability(w: ProcessMatrix, elements) -> float:
    """Generalized Born rule for one element per party slot.

    The detect-party POVM element enters transposed; this is the
    convention under which the contraction reproduces the circuit models.
    """
    by_party = {e.party: e for e in elements}
    missing = {"prep", "alice", "bob", "detect"} - set(by_party)
    if missing:
        raise ValueError(f"missing instrument element(s): {sorted(missing)}")
    detect = by_party["detect"].choi
    detect_t = LabeledOperator(detect.labels, detect.dims, detect.entries.T)
    product = tensor([
        by_party["prep"].choi,
        by_party["alice"].choi,
        by_party["bob"].choi,
        detect_t,
    ])
    p = float(np.real(np.trace(w.entries @ product.entries)))
    if p < -1e-10 or p > 1 + 1e-10:
        raise FloatingPointError(f"probability {p} outside [0, 1] tolerance")
    return min(max(p, 0.0), 1.0)


# -- fast per-setting tables -----------------------------------------------------

@lru_cache(maxsize=8)
def _factor_coeff_cache():
    """Pauli coefficient vectors of every catalog factor, by label group."""
    prep = {z: pauli_coeffs(instrument("prep", z).choi.entries, 1)
            for z in (1, 2, 3)}
    alice = {x: pauli_coeffs(instrument("alice", x).choi.entries, 2)
             for x in range(1, 11)}
    bob = {(y, r, b): pauli_coeffs(instrument("bob", (y, r), b).choi.entries, 2)
           for y in (1, 2) for r in (1, 2, 3) for b in (0, 1)}
    det = {d: pauli_coeffs(instrument("detect", "x", d).choi.entries.T, 2)
           for d in (0, 1)}
    return prep, alice, bob, det


def outcome_operator_coeffs(z, x, y, r, b, d) -> np.ndarray:
    """Pauli coefficients of rho_z (x) C^A_x (x) C^B_{b|y,r} (x) E_d^T.

    Laid out in the canonical label order (A_I A_O B_I B_O F_c F_t P).
    """
    prep, alice, bob, det = _factor_coeff_cache()
    return np.kron(
        np.kron(np.kron(alice[x], bob[(y, r, b)]), det[d]), prep[z]
    )


def setting_probabilities(setting, d_value: float = 0.0,
                          w: ProcessMatrix | None = None) -> dict:
    """p[(b, d)] for one catalog setting from the process-matrix rule."""
    if w is None:
        w = dephase_order_coherence(w_switch(), d_value)
    what = pauli_coeffs(w.entries, NQUBITS)
    out = {}
    for b in (0, 1):
        for d in (0, 1):
            g = outcome_operator_coeffs(setting.z, setting.x, setting.y,
                                        setting.r, b, d)
            out[(b, d)] = float(np.real(SIDE * np.dot(g, what)))
    return out


def probability_table(d_value: float = 0.0,
                      w: ProcessMatrix | None = None) -> dict:
    """All 180 x 4 probabilities keyed by (z, x, y, r, b, d)."""
    if w is None:
        w = dephase_order_coherence(w_switch(), d_value)
    what = pauli_coeffs(w.entries, NQUBITS)
    # contract W against the product structure group by group
    t = what.reshape(16, 16, 16, 4)  # (A_I A_O), (B_I B_O), (F_c F_t), P
    prep, alice, bob, det = _factor_coeff_cache()
    table = {}
    for x in range(1, 11):
        ta = np.tensordot(alice[x], t, axes=([0], [0]))        # (16, 4, 4)
        for (y, r, b), cb in bob.items():
            tb = np.tensordot(cb, ta, axes=([0], [0]))          # (4, 4)
            for d in (0, 1):
                tf = np.tensordot(det[d], tb, axes=([0], [0]))  # (4,)
                for z in (1, 2, 3):
                    p = float(np.real(SIDE * np.dot(prep[z], tf)))
                    table[(z, x, y, r, b, d)] = p
    return table


# -- causally ordered subspaces ---------------------------------------------------

@lru_cache(maxsize=4)
def _pattern_masks():
    """Forbidden Pauli-pattern masks for the ordered and valid subspaces."""
    ctx = PauliContext(NQUBITS)
    dg = ctx.digits  # (N, 7) in canonical label order
    col = {l: dg[:, _IDX[l]] for l in CANONICAL}
    ai, ao = col["A_I"] != 0, col["A_O"] != 0
    bi, bo = col["B_I"] != 0, col["B_O"] != 0
    fc, ft = col["F_c"] != 0, col["F_t"] != 0
    p = col["P"] != 0
    f_trivial = ~fc & ~ft

    def ordered(first_out, second_in, second_out):
        # comb conditions for order first -> second, future last
        c1 = second_out & f_trivial
        c2 = first_out & ~second_in & ~second_out & f_trivial
        c3 = p & ~ai & ~ao & ~bi & ~bo & f_trivial
        return c1 | c2 | c3

    forb_ab = ordered(ao, bi, bo)
    forb_ba = ordered(bo, ai, ao)

    a_pairable = ao | (~ai & ~ao)
    b_pairable = bo | (~bi & ~bo)
    nontrivial = p | ao | bo
    forb_valid = f_trivial & a_pairable & b_pairable & nontrivial
    return forb_ab, forb_ba, forb_valid


def ordered_projector_mask(order: str) -> np.ndarray:
    forb_ab, forb_ba, _ = _pattern_masks()
    if order == "A->B":
        return ~forb_ab
    if order == "B->A":
        return ~forb_ba
    raise ValueError(f"unknown order {order!r}")


def valid_projector_mask() -> np.ndarray:
    _, _, forb_valid = _pattern_masks()
    return ~forb_valid


def project_ordered(m: LabeledOperator, order: str) -> LabeledOperator:
    """Orthogonal projection onto the order-compatible linear subspace."""
    if m.labels != CANONICAL:
        raise ValueError(f"operator labels must be {CANONICAL}")
    coeffs = pauli_coeffs(m.entries, NQUBITS)
    coeffs = coeffs * ordered_projector_mask(order)
    return LabeledOperator(CANONICAL, DIMS, coeffs_to_matrix(coeffs, NQUBITS))


def project_valid(m: LabeledOperator) -> LabeledOperator:
    """Orthogonal projection onto the span of valid process matrices."""
    coeffs = pauli_coeffs(m.entries, NQUBITS)
    coeffs = coeffs * valid_projector_mask()
    return LabeledOperator(CANONICAL, DIMS, coeffs_to_matrix(coeffs, NQUBITS))


def mix_orders(p: float, w_ab: ProcessMatrix, w_ba: ProcessMatrix) -> ProcessMatrix:
    """p W_AB + (1-p) W_BA; both arguments must be order-valid."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing probability must be in [0, 1], got {p}")
    for w, order in ((w_ab, "A->B"), (w_ba, "B->A")):
        dev = np.abs(
            project_ordered(w.operator, order).entries - w.entries
        ).max()
        if dev > 1e-9:
            raise ValueError(f"argument is not {order} ordered (dev {dev:.2e})")
    op = p * w_ab.operator + (1.0 - p) * w_ba.operator
    return ProcessMatrix(op, kind="mixture")


def random_ordered(order: str, rng: np.random.Generator,
                   kraus_rank: int = 1) -> ProcessMatrix:
    """Random causally ordered process: wire -> channel -> wire comb."""
    def haar(d):
        z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        q, r = np.linalg.qr(z)
        return q @ np.diag(np.diag(r) / np.abs(np.diag(r)))

    if order == "A->B":
        first_in, first_out, second_in, second_out = "A_I", "A_O", "B_I", "B_O"
    elif order == "B->A":
        first_in, first_out, second_in, second_out = "B_I", "B_O", "A_I", "A_O"
    else:
        raise ValueError(f"unknown order {order!r}")

    v_in = haar(2)
    mid = [haar(2)]
    if kraus_rank == 2:
        # random CPTP map from a 4x4 unitary acting on system + |0> env
        big = haar(4).reshape(2, 2, 2, 2)
        mid = [big[:, k, :, 0] for k in range(2)]  # sum_k K^dag K = 1
    v_fin = haar(4)[:, :2]  # isometry 2 -> 4 on (F_t, F_c)

    total = np.zeros((SIDE, SIDE), dtype=complex)
    for k_mid in mid:
        parts = [
            _choi_vector(v_in, "P", first_in),
            _choi_vector(k_mid, first_out, second_in),
        ]
        fin = np.zeros((2, 2, 2), dtype=complex)  # (second_out, F_t, F_c)
        for i in range(2):
            fin[i] = v_fin[:, i].reshape(2, 2)
        fin_vec = LabeledVector([second_out, "F_t", "F_c"], [2, 2, 2],
                                fin.reshape(8))
        parts.append(fin_vec)
        vec = tensor(parts)
        total += vec.outer().entries
    op = LabeledOperator(CANONICAL, DIMS, total)
    return ProcessMatrix(op, kind=f"ordered-{order}")
