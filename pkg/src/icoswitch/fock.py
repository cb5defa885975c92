"""Second-quantized simulation of the two-photon optical table.

A mode is a (spatial path, polarization, temporal bin) triple.  States are
stored as creation-operator monomial coefficients,

    |state> = sum_config  amp[config] * prod_{m in config} adag_m |vac>,

so the squared norm of a configuration carries a factorial for multiply
occupied modes.  Optical elements act by substituting each creation
operator with its single-photon image, which extends homomorphically to
any photon number (permanent-style expansion); Hong-Ou-Mandel bunching
falls out of the bookkeeping.

Conventions, fixed once and validated against the qubit-level oracle:
balanced beamsplitters have real transmission and +i reflection; PBSs
transmit H and reflect V with unit phase; HWP(t) = [[cos2t, sin2t],
[sin2t, -cos2t]]; QWP(t) = R(t) diag(1, -i) R(-t).  Temporally mismatched
eraser arms share a bin with amplitude sqrt(overlap) and occupy private
bins with amplitude sqrt(1 - overlap), so the arm overlap equals the
overlap parameter.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial, prod
from typing import Callable, NamedTuple

import numpy as np

NULL_POSTSELECTION = 1e-14


class NullPostselectionError(RuntimeError):
    """Post-selected component has (numerically) zero weight."""


class Mode(NamedTuple):
    path: str
    pol: str  # 'H' or 'V'
    tbin: int


def jones(kind: str, theta: float) -> np.ndarray:
    """Single-photon polarization matrix of a waveplate at angle theta (rad)."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    if kind == "hwp":
        return np.array([[c, s], [s, -c]], dtype=complex)
    if kind == "qwp":
        r = np.array([[np.cos(theta), -np.sin(theta)],
                      [np.sin(theta), np.cos(theta)]])
        return r @ np.diag([1.0, -1.0j]) @ r.T
    raise ValueError(f"unknown waveplate kind: {kind!r}")


_SQ2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class OpticalElement:
    """One linear-optical element acting on declared paths.

    kind      one of bs50, pbs, hwp, qwp, phase, delay, swap
    paths     acted path names (two for bs50/pbs/swap, one otherwise)
    param     angle in radians (hwp, qwp, phase) or mode overlap in [0, 1]
              (delay); unused otherwise
    bin       private temporal bin populated by a delay element
    """

    kind: str
    paths: tuple
    param: float = 0.0
    bin: int = 1

    def __post_init__(self):
        two = {"bs50", "pbs", "swap"}
        if self.kind in two and len(self.paths) != 2:
            raise ValueError(f"{self.kind} needs two paths, got {self.paths}")
        if self.kind in {"hwp", "qwp", "phase", "delay"} and len(self.paths) != 1:
            raise ValueError(f"{self.kind} acts on one path, got {self.paths}")
        if self.kind == "delay" and not 0.0 <= self.param <= 1.0:
            raise ValueError(f"delay overlap must be in [0, 1], got {self.param}")
        if self.kind not in {"bs50", "pbs", "hwp", "qwp", "phase", "delay", "swap"}:
            raise ValueError(f"unknown element kind: {self.kind!r}")

    def image(self, m: Mode):
        """Single-photon image of adag_m as [(mode, amplitude), ...]."""
        k = self.kind
        if k == "bs50":
            a, b = self.paths
            if m.path == a:
                return [(m, _SQ2), (Mode(b, m.pol, m.tbin), 1j * _SQ2)]
            if m.path == b:
                return [(Mode(a, m.pol, m.tbin), 1j * _SQ2), (m, _SQ2)]
        elif k == "pbs":
            a, b = self.paths
            if m.path == a and m.pol == "V":
                return [(Mode(b, "V", m.tbin), 1.0)]
            if m.path == b and m.pol == "V":
                return [(Mode(a, "V", m.tbin), 1.0)]
        elif k in ("hwp", "qwp"):
            (p,) = self.paths
            if m.path == p:
                u = jones(k, self.param)
                col = 0 if m.pol == "H" else 1
                return [
                    (Mode(p, "H", m.tbin), u[0, col]),
                    (Mode(p, "V", m.tbin), u[1, col]),
                ]
        elif k == "phase":
            (p,) = self.paths
            if m.path == p:
                return [(m, np.exp(1j * self.param))]
        elif k == "delay":
            (p,) = self.paths
            if m.path == p:
                co = np.sqrt(self.param)
                si = np.sqrt(1.0 - self.param)
                if m.tbin == 0:
                    return [(m, co), (Mode(p, m.pol, self.bin), si)]
                if m.tbin == self.bin:
                    return [(Mode(p, m.pol, 0), -si), (m, co)]
        elif k == "swap":
            a, b = self.paths
            if m.path == a:
                return [(Mode(b, m.pol, m.tbin), 1.0)]
            if m.path == b:
                return [(Mode(a, m.pol, m.tbin), 1.0)]
        return [(m, 1.0)]

    def transfer_matrix(self, modes):
        """Single-photon matrix of the element on an explicit mode basis."""
        idx = {m: i for i, m in enumerate(modes)}
        t = np.zeros((len(modes), len(modes)), dtype=complex)
        for m in modes:
            for m2, amp in self.image(m):
                t[idx[m2], idx[m]] = amp
        return t


def _config_weight(config) -> int:
    """Product of occupation factorials: <config|config> for monomials."""
    w = 1
    for _, group in itertools.groupby(config):
        w *= factorial(sum(1 for _ in group))
    return w


class FockState:
    """Fixed-photon-number state as creation-monomial coefficients.

    ``paths`` declares the circuit's path universe; it defaults to the
    paths occupied by the given configurations.  Elements may only touch
    declared paths (vacuum ports included).
    """

    __slots__ = ("terms", "photons", "paths")

    def __init__(self, terms: dict, paths=None, drop_below: float = 0.0):
        clean = {}
        photons = None
        seen = set()
        for config, amp in terms.items():
            config = tuple(sorted(config))
            if photons is None:
                photons = len(config)
            elif len(config) != photons:
                raise ValueError("mixed photon numbers in one state")
            seen.update(m.path for m in config)
            if abs(amp) > drop_below:
                clean[config] = clean.get(config, 0.0) + complex(amp)
        if photons is None:
            raise ValueError("empty state")
        self.terms = clean
        self.photons = photons
        self.paths = frozenset(seen if paths is None else set(paths) | seen)

    def norm_sq(self) -> float:
        return float(sum(
            abs(a) ** 2 * _config_weight(c) for c, a in self.terms.items()
        ))

    def probabilities(self) -> dict:
        """Detection probability of each configuration (not renormalized)."""
        return {
            c: abs(a) ** 2 * _config_weight(c) for c, a in self.terms.items()
        }

    def renormalized(self) -> "FockState":
        n = np.sqrt(self.norm_sq())
        if n < NULL_POSTSELECTION:
            raise NullPostselectionError("cannot renormalize a null state")
        return FockState({c: a / n for c, a in self.terms.items()},
                         paths=self.paths)

    def modes(self):
        out = set()
        for c in self.terms:
            out.update(c)
        return sorted(out)


def evolve(state: FockState, element: OpticalElement) -> FockState:
    """Apply the homomorphic extension of the element's single-photon map."""
    for p in element.paths:
        if p not in state.paths:
            raise ValueError(f"element path {p!r} not declared in the state")
    new: dict = {}
    for config, amp in state.terms.items():
        images = [element.image(m) for m in config]
        for combo in itertools.product(*images):
            modes = tuple(sorted(m for m, _ in combo))
            a = amp * prod(c for _, c in combo)
            new[modes] = new.get(modes, 0.0) + a
    return FockState(new, paths=state.paths, drop_below=1e-300)


def run_elements(state: FockState, elements) -> FockState:
    for el in elements:
        state = evolve(state, el)
    return state


def postselect(state: FockState, pattern: Callable) -> tuple:
    """Keep configurations accepted by ``pattern``.

    Returns (renormalized state, probability), with the probability being
    the squared norm of the matching component.  Raises
    NullPostselectionError below the null threshold so that callers never
    renormalize numerical noise.
    """
    kept = {c: a for c, a in state.terms.items() if pattern(c)}
    prob = float(sum(abs(a) ** 2 * _config_weight(c) for c, a in kept.items()))
    if prob < NULL_POSTSELECTION:
        raise NullPostselectionError(f"post-selection weight {prob:.3e}")
    kept_state = FockState(kept, paths=state.paths).renormalized()
    return kept_state, prob


def one_photon_per_group(*groups):
    """Pattern: exactly one photon in each of the given path groups."""
    groups = [set(g) for g in groups]

    def pattern(config):
        counts = [0] * len(groups)
        for m in config:
            for i, g in enumerate(groups):
                if m.path in g:
                    counts[i] += 1
        return all(c == 1 for c in counts)

    return pattern


# -- the switch table ---------------------------------------------------------

SYSTEM_PATHS = ("c0", "c1")   # c0 carries the order 'Alice before Bob'
ANCILLA_PATHS = ("p0", "p1")
ANCILLA_INIT_HWP = 22.5       # degrees; prepares the diagonal ancilla state
SWITCH_ALIGN_PHASE = np.pi    # pins output ports to the +/- control states


def _deg(x):
    return float(np.deg2rad(x))


@dataclass(frozen=True)
class SwitchProgram:
    """End-to-end two-photon program of the switch table for one setting.

    The interferometer scan phase is injected on the reflected switch arm
    just before the recombining beamsplitter (after ``before_scan``, which
    already ends with the fixed alignment phase); outcome extraction folds
    the ancilla output port into the port outcome (the port correlation
    left by the eraser).
    """

    initial: FockState
    before_scan: tuple
    after_scan: tuple
    scan_path: str = "c1"

    def state(self, phase: float = 0.0) -> FockState:
        st = run_elements(self.initial, self.before_scan)
        if phase:
            st = evolve(st, OpticalElement("phase", (self.scan_path,), phase))
        return run_elements(st, self.after_scan)

    def joint_distribution(self, phase: float = 0.0) -> dict:
        """Raw p[(sys_port, sys_pol, anc_port, anc_pol)] before folding."""
        st = self.state(phase)
        out: dict = {}
        for config, p in st.probabilities().items():
            sys_modes = [m for m in config if m.path in SYSTEM_PATHS]
            anc_modes = [m for m in config if m.path in ANCILLA_PATHS]
            if len(sys_modes) != 1 or len(anc_modes) != 1:
                continue  # post-selection: one photon per side
            (sm,), (am,) = sys_modes, anc_modes
            key = (SYSTEM_PATHS.index(sm.path), sm.pol,
                   ANCILLA_PATHS.index(am.path), am.pol)
            out[key] = out.get(key, 0.0) + p
        return out

    def success_probability(self, phase: float = 0.0) -> float:
        return float(sum(self.joint_distribution(phase).values()))

    def outcome_probabilities(self, phase: float = 0.0) -> dict:
        """Normalized p[(b, d)]: b = ancilla polarization, d = folded port."""
        joint = self.joint_distribution(phase)
        total = sum(joint.values())
        out = {(b, d): 0.0 for b in (0, 1) for d in (0, 1)}
        for (sp, _, ap, apol), p in joint.items():
            out[(0 if apol == "H" else 1, sp ^ ap)] += p / total
        return out

    def coincidence_probability(self, phase: float, sys_port: int = 0,
                                anc_port: int = 0, sys_pol: str = "H",
                                anc_pol: str = "H") -> float:
        """Raw coincidence probability of one detector pair (fringe scans)."""
        joint = self.joint_distribution(phase)
        return joint.get((sys_port, sys_pol, anc_port, anc_pol), 0.0)


def hyperentangled_source() -> FockState:
    """Path-entangled pair with both polarizations set to H.

    The polarization-entangled source photons pass one PBS each and the
    reflected-arm polarization is erased, so only the path correlation
    (c0 with p0, c1 with p1) survives.
    """
    amp = _SQ2
    return FockState({
        (Mode("c0", "H", 0), Mode("p0", "H", 0)): amp,
        (Mode("c1", "H", 0), Mode("p1", "H", 0)): amp,
    }, paths=SYSTEM_PATHS + ANCILLA_PATHS)


def build_switch_table(angles, d_overlap: float) -> SwitchProgram:
    """Assemble the full program for one experiment setting.

    ``angles`` provides degrees-valued attributes prep_qwp, prep_hwp,
    alice_angles, meas_hwp and reprep_hwp; ``d_overlap`` is the temporal
    mode overlap of the eraser recombination (1 = perfect erasure).
    """
    if not 0.0 <= d_overlap <= 1.0:
        raise ValueError(f"eraser overlap must be in [0, 1], got {d_overlap}")
    q1, h, q2 = angles.alice_angles
    els = []

    def stage(seq):
        els.extend(seq)

    for c in SYSTEM_PATHS:  # state preparation, both arms
        stage([
            OpticalElement("qwp", (c,), _deg(angles.prep_qwp)),
            OpticalElement("hwp", (c,), _deg(angles.prep_hwp)),
        ])
    for p in ANCILLA_PATHS:  # ancilla initialization
        stage([OpticalElement("hwp", (p,), _deg(ANCILLA_INIT_HWP))])

    def alice(path):
        return [
            OpticalElement("qwp", (path,), _deg(q1)),
            OpticalElement("hwp", (path,), _deg(h)),
            OpticalElement("qwp", (path,), _deg(q2)),
        ]

    def bob(cpath, ppath):
        return [
            OpticalElement("hwp", (cpath,), _deg(angles.meas_hwp)),
            OpticalElement("pbs", (cpath, ppath)),
            OpticalElement("hwp", (cpath,), _deg(angles.reprep_hwp)),
        ]

    stage(alice("c0"))          # order branch c0: Alice first ...
    stage(bob("c0", "p0"))      # ... then the measurement interaction
    stage(bob("c1", "p1"))      # order branch c1: measurement first ...
    stage(alice("c1"))          # ... then Alice

    # eraser: each arm keeps amplitude sqrt(overlap) in the shared bin and
    # sqrt(1 - overlap) in its own private bin, so the arm overlap (and the
    # restored fringe visibility) equals d_overlap itself
    stage([
        OpticalElement("delay", ("p0",), float(d_overlap), bin=1),
        OpticalElement("delay", ("p1",), float(d_overlap), bin=2),
        OpticalElement("bs50", ("p0", "p1")),
    ])
    stage([OpticalElement("phase", ("c1",), SWITCH_ALIGN_PHASE)])

    return SwitchProgram(
        initial=hyperentangled_source(),
        before_scan=tuple(els),
        after_scan=(OpticalElement("bs50", ("c0", "c1")),),
    )
