"""Waveplate-angle catalog of the measurement campaign.

Three input states x ten polarization unitaries for the party inside the
switch x two measurement bases x three repreparation settings for the
measuring party = 180 settings, each with four outcomes (measurement
result b, switch output port d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import jones

# (QWP, HWP) degrees; beam passes the QWP first
INPUT_STATES = [(0.0, 0.0), (0.0, 22.5), (45.0, 0.0)]

BOB_MEAS_HWP = [0.0, 22.5]          # Z and X measurement bases
BOB_REPREP_HWP = [0.0, 22.5, 45.0]

# (QWP, HWP, QWP) degrees, in beam order
ALICE_TRIPLES = [
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 45.0),
    (0.0, 45.0, 0.0),
    (45.0, 0.0, 0.0),
    (45.0, 0.0, 90.0),
    (45.0, 45.0, 90.0),
    (90.0, 0.0, 0.0),
    (90.0, 0.0, 45.0),
    (90.0, 45.0, 0.0),
    (90.0, 45.0, 45.0),
]


@dataclass(frozen=True)
class ExperimentSetting:
    """One of the 180 configurations, with concrete waveplate angles."""

    z: int  # input state, 1..3
    x: int  # Alice unitary, 1..10
    y: int  # Bob measurement HWP, 1..2
    r: int  # Bob repreparation HWP, 1..3

    def __post_init__(self):
        if not (1 <= self.z <= 3 and 1 <= self.x <= 10
                and 1 <= self.y <= 2 and 1 <= self.r <= 3):
            raise ValueError(f"setting indices out of range: {self}")

    @property
    def prep_qwp(self):
        return INPUT_STATES[self.z - 1][0]

    @property
    def prep_hwp(self):
        return INPUT_STATES[self.z - 1][1]

    @property
    def alice_angles(self):
        return ALICE_TRIPLES[self.x - 1]

    @property
    def meas_hwp(self):
        return BOB_MEAS_HWP[self.y - 1]

    @property
    def reprep_hwp(self):
        return BOB_REPREP_HWP[self.r - 1]

    @property
    def bob_combined(self):
        """Bob's (measurement, repreparation) pair as a single 1..6 index."""
        return (self.y - 1) * 3 + self.r


def enumerate_settings():
    """All 180 settings in fixed (z, x, y, r) lexicographic order."""
    return [
        ExperimentSetting(z=z, x=x, y=y, r=r)
        for z in range(1, 4)
        for x in range(1, 11)
        for y in range(1, 3)
        for r in range(1, 4)
    ]


# -- qubit-level operators realized by the catalog angles --------------------

def prep_state(z: int) -> np.ndarray:
    """Polarization ket prepared by input row z (QWP then HWP, from |H>)."""
    qwp, hwp = INPUT_STATES[z - 1]
    u = jones("hwp", np.deg2rad(hwp)) @ jones("qwp", np.deg2rad(qwp))
    return u @ np.array([1.0, 0.0], dtype=complex)


def alice_unitary(x: int) -> np.ndarray:
    """Jones matrix of Alice triple x (QWP, HWP, QWP in beam order)."""
    q1, h, q2 = (np.deg2rad(a) for a in ALICE_TRIPLES[x - 1])
    return jones("qwp", q2) @ jones("hwp", h) @ jones("qwp", q1)


def bob_kraus(y: int, r: int, b: int) -> np.ndarray:
    """Measure-and-reprepare Kraus operator for outcome b in {0, 1}.

    The measurement HWP rotates the system before a polarizing beamsplitter
    (outcome read from the ancilla), and the repreparation HWP rotates the
    post-selected polarization afterwards: K_b = H(r) |b><b| H(y).
    """
    hy = jones("hwp", np.deg2rad(BOB_MEAS_HWP[y - 1]))
    hr = jones("hwp", np.deg2rad(BOB_REPREP_HWP[r - 1]))
    proj = np.zeros((2, 2), dtype=complex)
    proj[b, b] = 1.0
    return hr @ proj @ hy
