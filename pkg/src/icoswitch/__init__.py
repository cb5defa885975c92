"""Simulator and optimization toolkit for a photonic quantum switch with a
time-delocalized ancilla measurement: labeled tensor algebra, two-photon
linear-optics simulation with post-selection, process-matrix probabilities,
causal-witness optimization via a built-in dense SDP solver, and two-qubit
tomography."""

__version__ = "0.1.0"
