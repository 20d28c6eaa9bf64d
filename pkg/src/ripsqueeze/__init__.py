"""Resonator-induced phase gate driven by displaced squeezed radiation.

Analytic dephasing model, coherent-field trajectories and a cascaded
source/cavity master-equation simulator for the two-qubit ZZ gate.
"""

__version__ = "0.1.0"
