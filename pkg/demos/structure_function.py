"""
Dynamical structure function of a three-state plant.

Two states are measured, the third is hidden and couples them. The
structure function shows each measured output driving the other through
the hidden state, while every input acts on its own output only.
"""
import numpy as np

from sigstruct import compute_dsf, edge_list, reconstruct_g, structure_of
from sigstruct.statespace import frequency_response

from _common import load

plant = load('three_state.json')
print("A =\n", plant.A)

dsf, _ = compute_dsf(plant)
for name, M in (('Q', dsf.Q), ('P', dsf.P)):
    for i, row in enumerate(M):
        for j, f in enumerate(row):
            if not f.is_zero():
                print(f"{name}[{i + 1},{j + 1}] = {f}")

# the signal structure, as a graph
print("edges:", edge_list(structure_of(dsf)))

# (I - Q)^{-1} P recovers the transfer matrix
G = reconstruct_g(dsf)
s = 0.5 + 2.0j
err = np.abs(np.array([[f(s) for f in row] for row in G]) - frequency_response(plant, s)).max()
print(f"reconstruction error at s = {s}: {err:.2e}")
