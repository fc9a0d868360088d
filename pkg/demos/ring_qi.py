"""
Quadratic invariance of a ring of controller nodes.

A ring structure looks sparse, but its transfer function (I - Q)^{-1} P
is full. Composing two ring controllers through the plant produces a
transfer matrix that no ring controller can realize, so the constraint
set is not quadratically invariant.
"""
import numpy as np

from sigstruct import BinaryStructure, StateSpace, effective_tf_pattern, qi_boolean, qi_sampled
from sigstruct.cli import load_model, load_structure
from sigstruct.corpus import random_plant

from _common import MODELS

plant, _, _ = load_model(f'{MODELS}/ring_plant.json')
ring = load_structure(f'{MODELS}/ring3.json')
print("effective pattern of the ring:\n", effective_tf_pattern(ring).astype(int))

ok, cex = qi_sampled(ring, plant, seed=0)
print(f"ring vs ring plant: quadratically invariant = {ok}")
if cex is not None:
    print(f"  counterexample at s = {cex.frequency:.3g}, membership residual {cex.residual:.2e}")

diag_plant = StateSpace(np.diag([-1.0, 2.0, -3.0]), np.eye(3), np.eye(3))
print("diagonal vs diagonal plant:", qi_sampled(BinaryStructure.diagonal(3), diag_plant)[0])
full_plant = random_plant(np.random.default_rng(0), 3, 3, 3)
print("full vs any plant:", qi_sampled(BinaryStructure.full(3, 3), full_plant)[0])
lower = np.tril(np.ones((3, 3), bool))
print("lower triangular vs lower triangular:", qi_boolean(lower, lower))
