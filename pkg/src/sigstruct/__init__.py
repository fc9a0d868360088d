"""
Structured controller synthesis through dynamical structure functions.

A controller is described by its signal structure: a hollow ``Q`` linking
controller nodes and a ``P`` reading plant outputs. The package computes
dynamical structure functions, decides whether a structure admits a
stabilizing controller, designs one link at a time, and checks quadratic
invariance of sparsity constraints.
"""
from .exceptions import *  # noqa: F401,F403
from .polyrat import Polynomial, RationalFunction, reduce
from .statespace import (CLUSTER_TOL, TOL_RANK, TOL_STAB, ModeReport,
                         PartitionedStateSpace, StateSpace, certified_stable,
                         eigenvalues, interconnect, is_stable, minimal_realization,
                         pbh_classify, simulate, siso_tf, spectral_abscissa,
                         transmission_zeros)
from .dsf import (BinaryStructure, Dsf, compute_dsf, dsf_membership, edge_list,
                  effective_tf_pattern, reconstruct_g, structure_of)
from .analysis import (ExistenceVerdict, existence_check, fixed_mode_probe,
                       qi_boolean, qi_sampled, unstable_cancellation)
from .synth import (INCONCLUSIVE, NOT_STABILIZABLE, STABILIZED, SynthOptions,
                    SynthesisReport, absorb, channel, design_link, export_controller,
                    place_poles, run_procedure)

__version__ = '0.1.0'
