"""
One structure cannot stabilize the plant, a slightly larger one can.

Mode 3 is driven only by u1 and seen only at y2. A diagonal controller
never connects the two, so the mode stays put whatever links are
designed. Adding the link u1 <- y2 lets the procedure move it.
"""
import numpy as np

from sigstruct import BinaryStructure, existence_check, pbh_classify, run_procedure

from _common import load

plant = load('crossed_mode.json')
for m in pbh_classify(plant):
    print(f"mode {m.eigenvalue.real:+.1f}: controllable from {m.controllable_from}, "
          f"observable at {m.observable_at}")

diag = BinaryStructure.diagonal(2)
cross = BinaryStructure(np.zeros((2, 2), bool), [[1, 1], [0, 1]])

for label, bs in (('diagonal', diag), ('diagonal + (u1 <- y2)', cross)):
    verdict = existence_check(plant, bs)
    report = run_procedure(plant, bs)
    print(f"\n{label}: exists={verdict.exists}, verdict={report.verdict}")
    print("  unstable count after each link:", report.unstable_counts())
    for st in report.per_step:
        print("  ", st.log_line(), " K =", st.compensator)
    for m in verdict.fixed_unstable_modes:
        print(f"  fixed mode {m.eigenvalue:.3g}")
    if report.verdict == 'Stabilized':
        ev = np.linalg.eigvals(report.closed_loop.A)
        print(f"  closed-loop spectral abscissa {ev.real.max():.3f}")
