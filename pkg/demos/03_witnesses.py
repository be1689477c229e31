"""Closed-form dual witnesses and their measured feasibility margins.

Each witness trades a large value at the empty set against a decay fast
enough that no lattice arc carries more than a bounded load.  The margin
(the worst arc load) is measured exhaustively; dividing the witness by its
square root restores feasibility at a proportional cost in objective.
"""

import math

from lgcomplexity import (
    dual_feasibility_margin,
    dual_objective,
    hidden_shift_structure,
    hidden_shift_witness,
    ksubset_structure,
    ksubset_witness,
    triangle_structure,
    triangle_witness,
)

print("== k-subset witnesses: objective n^(k/(k+1)) on the nose ==")
for n, k in [(4, 1), (8, 1), (6, 2), (9, 2), (8, 3)]:
    witness = ksubset_witness(n, k)
    margin = dual_feasibility_margin(ksubset_structure(n, k), witness)
    print(f"(n={n}, k={k}): objective {dual_objective(witness):.6f} "
          f"(target {n}^({k}/{k + 1}) = {n ** (k / (k + 1)):.6f}), margin {margin:.4f}")

print()
print("== hidden-shift witnesses: objective n^(1/3), margin <= 2 ==")
for n in (2, 4, 8):
    witness = hidden_shift_witness(n)
    margin = dual_feasibility_margin(hidden_shift_structure(n), witness)
    print(f"n={n}: objective {dual_objective(witness):.6f}, margin {margin:.6f}")

print()
print("== triangle witness: sqrt(C(n,3)) n^(-3/14), margin grows like log n ==")
for n in (5, 6):
    witness = triangle_witness(n)
    margin = dual_feasibility_margin(triangle_structure(n), witness)
    print(f"n={n}: objective {dual_objective(witness):.6f}, margin {margin:.6f}, "
          f"margin/log2(n) = {margin / math.log2(n):.4f}")
