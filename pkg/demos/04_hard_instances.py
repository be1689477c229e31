"""From a certificate structure to a concrete hard function, via orthogonal arrays.

For a boundedly generated structure (one generating set per certificate) and
an alphabet with q >= 2|C| symbols, placing a modular-sum array on each
generator carves the inputs into positive sets X_M (one per certificate) and
a negative set Y holding at least half of all q^n inputs.
"""

from lgcomplexity import (
    FValue,
    build_bounded_instance,
    evaluate_f,
    ksubset_structure,
    sum_array,
    verify_orthogonal_array,
    verify_orthogonality_property,
)

print("== a modular-sum orthogonal array ==")
array = sum_array(5, 3)
print(f"q=5, length 3, size {len(array)} = 5^2; first rows: {array.rows[:5]}")
print(f"strength check: {verify_orthogonal_array(array).ok}")

print()
print("== the 2-subset instance on 3 variables over 8 symbols ==")
cert = ksubset_structure(3, 2)
inst = build_bounded_instance(cert, 8)
print(f"positive sets: {[inst.x_size(m) for m in range(3)]} (each 8^2)")
print(f"negative set: {inst.y_size()} of {inst.input_count} inputs")

print()
print("uniform projection outside each certificate:")
for m in range(3):
    print(f"  certificate {m}: {verify_orthogonality_property(inst, m).ok}")

print()
print("evaluating a few inputs:")
for x in [(0, 0, 0), (1, 2, 4), (3, 5, 1)]:
    print(f"  f{x} = {evaluate_f(inst, x).value}",
          "(a pair sums to 0 mod 8)" if evaluate_f(inst, x) is FValue.ONE else "")
