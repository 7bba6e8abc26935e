"""Encode the 9-qubit code, hit it with every single-qubit Pauli, and repair it."""

import itertools

from planar_code_lab.circuits import shor_code_demo, shor_lookup_table

print(f"{len(shor_lookup_table()) - 1} nontrivial syndromes in the lookup table\n")
for state in ("0", "1", "+"):
    fixed = sum(shor_code_demo((q, p), state, rng=q) for q, p in itertools.product(range(9), "XYZ"))
    print(f"|{state}>: {fixed}/27 single errors corrected")

# two phase flips in one block look like a single flip in another place
out = shor_code_demo({0: "Z", 1: "Z"}, "+", details=True)
print(f"\nZ0 Z1 on |+>: syndrome {out['syndrome']}, correction {out['correction']}, recovered={out['recovered']}")
