"""The generalized efficiency: the least channel transmissivity that can
produce a state from some valid preimage.

For a vacuum/photon mixture it equals the photon weight; coherent states can
be produced by arbitrarily lossy channels (the infimum 0 is not attained);
pure non-coherent states cannot be produced by any lossy channel at all.
"""

import pel

basis = pel.make_basis(1, 10)

cases = [
    ("single-photon source, efficiency 0.7", pel.Isps(0.7)),
    ("two-photon Fock state", pel.Fock(2)),
    ("coherent |alpha=0.8>", pel.Coherent(0.8)),
    ("qubit state p=0.5, q=0.35", pel.PartialQubit(0.5, 0.35)),
]
for label, spec in cases:
    rho = pel.make_state(spec, basis, tail_tol=1e-5)
    result = pel.generalized_efficiency(rho)
    tag = "" if result.attained else "  (infimum not attained; true value 0)"
    print(f"{label:38s} E = {result.value:.6f}{tag}")

print()
print("closed form for zero/one-photon states with coherence q:")
p, q = 0.5, 0.35
print(f"  p={p}, q={q}: formula gives", round(pel.qubit_efficiency_formula(p, q), 6))

print()
print("efficiency only ever drops, proportionally, under loss:")
rho = pel.make_state(pel.PartialQubit(0.6, 0.2), basis)
base = pel.generalized_efficiency(rho).value
for tr in (0.8, 0.5):
    lossy = pel.apply_loss(rho, pel.LossChannel(tr))
    scaled = pel.generalized_efficiency(lossy).value
    print(f"  after p={tr} loss: E = {scaled:.6f} = {tr} x {base:.6f}")
