# %% [markdown]
# # The discrete heat flow
#
# The deterministic part of every scheme is the 3-point heat step. This demo
# checks that each Fourier mode decays at the stencil's own rate and that a
# signed datum loses its negative part.

# %%
from sbmlab import make_grid
from sbmlab.descriptors import gaussian
from sbmlab.experiments import heat_longtime_suite

spec = make_grid(10, 512)
f = gaussian(mass=1, width=0.5) + gaussian(mass=-0.5, center=1, width=0.5)
rep = heat_longtime_suite(f, spec, horizon=4.0)
print(f"{rep.params['steps']} steps, lambda = {rep.params['lambda']:.3f}")
for name, ok in rep.verdicts.items():
    print(f"{name:28s} {'pass' if ok else 'FAIL'}  {rep.notes.get(name, '')}")

# %%
for t, neg, l1 in zip(rep.times, rep.stats["negative_mass"]["value"], rep.stats["l1_to_Mp"]["value"]):
    print(f"t = {t:5.2f}   negative mass {neg:.4f}   L1 to M p_t {l1:.4f}")
