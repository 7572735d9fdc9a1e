"""Relaxation to the invariant law and hitting an offset ball.

Run with ``python3 demos/invariant_and_irreducibility.py``.

For stable noise each coordinate at time t is an explicit stable law, so
the distance to the invariant law can be computed exactly and compared with
a Monte Carlo estimate.  The second half estimates the probability of
landing in a ball far from the origin, together with a cheaper product
lower bound built from the head and tail of the coordinate vector.
"""
import math

from cylevy import Ball, OUModel, Spectrum, StableFamily, sufficient_check
from cylevy.cylindrical import convergence_to_invariant, irreducibility_estimate

model = OUModel(Spectrum.laplacian(1), StableFamily(1.5))
suff = sufficient_check(model.measure, model.spectrum)
print(f"log moment {suff.log_moment:.4f}, sum 1/gamma_n summable: "
      f"{suff.inv_gamma_summable.verdict.value}, invariant law guaranteed: {suff.applies}\n")

times = [0.25, 0.5, 1.0, 2.0, 4.0]
st = convergence_to_invariant(model, [2.0], times, N_modes=3, M=20_000, seed=3)
print("   t     KS mode 1 (MC / exact)   KS mode 2 (MC / exact)")
for t, ks, ana in zip(times, st.ks, st.ks_analytic):
    print(f"{t:5.2f}     {ks[0]:.4f} / {ana[0]:.4f}          {ks[1]:.4f} / {ana[1]:.4f}")

c = 3 * float(model.stable_scales(1, math.inf)[0])
res = irreducibility_estimate(model, [], Ball((c,), c / 2), t=1.0, N_modes=64, M=100_000, seed=4)
print(f"\nball centred at {c:.3f} e_1 with radius {c / 2:.3f}:")
print(f"    hit frequency {res.p_hat:.4f}, 95% Wilson interval "
      f"[{res.wilson_low:.4f}, {res.wilson_high:.4f}]")
print(f"    product lower bound {res.lower_bound:.4f} using K = {res.K}, eps = {res.eps:.3f}")
