"""Strong competition: the weaker species dies out, algebraically at worst.

For a1 = 1.2 > 1 > a2 = 0.5 the second species wins and the state tends to
(0, 1).  The guaranteed decay of the combined distance is only algebraic.
Here the run decays faster than that, so the fitted algebraic exponent
lands well above 1.

Swapping a1 and a2 mirrors the whole computation.  The last section checks
that both runs agree once the species labels are exchanged.
"""
import numpy as np

from chemofluid import (
    DomainSpec,
    ModelParams,
    SolverConfig,
    check_dissipation,
    classify_regime,
    default_initial_state,
    rate_constants,
    run,
    verdicts,
)

dom = DomainSpec(1.0, 1.0, 32, 32)
cfg = SolverConfig(t_end=30.0)


def simulate(a1, a2):
    params = ModelParams(a1, a2)
    regime = classify_regime(a1, a2)
    rc = rate_constants(params, regime, domain=dom)
    series = run(default_initial_state(params, dom, regime), params, cfg, regime)
    return params, regime, rc, series


# %% the second species wins
params, regime, rc, series = simulate(1.2, 0.5)
report = verdicts(series, rc, regime)
print(f"{regime.value}: equilibrium ({rc.equilibrium.n1_star}, {rc.equilibrium.n2_star}), "
      f"dissipation constant {rc.sigma:.4f}")
for e in report.entries:
    kind = "exponent" if e.fit_kind == "algebraic" else "rate"
    print(f"  {e.quantity:8s} {kind:8s} {e.fitted:9.4f}  bound {e.predicted:7.4f}  {e.verdict}")
print("  final max of n1:", series.column("n1_linf")[-1])
print("  dissipation audit passed:", check_dissipation(series.samples, rc.sigma, t0=report.t0).passed)

# %% the mirror image
_, regime3, rc3, series3 = simulate(0.5, 1.2)
print(f"\n{regime3.value}: dissipation constant {rc3.rho:.4f}")
same_n = np.allclose(series.column("n1_linf"), series3.column("n2_linf"), rtol=1e-9, atol=1e-14)
same_c = np.allclose(series.column("c_linf"), series3.column("c_linf"), rtol=1e-9, atol=1e-14)
# the mirrored energy carries an extra factor a1 * mu1 / mu2 of the swapped system
ratio = series3.column("E")[1:] / series.column("E")[1:]
print(f"  densities mirror: {same_n}, signal identical: {same_c}")
print(f"  energy ratio {ratio.min():.12f} .. {ratio.max():.12f} (expected 0.5)")
