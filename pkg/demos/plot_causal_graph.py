"""
Reading exclusion restrictions off the causal graph
===================================================

The instruments are valid because of what the graph does not contain. Here we
list every path from the supply shifter to the demand curve and check which
conditioning sets block all of them.
"""
###############################################################################
# The demand/supply graph with latent curves ``D`` and ``S`` and latent common
# factors ``K1`` (behind the shifters) and ``K2`` (behind both curves).

from wrightiv import SeparationQuery, build_wright_dag, d_separated
from wrightiv.causal_dag import enumerate_paths, implied_exclusions, render_factorization

g = build_wright_dag()
print(g, "latent:", sorted(g.latent))
print(render_factorization(g))

###############################################################################
# Four paths connect ``Zs`` and ``D``. Three pass through a collider and are
# closed unless we condition on it; the fourth runs through ``Zd``.

for path in enumerate_paths(g, "Zs", "D"):
    print(f"{str(path):<22} colliders: {', '.join(path.colliders()) or '-'}")

for z in ({"Zd"}, {"Zd", "P"}, set()):
    q = SeparationQuery("Zs", "D", z)
    print(f"{str(q):<22} separated: {d_separated(g, q)}")

###############################################################################
# Adding the observed control ``W`` gives another back door through ``K1``,
# so both the shifter and ``W`` must be conditioned on.

gw = build_wright_dag(include_w=True)
for check in implied_exclusions(gw):
    print(check)
