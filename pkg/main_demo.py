import math
from pprint import pprint
from rydwalk.experiments import run_1d_edge, run_surface_walk
from rydwalk.microphysics import RydbergParams, hop_detuning, step_budget
from rydwalk.topology import invariants

# the two phases either side of a domain wall
left, right = invariants(math.pi / 10, 4 * math.pi / 10), invariants(4 * math.pi / 10, math.pi / 10)
print("(ν0, νπ) left:", (left.nu_0, left.nu_pi), "right:", (right.nu_0, right.nu_pi))
# a walker released on the wall stays there
pprint({case: run_1d_edge(case=case).summary["trapped_fraction"] for case in ("transition", "adiabatic")})
print("###")
# one period on a torus and on a Möbius strip
pprint({topology: run_surface_walk(topology).summary["landing"] for topology in ("torus", "moebius", "klein")})
print("###")
# what the Rydberg layer needs for a Hadamard step, and how long the walk lasts
params = RydbergParams()
print("detuning offset for θ = π/4 (MHz):", hop_detuning(math.pi / 4, params))
pprint(step_budget(params))
