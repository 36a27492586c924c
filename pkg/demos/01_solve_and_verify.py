# %% [markdown]
# # Solving a random cut game
#
# Generate a weighted game, run the solver and check the result with the
# independent equilibrium oracle.

# %%
import numpy as np

from cutnash import SolverConfig, build_report, generate, solve, target_factor
from cutnash.game import deviation_utilities, utilities

game = generate("log-uniform-weights", {"n": 14, "p": 0.5, "decades": 3}, seed=3)
game

# %%
config = SolverConfig(epsilon=0.25, seed=3, initial="random")
result = solve(game, config)
print(result.state, "blocks:", result.partition.m)

# %% [markdown]
# No player can multiply its utility by more than rho + eps by switching.

# %%
u = utilities(game, result.state)
dev = deviation_utilities(game, result.state)
with np.errstate(divide="ignore", invalid="ignore"):
    print(np.round(np.where(u > 0, dev / u, 0.0), 3))
print("allowed factor:", round(target_factor(0.25), 4))

# %%
report = build_report(game, config, result)
print(report.verdict)
print(report.totals)
