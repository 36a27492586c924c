# %% [markdown]
# # Phases on a game with widely separated weight scales
#
# Players are grouped by maximum utility into blocks whose scales differ by
# a factor of at least 480 n / eps^2.  Each phase settles one heavy block
# while coalition moves run in the next lighter one.

# %%
from cutnash import SolverConfig, build_report, generate, partition_blocks, solve

game = generate("multi-block", {"n": 15, "groups": 3, "epsilon": 0.25}, seed=5)
part = partition_blocks(game, 0.25)
print("blocks:", part.m, "sizes:", part.sizes)

# %%
config = SolverConfig(seed=5)
result = solve(game, config)
report = build_report(game, config, result)
for phase in report.phases:
    checks = phase["checks"] or {}
    print(phase["index"], "moved:", phase["moved"], "single moves:", phase["tau_moves"],
          "SDP calls:", phase["sdp_calls"], "bounds ok:", checks.get("passed", "-"))

# %% [markdown]
# Per-phase edge weights by class, for the first phase with a heavy block.

# %%
report.phases[1]["checks"]["class_weights"]
