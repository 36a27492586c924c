"""Run reports: per-phase summaries, bound checks and JSON persistence."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

from .game import potential
from .oracles import check_claims, classify_phase_edges, verify_equilibrium
from .params import sigma, target_factor, tau

REPORT_FORMAT = "cutnash-report 1"
TIMING_KEYS = ("wall_time", "sdp_time")


def _finite_or_tag(x):
    if isinstance(x, float) and not math.isfinite(x):
        return {"float": repr(x)}
    return x


def _encode(obj):
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return _finite_or_tag(obj)


def _decode(obj):
    if isinstance(obj, dict):
        if set(obj) == {"float"}:
            return float(obj["float"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


@dataclass
class RunReport:
    """Everything a run produced, as plain data.

    Field order is fixed, so the JSON text is stable for golden files.
    """

    config: dict
    instance: dict
    partition: dict
    state: str
    verdict: dict
    phases: list
    totals: dict
    flags: list
    wall_time: float = 0.0
    format: str = REPORT_FORMAT

    def to_json(self) -> str:
        return json.dumps(_encode(dataclasses.asdict(self)), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text) -> "RunReport":
        data = _decode(json.loads(text))
        if data.get("format") != REPORT_FORMAT:
            raise ValueError(f"not a run report (format {data.get('format')!r})")
        return cls(**data)

    def without_timings(self) -> dict:
        """The report as a dict with every wall-clock field removed."""
        def strip(obj):
            if isinstance(obj, dict):
                return {k: strip(v) for k, v in obj.items() if k not in TIMING_KEYS}
            if isinstance(obj, list):
                return [strip(v) for v in obj]
            return obj
        return strip(dataclasses.asdict(self))

    @property
    def passed(self):
        return self.verdict["passed"]


def phase_checks(game, phase, epsilon):
    """Bound checks for one phase that has a heavy block."""
    n = game.n
    w_next = phase.light_upper
    weights = classify_phase_edges(game, phase)
    claims = check_claims(weights, n, w_next, sigma(epsilon), tau(epsilon),
                          had_moves=phase.tau_move_count > 0)
    before = potential(game, phase.start_state, phase.moved)
    after = potential(game, phase.end_state, phase.moved)
    budget = 18.0 * n * w_next / epsilon
    move_cap = 72.0 * n / epsilon
    round_cap = 414720.0 * n**2 / epsilon**4
    start_sum = weights.wA + weights.wC + weights.wD + weights.wH + weights.wJ
    scale = max(1.0, before)
    return {
        "class_weights": dataclasses.asdict(weights),
        "small_block": claims.small_block,
        "stretch": claims.stretch,
        "move": claims.move,
        "potential_change": after - before,
        "potential_budget": budget,
        "budget_ok": after - before <= budget + 1e-9 * scale,
        "tau_move_bound": move_cap,
        "tau_moves_ok": phase.tau_move_count <= move_cap,
        "round_calls_ok": phase.round_calls <= round_cap,
        "start_conservation_ok": abs(start_sum - before) <= 1e-9 * scale,
        "passed": bool(claims.passed and after - before <= budget + 1e-9 * scale
                       and phase.tau_move_count <= move_cap
                       and phase.round_calls <= round_cap),
    }


def _phase_summary(game, phase, epsilon, m):
    out = {
        "index": phase.index,
        "heavy_size": len(phase.heavy_players),
        "light_size": len(phase.light_players),
        "moved": sorted(phase.moved),
        "flipped": sorted(phase.flipped),
        "tau_moves": phase.tau_move_count,
        "sdp_calls": phase.sdp_calls,
        "sdp_values": list(phase.sdp_values),
        "round_calls": phase.round_calls,
        "round_gains": list(phase.round_gains),
        "round_reached": list(phase.round_reached),
        "round_iterations": list(phase.round_iterations),
        "flags": sorted(phase.flags),
        "checks": phase_checks(game, phase, epsilon) if 1 <= phase.index <= m else None,
        "wall_time": phase.wall_time,
    }
    return out


def build_report(game, config, result, slack=1e-9) -> RunReport:
    """Verify the output state and summarise every phase."""
    eps = config.epsilon
    factor = target_factor(eps)
    check = verify_equilibrium(game, result.state, factor, slack)
    part = result.partition
    phases = [_phase_summary(game, tr, eps, part.m) for tr in result.traces]
    checked = [p["checks"] for p in phases if p["checks"] is not None]
    rounds = [r for tr in result.traces for r in tr.round_reached]
    totals = {
        "phases": len(phases),
        "tau_moves": sum(p["tau_moves"] for p in phases),
        "sdp_calls": sum(p["sdp_calls"] for p in phases),
        "round_calls": len(rounds),
        "rounds_reached": sum(rounds),
        "round_iterations": sum(sum(p["round_iterations"]) for p in phases),
        "phase_checks_passed": all(c["passed"] for c in checked),
    }
    return RunReport(
        config=dataclasses.asdict(config),
        instance={"n": game.n, "edges": len(game.edges),
                  "total_weight": float(game.weights.sum())},
        partition={"ratio": part.ratio, "m": part.m, "sizes": list(part.sizes),
                   "boundaries": list(part.boundaries)},
        state=str(result.state),
        verdict={"factor": factor, "passed": check.passed, "worst_ratio": check.worst_ratio,
                 "worst_player": check.worst_player},
        phases=phases,
        totals=totals,
        flags=sorted(result.flags),
        wall_time=result.wall_time,
    )
