from .agents import Action, Agent, AgentView, Candidate, agent_act, perceive_quality
from .metrics import Metrics, earnings_from_log
from .scenario import RNG_NAME, Scenario, Strategy, StrategyKind, scenario_hash
from .world import RoundReport, World, generate_round_submissions, run, run_world, step

__all__ = [
    "Action", "Agent", "AgentView", "Candidate", "agent_act", "perceive_quality",
    "Metrics", "earnings_from_log",
    "RNG_NAME", "Scenario", "Strategy", "StrategyKind", "scenario_hash",
    "RoundReport", "World", "generate_round_submissions", "run", "run_world", "step",
]
