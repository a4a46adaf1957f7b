# covert_game
# Simulador y batería de verificación del juego de señales repetido entre un emisor
# (benigno o malicioso) y un receptor con reacción encubierta.

from covert_game.belief import (Belief, BeliefDistribution, LikelihoodPair,
                                bayes_update, dist_step, estimated_belief,
                                g_factor, merge_support,
                                oracle_estimated_belief)
from covert_game.engine import (MonteCarloSummary, Trajectory, run_monte_carlo,
                                run_path, step_game)
from covert_game.model import Scenario, TypeTag, validate_scenario
from covert_game.presets import load_preset, preset_document
from covert_game.strategy import StagePolicy, solve_stage

__all__ = [
    "Belief", "BeliefDistribution", "LikelihoodPair", "bayes_update", "dist_step",
    "estimated_belief", "g_factor", "merge_support", "oracle_estimated_belief",
    "MonteCarloSummary", "Trajectory", "run_monte_carlo", "run_path", "step_game",
    "Scenario", "TypeTag", "validate_scenario", "load_preset", "preset_document",
    "StagePolicy", "solve_stage",
]
