# strategy.py
# Utilidades esperadas, reacción del receptor y punto fijo de mejor respuesta del emisor
# en el conjunto de información realizado (resuelto paso a paso, de forma perezosa).

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from covert_game.belief import Belief, bayes_update, likelihoods
from covert_game.model import Scenario, Symbol, TypeTag

logger = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-12  # tolerancia absoluta del argmax en la comprobación de punto fijo


# === Tipos ===

@dataclass(frozen=True)
class ReactionRule:
    """Regla y -> r que el emisor atribuye al receptor en el paso actual (por etiquetas)."""
    table: Tuple[Tuple[Symbol, Symbol], ...]

    def __getitem__(self, y: Symbol) -> Symbol:
        for key, r in self.table:
            if key == y:
                return r
        raise KeyError(y)

    def as_dict(self) -> Dict[Symbol, Symbol]:
        return dict(self.table)

    @property
    def is_constant(self) -> bool:
        return len({r for _, r in self.table}) <= 1


@dataclass(frozen=True)
class StagePolicy:
    """Par resuelto en un paso: acción maliciosa y regla de reacción modelada."""
    malicious_action: Symbol
    modeled_reactions: ReactionRule
    sender_value: float
    fixed_point_found: bool


# === Receptor ===

def receiver_reaction(posterior: Belief, u: Symbol, a_mal: Symbol, s: Scenario) -> Symbol:
    """
    argmax_r π_b·U^r(θ_b, Σ(u,a_b), a_b, r) + π_m·U^r(θ_m, Σ(u,a_mal), a_mal, r).
    Empates: gana el índice menor del alfabeto de reacciones.
    """
    t = s.tables
    ui = s.alphabets.u.index(u, "u")
    ai = s.alphabets.a.index(a_mal, "a")
    x_b = t.state[ui][t.benign]
    x_m = t.state[ui][ai]
    ben, mal = TypeTag.BENIGN.index, TypeTag.MALICIOUS.index
    best_r, best_value = 0, float("-inf")
    for ri in range(s.alphabets.r.size):
        value = (posterior.benign_mass * t.receiver[(ben, x_b, t.benign, ri)]
                 + posterior.malicious_mass * t.receiver[(mal, x_m, ai, ri)])
        if value > best_value:
            best_r, best_value = ri, value
    return s.alphabets.r.label(best_r)


def modeled_reaction_rule(pi_hat: float, u: Symbol, a_candidate: Symbol, s: Scenario) -> ReactionRule:
    """Para cada y: posterior desde π̂ con las verosimilitudes (a_candidate frente a a_b) y reacción del receptor."""
    lik = likelihoods(s, u, a_candidate)
    prior = Belief(pi_hat)
    table = []
    for yi, y in enumerate(s.alphabets.y.labels):
        posterior = bayes_update(prior, yi, lik)
        table.append((y, receiver_reaction(posterior, u, a_candidate, s)))
    return ReactionRule(table=tuple(table))


# === Emisor ===

def sender_expected_utility(a_play: Symbol, rule: ReactionRule, u: Symbol, s: Scenario) -> float:
    """Σ_y λ(y|Σ(u,a_play))·U^s(θ_m, Σ(u,a_play), a_play, rule[y])."""
    t = s.tables
    al = s.alphabets
    ui = al.u.index(u, "u")
    ai = al.a.index(a_play, "a")
    xi = t.state[ui][ai]
    mal = TypeTag.MALICIOUS.index
    total = 0.0
    for yi, y in enumerate(al.y.labels):
        p = t.channel[xi][yi]
        if p > 0.0:
            total += p * t.sender[(mal, xi, ai, al.r.index(rule[y], "r"))]
    return total


def _best_actions(rule: ReactionRule, u: Symbol, s: Scenario) -> Tuple[List[float], float]:
    values = [sender_expected_utility(a, rule, u, s) for a in s.alphabets.a.labels]
    return values, max(values)


def verify_stage_policy(policy: StagePolicy, u: Symbol, s: Scenario) -> bool:
    """Re-comprueba que la acción maliciosa está en el argmax frente a la regla modelada."""
    values, best = _best_actions(policy.modeled_reactions, u, s)
    ai = s.alphabets.a.index(policy.malicious_action, "a")
    return values[ai] >= best - FIXED_POINT_TOL


def solve_stage(pi_hat: float, u: Symbol, s: Scenario) -> StagePolicy:
    """
    Punto fijo por etapa: a es candidato si es mejor respuesta a la regla que su propio
    juego induce. Entre los candidatos gana el de mayor utilidad (empate: índice menor).
    Sin punto fijo puro se devuelve a_b con fixed_point_found=False.
    """
    chosen: Optional[StagePolicy] = None
    for ai, a in enumerate(s.alphabets.a.labels):
        rule = modeled_reaction_rule(pi_hat, u, a, s)
        values, best = _best_actions(rule, u, s)
        if values[ai] < best - FIXED_POINT_TOL:
            continue
        if chosen is None or values[ai] > chosen.sender_value:
            chosen = StagePolicy(malicious_action=a, modeled_reactions=rule,
                                 sender_value=values[ai], fixed_point_found=True)
    if chosen is not None:
        return chosen

    logger.debug("STRATEGY: sin punto fijo puro en π̂=%.6f, u=%r; se usa a_b", pi_hat, u)
    rule = modeled_reaction_rule(pi_hat, u, s.benign_action, s)
    return StagePolicy(malicious_action=s.benign_action, modeled_reactions=rule,
                       sender_value=sender_expected_utility(s.benign_action, rule, u, s),
                       fixed_point_found=False)


def benign_action_policy(s: Scenario) -> Symbol:
    """El emisor benigno juega siempre a_b, sin importar π̂, u ni k."""
    return s.benign_action


# === Estructura de umbral ===

def default_grid(points: int = 10_000) -> np.ndarray:
    """Rejilla de π̂ estrictamente interior a (0,1)."""
    return (np.arange(points, dtype=np.float64) + 0.5) / points


def stage_actions(s: Scenario, u: Symbol, grid: Sequence[float]) -> List[Symbol]:
    return [solve_stage(float(p), u, s).malicious_action for p in grid]


def stage_threshold(s: Scenario, u: Symbol, grid: Optional[Sequence[float]] = None) -> Optional[float]:
    """Primer punto de la rejilla donde cambia la acción maliciosa; None si no cambia."""
    grid = default_grid() if grid is None else grid
    actions = stage_actions(s, u, grid)
    for i in range(1, len(actions)):
        if actions[i] != actions[i - 1]:
            return float(grid[i])
    return None


def single_crossing(s: Scenario, u: Symbol, grid: Optional[Sequence[float]] = None) -> bool:
    """True si la acción seleccionada cambia a lo sumo una vez a lo largo de la rejilla."""
    grid = default_grid() if grid is None else grid
    actions = stage_actions(s, u, grid)
    changes = sum(1 for i in range(1, len(actions)) if actions[i] != actions[i - 1])
    return changes <= 1
