# engine.py
# Orquesta el juego repetido: ruta de la creencia estimada del atacante, trayectorias de la
# creencia verdadera del defensor, agregación Monte Carlo y auditorías de monotonía,
# convergencia (seguridad asintótica) y del supuesto sobre creencias que no tienden a uno.

import bisect
import logging
import sys
import threading
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import Dict, List, Optional, Tuple

import numpy as np
from cachetools import LRUCache, cached
from cachetools.keys import hashkey
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from covert_game.belief import (Belief, BeliefDistribution, bayes_update,
                                dist_step, estimated_belief, likelihoods,
                                oracle_estimated_belief)
from covert_game.errors import ScenarioInvalidError
from covert_game.model import Scenario, Symbol, system_state, validate_scenario
from covert_game.strategy import StagePolicy, receiver_reaction, solve_stage

logger = logging.getLogger(__name__)

AUDIT_TOL = 1e-10
ORACLE_AUDIT_TOL = 1e-12
ORACLE_AUDIT_HORIZON = 6
ASSUMPTION5_THRESHOLD = 1.0 - 1e-6


# === Registros ===

@dataclass(frozen=True)
class StepRecord:
    """Valores tras el paso k: π_true y π̂ son ya los de k+1."""
    k: int
    u: Symbol
    action: Symbol
    x: Symbol
    y: Symbol
    pi_true: float
    pi_hat: float
    reaction: Symbol
    fixed_point: bool


@dataclass
class Trajectory:
    initial_belief: float
    benign_action: Symbol
    horizon: int
    records: List[StepRecord] = field(default_factory=list)
    convergence_step: Optional[int] = None

    @property
    def pi_hat_column(self) -> List[float]:
        return [r.pi_hat for r in self.records]

    @property
    def pi_true_column(self) -> List[float]:
        return [r.pi_true for r in self.records]

    @property
    def actions(self) -> List[Symbol]:
        return [r.action for r in self.records]

    @property
    def inputs(self) -> List[Symbol]:
        return [r.u for r in self.records]


@dataclass(frozen=True)
class GameState:
    """Estado conjunto: creencia del defensor, distribución del atacante y generador (que avanza al muestrear)."""
    k: int
    true_belief: Belief
    attacker_dist: BeliefDistribution
    rng: np.random.Generator


@dataclass(frozen=True)
class MonteCarloSummary:
    n_trials: int
    horizon: int
    pi_hat: np.ndarray
    emp_mean: np.ndarray
    emp_var: np.ndarray
    convergence_histogram: Dict[Optional[int], int]
    pi_hat_path_independent: bool


# === Informes de auditoría ===

class AuditViolation(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    kind: str = Field(..., description="decrease | benign_changed | no_strict_increase")
    delta: float


class MonotonicityAudit(BaseModel):
    model_config = ConfigDict(frozen=True)

    tolerance: float
    equality_steps: int = 0
    strict_steps: int = 0
    violations: Tuple[AuditViolation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


class Assumption5Report(BaseModel):
    """Aproximación de horizonte finito: el supuesto real es sobre perfiles de estrategia."""
    model_config = ConfigDict(frozen=True)

    holds: bool
    first_violation_step: Optional[int] = None
    threshold: float
    horizon: int


class OracleComparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    recursive: float
    oracle: float

    @property
    def abs_diff(self) -> float:
        return abs(self.recursive - self.oracle)


# === Generadores ===

def make_rng(seed: int) -> np.random.Generator:
    """Generador Philox (basado en contador) sembrado a través de SeedSequence."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def trial_seed(base_seed: int, trial: int) -> int:
    """Semilla de 64 bits del ensayo `trial`: SeedSequence([base_seed, trial])."""
    return int(np.random.SeedSequence([base_seed, trial]).generate_state(1, dtype=np.uint64)[0])


def _draw(rng: np.random.Generator, cdf) -> int:
    idx = bisect.bisect_right(cdf, rng.random())
    return min(idx, len(cdf) - 1)


def _cumulative(pmf) -> List[float]:
    out, acc = [], 0.0
    for p in pmf:
        acc += p
        out.append(acc)
    return out


# === Paso del atacante (memoizado) ===

_ATTACKER_CACHE: LRUCache = LRUCache(maxsize=4096)
_ATTACKER_LOCK = threading.Lock()


def _attacker_key(s: Scenario, dist: BeliefDistribution, u: Symbol):
    return hashkey(s.fingerprint, dist.key, u)


@cached(_ATTACKER_CACHE, key=_attacker_key, lock=_ATTACKER_LOCK)
def advance_attacker(s: Scenario, dist: BeliefDistribution, u: Symbol) -> Tuple[StagePolicy, BeliefDistribution]:
    """Resuelve la etapa con π̂ = media(dist) y avanza la distribución con la acción elegida."""
    policy = solve_stage(estimated_belief(dist), u, s)
    lik = likelihoods(s, u, policy.malicious_action)
    return policy, dist_step(dist, lik, s.merge_tolerance)


# === Juego ===

def initial_state(s: Scenario, seed: int) -> GameState:
    pi0 = s.initial_belief_malicious
    return GameState(k=0, true_belief=Belief(pi0), attacker_dist=BeliefDistribution.point(pi0), rng=make_rng(seed))


def step_game(state: GameState, s: Scenario, forced_u: Optional[Symbol] = None,
              forced_y: Optional[Symbol] = None) -> Tuple[GameState, StepRecord]:
    """
    Un paso del juego: entrada, estrategia por etapa, estado, medición, actualización del
    defensor con la estrategia real del emisor, reacción y avance de la ley del atacante.
    """
    al = s.alphabets
    t = s.tables
    u = forced_u if forced_u is not None else al.u.label(_draw(state.rng, t.input_cdf))

    policy, next_dist = advance_attacker(s, state.attacker_dist, u)
    a = policy.malicious_action
    x = system_state(s, u, a)
    xi = al.x.index(x, "x")
    yi = al.y.index(forced_y, "y") if forced_y is not None else _draw(state.rng, _cumulative(t.channel[xi]))

    lik = likelihoods(s, u, a)
    true_belief = bayes_update(state.true_belief, yi, lik)
    reaction = receiver_reaction(true_belief, u, a, s)

    record = StepRecord(k=state.k, u=u, action=a, x=x, y=al.y.label(yi),
                        pi_true=true_belief.malicious_mass, pi_hat=estimated_belief(next_dist),
                        reaction=reaction, fixed_point=policy.fixed_point_found)
    return GameState(k=state.k + 1, true_belief=true_belief, attacker_dist=next_dist, rng=state.rng), record


def convergence_step(records: List[StepRecord], benign_action: Symbol) -> Optional[int]:
    """Menor N tal que la acción maliciosa es a_b en todos los pasos registrados k >= N."""
    n = None
    for rec in reversed(records):
        if rec.action != benign_action:
            break
        n = rec.k
    return n


def _simulate(s: Scenario, seed: int, horizon: int) -> Trajectory:
    state = initial_state(s, seed)
    traj = Trajectory(initial_belief=s.initial_belief_malicious, benign_action=s.benign_action, horizon=horizon)
    for _ in range(horizon):
        state, record = step_game(state, s)
        traj.records.append(record)
    traj.convergence_step = convergence_step(traj.records, s.benign_action)
    return traj


def _require_valid(s: Scenario) -> None:
    report = validate_scenario(s)
    if not report.ok:
        logger.error("ENGINE: escenario '%s' rechazado: %s", s.name,
                     ", ".join(v.assumption for v in report.violations))
        raise ScenarioInvalidError(report)


def run_path(s: Scenario, seed: Optional[int] = None, horizon: Optional[int] = None) -> Trajectory:
    """Trayectoria completa de `horizon` pasos (por defecto el del escenario) con la semilla dada."""
    _require_valid(s)
    seed = s.seed if seed is None else seed
    horizon = s.horizon if horizon is None else horizon
    traj = _simulate(s, seed, horizon)
    logger.debug("ENGINE: ruta seed=%d horizonte=%d convergencia=%s", seed, horizon, traj.convergence_step)
    return traj


def run_monte_carlo(s: Scenario, n_trials: int, base_seed: Optional[int] = None, horizon: Optional[int] = None,
                    workers: int = 1, progress: bool = False) -> MonteCarloSummary:
    """
    n_trials trayectorias independientes con semillas trial_seed(base_seed, i).
    La reducción se hace en orden de ensayo: el resultado no depende del número de procesos.
    """
    if n_trials < 1:
        raise ValueError("n_trials debe ser >= 1")
    _require_valid(s)
    base_seed = s.seed if base_seed is None else base_seed
    horizon = s.horizon if horizon is None else horizon
    seeds = [trial_seed(base_seed, i) for i in range(n_trials)]

    logger.info("ENGINE: Monte Carlo de %d ensayos (horizonte %d, %d procesos)", n_trials, horizon, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, n_trials // (4 * workers))
            results = pool.map(_simulate, repeat(s), seeds, repeat(horizon), chunksize=chunk)
            trajectories = list(tqdm(results, total=n_trials, desc="montecarlo", disable=not progress, file=sys.stderr))
    else:
        trajectories = [_simulate(s, seed, horizon)
                        for seed in tqdm(seeds, desc="montecarlo", disable=not progress, file=sys.stderr)]

    true = np.array([t.pi_true_column for t in trajectories], dtype=np.float64).reshape(n_trials, horizon)
    hats = np.array([t.pi_hat_column for t in trajectories], dtype=np.float64).reshape(n_trials, horizon)
    independent = bool(np.all(hats == hats[0]))
    histogram = Counter(t.convergence_step for t in trajectories)
    return MonteCarloSummary(
        n_trials=n_trials,
        horizon=horizon,
        pi_hat=hats[0].copy() if independent else hats.mean(axis=0),
        emp_mean=true.mean(axis=0),
        emp_var=true.var(axis=0),
        convergence_histogram=dict(histogram),
        pi_hat_path_independent=independent,
    )


# === Auditorías ===

def monotonicity_audit(t: Trajectory, tol: float = AUDIT_TOL) -> MonotonicityAudit:
    """
    π̂ no decrece; permanece igual (±tol) exactamente en los pasos con acción a_b y crece
    estrictamente (> tol) en el resto.
    """
    violations = []
    equal = strict = 0
    prev = t.initial_belief
    for rec in t.records:
        delta = rec.pi_hat - prev
        if delta < -tol:
            violations.append(AuditViolation(step=rec.k, kind="decrease", delta=delta))
        elif rec.action == t.benign_action:
            if abs(delta) > tol:
                violations.append(AuditViolation(step=rec.k, kind="benign_changed", delta=delta))
            else:
                equal += 1
        elif delta <= tol:
            violations.append(AuditViolation(step=rec.k, kind="no_strict_increase", delta=delta))
        else:
            strict += 1
        prev = rec.pi_hat
    return MonotonicityAudit(tolerance=tol, equality_steps=equal, strict_steps=strict, violations=tuple(violations))


def assumption5_monitor(t: Trajectory, threshold: float = ASSUMPTION5_THRESHOLD) -> Assumption5Report:
    """Diagnóstico: la creencia verdadera no supera `threshold` en el horizonte registrado."""
    for rec in t.records:
        if rec.pi_true > threshold:
            return Assumption5Report(holds=False, first_violation_step=rec.k, threshold=threshold, horizon=t.horizon)
    return Assumption5Report(holds=True, threshold=threshold, horizon=t.horizon)


def constant_after_convergence(t: Trajectory, tol: float = AUDIT_TOL) -> bool:
    """True si hay paso de convergencia y π̂ no se mueve (±tol) desde ese paso en adelante."""
    if t.convergence_step is None:
        return False
    n = t.convergence_step
    before = t.initial_belief if n == 0 else t.records[n - 1].pi_hat
    return all(abs(rec.pi_hat - before) <= tol for rec in t.records[n:])


def oracle_audit(t: Trajectory, s: Scenario, max_horizon: int = ORACLE_AUDIT_HORIZON) -> List[OracleComparison]:
    """Compara la columna π̂ con el oráculo por enumeración en cada prefijo realizado (k <= max_horizon)."""
    out = []
    actions, inputs = t.actions, t.inputs
    for k in range(min(len(t.records), max_horizon)):
        oracle = oracle_estimated_belief(s, actions[:k + 1], inputs[:k + 1])
        out.append(OracleComparison(k=k, recursive=t.records[k].pi_hat, oracle=oracle))
    return out


# === Prueba independiente ===
if __name__ == "__main__":
    from covert_game.presets import load_preset

    scenario = load_preset("example_sec4")
    path = run_path(scenario, seed=42)
    print(f"✅ ENGINE: convergencia en k={path.convergence_step}, π̂ final={path.records[-1].pi_hat:.6f}")
    audit = monotonicity_audit(path)
    print(f"✅ ENGINE: auditoría de monotonía con {len(audit.violations)} violaciones")
