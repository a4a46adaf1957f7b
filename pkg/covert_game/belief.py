# belief.py
# Recursión de Bayes del receptor, distribución (del lado del atacante) sobre la creencia
# verdadera del receptor, operador de creencia estimada y diagnósticos del factor G.
# Todas las funciones son puras sobre valores inmutables.

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from covert_game.errors import (DegenerateLikelihoodError,
                                ImpossibleObservationError, OracleHorizonError)
from covert_game.model import STOCHASTIC_TOL, Scenario, Symbol

logger = logging.getLogger(__name__)

MAX_SUPPORT = 10_000  # tope de emergencia del soporte
WEIGHT_TOL = 1e-10
ORACLE_MAX_HORIZON = 8


# === Tipos ===

@dataclass(frozen=True)
class Belief:
    """Creencia del receptor: masa asignada al tipo malicioso (la benigna es el complemento)."""
    malicious_mass: float

    def __post_init__(self):
        if not (0.0 <= self.malicious_mass <= 1.0):
            raise ValueError(f"masa maliciosa fuera de [0,1]: {self.malicious_mass!r}")

    @property
    def benign_mass(self) -> float:
        return 1.0 - self.malicious_mass

    @property
    def is_interior(self) -> bool:
        return 0.0 < self.malicious_mass < 1.0


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LikelihoodPair:
    """pmf de y bajo la acción maliciosa (m) y bajo la acción benigna (b)."""
    m: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", _frozen_array(self.m))
        object.__setattr__(self, "b", _frozen_array(self.b))
        if self.m.shape != self.b.shape or self.m.ndim != 1:
            raise ValueError("m y b deben ser vectores de la misma longitud")
        for name, vec in (("m", self.m), ("b", self.b)):
            if np.any(vec < 0.0) or abs(math.fsum(vec) - 1.0) > STOCHASTIC_TOL:
                raise ValueError(f"la verosimilitud '{name}' no es una pmf: {vec.tolist()}")

    @property
    def uninformative(self) -> bool:
        """True si m y b coinciden entrada a entrada (la acción maliciosa es observacionalmente benigna)."""
        return bool(np.array_equal(self.m, self.b))


@dataclass(frozen=True, eq=False)
class BeliefDistribution:
    """
    Ley de la creencia verdadera π_k dada la información del emisor:
    puntos de soporte (masas maliciosas) con pesos positivos normalizados.
    """
    masses: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "masses", _frozen_array(self.masses))
        object.__setattr__(self, "weights", _frozen_array(self.weights))
        if self.masses.shape != self.weights.shape or self.masses.ndim != 1 or self.masses.size == 0:
            raise ValueError("soporte vacío o con forma inconsistente")
        if np.any(self.weights <= 0.0):
            raise ValueError("los pesos del soporte deben ser positivos")
        if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"los pesos suman {math.fsum(self.weights)!r}, no 1")
        if np.any(self.masses < 0.0) or np.any(self.masses > 1.0):
            raise ValueError("masas fuera de [0,1]")

    @classmethod
    def point(cls, mass: float) -> "BeliefDistribution":
        return cls(masses=[mass], weights=[1.0])

    @property
    def size(self) -> int:
        return int(self.masses.size)

    @property
    def support(self) -> List[Tuple[Belief, float]]:
        return [(Belief(float(m)), float(w)) for m, w in zip(self.masses, self.weights)]

    @property
    def key(self) -> bytes:
        return self.masses.tobytes() + self.weights.tobytes()


# === Verosimilitudes ===

def likelihoods(s: Scenario, u: Symbol, a: Symbol) -> LikelihoodPair:
    """m = λ(·|Σ(u,a)), b = λ(·|Σ(u,a_b)); condicionadas a la entrada u conocida por ambos."""
    t = s.tables
    ui = s.alphabets.u.index(u, "u")
    ai = s.alphabets.a.index(a, "a")
    return LikelihoodPair(m=t.channel[t.state[ui][ai]], b=t.channel[t.state[ui][t.benign]])


# === Operaciones ===

def bayes_update(prior: Belief, y: int, lik: LikelihoodPair) -> Belief:
    """
    Regla de Bayes para la observación en la posición `y` de 𝒴:
    π_m' = m[y]·π_m / (b[y]·π_b + m[y]·π_m).
    """
    my = float(lik.m[y])
    by = float(lik.b[y])
    if my + by <= 0.0:
        raise ImpossibleObservationError(f"la observación y[{y}] tiene verosimilitud nula bajo ambos tipos")
    if my == by:
        return prior
    den = by * prior.benign_mass + my * prior.malicious_mass
    if den <= 0.0:
        raise ImpossibleObservationError(f"la observación y[{y}] es imposible para la creencia {prior.malicious_mass!r}")
    return Belief(my * prior.malicious_mass / den)


def _merge_arrays(masses: np.ndarray, weights: np.ndarray, tol: float,
                  max_support: int = MAX_SUPPORT) -> BeliefDistribution:
    order = np.argsort(masses, kind="stable")
    m = masses[order]
    w = weights[order]
    if m.size > 1:
        starts = np.empty(m.size, dtype=bool)
        starts[0] = True
        starts[1:] = np.diff(m) > tol
        group = np.cumsum(starts) - 1
        total = np.bincount(group, weights=w)
        merged = np.clip(np.bincount(group, weights=w * m) / total, 0.0, 1.0)
    else:
        total, merged = w, m

    if total.size > max_support:
        keep = np.sort(np.argsort(total, kind="stable")[-max_support:])
        logger.warning("BELIEF: soporte truncado de %d a %d puntos (fusión insuficiente)", total.size, max_support)
        total, merged = total[keep], merged[keep]

    return BeliefDistribution(masses=merged, weights=total / total.sum())


def merge_support(points: Iterable[Tuple[Union[Belief, float], float]], tol: float) -> BeliefDistribution:
    """
    Fusiona puntos cuyas masas difieren en <= tol (encadenando vecinos ordenados) en un único
    punto en su media ponderada, con peso sumado. Conserva la media y nunca aumenta el soporte.
    """
    masses, weights = [], []
    for belief, weight in points:
        if weight <= 0.0:
            raise ValueError("los pesos a fusionar deben ser positivos")
        masses.append(belief.malicious_mass if isinstance(belief, Belief) else float(belief))
        weights.append(float(weight))
    return _merge_arrays(np.asarray(masses, dtype=np.float64), np.asarray(weights, dtype=np.float64), tol)


def dist_step(d: BeliefDistribution, lik: LikelihoodPair, tol: float) -> BeliefDistribution:
    """
    Avanza un paso la ley de π_k vista por el emisor: cada punto se ramifica en sus
    posteriores para cada y con m[y] > 0, ponderado por m[y]; luego se fusiona.
    """
    if lik.uninformative:
        return d
    possible = lik.m > 0.0
    my = lik.m[possible]
    by = lik.b[possible]
    pm = d.masses[:, None]
    num = my[None, :] * pm
    den = by[None, :] * (1.0 - pm) + num
    if np.any(den <= 0.0):
        raise ImpossibleObservationError("observación posible bajo el emisor malicioso pero con denominador nulo")
    posterior = (num / den).ravel()
    weight = (d.weights[:, None] * my[None, :]).ravel()
    alive = weight > 0.0
    assert np.any(alive), "soporte vacío tras dist_step"
    return _merge_arrays(posterior[alive], weight[alive], tol)


def estimated_belief(d: BeliefDistribution) -> float:
    """π̂: media de la distribución de creencias."""
    return float(np.dot(d.weights, d.masses))


# === Factor G y cotas asociadas ===

def g_factor(lik: LikelihoodPair, prior: Belief) -> float:
    """
    G = Σ_y m_y² / (b_y·π_b + m_y·π_m): crecimiento multiplicativo de la media en un paso
    desde una distribución puntual. G >= 1, con igualdad si y solo si m = b.
    """
    if lik.uninformative:
        return 1.0
    pm = prior.malicious_mass
    pb = prior.benign_mass
    total = 0.0
    for my, by in zip(lik.m, lik.b):
        if my <= 0.0:
            continue
        den = by * pb + my * pm
        if den <= 0.0:
            raise DegenerateLikelihoodError(f"denominador nulo con m_y={my!r}, b_y={by!r}, π_m={pm!r}")
        total += my * my / den
    return total


def g_function(alpha: float, m: Sequence[float], b: Sequence[float]) -> float:
    """g(α, m, b) = Σ_y m_y² / (α·m_y + (1−α)·b_y). Con α = π_m coincide con el factor G."""
    total = 0.0
    for my, by in zip(m, b):
        if my > 0.0:
            total += my * my / (alpha * my + (1.0 - alpha) * by)
    return total


def h_function(alpha: float, m: Sequence[float], b: Sequence[float]) -> float:
    """h(α, m, b) = Σ_y m_y·b_y / (α·m_y + (1−α)·b_y); g = Σm/α − (1−α)/α · h."""
    total = 0.0
    for my, by in zip(m, b):
        if my > 0.0 and by > 0.0:
            total += my * by / (alpha * my + (1.0 - alpha) * by)
    return total


def geometric_bound(alpha: float, m: Sequence[float], b: Sequence[float]) -> float:
    """Σ_y m_y^(1−α)·b_y^α; acota h por arriba y queda acotada por 1 (media aritmética-geométrica)."""
    return math.fsum(float(my) ** (1.0 - alpha) * float(by) ** alpha for my, by in zip(m, b))


# === Oráculo por enumeración ===

def oracle_estimated_belief(s: Scenario, actions: Sequence[Symbol], inputs: Sequence[Symbol],
                            max_horizon: int = ORACLE_MAX_HORIZON) -> float:
    """
    π̂_k exacto por enumeración de las |𝒴|^k historias de observación para una secuencia
    fija de acciones maliciosas y entradas realizadas. Referencia para encadenar dist_step.
    """
    if len(actions) != len(inputs):
        raise ValueError("actions e inputs deben tener la misma longitud")
    steps = len(actions)
    if steps > max_horizon:
        raise OracleHorizonError(steps, max_horizon)
    liks = [likelihoods(s, u, a) for u, a in zip(inputs, actions)]
    prior = Belief(s.initial_belief_malicious)
    terms = []
    for history in itertools.product(range(s.alphabets.y.size), repeat=steps):
        weight = 1.0
        belief = prior
        for lik, y in zip(liks, history):
            weight *= float(lik.m[y])
            if weight == 0.0:
                break
            belief = bayes_update(belief, y, lik)
        if weight > 0.0:
            terms.append(weight * belief.malicious_mass)
    return math.fsum(terms)
