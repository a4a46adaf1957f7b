# presets.py
# Escenarios incluidos en el paquete: la familia binaria (u, a, x, y, r ∈ {0,1}) con
# Σ(u,a) = u⊕a y canal simétrico, y un generador de escenarios aleatorios válidos
# que usan las suites de propiedades.

import logging
from typing import Any, Callable, Dict, List, Optional

import json5
import numpy as np

from covert_game.errors import ScenarioSchemaError
from covert_game.model import Scenario, TypeTag

logger = logging.getLogger(__name__)

DEFAULT_PRESET = "example_sec4"

# Utilidad del emisor malicioso por (a, r): atacar sin reacción paga más que no atacar,
# atacar con reacción es lo peor.
BINARY_MALICIOUS_PAYOFFS: Dict[tuple, float] = {(1, 0): 3.0, (0, 0): 2.0, (0, 1): 1.0, (1, 1): 0.0}


# === Familia binaria ===

def binary_document(lam: float = 0.55, pi_bar: float = 0.85, pi0: float = 0.15, horizon: int = 500,
                    seed: int = 42, merge_tolerance: float = 1e-9, name: str = DEFAULT_PRESET,
                    malicious_payoffs: Optional[Dict[tuple, float]] = None) -> Dict[str, Any]:
    """
    Documento de escenario binario.
    - λ(0|0) = λ(1|1) = lam; entradas equiprobables.
    - Receptor: 1 por r=0 ante θ_b, α = (1−π̄)/π̄ por r=1 ante θ_m; así r=1 si y solo si π_m >= π̄.
    - El alfabeto de reacciones va ordenado [1, 0]: en el empate exacto π_m = π̄ gana r=1.
    """
    if not (0.0 < pi_bar < 1.0):
        raise ValueError("pi_bar debe estar en (0,1)")
    payoffs = BINARY_MALICIOUS_PAYOFFS if malicious_payoffs is None else malicious_payoffs
    alpha = (1.0 - pi_bar) / pi_bar
    miss = round(1.0 - lam, 12)  # 0.45 exacto para lam = 0.55
    bits = [0, 1]

    sender: List[list] = []
    receiver: List[list] = []
    for x in bits:
        for a in bits:
            for r in (1, 0):
                sender.append([TypeTag.BENIGN.value, x, a, r, 1.0 if a == 0 else 0.0])
                sender.append([TypeTag.MALICIOUS.value, x, a, r, float(payoffs[(a, r)])])
                receiver.append([TypeTag.BENIGN.value, x, a, r, 1.0 if r == 0 else 0.0])
                receiver.append([TypeTag.MALICIOUS.value, x, a, r, alpha if r == 1 else 0.0])

    return {
        "name": name,
        "alphabets": {"u": bits, "x": bits, "y": bits, "a": bits, "r": [1, 0]},
        "system_map": [[u, a, u ^ a] for u in bits for a in bits],
        "channel": [[lam, miss], [miss, lam]],
        "input_pmf": [0.5, 0.5],
        "utility_sender": sender,
        "utility_receiver": receiver,
        "benign_action": 0,
        "pi0_malicious": pi0,
        "horizon": horizon,
        "merge_tolerance": merge_tolerance,
        "seed": seed,
    }


PRESETS: Dict[str, Callable[[], Dict[str, Any]]] = {
    DEFAULT_PRESET: binary_document,
}


def preset_document(name: str) -> str:
    """Texto JSON5 del preset `name` (determinista)."""
    try:
        build = PRESETS[name]
    except KeyError:
        raise ScenarioSchemaError([("preset", f"preset desconocido '{name}' (disponibles: {', '.join(sorted(PRESETS))})")]) from None
    return json5.dumps(build(), indent=2)


def load_preset(name: str = DEFAULT_PRESET) -> Scenario:
    """Escenario validado del preset `name`."""
    document = preset_document(name)
    return Scenario.model_validate(json5.loads(document))


# === Escenarios aleatorios ===

def random_scenario(seed: int, max_size: int = 4) -> Scenario:
    """
    Escenario aleatorio que cumple los supuestos estructurales, con alfabetos de tamaño <= max_size.
    - Σ(u,a) = (u + a) mod |𝒳| con |𝒳| >= |𝒜|: observabilidad de entrada.
    - Filas del canal Dirichlet(1): distinguibles con probabilidad 1.
    - θ_b cobra en [1,2) por a_b y en [0,1) por el resto: preferencia benigna estricta.
    """
    if max_size < 2:
        raise ValueError("max_size debe ser >= 2")
    rng = np.random.default_rng(seed)
    nu = int(rng.integers(1, max_size + 1))
    na = int(rng.integers(2, max_size + 1))
    nx = int(rng.integers(na, max_size + 1))
    ny = int(rng.integers(2, max_size + 1))
    nr = int(rng.integers(1, max_size + 1))

    u_labels = [f"u{i}" for i in range(nu)]
    a_labels = list(range(na))
    x_labels = list(range(nx))
    r_labels = [f"r{i}" for i in range(nr)]
    benign = int(rng.integers(0, na))

    channel = rng.dirichlet(np.ones(ny), size=nx)
    channel = channel / channel.sum(axis=1, keepdims=True)
    inputs = rng.dirichlet(np.ones(nu))

    sender, receiver = [], []
    for x in x_labels:
        for a in a_labels:
            for r in r_labels:
                benign_pay = 1.0 + rng.random() if a == benign else rng.random()
                sender.append([TypeTag.BENIGN.value, x, a, r, float(benign_pay)])
                sender.append([TypeTag.MALICIOUS.value, x, a, r, float(3.0 * rng.random())])
                receiver.append([TypeTag.BENIGN.value, x, a, r, float(rng.random())])
                receiver.append([TypeTag.MALICIOUS.value, x, a, r, float(rng.random())])

    document = {
        "name": f"random-{seed}",
        "alphabets": {"u": u_labels, "x": x_labels, "y": list(range(ny)), "a": a_labels, "r": r_labels},
        "system_map": [[u, a, (ui + a) % nx] for ui, u in enumerate(u_labels) for a in a_labels],
        "channel": channel.tolist(),
        "input_pmf": _exact_pmf(inputs),
        "utility_sender": sender,
        "utility_receiver": receiver,
        "benign_action": benign,
        "pi0_malicious": float(rng.uniform(0.05, 0.95)),
        "horizon": 50,
        "seed": seed,
    }
    return Scenario.model_validate(document)


def _exact_pmf(pmf: np.ndarray) -> List[float]:
    # La última entrada absorbe el redondeo para que la suma quede dentro de 1e-12
    values = [float(p) for p in pmf]
    values[-1] = max(0.0, 1.0 - sum(values[:-1]))
    return values


# === Prueba independiente ===
if __name__ == "__main__":
    print(preset_document(DEFAULT_PRESET))
    scenario = random_scenario(7)
    print(f"✅ PRESETS: escenario aleatorio '{scenario.name}' con |𝒜|={scenario.alphabets.a.size}, "
          f"|𝒴|={scenario.alphabets.y.size}")
