# model.py
# Descripción finita del juego de señales repetido (alfabetos, sistema, canal, utilidades)
# y validadores de los supuestos estructurales que deben cumplirse antes de simular.
# Todos los modelos son pydantic congelados: inmutables y compartibles entre procesos.

import hashlib
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import (BaseModel, ConfigDict, Field, StrictInt, StrictStr,
                      field_validator, model_validator)

from covert_game.errors import ScenarioDomainError, SchemaIssues

logger = logging.getLogger(__name__)

# Un símbolo es una etiqueta entera pequeña o un string.
Symbol = Union[StrictInt, StrictStr]

STOCHASTIC_TOL = 1e-12  # tolerancia de normalización de filas / pmf
ROW_DISTINCT_TOL = 1e-12  # diferencia mínima entre filas del canal para que sean distinguibles


# === Tipos básicos ===

class TypeTag(str, Enum):
    """Tipo privado del emisor."""
    BENIGN = "benign"
    MALICIOUS = "malicious"

    @property
    def index(self) -> int:
        return 0 if self is TypeTag.BENIGN else 1


class Alphabet(BaseModel):
    """Conjunto finito y ordenado de símbolos. El orden define los desempates (índice menor gana)."""
    model_config = ConfigDict(frozen=True)

    labels: Tuple[Symbol, ...] = Field(..., min_length=1, description="Símbolos distintos, en orden.")

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        # En el documento los alfabetos son listas planas
        if isinstance(data, (list, tuple)):
            return {"labels": data}
        return data

    @field_validator("labels")
    @classmethod
    def _distinct(cls, labels: Tuple[Symbol, ...]) -> Tuple[Symbol, ...]:
        if len(set(labels)) != len(labels):
            raise ValueError("las etiquetas del alfabeto deben ser distintas")
        return labels

    @property
    def size(self) -> int:
        return len(self.labels)

    @cached_property
    def positions(self) -> Dict[Symbol, int]:
        return {label: i for i, label in enumerate(self.labels)}

    def index(self, label: Symbol, name: str = "?") -> int:
        """Posición de `label`; lanza ScenarioDomainError si no existe."""
        try:
            return self.positions[label]
        except (KeyError, TypeError):
            raise ScenarioDomainError(name, label) from None

    def label(self, index: int) -> Symbol:
        return self.labels[index]

    def __contains__(self, label: object) -> bool:
        try:
            return label in self.positions
        except TypeError:
            return False


class Alphabets(BaseModel):
    """Un alfabeto por rol: entradas u, estados x, mediciones y, acciones a, reacciones r."""
    model_config = ConfigDict(frozen=True)

    u: Alphabet
    x: Alphabet
    y: Alphabet
    a: Alphabet
    r: Alphabet


class SystemMap(BaseModel):
    """
    Tabla (u, a) -> x. Se presenta detrás de `evaluate(k, u_history, a)` para poder
    añadir mapas dependientes de la historia; la forma tabular solo usa la entrada actual.
    """
    model_config = ConfigDict(frozen=True)

    table: Tuple[Tuple[Symbol, Symbol, Symbol], ...] = Field(..., description="Tripletas [u, a, x].")

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"table": data}
        return data

    @cached_property
    def lookup(self) -> Dict[Tuple[Symbol, Symbol], Symbol]:
        return {(u, a): x for u, a, x in self.table}

    def evaluate(self, k: int, u_history: Sequence[Symbol], a: Symbol) -> Symbol:
        """Estado x_k para la historia de entradas u_{0:k} y la acción a (invariante en el tiempo)."""
        key = (u_history[-1], a)
        if key not in self.lookup:
            raise ScenarioDomainError("system_map", key)
        return self.lookup[key]


class Channel(BaseModel):
    """Canal sin memoria: fila x, columna y, entrada λ(y|x)."""
    model_config = ConfigDict(frozen=True)

    matrix: Tuple[Tuple[float, ...], ...] = Field(..., min_length=1)

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"matrix": data}
        return data

    @field_validator("matrix")
    @classmethod
    def _entries_are_probabilities(cls, matrix):
        for row in matrix:
            for p in row:
                if not (0.0 <= p <= 1.0):
                    raise ValueError(f"entrada fuera de [0,1]: {p}")
        return matrix


class InputProcess(BaseModel):
    """Entradas i.i.d. con pmf fija sobre 𝒰."""
    model_config = ConfigDict(frozen=True)

    pmf: Tuple[float, ...] = Field(..., min_length=1)

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"pmf": data}
        return data

    @field_validator("pmf")
    @classmethod
    def _is_pmf(cls, pmf: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(not (p >= 0.0) or math.isinf(p) for p in pmf):
            raise ValueError("la pmf de entradas tiene entradas negativas o no finitas")
        if abs(math.fsum(pmf) - 1.0) > STOCHASTIC_TOL:
            raise ValueError(f"la pmf de entradas suma {math.fsum(pmf)!r}, no 1")
        return pmf


UtilityEntry = Tuple[TypeTag, Symbol, Symbol, Symbol, float]


class UtilityTable(BaseModel):
    """Utilidades inmediatas (θ, x, a, r) -> valor, invariantes en el tiempo."""
    model_config = ConfigDict(frozen=True)

    sender: Tuple[UtilityEntry, ...]
    receiver: Tuple[UtilityEntry, ...]

    @field_validator("sender", "receiver")
    @classmethod
    def _finite(cls, entries: Tuple[UtilityEntry, ...]) -> Tuple[UtilityEntry, ...]:
        for entry in entries:
            if not math.isfinite(entry[4]):
                raise ValueError(f"utilidad no finita en {entry[:4]}")
        return entries


# === Tablas indexadas (derivadas, cacheadas en el escenario) ===

@dataclass(frozen=True)
class ScenarioTables:
    """Vista por índices del escenario; la usan los módulos numéricos."""
    state: Tuple[Tuple[int, ...], ...]  # [u][a] -> x
    channel: Tuple[Tuple[float, ...], ...]  # [x][y]
    input_cdf: Tuple[float, ...]
    sender: Dict[Tuple[int, int, int, int], float]  # (θ, x, a, r)
    receiver: Dict[Tuple[int, int, int, int], float]
    benign: int


# === Escenario ===

class Scenario(BaseModel):
    """
    Descripción completa del juego. Los nombres de campo del documento (`input_pmf`,
    `pi0_malicious`, `utility_sender`, `utility_receiver`) se aceptan como alias.
    Al construirse valida estructura y totalidad; los supuestos del modelo se comprueban
    aparte con `validate_scenario`.
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = Field("scenario", description="Nombre informativo del escenario.")
    alphabets: Alphabets
    system_map: SystemMap
    channel: Channel
    inputs: InputProcess = Field(..., alias="input_pmf")
    utilities: UtilityTable
    benign_action: Symbol = Field(..., description="Acción benigna a_b ∈ 𝒜.")
    initial_belief_malicious: float = Field(..., gt=0.0, lt=1.0, alias="pi0_malicious")
    horizon: int = Field(500, gt=0, description="Número de pasos por trayectoria.")
    merge_tolerance: float = Field(1e-9, ge=0.0, description="Tolerancia de fusión del soporte.")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Semilla de 64 bits.")

    @model_validator(mode="before")
    @classmethod
    def _gather_utilities(cls, data: Any) -> Any:
        # El documento trae las dos tablas de utilidad como campos de primer nivel
        if isinstance(data, dict) and ("utility_sender" in data or "utility_receiver" in data):
            data = dict(data)
            utilities = {}
            if "utility_sender" in data:
                utilities["sender"] = data.pop("utility_sender")
            if "utility_receiver" in data:
                utilities["receiver"] = data.pop("utility_receiver")
            data["utilities"] = utilities
        return data

    @model_validator(mode="after")
    def _check_structure(self) -> "Scenario":
        issues: List[Tuple[str, str]] = []
        al = self.alphabets

        # --- canal ---
        rows = self.channel.matrix
        if len(rows) != al.x.size:
            issues.append(("channel", f"se esperaban {al.x.size} filas (una por estado), hay {len(rows)}"))
        for i, row in enumerate(rows):
            if len(row) != al.y.size:
                issues.append((f"channel[{i}]", f"se esperaban {al.y.size} columnas, hay {len(row)}"))
            elif abs(math.fsum(row) - 1.0) > STOCHASTIC_TOL:
                issues.append((f"channel[{i}]", f"la fila suma {math.fsum(row)!r}, no es estocástica"))

        # --- entradas ---
        if len(self.inputs.pmf) != al.u.size:
            issues.append(("input_pmf", f"se esperaban {al.u.size} probabilidades, hay {len(self.inputs.pmf)}"))

        # --- mapa del sistema ---
        seen = set()
        for i, (u, a, x) in enumerate(self.system_map.table):
            for role, sym in (("u", u), ("a", a), ("x", x)):
                if sym not in getattr(al, role):
                    issues.append((f"system_map[{i}]", f"símbolo desconocido {sym!r} para '{role}'"))
            if (u, a) in seen:
                issues.append((f"system_map[{i}]", f"par (u={u!r}, a={a!r}) repetido"))
            seen.add((u, a))
        for u in al.u.labels:
            for a in al.a.labels:
                if (u, a) not in seen:
                    issues.append(("system_map", f"falta la tripleta para (u={u!r}, a={a!r})"))

        # --- utilidades: totales, sin ceros implícitos ---
        for table_name, entries in (("utility_sender", self.utilities.sender),
                                    ("utility_receiver", self.utilities.receiver)):
            keys = set()
            for i, (theta, x, a, r, _) in enumerate(entries):
                for role, sym in (("x", x), ("a", a), ("r", r)):
                    if sym not in getattr(al, role):
                        issues.append((f"{table_name}[{i}]", f"símbolo desconocido {sym!r} para '{role}'"))
                if (theta, x, a, r) in keys:
                    issues.append((f"{table_name}[{i}]", "tupla (θ, x, a, r) repetida"))
                keys.add((theta, x, a, r))
            missing = [(t.value, x, a, r) for t in TypeTag for x in al.x.labels
                       for a in al.a.labels for r in al.r.labels if (t, x, a, r) not in keys]
            if missing:
                issues.append((table_name, f"faltan {len(missing)} tuplas, p.ej. {list(missing[0])}"))

        if self.benign_action not in al.a:
            issues.append(("benign_action", f"{self.benign_action!r} no pertenece al alfabeto de acciones"))

        if issues:
            raise SchemaIssues(issues)
        return self

    # --- vistas derivadas ---

    @cached_property
    def tables(self) -> ScenarioTables:
        al = self.alphabets
        state = tuple(
            tuple(al.x.index(self.system_map.lookup[(u, a)], "x") for a in al.a.labels)
            for u in al.u.labels
        )
        cdf, acc = [], 0.0
        for p in self.inputs.pmf:
            acc += p
            cdf.append(acc)

        def _indexed(entries):
            return {(t.index, al.x.index(x), al.a.index(a), al.r.index(r)): float(v)
                    for t, x, a, r, v in entries}

        return ScenarioTables(
            state=state,
            channel=tuple(tuple(float(p) for p in row) for row in self.channel.matrix),
            input_cdf=tuple(cdf),
            sender=_indexed(self.utilities.sender),
            receiver=_indexed(self.utilities.receiver),
            benign=al.a.index(self.benign_action),
        )

    @cached_property
    def fingerprint(self) -> str:
        """Huella estable del contenido; sirve de clave de caché entre pasos y ensayos."""
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()

    def with_overrides(self, **updates: Any) -> "Scenario":
        """Copia validada con campos sustituidos (horizon, seed, merge_tolerance, ...)."""
        data = self.model_dump()
        data.update({k: v for k, v in updates.items() if v is not None})
        return Scenario.model_validate(data)


# === Informes de validación ===

class AssumptionCheck(BaseModel):
    """Resultado de un supuesto: se cumple o no, con una tupla testigo si falla."""
    model_config = ConfigDict(frozen=True)

    holds: bool
    witness: Optional[Tuple[Symbol, ...]] = None
    detail: str = ""


class AssumptionViolation(BaseModel):
    model_config = ConfigDict(frozen=True)

    assumption: str = Field(..., description="Nombre del supuesto violado.")
    witness: Tuple[Symbol, ...]
    detail: str = ""


class ValidationReport(BaseModel):
    """ok o lista de violaciones. Las violaciones son datos, nunca excepciones."""
    model_config = ConfigDict(frozen=True)

    ok: bool
    violations: Tuple[AssumptionViolation, ...] = ()


# === Operaciones ===

def system_state(s: Scenario, u: Symbol, a: Symbol) -> Symbol:
    """x = Σ(u, a) por consulta de tabla."""
    s.alphabets.u.index(u, "u")
    s.alphabets.a.index(a, "a")
    return s.system_map.evaluate(0, (u,), a)


def benign_state(s: Scenario, u: Symbol) -> Symbol:
    """Estado ideal del simulador benigno: Σ(u, a_b)."""
    return system_state(s, u, s.benign_action)


def check_input_observability(s: Scenario) -> AssumptionCheck:
    """Se cumple si ninguna acción distinta de a_b reproduce el estado benigno para alguna u."""
    for u in s.alphabets.u.labels:
        x_b = benign_state(s, u)
        for a in s.alphabets.a.labels:
            if a == s.benign_action:
                continue
            if system_state(s, u, a) == x_b:
                return AssumptionCheck(holds=False, witness=(u, a),
                                       detail=f"Σ({u!r},{a!r}) = Σ({u!r},a_b) = {x_b!r}")
    return AssumptionCheck(holds=True)


def check_channel_informativeness(s: Scenario) -> AssumptionCheck:
    """
    Para cada u y cada a != a_b, las filas λ(·|Σ(u,a)) y λ(·|Σ(u,a_b)) deben diferir
    en alguna entrada por más de 1e-12. Testigo: (x benigno, x atacado).
    """
    al = s.alphabets
    rows = s.channel.matrix
    for u in al.u.labels:
        x_b = benign_state(s, u)
        row_b = rows[al.x.index(x_b)]
        for a in al.a.labels:
            if a == s.benign_action:
                continue
            x_a = system_state(s, u, a)
            row_a = rows[al.x.index(x_a)]
            gap = max(abs(p - q) for p, q in zip(row_a, row_b))
            if gap <= ROW_DISTINCT_TOL:
                return AssumptionCheck(holds=False, witness=(x_b, x_a),
                                       detail=f"u={u!r}, a={a!r}: filas indistinguibles (máx. dif. {gap:.3g})")
    return AssumptionCheck(holds=True)


def check_benign_preference(s: Scenario) -> AssumptionCheck:
    """a_b debe ser estrictamente preferida por el emisor benigno frente a cualquier otra acción y reacción."""
    al = s.alphabets
    t = s.tables
    b = TypeTag.BENIGN.index
    for ui, u in enumerate(al.u.labels):
        x_b = t.state[ui][t.benign]
        for ai, a in enumerate(al.a.labels):
            if ai == t.benign:
                continue
            x_a = t.state[ui][ai]
            for ri, r in enumerate(al.r.labels):
                for rj, r2 in enumerate(al.r.labels):
                    if not t.sender[(b, x_b, t.benign, ri)] > t.sender[(b, x_a, ai, rj)]:
                        return AssumptionCheck(holds=False, witness=(u, a, r, r2),
                                               detail="la acción benigna no es estrictamente mejor para θ_b")
    return AssumptionCheck(holds=True)


def validate_scenario(s: Scenario) -> ValidationReport:
    """Comprueba los supuestos estructurales; función pura (mismo escenario, mismo informe)."""
    violations = []
    for name, check in (("input_observability", check_input_observability),
                        ("channel_informativeness", check_channel_informativeness),
                        ("benign_preference", check_benign_preference)):
        result = check(s)
        if not result.holds:
            violations.append(AssumptionViolation(assumption=name, witness=result.witness, detail=result.detail))
    if violations:
        logger.info("MODEL: escenario '%s' viola %d supuestos", s.name, len(violations))
    return ValidationReport(ok=not violations, violations=tuple(violations))


def channel_mutual_information(s: Scenario, a: Symbol) -> float:
    """
    I(X;Y) en nats cuando el emisor juega siempre la acción `a` y U sigue la pmf de entradas.
    Diagnóstico informativo; la comprobación que se exige es la de filas distinguibles.
    """
    t = s.tables
    ai = s.alphabets.a.index(a, "a")
    p_x = [0.0] * s.alphabets.x.size
    for ui, pu in enumerate(s.inputs.pmf):
        p_x[t.state[ui][ai]] += pu
    p_y = [math.fsum(p_x[xi] * t.channel[xi][yi] for xi in range(len(p_x)))
           for yi in range(s.alphabets.y.size)]
    info = 0.0
    for xi, px in enumerate(p_x):
        for yi, lam in enumerate(t.channel[xi]):
            if px > 0 and lam > 0:
                info += px * lam * math.log(lam / p_y[yi])
    return max(info, 0.0)
