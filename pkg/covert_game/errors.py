# errors.py
# Jerarquía única de excepciones del simulador.
# Las violaciones de supuestos NO son excepciones: viajan como datos en ValidationReport.

from typing import List, Tuple


class GameError(Exception):
    """Raíz de todos los errores del paquete."""


class ScenarioDomainError(GameError, ValueError):
    """Símbolo desconocido para el alfabeto indicado (error de dominio de entrada)."""

    def __init__(self, alphabet: str, symbol):
        self.alphabet = alphabet
        self.symbol = symbol
        super().__init__(f"símbolo {symbol!r} no pertenece al alfabeto '{alphabet}'")


class SchemaIssues(ValueError):
    """
    Lista de problemas de esquema detectados en un validador de pydantic.
    Se lanza dentro de los validadores para que cada problema conserve su ruta de campo.
    """

    def __init__(self, issues: List[Tuple[str, str]]):
        self.issues = list(issues)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.issues))


class ScenarioSchemaError(GameError):
    """El documento de escenario no cumple el esquema. `errors` es una lista (ruta, mensaje)."""

    def __init__(self, errors: List[Tuple[str, str]]):
        self.errors = list(errors)
        detail = "; ".join(f"{path}: {msg}" for path, msg in self.errors)
        super().__init__(f"documento de escenario inválido ({len(self.errors)} errores): {detail}")


class ScenarioInvalidError(GameError):
    """El escenario está bien formado pero viola algún supuesto estructural."""

    def __init__(self, report):
        self.report = report
        names = ", ".join(v.assumption for v in report.violations)
        super().__init__(f"el escenario viola supuestos: {names}")


class ImpossibleObservationError(GameError):
    """Observación con verosimilitud total nula: escenario y estrategia son inconsistentes."""


class DegenerateLikelihoodError(GameError):
    """Denominador nulo en el factor G."""


class OracleHorizonError(GameError):
    """El oráculo por enumeración se niega a trabajar por encima de su cota de horizonte."""

    def __init__(self, steps: int, bound: int):
        self.steps = steps
        self.bound = bound
        super().__init__(f"el oráculo admite como máximo {bound} pasos (pedido: {steps})")
