# cli.py
# Interfaz de línea de comandos: ingesta de escenarios (JSON/JSON5), despacho de comandos
# (run, montecarlo, verify, oracle) y emisión de CSV / informes.
# stdout (o --out) lleva solo datos deterministas; los mensajes de estado van a stderr.

import argparse
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Iterator, List, Literal, Optional, Sequence, Tuple

import json5
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from covert_game.belief import (Belief, LikelihoodPair, g_factor, g_function,
                                geometric_bound, h_function, likelihoods)
from covert_game.engine import (ASSUMPTION5_THRESHOLD, AUDIT_TOL,
                                ORACLE_AUDIT_HORIZON, ORACLE_AUDIT_TOL,
                                MonteCarloSummary, Trajectory,
                                assumption5_monitor, constant_after_convergence,
                                make_rng, monotonicity_audit, oracle_audit,
                                run_monte_carlo, run_path, trial_seed)
from covert_game.errors import (GameError, OracleHorizonError,
                                ScenarioDomainError, ScenarioInvalidError,
                                ScenarioSchemaError, SchemaIssues)
from covert_game.model import (Scenario, channel_mutual_information,
                               validate_scenario)
from covert_game.presets import DEFAULT_PRESET, preset_document
from covert_game.strategy import single_crossing

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

G_SWEEP_DRAWS = 10_000
G_SWEEP_TOL = 1e-12

TRAJECTORY_HEADER = "k,u,action,x,y,pi_true_m,pi_hat_m,reaction,fixed_point"
SUMMARY_HEADER = "k,pi_hat_m,emp_mean_pi_true_m,emp_var"
ORACLE_HEADER = "k,pi_hat_recursive,pi_hat_oracle,abs_diff"
REPORT_HEADER = "check,status,detail"


# === Configuración de ejecución ===

class RunConfig(BaseModel):
    """Opciones de una invocación. Las sobrescrituras se revalidan contra el esquema de Scenario."""
    model_config = ConfigDict(frozen=True)

    command: Literal["run", "montecarlo", "verify", "oracle"]
    scenario: Optional[str] = Field(None, description="Ruta a un documento de escenario.")
    preset: Optional[str] = Field(None, description="Nombre de un preset incluido.")
    horizon: Optional[int] = Field(None, gt=0)
    trials: int = Field(20, ge=1, description="Ensayos Monte Carlo.")
    seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)
    tol: Optional[float] = Field(None, ge=0.0, description="Tolerancia de fusión del soporte.")
    out: Optional[str] = Field(None, description="Fichero de salida (por defecto stdout).")
    seeds: int = Field(10, ge=1, description="Ancho del barrido de semillas de verify.")
    workers: int = Field(1, ge=1)
    progress: bool = False
    verbose: bool = False

    @model_validator(mode="after")
    def _one_source(self) -> "RunConfig":
        if (self.scenario is None) == (self.preset is None):
            raise ValueError("indica exactamente uno de --scenario o --preset")
        return self


class CheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    check: str
    status: Literal["pass", "fail", "skip", "info"]
    detail: str = ""


# === Ingesta de escenarios ===

_LOC_RENAMES = {"inputs": "input_pmf", "initial_belief_malicious": "pi0_malicious"}
_LOC_INNER = {"matrix", "pmf", "labels", "table"}


def _format_loc(loc: Sequence[Any]) -> str:
    """Traduce la ruta de pydantic a la ruta del documento (utilities.sender.3 -> utility_sender[3])."""
    parts = list(loc)
    if len(parts) >= 2 and parts[0] == "utilities" and parts[1] in ("sender", "receiver"):
        parts = [f"utility_{parts[1]}"] + parts[2:]
    path = ""
    for part in parts:
        if isinstance(part, int):
            path += f"[{part}]"
        elif part in _LOC_INNER:
            continue
        else:
            part = _LOC_RENAMES.get(part, part)
            path = f"{path}.{part}" if path else str(part)
    return path or "$"


def schema_errors(exc: ValidationError) -> List[Tuple[str, str]]:
    """Lista (ruta, mensaje) a partir de un ValidationError; expande los SchemaIssues agrupados."""
    errors: List[Tuple[str, str]] = []
    for err in exc.errors():
        inner = (err.get("ctx") or {}).get("error")
        if isinstance(inner, SchemaIssues):
            errors.extend(inner.issues)
        else:
            errors.append((_format_loc(err["loc"]), err["msg"]))
    return errors


def parse_scenario(document: str) -> Scenario:
    """Documento JSON / JSON5 -> Scenario. Cualquier problema sale como ScenarioSchemaError con rutas."""
    try:
        data = json5.loads(document)
    except ValueError as e:
        raise ScenarioSchemaError([("$", f"documento no parseable: {e}")]) from e
    if not isinstance(data, dict):
        raise ScenarioSchemaError([("$", "el documento debe ser un objeto")])
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioSchemaError(schema_errors(e)) from e


def load_scenario(config: RunConfig) -> Scenario:
    if config.preset is not None:
        document = preset_document(config.preset)
    else:
        try:
            document = Path(config.scenario).read_text(encoding="utf-8")
        except OSError as e:
            raise ScenarioSchemaError([("$", f"no se pudo leer '{config.scenario}': {e.strerror}")]) from e
    scenario = parse_scenario(document)
    try:
        return scenario.with_overrides(horizon=config.horizon, seed=config.seed, merge_tolerance=config.tol)
    except ValidationError as e:
        raise ScenarioSchemaError(schema_errors(e)) from e


# === Emisión ===

def _num(value: float) -> str:
    return format(float(value), ".12g")


def _write(sink: IO[str], lines: List[str]) -> int:
    text = "".join(line + "\n" for line in lines)
    sink.write(text)
    return len(text.encode("utf-8"))


def emit_trajectory_csv(t: Trajectory, sink: IO[str]) -> int:
    """Escribe la trayectoria como CSV y devuelve el número de bytes escritos."""
    lines = [TRAJECTORY_HEADER]
    for r in t.records:
        lines.append(",".join([str(r.k), str(r.u), str(r.action), str(r.x), str(r.y),
                               _num(r.pi_true), _num(r.pi_hat), str(r.reaction), "1" if r.fixed_point else "0"]))
    return _write(sink, lines)


def emit_summary_csv(summary: MonteCarloSummary, sink: IO[str]) -> int:
    lines = [SUMMARY_HEADER]
    for k in range(summary.horizon):
        lines.append(f"{k},{_num(summary.pi_hat[k])},{_num(summary.emp_mean[k])},{_num(summary.emp_var[k])}")
    return _write(sink, lines)


def emit_report(checks: Sequence[CheckResult], sink: IO[str]) -> int:
    lines = [REPORT_HEADER]
    for c in checks:
        detail = c.detail.replace(",", ";").replace("\n", " ")
        lines.append(f"{c.check},{c.status},{detail}")
    return _write(sink, lines)


@contextmanager
def _open_sink(out: Optional[str]) -> Iterator[IO[str]]:
    if out is None:
        yield sys.stdout
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        yield fh


# === Comprobaciones de verify ===

def _g_factor_sweep(s: Scenario) -> CheckResult:
    """G >= 1 y la cadena h <= Σ m^(1−α) b^α <= 1 en los pares del escenario y en pares aleatorios."""
    rng = make_rng(s.seed)
    pairs: List[LikelihoodPair] = [likelihoods(s, u, a) for u in s.alphabets.u.labels
                                   for a in s.alphabets.a.labels]
    ny = s.alphabets.y.size
    for _ in range(G_SWEEP_DRAWS // 10):
        pairs.append(LikelihoodPair(m=rng.dirichlet(np.ones(ny)), b=rng.dirichlet(np.ones(ny))))
    worst_g = math.inf
    worst_chain = -math.inf
    for pair in pairs:
        for pi in rng.uniform(0.0, 1.0, size=10):
            pi = float(min(max(pi, 1e-9), 1.0 - 1e-9))
            worst_g = min(worst_g, g_factor(pair, Belief(pi)))
            h = h_function(pi, pair.m, pair.b)
            bound = geometric_bound(pi, pair.m, pair.b)
            worst_chain = max(worst_chain, h - bound, bound - 1.0)
            if abs(g_function(pi, pair.m, pair.b) - g_factor(pair, Belief(pi))) > 1e-9:
                return CheckResult(check="g_factor_sweep", status="fail",
                                   detail=f"g(π_m) distinto de G en π={pi:.6g}")
    ok = worst_g >= 1.0 - G_SWEEP_TOL and worst_chain <= G_SWEEP_TOL
    return CheckResult(check="g_factor_sweep", status="pass" if ok else "fail",
                       detail=f"tol={G_SWEEP_TOL:g} min G={worst_g:.15g} max exceso cota={worst_chain:.3g} "
                              f"({len(pairs) * 10} evaluaciones)")


def run_checks(s: Scenario, seeds: int) -> List[CheckResult]:
    """Batería de verify. Si fallan los supuestos, el resto se marca como skip."""
    checks: List[CheckResult] = []
    report = validate_scenario(s)
    if not report.ok:
        names = " ".join(f"{v.assumption}{list(v.witness)}" for v in report.violations)
        checks.append(CheckResult(check="assumptions", status="fail", detail=names))
        for name in ("monotonicity", "convergence", "g_factor_sweep", "oracle_equivalence", "single_crossing"):
            checks.append(CheckResult(check=name, status="skip", detail="supuestos violados"))
        return checks
    checks.append(CheckResult(check="assumptions", status="pass",
                              detail="input_observability channel_informativeness benign_preference"))

    paths = [run_path(s, seed=trial_seed(s.seed, i)) for i in range(seeds)]

    bad = [(i, a.violations[0]) for i, a in enumerate(monotonicity_audit(t) for t in paths) if not a.ok]
    if bad:
        i, v = bad[0]
        checks.append(CheckResult(check="monotonicity", status="fail",
                                  detail=f"tol={AUDIT_TOL:g} {len(bad)}/{seeds} semillas; primera: ensayo {i} paso {v.step} ({v.kind})"))
    else:
        checks.append(CheckResult(check="monotonicity", status="pass", detail=f"tol={AUDIT_TOL:g} {seeds} semillas"))

    steps = [t.convergence_step for t in paths]
    converged = sum(1 for t in paths if constant_after_convergence(t))
    checks.append(CheckResult(check="convergence", status="info",
                              detail=f"horizonte={s.horizon} convergidas {converged}/{seeds} pasos={sorted(set(steps), key=str)}"))

    columns = np.array([t.pi_hat_column for t in paths])
    same = bool(np.all(columns == columns[0]))
    checks.append(CheckResult(check="pi_hat_seed_independence", status="info",
                              detail="π̂ idéntica en todas las semillas" if same else "π̂ depende de la semilla"))

    checks.append(_g_factor_sweep(s))

    short = run_path(s, seed=s.seed, horizon=min(ORACLE_AUDIT_HORIZON, s.horizon))
    diffs = [c.abs_diff for c in oracle_audit(short, s)]
    worst = max(diffs, default=0.0)
    checks.append(CheckResult(check="oracle_equivalence", status="pass" if worst <= ORACLE_AUDIT_TOL else "fail",
                              detail=f"tol={ORACLE_AUDIT_TOL:g} k<={len(diffs)} máx dif={worst:.3g}"))

    if s.alphabets.a.size == 2:
        crossing = {u: single_crossing(s, u) for u in s.alphabets.u.labels}
        ok = all(crossing.values())
        checks.append(CheckResult(check="single_crossing", status="pass" if ok else "fail",
                                  detail=" ".join(f"u={u}:{'ok' if v else 'no'}" for u, v in crossing.items())))
    else:
        checks.append(CheckResult(check="single_crossing", status="skip", detail="requiere |𝒜| = 2"))

    monitors = [assumption5_monitor(t) for t in paths]
    held = sum(1 for m in monitors if m.holds)
    checks.append(CheckResult(check="assumption5_monitor", status="info",
                              detail=f"umbral={ASSUMPTION5_THRESHOLD!r} se cumple en {held}/{seeds} semillas (aproximación de horizonte finito)"))

    info = " ".join(f"a={a}:{channel_mutual_information(s, a):.6g}" for a in s.alphabets.a.labels)
    checks.append(CheckResult(check="mutual_information", status="info", detail=f"nats {info}"))
    return checks


# === Comandos ===

def cmd_run(config: RunConfig, s: Scenario, sink: IO[str]) -> int:
    t = run_path(s)
    emit_trajectory_csv(t, sink)
    print(f"✅ CLI: ruta de {len(t.records)} pasos, convergencia en k={t.convergence_step}", file=sys.stderr)
    return EXIT_OK


def cmd_montecarlo(config: RunConfig, s: Scenario, sink: IO[str]) -> int:
    summary = run_monte_carlo(s, config.trials, base_seed=s.seed, workers=config.workers, progress=config.progress)
    emit_summary_csv(summary, sink)
    print(f"✅ CLI: {summary.n_trials} ensayos, histograma de convergencia "
          f"{sorted(summary.convergence_histogram.items(), key=lambda kv: str(kv[0]))}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(config: RunConfig, s: Scenario, sink: IO[str]) -> int:
    horizon = config.horizon if config.horizon is not None else min(s.horizon, ORACLE_AUDIT_HORIZON)
    if horizon > ORACLE_AUDIT_HORIZON:
        raise OracleHorizonError(horizon, ORACLE_AUDIT_HORIZON)
    t = run_path(s, horizon=horizon)
    rows = oracle_audit(t, s, max_horizon=horizon)
    _write(sink, [ORACLE_HEADER] + [f"{c.k},{_num(c.recursive)},{_num(c.oracle)},{c.abs_diff:.3g}" for c in rows])
    worst = max((c.abs_diff for c in rows), default=0.0)
    if worst > ORACLE_AUDIT_TOL:
        print(f"❌ CLI: recursión y oráculo difieren en {worst:.3g}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"✅ CLI: recursión = oráculo en {len(rows)} pasos (máx dif {worst:.3g})", file=sys.stderr)
    return EXIT_OK


def cmd_verify(config: RunConfig, s: Scenario, sink: IO[str]) -> int:
    checks = run_checks(s, config.seeds)
    emit_report(checks, sink)
    failed = [c.check for c in checks if c.status == "fail"]
    if failed:
        print(f"❌ CLI: verificación fallida: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"✅ CLI: {len(checks)} comprobaciones sin fallos", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "montecarlo": cmd_montecarlo, "verify": cmd_verify, "oracle": cmd_oracle}


# === Parser ===

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--scenario", help="documento de escenario JSON/JSON5")
    source.add_argument("--preset", help=f"preset incluido (p.ej. {DEFAULT_PRESET})")
    common.add_argument("--horizon", type=int, help="pasos por trayectoria")
    common.add_argument("--trials", type=int, default=20, help="ensayos Monte Carlo (por defecto 20)")
    common.add_argument("--seed", type=int, help="semilla de 64 bits")
    common.add_argument("--tol", type=float, help="tolerancia de fusión del soporte")
    common.add_argument("--out", help="fichero de salida (por defecto stdout)")
    common.add_argument("--seeds", type=int, default=10, help="ancho del barrido de semillas de verify")
    common.add_argument("--workers", type=int, default=1, help="procesos para Monte Carlo")
    common.add_argument("--progress", action="store_true", help="barra de progreso en stderr")
    common.add_argument("-v", "--verbose", action="store_true", help="logging DEBUG")

    parser = argparse.ArgumentParser(prog="covert_game",
                                     description="Simulador del juego de señales con reacción encubierta.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="una trayectoria como CSV")
    sub.add_parser("montecarlo", parents=[common], help="resumen Monte Carlo como CSV")
    sub.add_parser("verify", parents=[common], help="batería de comprobaciones")
    sub.add_parser("oracle", parents=[common], help="recursión frente a enumeración exacta")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = RunConfig(**vars(args))
    except ValidationError as e:
        for err in e.errors():
            print(f"❌ CLI: {_format_loc(err['loc'])}: {err['msg']}", file=sys.stderr)
        return EXIT_USAGE

    try:
        scenario = load_scenario(config)
        logger.info("CLI: escenario '%s' cargado (%s)", scenario.name, scenario.fingerprint[:12])
        with _open_sink(config.out) as sink:
            return COMMANDS[config.command](config, scenario, sink)
    except ScenarioSchemaError as e:
        for path, msg in e.errors:
            print(f"❌ CLI: {path}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioInvalidError as e:
        for v in e.report.violations:
            print(f"❌ CLI: supuesto '{v.assumption}' violado, testigo {list(v.witness)}: {v.detail}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (ScenarioDomainError, OracleHorizonError) as e:
        print(f"❌ CLI: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GameError as e:
        print(f"❌ CLI: error del simulador: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except OSError as e:
        print(f"❌ CLI: no se pudo escribir la salida: {e}", file=sys.stderr)
        return EXIT_USAGE
