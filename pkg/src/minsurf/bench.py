"""Benchmark scenarios: degrade once, restore with each method, tabulate.

Scenario files are line oriented::

    # comment
    [scenario denoise-128]
    image = synthetic:shapes:128     # or a P5 PGM / GridFile path
    sigma = 10
    lambda = 0.14
    methods = pdm, tmm, fpm

Relative image paths resolve against the scenario file's directory.
"""

import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from . import synthetic
from .degrade import DegradeSpec, degrade, normalize
from .imageio import read_image
from .metrics import snr, ssim
from .model import ModelParams, StopRule
from .solvers import METHODS, SolverConfig, solve
from .spectral import BlurSpec, spectrum_for

log = logging.getLogger(__name__)

SCENARIO_KEYS = (
    "name", "image", "sigma", "blur_hsize", "blur_sigma", "seed", "lambda", "alpha",
    "methods", "tau", "sigma_step", "dt", "max_iter", "rel_tol", "cg_tol", "cg_max_iter",
    "dual_step",
)
OVERRIDE_KEYS = ("tau", "sigma_step", "dt", "cg_tol", "cg_max_iter", "dual_step")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    image_path: str
    degrade: DegradeSpec
    params: ModelParams
    methods: tuple
    stop: StopRule = StopRule()
    solver_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.methods:
            raise ScenarioError(f"scenario {self.name!r}: methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ScenarioError(f"scenario {self.name!r}: unknown methods {bad}")

    def config(self):
        return SolverConfig(self.params, self.stop, **self.solver_overrides)


@dataclass
class MethodResult:
    method: str
    snr: float | None
    ssim: float | None
    wall_time_seconds: float | None
    iterations: int | None
    converged: bool
    error: str | None = None


@dataclass
class BenchResult:
    scenario: str
    image: str
    noise_sigma: float | None
    blur: str
    lam: float
    alpha: float
    degraded_snr: float | None
    degraded_ssim: float | None
    input_sha256: str
    rows: list

    @property
    def ok(self):
        return all(r.error is None for r in self.rows)


def load_image(path):
    """Load ``synthetic:<kind>:<n>`` or a PGM/GridFile path."""
    if path.startswith("synthetic:"):
        try:
            _, kind, n = path.split(":")
            return synthetic.make(kind, int(n))
        except ValueError as exc:
            raise ValueError(f"bad synthetic image spec {path!r}: {exc}") from None
    return read_image(path)


def _number(key, raw, lineno, kind=float):
    try:
        value = kind(raw)
    except ValueError:
        raise ScenarioError(f"line {lineno}: {key} = {raw!r} is not a valid {kind.__name__}") from None
    if kind is float and not math.isfinite(value):
        raise ScenarioError(f"line {lineno}: {key} must be finite")
    return value


def _build(fields, base_dir):
    name, header_line = fields.pop("__name__"), fields.pop("__line__")

    def get(key, default=None, kind=float):
        if key not in fields:
            return default
        raw, lineno = fields[key]
        return _number(key, raw, lineno, kind)

    if "image" not in fields:
        raise ScenarioError(f"line {header_line}: scenario {name!r} has no image key")
    image, _ = fields["image"]
    if not image.startswith("synthetic:") and not os.path.isabs(image):
        image = os.path.join(base_dir, image)
    if "lambda" not in fields:
        raise ScenarioError(f"line {header_line}: scenario {name!r} has no lambda key")
    methods_raw, methods_line = fields.get("methods", ("pdm, tmm, fpm", header_line))
    methods = tuple(m.strip().lower() for m in methods_raw.split(",") if m.strip())
    if not methods:
        raise ScenarioError(f"line {methods_line}: key 'methods' is empty")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ScenarioError(f"line {methods_line}: key 'methods' has unknown entries {bad}")

    hsize = get("blur_hsize", None, int)
    blur_sigma = get("blur_sigma")
    try:
        if hsize is None:
            if blur_sigma is not None:
                raise ValueError("blur_sigma given without blur_hsize")
            blur = BlurSpec()
        else:
            blur = BlurSpec(hsize, blur_sigma)
        spec = DegradeSpec(get("sigma", 0.0), blur, get("seed", 0, int))
        params = ModelParams(get("lambda"), get("alpha", 0.01))
        stop = StopRule(get("rel_tol", 1e-5), get("max_iter", 500, int))
        overrides = {}
        for key in OVERRIDE_KEYS:
            if key in fields:
                if key == "dual_step":
                    overrides[key] = fields[key][0]
                else:
                    overrides[key] = get(key, kind=int if key == "cg_max_iter" else float)
        scenario = Scenario(name, image, spec, params, methods, stop, overrides)
        scenario.config()
    except ValueError as exc:
        raise ScenarioError(f"scenario {name!r} (line {header_line}): {exc}") from None
    return scenario


def parse_scenarios(text, base_dir="."):
    scenarios = []
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ScenarioError(f"line {lineno}: unterminated section header")
            head = stripped[1:-1].split(None, 1)
            if not head or head[0] != "scenario":
                raise ScenarioError(f"line {lineno}: expected [scenario] or [scenario <name>]")
            if current is not None:
                scenarios.append(current)
            name = head[1].strip() if len(head) > 1 else f"scenario-{len(scenarios) + 1}"
            current = {"__name__": name, "__line__": lineno}
            continue
        if "=" not in stripped:
            raise ScenarioError(f"line {lineno}: expected key = value, got {stripped!r}")
        if current is None:
            raise ScenarioError(f"line {lineno}: key outside a [scenario] section")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key not in SCENARIO_KEYS:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        if key in current:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        if key == "name":
            current["__name__"] = value
            continue
        current[key] = (value, lineno)
    if current is not None:
        scenarios.append(current)
    if not scenarios:
        raise ScenarioError("no [scenario] sections found")
    built = [_build(fields, base_dir) for fields in scenarios]
    names = [s.name for s in built]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ScenarioError(f"duplicate scenario names: {sorted(dupes)}")
    return built


def load_scenarios(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenarios(fh.read(), os.path.dirname(os.path.abspath(path)))


def run_method(method, scenario, spectrum, clean, f):
    try:
        report = solve(method, scenario.config(), spectrum, f)
    except Exception as exc:  # per-method failures are reported, not raised
        log.warning("scenario %s, method %s failed: %s", scenario.name, method, exc)
        return MethodResult(method, None, None, None, None, False, f"{type(exc).__name__}: {exc}")
    return MethodResult(
        method,
        snr(clean, report.final_u),
        ssim(clean, report.final_u),
        report.wall_time_seconds,
        report.iterations,
        report.converged,
    )


def run_scenario(scenario, parallel_methods=False):
    """Degrade the scenario image once and restore it with every requested method."""
    blur = str(scenario.degrade.blur)
    try:
        clean = normalize(load_image(scenario.image_path))
    except (OSError, ValueError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        rows = [MethodResult(m, None, None, None, None, False, error) for m in scenario.methods]
        return BenchResult(scenario.name, scenario.image_path, scenario.degrade.noise_sigma, blur,
                           scenario.params.lam, scenario.params.alpha, None, None, "", rows)
    f = degrade(scenario.degrade, clean)
    f.flags.writeable = False
    digest = hashlib.sha256(f.tobytes()).hexdigest()
    height, width = f.shape
    spectrum = spectrum_for(scenario.degrade.blur, width, height)
    if parallel_methods:
        with ThreadPoolExecutor(len(scenario.methods)) as pool:
            rows = list(pool.map(lambda m: run_method(m, scenario, spectrum, clean, f), scenario.methods))
    else:
        rows = [run_method(m, scenario, spectrum, clean, f) for m in scenario.methods]
    return BenchResult(
        scenario.name, scenario.image_path, scenario.degrade.noise_sigma, blur,
        scenario.params.lam, scenario.params.alpha, snr(clean, f), ssim(clean, f), digest, rows,
    )


def run_scenarios(scenarios, jobs=1, parallel_methods=False):
    if jobs <= 1:
        return [run_scenario(s, parallel_methods) for s in scenarios]
    with ThreadPoolExecutor(jobs) as pool:
        return list(pool.map(lambda s: run_scenario(s, parallel_methods), scenarios))


# -- table emission ---------------------------------------------------------

CSV_FIELDS = ("scenario", "image", "noise_sigma", "blur", "lambda", "alpha",
              "degraded_snr", "degraded_ssim", "input_sha256",
              "method", "snr", "ssim", "time_s", "iterations", "converged", "error")


def _fmt(value, spec):
    if value is None:
        return "-"
    return format(value, spec)


def _text(results):
    blocks = []
    for res in results:
        title = (f"{res.scenario}: sigma={_fmt(res.noise_sigma, 'g')}, blur={res.blur}, "
                 f"lambda={res.lam:g}, alpha={res.alpha:g}; degraded SNR="
                 f"{_fmt(res.degraded_snr, '.4f')} SSIM={_fmt(res.degraded_ssim, '.4f')}")
        header = f"{'Method':<6} | {'SNR':>8} | {'SSIM':>6} | {'Time(s)':>8} | {'Ite':>4}"
        lines = [title, header, "-" * len(header)]
        for row in res.rows:
            ite = "-" if row.iterations is None else f"{row.iterations}{'' if row.converged else '*'}"
            line = (f"{row.method.upper():<6} | {_fmt(row.snr, '8.4f')} | {_fmt(row.ssim, '6.4f')} | "
                    f"{_fmt(row.wall_time_seconds, '8.4f')} | {ite:>4}")
            if row.error:
                line += f"   error: {row.error}"
            lines.append(line)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n(* = stopped at the iteration cap)\n"


def _csv(results):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for res in results:
        for row in res.rows:
            writer.writerow([
                res.scenario, res.image, repr(res.noise_sigma), res.blur, repr(res.lam), repr(res.alpha),
                repr(res.degraded_snr), repr(res.degraded_ssim), res.input_sha256,
                row.method, repr(row.snr), repr(row.ssim), repr(row.wall_time_seconds),
                row.iterations, row.converged, row.error or "",
            ])
    return buf.getvalue()


def result_to_dict(res):
    return asdict(res)


def result_from_dict(doc):
    doc = dict(doc)
    doc["rows"] = [MethodResult(**row) for row in doc["rows"]]
    return BenchResult(**doc)


def emit_table(results, fmt="text"):
    results = list(results)
    if not results:
        raise ValueError("no results to tabulate")
    if fmt == "text":
        return _text(results)
    if fmt == "csv":
        return _csv(results)
    if fmt == "json":
        return json.dumps([result_to_dict(r) for r in results], indent=2) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def report_to_result(doc):
    """Wrap a single-run report document as a one-row :class:`BenchResult`."""
    config = doc["config"]
    metrics = doc.get("metrics") or {}
    row = MethodResult(doc["method"], metrics.get("snr"), metrics.get("ssim"),
                       doc["wall_time_seconds"], doc["iterations"], doc["converged"])
    return BenchResult(doc.get("input", ""), doc.get("input", ""), doc.get("noise_sigma"), doc.get("blur", "I"),
                       config["lambda"], config["alpha"], None, None, doc.get("input_sha256", ""), [row])


def parse_results(text):
    """Read the json table (a list of results) or a single report document."""
    doc = json.loads(text)
    if isinstance(doc, dict) and "method" in doc:
        return [report_to_result(doc)]
    if isinstance(doc, dict):
        doc = [doc]
    return [result_from_dict(d) for d in doc]


def strip_timing(results):
    """Copies of ``results`` with timing fields cleared, for determinism checks."""
    out = []
    for res in results:
        doc = result_to_dict(res)
        for row in doc["rows"]:
            row["wall_time_seconds"] = None
        out.append(result_from_dict(doc))
    return out

