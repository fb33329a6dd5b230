"""Configuration-driven parameter sweeps and figure data.

A recipe is a mapping with a ``name`` and a list of ``panels``. Each panel
has a ``kind``:

``scan``
    Evaluate ``outputs`` over the grid spanned by one or two ``axes``.
``pnd``
    Joint photon-number table at a single parameter point.
``quasi``
    s-ordered quasi-distribution on an intensity grid.
``balanced``
    Balanced pump amplitudes over an epsilon axis.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import yaml

from . import __version__
from .distributions import (
    existence_threshold,
    multimode_nrf_numeric,
    pnd_general,
    quasi_distribution,
)
from .errors import DomainError, RamanError
from .measures import (
    BellConfig,
    bell_optimize,
    bell_parameter,
    g2,
    log_negativity,
    nonclassicality_depth,
    nrf,
    purity,
    squeezing_variance,
    steering,
)
from .model import (
    RamanParams,
    TwoModeMoments,
    balanced_pump_amplitudes,
    cross_position_correlator,
    moments_general,
)
from .spdc import spdc_matched_to

FLOAT_FORMAT = "%.12g"
SWEEPABLE = {"pump_amp", "epsilon", "n_v", "n_t", "gamma_n", "phi_l", "zfrac", "delta", "z_s", "z_a"}
PARAM_FIELDS = {"epsilon", "pump_amp", "gamma_n", "n_v", "n_t", "phi_l"}
FIGURES = tuple(f"fig{i}" for i in range(2, 9))


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    num: int

    def __post_init__(self):
        if self.name not in SWEEPABLE:
            raise DomainError(f"cannot sweep {self.name!r}; choose from {sorted(SWEEPABLE)}")
        if self.num < 1:
            raise DomainError("axis needs at least one point")
        if self.num > 1 and not self.stop > self.start:
            raise DomainError(f"axis {self.name} has an empty range")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


def _axis(data: dict) -> Axis:
    """Build an axis from ``num`` or from a positive ``step``."""
    data = dict(data)
    if "step" in data:
        step = float(data.pop("step"))
        if not step > 0:
            raise DomainError("axis step must be positive")
        span = float(data["stop"]) - float(data["start"])
        data["num"] = int(math.floor(span / step + 1e-9)) + 1
        data["stop"] = float(data["start"]) + (data["num"] - 1) * step
    return Axis(name=data["name"], start=float(data["start"]), stop=float(data["stop"]), num=int(data["num"]))


@dataclass(frozen=True)
class ScanSpec:
    """One panel of a recipe.

    ``options`` understood by the evaluator:

    * ``pump_scale``: ``a1`` multiplies pump values by pi / sqrt(epsilon - 1).
    * ``gamma_ratio``: sets gamma_n = ratio * pump_amp at every point.
    * ``zfrac``: evaluation position (default 1).
    * ``bell_j``, ``bell_q``: fixed Bell displacements.
    * ``delta``, ``n_quad``: multimode window and quadrature order.
    """

    id: str
    kind: str = "scan"
    axes: tuple[Axis, ...] = ()
    params: dict = field(default_factory=dict)
    outputs: tuple[str, ...] = ()
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ScanSpec":
        data = dict(data)
        unknown = set(data) - {"id", "kind", "axes", "params", "outputs", "options"}
        if unknown:
            raise DomainError(f"unknown panel keys {sorted(unknown)}")
        axes = tuple(_axis(a) for a in data.get("axes", []))
        params = dict(data.get("params", {}))
        bad = set(params) - PARAM_FIELDS
        if bad:
            raise DomainError(f"unknown parameters {sorted(bad)}")
        spec = cls(
            id=str(data.get("id", "scan")),
            kind=data.get("kind", "scan"),
            axes=axes,
            params=params,
            outputs=tuple(data.get("outputs", [])),
            options=dict(data.get("options", {})),
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.kind not in {"scan", "pnd", "quasi", "balanced"}:
            raise DomainError(f"unknown panel kind {self.kind!r}")
        if self.kind == "scan":
            if not 1 <= len(self.axes) <= 2:
                raise DomainError("a scan needs one or two axes")
            unknown = [o for o in self.outputs if o not in QUANTITIES]
            if unknown:
                raise DomainError(f"unknown outputs {unknown}")
            if not self.outputs:
                raise DomainError("a scan needs at least one output")


@dataclass
class ScanResult:
    panel: str
    columns: list[str]
    rows: list[list]
    metadata: dict
    warnings: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return FLOAT_FORMAT % value
    return str(value)


# ---------------------------------------------------------------- quantities


class _Point:
    """Lazily evaluated state at one grid point."""

    def __init__(self, params: RamanParams, coords: dict, options: dict):
        self.params = params
        self.coords = coords
        self.options = options
        self._moments: Optional[TwoModeMoments] = None

    @property
    def zfrac(self) -> float:
        return float(self.coords.get("zfrac", self.options.get("zfrac", 1.0)))

    @property
    def moments(self) -> TwoModeMoments:
        if self._moments is None:
            self._moments = moments_general(self.params, self.zfrac)
        return self._moments

    @property
    def spdc(self) -> TwoModeMoments:
        return spdc_matched_to(self.moments)

    def bell_config(self) -> BellConfig:
        return BellConfig(j=float(self.options.get("bell_j", 3.5e-3)), q=float(self.options.get("bell_q", 3.09)))

    def pnd(self):
        return pnd_general(self.moments, n_max=int(self.options.get("n_max", 4)))


def _require_bv(point: _Point) -> float:
    if point.moments.b_v is None:
        raise DomainError("b_v is available only without damping")
    return point.moments.b_v


def _cross(point: _Point) -> float:
    if "z_s" not in point.coords or "z_a" not in point.coords:
        raise DomainError("cross_intensity needs z_s and z_a axes")
    return abs(cross_position_correlator(point.params, point.coords["z_s"], point.coords["z_a"])) ** 2


def _multimode(point: _Point) -> float:
    delta = float(point.coords.get("delta", point.options.get("delta", 0.5)))
    return multimode_nrf_numeric(point.params, delta, int(point.options.get("n_quad", 64)))


QUANTITIES: dict[str, tuple[str, Callable[[_Point], Any]]] = {
    "b_s": ("moments.b_s", lambda p: p.moments.b_s),
    "b_a": ("moments.b_a", lambda p: p.moments.b_a),
    "d_re": ("moments.d_sa_re", lambda p: p.moments.d_sa.real),
    "d_im": ("moments.d_sa_im", lambda p: p.moments.d_sa.imag),
    "d_abs": ("moments.d_sa_abs", lambda p: abs(p.moments.d_sa)),
    "b_v": ("moments.b_v", _require_bv),
    "ratio": ("moments.ratio_a_to_s", lambda p: p.moments.b_a / p.moments.b_s),
    "g2": ("measures.g2", lambda p: g2(p.moments)),
    "nrf": ("measures.nrf", lambda p: nrf(p.moments)),
    "lambda_sq": ("measures.lambda_sq", lambda p: squeezing_variance(p.moments)),
    "log_neg": ("measures.log_neg", lambda p: log_negativity(p.moments)),
    "purity": ("measures.purity", lambda p: purity(p.moments)),
    "tau": ("measures.tau", lambda p: nonclassicality_depth(p.moments)),
    "steer_s_to_a": ("measures.steer_s_to_a", lambda p: steering(p.moments)[0]),
    "steer_a_to_s": ("measures.steer_a_to_s", lambda p: steering(p.moments)[1]),
    "bell": ("measures.bell", lambda p: bell_parameter(p.moments, p.bell_config())),
    "bell_max": ("measures.bell_max", lambda p: bell_optimize(p.moments).value),
    "spdc_g2": ("spdc.g2", lambda p: g2(p.spdc)),
    "spdc_nrf": ("spdc.nrf", lambda p: nrf(p.spdc)),
    "spdc_lambda_sq": ("spdc.lambda_sq", lambda p: squeezing_variance(p.spdc)),
    "spdc_log_neg": ("spdc.log_neg", lambda p: log_negativity(p.spdc)),
    "spdc_purity": ("spdc.purity", lambda p: purity(p.spdc)),
    "spdc_tau": ("spdc.tau", lambda p: nonclassicality_depth(p.spdc)),
    "spdc_steer": ("spdc.steer", lambda p: steering(p.spdc)[0]),
    "spdc_bell": ("spdc.bell", lambda p: bell_parameter(p.spdc, p.bell_config())),
    "spdc_bell_max": ("spdc.bell_max", lambda p: bell_optimize(p.spdc).value),
    "p10": ("pnd.p_1_0", lambda p: p.pnd().probs[1, 0]),
    "p01": ("pnd.p_0_1", lambda p: p.pnd().probs[0, 1]),
    "cross_intensity": ("correlation.dI_S_dI_A", _cross),
    "nrf_multimode": ("multimode.nrf", _multimode),
}


def _point_params(spec: ScanSpec, coords: dict) -> RamanParams:
    values = {"epsilon": 4.0, "pump_amp": 0.0}
    values.update({k: float(v) for k, v in spec.params.items()})
    for name, value in coords.items():
        if name in PARAM_FIELDS:
            values[name] = float(value)
    opts = spec.options
    if opts.get("pump_scale") == "a1":
        if values["epsilon"] <= 1:
            raise DomainError("pump_scale a1 needs epsilon > 1")
        values["pump_amp"] *= math.pi / math.sqrt(values["epsilon"] - 1)
    elif opts.get("pump_scale") not in (None, 1, 1.0):
        raise DomainError(f"unknown pump_scale {opts.get('pump_scale')!r}")
    if "gamma_ratio" in opts:
        values["gamma_n"] = float(opts["gamma_ratio"]) * values["pump_amp"]
    return RamanParams(**values)


def _evaluate_point(job: tuple[ScanSpec, dict]) -> tuple[list, Optional[str]]:
    spec, coords = job
    try:
        point = _Point(_point_params(spec, coords), coords, spec.options)
    except RamanError as exc:
        return [math.nan] * len(spec.outputs), f"{type(exc).__name__}: {exc}"
    values, tags = [], []
    for name in spec.outputs:
        try:
            v = QUANTITIES[name][1](point)
            values.append(float(v))
        except (RamanError, ArithmeticError) as exc:
            values.append(math.nan)
            tags.append(f"{name}: {type(exc).__name__}")
    return values, "; ".join(tags) or None


def _grid(spec: ScanSpec) -> list[dict]:
    if len(spec.axes) == 1:
        ax = spec.axes[0]
        return [{ax.name: float(v)} for v in ax.values()]
    ax, ay = spec.axes
    return [{ax.name: float(x), ay.name: float(y)} for x in ax.values() for y in ay.values()]


def run_scan(spec: ScanSpec, jobs: int = 1) -> ScanResult:
    """Evaluate one panel. Results are ordered by grid index regardless of ``jobs``."""
    spec.validate()
    runner = {"scan": _run_grid, "pnd": _run_pnd, "quasi": _run_quasi, "balanced": _run_balanced}
    return runner[spec.kind](spec, jobs)


def _run_grid(spec: ScanSpec, jobs: int) -> ScanResult:
    grid = _grid(spec)
    work = [(spec, coords) for coords in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_point, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_evaluate_point(w) for w in work]
    axis_names = [a.name for a in spec.axes]
    columns = [f"axis.{n}" for n in axis_names] + [QUANTITIES[o][0] for o in spec.outputs] + ["error"]
    rows, warnings = [], []
    for coords, (values, tag) in zip(grid, results):
        rows.append([coords[n] for n in axis_names] + values + [tag or ""])
        if tag:
            warnings.append(f"{coords}: {tag}")
    return ScanResult(spec.id, columns, rows, _metadata(spec, len(grid)), warnings)


def _single_point(spec: ScanSpec) -> RamanParams:
    return _point_params(spec, {})


def _run_pnd(spec: ScanSpec, jobs: int) -> ScanResult:
    params = _single_point(spec)
    moments = moments_general(params, float(spec.options.get("zfrac", 1.0)))
    table = pnd_general(moments, n_max=int(spec.options.get("n_max", 10)))
    rows = [[i, j, float(table.probs[i, j])] for i in range(table.n_max + 1) for j in range(table.n_max + 1)]
    meta = _metadata(spec, len(rows))
    meta["tail_mass"] = table.tail_mass
    return ScanResult(spec.id, ["n_s", "n_a", "pnd.p"], rows, meta)


def _run_quasi(spec: ScanSpec, jobs: int) -> ScanResult:
    params = _single_point(spec)
    opts = spec.options
    moments = moments_general(params, float(opts.get("zfrac", 1.0)))
    table = pnd_general(moments, n_max=int(opts.get("n_max", 12)))
    num = int(opts.get("grid", 101))
    w_max = opts.get("w_max")
    w_s = np.linspace(0.0, float(w_max) if w_max else 5 * (1 + moments.b_s), num)
    w_a = np.linspace(0.0, float(w_max) if w_max else 5 * (1 + moments.b_a), num)
    s = float(opts["s"])
    qd = quasi_distribution(table, s, w_s, w_a, strict=bool(opts.get("strict", False)))
    rows = [[float(w_s[i]), float(w_a[j]), float(qd.values[i, j])] for i in range(num) for j in range(num)]
    meta = _metadata(spec, len(rows))
    lo, arg, frac = qd.negativity()
    meta.update(
        divergence=qd.divergence,
        converged=qd.converged,
        existence_threshold=existence_threshold(moments),
        min_value=lo,
        argmin=list(arg),
        negative_fraction=frac,
    )
    warnings = []
    if not qd.converged:
        warnings.append(
            f"series truncated at n_max={qd.n_max} is not converged (outer shell {qd.divergence:.3g} of peak)"
        )
    return ScanResult(spec.id, ["w_s", "w_a", "quasi.P"], rows, meta, warnings)


def _run_balanced(spec: ScanSpec, jobs: int) -> ScanResult:
    if len(spec.axes) != 1 or spec.axes[0].name != "epsilon":
        raise DomainError("balanced panel needs a single epsilon axis")
    m_max = int(spec.options.get("m_max", 3))
    rows = []
    for eps in spec.axes[0].values():
        if eps <= 1:
            continue
        for m, (a_m, b_m) in enumerate(balanced_pump_amplitudes(float(eps), m_max), start=1):
            rows.append([float(eps), m, a_m, b_m])
    return ScanResult(spec.id, ["axis.epsilon", "m", "pump.balanced", "pump.vacuum_return"], rows,
                      _metadata(spec, len(rows)))


def _metadata(spec: ScanSpec, count: int) -> dict:
    eps = spec.params.get("epsilon")
    regime = None
    if eps is not None and not any(a.name == "epsilon" for a in spec.axes):
        regime = "exponential" if float(eps) <= 1 else "oscillatory"
    return {
        "panel": spec.id,
        "kind": spec.kind,
        "axes": [vars(a) for a in spec.axes],
        "params": spec.params,
        "options": spec.options,
        "outputs": list(spec.outputs),
        "points": count,
        "regime": regime,
        "version": __version__,
        "float_format": FLOAT_FORMAT,
    }


# ------------------------------------------------------------------ recipes


def load_recipe(path_or_name: str) -> dict:
    """Load a YAML recipe from a path or a bundled figure name."""
    if path_or_name in FIGURES:
        text = resources.files("ramanpairs.recipes").joinpath(f"{path_or_name}.yaml").read_text()
    else:
        text = Path(path_or_name).read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise DomainError("recipe must be a mapping")
    if "panels" not in data:
        panel = dict(data)
        name = panel.pop("name", Path(str(path_or_name)).stem)
        panel.setdefault("id", name)
        data = {"name": name, "panels": [panel]}
    return data


def apply_overrides(recipe: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` overrides to every panel.

    Keys are ``params.X``, ``options.X`` or ``axes.NAME.FIELD``; a bare key is
    taken as ``params.X``. Values are parsed as YAML scalars.
    """
    recipe = copy.deepcopy(recipe)
    for item in overrides:
        if "=" not in item:
            raise DomainError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        parts = key.strip().split(".")
        if len(parts) == 1:
            parts = ["params"] + parts
        for panel in recipe["panels"]:
            if parts[0] in ("params", "options") and len(parts) == 2:
                panel.setdefault(parts[0], {})[parts[1]] = value
            elif parts[0] == "axes" and len(parts) == 3:
                for axis in panel.get("axes", []):
                    if axis["name"] == parts[1]:
                        axis[parts[2]] = value
            else:
                raise DomainError(f"cannot interpret override key {key!r}")
    return recipe


def run_recipe(recipe: dict, jobs: int = 1) -> list[ScanResult]:
    specs = [ScanSpec.from_dict(p) for p in recipe["panels"]]
    return [run_scan(s, jobs) for s in specs]


def write_results(name: str, results: list[ScanResult], out_dir: Path, extra: Optional[dict] = None) -> list[Path]:
    """Write one CSV per panel plus a JSON sidecar; returns the written paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    sidecar = {"name": name, "version": __version__, "panels": []}
    if extra:
        sidecar.update(extra)
    for res in results:
        path = out_dir / f"{name}_{res.panel}.csv"
        path.write_text(res.to_csv())
        paths.append(path)
        sidecar["panels"].append(
            {"file": path.name, "columns": res.columns, "rows": len(res.rows),
             "metadata": res.metadata, "warnings": res.warnings}
        )
    meta_path = out_dir / f"{name}.json"
    meta_path.write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True) + "\n")
    paths.append(meta_path)
    return paths


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) or math.isinf(v) else float(FLOAT_FORMAT % v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
