"""Run configuration: a versioned YAML schema with strict validation.

Every key is checked against the schema; unknown keys, wrong types and
non-monotone ladders raise :class:`ConfigError` naming the offending field
path (for example ``ladders.epsilon``).
"""

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

import yaml

from . import __version__
from .dyncore import (GRID, METRIC_KINDS, ULTRAMETRIC, CylinderSet, Potential, RefinedGridLadder,
                      SymbolicSystem, WholeSpace)
from .estimates import LAST_POINT, LINEAR_FIT
from .measures import MeasureModel

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


# -- field checkers -------------------------------------------------------------------------

def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _number(v, path):
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(Fraction(v))
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(path, f"expected a number or 'p/q' string, got {v!r}")


def _int(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be >= {lo}")
    return v


def _list(v, path, item, nonempty=True):
    if not isinstance(v, list):
        raise ConfigError(path, f"expected a list, got {type(v).__name__}")
    if nonempty and not v:
        raise ConfigError(path, "must be nonempty")
    return [item(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _numbers(v, path, nonempty=True):
    return _list(v, path, _number, nonempty)


def _ints(v, path, lo=None):
    return _list(v, path, lambda x, p: _int(x, p, lo))


def _mapping(v, path, allowed, required=()):
    if not isinstance(v, dict):
        raise ConfigError(path, f"expected a mapping, got {type(v).__name__}")
    for k in v:
        if k not in allowed:
            raise ConfigError(_join(path, k), f"unknown key (allowed: {', '.join(sorted(allowed))})")
    for k in required:
        if k not in v:
            raise ConfigError(_join(path, k), "required key missing")
    return v


def _choice(v, path, options):
    if v not in options:
        raise ConfigError(path, f"must be one of {', '.join(map(str, options))}, got {v!r}")
    return v


def _decreasing(xs, path):
    if any(b >= a for a, b in zip(xs, xs[1:])):
        raise ConfigError(path, "ladder must be strictly decreasing")
    return xs


def _increasing(xs, path):
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ConfigError(path, "ladder must be strictly increasing")
    return xs


def _unit_interval(x, path, open_=True):
    if not (0 < x < 1 if open_ else 0 <= x <= 1):
        raise ConfigError(path, "must lie in (0, 1)" if open_ else "must lie in [0, 1]")
    return x


# -- sections -------------------------------------------------------------------------------

SYSTEM_KEYS = {"kind", "alphabet_size", "metric_kind", "forbidden_words", "spec_gap", "embedding"}
POTENTIAL_KEYS = {"kind", "values", "depth"}


def parse_system(v, path="system"):
    _mapping(v, path, SYSTEM_KEYS)
    kind = _choice(v.get("kind", "shift"), _join(path, "kind"), ("shift", "refined_grid"))
    spec_gap = v.get("spec_gap", 0)
    if spec_gap is not None:
        _int(spec_gap, _join(path, "spec_gap"), 0)
    if kind == "refined_grid":
        for k in ("alphabet_size", "forbidden_words", "embedding"):
            if k in v:
                raise ConfigError(_join(path, k), "not allowed for a refined_grid system")
        if v.get("metric_kind", GRID) != GRID:
            raise ConfigError(_join(path, "metric_kind"), f"refined_grid uses {GRID}")
        if spec_gap != 0:
            raise ConfigError(_join(path, "spec_gap"), "refined_grid systems are full shifts (gap 0)")
        return RefinedGridLadder()
    if "alphabet_size" not in v:
        raise ConfigError(_join(path, "alphabet_size"), "required key missing")
    k = _int(v["alphabet_size"], _join(path, "alphabet_size"), 1)
    metric = _choice(v.get("metric_kind", ULTRAMETRIC), _join(path, "metric_kind"), METRIC_KINDS)
    fw = v.get("forbidden_words", [])
    fw = _list(fw, _join(path, "forbidden_words"), lambda w, p: tuple(_ints(w, p, 0)), nonempty=False)
    emb = v.get("embedding")
    if emb is not None:
        emb = tuple(_numbers(emb, _join(path, "embedding")))
    try:
        return SymbolicSystem(k, metric, tuple(fw), emb, spec_gap=spec_gap)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def parse_potential(v, path):
    """``None`` or ``{kind: zero}`` means the zero potential (returned as ``None``)."""
    if v is None:
        return None
    _mapping(v, path, POTENTIAL_KEYS, ("kind",))
    kind = _choice(v["kind"], _join(path, "kind"), ("zero", "embed", "cylinder", "coordinate_affine"))
    if kind == "zero":
        if "values" in v or "depth" in v:
            raise ConfigError(path, "the zero potential takes no values")
        return None
    if kind == "embed":
        return Potential.embed()
    if "values" not in v:
        raise ConfigError(_join(path, "values"), "required key missing")
    vals = _list(v["values"], _join(path, "values"), lambda x, p: x if isinstance(x, str) else _number(x, p))
    for i, x in enumerate(vals):
        if isinstance(x, str):
            _number(x, f"{path}.values[{i}]")
    depth = _int(v.get("depth", 1), _join(path, "depth"), 1)
    if kind == "coordinate_affine" and len(vals) != 2:
        raise ConfigError(_join(path, "values"), "coordinate_affine needs exactly [a, b]")
    try:
        return Potential(kind, tuple(vals), depth)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def parse_measure(v, path):
    _mapping(v, path, {"kind", "p", "P", "pi", "weights", "components"}, ("kind",))
    kind = _choice(v["kind"], _join(path, "kind"), ("bernoulli", "markov", "mixture"))
    try:
        if kind == "bernoulli":
            if "p" not in v:
                raise ConfigError(_join(path, "p"), "required key missing")
            return MeasureModel.bernoulli(_numbers(v["p"], _join(path, "p")))
        if kind == "markov":
            if "P" not in v:
                raise ConfigError(_join(path, "P"), "required key missing")
            P = _list(v["P"], _join(path, "P"), _numbers)
            pi = _numbers(v["pi"], _join(path, "pi")) if "pi" in v else None
            return MeasureModel.markov(P, pi)
        for k in ("weights", "components"):
            if k not in v:
                raise ConfigError(_join(path, k), "required key missing")
        comps = [parse_measure(c, f"{path}.components[{i}]") for i, c in enumerate(v["components"])]
        return MeasureModel.mixture(_numbers(v["weights"], _join(path, "weights")), comps)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def parse_restriction(v, path="restriction"):
    if v is None:
        return WholeSpace()
    _mapping(v, path, {"kind", "word"}, ("kind",))
    kind = _choice(v["kind"], _join(path, "kind"), ("whole", "cylinder"))
    if kind == "whole":
        return WholeSpace()
    if "word" not in v:
        raise ConfigError(_join(path, "word"), "required key missing")
    return CylinderSet(tuple(_ints(v["word"], _join(path, "word"), 0)))


@dataclass
class Ladders:
    epsilon: list
    n: list
    N: list | None = None


def parse_ladders(v, path="ladders"):
    _mapping(v, path, {"epsilon", "n", "N"}, ("epsilon", "n"))
    eps = _decreasing(_numbers(v["epsilon"], _join(path, "epsilon")), _join(path, "epsilon"))
    for i, e in enumerate(eps):
        if not e > 0:
            raise ConfigError(f"{path}.epsilon[{i}]", "must be positive")
    n = _increasing(_ints(v["n"], _join(path, "n"), 1), _join(path, "n"))
    N = _increasing(_ints(v["N"], _join(path, "N"), 1), _join(path, "N")) if "N" in v else None
    return Ladders(eps, n, N)


@dataclass
class SpectrumSection:
    alphas: list
    deltas: list = field(default_factory=lambda: [0.1, 0.3])
    window_deltas: list = field(default_factory=lambda: [0.1, 0.05, 0.02])
    tolerance: float = 0.1
    katok_n: list = field(default_factory=lambda: list(range(10, 31)))
    sample_size: int = 10_000


def parse_spectrum(v, path="spectrum"):
    _mapping(v, path, {"alphas", "deltas", "window_deltas", "tolerance", "katok_n", "sample_size"}, ("alphas",))
    s = SpectrumSection(_increasing(_numbers(v["alphas"], _join(path, "alphas")), _join(path, "alphas")))
    if "deltas" in v:
        s.deltas = [_unit_interval(d, f"{path}.deltas[{i}]")
                    for i, d in enumerate(_numbers(v["deltas"], _join(path, "deltas")))]
    if "window_deltas" in v:
        s.window_deltas = _decreasing(_numbers(v["window_deltas"], _join(path, "window_deltas")),
                                      _join(path, "window_deltas"))
    if "tolerance" in v:
        s.tolerance = _number(v["tolerance"], _join(path, "tolerance"))
    if "katok_n" in v:
        s.katok_n = _increasing(_ints(v["katok_n"], _join(path, "katok_n"), 1), _join(path, "katok_n"))
    if "sample_size" in v:
        s.sample_size = _int(v["sample_size"], _join(path, "sample_size"), 1)
    return s


@dataclass
class KatokSection:
    measure: MeasureModel
    epsilon: float
    deltas: list
    n: list
    sample_size: int = 10_000
    mode: str = "sampled"


def parse_katok(v, path="katok"):
    _mapping(v, path, {"measure", "epsilon", "deltas", "n", "sample_size", "mode"},
             ("measure", "epsilon", "deltas", "n"))
    return KatokSection(
        parse_measure(v["measure"], _join(path, "measure")),
        _number(v["epsilon"], _join(path, "epsilon")),
        [_unit_interval(d, f"{path}.deltas[{i}]") for i, d in enumerate(_numbers(v["deltas"], _join(path, "deltas")))],
        _increasing(_ints(v["n"], _join(path, "n"), 1), _join(path, "n")),
        _int(v.get("sample_size", 10_000), _join(path, "sample_size"), 1),
        _choice(v.get("mode", "sampled"), _join(path, "mode"), ("sampled", "exact")),
    )


@dataclass
class PointSection:
    alpha: float
    levels: int
    epsilon: float
    delta: float
    block_length: int
    block_count: int
    growth: int = 2


def parse_point(v, path="point"):
    keys = ("alpha", "levels", "epsilon", "delta", "block_length", "block_count")
    _mapping(v, path, set(keys) | {"growth"}, keys)
    return PointSection(
        _number(v["alpha"], _join(path, "alpha")),
        _int(v["levels"], _join(path, "levels"), 1),
        _number(v["epsilon"], _join(path, "epsilon")),
        _number(v["delta"], _join(path, "delta")),
        _int(v["block_length"], _join(path, "block_length"), 1),
        _int(v["block_count"], _join(path, "block_count"), 1),
        _int(v.get("growth", 2), _join(path, "growth"), 1),
    )


@dataclass
class SuspensionSection:
    roof: Potential
    tolerance: float = 1e-3


def parse_suspension(v, path="suspension"):
    _mapping(v, path, {"roof", "tolerance"}, ("roof",))
    roof = parse_potential(v["roof"], _join(path, "roof"))
    if roof is None:
        raise ConfigError(_join(path, "roof"), "the roof must be strictly positive")
    tol = _number(v.get("tolerance", 1e-3), _join(path, "tolerance"))
    if tol <= 0:
        raise ConfigError(_join(path, "tolerance"), "must be positive")
    return SuspensionSection(roof, tol)


# -- the whole config ------------------------------------------------------------------------

TOP_KEYS = {"schema_version", "system", "potential", "observable", "restriction", "ladders",
            "extrapolation", "seed", "spectrum", "katok", "point", "suspension"}

# sections each command needs besides the system
REQUIRED = {
    "pressure": ("ladders",),
    "mdim": ("ladders",),
    "bowen-mdim": ("ladders",),
    "katok": ("katok",),
    "spectrum": ("ladders", "observable", "spectrum"),
    "verify-vp": ("ladders", "observable", "spectrum"),
    "build-point": ("observable", "point"),
    "suspension": ("ladders", "suspension"),
}
COMMANDS = tuple(REQUIRED)


@dataclass
class RunConfig:
    raw: dict
    system: object
    psi: Potential | None
    phi: Potential | None
    restriction: object
    ladders: Ladders | None
    extrapolation: str
    seed: int
    spectrum: SpectrumSection | None = None
    katok: KatokSection | None = None
    point: PointSection | None = None
    suspension: SuspensionSection | None = None

    def digest(self, command: str) -> str:
        """Hash of the normalized config, command and seed; the cache key with the tool version."""
        body = {"command": command, "config": self.raw, "seed": self.seed}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def version(self) -> str:
        return __version__


def parse_config(data, command: str | None = None, seed: int | None = None) -> RunConfig:
    """Validate a decoded YAML document; ``seed`` overrides the configured seed."""
    if data is None:
        data = {}
    _mapping(data, "", TOP_KEYS, ("schema_version", "system"))
    ver = data["schema_version"]
    if ver != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {ver!r} (this tool reads {SCHEMA_VERSION})")
    if command is not None:
        _choice(command, "command", COMMANDS)
        for k in REQUIRED[command]:
            if k not in data:
                raise ConfigError(k, f"required by the {command} command")
    cfg_seed = _int(data.get("seed", 0), "seed", 0)
    if seed is not None:
        cfg_seed = _int(seed, "--seed", 0)
    cfg = RunConfig(
        raw=data,
        system=parse_system(data["system"]),
        psi=parse_potential(data.get("potential"), "potential"),
        phi=parse_potential(data.get("observable"), "observable"),
        restriction=parse_restriction(data.get("restriction")),
        ladders=parse_ladders(data["ladders"]) if "ladders" in data else None,
        extrapolation=_choice(data.get("extrapolation", LINEAR_FIT), "extrapolation", (LINEAR_FIT, LAST_POINT)),
        seed=cfg_seed,
    )
    if "spectrum" in data:
        cfg.spectrum = parse_spectrum(data["spectrum"])
    if "katok" in data:
        cfg.katok = parse_katok(data["katok"])
    if "point" in data:
        cfg.point = parse_point(data["point"])
    if "suspension" in data:
        cfg.suspension = parse_suspension(data["suspension"])
    if command in ("spectrum", "verify-vp", "build-point") and cfg.phi is None:
        raise ConfigError("observable", "the zero observable has a single level set")
    return cfg


def load_config(path, command: str | None = None, seed: int | None = None) -> RunConfig:
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigError("", f"cannot parse {path}: {e}") from None
    return parse_config(data, command, seed)
