"""INI run configuration.

Sections and keys are fixed; anything unknown is rejected.  Lists use commas,
per-breakpoint load values are separated by semicolons::

    [load]
    times = 0, 1
    dirichlet = 0 0; 0.3 0        # H (row-major) then b, one group per time
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .constitutive.loads import LoadSchedule, PiecewiseAffine, ScheduleError
from .constitutive.params import ModelParams, ParameterError, stress_free_d_log
from .grid import FACE_NAMES, Grid, ScalarField, read_field
from .optim import SolverOptions
from .rothe import RotheOptions, TimeGrid
from .scenario import Scenario, VerifyOptions
from .verify.toy import ToyParams


class ConfigError(ValueError):
    pass


_SOLVER_KEYS = {f.name for f in fields(SolverOptions)} - {"seed"}
_VERIFY_KEYS = {f.name for f in fields(VerifyOptions)} - {"seed"}
_TOY_KEYS = {f.name for f in fields(ToyParams)}
_SECTIONS = {
    "scenario": {"name"},
    "grid": {"dim", "nodes", "extents", "dirichlet_faces", "neumann_faces"},
    "model": set(ModelParams.keys()) - {"dim"},
    "load": {"times", "bulk", "surface", "dirichlet", "pressure"},
    "initial": {"z0", "value", "depth", "center", "width", "file"},
    "time": {"T", "N", "lambda0"},
    "solver.y": _SOLVER_KEYS,
    "solver.z": _SOLVER_KEYS,
    "verify": _VERIFY_KEYS,
    "output": {"directory", "snapshots"},
    "run": {"seed", "workers"},
    "toy": _TOY_KEYS,
}
_STRING_MODEL_KEYS = {"material_mode", "psi"}
_INT_KEYS = {"max_iters", "memory", "multistart", "draws", "semi_random", "semi_truncated",
             "long_pairs", "cn_resolution", "N", "seed", "workers", "dim"}


@dataclass
class RunConfig:
    path: Path
    text: str
    content_hash: str
    name: str
    output_dir: Path
    scenario: Scenario | None = None
    toy: ToyParams | None = None


def resolve_path(path) -> Path:
    """Existing path, or the bundled scenario of the same file name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("ris") / "scenarios" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config file not found: {path}")


def _floats(text: str, where: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{where}: expected numbers, got {text!r}") from None


def _number(key: str, text: str, where: str):
    try:
        return int(text) if key in _INT_KEYS else float(text)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {text!r}") from None


def _bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {text!r}")


def _read(path: Path) -> tuple[str, configparser.ConfigParser]:
    text = path.read_text(encoding="utf-8")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
    return text, cp


def parse_config(path) -> RunConfig:
    path = resolve_path(path)
    text, cp = _read(path)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    name = cp.get("scenario", "name", fallback=path.stem)
    out = Path(cp.get("output", "directory", fallback=f"ris_output/{name}"))
    cfg = RunConfig(path, text, digest, name, out)
    if cp.has_section("toy"):
        if cp.has_section("grid") or cp.has_section("model"):
            raise ConfigError("[toy] configs cannot also define [grid] or [model]")
        cfg.toy = _toy(cp)
        return cfg
    cfg.scenario = _scenario(cp, name, path)
    return cfg


def _toy(cp) -> ToyParams:
    kw = {}
    for key, val in cp["toy"].items():
        where = f"toy.{key}"
        if key == "psi":
            kw[key] = val.strip()
        elif key == "N":
            kw[key] = _number("N", val, where)
        else:
            kw[key] = _number(key, val, where)
    try:
        return ToyParams(**kw)
    except ValueError as exc:
        raise ConfigError(f"toy: {exc}") from None


def _grid(cp) -> tuple[Grid, tuple, tuple]:
    if not cp.has_section("grid"):
        raise ConfigError("missing section [grid]")
    g = cp["grid"]
    dim = _number("dim", g.get("dim", "1"), "grid.dim")
    nodes = [int(v) for v in _floats(g.get("nodes", ""), "grid.nodes")]
    extents = _floats(g.get("extents", " ".join(["1"] * dim)), "grid.extents")
    if len(nodes) == 1:
        nodes = nodes * dim
    if len(extents) == 1:
        extents = extents * dim
    try:
        grid = Grid(extents, nodes)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    if grid.dim != dim:
        raise ConfigError("grid.dim does not match grid.nodes")
    faces = []
    for key in ("dirichlet_faces", "neumann_faces"):
        sel = tuple(f.strip() for f in g.get(key, "").split(",") if f.strip())
        for f in sel:
            if f not in FACE_NAMES or int(f[1]) >= dim:
                raise ConfigError(f"grid.{key}: unknown face {f!r}")
        faces.append(sel)
    return grid, faces[0], faces[1]


def _model(cp, dim: int) -> ModelParams:
    kw = {"dim": dim}
    auto = False
    sec = cp["model"] if cp.has_section("model") else {}
    for key, val in sec.items():
        where = f"model.{key}"
        if key in _STRING_MODEL_KEYS:
            kw[key] = val.strip()
        elif key == "d_log" and val.strip().lower() == "auto":
            auto = True
        else:
            kw[key] = _number(key, val, where)
    if auto:
        defaults = ModelParams.__dataclass_fields__
        args = [kw.get(k, defaults[k].default) for k in ("a", "b", "c", "e_s", "p", "q", "r", "s")]
        kw["d_log"] = stress_free_d_log(dim, *args)
    try:
        return ModelParams(**kw)
    except ParameterError as exc:
        raise ConfigError(f"model.{exc.key}: {str(exc).split(': ', 1)[1]}") from None


def _schedule(cp, dim: int, T: float, dfaces, nfaces) -> LoadSchedule:
    sec = cp["load"] if cp.has_section("load") else {}
    times = _floats(sec.get("times", "0"), "load.times")
    sizes = {"bulk": dim, "surface": dim, "dirichlet": dim * dim + dim, "pressure": 1}
    comps = {}
    for key, size in sizes.items():
        if key not in sec:
            continue
        groups = [grp for grp in sec[key].split(";")]
        vals = [_floats(grp, f"load.{key}") for grp in groups]
        if any(len(v) != size for v in vals):
            raise ConfigError(f"load.{key}: each group needs {size} numbers")
        try:
            if len(vals) == 1:
                comps[key] = PiecewiseAffine.constant(vals[0])
            elif len(vals) == len(times):
                comps[key] = PiecewiseAffine(times, vals)
            else:
                raise ConfigError(f"load.{key}: need one group per entry of load.times")
        except ScheduleError as exc:
            raise ConfigError(f"load.{key}: {exc}") from None
    if any(t < 0 or t > T for t in times):
        raise ConfigError("load.times must lie in [0, T]")
    return LoadSchedule(dim=dim, T=T, dirichlet_faces=dfaces, neumann_faces=nfaces, **comps)


def _initial(cp, grid: Grid, base: Path) -> ScalarField:
    sec = cp["initial"] if cp.has_section("initial") else {}
    kind = sec.get("z0", "uniform").strip()
    if kind == "uniform":
        z = np.full(grid.num_nodes, float(sec.get("value", "1")))
    elif kind == "notch":
        depth = float(sec.get("depth", "0.5"))
        center = _floats(sec.get("center", " ".join(["0.5"] * grid.dim)), "initial.center")
        width = _floats(sec.get("width", "0.1"), "initial.width")
        if len(width) == 1:
            width = width * grid.dim
        if len(center) != grid.dim or len(width) != grid.dim:
            raise ConfigError("initial.center/width need one entry per axis")
        r2 = np.sum(((grid.coords - center) / width) ** 2, axis=1)
        z = 1.0 - depth * np.exp(-r2)
    elif kind == "file":
        f = read_field((base.parent / sec.get("file", "")).resolve())
        if not isinstance(f, ScalarField) or f.grid != grid:
            raise ConfigError("initial.file must hold a scalar field on the configured grid")
        z = f.values
    else:
        raise ConfigError(f"initial.z0: unknown kind {kind!r} (uniform, notch, file)")
    if np.any(z < 0) or np.any(z > 1):
        raise ConfigError("initial damage must lie in [0, 1]")
    return ScalarField(grid, z)


def _solver(cp, sec: str, seed: int, default: SolverOptions) -> SolverOptions:
    if not cp.has_section(sec):
        return default.replace(seed=seed)
    kw = {k: _number(k, v, f"{sec}.{k}") for k, v in cp[sec].items()}
    try:
        return default.replace(seed=seed, **kw)
    except ValueError as exc:
        raise ConfigError(f"{sec}: {exc}") from None


def _verify(cp, seed: int) -> VerifyOptions:
    kw = {"seed": seed}
    if cp.has_section("verify"):
        for key, val in cp["verify"].items():
            where = f"verify.{key}"
            if key in ("amplitudes", "shifts"):
                kw[key] = tuple(_floats(val, where))
            elif key == "cn_enabled":
                kw[key] = _bool(val, where)
            else:
                kw[key] = _number(key, val, where)
    opts = VerifyOptions(**kw)
    if opts.cn_resolution < 64:
        raise ConfigError("verify.cn_resolution must be at least 64")
    if min(opts.draws, opts.semi_random, opts.semi_truncated, opts.long_pairs) < 0:
        raise ConfigError("verify competitor counts must be nonnegative")
    return opts


def _scenario(cp, name: str, path: Path) -> Scenario:
    grid, dfaces, nfaces = _grid(cp)
    params = _model(cp, grid.dim)
    tsec = cp["time"] if cp.has_section("time") else {}
    T = float(tsec.get("T", "1"))
    N = _number("N", tsec.get("N", "10"), "time.N")
    lambda0 = float(tsec.get("lambda0", "1"))
    try:
        time = TimeGrid(T, N)
    except ValueError as exc:
        raise ConfigError(f"time: {exc}") from None
    if not lambda0 > 0:
        raise ConfigError("time.lambda0 must be positive")
    schedule = _schedule(cp, grid.dim, T, dfaces, nfaces)
    z0 = _initial(cp, grid, path)
    rsec = cp["run"] if cp.has_section("run") else {}
    seed = _number("seed", rsec.get("seed", "0"), "run.seed")
    workers = _number("workers", rsec.get("workers", "1"), "run.workers")
    if workers < 1:
        raise ConfigError("run.workers must be at least 1")
    rothe = RotheOptions(
        y=_solver(cp, "solver.y", seed, SolverOptions()),
        z=_solver(cp, "solver.z", seed, SolverOptions(grad_tol=1e-10)),
        lambda0=lambda0,
    )
    snaps = cp.get("output", "snapshots", fallback="").strip()
    if snaps == "all":
        snapshots = ("all",)
    else:
        snapshots = tuple(int(v) for v in _floats(snaps, "output.snapshots")) if snaps else ()
    return Scenario(name, grid, params, schedule, z0, time, rothe, _verify(cp, seed),
                    snapshots, seed, workers)
