# src/file_handler.py
# Loads input files (cocycles, towers, Gross-point data, characters, directions,
# local parameters) through pydantic schemas and renders reports as JSON, TSV or HTML.

import json
import logging
import os
import re
from fractions import Fraction
from typing import Any, Literal

import markdown
from pydantic import BaseModel, Field
from pydantic import ValidationError as SchemaError

import errors
from anticyclo import ClassGroupTower, Direction, FiniteCharacter, LevelGroup, cyclic_tower, finite_character
from bt_tree import INFINITY, TreeEdge, hyperbolic_axis
from harmonic import HarmonicCocycle, axis_cocycle, boundary_cocycle, periodic_cocycle
from padic_core import PadicNumber, check_prime
from theta import GrossPointData, build_gross_data_from_cocycle

logger = logging.getLogger(__name__)

_LEVEL_RE = re.compile(r"^n=\[\s*(-?\d+(?:\s*,\s*-?\d+)*)?\s*\]$")


# --- schemas ---

class CocycleFile(BaseModel):
    p: int
    kind: Literal["axis", "periodic", "boundary", "table"] = "axis"
    weight: int = 2
    depth: int = 8
    precision: int | None = None
    qtilde: str | None = None
    # point -> weight; "inf" is the point at infinity
    atoms: dict[str, str] = Field(default_factory=dict)
    axis_weight: str = "1"
    # edge label -> value vector
    table: dict[str, list[str]] = Field(default_factory=dict)


class ProjectionEntry(BaseModel):
    hi: str
    lo: str
    images: list[str]


class TowerFile(BaseModel):
    kind: Literal["cyclic", "explicit"] = "explicit"
    p: int | None = None
    depth: int = 4
    finite_order: int = 1
    c0: int = 1
    conductor: str = "1"
    primes: list[int] = Field(default_factory=list)
    # level label -> cyclic orders
    levels: dict[str, list[int]] = Field(default_factory=dict)
    projections: list[ProjectionEntry] = Field(default_factory=list)


class BuildSpec(BaseModel):
    cocycles: list[str | CocycleFile]
    max_level: int = 4
    finite_order: int = 1
    finite_part: dict[str, str] | None = None


class GrossFile(BaseModel):
    tower: str | TowerFile | None = None
    alpha: dict[str, str] = Field(default_factory=dict)
    split: dict[str, bool] = Field(default_factory=dict)
    values: dict[str, dict[str, str]] = Field(default_factory=dict)
    build: BuildSpec | None = None


class CharacterFile(BaseModel):
    level: str
    angles: dict[str, str]


class DirectionFile(BaseModel):
    s: list[str]


class LocalParamsFile(BaseModel):
    operation: Literal["L-factor", "whittaker", "zeta", "pairing", "toric", "volume", "period-ratio"] = "toric"
    case: str | None = None
    params: dict[str, Any] = Field(default_factory=dict)


# --- low-level readers ---

def read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise errors.InvalidFile(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise errors.InvalidFile(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from e


def _validated(model, data, source: str):
    try:
        return model.model_validate(data)
    except SchemaError as e:
        violations = [f"{'.'.join(str(x) for x in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise errors.InvalidFile(f"{source}: schema violation", violations) from e


def _load_model(model, path: str):
    return _validated(model, read_json(path), path)


def _resolve(ref: str, base_dir: str) -> str:
    return ref if os.path.isabs(ref) else os.path.join(base_dir, ref)


def parse_level(label: str) -> tuple:
    m = _LEVEL_RE.match(label.strip())
    if not m:
        raise errors.InvalidFile(f"bad level label {label!r}, expected n=[...]")
    body = m.group(1)
    return tuple(int(x) for x in body.split(",")) if body else ()


def level_label(level) -> str:
    return "n=[" + ",".join(str(x) for x in level) + "]"


def _padic(text: str, p: int, N: int) -> PadicNumber:
    return PadicNumber.parse(str(text), p, N)


# --- builders ---

def cocycle_from_model(m: CocycleFile, N: int) -> HarmonicCocycle:
    p = check_prime(m.p)
    N = m.precision or N
    if m.kind in ("axis", "periodic") and m.qtilde is None:
        raise errors.InvalidFile(f"a {m.kind} cocycle needs qtilde")
    if m.kind == "axis":
        return axis_cocycle(p, _padic(m.qtilde, p, N), m.depth)
    atoms = {}
    for x, w in m.atoms.items():
        point = INFINITY if x.strip().lower() in ("inf", "infinity") else Fraction(x)
        atoms[point] = Fraction(w)
    if m.kind == "periodic":
        return periodic_cocycle(p, _padic(m.qtilde, p, N), atoms, m.depth, Fraction(m.axis_weight))
    if m.kind == "boundary":
        return boundary_cocycle(p, m.weight, atoms, m.depth)
    table = {TreeEdge.parse(label, p): tuple(Fraction(v) for v in values) for label, values in m.table.items()}
    gamma = qtilde = None
    if m.qtilde is not None:
        qtilde = _padic(m.qtilde, p, N)
        gamma, _ = hyperbolic_axis(qtilde)
    return HarmonicCocycle.from_table(p, m.weight, m.depth, table, gamma, qtilde)


def load_cocycle(path: str, N: int) -> HarmonicCocycle:
    c = cocycle_from_model(_load_model(CocycleFile, path), N)
    logger.debug("loaded %s cocycle from %s", c.weight, path)
    return c


def tower_from_model(m: TowerFile) -> ClassGroupTower:
    if m.kind == "cyclic":
        if m.p is None:
            raise errors.InvalidFile("a cyclic tower needs p")
        return cyclic_tower(check_prime(m.p), m.depth, m.finite_order, m.c0)
    if not m.primes:
        raise errors.InvalidFile("an explicit tower needs its primes")
    levels = {}
    for label, orders in m.levels.items():
        level = parse_level(label)
        if len(level) != len(m.primes):
            raise errors.InvalidFile(f"level {label} does not match {len(m.primes)} primes")
        levels[level] = LevelGroup(level, tuple(orders))
    projections = {}
    for entry in m.projections:
        hi, lo = parse_level(entry.hi), parse_level(entry.lo)
        if lo not in levels:
            raise errors.InvalidFile(f"projection target {entry.lo} is not a listed level")
        G_lo = levels[lo]
        projections[(hi, lo)] = [G_lo.element(x) for x in entry.images]
    return ClassGroupTower(tuple(m.primes), m.c0, levels, projections, m.conductor)


def load_tower(path: str) -> ClassGroupTower:
    return tower_from_model(_load_model(TowerFile, path))


def _cocycle_ref(ref, base_dir: str, N: int) -> HarmonicCocycle:
    if isinstance(ref, CocycleFile):
        return cocycle_from_model(ref, N)
    return load_cocycle(_resolve(ref, base_dir), N)


def gross_from_model(m: GrossFile, base_dir: str, N: int) -> tuple[GrossPointData, list]:
    # Returns the data and the cocycles it was built from (empty when ingested)
    if m.build is not None:
        cocycles = [_cocycle_ref(ref, base_dir, N) for ref in m.build.cocycles]
        finite = {int(k): Fraction(v) for k, v in m.build.finite_part.items()} if m.build.finite_part else None
        data = build_gross_data_from_cocycle(cocycles, m.build.max_level, finite, m.build.finite_order, N)
        return data, cocycles
    if m.tower is None:
        raise errors.InvalidFile("Gross-point data needs a tower or a build section")
    if isinstance(m.tower, str):
        tower = load_tower(_resolve(m.tower, base_dir))
    else:
        tower = tower_from_model(m.tower)
    p = tower.primes[0]
    alpha = {}
    for prime in tower.primes:
        if str(prime) not in m.alpha:
            raise errors.InvalidFile(f"alpha is missing for the prime {prime}")
        alpha[prime] = _padic(m.alpha[str(prime)], p, N)
    split = {prime: m.split.get(str(prime), True) for prime in tower.primes}
    values = {}
    for label, table in m.values.items():
        level = parse_level(label)
        G = tower.group(level)
        values[level] = {G.element(x): _padic(v, p, N) for x, v in table.items()}
    return GrossPointData(tower, alpha, split, values), []


def load_gross_data(path: str, N: int) -> tuple[GrossPointData, list]:
    m = _load_model(GrossFile, path)
    return gross_from_model(m, os.path.dirname(os.path.abspath(path)), N)


def load_character(path: str, tower: ClassGroupTower) -> FiniteCharacter:
    m = _load_model(CharacterFile, path)
    return finite_character(tower, parse_level(m.level), {k: Fraction(v) for k, v in m.angles.items()})


def load_direction(path: str, p: int, N: int) -> Direction:
    m = _load_model(DirectionFile, path)
    return Direction.parse(m.s, p, N)


def load_local_params(path: str) -> LocalParamsFile:
    return _load_model(LocalParamsFile, path)


# --- output ---

def to_plain(value):
    # Library values to JSON-friendly text; p-adic values keep their precision tag
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, float):
        return str(value)
    return str(value)


def render_json(report: dict) -> str:
    return json.dumps(to_plain(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _flatten(report: dict, prefix: str = "") -> list[tuple[str, str]]:
    out = []
    for key in sorted(report):
        value = report[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_flatten(value, name + "."))
        elif isinstance(value, (list, tuple)) and key != "rows":
            out.append((name, ", ".join(str(to_plain(v)) for v in value)))
        elif key != "rows":
            out.append((name, str(to_plain(value))))
    return out


def _is_table(report: dict) -> bool:
    return "rows" in report and "columns" in report


def _table(report: dict) -> tuple[list[str], list[list[str]]]:
    if _is_table(report):
        return [str(c) for c in report["columns"]], [[str(to_plain(x)) for x in row] for row in report["rows"]]
    return ["key", "value"], [list(pair) for pair in _flatten(report)]


def _preamble(report: dict) -> list[tuple[str, str]]:
    # Scalar fields (config echo, summaries) of a table report
    if not _is_table(report):
        return []
    return [pair for pair in _flatten(report) if pair[0] != "columns"]


def render_tsv(report: dict) -> str:
    columns, rows = _table(report)
    widths = [max(len(r[i]) for r in [columns] + rows) for i in range(len(columns))]
    lines = [f"# {key} = {value}" for key, value in _preamble(report)]
    lines += ["\t".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [columns] + rows]
    return "\n".join(lines) + "\n"


def render_html(report: dict, title: str = "") -> str:
    columns, rows = _table(report)
    md = []
    if title:
        md.append(f"# {title}\n")
    preamble = _preamble(report)
    if preamble:
        md.extend(f"- **{key}**: {value}" for key, value in preamble)
        md.append("")
    md.append("| " + " | ".join(columns) + " |")
    md.append("|" + "---|" * len(columns))
    for row in rows:
        md.append("| " + " | ".join(cell.replace("|", "\\|") for cell in row) + " |")
    body = markdown.markdown("\n".join(md), extensions=["tables"])
    return f"<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{title}</title></head>\n<body>\n{body}\n</body></html>\n"


def render(report: dict, fmt: str, title: str = "") -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "tsv":
        return render_tsv(report)
    if fmt == "html":
        return render_html(report, title)
    raise errors.UsageError(f"unknown output format {fmt!r}")
