"""Reading and writing AH system descriptions (YAML).

Layout::

    name: goodearl(3)
    spaces:
      I: {interval: [0, 1, 101]}          # uniform grid, Euclidean metric
      P: {coords: [0.0, 0.25, 1.0]}       # points on the line
      Q: {points: [a, b], dist: [[0, 1], [1, 0]]}
    stages:                               # one list of [size, space] per stage
      - [[1, I]]
      - [[5, I]]
    bonds:                                # bonds[k] goes from stage k+1 to k+2
      - partial:
          - source: 0                     # summand index at the lower stage
            target: 0                     # summand index at the upper stage
            multiplicity: 5               # optional, checked against maps
            maps: [identity, const 0.5, affine 0.5 0.5, [0, 0, 1]]

A map is ``identity``, ``const <label or coordinate>``, ``affine c0 c1``
(y -> c0 + c1 y, rounded to the nearest sample) or an explicit table of
point indices in the lower-stage space, one entry per upper-stage point.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .diagonal_hom import AHSystem, BondingMap, DiagonalHom, PointMap, Summand, validate
from .errors import ParseError, ValidationError
from .metric_space import FiniteMetricSpace


class _LineLoader(yaml.SafeLoader):
    pass


def _mapping_with_line(loader, node, deep=False):
    data = loader.construct_mapping(node, deep=deep)
    data["__line__"] = node.start_mark.line + 1
    data["__lines__"] = {k.value: v.start_mark.line + 1 for k, v in node.value
                         if isinstance(k, yaml.ScalarNode)}
    return data


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping_with_line)


class _Ctx:
    def __init__(self, source):
        self.source = source

    def fail(self, where, msg, key=None):
        if isinstance(where, dict):
            line = where.get("__lines__", {}).get(key, where.get("__line__", "?"))
        else:
            line = where
        raise ParseError(f"{self.source}:{line}: {msg}")


def _space(ctx, name, spec):
    if not isinstance(spec, dict):
        ctx.fail("?", f"space {name!r}: expected a mapping")
    if "interval" in spec:
        try:
            a, b, n = spec["interval"]
            return FiniteMetricSpace.interval(float(a), float(b), int(n), name=name)
        except (TypeError, ValueError) as exc:
            ctx.fail(spec, f"space {name!r}: field 'interval' needs [a, b, N] ({exc})")
    if "coords" in spec:
        try:
            coords = [float(c) for c in spec["coords"]]
        except (TypeError, ValueError):
            ctx.fail(spec, f"space {name!r}: field 'coords' must be a list of numbers")
        if not coords:
            ctx.fail(spec, f"space {name!r}: field 'coords' is empty")
        return FiniteMetricSpace.from_coords(coords, name=name)
    if "points" in spec and "dist" in spec:
        pts = list(spec["points"])
        try:
            dist = np.array(spec["dist"], dtype=float)
        except (TypeError, ValueError):
            ctx.fail(spec, f"space {name!r}: field 'dist' must be a numeric matrix")
        if dist.shape != (len(pts), len(pts)):
            ctx.fail(spec, f"space {name!r}: field 'dist' has shape {dist.shape}, "
                           f"expected {(len(pts), len(pts))}")
        return FiniteMetricSpace(name, pts, dist)
    ctx.fail(spec, f"space {name!r}: needs 'interval', 'coords' or 'points' + 'dist'")


def _point(ctx, where, space, token):
    for k, p in enumerate(space.points):
        if str(p) == token:
            return k
    try:
        return space.nearest(float(token))
    except ValueError:
        ctx.fail(where, f"unknown point {token!r} in space {space.name!r}", "maps")


def _map(ctx, where, k, spec, upper, lower):
    """Eigenvalue map upper -> lower (points of the upper stage to the lower stage)."""
    label = f"field 'maps'[{k}]"
    if isinstance(spec, list):
        try:
            return PointMap(upper, lower, np.array(spec, dtype=int))
        except (ValueError, IndexError, TypeError) as exc:
            ctx.fail(where, f"{label}: bad index table ({exc})", "maps")
    if not isinstance(spec, str):
        ctx.fail(where, f"{label}: expected a string or an index list", "maps")
    words = spec.split()
    try:
        if words == ["identity"]:
            return PointMap.identity(upper, lower)
        if words[0] == "const" and len(words) == 2:
            return PointMap.constant(upper, lower, _point(ctx, where, lower, words[1]))
        if words[0] == "affine" and len(words) == 3:
            return PointMap.affine(upper, lower, float(words[1]), float(words[2]))
    except ValueError as exc:
        ctx.fail(where, f"{label}: {exc}", "maps")
    ctx.fail(where, f"{label}: cannot read map {spec!r}", "maps")


def load_system(text: str, source: str = "<string>", check: bool = True) -> AHSystem:
    ctx = _Ctx(source)
    try:
        data = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else "?"
        raise ParseError(f"{source}:{line}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{source}:1: empty or non-mapping document")
    for key in ("spaces", "stages"):
        if key not in data:
            ctx.fail(data, f"missing field {key!r}")
    if not isinstance(data["spaces"], dict):
        ctx.fail(data, "field 'spaces' must be a mapping")
    spaces = {str(n): _space(ctx, str(n), s) for n, s in data["spaces"].items() if not str(n).startswith("__")}

    stages = []
    for i, stage in enumerate(data["stages"] or [], start=1):
        if not isinstance(stage, list) or not stage:
            ctx.fail(data, f"stage {i}: expected a nonempty list of [size, space]", "stages")
        row = []
        for entry in stage:
            if not (isinstance(entry, list) and len(entry) == 2):
                ctx.fail(data, f"stage {i}: summand {entry!r} is not [size, space]")
            size, sname = entry
            if str(sname) not in spaces:
                ctx.fail(data, f"stage {i}: unknown space {sname!r}")
            row.append(Summand(int(size), spaces[str(sname)]))
        stages.append(row)
    if not stages:
        ctx.fail(data, "field 'stages' is empty")

    bonds = []
    raw_bonds = data.get("bonds") or []
    if len(raw_bonds) != len(stages) - 1:
        ctx.fail(data, f"{len(stages)} stages need {len(stages) - 1} bonds, found {len(raw_bonds)}")
    for k, b in enumerate(raw_bonds, start=1):
        if not isinstance(b, dict):
            ctx.fail(data, f"bond {k}: expected a mapping")
        partial = {}
        for p in b.get("partial") or []:
            for key in ("source", "target", "maps"):
                if key not in p:
                    ctx.fail(p, f"bond {k}: missing field {key!r}")
            t, l = int(p["source"]), int(p["target"])
            if not (0 <= t < len(stages[k - 1]) and 0 <= l < len(stages[k])):
                ctx.fail(p, f"bond {k}: summand pair ({t},{l}) out of range")
            if (t, l) in partial:
                ctx.fail(p, f"bond {k}: partial ({t},{l}) given twice")
            lower, upper = stages[k - 1][t], stages[k][l]
            maps = [_map(ctx, p, q, m, upper.space, lower.space) for q, m in enumerate(p["maps"])]
            if "multiplicity" in p and int(p["multiplicity"]) != len(maps):
                ctx.fail(p, f"bond {k}: multiplicity {p['multiplicity']} but {len(maps)} maps")
            partial[(t, l)] = DiagonalHom(lower.size, lower.space, upper.space, maps)
        bonds.append(BondingMap(k, partial))

    sys = AHSystem(stages, bonds, name=str(data.get("name", source)))
    if check:
        problems = validate(sys)
        if problems:
            raise ValidationError(problems)
    return sys


def parse_system(path) -> AHSystem:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return load_system(text, source=str(path))


def _space_spec(space):
    if space.generator and space.generator[0] == "interval":
        _, a, b, n = space.generator
        return {"interval": [float(a), float(b), int(n)]}
    if space.coords is not None and space.coords.ndim == 1:
        return {"coords": [float(c) for c in space.coords]}
    return {"points": [str(p) for p in space.points], "dist": space.dist.tolist()}


def _map_spec(lam: PointMap):
    if lam.source is lam.target and np.array_equal(lam.table, np.arange(len(lam.table))):
        return "identity"
    if len(set(lam.table.tolist())) == 1 and len(lam.table) > 1:
        return f"const {lam.target.points[int(lam.table[0])]}"
    return [int(x) for x in lam.table]


def dump_system(sys: AHSystem) -> str:
    names = {}
    for stage in sys.stages:
        for s in stage:
            if id(s.space) not in names:
                base = s.space.name if s.space.name not in names.values() else f"{s.space.name}_{len(names)}"
                names[id(s.space)] = base
    spaces = {}
    for stage in sys.stages:
        for s in stage:
            spaces.setdefault(names[id(s.space)], _space_spec(s.space))
    doc = {
        "name": sys.name,
        "spaces": spaces,
        "stages": [[[s.size, names[id(s.space)]] for s in stage] for stage in sys.stages],
        "bonds": [{"partial": [{"source": t, "target": l, "multiplicity": len(h.maps),
                                "maps": [_map_spec(m) for m in h.maps]}
                               for (t, l), h in sorted(b.partial.items())]}
                  for b in sys.bonds],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)
