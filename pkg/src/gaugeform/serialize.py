"""JSON forms of exact objects: rationals are {"num", "den"} pairs, never floats."""

from __future__ import annotations

import json
from fractions import Fraction

from .errors import ParseError
from .gauge import Const, Exp, GaugeTransform, Ramify, Shear
from .liealg import GroupContext
from .puiseux import INF, MatSeries
from .scalars import NumberField, Scalar


def rational(x: Fraction):
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def parse_rational(obj) -> Fraction:
    if isinstance(obj, dict) and "num" in obj:
        return Fraction(int(obj["num"]), int(obj.get("den", 1)))
    if isinstance(obj, bool) or isinstance(obj, float):
        raise ParseError(f"not an exact rational: {obj!r}")
    if isinstance(obj, (int, str)):
        try:
            return Fraction(obj)
        except ValueError as exc:
            raise ParseError(f"not a rational: {obj!r}") from exc
    raise ParseError(f"not a rational: {obj!r}")


def scalar(x):
    if isinstance(x, Scalar):
        return {"coords": [rational(c) for c in x.c]}
    return rational(x)


def parse_scalar(obj, fld: NumberField):
    if isinstance(obj, dict) and "coords" in obj:
        coords = [parse_rational(c) for c in obj["coords"]]
        if len(coords) != fld.degree:
            raise ParseError(f"expected {fld.degree} power-basis coordinates, got {len(coords)}")
        return fld.element(coords)
    return parse_rational(obj)


def matrix(m):
    return [[scalar(x) for x in row] for row in m]


def parse_matrix(obj, n, fld):
    if not isinstance(obj, list) or len(obj) != n or any(not isinstance(r, list) or len(r) != n for r in obj):
        raise ParseError(f"expected a {n}x{n} matrix")
    return tuple(tuple(parse_scalar(x, fld) for x in row) for row in obj)


def field_spec(fld: NumberField):
    return {"cyclotomic_order": fld.n, "minpoly": [rational(c) for c in fld.minpoly] if fld.minpoly else None}


def parse_field(obj, degree_cap=None) -> NumberField:
    obj = obj or {}
    mp = obj.get("minpoly")
    kwargs = {} if degree_cap is None else {"degree_cap": degree_cap}
    try:
        return NumberField(int(obj.get("cyclotomic_order", 1)),
                           [parse_rational(c) for c in mp] if mp else None, **kwargs)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def series(a: MatSeries):
    return {"ramification": a.ram,
            "precision": None if a.prec == INF else rational(a.t_prec),
            "terms": [dict(rational(e), matrix=matrix(m)) for e, m in a.terms()]}


def connection(a: MatSeries, ctx: GroupContext, fld: NumberField | None = None):
    out = series(a)
    out["group"] = ctx.to_json()
    out["field"] = field_spec(fld or NumberField())
    return out


def parse_connection(obj, degree_cap=None, precision=None):
    """(series, context, field) from a connection-file object, validated."""
    if not isinstance(obj, dict):
        raise ParseError("connection file must be a JSON object")
    try:
        ctx = GroupContext.from_json(obj["group"])
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ParseError(f"bad group literal: {exc}") from exc
    fld = parse_field(obj.get("field"), degree_cap)
    ram = int(obj.get("ramification", 1))
    if ram < 1:
        raise ParseError("ramification must be positive")
    prec = obj.get("precision")
    prec = INF if prec is None else parse_rational(prec)
    if precision is not None:
        prec = min(prec, Fraction(precision))
    terms, seen = [], set()
    for t in obj.get("terms", []):
        e = parse_rational(t)
        if e in seen:
            raise ParseError(f"duplicate exponent {e}")
        seen.add(e)
        if (e * ram).denominator != 1:
            raise ParseError(f"exponent {e} is not in (1/{ram})Z")
        m = parse_matrix(t.get("matrix"), ctx.n, fld)
        if not ctx.contains(m):
            raise ParseError(f"coefficient at t^{e} is not in Lie({ctx.kind})")
        if e < prec:
            terms.append((e, m))
        elif precision is None:
            raise ParseError(f"exponent {e} is not below the precision {prec}")
    return MatSeries.from_terms(terms, ctx.n, ram, prec), ctx, fld


def gauge(g: GaugeTransform, fld: NumberField | None = None):
    atoms = []
    for a in g.atoms:
        if isinstance(a, Exp):
            atoms.append({"type": "exp", "terms": [dict(rational(q), matrix=matrix(m)) for q, m in a.terms]})
        elif isinstance(a, Shear):
            atoms.append({"type": "shear", "cocharacter": list(a.lam), "d": a.d})
        elif isinstance(a, Const):
            atoms.append({"type": "const", "P": matrix(a.P), "Pinv": matrix(a.Pinv)})
        elif isinstance(a, Ramify):
            atoms.append({"type": "ramify", "c": a.c})
    out = {"base_ramification": g.base_ram, "atoms": atoms}
    if fld is not None:
        out["field"] = field_spec(fld)
    return out


def parse_gauge(obj, n, fld) -> GaugeTransform:
    """The certificate's own "field" entry, when present, overrides ``fld``."""
    if isinstance(obj, dict) and obj.get("field"):
        fld = parse_field(obj["field"], fld.degree_cap)
    atoms = []
    try:
        for a in obj["atoms"]:
            kind = a["type"]
            if kind == "exp":
                atoms.append(Exp(tuple((parse_rational(t), parse_matrix(t["matrix"], n, fld)) for t in a["terms"])))
            elif kind == "shear":
                atoms.append(Shear(tuple(int(x) for x in a["cocharacter"]), int(a.get("d", 1))))
            elif kind == "const":
                p = parse_matrix(a["P"], n, fld)
                pinv = parse_matrix(a["Pinv"], n, fld) if "Pinv" in a else None
                atoms.append(Const(p, pinv))
            elif kind == "ramify":
                atoms.append(Ramify(int(a["c"])))
            else:
                raise ParseError(f"unknown atom type {kind}")
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad certificate: {exc}") from exc
    return GaugeTransform(atoms, int(obj.get("base_ramification", 1)))


def canonical(cf):
    return {"ramification": cf.ram,
            "levels": [rational(r) for r in cf.levels],
            "irregular": [matrix(d) for d in cf.irr_coeffs],
            "residue": matrix(cf.residue),
            "normalized": cf.normalized}


def exact(obj):
    """Recursively convert Fractions, scalars, matrices and rational strings for output."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, Scalar):
        return scalar(obj)
    if isinstance(obj, str):
        try:
            return rational(Fraction(obj))
        except ValueError:
            return obj
    if isinstance(obj, MatSeries):
        return series(obj)
    if isinstance(obj, GroupContext):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k): exact(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [exact(v) for v in obj]
    if obj == INF:
        return None
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
