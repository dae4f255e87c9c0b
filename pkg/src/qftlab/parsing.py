"""Text and JSON forms of groups, fields, matrix rings and their elements.

    Z4xZ2                 {"moduli": [4, 2]}
    GF(9);f=Z^2+1         {"p": 3, "m": 2, "f_plus_coeffs": [1, 0, 1]}
    GF(8)                 (built-in modulus)
    M2(Z3), M2(GF(4))     {"dim": 2, "base": {...}}
"""
from __future__ import annotations

import json
import re
from typing import Union

from .errors import ParseError, StructureError
from .fields import FieldSpec, MatrixRingSpec, ZmodRing, field_basis, matrix_basis
from .groups import CharacterBasis, GroupSpec, product_basis

Target = Union[GroupSpec, FieldSpec, MatrixRingSpec]

_FACTOR = re.compile(r"[zZ](\d+)")
_FIELD = re.compile(r"GF\((\d+)\)\s*(?:;\s*f\s*=\s*(.+))?$", re.IGNORECASE)
_MATRIX = re.compile(r"M(\d+)\((.+)\)$", re.IGNORECASE)
_TERM = re.compile(r"\s*([+-]?)\s*(\d*)\s*(?:(Z)\s*(?:\^\s*(\d+))?)?\s*", re.IGNORECASE)


def parse_group(text: str, offset: int = 0, whole: str | None = None) -> GroupSpec:
    whole = text if whole is None else whole
    moduli, pos = [], 0
    while True:
        m = _FACTOR.match(text, pos)
        if not m:
            raise ParseError("expected a cyclic factor like Z4", whole, offset + pos)
        value = int(m.group(1))
        if value < 2:
            raise ParseError(f"cyclic factor Z{value} must have order >= 2", whole, offset + m.start(1))
        moduli.append(value)
        pos = m.end()
        if pos == len(text):
            return GroupSpec(tuple(moduli))
        if text[pos] not in "xX":
            raise ParseError("expected 'x' between cyclic factors", whole, offset + pos)
        pos += 1


def parse_poly(text: str, p: int, offset: int = 0, whole: str | None = None) -> list[int]:
    """'Z^2+2Z+1' -> [1, 2, 1] (low -> high, reduced mod p)."""
    whole = text if whole is None else whole
    coeffs: dict[int, int] = {}
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or not (m.group(2) or m.group(3)):
            raise ParseError("malformed polynomial term", whole, offset + pos)
        if pos > 0 and not m.group(1):
            raise ParseError("expected '+' or '-' between terms", whole, offset + pos)
        sign = -1 if m.group(1) == "-" else 1
        coef = int(m.group(2)) if m.group(2) else 1
        if m.group(3):
            power = int(m.group(4)) if m.group(4) else 1
        else:
            power = 0
        coeffs[power] = coeffs.get(power, 0) + sign * coef
        pos = m.end()
    if not coeffs:
        raise ParseError("empty polynomial", whole, offset)
    out = [0] * (max(coeffs) + 1)
    for k, c in coeffs.items():
        out[k] = c % p
    return out


def _prime_power(q: int):
    for p in range(2, q + 1):
        if q % p == 0:
            m, rest = 0, q
            while rest % p == 0:
                rest //= p
                m += 1
            return (p, m) if rest == 1 else None
    return None


def parse_field(text: str, offset: int = 0, whole: str | None = None) -> FieldSpec:
    whole = text if whole is None else whole
    m = _FIELD.match(text)
    if not m:
        raise ParseError("expected GF(q) or GF(q);f=<poly>", whole, offset)
    q = int(m.group(1))
    pm = _prime_power(q) if q >= 2 else None
    if pm is None:
        raise ParseError(f"{q} is not a prime power", whole, offset + m.start(1))
    p, deg = pm
    try:
        if m.group(2) is None:
            return FieldSpec.of_order(q)
        coeffs = parse_poly(m.group(2), p, offset + m.start(2), whole)
        if len(coeffs) - 1 != deg:
            raise ParseError(f"modulus must have degree {deg} for GF({q})", whole, offset + m.start(2))
        return FieldSpec.from_plus(p, coeffs)
    except StructureError as exc:
        raise ParseError(str(exc), whole, offset + (m.start(2) if m.group(2) else 0)) from None


def parse_target(text: str) -> Target:
    """Group, field or matrix ring from its text or JSON form."""
    raw = text
    text = text.strip()
    if text.startswith("{"):
        try:
            return from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, raw, exc.pos) from None
    if not text:
        raise ParseError("empty target", raw, 0)
    mm = _MATRIX.match(text)
    if mm:
        dim = int(mm.group(1))
        if dim < 1:
            raise ParseError("matrix size must be >= 1", raw, mm.start(1))
        inner = mm.group(2)
        base = (parse_field(inner, mm.start(2), raw) if inner.upper().startswith("GF")
                else parse_group(inner, mm.start(2), raw))
        if isinstance(base, GroupSpec):
            if base.rank != 1:
                raise ParseError("matrix base ring must be Z_r or GF(q)", raw, mm.start(2))
            base = ZmodRing(base.moduli[0])
        return MatrixRingSpec(base, dim)
    if text.upper().startswith("GF"):
        return parse_field(text, 0, raw)
    return parse_group(text, 0, raw)


def from_json(obj) -> Target:
    if not isinstance(obj, dict):
        raise ParseError("JSON target must be an object", json.dumps(obj), 0)
    try:
        if set(obj) == {"moduli"}:
            return GroupSpec(tuple(obj["moduli"]))
        if set(obj) == {"p", "m", "f_plus_coeffs"}:
            coeffs = obj["f_plus_coeffs"]
            if len(coeffs) != obj["m"] + 1:
                raise StructureError("f_plus_coeffs must have m + 1 entries")
            return FieldSpec.from_plus(obj["p"], coeffs)
        if set(obj) == {"p", "m"}:
            return FieldSpec.of_order(obj["p"] ** obj["m"])
        if set(obj) == {"dim", "base"}:
            base = obj["base"]
            if isinstance(base, dict) and set(base) == {"r"}:
                base = ZmodRing(base["r"])
            else:
                base = from_json(base)
                if isinstance(base, GroupSpec):
                    if base.rank != 1:
                        raise StructureError("matrix base ring must be Z_r or GF(q)")
                    base = ZmodRing(base.moduli[0])
            return MatrixRingSpec(base, obj["dim"])
    except (StructureError, TypeError, KeyError) as exc:
        raise ParseError(str(exc), json.dumps(obj), 0) from None
    raise ParseError(f"unrecognised keys {sorted(obj)}", json.dumps(obj), 0)


def target_json(target: Target) -> dict:
    if isinstance(target, GroupSpec):
        return {"moduli": list(target.moduli)}
    if isinstance(target, FieldSpec):
        return {"p": target.p, "m": target.m, "f_plus_coeffs": list(target.plus_coeffs)}
    base = target.base
    return {"dim": target.dim,
            "base": {"r": base.r} if isinstance(base, ZmodRing) else target_json(base)}


def group_of(target: Target) -> GroupSpec:
    return target if isinstance(target, GroupSpec) else target.group


def natural_basis(target: Target) -> CharacterBasis:
    if isinstance(target, GroupSpec):
        return product_basis(target)
    if isinstance(target, FieldSpec):
        return field_basis(target)
    return matrix_basis(target)


# -- elements ---------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    text = text.strip().strip("()[]")
    return [int(v) for v in re.split(r"[,\s]+", text) if v]


def parse_element(target: Target, text: str) -> tuple:
    text = str(text).strip()
    try:
        if isinstance(target, GroupSpec):
            return target.validate(_int_list(text))
        if isinstance(target, FieldSpec):
            if re.search(r"[zZ]", text):
                coeffs = parse_poly(text, target.p)
                return target.element(coeffs)
            return target.element(_int_list(text))
        rows = json.loads(text)
        return target.element(rows)
    except (ValueError, StructureError, TypeError) as exc:
        raise ParseError(f"bad element for {target}: {exc}", text, 0) from None


def format_element(target: Target, x) -> str:
    if isinstance(target, GroupSpec):
        x = target.validate(x)
        return str(x[0]) if target.rank == 1 else "(" + ",".join(map(str, x)) + ")"
    if isinstance(target, FieldSpec):
        return target.format(x)
    rows = target.matrix(x)
    b = target.base
    return "[" + ",".join("[" + ",".join(b.format(e) for e in r) + "]" for r in rows) + "]"
