"""
Command-line text formats
Operator specs (linear:A=[[...]], speclag:c=<float>, perturbed:eps=<float>) and grid specs (m or nlat x nlon)
"""

import json
import math
import re
from typing import Optional

from core.errors import DimensionMismatch, ParseError
from core.operators import EllipticOperator, LinearOperator, PerturbedLinear, SpecialLagrangian
from core.poly_core import SymMatrix
from core.spherical_spectrum import SphereGrid

OPERATOR_KEYS = {
    "linear": "A",
    "speclag": "c",
    "perturbed": "eps",
}

_GRID = re.compile(r"^\s*(\d+)\s*(?:[xX]\s*(\d+))?\s*$")


def _parse_float(text: str, spec: str, position: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", spec, position) from None
    if not math.isfinite(value):
        raise ParseError("value must be finite", spec, position)
    return value


def parse_operator_spec(spec: str, n: Optional[int] = None) -> EllipticOperator:
    """Build an operator from its spec string; speclag and perturbed need n"""
    colon = spec.find(":")
    if colon < 0:
        raise ParseError("expected '<kind>:<key>=<value>'", spec, 0)
    kind = spec[:colon].strip().lower()
    if kind not in OPERATOR_KEYS:
        raise ParseError(f"unknown operator kind {kind!r} (expected one of {', '.join(OPERATOR_KEYS)})", spec, 0)

    body_start = colon + 1
    equals = spec.find("=", body_start)
    if equals < 0:
        raise ParseError("expected '='", spec, body_start)
    key = spec[body_start:equals].strip()
    if key != OPERATOR_KEYS[kind]:
        raise ParseError(f"{kind} expects key {OPERATOR_KEYS[kind]!r}, got {key!r}", spec, body_start)
    value_start = equals + 1
    value = spec[value_start:].strip()

    if kind == "linear":
        try:
            rows = json.loads(value)
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed matrix ({e.msg})", spec, value_start + e.pos) from None
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise ParseError("A must be a nested list of rows", spec, value_start)
        a = SymMatrix(rows)
        if n is not None and a.n != n:
            raise DimensionMismatch(f"A is {a.n}x{a.n} but n = {n}")
        return LinearOperator(a)

    if n is None:
        raise ParseError(f"{kind} operator needs the dimension n", spec, None)
    number = _parse_float(value, spec, value_start)
    if kind == "speclag":
        return SpecialLagrangian(number, n)
    return PerturbedLinear(number, n)


def format_operator_spec(op: EllipticOperator) -> str:
    """Inverse of parse_operator_spec"""
    if isinstance(op, LinearOperator):
        return f"linear:A={json.dumps(op.a.to_list())}"
    if isinstance(op, SpecialLagrangian):
        return f"speclag:c={op.c!r}"
    if isinstance(op, PerturbedLinear):
        return f"perturbed:eps={op.eps!r}"
    raise TypeError(f"no spec format for {type(op).__name__}")


def parse_grid(spec: str, n: Optional[int] = None) -> SphereGrid:
    """'m' for the circle, 'nlat x nlon' for S^2"""
    match = _GRID.match(spec)
    if not match:
        raise ParseError("expected 'm' or 'nlat x nlon'", spec, 0)
    first, second = match.group(1), match.group(2)
    if second is None:
        if n not in (None, 2):
            raise ParseError(f"a single resolution describes the circle, not n = {n}", spec, 0)
        return SphereGrid.circle(int(first))
    if n not in (None, 3):
        raise ParseError(f"a latitude x longitude grid describes S^2, not n = {n}", spec, 0)
    return SphereGrid.latlon(int(first), int(second))
