"""Affine functions over loop variables."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .polyhedron import InputError
from .rationals import format_rat, rat


@dataclass(frozen=True)
class AffineFunction:
    """f(x) = coeffs . x + constant."""

    coeffs: tuple[Fraction, ...]
    constant: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(rat(c) for c in self.coeffs))
        object.__setattr__(self, "constant", rat(self.constant))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def __call__(self, point):
        if len(point) != len(self.coeffs):
            raise InputError("point dimension mismatch")
        return sum((c * rat(v) for c, v in zip(self.coeffs, point)), self.constant)

    def drop_constant(self) -> "AffineFunction":
        return AffineFunction(self.coeffs, 0)

    def describe(self, names=None) -> str:
        if names is None:
            names = [f"x{i+1}" for i in range(len(self.coeffs))]
        parts = []
        for c, name in zip(self.coeffs, names):
            if c == 0:
                continue
            if c == 1:
                parts.append(("+", name))
            elif c == -1:
                parts.append(("-", name))
            else:
                sign = "-" if c < 0 else "+"
                parts.append((sign, f"{format_rat(abs(c))}{name}"))
        if self.constant != 0 or not parts:
            sign = "-" if self.constant < 0 else "+"
            parts.append((sign, format_rat(abs(self.constant))))
        out = []
        for k, (sign, text) in enumerate(parts):
            if k == 0:
                out.append(text if sign == "+" else f"-{text}")
            else:
                out.append(f"{sign} {text}")
        return " ".join(out)


def parse_affine(text: str, names) -> AffineFunction:
    """Parse 'name:coeff,name:coeff,const:value' into an AffineFunction.

    Unlisted variables get coefficient zero; 'const' sets the constant term.
    """
    coeffs = [Fraction(0)] * len(names)
    constant = Fraction(0)
    index = {name: i for i, name in enumerate(names)}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise InputError(f"bad affine term {chunk!r}; expected name:value")
        name, _, value = chunk.partition(":")
        name = name.strip()
        try:
            val = rat(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad coefficient in {chunk!r}: {exc}") from None
        if name == "const":
            constant = val
        elif name in index:
            coeffs[index[name]] = val
        else:
            raise InputError(f"unknown variable {name!r} in affine function")
    return AffineFunction(tuple(coeffs), constant)


def emit_affine(fn: AffineFunction, names) -> str:
    if len(names) != len(fn.coeffs):
        raise InputError("name list dimension mismatch")
    parts = [
        f"{name}:{format_rat(c)}" for name, c in zip(names, fn.coeffs) if c != 0
    ]
    if fn.constant != 0 or not parts:
        parts.append(f"const:{format_rat(fn.constant)}")
    return ",".join(parts)
