"""Initial-data and test-function descriptors.

A descriptor is a small immutable description of a function on the line
that can be sampled onto any grid. Descriptors add and scale::

    phi = gaussian(mass=1.5, width=0.5) + const(0.2)

and the same text form is accepted by :func:`parse_descriptor`, which is
what the config reader uses.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Descriptor",
    "Constant",
    "GaussianBump",
    "CutoffBump",
    "Sine",
    "Table",
    "Sum",
    "const",
    "gaussian",
    "cutoff_bump",
    "sine",
    "table",
    "parse_descriptor",
    "DescriptorError",
]


class DescriptorError(ValueError):
    pass


class Descriptor:
    #: finite total mass on the line (L^1-type data)
    integrable = True

    def __call__(self, x):
        raise NotImplementedError

    def sample(self, spec) -> np.ndarray:
        return np.broadcast_to(np.asarray(self(spec.x), dtype=np.float64), (spec.N,)).copy()

    def __add__(self, other):
        if not isinstance(other, Descriptor):
            return NotImplemented
        return Sum((self, other))

    def __mul__(self, c):
        if isinstance(c, Descriptor):
            return NotImplemented
        return self.scaled(float(c))

    __rmul__ = __mul__

    def scaled(self, c: float) -> "Descriptor":
        raise NotImplementedError

    @property
    def sup(self) -> float:
        """Upper bound on ``|f|`` over the line."""
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Descriptor):
    c: float
    integrable = False

    def __call__(self, x):
        return np.full(np.shape(x), self.c, dtype=np.float64)

    def scaled(self, c):
        return Constant(self.c * c)

    @property
    def sup(self):
        return abs(self.c)

    def __str__(self):
        return f"const({self.c!r})"


@dataclass(frozen=True)
class GaussianBump(Descriptor):
    """``amplitude * exp(-(x - center)**2 / (2 width**2))``."""

    amplitude: float
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise DescriptorError(f"gaussian width must be positive, got {self.width}")

    @classmethod
    def with_mass(cls, mass: float, center: float = 0.0, width: float = 1.0):
        return cls(mass / (width * math.sqrt(2 * math.pi)), center, width)

    @property
    def mass(self) -> float:
        return self.amplitude * self.width * math.sqrt(2 * math.pi)

    def __call__(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.center) / self.width
        return self.amplitude * np.exp(-0.5 * z * z)

    def scaled(self, c):
        return GaussianBump(self.amplitude * c, self.center, self.width)

    @property
    def sup(self):
        return abs(self.amplitude)

    def __str__(self):
        return f"gaussian(amplitude={self.amplitude!r}, center={self.center!r}, width={self.width!r})"


@dataclass(frozen=True)
class CutoffBump(Descriptor):
    """``amplitude * exp(1/(x**2 - n**2))`` on ``(-n, n)``, zero outside.

    This is the smooth cutoff weight used to approximate bounded data by
    compactly supported data; ``amplitude=1, n=1`` gives ``e**-1`` at 0.
    """

    amplitude: float
    n: float = 1.0

    def __post_init__(self):
        if not self.n > 0:
            raise DescriptorError(f"cutoff radius must be positive, got {self.n}")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(np.shape(x))
        inside = np.abs(x) < self.n
        xi = x[inside]
        out[inside] = self.amplitude * np.exp(1.0 / (xi * xi - self.n * self.n))
        return out

    def scaled(self, c):
        return CutoffBump(self.amplitude * c, self.n)

    @property
    def sup(self):
        return abs(self.amplitude) * math.exp(-1.0 / self.n**2)

    def __str__(self):
        return f"cutoff_bump(amplitude={self.amplitude!r}, n={self.n!r})"


@dataclass(frozen=True)
class Sine(Descriptor):
    """``amplitude * sin(k x)``. Periodic on ``[-L, L)`` when ``k L / pi`` is an integer."""

    amplitude: float
    k: float = 1.0
    integrable = False

    def __call__(self, x):
        return self.amplitude * np.sin(self.k * np.asarray(x, dtype=np.float64))

    def scaled(self, c):
        return Sine(self.amplitude * c, self.k)

    @property
    def sup(self):
        return abs(self.amplitude)

    def __str__(self):
        return f"sine(amplitude={self.amplitude!r}, k={self.k!r})"


@dataclass(frozen=True)
class Table(Descriptor):
    """Explicit grid values; only samples onto a grid with matching ``N``."""

    values: tuple = field(default_factory=tuple)
    integrable = False

    def __call__(self, x):
        raise DescriptorError("a table descriptor has no values off its grid")

    def sample(self, spec):
        if len(self.values) != spec.N:
            raise DescriptorError(f"table has {len(self.values)} values, grid has N={spec.N}")
        return np.array(self.values, dtype=np.float64)

    def scaled(self, c):
        return Table(tuple(c * v for v in self.values))

    @property
    def sup(self):
        return max((abs(v) for v in self.values), default=0.0)

    def __str__(self):
        return "table(" + ", ".join(repr(v) for v in self.values) + ")"


@dataclass(frozen=True)
class Sum(Descriptor):
    terms: tuple

    @property
    def integrable(self):
        return all(t.integrable for t in self.terms)

    def __call__(self, x):
        return sum(t(x) for t in self.terms)

    def sample(self, spec):
        return sum(t.sample(spec) for t in self.terms)

    def scaled(self, c):
        return Sum(tuple(t.scaled(c) for t in self.terms))

    @property
    def sup(self):
        return sum(t.sup for t in self.terms)

    def __add__(self, other):
        if isinstance(other, Sum):
            return Sum(self.terms + other.terms)
        if isinstance(other, Descriptor):
            return Sum(self.terms + (other,))
        return NotImplemented

    def __str__(self):
        return " + ".join(str(t) for t in self.terms)


def const(c):
    return Constant(float(c))


def gaussian(amplitude=None, center=0.0, width=1.0, *, mass=None):
    if (amplitude is None) == (mass is None):
        raise DescriptorError("gaussian needs exactly one of amplitude= or mass=")
    if mass is not None:
        return GaussianBump.with_mass(float(mass), float(center), float(width))
    return GaussianBump(float(amplitude), float(center), float(width))


def cutoff_bump(amplitude=1.0, n=1.0):
    return CutoffBump(float(amplitude), float(n))


def sine(amplitude=1.0, k=1.0):
    return Sine(float(amplitude), float(k))


def table(*values):
    return Table(tuple(float(v) for v in values))


_CONSTRUCTORS = {
    "const": const,
    "constant": const,
    "gaussian": gaussian,
    "cutoff_bump": cutoff_bump,
    "sine": sine,
    "table": table,
}
_NAMES = {"pi": math.pi}


def parse_descriptor(text: str) -> Descriptor:
    """Parse ``"gaussian(mass=1) + 0.2*const(1)"``-style text.

    Grammar: a sum of terms; a term is ``name(args)`` optionally multiplied
    by a numeric factor on either side. Numeric arguments may use ``pi``
    and arithmetic (``k = 4*pi/5``). A bare number means a constant.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise DescriptorError(f"cannot parse descriptor {text!r}: {exc.msg}") from None
    return _to_descriptor(tree.body, text)


def _number(node, text) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _number(node.operand, text)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
        a, b = _number(node.left, text), _number(node.right, text)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        return a / b
    raise DescriptorError(f"expected a number in {text!r}")


def _is_number(node) -> bool:
    try:
        _number(node, "")
        return True
    except DescriptorError:
        return False


def _to_descriptor(node, text) -> Descriptor:
    if _is_number(node):
        return const(_number(node, text))
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Add):
            return _to_descriptor(node.left, text) + _to_descriptor(node.right, text)
        if isinstance(node.op, ast.Sub):
            return _to_descriptor(node.left, text) + (-1.0) * _to_descriptor(node.right, text)
        if isinstance(node.op, ast.Mult):
            if _is_number(node.left):
                return _number(node.left, text) * _to_descriptor(node.right, text)
            if _is_number(node.right):
                return _number(node.right, text) * _to_descriptor(node.left, text)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return (-1.0) * _to_descriptor(node.operand, text)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        ctor = _CONSTRUCTORS.get(node.func.id)
        if ctor is None:
            raise DescriptorError(
                f"unknown descriptor kind {node.func.id!r}; known: {', '.join(sorted(_CONSTRUCTORS))}"
            )
        args = [_number(a, text) for a in node.args]
        kwargs = {kw.arg: _number(kw.value, text) for kw in node.keywords}
        try:
            return ctor(*args, **kwargs)
        except TypeError as exc:
            raise DescriptorError(f"bad arguments for {node.func.id}: {exc}") from None
    raise DescriptorError(f"unsupported expression in descriptor {text!r}")
