"""Flat key = value run configuration.

The format is one ``key = value`` pair per line, ``#`` comments, and
dotted keys for grouped parameters (``kernel.scale = 1.0``).  Unknown
keys are rejected with the offending line number.
"""

import math
import re
from dataclasses import dataclass, field

from . import fem
from .energy import NONLINEARITY_NAMES, nonlinearity_from_name
from .errors import ConfigError
from .kernels import KERNEL_NAMES, kernel_from_name
from .mountain_pass import SolverConfig

__all__ = ["RunSpec", "parse_config_text", "parse_config_file"]

_KERNEL_PARAM_KEYS = {
    "exponential": {"scale"},
    "gaussian": {"scale"},
    "mexican_hat": {"a", "b", "A", "B"},
    "logistic": {"a", "b"},
    "power_law": {"a", "p"},
}

_SCALAR_KEYS = {
    "domain.left", "domain.right", "constraint", "neumann.extension",
    "kernel", "nonlinearity", "h", "h_list", "epsilon", "delta",
    "initial_guess", "quad_order", "solver.max_iterations",
    "solver.max_halvings", "solver.grounding_rel", "solver.direction_reg",
    "output.solution", "output.log", "output.report", "output.plot",
}
_KERNEL_KEYS = {"kernel.scale", "kernel.a", "kernel.b", "kernel.A",
                "kernel.B", "kernel.p"}
_ALL_KEYS = _SCALAR_KEYS | _KERNEL_KEYS

_STEP_RE = re.compile(r"^step\(\s*([^\s,]+)\s*,\s*([^\s)]+)\s*\)$")


@dataclass
class RunSpec:
    """Validated settings of one solver run or convergence study."""

    domain: tuple = (-math.pi, math.pi)
    constraint: str = "dirichlet"
    extension: float = 1.5
    kernel_name: str = "exponential"
    kernel_params: dict = field(default_factory=dict)
    nonlinearity_name: str = "cubic"
    h: float = None
    h_list: tuple = None
    epsilon: float = 1e-3
    delta: float = 1.0
    initial_guess: str = "sine"
    quad_order: int = 4
    max_iterations: int = 10000
    max_halvings: int = 60
    grounding_rel: float = 1e-4
    direction_reg: float = 0.25
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.constraint not in ("dirichlet", "neumann"):
            raise ConfigError(f"constraint must be dirichlet or neumann, "
                              f"got {self.constraint!r}", key="constraint")
        if self.kernel_name not in KERNEL_NAMES:
            raise ConfigError(f"unknown kernel {self.kernel_name!r}",
                              key="kernel")
        bad = set(self.kernel_params) - _KERNEL_PARAM_KEYS[self.kernel_name]
        if bad:
            raise ConfigError(
                f"kernel parameter(s) {sorted(bad)} not valid for "
                f"kernel {self.kernel_name!r}", key="kernel")
        if self.nonlinearity_name not in NONLINEARITY_NAMES:
            raise ConfigError(f"unknown nonlinearity "
                              f"{self.nonlinearity_name!r}",
                              key="nonlinearity")
        if self.h is None and not self.h_list:
            raise ConfigError("one of h or h_list is required", key="h")
        if self.h is not None and self.h_list:
            raise ConfigError("h and h_list are mutually exclusive", key="h")
        if self.domain[1] <= self.domain[0]:
            raise ConfigError("domain.right must exceed domain.left",
                              key="domain.right")
        self._parse_guess()  # validates eagerly
        try:
            self.make_kernel()
        except ValueError as exc:
            raise ConfigError(str(exc), key="kernel") from exc

    # -- factories ------------------------------------------------------------

    def make_kernel(self):
        return kernel_from_name(self.kernel_name, **self.kernel_params)

    def make_nonlinearity(self):
        return nonlinearity_from_name(self.nonlinearity_name)

    def build_mesh(self, h):
        if self.constraint == "dirichlet":
            return fem.build_mesh(self.domain[0], self.domain[1], h)
        return fem.build_extended_mesh(self.domain, h, self.extension)

    def solver_config(self, check_invariants=False):
        return SolverConfig(epsilon=self.epsilon, delta=self.delta,
                            max_iterations=self.max_iterations,
                            max_halvings=self.max_halvings,
                            grounding_rel=self.grounding_rel,
                            direction_reg=self.direction_reg,
                            check_invariants=check_invariants)

    def _parse_guess(self):
        guess = self.initial_guess
        if guess == "sine":
            return ("sine",)
        m = _STEP_RE.match(guess)
        if m:
            try:
                return ("step", float(m.group(1)), float(m.group(2)))
            except ValueError:
                raise ConfigError(f"malformed step bounds in {guess!r}",
                                  key="initial_guess") from None
        if guess.endswith(".csv"):
            return ("csv", guess)
        raise ConfigError(
            f"initial_guess must be sine, step(a,b) or a .csv path, "
            f"got {guess!r}", key="initial_guess")

    def initial_guess_fe(self, mesh):
        kind = self._parse_guess()
        if kind[0] == "sine":
            constraint = "dirichlet" if self.constraint == "dirichlet" else None
            return fem.interpolate(mesh, math.sin, constraint=constraint)
        if kind[0] == "step":
            return fem.step_function(mesh, kind[1], kind[2])
        return fem.read_function_csv(kind[1], mesh)

    # -- echo -------------------------------------------------------------------

    def echo_items(self):
        """Canonical (key, value) pairs; parsing them back gives an equal RunSpec."""
        items = [
            ("domain.left", repr(self.domain[0])),
            ("domain.right", repr(self.domain[1])),
            ("constraint", self.constraint),
            ("kernel", self.kernel_name),
        ]
        for k, v in sorted(self.kernel_params.items()):
            items.append((f"kernel.{k}", repr(v)))
        items.append(("nonlinearity", self.nonlinearity_name))
        if self.constraint == "neumann":
            items.append(("neumann.extension", repr(self.extension)))
        if self.h is not None:
            items.append(("h", repr(self.h)))
        else:
            items.append(("h_list", " ".join(repr(h) for h in self.h_list)))
        items += [
            ("epsilon", repr(self.epsilon)),
            ("delta", repr(self.delta)),
            ("initial_guess", self.initial_guess),
            ("quad_order", str(self.quad_order)),
            ("solver.max_iterations", str(self.max_iterations)),
            ("solver.max_halvings", str(self.max_halvings)),
            ("solver.grounding_rel", repr(self.grounding_rel)),
            ("solver.direction_reg", repr(self.direction_reg)),
        ]
        for k, v in sorted(self.outputs.items()):
            items.append((f"output.{k}", v))
        return items


def _parse_lines(text):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' on line {lineno}: "
                              f"{raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown key {key!r} on line {lineno}",
                              line=lineno, key=key)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r} on line {lineno}",
                              line=lineno, key=key)
        if not value:
            raise ConfigError(f"empty value for {key!r} on line {lineno}",
                              line=lineno, key=key)
        pairs[key] = (value, lineno)
    return pairs


def _take_float(pairs, key, default=None):
    if key not in pairs:
        return default
    value, lineno = pairs.pop(key)
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}",
                          line=lineno, key=key) from None


def _take_int(pairs, key, default=None):
    if key not in pairs:
        return default
    value, lineno = pairs.pop(key)
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}",
                          line=lineno, key=key) from None


def _take_str(pairs, key, default=None):
    if key not in pairs:
        return default
    return pairs.pop(key)[0]


def parse_config_text(text):
    """Parse a flat key = value configuration into a RunSpec."""
    pairs = _parse_lines(text)

    kernel_params = {}
    for key in list(pairs):
        if key.startswith("kernel."):
            pname = key.split(".", 1)[1]
            kernel_params[pname] = _take_float(pairs, key)

    h_list = None
    if "h_list" in pairs:
        value, lineno = pairs.pop("h_list")
        try:
            h_list = tuple(float(tok) for tok in value.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"h_list must be a list of numbers, got "
                              f"{value!r}", line=lineno, key="h_list") from None
        if not h_list:
            raise ConfigError("h_list is empty", line=lineno, key="h_list")

    outputs = {}
    for key in ("solution", "log", "report", "plot"):
        path = _take_str(pairs, f"output.{key}")
        if path is not None:
            outputs[key] = path

    spec = RunSpec(
        domain=(_take_float(pairs, "domain.left", -math.pi),
                _take_float(pairs, "domain.right", math.pi)),
        constraint=_take_str(pairs, "constraint", "dirichlet"),
        extension=_take_float(pairs, "neumann.extension", 1.5),
        kernel_name=_take_str(pairs, "kernel", "exponential"),
        kernel_params=kernel_params,
        nonlinearity_name=_take_str(pairs, "nonlinearity", "cubic"),
        h=_take_float(pairs, "h"),
        h_list=h_list,
        epsilon=_take_float(pairs, "epsilon", 1e-3),
        delta=_take_float(pairs, "delta", 1.0),
        initial_guess=_take_str(pairs, "initial_guess", "sine"),
        quad_order=_take_int(pairs, "quad_order", 4),
        max_iterations=_take_int(pairs, "solver.max_iterations", 10000),
        max_halvings=_take_int(pairs, "solver.max_halvings", 60),
        grounding_rel=_take_float(pairs, "solver.grounding_rel", 1e-4),
        direction_reg=_take_float(pairs, "solver.direction_reg", 0.25),
        outputs=outputs,
    )
    assert not pairs, f"unconsumed keys: {sorted(pairs)}"
    return spec


def parse_config_file(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
