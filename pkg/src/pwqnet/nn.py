"""Feed-forward networks with ReLU and max-out activations.

A network maps an augmented input ``xi`` through hidden layers
``y = g(W y_prev + b)`` and a final affine output map. For a max-out layer
with ``p`` channels the preactivation has ``p * width`` rows and neuron
``k`` takes the maximum over rows ``k*p, ..., k*p + p - 1``.

Builders:

* :func:`build_maxout_net` -- width 2, ``p = s`` channels; the first neuron
  evaluates ``max_i(phi_i + h_i)``, the second ``max_i h_i``, the output is
  their difference.
* :func:`build_relu_net` -- one ReLU layer of width ``2s``.

Both expect ``xi = (x, x**2)``, see :func:`augment_1d`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .lifting import check_lift_conditions
from .pwq import DEFAULT_TOL, Pwa1D, Pwq1D, ToleranceConfig, validate_pwq


class WeightSchemaError(ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class InfeasibleLiftError(ValueError):
    """The lift does not satisfy the dominance conditions."""

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"lift violates {len(report.violations)} dominance condition(s); "
            f"max slack {report.max_slack:.6g}")


def augment_1d(x):
    """``xi(x) = (x, x**2)``; a 1-D array of points gives shape ``(N, 2)``."""
    x = np.asarray(x, dtype=float)
    return np.stack([x, x * x], axis=-1)


def augment_quadratic(x):
    """``(x_1..x_n, x_i*x_j for i <= j)``, e.g. ``(x1, x2, x1^2, x1 x2, x2^2)``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    mono = [x[..., i] * x[..., j] for i in range(n) for j in range(i, n)]
    return np.concatenate([x, np.stack(mono, axis=-1)], axis=-1)


@dataclass(frozen=True)
class Layer:
    W: np.ndarray
    b: np.ndarray
    activation: str = "relu"
    channels: int = 1

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.activation not in ("relu", "maxout"):
            raise ValueError(f"unknown activation {self.activation!r}")
        p = int(self.channels)
        if self.activation == "relu" and p != 1:
            raise ValueError("ReLU layers have exactly one channel")
        if p < 1 or W.shape[0] % p:
            raise ValueError(
                f"{W.shape[0]} preactivation rows are not divisible by {p} channels")
        if b.size != W.shape[0]:
            raise ValueError(f"bias has {b.size} entries for {W.shape[0]} rows")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "channels", p)

    @property
    def width(self):
        return self.W.shape[0] // self.channels

    def preactivation(self, y):
        return y @ self.W.T + self.b

    def activate(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return z.reshape(*z.shape[:-1], self.width, self.channels).max(axis=-1)


@dataclass(frozen=True)
class FeedForwardNet:
    layers: tuple
    W_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        layers = tuple(self.layers)
        W = np.atleast_2d(np.asarray(self.W_out, dtype=float))
        b = np.asarray(self.b_out, dtype=float).reshape(-1)
        for k in range(1, len(layers)):
            if layers[k].W.shape[1] != layers[k - 1].width:
                raise ValueError(
                    f"layer {k} expects {layers[k].W.shape[1]} inputs, "
                    f"layer {k - 1} has width {layers[k - 1].width}")
        if layers and W.shape[1] != layers[-1].width:
            raise ValueError(
                f"output map expects {W.shape[1]} inputs, last layer has width "
                f"{layers[-1].width}")
        if b.size != W.shape[0]:
            raise ValueError(f"output bias has {b.size} entries for {W.shape[0]} rows")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "W_out", W)
        object.__setattr__(self, "b_out", b)

    @property
    def input_dim(self):
        return self.layers[0].W.shape[1] if self.layers else self.W_out.shape[1]

    @property
    def output_dim(self):
        return self.W_out.shape[0]

    def hidden(self, xi):
        """Outputs of every hidden layer, first to last."""
        y = _check_input(self, xi)
        outs = []
        for layer in self.layers:
            y = layer.activate(layer.preactivation(y))
            outs.append(y)
        return outs

    def __call__(self, xi):
        return eval_net(self, xi)

    def parameter_count(self):
        return sum(L.W.size + L.b.size for L in self.layers) + self.W_out.size + self.b_out.size


def _check_input(net, xi):
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0 or xi.shape[-1] != net.input_dim:
        raise ValueError(f"input has trailing dimension {xi.shape[-1:] or ()}; "
                         f"network expects {net.input_dim}")
    return xi


def eval_net(net: FeedForwardNet, xi):
    """Forward pass. ``xi`` has shape ``(w0,)`` or ``(N, w0)``; the output
    has shape ``(out,)`` or ``(N, out)``."""
    y = _check_input(net, xi)
    for layer in net.layers:
        y = layer.activate(layer.preactivation(y))
    return y @ net.W_out.T + net.b_out


def eval_scalar_net(net, x):
    """Evaluate a net built for a 1D function at raw points ``x``."""
    out = eval_net(net, augment_1d(x))[..., 0]
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_maxout_net(f: Pwq1D, h: Pwa1D, tol: ToleranceConfig = DEFAULT_TOL) -> FeedForwardNet:
    report = check_lift_conditions(f, h, tol)
    if not report.feasible:
        raise InfeasibleLiftError(report)
    s = f.s
    W = np.zeros((2 * s, 2))
    b = np.zeros(2 * s)
    W[:s, 0] = h.alpha + f.l
    W[:s, 1] = f.q
    b[:s] = h.beta + f.c
    W[s:, 0] = h.alpha
    b[s:] = h.beta
    hidden = Layer(W, b, "maxout", s)
    return FeedForwardNet((hidden,), np.array([[1.0, -1.0]]), np.zeros(1))


def build_relu_net(f: Pwq1D, tol: ToleranceConfig = DEFAULT_TOL) -> FeedForwardNet:
    """Width-``2s`` ReLU net that equals ``f`` on its domain.

    Neuron ``i < s`` is the bump ``(x - lo_i)(hi_i - x)`` clipped at zero,
    weighted by ``-q_i``. The remaining ``s`` neurons form a PWA
    interpolant through the breakpoint values whose slopes are the secant
    slopes ``kappa_i = l_i + q_i (lo_i + hi_i)``: one ramp ``hi_1 - x`` and
    ramps ``x - hi_k`` for ``k < s``.
    """
    result = validate_pwq(f, tol)
    if any(v.kind == "continuity" for v in result.violations):
        raise ValueError("ReLU construction needs a continuous PWQ function")
    s = f.s
    lo, hi, q, l = f.lower, f.upper, f.q, f.l
    kappa = l + q * (lo + hi)
    W1 = np.zeros((2 * s, 2))
    b1 = np.zeros(2 * s)
    W1[:s, 0] = lo + hi
    W1[:s, 1] = -1.0
    b1[:s] = -lo * hi
    W1[s] = (-1.0, 0.0)
    b1[s] = hi[0]
    W1[s + 1:, 0] = 1.0
    b1[s + 1:] = -hi[:-1]
    W2 = np.zeros(2 * s)
    W2[:s] = -q
    # the left ramp hi_1 - x decreases, so it enters with weight -kappa_1
    W2[s] = -kappa[0]
    if s > 1:
        W2[s + 1] = kappa[1]
        W2[s + 2:] = np.diff(kappa[1:])
    b2 = f.segment_value(0, hi[0])
    return FeedForwardNet((Layer(W1, b1, "relu"),), W2[None, :], np.array([b2]))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _activation_json(layer):
    return "relu" if layer.activation == "relu" else {"maxout": layer.channels}


def export_weights(net: FeedForwardNet) -> dict:
    return {
        "layers": [{"W": L.W.tolist(), "b": L.b.tolist(), "activation": _activation_json(L)}
                   for L in net.layers],
        "output": {"W": net.W_out.tolist(), "b": net.b_out.tolist()},
    }


def _matrix(obj, path):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise WeightSchemaError(path, "expected a non-empty list of rows")
    widths = {len(r) for r in obj}
    if len(widths) != 1:
        raise WeightSchemaError(path, "rows have different lengths")
    try:
        W = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise WeightSchemaError(path, "entries must be numbers") from None
    if not np.all(np.isfinite(W)):
        raise WeightSchemaError(path, "entries must be finite")
    return W


def _vector(obj, path):
    if not isinstance(obj, list):
        raise WeightSchemaError(path, "expected a list of numbers")
    try:
        v = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise WeightSchemaError(path, "entries must be numbers") from None
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise WeightSchemaError(path, "expected a flat list of finite numbers")
    return v


def import_weights(data) -> FeedForwardNet:
    if not isinstance(data, dict):
        raise WeightSchemaError("$", "expected an object")
    for key in ("layers", "output"):
        if key not in data:
            raise WeightSchemaError(f"$.{key}", "missing")
    if not isinstance(data["layers"], list):
        raise WeightSchemaError("$.layers", "expected a list")
    layers = []
    for k, entry in enumerate(data["layers"]):
        path = f"$.layers[{k}]"
        if not isinstance(entry, dict):
            raise WeightSchemaError(path, "expected an object")
        for key in ("W", "b", "activation"):
            if key not in entry:
                raise WeightSchemaError(f"{path}.{key}", "missing")
        W = _matrix(entry["W"], f"{path}.W")
        b = _vector(entry["b"], f"{path}.b")
        act = entry["activation"]
        if act == "relu":
            kind, p = "relu", 1
        elif isinstance(act, dict) and set(act) == {"maxout"}:
            p = act["maxout"]
            if not isinstance(p, int) or isinstance(p, bool) or p < 1:
                raise WeightSchemaError(f"{path}.activation.maxout",
                                        "channel count must be a positive integer")
            kind = "maxout"
        else:
            raise WeightSchemaError(f"{path}.activation",
                                    'expected "relu" or {"maxout": p}')
        if W.shape[0] % p:
            raise WeightSchemaError(
                f"{path}.activation.maxout",
                f"layer {k}: {W.shape[0]} preactivation rows not divisible by p={p}")
        if b.size != W.shape[0]:
            raise WeightSchemaError(f"{path}.b",
                                    f"{b.size} biases for {W.shape[0]} rows")
        expected_in = layers[-1].width if layers else None
        if expected_in is not None and W.shape[1] != expected_in:
            raise WeightSchemaError(f"{path}.W",
                                    f"{W.shape[1]} columns, previous layer width {expected_in}")
        layers.append(Layer(W, b, kind, p))
    out = data["output"]
    if not isinstance(out, dict) or "W" not in out or "b" not in out:
        raise WeightSchemaError("$.output", "expected an object with W and b")
    W = _matrix(out["W"], "$.output.W")
    b = _vector(out["b"], "$.output.b")
    if layers and W.shape[1] != layers[-1].width:
        raise WeightSchemaError("$.output.W",
                                f"{W.shape[1]} columns, last layer width {layers[-1].width}")
    if b.size != W.shape[0]:
        raise WeightSchemaError("$.output.b", f"{b.size} biases for {W.shape[0]} rows")
    return FeedForwardNet(tuple(layers), W, b)


def dumps_weights(net):
    return jsonio.dumps(export_weights(net))


def loads_weights(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WeightSchemaError("$", f"invalid JSON: {exc}") from None
    return import_weights(data)
