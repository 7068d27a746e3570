"""Feedforward neural field on a periodic 1-D domain.

Architecture: a fixed periodic embedding ``x -> (cos(k_j x), sin(k_j x))``
with ``k_j = 2 pi j / L`` for ``j = 1..F``, then ``hidden_layers`` dense
layers of width ``hidden_width`` with swish activations and a linear output
layer.  The flat parameter vector stores, layer by layer, the weight matrix
(row-major, ``out x in``) followed by the bias, so

    p = (2F + 1) w + (H - 1)(w + 1) w + (w + 1) outputs.

All evaluations are vectorized over a batch of points.  Parameter gradients
use reverse-mode accumulation; spatial derivatives use second-order
forward (Taylor) propagation, so no finite differences enter anywhere.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import astuple, dataclass

import numpy as np
from scipy.special import expit

from .embeddings import make_rng


@dataclass(frozen=True)
class NetworkSpec:
    period_length: float
    embedding_frequencies: int = 1
    hidden_layers: int = 4
    hidden_width: int = 20
    outputs: int = 1

    def __post_init__(self):
        # plain Python scalars keep digest() and checkpoint headers stable
        object.__setattr__(self, "period_length", float(self.period_length))
        if not self.period_length > 0:
            raise ValueError("period_length must be positive")
        for name in ("embedding_frequencies", "hidden_layers", "hidden_width", "outputs"):
            object.__setattr__(self, name, int(getattr(self, name)))
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def layer_dims(self) -> list[tuple[int, int]]:
        """``(out, in)`` of every dense layer, output layer last."""
        w = self.hidden_width
        dims = [(w, 2 * self.embedding_frequencies)]
        dims += [(w, w)] * (self.hidden_layers - 1)
        dims.append((self.outputs, w))
        return dims

    @property
    def num_params(self) -> int:
        return sum(o * i + o for o, i in self.layer_dims())

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.arange(1, self.embedding_frequencies + 1) / self.period_length

    def digest(self) -> str:
        text = ",".join(repr(v) for v in astuple(self))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class NeuralField:
    spec: NetworkSpec
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.shape != (self.spec.num_params,):
            raise ValueError(f"theta has shape {theta.shape}, spec needs ({self.spec.num_params},)")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        object.__setattr__(self, "theta", theta)

    def layers(self):
        return unpack(self.spec, self.theta)


def unpack(spec: NetworkSpec, theta) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split ``theta`` into ``[(W, b), ...]`` views."""
    out, pos = [], 0
    for o, i in spec.layer_dims():
        W = theta[pos:pos + o * i].reshape(o, i)
        pos += o * i
        out.append((W, theta[pos:pos + o]))
        pos += o
    return out


def init_params(spec: NetworkSpec, rng) -> np.ndarray:
    """All weights and biases i.i.d. standard normal."""
    return make_rng(rng).standard_normal(spec.num_params)


# swish and its first two derivatives, all in terms of s = sigmoid(z)
def swish(z):
    return z * expit(z)


def _swish_terms(z):
    s = expit(z)
    ds = s * (1 - s)
    return z * s, s + z * ds, 2 * ds + z * ds * (1 - 2 * s)


def _points(xs) -> np.ndarray:
    return np.atleast_1d(np.asarray(xs, dtype=np.float64)).reshape(-1)


def _embed(spec, x):
    phase = np.outer(x, spec.wavenumbers)
    return np.concatenate([np.cos(phase), np.sin(phase)], axis=1)


def _forward_cache(field: NeuralField, x):
    """Forward pass keeping layer inputs and the swish slopes ``sigma'(z)``."""
    layers = field.layers()
    h = _embed(field.spec, x)
    inputs, slopes = [], []
    for W, b in layers[:-1]:
        z = h @ W.T + b
        sig = expit(z)
        inputs.append(h)
        slopes.append(sig + z * sig * (1 - sig))
        h = z * sig
    inputs.append(h)
    W, b = layers[-1]
    return h @ W.T + b, inputs, slopes


def forward(field: NeuralField, xs) -> np.ndarray:
    """Network output, shape ``(n, outputs)`` (``(outputs,)`` for a scalar ``x``)."""
    scalar = np.ndim(xs) == 0
    out = _forward_cache(field, _points(xs))[0]
    return out[0] if scalar else out


def _vjp(field, inputs, slopes, cotangent) -> np.ndarray:
    """Reverse sweep for cotangents of shape ``(n, outputs)``."""
    layers = field.layers()
    parts = []
    delta = cotangent
    for idx in range(len(layers) - 1, -1, -1):
        W, _ = layers[idx]
        parts.append(delta.sum(axis=0))
        parts.append((delta.T @ inputs[idx]).ravel())
        if idx:
            delta = (delta @ W) * slopes[idx - 1]
    return np.concatenate(parts[::-1])


def batch_jacobian(field: NeuralField, xs) -> np.ndarray:
    """``d u / d theta`` at every point, shape ``(n * outputs, p)``.

    Rows are ordered point-major, then output-major.
    """
    x = _points(xs)
    n, O = x.size, field.spec.outputs
    _, inputs, slopes = _forward_cache(field, x)
    # seed[n_i, o, n_j, o'] = [i == j][o == o'] but the point axis is diagonal,
    # so carry a single point axis and an output axis in front of it.
    seed = np.broadcast_to(np.eye(O)[:, None, :], (O, n, O))
    layers = field.layers()
    blocks = []
    delta = seed  # (O, n, width_of_layer)
    for idx in range(len(layers) - 1, -1, -1):
        W, _ = layers[idx]
        h = inputs[idx]
        gW = delta[..., :, None] * h[None, :, None, :]
        blocks.append((gW.reshape(O, n, -1), np.asarray(delta)))
        if idx:
            delta = (delta @ W) * slopes[idx - 1]
    blocks.reverse()
    jac = np.concatenate([np.concatenate([gW, gb], axis=2) for gW, gb in blocks], axis=2)
    return jac.transpose(1, 0, 2).reshape(n * O, -1)


def param_gradient(field: NeuralField, x) -> np.ndarray:
    """Gradient of each output w.r.t. ``theta`` at a single point: ``(outputs, p)``."""
    return batch_jacobian(field, np.array([float(x)]))


def param_vjp(field: NeuralField, xs, cotangent) -> np.ndarray:
    """``sum_i cotangent_i . d u(x_i) / d theta`` without forming the Jacobian."""
    x = _points(xs)
    _, inputs, slopes = _forward_cache(field, x)
    ct = np.asarray(cotangent, dtype=np.float64).reshape(x.size, field.spec.outputs)
    return _vjp(field, inputs, slopes, ct)


def param_jvp(field: NeuralField, xs, direction) -> np.ndarray:
    """Forward-mode ``d/ds u(theta + s v, x)`` at ``s = 0``, shape ``(n, outputs)``."""
    x = _points(xs)
    v_layers = unpack(field.spec, np.asarray(direction, dtype=np.float64))
    layers = field.layers()
    h = _embed(field.spec, x)
    dh = np.zeros_like(h)
    for (W, b), (dW, db) in zip(layers[:-1], v_layers[:-1]):
        z = h @ W.T + b
        dz = h @ dW.T + dh @ W.T + db
        a, d1, _ = _swish_terms(z)
        h, dh = a, d1 * dz
    (W, _), (dW, db) = layers[-1], v_layers[-1]
    return h @ dW.T + dh @ W.T + db


def spatial_derivatives(field: NeuralField, xs):
    """``(u, u_x, u_xx)``, each of shape ``(n, outputs)``.

    Propagates the second-order jet of ``x -> x`` through the network.  The
    value component follows exactly the same floating-point path as
    :func:`forward`.
    """
    scalar = np.ndim(xs) == 0
    x = _points(xs)
    spec = field.spec
    k = spec.wavenumbers
    phase = np.outer(x, k)
    c, s = np.cos(phase), np.sin(phase)
    h = np.concatenate([c, s], axis=1)
    h1 = np.concatenate([-k * s, k * c], axis=1)
    h2 = np.concatenate([-(k**2) * c, -(k**2) * s], axis=1)
    layers = field.layers()
    for W, b in layers[:-1]:
        z = h @ W.T + b
        z1 = h1 @ W.T
        z2 = h2 @ W.T
        a, d1, d2 = _swish_terms(z)
        h, h1, h2 = a, d1 * z1, d2 * z1**2 + d1 * z2
    W, b = layers[-1]
    u, ux, uxx = h @ W.T + b, h1 @ W.T, h2 @ W.T
    if scalar:
        return u[0], ux[0], uxx[0]
    return u, ux, uxx


@dataclass(frozen=True)
class AdamSchedule:
    iters: int = 20000
    lr_max: float = 1e-2
    lr_min: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def lr(self, t: int) -> float:
        """Cosine decay from ``lr_max`` at ``t = 0`` to ``lr_min`` at ``t = iters``."""
        return self.lr_min + 0.5 * (self.lr_max - self.lr_min) * (1 + math.cos(math.pi * t / self.iters))


def mse_loss(field: NeuralField, xs, targets) -> float:
    r = forward(field, xs) - np.asarray(targets, dtype=np.float64).reshape(-1, field.spec.outputs)
    return float(np.mean(r**2))


def fit_initial(spec: NetworkSpec, xs, targets, adam: AdamSchedule, rng, theta0=None):
    """Fit the field to ``targets`` (``(n0, outputs)``) at ``xs`` by ADAM on the MSE.

    Starts from ``theta0`` or from :func:`init_params` with ``rng``.
    Returns ``(theta, final_loss)``.
    """
    x = _points(xs)
    y = np.asarray(targets, dtype=np.float64).reshape(x.size, spec.outputs)
    theta = init_params(spec, rng) if theta0 is None else np.array(theta0, dtype=np.float64)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    scale = 2.0 / y.size
    b1, b2 = adam.beta1, adam.beta2
    for t in range(adam.iters):
        field = NeuralField(spec, theta)
        out, inputs, slopes = _forward_cache(field, x)
        g = _vjp(field, inputs, slopes, scale * (out - y))
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** (t + 1))
        vhat = v / (1 - b2 ** (t + 1))
        theta = theta - adam.lr(t) * mhat / (np.sqrt(vhat) + adam.eps)
    field = NeuralField(spec, theta)
    return theta, mse_loss(field, x, y)


HEADER_PREFIX = "# sketchstep-params"


def save_params(path, spec: NetworkSpec, theta, seed: int | None = None) -> None:
    """Text checkpoint: one header line (spec hash, p, seed, spec fields) then values."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != spec.num_params:
        raise ValueError("theta length does not match spec")
    fields = ";".join(f"{k}={v!r}" for k, v in spec.__dict__.items())
    header = f"{HEADER_PREFIX} spec_hash={spec.digest()} p={theta.size} seed={seed} {fields}"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for val in theta:
            fh.write(f"{float(val)!r}\n")


def load_params(path, spec: NetworkSpec | None = None):
    """Read a checkpoint written by :func:`save_params`; returns ``(spec, theta, seed)``."""
    with open(path) as fh:
        header = fh.readline().strip()
        values = np.array([float(line) for line in fh if line.strip()])
    if not header.startswith(HEADER_PREFIX):
        raise ValueError(f"{path} is not a parameter checkpoint")
    tokens = header[len(HEADER_PREFIX):].split()
    meta = dict(tok.split("=", 1) for tok in tokens[:3])
    kw = {}
    for item in tokens[3].split(";"):
        key, val = item.split("=", 1)
        kw[key] = float(val) if key == "period_length" else int(val)
    stored = NetworkSpec(**kw)
    if stored.digest() != meta["spec_hash"]:
        raise ValueError("checkpoint spec hash does not match its spec fields")
    if spec is not None and spec.digest() != stored.digest():
        raise ValueError("checkpoint was written for a different network spec")
    if values.size != int(meta["p"]):
        raise ValueError(f"checkpoint holds {values.size} values, header says {meta['p']}")
    seed = None if meta["seed"] == "None" else int(meta["seed"])
    return stored, values, seed
