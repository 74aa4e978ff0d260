"""Declarative network specs, shape validation and the runnable Network."""

from dataclasses import dataclass

import numpy as np

from .layers import (LSTM, Activation, AttentionHead, Concat, Conv1D, Dense, Flatten, Last,
                     Sequential, ShapeError)

LAYER_KINDS = ("dense", "lstm", "conv1d", "attention", "concat", "activation", "flatten", "last")


class StaleCacheError(RuntimeError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    units: int = 0
    filters: int = 0
    kernel: int = 0
    activation: str = "tanh"
    return_sequences: bool = False
    branches: tuple = ()

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("dense", "lstm", "attention") and self.units <= 0:
            raise ValueError(f"{self.kind} needs positive units")
        if self.kind == "conv1d" and (self.filters <= 0 or self.kernel <= 0):
            raise ValueError("conv1d needs positive filters and kernel")
        if self.kind == "concat" and not self.branches:
            raise ValueError("concat needs at least one branch")
        if self.kind == "activation" and self.activation not in ("tanh", "linear", "softmax"):
            raise ValueError(f"unsupported activation {self.activation!r}")
        object.__setattr__(self, "branches", tuple(tuple(b) for b in self.branches))

    def to_dict(self):
        d = {"kind": self.kind}
        for k in ("units", "filters", "kernel"):
            if getattr(self, k):
                d[k] = getattr(self, k)
        if self.kind == "activation":
            d["activation"] = self.activation
        if self.return_sequences:
            d["return_sequences"] = True
        if self.branches:
            d["branches"] = [[l.to_dict() for l in b] for b in self.branches]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["branches"] = tuple(tuple(cls.from_dict(x) for x in b) for b in d.get("branches", ()))
        return cls(**d)


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple
    n_vars: int
    n_steps: int
    n_out: int = 1

    def to_dict(self):
        return {"layers": [l.to_dict() for l in self.layers], "n_vars": self.n_vars,
                "n_steps": self.n_steps, "n_out": self.n_out}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(LayerSpec.from_dict(x) for x in d["layers"]), d["n_vars"], d["n_steps"],
                   d.get("n_out", 1))

    def with_dims(self, n_steps=None, n_vars=None, n_out=None):
        return NetworkSpec(self.layers, self.n_vars if n_vars is None else n_vars,
                           self.n_steps if n_steps is None else n_steps,
                           self.n_out if n_out is None else n_out)


def _make(spec):
    if spec.kind == "dense":
        return Dense(spec.units)
    if spec.kind == "lstm":
        return LSTM(spec.units, spec.return_sequences)
    if spec.kind == "conv1d":
        return Conv1D(spec.filters, spec.kernel)
    if spec.kind == "attention":
        return AttentionHead(spec.units)
    if spec.kind == "activation":
        return Activation(spec.activation)
    if spec.kind == "flatten":
        return Flatten()
    if spec.kind == "last":
        return Last()
    return Concat([Sequential([_make(s) for s in b]) for b in spec.branches])


class Network:
    """A built network with a parameter version counter.

    ``forward`` stamps its cache with the current version and ``backward``
    refuses caches from before any parameter update.
    """

    def __init__(self, spec, seed=0):
        self.spec = spec
        self.seed = seed
        self.root = Sequential([_make(s) for s in spec.layers])
        out = self.root.build((spec.n_steps, spec.n_vars), np.random.default_rng(seed))
        if out != (spec.n_out,):
            raise ShapeError(f"network output shape {out} does not match n_out={spec.n_out}")
        self.version = 0

    @property
    def params(self):
        return self.root.params

    def n_params(self):
        return int(sum(p.size for p in self.params.values()))

    def touch(self):
        self.version += 1

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 3 or x.shape[1:] != (self.spec.n_steps, self.spec.n_vars):
            raise ShapeError(f"input shape {x.shape[1:]} does not match "
                             f"({self.spec.n_steps}, {self.spec.n_vars})")
        y, caches = self.root.forward(x)
        return y, (self.version, caches)

    def backward(self, cache, dy):
        version, caches = cache
        if version != self.version:
            raise StaleCacheError("cache predates the latest parameter update")
        _, grads = self.root.backward(caches, np.asarray(dy, dtype=float))
        return grads

    def predict(self, x, batch_size=1024):
        x = np.asarray(x, dtype=float)
        outs = [self.forward(x[i:i + batch_size])[0] for i in range(0, len(x), batch_size)]
        return np.concatenate(outs) if outs else np.zeros((0, self.spec.n_out))

    def get_params(self):
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, values):
        for k, v in self.params.items():
            v[...] = values[k]
        self.touch()


def validate(spec):
    """Build once to check shapes; raises :class:`ShapeError` naming the layer."""
    Network(spec, seed=0)
    return spec


# -- catalog -----------------------------------------------------------------

def lstm_spec(n_steps, n_vars, n_out=1, units=(50,)):
    layers = [LayerSpec("lstm", units=u, return_sequences=i < len(units) - 1)
              for i, u in enumerate(units)]
    return NetworkSpec(tuple(layers) + (LayerSpec("dense", units=n_out),), n_vars, n_steps, n_out)


def attention_spec(n_steps, n_vars, n_out=1, heads=1, layers=1, units=None):
    """Single- or multi-head attention stack; each head sees every input."""
    if units is None:
        units = 200 if heads == 1 else 30
    bank = LayerSpec("concat", branches=tuple((LayerSpec("attention", units=units),)
                                              for _ in range(heads)))
    body = (bank,) * layers
    return NetworkSpec(body + (LayerSpec("flatten"), LayerSpec("dense", units=n_out)),
                       n_vars, n_steps, n_out)


def cnn_lstm_spec(n_steps, n_vars, n_out=1, heads=None, filters=9, kernel=7, units=(100, 100)):
    heads = n_vars if heads is None else heads
    head = (LayerSpec("conv1d", filters=filters, kernel=kernel), LayerSpec("activation"),
            LayerSpec("conv1d", filters=filters, kernel=kernel), LayerSpec("activation"))
    layers = [LayerSpec("concat", branches=(head,) * heads)]
    layers += [LayerSpec("lstm", units=u, return_sequences=i < len(units) - 1)
               for i, u in enumerate(units)]
    return NetworkSpec(tuple(layers) + (LayerSpec("dense", units=n_out),), n_vars, n_steps, n_out)


ARCHITECTURES = {"lstm": lstm_spec, "attention": attention_spec, "cnn_lstm": cnn_lstm_spec}


def architecture(name, n_steps, n_vars, n_out=1, **kwargs):
    try:
        factory = ARCHITECTURES[name]
    except KeyError:
        raise ValueError(f"unknown architecture {name!r}; have {', '.join(ARCHITECTURES)}") from None
    return factory(n_steps, n_vars, n_out, **kwargs)
