"""Layers with hand-written backward passes.

Arrays are batch-first float64: sequences are ``(B, T, F)``, vectors
``(B, F)``. Every layer exposes ``params`` (name -> array), ``forward(x)``
returning ``(y, cache)`` and ``backward(cache, dy)`` returning
``(dx, grads)`` with ``grads`` keyed like ``params``.
"""

import numpy as np


class ShapeError(ValueError):
    pass


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(z):
    # tanh form: one ufunc pass, no overflow for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def softmax(z, axis=-1):
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


class Layer:
    kind = "layer"

    def __init__(self):
        self.params = {}

    def build(self, in_shape, rng):
        """Allocate parameters for ``in_shape`` (no batch axis); return the output shape."""
        return in_shape

    def forward(self, x):
        raise NotImplementedError

    def backward(self, cache, dy):
        raise NotImplementedError


class Dense(Layer):
    kind = "dense"

    def __init__(self, units):
        super().__init__()
        self.units = units

    def build(self, in_shape, rng):
        if len(in_shape) != 1:
            raise ShapeError(f"dense expects vector input, got shape {in_shape}")
        fan_in = in_shape[0]
        self.params = {"W": _uniform(rng, fan_in, (fan_in, self.units)), "b": np.zeros(self.units)}
        return (self.units,)

    def forward(self, x):
        return x @ self.params["W"] + self.params["b"], x

    def backward(self, x, dy):
        W = self.params["W"]
        return dy @ W.T, {"W": x.T @ dy, "b": dy.sum(axis=0)}


class Activation(Layer):
    kind = "activation"

    def __init__(self, name="tanh"):
        super().__init__()
        if name not in ("tanh", "linear", "softmax"):
            raise ValueError(f"unsupported activation {name!r}")
        self.name = name

    def forward(self, x):
        if self.name == "tanh":
            y = np.tanh(x)
        elif self.name == "softmax":
            y = softmax(x)
        else:
            y = x
        return y, y

    def backward(self, y, dy):
        if self.name == "tanh":
            return dy * (1.0 - y * y), {}
        if self.name == "softmax":
            return y * (dy - np.sum(dy * y, axis=-1, keepdims=True)), {}
        return dy, {}


class Flatten(Layer):
    kind = "flatten"

    def build(self, in_shape, rng):
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, shape, dy):
        return dy.reshape(shape), {}


class Last(Layer):
    """Keep the final timestep of a sequence."""

    kind = "last"

    def build(self, in_shape, rng):
        if len(in_shape) != 2:
            raise ShapeError(f"last expects sequence input, got shape {in_shape}")
        return (in_shape[1],)

    def forward(self, x):
        return x[:, -1, :], x.shape

    def backward(self, shape, dy):
        dx = np.zeros(shape)
        dx[:, -1, :] = dy
        return dx, {}


class LSTM(Layer):
    """Gates ordered (input, forget, cell, output); sigmoid gates, tanh cell."""

    kind = "lstm"

    def __init__(self, units, return_sequences=False):
        super().__init__()
        self.units = units
        self.return_sequences = return_sequences

    def build(self, in_shape, rng):
        if len(in_shape) != 2:
            raise ShapeError(f"lstm expects sequence input, got shape {in_shape}")
        T, F = in_shape
        H = self.units
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        self.params = {"W": _uniform(rng, F, (F, 4 * H)), "U": _uniform(rng, H, (H, 4 * H)), "b": b}
        return (T, H) if self.return_sequences else (H,)

    def forward(self, x):
        W, U, b = self.params["W"], self.params["U"], self.params["b"]
        B, T, _ = x.shape
        H = self.units
        xw = x @ W + b
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        gates = np.empty((T, B, 4 * H))
        cs = np.empty((T + 1, B, H))
        hs = np.empty((T + 1, B, H))
        tcs = np.empty((T, B, H))
        cs[0] = c
        hs[0] = h
        for t in range(T):
            z = xw[:, t] + h @ U
            g = np.empty_like(z)
            g[:, :2 * H] = sigmoid(z[:, :2 * H])
            g[:, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
            g[:, 3 * H:] = sigmoid(z[:, 3 * H:])
            c = g[:, H:2 * H] * c + g[:, :H] * g[:, 2 * H:3 * H]
            tc = np.tanh(c)
            h = g[:, 3 * H:] * tc
            gates[t], cs[t + 1], hs[t + 1], tcs[t] = g, c, h, tc
        y = hs[1:].transpose(1, 0, 2) if self.return_sequences else h
        return y, (x, gates, cs, hs, tcs)

    def backward(self, cache, dy):
        x, gates, cs, hs, tcs = cache
        W, U = self.params["W"], self.params["U"]
        T, B, _ = gates.shape
        H = self.units
        dU = np.zeros_like(U)
        dz_all = np.empty((B, T, 4 * H))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in reversed(range(T)):
            g = gates[t]
            i, f, gg, o = g[:, :H], g[:, H:2 * H], g[:, 2 * H:3 * H], g[:, 3 * H:]
            dh = dh_next + (dy[:, t] if self.return_sequences else (dy if t == T - 1 else 0.0))
            tc = tcs[t]
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = np.empty((B, 4 * H))
            dz[:, :H] = dc * gg * i * (1.0 - i)
            dz[:, H:2 * H] = dc * cs[t] * f * (1.0 - f)
            dz[:, 2 * H:3 * H] = dc * i * (1.0 - gg * gg)
            dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
            dU += hs[t].T @ dz
            dh_next = dz @ U.T
            dc_next = dc * f
            dz_all[:, t] = dz
        flat = dz_all.reshape(B * T, 4 * H)
        dW = x.reshape(B * T, -1).T @ flat
        return dz_all @ W.T, {"W": dW, "U": dU, "b": flat.sum(axis=0)}


class Conv1D(Layer):
    """Stride-1 convolution along time with zero 'same' padding."""

    kind = "conv1d"

    def __init__(self, filters, kernel):
        super().__init__()
        self.filters = filters
        self.kernel = kernel

    def build(self, in_shape, rng):
        if len(in_shape) != 2:
            raise ShapeError(f"conv1d expects sequence input, got shape {in_shape}")
        T, C = in_shape
        k = self.kernel
        self.params = {"W": _uniform(rng, k * C, (k, C, self.filters)), "b": np.zeros(self.filters)}
        return (T, self.filters)

    def _pads(self):
        return (self.kernel - 1) // 2, self.kernel // 2

    def forward(self, x):
        B, T, C = x.shape
        k = self.kernel
        left, right = self._pads()
        xp = np.pad(x, ((0, 0), (left, right), (0, 0)))
        cols = np.stack([xp[:, j:j + T, :] for j in range(k)], axis=2)  # (B, T, k, C)
        y = cols.reshape(B, T, k * C) @ self.params["W"].reshape(k * C, -1) + self.params["b"]
        return y, (cols, x.shape)

    def backward(self, cache, dy):
        cols, (B, T, C) = cache
        k = self.kernel
        W = self.params["W"]
        flat = cols.reshape(B * T, k * C)
        dyf = dy.reshape(B * T, -1)
        dW = (flat.T @ dyf).reshape(W.shape)
        dcols = (dyf @ W.reshape(k * C, -1).T).reshape(B, T, k, C)
        left, right = self._pads()
        dxp = np.zeros((B, T + left + right, C))
        for j in range(k):
            dxp[:, j:j + T, :] += dcols[:, :, j, :]
        return dxp[:, left:left + T, :], {"W": dW, "b": dyf.sum(axis=0)}


class AttentionHead(Layer):
    """Encoder LSTM states ``h`` serve as keys and values; an alignment LSTM
    run over ``h`` supplies one query per timestep. Output is the sequence of
    context vectors ``softmax(q_t . h) @ h``.
    """

    kind = "attention"
    check_weights = True

    def __init__(self, units):
        super().__init__()
        self.units = units
        self.encoder = LSTM(units, return_sequences=True)
        self.alignment = LSTM(units, return_sequences=True)

    def build(self, in_shape, rng):
        if len(in_shape) != 2:
            raise ShapeError(f"attention expects sequence input, got shape {in_shape}")
        enc_shape = self.encoder.build(in_shape, rng)
        self.alignment.build(enc_shape, rng)
        self._sync()
        return enc_shape

    def _sync(self):
        self.params = {**{f"enc.{k}": v for k, v in self.encoder.params.items()},
                       **{f"align.{k}": v for k, v in self.alignment.params.items()}}

    def forward(self, x):
        h, enc_cache = self.encoder.forward(x)
        q, align_cache = self.alignment.forward(h)
        alpha = softmax(q @ h.transpose(0, 2, 1))
        if self.check_weights:
            assert np.all(alpha >= 0) and np.allclose(alpha.sum(axis=-1), 1.0), "attention weights"
        return alpha @ h, (h, q, alpha, enc_cache, align_cache)

    def backward(self, cache, dy):
        h, q, alpha, enc_cache, align_cache = cache
        dalpha = dy @ h.transpose(0, 2, 1)
        dh = alpha.transpose(0, 2, 1) @ dy
        ds = alpha * (dalpha - np.sum(dalpha * alpha, axis=-1, keepdims=True))
        dq = ds @ h
        dh += ds.transpose(0, 2, 1) @ q
        dh_align, g_align = self.alignment.backward(align_cache, dq)
        dx, g_enc = self.encoder.backward(enc_cache, dh + dh_align)
        grads = {**{f"enc.{k}": v for k, v in g_enc.items()},
                 **{f"align.{k}": v for k, v in g_align.items()}}
        return dx, grads


class Sequential(Layer):
    kind = "sequential"

    def __init__(self, layers):
        super().__init__()
        self.layers = list(layers)

    def build(self, in_shape, rng):
        shape = in_shape
        for i, layer in enumerate(self.layers):
            try:
                shape = layer.build(shape, rng)
            except ShapeError as exc:
                raise ShapeError(f"layer {i} ({layer.kind}): {exc}") from None
        self._sync()
        return shape

    def _sync(self):
        self.params = {}
        for i, layer in enumerate(self.layers):
            for k, v in layer.params.items():
                self.params[f"{i}.{layer.kind}.{k}"] = v

    def forward(self, x):
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        return x, caches

    def backward(self, caches, dy):
        grads = {}
        for i in reversed(range(len(self.layers))):
            layer = self.layers[i]
            dy, g = layer.backward(caches[i], dy)
            for k, v in g.items():
                grads[f"{i}.{layer.kind}.{k}"] = v
        return dy, grads


class Concat(Layer):
    """Feed the same input to every branch and join outputs on the last axis."""

    kind = "concat"

    def __init__(self, branches):
        super().__init__()
        self.branches = [b if isinstance(b, Sequential) else Sequential(b) for b in branches]

    def build(self, in_shape, rng):
        shapes = []
        for j, br in enumerate(self.branches):
            try:
                shapes.append(br.build(in_shape, rng))
            except ShapeError as exc:
                raise ShapeError(f"branch {j}: {exc}") from None
        lead = {s[:-1] for s in shapes}
        if len(lead) != 1:
            raise ShapeError(f"branch output shapes cannot be concatenated: {shapes}")
        self.widths = [s[-1] for s in shapes]
        self._sync()
        return shapes[0][:-1] + (sum(self.widths),)

    def _sync(self):
        self.params = {f"{j}.{k}": v for j, br in enumerate(self.branches) for k, v in br.params.items()}

    def forward(self, x):
        outs, caches = zip(*(br.forward(x) for br in self.branches))
        return np.concatenate(outs, axis=-1), caches

    def backward(self, caches, dy):
        splits = np.cumsum(self.widths)[:-1]
        dx = 0.0
        grads = {}
        for j, (br, c, d) in enumerate(zip(self.branches, caches, np.split(dy, splits, axis=-1))):
            dxj, g = br.backward(c, d)
            dx = dx + dxj
            grads.update({f"{j}.{k}": v for k, v in g.items()})
        return dx, grads
