from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import DTYPE, Tensor, parameter, sigmoid

ACTIVATIONS = ("relu", "tanh", "identity")


def _uniform_fan_in(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(DTYPE)


@dataclass
class DenseNet:
    """Fully connected net; the last layer has no activation."""

    layer_weights: list[Tensor]
    layer_biases: list[Tensor]
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.layer_weights) != len(self.layer_biases) or not self.layer_weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.layer_weights, self.layer_biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and w.shape[0] != self.layer_weights[i - 1].shape[1]:
                raise ValueError(f"layer {i} input does not chain from layer {i - 1}")

    @classmethod
    def create(
        cls,
        input_dim: int,
        output_dim: int,
        hidden: tuple[int, ...] = (256, 256),
        activation: str = "relu",
        rng: np.random.Generator | None = None,
    ) -> "DenseNet":
        rng = rng if rng is not None else np.random.default_rng(0)
        dims = [input_dim, *hidden, output_dim]
        ws, bs = [], []
        for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
            ws.append(parameter(_uniform_fan_in(rng, d_in, (d_in, d_out)), f"w{i}"))
            bs.append(parameter(_uniform_fan_in(rng, d_in, (d_out,)), f"b{i}"))
        return cls(ws, bs, activation)

    @property
    def input_dim(self) -> int:
        return self.layer_weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.layer_weights[-1].shape[1]

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out = {}
        for i, (w, b) in enumerate(zip(self.layer_weights, self.layer_biases)):
            out[f"{prefix}w{i}"] = w
            out[f"{prefix}b{i}"] = b
        return out

    def __call__(self, x) -> Tensor:
        x = Tensor._wrap(x)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"expected input of width {self.input_dim}, got {x.shape[-1]}")
        last = len(self.layer_weights) - 1
        for i, (w, b) in enumerate(zip(self.layer_weights, self.layer_biases)):
            x = x @ w + b
            if i < last:
                x = _activate(x, self.activation)
        return x

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Forward pass on raw arrays without recording a graph."""
        x = np.asarray(x, dtype=DTYPE)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"expected input of width {self.input_dim}, got {x.shape[-1]}")
        last = len(self.layer_weights) - 1
        for i, (w, b) in enumerate(zip(self.layer_weights, self.layer_biases)):
            x = x @ w.data + b.data
            if i < last:
                if self.activation == "relu":
                    x = np.maximum(x, 0.0)
                elif self.activation == "tanh":
                    x = np.tanh(x)
        return x


def _activate(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return x.relu()
    if kind == "tanh":
        return x.tanh()
    return x


@dataclass
class GruCell:
    """Gated recurrent cell.

    Each gate maps the concatenation ``[x, h]`` (or ``[x, r*h]`` for the
    candidate) to ``hidden_dim`` units::

        z  = sigmoid([x, h] @ w_z + b_z)
        r  = sigmoid([x, h] @ w_r + b_r)
        n  = tanh([x, r * h] @ w_n + b_n)
        h' = (1 - z) * n + z * h
    """

    w_z: Tensor
    w_r: Tensor
    w_n: Tensor
    b_z: Tensor
    b_r: Tensor
    b_n: Tensor
    input_dim: int = field(init=False)
    hidden_dim: int = field(init=False)

    def __post_init__(self):
        self.hidden_dim = self.b_z.shape[0]
        self.input_dim = self.w_z.shape[0] - self.hidden_dim
        expect = (self.input_dim + self.hidden_dim, self.hidden_dim)
        for name in ("w_z", "w_r", "w_n"):
            if getattr(self, name).shape != expect:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {expect}")
        for name in ("b_r", "b_n"):
            if getattr(self, name).shape != (self.hidden_dim,):
                raise ValueError(f"{name} must have shape ({self.hidden_dim},)")
        if self.input_dim <= 0:
            raise ValueError("input_dim must be positive")

    @classmethod
    def create(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        d = input_dim + hidden_dim

        def w(name):
            return parameter(_uniform_fan_in(rng, hidden_dim, (d, hidden_dim)), name)

        def b(name):
            return parameter(_uniform_fan_in(rng, hidden_dim, (hidden_dim,)), name)

        return cls(w("w_z"), w("w_r"), w("w_n"), b("b_z"), b("b_r"), b("b_n"))

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "GruCell":
        d = input_dim + hidden_dim
        return cls(
            *(parameter(np.zeros((d, hidden_dim)), n) for n in ("w_z", "w_r", "w_n")),
            *(parameter(np.zeros(hidden_dim), n) for n in ("b_z", "b_r", "b_n")),
        )

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        names = ("w_z", "w_r", "w_n", "b_z", "b_r", "b_n")
        return {f"{prefix}{n}": getattr(self, n) for n in names}

    def __call__(self, x, mask: np.ndarray | None = None, h0: np.ndarray | None = None) -> Tensor:
        return gru_sequence(self, x, mask, h0)


def gru_forward(cell: GruCell, inputs, h0) -> list[np.ndarray]:
    """Hidden state after each input of a single unbatched sequence."""
    inputs = [np.asarray(v, dtype=DTYPE) for v in inputs]
    h0 = np.asarray(h0, dtype=DTYPE)
    if h0.shape != (cell.hidden_dim,):
        raise ValueError(f"h0 must have shape ({cell.hidden_dim},)")
    if not inputs:
        return []
    for v in inputs:
        if v.shape != (cell.input_dim,):
            raise ValueError(f"every input must have shape ({cell.input_dim},)")
    hs = gru_sequence(cell, np.stack(inputs)[None], None, h0[None])
    return list(hs.data[0])


def gru_sequence(cell: GruCell, x, mask: np.ndarray | None = None, h0: np.ndarray | None = None) -> Tensor:
    """Run ``cell`` over a padded batch ``x`` of shape (B, L, D).

    ``mask[b, t]`` false means step t of sequence b is padding: the hidden
    state is carried over unchanged. Returns all hidden states, (B, L, H).
    Backpropagation runs through time inside one fused op.
    """
    x = Tensor._wrap(x)
    X = x.data
    if X.ndim != 3 or X.shape[2] != cell.input_dim:
        raise ValueError(f"expected (B, L, {cell.input_dim}) inputs, got {X.shape}")
    B, L, D = X.shape
    H = cell.hidden_dim
    M = np.ones((B, L), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    h = np.zeros((B, H), dtype=DTYPE) if h0 is None else np.array(h0, dtype=DTYPE)

    wz, wr, wn = cell.w_z.data, cell.w_r.data, cell.w_n.data
    wx = np.concatenate([wz[:D], wr[:D], wn[:D]], axis=1)
    wh_zr = np.concatenate([wz[D:], wr[D:]], axis=1)
    wh_n = wn[D:]
    bias = np.concatenate([cell.b_z.data, cell.b_r.data, cell.b_n.data])

    xp = X @ wx + bias
    hs = np.empty((B, L, H), dtype=DTYPE)
    h_prev = np.empty((B, L, H), dtype=DTYPE)
    zs = np.empty((B, L, H), dtype=DTYPE)
    rs = np.empty((B, L, H), dtype=DTYPE)
    ns = np.empty((B, L, H), dtype=DTYPE)
    rhs = np.empty((B, L, H), dtype=DTYPE)
    padded = not M.all()
    for t in range(L):
        zr = sigmoid(xp[:, t, : 2 * H] + h @ wh_zr)
        z, r = zr[:, :H], zr[:, H:]
        rh = r * h
        n = np.tanh(xp[:, t, 2 * H :] + rh @ wh_n)
        h_new = n + z * (h - n)
        h_prev[:, t], zs[:, t], rs[:, t], ns[:, t], rhs[:, t] = h, z, r, n, rh
        h = np.where(M[:, t, None], h_new, h) if padded else h_new
        hs[:, t] = h

    def backward(G):
        dxp = np.empty((B, L, 3 * H), dtype=DTYPE)
        dh = np.zeros((B, H), dtype=DTYPE)
        # gate-derivative factors, computed once for the whole sequence
        dn_fac = (1.0 - zs) * (1.0 - ns * ns)
        dz_fac = (h_prev - ns) * zs * (1.0 - zs)
        dr_fac = h_prev * rs * (1.0 - rs)
        padded = not M.all()
        wh_n_t, wh_zr_t = wh_n.T.copy(), wh_zr.T.copy()
        for t in reversed(range(L)):
            dh = dh + G[:, t]
            if padded:
                m = M[:, t, None]
                d_new = np.where(m, dh, 0.0)
                carry = np.where(m, 0.0, dh) + d_new * zs[:, t]
            else:
                d_new = dh
                carry = dh * zs[:, t]
            da_n = d_new * dn_fac[:, t]
            drh = da_n @ wh_n_t
            da_zr = dxp[:, t, : 2 * H]
            np.multiply(d_new, dz_fac[:, t], out=da_zr[:, :H])
            np.multiply(drh, dr_fac[:, t], out=da_zr[:, H:])
            dxp[:, t, 2 * H :] = da_n
            dh = carry + drh * rs[:, t] + da_zr @ wh_zr_t
        flat = dxp.reshape(B * L, 3 * H)
        d_wx = X.reshape(B * L, D).T @ flat
        d_wh_zr = h_prev.reshape(B * L, H).T @ flat[:, : 2 * H]
        d_wh_n = rhs.reshape(B * L, H).T @ flat[:, 2 * H :]
        d_bias = flat.sum(axis=0)
        # inputs are usually constant one-hot codes
        d_x = dxp @ wx.T if x.requires_grad else None
        return (
            d_x,
            np.vstack([d_wx[:, :H], d_wh_zr[:, :H]]),
            np.vstack([d_wx[:, H : 2 * H], d_wh_zr[:, H:]]),
            np.vstack([d_wx[:, 2 * H :], d_wh_n]),
            d_bias[:H],
            d_bias[H : 2 * H],
            d_bias[2 * H :],
        )

    parents = (x, cell.w_z, cell.w_r, cell.w_n, cell.b_z, cell.b_r, cell.b_n)
    return Tensor._op(hs, parents, backward)
