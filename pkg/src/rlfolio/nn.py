"""Network layers over the autodiff kernel: dense, stacked LSTM, softmax,
tanh-Gaussian reparameterized sampling, and the Adam optimizer.

Parameters live in a ParamSet (name -> Tensor) with deterministic, sorted
iteration so updates and serialization are reproducible. All buffers are
float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeMismatchError, Tensor

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
TANH_EPS = 1e-6
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


class MissingGradError(RuntimeError):
    """A parameter had no gradient buffer when the optimizer stepped."""

    def __init__(self, name: str):
        super().__init__(f"parameter {name!r} has no gradient; run backward first")
        self.name = name


class ParamMismatchError(ValueError):
    """Two parameter sets do not share names/shapes."""


class ParamSet:
    """Named map of parameter tensors with sorted, reproducible iteration."""

    def __init__(self, params: dict[str, Tensor] | None = None):
        self._params: dict[str, Tensor] = {}
        if params:
            for name, t in params.items():
                self.add(name, t)

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor.requires_grad = True
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return sorted(self._params)

    def items(self):
        for name in self.names():
            yield name, self._params[name]

    def tensors(self):
        for name in self.names():
            yield self._params[name]

    def zero_grad(self) -> None:
        for t in self.tensors():
            t.zero_grad()

    def copy(self) -> "ParamSet":
        out = ParamSet()
        for name, t in self.items():
            out.add(name, Tensor(t.data.copy()))
        return out

    def copy_from(self, other: "ParamSet") -> None:
        if self.names() != other.names():
            raise ParamMismatchError("parameter names differ")
        for name, t in self.items():
            t.data[...] = other[name].data

    def n_params(self) -> int:
        return sum(t.size for t in self.tensors())

    def to_manifest(self) -> dict:
        """JSON-able manifest: name -> {shape, row-major float64 values}."""
        return {
            name: {"shape": list(t.shape), "data": t.data.reshape(-1).tolist()}
            for name, t in self.items()
        }

    @classmethod
    def from_manifest(cls, manifest: dict) -> "ParamSet":
        out = cls()
        for name in sorted(manifest):
            entry = manifest[name]
            arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            out.add(name, Tensor(arr))
        return out


# -- initialization ----------------------------------------------------------


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_dense(pset: ParamSet, prefix: str, n_in: int, n_out: int, rng: np.random.Generator) -> None:
    pset.add(f"{prefix}.w", Tensor(uniform_init(rng, (n_in, n_out), n_in)))
    pset.add(f"{prefix}.b", Tensor(np.zeros(n_out)))


def init_lstm(
    pset: ParamSet,
    prefix: str,
    n_in: int,
    hidden: int,
    layers: int,
    rng: np.random.Generator,
) -> None:
    """Stacked LSTM parameters. Gate order along the 4H axis: i, f, g, o.

    Forget-gate bias starts at 1.0 so early training does not wash out the
    cell state.
    """
    for layer in range(layers):
        size_in = n_in if layer == 0 else hidden
        pset.add(f"{prefix}.l{layer}.wx", Tensor(uniform_init(rng, (size_in, 4 * hidden), size_in)))
        pset.add(f"{prefix}.l{layer}.wh", Tensor(uniform_init(rng, (hidden, 4 * hidden), hidden)))
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = 1.0
        pset.add(f"{prefix}.l{layer}.b", Tensor(b))


# -- forward ops -------------------------------------------------------------


def dense_forward(
    x: Tensor,
    weights: Tensor,
    bias: Tensor,
    activation: str = "linear",
    slope: float = 0.01,
) -> Tensor:
    """y = act(x @ W + b) for activation in {linear, tanh, leaky_relu}."""
    y = ad.matmul(x, weights) + bias
    if activation == "linear":
        return y
    if activation == "tanh":
        return ad.tanh(y)
    if activation == "leaky_relu":
        return ad.leaky_relu(y, slope)
    raise ValueError(f"unknown activation {activation!r}")


def lstm_forward(
    x: Tensor,
    params: ParamSet,
    prefix: str = "lstm",
    layers: int = 3,
    hidden: int | None = None,
) -> Tensor:
    """Run a stacked LSTM over x of shape (B, S, I); return the last hidden
    state of the top layer, shape (B, H).

    Initial hidden and cell states are zero. The full forward graph is
    recorded, so backward performs truncation-free BPTT.
    """
    if x.data.ndim != 3:
        raise ShapeMismatchError(f"lstm_forward expects (B, S, I), got {x.shape}")
    batch, steps, _ = x.shape
    if hidden is None:
        hidden = params[f"{prefix}.l0.wh"].shape[0]

    seq = x
    last_h: Tensor | None = None
    for layer in range(layers):
        wx = params[f"{prefix}.l{layer}.wx"]
        wh = params[f"{prefix}.l{layer}.wh"]
        b = params[f"{prefix}.l{layer}.b"]
        size_in = wx.shape[0]
        # Input contribution for every step in one matmul.
        xw = ad.matmul(seq.reshape((batch * steps, size_in)), wx).reshape(
            (batch, steps, 4 * hidden)
        )
        h = Tensor(np.zeros((batch, hidden)))
        c = Tensor(np.zeros((batch, hidden)))
        outputs = []
        for t in range(steps):
            gates = xw[:, t, :] + ad.matmul(h, wh) + b
            i = ad.sigmoid(gates[:, :hidden])
            f = ad.sigmoid(gates[:, hidden : 2 * hidden])
            g = ad.tanh(gates[:, 2 * hidden : 3 * hidden])
            o = ad.sigmoid(gates[:, 3 * hidden :])
            c = f * c + i * g
            h = o * ad.tanh(c)
            outputs.append(h)
        last_h = h
        if layer < layers - 1:
            seq = ad.stack(outputs, axis=1)
    return last_h


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return ad.softmax(x, axis=axis)


def reparam_sample(
    mean: Tensor,
    log_std: Tensor,
    noise: np.ndarray,
) -> tuple[Tensor, Tensor]:
    """Tanh-squashed Gaussian sample via the reparameterization trick.

    Returns (action, log_prob) where action = tanh(mean + std * noise) and
    log_prob sums the Gaussian log density plus the tanh change-of-variables
    correction over the last axis. Both are differentiable w.r.t. mean and
    log_std at the fixed noise draw. log_std is clamped to
    [LOG_STD_MIN, LOG_STD_MAX].
    """
    log_std = ad.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
    std = ad.exp(log_std)
    z = mean + std * Tensor(noise)
    action = ad.tanh(z)
    u = (z - mean) / std
    gauss = ad.square(u) * (-0.5) - log_std - _HALF_LOG_2PI
    correction = ad.log(1.0 - ad.square(action) + TANH_EPS)
    log_prob = ad.tsum(gauss - correction, axis=-1)
    return action, log_prob


def backward(loss: Tensor) -> None:
    ad.backward(loss)


# -- optimizer ---------------------------------------------------------------


@dataclass
class AdamState:
    """Per-parameter Adam moments plus the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ParamSet, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m={name: np.zeros_like(t.data) for name, t in params.items()},
            v={name: np.zeros_like(t.data) for name, t in params.items()},
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )

    def to_manifest(self) -> dict:
        return {
            "step": self.step,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "m": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()} for k, v in sorted(self.m.items())},
            "v": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()} for k, v in sorted(self.v.items())},
        }

    @classmethod
    def from_manifest(cls, manifest: dict) -> "AdamState":
        def load(section):
            return {
                k: np.asarray(e["data"], dtype=np.float64).reshape(e["shape"])
                for k, e in section.items()
            }

        return cls(
            m=load(manifest["m"]),
            v=load(manifest["v"]),
            step=int(manifest["step"]),
            beta1=float(manifest["beta1"]),
            beta2=float(manifest["beta2"]),
            eps=float(manifest["eps"]),
        )


def adam_step(params: ParamSet, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update in place; gradients are zeroed after."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for name, t in params.items():
        if t.grad is None:
            raise MissingGradError(name)
        g = t.grad
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        t.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        g.fill(0.0)


@dataclass
class Adam:
    """Convenience wrapper binding a ParamSet to its AdamState and rate."""

    params: ParamSet
    lr: float
    state: AdamState = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.state is None:
            self.state = AdamState.for_params(self.params)

    def step(self) -> None:
        adam_step(self.params, self.state, self.lr)
