"""
Differentiable operation vocabulary. No implicit broadcasting: every op states
its shape contract and raises DimensionError when it is violated.
"""
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from hct_sod.errors import DimensionError
from hct_sod.services.numerics.tensor import DTYPE, Function, Tensor, as_tensor

Scalar = Union[int, float]

ELEMENTWISE_KINDS = ("add", "sub", "mul", "abs", "sigmoid", "scale")


def _require_same_shape(kind: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{kind}: shapes {a.shape} and {b.shape} differ (no broadcasting)")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form is stable for large |x| and gives exactly 0.5 at 0
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# ---------------------------------------------------------------- products

class MatMul(Function):
    kind = "matmul"

    def forward(self, a, b):
        return a @ b

    def backward(self, grad):
        a, b = self.inputs
        return grad @ b.data.T, a.data.T @ grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[m x k] . [k x n] -> [m x n]"""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return MatMul.apply(a, b)


class Linear(Function):
    kind = "linear"

    def forward(self, x, w, b):
        return x @ w + b

    def backward(self, grad):
        x, w, _ = self.inputs
        return grad @ w.data.T, x.data.T @ grad, grad.sum(axis=0)


class LinearNoBias(Function):
    kind = "linear"

    def forward(self, x, w):
        return x @ w

    def backward(self, grad):
        x, w = self.inputs
        return grad @ w.data.T, x.data.T @ grad


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Token-wise affine map: [n x cin] . [cin x cout] plus the bias added to every row"""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise DimensionError(f"linear: input {x.shape} does not fit weight {weight.shape}")
    if bias is None:
        return LinearNoBias.apply(x, weight)
    if bias.shape != (weight.shape[1],):
        raise DimensionError(f"linear: bias {bias.shape} does not fit weight {weight.shape}")
    return Linear.apply(x, weight, bias)


# ------------------------------------------------------------- elementwise

class Add(Function):
    kind = "add"

    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    kind = "sub"

    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    kind = "mul"

    def forward(self, a, b):
        return a * b

    def backward(self, grad):
        a, b = self.inputs
        return grad * b.data, grad * a.data


class Abs(Function):
    kind = "abs"

    def forward(self, a):
        return np.abs(a)

    def backward(self, grad):
        # np.sign(0) == 0, the subgradient chosen for |x| at the kink
        return (grad * np.sign(self.inputs[0].data),)


class Sigmoid(Function):
    kind = "sigmoid"

    def forward(self, a):
        out = _sigmoid(a)
        self.saved["out"] = out
        return out

    def backward(self, grad):
        out = self.saved["out"]
        return (grad * out * (1.0 - out),)


class Scale(Function):
    kind = "scale"

    def forward(self, a, factor: float = 1.0):
        self.saved["factor"] = factor
        return a * factor

    def backward(self, grad):
        return (grad * self.saved["factor"],)


class Shift(Function):
    kind = "shift"

    def forward(self, a, offset: float = 0.0):
        return a + offset

    def backward(self, grad):
        return (grad,)


def elementwise(kind: str, a: Tensor, b: Union[Tensor, Scalar, None] = None) -> Tensor:
    """Pointwise add, sub, mul, abs, sigmoid or scale"""
    if kind not in ELEMENTWISE_KINDS:
        raise ValueError(f"unknown elementwise kind {kind!r}; expected one of {ELEMENTWISE_KINDS}")
    if kind == "abs":
        return Abs.apply(a)
    if kind == "sigmoid":
        return Sigmoid.apply(a)
    if kind == "scale":
        if not isinstance(b, (int, float)):
            raise ValueError("scale needs a scalar factor")
        return Scale.apply(a, factor=float(b))
    if b is None:
        raise ValueError(f"{kind} needs a second operand")
    if isinstance(b, (int, float)):
        if kind == "add":
            return Shift.apply(a, offset=float(b))
        if kind == "sub":
            return Shift.apply(a, offset=-float(b))
        return Scale.apply(a, factor=float(b))
    _require_same_shape(kind, a, b)
    return {"add": Add, "sub": Sub, "mul": Mul}[kind].apply(a, b)


def add(a: Tensor, b: Tensor) -> Tensor:
    return elementwise("add", a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return elementwise("sub", a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return elementwise("mul", a, b)


def sigmoid(a: Tensor) -> Tensor:
    return elementwise("sigmoid", a)


class Gelu(Function):
    kind = "gelu"
    _C = np.sqrt(2.0 / np.pi)

    def forward(self, a):
        inner = self._C * (a + 0.044715 * a ** 3)
        t = np.tanh(inner)
        self.saved["t"] = t
        return 0.5 * a * (1.0 + t)

    def backward(self, grad):
        a = self.inputs[0].data
        t = self.saved["t"]
        d_inner = self._C * (1.0 + 3 * 0.044715 * a ** 2)
        return (grad * (0.5 * (1.0 + t) + 0.5 * a * (1.0 - t ** 2) * d_inner),)


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation"""
    return Gelu.apply(a)


class ChannelGate(Function):
    kind = "channel_gate"

    def forward(self, x, g):
        return x * g[..., None]

    def backward(self, grad):
        x, g = self.inputs
        return grad * g.data[..., None], (grad * x.data).sum(axis=-1)


def channel_gate(features: Tensor, gate: Tensor) -> Tensor:
    """[h x w x c] features times an [h x w] map, same map for every channel"""
    if features.ndim != 3 or gate.shape != features.shape[:2]:
        raise DimensionError(f"channel_gate: gate {gate.shape} does not fit features {features.shape}")
    return ChannelGate.apply(features, gate)


# ---------------------------------------------------------------- softmax

class SoftmaxRows(Function):
    kind = "softmax_rows"

    def forward(self, m):
        shifted = m - m.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=1, keepdims=True)
        self.saved["out"] = out
        return out

    def backward(self, grad):
        y = self.saved["out"]
        return (y * (grad - (grad * y).sum(axis=1, keepdims=True)),)


def softmax_rows(m: Tensor) -> Tensor:
    """Row-wise softmax of an [r x c] matrix, max-subtracted"""
    if m.ndim != 2:
        raise DimensionError(f"softmax_rows expects a matrix, got {m.shape}")
    return SoftmaxRows.apply(m)


# ------------------------------------------------------------------- loss

class StableBce(Function):
    kind = "stable_bce"

    def forward(self, x, y):
        per_element = np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))
        return np.array(per_element.mean())

    def backward(self, grad):
        x, y = self.inputs
        scale = grad / x.size
        return (_sigmoid(x.data) - y.data) * scale, None


def stable_bce(logits: Tensor, targets: Union[Tensor, np.ndarray]) -> Tensor:
    """Mean binary cross-entropy on logits: max(x,0) - x*y + log(1+exp(-|x|))"""
    targets = as_tensor(targets)
    _require_same_shape("stable_bce", logits, targets)
    if targets.data.min() < 0.0 or targets.data.max() > 1.0:
        raise ValueError(
            f"stable_bce targets must lie in [0,1], got range [{targets.data.min()}, {targets.data.max()}]"
        )
    return StableBce.apply(logits, targets)


# ------------------------------------------------------------ convolution

class Conv2d(Function):
    kind = "conv2d"

    def forward(self, x, w, b):
        k = w.shape[0]
        pad = k // 2
        h, wd, cin = x.shape
        padded = np.pad(x, ((pad, pad), (pad, pad), (0, 0)))
        # windows: (h, w, cin, k, k) -> (h*w, k*k*cin) in (di, dj, c) order
        windows = np.lib.stride_tricks.sliding_window_view(padded, (k, k), axis=(0, 1))
        cols = windows.transpose(0, 1, 3, 4, 2).reshape(h * wd, k * k * cin)
        w_mat = w.reshape(k * k * cin, -1)
        self.saved["cols"] = cols
        self.saved["w_mat"] = w_mat
        return (cols @ w_mat + b).reshape(h, wd, -1)

    def backward(self, grad):
        x, w, _ = self.inputs
        k = w.shape[0]
        pad = k // 2
        h, wd, cin = x.shape
        g2 = grad.reshape(h * wd, -1)
        cols, w_mat = self.saved["cols"], self.saved["w_mat"]
        d_w = (cols.T @ g2).reshape(w.shape)
        d_b = g2.sum(axis=0)
        d_cols = (g2 @ w_mat.T).reshape(h, wd, k, k, cin)
        d_padded = np.zeros((h + 2 * pad, wd + 2 * pad, cin), dtype=DTYPE)
        for di in range(k):
            for dj in range(k):
                d_padded[di:di + h, dj:dj + wd] += d_cols[:, :, di, dj, :]
        return d_padded[pad:pad + h, pad:pad + wd], d_w, d_b


def conv2d(grid: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Same-padded stride-1 convolution of an [h x w x cin] grid with [k x k x cin x cout] weights"""
    if grid.ndim != 3 or weights.ndim != 4:
        raise DimensionError(f"conv2d: grid {grid.shape} / weights {weights.shape} have wrong rank")
    k, k2, cin, cout = weights.shape
    if k != k2:
        raise DimensionError(f"conv2d: kernel must be square, got {k}x{k2}")
    if k % 2 == 0:
        raise ValueError(f"conv2d: kernel size must be odd, got {k}")
    if grid.shape[2] != cin:
        raise DimensionError(f"conv2d: grid has {grid.shape[2]} channels, weights expect {cin}")
    if bias.shape != (cout,):
        raise DimensionError(f"conv2d: bias {bias.shape} does not match cout={cout}")
    return Conv2d.apply(grid, weights, bias)


# ------------------------------------------------------------- resampling

def interpolation_matrix(src: int, dst: int) -> np.ndarray:
    """[dst x src] linear interpolation weights, align-corners-false, clamped at the borders"""
    coord = (np.arange(dst, dtype=DTYPE) + 0.5) * src / dst - 0.5
    coord = np.clip(coord, 0.0, src - 1)
    i0 = np.floor(coord).astype(int)
    i1 = np.minimum(i0 + 1, src - 1)
    lam = coord - i0
    m = np.zeros((dst, src), dtype=DTYPE)
    rows = np.arange(dst)
    np.add.at(m, (rows, i0), 1.0 - lam)
    np.add.at(m, (rows, i1), lam)
    return m


class BilinearResize(Function):
    kind = "bilinear_resize"

    def forward(self, x, new_h: int = 1, new_w: int = 1):
        rh = interpolation_matrix(x.shape[0], new_h)
        rw = interpolation_matrix(x.shape[1], new_w)
        self.saved["rh"], self.saved["rw"] = rh, rw
        tmp = np.tensordot(rh, x, axes=(1, 0))                      # (nh, w, c)
        return np.tensordot(tmp, rw, axes=(1, 1)).transpose(0, 2, 1)  # (nh, nw, c)

    def backward(self, grad):
        rh, rw = self.saved["rh"], self.saved["rw"]
        g = np.tensordot(grad, rw, axes=(1, 0)).transpose(0, 2, 1)  # (nh, w, c)
        return (np.tensordot(rh.T, g, axes=(1, 0)),)


def bilinear_resize(grid: Tensor, new_h: int, new_w: int) -> Tensor:
    """Resize an [h x w x c] grid; equal sizes pass through untouched"""
    if grid.ndim != 3:
        raise DimensionError(f"bilinear_resize expects [h x w x c], got {grid.shape}")
    if new_h < 1 or new_w < 1:
        raise ValueError(f"bilinear_resize target must be positive, got {new_h}x{new_w}")
    if (new_h, new_w) == grid.shape[:2]:
        return grid
    return BilinearResize.apply(grid, new_h=new_h, new_w=new_w)


# ---------------------------------------------------------- normalisation

class LayerNorm(Function):
    kind = "layer_norm"

    def forward(self, x, gamma, beta, eps: float = 1e-5):
        mean = x.mean(axis=-1, keepdims=True)
        centered = x - mean
        var = (centered ** 2).mean(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = centered * inv_std
        self.saved["xhat"], self.saved["inv_std"] = xhat, inv_std
        return xhat * gamma + beta

    def backward(self, grad):
        _, gamma, _ = self.inputs
        xhat, inv_std = self.saved["xhat"], self.saved["inv_std"]
        lead = tuple(range(grad.ndim - 1))
        d_gamma = (grad * xhat).sum(axis=lead)
        d_beta = grad.sum(axis=lead)
        d_xhat = grad * gamma.data
        d_x = inv_std * (
            d_xhat
            - d_xhat.mean(axis=-1, keepdims=True)
            - xhat * (d_xhat * xhat).mean(axis=-1, keepdims=True)
        )
        return d_x, d_gamma, d_beta


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean / unit variance, then scale and shift"""
    if eps <= 0:
        raise ValueError("layer_norm eps must be positive")
    c = x.shape[-1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"layer_norm: gamma {gamma.shape} / beta {beta.shape} do not fit {x.shape}")
    return LayerNorm.apply(x, gamma, beta, eps=eps)


# ------------------------------------------------------------ shape plumbing

class Reshape(Function):
    kind = "reshape"

    def forward(self, a, shape=()):
        return a.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.inputs[0].shape),)


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    if int(np.prod(shape)) != a.size:
        raise DimensionError(f"reshape: cannot view {a.shape} as {shape}")
    return Reshape.apply(a, shape=tuple(shape))


class Transpose(Function):
    kind = "transpose"

    def forward(self, a):
        return a.T

    def backward(self, grad):
        return (grad.T,)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got {a.shape}")
    return Transpose.apply(a)


class SliceLast(Function):
    kind = "slice_cols"

    def forward(self, a, start: int = 0, stop: int = 0):
        self.saved["bounds"] = (start, stop)
        return a[..., start:stop]

    def backward(self, grad):
        start, stop = self.saved["bounds"]
        out = np.zeros_like(self.inputs[0].data)
        out[..., start:stop] = grad
        return (out,)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    """Columns [start, stop) of the last axis"""
    if not 0 <= start < stop <= a.shape[-1]:
        raise DimensionError(f"slice_cols: [{start}, {stop}) out of range for {a.shape}")
    return SliceLast.apply(a, start=start, stop=stop)


class ConcatLast(Function):
    kind = "concat_last"

    def forward(self, *arrays):
        self.saved["splits"] = np.cumsum([a.shape[-1] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=-1)

    def backward(self, grad):
        return tuple(np.split(grad, self.saved["splits"], axis=-1))


def concat_last(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate along the last (channel) axis"""
    if not tensors:
        raise ValueError("concat_last needs at least one tensor")
    lead = tensors[0].shape[:-1]
    for t in tensors[1:]:
        if t.shape[:-1] != lead:
            raise DimensionError(f"concat_last: leading extents {t.shape[:-1]} != {lead}")
    return ConcatLast.apply(*tensors)


class SumAll(Function):
    kind = "sum"

    def forward(self, a):
        return np.array(a.sum())

    def backward(self, grad):
        return (np.full_like(self.inputs[0].data, grad),)


def sum_all(a: Tensor) -> Tensor:
    return SumAll.apply(a)


def mean_all(a: Tensor) -> Tensor:
    return elementwise("scale", sum_all(a), 1.0 / a.size)


class Patchify(Function):
    kind = "patchify"

    def forward(self, image, patch: int = 1):
        h, w, ch = image.shape
        self.saved["patch"] = patch
        blocks = image.reshape(h // patch, patch, w // patch, patch, ch).transpose(0, 2, 1, 3, 4)
        return blocks.reshape((h // patch) * (w // patch), patch * patch * ch)

    def backward(self, grad):
        h, w, ch = self.inputs[0].shape
        p = self.saved["patch"]
        blocks = grad.reshape(h // p, w // p, p, p, ch).transpose(0, 2, 1, 3, 4)
        return (blocks.reshape(h, w, ch),)


def patchify(image: Tensor, patch: int) -> Tensor:
    """[H x W x ch] -> [(H/p)(W/p) x p*p*ch], patches in row-major lattice order"""
    if image.ndim != 3:
        raise DimensionError(f"patchify expects [H x W x ch], got {image.shape}")
    h, w, _ = image.shape
    if patch < 1 or h % patch or w % patch:
        raise DimensionError(f"image extents {h}x{w} are not divisible by patch {patch}")
    return Patchify.apply(image, patch=patch)
