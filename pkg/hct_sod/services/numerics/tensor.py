"""
Dense float64 tensors with reverse-mode differentiation
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from hct_sod.errors import DimensionError, NonFiniteError

DTYPE = np.float64

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]


class Function:
    """
    Base class for differentiable operations.

    Subclasses implement `forward` on raw arrays and `backward`, which maps the
    gradient of the output to one gradient (or None) per input tensor. Anything
    the backward rule needs is kept in `self.saved`.
    """

    kind: str = "function"

    def __init__(self, *inputs: "Tensor"):
        self.inputs: Tuple["Tensor", ...] = inputs
        self.saved: Dict[str, Any] = {}

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"forward not implemented for {self.kind}")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"backward not implemented for {self.kind}")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        """Run forward on the inputs' data and attach this node to the result"""
        fn = cls(*inputs)
        out = np.asarray(fn.forward(*(t.data for t in inputs), **kwargs), dtype=DTYPE)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(f"{cls.kind} produced non-finite values")
        requires_grad = any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=fn if requires_grad else None, _copy=False)


class Tensor:
    """Row-major float64 array plus gradient bookkeeping"""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Optional[Function] = None,
        name: Optional[str] = None,
        _copy: bool = True,
    ):
        arr = np.array(data, dtype=DTYPE) if _copy else data
        if arr.size == 0:
            raise DimensionError(f"tensor extents must be positive, got {arr.shape}")
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.creator = creator
        self.name = name
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self, grad: Optional[ArrayLike] = None) -> "Graph":
        """Accumulate d(self)/d(leaf) into every leaf that requires grad"""
        graph = Graph.from_output(self)
        graph.backward(grad)
        return graph

    # Operator sugar over the functional vocabulary
    def __add__(self, other):
        from hct_sod.services.numerics import ops
        return ops.elementwise("add", self, other)

    def __sub__(self, other):
        from hct_sod.services.numerics import ops
        return ops.elementwise("sub", self, other)

    def __mul__(self, other):
        from hct_sod.services.numerics import ops
        if isinstance(other, Tensor):
            return ops.elementwise("mul", self, other)
        return ops.elementwise("scale", self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from hct_sod.services.numerics import ops
        return ops.elementwise("scale", self, -1.0)

    def __matmul__(self, other):
        from hct_sod.services.numerics import ops
        return ops.matmul(self, other)

    def reshape(self, *shape: int) -> "Tensor":
        from hct_sod.services.numerics import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, tuple(shape))

    @property
    def T(self) -> "Tensor":
        from hct_sod.services.numerics import ops
        return ops.transpose(self)

    def sum(self) -> "Tensor":
        from hct_sod.services.numerics import ops
        return ops.sum_all(self)

    def mean(self) -> "Tensor":
        from hct_sod.services.numerics import ops
        return ops.mean_all(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        op = f" op={self.creator.kind}" if self.creator is not None else ""
        return f"Tensor(shape={self.shape}{label}{op} requires_grad={self.requires_grad})"


@dataclass
class GraphNode:
    kind: str
    input_ids: Tuple[int, ...]
    output_id: int
    function: Function
    output: Tensor


class Graph:
    """Operations reachable from one output, in topological order"""

    def __init__(self, output: Tensor, nodes: List[GraphNode]):
        self.output = output
        self.nodes = nodes

    @classmethod
    def from_output(cls, output: Tensor) -> "Graph":
        nodes: List[GraphNode] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(output, False)]
        while stack:
            tensor, expanded = stack.pop()
            fn = tensor.creator
            if fn is None:
                continue
            if expanded:
                nodes.append(GraphNode(
                    kind=fn.kind,
                    input_ids=tuple(id(t) for t in fn.inputs),
                    output_id=id(tensor),
                    function=fn,
                    output=tensor,
                ))
                continue
            if id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            for inp in fn.inputs:
                if inp.creator is not None and id(inp) not in visited:
                    stack.append((inp, False))
        return cls(output, nodes)

    def backward(self, grad: Optional[ArrayLike] = None) -> None:
        if not self.output.requires_grad:
            raise ValueError("backward called on a tensor that does not require grad")
        seed = np.ones_like(self.output.data) if grad is None else np.array(grad, dtype=DTYPE)
        if seed.shape != self.output.shape:
            raise DimensionError(f"seed gradient {seed.shape} does not match output {self.output.shape}")

        if self.output.creator is None:
            _accumulate_leaf(self.output, seed)
            return

        pending: Dict[int, np.ndarray] = {id(self.output): seed}
        for node in reversed(self.nodes):
            upstream = pending.pop(node.output_id, None)
            if upstream is None:
                continue
            input_grads = node.function.backward(upstream)
            for inp, g in zip(node.function.inputs, input_grads):
                if g is None or not inp.requires_grad:
                    continue
                if inp.creator is None:
                    _accumulate_leaf(inp, g)
                elif id(inp) in pending:
                    pending[id(inp)] = pending[id(inp)] + g
                else:
                    pending[id(inp)] = g
        self.output.grad = seed


def _accumulate_leaf(leaf: Tensor, grad: np.ndarray) -> None:
    if grad.shape != leaf.shape:
        raise DimensionError(f"gradient {grad.shape} does not match leaf {leaf.shape}")
    leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    """Wrap constants; tensors pass through"""
    return value if isinstance(value, Tensor) else Tensor(value)
