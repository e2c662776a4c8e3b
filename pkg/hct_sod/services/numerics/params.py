"""
Named learnable tensors
"""
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from hct_sod.errors import CheckpointFormatError, CheckpointShapeError
from hct_sod.services.numerics.tensor import DTYPE, Tensor


class ParamStore:
    """Ordered name -> Tensor mapping; insertion order is the canonical parameter order"""

    def __init__(self):
        self._params: Dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter {name!r} registered twice")
        tensor = Tensor(np.ascontiguousarray(value, dtype=DTYPE), requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def items(self) -> List[Tuple[str, Tensor]]:
        return list(self._params.items())

    def num_scalars(self) -> int:
        return sum(t.size for t in self._params.values())

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.zero_grad()

    def grads(self) -> Dict[str, np.ndarray]:
        """Current gradients; parameters the last backward never reached report zeros"""
        return {
            name: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for name, t in self._params.items()
        }

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Strict load: names must match exactly and every shape must agree"""
        unknown = [name for name in state if name not in self._params]
        if unknown:
            raise CheckpointFormatError(f"unknown parameter name(s): {', '.join(unknown)}")
        missing = [name for name in self._params if name not in state]
        if missing:
            raise CheckpointFormatError(f"missing parameter(s): {', '.join(missing)}")
        for name, value in state.items():
            target = self._params[name]
            if tuple(np.shape(value)) != target.shape:
                raise CheckpointShapeError(
                    f"parameter {name!r}: stored shape {tuple(np.shape(value))} != model shape {target.shape}"
                )
        for name, value in state.items():
            self._params[name].data[...] = value

    def copy_prefix(self, src_prefix: str, dst_prefix: str) -> None:
        """Overwrite every dst_prefix.* parameter with its src_prefix.* twin"""
        for name, tensor in self._params.items():
            if name.startswith(src_prefix):
                twin = dst_prefix + name[len(src_prefix):]
                self._params[twin].data[...] = tensor.data
