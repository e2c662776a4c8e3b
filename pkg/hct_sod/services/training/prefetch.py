"""
Bounded hand-off queue: a producer thread assembles batches ahead of the training thread
"""
import queue
import threading
from typing import Callable, Generic, Iterator, Sequence, TypeVar

from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

Plan = TypeVar("Plan")
Batch = TypeVar("Batch")

_DONE = object()


class _Failure:
    def __init__(self, error: BaseException):
        self.error = error


class BatchPrefetcher(Generic[Plan, Batch]):
    """
    Builds batches from plans in a background thread, at most `depth` ahead.
    Batches come out in plan order; a producer exception is re-raised in the
    consuming thread.
    """

    def __init__(self, plans: Sequence[Plan], build: Callable[[Plan], Batch], depth: int = 2):
        if depth < 1:
            raise ValueError("prefetch depth must be at least 1")
        self._plans = list(plans)
        self._build = build
        self._queue: "queue.Queue" = queue.Queue(maxsize=depth)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._produce, name="batch-prefetch", daemon=True)

    def _put(self, item) -> bool:
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _produce(self) -> None:
        try:
            for plan in self._plans:
                if not self._put(self._build(plan)):
                    return
        except BaseException as e:  # handed to the consumer
            logger.error(f"Batch assembly failed: {e}")
            self._put(_Failure(e))
            return
        self._put(_DONE)

    def __iter__(self) -> Iterator[Batch]:
        self._thread.start()
        try:
            while True:
                item = self._queue.get()
                if item is _DONE:
                    return
                if isinstance(item, _Failure):
                    raise item.error
                yield item
        finally:
            self._stop.set()
            self._thread.join()
