from typing import Callable, Sequence, TypeVar

import prefect
import prefect.cache_policies
from prefect.task_runners import ThreadPoolTaskRunner

from uosdetect.utilities.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def prefect_task(*args, **kwargs):
    """
    A decorator that creates a Prefect task with uosdetect defaults
    """
    kwargs.setdefault("cache_policy", prefect.cache_policies.NONE)
    kwargs.setdefault("persist_result", False)

    return prefect.task(*args, **kwargs)


def prefect_flow(*args, **kwargs):
    """
    A decorator that creates a Prefect flow with uosdetect defaults
    """
    kwargs.setdefault("persist_result", False)
    kwargs.setdefault("validate_parameters", False)

    return prefect.flow(*args, **kwargs)


def map_ordered(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: int,
    name: str = "uosdetect-map",
) -> list[R]:
    """
    Apply `fn` to every item and return the results in input order.

    With one worker (or one item) the calls run inline. Otherwise every item
    becomes a task of a flow backed by a thread pool of `workers` threads.
    Results are collected in submission order, so the output never depends on
    scheduling.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    logger.debug(f"Dispatching {len(items)} work items to {workers} workers")
    item_task = prefect_task(fn, name=f"{name}-item")

    @prefect_flow(name=name, task_runner=ThreadPoolTaskRunner(max_workers=workers))
    def map_flow():
        futures = [item_task.submit(item) for item in items]
        return [future.result() for future in futures]

    return map_flow()
