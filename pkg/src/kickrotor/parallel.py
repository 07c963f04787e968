"""Deterministic fan-out of independent work items.

Each item is computed entirely inside one worker, and results come back in
input order, so the output does not depend on the worker count.
"""
import multiprocessing
from concurrent.futures import ProcessPoolExecutor


def run_indexed(fn, items, workers=1):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, items))
