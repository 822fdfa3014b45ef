"""Simulator, schedule explorer and benchmarks for RTOS interrupt-masking architectures."""

import json as _json
from pathlib import Path as _Path

from . import _rtoslab
from ._rtoslab import ConfigError, SchemaError, architectures, bitmap_search, ready_list_pathology, systick_expiry

__all__ = [
    "ConfigError",
    "SchemaError",
    "architectures",
    "bitmap_search",
    "dma_demo",
    "explore",
    "fingerprint",
    "gpio_demo",
    "latency_probe",
    "load_scenario",
    "masked_interval_sweep",
    "memory_footprint",
    "ready_list_pathology",
    "replay",
    "run_bench",
    "stress",
    "systick_expiry",
    "write_report",
]


def _text(obj):
    if obj is None:
        return ""
    if isinstance(obj, (str, bytes)):
        return obj
    return _json.dumps(obj)


def load_scenario(path):
    return _json.loads(_Path(path).read_text())


def explore(scenario, archs=None, step_bound=0, cost_model=None):
    """Explore a scenario (dict or file path). Returns one report per architecture."""
    if isinstance(scenario, (str, _Path)) and not str(scenario).lstrip().startswith("{"):
        scenario = load_scenario(scenario)
    return _json.loads(_rtoslab.explore_scenario(_text(scenario), list(archs or []), step_bound, _text(cost_model)))


def replay(scenario, trace, cost_model=None):
    if isinstance(scenario, (str, _Path)) and not str(scenario).lstrip().startswith("{"):
        scenario = load_scenario(scenario)
    return _json.loads(_rtoslab.replay(_text(scenario), _text(trace), _text(cost_model)))


def masked_interval_sweep(arch, ns=(2, 4, 8, 16, 32), cost_model=None):
    return _json.loads(_rtoslab.masked_interval_sweep(arch, list(ns), _text(cost_model)))


def memory_footprint(arch, config=None):
    return _json.loads(_rtoslab.memory_footprint(arch, _text(config)))


def latency_probe(arch, cost_model=None):
    return _json.loads(_rtoslab.latency_probe(arch, _text(cost_model)))


def dma_demo(stream=None, delay=10_000, mode="circular", threshold=0, capacity=1024):
    return _json.loads(_rtoslab.dma_demo(stream, delay, mode, threshold, capacity))


def gpio_demo(arch="baseline", n=32, escape=False, bytes=200, byte_period=200, mask_period=2000):
    return _json.loads(_rtoslab.gpio_demo(arch, n, escape, bytes, byte_period, mask_period))


def stress(variant="sorted-atomic", inserters=3, nodes=200, seed=1):
    return _json.loads(_rtoslab.stress(variant, inserters, nodes, seed))


def run_bench(archs, ns, out):
    return [_Path(p) for p in _rtoslab.run_bench(list(archs), list(ns), _Path(out))]


def write_report(out):
    return _Path(_rtoslab.write_report(_Path(out)))


def fingerprint(config):
    return _rtoslab.fingerprint(_text(config))
