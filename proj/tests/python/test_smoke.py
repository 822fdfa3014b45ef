import json
import os
from pathlib import Path

import pytest

import rtoslab

ROOT = Path(os.environ.get("RTOSLAB_SOURCE_DIR", Path(__file__).resolve().parents[2]))
SCENARIOS = ROOT / "scenarios"


def test_architectures():
    ids = rtoslab.architectures()
    assert len(ids) == 11
    assert "baseline" in ids and "defer-bitmap" in ids


def test_explore_fifo_insert_and_mutant():
    (ok,) = rtoslab.explore(SCENARIOS / "fig3_fifo_insert.json")
    (bad,) = rtoslab.explore(SCENARIOS / "fig3_nonatomic.json")
    assert ok["violatingSchedules"] == 0
    assert bad["violatingSchedules"] > 0
    assert ok["schedules"] == bad["schedules"]
    assert bad["traces"][0]["outcome"]["invariant"] == "structure"


def test_replay_reproduces_trace():
    (bad,) = rtoslab.explore(SCENARIOS / "fig3_nonatomic.json")
    r = rtoslab.replay(SCENARIOS / "fig3_nonatomic.json", bad["traces"][0])
    assert r["reproduced"]
    assert "lost an entry" in r["outcome"]["message"]


def test_explore_inline_dict():
    sc = {
        "schema": "rtoslab.scenario/1",
        "name": "inline",
        "architecture": ["baseline", "strictly-atomic"],
        "semaphores": [{"name": "s", "isrReleased": True}],
        "tasks": [{"priority": 1, "script": [{"op": "take", "semaphore": "s"}]}],
        "isrs": [{"priority": 0, "gives": ["s"]}],
    }
    reps = rtoslab.explore(sc)
    assert [r["architecture"] for r in reps] == ["baseline", "strictly-atomic"]
    assert all(r["violatingSchedules"] == 0 for r in reps)


def test_schema_error_is_value_error():
    with pytest.raises(ValueError, match=r"\$\.tasks\[0\]"):
        rtoslab.explore({"schema": "rtoslab.scenario/1", "name": "x", "tasks": [{"priority": "high"}]})
    with pytest.raises(ValueError):
        rtoslab.masked_interval_sweep("defer-magic")


def test_sweep_slope():
    pts = rtoslab.masked_interval_sweep("baseline", [2, 4, 8])
    assert [p["peripheralKernelMax"] for p in pts] == [158, 174, 206]
    assert all(p["peripheralKernelMax"] == 0 for p in rtoslab.masked_interval_sweep("strictly-atomic", [2, 8]))


def test_bitmap_and_pathology():
    for bit in range(32):
        found, iters = rtoslab.bitmap_search(1 << bit)
        assert found == bit and iters <= 5
    assert rtoslab.ready_list_pathology("unsorted", 16) == 120
    assert rtoslab.ready_list_pathology("sorted-atomic", 4) == 48


def test_footprint():
    cfg = json.loads((ROOT / "configs" / "footprint_small.json").read_text())
    fp = rtoslab.memory_footprint("defer-semfifo", cfg)
    assert fp["bytes"] == 4 * cfg["numIsrSmphrs"] + 2 * cfg["isrSemaphores"]
    assert rtoslab.memory_footprint("strictly-atomic", cfg)["bytes"] == -4 * cfg["tasks"]


def test_dma_and_gpio():
    r = rtoslab.dma_demo(str(ROOT / "streams" / "five_frames.bin"))
    assert r["lost"] == 0 and r["intact"]
    assert rtoslab.gpio_demo(escape=False)["lost"] > 0
    assert rtoslab.gpio_demo(escape=True)["lost"] == 0


def test_stress_no_lost_nodes():
    r = rtoslab.stress(inserters=2, nodes=50)
    assert r["error"] is None
    assert r["inserted"] == r["extracted"] + r["remaining"]


def test_bench_and_report(tmp_path):
    files = rtoslab.run_bench(["baseline", "defer-bitmap"], [2, 4], tmp_path)
    assert any(p.name == "masked_interval.csv" for p in files)
    assert rtoslab.write_report(tmp_path).exists()
