from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from asmseg import workflow as wf  # noqa: E402
from asmseg.config import RunConfig  # noqa: E402
from asmseg.manifest import DatasetManifest, parse_manifest  # noqa: E402
from asmseg.synth import default_spec, default_stubs, generate_benchmark  # noqa: E402

BENCH_SEED = 7
N_TEST, N_TRAIN, N_PLANTED = 50, 200, 60


@dataclass
class Benchmark:
    root: Path
    manifest: DatasetManifest
    model_dir: Path
    run_dir: Path
    report: Path
    config: RunConfig
    calibration: object
    traces: dict
    tables: list
    seconds: float


def build_benchmark(root: Path, seed: int = BENCH_SEED) -> Benchmark:
    """Generate, train, run, and evaluate the seeded synthetic benchmark."""
    import time

    start = time.perf_counter()
    spec = default_spec(seed)
    path = generate_benchmark(spec, default_stubs(spec, seed), N_TEST, root / "data",
                              n_train=N_TRAIN, n_planted=N_PLANTED)
    manifest = parse_manifest(path)
    config = RunConfig(seed=seed, selector_pair=("perceptron", "rules"))
    config, calibration = wf.train_all(manifest, root / "models", config)
    traces = wf.run_dataset(manifest, root / "models", root / "run", config)
    tables = wf.evaluate_methods(manifest, root / "run")
    wf.write_evaluation(tables, manifest, root / "report" / "report.txt")
    return Benchmark(root, manifest, root / "models", root / "run", root / "report" / "report.txt",
                     config, calibration, traces, tables, time.perf_counter() - start)


@pytest.fixture(scope="session")
def benchmark(tmp_path_factory) -> Benchmark:
    return build_benchmark(tmp_path_factory.mktemp("bench"))


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts so they show without ``-s``."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
