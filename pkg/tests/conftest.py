import os
import sys
import tempfile
from pathlib import Path

# Config reads the environment at import time
_SESSION_DIR = Path(tempfile.mkdtemp(prefix="centdian-tests-"))
os.environ.setdefault("CENTDIAN_DATA_DIR", str(_SESSION_DIR / "data"))
os.environ.setdefault("CENTDIAN_LOG_DIR", str(_SESSION_DIR / "logs"))
os.environ.setdefault("CENTDIAN_LOG_TO_FILE", "false")

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import pytest  # noqa: E402

from core.instances import GenParams, generate, prop2_fixture  # noqa: E402
from solvers.mip_engine import BnbParams  # noqa: E402
from utils.file_manager import file_manager  # noqa: E402
from utils.run_ledger import run_ledger  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_storage(tmp_path, monkeypatch):
    """Every test gets its own ledger file and output directory."""
    run_ledger.use_file(tmp_path / "run_ledger.json")
    monkeypatch.setattr(file_manager, "output_dir", tmp_path / "outputs")
    yield tmp_path


@pytest.fixture
def prop2():
    return prop2_fixture()


@pytest.fixture
def tight():
    """Branch-and-bound parameters tight enough for exact objective comparisons."""
    return BnbParams(gap=1e-9)


@pytest.fixture(params=[(5, 0.4, 1), (5, 0.25, 2)], ids=["n5-a0.4-s1", "n5-a0.25-s2"])
def small_instance(request):
    n, alpha, seed = request.param
    return generate(GenParams(n, alpha=alpha, seed=seed))


def labels_to_edges(instance, labels):
    net = instance.network
    return frozenset(net.edge_by_labels(a, b) for a, b in labels)


S_STAR = ((1, 3), (2, 4), (3, 4))


def oracle_instance(n, alpha, seed):
    """Generated instance small enough to enumerate, skipped otherwise."""
    instance = generate(GenParams(n, alpha=alpha, seed=seed))
    if instance.network.n_edges > 12:
        pytest.skip(f"|E|={instance.network.n_edges} is beyond oracle scale")
    return instance
