import numpy as np
import pytest


@pytest.fixture
def announce(capsys):
    """Print a live pass/fail line for an acceptance criterion."""

    def _announce(name: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            suffix = f" ({detail})" if detail else ""
            print(f"ACCEPTANCE {name}: {status}{suffix}", flush=True)
        assert ok, f"{name}: {detail}"

    return _announce


def brute_closure(collection, indices, hi):
    """Independent oracle: intersect by scanning membership over 1..hi."""
    out = []
    for x in range(1, hi + 1):
        if all(collection.membership(i, x) for i in indices):
            out.append(x)
    return out


def total_variation(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * np.abs(p - q).sum()
