import math

import numpy as np
import pytest

from selfaffine.model import IfsModel

SQRT3 = math.sqrt(3.0)
SIERPINSKI_OFFSETS = [[0.0, 0.0], [0.5, 0.0], [0.25, SQRT3 / 4]]


def sierpinski(p):
    half = 0.5 * np.eye(2)
    return IfsModel.from_arrays([half] * 3, SIERPINSKI_OFFSETS, p)


def bernoulli(beta):
    return IfsModel.from_arrays([[[beta]], [[beta]]], [[beta], [-beta]], [0.5, 0.5])


def random_contraction(rng, d, lo=0.1, hi=0.8):
    a = rng.standard_normal((d, d))
    return a * (rng.uniform(lo, hi) / np.linalg.norm(a, 2))


def random_model(rng, d=None, l=None, shared_linear=False, diagonal=False):
    d = d or int(rng.integers(1, 5))
    l = l or int(rng.integers(1, 7))
    if diagonal:
        shared = np.diag(rng.uniform(-0.8, 0.8, d))
    else:
        shared = random_contraction(rng, d)
    linears = [shared if shared_linear else random_contraction(rng, d) for _ in range(l)]
    return IfsModel.from_arrays(linears, rng.uniform(-2, 2, (l, d)), rng.dirichlet(np.ones(l)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and rep.when == "call":
                lines.append((props["criterion"], "PASS" if rep.passed else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines, key=lambda x: int(x[0].split(".")[0])):
            terminalreporter.write_line(f"{verdict}  {name}")
