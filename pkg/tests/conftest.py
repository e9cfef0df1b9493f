import numpy as np
import pytest


def fd_grad(f, x, h=1e-5):
    """Central differences written independently of malvis.nn.gradcheck."""
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        gflat[i] = (up - down) / (2 * h)
    return g


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


def probe_layer(layer, x, rng, training=True):
    """Analytic vs finite-difference gradients of sum(layer(x) * u)."""
    u = rng.normal(size=layer.forward(x, training).shape)
    layer._cache = None
    for p in layer.params():
        p.zero_grad()
    layer.forward(x, training)
    dx = layer.backward(u)

    def f():
        return float((layer.forward(x, training) * u).sum())

    errs = {}
    if dx is not None and x.dtype.kind == "f":
        errs["x"] = rel_err(dx, fd_grad(f, x))
    for i, p in enumerate(layer.params()):
        errs[i] = rel_err(p.grad.copy(), fd_grad(f, p.value))
    return errs


def away_from_zero(rng, shape, margin=0.05):
    x = rng.normal(size=shape)
    return np.where(np.abs(x) < margin, np.sign(x + 1e-9) * margin, x)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    """Print and remember one verdict line for the acceptance summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
