import numpy as np
import pytest


SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
# basis index bit = 1 means spin up, so |0> = down, |1> = up
SZ = np.diag([-1.0, 1.0]).astype(complex)


def site_op(op, site, L):
    """Kronecker embedding; site 0 is the least significant bit (rightmost factor)."""
    out = np.eye(1)
    for s in reversed(range(L)):
        out = np.kron(out, op if s == site else np.eye(2))
    return out


def dense_hamiltonian(table, delta):
    L = table.L
    ops = {name: [site_op(m, s, L) for s in range(L)] for name, m in (("x", SX), ("y", SY), ("z", SZ))}
    H = np.zeros((1 << L, 1 << L), dtype=complex)
    for i in range(L):
        H += table.site_field[i] * ops["z"][i]
        for j in range(i + 1, L):
            Jij = table.pair_coupling[i, j]
            H += Jij * (ops["x"][i] @ ops["x"][j] + ops["y"][i] @ ops["y"][j] + delta * ops["z"][i] @ ops["z"][j])
    return H


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(L, rng):
    v = rng.normal(size=1 << L) + 1j * rng.normal(size=1 << L)
    return v / np.linalg.norm(v)


_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
