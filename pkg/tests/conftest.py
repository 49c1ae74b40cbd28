import math

import numpy as np
import pytest

from qmetapath.channel import ChannelSet, LinkBudget
from qmetapath.config import config_from_dict
from qmetapath.engine import QMetaConfig


def dense_gate(n_qubits, op):
    """Explicit 2^n x 2^n matrix of one gate, built entry by entry from the
    basis-index bit layout (qubit 0 = most significant bit)."""
    dim = 1 << n_qubits
    m = np.zeros((dim, dim), dtype=complex)

    def bit(i, q):
        return (i >> (n_qubits - 1 - q)) & 1

    for col in range(dim):
        if op.kind == "RY":
            c, s = math.cos(op.angle / 2), math.sin(op.angle / 2)
            flipped = col ^ (1 << (n_qubits - 1 - op.target))
            if bit(col, op.target) == 0:
                m[col, col] += c
                m[flipped, col] += s
            else:
                m[col, col] += c
                m[flipped, col] += -s
        else:
            row = col ^ (1 << (n_qubits - 1 - op.target)) if bit(col, op.control) else col
            m[row, col] = 1.0
    return m


def dense_circuit(n_qubits, ops):
    u = np.eye(1 << n_qubits, dtype=complex)
    for op in ops:
        u = dense_gate(n_qubits, op) @ u
    return u


@pytest.fixture
def desk_cfg():
    return QMetaConfig.desk_scale()


@pytest.fixture
def small_channels():
    rng = np.random.default_rng(7)
    k, n, q = 2, 8, 3

    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)

    idx = np.arange(n)
    coupling = np.exp(-np.abs(idx[:, None] - idx[None, :]))
    return ChannelSet(h_ue_ris=cn(k, n), h_ris_ap=cn(n, q), coupling=coupling)


@pytest.fixture
def unit_budget():
    return LinkBudget(tx_power=np.ones(2), noise_power=0.1)


DESK_DOC = {
    "system": {"n_elements": 32, "n_antennas": 8, "n_users": 2},
    "qmeta": {"layers": 3, "paths": 4, "k_top": 2},
}


@pytest.fixture
def desk_experiment():
    def make(**top):
        doc = {k: dict(v) for k, v in DESK_DOC.items()}
        doc.update(top)
        return config_from_dict(doc)

    return make


# -- acceptance reporting ----------------------------------------------------


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" -- {detail}" if detail else "")
        request.config._acceptance_lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
