import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-size runs (deselect with -m 'not slow')")


@pytest.fixture
def edge_file(tmp_path):
    def write(edges):
        path = tmp_path / "edges.txt"
        path.write_text("".join(f"{u} {v}\n" for u, v in edges))
        return str(path)
    return write
