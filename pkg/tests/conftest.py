import pytest

TINY = """\
geometry.n_h = 6
geometry.m_h = 2
scenario.architectures = fris_spo, fris_spo_bf_ps, ris_conventional_random_ps, ris_conventional_bf_ps, ris_compact_bf_ps
scenario.n_antennas = 2
budget.gamma_bar_b_db = 0, 10, 20
learning.episodes = 5
fitting.t_sp = 500
mc.trials = 2000
mc.seed = 4
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return path


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
