import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pdbundle.core import SimplexIndicator
from pdbundle.matrix_game import generate_instance, side_oracle

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def game_subproblem(seed, n=10, density=0.5, gamma=None, side="x"):
    """Seeded prox subproblem of a random game: (f, h, x0, M)."""
    rng = np.random.default_rng(1000 + seed)
    gx = gamma if gamma is not None else float(rng.uniform(0.01, 0.2))
    game = generate_instance(n, n, density, gx, gx, seed)
    anchor = rng.dirichlet(np.ones(n))
    f = side_oracle(game, side, anchor)
    x0 = rng.dirichlet(np.ones(n))
    return f, SimplexIndicator(n), x0, game.M


@pytest.fixture
def subproblem():
    return game_subproblem(0)


@pytest.fixture
def small_game():
    return generate_instance(20, 20, 0.2, 0.05, 0.05, 1)


# acceptance criteria append (criterion, part, passed, detail) here; the summary
# hook prints one line per criterion at the end of the session
ACCEPTANCE = []


def record_criterion(criterion, part, passed, detail):
    ACCEPTANCE.append((criterion, part, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'} criterion {criterion} [{part}]: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted({c for c, *_ in ACCEPTANCE}):
        parts = [p for p in ACCEPTANCE if p[0] == crit]
        ok = all(p[2] for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}")
        for _, part, passed, detail in parts:
            terminalreporter.write_line(f"    {'ok  ' if passed else 'FAIL'} {part}: {detail}")
