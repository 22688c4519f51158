import math

import numpy as np
import pytest

from hormander import expr as E
from hormander.param import build_from_representation

LOG_NODES = np.linspace(0.0, math.log(1e8), 2001)


def exp_sqrt_log(x_hi=math.log(1e8), n=4001):
    """Table of exp(sqrt(log t)); log-log interpolation keeps it accurate between nodes."""
    x = np.linspace(0.0, x_hi, n)
    return E.Table(np.exp(x), np.exp(np.sqrt(x)))


def _rep_oscillating():
    t = np.exp(LOG_NODES)
    return build_from_representation(lambda s: 0.03 * np.sin(np.log(s)),
                                     lambda s: 0.7 + 0.2 * np.cos(0.5 * np.log(s)), t)


def _rep_log():
    t = np.exp(LOG_NODES)
    return build_from_representation(0.0, lambda s: 1.0 / (1.0 + np.log(s)), t)


def corpus():
    """Named parameters covering powers, logs, representations and the counterexample."""
    L = E.LogShift()
    return {
        "t^0.5": E.Power(0.5),
        "t^2": E.Power(2.0),
        "t^-1": E.Power(-1.0),
        "1+log t": L,
        "t^2(1+log t)": E.Power(2.0) * L,
        "t^0.5(1+log t)": E.Power(0.5) * L,
        "1/(1+log t)": E.PowerOf(L, -1.0),
        "t+1": E.Sum((E.Power(1.0), E.Constant(1.0))),
        "rep oscillating": _rep_oscillating(),
        "rep 1+log t": _rep_log(),
        "exp sqrt log": exp_sqrt_log(),
        "appendix": E.AppendixParam(),
    }


ORDER_PAIRS = [(0.0, 1.0), (0.0, 2.0), (-1.0, 1.0), (-0.5, 3.0), (1.0, 4.0)]


@pytest.fixture(scope="session")
def param_corpus():
    return corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s[1:s.index("]")])):
            terminalreporter.write_line(line)
