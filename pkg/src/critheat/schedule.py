"""Radius and time schedules, held as logarithms.

The schedule uses p_j = n1^(j/(1-beta)), t_j = exp(p_j), R_j = sqrt(t_j).
Even at j = 1 the value t_j is far beyond floating range, so only log
quantities are stored.  The offsets log t_j^+ - p_j are O(log p_j), while p_j
reaches 2^80 at n1 = 16, j = 5.  That is below double precision, so
everything is carried in mpmath at a working precision that keeps the
offsets exact to ~1e-20.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .errors import ConfigurationError

WORK_DPS = 60


def _mpf(x):
    with mp.workdps(WORK_DPS):
        return mp.mpf(x)


@dataclass(frozen=True)
class TimeSchedule:
    n1: int
    beta: float
    jmax: int
    log_tj: tuple
    log_tj_plus: tuple
    log_tj_minus: tuple
    plus_form: str = "double"

    @property
    def log_tI(self):
        return self.log_tj_minus[0]

    def log_Rj(self, j):
        return self.log_tj[j - 1] / 2

    def p(self, j):
        return self.log_tj[j - 1]


def schedule_condition(log_R_a, log_R_b):
    """(2 R_a) log(2 R_a) < R_b / log R_b, compared in log form.

    Returns the slack log(R_b/log R_b) - log(2 R_a log 2 R_a), positive when
    the pair is admissible.
    """
    with mp.workdps(WORK_DPS):
        a = mp.mpf(log_R_a) + mp.log(2)
        b = mp.mpf(log_R_b)
        if a <= 0 or b <= 0:
            return mp.mpf(-1)
        return (b - mp.log(b)) - (a + mp.log(a))


def validate_radii(log_radii):
    """Check e < R_1 and every consecutive pair; raise naming the first failure."""
    if not log_radii:
        return
    if log_radii[0] <= 1:
        raise ConfigurationError("first radius must exceed e", log_R1=float(log_radii[0]))
    for j in range(len(log_radii) - 1):
        if schedule_condition(log_radii[j], log_radii[j + 1]) <= 0:
            raise ConfigurationError(
                "radius schedule violates the separation condition",
                pair=(j + 1, j + 2),
                log_R=(float(log_radii[j]), float(log_radii[j + 1])),
            )


def make_schedule(n1, beta, jmax, plus_form="double"):
    """Log-time schedule: p_j, log t_j^+ and log t_j^-, for j = 1..jmax.

    ``plus_form`` selects t_j^+ = (2 R_j log 2R_j)^2 ("double", default) or
    the alternative (R_j log R_j)^2 ("single").
    """
    if not 0.5 < beta < 1:
        raise ConfigurationError("beta must lie in (1/2, 1)", beta=beta)
    if int(n1) != n1 or n1 < 4:
        raise ConfigurationError("n1 must be an integer >= 4", n1=n1)
    if not 1 <= jmax <= 8:
        raise ConfigurationError("jmax must lie in 1..8", jmax=jmax)
    if plus_form not in ("double", "single"):
        raise ConfigurationError("plus_form must be 'double' or 'single'", plus_form=plus_form)
    with mp.workdps(WORK_DPS):
        expo = mp.mpf(1) / (1 - mp.mpf(beta))
        ps, plus, minus = [], [], []
        for j in range(1, jmax + 1):
            p = mp.power(n1, j * expo)
            ps.append(p)
            if plus_form == "double":
                plus.append(p + 2 * mp.log(2) + 2 * mp.log(p / 2 + mp.log(2)))
            else:
                plus.append(p + 2 * mp.log(p / 2))
            minus.append(p - 2 * mp.log(p / 2))
        validate_radii([p / 2 for p in ps])
    sched = TimeSchedule(int(n1), float(beta), int(jmax), tuple(ps), tuple(plus), tuple(minus),
                         plus_form)
    for j in range(jmax):
        ok = minus[j] < ps[j] < plus[j]
        if j + 1 < jmax:
            ok = ok and plus[j] < minus[j + 1]
        if not ok:
            raise ConfigurationError("window ordering fails", j=j + 1)
    return sched
