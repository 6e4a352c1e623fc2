"""Embedded reference shock-layer locations for the two long-time tables.

The `table1` and `table2` CLI commands reproduce these tabulations and
emit companion diff reports against them.  The values feed those diff
reports only; the library and its unit tests never consume them as
oracles.
"""

from __future__ import annotations

from typing import Dict, Sequence, Tuple

# Viscous Burgers, u0(x) = x^2/2 - x - 1/2 on [-1, 1], u(+-1) = -+1.
TABLE1_EPSILONS: Tuple[float, ...] = (0.1, 0.07, 0.06, 0.04)
TABLE1_TIMES: Tuple[float, ...] = (0.2, 1.0, 5e3, 5e4, 1e5, 1e6)
TABLE1_XI: Dict[float, Tuple[float, ...]] = {
    0.2: (-0.3954, -0.4010, -0.4028, -0.4065),
    1.0: (-0.3233, -0.3293, -0.3306, -0.3808),
    5e3: (-0.0044, -0.2231, -0.3032, -0.3315),
    5e4: (-4.3033e-12, -0.0942, -0.2198, -0.3314),
    1e5: (-4.3033e-12, -0.0528, -0.1845, -0.2531),
    1e6: (-4.3033e-12, -8.7386e-6, -8.7386e-6, -0.0379),
}

# Jin-Xin relaxation with a = 1, f(u) = u^2/2, same initial u.
TABLE2_EPSILONS: Tuple[float, ...] = (0.1, 0.07, 0.055, 0.04, 0.02)
TABLE2_TIMES: Tuple[float, ...] = (0.2, 1.0, 10.0, 1e3, 1e4, 0.5e6)
TABLE2_XI: Dict[float, Tuple[float, ...]] = {
    0.2: (-0.4008, -0.4020, -0.4029, -0.4040, -0.4059),
    1.0: (-0.3314, -0.3345, -0.3360, -0.3374, -0.3389),
    10.0: (-0.3070, -0.3263, -0.3304, -0.3320, -0.3326),
    1e3: (-0.0103, -0.1600, -0.2562, -0.3181, -0.3325),
    1e4: (-1.9725e-12, -0.0084, -0.1115, -0.2531, -0.3320),
    0.5e6: (-1.9725e-12, -2.2102e-11, -1.5057e-10, -0.0379, -0.3099),
}


def reference_table(which: str) -> Tuple[Sequence[float], Sequence[float],
                                         Dict[float, Tuple[float, ...]]]:
    """(epsilons, times, {time: row of xi}) for 'table1' or 'table2'."""
    if which == "table1":
        return TABLE1_EPSILONS, TABLE1_TIMES, TABLE1_XI
    if which == "table2":
        return TABLE2_EPSILONS, TABLE2_TIMES, TABLE2_XI
    raise ValueError(f"unknown table {which!r}")
