"""Independent vectorized ALPHA implementation used as a test oracle.

Computes the whole supermartingale trajectory with numpy array math (a
direct cumulative product in log space), sharing no code with the
engine's scalar update loop. No saturation cap is applied here; callers
compare trajectories only below the engine's cap.
"""

from __future__ import annotations

import numpy as np

ACTIVE = "active"
PROVEN_TRUE = "proven_true"
PROVEN_FALSE = "proven_false"

EPS_CAP = 1e-6


def reference_alpha(x, eta0: float, d: float, total: int):
    """Trajectory of the ALPHA TSM over the draw sequence ``x``.

    Returns (log_values, status, consumed): log_values[i] is the log TSM
    after consuming draws x[0..i] for i < consumed; status is the state
    after attempting all of ``x`` (a terminal transition stops
    consumption at ``consumed`` draws).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    j = np.arange(1, n + 1, dtype=float)
    s_prev = np.concatenate(([0.0], np.cumsum(x)[:-1]))
    mu = (total * 0.5 - s_prev) / (total - (j - 1))
    status = ACTIVE
    consumed = n
    false_hits = np.flatnonzero(mu <= 0.0)
    true_hits = np.flatnonzero(mu >= 1.0)
    first_false = false_hits[0] if false_hits.size else n
    first_true = true_hits[0] if true_hits.size else n
    terminal = min(first_false, first_true)
    if terminal < n:
        consumed = int(terminal)
        status = PROVEN_FALSE if first_false < first_true else PROVEN_TRUE
    x = x[:consumed]
    j = j[:consumed]
    s_prev = s_prev[:consumed]
    mu = mu[:consumed]
    c = (eta0 - 0.5) / 2.0
    eta = (d * eta0 + s_prev) / (d + (j - 1))
    eta = np.maximum(eta, mu + c / np.sqrt(d + (j - 1)))
    eta = np.minimum(eta, 1.0 - EPS_CAP)
    m = x * eta / mu + (1.0 - x) * (1.0 - eta) / (1.0 - mu)
    log_values = np.cumsum(np.log(m))
    return log_values, status, consumed


def reference_final_value(x, eta0: float, d: float, total: int) -> float:
    logs, status, consumed = reference_alpha(x, eta0, d, total)
    if status == PROVEN_FALSE:
        return np.inf
    if status == PROVEN_TRUE:
        return 0.0
    return float(np.exp(logs[-1])) if consumed else 1.0
