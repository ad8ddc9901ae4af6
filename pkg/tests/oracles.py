"""Independent oracles used by the tests: finite differences, Gaussian window
mass, and distance to the S curve.  These stay deliberately brute-force."""

import math

import numpy as np

from ballgen.data import s_curve_points


def central_difference(f, x0, step):
    """Central-difference gradient of scalar f at flat array x0."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (f(xp) - f(xm)) / (2.0 * step)
    return grad


def relative_error(analytic, reference):
    """Max |a - r| scaled by max(1, max|r|); 'relative' with an absolute floor."""
    analytic = np.asarray(analytic, dtype=float)
    reference = np.asarray(reference, dtype=float)
    scale = max(1.0, float(np.max(np.abs(reference))) if reference.size else 1.0)
    return float(np.max(np.abs(analytic - reference))) / scale


def normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def mixture_window_mass(spec, center, radius):
    """Exact mixture mass of the 1-D interval [center - radius, center + radius]."""
    total = 0.0
    for w, mu, var in zip(spec.weights, spec.means[:, 0], spec.variances[:, 0]):
        sd = math.sqrt(var)
        total += w * (
            normal_cdf((center + radius - mu) / sd) - normal_cdf((center - radius - mu) / sd)
        )
    return total


_CURVE_T = np.linspace(0.0, 1.5 * np.pi, 4001)
_CURVE = np.concatenate(
    [s_curve_points(_CURVE_T, np.ones_like(_CURVE_T)), s_curve_points(_CURVE_T, np.zeros_like(_CURVE_T))]
)


def distance_to_s_curve(points):
    """Min distance from each point to a dense discretization of the S curve."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.linalg.norm(points[:, None, :] - _CURVE[None, :, :], axis=2)
    return d.min(axis=1)
