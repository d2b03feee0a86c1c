"""Shared test oracles: exhaustive assignment search and a textbook Kalman filter.

These deliberately reimplement the checked math through a different route
(brute-force enumeration, Joseph-form updates in extended precision) so that
agreement with the library is evidence, not tautology.
"""

import itertools

import numpy as np

import trackfuse.motion as motion

SENTINEL = 1e9


def exhaustive_min_total(values: np.ndarray) -> float:
    """Minimum total over complete matchings of the smaller side (all pairs admissible)."""
    rows, cols = values.shape
    if rows <= cols:
        perms = np.array(list(itertools.permutations(range(cols), rows)), dtype=int)
        totals = values[np.arange(rows)[None, :], perms].sum(axis=1)
    else:
        perms = np.array(list(itertools.permutations(range(rows), cols)), dtype=int)
        totals = values[perms, np.arange(cols)[None, :]].sum(axis=1)
    return float(totals.min())


def exhaustive_gated_optimum(values: np.ndarray, mask: np.ndarray):
    """Best (inadmissible count, real cost) and the lex-smallest optimal matches.

    Enumerates every permutation of the sentinel-padded square problem, scoring
    each as (number of non-admissible pairs, summed real cost); among optima it
    returns the lexicographically smallest admissible match list.
    """
    rows, cols = values.shape
    n = max(rows, cols)
    best = None
    best_matches = None
    for perm in itertools.permutations(range(n)):
        sent = 0
        real = 0.0
        matches = []
        for r in range(rows):
            c = perm[r]
            if c < cols and mask[r, c]:
                real += float(values[r, c])
                matches.append((r, c))
            else:
                sent += 1
        sent += max(0, n - rows)
        key = (sent, real)
        if best is None or key[0] < best[0] or (key[0] == best[0] and key[1] < best[1] - 1e-12):
            best = key
            best_matches = matches
        elif key[0] == best[0] and abs(key[1] - best[1]) <= 1e-12 and matches < best_matches:
            best_matches = matches
    return best, tuple(best_matches)


def _solve_ld(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting in long double precision."""
    a = np.array(a, dtype=np.longdouble)
    b = np.array(b, dtype=np.longdouble)
    n = a.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if a[pivot, col] == 0:
            raise np.linalg.LinAlgError("singular matrix")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


def oracle_predict(mean, cov, spec):
    """Textbook predict in long doubles: m <- F m, P <- F P F^T + Q."""
    f = motion.transition_matrix(spec).astype(np.longdouble)
    q = motion.process_noise(spec, np.asarray(mean, dtype=float)).astype(np.longdouble)
    m = np.asarray(mean, dtype=np.longdouble)
    p = np.asarray(cov, dtype=np.longdouble)
    if spec.model is motion.MotionModel.SORT_CV7 and m[2] + m[6] * spec.dt <= 0.0:
        m = m.copy()
        m[6] = 0.0
    return f @ m, f @ p @ f.T + q


def oracle_update(mean, cov, spec, bbox):
    """Joseph-form correction in long doubles; independent of the library's form."""
    h = motion.measurement_matrix(spec).astype(np.longdouble)
    r = motion.measurement_noise(spec, np.asarray(mean, dtype=float)).astype(np.longdouble)
    z = motion.observe_bbox(spec, bbox).astype(np.longdouble)
    m = np.asarray(mean, dtype=np.longdouble)
    p = np.asarray(cov, dtype=np.longdouble)
    s = h @ p @ h.T + r
    k = _solve_ld(s.T, (p @ h.T).T).T  # K = P H^T S^-1 via S^T K^T = (P H^T)^T
    m_new = m + k @ (z - h @ m)
    i_kh = np.eye(p.shape[0], dtype=np.longdouble) - k @ h
    p_new = i_kh @ p @ i_kh.T + k @ r @ k.T
    return m_new, p_new


def random_box(rng: np.random.Generator, img=1000.0, min_size=5.0, max_size=120.0):
    from trackfuse.model import BoundingBox

    w = rng.uniform(min_size, max_size)
    h = rng.uniform(min_size, max_size)
    x = rng.uniform(0.0, img - w)
    y = rng.uniform(0.0, img - h)
    return BoundingBox(x, y, x + w, y + h)


def random_simplex(rng: np.random.Generator, n: int) -> np.ndarray:
    raw = rng.dirichlet(np.ones(n) * 0.5)
    return np.maximum(raw, 1e-12) / np.maximum(raw, 1e-12).sum()
