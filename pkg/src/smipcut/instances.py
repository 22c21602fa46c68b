"""Seeded generators for the three benchmark families.

The RNG is Philox (64-bit counter-based), so seeds reproduce across
platforms.  Stream layout per instance: first-stage draws first, then
scenario-independent second-stage parameters, then per-scenario draws in
scenario order.  Discrete uniform bounds are inclusive on both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import milp, subproblems
from .model import Scenario, SmipInstance, SmipError

FAMILIES = ("sslp", "smrcsp", "dcap")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    sizes: dict
    n_scenarios: int
    seed: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SmipError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n_scenarios < 1:
            raise SmipError("need at least one scenario")
        if any(v <= 0 for v in self.sizes.values()):
            raise SmipError("size parameters must be positive")

    @staticmethod
    def from_dict(row: dict) -> "GeneratorSpec":
        family = row.get("family", "").lower()
        keys = {"sslp": ("J", "I"), "smrcsp": ("J", "JB", "T"),
                "dcap": ("I", "J", "T")}.get(family)
        if keys is None:
            raise SmipError(f"unknown family {row.get('family')!r}")
        try:
            sizes = {k: int(row[k]) for k in keys}
        except KeyError as exc:
            raise SmipError(f"family {family} needs size parameters {keys}") from exc
        if family == "smrcsp" and "K" in row:
            sizes["K"] = int(row["K"])
        return GeneratorSpec(family=family, sizes=sizes,
                             n_scenarios=int(row.get("N", 1)),
                             seed=int(row.get("seed", 0)))

    def size_label(self) -> str:
        return "x".join(str(self.sizes[k]) for k in sorted(self.sizes))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _randint(rng, lo, hi, size=None):
    return rng.integers(lo, hi + 1, size=size)


def _equality_rows(rows: list, rhs: list, coeffs: np.ndarray, value: float):
    rows.append(coeffs); rhs.append(value)
    rows.append(-coeffs); rhs.append(-value)


def validate_generated(instance: SmipInstance) -> SmipInstance:
    """Assumption checks before an instance is handed out: nonempty bounded
    first stage and feasible recourse at representative first-stage points."""
    instance.validate()
    probes = [instance.bounds[:, 0], instance.bounds[:, 1],
              0.5 * (instance.bounds[:, 0] + instance.bounds[:, 1])]
    for s in range(len(instance.scenarios)):
        for x in probes:
            sol = milp.solve_lp(subproblems.recourse_model(instance.scenarios[s], x,
                                                           relax=True))
            if sol.status != milp.Status.OPTIMAL:
                raise SmipError(f"scenario {s} infeasible at probe point; "
                                "relatively complete recourse violated")
    return instance


def gen_sslp(spec: GeneratorSpec) -> SmipInstance:
    """Server location: binary open/close decisions, binary client-server
    assignments with a continuous overflow penalty column per server."""
    J, I = spec.sizes["J"], spec.sizes["I"]
    N = spec.n_scenarios
    rng = _rng(spec.seed)
    v = math.ceil(J / 3)
    c = _randint(rng, 40, 80, J).astype(float)
    d = _randint(rng, 0, 25, (I, J)).astype(float)
    q = _randint(rng, 0, 25, (I, J)).astype(float)
    u, q0 = 50.0, 1000.0
    h = (rng.random((N, I)) < 0.7).astype(float)

    m = I * J + J  # y_ij then overflow y0_j
    def yij(i, j): return i * J + j
    def y0(j): return I * J + j

    scenarios = []
    for s in range(N):
        rows, rhs, trows = [], [], []
        qvec = np.zeros(m)
        for j in range(J):
            qvec[y0(j)] = q0
        for i in range(I):
            for j in range(J):
                qvec[yij(i, j)] = -q[i, j]
        for j in range(J):  # u x_j - sum_i d_ij y_ij + y0_j >= 0
            w = np.zeros(m)
            for i in range(I):
                w[yij(i, j)] = -d[i, j]
            w[y0(j)] = 1.0
            t = np.zeros(J); t[j] = u
            rows.append(w); rhs.append(0.0); trows.append(t)
        for i in range(I):  # sum_j y_ij = h_i
            w = np.zeros(m)
            for j in range(J):
                w[yij(i, j)] = 1.0
            for sign in (1.0, -1.0):
                rows.append(sign * w); rhs.append(sign * h[s, i]); trows.append(np.zeros(J))
        y_bounds = np.vstack([np.tile([0.0, 1.0], (I * J, 1)),
                              np.tile([0.0, np.inf], (J, 1))])
        scenarios.append(Scenario(
            q=qvec, W=np.array(rows), T=np.array(trows), h=np.array(rhs),
            y_kinds=np.array([True] * (I * J) + [False] * J),
            y_bounds=y_bounds))

    inst = SmipInstance(
        c=c, A=-np.ones((1, J)), b=[-float(v)],
        var_kinds=np.ones(J, dtype=bool), bounds=np.tile([0.0, 1.0], (J, 1)),
        scenarios=tuple(scenarios), probabilities=np.full(N, 1.0 / N))
    return validate_generated(inst)


def _windows(t, p, lo, hi):
    """Start slots tau in [lo, hi] that keep a length-p job running at t."""
    return range(max(lo, t - p + 1), min(t, hi) + 1)


def gen_smrcsp(spec: GeneratorSpec) -> SmipInstance:
    """Resource-constrained scheduling with binary expansion decisions; bids
    on second-stage jobs arrive per scenario."""
    J, JB, T = spec.sizes["J"], spec.sizes["JB"], spec.sizes["T"]
    K = spec.sizes.get("K", 1)
    N = spec.n_scenarios
    rng = _rng(spec.seed)
    T0 = math.ceil(0.25 * T)
    p = _randint(rng, 1, T, J + JB)  # known jobs first, then biddable
    b = _randint(rng, 10, 20, K).astype(float)
    r = _randint(rng, 1, 5, (J + JB, K)).astype(float)
    rho = rng.uniform(0.5, 1.2)
    p_bar, pb_bar = p[:J].mean(), p[J:].mean()
    R = (p_bar * r[:J].mean(axis=0) * J + 0.75 * pb_bar * r[J:].mean(axis=0) * JB) \
        / ((T + T0) * rho)
    M = float((J + JB) * T)
    a = (rng.random((N, JB)) < 0.75).astype(float)

    # first stage: x_{jt} for t in [1, T - p_j + 1], then z_{tk} for t in [1, T0]
    x_cols = {}
    n = 0
    for j in range(J):
        for t in range(1, T - p[j] + 2):
            x_cols[j, t] = n
            n += 1
    z_cols = {}
    for t in range(1, T0 + 1):
        for k in range(K):
            z_cols[t, k] = n
            n += 1

    c = np.zeros(n)
    for (j, t), col in x_cols.items():
        c[col] = float(t + p[j] - 1)
    for (t, k), col in z_cols.items():
        c[col] = b[k]

    rows, rhs = [], []
    for j in range(J):  # each known job starts exactly once
        coeffs = np.zeros(n)
        for t in range(1, T - p[j] + 2):
            coeffs[x_cols[j, t]] = 1.0
        _equality_rows(rows, rhs, coeffs, 1.0)
    for t in range(1, T0 + 1):
        for k in range(K):  # resources in the committed horizon
            coeffs = np.zeros(n)
            for j in range(J):
                for tau in _windows(t, p[j], 1, T - p[j] + 1):
                    coeffs[x_cols[j, tau]] -= r[j, k]
            coeffs[z_cols[t, k]] = M
            rows.append(coeffs); rhs.append(-R[k])

    # second stage: y_{jt} for biddable jobs, then u_{tk} expansions
    y_cols = {}
    m = 0
    for jb in range(JB):
        pj = p[J + jb]
        for t in range(T0 + 1, T + T0 - pj + 2):
            y_cols[jb, t] = m
            m += 1
    u_cols = {}
    for t in range(T0 + 1, T + T0 + 1):
        for k in range(K):
            u_cols[t, k] = m
            m += 1

    qvec = np.zeros(m)
    for (jb, t), col in y_cols.items():
        qvec[col] = float(t + p[J + jb] - 1)
    for (t, k), col in u_cols.items():
        qvec[col] = b[k]

    scenarios = []
    for s in range(N):
        wrows, wrhs, trows = [], [], []
        for jb in range(JB):  # bid jobs start once iff accepted
            coeffs = np.zeros(m)
            pj = p[J + jb]
            for t in range(T0 + 1, T + T0 - pj + 2):
                coeffs[y_cols[jb, t]] = 1.0
            for sign in (1.0, -1.0):
                wrows.append(sign * coeffs); wrhs.append(sign * a[s, jb])
                trows.append(np.zeros(n))
        for t in range(T0 + 1, T + T0 + 1):
            for k in range(K):
                w = np.zeros(m)
                for jb in range(JB):
                    for tau in _windows(t, p[J + jb], T0 + 1, T + T0 - p[J + jb] + 1):
                        w[y_cols[jb, tau]] -= r[J + jb, k]
                w[u_cols[t, k]] = M
                tvec = np.zeros(n)
                for j in range(J):
                    for tau in _windows(t, p[j], 1, T - p[j] + 1):
                        tvec[x_cols[j, tau]] -= r[j, k]
                wrows.append(w); wrhs.append(-R[k]); trows.append(tvec)
        scenarios.append(Scenario(
            q=qvec, W=np.array(wrows), T=np.array(trows), h=np.array(wrhs),
            y_kinds=np.ones(m, dtype=bool), y_bounds=np.tile([0.0, 1.0], (m, 1))))

    inst = SmipInstance(
        c=c, A=np.array(rows), b=np.array(rhs),
        var_kinds=np.ones(n, dtype=bool), bounds=np.tile([0.0, 1.0], (n, 1)),
        scenarios=tuple(scenarios), probabilities=np.full(N, 1.0 / N))
    return validate_generated(inst)


def gen_dcap(spec: GeneratorSpec) -> SmipInstance:
    """Capacity acquisition: continuous capacity x_it gated by binary u_it,
    binary task assignments with a continuous overflow penalty."""
    I, J, T = spec.sizes["I"], spec.sizes["J"], spec.sizes["T"]
    N = spec.n_scenarios
    rng = _rng(spec.seed)
    alpha = _randint(rng, 20, 40, (I, T)).astype(float)
    beta = _randint(rng, 50, 70, (I, T)).astype(float)
    b_cap, pen = 50.0, 1000.0
    cost = _randint(rng, 40, 80, (N, I, J, T)).astype(float)
    dem = _randint(rng, 1, 10, (N, J, T)).astype(float)

    # first stage: binary u_it first (integer block), then continuous x_it
    IT = I * T
    def u_col(i, t): return i * T + t
    def x_col(i, t): return IT + i * T + t
    n = 2 * IT
    c = np.zeros(n)
    for i in range(I):
        for t in range(T):
            c[u_col(i, t)] = beta[i, t]
            c[x_col(i, t)] = alpha[i, t]
    rows, rhs = [], []
    for i in range(I):
        for t in range(T):  # b u_it - x_it >= 0
            coeffs = np.zeros(n)
            coeffs[u_col(i, t)] = b_cap
            coeffs[x_col(i, t)] = -1.0
            rows.append(coeffs); rhs.append(0.0)
    bounds = np.zeros((n, 2))
    bounds[:IT] = [0.0, 1.0]
    bounds[IT:] = [0.0, b_cap]

    JT = J * T
    m = I * JT + IT  # y_ijt then overflow y0_it
    def y_col(i, j, t): return (i * J + j) * T + t
    def y0_col(i, t): return I * JT + i * T + t

    scenarios = []
    for s in range(N):
        qvec = np.zeros(m)
        for i in range(I):
            for j in range(J):
                for t in range(T):
                    qvec[y_col(i, j, t)] = cost[s, i, j, t]
            for t in range(T):
                qvec[y0_col(i, t)] = pen
        wrows, wrhs, trows = [], [], []
        for i in range(I):
            for t in range(T):  # cumulative capacity covers demand less overflow
                w = np.zeros(m)
                for j in range(J):
                    w[y_col(i, j, t)] = -dem[s, j, t]
                w[y0_col(i, t)] = 1.0
                tvec = np.zeros(n)
                for tau in range(t + 1):
                    tvec[x_col(i, tau)] = 1.0
                wrows.append(w); wrhs.append(0.0); trows.append(tvec)
        for j in range(J):
            for t in range(T):  # each task served by exactly one resource
                w = np.zeros(m)
                for i in range(I):
                    w[y_col(i, j, t)] = 1.0
                for sign in (1.0, -1.0):
                    wrows.append(sign * w); wrhs.append(sign * 1.0)
                    trows.append(np.zeros(n))
        y_bounds = np.vstack([np.tile([0.0, 1.0], (I * JT, 1)),
                              np.tile([0.0, np.inf], (IT, 1))])
        scenarios.append(Scenario(
            q=qvec, W=np.array(wrows), T=np.array(trows), h=np.array(wrhs),
            y_kinds=np.array([True] * (I * JT) + [False] * IT),
            y_bounds=y_bounds))

    inst = SmipInstance(
        c=c, A=np.array(rows), b=np.array(rhs),
        var_kinds=np.array([True] * IT + [False] * IT), bounds=bounds,
        scenarios=tuple(scenarios), probabilities=np.full(N, 1.0 / N))
    return validate_generated(inst)


GENERATORS = {"sslp": gen_sslp, "smrcsp": gen_smrcsp, "dcap": gen_dcap}


def generate(spec: GeneratorSpec) -> SmipInstance:
    return GENERATORS[spec.family](spec)
