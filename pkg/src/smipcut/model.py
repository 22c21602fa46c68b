"""Problem and cut data types shared by every other module.

All types are immutable after construction (arrays are frozen) and safe to
share across concurrent workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FEAS_TOL = 1e-9
TIGHT_TOL = 1e-7
GAP_EPS = 1e-10  # divide-by-zero guard in the gap formula

#: scenario_id value marking a cut aggregated over all scenarios
AGGREGATE = None


class SmipError(Exception):
    """Base class for structured errors raised by this package."""


class DimensionError(SmipError):
    pass


class InstanceError(SmipError):
    pass


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Scenario:
    """One scenario of the second stage: min q'y s.t. W y >= h - T x.

    The first ``m1`` second-stage variables are integer (``y_kinds`` True).
    ``y_bounds`` rows are (lo, hi); hi may be +inf for continuous columns.
    """

    q: np.ndarray
    W: np.ndarray
    T: np.ndarray
    h: np.ndarray
    y_kinds: np.ndarray
    y_bounds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "W", _frozen(np.atleast_2d(self.W)))
        object.__setattr__(self, "T", _frozen(np.atleast_2d(self.T)))
        object.__setattr__(self, "h", _frozen(self.h))
        object.__setattr__(self, "y_kinds", _frozen(self.y_kinds, dtype=bool))
        object.__setattr__(self, "y_bounds", _frozen(self.y_bounds))
        k, m = self.W.shape
        if self.T.shape[0] != k or len(self.h) != k:
            raise DimensionError("rows(W) = rows(T) = len(h) violated")
        if len(self.q) != m or len(self.y_kinds) != m or self.y_bounds.shape != (m, 2):
            raise DimensionError("second-stage column data inconsistent")
        if self.y_kinds.any() and not np.isfinite(self.y_bounds[self.y_kinds]).all():
            raise InstanceError("integer second-stage variables need finite bounds")

    @property
    def m(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class SmipInstance:
    """Two-stage SMIP data: min c'x + sum_s p_s Q_s(x) s.t. A x >= b.

    First-stage variables are normalized to [0, B_i]; ``shift`` records the
    translation applied at load so reports can be mapped back to original
    coordinates (x_original = x + shift), and ``obj_offset`` the matching
    objective constant.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    var_kinds: np.ndarray  # True = integer; first n1 entries
    bounds: np.ndarray  # (n, 2), lower column all zeros after normalization
    scenarios: tuple[Scenario, ...]
    probabilities: np.ndarray
    shift: np.ndarray = None
    obj_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c", _frozen(self.c))
        n = len(self.c)
        A = np.atleast_2d(self.A) if np.size(self.A) else np.zeros((0, n))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(self.b))
        object.__setattr__(self, "var_kinds", _frozen(self.var_kinds, dtype=bool))
        object.__setattr__(self, "bounds", _frozen(self.bounds))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "probabilities", _frozen(self.probabilities))
        shift = np.zeros(n) if self.shift is None else self.shift
        object.__setattr__(self, "shift", _frozen(shift))
        if self.A.shape != (len(self.b), n):
            raise DimensionError("first-stage constraint dimensions inconsistent")
        if self.bounds.shape != (n, 2) or len(self.var_kinds) != n:
            raise DimensionError("first-stage column data inconsistent")
        for s in self.scenarios:
            if s.T.shape[1] != n:
                raise DimensionError("cols(T) must equal the first-stage dimension")
        if len(self.probabilities) != len(self.scenarios):
            raise DimensionError("one probability per scenario required")

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def n1(self) -> int:
        return int(self.var_kinds.sum())

    @property
    def is_binary(self) -> bool:
        return bool(self.var_kinds.all() and (self.bounds[:, 1] == 1).all())

    @property
    def is_pure_integer(self) -> bool:
        return bool(self.var_kinds.all())

    def validate(self) -> None:
        """Check Assumptions at load: finite data, probabilities, nonempty
        bounded first stage (feasibility LP plus bound inspection)."""
        for name, arr in (("c", self.c), ("A", self.A), ("b", self.b)):
            if not np.isfinite(arr).all():
                raise InstanceError(f"non-finite entries in {name}")
        if (self.bounds[:, 0] != 0).any():
            raise InstanceError("bounds must be normalized to [0, B_i]")
        if not np.isfinite(self.bounds).all() or (self.bounds[:, 1] < 0).any():
            raise InstanceError("first-stage bounds must be finite and nonnegative")
        p = self.probabilities
        if len(p) and ((p < -FEAS_TOL).any() or abs(p.sum() - 1.0) > 1e-9):
            raise InstanceError("probabilities must be nonnegative and sum to 1")
        for s in self.scenarios:
            for name, arr in (("q", s.q), ("W", s.W), ("T", s.T), ("h", s.h)):
                if not np.isfinite(arr).all():
                    raise InstanceError(f"non-finite entries in scenario {name}")
        from . import milp

        lp = milp.LpModel(
            c=np.zeros(self.n), A=self.A, senses=[">="] * len(self.b), rhs=self.b,
            bounds=self.bounds, integrality=np.zeros(self.n, dtype=bool),
        )
        sol = milp.solve_lp(lp)
        if sol.status != milp.Status.OPTIMAL:
            raise InstanceError("first-stage feasible region is empty")


@dataclass(frozen=True)
class LinearCut:
    """theta >= rhs + coeffs' x."""

    coeffs: np.ndarray
    rhs: float
    scenario_id: int | None = AGGREGATE
    degraded: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))
        if not (np.isfinite(self.coeffs).all() and np.isfinite(self.rhs)):
            raise InstanceError("linear cut entries must be finite")

    def value_at(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != self.coeffs.shape:
            raise DimensionError("point dimension does not match cut")
        return float(self.rhs + self.coeffs @ x)


@dataclass(frozen=True)
class ReluCut:
    """theta >= intercept + sum_i pi+_i (x_i - a_i)^+ + sum_i pi-_i (x_i - a_i)^-.

    Both hinge terms vanish at the anchor, so the cut evaluates to exactly
    ``intercept`` there.
    """

    anchor: np.ndarray
    intercept: float
    pi_plus: np.ndarray
    pi_minus: np.ndarray
    scenario_id: int | None = AGGREGATE
    degraded: bool = False

    def __post_init__(self):
        object.__setattr__(self, "anchor", _frozen(self.anchor))
        object.__setattr__(self, "pi_plus", _frozen(self.pi_plus))
        object.__setattr__(self, "pi_minus", _frozen(self.pi_minus))
        n = len(self.anchor)
        if len(self.pi_plus) != n or len(self.pi_minus) != n:
            raise DimensionError("coefficient vectors must match the anchor length")

    @property
    def n(self) -> int:
        return len(self.anchor)

    def linear_form(self) -> LinearCut:
        """Linear form of the cut for a binary anchor on a binary box.

        With a_i in {0,1}, coordinates at 1 can only decrease and coordinates
        at 0 can only increase, so one hinge per coordinate is active.
        """
        a = self.anchor
        if not np.all((a == 0) | (a == 1)):
            raise InstanceError("linear form only exists for binary anchors")
        coeffs = np.where(a == 0, self.pi_plus, -self.pi_minus)
        return LinearCut(coeffs=coeffs, rhs=self.intercept - float(coeffs @ a),
                         scenario_id=self.scenario_id)


def evaluate_relu_cut(cut: ReluCut, x) -> float:
    """Right-hand side of the cut at x."""
    x = np.asarray(x, dtype=float)
    if x.shape != cut.anchor.shape:
        raise DimensionError(f"expected point of length {cut.n}, got {x.shape}")
    d = x - cut.anchor
    return float(cut.intercept + cut.pi_plus @ np.maximum(d, 0.0)
                 + cut.pi_minus @ np.maximum(-d, 0.0))


def linear_to_relu(cut: LinearCut, anchor, expected_value: float | None = None,
                   tol: float = TIGHT_TOL) -> ReluCut:
    """Re-anchor a linear cut as a ReluCut with pi+ = pi, pi- = -pi.

    The identity pi'(x - a) = sum pi_i (x_i-a_i)^+ - sum pi_i (x_i-a_i)^-
    makes the two forms agree everywhere.  When ``expected_value`` is given
    the cut must pass through (anchor, expected_value); a non-tight input is
    rejected because the conversion would misstate the intercept.
    """
    anchor = np.asarray(anchor, dtype=float)
    intercept = cut.value_at(anchor)
    if expected_value is not None and abs(intercept - expected_value) > tol:
        raise InstanceError(
            f"cut is not tight at the anchor: {intercept} vs {expected_value}")
    return ReluCut(anchor=anchor, intercept=intercept, pi_plus=cut.coeffs,
                   pi_minus=-cut.coeffs, scenario_id=cut.scenario_id)


def solve_gap(lb: float, ub: float) -> float:
    """(ub - lb) / max(|lb|, eps), the stopping-rule gap."""
    if ub == np.inf or lb == -np.inf:
        return np.inf
    return (ub - lb) / max(abs(lb), GAP_EPS)


@dataclass
class SolveReport:
    lower_bound: float
    upper_bound: float
    incumbent: np.ndarray | None
    iterations: int
    cut_log: list = field(default_factory=list)
    wall_time: float = 0.0
    status: str = "optimal"

    @property
    def gap(self) -> float:
        return solve_gap(self.lower_bound, self.upper_bound)

    def to_dict(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "gap": self.gap,
            "incumbent": None if self.incumbent is None else list(map(float, self.incumbent)),
            "iterations": self.iterations,
            "cut_log": self.cut_log,
            "wall_time": self.wall_time,
            "status": self.status,
        }


# ---------------------------------------------------------------------------
# JSON instance schema
# ---------------------------------------------------------------------------

def _matrix_to_json(M: np.ndarray) -> dict:
    rows, cols = M.shape
    r, c = np.nonzero(M)
    return {"rows": int(rows), "cols": int(cols),
            "triplets": [[int(i), int(j), float(M[i, j])] for i, j in zip(r, c)]}


def _matrix_from_json(d: dict) -> np.ndarray:
    M = np.zeros((d["rows"], d["cols"]))
    for i, j, v in d["triplets"]:
        M[int(i), int(j)] = float(v)
    return M


def instance_to_json(inst: SmipInstance) -> str:
    """Serialize with byte-stable key order (identical instance => identical text)."""
    doc = {
        "c": list(map(float, inst.c)),
        "A": _matrix_to_json(inst.A),
        "b": list(map(float, inst.b)),
        "var_kinds": ["integer" if k else "continuous" for k in inst.var_kinds],
        "bounds": [[float(lo), float(hi)] for lo, hi in inst.bounds],
        "scenarios": [
            {
                "q": list(map(float, s.q)),
                "W": _matrix_to_json(s.W),
                "T": _matrix_to_json(s.T),
                "h": list(map(float, s.h)),
                "y_kinds": ["integer" if k else "continuous" for k in s.y_kinds],
                "y_bounds": [[float(lo), None if np.isinf(hi) else float(hi)]
                             for lo, hi in s.y_bounds],
                "prob": float(p),
            }
            for s, p in zip(inst.scenarios, inst.probabilities)
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def _parse_kinds(kinds: Sequence) -> np.ndarray:
    return np.array([k in (1, True, "integer", "int") for k in kinds], dtype=bool)


def instance_from_json(text: str, validate: bool = True) -> SmipInstance:
    """Parse the JSON schema, shifting first-stage bounds to [0, B_i]."""
    doc = json.loads(text)
    c = np.array(doc["c"], dtype=float)
    bounds = np.array(doc["bounds"], dtype=float)
    shift = bounds[:, 0].copy()
    bounds = bounds - shift[:, None]
    A = _matrix_from_json(doc["A"])
    b = np.array(doc["b"], dtype=float)
    if A.size and shift.any():
        b = b - A @ shift
    scenarios, probs = [], []
    for sd in doc["scenarios"]:
        W = _matrix_from_json(sd["W"])
        T = _matrix_from_json(sd["T"])
        h = np.array(sd["h"], dtype=float)
        if shift.any():
            h = h - T @ shift
        m = W.shape[1]
        if sd.get("y_bounds") is None:
            yb = np.column_stack([np.zeros(m), np.full(m, np.inf)])
        else:
            yb = np.array([[lo, np.inf if hi is None else hi]
                           for lo, hi in sd["y_bounds"]], dtype=float)
        scenarios.append(Scenario(q=np.array(sd["q"], dtype=float), W=W, T=T, h=h,
                                  y_kinds=_parse_kinds(sd["y_kinds"]), y_bounds=yb))
        probs.append(float(sd["prob"]))
    inst = SmipInstance(
        c=c, A=A, b=b, var_kinds=_parse_kinds(doc["var_kinds"]), bounds=bounds,
        scenarios=tuple(scenarios), probabilities=np.array(probs),
        shift=shift, obj_offset=float(c @ shift),
    )
    if validate:
        inst.validate()
    return inst
