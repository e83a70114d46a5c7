# -*- coding: utf-8 -*-
"""
Linear regression of early citations on dataset features: transforms,
OLS with heteroskedasticity-consistent standard errors, and the collinearity
and heteroskedasticity diagnostics reported next to the coefficients.
"""
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg, stats

from dsinfluence.errors import (
    DegenerateFeatureError,
    InsufficientDataError,
    RankDeficiencyError,
)

Z_95 = 1.96
COVARIANCE_TYPES = ("HC0", "HC1", "HC2", "HC3")
SD_CONVENTION = "population"


class Transform(str, Enum):
    NONE = "none"
    STANDARDIZE = "standardize"
    LOG1P = "log1p"
    LOG1P_STANDARDIZE = "log1p_standardize"


@dataclass(frozen=True)
class Term:
    name: str
    transform: Transform = Transform.STANDARDIZE


@dataclass(frozen=True)
class DesignSpec:
    regressors: Tuple[Term, ...]
    quadratic_terms: Tuple[str, ...] = ()
    intercept: bool = True
    dependent: Term = Term("cit_1y", Transform.LOG1P)

    def __post_init__(self):
        names = [term.name for term in self.regressors]
        if len(set(names)) != len(names):
            raise ValueError("duplicate regressor names")
        undeclared = set(self.quadratic_terms) - set(names)
        if undeclared:
            raise ValueError(f"quadratic terms of undeclared regressors: {sorted(undeclared)}")
        if self.dependent.name in names:
            raise ValueError("the dependent variable cannot be a regressor")

    @property
    def features(self) -> Tuple[str, ...]:
        return tuple(term.name for term in self.regressors) + (self.dependent.name,)

    @property
    def column_names(self) -> Tuple[str, ...]:
        names = [term.name for term in self.regressors]
        names += [f"{name}^2" for name in self.quadratic_terms]
        if self.intercept:
            names.append("intercept")
        return tuple(names)


BASELINE = DesignSpec(
    regressors=(
        Term("ref_h3"),
        Term("aut_mu_h3"),
        Term("a_pub"),
        Term("n_sensors"),
        Term("aas_3m"),
    ),
    quadratic_terms=("aas_3m",),
)

DESIGNS: Dict[str, DesignSpec] = {
    "baseline": BASELINE,
    "with_citations": DesignSpec(
        regressors=BASELINE.regressors + (Term("n_cit3", Transform.LOG1P_STANDARDIZE),),
        quadratic_terms=BASELINE.quadratic_terms,
    ),
    "with_frames": DesignSpec(
        regressors=BASELINE.regressors + (Term("n_frames", Transform.LOG1P_STANDARDIZE),),
        quadratic_terms=BASELINE.quadratic_terms,
    ),
}


def standardize(values, name: str = "values") -> np.ndarray:
    """Subtract the mean, divide by the population standard deviation."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise InsufficientDataError(f"cannot standardize {name} with fewer than 2 values")
    sd = values.std()
    if sd == 0 or not np.isfinite(sd):
        raise DegenerateFeatureError(name)
    return (values - values.mean()) / sd


def log1p(values, name: str = "values") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        raise ValueError(f"log(x+1) of negative {name}")
    return np.log1p(values)


def apply_transform(values, transform: Transform, name: str) -> np.ndarray:
    if transform is Transform.STANDARDIZE:
        return standardize(values, name)
    if transform is Transform.LOG1P:
        return log1p(values, name)
    if transform is Transform.LOG1P_STANDARDIZE:
        return standardize(log1p(values, name), name)
    return np.asarray(values, dtype=float)


@dataclass(frozen=True, eq=False)
class Design:
    X: np.ndarray
    y: np.ndarray
    names: Tuple[str, ...]
    row_mask: np.ndarray
    keys: Tuple[str, ...] = ()

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]


def _as_mapping(row) -> Mapping:
    return row.as_dict() if hasattr(row, "as_dict") else row


def build_design(rows: Sequence, spec: DesignSpec) -> Design:
    """Complete-case design matrix with transforms applied.

    Args:
        rows: mappings (or feature vectors) holding every feature of spec
        spec: regressors, quadratic terms and dependent variable

    Returns:
        X with the intercept column last, y and the mask of rows used
    """
    rows = [_as_mapping(row) for row in rows]
    mask = np.array(
        [all(row.get(name) is not None for name in spec.features) for row in rows],
        dtype=bool,
    )
    complete = [row for row, keep in zip(rows, mask) if keep]
    if len(complete) < 2:
        raise InsufficientDataError(
            f"{len(complete)} complete case(s), at least 2 are required"
        )
    logger.info(f"{len(complete)} of {len(rows)} rows are complete cases")
    columns = {
        term.name: apply_transform(
            [row[term.name] for row in complete], term.transform, term.name
        )
        for term in spec.regressors
    }
    matrix = [columns[term.name] for term in spec.regressors]
    matrix += [columns[name] ** 2 for name in spec.quadratic_terms]
    if spec.intercept:
        matrix.append(np.ones(len(complete)))
    y = apply_transform(
        [row[spec.dependent.name] for row in complete],
        spec.dependent.transform,
        spec.dependent.name,
    )
    keys = tuple(str(row.get("dataset_id", index)) for index, row in enumerate(complete))
    return Design(np.column_stack(matrix), y, spec.column_names, mask, keys)


@dataclass(frozen=True)
class CoefficientRow:
    name: str
    coef: float
    se: float
    z: float
    p: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class HeteroskedasticityTest:
    statistic: float
    p: float
    df: int
    dropped: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Diagnostics:
    vif: Mapping[str, float]
    breusch_pagan: HeteroskedasticityTest
    white: HeteroskedasticityTest


@dataclass(frozen=True, eq=False)
class RegressionResult:
    names: Tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    residuals: np.ndarray
    covariance_type: str = "nonrobust"
    diagnostics: Optional[Diagnostics] = None
    provenance: Mapping[str, str] = field(default_factory=dict)

    @property
    def n_obs(self) -> int:
        return len(self.residuals)

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coef / self.se

    @property
    def p(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.z))

    @property
    def ci_low(self) -> np.ndarray:
        return self.coef - Z_95 * self.se

    @property
    def ci_high(self) -> np.ndarray:
        return self.coef + Z_95 * self.se

    def rows(self) -> List[CoefficientRow]:
        return [
            CoefficientRow(name, *map(float, values))
            for name, *values in zip(
                self.names, self.coef, self.se, self.z, self.p, self.ci_low, self.ci_high
            )
        ]

    def row(self, name: str) -> CoefficientRow:
        return self.rows()[self.names.index(name)]


def _names(X: np.ndarray, names: Optional[Sequence[str]]) -> Tuple[str, ...]:
    if names is None:
        return tuple(f"x{j}" for j in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise ValueError("one name per design column is required")
    return tuple(names)


def _factorize(X: np.ndarray, names: Tuple[str, ...]):
    """Reduced QR of X. Raises on the first column adding no rank."""
    n, k = X.shape
    if n <= k:
        raise InsufficientDataError(f"{n} observations for {k} coefficients")
    Q, R = np.linalg.qr(X)
    diagonal = np.abs(np.diag(R))
    norms = np.linalg.norm(X, axis=0)
    for j in range(k):
        if norms[j] == 0 or diagonal[j] <= 1e-10 * norms[j]:
            raise RankDeficiencyError(names[j], j)
    return Q, R


def _bread(R: np.ndarray) -> np.ndarray:
    """(X'X)^-1 from the triangular factor"""
    R_inv = linalg.solve_triangular(R, np.eye(R.shape[0]))
    return R_inv @ R_inv.T


def ols_fit(X, y, names: Optional[Sequence[str]] = None) -> RegressionResult:
    """Least squares through QR, classical standard errors"""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    names = _names(X, names)
    Q, R = _factorize(X, names)
    coef = linalg.solve_triangular(R, Q.T @ y)
    residuals = y - X @ coef
    n, k = X.shape
    sigma2 = residuals @ residuals / (n - k)
    se = np.sqrt(np.diag(_bread(R)) * sigma2)
    return RegressionResult(names, coef, se, residuals)


def robust_se(X, residuals, kind: str = "HC1") -> np.ndarray:
    """Sandwich standard errors (X'X)^-1 X' diag(w) X (X'X)^-1"""
    if kind not in COVARIANCE_TYPES:
        raise ValueError(f"unknown covariance type {kind}")
    X = np.asarray(X, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    n, k = X.shape
    Q, R = _factorize(X, _names(X, None))
    bread = _bread(R)
    weights = residuals ** 2
    if kind in ("HC2", "HC3"):
        leverage = np.sum(Q ** 2, axis=1)
        weights = weights / (1.0 - leverage) ** (1 if kind == "HC2" else 2)
    meat = (X.T * weights) @ X
    covariance = bread @ meat @ bread
    if kind == "HC1":
        covariance *= n / (n - k)
    return np.sqrt(np.clip(np.diag(covariance), 0.0, None))


def _constant_columns(X: np.ndarray) -> np.ndarray:
    return np.ptp(X, axis=0) == 0


def _r_squared(Z: np.ndarray, target: np.ndarray) -> float:
    centered = target - target.mean()
    sst = centered @ centered
    if sst == 0:
        return 0.0
    beta, *_ = np.linalg.lstsq(Z, target, rcond=None)
    residual = target - Z @ beta
    return max(0.0, 1.0 - (residual @ residual) / sst)


def vif(X, names: Optional[Sequence[str]] = None) -> Dict[str, float]:
    """
    Variance inflation of every regressor; inf under perfect collinearity.
    One constant column is taken as the intercept and left out, any further
    constant column is collinear with it.
    """
    X = np.asarray(X, dtype=float)
    names = _names(X, names)
    constant = np.flatnonzero(_constant_columns(X))
    slopes = np.flatnonzero(~_constant_columns(X))
    if len(slopes) < 2:
        raise InsufficientDataError("variance inflation needs at least 2 regressors")
    ones = np.ones((X.shape[0], 1))
    result = {}
    if len(constant):
        intercept = next((i for i in constant if names[i] == "intercept"), constant[-1])
        for j in constant:
            if j != intercept:
                logger.warning(f"{names[j]} is constant and collinear with the intercept")
                result[names[j]] = np.inf
    for j in slopes:
        others = [i for i in slopes if i != j]
        r2 = _r_squared(np.hstack([X[:, others], ones]), X[:, j])
        result[names[j]] = np.inf if 1.0 - r2 < 1e-12 else max(1.0, 1.0 / (1.0 - r2))
    return {names[j]: result[names[j]] for j in range(X.shape[1]) if names[j] in result}


def _lm_test(Z: np.ndarray, residuals: np.ndarray, dropped=()) -> HeteroskedasticityTest:
    n, columns = Z.shape
    df = columns - 1
    if df < 1 or n <= columns:
        raise InsufficientDataError("degenerate auxiliary regression")
    statistic = n * _r_squared(Z, np.asarray(residuals, dtype=float) ** 2)
    return HeteroskedasticityTest(
        float(statistic), float(stats.chi2.sf(statistic, df)), df, tuple(dropped)
    )


def breusch_pagan(X, residuals) -> HeteroskedasticityTest:
    """n R^2 of squared residuals on the regressors, chi-squared with k - 1 df"""
    X = np.asarray(X, dtype=float)
    slopes = X[:, ~_constant_columns(X)]
    Z = np.hstack([np.ones((X.shape[0], 1)), slopes])
    return _lm_test(Z, residuals)


def white_test(X, residuals, names: Optional[Sequence[str]] = None) -> HeteroskedasticityTest:
    """
    Auxiliary regressors are the columns, their squares and pairwise
    products. Terms adding no rank are dropped and listed.
    """
    X = np.asarray(X, dtype=float)
    names = _names(X, names)
    slopes = np.flatnonzero(~_constant_columns(X))
    candidates = [(names[j], X[:, j]) for j in slopes]
    candidates += [(f"{names[j]}^2", X[:, j] ** 2) for j in slopes]
    candidates += [
        (f"{names[i]}*{names[j]}", X[:, i] * X[:, j]) for i, j in combinations(slopes, 2)
    ]
    kept = [np.ones(X.shape[0])]
    dropped = []
    for name, column in candidates:
        basis = np.column_stack(kept)
        beta, *_ = np.linalg.lstsq(basis, column, rcond=None)
        remainder = column - basis @ beta
        scale = np.linalg.norm(column)
        if scale == 0 or np.linalg.norm(remainder) <= 1e-8 * scale:
            dropped.append(name)
            continue
        kept.append(column)
    if dropped:
        logger.debug(f"white test dropped collinear terms {', '.join(dropped)}")
    return _lm_test(np.column_stack(kept), residuals, dropped)


def diagnose(X, residuals, names: Sequence[str]) -> Diagnostics:
    X = np.asarray(X, dtype=float)
    slopes = int(np.sum(~_constant_columns(X)))
    return Diagnostics(
        vif=vif(X, names) if slopes >= 2 else {},
        breusch_pagan=breusch_pagan(X, residuals),
        white=white_test(X, residuals, names),
    )


def fit_with_diagnostics(design: Design, covariance: str = "HC1") -> RegressionResult:
    classical = ols_fit(design.X, design.y, design.names)
    se = robust_se(design.X, classical.residuals, covariance)
    return RegressionResult(
        names=classical.names,
        coef=classical.coef,
        se=se,
        residuals=classical.residuals,
        covariance_type=covariance,
        diagnostics=diagnose(design.X, classical.residuals, design.names),
        provenance={"sd_convention": SD_CONVENTION, "covariance": covariance},
    )


def run_paper_regression(
    feature_table: Sequence, spec: DesignSpec = BASELINE, covariance: str = "HC1"
) -> RegressionResult:
    """Regress log(1 + one-year citations) on the design of spec.

    Args:
        feature_table: rows with every feature of spec and cit_1y
        spec: the design, BASELINE by default
        covariance: HC0, HC1, HC2 or HC3
    """
    design = build_design(feature_table, spec)
    result = fit_with_diagnostics(design, covariance)
    provenance = dict(result.provenance)
    provenance["dependent"] = f"{spec.dependent.transform.value}({spec.dependent.name})"
    provenance["complete_cases"] = str(design.n_obs)
    provenance["aut_mu_h3_includes_own_paper"] = "yes"
    return RegressionResult(
        result.names,
        result.coef,
        result.se,
        result.residuals,
        result.covariance_type,
        result.diagnostics,
        provenance,
    )
