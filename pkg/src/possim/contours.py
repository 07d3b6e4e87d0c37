"""Possibility contours on gridded parameter domains.

A contour stores plausibility values on a rectangular grid (or a callable
evaluator materialized on demand) together with provenance metadata. All
set-level quantities (upper/lower probabilities, level-set regions) are
derived from the grid by the consonance rules: the upper probability of a
set is the supremum of the contour over it, the lower probability is one
minus the upper probability of the complement.
"""
import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyAssertion, NotNormalized, UncoveredTarget

ANALYTIC_TOL = 1e-9


@dataclass(frozen=True)
class IntervalAxis:
    """Uniformly spaced grid on a closed interval."""

    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("IntervalAxis needs at least 2 points")
        if not self.hi > self.lo:
            raise ValueError("IntervalAxis needs hi > lo")

    @property
    def values(self):
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def step(self):
        return (self.hi - self.lo) / (self.n - 1)

    def is_discrete(self):
        return False


@dataclass(frozen=True)
class LabelAxis:
    """Finite unordered support (labels may be ints, floats, or strings)."""

    name: str
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 1:
            raise ValueError("LabelAxis needs at least one label")

    @property
    def values(self):
        return np.asarray(self.labels)

    @property
    def n(self):
        return len(self.labels)

    def is_discrete(self):
        return True

    def index_of(self, label):
        for i, lab in enumerate(self.labels):
            if lab == label:
                return i
        raise KeyError(f"label {label!r} not on axis {self.name!r}")


class ParamDomain:
    """Cartesian product of axes; the grid a contour lives on."""

    def __init__(self, axes):
        axes = tuple(axes)
        if not axes:
            raise ValueError("domain needs at least one axis")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ValueError("axis names must be distinct")
        self.axes = axes

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.n for a in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def points(self):
        """All grid points as an (size, ndim) array, C order."""
        grids = np.meshgrid(*[a.values for a in self.axes], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=-1)

    def axis(self, name):
        for a in self.axes:
            if a.name == name:
                return a
        raise KeyError(f"no axis named {name!r}")

    def __eq__(self, other):
        if not isinstance(other, ParamDomain):
            return NotImplemented
        if self.shape != other.shape:
            return False
        for a, b in zip(self.axes, other.axes):
            if a.name != b.name or a.is_discrete() != b.is_discrete():
                return False
            if a.is_discrete():
                if a.labels != b.labels:
                    return False
            elif a.lo != b.lo or a.hi != b.hi:
                return False
        return True


def domain_1d(name, lo, hi, n):
    return ParamDomain([IntervalAxis(name, lo, hi, n)])


def domain_labels(name, labels):
    return ParamDomain([LabelAxis(name, labels)])


class Contour:
    """Plausibility contour on a ParamDomain.

    Either `values` (ndarray matching domain.shape) or `evaluator` (callable
    mapping an (k, ndim) point array to k plausibilities) must be given.
    Evaluator-backed contours materialize lazily; their meta must carry a
    sup_witness ((point, value) pair attesting where the contour attains a
    value within tolerance of one) because normalization cannot be verified
    from a not-yet-evaluated function.

    meta keys in use: engine, mc_size, seed, std_err (array or scalar),
    sup_witness, tol_sup, n_obs. Extra keys pass through serialization.
    """

    def __init__(self, domain, values=None, evaluator=None, meta=None, check=True):
        if (values is None) == (evaluator is None):
            raise ValueError("give exactly one of values or evaluator")
        self.domain = domain
        self.meta = dict(meta) if meta else {}
        self._evaluator = evaluator
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != domain.shape:
                raise ValueError(
                    f"values shape {values.shape} != domain shape {domain.shape}"
                )
            self._values = values
        else:
            self._values = None
            if check and "sup_witness" not in self.meta:
                raise NotNormalized(
                    "evaluator-backed contour needs a sup_witness in meta"
                )
        if check:
            self._check_normalized()

    # -- normalization ---------------------------------------------------

    @property
    def tol_sup(self):
        return float(self.meta.get("tol_sup", ANALYTIC_TOL))

    def _check_normalized(self):
        tol = self.tol_sup
        if self._values is not None:
            s = float(np.max(self._values))
            lo = float(np.min(self._values))
            if lo < -tol or s > 1.0 + tol:
                raise NotNormalized(f"values outside [0, 1]: min {lo}, max {s}")
            witness = self.meta.get("sup_witness")
            if witness is not None:
                # sup may be attained off-grid; the witness attests it
                val = float(witness[1])
                if not (1.0 - tol <= val <= 1.0 + tol):
                    raise NotNormalized(
                        f"sup_witness value {val} not within tol_sup of 1"
                    )
            elif s < 1.0 - tol:
                raise NotNormalized(
                    f"grid supremum {s:.6g} below 1 - tol_sup ({tol:.3g}); "
                    "refine the grid or supply a sup_witness"
                )
        else:
            point, val = self.meta["sup_witness"]
            if not (1.0 - tol <= float(val) <= 1.0 + tol):
                raise NotNormalized(
                    f"sup_witness value {val} not within tol_sup of 1"
                )
            # the witness must actually evaluate to its claimed value
            got = float(self.evaluate(np.atleast_2d(np.asarray(point, float)))[0])
            if abs(got - float(val)) > max(tol, 1e-9):
                raise NotNormalized(
                    f"sup_witness claims {val} but evaluator returns {got}"
                )

    # -- evaluation ------------------------------------------------------

    def evaluate(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self._evaluator(pts), dtype=float)

    @property
    def values(self):
        if self._values is None:
            pts = self.domain.points()
            vals = self.evaluate(pts).reshape(self.domain.shape)
            tol = self.tol_sup
            vals = np.clip(vals, 0.0, 1.0)
            # witness may sit off-grid; grid max below 1 is then expected
            self._values = vals
        return self._values

    def at(self, point):
        """Plausibility at a point, linear interpolation between grid nodes.

        For discrete axes the point must match a label exactly.
        """
        axes = self.domain.axes
        if self.domain.ndim == 1:
            ax = axes[0]
            if ax.is_discrete():
                return float(self.values[ax.index_of(point)])
            x = float(np.asarray(point).reshape(()))
            return float(np.interp(x, ax.values, self.values))
        point = np.asarray(point, dtype=object).reshape(-1)
        if len(point) != self.domain.ndim:
            raise ValueError("point dimension mismatch")
        if all(not a.is_discrete() for a in axes):
            from scipy.interpolate import RegularGridInterpolator

            itp = RegularGridInterpolator(
                [a.values for a in axes], self.values, bounds_error=False,
                fill_value=None,
            )
            return float(itp(np.asarray(point, dtype=float).reshape(1, -1))[0])
        # mixed axes: exact lookup on discrete, interp on the rest
        idx = []
        cont_axes = []
        for k, a in enumerate(axes):
            if a.is_discrete():
                idx.append(a.index_of(point[k]))
            else:
                idx.append(slice(None))
                cont_axes.append((k, a))
        sub = self.values[tuple(idx)]
        if not cont_axes:
            return float(sub)
        if len(cont_axes) == 1:
            k, a = cont_axes[0]
            return float(np.interp(float(point[k]), a.values, sub))
        from scipy.interpolate import RegularGridInterpolator

        itp = RegularGridInterpolator(
            [a.values for _, a in cont_axes], sub, bounds_error=False,
            fill_value=None,
        )
        q = np.asarray([float(point[k]) for k, _ in cont_axes]).reshape(1, -1)
        return float(itp(q)[0])

    # -- summaries -------------------------------------------------------

    def sup(self):
        witness = self.meta.get("sup_witness")
        grid_sup = float(np.max(self.values))
        if witness is not None:
            return max(grid_sup, float(witness[1]))
        return grid_sup

    def argmax_set(self, tol=1e-12):
        """All grid points within tol of the grid maximum.

        A flat top is a set, not a point; callers that need one number
        should say how they collapse the set.
        """
        vals = self.values
        m = float(np.max(vals))
        mask = vals >= m - tol
        return self.domain.points()[mask.reshape(-1)]

    # -- set functions ---------------------------------------------------

    def _mask_of(self, assertion):
        pts = self.domain.points()
        if callable(assertion):
            if self.domain.ndim == 1:
                mask = np.asarray([bool(assertion(p[0])) for p in pts])
            else:
                mask = np.asarray([bool(assertion(p)) for p in pts])
        else:
            mask = np.asarray(assertion, dtype=bool).reshape(-1)
            if mask.size != self.domain.size:
                raise ValueError("mask size does not match domain")
        return mask

    def upper_prob(self, assertion):
        """sup of the contour over the assertion (grid points only)."""
        mask = self._mask_of(assertion)
        if not mask.any():
            raise EmptyAssertion("assertion contains no grid point")
        return float(np.max(self.values.reshape(-1)[mask]))

    def lower_prob(self, assertion):
        """1 - upper_prob(complement); assertion and complement non-empty."""
        mask = self._mask_of(assertion)
        if not mask.any():
            raise EmptyAssertion("assertion contains no grid point")
        if mask.all():
            raise EmptyAssertion("complement contains no grid point")
        return 1.0 - float(np.max(self.values.reshape(-1)[~mask]))

    # -- regions ----------------------------------------------------------

    def region(self, alpha):
        """Upper level set {theta : contour(theta) > alpha} on the grid."""
        return Region(self, float(alpha))

    # -- serialization ----------------------------------------------------

    def to_csv(self, path_or_buf=None, threads_meta=None):
        """Write grid as CSV: one column per axis, then plausibility.

        Floats use repr (shortest roundtrip). A std_err column appears when
        meta carries per-point standard errors.
        """
        pts = self.domain.points()
        vals = self.values.reshape(-1)
        se = self.meta.get("std_err")
        se_col = None
        if se is not None:
            se_arr = np.asarray(se, dtype=float)
            if se_arr.shape == self.domain.shape:
                se_col = se_arr.reshape(-1)
            elif se_arr.size == 1:
                se_col = np.full(vals.shape, float(se_arr))
        header = [a.name for a in self.domain.axes] + ["plausibility"]
        if se_col is not None:
            header.append("std_err")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header)
        discrete = [a.is_discrete() for a in self.domain.axes]
        for i in range(pts.shape[0]):
            row = []
            for k in range(pts.shape[1]):
                v = pts[i, k]
                row.append(str(v) if discrete[k] else repr(float(v)))
            row.append(repr(float(vals[i])))
            if se_col is not None:
                row.append(repr(float(se_col[i])))
            w.writerow(row)
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return None

    def meta_json(self):
        out = {}
        for k, v in self.meta.items():
            if k == "std_err":
                a = np.asarray(v)
                out[k] = float(np.max(a)) if a.size > 1 else float(a)
                continue
            if isinstance(v, np.ndarray):
                out[k] = v.tolist()
            elif isinstance(v, (np.floating, np.integer)):
                out[k] = v.item()
            elif isinstance(v, tuple):
                out[k] = [
                    x.tolist() if isinstance(x, np.ndarray) else x for x in v
                ]
            else:
                out[k] = v
        return json.dumps(out, sort_keys=True)


class Region:
    """Strict upper level set of a contour at a given alpha."""

    def __init__(self, contour, alpha):
        if not (0.0 <= alpha < 1.0):
            raise ValueError("alpha must be in [0, 1)")
        self.contour = contour
        self.alpha = alpha
        self.mask = contour.values > alpha

    @property
    def is_empty(self):
        return not self.mask.any()

    def points(self):
        return self.contour.domain.points()[self.mask.reshape(-1)]

    def contains(self, point):
        """Membership by interpolated plausibility, strict > alpha."""
        return self.contour.at(point) > self.alpha

    def touches_boundary(self):
        """True when the level set reaches the edge of any interval axis.

        A region clipped by the grid edge understates the true region;
        callers should widen the domain when this flags.
        """
        dom = self.contour.domain
        m = self.mask
        for k, a in enumerate(dom.axes):
            if a.is_discrete():
                continue
            lo_face = np.take(m, 0, axis=k)
            hi_face = np.take(m, a.n - 1, axis=k)
            if np.any(lo_face) or np.any(hi_face):
                return True
        return False

    def intervals(self):
        """Contiguous runs of grid points, 1-D interval axes only.

        Returns a list of (lo, hi) grid-value pairs; linear interpolation
        against alpha refines each crossing to sub-grid accuracy.
        """
        dom = self.contour.domain
        if dom.ndim != 1 or dom.axes[0].is_discrete():
            raise ValueError("intervals() is defined for 1-D interval axes")
        xs = dom.axes[0].values
        vals = self.contour.values
        m = self.mask
        out = []
        i = 0
        n = len(xs)
        while i < n:
            if not m[i]:
                i += 1
                continue
            j = i
            while j + 1 < n and m[j + 1]:
                j += 1
            lo = xs[i]
            hi = xs[j]
            # refine endpoints by the linear crossing with alpha
            if i > 0:
                v0, v1 = vals[i - 1], vals[i]
                if v1 > v0:
                    t = (self.alpha - v0) / (v1 - v0)
                    lo = xs[i - 1] + t * (xs[i] - xs[i - 1])
            if j + 1 < n:
                v0, v1 = vals[j], vals[j + 1]
                if v0 > v1:
                    t = (self.alpha - v0) / (v1 - v0)
                    hi = xs[j] + t * (xs[j + 1] - xs[j])
            out.append((float(lo), float(hi)))
            i = j + 1
        return out


def consonify(scores, domain=None):
    """Outer consonant approximation of a non-negative score function.

    Input is either an ndarray of scores on a domain grid (domain required)
    or a dict {atom: score} for a finite space. Scores are normalized by
    their max; the result is the smallest possibility contour whose level
    sets contain the score function's level sets, which on a grid is just
    the normalized scores themselves read as a contour.
    """
    if isinstance(scores, dict):
        labels = tuple(scores.keys())
        vals = np.asarray([scores[k] for k in labels], dtype=float)
        if vals.min() < 0:
            raise ValueError("scores must be non-negative")
        s = vals.max()
        if s <= 0:
            raise ValueError("scores must not be identically zero")
        dom = domain_labels("atom", labels)
        return Contour(dom, vals / s, meta={"engine": "consonify"})
    vals = np.asarray(scores, dtype=float)
    if domain is None:
        raise ValueError("domain required for array scores")
    if vals.min() < 0:
        raise ValueError("scores must be non-negative")
    s = vals.max()
    if s <= 0:
        raise ValueError("scores must not be identically zero")
    return Contour(domain, vals / s, meta={"engine": "consonify"})


def prob2poss(pmf):
    """Exact probability-to-possibility transform on a finite space.

    pmf is a dict {atom: probability}. The contour at atom x is the sum of
    probabilities of atoms with mass <= mass(x) (ties included), which is
    the outer consonant approximation of the probability measure.
    """
    atoms = list(pmf.keys())
    p = np.asarray([pmf[a] for a in atoms], dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    tot = p.sum()
    if not np.isclose(tot, 1.0, atol=1e-9):
        raise ValueError(f"probabilities sum to {tot}, expected 1")
    order = np.argsort(p, kind="stable")
    sorted_p = p[order]
    cum = np.cumsum(sorted_p)
    # contour(x) = sum of masses <= mass(x); ties share the same tail sum
    contour = np.empty_like(p)
    for rank, idx in enumerate(order):
        j = rank
        while j + 1 < len(sorted_p) and sorted_p[j + 1] == sorted_p[rank]:
            j += 1
        contour[idx] = cum[j]
    contour = np.minimum(contour, 1.0)
    dom = domain_labels("atom", tuple(atoms))
    return Contour(dom, contour, meta={"engine": "prob2poss"})


def extend_to(contour, mapping, target_domain):
    """Push a contour through a function onto a target grid.

    mapping sends a source grid point to a value of the target quantity;
    each source point's plausibility is binned to the nearest target grid
    node (extension = sup over the preimage, computed over source nodes).
    Warns when some target node receives no source point; the sup is then
    taken over an incomplete fiber and the result at that node is 0.
    """
    if target_domain.ndim != 1:
        raise ValueError("extension target must be one-dimensional")
    tax = target_domain.axes[0]
    src_pts = contour.domain.points()
    src_vals = contour.values.reshape(-1)
    if contour.domain.ndim == 1:
        phi = np.asarray([mapping(p[0]) for p in src_pts], dtype=float)
    else:
        phi = np.asarray([mapping(p) for p in src_pts], dtype=float)
    out = np.zeros(tax.n)
    if tax.is_discrete():
        tvals = tax.values
        hit = np.zeros(tax.n, dtype=bool)
        for i in range(len(phi)):
            for j in range(tax.n):
                if phi[i] == tvals[j]:
                    out[j] = max(out[j], src_vals[i])
                    hit[j] = True
                    break
    else:
        xs = tax.values
        idx = np.clip(np.rint((phi - tax.lo) / tax.step).astype(int), 0, tax.n - 1)
        np.maximum.at(out, idx, src_vals)
        hit = np.zeros(tax.n, dtype=bool)
        hit[np.unique(idx)] = True
    if not hit.all():
        warnings.warn(
            f"{int((~hit).sum())} target nodes received no source point; "
            "their plausibility is reported as 0",
            UncoveredTarget,
        )
    meta = dict(contour.meta)
    meta["engine"] = f"extend[{meta.get('engine', '?')}]"
    meta.pop("std_err", None)
    meta.pop("sup_witness", None)
    # extension preserves the supremum: the best source point maps somewhere
    return Contour(target_domain, out, meta=meta, check=False)
