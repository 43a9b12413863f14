"""Direction-separated curved tube families: construction from a phase,
grid rasterization, union volume, L^p sums of the overlap function, and
tube-in-set counting.

Desk scale means n = 3, delta in [2^-7, 2^-4], grid resolution delta/4;
larger n must be requested explicitly (cost grows like h^-n).

Tube membership uses x-slice distance at matching t, which is comparable to
the gradient-separation distance defining the tubes whenever the rank
condition holds, and is monotone and cheap on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .jets import Jet, jet_diff, jet_to_float
from .phases import Phase
from .randutil import child_rng, uniform

PHI_RESIDUAL_TOL = 1e-12
DESK_MAX_N = 3


class SimulationError(ValueError):
    pass


class PolyEval:
    """Compiled numpy evaluator for a polynomial jet."""

    def __init__(self, jet: Jet):
        jet = jet_to_float(jet)
        items = jet.items()
        if not items:
            self.exps = np.zeros((1, jet.num_vars), dtype=np.int64)
            self.coefs = np.zeros(1)
        else:
            self.exps = np.array([e for e, _ in items], dtype=np.int64)
            self.coefs = np.array([c for _, c in items])
        self.num_vars = jet.num_vars

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """points: (..., num_vars) -> values (...)."""
        pts = np.asarray(points, dtype=float)
        monos = np.prod(pts[..., None, :] ** self.exps[None, :, :], axis=-1)
        return monos @ self.coefs


class PhaseGeometry:
    """Gradient and mixed-Hessian evaluators for Newton continuation."""

    def __init__(self, p: Phase):
        self.n = p.n
        self.eps0 = float(p.eps0)
        self.center = np.array([float(c) for c in p.center])
        if any(abs(c) > 1e-15 for c in self.center):
            raise SimulationError("tube simulation expects a phase centered at 0")
        jet = p.jet
        self.grad_y = [PolyEval(jet_diff(jet, y)) for y in p.y_vars()]
        self.jac = [[PolyEval(jet_diff(jet_diff(jet, y), x)) for x in p.x_vars()]
                    for y in p.y_vars()]

    def grad(self, x: np.ndarray, t: np.ndarray, y: np.ndarray) -> np.ndarray:
        """x: (B, n-1), t: (B,), y: (B, n-1) -> (B, n-1)."""
        pts = np.concatenate([x, t[:, None], y], axis=1)
        return np.stack([g(pts) for g in self.grad_y], axis=1)

    def jacobian(self, x: np.ndarray, t: np.ndarray, y: np.ndarray) -> np.ndarray:
        pts = np.concatenate([x, t[:, None], y], axis=1)
        m = self.n - 1
        out = np.empty((len(pts), m, m))
        for i in range(m):
            for j in range(m):
                out[:, i, j] = self.jac[i][j](pts)
        return out

    def solve_x(self, v: np.ndarray, t: float, y: np.ndarray,
                x0: np.ndarray, tol: float = PHI_RESIDUAL_TOL,
                max_iter: int = 60) -> np.ndarray:
        """Batched Newton for grad_y phi(x, t; y) = v, warm-started at x0."""
        x = x0.copy()
        tv = np.full(len(x), float(t))
        for _ in range(max_iter):
            r = self.grad(x, tv, y) - v
            if float(np.max(np.abs(r))) <= tol:
                return x
            J = self.jacobian(x, tv, y)
            x = x - np.linalg.solve(J, r[..., None])[..., 0]
        r = self.grad(x, tv, y) - v
        if float(np.max(np.abs(r))) > tol:
            raise SimulationError(f"Newton did not reach residual {tol}")
        return x


def phi_map(p: Phase, v, t, y, tol: float = PHI_RESIDUAL_TOL) -> np.ndarray:
    """The x with grad_y phi(x, t; y) = v, by Newton continuation in t from
    the t = 0 solution."""
    geom = PhaseGeometry(p)
    v = np.asarray(v, dtype=float)[None, :]
    y = np.asarray(y, dtype=float)[None, :]
    x = geom.solve_x(v, 0.0, y, v.copy(), tol)
    t = float(t)
    if t != 0.0:
        steps = max(1, int(math.ceil(abs(t) / (geom.eps0 / 4))))
        for k in range(1, steps + 1):
            x = geom.solve_x(v, t * k / steps, y, x, tol)
    return x[0]


@dataclass
class Tube:
    direction: np.ndarray
    anchor: np.ndarray
    delta: float
    v: np.ndarray
    samples: np.ndarray = field(default=None, repr=False)  # (L, n-1)
    t_grid: np.ndarray = field(default=None, repr=False)   # (L,)


@dataclass
class TubeFamily:
    tubes: list[Tube]
    delta: float
    separation_ok: bool
    n: int
    eps0: float
    geometry: PhaseGeometry = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.tubes)


@dataclass
class GridField:
    h: float
    origin: np.ndarray
    counts: np.ndarray  # int32, shape (Nx,)*(n-1) + (Nt,)

    def occupied(self) -> int:
        return int(np.count_nonzero(self.counts))


def _direction_grid(eps0: float, spacing: float) -> np.ndarray:
    count = int(math.floor(2 * eps0 / spacing))
    if count < 1:
        raise SimulationError("direction spacing exceeds the direction box")
    axis = -eps0 + (np.arange(count) + 0.5) * spacing
    return axis


def _t_layers(eps0: float, h: float) -> np.ndarray:
    count = int(round(2 * eps0 / h))
    return -eps0 + (np.arange(count) + 0.5) * h


def resolve_anchor_rule(rule, directions: np.ndarray, seed: int) -> np.ndarray:
    """Anchor per direction: fixed point, seeded random, linear map of the
    direction, or an explicit list aligned with the direction enumeration."""
    if rule is None:
        rule = {"kind": "fixed", "value": [0.0, 0.0]}
    kind = rule.get("kind", "fixed")
    count, dim = directions.shape
    if kind == "fixed":
        val = np.asarray(rule.get("value", [0.0] * dim), dtype=float)
        return np.tile(val, (count, 1))
    if kind == "random":
        scale = float(rule.get("scale", 0.05))
        rng = child_rng(seed, "anchors")
        return np.array([[uniform(rng, -scale, scale) for _ in range(dim)]
                         for _ in range(count)])
    if kind == "linear":
        mat = np.asarray(rule["matrix"], dtype=float)
        off = np.asarray(rule.get("offset", [0.0] * dim), dtype=float)
        return directions @ mat.T + off
    if kind == "list":
        values = np.asarray(rule["values"], dtype=float)
        if len(values) != count:
            raise SimulationError(f"anchor list has {len(values)} entries for "
                                  f"{count} directions")
        return values
    raise SimulationError(f"unknown anchor rule kind {kind!r}")


def build_family(p: Phase, delta: float, spacing: float, anchor_rule=None,
                 seed: int = 0, h: float | None = None,
                 allow_large_n: bool = False) -> TubeFamily:
    """One tube per grid direction over the eps0 direction box, with anchors
    chosen by the rule; centerlines are sampled at the rasterization layers
    (h defaults to delta/4) by batched Newton continuation from t = 0."""
    if p.n > DESK_MAX_N and not allow_large_n:
        raise SimulationError(
            f"n = {p.n} exceeds desk scale (cost ~ h^-n); pass allow_large_n=True")
    geom = PhaseGeometry(p.to_float() if p.backend == "exact" else p)
    eps0 = geom.eps0
    if h is None:
        h = delta / 4
    axis = _direction_grid(eps0, spacing)
    grids = np.meshgrid(*([axis] * (p.n - 1)), indexing="ij")
    directions = np.stack([g.ravel() for g in grids], axis=1)
    anchors = resolve_anchor_rule(anchor_rule, directions, seed)
    t_grid = _t_layers(eps0, h)

    v = geom.grad(anchors, np.zeros(len(directions)), directions)
    x = anchors.copy().astype(float)
    # continuation upward from the layer nearest t=0, then downward
    order_up = [i for i in np.argsort(t_grid) if t_grid[i] >= 0]
    order_down = [i for i in np.argsort(-t_grid) if t_grid[i] < 0]
    samples = np.empty((len(directions), len(t_grid), p.n - 1))
    for chain in (order_up, order_down):
        xcur = x.copy()
        for li in chain:
            xcur = geom.solve_x(v, float(t_grid[li]), directions, xcur)
            samples[:, li, :] = xcur

    residual = np.abs(geom.grad(
        samples.reshape(-1, p.n - 1),
        np.repeat(t_grid[None, :], len(directions), axis=0).ravel(),
        np.repeat(directions[:, None, :], len(t_grid), axis=1).reshape(-1, p.n - 1),
    ) - np.repeat(v[:, None, :], len(t_grid), axis=1).reshape(-1, p.n - 1)).max()
    assert residual <= PHI_RESIDUAL_TOL, f"centerline residual {residual}"

    tubes = [Tube(direction=directions[i], anchor=anchors[i], delta=float(delta),
                  v=v[i], samples=samples[i], t_grid=t_grid)
             for i in range(len(directions))]
    separation = _min_direction_distance(directions)
    return TubeFamily(tubes, float(delta), bool(separation > delta),
                      p.n, eps0, geom)


def _min_direction_distance(directions: np.ndarray) -> float:
    if len(directions) < 2:
        return math.inf
    d2 = np.sum((directions[:, None, :] - directions[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))


def _tube_layer_cells(axes_sizes, origin, h, center, delta):
    """Indices (ix1, ix2, ...) of cells whose center lies within delta of a
    point, restricted to a local window."""
    dim = len(center)
    lows, highs, coords = [], [], []
    for d in range(dim):
        lo = max(0, int(math.floor((center[d] - delta - origin[d]) / h)))
        hi = min(axes_sizes[d] - 1, int(math.ceil((center[d] + delta - origin[d]) / h)))
        if lo > hi:
            return None
        lows.append(lo)
        highs.append(hi)
        coords.append(origin[d] + (np.arange(lo, hi + 1) + 0.5) * h)
    mesh = np.meshgrid(*coords, indexing="ij")
    dist2 = sum((m - c) ** 2 for m, c in zip(mesh, center))
    mask = dist2 < delta ** 2
    if not mask.any():
        return None
    idx = np.nonzero(mask)
    return tuple(ix + lo for ix, lo in zip(idx, lows))


def _resampled(fam: TubeFamily, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Centerline samples at the layer grid for resolution h: reuse stored
    samples when the grids match, otherwise rerun the continuation."""
    t_grid = _t_layers(fam.eps0, h)
    stored = fam.tubes[0].t_grid
    if stored is not None and len(stored) == len(t_grid) \
            and np.allclose(stored, t_grid, atol=1e-15):
        return np.stack([t.samples for t in fam.tubes]), t_grid
    geom = fam.geometry
    directions = np.stack([t.direction for t in fam.tubes])
    anchors = np.stack([t.anchor for t in fam.tubes])
    v = np.stack([t.v for t in fam.tubes])
    samples = np.empty((len(fam.tubes), len(t_grid), fam.n - 1))
    order_up = [i for i in np.argsort(t_grid) if t_grid[i] >= 0]
    order_down = [i for i in np.argsort(-t_grid) if t_grid[i] < 0]
    for chain in (order_up, order_down):
        xcur = anchors.copy().astype(float)
        for li in chain:
            xcur = geom.solve_x(v, float(t_grid[li]), directions, xcur)
            samples[:, li, :] = xcur
    return samples, t_grid


def rasterize(fam: TubeFamily, h: float, threads: int = 1) -> GridField:
    """Overlap counts of the family on the grid of resolution h."""
    if h > fam.delta / 2 + 1e-15:
        raise SimulationError(f"grid too coarse: h = {h} > delta/2 = {fam.delta / 2}")
    eps0 = fam.eps0
    dim = fam.n - 1
    nx = int(round(2 * eps0 / h))
    samples, t_grid = _resampled(fam, h)
    origin = np.full(dim, -eps0)
    shape = (nx,) * dim + (len(t_grid),)

    def run_chunk(tube_indices) -> np.ndarray:
        counts = np.zeros(shape, dtype=np.int32)
        for ti in tube_indices:
            for li in range(len(t_grid)):
                cells = _tube_layer_cells((nx,) * dim, origin, h,
                                          samples[ti, li], fam.delta)
                if cells is not None:
                    counts[cells + (li,)] += 1
        return counts

    indices = list(range(len(fam.tubes)))
    if threads <= 1 or len(indices) < 2:
        return GridField(h, origin, run_chunk(indices))
    from concurrent.futures import ThreadPoolExecutor
    chunks = [indices[i::threads] for i in range(threads)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run_chunk, chunks))
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return GridField(h, origin, total)


def union_measure(fam: TubeFamily, h: float, threads: int = 1) -> float:
    """Occupied-cell volume of the union of tubes."""
    grid = rasterize(fam, h, threads)
    return grid.occupied() * h ** fam.n


def lp_ratio(fam: TubeFamily, p_exp: float, h: float, threads: int = 1) -> float:
    """|| sum chi_T ||_p / (delta^{-kappa} (sum |T|)^{1/p}) on the grid, with
    kappa = max(0, n - 1 - n/p) so that p = 1 is the exact mass identity."""
    if p_exp < 1:
        raise SimulationError("p must be at least 1")
    grid = rasterize(fam, h, threads)
    counts = grid.counts[grid.counts > 0].astype(np.float64)
    if counts.size == 0:
        return 0.0
    n = fam.n
    mass = counts.sum() * h ** n            # = sum |T| on the grid
    norm = (np.sum(counts ** p_exp) * h ** n) ** (1.0 / p_exp)
    kappa = max(0.0, (n - 1) - n / p_exp)
    return float(norm / (fam.delta ** (-kappa) * mass ** (1.0 / p_exp)))


def tubes_in_set(fam: TubeFamily, predicate: Callable[[np.ndarray], np.ndarray],
                 set_measure: float, h: float | None = None) -> dict:
    """Count tubes all of whose rasterized cells satisfy the predicate, and
    the polynomial-Wolff ratio count / (set_measure * delta^{1-n}).

    ``predicate`` maps an array of cell centers (B, n) to booleans.
    """
    if h is None:
        h = fam.delta / 4
    if h > fam.delta / 2 + 1e-15:
        raise SimulationError("grid too coarse")
    eps0 = fam.eps0
    dim = fam.n - 1
    nx = int(round(2 * eps0 / h))
    samples, t_grid = _resampled(fam, h)
    origin = np.full(dim, -eps0)
    count = 0
    for ti in range(len(fam.tubes)):
        inside = True
        for li in range(len(t_grid)):
            cells = _tube_layer_cells((nx,) * dim, origin, h,
                                      samples[ti, li], fam.delta)
            if cells is None:
                continue
            centers = np.stack([origin[d] + (cells[d] + 0.5) * h
                               for d in range(dim)]
                               + [np.full(len(cells[0]), t_grid[li])], axis=1)
            if not bool(np.all(predicate(centers))):
                inside = False
                break
        if inside:
            count += 1
    ratio = count / (set_measure * fam.delta ** (1 - fam.n))
    return {"count": count, "ratio": float(ratio)}


def compression_scan(p: Phase, delta_list: Sequence[float], h_ratio: float = 0.25,
                     spacing_factor: float = 1.0625, anchor_rule=None,
                     seed: int = 0, threads: int = 1) -> dict:
    """Union measure across a dyadic delta sweep and the fitted log-log slope;
    a slope near 0 indicates no compression, 0.3 and above flags compression."""
    if len(delta_list) < 3:
        raise SimulationError("need at least 3 deltas for a slope fit")
    if h_ratio > 0.5:
        raise SimulationError("h must be at most delta/2")
    rows = []
    for delta in delta_list:
        fam = build_family(p, float(delta), float(delta) * spacing_factor,
                           anchor_rule, seed)
        measure = union_measure(fam, float(delta) * h_ratio, threads)
        rows.append((float(delta), measure))
    xs = np.log([d for d, _ in rows])
    ys = np.log([max(mv, 1e-300) for _, mv in rows])
    if np.ptp(xs) == 0:
        raise SimulationError("degenerate fit: identical deltas")
    slope = float(np.polyfit(xs, ys, 1)[0])
    return {"measures": rows, "slope": slope, "compressed": slope >= 0.3}


def slab_predicate(axis: int, center: float, width: float) -> Callable:
    """Cells with |coordinate_axis - center| <= width."""
    def pred(points: np.ndarray) -> np.ndarray:
        return np.abs(points[:, axis] - center) <= width
    return pred


def surface_band_predicate(width: float) -> Callable:
    """Cells within ``width`` of the model compression surface x2 = t * x1."""
    def pred(points: np.ndarray) -> np.ndarray:
        return np.abs(points[:, 1] - points[:, 2] * points[:, 0]) <= width
    return pred
