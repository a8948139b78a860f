"""Device characterization and inverse separation.

fit_forward estimates a press model (Neugebauer primaries, per-ink TVI and the
Yule-Nielsen exponent) from chart measurements. build_separation inverts the
fitted model into a Lab-indexed CMYK LUT with gray-component replacement, and
separate_image applies that LUT to an image by tetrahedral interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chartgen import ChartKind, TestChart
from .classify import ImageCategory
from .colorcore import LabImage, lab_to_xyz_array
from .pressmodel import (INKS, N_PRIMARIES, PRIMARY_NAMES, TVI_KNOTS,
                         MeasurementSet, PressModel, demichel_weights,
                         predict_many)

N_GRID = tuple(round(v, 1) for v in np.arange(1.0, 3.01, 0.1))


@dataclass
class ForwardModel:
    model: PressModel
    residuals: dict[str, float]     # patch id -> training delta E76
    mean_residual: float
    max_residual: float


@dataclass(frozen=True)
class SeparationOptions:
    gcr_strength: float = 0.5
    black_start: float = 45.0
    total_ink_limit: float = 3.2
    grid_size: int = 17

    def __post_init__(self):
        if not (0.0 <= self.gcr_strength <= 1.0):
            raise ValueError("gcr_strength outside [0, 1]")
        if not (1.0 <= self.total_ink_limit <= 4.0):
            raise ValueError("total_ink_limit outside [1, 4]")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")


@dataclass
class SeparationProfile:
    options: SeparationOptions
    nodes: np.ndarray               # (g, g, g, 4) CMYK per (L, a, b) node
    in_gamut: np.ndarray            # (g, g, g) bool
    source_kind: ChartKind = ChartKind.STANDARD
    source_category: ImageCategory | None = None

    @property
    def grid_size(self) -> int:
        return self.options.grid_size

    def axes(self):
        g = self.grid_size
        return (np.linspace(0.0, 100.0, g),
                np.linspace(-128.0, 128.0, g),
                np.linspace(-128.0, 128.0, g))


# ---------------------------------------------------------------------------
# Forward fit

def _is_single_ink(cov: np.ndarray) -> np.ndarray:
    nonzero = cov > 0.0
    return nonzero.sum(axis=1) == 1


def _fit_tvi(cov: np.ndarray, lin_xyz: np.ndarray, white_lin: np.ndarray) -> np.ndarray:
    """Estimate the 11-knot TVI curve per ink from single-ink ramp patches by
    projecting each measurement onto the white->solid axis in linearized XYZ."""
    tvi = np.tile(TVI_KNOTS, (4, 1))
    single = _is_single_ink(cov)
    for ink in range(4):
        mask = single & (cov[:, ink] > 0.0)
        if mask.sum() < 2 or cov[mask, ink].max() < 1.0 - 1e-12:
            continue  # no usable ramp: keep identity
        u = cov[mask, ink]
        m = lin_xyz[mask]
        solid = m[np.argmax(u)]
        axis = solid - white_lin
        denom = float(axis @ axis)
        if denom < 1e-12:
            continue
        eff = (m - white_lin) @ axis / denom
        order = np.argsort(u)
        u_s = np.concatenate([[0.0], u[order], [1.0]])
        e_s = np.concatenate([[0.0], eff[order], [1.0]])
        curve = np.interp(TVI_KNOTS, u_s, e_s)
        curve = np.maximum.accumulate(np.clip(curve, 0.0, 1.0))
        curve[0], curve[-1] = 0.0, 1.0
        tvi[ink] = curve
    return tvi


def _apply_tvi_knots(cov: np.ndarray, tvi: np.ndarray) -> np.ndarray:
    eff = np.empty_like(cov)
    for ink in range(4):
        eff[:, ink] = np.interp(cov[:, ink], TVI_KNOTS, tvi[ink])
    return eff


def _solve_primaries(cov: np.ndarray, lin: np.ndarray, tvi: np.ndarray,
                     pinned: dict[int, np.ndarray], n: float) -> np.ndarray:
    """Least-squares Neugebauer primaries in linearized XYZ space. Pure
    patches pin their primary to the measurement; the rest are ridge-pulled
    toward a multiplicative overprint prior so primaries a chart barely
    exercises cannot blow up under measurement noise."""
    w = demichel_weights(_apply_tvi_knots(cov, tvi))
    prim_lin = np.zeros((N_PRIMARIES, 3))
    pin_idx = sorted(pinned)
    free_idx = [i for i in range(N_PRIMARIES) if i not in pinned]
    for i in pin_idx:
        prim_lin[i] = pinned[i] ** (1.0 / n)

    # overprint prior: white times the ink/white ratios of the solid primaries
    prior = np.zeros((N_PRIMARIES, 3))
    white = prim_lin[0] if 0 in pinned else None
    solids_ok = white is not None and all((1 << b) in pinned for b in range(4))
    for i in range(N_PRIMARIES):
        if solids_ok:
            p = (white ** n).copy()
            for b in range(4):
                if i >> b & 1:
                    p = p * (prim_lin[1 << b] ** n) / np.maximum(white ** n, 1e-12)
            prior[i] = np.maximum(p, 0.0) ** (1.0 / n)

    lam = 0.02
    rhs = lin - w[:, pin_idx] @ prim_lin[pin_idx]
    wf = w[:, free_idx]
    a = wf.T @ wf + lam * np.eye(len(free_idx))
    b = wf.T @ rhs + lam * prior[free_idx]
    prim_lin[free_idx] = np.maximum(np.linalg.solve(a, b), 1e-9)
    return prim_lin


def _refine_tvi(cov: np.ndarray, lin: np.ndarray, tvi: np.ndarray,
                prim_lin: np.ndarray, tvi_anchor: np.ndarray) -> np.ndarray:
    """One Gauss-Newton pass on the interior TVI knots of all four inks,
    fitting every patch in linearized XYZ space. Knots the chart does not
    sample are held near the ramp-based anchor estimate; all knots stay
    monotone in [0, 1] with the 0 -> 0 and 1 -> 1 endpoints fixed."""
    free = [(ink, knot) for ink in range(4) for knot in range(1, 10)]

    def residual(t):
        return (demichel_weights(_apply_tvi_knots(cov, t)) @ prim_lin - lin).ravel()

    r0 = residual(tvi)
    h = 1e-5
    jac = np.empty((r0.size, len(free)))
    for col, (ink, knot) in enumerate(free):
        t = tvi.copy()
        t[ink, knot] += h
        jac[:, col] = (residual(t) - r0) / h
    # anchor term: data-free knots stay put instead of drifting under noise
    mu = 2e-3
    drift = np.array([tvi[ink, knot] - tvi_anchor[ink, knot] for ink, knot in free])
    a = jac.T @ jac + mu * np.eye(len(free))
    step = np.linalg.solve(a, -(jac.T @ r0) - mu * drift)
    out = tvi.copy()
    for col, (ink, knot) in enumerate(free):
        out[ink, knot] += step[col]
    out = np.clip(out, 0.0, 1.0)
    for ink in range(4):
        out[ink] = np.maximum.accumulate(out[ink])
        out[ink, 0], out[ink, -1] = 0.0, 1.0
    return out


def fit_forward(meas: MeasurementSet, chart: TestChart,
                n_fixed: float | None = None) -> ForwardModel:
    ids = [p.id for p in chart.patches]
    missing = [i for i in ids if i not in meas.entries]
    if missing:
        raise ValueError(f"measurements missing for patches {missing[:5]}")
    cov = chart.coverages()
    if len(ids) < 20:
        raise ValueError("need at least 20 measured patches")
    white_rows = np.where(cov.max(axis=1) == 0.0)[0]
    if white_rows.size == 0:
        raise ValueError("chart has no paper-white patch")
    if not np.any(cov[:, 3] >= 0.8):
        raise ValueError("chart has no high-K patch")

    # rank check on nominal coverages: every primary must be exercised
    w_nominal = demichel_weights(cov)
    weak = [PRIMARY_NAMES[i] for i in range(N_PRIMARIES)
            if w_nominal[:, i].max() <= 0.01]
    if weak:
        raise ValueError(f"chart never exercises primaries: {', '.join(weak)}")

    meas_lab = meas.lab_array(ids)
    meas_xyz = np.maximum(lab_to_xyz_array(meas_lab), 0.0)
    white_xyz = meas_xyz[white_rows[0]]

    # pure patches pin their primary exactly (paper white, solid inks, solid
    # overprints when the chart has them)
    pinned: dict[int, np.ndarray] = {}
    binary = np.all((cov == 0.0) | (cov == 1.0), axis=1)
    for row in np.where(binary)[0]:
        idx = sum(1 << b for b in range(4) if cov[row, b] == 1.0)
        pinned.setdefault(idx, meas_xyz[row])

    candidates = [float(n_fixed)] if n_fixed is not None else list(N_GRID)
    best = None
    for n in candidates:
        lin = meas_xyz ** (1.0 / n)
        tvi = _fit_tvi(cov, lin, white_xyz ** (1.0 / n))
        tvi_anchor = tvi.copy()
        # alternate TVI refinement against all patches with primary re-fits,
        # so the chart's patch distribution decides where the model is accurate
        for _ in range(4):
            prim_lin = _solve_primaries(cov, lin, tvi, pinned, n)
            tvi = _refine_tvi(cov, lin, tvi, prim_lin, tvi_anchor)
        prim_lin = _solve_primaries(cov, lin, tvi, pinned, n)
        primaries = prim_lin ** n
        # fitted overprints may not exceed paper white in Y
        primaries[1:, 1] = np.minimum(primaries[1:, 1], primaries[0, 1])

        model = PressModel(name=f"fit({meas.source_name or 'chart'})",
                           primaries=primaries, tvi=tvi, yule_nielsen_n=n)
        pred = predict_many(cov, model)
        de = np.sqrt(np.sum((pred - meas_lab) ** 2, axis=1))
        if best is None or de.mean() < best[0]:
            best = (de.mean(), model, de)

    _, model, de = best
    residuals = {pid: float(d) for pid, d in zip(ids, de)}
    return ForwardModel(model=model, residuals=residuals,
                        mean_residual=float(de.mean()),
                        max_residual=float(de.max()))


# ---------------------------------------------------------------------------
# Inverse LUT construction

def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _invert_tvi(model: PressModel, ink: int, eff):
    return np.interp(eff, model.tvi[ink], TVI_KNOTS)


def _k_ramp_lightness(model: PressModel, samples: int = 256):
    ks = np.linspace(0.0, 1.0, samples)
    cov = np.zeros((samples, 4))
    cov[:, 3] = ks
    lab = predict_many(cov, model)
    return ks, lab[:, 0]


def _solve_inks(targets: np.ndarray, model: PressModel, ink_limit: float,
                starts: list[np.ndarray], k_lo: np.ndarray, k_hi: np.ndarray,
                iters: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Damped Gauss-Newton fit of CMYK (K bounded per node, possibly pinned)
    minimizing Lab distance to each target. Vectorized over nodes and
    deterministic: fixed starts, fixed iteration policy, no randomness."""
    n = targets.shape[0]
    h = 1e-5

    def clip_limit(x):
        x = np.clip(x, 0.0, 1.0)
        x[:, 3] = np.clip(x[:, 3], k_lo, k_hi)
        total = x.sum(axis=1)
        over = total > ink_limit
        if np.any(over):
            budget = np.maximum(ink_limit - x[over, 3], 0.0)
            s = x[over, :3].sum(axis=1)
            scale = np.where(s > 0, budget / np.maximum(s, 1e-12), 0.0)
            x[over, :3] *= np.minimum(scale, 1.0)[:, None]
        return x

    def errors(x):
        r = predict_many(x, model) - targets
        return r, np.sqrt(np.sum(r * r, axis=1))

    best_x = None
    best_e = None
    for x0 in starts:
        x = clip_limit(x0.copy())
        r, e = errors(x)
        lam = np.full(n, 1e-4)
        for _ in range(iters):
            # forward-difference Jacobian, batched over nodes
            jac = np.empty((n, 3, 4))
            for d in range(4):
                xd = x.copy()
                xd[:, d] = xd[:, d] + h
                if d == 3:
                    xd[:, 3] = np.minimum(xd[:, 3], 1.0)
                step = xd[:, d] - x[:, d]
                step[step == 0.0] = h
                rd, _ = errors(xd)
                jac[:, :, d] = (rd - r) / step[:, None]
            # pinned K: zero its column so the step leaves it untouched
            pinned = (k_hi - k_lo) < 1e-12
            jac[pinned, :, 3] = 0.0
            jtj = np.einsum("nij,nik->njk", jac, jac)
            jtj += lam[:, None, None] * np.eye(4)
            jtr = np.einsum("nij,ni->nj", jac, r)
            dx = -np.linalg.solve(jtj, jtr[..., None])[..., 0]
            x_new = clip_limit(x + dx)
            r_new, e_new = errors(x_new)
            improved = e_new <= e
            x[improved] = x_new[improved]
            r[improved] = r_new[improved]
            e[improved] = e_new[improved]
            lam = np.where(improved, np.maximum(lam * 0.3, 1e-8),
                           np.minimum(lam * 10.0, 1e4))
            if e.max() < 1e-4:
                break
        if best_e is None:
            best_x, best_e = x, e
        else:
            better = e < best_e
            best_x[better] = x[better]
            best_e[better] = e[better]
    return best_x, best_e


def _solve_nodes(targets: np.ndarray, k_policy: np.ndarray, model: PressModel,
                 ink_limit: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-pass node solve: CMY with K pinned to the GCR policy value, then a
    rescue pass with K free below the policy value for nodes the pinned solve
    could not reach (dark saturated colors need less black than neutrals)."""
    starts3 = _starts_for(targets, model)
    starts = [np.concatenate([s, k_policy[:, None]], axis=1) for s in starts3]
    x, e = _solve_inks(targets, model, ink_limit, starts, k_policy, k_policy)
    bad = e > 0.5
    if np.any(bad):
        t = targets[bad]
        k_hi = k_policy[bad]
        retry_starts = [np.concatenate([s[bad], (k_hi * f)[:, None]], axis=1)
                        for s, f in zip(starts3, (1.0, 0.5, 0.0))]
        x2, e2 = _solve_inks(t, model, ink_limit, retry_starts,
                             np.zeros(bad.sum()), k_hi)
        better = e2 < e[bad]
        rows = np.where(bad)[0][better]
        x[rows] = x2[better]
        e[rows] = e2[better]
    return x, e


def _starts_for(targets: np.ndarray, model: PressModel) -> list[np.ndarray]:
    n = targets.shape[0]
    zeros = np.zeros((n, 3))
    mids = np.full((n, 3), 0.5)
    # third start: lightness-matched coverage on the Lab-nearest chromatic ink
    solids = predict_many(np.eye(4)[:3], model)   # C, M, Y solids
    white_l = predict_many(np.zeros((1, 4)), model)[0, 0]
    d = np.linalg.norm(targets[:, None, :] - solids[None, :, :], axis=2)
    nearest = np.argmin(d, axis=1)
    guess = np.zeros((n, 3))
    for ch in range(3):
        mask = nearest == ch
        if not np.any(mask):
            continue
        span = max(white_l - solids[ch, 0], 1e-6)
        eff = np.clip((white_l - targets[mask, 0]) / span, 0.0, 1.0)
        guess[mask, ch] = _invert_tvi(model, ch, eff)
    return [zeros, mids, guess]


def build_separation(fwd: ForwardModel, opts: SeparationOptions = SeparationOptions(),
                     source_kind: ChartKind = ChartKind.STANDARD,
                     source_category: ImageCategory | None = None) -> SeparationProfile:
    model = fwd.model
    g = opts.grid_size
    axis_l = np.linspace(0.0, 100.0, g)
    axis_a = np.linspace(-128.0, 128.0, g)
    axis_b = np.linspace(-128.0, 128.0, g)
    grid = np.stack(np.meshgrid(axis_l, axis_a, axis_b, indexing="ij"), axis=-1)
    targets = grid.reshape(-1, 3)

    ks, ramp_l = _k_ramp_lightness(model)
    l_white = float(ramp_l[0])
    l_kfull = float(ramp_l[-1])
    # monotone lookup L* -> K (L decreasing in K for sane presses)
    order = np.argsort(ramp_l)
    k_for_l = lambda l: np.interp(np.clip(l, ramp_l[order][0], ramp_l[order][-1]),
                                  ramp_l[order], ks[order])

    k = _gcr_black(targets[:, 0], opts, l_kfull, k_for_l)
    x, err = _solve_nodes(targets, k, model, opts.total_ink_limit)
    in_gamut = err <= 2.5

    # Out-of-gamut nodes: pull the target along its constant hue angle toward
    # the gray axis (lightness clamped into the reachable range) until the
    # solver reaches it, and keep that nearest in-gamut solution. The best
    # direct-projection solve is retained when it lands closer to the original
    # node, which keeps the coverage field smooth across the gamut surface.
    dark_cov = np.zeros((1, 4))
    dark_cov[0] = [min(1.0, (opts.total_ink_limit - 1.0) / 3.0)] * 3 + [1.0]
    l_dark = float(predict_many(dark_cov, model)[0, 0])
    oog = np.where(~in_gamut)[0]
    if oog.size:
        base = targets[oog].copy()
        base[:, 0] = np.clip(base[:, 0], l_dark, l_white)
        unresolved = np.ones(oog.size, dtype=bool)
        for scale in np.linspace(0.9, 0.0, 10):
            idx = np.where(unresolved)[0]
            if idx.size == 0:
                break
            t = base[idx].copy()
            t[:, 1:] *= scale
            k_o = _gcr_black(t[:, 0], opts, l_kfull, k_for_l)
            x_o, e_o = _solve_nodes(t, k_o, model, opts.total_ink_limit)
            ok = (e_o <= 2.5) | (scale == 0.0)
            if not np.any(ok):
                continue
            # distance of the mapped solution's color to the original node
            mapped_de = np.sqrt(np.sum(
                (predict_many(x_o[ok], model) - targets[oog[idx[ok]]]) ** 2, axis=1))
            keep = mapped_de < err[oog[idx[ok]]]
            rows = oog[idx[ok][keep]]
            x[rows] = x_o[ok][keep]
            err[rows] = mapped_de[keep]
            unresolved[idx[ok]] = False

    nodes = x.reshape(g, g, g, 4)
    return SeparationProfile(options=opts, nodes=nodes,
                             in_gamut=in_gamut.reshape(g, g, g),
                             source_kind=source_kind,
                             source_category=source_category)


def _gcr_black(l_targets: np.ndarray, opts: SeparationOptions,
               l_kfull: float, k_for_l) -> np.ndarray:
    """GCR policy: K engages below black_start and ramps smoothly to the full
    amount needed at the darkest reachable lightness. gcr_strength shapes how
    early the ramp rises (1 = aggressive replacement, small = K only near black)."""
    span = max(opts.black_start - l_kfull, 1e-6)
    t = (opts.black_start - l_targets) / span
    ramp = _smoothstep(t) ** (1.0 / max(opts.gcr_strength, 1e-3))
    k = ramp * k_for_l(l_targets)
    return np.clip(k, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Tetrahedral interpolation

def interp_tetrahedral(lut: np.ndarray, axes, points: np.ndarray) -> np.ndarray:
    """Tetrahedral interpolation of an (g, g, g, channels) LUT at (n, 3) points.

    Each cube is split into six tetrahedra along its main diagonal; exact at
    grid nodes and linear along grid edges."""
    g = lut.shape[0]
    pts = np.empty_like(points, dtype=float)
    for d in range(3):
        lo, hi = axes[d][0], axes[d][-1]
        pts[:, d] = np.clip((points[:, d] - lo) / (hi - lo), 0.0, 1.0) * (g - 1)
    base = np.minimum(pts.astype(int), g - 2)
    frac = pts - base

    # sort fractional coords descending: walk from the base corner adding one
    # axis at a time in that order (the tetrahedral traversal)
    order = np.argsort(-frac, axis=1, kind="stable")
    n = points.shape[0]
    rows = np.arange(n)
    corner = base.copy()
    value = lut[corner[:, 0], corner[:, 1], corner[:, 2]].astype(float)
    prev = value
    sorted_frac = np.take_along_axis(frac, order, axis=1)
    for step in range(3):
        corner = corner.copy()
        corner[rows, order[:, step]] += 1
        nxt = lut[corner[:, 0], corner[:, 1], corner[:, 2]].astype(float)
        value = value + sorted_frac[:, step][:, None] * (nxt - prev)
        prev = nxt
    return value


def separate_image(img: LabImage, profile: SeparationProfile) -> np.ndarray:
    """Per-pixel CMYK coverages for a Lab image, shape (height, width, 4)."""
    pts = img.lab.reshape(-1, 3)
    cmyk = interp_tetrahedral(profile.nodes, profile.axes(), pts)
    cmyk = np.clip(cmyk, 0.0, 1.0)
    total = cmyk.sum(axis=1)
    limit = profile.options.total_ink_limit
    over = total > limit
    if np.any(over):
        cmyk[over] *= (limit / total[over])[:, None]
    return cmyk.reshape(img.height, img.width, 4)


def separate_points(points: np.ndarray, profile: SeparationProfile) -> np.ndarray:
    """CMYK coverages for bare (n, 3) Lab points."""
    cmyk = interp_tetrahedral(profile.nodes, profile.axes(), np.asarray(points, float))
    return np.clip(cmyk, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Profile persistence (round trip is bit-exact: floats stored via repr)

PROFILE_SCHEMA = "KEYTONE_PROFILE 1"


def profile_to_text(profile: SeparationProfile) -> str:
    o = profile.options
    lines = [
        PROFILE_SCHEMA,
        f"grid_size {o.grid_size}",
        f"gcr_strength {o.gcr_strength!r}",
        f"black_start {o.black_start!r}",
        f"total_ink_limit {o.total_ink_limit!r}",
        f"source_kind {profile.source_kind.value}",
        f"source_category {profile.source_category.value if profile.source_category else 'none'}",
        "BEGIN_NODES",
    ]
    flat = profile.nodes.reshape(-1, 4)
    flags = profile.in_gamut.reshape(-1)
    for i in range(flat.shape[0]):
        c, m, y, k = (float(v) for v in flat[i])  # repr of float round-trips
        lines.append(f"{c!r} {m!r} {y!r} {k!r} {1 if flags[i] else 0}")
    lines.append("END_NODES")
    return "\n".join(lines) + "\n"


def profile_from_text(text: str) -> SeparationProfile:
    lines = text.split("\n")
    if not lines or lines[0].strip() != PROFILE_SCHEMA:
        raise ValueError("not a keytone separation profile")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].strip() != "BEGIN_NODES":
        if lines[i].strip():
            key, _, value = lines[i].partition(" ")
            header[key] = value.strip()
        i += 1
    opts = SeparationOptions(
        gcr_strength=float(header["gcr_strength"]),
        black_start=float(header["black_start"]),
        total_ink_limit=float(header["total_ink_limit"]),
        grid_size=int(header["grid_size"]),
    )
    g = opts.grid_size
    rows = []
    flags = []
    i += 1
    while i < len(lines) and lines[i].strip() != "END_NODES":
        parts = lines[i].split()
        rows.append([float(v) for v in parts[:4]])
        flags.append(parts[4] == "1")
        i += 1
    if len(rows) != g ** 3:
        raise ValueError(f"profile has {len(rows)} nodes, expected {g ** 3}")
    category = header.get("source_category", "none")
    return SeparationProfile(
        options=opts,
        nodes=np.array(rows).reshape(g, g, g, 4),
        in_gamut=np.array(flags, dtype=bool).reshape(g, g, g),
        source_kind=ChartKind(header.get("source_kind", "standard")),
        source_category=None if category == "none" else ImageCategory(category),
    )
