"""Needlet frames on the torus: window, cubature, transforms, sequence norms.

A frame at scale B > 1 holds one level per resolution j. Level j couples the
frequency shell B**(j-1) < |l| < B**(j+1) with a uniform cubature grid that
integrates every product of two shell frequencies exactly, which is what makes
the system a tight frame on zero-mean functions:

    psi_jk(theta) = sqrt(lambda_j) * sum_l b(|l|/B**j) conj(e_l(xi_jk)) e_l(theta)

Derivatives of needlets stay inside the same shell; they only pick up the
per-frequency multiplier prod_i (i*l_i)**m_i.

The frame cannot represent the mean (the zero frequency is in no shell), so
analysis/synthesis act on the zero-mean part of a function. For derivative
orders m != 0 this is immaterial; for m = 0 density work the known mean
1/(2pi)**d is added back by the caller.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .harmonics import (
    TWO_PI,
    as_multi_index,
    as_points,
    derivative_multiplier,
    eigenvalue,
    frequency_shell,
    wrap_angles,
)

IMAG_RESIDUE_TOL = 1e-9

# chunk sizes for the dense exponential matrices, to bound peak memory
_POINT_CHUNK = 1 << 15


def drop_imag(values, tol=IMAG_RESIDUE_TOL, what="evaluation"):
    """Assert the imaginary residue of a nominally real array is tiny, then drop it.

    Raises instead of truncating silently: a large residue means a broken
    conjugate-symmetric sum, not a rounding artifact.
    """
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return np.asarray(values, dtype=float)
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > tol:
        raise ValueError(f"imaginary residue {residue:.3e} exceeds {tol:g} in {what}")
    return np.ascontiguousarray(values.real)


class NeedletWindow:
    """Smooth Littlewood-Paley window b supported on [1/B, B].

    Construction: let psi0(t) = exp(-1/(1-t^2)) on (-1, 1) and 0 outside, and
    let Psi be its normalized antiderivative (0 at -1, 1 at +1). The plateau
    function phi equals 1 on [0, 1/B], descends smoothly as
    Psi(1 - 2(t - 1/B) B/(B-1)) on (1/B, 1), and is 0 from 1 on. Then

        b(t) = sqrt(max(phi(t/B) - phi(t), 0)).

    b(c/B**j)^2 telescopes over j, so sum_{j>=0} b(c/B**j)^2 = 1 for every
    c > 1 holds to machine precision: it only needs phi to be exactly 1 and 0
    on its plateaus, not an accurate interior integral.
    """

    def __init__(self, B, ramp_nodes=4097):
        if B <= 1:
            raise ValueError("scale B must exceed 1")
        self.B = float(B)
        grid = np.linspace(-1.0, 1.0, int(ramp_nodes))
        bump = np.zeros_like(grid)
        inside = np.abs(grid) < 1.0
        bump[inside] = np.exp(-1.0 / (1.0 - grid[inside] ** 2))
        # antiderivative of the spline integrates the fit exactly and stays smooth
        self._ramp = CubicSpline(grid, bump).antiderivative()
        self._ramp_total = float(self._ramp(1.0))
        self._moments: dict[int, float] = {}

    def _smooth_step(self, u):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        return self._ramp(u) / self._ramp_total

    def _plateau(self, t):
        t = np.asarray(t, dtype=float)
        B = self.B
        u = 1.0 - 2.0 * (t - 1.0 / B) * B / (B - 1.0)
        val = self._smooth_step(u)
        # exact plateaus; the telescoping partition of unity depends on these
        val = np.where(t <= 1.0 / B, 1.0, val)
        val = np.where(t >= 1.0, 0.0, val)
        return val

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        sq = self._plateau(t / self.B) - self._plateau(t)
        out = np.sqrt(np.maximum(sq, 0.0))  # clip sub-epsilon negatives
        return float(out) if out.ndim == 0 else out

    def moment(self, q):
        """I_q = integral of u**q b(u)^2 over [1/B, B], cached per q."""
        q = int(q)
        if q < 0:
            raise ValueError("moment order q must be nonnegative")
        if q not in self._moments:
            val, _ = quad(
                lambda u: u**q * float(self(u)) ** 2,
                1.0 / self.B,
                self.B,
                points=[1.0],
                limit=200,
                epsabs=1e-12,
                epsrel=1e-12,
            )
            self._moments[q] = float(val)
        return self._moments[q]


def build_window(B):
    """Window function for scale B; see NeedletWindow."""
    return NeedletWindow(B)


def window_moment(window, q):
    """I_q = integral of u**q b(u)^2 over the window support."""
    return window.moment(q)


def uniform_grid(npts, d):
    """Uniform tensor grid on [0, 2pi)^d with npts points per dimension, as (npts**d, d) rows."""
    if npts < 1:
        raise ValueError("grid needs at least one point per dimension")
    axis = np.arange(npts) * (TWO_PI / npts)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, d)


@dataclasses.dataclass(frozen=True)
class CubatureLevel:
    """Uniform cubature exact for all frequency products of one shell."""

    j: int
    npts_per_dim: int
    points: np.ndarray  # (K_j, d)
    weight: float  # common weight lambda_jk = (2pi)^d / K_j

    @property
    def K(self):
        return self.points.shape[0]

    @property
    def weights(self):
        return np.full(self.K, self.weight)


@dataclasses.dataclass(frozen=True)
class _Level:
    j: int
    freqs: np.ndarray  # (nf, d) int64
    bvals: np.ndarray  # (nf,) window values b(|l|/B^j)
    cubature: CubatureLevel


class NeedletFrame:
    """Toroidal needlet system at scale B, dimension d, levels 0..jmax.

    Immutable after construction; shells, window values and cubature grids
    are precomputed per level.
    """

    def __init__(self, B, d, jmax, window=None, max_points=10**8):
        if d < 1:
            raise ValueError("dimension d must be at least 1")
        if jmax < 0:
            raise ValueError("jmax must be nonnegative")
        if window is not None and abs(window.B - B) > 1e-12:
            raise ValueError("window scale does not match frame scale")
        self.B = float(B)
        self.d = int(d)
        self.jmax = int(jmax)
        self.window = window if window is not None else NeedletWindow(B)
        top_n = 2 * math.ceil(self.B ** (self.jmax + 1)) + 1
        if top_n**self.d > max_points:
            raise ValueError(
                f"level {jmax} needs {top_n**self.d} cubature points, above the cap {max_points}"
            )
        self._levels = []
        for j in range(self.jmax + 1):
            freqs = frequency_shell(j, self.B, self.d)
            bvals = np.asarray(self.window(eigenvalue(freqs) / self.B**j), dtype=float)
            npts = 2 * math.ceil(self.B ** (j + 1)) + 1
            pts = uniform_grid(npts, self.d)
            weight = TWO_PI**self.d / pts.shape[0]
            self._levels.append(
                _Level(j, freqs, bvals, CubatureLevel(j, npts, pts, weight))
            )

    def level(self, j):
        if not 0 <= j <= self.jmax:
            raise ValueError(f"level {j} outside 0..{self.jmax}")
        return self._levels[j]

    def shell(self, j):
        return self.level(j).freqs

    def cubature(self, j):
        return self.level(j).cubature

    def window_values(self, j):
        return self.level(j).bvals

    def level_sizes(self):
        return [lev.cubature.K for lev in self._levels]


def build_frame(B, d, jmax, window=None, max_points=10**8):
    """Construct a NeedletFrame; see the class docstring."""
    return NeedletFrame(B, d, jmax, window=window, max_points=max_points)


def _phases(points, freqs, sign, chunk=_POINT_CHUNK):
    """exp(sign * i * points @ freqs.T), evaluated in row chunks.

    Chunking keeps peak memory bounded; each chunk is a plain vectorized
    numpy op, so results do not depend on the chunk size... they do not
    depend on thread count either, which the reproducibility contract needs.
    """
    n = points.shape[0]
    out = np.empty((n, freqs.shape[0]), dtype=complex)
    ft = freqs.T.astype(float)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        out[start:stop] = np.exp(1j * sign * (points[start:stop] @ ft))
    return out


def _pixel_transform(level, amplitudes, sign=-1.0, method="direct"):
    """sum_l amplitudes_l * exp(sign * i * <l, xi_k>) for every cubature point k.

    The FFT path fills the shell amplitudes into an N^d cube indexed by
    l mod N (residues are distinct because per-coordinate frequencies stay
    below N/2) and runs fftn; it must agree with the direct path to 1e-10.
    """
    if method == "direct":
        return _phases(level.cubature.points, level.freqs, sign) @ amplitudes
    if method == "fft":
        npts = level.cubature.npts_per_dim
        d = level.freqs.shape[1]
        cube = np.zeros((npts,) * d, dtype=complex)
        idx = tuple(np.mod(level.freqs[:, i], npts) for i in range(d))
        cube[idx] = amplitudes
        if sign < 0:
            return np.fft.fftn(cube).reshape(-1)
        return (np.fft.ifftn(cube) * cube.size).reshape(-1)
    raise ValueError(f"unknown method {method!r}")


@dataclasses.dataclass(eq=False)
class CoefficientArray:
    """Per-level needlet coefficients for one derivative order.

    levels[j] is the length-K_j float array of coefficients at level j.
    provenance records how the values were obtained: "exact-quadrature"
    for analysis of a known function, "empirical" for sample averages.
    """

    m: tuple
    levels: list
    provenance: str

    def __post_init__(self):
        self.m = tuple(int(v) for v in self.m)
        self.levels = [np.asarray(lv, dtype=float) for lv in self.levels]
        if self.provenance not in ("exact-quadrature", "empirical"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        for lv in self.levels:
            if lv.ndim != 1 or not np.all(np.isfinite(lv)):
                raise ValueError("coefficient levels must be 1-d finite arrays")

    @property
    def njlevels(self):
        return len(self.levels)

    def level(self, j):
        return self.levels[j]

    def total_count(self):
        return int(sum(lv.size for lv in self.levels))

    def scaled(self, c):
        return CoefficientArray(self.m, [c * lv for lv in self.levels], self.provenance)

    def to_csv(self, path):
        """Write `j,k,value` rows, levels ascending, k ascending, 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("j,k,value\n")
            for j, lv in enumerate(self.levels):
                for k, val in enumerate(lv):
                    fh.write(f"{j},{k},{val:.17g}\n")

    @classmethod
    def from_csv(cls, path, m, provenance):
        by_level = {}
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "j,k,value":
                raise ValueError(f"unexpected coefficient CSV header {header!r} in {path}")
            for line in fh:
                if not line.strip():
                    continue
                j_s, k_s, v_s = line.strip().split(",")
                by_level.setdefault(int(j_s), {})[int(k_s)] = float(v_s)
        levels = []
        for j in range(max(by_level) + 1 if by_level else 0):
            entries = by_level.get(j, {})
            arr = np.zeros(max(entries) + 1 if entries else 0)
            for k, v in entries.items():
                arr[k] = v
            levels.append(arr)
        return cls(m, levels, provenance)


def check_structure(frame, coeffs):
    """Reject coefficient arrays whose level sizes do not match the frame."""
    if coeffs.njlevels > frame.jmax + 1:
        raise ValueError(
            f"coefficients hold {coeffs.njlevels} levels but the frame stops at jmax={frame.jmax}"
        )
    for j, lv in enumerate(coeffs.levels):
        K = frame.cubature(j).K
        if lv.size != K:
            raise ValueError(f"level {j} holds {lv.size} coefficients, frame cubature has {K}")


def needlet_eval(frame, j, k, theta, m=None):
    """Evaluate the derivative needlet psi^(m)_{j,k} at one or more points.

    Returns a float for a single point, else a 1-d array. The sum over the
    shell is conjugate-symmetric, hence real; the imaginary residue is
    checked against 1e-9 and dropped.
    """
    lev = frame.level(j)
    K = lev.cubature.K
    if not 0 <= k < K:
        raise ValueError(f"pixel index {k} outside 0..{K - 1} at level {j}")
    m = as_multi_index(m, frame.d)
    pts = as_points(theta, frame.d)
    single = pts.shape[0] == 1 and np.ndim(theta) <= 1
    mult = np.atleast_1d(derivative_multiplier(lev.freqs, m))
    xi = lev.cubature.points[k]
    # sqrt(lambda) * sum_l b_l mult_l conj(e_l(xi)) e_l(theta), with the
    # (2pi)^(-d/2) of each basis factor folded into one constant
    amp = lev.bvals * mult * np.exp(-1j * (lev.freqs.astype(float) @ xi))
    scale = math.sqrt(lev.cubature.weight) * TWO_PI ** (-frame.d)
    vals = scale * (_phases(pts, lev.freqs, +1.0) @ amp)
    out = drop_imag(vals, what=f"needlet ({j},{k}) evaluation")
    return float(out[0]) if single else out


def needlet_matrix(frame, j, theta, m=None):
    """Matrix [t, k] = psi^(m)_{j,k}(theta_t) for all pixels k of level j."""
    lev = frame.level(j)
    m = as_multi_index(m, frame.d)
    pts = as_points(theta, frame.d)
    mult = np.atleast_1d(derivative_multiplier(lev.freqs, m))
    scale = math.sqrt(lev.cubature.weight) * TWO_PI ** (-frame.d)
    out = np.empty((pts.shape[0], lev.cubature.K))
    centers = _phases(lev.cubature.points, lev.freqs, -1.0)  # (K, nf)
    for start in range(0, pts.shape[0], _POINT_CHUNK):
        stop = min(start + _POINT_CHUNK, pts.shape[0])
        block = _phases(pts[start:stop], lev.freqs, +1.0) * (lev.bvals * mult)
        out[start:stop] = drop_imag(
            scale * (block @ centers.T), what=f"needlet matrix at level {j}"
        )
    return out


def _fourier_coefficients(frame, f, jmax, band_limit=None, grid_points=None, method="direct"):
    """Raw Fourier coefficients a_l = <f, e_l> for every shell frequency up to jmax.

    Quadrature on a uniform grid; exact once the grid resolves the shell
    band plus the declared band of f. Returns (freq -> coefficient) dicts
    per level, as arrays aligned with the shells.
    """
    band = int(band_limit) if band_limit else 0
    min_pts = 2 * math.ceil(frame.B ** (jmax + 1)) + 1
    npts = grid_points if grid_points is not None else min_pts + 2 * band
    if npts < min_pts:
        raise ValueError(f"analysis grid {npts} cannot resolve level {jmax} (needs >= {min_pts})")
    grid = uniform_grid(npts, frame.d)
    fvals = np.asarray(f(grid[:, 0] if frame.d == 1 else grid), dtype=float)
    if fvals.shape != (grid.shape[0],):
        raise ValueError("function evaluation returned a wrong shape")
    if not np.all(np.isfinite(fvals)):
        raise ValueError("function evaluation produced non-finite values")
    cell = (TWO_PI / npts) ** frame.d
    norm = cell * TWO_PI ** (-frame.d / 2.0)
    per_level = []
    if method == "fft":
        spectrum = np.fft.fftn(fvals.reshape((npts,) * frame.d))
        for j in range(jmax + 1):
            freqs = frame.shell(j)
            idx = tuple(np.mod(freqs[:, i], npts) for i in range(frame.d))
            per_level.append(norm * spectrum[idx])
    elif method == "direct":
        for j in range(jmax + 1):
            freqs = frame.shell(j)
            acc = np.zeros(freqs.shape[0], dtype=complex)
            for start in range(0, grid.shape[0], _POINT_CHUNK):
                stop = min(start + _POINT_CHUNK, grid.shape[0])
                acc += _phases(grid[start:stop], freqs, -1.0).T @ fvals[start:stop]
            per_level.append(norm * acc)
    else:
        raise ValueError(f"unknown method {method!r}")
    return per_level


def analyze(frame, f, m=None, jmax=None, band_limit=None, grid_points=None, method="direct"):
    """Needlet coefficients of the m-th derivative of f, by exact quadrature.

    Integration by parts moves the derivative onto the needlet, so only f
    itself is evaluated:

        beta^(m)_{j,k} = (-1)^|m| <f, psi^(m)_{j,k}>
                       = sqrt(lambda_j) sum_l b_l mult_l(m) a_l e_l(xi_jk)

    where a_l are the Fourier coefficients of f. Accepts a plain callable or
    an object with a `pdf` attribute (a test density); a `band_limit`
    attribute, when present, widens the quadrature grid accordingly.

    method selects the reference direct summation or the FFT fast path; the
    two agree to 1e-10 and differ only in speed.
    """
    if jmax is None:
        jmax = frame.jmax
    if jmax > frame.jmax:
        raise ValueError(f"jmax {jmax} exceeds frame jmax {frame.jmax}")
    m = as_multi_index(m, frame.d)
    fn = f.pdf if hasattr(f, "pdf") else f
    if band_limit is None:
        band_limit = getattr(f, "band_limit", None)
    coeffs_per_level = _fourier_coefficients(
        frame, fn, jmax, band_limit=band_limit, grid_points=grid_points, method=method
    )
    levels = []
    for j in range(jmax + 1):
        lev = frame.level(j)
        mult = np.atleast_1d(derivative_multiplier(lev.freqs, m))
        # beta^(m)_{j,k} = sqrt(lambda) sum_l b_l mult_l a_l e_l(xi_jk); the
        # (-1)^|m| of the integration by parts cancels against the conjugated
        # multiplier, so no sign factor remains here
        amp = lev.bvals * mult * coeffs_per_level[j]
        raw = _pixel_transform(lev, amp, sign=+1.0, method=method)
        scale = math.sqrt(lev.cubature.weight) * TWO_PI ** (-frame.d / 2.0)
        levels.append(drop_imag(scale * raw, what=f"analysis coefficients at level {j}"))
    return CoefficientArray(m, levels, "exact-quadrature")


def synthesize(frame, coeffs, grid, method="direct"):
    """sum_{j,k} c_{j,k} psi_{j,k}(theta) over the grid points.

    Synthesis always uses underived needlets; derivative content lives in the
    coefficients. grid is an (n, d) array (or anything `as_points` accepts).
    """
    check_structure(frame, coeffs)
    pts = as_points(grid, frame.d)
    out = np.zeros(pts.shape[0])
    for j, cvec in enumerate(coeffs.levels):
        if not np.any(cvec):
            continue
        lev = frame.level(j)
        # T_l = sum_k c_k conj(e_l(xi_k)); then add sqrt(lambda) sum_l b_l T_l e_l(theta)
        T = _phases(lev.cubature.points, lev.freqs, -1.0).T @ cvec
        amp = lev.bvals * T
        scale = math.sqrt(lev.cubature.weight) * TWO_PI ** (-frame.d)
        for start in range(0, pts.shape[0], _POINT_CHUNK):
            stop = min(start + _POINT_CHUNK, pts.shape[0])
            block = scale * (_phases(pts[start:stop], lev.freqs, +1.0) @ amp)
            out[start:stop] += drop_imag(block, what=f"synthesis at level {j}")
    return out


def besov_sequence_norm(coeffs, s, r, q, B, d):
    """Sequence-space Besov norm of a coefficient array.

    l^q over levels j of B**(j*(s + d*(1/2 - 1/r))) times the l^r norm over k
    of level j. r or q equal to inf take suprema.
    """
    if r < 1 or q < 1:
        raise ValueError("r and q must be at least 1 (inf allowed)")
    level_terms = []
    for j, lv in enumerate(coeffs.levels):
        if math.isinf(r):
            lnorm = float(np.max(np.abs(lv))) if lv.size else 0.0
            rexp = 0.0
        else:
            lnorm = float(np.sum(np.abs(lv) ** r) ** (1.0 / r))
            rexp = 1.0 / r
        level_terms.append(B ** (j * (s + d * (0.5 - rexp))) * lnorm)
    if not level_terms:
        return 0.0
    terms = np.asarray(level_terms)
    if math.isinf(q):
        return float(np.max(terms))
    return float(np.sum(terms**q) ** (1.0 / q))


def needlet_l2_norm(frame, j, m=None):
    """Exact L2 norm of psi^(m)_{j,k} (the same for every k at level j).

    By orthonormality of the basis the squared norm is
    lambda_j (2pi)^-d sum_l b_l^2 prod_i l_i^(2 m_i).
    """
    lev = frame.level(j)
    m = as_multi_index(m, frame.d)
    mult2 = np.prod(lev.freqs.astype(float) ** (2 * np.asarray(m)), axis=-1)
    total = float(np.sum(lev.bvals**2 * mult2))
    return math.sqrt(lev.cubature.weight * TWO_PI ** (-frame.d) * total)


def needlet_lp_norm(frame, j, m=None, p=2, grid_per_dim=None):
    """Quadrature L^p norm of psi^(m)_{j,k} on a uniform grid (k-independent)."""
    if grid_per_dim is None:
        grid_per_dim = max(64, 8 * math.ceil(frame.B ** (j + 1)))
    grid = uniform_grid(grid_per_dim, frame.d)
    vals = np.abs(needlet_eval(frame, j, 0, grid, m=m))
    cell = (TWO_PI / grid_per_dim) ** frame.d
    if math.isinf(p):
        return float(np.max(vals))
    return float((cell * np.sum(vals**p)) ** (1.0 / p))


@dataclasses.dataclass(frozen=True)
class LocalizationProfile:
    """Observed decay of one needlet against the quasi-exponential envelope."""

    j: int
    k: int
    m: tuple
    exponent: float
    distances: np.ndarray
    values: np.ndarray
    constant: float


def localization_profile(frame, j, k, m=None, exponent=3.0, samples=2048):
    """Fit the smallest c with |psi^(m)| <= c B^{j(|m|+d/2)} / (1 + B^j dist)^exponent.

    Samples along each coordinate axis ray from the needlet's own center plus
    the main diagonal, out to the torus injectivity radius.
    """
    m = as_multi_index(m, frame.d)
    lev = frame.level(j)
    xi = lev.cubature.points[k]
    directions = [np.eye(frame.d)[i] for i in range(frame.d)]
    if frame.d > 1:
        directions.append(np.ones(frame.d) / math.sqrt(frame.d))
    radii = np.linspace(0.0, np.pi, max(2, samples // len(directions)))
    dists, vals = [], []
    for direction in directions:
        pts = wrap_angles(xi[None, :] + radii[:, None] * direction[None, :])
        vals.append(np.abs(needlet_eval(frame, j, k, pts, m=m)))
        dists.append(radii)
    dists = np.concatenate(dists)
    vals = np.concatenate(vals)
    scale = frame.B ** (j * (sum(m) + frame.d / 2.0))
    ratios = vals * (1.0 + frame.B**j * dists) ** exponent / scale
    return LocalizationProfile(j, k, m, float(exponent), dists, vals, float(np.max(ratios)))
