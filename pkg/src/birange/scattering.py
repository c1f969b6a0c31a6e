"""Analytic target models: conducting-sphere scattering, geometric path
models, and multi-scatterer scenes with occlusion and articulation.

Phase convention: exp(+j w t) time dependence, propagation exp(-j k r).
The bistatic angle ``beta`` is the angle at the target between the
directions toward the transmitter and toward the receiver (0 = monostatic,
180 = forward scattering); the partial-wave series is evaluated at the
scattering angle 180 - beta between the propagation directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .geometry import BistaticConstellation, direction
from .records import C0, TransferRecord

KA_GUARD = 1.0e4


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Mie series for a perfectly conducting sphere


def _mie_coefficients(x: np.ndarray, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """PEC partial-wave coefficients a_n, b_n, shapes (n_max, len(x))."""
    n = np.arange(1, n_max + 1)[:, None]
    x = np.atleast_1d(x)[None, :]
    jn = spherical_jn(n, x)
    yn = spherical_yn(n, x)
    jnp = spherical_jn(n, x, derivative=True)
    ynp = spherical_yn(n, x, derivative=True)
    psi = x * jn
    psi_p = jn + x * jnp
    h2 = jn - 1j * yn
    zeta = x * h2
    zeta_p = h2 + x * (jnp - 1j * ynp)
    return psi / zeta, psi_p / zeta_p


def _angular_functions(mu: np.ndarray, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """pi_n and tau_n for n = 1..n_max, shapes (n_max, len(mu))."""
    mu = np.atleast_1d(mu).astype(float)
    pi = np.zeros((n_max + 1, mu.size))
    pi[1] = 1.0
    for n in range(2, n_max + 1):
        pi[n] = ((2 * n - 1) * mu * pi[n - 1] - n * pi[n - 2]) / (n - 1)
    ns = np.arange(1, n_max + 1)[:, None]
    tau = ns * mu[None, :] * pi[1:] - (ns + 1) * pi[:-1]
    return pi[1:], tau


def mie_series_order(ka: float) -> int:
    return int(math.ceil(ka + 4.05 * ka ** (1.0 / 3.0) + 2.0))


def mie_scattering_amplitude(
    radius: float, f_hz: Union[float, np.ndarray], beta_deg: Union[float, np.ndarray], pol: str
) -> np.ndarray:
    """Complex far-field amplitude S for a PEC sphere, broadcast (f, beta).

    ``pol`` selects the field component relative to the scattering plane of
    the horizontal cut: ``theta`` (perpendicular) or ``phi`` (parallel).
    Returns shape (nf, nbeta); squeeze for scalars.
    """
    if radius <= 0:
        raise ValueError("radius must be > 0")
    f = np.atleast_1d(np.asarray(f_hz, dtype=float))
    beta = np.atleast_1d(np.asarray(beta_deg, dtype=float))
    if (f <= 0).any():
        raise ValueError("frequency must be > 0")
    k = 2.0 * math.pi * f / C0
    x = k * radius
    x_max = float(x.max())
    if x_max > KA_GUARD:
        raise ValueError(f"ka = {x_max:.3g} exceeds series guard {KA_GUARD:g}")
    n_max = mie_series_order(x_max)
    a, b = _mie_coefficients(x, n_max)
    theta_sc = 180.0 - beta
    mu = np.cos(np.radians(theta_sc))
    pi_n, tau_n = _angular_functions(mu, n_max)
    ns = np.arange(1, n_max + 1)[:, None]
    cn = (2 * ns + 1) / (ns * (ns + 1))
    if pol == "theta":
        s = np.einsum("nf,nb->fb", cn * a, pi_n) + np.einsum("nf,nb->fb", cn * b, tau_n)
    elif pol == "phi":
        s = np.einsum("nf,nb->fb", cn * a, tau_n) + np.einsum("nf,nb->fb", cn * b, pi_n)
    else:
        raise ValueError("pol must be 'theta' or 'phi'")
    return s


def mie_bistatic_rcs(
    radius: float,
    f_hz: Union[float, np.ndarray],
    beta_deg: Union[float, np.ndarray],
    pol: str = "theta",
):
    """Bistatic RCS (m^2) and complex amplitude of a conducting sphere.

    For a sphere the bistatic response depends only on the angle between
    the illumination and observation directions, so ``beta_deg`` fully
    describes the geometry.  Returns broadcast arrays (scalars squeeze).
    """
    f = np.atleast_1d(np.asarray(f_hz, dtype=float))
    s = mie_scattering_amplitude(radius, f, beta_deg, pol)
    k = 2.0 * math.pi * f / C0
    sigma = 4.0 * math.pi * np.abs(s) ** 2 / k[:, None] ** 2
    if np.isscalar(f_hz) and np.isscalar(beta_deg):
        return float(sigma[0, 0]), complex(s[0, 0])
    if np.isscalar(beta_deg):
        return sigma[:, 0], s[:, 0]
    if np.isscalar(f_hz):
        return sigma[0, :], s[0, :]
    return sigma, s


def sphere_path_model(
    beta_deg: Union[float, np.ndarray],
    gantry_radius: float,
    sphere_radius: float,
    creeping_offset: float = 0.008,
) -> tuple[np.ndarray, np.ndarray]:
    """Geometric extra path lengths (m) of the specular and creeping returns.

    Both are round-trip lengths relative to the probe-center-of-sphere
    reference, matching the overlay curves of the single-sphere
    impulse-response measurement.
    """
    beta = np.asarray(beta_deg, dtype=float)
    R, r = float(gantry_radius), float(sphere_radius)
    if R <= r:
        raise ValueError("gantry radius must exceed sphere radius")
    half = np.radians(beta / 2.0)
    specular = 2.0 * np.sqrt(
        (R - r * np.abs(np.cos(half))) ** 2 + (r * np.sin(half)) ** 2
    ) - 2.0 * R
    creeping = np.abs(beta - 180.0) / 360.0 * math.pi * (2.0 * r) + creeping_offset
    if np.isscalar(beta_deg):
        return float(specular), float(creeping)
    return specular, creeping


# ---------------------------------------------------------------------------
# Scenes


@dataclass(frozen=True)
class SphereTarget:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be > 0")


@dataclass(frozen=True)
class PointScatterer:
    position: tuple[float, float, float]
    amplitude: complex = 1.0 + 0j


@dataclass(frozen=True)
class ArticulatedScatterer:
    """Point scatterer on a periodic hinge: the rest position swings about
    ``pivot``/``axis`` by angle amplitude*sin(2 pi t / period + phase)."""

    rest_position: tuple[float, float, float]
    pivot: tuple[float, float, float]
    axis: tuple[float, float, float] = (0.0, 1.0, 0.0)
    amplitude_rad: float = 0.5
    period_s: float = 1.0
    phase_rad: float = 0.0
    amplitude: complex = 1.0 + 0j

    def __post_init__(self):
        if self.period_s <= 0:
            raise ValueError("period must be > 0")

    def pose(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and velocity at scene time t."""
        ax = np.asarray(self.axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        w = 2.0 * math.pi / self.period_s
        chi = self.amplitude_rad * math.sin(w * t + self.phase_rad)
        chi_dot = self.amplitude_rad * w * math.cos(w * t + self.phase_rad)
        rel = np.asarray(self.rest_position, float) - np.asarray(self.pivot, float)
        c, s = math.cos(chi), math.sin(chi)
        rot = rel * c + np.cross(ax, rel) * s + ax * np.dot(ax, rel) * (1 - c)
        pos = np.asarray(self.pivot, float) + rot
        vel = chi_dot * np.cross(ax, rot)
        return pos, vel


@dataclass(frozen=True)
class ArticulatedCluster:
    scatterers: tuple[ArticulatedScatterer, ...]


Target = Union[SphereTarget, PointScatterer, ArticulatedCluster]


@dataclass(frozen=True)
class Scene:
    targets: tuple[Target, ...]
    shadow_attenuation_db: float = -20.0
    include_interactions: bool = True

    def validate(self, turntable_diameter: float = 6.5) -> None:
        rmax = turntable_diameter / 2.0
        for t in self.targets:
            if isinstance(t, SphereTarget):
                if math.hypot(t.center[0], t.center[1]) + t.radius > rmax:
                    raise GeometryError("sphere outside the turntable radius")
            elif isinstance(t, PointScatterer):
                if math.hypot(t.position[0], t.position[1]) > rmax:
                    raise GeometryError("scatterer outside the turntable radius")
            elif isinstance(t, ArticulatedCluster):
                for s in t.scatterers:
                    if math.hypot(s.rest_position[0], s.rest_position[1]) > rmax:
                        raise GeometryError("scatterer outside the turntable radius")


@dataclass(frozen=True)
class PathContribution:
    kind: str  # "los" | "specular" | "creeping" | "inter-target"
    length_m: float
    amplitude: np.ndarray  # complex per frequency point (spreading included)
    occluded: bool = False
    label: str = ""


@dataclass(frozen=True)
class ScattererMotion:
    kind: str
    position: np.ndarray
    velocity: np.ndarray
    range_rate_mps: float  # d/dt of the bistatic path length
    amplitude: complex


def probe_positions(constellation: BistaticConstellation) -> tuple[np.ndarray, np.ndarray]:
    tx = constellation.r_ill * direction(constellation.theta_ill, constellation.phi_ill)
    rx = constellation.r_obs * direction(constellation.theta_obs, constellation.phi_obs)
    return tx, rx


def _segment_hits_sphere(p0: np.ndarray, p1: np.ndarray, sph: SphereTarget) -> bool:
    c = np.asarray(sph.center, float)
    d = p1 - p0
    L2 = float(np.dot(d, d))
    if L2 == 0.0:
        return bool(np.linalg.norm(p0 - c) <= sph.radius)
    t = float(np.dot(c - p0, d)) / L2
    t = min(1.0, max(0.0, t))
    return bool(np.linalg.norm(p0 + t * d - c) <= sph.radius)


def _flat_scatterers(scene: Scene, t: float):
    """(kind, position, velocity, complex amplitude or sphere) at time t."""
    out = []
    for tgt in scene.targets:
        if isinstance(tgt, SphereTarget):
            out.append(("sphere", np.asarray(tgt.center, float), np.zeros(3), tgt))
        elif isinstance(tgt, PointScatterer):
            out.append(("point", np.asarray(tgt.position, float), np.zeros(3), tgt.amplitude))
        else:
            for s in tgt.scatterers:
                pos, vel = s.pose(t)
                out.append(("point", pos, vel, s.amplitude))
    return out


def animate_scene(
    scene: Scene, t: float, constellation: Optional[BistaticConstellation] = None
) -> list[ScattererMotion]:
    """Instantaneous scatterer states; range rates need a constellation."""
    if t < 0:
        raise ValueError("t must be >= 0")
    tx = rx = None
    if constellation is not None:
        tx, rx = probe_positions(constellation)
    out = []
    for kind, pos, vel, amp in _flat_scatterers(scene, t):
        rate = 0.0
        if tx is not None:
            for probe in (tx, rx):
                rel = pos - probe
                dist = np.linalg.norm(rel)
                if dist > 0:
                    rate += float(np.dot(vel, rel / dist))
        out.append(
            ScattererMotion(
                kind=kind,
                position=pos,
                velocity=vel,
                range_rate_mps=rate,
                amplitude=(amp if isinstance(amp, complex) else 0j),
            )
        )
    return out


def scene_paths(
    scene: Scene,
    constellation: BistaticConstellation,
    f_grid: np.ndarray,
    t: float = 0.0,
    pol: str = "theta",
) -> list[PathContribution]:
    """Coherent path list at scene time t over the frequency grid."""
    f = np.asarray(f_grid, dtype=float)
    k = 2.0 * math.pi * f / C0
    tx, rx = probe_positions(constellation)
    items = _flat_scatterers(scene, t)
    spheres = [it[3] for it in items if it[0] == "sphere"]
    shadow = 10.0 ** (scene.shadow_attenuation_db / 20.0)
    paths: list[PathContribution] = []

    def occluded_by_other(pos, own) -> bool:
        for sph in spheres:
            if sph is own:
                continue
            if _segment_hits_sphere(pos, tx, sph) or _segment_hits_sphere(pos, rx, sph):
                return True
        return False

    points: list[tuple[np.ndarray, complex, bool]] = []
    for idx, (kind, pos, _vel, amp) in enumerate(items):
        d_tx = float(np.linalg.norm(tx - pos))
        d_rx = float(np.linalg.norm(rx - pos))
        if d_tx < 1e-6 or d_rx < 1e-6:
            raise GeometryError("scatterer coincident with a probe")
        occ = occluded_by_other(pos, items[idx][3] if kind == "sphere" else None)
        if kind == "sphere":
            sph = items[idx][3]
            u_tx = (tx - pos) / d_tx
            u_rx = (rx - pos) / d_rx
            beta = math.degrees(
                math.acos(max(-1.0, min(1.0, float(np.dot(u_tx, u_rx)))))
            )
            s_amp = mie_scattering_amplitude(sph.radius, f, beta, pol)[:, 0]
            amp_f = s_amp / (1j * k) / (d_tx * d_rx)
            label = f"sphere r={sph.radius}"
        else:
            amp_f = np.full(f.shape, complex(amp)) / (d_tx * d_rx)
            points.append((pos, complex(amp), occ))
            label = "point"
        if occ:
            amp_f = amp_f * shadow
        paths.append(
            PathContribution("los", d_tx + d_rx, amp_f, occluded=occ, label=label)
        )

    if scene.include_interactions and len(points) >= 2:
        for i, (pa, aa, occ_a) in enumerate(points):
            for j, (pb, ab, occ_b) in enumerate(points):
                if i == j:
                    continue
                d1 = float(np.linalg.norm(tx - pa))
                dab = float(np.linalg.norm(pb - pa))
                d2 = float(np.linalg.norm(rx - pb))
                if dab < 1e-6:
                    continue
                amp_f = np.full(f.shape, aa * ab) / (d1 * dab * d2)
                occ = occ_a or occ_b
                if occ:
                    amp_f = amp_f * shadow
                paths.append(
                    PathContribution(
                        "inter-target", d1 + dab + d2, amp_f, occluded=occ,
                        label=f"bounce {i}->{j}",
                    )
                )
    return paths


def sphere_geometric_paths(
    sphere_radius: float, constellation: BistaticConstellation
) -> tuple[PathContribution, PathContribution]:
    """Specular and creeping model paths for a centered sphere (lengths
    relative to the center reference; amplitudes unset)."""
    beta = constellation.bistatic_angle
    R = 0.5 * (constellation.r_ill + constellation.r_obs)
    spec, creep = sphere_path_model(beta, R, sphere_radius)
    empty = np.zeros(0, dtype=complex)
    return (
        PathContribution("specular", float(spec), empty),
        PathContribution("creeping", float(creep), empty),
    )


def scene_response(
    scene: Scene,
    constellation: BistaticConstellation,
    f_grid: np.ndarray,
    t: float = 0.0,
    pol: str = "theta",
    tag: str = "",
) -> TransferRecord:
    """Coherent sum of all scene paths as a transfer record."""
    f = np.asarray(f_grid, dtype=float)
    total = np.zeros(f.shape, dtype=complex)
    for p in scene_paths(scene, constellation, f, t, pol):
        total += p.amplitude * np.exp(-2j * math.pi * f * p.length_m / C0)
    return TransferRecord(
        f, total, constellation_tag=tag or _constellation_tag(constellation),
        pol_pair=f"{pol}{pol}",
    )


def _constellation_tag(c: BistaticConstellation) -> str:
    return (
        f"ill({c.phi_ill:.3f},{c.theta_ill:.3f})"
        f"obs({c.phi_obs:.3f},{c.theta_obs:.3f})"
    )
