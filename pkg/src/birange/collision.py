"""Gantry collision detection and the precomputed collision table.

Each gantry is reduced to a chain of oriented boxes (pedestal, quarter-circle
boom approximated by chained boxes, tip assembly covering radial positioner
and probe), every box inflated by the safety clearance.  Only the moving
gantry azimuth and the two co-elevations can produce contact: the tip box
spans the whole radial travel and its cross-section contains the probe at
any roll angle, so the remaining axes are irrelevant by construction.

The dense table covers those three axes on regular grids; cells are stored
row-major with azimuth outermost.
"""

from __future__ import annotations

import hashlib
import math
import struct
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import BoomBoxParams, ConfigError, FacilityConfig
from .geometry import MachineState

TABLE_AXES = ("moving_az", "moving_coel", "static_coel")
TABLE_MAGIC = b"BIRACOLT"
TABLE_VERSION = 1


class TableRangeError(ValueError):
    pass


@dataclass(frozen=True)
class BoxSet:
    """Oriented boxes: centers (n,3), half extents (n,3), axes (n,3,3).

    Rotation matrices hold the box axes as columns (world frame).
    """

    centers: np.ndarray
    halves: np.ndarray
    rots: np.ndarray

    def __len__(self) -> int:
        return self.centers.shape[0]

    def rotated_z(self, angle_deg: float) -> "BoxSet":
        a = math.radians(angle_deg)
        c, s = math.cos(a), math.sin(a)
        rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return BoxSet(
            centers=self.centers @ rz.T,
            halves=self.halves,
            rots=np.einsum("ij,njk->nik", rz, self.rots),
        )


@dataclass(frozen=True)
class BoundingBoxModel:
    """Collision geometry of both gantries (clearance already applied)."""

    tx_params: BoomBoxParams
    rx_params: BoomBoxParams
    tx_offset_sign: int
    rx_offset_sign: int
    static_pedestal_azimuth: float
    focal_height: float
    clearance: float

    @classmethod
    def from_config(cls, cfg: FacilityConfig) -> "BoundingBoxModel":
        return cls(
            tx_params=cfg.tx_boxes,
            rx_params=cfg.rx_boxes,
            tx_offset_sign=cfg.tx_boom_offset_sign,
            rx_offset_sign=cfg.rx_boom_offset_sign,
            static_pedestal_azimuth=cfg.static_pedestal_azimuth,
            focal_height=cfg.focal_height,
            clearance=cfg.clearance,
        )

    def geometry_hash(self) -> bytes:
        text = repr(
            (
                self.tx_params,
                self.rx_params,
                self.tx_offset_sign,
                self.rx_offset_sign,
                self.static_pedestal_azimuth,
                self.focal_height,
                self.clearance,
            )
        )
        return hashlib.sha256(text.encode()).digest()

    def tx_boxes(self, pedestal_az: float, coel: float) -> BoxSet:
        return gantry_boxes(
            self.tx_params, pedestal_az, coel, self.tx_offset_sign,
            self.focal_height, self.clearance,
        )

    def rx_boxes(self, coel: float) -> BoxSet:
        return gantry_boxes(
            self.rx_params, self.static_pedestal_azimuth, coel,
            self.rx_offset_sign, self.focal_height, self.clearance,
        )


def gantry_boxes(
    params: BoomBoxParams,
    pedestal_az: float,
    coel: float,
    offset_sign: int,
    focal_height: float,
    clearance: float,
) -> BoxSet:
    """World-frame boxes of one gantry at the given axis values."""
    u = np.array(
        [math.cos(math.radians(pedestal_az)), math.sin(math.radians(pedestal_az)), 0.0]
    )
    phi_eff = math.radians(pedestal_az + 90.0 * offset_sign)
    d = np.array([math.cos(phi_eff), math.sin(phi_eff), 0.0])
    z = np.array([0.0, 0.0, 1.0])
    th = math.radians(coel)
    p_hat = math.sin(th) * d + math.cos(th) * z  # tip direction, orthogonal to u
    n_hat = np.cross(u, p_hat)

    D = params.pivot_distance
    B = params.boom_tip_radius
    centers, halves, rots = [], [], []

    # pedestal: floor to pivot
    centers.append(D * u + np.array([0.0, 0.0, -focal_height / 2.0]))
    halves.append(
        np.array([params.pedestal_width / 2.0, params.pedestal_depth / 2.0, focal_height / 2.0])
    )
    rots.append(np.stack([u, np.cross(z, u), z], axis=1))

    # boom: quarter ellipse from pivot (D*u) to tip (B*p_hat), chained boxes
    nseg = params.n_boom_boxes
    for k in range(nseg):
        p0, p1 = (math.pi / 2.0) * k / nseg, (math.pi / 2.0) * (k + 1) / nseg
        psi = np.linspace(p0, p1, 9)
        pts = D * np.cos(psi)[:, None] * u + B * np.sin(psi)[:, None] * p_hat
        mid = 0.5 * (p0 + p1)
        tang = -D * math.sin(mid) * u + B * math.cos(mid) * p_hat
        e1 = tang / np.linalg.norm(tang)
        e3 = np.cross(n_hat, e1)
        s1 = pts @ e1
        s3 = pts @ e3
        c1, c3 = 0.5 * (s1.min() + s1.max()), 0.5 * (s3.min() + s3.max())
        centers.append(c1 * e1 + c3 * e3 + (pts @ n_hat).mean() * n_hat)
        halves.append(
            np.array(
                [
                    0.5 * (s1.max() - s1.min()) + params.boom_thickness / 2.0,
                    params.boom_width / 2.0,
                    0.5 * (s3.max() - s3.min()) + params.boom_thickness / 2.0,
                ]
            )
        )
        rots.append(np.stack([e1, n_hat, e3], axis=1))

    # tip assembly: radial positioner + probe envelope, any roll, all radials
    ri, ro = params.tip_inner_radius, B
    centers.append(0.5 * (ri + ro) * p_hat)
    halves.append(np.array([0.5 * (ro - ri), params.tip_cross / 2.0, params.tip_cross / 2.0]))
    rots.append(np.stack([p_hat, n_hat, np.cross(p_hat, n_hat)], axis=1))

    return BoxSet(
        centers=np.array(centers),
        halves=np.array(halves) + clearance,
        rots=np.array(rots),
    )


def _obb_overlap(cA, hA, RA, cB, hB, RB) -> np.ndarray:
    """Vectorized separating-axis test; leading dims broadcast."""
    R = np.einsum("...ki,...kj->...ij", RA, RB)
    t = np.einsum("...ki,...k->...i", RA, cB - cA)
    absR = np.abs(R) + 1e-12
    sep = np.zeros(t.shape[:-1], dtype=bool)
    for i in range(3):
        ra = hA[..., i]
        rb = (hB[..., :] * absR[..., i, :]).sum(-1)
        sep |= np.abs(t[..., i]) > ra + rb
    for j in range(3):
        ra = (hA[..., :] * absR[..., :, j]).sum(-1)
        rb = hB[..., j]
        sep |= np.abs((t * R[..., :, j]).sum(-1)) > ra + rb
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            lhs = np.abs(t[..., i2] * R[..., i1, j] - t[..., i1] * R[..., i2, j])
            rhs = (
                hA[..., i1] * absR[..., i2, j]
                + hA[..., i2] * absR[..., i1, j]
                + hB[..., j1] * absR[..., i, j2]
                + hB[..., j2] * absR[..., i, j1]
            )
            sep |= lhs > rhs
    return ~sep


def boxsets_collide(a: BoxSet, b: BoxSet) -> bool:
    na, nb = len(a), len(b)
    cA = np.repeat(a.centers, nb, axis=0)
    hA = np.repeat(a.halves, nb, axis=0)
    RA = np.repeat(a.rots, nb, axis=0)
    cB = np.tile(b.centers, (na, 1))
    hB = np.tile(b.halves, (na, 1))
    RB = np.tile(b.rots, (na, 1, 1))
    # bounding-sphere prefilter
    rad = np.linalg.norm(hA, axis=-1) + np.linalg.norm(hB, axis=-1)
    near = np.linalg.norm(cB - cA, axis=-1) <= rad
    if not near.any():
        return False
    return bool(
        _obb_overlap(cA[near], hA[near], RA[near], cB[near], hB[near], RB[near]).any()
    )


def check_collision(
    state: MachineState, model: BoundingBoxModel, cfg: FacilityConfig
) -> bool:
    """True iff any inflated box of one gantry intersects one of the other."""
    state.validate(cfg)
    off = cfg.offset
    tx = model.tx_boxes(state.moving_az + off("moving_az"), state.moving_coel + off("moving_coel"))
    rx = model.rx_boxes(state.static_coel + off("static_coel"))
    return boxsets_collide(tx, rx)


@dataclass(frozen=True)
class AxisGrid:
    min: float
    max: float
    step: float

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ConfigError(f"grid step must be > 0, got {self.step}")
        if self.max < self.min:
            raise ConfigError("grid max < min")

    @property
    def n(self) -> int:
        return int(math.floor((self.max - self.min) / self.step + 1e-9)) + 1

    @property
    def top(self) -> float:
        """Largest grid value (== max only when step divides the range)."""
        return self.min + self.step * (self.n - 1)

    @property
    def values(self) -> np.ndarray:
        return self.min + self.step * np.arange(self.n)

    def index_pair(self, v: float) -> tuple[int, int]:
        """Surrounding grid indices (equal when exactly on grid)."""
        top = self.min + self.step * (self.n - 1)
        if v < self.min - 1e-9 or v > top + 1e-9:
            raise TableRangeError(f"value {v} outside grid [{self.min}, {top}]")
        x = (v - self.min) / self.step
        i0 = int(math.floor(x + 1e-9))
        i0 = min(max(i0, 0), self.n - 1)
        if abs(x - i0) < 1e-9:
            return i0, i0
        return i0, min(i0 + 1, self.n - 1)

    def exact_index(self, v: float) -> int:
        i0, i1 = self.index_pair(v)
        if i0 != i1:
            raise TableRangeError(f"value {v} not on grid (step {self.step})")
        return i0


def default_grids(cfg: FacilityConfig, step: float = 1.0) -> dict[str, AxisGrid]:
    out = {}
    for axis in TABLE_AXES:
        lo, hi = cfg.limit(axis)
        out[axis] = AxisGrid(lo, hi, step)
    return out


@dataclass(frozen=True)
class CollisionTable:
    grids: dict[str, AxisGrid]
    bits: np.ndarray  # bool, shape (n_az, n_mcoel, n_scoel), az outermost
    geometry_hash: bytes
    version: int = TABLE_VERSION

    @property
    def n_cells(self) -> int:
        return int(self.bits.size)

    @property
    def colliding_fraction(self) -> float:
        return float(self.bits.mean())


def _pair_overlap_grid(mov: list[BoxSet], sta: list[BoxSet]) -> np.ndarray:
    """Collision mask (n_mov, n_sta) between per-coel box sets."""
    nm, ns = len(mov), len(sta)
    nb_m, nb_s = len(mov[0]), len(sta[0])
    mc = np.stack([b.centers for b in mov])  # (nm, nb_m, 3)
    mh = np.stack([b.halves for b in mov])
    mr = np.stack([b.rots for b in mov])
    sc = np.stack([b.centers for b in sta])  # (ns, nb_s, 3)
    sh = np.stack([b.halves for b in sta])
    sr = np.stack([b.rots for b in sta])

    hit = np.zeros((nm, ns), dtype=bool)
    for i in range(nb_m):
        rad_m = np.linalg.norm(mh[:, i], axis=-1)  # (nm,)
        for j in range(nb_s):
            rad = rad_m[:, None] + np.linalg.norm(sh[:, j], axis=-1)[None, :]
            d = np.linalg.norm(sc[None, :, j] - mc[:, None, i], axis=-1)
            near = (d <= rad) & ~hit
            if not near.any():
                continue
            im, isx = np.nonzero(near)
            res = _obb_overlap(
                mc[im, i], mh[im, i], mr[im, i], sc[isx, j], sh[isx, j], sr[isx, j]
            )
            hit[im[res], isx[res]] = True
    return hit


def generate_table(
    model: BoundingBoxModel,
    cfg: FacilityConfig,
    grids: Optional[dict[str, AxisGrid]] = None,
    progress=None,
) -> CollisionTable:
    """Dense collision table over the three collision-relevant axes.

    Every cell equals :func:`check_collision` at the cell's nominal
    coordinates (remaining axes are irrelevant to the box model).
    """
    grids = grids or default_grids(cfg)
    for axis in TABLE_AXES:
        if axis not in grids:
            raise ConfigError(f"missing grid for {axis}")
        if grids[axis].n < 1:
            raise ConfigError(f"empty grid for {axis}")

    off = cfg.offset
    az_g, mc_g, sc_g = (grids[a] for a in TABLE_AXES)
    # moving-gantry boxes in a local frame (pedestal azimuth 0); world frame
    # is a z-rotation by the azimuth value, applied to the static set instead.
    mov_local = [
        gantry_boxes(
            model.tx_params, 0.0, v + off("moving_coel"), model.tx_offset_sign,
            model.focal_height, model.clearance,
        )
        for v in mc_g.values
    ]
    sta_world = [model.rx_boxes(v + off("static_coel")) for v in sc_g.values]

    bits = np.zeros((az_g.n, mc_g.n, sc_g.n), dtype=bool)
    for ia, az in enumerate(az_g.values):
        rot = -(az + off("moving_az"))
        sta_rot = [b.rotated_z(rot) for b in sta_world]
        bits[ia] = _pair_overlap_grid(mov_local, sta_rot)
        if progress is not None:
            progress(ia + 1, az_g.n)
    return CollisionTable(grids=dict(grids), bits=bits, geometry_hash=model.geometry_hash())


def query_table(table: CollisionTable, state: MachineState) -> bool:
    """Conservative lookup: colliding if any surrounding grid cell is."""
    pairs = [
        table.grids[a].index_pair(getattr(state, a)) for a in TABLE_AXES
    ]
    for i in set(pairs[0]):
        for j in set(pairs[1]):
            for k in set(pairs[2]):
                if table.bits[i, j, k]:
                    return True
    return False


def query_table_many(table: CollisionTable, values: np.ndarray) -> np.ndarray:
    """Vectorized conservative lookup for (n, 3) axis values."""
    values = np.asarray(values, dtype=float)
    out = np.zeros(values.shape[0], dtype=bool)
    idx = []
    for a, axis in enumerate(TABLE_AXES):
        g = table.grids[axis]
        v = values[:, a]
        top = g.min + g.step * (g.n - 1)
        if ((v < g.min - 1e-9) | (v > top + 1e-9)).any():
            bad = values[(v < g.min - 1e-9) | (v > top + 1e-9), a][0]
            raise TableRangeError(f"{axis} value {bad} outside grid")
        x = (v - g.min) / g.step
        i0 = np.clip(np.floor(x + 1e-9).astype(int), 0, g.n - 1)
        exact = np.abs(x - i0) < 1e-9
        i1 = np.where(exact, i0, np.minimum(i0 + 1, g.n - 1))
        idx.append((i0, i1))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                out |= table.bits[idx[0][i], idx[1][j], idx[2][k]]
    return out


def slice_table(table: CollisionTable, moving_az: float) -> np.ndarray:
    """Mask over (static_coel, moving_coel) at one on-grid azimuth."""
    ia = table.grids["moving_az"].exact_index(moving_az)
    return table.bits[ia].T.copy()


def write_table(table: CollisionTable, path) -> None:
    payload = np.packbits(table.bits.ravel(), bitorder="little").tobytes()
    head = TABLE_MAGIC + struct.pack("<H", table.version)
    for axis in TABLE_AXES:
        g = table.grids[axis]
        head += struct.pack("<ddd", g.min, g.max, g.step)
    head += table.geometry_hash
    body = head + payload
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


class TableFormatError(ValueError):
    pass


def read_table(path) -> CollisionTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 + 2 + 72 + 32 + 4 or blob[:8] != TABLE_MAGIC:
        raise TableFormatError("not a collision table file")
    (crc,) = struct.unpack("<I", blob[-4:])
    if crc != (zlib.crc32(blob[:-4]) & 0xFFFFFFFF):
        raise TableFormatError("checksum mismatch")
    (version,) = struct.unpack("<H", blob[8:10])
    pos = 10
    grids = {}
    for axis in TABLE_AXES:
        mn, mx, st = struct.unpack("<ddd", blob[pos : pos + 24])
        grids[axis] = AxisGrid(mn, mx, st)
        pos += 24
    ghash = blob[pos : pos + 32]
    pos += 32
    shape = tuple(grids[a].n for a in TABLE_AXES)
    n = shape[0] * shape[1] * shape[2]
    packed = np.frombuffer(blob[pos:-4], dtype=np.uint8)
    bits = np.unpackbits(packed, count=n, bitorder="little").astype(bool).reshape(shape)
    return CollisionTable(grids=grids, bits=bits, geometry_hash=ghash, version=version)
