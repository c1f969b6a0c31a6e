import math

import numpy as np
import pytest
from scipy.optimize import linprog

import birange.collision as col
from birange.collision import (
    AxisGrid,
    BoundingBoxModel,
    BoxSet,
    CollisionTable,
    TABLE_AXES,
    TableRangeError,
    boxsets_collide,
    check_collision,
    default_grids,
    generate_table,
    query_table,
    read_table,
    slice_table,
    write_table,
)
from birange.config import ConfigError, FacilityConfig
from birange.geometry import MachineState


def lp_boxes_intersect(cA, hA, RA, cB, hB, RB) -> bool:
    """Feasibility oracle: is there a point inside both boxes?  Twelve
    half-space constraints, solved as a linear program."""
    A, b = [], []
    for c, h, R in ((cA, hA, RA), (cB, hB, RB)):
        for i in range(3):
            axis = R[:, i]
            A.append(axis)
            b.append(h[i] + float(np.dot(axis, c)))
            A.append(-axis)
            b.append(h[i] - float(np.dot(axis, c)))
    res = linprog(
        c=[0.0, 0.0, 0.0], A_ub=np.array(A), b_ub=np.array(b),
        bounds=[(None, None)] * 3, method="highs",
    )
    return res.status == 0


def random_box(rng, scale=2.0):
    c = rng.uniform(-scale, scale, 3)
    h = rng.uniform(0.1, 1.0, 3)
    q = rng.normal(size=(3, 3))
    R, _ = np.linalg.qr(q)
    if np.linalg.det(R) < 0:
        R[:, 0] *= -1
    return c, h, R


class TestSeparatingAxis:
    def test_against_lp_oracle(self, rng):
        agree = 0
        for _ in range(300):
            cA, hA, RA = random_box(rng)
            cB, hB, RB = random_box(rng)
            sat = bool(col._obb_overlap(cA, hA, RA, cB, hB, RB))
            lp = lp_boxes_intersect(cA, hA, RA, cB, hB, RB)
            assert sat == lp
            agree += 1
        assert agree == 300

    def test_symmetry(self, rng):
        for _ in range(100):
            cA, hA, RA = random_box(rng)
            cB, hB, RB = random_box(rng)
            assert bool(col._obb_overlap(cA, hA, RA, cB, hB, RB)) == bool(
                col._obb_overlap(cB, hB, RB, cA, hA, RA)
            )


class TestCheckCollision:
    def test_figure_marked_state_collides(self, cfg, model):
        s = MachineState(moving_az=-70.0, moving_coel=-60.0, static_coel=60.0)
        assert check_collision(s, model, cfg) is True

    def test_maximally_separated_free(self, cfg, model):
        s = MachineState(moving_az=-118.0, moving_coel=-114.0, static_coel=115.0)
        assert check_collision(s, model, cfg) is False

    def test_colocated_probes_collide(self, cfg, model):
        # moving probe azimuth branch aligned with the static probe azimuth
        az = -90.0 * cfg.tx_boom_offset_sign
        s = MachineState(moving_az=az, moving_coel=60.0, static_coel=60.0)
        assert check_collision(s, model, cfg) is True

    def test_against_lp_oracle_full_gantries(self, cfg, model, rng):
        mism = 0
        for _ in range(40):
            s = MachineState(
                moving_az=rng.uniform(-118, 66),
                moving_coel=rng.uniform(-114, 114),
                static_coel=rng.uniform(-115, 115),
            )
            tx = model.tx_boxes(s.moving_az, s.moving_coel)
            sx = model.rx_boxes(s.static_coel)
            lp_hit = any(
                lp_boxes_intersect(
                    tx.centers[i], tx.halves[i], tx.rots[i],
                    sx.centers[j], sx.halves[j], sx.rots[j],
                )
                for i in range(len(tx))
                for j in range(len(sx))
            )
            if lp_hit != check_collision(s, model, cfg):
                mism += 1
        assert mism == 0

    def test_clearance_monotonicity(self, cfg, rng):
        import dataclasses

        cfg_big = dataclasses.replace(cfg, clearance=0.25)
        model_small = BoundingBoxModel.from_config(cfg)
        model_big = BoundingBoxModel.from_config(cfg_big)
        for _ in range(60):
            s = MachineState(
                moving_az=rng.uniform(-118, 66),
                moving_coel=rng.uniform(-114, 114),
                static_coel=rng.uniform(-115, 115),
            )
            if check_collision(s, model_small, cfg):
                assert check_collision(s, model_big, cfg_big)

    def test_roll_and_radial_do_not_matter(self, cfg, model, rng):
        for _ in range(20):
            base = dict(
                moving_az=rng.uniform(-118, 66),
                moving_coel=rng.uniform(-114, 114),
                static_coel=rng.uniform(-115, 115),
            )
            flags = {
                check_collision(
                    MachineState(**base, pol_tx=p, radial_tx=r), model, cfg
                )
                for p, r in ((0, 3.38), (90, 3.50), (188, 3.44))
            }
            assert len(flags) == 1


class TestGrids:
    def test_one_degree_cardinality(self, cfg):
        g = default_grids(cfg, 1.0)
        assert g["moving_az"].n == 185
        assert g["moving_coel"].n == 229
        assert g["static_coel"].n == 231
        assert g["moving_az"].n * g["moving_coel"].n * g["static_coel"].n == 9_786_315

    def test_five_degree_cardinality(self, cfg):
        g = default_grids(cfg, 5.0)
        assert (g["moving_az"].n, g["moving_coel"].n, g["static_coel"].n) == (37, 46, 47)

    def test_bad_grid(self):
        with pytest.raises(ConfigError):
            AxisGrid(0.0, 10.0, -1.0)


class TestTable:
    def test_cells_match_direct_checks(self, cfg, model, coarse_table, rng):
        g = coarse_table.grids
        for _ in range(120):
            i = rng.integers(g["moving_az"].n)
            j = rng.integers(g["moving_coel"].n)
            k = rng.integers(g["static_coel"].n)
            s = MachineState(
                moving_az=g["moving_az"].values[i],
                moving_coel=g["moving_coel"].values[j],
                static_coel=g["static_coel"].values[k],
            )
            assert bool(coarse_table.bits[i, j, k]) == check_collision(s, model, cfg)

    def test_determinism_and_hash(self, cfg, model):
        grids = {a: AxisGrid(cfg.limit(a)[0], cfg.limit(a)[1], 12.0) for a in TABLE_AXES}
        t1 = generate_table(model, cfg, grids)
        t2 = generate_table(model, cfg, grids)
        assert np.array_equal(t1.bits, t2.bits)
        assert t1.geometry_hash == t2.geometry_hash == model.geometry_hash()

    def test_empty_grid_rejected(self, cfg, model):
        with pytest.raises(ConfigError):
            generate_table(model, cfg, {"moving_az": AxisGrid(0, 1, 1)})

    def test_query_exact_hit_and_conservative(self, cfg, model, coarse_table):
        g = coarse_table.grids
        free_idx = np.argwhere(~coarse_table.bits)
        hit_idx = np.argwhere(coarse_table.bits)
        i, j, k = free_idx[0]
        s = MachineState(
            moving_az=g["moving_az"].values[i],
            moving_coel=g["moving_coel"].values[j],
            static_coel=g["static_coel"].values[k],
        )
        assert query_table(coarse_table, s) == bool(coarse_table.bits[i, j, k])
        # midpoint between a free and a colliding neighbor must be colliding
        bits = coarse_table.bits
        for i, j, k in hit_idx:
            if j + 1 < g["moving_coel"].n and not bits[i, j + 1, k]:
                mid = MachineState(
                    moving_az=g["moving_az"].values[i],
                    moving_coel=g["moving_coel"].values[j] + g["moving_coel"].step / 2,
                    static_coel=g["static_coel"].values[k],
                )
                assert query_table(coarse_table, mid) is True
                return
        pytest.fail("no free/colliding neighbor pair found")

    def test_query_never_under_reports(self, cfg, model, coarse_table, rng):
        # wherever the direct check collides on a grid point, the query must
        # agree; off grid the query errs conservative by construction
        g = coarse_table.grids
        for _ in range(200):
            s = MachineState(
                moving_az=rng.uniform(g["moving_az"].min, g["moving_az"].top),
                moving_coel=rng.uniform(g["moving_coel"].min, g["moving_coel"].top),
                static_coel=rng.uniform(g["static_coel"].min, g["static_coel"].top),
            )
            idx = [
                g[a].index_pair(getattr(s, a)) for a in TABLE_AXES
            ]
            cell_truth = any(
                coarse_table.bits[i, j, k]
                for i in set(idx[0])
                for j in set(idx[1])
                for k in set(idx[2])
            )
            assert query_table(coarse_table, s) == cell_truth

    def test_query_out_of_grid(self, coarse_table):
        with pytest.raises(TableRangeError):
            query_table(coarse_table, MachineState(moving_az=-200.0))

    def test_slice_contains_marked_point(self, cfg, model):
        grids = {
            "moving_az": AxisGrid(-70.0, -70.0, 1.0),
            "moving_coel": AxisGrid(-114.0, 114.0, 2.0),
            "static_coel": AxisGrid(-115.0, 115.0, 5.0),
        }
        t = generate_table(model, cfg, grids)
        mask = slice_table(t, -70.0)
        i_s = grids["static_coel"].exact_index(60.0)
        i_m = grids["moving_coel"].exact_index(-60.0)
        assert mask[i_s, i_m]
        assert mask.shape == (grids["static_coel"].n, grids["moving_coel"].n)

    def test_slices_partition_table(self, coarse_table):
        g = coarse_table.grids["moving_az"]
        stack = np.stack(
            [slice_table(coarse_table, v).T for v in g.values]
        )
        assert np.array_equal(stack, coarse_table.bits)

    def test_slice_off_grid(self, coarse_table):
        with pytest.raises(TableRangeError):
            slice_table(coarse_table, -70.5)


class TestTableFile:
    def test_round_trip(self, coarse_table, tmp_path):
        p = tmp_path / "t.coltab"
        write_table(coarse_table, p)
        back = read_table(p)
        assert np.array_equal(back.bits, coarse_table.bits)
        assert back.geometry_hash == coarse_table.geometry_hash
        assert back.grids == coarse_table.grids

    def test_layout_is_documented_byte_format(self, coarse_table, tmp_path):
        p = tmp_path / "t.coltab"
        write_table(coarse_table, p)
        blob = p.read_bytes()
        assert blob[:8] == b"BIRACOLT"
        import struct

        assert struct.unpack("<H", blob[8:10])[0] == coarse_table.version
        mn, mx, st_ = struct.unpack("<ddd", blob[10:34])
        g = coarse_table.grids["moving_az"]
        assert (mn, mx, st_) == (g.min, g.max, g.step)
        n = coarse_table.n_cells
        assert len(blob) == 8 + 2 + 3 * 24 + 32 + (n + 7) // 8 + 4

    def test_checksum_detects_corruption(self, coarse_table, tmp_path):
        p = tmp_path / "t.coltab"
        write_table(coarse_table, p)
        blob = bytearray(p.read_bytes())
        blob[150] ^= 0xFF
        p.write_bytes(bytes(blob))
        with pytest.raises(col.TableFormatError, match="checksum"):
            read_table(p)
