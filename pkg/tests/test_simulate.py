"""Synthetic occlusion scenes: geometry, visibility, determinism, emission.

The visibility function is checked against hand areas and against a
Monte-Carlo estimate; emission behavior is pinned down in the targeted
lower-body occluder regime where heads stay visible and legs vanish.
"""

from dataclasses import replace

import numpy as np
import pytest

from pedfuse.fusion import HEAD_RULE, LEG_RULE, restore, Detection
from pedfuse.geometry import BBox
from pedfuse.simulate import (
    Occluder,
    PlacementError,
    SceneConfig,
    derive_head,
    derive_leg,
    generate,
    generate_scenes,
    visibility,
)


class TestDerivedParts:
    def test_head_fixture(self):
        head = derive_head(BBox(100, 120, 40, 100))
        assert (head.cx, head.cy, head.w, head.h) == (100, 80, 20, 20)

    def test_leg_fixture(self):
        leg = derive_leg(BBox(100, 120, 40, 100))
        assert (leg.cx, leg.cy, leg.w, leg.h) == (100, 145, 30, 50)

    def test_parts_sit_inside_the_body(self):
        rng = np.random.default_rng(433)
        for _ in range(200):
            body = BBox(rng.uniform(-10, 10), rng.uniform(-10, 10),
                        rng.uniform(1, 50), rng.uniform(1, 120))
            for part in (derive_head(body), derive_leg(body)):
                assert part.x1 >= body.x1 - 1e-12 and part.x2 <= body.x2 + 1e-12
                assert part.y1 >= body.y1 - 1e-12 and part.y2 <= body.y2 + 1e-12

    def test_restore_inverts_derivation(self):
        rng = np.random.default_rng(439)
        for _ in range(500):
            body = BBox(rng.uniform(-100, 100), rng.uniform(-100, 100),
                        rng.uniform(0.5, 80), rng.uniform(0.5, 200))
            for derive, rule, cls in ((derive_head, HEAD_RULE, "head"),
                                      (derive_leg, LEG_RULE, "leg")):
                part = derive(body)
                got = restore(Detection("i", cls, part, 0.9), rule).box
                np.testing.assert_allclose(
                    [got.cx, got.cy, got.w, got.h],
                    [body.cx, body.cy, body.w, body.h], atol=1e-9)


class TestVisibility:
    def test_unoccluded_is_one(self):
        assert visibility(BBox(5, 5, 10, 10), []) == 1.0

    def test_fully_covered_is_zero(self):
        part = BBox(5, 5, 10, 10)
        assert visibility(part, [BBox(5, 5, 20, 20)]) == 0.0

    def test_bottom_seventy_percent_cover(self):
        """A 10x10 part with its bottom 7 units covered reads exactly 0.3."""
        part = BBox.from_corners(0, 0, 10, 10)
        occ = BBox.from_corners(-2, 3, 12, 15)
        assert visibility(part, [occ]) == 0.3

    def test_overlapping_occluders_not_double_counted(self):
        part = BBox.from_corners(0, 0, 10, 10)
        bottom_half = BBox.from_corners(0, 5, 10, 10)
        assert visibility(part, [bottom_half, bottom_half]) == 0.5
        assert visibility(part, [bottom_half, BBox.from_corners(2, 6, 8, 9)]) == 0.5

    def test_disjoint_occluders_sum(self):
        part = BBox.from_corners(0, 0, 10, 10)
        left = BBox.from_corners(0, 0, 2, 10)
        right = BBox.from_corners(7, 0, 10, 10)
        assert visibility(part, [left, right]) == 0.5

    def test_accepts_occluder_objects(self):
        part = BBox.from_corners(0, 0, 10, 10)
        occ = Occluder(BBox.from_corners(0, 5, 10, 10))
        assert visibility(part, [occ]) == 0.5

    def test_monotone_under_added_occluders(self):
        rng = np.random.default_rng(443)
        part = BBox(0, 0, 10, 10)
        for _ in range(100):
            occs = [BBox(rng.uniform(-6, 6), rng.uniform(-6, 6),
                         rng.uniform(1, 8), rng.uniform(1, 8))
                    for _ in range(int(rng.integers(1, 6)))]
            prev = 1.0
            for upto in range(len(occs) + 1):
                v = visibility(part, occs[:upto])
                assert v <= prev + 1e-12
                prev = v

    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(449)
        part = BBox(0, 0, 10, 10)
        occs = [BBox(rng.uniform(-4, 4), rng.uniform(-4, 4),
                     rng.uniform(2, 7), rng.uniform(2, 7)) for _ in range(4)]
        exact = visibility(part, occs)
        pts = rng.uniform(-5, 5, size=(200_000, 2))
        covered = np.zeros(len(pts), dtype=bool)
        for o in occs:
            covered |= ((pts[:, 0] >= o.x1) & (pts[:, 0] <= o.x2)
                        & (pts[:, 1] >= o.y1) & (pts[:, 1] <= o.y2))
        estimate = 1.0 - covered.mean()
        assert exact == pytest.approx(estimate, abs=5e-3)


class TestSceneGeneration:
    def test_same_seed_is_bit_identical(self):
        cfg = SceneConfig(n_pedestrians=6, occlusion_rate=0.5, seed=7)
        a, b = generate(cfg), generate(cfg)
        assert a.pedestrians == b.pedestrians
        assert a.occluders == b.occluders
        assert a.part_dets == b.part_dets
        assert a.body_dets == b.body_dets

    def test_different_seeds_differ(self):
        cfg = SceneConfig(n_pedestrians=6, seed=7)
        assert generate(cfg).pedestrians != generate(replace(cfg, seed=8)).pedestrians

    def test_bodies_inside_the_image(self):
        scene = generate(SceneConfig(n_pedestrians=20, seed=11))
        for p in scene.pedestrians:
            assert 0 <= p.body.x1 and p.body.x2 <= 640
            assert 0 <= p.body.y1 and p.body.y2 <= 640

    def test_body_aspect_is_exact(self):
        scene = generate(SceneConfig(n_pedestrians=10, seed=13, body_aspect=0.41))
        for p in scene.pedestrians:
            assert p.body.w == pytest.approx(0.41 * p.body.h, rel=1e-12)

    def test_ground_truth_layout(self):
        scene = generate(SceneConfig(n_pedestrians=5, seed=17))
        assert len(scene.body_gts) == 5
        assert len(scene.part_gts) == 10
        assert {g.class_name for g in scene.body_gts} == {"person"}
        assert sorted({g.class_name for g in scene.part_gts}) == ["head", "leg"]
        for ped, head_gt, leg_gt in zip(scene.pedestrians, scene.part_gts[0::2],
                                        scene.part_gts[1::2]):
            assert head_gt.box == derive_head(ped.body)
            assert leg_gt.box == derive_leg(ped.body)

    def test_zero_pedestrians(self):
        scene = generate(SceneConfig(n_pedestrians=0, seed=19))
        assert scene.pedestrians == [] and scene.part_dets == []

    def test_noise_free_unoccluded_dets_are_exact(self):
        cfg = SceneConfig(n_pedestrians=4, occlusion_rate=0.0, noise_eta=0.0,
                          conf_base=0.9, seed=23)
        scene = generate(cfg)
        assert len(scene.part_dets) == 8
        assert len(scene.body_dets) == 4
        for d in scene.part_dets + scene.body_dets:
            assert d.conf == 0.9
        for ped, body_det in zip(scene.pedestrians, scene.body_dets):
            assert body_det.box == ped.body
        for ped, head_det, leg_det in zip(scene.pedestrians, scene.part_dets[0::2],
                                          scene.part_dets[1::2]):
            assert head_det.box == derive_head(ped.body)
            assert leg_det.box == derive_leg(ped.body)

    def test_occluder_count_follows_rate(self):
        for rate, want in [(0.0, 0), (0.25, 2), (0.5, 4), (1.0, 8)]:
            scene = generate(SceneConfig(n_pedestrians=8, occlusion_rate=rate, seed=29))
            assert len(scene.occluders) == want

    def test_targeted_occlusion_drops_legs_keeps_heads(self):
        """With every pedestrian occluded over >=55% of its height, every leg
        and body falls below the 0.5 visibility threshold while every head
        stays fully visible."""
        cfg = SceneConfig(n_pedestrians=6, occlusion_rate=1.0, seed=31,
                          occluder_cover=(0.55, 0.65), noise_eta=0.0)
        scene = generate(cfg)
        assert [d.class_name for d in scene.part_dets] == ["head"] * 6
        assert scene.body_dets == []
        occ = [o.box for o in scene.occluders]
        for p in scene.pedestrians:
            assert visibility(derive_head(p.body), occ) == 1.0
            assert visibility(derive_leg(p.body), occ) < 0.5

    def test_occlusion_penalty_lowers_confidence(self):
        cfg = SceneConfig(n_pedestrians=6, occlusion_rate=1.0, seed=37,
                          occluder_cover=(0.3, 0.4), visibility_threshold=0.1,
                          noise_eta=0.0, conf_base=0.9, occlusion_penalty=0.25)
        scene = generate(cfg)
        occ = [o.box for o in scene.occluders]
        for d in scene.body_dets:
            ped = next(p for p in scene.pedestrians
                       if abs(p.body.cx - d.box.cx) < 1e-9)
            vis = visibility(ped.body, occ)
            assert d.conf == pytest.approx(0.9 - 0.25 * (1.0 - vis), rel=1e-12)

    def test_scattered_mode_places_requested_count(self):
        cfg = SceneConfig(n_pedestrians=8, occlusion_rate=0.5, seed=41,
                          lower_body_bias=False)
        scene = generate(cfg)
        assert len(scene.occluders) == 4

    def test_oversized_pedestrian_reports_index(self):
        cfg = SceneConfig(img_w=100, img_h=100, n_pedestrians=2,
                          height_range=(200.0, 300.0), seed=43)
        with pytest.raises(PlacementError, match="pedestrian 0"):
            generate(cfg)

    def test_exhausted_retries_report_index(self):
        # two same-size pedestrians cannot be disjoint in a barely-larger scene
        cfg = SceneConfig(img_w=70, img_h=130, n_pedestrians=2,
                          height_range=(120.0, 128.0), max_body_iou=0.0,
                          max_place_tries=25, seed=47)
        with pytest.raises(PlacementError, match="pedestrian 1"):
            generate(cfg)

    def test_max_body_iou_keeps_bodies_separated(self):
        cfg = SceneConfig(n_pedestrians=12, max_body_iou=0.1, seed=53)
        scene = generate(cfg)
        from pedfuse.geometry import iou
        bodies = [p.body for p in scene.pedestrians]
        for i in range(len(bodies)):
            for j in range(i + 1, len(bodies)):
                assert iou(bodies[i], bodies[j]) <= 0.1


class TestMultiScene:
    def test_ids_and_count(self):
        scenes = generate_scenes(SceneConfig(n_pedestrians=3, seed=59), 3)
        assert [s.image_id for s in scenes] == ["scene0000", "scene0001", "scene0002"]

    def test_batch_is_deterministic(self):
        cfg = SceneConfig(n_pedestrians=4, occlusion_rate=0.5, seed=61)
        a = generate_scenes(cfg, 4)
        b = generate_scenes(cfg, 4)
        for sa, sb in zip(a, b):
            assert sa.part_dets == sb.part_dets

    def test_scenes_are_distinct(self):
        scenes = generate_scenes(SceneConfig(n_pedestrians=4, seed=67), 3)
        layouts = {tuple((p.body.cx, p.body.cy) for p in s.pedestrians)
                   for s in scenes}
        assert len(layouts) == 3

    def test_gts_carry_scene_ids(self):
        scenes = generate_scenes(SceneConfig(n_pedestrians=2, seed=71), 2)
        for s in scenes:
            assert all(g.image_id == s.image_id for g in s.body_gts + s.part_gts)
            assert all(d.image_id == s.image_id for d in s.part_dets + s.body_dets)

    def test_zero_scenes(self):
        assert generate_scenes(SceneConfig(seed=73), 0) == []

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            generate_scenes(SceneConfig(seed=79), -1)


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"img_w": 0},
        {"n_pedestrians": -1},
        {"height_range": (0.0, 100.0)},
        {"height_range": (100.0, 50.0)},
        {"body_aspect": 0.0},
        {"occlusion_rate": 1.5},
        {"occlusion_rate": -0.1},
        {"visibility_threshold": 0.0},
        {"visibility_threshold": 1.1},
        {"noise_eta": -0.01},
        {"conf_base": 0.0},
        {"occluder_cover": (0.7, 0.4)},
        {"occluder_cover": (-0.1, 0.5)},
        {"occlusion_penalty": -1.0},
        {"max_body_iou": 1.5},
        {"max_place_tries": 0},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            SceneConfig(**kwargs)
