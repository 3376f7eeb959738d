"""Part-to-body pipeline: classify, restore, fuse, NMS, end-to-end runs.

The greedy fusion matcher is checked against an independent exhaustive
oracle: enumerate every one-to-one assignment of above-threshold pairs
and keep the one whose descending-IoU tuple is lexicographically
largest, which is exactly what greedy-by-descending-IoU produces when
IoUs are distinct.
"""

import itertools

import numpy as np
import pytest

from pedfuse.fusion import (
    DEFAULT_RULES,
    Detection,
    FusionConfig,
    HEAD_RULE,
    LEG_RULE,
    NmsConfig,
    RestoreRule,
    RuleMismatchError,
    UnknownClassError,
    classify,
    fuse,
    nms,
    restore,
    run_pipeline,
)
from pedfuse.geometry import BBox, iou
from pedfuse.simulate import derive_head, derive_leg


def det(cls, cx, cy, w, h, conf, image_id="img0"):
    return Detection(image_id=image_id, class_name=cls, box=BBox(cx, cy, w, h), conf=conf)


def body_det(x1, x2, conf, y1=0.0, y2=10.0, cls="person"):
    return Detection(image_id="img0", class_name=cls,
                     box=BBox.from_corners(x1, y1, x2, y2), conf=conf)


def oracle_pairs(heads, legs, tau):
    """All one-to-one assignments of pairs with IoU >= tau, ranked by the
    descending tuple of pair IoUs; returns the winning pair-index set."""
    cand = [
        (iou(h.box, l.box), i, j)
        for i, h in enumerate(heads)
        for j, l in enumerate(legs)
        if iou(h.box, l.box) >= tau
    ]
    best_key, best_set = (), set()
    for r in range(min(len(heads), len(legs)) + 1):
        for combo in itertools.combinations(cand, r):
            used_h = {i for _, i, _ in combo}
            used_l = {j for _, _, j in combo}
            if len(used_h) < len(combo) or len(used_l) < len(combo):
                continue
            key = tuple(sorted((v for v, _, _ in combo), reverse=True))
            if key > best_key:
                best_key, best_set = key, {(i, j) for _, i, j in combo}
    return best_set


class TestClassify:
    def test_partition_by_class(self):
        dets = [det("head", 0, 0, 1, 1, 0.9)] * 3 + [det("leg", 5, 5, 1, 1, 0.8)] * 2
        grouped = classify(dets, DEFAULT_RULES, strict=True)
        assert len(grouped.by_class["head"]) == 3
        assert len(grouped.by_class["leg"]) == 2
        assert grouped.passthrough == []

    def test_empty_input(self):
        grouped = classify([], DEFAULT_RULES, strict=True)
        assert grouped.by_class == {"head": [], "leg": []}

    def test_unknown_class_strict(self):
        with pytest.raises(UnknownClassError):
            classify([det("bicycle", 0, 0, 1, 1, 0.9)], DEFAULT_RULES, strict=True)

    def test_unknown_class_lenient_passthrough(self):
        d = det("bicycle", 0, 0, 1, 1, 0.9)
        grouped = classify([d], DEFAULT_RULES, strict=False)
        assert grouped.passthrough == [d]


class TestRestore:
    def test_head_proportions(self):
        """Head at (100, 50) size 20x10 restores to a 40x50 body at (100, 70)."""
        out = restore(det("head", 100, 50, 20, 10, 0.9), HEAD_RULE)
        assert out.class_name == "person"
        assert out.conf == 0.9
        assert (out.box.cx, out.box.cy, out.box.w, out.box.h) == (100, 70, 40, 50)

    def test_leg_proportions(self):
        out = restore(det("leg", 100, 100, 30, 40, 0.8), LEG_RULE)
        assert out.conf == 0.8
        np.testing.assert_allclose(
            [out.box.cx, out.box.cy, out.box.w, out.box.h], [100, 80, 40, 80], atol=1e-12
        )

    def test_identity_rule(self):
        rule = RestoreRule("thing", dy_factor=0.0)
        out = restore(det("thing", 3, 4, 5, 6, 0.5), rule)
        assert (out.box.cx, out.box.cy, out.box.w, out.box.h) == (3, 4, 5, 6)

    def test_class_mismatch(self):
        with pytest.raises(RuleMismatchError):
            restore(det("leg", 0, 0, 1, 1, 0.9), HEAD_RULE)

    def test_round_trip_inverts_derive(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            body = BBox(
                cx=float(rng.uniform(-500, 500)),
                cy=float(rng.uniform(-500, 500)),
                w=float(rng.uniform(0.5, 200)),
                h=float(rng.uniform(0.5, 400)),
            )
            for derive, rule, cls in ((derive_head, HEAD_RULE, "head"),
                                      (derive_leg, LEG_RULE, "leg")):
                part = derive(body)
                back = restore(det(cls, part.cx, part.cy, part.w, part.h, 0.9), rule).box
                np.testing.assert_allclose(
                    [back.cx, back.cy, back.w, back.h],
                    [body.cx, body.cy, body.w, body.h],
                    atol=1e-9,
                )


class TestFuse:
    def test_single_overlapping_pair_keeps_higher_conf(self):
        h1 = body_det(0, 10, 0.9)
        l1 = body_det(1.5, 11.5, 0.8)  # IoU ~ 0.74
        assert iou(h1.box, l1.box) > 0.5
        assert fuse([h1], [l1]) == [h1]

    def test_empty_heads_pass_legs_through(self):
        l1 = body_det(0, 10, 0.8)
        assert fuse([], [l1]) == [l1]
        assert fuse([l1], []) == [l1]

    def test_two_by_two_greedy_trace(self):
        """H1-L1 (IoU ~.8) outranks H1-L2 (~.6) and H2-L2 (~.55); greedy
        accepts (H1,L1) then (H2,L2); higher-confidence members survive."""
        h1 = body_det(0, 10, 0.9)
        l1 = body_det(10 / 9, 10 + 10 / 9, 0.7)
        l2 = body_det(2.5, 12.5, 0.8)
        h2 = body_det(5.403, 15.403, 0.6)
        assert iou(h1.box, l1.box) == pytest.approx(0.8, abs=1e-3)
        assert iou(h1.box, l2.box) == pytest.approx(0.6, abs=1e-3)
        assert iou(h2.box, l2.box) == pytest.approx(0.55, abs=1e-3)
        assert iou(h2.box, l1.box) < 0.5
        out = fuse([h1, h2], [l1, l2])
        assert out == [h1, l2]
        assert [d.conf for d in out] == [0.9, 0.8]
        assert oracle_pairs([h1, h2], [l1, l2], 0.5) == {(0, 0), (1, 1)}

    def test_greedy_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            nh, nl = int(rng.integers(0, 5)), int(rng.integers(0, 5))
            heads = [det("person", rng.uniform(0, 20), rng.uniform(0, 20),
                         rng.uniform(2, 15), rng.uniform(2, 15), float(rng.uniform(0.3, 1.0)))
                     for _ in range(nh)]
            legs = [det("person", rng.uniform(0, 20), rng.uniform(0, 20),
                        rng.uniform(2, 15), rng.uniform(2, 15), float(rng.uniform(0.3, 1.0)))
                    for _ in range(nl)]
            expected = oracle_pairs(heads, legs, 0.5)
            out = fuse(heads, legs)
            assert len(out) == nh + nl - len(expected)
            # every survivor of a matched pair is the more confident member
            survivors = set(id(d) for d in out)
            for i, j in expected:
                winner = heads[i] if heads[i].conf >= legs[j].conf else legs[j]
                loser = legs[j] if winner is heads[i] else heads[i]
                assert id(winner) in survivors
                assert id(loser) not in survivors

    def test_output_confidences_come_from_inputs(self):
        rng = np.random.default_rng(37)
        heads = [det("person", rng.uniform(0, 10), rng.uniform(0, 10), 5, 5,
                     float(rng.uniform(0.3, 1.0))) for _ in range(4)]
        legs = [det("person", rng.uniform(0, 10), rng.uniform(0, 10), 5, 5,
                    float(rng.uniform(0.3, 1.0))) for _ in range(4)]
        in_confs = {d.conf for d in heads + legs}
        assert all(d.conf in in_confs for d in fuse(heads, legs))

    def test_scale_invariance(self):
        rng = np.random.default_rng(41)
        heads = [det("person", 5, 5, 6, 6, 0.9), det("person", 30, 5, 6, 6, 0.6)]
        legs = [det("person", 6, 5.5, 6, 6, 0.7), det("person", 30.5, 5, 6, 6, 0.8)]
        base = fuse(heads, legs)
        for _ in range(20):
            s = float(rng.uniform(0.01, 50))
            scale = lambda d: Detection(d.image_id, d.class_name,
                                        BBox(s * d.box.cx, s * d.box.cy, s * d.box.w, s * d.box.h),
                                        d.conf)
            out = fuse([scale(d) for d in heads], [scale(d) for d in legs])
            assert [(d.conf, d.class_name) for d in out] == [(d.conf, d.class_name) for d in base]
            for got, want in zip(out, base):
                np.testing.assert_allclose(
                    [got.box.cx, got.box.cy, got.box.w, got.box.h],
                    [s * want.box.cx, s * want.box.cy, s * want.box.w, s * want.box.h],
                    rtol=1e-9,
                )

    def test_tie_breaks(self):
        h = body_det(0, 10, 0.8)
        l = body_det(1, 11, 0.8)
        assert fuse([h], [l], FusionConfig(tie_break="prefer-head")) == [h]
        assert fuse([h], [l], FusionConfig(tie_break="prefer-leg")) == [l]
        # equal confidence falls back to coordinate order: h sorts first
        assert fuse([h], [l], FusionConfig(tie_break="prefer-higher-conf")) == [h]


class TestNms:
    def test_identical_boxes_suppressed(self):
        a = body_det(0, 10, 0.9)
        b = body_det(0, 10, 0.8)
        assert nms([a, b], NmsConfig(iou_thr=0.5)) == [a]

    def test_disjoint_boxes_kept(self):
        a = body_det(0, 10, 0.9)
        b = body_det(50, 60, 0.8)
        assert nms([a, b]) == [a, b]

    def test_chain_suppression(self):
        """A suppresses B (IoU .6); C survives because IoU(A,C) is low."""
        a = body_det(0, 10, 0.9)
        b = body_det(2.5, 12.5, 0.8)
        c = body_det(5, 15, 0.7)
        assert iou(a.box, b.box) == pytest.approx(0.6)
        assert iou(b.box, c.box) == pytest.approx(0.6)
        assert iou(a.box, c.box) < 0.5
        assert nms([a, b, c], NmsConfig(iou_thr=0.5)) == [a, c]

    def test_confidence_floor(self):
        a = body_det(0, 10, 0.2)
        assert nms([a], NmsConfig(conf_thr=0.25)) == []

    def test_classes_do_not_suppress_each_other(self):
        a = body_det(0, 10, 0.9, cls="head")
        b = body_det(0, 10, 0.8, cls="leg")
        assert nms([a, b], NmsConfig(iou_thr=0.5)) == [a, b]


class TestRunPipeline:
    def test_head_and_leg_of_one_body_fuse_to_that_body(self):
        body = BBox(100, 120, 40, 100)
        hp, lp = derive_head(body), derive_leg(body)
        dets = [det("head", hp.cx, hp.cy, hp.w, hp.h, 0.9),
                det("leg", lp.cx, lp.cy, lp.w, lp.h, 0.8)]
        out = run_pipeline(dets)
        assert len(out) == 1
        assert out[0].class_name == "person"
        assert out[0].conf == 0.9
        np.testing.assert_allclose(
            [out[0].box.cx, out[0].box.cy, out[0].box.w, out[0].box.h],
            [body.cx, body.cy, body.w, body.h], atol=1e-9)

    def test_head_only_restores_alone(self):
        body = BBox(100, 120, 40, 100)
        hp = derive_head(body)
        out = run_pipeline([det("head", hp.cx, hp.cy, hp.w, hp.h, 0.9)])
        assert len(out) == 1
        np.testing.assert_allclose(out[0].box.h, body.h, atol=1e-9)

    def test_empty_input(self):
        assert run_pipeline([]) == []

    def test_images_processed_independently(self):
        body = BBox(100, 120, 40, 100)
        hp, lp = derive_head(body), derive_leg(body)
        dets = [det("head", hp.cx, hp.cy, hp.w, hp.h, 0.9, image_id="a"),
                det("leg", lp.cx, lp.cy, lp.w, lp.h, 0.8, image_id="b")]
        out = run_pipeline(dets)
        # same spot, different images: no fusion across images
        assert len(out) == 2
        assert [d.image_id for d in out] == ["a", "b"]

    def test_lenient_passthrough_survives(self):
        body = BBox(100, 120, 40, 100)
        hp = derive_head(body)
        dets = [det("head", hp.cx, hp.cy, hp.w, hp.h, 0.9),
                det("bicycle", 300, 300, 30, 30, 0.7)]
        out = run_pipeline(dets, cfg=FusionConfig(strict_classes=False))
        assert {d.class_name for d in out} == {"person", "bicycle"}

    def test_requires_exactly_two_rules(self):
        with pytest.raises(ValueError):
            run_pipeline([], rules=(HEAD_RULE,))
