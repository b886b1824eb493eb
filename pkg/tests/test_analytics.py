import pytest

from freeplay.analytics import GameAnalytics
from freeplay.app import declare_topics
from freeplay.bus import Bus
from freeplay.engine import GameEngine, ToolSelect, TouchEvent


def make_live():
    bus = Bus()
    declare_topics(bus)
    # two-band background: grass below y=0.15, water above
    scene = (
        "background 1\n"
        "rect 0.0 0.15 0.60 0.18 0\n"
        "croc object 0.10 0.05 0.03 0.03 1\n"
        "duck object 0.50 0.05 0.03 0.03 1\n"
    )
    engine = GameEngine(bus, scene=scene)
    analytics = GameAnalytics(bus)
    engine.publish_snapshot(0)
    return bus, engine, analytics


def drag(bus, tid, src, points, t0):
    stamps = iter(range(t0, t0 + 10))
    bus.publish("game/touches", TouchEvent(tid, "down", *points[0], src, next(stamps)), t0)
    for p in points[1:]:
        s = next(stamps)
        bus.publish("game/touches", TouchEvent(tid, "move", *p, src, s), s)
    s = next(stamps)
    bus.publish("game/touches", TouchEvent(tid, "up", *points[-1], src, s), s)


class TestLiveAnalytics:
    def test_cross_band_drag_emits_transition(self):
        bus, engine, analytics = make_live()
        transitions = []
        bus.subscribe("analysis/transitions", lambda ev: transitions.append(ev.payload))
        drag(bus, 1, "child_purple", [(0.10, 0.05), (0.10, 0.25)], 10)
        assert len(transitions) == 1
        assert transitions[0].item_id == "croc"

    def test_same_band_drag_quiet(self):
        bus, engine, analytics = make_live()
        transitions = []
        bus.subscribe("analysis/transitions", lambda ev: transitions.append(ev.payload))
        drag(bus, 1, "child_purple", [(0.10, 0.05), (0.20, 0.05)], 10)
        assert transitions == []

    def test_items_moved_close_emits_proximity(self):
        bus, engine, analytics = make_live()
        proximity = []
        bus.subscribe("analysis/proximity", lambda ev: proximity.append(ev.payload))
        drag(bus, 1, "child_purple", [(0.10, 0.05), (0.48, 0.05)], 10)
        assert len(proximity) == 1
        ev = proximity[0]
        assert {ev.item_a, ev.item_b} == {"croc", "duck"}
        assert ev.distance_after < ev.distance_before - 0.05

    def test_stroke_finalize_triggers_zone_republish(self):
        bus, engine, analytics = make_live()
        zone_maps = []
        bus.subscribe("analysis/zones", lambda ev: zone_maps.append(ev.payload))
        before = analytics.zone_map().zone_count
        bus.publish("game/tools", ToolSelect("child_purple", "draw", 5, 9), 9)
        # an isolated red blob in the middle of the grass creates a zone
        drag(bus, 1, "child_purple", [(0.30, 0.05), (0.32, 0.05)], 10)
        assert zone_maps, "no zone map republished after stroke"
        assert analytics.zone_map().zone_count == before + 1

    def test_zone_map_not_recomputed_mid_stroke(self):
        bus, engine, analytics = make_live()
        zone_maps = []
        bus.subscribe("analysis/zones", lambda ev: zone_maps.append(ev.payload))
        bus.publish("game/tools", ToolSelect("child_purple", "draw", 5, 9), 9)
        bus.publish("game/touches", TouchEvent(1, "down", 0.30, 0.05, "child_purple", 10), 10)
        bus.publish("game/touches", TouchEvent(1, "move", 0.31, 0.05, "child_purple", 11), 11)
        assert zone_maps == []  # segmentation waits for finalization
        bus.publish("game/touches", TouchEvent(1, "up", 0.32, 0.05, "child_purple", 12), 12)
        assert len(zone_maps) == 1
