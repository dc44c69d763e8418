#!/usr/bin/env python3
"""Regenerates the bundled scenario fixtures in crates/core/fixtures.

Every scene is synthetic: lanes are analytic curves sampled at 1 m, and each
track follows a chain of lanes with a piecewise-constant acceleration
profile. Time zero is the planning start (the last observed step).
"""

import json
import math
from pathlib import Path

DT = 0.1
OBS = 50
FUTURE = 350
OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"


def straight(a, b, step=1.0):
    n = max(1, math.ceil(math.dist(a, b) / step))
    return [[a[0] + (b[0] - a[0]) * i / n, a[1] + (b[1] - a[1]) * i / n] for i in range(n + 1)]


def lane_shift(x0, x1, y0, y1, step=1.0):
    """Cosine-shaped lateral move from y0 to y1 between x0 and x1."""
    n = max(2, math.ceil((x1 - x0) / step))
    pts = []
    for i in range(n + 1):
        u = i / n
        pts.append([x0 + (x1 - x0) * u, y0 + (y1 - y0) * 0.5 * (1 - math.cos(math.pi * u))])
    return pts


def arc(center, radius, a0, a1, step=1.0):
    n = max(2, math.ceil(abs(a1 - a0) * radius / step))
    return [
        [center[0] + radius * math.cos(a0 + (a1 - a0) * i / n), center[1] + radius * math.sin(a0 + (a1 - a0) * i / n)]
        for i in range(n + 1)
    ]


def lane(lid, pts, succ=(), limit=15.0):
    return {"id": lid, "points": [[round(x, 4), round(y, 4)] for x, y in pts], "successors": list(succ), "speed_limit": limit}


class Path_:
    def __init__(self, pts):
        self.pts = []
        for p in pts:
            if not self.pts or math.dist(self.pts[-1], p) > 1e-6:
                self.pts.append(p)
        self.cum = [0.0]
        for a, b in zip(self.pts, self.pts[1:]):
            self.cum.append(self.cum[-1] + math.dist(a, b))

    def length(self):
        return self.cum[-1]

    def at(self, s):
        """Position and unit tangent at arc length s (straight beyond the ends)."""
        if s <= 0:
            i = 0
        elif s >= self.cum[-1]:
            i = len(self.pts) - 2
        else:
            lo, hi = 0, len(self.cum) - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if self.cum[mid] <= s:
                    lo = mid
                else:
                    hi = mid
            i = lo
        a, b = self.pts[i], self.pts[i + 1]
        seg = self.cum[i + 1] - self.cum[i]
        u = (s - self.cum[i]) / seg
        t = [(b[0] - a[0]) / seg, (b[1] - a[1]) / seg]
        return [a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u], t

    def project_x(self, x):
        """Arc length of the first point with the given x (monotone-x paths)."""
        for i, (a, b) in enumerate(zip(self.pts, self.pts[1:])):
            if (a[0] - x) * (b[0] - x) <= 0 and a[0] != b[0]:
                u = (x - a[0]) / (b[0] - a[0])
                return self.cum[i] + u * (self.cum[i + 1] - self.cum[i])
        raise ValueError(f"x={x} not on path")


def chain(lanes, ids):
    by_id = {l["id"]: l for l in lanes}
    pts = []
    for lid in ids:
        pts.extend(by_id[lid]["points"])
    return Path_(pts)


def track(tid, path, s0, v0, profile=(), is_ego=False, vmin=0.0, vmax=20.0, footprint=(4.8, 2.0)):
    """profile: list of (t_start, accel) pairs; the last one active applies."""
    states = []
    s, v = s0 - v0 * (OBS - 1) * DT, v0
    for k in range(OBS + FUTURE):
        t = (k - (OBS - 1)) * DT
        if k > 0:
            tp = t - DT
            acc = 0.0
            if tp >= 0:
                for ts, a in profile:
                    if tp >= ts - 1e-9:
                        acc = a
            v_next = min(vmax, max(vmin, v + acc * DT))
            s += 0.5 * (v + v_next) * DT
            v = v_next
        p, tan = path.at(s)
        heading = math.atan2(tan[1], tan[0])
        states.append([round(p[0], 4), round(p[1], 4), round(v * tan[0], 4), round(v * tan[1], 4), round(heading, 6)])
    return {"id": tid, "is_ego": is_ego, "footprint": list(footprint), "states": states}


def write(name, lanes, tracks, route, goal):
    doc = {
        "schema": 1,
        "name": name,
        "lanes": lanes,
        "tracks": tracks,
        "ego_route": route,
        "goal": {"x": goal[0], "y": goal[1], "radius": 2.0},
    }
    (OUT / f"{name}.json").write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def straight_two_agents():
    lanes = [lane("main", straight((-100, 0), (300, 0), 400))]
    p = chain(lanes, ["main"])
    tracks = [
        track("ego", p, 100, 10.0, [(0, 1.0), (4, 0.0)], is_ego=True),
        track("lead", p, 140, 14.0),
    ]
    write("straight_two_agents", lanes, tracks, ["main"], (250, 0))


def empty_straight():
    lanes = [lane("main", straight((-100, 0), (300, 0), 400))]
    p = chain(lanes, ["main"])
    tracks = [track("ego", p, 100, 10.0, [(0, 1.0), (4, 0.0)], is_ego=True)]
    write("empty_straight", lanes, tracks, ["main"], (100, 0))


def wall():
    lanes = [lane("main", straight((-100, 0), (300, 0), 400))]
    p = chain(lanes, ["main"])
    tracks = [track("ego", p, 100, 10.0, [(0, -1.0)], is_ego=True, vmin=0.0)]
    for i, y in enumerate((-2.2, 0.0, 2.2)):
        q = Path_([[-100, y], [300, y]])
        tracks.append(track(f"block{i}", q, 160, 0.0))
    write("wall", lanes, tracks, ["main"], (150, 0))


def scene1_left_turn():
    # Four-way junction at the origin; ego drives east, an oncoming car turns
    # left across the ego lane, a second oncoming car goes straight.
    r = 13.75
    lanes = [
        lane("e_in", straight((-150, -1.75), (-12, -1.75), 1), ["e_thru"]),
        lane("e_thru", straight((-12, -1.75), (12, -1.75), 1), ["e_out"]),
        lane("e_out", straight((12, -1.75), (160, -1.75), 1)),
        lane("w_in", straight((150, 1.75), (12, 1.75), 1), ["w_left", "w_thru"]),
        lane("w_left", arc((12, 1.75 - r), r, math.pi / 2, math.pi, 0.5), ["s_out"]),
        lane("w_thru", straight((12, 1.75), (-12, 1.75), 1), ["w_out"]),
        lane("w_out", straight((-12, 1.75), (-160, 1.75), 1)),
        lane("s_out", straight((-1.75, -12), (-1.75, -160), 1)),
    ]
    ego_path = chain(lanes, ["e_in", "e_thru", "e_out"])
    turn_path = chain(lanes, ["w_in", "w_left", "s_out"])
    thru_path = chain(lanes, ["w_in", "w_thru", "w_out"])
    tracks = [
        track("ego", ego_path, ego_path.project_x(-60), 11.0, [(0, -1.2), (4, 0.0), (6, 1.2), (9, 0.0)], is_ego=True),
        track("turner", turn_path, 150 - 35, 7.0, [(6, 1.5), (8, 0.0)]),
        track("oncoming", thru_path, 150 - 130, 10.0),
    ]
    write("scene1_left_turn", lanes, tracks, ["e_in", "e_thru", "e_out"], (100, -1.75))


def scene2_lane_change():
    # Two eastbound lanes. The route leaves the right lane through a
    # connector; a slow car blocks the right lane and a fast car closes in
    # from behind on the left.
    lanes = [
        lane("r0", straight((-150, 0), (60, 0), 1), ["lc", "r1"]),
        lane("lc", lane_shift(60, 100, 0, 3.5)),
        lane("r1", straight((60, 0), (350, 0), 1)),
        lane("l0", straight((-150, 3.5), (100, 3.5), 1), ["l1"]),
        lane("l1", straight((100, 3.5), (350, 3.5), 1)),
    ]
    lanes[1]["successors"] = ["l1"]
    ego_path = chain(lanes, ["r0", "lc", "l1"])
    right = chain(lanes, ["r0", "r1"])
    left = chain(lanes, ["l0", "l1"])
    tracks = [
        track("ego", ego_path, ego_path.project_x(-20), 10.0, [(0, -1.0), (4, 0.0), (11, 1.5), (16, 0.0)], is_ego=True),
        track("slow", right, right.project_x(5), 6.0),
        track("fast", left, left.project_x(-80), 13.0),
    ]
    write("scene2_lane_change", lanes, tracks, ["r0", "lc", "l1"], (230, 3.5))


def scene3_merge():
    # A side road joins the main road from the right; a car on it merges in
    # front of the ego around x = 100.
    ramp = []
    for i in range(161):
        x = -60 + i
        u = min(1.0, max(0.0, x / 100))
        ramp.append([x, -30 * (1 - u * u * (3 - 2 * u))])
    lanes = [
        lane("m1", straight((-150, 0), (100, 0), 1), ["m2"]),
        lane("m2", straight((100, 0), (380, 0), 1)),
        lane("ramp", ramp, ["m2"]),
    ]
    ego_path = chain(lanes, ["m1", "m2"])
    ramp_path = chain(lanes, ["ramp", "m2"])
    tracks = [
        track("ego", ego_path, ego_path.project_x(-40), 12.0, [(0, -0.8), (5, 0.0), (9, 1.0), (12, 0.0)], is_ego=True),
        track("merger", ramp_path, ramp_path.project_x(-20), 11.0),
        track("lead", ego_path, ego_path.project_x(30), 13.0),
    ]
    write("scene3_merge", lanes, tracks, ["m1", "m2"], (260, 0))


def scene4_stopped_car():
    # The car ahead in the right lane brakes to a stop; the route moves to the
    # left lane while a fast car approaches there from behind.
    lanes = [
        lane("r0", straight((-150, 0), (70, 0), 1), ["lc", "r1"]),
        lane("lc", lane_shift(70, 110, 0, 3.5), ["l1"]),
        lane("r1", straight((70, 0), (350, 0), 1)),
        lane("l0", straight((-200, 3.5), (110, 3.5), 1), ["l1"]),
        lane("l1", straight((110, 3.5), (350, 3.5), 1)),
    ]
    ego_path = chain(lanes, ["r0", "lc", "l1"])
    right = chain(lanes, ["r0", "r1"])
    left = chain(lanes, ["l0", "l1"])
    tracks = [
        track("ego", ego_path, ego_path.project_x(-10), 10.0, [(0, -0.8), (5, 0.0), (11, 1.0), (15, 0.0)], is_ego=True),
        track("stopping", right, right.project_x(70), 9.0, [(2, -0.9)], vmin=0.0),
        track("fast", left, left.project_x(-60), 14.0),
    ]
    write("scene4_stopped_car", lanes, tracks, ["r0", "lc", "l1"], (250, 3.5))


def cut_in():
    # The route cuts from the left lane into the right lane just ahead of a
    # car driving there.
    lanes = [
        lane("l0", straight((-150, 3.5), (40, 3.5), 1), ["lc", "l1"]),
        lane("lc", lane_shift(40, 60, 3.5, 0), ["r1"]),
        lane("l1", straight((40, 3.5), (350, 3.5), 1)),
        lane("r0", straight((-150, 0), (60, 0), 1), ["r1"]),
        lane("r1", straight((60, 0), (350, 0), 1)),
    ]
    ego_path = chain(lanes, ["l0", "lc", "r1"])
    right = chain(lanes, ["r0", "r1"])
    tracks = [
        track("ego", ego_path, ego_path.project_x(38), 12.0, is_ego=True),
        track("follower", right, right.project_x(30), 12.0),
    ]
    write("cut_in", lanes, tracks, ["l0", "lc", "r1"], (200, 0))


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    straight_two_agents()
    empty_straight()
    wall()
    scene1_left_turn()
    scene2_lane_change()
    scene3_merge()
    scene4_stopped_car()
    cut_in()
