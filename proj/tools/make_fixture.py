#!/usr/bin/env python3
"""Generates fixtures/ceg_fixture.json, the reconstructed CEG faculty building.

Layout (centimetres, z-up):
  * experiment floors 2-4 at z = (k-1)*400, exit floor 1 at z = 0
  * main corridors centred on y = 0 (odd rooms) and y = 1000 (even rooms), 240 wide
  * eight cross corridors between them, two of them 400 wide
  * staircases A-E; each is a stack of straight flights alternating between
    x_s - 80 and x_s + 80 so that the up and down mouths on a floor never overlap
  * elevator shafts notch 60 cm into a main corridor
"""
import json
import pathlib

L = 15000.0
X_MIN, X_MAX = -200.0, L + 200.0
HALF_W = 120.0
SOUTH_Y, NORTH_Y = 0.0, 1000.0
STORY = 400.0
STAIR_X = {"A": 0.05 * L, "B": 0.275 * L, "C": 0.5 * L, "D": 0.725 * L, "E": 0.95 * L}
NARROW = [200.0, 2400.0, 6200.0, 8800.0, 12600.0, 14800.0]
WIDE = [0.3 * L, 0.7 * L]
FLIGHT_W = 150.0
LANDING = 10.0
S_EDGE = SOUTH_Y + HALF_W  # 120
N_EDGE = NORTH_Y - HALF_W  # 880


def z_of(floor):
    return (floor - 1) * STORY


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def elevator_x(label):
    xs = STAIR_X[label]
    # B and D would cut into the wide intersections on their east side.
    if label == "B":
        return xs - 400.0, xs - 200.0
    return xs + 200.0, xs + 400.0


def flight(label, lower, upper):
    """One straight flight between `lower` and `upper` (adjacent floors)."""
    xs = STAIR_X[label]
    x = xs - 80.0 if upper % 2 == 0 else xs + 80.0
    # Upper mouth on the south corridor for even upper floors, north otherwise.
    if upper % 2 == 0:
        up_mouth, up_land = S_EDGE, S_EDGE - LANDING
        lo_mouth, lo_land = N_EDGE, N_EDGE + LANDING
    else:
        up_mouth, up_land = N_EDGE, N_EDGE + LANDING
        lo_mouth, lo_land = S_EDGE, S_EDGE - LANDING
    zl, zu = z_of(lower), z_of(upper)
    return {
        "lower_floor": lower,
        "upper_floor": upper,
        "width_cm": FLIGHT_W,
        "ramp": [[x, lo_land, zl], [x, lo_mouth, zl], [x, up_mouth, zu], [x, up_land, zu]],
    }


def floor_doc(fid):
    walkable = []
    obstacles = []
    rooms = []
    signs = []
    if fid == 1:
        walkable.append({"id": "main_north", "kind": "main_corridor",
                         "polygon": rect(X_MIN, N_EDGE, X_MAX, NORTH_Y + HALF_W)})
        for lab in STAIR_X:
            ex0, ex1 = elevator_x(lab)
            obstacles.append({"id": f"elevator_{lab}", "kind": "elevator",
                              "polygon": rect(ex0, N_EDGE, ex1, 940.0)})
            signs.append({"kind": "exit_sign", "position": [STAIR_X[lab], NORTH_Y + HALF_W],
                          "normal": [0.0, -1.0], "target": f"Exit {lab}", "width_cm": 120.0})
        return {"id": 1, "z_cm": z_of(1), "walkable": walkable, "obstacles": obstacles,
                "rooms": rooms, "signs": signs,
                "expected": {"main_corridors": 1, "cross_corridors": 0}}

    walkable.append({"id": "main_south", "kind": "main_corridor",
                     "polygon": rect(X_MIN, SOUTH_Y - HALF_W, X_MAX, S_EDGE)})
    walkable.append({"id": "main_north", "kind": "main_corridor",
                     "polygon": rect(X_MIN, N_EDGE, X_MAX, NORTH_Y + HALF_W)})
    for i, cx in enumerate(NARROW):
        walkable.append({"id": f"cross_{i}", "kind": "cross_corridor",
                         "polygon": rect(cx - 75.0, S_EDGE, cx + 75.0, N_EDGE)})
    for i, cx in enumerate(WIDE):
        walkable.append({"id": f"wide_{i}", "kind": "wide_intersection",
                         "polygon": rect(cx - 200.0, S_EDGE, cx + 200.0, N_EDGE)})
    if fid == 2:
        walkable.append({"id": "central_hall", "kind": "hall",
                         "polygon": rect(12200.0, S_EDGE, 13400.0, N_EDGE)})
        obstacles.append({"id": "hall_pillar_w", "kind": "pillar",
                          "polygon": rect(12470.0, 620.0, 12530.0, 680.0)})
        obstacles.append({"id": "hall_pillar_e", "kind": "pillar",
                          "polygon": rect(13070.0, 620.0, 13130.0, 680.0)})
    for lab in STAIR_X:
        ex0, ex1 = elevator_x(lab)
        obstacles.append({"id": f"elevator_{lab}", "kind": "elevator",
                          "polygon": rect(ex0, 60.0, ex1, 360.0)})

    for nn in range(1, 100):
        label = f"{fid}.{nn:02d}"
        x = round(nn / 99.0 * L, 3)
        if nn % 2 == 0:
            door, normal, side = [x, NORTH_Y + HALF_W], [0.0, -1.0], "even"
        else:
            door, normal, side = [x, SOUTH_Y - HALF_W], [0.0, 1.0], "uneven"
        rooms.append({"label": label, "door": door, "side": side})
        signs.append({"kind": "room_number", "position": [round(x + 60.0, 3), door[1]],
                      "normal": normal, "target": label, "width_cm": 40.0})

    # Exit signs over the mouth of every downward flight.
    for lab, xs in STAIR_X.items():
        f = flight(lab, fid - 1, fid)
        mouth = f["ramp"][2]
        normal = [0.0, -1.0] if mouth[1] == S_EDGE else [0.0, 1.0]
        signs.append({"kind": "exit_sign", "position": [mouth[0], mouth[1]],
                      "normal": normal, "target": f"Stair {lab}", "width_cm": 100.0})
        signs.append({"kind": "evacuation_sign", "position": [xs, SOUTH_Y - HALF_W],
                      "normal": [0.0, 1.0], "target": f"Stair {lab}", "width_cm": 60.0})
    for cx in WIDE:
        for dx in (-300.0, 300.0):
            signs.append({"kind": "fire_door", "position": [cx + dx, SOUTH_Y - HALF_W],
                          "normal": [0.0, 1.0], "target": f"fire door {int(cx + dx)}",
                          "width_cm": 120.0})
            signs.append({"kind": "fire_door", "position": [cx + dx, NORTH_Y + HALF_W],
                          "normal": [0.0, -1.0], "target": f"fire door {int(cx + dx)}",
                          "width_cm": 120.0})
    signs.append({"kind": "floor_plan", "position": [7200.0, S_EDGE], "normal": [0.0, -1.0],
                  "target": f"floor {fid}", "width_cm": 80.0})
    return {"id": fid, "z_cm": z_of(fid), "walkable": walkable, "obstacles": obstacles,
            "rooms": rooms, "signs": signs,
            "expected": {"main_corridors": 2, "cross_corridors": 8}}


def staircase(label):
    flights = [flight(label, k, k + 1) for k in (1, 2, 3)]
    xs = STAIR_X[label]
    footprints = []
    for fid in (1, 2, 3, 4):
        footprints.append({"floor": fid, "polygon": rect(xs - 155.0, S_EDGE, xs + 155.0, N_EDGE)})
    return {"label": label, "lower_floor": 1, "upper_floor": 4, "flights": flights,
            "footprints": footprints}


def room_x(nn):
    return round(nn / 99.0 * L, 3)


def room_zone(zid, floor, nn):
    x = room_x(nn)
    if nn % 2 == 0:
        poly = rect(x - 150.0, N_EDGE, x + 150.0, NORTH_Y + HALF_W)
    else:
        poly = rect(x - 150.0, SOUTH_Y - HALF_W, x + 150.0, S_EDGE)
    return {"id": zid, "floor": floor, "purpose": "trigger", "polygon": poly}


def main():
    zones = []
    spawn = room_zone("spawn", 4, 2)
    spawn["purpose"] = "spawn"
    spawn["yaw_deg"] = 0.0
    zones.append(spawn)
    zones.append(room_zone("trigger_1", 4, 2))
    zones.append(room_zone("trigger_2", 4, 99))
    zones.append(room_zone("trigger_3", 2, 1))
    zones.append(room_zone("trigger_4", 4, 64))
    zones.append({"id": "central_point", "floor": 2, "purpose": "central_point",
                  "polygon": rect(12200.0, S_EDGE, 13400.0, N_EDGE)})
    for fid in (2, 3, 4):
        for i, cx in enumerate(WIDE):
            zones.append({"id": f"wide_{fid}_{i}", "floor": fid, "purpose": "wide_intersection",
                          "polygon": rect(cx - 200.0, S_EDGE, cx + 200.0, N_EDGE)})
    exits = []
    for lab, xs in STAIR_X.items():
        exits.append({"label": lab, "position": [xs, 1080.0], "is_main_entrance": lab == "C"})
        zones.append({"id": f"exit_{lab}", "floor": 1, "purpose": "exit",
                      "polygon": rect(xs - 150.0, 1040.0, xs + 150.0, NORTH_Y + HALF_W)})

    doc = {
        "name": "CEG faculty building (reconstruction)",
        "units": "cm",
        "exit_floor": 1,
        "story_height_cm": STORY,
        "floors": [floor_doc(f) for f in (1, 2, 3, 4)],
        "staircases": [staircase(lab) for lab in STAIR_X],
        "exits": exits,
        "zones": zones,
    }
    out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "ceg_fixture.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(doc, indent=1) + "\n")
    print(out)


if __name__ == "__main__":
    main()
