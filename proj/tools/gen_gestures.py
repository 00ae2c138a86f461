#!/usr/bin/env python3
"""One-off generator for configs/gestures.csv and the embedded copy.

Each digit gets a curl level: O (open, 0.0), H (half, 0.8), C (curled, 1.5
rad) applied to every flexion joint of that digit, so any two presets that
differ in at least one digit differ by >= 0.7 rad in pose distance. Abduction
adds flavor only.
"""

LEVELS = {"O": 0.0, "H": 0.8, "C": 1.5}

# flavor -> (thumb_abd, index_abd, middle_abd, ring_abd, little_abd)
FLAVORS = {
    "n": (0.3, 0.05, 0.0, 0.05, 0.05),
    "s": (1.0, 0.25, 0.0, 0.20, 0.30),
    "f": (0.1, 0.0, 0.0, 0.0, 0.0),
    "p": (1.1, 0.05, 0.0, 0.05, 0.30),
}

# id, curls (thumb index middle ring little), flavor, comment
GESTURES = [
    ("G1", "COCCC", "n", "count one"),
    ("G2", "COOCC", "n", "count two"),
    ("G3", "OOOCC", "n", "count three"),
    ("G4", "COOOO", "s", "count four"),
    ("G5", "OOOOO", "s", "count five, open palm"),
    ("G6", "HOOOC", "n", "count six"),
    ("G7", "HOOCO", "n", "count seven"),
    ("G8", "HOCOO", "n", "count eight"),
    ("G9", "HCOOO", "n", "count nine"),
    ("G10", "CCCCC", "f", "count ten, closed fist"),
    ("G11", "HCCCC", "f", "letter A"),
    ("G12", "HOOOO", "n", "letter B"),
    ("G13", "HHHHH", "n", "letter C"),
    ("G14", "HOHHH", "n", "letter D"),
    ("G15", "OHHHH", "n", "letter E"),
    ("G16", "HHOOO", "n", "letter F"),
    ("G17", "OOCCC", "n", "letter G"),
    ("G18", "OOOCO", "n", "letter H"),
    ("G19", "CCCCO", "p", "letter I"),
    ("G20", "OOHCC", "n", "letter K"),
    ("G21", "OOCHC", "n", "letter L"),
    ("G22", "CHHHC", "n", "letter M"),
    ("G23", "CHHCC", "n", "letter N"),
    ("G24", "CHHHH", "n", "letter O"),
    ("G25", "OHOCC", "n", "letter R"),
    ("G26", "CCCCH", "f", "letter S"),
    ("G27", "HCHHH", "n", "letter T"),
    ("G28", "HOOOH", "s", "letter W"),
    ("G29", "CHCCC", "n", "letter X"),
    ("G30", "OCCCO", "p", "letter Y"),
]


def fmt(x):
    return f"{x:.4f}"


def main():
    lines = [
        "# 30 gesture presets: id, 19 joint angles in radians, comma-separated",
        "# angle order: thumb cmc_flex, thumb mcp_flex, thumb abduct,",
        "#   then mcp_flex, pip_flex, dip_flex, abduct per finger"
        " (index, middle, ring, little)",
    ]
    seen = set()
    for gid, curls, flavor, comment in GESTURES:
        assert curls not in seen, curls
        seen.add(curls)
        t, i, m, r, l = (LEVELS[c] for c in curls)
        tabd, iabd, mabd, rabd, labd = FLAVORS[flavor]
        vals = [t, t, tabd]
        for lvl, abd in ((i, iabd), (m, mabd), (r, rabd), (l, labd)):
            vals += [lvl, lvl, lvl, abd]
        assert len(vals) == 19
        lines.append(f"# {comment}")
        lines.append(", ".join([gid] + [fmt(v) for v in vals]))
    text = "\n".join(lines) + "\n"

    with open("configs/gestures.csv", "w") as f:
        f.write(text)
    with open("src/gestures_builtin.inc", "w") as f:
        f.write("R\"gest(" + text + ")gest\"\n")
    print(f"{len(GESTURES)} gestures written")


if __name__ == "__main__":
    main()
