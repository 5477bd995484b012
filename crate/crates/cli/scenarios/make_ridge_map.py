"""Writes ridge_map.pgm: a 20x20-cell (4 px cells) terrain with two open plazas joined by
three corridors through a wall. Row 3 is easy to cross but visually cluttered, row 16 is
visually clear but hard to cross, row 10 sits in between."""

CELL = 4
SIZE = 20 * CELL
PLAZA = 38
WALL = 255


def block_value(r, c, y, x):
    if c <= 3 or c >= 16:
        return PLAZA
    if r == 3:
        return 255 if (y % 4, x % 4) in {(0, 0), (1, 2), (2, 1), (3, 3)} else 0
    if r == 10:
        return 38 if (x + y) % 2 == 0 else 115
    if r == 16:
        return 128 if (x + y) % 2 == 0 else 153
    return WALL


def main():
    rows = []
    for y in range(SIZE):
        rows.append(" ".join(str(block_value(y // CELL, x // CELL, y, x)) for x in range(SIZE)))
    with open("ridge_map.pgm", "w") as f:
        f.write(f"P2\n# generated by make_ridge_map.py\n{SIZE} {SIZE}\n255\n")
        f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
