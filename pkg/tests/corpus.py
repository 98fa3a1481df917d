"""Circuit-text fixtures shared by the parser tests and the acceptance run."""

VALID = [
    "wires 1\n",
    "wires 1\nrz 0 pi/2\n",
    "wires 2\ncz 0 1\n",
    "wires 1\nrx 0 pi\n",
    "wires 1\nrx 0 -pi/4\n",
    "wires 1\nrz 0 0.5\n",
    "wires 1\nrz 0 -1.25e-1\n",
    "wires 1\nrx 0 3pi/8\n",
    "wires 1\nrx 0 3*pi/8\n",
    "wires 1\nrz 0 0.5*pi\n",
    "wires 1\nid 0\n",
    "wires 2\nrx 0 pi/3\nrz 1 0.2\ncz 0 1\nrx 1 pi/4\n",
    "# comment only line\nwires 1\nrz 0 pi # trailing comment\n",
    "\n\nwires 3\n\ncz 1 2\ncz 0 1\n",
    "wires 2\ncz 1 0\n",
    "wires 1\nrz 0 .5\n",
    "wires 1\nrz 0 +pi/16\n",
    "wires 1\nrx 0 2pi\n",
    "wires 1\nrz 0 0\n",
    "wires 1\nrx 0 1e-3\n",
    "wires 4\nrz 3 pi/6\ncz 2 3\nid 0\n",
    "wires 1\n   rz    0    pi/12   \n",
    "wires 1\trz 0 1\n".replace("\trz", "\nrz"),
    "wires 2\nrx 0 0.1\nrx 0 0.2\nrx 0 0.3\nrx 1 0.4\n",
    "wires 2\nrz 0 -pi\nrz 1 -3pi/4\ncz 0 1\n",
    "wires 1\nrx 0 12.75\n",
    "wires 1\nrz 0 pi/1\n",
    "wires 2\n# header\ncz 0 1 # couple\nid 1\n",
    "wires 1\nrx 0 -0.0\n",
    "wires 1\nrz 0 100pi/7\n",
]

# (text, line, column) of the first error
MALFORMED = [
    ("", 1, 1),
    ("rz 0 1\n", 1, 1),
    ("wires 0\n", 1, 7),
    ("wires two\n", 1, 7),
    ("wires 1\nwires 2\n", 2, 1),
    ("wires 1\nry 0 1\n", 2, 1),
    ("wires 1\nrz 1 0.5\n", 2, 4),
    ("wires 1\nrz 0 abc\n", 2, 6),
    ("wires 1\nrz 0 1..2\n", 2, 6),
    ("wires 1\nrz 0\n", 2, 1),
    ("wires 1\nrz 0 1 2\n", 2, 8),
    ("wires 1\nrz x 1\n", 2, 4),
    ("wires 2\ncz 0 0\n", 2, 6),
    ("wires 3\ncz 0 2\n", 2, 6),
    ("wires 1\nrx 0 pi/0\n", 2, 6),
    ("wires 1\nrx 0 1e999\n", 2, 6),
    ("wires 1\nrx 0 2*\n", 2, 6),
    ("wires 1\n  id  \n", 2, 3),
    ("wires 1\nrz 0 1\nwires 1\n", 3, 1),
    ("wires 1\nrz -1 1\n", 2, 4),
]
