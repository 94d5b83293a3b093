"""Fixed comparison-point table for the 256-bit patch descriptor.

256 (p, q) offset pairs inside the radius-15 disk of a 31x31 patch,
drawn once from a seeded uniform sampler and committed here so every
build produces identical descriptors. Do not regenerate.
"""

# (p_x, p_y, q_x, q_y), descriptor bit i compares intensity at p vs q.
PAIRS = (
    (-5, -10, -4, -5), (-6, -11, 9, -1), (-6, 8, 0, 15), (-4, -4, -3, -1),
    (-8, 8, -5, -11), (11, -10, -14, -4), (-5, 2, -8, 3), (1, -10, -12, 5),
    (-3, 12, -5, -4), (9, -3, -1, 10), (10, 5, -12, -8), (-14, 1, -1, 10),
    (1, 6, -5, 6), (-3, -14, -3, -5), (-3, -3, -6, 5), (6, 13, 2, 14),
    (-12, -6, 9, 6), (5, -10, -4, 4), (-11, -8, -1, -10), (7, 12, 3, 2),
    (-3, 10, -1, 1), (3, -9, -10, -8), (-2, -11, 1, 1), (-5, 1, 12, 9),
    (1, -4, 4, -11), (-10, 10, 6, 5), (0, 9, -4, 12), (-6, 9, -7, -11),
    (-2, -8, 2, 8), (2, 14, 0, -7), (4, 2, 7, -6), (-14, -2, -7, 12),
    (6, -5, -2, -11), (-5, -5, -1, -14), (10, 4, -3, 14), (-6, -8, 7, 10),
    (-1, 8, -11, 3), (11, 3, -2, 8), (-2, 9, -10, -4), (-7, 6, -9, 1),
    (11, -6, 10, 9), (8, -1, 13, -1), (7, 5, 10, 6), (9, 6, 2, 4),
    (-14, 4, -1, -5), (12, 3, -3, -4), (-8, -12, -11, -9), (-12, -4, 3, 5),
    (-9, 3, -3, 0), (-2, 0, 3, 1), (0, 10, -3, 9), (-4, 5, 1, -8),
    (-11, 5, -6, 6), (-1, -9, 7, -2), (3, 0, 8, 12), (3, 11, -4, -5),
    (-6, -4, -11, 5), (-12, 4, -2, -2), (0, -6, 0, 7), (-8, 4, 9, 10),
    (-7, 7, 12, -2), (-3, -8, -11, 8), (-4, -9, 8, -2), (-13, -1, -12, 0),
    (5, -9, 7, 1), (7, -3, -9, -9), (4, 11, 13, 2), (14, 4, 3, 9),
    (-8, 4, -2, -11), (1, -8, 8, 3), (-13, -2, 1, -13), (-7, -5, -2, 4),
    (-6, 5, 10, -4), (-5, -13, 8, 5), (0, -11, 4, 7), (-5, 0, -7, -8),
    (-4, 4, -1, 14), (13, 6, -2, -7), (9, 1, -3, -6), (11, 6, 4, 3),
    (5, 14, -5, 14), (-1, -13, 11, 9), (-7, 8, -4, 6), (11, -7, 3, -4),
    (3, -11, -13, 6), (8, 0, -9, 11), (10, 9, -2, 6), (2, 3, -9, -3),
    (8, 11, 12, -6), (10, -4, 3, -5), (9, -12, 10, 0), (5, 13, -3, 7),
    (-8, -8, 6, -3), (2, 0, 11, -6), (8, 11, -12, 1), (4, 9, -10, 9),
    (-8, 6, -10, -5), (7, 9, 3, -5), (-13, -3, -3, -6), (-11, 4, 11, 4),
    (-3, -8, -7, -5), (-6, 7, 1, 2), (14, -4, 5, -11), (-13, -7, -7, -9),
    (4, -6, 6, -3), (-7, -11, -14, -2), (7, -7, 2, 11), (2, 12, 6, 12),
    (8, -2, -4, -6), (0, -7, -8, 11), (-5, 14, -1, -9), (1, 9, 3, -13),
    (4, -1, -9, -11), (10, -4, 2, 8), (7, 3, -1, -5), (0, 11, -3, -11),
    (-1, 1, -1, 3), (0, -13, 2, -2), (-14, -4, -5, -1), (-2, 7, 6, -7),
    (3, 7, -14, -3), (-1, 5, -8, 10), (-13, 1, -6, 6), (7, 5, 5, 3),
    (-12, -8, 7, 3), (2, 10, -3, 8), (-13, -5, -9, 5), (5, 12, -5, -3),
    (0, -1, 8, 0), (2, 13, 7, 6), (13, 2, -8, -4), (9, -2, -8, 4),
    (-10, 0, -4, 4), (2, 9, 12, 0), (2, 14, 10, -8), (9, -7, -4, 0),
    (-5, -14, 14, 1), (10, 6, 3, 5), (1, -9, 3, 12), (-8, -9, 0, -2),
    (-7, 1, -2, 1), (-2, -4, 1, 10), (-9, 3, 9, -3), (4, -2, 10, -10),
    (9, 4, 8, -5), (-14, -1, -2, -2), (2, -7, -11, 0), (-8, 3, -2, 6),
    (3, -10, -9, 12), (5, 14, 11, 10), (0, -11, 3, -14), (6, -11, 2, 5),
    (-13, -3, 10, -9), (-11, -4, -4, -10), (-11, 9, -5, -12), (-8, 8, 8, -12),
    (11, 1, -8, 5), (6, -12, 0, 4), (-13, 3, 12, 5), (3, -12, 13, 0),
    (-7, 6, -8, -12), (7, 3, 0, 1), (-8, 5, -1, 0), (-9, 1, -7, -5),
    (-10, -6, 9, 5), (1, 6, -12, -9), (9, 5, 8, -5), (-5, 11, 12, 4),
    (3, -11, 5, 11), (-1, 10, 3, 6), (-9, 0, -5, -7), (13, 4, -6, 0),
    (0, 13, 11, 9), (2, -2, 11, 10), (-7, 13, -7, 5), (9, 7, -10, 2),
    (2, -10, -2, -4), (7, 5, -4, 9), (-6, -10, -12, 1), (3, 12, 15, 0),
    (2, 1, 1, 1), (-6, 5, 4, -14), (6, 4, 13, 6), (6, 5, 9, 6),
    (10, 3, 4, 12), (2, -8, 6, 2), (-14, 1, -1, -9), (-9, 8, -11, 7),
    (3, -10, 3, 4), (-12, 8, -11, -10), (-6, -3, -3, -1), (2, 9, 2, 6),
    (11, -3, 1, -11), (-11, 0, 8, 2), (-1, -5, 5, 13), (3, -1, -2, 1),
    (8, -4, 3, -8), (-10, 0, 5, 4), (4, -3, 7, -12), (-8, 12, 7, 8),
    (-12, -1, 1, -1), (3, 3, -6, 0), (4, 7, 3, -9), (-9, -9, -12, 9),
    (-4, -6, -4, -8), (-2, 14, -7, -7), (11, -4, 13, 5), (1, 13, 9, -1),
    (-10, -11, -1, -12), (6, 11, -10, 1), (2, 14, 8, 0), (7, -13, -3, -6),
    (-3, -12, -9, 12), (1, -14, 1, 9), (7, -3, -4, -4), (12, -3, 5, -2),
    (6, 2, 3, -13), (-12, -1, 3, 8), (-7, 3, -4, -14), (13, -2, -10, 5),
    (3, 12, -10, -10), (3, -5, -10, 3), (-13, -4, 8, 1), (5, -13, 6, 12),
    (13, -6, 6, -1), (-10, -4, 3, -5), (13, -1, 5, -1), (7, -10, 2, 11),
    (-5, 11, -1, 5), (9, 6, 4, 3), (-14, -1, 7, -13), (1, -1, 5, -4),
    (-2, -10, 6, 13), (-5, -3, 6, -11), (5, 9, -4, 14), (2, 12, 3, -9),
    (8, -5, 1, -1), (-8, 3, -5, 12), (-7, 0, -7, -8), (0, 7, 2, -7),
    (6, 6, 4, -10), (-8, 10, 2, 11), (6, -2, -3, -11), (8, -4, -14, -4),
    (-7, 4, 14, 2), (12, -1, -10, 4), (-1, -13, -13, 5), (6, -2, 14, -5),
    (14, 1, 3, 9), (-1, -10, -9, -5), (-6, 5, -7, -9), (6, -2, -2, -14),
    (-1, 0, 6, 2), (-5, 11, 1, -8), (6, 10, 14, -3), (-5, 8, 4, 10),
)
