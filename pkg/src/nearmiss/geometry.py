"""Planar geometry for oriented vehicle footprints and sensor sectors.

Conventions: world coordinates in meters, headings in radians from the +x
axis, counterclockwise positive. A footprint is an oriented rectangle
centered on the vehicle reference point, `length` along the heading and
`width` across it. The body frame has +x forward and +y to the left.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

FRONT = "front"
REAR = "rear"
LEFT = "left"
RIGHT = "right"


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    r = (a + math.pi) % TWO_PI - math.pi
    return math.pi if r == -math.pi else r


def rect_corners(x: float, y: float, heading: float, length: float, width: float):
    """Corners of an oriented rectangle, counterclockwise from front-left."""
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    return (
        (x + hl * c - hw * s, y + hl * s + hw * c),
        (x - hl * c - hw * s, y - hl * s + hw * c),
        (x - hl * c + hw * s, y - hl * s - hw * c),
        (x + hl * c + hw * s, y + hl * s - hw * c),
    )


def rects_overlap(ax: float, ay: float, ah: float, al: float, aw: float,
                  bx: float, by: float, bh: float, bl: float, bw: float) -> bool:
    """Separating-axis overlap test for two oriented rectangles.

    Touching boundaries count as overlap.
    """
    dx, dy = bx - ax, by - ay
    # cheap circumscribed-circle reject
    reach = 0.5 * (math.hypot(al, aw) + math.hypot(bl, bw))
    if dx * dx + dy * dy > reach * reach:
        return False
    ca, sa = math.cos(ah), math.sin(ah)
    cb, sb = math.cos(bh), math.sin(bh)
    for ux, uy in ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb)):
        ra = 0.5 * al * abs(ca * ux + sa * uy) + 0.5 * aw * abs(ca * uy - sa * ux)
        rb = 0.5 * bl * abs(cb * ux + sb * uy) + 0.5 * bw * abs(cb * uy - sb * ux)
        if abs(dx * ux + dy * uy) > ra + rb:
            return False
    return True


@dataclass(frozen=True, slots=True)
class ContactInfo:
    """Which side of the first rectangle is in contact and over what extent.

    `side` is one of front/rear/left/right in the first rectangle's body
    frame; `extent` is the contact length in meters measured along that side.
    """
    side: str
    extent: float


def _clip_poly_to_box(points: list, hx: float, hy: float) -> list:
    """Sutherland-Hodgman clip of a convex polygon to [-hx,hx] x [-hy,hy]."""
    # (axis, sign): keep sign*p[axis] <= bound
    for axis, sign, bound in ((0, 1.0, hx), (0, -1.0, hx), (1, 1.0, hy), (1, -1.0, hy)):
        if not points:
            return []
        out = []
        prev = points[-1]
        prev_in = sign * prev[axis] <= bound
        for cur in points:
            cur_in = sign * cur[axis] <= bound
            if cur_in != prev_in:
                t = (bound - sign * prev[axis]) / (sign * cur[axis] - sign * prev[axis])
                out.append((prev[0] + t * (cur[0] - prev[0]),
                            prev[1] + t * (cur[1] - prev[1])))
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
        points = out
    return points


def rect_contact(ax: float, ay: float, ah: float, al: float, aw: float,
                 bx: float, by: float, bh: float, bl: float, bw: float) -> ContactInfo | None:
    """Contact side/extent of rectangle A when the two rectangles overlap.

    Returns None when there is no overlap. The side is chosen as the face of
    A with the smallest push-out distance; the extent is the size of the
    overlap polygon measured along that face.
    """
    if not rects_overlap(ax, ay, ah, al, aw, bx, by, bh, bl, bw):
        return None
    ca, sa = math.cos(ah), math.sin(ah)
    hl, hw = 0.5 * al, 0.5 * aw
    # corners of B in A's body frame
    pts = []
    for cx, cy in rect_corners(bx, by, bh, bl, bw):
        dx, dy = cx - ax, cy - ay
        pts.append((dx * ca + dy * sa, -dx * sa + dy * ca))
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    pens = (
        (hl - min(xs), FRONT),
        (max(xs) + hl, REAR),
        (hw - min(ys), LEFT),
        (max(ys) + hw, RIGHT),
    )
    side = min(pens, key=lambda p: p[0])[1]
    clipped = _clip_poly_to_box(pts, hl, hw)
    if not clipped:
        extent = 0.0
    elif side in (FRONT, REAR):
        cy = [p[1] for p in clipped]
        extent = min(max(cy) - min(cy), aw)
    else:
        cx = [p[0] for p in clipped]
        extent = min(max(cx) - min(cx), al)
    return ContactInfo(side, max(extent, 0.0))


def surface_ratio(contact: ContactInfo, length: float, width: float) -> float:
    """Contact extent divided by the full length of the struck side."""
    full = width if contact.side in (FRONT, REAR) else length
    return min(max(contact.extent / full, 0.0), 1.0)


def ttc_first_overlap(ax, ay, ah, av, al, aw,
                      bx, by, bh, bv, bl, bw,
                      horizon: float, dt: float):
    """First footprint overlap under frozen speeds and headings.

    Both rectangles translate along their current velocity vectors without
    rotating. The continuous overlap window is solved per separating axis and
    the reported time is the first multiple of `dt` inside the window, i.e.
    the value a forward sweep with step `dt` would detect. Returns
    (time, ContactInfo of A at that time, relative speed) or None when the
    sweep would find no overlap within `horizon`.
    """
    ca, sa = math.cos(ah), math.sin(ah)
    cb, sb = math.cos(bh), math.sin(bh)
    dx, dy = bx - ax, by - ay
    svx = bv * cb - av * ca
    svy = bv * sb - av * sa
    t_enter, t_exit = 0.0, horizon
    for ux, uy in ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb)):
        ra = 0.5 * al * abs(ca * ux + sa * uy) + 0.5 * aw * abs(ca * uy - sa * ux)
        rb = 0.5 * bl * abs(cb * ux + sb * uy) + 0.5 * bw * abs(cb * uy - sb * ux)
        r = ra + rb
        d = dx * ux + dy * uy
        s = svx * ux + svy * uy
        if s == 0.0:
            if abs(d) > r:
                return None
            continue
        t1 = (-r - d) / s
        t2 = (r - d) / s
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > t_enter:
            t_enter = t1
        if t2 < t_exit:
            t_exit = t2
        if t_enter > t_exit:
            return None
    k = math.ceil(t_enter / dt - 1e-9)
    t = k * dt
    if t > t_exit + 1e-12:
        return None  # overlap window falls between sweep steps
    contact = rect_contact(ax + av * ca * t, ay + av * sa * t, ah, al, aw,
                           bx + bv * cb * t, by + bv * sb * t, bh, bl, bw)
    if contact is None:
        contact = ContactInfo(FRONT, 0.0)  # grazing touch at the window edge
    return t, contact, math.hypot(svx, svy)


def point_to_rect_distance(px: float, py: float,
                           x: float, y: float, heading: float,
                           length: float, width: float) -> float:
    """Euclidean distance from a point to an oriented rectangle (0 if inside)."""
    c, s = math.cos(heading), math.sin(heading)
    dx, dy = px - x, py - y
    lx = dx * c + dy * s
    ly = -dx * s + dy * c
    ex = abs(lx) - 0.5 * length
    ey = abs(ly) - 0.5 * width
    if ex <= 0.0 and ey <= 0.0:
        return 0.0
    return math.hypot(max(ex, 0.0), max(ey, 0.0))


def _point_in_sector(px, py, cx, cy, bore, half_fov, radius) -> bool:
    dx, dy = px - cx, py - cy
    d2 = dx * dx + dy * dy
    if d2 > radius * radius:
        return False
    if d2 == 0.0 or half_fov >= math.pi:
        return True
    return abs(wrap_angle(math.atan2(dy, dx) - bore)) <= half_fov


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    if ((o1 > 0) != (o2 > 0) and o1 != 0 and o2 != 0
            and (o3 > 0) != (o4 > 0) and o3 != 0 and o4 != 0):
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def _segment_crosses_arc(p1, p2, cx, cy, bore, half_fov, radius) -> bool:
    ex, ey = p2[0] - p1[0], p2[1] - p1[1]
    fx, fy = p1[0] - cx, p1[1] - cy
    a = ex * ex + ey * ey
    if a == 0.0:
        return False
    b = 2.0 * (fx * ex + fy * ey)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return False
    sq = math.sqrt(disc)
    for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
        if 0.0 <= t <= 1.0:
            hx = p1[0] + t * ex - cx
            hy = p1[1] + t * ey - cy
            if half_fov >= math.pi or abs(wrap_angle(math.atan2(hy, hx) - bore)) <= half_fov:
                return True
    return False


def segment_touches_sector(p1, p2, cx, cy, bore, half_fov, radius) -> bool:
    """True when any point of the segment lies within the circular sector."""
    if _point_in_sector(*p1, cx, cy, bore, half_fov, radius):
        return True
    if _point_in_sector(*p2, cx, cy, bore, half_fov, radius):
        return True
    apex = (cx, cy)
    for edge in (bore - half_fov, bore + half_fov):
        tip = (cx + radius * math.cos(edge), cy + radius * math.sin(edge))
        if _segments_intersect(p1, p2, apex, tip):
            return True
    return _segment_crosses_arc(p1, p2, cx, cy, bore, half_fov, radius)


def rect_touches_sector(corners, cx, cy, bore, half_fov, radius) -> bool:
    """True when the rectangle boundary intersects the circular sector."""
    for i in range(4):
        if segment_touches_sector(corners[i], corners[(i + 1) % 4],
                                  cx, cy, bore, half_fov, radius):
            return True
    return False
