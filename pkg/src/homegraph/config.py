"""Tunable constants shared across the package.

None of these values come from measurements; they are engineering defaults
chosen so that fresh spoken or written hints can override stale observations
without letting weak priors ever outrank a direct sighting.
"""

from __future__ import annotations

# ── Belief model ──────────────────────────────────────────────────────────────

# Base confidence attached to an assertion, by how it was acquired.
SOURCE_CONFIDENCE: dict[str, float] = {
    "geometric": 0.9,
    "verbal": 0.8,
    "written": 0.7,
    "gesture": 0.6,
    "prior": 0.3,
}

# Rank used to break ties between equally-scored conflicting edges.
SOURCE_RANK: dict[str, int] = {
    "geometric": 4,
    "verbal": 3,
    "written": 2,
    "gesture": 1,
    "prior": 0,
}

# Staleness half-life, in ticks (10 simulated minutes at 0.1 s per tick).
HALF_LIFE_TICKS = 6000.0

# Effective confidence at or above this counts as a known location; below it
# the planner falls back to prior-driven search.
BELIEF_THRESHOLD = 0.5

# ── Geometric relation extraction ─────────────────────────────────────────────

SUPPORT_GAP_M = 0.05        # max |detection bottom - surface top| for "on"
NEAR_RADIUS_M = 1.0         # centroid distance for mutual "near" edges
ASSOCIATION_RADIUS_M = 0.5  # re-detection within this reuses the node

# ── Gesture resolution ─────────────────────────────────────────────────────────

GESTURE_CONE_DEG = 20.0     # pointing ambiguity half-angle

# ── Simulator ──────────────────────────────────────────────────────────────────

TICK_SECONDS = 0.1
ROBOT_SPEED_MPS = 0.5
STEP_DISTANCE_M = ROBOT_SPEED_MPS * TICK_SECONDS   # 0.05 m per tick
NAVIGATE_TOLERANCE_M = 0.05
DETECTION_RADIUS_M = 2.0
DETECTION_SCORE = 0.95      # no perception noise in v1
PICK_RANGE_M = 0.8
HANDOVER_RANGE_M = 1.0

# ── Planning ───────────────────────────────────────────────────────────────────

QUERY_ROUTE_RADIUS_M = 1.5  # human this close to the route gets asked
FALLBACK_PRIOR_SCORE = 0.05  # score for furniture not mentioned by any prior
TICKS_MAX_DEFAULT = 20000
