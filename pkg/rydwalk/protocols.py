import math

# --- symbols --- #
AXES = "xyz"
ODD = 0
EVEN = 1

# --- unit cells --- #
DIMER = "dimer"
TETRAMER = "tetramer"
OCTAMER = "octamer"
SPLIT_AXES = {DIMER: (0,), TETRAMER: (0, 1), OCTAMER: (0, 1, 2)}

# --- boundaries --- #
OPEN = "open"
PERIODIC = "periodic"
MOEBIUS_X = "moebius_x"
MOEBIUS_Y = "moebius_y"
KLEIN = "klein"
SEAMS = (MOEBIUS_X, MOEBIUS_Y, KLEIN)

# the 1D names of the intra- and inter-dimer tessellations
KIND_ALIASES = {"H0": "x0", "H1": "x1"}

# --- step descriptors --- #
TESSELLATION = "tessellation"
COIN = "coin"
SHIFT = "shift"
BOUNDARY = "boundary"

# transition operators T = exp(i H π/2) R(π/2), the tessellation carrying the hop
TRANSITIONS = {
    "T": "x1",
    "T_x": "x1",
    "T_y": "xy0",
    "T_z": "xz0",
    "T_xy": "xy1",
    "T_xz": "xz1",
    "T_xyz": "xyz1",
}

# --- chiral time frames --- #
SYMMETRIC_0 = "symmetric_0"
SYMMETRIC_1 = "symmetric_1"
PLAIN = "plain"
FRAMES = (SYMMETRIC_0, SYMMETRIC_1, PLAIN)

# --- programs, written as operator products (rightmost acts first) --- #
# an angle is a float or a (name, scale) reference resolved at bind time
SSH = {
    SYMMETRIC_0: (
        (TESSELLATION, "x0", ("theta0", 0.5)),
        (TESSELLATION, "x1", ("theta1", 1.0)),
        (TESSELLATION, "x0", ("theta0", 0.5)),
    ),
    SYMMETRIC_1: (
        (TESSELLATION, "x1", ("theta1", 0.5)),
        (TESSELLATION, "x0", ("theta0", 1.0)),
        (TESSELLATION, "x1", ("theta1", 0.5)),
    ),
    PLAIN: (
        (TESSELLATION, "x1", ("theta1", 1.0)),
        (TESSELLATION, "x0", ("theta0", 1.0)),
    ),
}

# W_eff = T_y R(θ1) T_x R(θ0)
COINED_SIMPLE = (
    (SHIFT, "T_y", None),
    (COIN, None, ("theta1", 1.0)),
    (SHIFT, "T_x", None),
    (COIN, None, ("theta0", 1.0)),
)

# W_eff = T_x R(θ0) T_y R(θ1) T_xy R(θ0)
COINED_CHERN = (
    (SHIFT, "T_x", None),
    (COIN, None, ("theta0", 1.0)),
    (SHIFT, "T_y", None),
    (COIN, None, ("theta1", 1.0)),
    (SHIFT, "T_xy", None),
    (COIN, None, ("theta0", 1.0)),
)

# W_eff = T_x R(θ0) T_y R(θ1) T_z R(θ0)
COINED_3D = (
    (SHIFT, "T_x", None),
    (COIN, None, ("theta0", 1.0)),
    (SHIFT, "T_y", None),
    (COIN, None, ("theta1", 1.0)),
    (SHIFT, "T_z", None),
    (COIN, None, ("theta0", 1.0)),
)

# Kronecker walk on tetramers, W = W_y1 W_y0 W_x1 W_x0
TETRAMER_2D = (
    (TESSELLATION, "y1", ("theta_y1", 1.0)),
    (TESSELLATION, "y0", ("theta_y0", 1.0)),
    (TESSELLATION, "x1", ("theta_x1", 1.0)),
    (TESSELLATION, "x0", ("theta_x0", 1.0)),
)

# Kronecker walk on octamers, W = W_z1 W_z0 W_y1 W_y0 W_x1 W_x0
OCTAMER_3D = (
    (TESSELLATION, "z1", ("theta_z1", 1.0)),
    (TESSELLATION, "z0", ("theta_z0", 1.0)),
    (TESSELLATION, "y1", ("theta_y1", 1.0)),
    (TESSELLATION, "y0", ("theta_y0", 1.0)),
    (TESSELLATION, "x1", ("theta_x1", 1.0)),
    (TESSELLATION, "x0", ("theta_x0", 1.0)),
)

# anomalous dimer walk, W = exp(iH_x0 θ) exp(iH_xy1 θ) exp(iH_x1 θ) exp(iH_xy0 θ)
ANOMALOUS_2D = (
    (TESSELLATION, "x0", ("theta", 1.0)),
    (TESSELLATION, "xy1", ("theta", 1.0)),
    (TESSELLATION, "x1", ("theta", 1.0)),
    (TESSELLATION, "xy0", ("theta", 1.0)),
)

# W = W_x1 W_xz1 W_x0 W_xz0 W_xy0 W_x0 W_xy1 W_x1
INSULATOR_3D = (
    (TESSELLATION, "x1", ("theta", 1.0)),
    (TESSELLATION, "xz1", ("theta", 1.0)),
    (TESSELLATION, "x0", ("theta", 1.0)),
    (TESSELLATION, "xz0", ("theta", 1.0)),
    (TESSELLATION, "xy0", ("theta", 1.0)),
    (TESSELLATION, "x0", ("theta", 1.0)),
    (TESSELLATION, "xy1", ("theta", 1.0)),
    (TESSELLATION, "x1", ("theta", 1.0)),
)

# U = W_y0 W_y1 W_yb W_x0 W_x1 W_xb on a lattice of tetramers
SURFACE = (
    (TESSELLATION, "y0", ("theta", 1.0)),
    (TESSELLATION, "y1", ("theta", 1.0)),
    (BOUNDARY, "y", ("theta_seam", 1.0)),
    (TESSELLATION, "x0", ("theta", 1.0)),
    (TESSELLATION, "x1", ("theta", 1.0)),
    (BOUNDARY, "x", ("theta_seam", 1.0)),
)

PROGRAMS = {
    "ssh": SSH[SYMMETRIC_0],
    "ssh_symmetric_1": SSH[SYMMETRIC_1],
    "ssh_plain": SSH[PLAIN],
    "coined_simple": COINED_SIMPLE,
    "coined_chern": COINED_CHERN,
    "coined_3d": COINED_3D,
    "coinless_tetramer": TETRAMER_2D,
    "coinless_octamer": OCTAMER_3D,
    "coinless_dimer_anomalous": ANOMALOUS_2D,
    "insulator_3d": INSULATOR_3D,
    "surface": SURFACE,
}

# --- edge run defaults --- #
# stripe angles of the 2D / 3D edge runs, (θ0, θ1)
STRIPE_INSIDE_2D = (math.pi / 10, 4 * math.pi / 10)
STRIPE_OUTSIDE_2D = (4 * math.pi / 10, math.pi / 10)
