"""Constants and numerical defaults for stable-hcm."""

# Série de f_α : arrêt quand le terme passe sous SERIES_REL_TOL × |somme partielle|.
SERIES_REL_TOL = 1e-15
SERIES_MAX_TERMS = 100_000
SERIES_CHUNK = 64
# Au-delà de ce rapport terme max / |somme|, la série perd trop de chiffres et
# on bascule sur la représentation intégrale.
CANCELLATION_LIMIT = 1e3
# Pré-filtre : un terme de série plus grand que ça condamne d'avance la somme.
SERIES_PEAK_LIMIT = 1e6

QUAD_EPSREL = 1e-13
QUAD_LIMIT = 200
# Un résultat quad signalé (ier != 0) reste accepté sous cette erreur relative.
QUAD_ACCEPT_REL = 1e-9

# Reste d'Euler-Maclaurin après ce nombre de termes explicites.
TAIL_EXPLICIT_TERMS = 2048

DEFAULT_CLI_TERMS = 1000
DEFAULT_MELLIN_TOLERANCE = 1e-3
DEFAULT_LAPLACE_TOLERANCE = 1e-6
DEFAULT_WILLIAMS_TOLERANCE = 1e-10
DEFAULT_MALMSTEN_TOLERANCE = 1e-8

DEFAULT_MAX_ORDER = 6
DEFAULT_DELTA = 0.05
DEFAULT_EPSILON = 1e-9
DEFAULT_HM_EPSILON = 1e-12
DEFAULT_W_MIN = 2.0
DEFAULT_W_MAX = 40.0
DEFAULT_HM_POINTS = 400
MAX_WITNESSES_PER_ORDER = 10

GRID_NODES_PER_DECADE = 400
GRID_QUANTILE = 1e-6
MAX_BETA_FACTORS = 6

TARGET_INVERSE_STABLE = "inverse-stable"
TARGET_GAMMA = "gamma"
TARGET_THEOREM = "theorem-decomposition"
TARGET_POWER = "power-alpha"
TARGET_WILLIAMS = "williams"

PLAN_TARGETS: frozenset[str] = frozenset(
    {
        TARGET_INVERSE_STABLE,
        TARGET_GAMMA,
        TARGET_THEOREM,
        TARGET_POWER,
        TARGET_WILLIAMS,
    }
)

KIND_BETA = "beta"
KIND_GAMMA = "gamma"
