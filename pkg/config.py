import os

basedir = os.path.abspath(os.path.dirname(__file__))


def _env_int(name, default):
    value = os.environ.get(name)
    return int(value) if value else default


class Config:
    # Quasi-Monte Carlo budgets (points per replicate, randomized replicates)
    QMC_POINTS = _env_int('TANGLEBOUNDS_QMC_POINTS', 2 ** 20)
    QMC_REPLICATES = 16
    QMC_SEED = 20240601

    # Adaptive quadrature
    QUAD_TOLERANCE = 1e-9
    QUAD_LIMIT = 200

    # One-dimensional searches
    DENSITY_SCAN_POINTS = 1024
    ARGMIN_TOLERANCE = 1e-10
    LAMBDA_TOLERANCE = 1e-4
    LAMBDA_SPAN = 20.0
    LAMBDA_SCAN_POINTS = 400
    NEWTON_POLISH_STEPS = 3

    # Parameter optimization (delta / Delta grids)
    RADIUS_GRID_POINTS = 60

    # Quantitative CLT coefficient (best known value for the Berry-Esseen constant)
    BERRY_ESSEEN_CONSTANT = 0.5591
    ORDER_FLOOR_EPSILON = 0.1

    ORACLE_MAX_VERTICES = 20
    SIMULATION_BUDGET = 2 * 10 ** 10
    WILSON_CONFIDENCE = 0.99
    CSV_DIGITS = 9

    THREADS = _env_int('TANGLEBOUNDS_THREADS', 1)
    OUTPUT_DIR = os.environ.get('TANGLEBOUNDS_OUTPUT', os.path.join(basedir, 'output'))
    PRESETS_DIR = os.path.join(basedir, 'presets')


class DevelopmentConfig(Config):
    """Defaults as declared on Config."""


class TestingConfig(Config):
    # reduced budgets for the unit suite
    QMC_POINTS = 2 ** 14
    QMC_REPLICATES = 8
    RADIUS_GRID_POINTS = 24


class ProductionConfig(Config):
    QMC_POINTS = _env_int('TANGLEBOUNDS_QMC_POINTS', 2 ** 22)


config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig,
}

_active = config[os.environ.get('TANGLEBOUNDS_CONFIG', 'default')]


def current():
    """Return the active configuration class."""
    return _active


def use(config_name):
    """Switch the active configuration (e.g. 'testing' from the test suite)."""
    global _active
    if config_name not in config:
        raise KeyError(f"Unknown configuration '{config_name}'. Must be one of {tuple(config)}")
    _active = config[config_name]
    return _active
