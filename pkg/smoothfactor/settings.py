####
# Default settings for the smoothfactor project.
# You should create local_settings.py and override any settings there.
##
from os import environ
from os.path import abspath, dirname, join
BASE_DIR = dirname(dirname(abspath(__file__)))


# Base options, commonly overridden in local_settings.py
##########################################################################
DEBUG = False
SECRET_KEY = "smoothfactor-batch-only"
ALLOWED_HOSTS: list = []

# Default directory for job artifacts when --out is not given
OUTPUT_PATH = join(BASE_DIR, "output")
##########################################################################

ENABLE_PERFORMANCE_MONITORING = False

INSTALLED_APPS = (
    'grids',
    'scales',
    'schwartz',
    'factorization',
    'crossed',
    'counterexamples',
    'jobs',
)

# No models anywhere; the dummy backend is enough for the test runner
DATABASES: dict = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True


# Grids
##########################################################################
# Highest total derivative order a MultiIndex may request
MAX_DERIVATIVE_ORDER = 4
# "shrink" drops the stencil radius at each edge, "one_sided" keeps the grid
DEFAULT_BOUNDARY_POLICY = "shrink"
##########################################################################

# Certificates
##########################################################################
# Fitted constants above this are treated as a failed inequality
CERTIFICATE_C_MAX = 1e6
# Relative inflation of fitted constants
CERTIFICATE_SLACK = 1e-12
# Relative allowance when both sides come from different discretizations
CERTIFICATE_RTOL = 1e-6
##########################################################################

# Scales
##########################################################################
SCALE_D_MAX = 4
SCALE_L_MAX = 4
# Number of radial shells used by properness and decay diagnostics
SHELL_COUNT = 8
# Boundary shell minimum must exceed the inner minimum by this relative margin
PROPER_GROWTH_MARGIN = 0.5
MOLLIFIER_RADIUS = 0.25
MOLLIFIER_MASS_TOLERANCE = 1e-9
MOLLIFIER_DERIVATIVE_ORDER = 2
##########################################################################

# Seminorm reports
##########################################################################
REPORT_D_MAX = 6
REPORT_L_MAX = 2
DECAY_GROWTH_TOLERANCE = 1e-9
##########################################################################

# Factorization
##########################################################################
FACTOR_D_MAX = 4
FACTOR_L_MAX = 2
# Number of product factors in the truncated lambda product
LAMBDA_K_CAP = 40
# Series terms scanned by the lambda selection
SERIES_N_CAP = 64
# Largest power-of-two offset tried by the lambda selection
LAMBDA_MAX_OFFSET = 400
DEFAULT_EPSILON = 1e-8
# Multiplier on the machine epsilon part of the residual budget
FLOAT_BUDGET_FACTOR = 16
##########################################################################

# Crossed products
##########################################################################
# Support radius of the widest approximate unit on sampled windows of R
APPROX_UNIT_RADIUS = 1.0
# Float tolerance of the associativity and homomorphism identities on Z windows
CROSSED_IDENTITY_TOLERANCE = 1e-9
##########################################################################

# Counterexamples and demos
##########################################################################
DEFAULT_SEED = 42
##########################################################################

# Location of test files
TESTDATADIR = join(BASE_DIR, "test_data")

# Logging
# https://docs.djangoproject.com/en/4.2/topics/logging/
##########################################################################
LOGGING = {
  'version': 1,
  'disable_existing_loggers': False,
  'formatters': {
    'verbose': {
      'format': '[%(asctime)s: %(levelname)s/%(module)s] %(message)s'
    },
  },
  'handlers': {
    'console': {
      'level': 'DEBUG',
      'class': 'logging.StreamHandler',
      'stream': 'ext://sys.stdout',
      'formatter': 'verbose',
    },
  },
  'loggers': {
    '': {
      'level': 'WARNING',
      'handlers': ['console']
    },
    'main': {
      'level': 'DEBUG',
      'handlers': [],
      'propagate': True
    },
    'smoothfactor.certificates': {
      'level': 'DEBUG',
      'handlers': [],
      'propagate': True,
    },
    'perfmonitor': {
      'level': 'INFO',
      'handlers': [],
      'propagate': True,
    },
  },
}


###############################################################################
from r_django_essentials.conf import *

# get settings values from other sources
update_settings_with_file(__name__,
                          environ.get('SMOOTHFACTOR_LOCAL_SETTINGS', 'local_settings'),
                          quiet='SMOOTHFACTOR_LOCAL_SETTINGS' in environ)

# Load settings from environment variables starting with ENV_SETTINGS_PREFIX (default SMOOTHFACTOR_)
ENV_SETTINGS_PREFIX = environ.get('ENV_SETTINGS_PREFIX', 'SMOOTHFACTOR_')
update_settings_from_environment(__name__, ENV_SETTINGS_PREFIX)
