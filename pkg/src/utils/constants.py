import os

POS_INF = float('inf')
NEG_INF = float('-inf')

PROJECT_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
BASE_CONFIG_PATH = os.path.join(PROJECT_DIR, 'configs', 'base.yml')
SCHEMAS_DIR = os.path.join(PROJECT_DIR, 'schemas')

ARTIFACT_VERSION = '0.3.0'
THREADS_ENV_VAR = 'LPTAIL_THREADS'

# Relative tolerance for maximizer checks on the dual sphere
GEOMETRY_TOL = 1e-12

# Monte Carlo streams: the first entry of every SeedSequence spawn key
STREAM_PATHS = 0
STREAM_REFINE = 1
STREAM_PILOT = 2
STREAM_POINTWISE = 3
STREAM_CONSTANTS = 4
