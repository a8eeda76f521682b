import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    OUTPUT_DIR = os.getenv('PLOF_OUTPUT_DIR', 'results')
    LOG_LEVEL = os.getenv('PLOF_LOG_LEVEL', 'INFO')

    # Neighborhood parameter
    DEFAULT_MINPTS = 10
    MINPTS_SWEEP = (5, 10, 20)

    # Neighbor search
    DEFAULT_BACKEND = 'brute'
    BACKENDS = ('brute', 'tree')
    TREE_LEAF_SIZE = 16
    BRUTE_BLOCK_ROWS = 256

    # Experiment protocol
    DEFAULT_REPETITIONS = 5
    DEFAULT_SEED = 0
    DEFAULT_THRESHOLD = 1.0

    # Baselines
    KMEANS_MAX_ITERS = 100
    FASTLOF_MAX_REDRAWS = 10
    DEFAULT_DEVTOMEAN_THRESHOLD = 1.0

    # Synthetic data
    SYNTHETIC_MAX_OUTLIER_DRAWS = 100

    DETECTORS = ('plof', 'lof', 'devtomean', 'fastlof')
