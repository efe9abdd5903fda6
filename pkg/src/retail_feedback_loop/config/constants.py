"""Default parameter values for simulations, models, and metrics."""

# Simulation clock: one step is one day, one epoch is 30 steps
STEPS_PER_EPOCH = 30
INIT_EPOCHS = 6
HORIZON_EPOCHS = 24
TRAINING_WINDOW_EPOCHS = 4
RETRAIN_INTERVAL_EPOCHS = 1
# Seconds of timestamp per step
GRANULARITY_SECONDS = 86_400

# Item selection
ETA = 0.0
TAU = 1.0
LAMBDA_RARITY = 1.0
K = 20
CANDIDATE_SET_SIZE = 100
CANDIDATE_MIX = (0.4, 0.4, 0.2)
SCORE_EPSILON = 1e-9
GPOP_SCOPES = ("cumulative", "epoch")

SEED = 42
MODEL_ID = "mostpop"

# Recommender hyperparameters
ITEMKNN_NEIGHBORHOOD = 50
BPR_FACTORS = 32
BPR_LEARNING_RATE = 0.05
BPR_REGULARIZATION = 0.01
BPR_EPOCHS = 30
BPR_NEGATIVES = 1
BPR_BATCH_SIZE = 256

# Offline evaluation
EVAL_K = 10
TRAIN_EPOCHS_IN_SPLIT = 4
VALIDATION_EPOCHS_IN_SPLIT = 1
TEST_EPOCHS_IN_SPLIT = 1

# Sweeps (adoption grid and repetitions)
SWEEP_ETAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
SWEEP_MODELS = ("mostpop", "itemknn", "bpr")
SWEEP_RUNS = 3

# Metrics
JACCARD_EXACT_LIMIT = 5000
JACCARD_PAIR_SAMPLE = 200_000
NETWORK_SAMPLE = 200
NETWORK_MIN_SHARED = 1
HEAVY_LIGHT_FRACTION = 0.1

# Synthetic desk-scale dataset
SYNTHETIC_USERS = 500
SYNTHETIC_ITEMS = 2000
SYNTHETIC_EPOCHS = 18
SYNTHETIC_EXPONENT = 1.0
SYNTHETIC_REPEAT_RATE = 0.0
SYNTHETIC_MEAN_BASKETS = 6.0

# Default CSV column names
COLUMN_USER = "user"
COLUMN_ITEM = "item"
COLUMN_TIMESTAMP = "timestamp"
COLUMN_QUANTITY = "quantity"
COLUMN_CATEGORY = "category"

OUTPUT_ROOT = "output"
JOBS = 1
