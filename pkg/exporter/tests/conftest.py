import csv
import os

# Pretrained weights are served from the local hub cache; resolve them
# offline so tests neither hit the network nor stall on lookups.  Set
# before anything imports transformers/huggingface_hub.
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")

import pytest

MODEL_ID = "distilbert-base-uncased"


@pytest.fixture(scope="session")
def model_id():
    return MODEL_ID


@pytest.fixture(scope="session")
def cached_model_id():
    """Skip model-backed tests when the weights are not on disk."""
    try:
        from huggingface_hub import try_to_load_from_cache
    except ImportError:
        pytest.skip("huggingface_hub not installed")
    hit = try_to_load_from_cache(MODEL_ID, "model.safetensors")
    if not isinstance(hit, str):
        pytest.skip(f"{MODEL_ID} weights not present in the local hub cache")
    return MODEL_ID


@pytest.fixture
def write_csv():
    def _write(path, rows):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "text", "label"])
            w.writerows(rows)
        return path
    return _write
