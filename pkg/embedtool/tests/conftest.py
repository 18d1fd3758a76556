import os

# Cached models stay usable; absent ones fail fast instead of retrying the hub.
os.environ.setdefault("HF_HUB_OFFLINE", "1")
